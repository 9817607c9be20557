"""Transformer accept/reject classifier with weighted training and HTTP serving."""

__version__ = "0.1.0"
MODEL_VERSION = "dmservice-0.1.0"
