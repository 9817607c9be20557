"""Externalist accept/reject reasoning pipeline.

Distills labeled behavioral traces from a reasoner, prepares them into
critic training data, trains/serves an accept-reject critic, runs the
iterative inference loop with abstention, and evaluates the results.
"""

__version__ = "0.1.0"
