"""Weighted fine-tuning of the classifier on the exported JSONL corpus."""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path

import torch
from torch import nn
from torch.nn import functional as F

from .model import DmClassifier, DmConfig, WordTokenizer, pad_batch, save_model_dir

log = logging.getLogger(__name__)


class EmptyCorpus(Exception):
    pass


@dataclass
class DmHyperparams:
    learning_rate: float = 3e-5
    weight_decay: float = 1e-4
    warmup_steps: int = 500
    epochs: int = 3
    batch_size: int = 16
    class_weights: tuple[float, float] = (3.0, 1.0)  # (w_reject, w_accept)
    max_input_tokens: int = 512
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("hyperparameters must be positive")
        if any(w <= 0 for w in self.class_weights):
            raise ValueError("class weights must be strictly positive")


@dataclass
class TrainReport:
    epochs_run: int
    final_train_loss: float
    train_accuracy: float
    dev_accuracy: float
    dev_false_positive_count: int
    dev_false_negative_count: int
    best_epoch: int


def load_corpus(path: str | Path) -> list[tuple[str, int]]:
    """Read the shared training-file format: {"id", "turn", "input", "label"}."""
    examples = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            examples.append((str(obj["input"]), int(obj["label"])))
    return examples


def batch_weighted_loss(
    logits: torch.Tensor, labels: torch.Tensor, class_weights: tuple[float, float]
) -> torch.Tensor:
    """Mean over the batch of w_y * (-log p(y))."""
    weights = torch.tensor(class_weights, dtype=logits.dtype, device=logits.device)
    per_example = F.cross_entropy(logits, labels, reduction="none") * weights[labels]
    return per_example.mean()


def _evaluate(model, tokenizer, examples, max_tokens, threshold, batch_size=64):
    model.eval()
    correct = fp = fn = 0
    with torch.no_grad():
        for start in range(0, len(examples), batch_size):
            chunk = examples[start:start + batch_size]
            ids = [tokenizer.encode(text, max_tokens) or [1] for text, _ in chunk]
            probs = torch.softmax(model(pad_batch(ids)), dim=-1)[:, 1]
            for (_, label), p in zip(chunk, probs.tolist()):
                pred = 1 if p >= threshold else 0
                if pred == label:
                    correct += 1
                elif pred == 1:
                    fp += 1
                else:
                    fn += 1
    return (correct / len(examples) if examples else 0.0), fp, fn


def train_dm(
    train_file: str | Path,
    dev_file: str | Path,
    hyper: DmHyperparams | None = None,
    out_dir: str | Path | None = None,
    config: DmConfig | None = None,
) -> TrainReport:
    """Train with Adam, linear warmup then constant rate; keep the best-dev
    checkpoint in ``out_dir``."""
    hyper = hyper or DmHyperparams()
    train = load_corpus(train_file)
    dev = load_corpus(dev_file)
    if not train:
        raise EmptyCorpus(f"no examples in {train_file}")

    torch.manual_seed(hyper.seed)
    rng = random.Random(hyper.seed)
    tokenizer = WordTokenizer.build([text for text, _ in train])
    if config is None:
        config = DmConfig(vocab_size=len(tokenizer), max_input_tokens=hyper.max_input_tokens)
    else:
        config.vocab_size = len(tokenizer)
        config.max_input_tokens = hyper.max_input_tokens
    model = DmClassifier(config)
    optimizer = torch.optim.Adam(
        model.parameters(), lr=hyper.learning_rate, weight_decay=hyper.weight_decay
    )
    warmup = max(hyper.warmup_steps, 1)
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda step: min(1.0, (step + 1) / warmup)
    )

    encoded = [(tokenizer.encode(text, hyper.max_input_tokens) or [1], label)
               for text, label in train]
    order = list(range(len(encoded)))
    best_dev = -1.0
    best_epoch = 0
    best_state = None
    final_loss = 0.0
    for epoch in range(1, hyper.epochs + 1):
        model.train()
        rng.shuffle(order)
        total = 0.0
        n_batches = 0
        for start in range(0, len(order), hyper.batch_size):
            batch = [encoded[i] for i in order[start:start + hyper.batch_size]]
            ids = pad_batch([seq for seq, _ in batch])
            labels = torch.tensor([label for _, label in batch], dtype=torch.long)
            loss = batch_weighted_loss(model(ids), labels, hyper.class_weights)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            scheduler.step()
            total += loss.item()
            n_batches += 1
        final_loss = total / n_batches
        dev_acc, _, _ = _evaluate(model, tokenizer, dev, hyper.max_input_tokens,
                                  config.threshold)
        log.info("epoch %d: train loss %.4f, dev acc %.4f", epoch, final_loss, dev_acc)
        if dev_acc > best_dev or best_state is None:
            best_dev = dev_acc
            best_epoch = epoch
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}

    model.load_state_dict(best_state)
    model.eval()
    train_acc, _, _ = _evaluate(model, tokenizer, train, hyper.max_input_tokens,
                                config.threshold)
    dev_acc, fp, fn = _evaluate(model, tokenizer, dev, hyper.max_input_tokens,
                                config.threshold)
    if out_dir is not None:
        save_model_dir(out_dir, model, tokenizer)
    return TrainReport(
        epochs_run=hyper.epochs,
        final_train_loss=final_loss,
        train_accuracy=train_acc,
        dev_accuracy=dev_acc,
        dev_false_positive_count=fp,
        dev_false_negative_count=fn,
        best_epoch=best_epoch,
    )
