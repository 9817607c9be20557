"""Accept/Reject critics: interface, local implementations, weighted training."""

from __future__ import annotations

import math
import random
import re
import struct
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests

from .errors import EmptyCorpus, RemoteError, VersionMismatch
from .qa_data import QaItem
from .reasoner import Answer
from .trainprep import DmExample, load_training_file

VERDICT_ACCEPT = "accept"
VERDICT_REJECT = "reject"

DEFAULT_HASH_DIM = 1 << 18
DEFAULT_THRESHOLD = 0.5
# (w_reject, w_accept): mislabeling a true Reject as Accept is the costly
# error, so the reject class carries the 3x weight by default.
DEFAULT_CLASS_WEIGHTS = (3.0, 1.0)

_MAGIC = b"DRRLC\x00"
_FORMAT_VERSION = 1
_TOKEN = re.compile(r"[a-z0-9]+")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_FNV_MASK = (1 << 64) - 1


def fnv1a64(token: str) -> int:
    h = _FNV_OFFSET
    for byte in token.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _FNV_MASK
    return h


def featurize(text: str, hash_dim: int = DEFAULT_HASH_DIM) -> dict[int, float]:
    """Hashed bag-of-words counts scaled by 1/sqrt(total tokens)."""
    if hash_dim < 2 or hash_dim & (hash_dim - 1):
        raise ValueError("hash_dim must be a power of two")
    tokens = _TOKEN.findall(text.lower())
    if not tokens:
        return {}
    counts: dict[int, float] = {}
    for token in tokens:
        bucket = fnv1a64(token) & (hash_dim - 1)
        counts[bucket] = counts.get(bucket, 0.0) + 1.0
    scale = 1.0 / math.sqrt(len(tokens))
    return {b: c * scale for b, c in counts.items()}


@dataclass(frozen=True)
class CriticScore:
    p_accept: float
    verdict: str
    threshold: float = DEFAULT_THRESHOLD


def make_score(p_accept: float, threshold: float = DEFAULT_THRESHOLD) -> CriticScore:
    verdict = VERDICT_ACCEPT if p_accept >= threshold else VERDICT_REJECT
    return CriticScore(p_accept=p_accept, verdict=verdict, threshold=threshold)


class Critic:
    """Text-in, verdict-out interface; safe for concurrent assess calls."""

    def assess(self, input_text: str) -> CriticScore:
        raise NotImplementedError

    def note_turn(self, item: QaItem, answer: Answer) -> None:
        """Side-band hook called by the loop before assess; no-op by default."""


class AlwaysAccept(Critic):
    def assess(self, input_text: str) -> CriticScore:
        return make_score(1.0)


class AlwaysReject(Critic):
    def assess(self, input_text: str) -> CriticScore:
        return make_score(0.0)


class OracleCritic(Critic):
    """Accepts iff the current answer is correct. Test harness only.

    Correctness is piggybacked through note_turn rather than parsed from the
    input text; the pending flag is thread-local since turns within an item
    run on one worker.
    """

    def __init__(self, gold: dict[str, int]):
        self.gold = dict(gold)
        self._pending = threading.local()

    def note_turn(self, item: QaItem, answer: Answer) -> None:
        self._pending.correct = answer == self.gold[item.id]

    def assess(self, input_text: str) -> CriticScore:
        correct = getattr(self._pending, "correct", None)
        if correct is None:
            raise RuntimeError("OracleCritic.assess called without a preceding note_turn")
        self._pending.correct = None
        return make_score(1.0 if correct else 0.0)


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


@dataclass
class LinearCriticModel:
    weights: np.ndarray
    bias: float
    hash_dim: int
    threshold: float = DEFAULT_THRESHOLD
    class_weights: tuple[float, float] = DEFAULT_CLASS_WEIGHTS

    def __post_init__(self):
        if self.hash_dim < (1 << 10) or self.hash_dim & (self.hash_dim - 1):
            raise ValueError("hash_dim must be a power of two >= 2**10")
        if any(w <= 0 for w in self.class_weights):
            raise ValueError("class weights must be strictly positive")

    @classmethod
    def zeros(cls, hash_dim: int = DEFAULT_HASH_DIM, threshold: float = DEFAULT_THRESHOLD,
              class_weights: tuple[float, float] = DEFAULT_CLASS_WEIGHTS) -> "LinearCriticModel":
        return cls(np.zeros(hash_dim), 0.0, hash_dim, threshold, class_weights)

    def p_accept(self, features: dict[int, float]) -> float:
        z = self.bias + sum(self.weights[i] * v for i, v in features.items())
        return _sigmoid(z)

    def score_text(self, text: str) -> CriticScore:
        return make_score(self.p_accept(featurize(text, self.hash_dim)), self.threshold)


class LinearCritic(Critic):
    def __init__(self, model: LinearCriticModel):
        self.model = model

    def assess(self, input_text: str) -> CriticScore:
        return self.model.score_text(input_text)


def example_loss(model: LinearCriticModel, features: dict[int, float], label: int) -> float:
    """Weighted logistic loss w_y * (-log p_model(y)) for one example."""
    p = model.p_accept(features)
    w = model.class_weights[label]
    p_y = p if label == 1 else 1.0 - p
    return w * -math.log(max(p_y, 1e-300))


def loss_gradient(
    model: LinearCriticModel, features: dict[int, float], label: int
) -> tuple[dict[int, float], float]:
    """Analytic gradient of example_loss w.r.t. the touched weights and bias."""
    p = model.p_accept(features)
    w = model.class_weights[label]
    dz = w * (p - label)
    return {i: dz * v for i, v in features.items()}, dz


@dataclass
class TrainHyper:
    lr: float = 0.5
    epochs: int = 5
    class_weights: tuple[float, float] = DEFAULT_CLASS_WEIGHTS
    hash_dim: int = DEFAULT_HASH_DIM
    threshold: float = DEFAULT_THRESHOLD
    seed: int = 0


@dataclass
class TrainReport:
    epochs_run: int
    final_train_loss: float
    dev_accuracy: float
    dev_false_positive_count: int
    dev_false_negative_count: int


def evaluate_model(
    model: LinearCriticModel,
    examples: list[DmExample],
    threshold: float | None = None,
) -> tuple[float, int, int]:
    """(accuracy, false positives, false negatives) at the given threshold."""
    if threshold is None:
        threshold = model.threshold
    correct = fp = fn = 0
    for ex in examples:
        p = model.p_accept(featurize(ex.input_text, model.hash_dim))
        pred = 1 if p >= threshold else 0
        if pred == ex.label:
            correct += 1
        elif pred == 1:
            fp += 1
        else:
            fn += 1
    return (correct / len(examples) if examples else 0.0), fp, fn


def train_linear(
    train_file: str | Path,
    dev_file: str | Path,
    hyper: TrainHyper | None = None,
) -> tuple[LinearCriticModel, TrainReport]:
    """Single-example SGD on the weighted logistic loss, seeded shuffles."""
    hyper = hyper or TrainHyper()
    train = load_training_file(train_file)
    dev = load_training_file(dev_file)
    if not train:
        raise EmptyCorpus(f"no examples in {train_file}")
    model = LinearCriticModel.zeros(hyper.hash_dim, hyper.threshold, hyper.class_weights)
    features = [featurize(ex.input_text, hyper.hash_dim) for ex in train]
    rng = random.Random(hyper.seed)
    order = list(range(len(train)))
    last_epoch_loss = 0.0
    for _ in range(hyper.epochs):
        rng.shuffle(order)
        total = 0.0
        for idx in order:
            feats, label = features[idx], train[idx].label
            total += example_loss(model, feats, label)
            grad, dbias = loss_gradient(model, feats, label)
            for i, g in grad.items():
                model.weights[i] -= hyper.lr * g
            model.bias -= hyper.lr * dbias
        last_epoch_loss = total / len(train)
    dev_acc, fp, fn = evaluate_model(model, dev)
    report = TrainReport(
        epochs_run=hyper.epochs,
        final_train_loss=last_epoch_loss,
        dev_accuracy=dev_acc,
        dev_false_positive_count=fp,
        dev_false_negative_count=fn,
    )
    return model, report


def save_model(model: LinearCriticModel, path: str | Path) -> None:
    header = _MAGIC + struct.pack(
        "<IIdddd",
        _FORMAT_VERSION,
        model.hash_dim,
        model.threshold,
        model.class_weights[0],
        model.class_weights[1],
        model.bias,
    )
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(model.weights, dtype="<f8").tobytes())
    tmp.replace(path)


def load_model(path: str | Path) -> LinearCriticModel:
    data = Path(path).read_bytes()
    header_size = len(_MAGIC) + struct.calcsize("<IIdddd")
    if len(data) < header_size or not data.startswith(_MAGIC):
        raise VersionMismatch(f"{path}: not a critic model file")
    version, hash_dim, threshold, w_reject, w_accept, bias = struct.unpack(
        "<IIdddd", data[len(_MAGIC):header_size]
    )
    if version != _FORMAT_VERSION:
        raise VersionMismatch(f"{path}: unsupported version {version}")
    body = data[header_size:]
    if len(body) != 8 * hash_dim:
        raise VersionMismatch(f"{path}: truncated weight block")
    weights = np.frombuffer(body, dtype="<f8").astype(np.float64)
    return LinearCriticModel(weights, bias, hash_dim, threshold, (w_reject, w_accept))


class RemoteCritic(Critic):
    """HTTP client for a served critic; shares the /assess wire protocol."""

    RETRY_BACKOFF = (1.0, 2.0, 4.0)

    def __init__(self, url: str, timeout: float = 30.0,
                 session: requests.Session | None = None, max_attempts: int = 3):
        self.url = url.rstrip("/")
        self.timeout = timeout
        self.max_attempts = max_attempts
        self._session = session or requests.Session()

    def assess(self, input_text: str) -> CriticScore:
        last_error: RemoteError | None = None
        for attempt in range(self.max_attempts):
            try:
                resp = self._session.post(
                    f"{self.url}/assess", json={"input": input_text}, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = RemoteError(None, str(exc))
            else:
                if resp.status_code == 200:
                    obj = resp.json()
                    p = float(obj["p_accept"])
                    verdict = str(obj["verdict"])
                    return CriticScore(p_accept=p, verdict=verdict)
                last_error = RemoteError(resp.status_code, resp.text)
                if resp.status_code != 429 and resp.status_code < 500:
                    raise last_error
            if attempt < self.max_attempts - 1:
                time.sleep(self.RETRY_BACKOFF[min(attempt, len(self.RETRY_BACKOFF) - 1)])
        raise last_error
