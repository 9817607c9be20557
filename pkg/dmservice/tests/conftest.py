import json
import random

import pytest

from dmservice.model import DmConfig
from dmservice.train import DmHyperparams, train_dm

ACCEPT_WORDS = ["orbit", "quartz", "lantern", "meadow", "cipher", "violet"]
REJECT_WORDS = ["gravel", "thunder", "mosaic", "harbor", "ember", "walnut"]


def toy_example(i: int, label: int, rng: random.Random) -> dict:
    words = ACCEPT_WORDS if label == 1 else REJECT_WORDS
    body = " ".join(rng.choice(words) for _ in range(12))
    text = (
        "Predict if the following answer should be accepted, 1, or rejected, 0.\n"
        f"Question: toy question {i}\n"
        f"Rationale: {body}"
    )
    return {"id": f"t{i:04d}", "turn": 1, "input": text, "label": label}


def write_corpus(path, n, seed):
    rng = random.Random(seed)
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(n):
            fh.write(json.dumps(toy_example(i, i % 2, rng)) + "\n")
    return path


@pytest.fixture(scope="session")
def toy_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    train = write_corpus(root / "train.jsonl", 200, seed=3)
    dev = write_corpus(root / "dev.jsonl", 40, seed=4)
    return str(train), str(dev)


def fast_hyper(**overrides) -> DmHyperparams:
    """Small-model settings that fit the toy corpus quickly; the slow
    production defaults stay on the dataclass."""
    base = dict(learning_rate=2e-3, warmup_steps=10, epochs=3, batch_size=16, seed=0)
    base.update(overrides)
    return DmHyperparams(**base)


def small_config() -> DmConfig:
    return DmConfig(vocab_size=0, d_model=32, n_heads=2, n_layers=1,
                    dim_feedforward=64, dropout=0.0, max_input_tokens=128)


@pytest.fixture(scope="session")
def trained_model_dir(toy_files, tmp_path_factory):
    train_file, dev_file = toy_files
    out = tmp_path_factory.mktemp("model") / "dm"
    report = train_dm(train_file, dev_file, fast_hyper(), out_dir=out,
                      config=small_config())
    return str(out), report
