"""Shared fixtures: items, scripted responses, synthetic critic corpora."""

from __future__ import annotations

import random

import pytest

from drr.qa_data import Dataset, QaItem
from drr.reasoner import ScriptedReasoner
from drr.trainprep import DmExample


def make_item(item_id: str = "q1", n_choices: int = 4, gold: int = 2) -> QaItem:
    return QaItem(
        id=item_id,
        question=f"What is the answer to {item_id}?",
        choices=tuple(f"choice {j}" for j in range(n_choices)),
        gold_index=gold,
    )


def make_dataset(n: int = 3, n_choices: int = 4, name: str = "fixture") -> Dataset:
    items = [make_item(f"q{i}", n_choices, i % n_choices) for i in range(n)]
    return Dataset(name=name, items=items)


def response(index, rationale: str = "because reasons.") -> str:
    return f"Answer: {index}\nRationale: {rationale}"


@pytest.fixture
def item():
    return make_item()


def scripted_wwc(item: QaItem) -> ScriptedReasoner:
    """Wrong, wrong, correct for a gold-2 item."""
    return ScriptedReasoner({
        (item.id, 1): response(0, "first guess."),
        (item.id, 2): response(1, "second guess."),
        (item.id, 3): response(item.gold_index, "third time lucky."),
        (item.id, 4): response(0, "never reached."),
    })


def separable_corpus(n: int = 200, seed: int = 7) -> tuple[list[DmExample], list[DmExample]]:
    """Linearly separable corpus: class-disjoint token vocabularies."""
    rng = random.Random(seed)
    examples = []
    for i in range(n):
        label = i % 2
        pool = "alpha" if label == 1 else "beta"
        tokens = " ".join(f"{pool}{rng.randrange(20)}" for _ in range(6))
        examples.append(DmExample(f"id{i}", 1, f"some context {tokens}", label))
    rng.shuffle(examples)
    cut = int(n * 0.8)
    return examples[:cut], examples[cut:]


def noisy_corpus(n: int = 400, seed: int = 11) -> tuple[list[DmExample], list[DmExample]]:
    """Overlapping vocabularies plus label noise; unweighted training makes
    some false positives on the dev side."""
    rng = random.Random(seed)
    examples = []
    for i in range(n):
        label = i % 2
        tokens = ["shared%d" % rng.randrange(8)]
        pool = "pos" if label == 1 else "neg"
        tokens += [f"{pool}{rng.randrange(12)}" for _ in range(3)]
        # Cross-talk: rejects frequently borrow accept-looking tokens.
        if label == 0 and rng.random() < 0.45:
            tokens += [f"pos{rng.randrange(12)}" for _ in range(2)]
        if label == 1 and rng.random() < 0.15:
            tokens += [f"neg{rng.randrange(12)}"]
        if rng.random() < 0.08:
            label = 1 - label
        examples.append(DmExample(f"n{i}", 1, " ".join(tokens), label))
    rng.shuffle(examples)
    cut = int(n * 0.75)
    return examples[:cut], examples[cut:]
