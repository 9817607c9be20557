"""Critic training corpus preparation: render, down-sample, split, export."""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path

from .distill import TurnRecord
from .errors import FileFormatError
from .prompts import DIRECT_FEEDBACK_LINE
from .qa_data import QaItem
from .reasoner import Answer, answer_to_text

log = logging.getLogger(__name__)

DEFAULT_INSTRUCTION = (
    "Predict if the following answer to the question and context should be "
    "accepted, 1, or rejected, 0, based on the rationale."
)


@dataclass(frozen=True)
class DmExample:
    question_id: str
    turn: int
    input_text: str
    label: int  # 1 = accept, 0 = reject


@dataclass
class SplitCorpus:
    train: list[DmExample]
    dev: list[DmExample]


def render_input(
    item: QaItem,
    context: tuple[tuple[str, str], ...] | list[tuple[str, str]],
    answer: Answer,
    rationale: str,
    instruction: str = DEFAULT_INSTRUCTION,
    feedback: str = DIRECT_FEEDBACK_LINE,
) -> str:
    """Render one (question, context, answer, rationale) tuple to critic text.

    This exact text is what the critic sees both when building training data
    and inside the inference loop.
    """
    choices = ", ".join(f"{i}: {c!r}" for i, c in enumerate(item.choices))
    segments = [
        instruction,
        f"Question: {item.question}",
        f"Choices: [{choices}]",
    ]
    for prev_answer, prev_rationale in context:
        segments.append(f"Previous LLM Response: Answer: {prev_answer}")
        segments.append(f"Rationale: {prev_rationale}")
        segments.append(feedback)
    segments.append(f"Answer: {answer_to_text(answer)}")
    segments.append(f"Rationale: {rationale}")
    return "\n".join(s.rstrip() for s in segments).rstrip()


def render_dm_input(
    item: QaItem,
    record: TurnRecord,
    instruction: str = DEFAULT_INSTRUCTION,
    feedback: str = DIRECT_FEEDBACK_LINE,
) -> str:
    if record.question_id != item.id:
        raise ValueError(f"record {record.question_id!r} does not belong to item {item.id!r}")
    return render_input(item, record.context, record.answer, record.rationale, instruction, feedback)


def records_to_examples(
    items_by_id: dict[str, QaItem],
    records: list[TurnRecord],
    instruction: str = DEFAULT_INSTRUCTION,
    feedback: str = DIRECT_FEEDBACK_LINE,
) -> list[DmExample]:
    examples = []
    for record in records:
        item = items_by_id[record.question_id]
        examples.append(
            DmExample(
                question_id=record.question_id,
                turn=record.turn,
                input_text=render_dm_input(item, record, instruction, feedback),
                label=1 if record.label == "accept" else 0,
            )
        )
    return examples


def downsample(
    records: list[TurnRecord],
    reject_per_accept: float = 1.0,
    seed: int = 0,
) -> list[TurnRecord]:
    """Keep every accept record; sample rejects down to round(ratio * accepts).

    Sampling is uniform without replacement and seeded; relative order is
    preserved. With zero accepts all rejects are dropped (and a warning
    logged) rather than guessing a target size.
    """
    if reject_per_accept <= 0:
        raise ValueError("reject_per_accept must be positive")
    accept_idx = [i for i, r in enumerate(records) if r.label == "accept"]
    reject_idx = [i for i, r in enumerate(records) if r.label != "accept"]
    if not accept_idx:
        log.warning("downsample: corpus has no accept records; dropping all %d rejects",
                    len(reject_idx))
        return [records[i] for i in accept_idx]
    target = round(reject_per_accept * len(accept_idx))
    if target < len(reject_idx):
        rng = random.Random(seed)
        keep = set(rng.sample(reject_idx, target))
    else:
        keep = set(reject_idx)
    keep.update(accept_idx)
    return [r for i, r in enumerate(records) if i in keep]


def split(examples: list[DmExample], train_fraction: float = 0.8, seed: int = 0) -> SplitCorpus:
    """Partition by question id so all turns of an id land on the same side."""
    if not examples:
        raise ValueError("examples must be non-empty")
    if not (0 < train_fraction < 1):
        raise ValueError("train_fraction must be in (0, 1)")
    ids: list[str] = []
    seen: set[str] = set()
    for ex in examples:
        if ex.question_id not in seen:
            seen.add(ex.question_id)
            ids.append(ex.question_id)
    rng = random.Random(seed)
    rng.shuffle(ids)
    n_train = round(train_fraction * len(ids))
    train_ids = set(ids[:n_train])
    train = [ex for ex in examples if ex.question_id in train_ids]
    dev = [ex for ex in examples if ex.question_id not in train_ids]
    return SplitCorpus(train=train, dev=dev)


def export_training_file(examples: list[DmExample], path: str | Path) -> int:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(
                {"id": ex.question_id, "turn": ex.turn, "input": ex.input_text, "label": ex.label},
                ensure_ascii=False,
            ))
            fh.write("\n")
    return len(examples)


def load_training_file(path: str | Path) -> list[DmExample]:
    examples = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                examples.append(DmExample(
                    question_id=str(obj["id"]),
                    turn=int(obj["turn"]),
                    input_text=str(obj["input"]),
                    label=int(obj["label"]),
                ))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise FileFormatError(f"{path}:{lineno}: {exc}") from exc
            if examples[-1].label not in (0, 1):
                raise FileFormatError(f"{path}:{lineno}: label must be 0 or 1")
    return examples
