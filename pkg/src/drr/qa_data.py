"""Normalized multiple-choice QA datasets (JSONL ingestion and validation)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DuplicateId, GoldIndexOutOfRange, MalformedLine


@dataclass(frozen=True)
class QaItem:
    id: str
    question: str
    choices: tuple[str, ...]
    gold_index: int

    def __post_init__(self):
        if not (0 <= self.gold_index < len(self.choices)):
            raise GoldIndexOutOfRange(self.id, self.gold_index, len(self.choices))


@dataclass
class Dataset:
    name: str
    items: list[QaItem] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.items)

    def gold_map(self) -> dict[str, int]:
        return {item.id: item.gold_index for item in self.items}

    def by_id(self) -> dict[str, QaItem]:
        return {item.id: item for item in self.items}


def load_dataset(path: str | Path, name: str | None = None) -> Dataset:
    """Load a JSONL dataset of {id, question, choices, answer_index} objects.

    Unknown extra fields are ignored; file order is preserved.
    """
    path = Path(path)
    items: list[QaItem] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(str(path), lineno, f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise MalformedLine(str(path), lineno, "line is not a JSON object")
            try:
                item_id = str(obj["id"])
                question = str(obj["question"])
                choices = obj["choices"]
                answer_index = obj["answer_index"]
            except KeyError as exc:
                raise MalformedLine(str(path), lineno, f"missing field {exc}") from exc
            if not isinstance(choices, list) or not all(isinstance(c, str) for c in choices):
                raise MalformedLine(str(path), lineno, "choices must be an array of strings")
            if not isinstance(answer_index, int) or isinstance(answer_index, bool):
                raise MalformedLine(str(path), lineno, "answer_index must be an integer")
            if item_id in seen:
                raise DuplicateId(item_id)
            if len(choices) < 2 or any(not c for c in choices):
                raise MalformedLine(str(path), lineno, "need at least 2 non-empty choices")
            if not (0 <= answer_index < len(choices)):
                raise GoldIndexOutOfRange(item_id, answer_index, len(choices))
            seen.add(item_id)
            items.append(QaItem(item_id, question, tuple(choices), answer_index))
    return Dataset(name=name or path.stem, items=items)
