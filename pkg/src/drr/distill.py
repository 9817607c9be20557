"""Trace generation: iterate the reasoner per question and label each turn."""

from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DrrError, UnparseableAnswer
from .qa_data import Dataset, QaItem
from .reasoner import Answer, PromptStrategy, Reasoner, answer_to_text, build_prompt, parse_response

log = logging.getLogger(__name__)

TERMINAL_ACCEPTED = "accepted"
TERMINAL_EXHAUSTED = "exhausted"
TERMINAL_FAILED_PREFIX = "failed:"

DEFAULT_GENERATION_TURNS = 4


@dataclass(frozen=True)
class TurnRecord:
    question_id: str
    turn: int
    context: tuple[tuple[str, str], ...]  # prior (answer_text, rationale) pairs
    answer: Answer
    raw: str
    rationale: str
    label: str  # "accept" | "reject"


@dataclass
class Trace:
    question_id: str
    records: list[TurnRecord] = field(default_factory=list)
    terminal: str = TERMINAL_EXHAUSTED

    @property
    def accepted_at(self) -> int | None:
        if self.terminal == TERMINAL_ACCEPTED:
            return len(self.records)
        return None


def distill_item(
    item: QaItem,
    reasoner: Reasoner,
    strategy: PromptStrategy,
    max_turns: int = DEFAULT_GENERATION_TURNS,
) -> Trace:
    """Run the labeled re-prompting loop for one question.

    Each turn the reasoner proposes an answer; a correct answer is recorded
    with label accept and stops the loop, anything else is recorded reject
    and appended to the context. Unparseable responses count as rejects.
    """
    if max_turns < 1:
        raise ValueError("max_turns must be >= 1")
    context: list[tuple[str, str]] = []
    trace = Trace(question_id=item.id)
    for turn in range(1, max_turns + 1):
        messages = build_prompt(item, context, turn, strategy)
        params = strategy.params_for_turn(turn)
        try:
            raw = reasoner.propose(item, messages, turn, params)
        except DrrError as exc:
            trace.terminal = f"{TERMINAL_FAILED_PREFIX}{exc}"
            return trace
        try:
            resp = parse_response(raw, len(item.choices), strategy.allow_abstain_token)
            answer, rationale = resp.answer, resp.rationale
        except UnparseableAnswer:
            answer, rationale = None, raw
        label = "accept" if answer == item.gold_index else "reject"
        trace.records.append(
            TurnRecord(item.id, turn, tuple(context), answer, raw, rationale, label)
        )
        if label == "accept":
            trace.terminal = TERMINAL_ACCEPTED
            return trace
        context.append((answer_to_text(answer), rationale))
    trace.terminal = TERMINAL_EXHAUSTED
    return trace


def record_to_json(record: TurnRecord, terminal: str | None) -> dict:
    return {
        "id": record.question_id,
        "turn": record.turn,
        "context": [{"answer": a, "rationale": r} for a, r in record.context],
        "answer": record.answer,
        "raw": record.raw,
        "rationale": record.rationale,
        "label": record.label,
        "terminal": terminal,
    }


def record_from_json(obj: dict) -> tuple[TurnRecord, str | None]:
    context = tuple((str(p["answer"]), str(p["rationale"])) for p in obj.get("context", []))
    answer = obj["answer"]
    return (
        TurnRecord(
            question_id=str(obj["id"]),
            turn=int(obj["turn"]),
            context=context,
            answer=answer,
            raw=str(obj.get("raw", "")),
            rationale=str(obj.get("rationale", "")),
            label=str(obj["label"]),
        ),
        obj.get("terminal"),
    )


def trace_to_lines(trace: Trace) -> list[str]:
    lines = []
    for i, record in enumerate(trace.records):
        terminal = trace.terminal if i == len(trace.records) - 1 else None
        lines.append(json.dumps(record_to_json(record, terminal), ensure_ascii=False))
    return lines


def load_trace_file(path: str | Path) -> list[tuple[TurnRecord, str | None]]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(record_from_json(json.loads(line)))
    return out


def terminal_ids(path: str | Path) -> set[str]:
    """Ids whose trace in ``path`` already reached a terminal state."""
    path = Path(path)
    if not path.exists():
        return set()
    done = set()
    for record, terminal in load_trace_file(path):
        if terminal is not None:
            done.add(record.question_id)
    return done


class _TraceWriter:
    """Serialized sink appending whole traces via write-temp-then-rename."""

    def __init__(self, path: Path):
        self.path = path
        self._lock = threading.Lock()
        self._lines: list[str] = []
        if path.exists():
            self._lines = [l for l in path.read_text(encoding="utf-8").splitlines() if l.strip()]

    def append_trace(self, lines: list[str]) -> None:
        with self._lock:
            self._lines.extend(lines)
            tmp = self.path.with_suffix(self.path.suffix + ".tmp")
            tmp.write_text("\n".join(self._lines) + "\n", encoding="utf-8")
            tmp.replace(self.path)


def distill_dataset(
    dataset: Dataset,
    reasoner: Reasoner,
    strategy: PromptStrategy,
    max_turns: int = DEFAULT_GENERATION_TURNS,
    out_path: str | Path | None = None,
    worker_limit: int = 4,
) -> dict:
    """Distill every item, persist traces as JSONL, and return run counts.

    Re-runs skip ids that already have a terminal trace in ``out_path``.
    """
    writer = None
    done: set[str] = set()
    if out_path is not None:
        out_path = Path(out_path)
        done = terminal_ids(out_path)
        writer = _TraceWriter(out_path)
    todo = [item for item in dataset.items if item.id not in done]
    summary = {
        "n_items": len(dataset.items),
        "skipped": len(dataset.items) - len(todo),
        "n_accepted": 0,
        "n_exhausted": 0,
        "n_failed": 0,
        "n_records": 0,
    }
    lock = threading.Lock()

    def run_one(item: QaItem) -> None:
        trace = distill_item(item, reasoner, strategy, max_turns)
        if writer is not None and trace.records:
            writer.append_trace(trace_to_lines(trace))
        with lock:
            summary["n_records"] += len(trace.records)
            if trace.terminal == TERMINAL_ACCEPTED:
                summary["n_accepted"] += 1
            elif trace.terminal == TERMINAL_EXHAUSTED:
                summary["n_exhausted"] += 1
            else:
                summary["n_failed"] += 1
                log.warning("trace for %s failed: %s", item.id, trace.terminal)

    if worker_limit <= 1:
        for item in todo:
            run_one(item)
    else:
        with ThreadPoolExecutor(max_workers=worker_limit) as pool:
            list(pool.map(run_one, todo))
    return summary
