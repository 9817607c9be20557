"""Deployed loop: reasoner proposes, critic verdicts, iterate until accept or abstain."""

from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .critic import VERDICT_ACCEPT, Critic
from .errors import DrrError, UnparseableAnswer
from .qa_data import Dataset, QaItem
from .reasoner import Answer, PromptStrategy, Reasoner, answer_to_text, build_prompt, parse_response
from .trainprep import DEFAULT_INSTRUCTION, render_input

log = logging.getLogger(__name__)

FINAL_ANSWERED = "answered"
FINAL_ABSTAINED = "abstained"

DEFAULT_INFERENCE_TURNS = 5


@dataclass(frozen=True)
class InferenceTurn:
    turn: int
    answer: Answer
    rationale: str
    p_accept: float
    verdict: str


@dataclass
class InferenceOutcome:
    question_id: str
    final: str  # "answered" | "abstained"
    answer: Answer
    turns: list[InferenceTurn] = field(default_factory=list)


def infer_item(
    item: QaItem,
    reasoner: Reasoner,
    critic: Critic,
    strategy: PromptStrategy,
    max_turns: int = DEFAULT_INFERENCE_TURNS,
    instruction: str = DEFAULT_INSTRUCTION,
    critic_input_log: list[str] | None = None,
) -> InferenceOutcome:
    """Iterate until the critic accepts a turn or max_turns rejects.

    The text handed to the critic at each turn is rendered by the same
    function used to build the critic's training corpus.
    """
    if max_turns < 1:
        raise ValueError("max_turns must be >= 1")
    context: list[tuple[str, str]] = []
    turns: list[InferenceTurn] = []
    for turn in range(1, max_turns + 1):
        messages = build_prompt(item, context, turn, strategy)
        params = strategy.params_for_turn(turn)
        raw = reasoner.propose(item, messages, turn, params)
        try:
            resp = parse_response(raw, len(item.choices), strategy.allow_abstain_token)
            answer, rationale = resp.answer, resp.rationale
        except UnparseableAnswer:
            answer, rationale = None, raw
        critic_input = render_input(
            item, context, answer, rationale, instruction, strategy.feedback_line
        )
        if critic_input_log is not None:
            critic_input_log.append(critic_input)
        critic.note_turn(item, answer)
        score = critic.assess(critic_input)
        turns.append(InferenceTurn(turn, answer, rationale, score.p_accept, score.verdict))
        if score.verdict == VERDICT_ACCEPT:
            return InferenceOutcome(item.id, FINAL_ANSWERED, answer, turns)
        context.append((answer_to_text(answer), rationale))
    return InferenceOutcome(item.id, FINAL_ABSTAINED, None, turns)


def outcome_to_json(outcome: InferenceOutcome) -> dict:
    return {
        "id": outcome.question_id,
        "final": outcome.final,
        "answer": outcome.answer,
        "turns": [
            {
                "turn": t.turn,
                "answer": t.answer,
                "rationale": t.rationale,
                "p_accept": t.p_accept,
                "verdict": t.verdict,
            }
            for t in outcome.turns
        ],
    }


def outcome_from_json(obj: dict) -> InferenceOutcome:
    return InferenceOutcome(
        question_id=str(obj["id"]),
        final=str(obj["final"]),
        answer=obj.get("answer"),
        turns=[
            InferenceTurn(
                turn=int(t["turn"]),
                answer=t.get("answer"),
                rationale=str(t.get("rationale", "")),
                p_accept=float(t["p_accept"]),
                verdict=str(t["verdict"]),
            )
            for t in obj.get("turns", [])
        ],
    )


def load_outcome_file(path: str | Path) -> list[InferenceOutcome]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(outcome_from_json(json.loads(line)))
    return out


def infer_dataset(
    dataset: Dataset,
    reasoner: Reasoner,
    critic: Critic,
    strategy: PromptStrategy,
    max_turns: int = DEFAULT_INFERENCE_TURNS,
    out_path: str | Path | None = None,
    worker_limit: int = 4,
    instruction: str = DEFAULT_INSTRUCTION,
    collect: list[InferenceOutcome] | None = None,
) -> dict:
    """Run the loop over a dataset; persist outcomes and return counts.

    Resumable: ids already present in ``out_path`` are skipped on re-run.
    """
    done: set[str] = set()
    if out_path is not None:
        out_path = Path(out_path)
        if out_path.exists():
            done = {o.question_id for o in load_outcome_file(out_path)}
    todo = [item for item in dataset.items if item.id not in done]
    summary = {
        "n": len(dataset.items),
        "skipped": len(dataset.items) - len(todo),
        "n_answered": 0,
        "n_abstained": 0,
        "n_failed": 0,
    }
    lock = threading.Lock()
    sink = out_path.open("a", encoding="utf-8") if out_path is not None else None

    def run_one(item: QaItem) -> None:
        try:
            outcome = infer_item(item, reasoner, critic, strategy, max_turns, instruction)
        except DrrError as exc:
            with lock:
                summary["n_failed"] += 1
            log.warning("inference failed for %s: %s", item.id, exc)
            return
        with lock:
            summary["n_answered" if outcome.final == FINAL_ANSWERED else "n_abstained"] += 1
            if collect is not None:
                collect.append(outcome)
            if sink is not None:
                sink.write(json.dumps(outcome_to_json(outcome), ensure_ascii=False) + "\n")
                sink.flush()

    try:
        if worker_limit <= 1:
            for item in todo:
                run_one(item)
        else:
            with ThreadPoolExecutor(max_workers=worker_limit) as pool:
                list(pool.map(run_one, todo))
    finally:
        if sink is not None:
            sink.close()
    return summary
