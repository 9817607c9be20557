"""Evaluation: accuracy, penalty-weighted formula scores, and decision accuracy."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import MissingGold
from .inference import FINAL_ANSWERED, InferenceOutcome
from .critic import VERDICT_ACCEPT
from .prompts import NONE_OF_THE_ABOVE
from .qa_data import Dataset

DEFAULT_KS = (1.0, 3.0)


@dataclass
class EvalResult:
    n: int
    n_correct: int
    n_incorrect: int
    n_abstain: int
    acc: float
    fs: dict[float, float] = field(default_factory=dict)
    acc_d: float = 0.0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "counts": {
                "correct": self.n_correct,
                "incorrect": self.n_incorrect,
                "abstain": self.n_abstain,
            },
            "acc": self.acc,
            "fs": {f"{k:g}": v for k, v in self.fs.items()},
            "acc_d": self.acc_d,
        }

    def format_table(self) -> str:
        header = ["n", "correct", "incorrect", "abstain", "Acc"]
        row = [str(self.n), str(self.n_correct), str(self.n_incorrect),
               str(self.n_abstain), f"{self.acc:.1f}"]
        for k in sorted(self.fs):
            header.append(f"FS({k:g})")
            row.append(f"{self.fs[k]:.1f}")
        header.append("Acc(D)")
        row.append(f"{self.acc_d:.1f}")
        widths = [max(len(h), len(r)) for h, r in zip(header, row)]
        line1 = "  ".join(h.rjust(w) for h, w in zip(header, widths))
        line2 = "  ".join(r.rjust(w) for r, w in zip(row, widths))
        return f"{line1}\n{line2}"


def formula_score(n_correct: int, n_incorrect: int, n: int, k: float) -> float:
    """100 * (correct - k * incorrect) / n; abstentions score zero."""
    return 100.0 * (n_correct - k * n_incorrect) / n


def score_outcomes(
    outcomes: list[InferenceOutcome],
    gold: Dataset,
    ks: tuple[float, ...] | list[float] = DEFAULT_KS,
) -> EvalResult:
    """Score outcomes against gold answers.

    An answered none-of-the-above counts as an abstention. The decision
    accuracy judges each item's final turn: accept of a correct answer or
    reject of an incorrect one is a correct decision.
    """
    if not outcomes:
        raise ValueError("outcomes must be non-empty")
    gold_map = gold.gold_map()
    n_correct = n_incorrect = n_abstain = good_decisions = 0
    for outcome in outcomes:
        if outcome.question_id not in gold_map:
            raise MissingGold(outcome.question_id)
        gold_index = gold_map[outcome.question_id]
        if outcome.final == FINAL_ANSWERED:
            if outcome.answer == gold_index:
                n_correct += 1
            elif outcome.answer == NONE_OF_THE_ABOVE:
                n_abstain += 1
            else:
                n_incorrect += 1
        else:
            n_abstain += 1
        if outcome.turns:
            last = outcome.turns[-1]
            last_correct = last.answer == gold_index
            accepted = last.verdict == VERDICT_ACCEPT
            if (accepted and last_correct) or (not accepted and not last_correct):
                good_decisions += 1
    n = len(outcomes)
    result = EvalResult(
        n=n,
        n_correct=n_correct,
        n_incorrect=n_incorrect,
        n_abstain=n_abstain,
        acc=100.0 * n_correct / n,
        acc_d=100.0 * good_decisions / n,
    )
    for k in ks:
        result.fs[float(k)] = formula_score(n_correct, n_incorrect, n, float(k))
    return result


def score_zero_shot(decisions: list[tuple[bool, bool]]) -> float:
    """Decision accuracy for a single-shot system.

    Each entry is (answered, correct); abstentions always count as
    successful decisions.
    """
    if not decisions:
        raise ValueError("decisions must be non-empty")
    good = sum(1 for answered, correct in decisions if (not answered) or correct)
    return 100.0 * good / len(decisions)
