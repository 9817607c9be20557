import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_dataset
from drr.errors import MissingGold
from drr.inference import FINAL_ABSTAINED, FINAL_ANSWERED, InferenceOutcome, InferenceTurn
from drr.metrics import formula_score, score_outcomes, score_zero_shot
from drr.prompts import NONE_OF_THE_ABOVE


def turn(n, answer, verdict, p=None):
    if p is None:
        p = 1.0 if verdict == "accept" else 0.0
    return InferenceTurn(n, answer, "r", p, verdict)


def answered(qid, answer, n_turns=1):
    turns = [turn(i, 0, "reject") for i in range(1, n_turns)]
    turns.append(turn(n_turns, answer, "accept"))
    return InferenceOutcome(qid, FINAL_ANSWERED, answer, turns)


def abstained(qid, last_answer=0, n_turns=5):
    turns = [turn(i, last_answer, "reject") for i in range(1, n_turns + 1)]
    return InferenceOutcome(qid, FINAL_ABSTAINED, None, turns)


def build_outcomes(dataset, n_correct, n_incorrect, n_abstain):
    outcomes = []
    items = iter(dataset.items)
    for _ in range(n_correct):
        item = next(items)
        outcomes.append(answered(item.id, item.gold_index))
    for _ in range(n_incorrect):
        item = next(items)
        outcomes.append(answered(item.id, (item.gold_index + 1) % len(item.choices)))
    for _ in range(n_abstain):
        item = next(items)
        outcomes.append(abstained(item.id, (item.gold_index + 1) % len(item.choices)))
    return outcomes


def test_published_cot_row():
    # 735/1000 correct, no abstentions.
    dataset = make_dataset(1000)
    outcomes = build_outcomes(dataset, 735, 265, 0)
    result = score_outcomes(outcomes, dataset, (1.0, 3.0))
    assert result.acc == pytest.approx(73.5, abs=1e-9)
    assert result.fs[1.0] == pytest.approx(47.0, abs=1e-9)
    assert result.fs[3.0] == pytest.approx(-6.0, abs=0.2)


def test_all_abstain_scores_zero():
    dataset = make_dataset(10)
    outcomes = build_outcomes(dataset, 0, 0, 10)
    result = score_outcomes(outcomes, dataset, (1.0, 2.0, 3.0))
    assert result.acc == 0.0
    assert all(v == 0.0 for v in result.fs.values())


def test_fs3_mixed():
    dataset = make_dataset(10)
    outcomes = build_outcomes(dataset, 8, 1, 1)
    result = score_outcomes(outcomes, dataset, (3.0,))
    assert result.fs[3.0] == pytest.approx(50.0)


def test_none_of_the_above_counts_as_abstain():
    dataset = make_dataset(4)
    outcomes = build_outcomes(dataset, 2, 1, 0)
    outcomes.append(answered(dataset.items[3].id, NONE_OF_THE_ABOVE))
    result = score_outcomes(outcomes, dataset)
    assert result.n_abstain == 1
    assert result.n_correct == 2
    assert result.n_incorrect == 1


def test_acc_d_final_turn_decisions():
    dataset = make_dataset(4)
    items = dataset.items
    wrong = lambda item: (item.gold_index + 1) % len(item.choices)
    outcomes = [
        answered(items[0].id, items[0].gold_index),      # accept correct: good
        answered(items[1].id, wrong(items[1])),          # accept incorrect: bad
        abstained(items[2].id, wrong(items[2])),         # reject incorrect: good
        abstained(items[3].id, items[3].gold_index),     # reject correct: bad
    ]
    result = score_outcomes(outcomes, dataset)
    assert result.acc_d == pytest.approx(50.0)


def test_missing_gold():
    dataset = make_dataset(2)
    with pytest.raises(MissingGold):
        score_outcomes([answered("nope", 0)], dataset)


def test_counts_sum():
    dataset = make_dataset(9)
    result = score_outcomes(build_outcomes(dataset, 4, 3, 2), dataset)
    assert result.n_correct + result.n_incorrect + result.n_abstain == result.n == 9


@given(st.integers(0, 50), st.integers(0, 50), st.floats(0.5, 5.0))
@settings(max_examples=60, deadline=None)
def test_fs_identity_without_abstentions(n_correct, n_incorrect, k):
    n = n_correct + n_incorrect
    if n == 0:
        return
    acc = 100.0 * n_correct / n
    fs = formula_score(n_correct, n_incorrect, n, k)
    assert fs == pytest.approx((1 + k) * acc - 100.0 * k, abs=1e-9)


@given(st.integers(0, 30), st.integers(1, 30), st.integers(0, 30),
       st.lists(st.floats(0.1, 10.0), min_size=2, max_size=5, unique=True))
@settings(max_examples=60, deadline=None)
def test_fs_monotone_in_k(n_correct, n_incorrect, n_abstain, ks):
    n = n_correct + n_incorrect + n_abstain
    ks = sorted(ks)
    values = [formula_score(n_correct, n_incorrect, n, k) for k in ks]
    assert all(a >= b for a, b in zip(values, values[1:]))


class TestZeroShot:
    def test_mixed(self):
        decisions = [(True, True)] * 7 + [(True, False)] * 2 + [(False, False)]
        assert score_zero_shot(decisions) == pytest.approx(80.0)

    def test_all_abstain(self):
        assert score_zero_shot([(False, False)] * 5) == 100.0

    def test_all_wrong(self):
        assert score_zero_shot([(True, False)] * 5) == 0.0


def test_json_and_table_output():
    dataset = make_dataset(10)
    result = score_outcomes(build_outcomes(dataset, 8, 1, 1), dataset, (1.0, 3.0))
    payload = result.to_dict()
    assert payload["counts"] == {"correct": 8, "incorrect": 1, "abstain": 1}
    assert payload["fs"]["1"] == pytest.approx(70.0)
    table = result.format_table()
    assert "80.0" in table and "FS(3)" in table
