import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_item, scripted_wwc
from drr.distill import TurnRecord, distill_item
from drr.errors import FileFormatError
from drr.prompts import DIRECT_FEEDBACK_LINE
from drr.reasoner import PromptStrategy
from drr.trainprep import (
    DEFAULT_INSTRUCTION,
    DmExample,
    downsample,
    export_training_file,
    load_training_file,
    render_dm_input,
    split,
)


def record(question_id="q1", turn=1, context=(), answer=2, rationale="because.", label="accept"):
    return TurnRecord(question_id, turn, tuple(context), answer, "", rationale, label)


class TestRender:
    def test_turn1_layout(self, item):
        text = render_dm_input(item, record())
        assert text.startswith(DEFAULT_INSTRUCTION)
        assert text.count("Answer:") == 1
        assert "Previous LLM Response:" not in text
        assert f"Question: {item.question}" in text
        assert "Choices: [0: 'choice 0'" in text
        assert not text.endswith((" ", "\n"))

    def test_turn2_hand_rendered(self, item):
        rec = record(turn=2, context=[("0", "first guess.")], answer=2,
                     rationale="second thoughts.")
        expected = (
            f"{DEFAULT_INSTRUCTION}\n"
            f"Question: {item.question}\n"
            "Choices: [0: 'choice 0', 1: 'choice 1', 2: 'choice 2', 3: 'choice 3']\n"
            "Previous LLM Response: Answer: 0\n"
            "Rationale: first guess.\n"
            "Wrong Answer! Try again.\n"
            "Answer: 2\n"
            "Rationale: second thoughts."
        )
        assert render_dm_input(item, rec) == expected

    def test_deterministic(self, item):
        rec = record(turn=2, context=[("0", "r")])
        assert render_dm_input(item, rec) == render_dm_input(item, rec)

    def test_wrong_item_rejected(self, item):
        with pytest.raises(ValueError):
            render_dm_input(item, record(question_id="other"))

    def test_matches_distilled_records(self, item):
        trace = distill_item(item, scripted_wwc(item), PromptStrategy.direct(), 4)
        text = render_dm_input(item, trace.records[2])
        assert text.count("Previous LLM Response:") == 2
        assert text.count(DIRECT_FEEDBACK_LINE) == 2


class TestDownsample:
    def build(self, n_accept, n_reject):
        records = [record(f"a{i}", label="accept") for i in range(n_accept)]
        records += [record(f"r{i}", answer=0, label="reject") for i in range(n_reject)]
        return records

    def test_balanced(self):
        sampled = downsample(self.build(10, 30), 1.0, seed=1)
        assert sum(1 for r in sampled if r.label == "accept") == 10
        assert sum(1 for r in sampled if r.label == "reject") == 10

    def test_insufficient_rejects_all_kept(self):
        sampled = downsample(self.build(10, 5), 2.0, seed=1)
        assert len(sampled) == 15

    def test_seed_contract(self):
        records = self.build(10, 30)
        a = downsample(records, 1.0, seed=1)
        b = downsample(records, 1.0, seed=2)
        assert len(a) == len(b) == 20
        assert downsample(records, 1.0, seed=1) == a

    def test_order_preserved(self):
        records = self.build(5, 20)
        sampled = downsample(records, 1.0, seed=3)
        positions = [records.index(r) for r in sampled]
        assert positions == sorted(positions)

    def test_no_accepts_drops_rejects(self):
        assert downsample(self.build(0, 10), 1.0, seed=1) == []

    @given(st.integers(1, 30), st.integers(0, 60), st.floats(0.1, 3.0), st.integers(0, 99))
    @settings(max_examples=50, deadline=None)
    def test_properties(self, n_accept, n_reject, ratio, seed):
        records = self.build(n_accept, n_reject)
        sampled = downsample(records, ratio, seed)
        accepts = [r for r in sampled if r.label == "accept"]
        rejects = [r for r in sampled if r.label == "reject"]
        assert len(accepts) == n_accept
        assert len(rejects) == min(n_reject, round(ratio * n_accept))


class TestSplit:
    def examples(self, n_ids, turns_per_id=1):
        return [
            DmExample(f"q{i}", t + 1, f"text {i} {t}", (i + t) % 2)
            for i in range(n_ids) for t in range(turns_per_id)
        ]

    def test_80_20(self):
        corpus = split(self.examples(10), 0.8, seed=0)
        train_ids = {e.question_id for e in corpus.train}
        dev_ids = {e.question_id for e in corpus.dev}
        assert len(train_ids) == 8 and len(dev_ids) == 2
        assert not (train_ids & dev_ids)

    def test_turns_stay_together(self):
        corpus = split(self.examples(100, turns_per_id=2), 0.8, seed=1)
        assert len(corpus.train) == 160
        assert not ({e.question_id for e in corpus.train}
                    & {e.question_id for e in corpus.dev})

    def test_deterministic(self):
        examples = self.examples(25, 3)
        assert split(examples, 0.8, 5) == split(examples, 0.8, 5)

    @given(st.integers(2, 60), st.floats(0.1, 0.9), st.integers(0, 99))
    @settings(max_examples=50, deadline=None)
    def test_disjoint_and_sized(self, n_ids, fraction, seed):
        corpus = split(self.examples(n_ids, 2), fraction, seed)
        train_ids = {e.question_id for e in corpus.train}
        dev_ids = {e.question_id for e in corpus.dev}
        assert not (train_ids & dev_ids)
        assert len(train_ids) == round(fraction * n_ids)


class TestExport:
    def test_count_and_round_trip(self, tmp_path):
        examples = [DmExample(f"q{i}", 1, f"input {i}", i % 2) for i in range(5)]
        path = tmp_path / "train.jsonl"
        assert export_training_file(examples, path) == 5
        assert load_training_file(path) == examples

    def test_empty(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        assert export_training_file([], path) == 0
        assert path.read_text() == ""
        assert load_training_file(path) == []

    def test_bad_file(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "x"}\n')
        with pytest.raises(FileFormatError):
            load_training_file(path)

    def test_label_preserved(self, tmp_path, item):
        trace = distill_item(item, scripted_wwc(item), PromptStrategy.direct(), 4)
        from drr.trainprep import records_to_examples
        examples = records_to_examples({item.id: item}, trace.records)
        for rec, ex in zip(trace.records, examples):
            assert ex.label == (1 if rec.label == "accept" else 0)
