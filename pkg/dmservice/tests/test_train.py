import math

import pytest
import torch
from torch.nn import functional as F

from dmservice.train import DmHyperparams, EmptyCorpus, batch_weighted_loss, load_corpus, train_dm

from conftest import fast_hyper, small_config, write_corpus


def test_hyperparams_defaults():
    hyper = DmHyperparams()
    assert hyper.learning_rate == pytest.approx(3e-5)
    assert hyper.weight_decay == pytest.approx(1e-4)
    assert hyper.warmup_steps == 500
    assert hyper.class_weights == (3.0, 1.0)


def test_hyperparams_reject_nonpositive():
    with pytest.raises(ValueError):
        DmHyperparams(learning_rate=0.0)
    with pytest.raises(ValueError):
        DmHyperparams(class_weights=(0.0, 1.0))


def test_load_corpus_reads_shared_format(tmp_path):
    path = write_corpus(tmp_path / "c.jsonl", 6, seed=1)
    corpus = load_corpus(path)
    assert len(corpus) == 6
    assert [label for _, label in corpus] == [0, 1, 0, 1, 0, 1]
    assert all(text for text, _ in corpus)


def test_batch_weighted_loss_matches_hand_computation():
    logits = torch.tensor([[0.4, -0.3], [1.2, 0.8], [-0.5, 2.0]])
    labels = torch.tensor([0, 1, 1])
    weights = (3.0, 1.0)
    expected = 0.0
    for row, y in zip(logits, labels.tolist()):
        p_y = torch.softmax(row, dim=-1)[y].item()
        expected += weights[y] * (-math.log(p_y))
    expected /= 3
    assert batch_weighted_loss(logits, labels, weights).item() == pytest.approx(expected, abs=1e-7)


def test_equal_weights_reduce_to_plain_cross_entropy():
    torch.manual_seed(5)
    logits = torch.randn(8, 2)
    labels = torch.randint(0, 2, (8,))
    ours = batch_weighted_loss(logits, labels, (2.0, 2.0))
    plain = 2.0 * F.cross_entropy(logits, labels)
    assert torch.allclose(ours, plain, atol=1e-7)


def test_reject_weight_scales_reject_examples_only():
    logits = torch.tensor([[0.0, 0.0], [0.0, 0.0]])
    labels = torch.tensor([0, 1])
    # both examples have p = 0.5: mean of (3 ln2, 1 ln2) = 2 ln2
    loss = batch_weighted_loss(logits, labels, (3.0, 1.0)).item()
    assert loss == pytest.approx(2 * math.log(2), abs=1e-6)


def test_empty_corpus_raises(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    dev = write_corpus(tmp_path / "dev.jsonl", 4, seed=0)
    with pytest.raises(EmptyCorpus):
        train_dm(empty, dev, fast_hyper(), out_dir=None)


def test_toy_corpus_fits_within_three_epochs(trained_model_dir):
    _, report = trained_model_dir
    assert report.epochs_run <= 3
    assert report.train_accuracy >= 0.90
    assert 1 <= report.best_epoch <= report.epochs_run


def test_report_dev_counts_consistent(trained_model_dir):
    _, report = trained_model_dir
    n_dev = 40
    n_wrong = report.dev_false_positive_count + report.dev_false_negative_count
    assert report.dev_accuracy == pytest.approx(1 - n_wrong / n_dev, abs=1e-9)


def test_training_is_seed_deterministic(toy_files, tmp_path):
    train_file, dev_file = toy_files
    r1 = train_dm(train_file, dev_file, fast_hyper(epochs=1), out_dir=None,
                  config=small_config())
    r2 = train_dm(train_file, dev_file, fast_hyper(epochs=1), out_dir=None,
                  config=small_config())
    assert r1.final_train_loss == pytest.approx(r2.final_train_loss, abs=1e-9)
    assert r1.dev_accuracy == r2.dev_accuracy
