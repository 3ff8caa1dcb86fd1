import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from eegarm import dataset
from eegarm.errors import ConfigError, DatasetError, DimensionError, TrainingError
from eegarm.model import Classifier, FFNNConfig, TransformerConfig, evaluate, train, window_size_study
from eegarm.model import ffnn, transformer as tf
from eegarm.model.metrics import EvalReport, confusion_matrix, report

TINY = TransformerConfig(win_size=8, model_dim=8, heads=2, ff_dim=8, seed=3)


def rand_windows(b, t=8, seed=0):
    return np.random.default_rng(seed).standard_normal((b, t, 20))


def tiny_split(n_per_class=12, win=8, seed=0):
    """Linearly separable windows: class k has a mean shift on features 5k..5k+4."""
    g = np.random.default_rng(seed)
    X, y = [], []
    for k in range(3):
        w = g.standard_normal((n_per_class, win, 20)) * 0.3
        w[:, :, 5 * k:5 * k + 5] += 1.5
        X.append(w)
        y += [k] * n_per_class
    X, y = np.concatenate(X), np.array(y)
    order = g.permutation(len(y))
    X, y = X[order], y[order]
    cut = len(y) * 3 // 4
    std = dataset.Standardizer(np.zeros(20), np.ones(20))
    return dataset.SplitDataset(X[:cut], y[:cut], X[cut:], y[cut:], std, win)


# -- config and shapes ------------------------------------------------------------

def test_config_invariants():
    with pytest.raises(ConfigError):
        TransformerConfig(model_dim=30, heads=4)
    with pytest.raises(ConfigError):
        TransformerConfig(classes=4)
    with pytest.raises(ConfigError):
        TransformerConfig(feat_dim=19)
    assert TransformerConfig().head_dim == 8


def test_param_shapes():
    p = tf.init_params(TINY)
    assert set(p) == set(tf.PARAM_ORDER)
    assert p["W_in"].shape == (20, 8) and p["W_q"].shape == (2, 8, 4) and p["W_o"].shape == (2, 4, 8)
    assert p["W_1"].shape == (8, 8) and p["W_2"].shape == (8, 3)
    assert all(np.all(np.isfinite(v)) for v in p.values())


def test_shape_mismatch_is_dimension_error():
    p = tf.init_params(TINY)
    with pytest.raises(DimensionError):
        tf.forward(p, np.zeros((8, 19)))
    with pytest.raises(DimensionError):
        tf.forward(p, np.zeros(20))
    with pytest.raises(DimensionError):
        tf.forward(p, np.zeros((0, 20)))


# -- forward -------------------------------------------------------------------------

def test_forward_matches_loop_oracle():
    p = tf.init_params(TINY)
    for k in range(3):
        X = rand_windows(1, seed=k)[0]
        assert np.allclose(tf.forward(p, X), oracles.transformer_logits_loop(p, X), atol=1e-10, rtol=0)


def test_batched_forward_equals_single_forward():
    p = tf.init_params(TINY)
    X = rand_windows(5)
    batch = tf.forward(p, X)
    assert batch.shape == (5, 3)
    for k in range(5):
        assert np.allclose(batch[k], tf.forward(p, X[k]), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_softmax_is_a_distribution(seed):
    p = tf.init_params(TINY)
    probs = tf.softmax(tf.forward(p, rand_windows(4, seed=seed)))
    assert np.all(probs >= 0) and np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)


def test_softmax_is_stable_for_large_logits():
    probs = tf.softmax(np.array([1000.0, 0.0, -1000.0]))
    assert np.all(np.isfinite(probs)) and probs[0] == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_row_permutation_leaves_logits_unchanged(seed):
    p = tf.init_params(TINY)
    X = rand_windows(1, seed=seed)[0]
    perm = np.random.default_rng(seed).permutation(8)
    assert np.max(np.abs(tf.forward(p, X) - tf.forward(p, X[perm]))) < 1e-9


@pytest.mark.parametrize("k", [2, 3])
def test_row_duplication_leaves_logits_unchanged(k):
    p = tf.init_params(TINY)
    X = rand_windows(1, seed=k)[0]
    assert np.allclose(tf.forward(p, X), tf.forward(p, np.tile(X, (k, 1))), atol=1e-10, rtol=0)


# -- loss --------------------------------------------------------------------------

def test_uniform_logits_give_ln3():
    for c in range(3):
        assert tf.cross_entropy(np.zeros(3), np.eye(3)[c]) == pytest.approx(math.log(3), abs=1e-12)


def test_loss_goes_to_zero_as_correct_logit_grows():
    losses = [tf.cross_entropy(np.array([z, 0.0, 0.0]), np.eye(3)[0]) for z in (1, 5, 10, 20, 800)]
    assert all(a > b for a, b in zip(losses[:4], losses[1:4]))
    assert losses[-1] < 1e-12
    assert all(v >= 0 for v in losses)


def test_loss_matches_loop_oracle():
    g = np.random.default_rng(4)
    for _ in range(100):
        z = g.normal(0, 5, 3)
        c = int(g.integers(3))
        assert abs(tf.cross_entropy(z, np.eye(3)[c]) - oracles.cross_entropy_loop(list(z), c)) < 1e-9


def test_dlogits_is_softmax_minus_one_hot():
    g = np.random.default_rng(5)
    for _ in range(20):
        z = g.normal(0, 3, 3)
        y = np.eye(3)[g.integers(3)]
        h = 1e-5
        fd = np.array([(tf.cross_entropy(z + h * e, y) - tf.cross_entropy(z - h * e, y)) / (2 * h)
                       for e in np.eye(3)])
        assert np.max(np.abs(fd - (tf.softmax(z) - y))) < 1e-9


# -- gradients ------------------------------------------------------------------------

def gradient_check(module, params, X, Y):
    _, grads, _ = module.loss_and_grads(params, X, Y)
    numeric = oracles.central_differences(lambda: tf.cross_entropy(module.forward(params, X), Y), params)
    worst = 0.0
    for name in params:
        a, n = grads[name], numeric[name]
        assert a.shape == n.shape
        elem = np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-6)
        worst = max(worst, float(elem.max()))
    return worst


def test_transformer_gradients_match_finite_differences():
    p = tf.init_params(TINY)
    X = rand_windows(3, seed=7)
    Y = np.eye(3)[[0, 2, 1]]
    assert gradient_check(tf, p, X, Y) < 1e-4


def test_ffnn_gradients_match_finite_differences():
    cfg = FFNNConfig(win_size=4, hidden=6, seed=2)
    p = ffnn.init_params(cfg)
    X = rand_windows(3, t=4, seed=1)
    assert gradient_check(ffnn, p, X, np.eye(3)[[1, 0, 2]]) < 1e-4


def test_stationary_point_for_final_bias():
    p = tf.init_params(TINY)
    p["W_2"][:] = 0.0
    p["b_2"][:] = 0.0
    X = rand_windows(3, seed=9)
    _, grads, logits = tf.loss_and_grads(p, X, np.eye(3))
    assert np.allclose(logits, 0.0)
    assert np.max(np.abs(grads["b_2"])) < 1e-12


# -- FFNN -------------------------------------------------------------------------------

def test_ffnn_forward_shapes_and_errors():
    cfg = FFNNConfig(win_size=4, hidden=5)
    p = ffnn.init_params(cfg)
    assert ffnn.forward(p, np.zeros((4, 20))).shape == (3,)
    assert ffnn.forward(p, np.zeros((7, 4, 20))).shape == (7, 3)
    with pytest.raises(DimensionError):
        ffnn.forward(p, np.zeros((5, 20)))
    with pytest.raises(ConfigError):
        FFNNConfig(classes=2)


# -- training -----------------------------------------------------------------------------

def test_lr_zero_leaves_parameters_unchanged():
    data = tiny_split()
    before = tf.init_params(TINY)
    model, hist = train(data, TINY, epochs=3, lr=0.0, batch_size=4, seed=0)
    assert all(np.array_equal(before[k], model.params[k]) for k in before)
    assert len(set(hist.train_acc)) == 1 and len(set(hist.val_acc)) == 1


def test_training_is_deterministic():
    data = tiny_split()
    a_model, a = train(data, TINY, epochs=4, lr=0.05, batch_size=4, seed=5)
    b_model, b = train(data, TINY, epochs=4, lr=0.05, batch_size=4, seed=5)
    assert a.to_csv() == b.to_csv()
    assert a_model.to_bytes() == b_model.to_bytes()


def test_training_learns_separable_windows():
    data = tiny_split(30)
    model, hist = train(data, TINY, epochs=30, lr=0.05, batch_size=8, seed=0)
    assert hist.val_acc[-1] >= 0.9
    assert hist.epochs[-1]["train_loss"] < hist.epochs[0]["train_loss"]
    assert [e["epoch"] for e in hist.epochs] == list(range(1, 31))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_is_training_error():
    data = tiny_split()
    data.train_X[0, 0, 0] = np.inf
    with pytest.raises(TrainingError) as exc:
        train(data, TINY, epochs=2, lr=0.1, batch_size=100, seed=0)
    assert exc.value.epoch == 1


def test_training_input_validation():
    data = tiny_split()
    with pytest.raises(ConfigError):
        train(data, TransformerConfig(win_size=9, model_dim=8, heads=2), epochs=1)
    empty = dataset.SplitDataset(np.zeros((0, 8, 20)), np.zeros(0, int), data.test_X, data.test_y,
                                 data.standardizer, 8)
    with pytest.raises(DatasetError):
        train(empty, TINY, epochs=1)


def test_default_profile_training_reaches_90_percent(trained_model):
    model, hist, data = trained_model
    assert max(hist.val_acc) >= 0.9
    assert evaluate(model, data.test_X, data.test_y).accuracy >= 0.9


def test_model_file_round_trip(tmp_path, trained_model):
    model, _, data = trained_model
    model.save(tmp_path / "m.bin")
    back = Classifier.load(tmp_path / "m.bin")
    assert back.config == model.config
    assert np.array_equal(back.logits(data.test_X), model.logits(data.test_X))
    assert np.array_equal(back.standardizer.mean, model.standardizer.mean)
    assert back.to_bytes() == model.to_bytes()


def test_ffnn_classifier_round_trip(tmp_path):
    data = tiny_split()
    model, _ = train(data, FFNNConfig(win_size=8, hidden=4), epochs=2, lr=0.01, batch_size=4)
    model.save(tmp_path / "f.bin")
    back = Classifier.load(tmp_path / "f.bin")
    assert back.arch == "ffnn" and np.array_equal(back.predict(data.test_X), model.predict(data.test_X))


def test_predict_ties_go_to_lowest_index():
    model = Classifier.init(TINY, dataset.Standardizer(np.zeros(20), np.ones(20)))
    model.params["W_2"][:] = 0.0
    model.params["b_2"][:] = 0.0
    assert model.predict(rand_windows(4)).tolist() == [0, 0, 0, 0]


def test_window_size_study_rows(tmp_path):
    from conftest import write_offline_dataset

    files = write_offline_dataset(tmp_path, seconds=20.0)
    rows = window_size_study(files, [40, 80], TransformerConfig(seed=0), epochs=2, lr=1e-3, batch_size=16)
    assert [r["win_size"] for r in rows] == [40, 80]
    assert rows[0]["train_windows"] > rows[1]["train_windows"]
    assert all(0.0 <= r["accuracy"] <= 1.0 for r in rows)


# -- metrics ------------------------------------------------------------------------------

def test_perfect_predictor():
    truth = np.repeat([0, 1, 2], 10)
    rep = report(truth, truth)
    assert np.array_equal(rep.confusion, np.diag([10, 10, 10]))
    assert rep.accuracy == 1.0 and np.all(rep.precision == 1) and np.all(rep.recall == 1) and np.all(rep.f1 == 1)


def test_majority_class_predictor():
    truth = np.repeat([0, 1, 2], [5, 7, 9])
    rep = report(truth, np.full(21, 2))
    assert rep.recall.tolist() == [0.0, 0.0, 1.0]
    assert rep.precision[2] == pytest.approx(9 / 21) and rep.precision[0] == 0.0


@settings(max_examples=100, deadline=None)
@given(pairs=st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2)), min_size=1, max_size=200))
def test_metrics_match_brute_force(pairs):
    truth, pred = zip(*pairs)
    rep = report(truth, pred)
    ref = oracles.brute_force_metrics(truth, pred)
    for key in ("precision", "recall", "f1"):
        assert np.max(np.abs(getattr(rep, key) - np.array(ref[key]))) <= 1e-12
    assert abs(rep.accuracy - ref["accuracy"]) <= 1e-12
    assert np.max(np.abs(np.array(rep.macro) - ref["macro"])) <= 1e-12
    assert np.max(np.abs(np.array(rep.weighted) - ref["weighted"])) <= 1e-12
    assert rep.confusion.sum(axis=1).tolist() == ref["support"] == rep.support.tolist()
    assert np.all((rep.precision >= 0) & (rep.precision <= 1))


def test_report_layout_and_dict():
    rep = EvalReport.from_confusion(confusion_matrix([0, 1, 2, 2], [0, 1, 2, 1]))
    text = rep.to_text()
    header = text.splitlines()[0].split()
    assert header == ["Class", "Precision", "Recall", "F1-Score", "Support"]
    for name in ("pickUpCup", "shakeHands", "stayStationary", "Accuracy", "Macro Avg", "Weighted Avg"):
        assert name in text
    d = rep.to_dict()
    assert d["confusion"] == [[1, 0, 0], [0, 1, 0], [0, 1, 1]]
    assert d["classes"]["stayStationary"]["recall"] == 0.5


def test_evaluate_rejects_empty_split():
    model = Classifier.init(TINY)
    with pytest.raises(DatasetError):
        evaluate(model, np.zeros((0, 8, 20)), np.zeros(0, int))
