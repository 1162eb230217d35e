import numpy as np
import pytest

from harshuffle import autodiff as ad
from harshuffle.autodiff import grad_check
from harshuffle.rng import Prng
from harshuffle.transformer import (
    HarTransformer,
    PERIOD_TAGS,
    TrainConfig,
    TransformerConfig,
    attention_trace,
    positional_encoding,
    predict,
    predict_scores,
    trace_epochs,
    train,
)
from harshuffle.windowing import WindowedDataset

TINY = TransformerConfig(d_model=8, heads=2, layers=1, ffn_dim=16, dropout=0.0, window_len=8)


def tiny_clf(seed=1, **overrides):
    cfg = TransformerConfig(
        **{**dict(d_model=8, heads=2, layers=1, ffn_dim=16, dropout=0.0, window_len=8), **overrides}
    )
    return HarTransformer(cfg, seed)


def tiny_dataset(n=12, seed=0, window_len=8, classes=3):
    prng = Prng(seed)
    offsets = prng.gaussian((classes, 3)) * 2.0
    labels = np.arange(n) % classes
    windows = prng.gaussian((n, window_len, 3)) * 0.3 + offsets[labels][:, None, :]
    return WindowedDataset(windows, labels.astype(np.int64))


class TestPositionalEncoding:
    def test_row_zero_alternates(self):
        pe = positional_encoding(3, 8)
        assert np.array_equal(pe[0], np.array([0.0, 1.0] * 4))

    def test_range(self):
        pe = positional_encoding(50, 16)
        assert pe.min() >= -1.0 and pe.max() <= 1.0

    def test_formula_spot_values(self):
        pe = positional_encoding(4, 6)
        assert pe[1, 0] == pytest.approx(np.sin(1.0), abs=1e-12)
        assert pe[1, 1] == pytest.approx(np.cos(1.0), abs=1e-12)
        assert pe[3, 2] == pytest.approx(np.sin(3.0 / 10000 ** (2 / 6)), abs=1e-12)

    def test_odd_d_model_rejected(self):
        with pytest.raises(ValueError, match="even"):
            positional_encoding(4, 7)


class TestForward:
    def test_output_shape(self):
        model = tiny_clf()
        for batch in (1, 3, 7):
            out = model.forward(Prng(2).gaussian((batch, 8, 3)))
            assert out.shape == (batch, 11)

    def test_eval_deterministic(self):
        model = tiny_clf()
        x = Prng(3).gaussian((4, 8, 3))
        a = model.forward(x).data
        b = model.forward(x).data
        assert np.array_equal(a, b)

    def test_batch_permutation_equivariance(self):
        model = tiny_clf()
        x = Prng(4).gaussian((6, 8, 3))
        perm = np.array([3, 0, 5, 1, 4, 2])
        direct = model.forward(x[perm]).data
        permuted = model.forward(x).data[perm]
        assert np.allclose(direct, permuted, atol=1e-12)

    def test_dropout_zero_equals_eval(self):
        model = tiny_clf()
        x = Prng(5).gaussian((3, 8, 3))
        trained = model.forward(x, training=True, prng=Prng(0)).data
        evaled = model.forward(x, training=False).data
        assert np.array_equal(trained, evaled)

    def test_dropout_active_changes_output(self):
        model = tiny_clf(dropout=0.5)
        x = Prng(6).gaussian((3, 8, 3))
        assert not np.array_equal(
            model.forward(x, training=True, prng=Prng(1)).data, model.forward(x).data
        )

    def test_same_seed_same_init(self):
        a, b = tiny_clf(9), tiny_clf(9)
        for (na, ta), (nb, tb) in zip(a.named_params(), b.named_params()):
            assert na == nb and np.array_equal(ta.data, tb.data)

    def test_grad_check_tiny(self):
        model = tiny_clf(2)
        x = Prng(7).gaussian((2, 8, 3))
        y = np.array([3, 7])
        assert grad_check(lambda: ad.cross_entropy(model.forward(x), y), model.params()) < 1e-5


class TestPredict:
    def test_count_and_argmax_oracle(self):
        model = tiny_clf()
        ds = tiny_dataset(9)
        pred = predict(model, ds.windows)
        scores = predict_scores(model, ds.windows)
        assert len(pred) == 9
        assert np.array_equal(pred, np.argmax(scores, axis=1))

    def test_shift_invariance(self):
        scores = np.array([[0.2, 0.9, 0.1], [0.5, 0.5, 0.4]])
        assert np.array_equal(np.argmax(scores, 1), np.argmax(scores + 10.0, 1))

    def test_tie_breaks_lowest_index(self):
        assert int(np.argmax(np.array([1.0, 1.0, 0.5]))) == 0


class TestTrain:
    def test_patience_one_worsening_stops_after_two(self):
        ds = tiny_dataset(8)
        model = tiny_clf(3)
        # min_delta so large that no epoch after the first counts as improvement
        tcfg = TrainConfig(
            lr_max=1e-3, lr_min=1e-4, max_epochs=50, batch_size=4, patience=1,
            min_delta=1e9, seed=0,
        )
        result = train(model, ds, ds, tcfg)
        assert result.epochs_run == 2
        assert result.best_epoch == 1
        # restored weights reproduce epoch-1 validation loss
        restored_val = _val_loss(model, ds)
        assert restored_val == pytest.approx(result.history[0][2], abs=1e-12)

    def test_history_bounded_and_shaped(self):
        ds = tiny_dataset(8)
        result = train(
            tiny_clf(4), ds, ds,
            TrainConfig(max_epochs=5, batch_size=4, patience=5, min_delta=0.0, seed=1),
        )
        assert len(result.history) <= 5
        epochs, _, _, lrs = zip(*result.history)
        assert list(epochs) == list(range(1, len(result.history) + 1))
        assert lrs[0] == pytest.approx(1e-3)

    def test_best_epoch_is_min_val_loss(self):
        ds = tiny_dataset(12)
        result = train(
            tiny_clf(5), ds, ds,
            TrainConfig(lr_max=3e-3, max_epochs=12, batch_size=4, patience=12, min_delta=0.0, seed=2),
        )
        vals = [row[2] for row in result.history]
        assert vals[result.best_epoch - 1] == min(vals)

    def test_separable_set_reaches_high_accuracy(self):
        ds = tiny_dataset(24, seed=3)
        model = tiny_clf(6, d_model=16, ffn_dim=32)
        train(
            model, ds, ds,
            TrainConfig(lr_max=3e-3, lr_min=1e-4, max_epochs=60, batch_size=8,
                        patience=60, min_delta=0.0, seed=3),
        )
        acc = float((predict(model, ds.windows) == ds.labels).mean())
        assert acc >= 0.9

    def test_deterministic_runs(self):
        ds = tiny_dataset(8)
        tcfg = TrainConfig(max_epochs=3, batch_size=4, patience=3, min_delta=0.0, seed=4)
        ra = train(tiny_clf(7), ds, ds, tcfg)
        rb = train(tiny_clf(7), ds, ds, tcfg)
        assert ra.history == rb.history

    def test_empty_split_rejected(self):
        ds = tiny_dataset(4)
        empty = WindowedDataset(np.empty((0, 8, 3)), np.empty(0, dtype=np.int64))
        with pytest.raises(ValueError):
            train(tiny_clf(), ds, empty, TrainConfig())


def _val_loss(model, ds):
    logits = model.forward(ds.windows)
    return float(ad.cross_entropy(logits, ds.labels).data)


class TestTraces:
    def test_schedule_epochs(self):
        assert trace_epochs(2) == {"initial": 0, "early-mid": 1, "late-mid": 2, "end": 2}
        assert trace_epochs(9) == {"initial": 0, "early-mid": 3, "late-mid": 6, "end": 9}
        assert trace_epochs(100) == {"initial": 0, "early-mid": 34, "late-mid": 67, "end": 100}

    def test_trace_shape_and_stochasticity(self):
        model = tiny_clf(8, layers=2, heads=2)
        probe = Prng(9).gaussian((4, 8, 3))
        traces = attention_trace(model, probe, "initial")
        assert len(traces) == 2 * 2  # layers x heads
        for tr in traces:
            assert tr.weights.shape == (9, 9)  # window_len + 1 with CLS at 0
            assert np.allclose(tr.weights.sum(axis=-1), 1.0, atol=1e-6)
            assert np.all(tr.weights >= 0)
            assert tr.period == "initial"

    def test_traces_deterministic_per_seed(self):
        probe = Prng(10).gaussian((2, 8, 3))
        ta = attention_trace(tiny_clf(11), probe, "end")
        tb = attention_trace(tiny_clf(11), probe, "end")
        for a, b in zip(ta, tb):
            assert np.array_equal(a.weights, b.weights)

    def test_training_captures_four_periods(self):
        ds = tiny_dataset(8)
        result = train(
            tiny_clf(12), ds, ds,
            TrainConfig(max_epochs=4, batch_size=4, patience=4, min_delta=0.0, seed=5),
            probe=ds.windows[:2],
        )
        periods = {tr.period for tr in result.traces}
        assert periods == set(PERIOD_TAGS)
        # one trace per period/layer/head
        assert len(result.traces) == 4 * 1 * 2


def test_cross_entropy_uniform_is_log11():
    logits = ad.cross_entropy(ad.Tensor(np.zeros((5, 11))), np.arange(5) % 11)
    assert float(logits.data) == pytest.approx(np.log(11), abs=1e-9)


def test_config_validation():
    with pytest.raises(ValueError):
        TransformerConfig(d_model=10, heads=3)
    with pytest.raises(ValueError):
        TransformerConfig(layers=0)
    with pytest.raises(ValueError):
        TrainConfig(patience=0)
