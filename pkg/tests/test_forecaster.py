import numpy as np
import pytest

from conftest import SMALL
from metamorph import faults
from metamorph.errors import InsufficientData, ShapeMismatch, ZeroRange
from metamorph.forecaster import TrainConfig, evaluate, load_model, save_model, train
from metamorph.lstm import forward, mse
from metamorph.series import TimeSeries, make_sequences, synth_series


def test_config_validation():
    for bad in ({"time_steps": 0}, {"epochs": 0}, {"learning_rate": 0.0}, {"seed": -1}, {"clip_norm": -1}):
        with pytest.raises(ValueError):
            TrainConfig(**bad)
    assert TrainConfig().replace(epochs=3).epochs == 3


def test_same_seed_same_model(small_split):
    train_s, _ = small_split
    a, b = train(train_s, SMALL), train(train_s, SMALL)
    assert a.params.bit_equal(b.params)
    assert a.final_train_loss == b.final_train_loss
    c = train(train_s, SMALL.replace(seed=1))
    assert not a.params.bit_equal(c.params)


def test_training_reduces_loss(small_split):
    train_s, _ = small_split
    before = train(train_s, SMALL.replace(epochs=1)).final_train_loss
    after = train(train_s, SMALL.replace(epochs=15)).final_train_loss
    assert after < before


def test_counts_and_short_batch(small_split):
    train_s, _ = small_split
    cfg = SMALL.replace(epochs=1, batch_size=16)
    n = 16 + cfg.time_steps + cfg.horizon - 2
    assert train(train_s.head(n), cfg).n_train_sequences == 15
    with faults.injected("drop-last-short-batch"):
        assert train(train_s.head(n), cfg).n_train_sequences == 0


def test_final_train_loss_is_mse_over_all_windows(small_model, small_split):
    train_s, _ = small_split
    m = small_model
    ds = make_sequences(m.normalizer.normalize(train_s.values), m.config.time_steps, m.config.horizon)
    assert m.final_train_loss == pytest.approx(mse(forward(m.params, ds.inputs)[0], ds.targets), abs=1e-15)


def test_evaluate_uses_training_normalizer(small_model, small_split):
    _, val = small_split
    res = evaluate(small_model, val)
    n = small_model.normalizer
    ds = make_sequences(n.normalize(val.values), small_model.config.time_steps, small_model.config.horizon)
    pred, _ = forward(small_model.params, ds.inputs)
    assert res.n_windows == len(ds)
    assert res.validation_loss == pytest.approx(mse(pred, ds.targets), abs=1e-15)
    assert np.allclose(res.first_forecast, n.denormalize(pred[0]))
    assert np.allclose(small_model.predict(val.values[:10]), res.first_forecast)


def test_predict_checks_window_length(small_model):
    with pytest.raises(ShapeMismatch):
        small_model.predict(np.ones(3))


def test_errors():
    with pytest.raises(ZeroRange):
        train(TimeSeries.from_values(np.full(40, 7.0)), SMALL)
    with pytest.raises(InsufficientData):
        train(synth_series("linear", 11), SMALL)
    with pytest.raises(ValueError):
        train(TimeSeries.from_values([1.0, np.nan] * 20), SMALL)


def test_save_load_round_trip(tmp_path, small_model, small_split):
    path = tmp_path / "m.npz"
    save_model(small_model, path)
    back = load_model(path)
    assert back.params.bit_equal(small_model.params)
    assert back.config == small_model.config
    assert back.normalizer == small_model.normalizer
    assert back.final_train_loss == small_model.final_train_loss
    assert np.array_equal(evaluate(back, small_split[1]).first_forecast,
                          evaluate(small_model, small_split[1]).first_forecast)
    with pytest.raises(FileNotFoundError):
        load_model(tmp_path / "missing.npz")


def test_eval_off_by_one_fault_drops_a_window(small_model, small_split):
    _, val = small_split
    clean = evaluate(small_model, val).n_windows
    with faults.injected("eval-window-off-by-one"):
        assert evaluate(small_model, val).n_windows == clean - 1
