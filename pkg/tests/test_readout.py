import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrcforecast.data import TimeSeries, gen_synthetic
from qrcforecast.errors import PipelineError, ReadoutError, SpecHashWarning
from qrcforecast.features import FeatureMatrix
from qrcforecast.readout import (
    ReadoutModel,
    append_bias,
    cross_series_evaluate,
    cross_series_predict,
    delay_embed,
    design_matrix,
    forecast_pipeline,
    predict,
    ridge_fit,
    train_readout,
)
from qrcforecast.reports import ForecastReport, content_hash
from qrcforecast.reservoir import ReservoirSpec

FAST = ReservoirSpec(n_qubits=2, n_steps=300, seed=1)


def fm(values, **kw):
    return FeatureMatrix(np.asarray(values, dtype=float), **kw)


def normal_equations(W, Y, lam):
    # Independent closed form: X = Y W^T (W W^T + lam I)^-1 via an explicit inverse.
    return Y @ W.T @ np.linalg.inv(W @ W.T + lam * np.eye(W.shape[0]))


# --- embedding and bias ---


def test_delay_zero_is_identity():
    F = fm(np.arange(6).reshape(2, 3))
    np.testing.assert_array_equal(delay_embed(F, 0).values, F.values)


def test_delay_one_columns():
    out = delay_embed(fm([[0.0, 1.0, 2.0, 3.0]]), 1)
    np.testing.assert_array_equal(out.values.T, [[1, 0], [2, 1], [3, 2]])


def test_delay_shape_and_errors():
    assert delay_embed(fm(np.zeros((2, 10))), 6).shape == (14, 4)
    with pytest.raises(ReadoutError):
        delay_embed(fm(np.zeros((2, 6))), 6)
    with pytest.raises(ReadoutError):
        delay_embed(fm(np.zeros((2, 8))), -1)


def test_append_bias():
    out = append_bias(fm(np.arange(6).reshape(2, 3)))
    assert out.shape == (3, 3) and out.bias
    np.testing.assert_array_equal(out.values[-1], [1, 1, 1])
    with pytest.raises(ReadoutError):
        append_bias(out)
    with pytest.raises(ReadoutError):
        append_bias(fm(np.zeros((2, 0))))


def test_design_matrix_squared():
    W = design_matrix(fm([[1.0, 2.0, 3.0]]), 1, squared=True)
    np.testing.assert_array_equal(W.values[:, 0], [2, 1, 4, 1, 1])


# --- ridge ---


def test_ridge_identity():
    W = fm(np.eye(2))
    np.testing.assert_allclose(ridge_fit(W, [2.0, 3.0], 0.0).coefficients, [2, 3])
    np.testing.assert_allclose(ridge_fit(W, [2.0, 3.0], 1e-4).coefficients, np.array([2, 3]) / (1 + 1e-4), rtol=1e-14)


@pytest.mark.parametrize("shape", [(5, 50), (30, 200)])
def test_ridge_matches_normal_equations(shape):
    rng = np.random.default_rng(shape[0])
    W, Y = rng.normal(size=shape), rng.normal(size=shape[1])
    X = ridge_fit(fm(W), Y, 1e-4).coefficients
    assert np.max(np.abs(X - normal_equations(W, Y, 1e-4))) < 1e-10


def test_ridge_shrinkage_monotone():
    rng = np.random.default_rng(7)
    for _ in range(20):
        W, Y = rng.normal(size=(8, 40)), rng.normal(size=40)
        norms = [np.linalg.norm(ridge_fit(fm(W), Y, lam).coefficients) for lam in (1e-6, 1e-4, 1e-2, 1)]
        assert all(a >= b for a, b in zip(norms, norms[1:]))


def test_ridge_small_lambda_is_least_squares():
    rng = np.random.default_rng(8)
    W, Y = rng.normal(size=(6, 60)), rng.normal(size=60)
    lstsq = np.linalg.lstsq(W.T, Y, rcond=None)[0]
    np.testing.assert_allclose(ridge_fit(fm(W), Y, 1e-12).coefficients, lstsq, rtol=1e-6)


def test_ridge_errors():
    with pytest.raises(ReadoutError):
        ridge_fit(fm(np.ones((2, 3))), np.ones(3), 0.0)
    with pytest.raises(ReadoutError):
        ridge_fit(fm([[1.0, math.nan]]), [1.0, 2.0], 1e-4)
    with pytest.raises(ReadoutError):
        ridge_fit(fm(np.eye(2)), [1.0], 1e-4)


def test_predict_examples():
    model = ReadoutModel(np.array([1.0, 0.0]), 0.0, 0)
    np.testing.assert_array_equal(predict(model, fm([[3.0], [4.0]])), [3.0])
    zero = ReadoutModel(np.zeros(2), 0.0, 0)
    np.testing.assert_array_equal(predict(zero, fm(np.ones((2, 5)))), 0)
    with pytest.raises(ReadoutError):
        predict(zero, fm(np.ones((3, 5))))


def test_predict_reproduces_target_in_span():
    rng = np.random.default_rng(9)
    W = rng.normal(size=(4, 30))
    Y = np.array([1.0, -2.0, 0.5, 3.0]) @ W
    pred = predict(ridge_fit(fm(W), Y, 1e-14), fm(W))
    assert np.max(np.abs(pred - Y)) < 1e-8


def test_predict_warns_on_hash_mismatch():
    model = ReadoutModel(np.ones(1), 1e-4, 0, spec_hash="aaaa")
    with pytest.warns(SpecHashWarning):
        out = predict(model, fm([[2.0]], spec_hash="bbbb"))
    assert out[0] == 2.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.floats(1e-6, 10))
def test_ridge_residual_orthogonality(seed, lam):
    rng = np.random.default_rng(seed)
    W, Y = rng.normal(size=(4, 25)), rng.normal(size=25)
    X = ridge_fit(fm(W), Y, lam).coefficients
    # Stationarity of the ridge objective: W (Y - X W) = lam X.
    np.testing.assert_allclose(W @ (Y - X @ W), lam * X, atol=1e-9)


def test_model_json_round_trip():
    model = ReadoutModel(np.array([0.1, -2.0]), 1e-4, 6, "abcd", 3, True, False, 20.0)
    back = ReadoutModel.from_json(model.to_json())
    np.testing.assert_array_equal(back.coefficients, model.coefficients)
    assert json.loads(model.to_json())["lambda"] == 1e-4
    assert (back.delta, back.spec_hash, back.seed, back.scale) == (6, "abcd", 3, 20.0)


# --- pipeline ---


def sine(n=160, phase=0.0):
    return gen_synthetic("sine", n, phase=phase)


def test_pipeline_alignment_and_counts():
    rep = forecast_pipeline(sine(), FAST, delta=3)
    assert (rep.n_train, rep.n_test) == (96, 64)
    assert rep.test.n_points == 64
    assert rep.train.n_points == 96 - 1 - 3
    preds = rep.predictions
    assert preds["index"][0] == 4 and preds["index"][-1] == 159
    np.testing.assert_allclose(preds["actual"], sine().values[4:] / sine().values.max())
    assert preds["partition"].count("test") == 64


def test_pipeline_sine_quality():
    rep = forecast_pipeline(sine(), FAST, delta=6)
    assert rep.test.da >= 0.95
    assert rep.test.nmse <= 0.05


def test_pipeline_deterministic():
    a = forecast_pipeline(sine(), FAST, delta=2).to_dict()
    b = forecast_pipeline(sine(), FAST, delta=2).to_dict()
    assert a["report_hash"] == b["report_hash"]
    assert content_hash(a) == content_hash(b)


def test_pipeline_constant_series():
    rep = forecast_pipeline(TimeSeries(np.full(60, 3.0)), FAST, delta=2)
    assert np.ptp(rep.predictions["predicted"]) < 1e-9
    assert math.isnan(rep.test.da)
    assert any("flat series" in note for note in rep.test.diagnostics)


def test_pipeline_errors_tagged_with_stage():
    with pytest.raises(PipelineError, match=r"\[split\]"):
        forecast_pipeline(sine(12), FAST, delta=6)
    with pytest.raises(PipelineError, match=r"\[normalize\]"):
        forecast_pipeline(TimeSeries([-1.0, -2.0, -3.0]), FAST, delta=0)


def test_pipeline_causal():
    base = sine(100)
    moved = TimeSeries(base.values.copy())
    moved.values[90] = 0.2  # test period, so the fit is unchanged
    a = forecast_pipeline(base, FAST, delta=3, fraction=0.8).predictions["predicted"]
    b = forecast_pipeline(moved, FAST, delta=3, fraction=0.8).predictions["predicted"]
    # Prediction j uses inputs up to index j + delta; index 90 first enters at j = 87.
    np.testing.assert_array_equal(a[:87], b[:87])
    assert a[87] != b[87]


def test_observable_switch_invariance():
    spec = ReservoirSpec(n_qubits=2, n_steps=300, seed=2)
    a = forecast_pipeline(sine(), spec, delta=1, lam=1e-12).predictions["predicted"]
    b = forecast_pipeline(sine(), spec.replace(observable="excited_population"), delta=1, lam=1e-12)
    assert np.max(np.abs(np.array(a) - b.predictions["predicted"])) < 1e-8


def test_report_round_trip():
    rep = forecast_pipeline(sine(), FAST, delta=2)
    back = ForecastReport.from_dict(json.loads(rep.to_json()))
    assert back.to_dict()["report_hash"] == rep.to_dict()["report_hash"]


def test_cross_series_same_series_matches_training():
    model, params, y, pred = train_readout(sine(), FAST, delta=4)
    targets, again = cross_series_evaluate(model, params, sine(), FAST)
    np.testing.assert_array_equal(again, pred)
    np.testing.assert_array_equal(targets, y)
    assert again.size == len(sine()) - 1 - 4


def test_cross_series_phase_shift():
    from qrcforecast.metrics import direction_accuracy

    model, params, _, _ = train_readout(sine(), FAST, delta=6)
    for phase in (0.5, 1.3):
        y, pred = cross_series_evaluate(model, params, sine(phase=phase), FAST)
        assert direction_accuracy(y, pred)[0] >= 0.9


def test_cross_series_hash_warning_and_length():
    model, params, _, _ = train_readout(sine(), FAST, delta=4)
    with pytest.warns(SpecHashWarning):
        out = cross_series_predict(model, params, sine(), FAST.replace(seed=99))
    assert out.size == len(sine()) - 5
    with pytest.raises(ReadoutError):
        cross_series_predict(model, params, sine(5), FAST)


def test_cross_series_reuse_scale():
    model, params, _, _ = train_readout(sine(), FAST, delta=2)
    doubled = TimeSeries(2 * sine().values)
    _, own = cross_series_evaluate(model, params, doubled, FAST)
    _, reused = cross_series_evaluate(model, params, doubled, FAST, reuse_scale=True)
    assert not np.allclose(own, reused)
