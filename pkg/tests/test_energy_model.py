import io
import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memenergy.energy_model import (
    EnergyModelCoefficients,
    EnergySample,
    fit_energy_model,
    load_model,
    published_model,
    parse_samples,
    predict_energy,
    r_squared_of,
    save_model,
)
from memenergy.errors import (
    DegenerateDesignError,
    EnergyWarning,
    InputError,
    InsufficientDataError,
    InvalidModelError,
    ZeroVarianceError,
)

PUBLISHED = published_model()
coef = st.floats(min_value=-50, max_value=50, allow_nan=False, allow_infinity=False)
tokens = st.integers(min_value=0, max_value=5000)


@pytest.mark.parametrize(
    "t_in, t_out, expected",
    [
        (100, 1, 13.453922),  # 4.2933 + 9.109322 + 0.0513
        (500, 200, 1894.6309),  # 21.4665 + 1821.8644 + 51.3
        (0, 0, 0.0),
    ],
)
def test_predict_energy_published_coefficients(t_in, t_out, expected):
    assert predict_energy(PUBLISHED, t_in, t_out) == pytest.approx(expected, rel=1e-12, abs=0)


def test_predict_zero_tokens_is_exactly_zero():
    assert predict_energy(EnergyModelCoefficients(3.0, -2.0, 7.5), 0, 0) == 0.0


def test_non_finite_coefficients_rejected():
    with pytest.raises(InvalidModelError):
        EnergyModelCoefficients(math.nan, 1.0, 1.0)
    with pytest.raises(InvalidModelError):
        EnergyModelCoefficients(1.0, math.inf, 1.0)


def test_r_squared_above_one_rejected():
    with pytest.raises(InvalidModelError):
        EnergyModelCoefficients(1.0, 1.0, 1.0, r_squared=1.5)


def test_negative_prediction_warns_but_is_not_clamped():
    model = EnergyModelCoefficients(-1.0, 0.5, 0.0)
    with pytest.warns(EnergyWarning, match="negative energy"):
        assert predict_energy(model, 10, 2) == -9.0


def test_negative_token_counts_rejected():
    with pytest.raises(InputError):
        predict_energy(PUBLISHED, -1, 3)


@given(a=coef, b=coef, c=coef, t=tokens)
def test_zero_input_isolates_output_term(a, b, c, t):
    m = EnergyModelCoefficients(a, b, c)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EnergyWarning)
        assert predict_energy(m, 0, t) == b * t


@given(
    a=st.integers(-1000, 1000), b=st.integers(-1000, 1000), c=st.integers(-1000, 1000),
    x1=tokens, x2=tokens, y=tokens,
)
def test_linear_in_each_argument(a, b, c, x1, x2, y):
    # integer coefficients and tokens keep every product exact in float64
    m = EnergyModelCoefficients(float(a), float(b), float(c))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EnergyWarning)
        lhs_in = predict_energy(m, x1 + x2, y) - predict_energy(m, x2, y)
        assert lhs_in == predict_energy(m, x1, y) - predict_energy(m, 0, y)
        lhs_out = predict_energy(m, y, x1 + x2) - predict_energy(m, y, x2)
        assert lhs_out == predict_energy(m, y, x1) - predict_energy(m, y, 0)


# -- fitting -----------------------------------------------------------------


def _grid_samples(model, points):
    return [EnergySample(ti, to, predict_energy(model, ti, to)) for ti, to in points]


def test_fit_recovers_noiseless_coefficients():
    truth = EnergyModelCoefficients(0.05, 9.0, 0.0005)
    rng = np.random.default_rng(7)
    points = {(int(a), int(b)) for a, b in zip(rng.integers(1, 3000, 40), rng.integers(1, 800, 40))}
    points = sorted(points)[:20]
    fitted = fit_energy_model(_grid_samples(truth, points), "synthetic")
    for got, want in zip(fitted.coefficients, truth.coefficients):
        assert got == pytest.approx(want, rel=1e-8)
    assert fitted.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fitted.model_id == "synthetic"


def test_fit_three_sample_hand_solution():
    samples = [EnergySample(1, 0, 2.0), EnergySample(0, 1, 3.0), EnergySample(1, 1, 5.5)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EnergyWarning)
        fitted = fit_energy_model(samples)
    assert fitted.coefficients == pytest.approx((2.0, 3.0, 0.5), rel=1e-12)


def test_fit_identical_samples_is_degenerate():
    with pytest.raises(DegenerateDesignError):
        fit_energy_model([EnergySample(100, 50, 500.0)] * 5)


def test_fit_collinear_design_is_degenerate():
    # t_out == 2 * t_in makes the first two columns proportional
    samples = [EnergySample(i, 2 * i, float(i)) for i in range(1, 10)]
    with pytest.raises(DegenerateDesignError):
        fit_energy_model(samples)


def test_fit_zero_column_is_degenerate():
    with pytest.raises(DegenerateDesignError, match="t_out"):
        fit_energy_model([EnergySample(i, 0, float(i)) for i in range(1, 6)])


def test_fit_needs_three_samples():
    with pytest.raises(InsufficientDataError):
        fit_energy_model([EnergySample(1, 1, 1.0), EnergySample(2, 3, 4.0)])


def test_fit_flags_unusual_coefficients():
    truth = EnergyModelCoefficients(5.0, 1.0, 0.1)
    with pytest.warns(EnergyWarning, match="alpha_out does not exceed"):
        fit_energy_model(_grid_samples(truth, [(1, 2), (3, 1), (4, 5), (7, 2)]))


def test_fit_is_least_squares_optimum():
    rng = np.random.default_rng(3)
    truth = PUBLISHED
    samples = []
    for ti, to in zip(rng.integers(10, 2000, 60), rng.integers(1, 500, 60)):
        e = predict_energy(truth, ti, to) * (1 + 0.05 * rng.standard_normal())
        samples.append(EnergySample(int(ti), int(to), max(e, 0.0)))
    fitted = fit_energy_model(samples)
    best = r_squared_of(samples, fitted)
    for _ in range(200):
        perturbed = EnergyModelCoefficients(
            *(c * (1 + 1e-3 * rng.standard_normal()) for c in fitted.coefficients)
        )
        assert r_squared_of(samples, perturbed) <= best
    # independent check against numpy's SVD-based least squares
    X = np.array([[s.t_in, s.t_out, s.t_in * s.t_out] for s in samples], dtype=float)
    y = np.array([s.energy for s in samples])
    ref, *_ = np.linalg.lstsq(X, y, rcond=None)
    assert fitted.coefficients == pytest.approx(tuple(ref), rel=1e-9)


# -- r squared ---------------------------------------------------------------


def test_r_squared_exact_fit_is_one():
    samples = _grid_samples(PUBLISHED, [(10, 1), (20, 5), (300, 40)])
    assert r_squared_of(samples, PUBLISHED) == pytest.approx(1.0, abs=1e-15)


def test_r_squared_zero_model_hand_value():
    samples = [EnergySample(1, 2, 1.0), EnergySample(3, 4, 3.0)]
    assert r_squared_of(samples, EnergyModelCoefficients(0.0, 0.0, 0.0)) == pytest.approx(-4.0)


def test_r_squared_zero_variance():
    with pytest.raises(ZeroVarianceError):
        r_squared_of([EnergySample(1, 2, 5.0), EnergySample(3, 4, 5.0)], PUBLISHED)


# -- file formats ------------------------------------------------------------


def test_parse_samples_skips_comments_and_crlf():
    text = "# measured 2024\r\nt_in,t_out,joules\r\n\r\n100,1,13.45\r\n# note\r\n5,6,7\r\n"
    samples = parse_samples(io.StringIO(text))
    assert samples == [EnergySample(100, 1, 13.45), EnergySample(5, 6, 7.0)]


@pytest.mark.parametrize(
    "body, match",
    [
        ("t_in,t_out,joules\n1.5,2,3\n", "integers"),
        ("t_in,t_out,joules\n-1,2,3\n", "non-negative"),
        ("t_in,t_out,joules\n1,2,abc\n", "not a number"),
        ("t_in,t_out,joules\n1,2,-3\n", "non-negative"),
        ("a,b,c\n1,2,3\n", "header"),
        ("", "empty"),
        ("t_in,t_out,joules\n1,2\n", "fields"),
    ],
)
def test_parse_samples_errors(body, match):
    with pytest.raises(InputError, match=match):
        parse_samples(io.StringIO(body))


def test_model_json_round_trip(tmp_path):
    path = tmp_path / "m.json"
    model = EnergyModelCoefficients(0.1, 2.0, 3e-4, "x", 0.97)
    save_model(model, path)
    data = json.loads(path.read_text())
    assert list(data) == ["model_id", "alpha_in", "alpha_out", "alpha_cross", "r_squared"]
    assert load_model(path) == model


def test_model_json_missing_field(tmp_path):
    path = tmp_path / "m.json"
    path.write_text('{"alpha_in": 1, "alpha_out": 2}')
    with pytest.raises(InputError, match="alpha_cross"):
        load_model(path)


@settings(max_examples=50)
@given(a=coef, b=coef, c=coef)
def test_diagnostics_never_raise(a, b, c):
    assert isinstance(EnergyModelCoefficients(a, b, c).diagnostics(), list)
