import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import erfc

from subdiff.special import SeriesDivergenceError, gamma_fn, mittag_leffler


def ml_oracle(beta, z):
    """Independent extended-precision series."""
    with mpmath.workdps(60):
        b, zz = mpmath.mpf(beta), mpmath.mpf(z)
        return float(mpmath.nsum(lambda m: zz**m / mpmath.gamma(b * m + 1), [0, mpmath.inf]))


def test_ml_at_zero_is_one():
    for beta in (0.1, 0.2, 0.5, 0.8, 1.0):
        assert mittag_leffler(beta, 0.0) == 1.0


def test_ml_beta_one_is_exp():
    assert mittag_leffler(1.0, 1.0) == pytest.approx(math.e, rel=1e-15)
    assert mittag_leffler(1.0, -3.0) == pytest.approx(math.exp(-3.0), rel=1e-15)


def test_ml_half_against_erfc():
    # E_{1/2}(z) = exp(z^2) erfc(-z)
    for z in (-1.0, -0.3, -2.0, -4.0, 0.5):
        expected = math.exp(z * z) * erfc(-z)
        assert mittag_leffler(0.5, z) == pytest.approx(expected, rel=1e-13)
    assert mittag_leffler(0.5, -1.0) == pytest.approx(0.427584, abs=5e-7)


@pytest.mark.parametrize("beta, z", [(0.2, -0.87), (0.8, -0.57), (0.5, -5.0), (0.8, -20.0), (0.9, -50.0), (0.3, -2.0)])
def test_ml_against_extended_precision(beta, z):
    assert mittag_leffler(beta, z) == pytest.approx(ml_oracle(beta, z), rel=1e-12)


def test_ml_vectorised_matches_scalar():
    z = np.array([[-0.1, -0.5], [-0.1, -1.0]])
    out = mittag_leffler(0.6, z)
    assert out.shape == z.shape
    for idx in np.ndindex(z.shape):
        assert out[idx] == mittag_leffler(0.6, float(z[idx]))


@pytest.mark.parametrize("beta, lo", [(0.5, -5.0), (0.8, -5.0), (0.2, -3.0)])
def test_ml_decreasing_on_negative_axis(beta, lo):
    z = np.linspace(lo, 0.0, 13)
    vals = mittag_leffler(beta, z)
    assert np.all(np.diff(vals) > 0)


def test_ml_signals_when_series_cannot_settle():
    # the terms for beta = 0.2 peak far beyond double range at z = -5
    with pytest.raises(SeriesDivergenceError):
        mittag_leffler(0.2, -5.0)


@pytest.mark.parametrize("beta", [0.0, 1.5, -0.1])
def test_ml_rejects_bad_order(beta):
    with pytest.raises(ValueError):
        mittag_leffler(beta, -1.0)


def test_gamma_values():
    assert gamma_fn(1.0) == 1.0
    assert gamma_fn(0.5) == pytest.approx(1.7724538509, rel=1e-10)
    assert gamma_fn(1.5) == pytest.approx(0.8862269255, rel=1e-10)


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5])
def test_gamma_rejects_nonpositive(x):
    with pytest.raises(ValueError):
        gamma_fn(x)


@given(st.sampled_from([0.1 * i for i in range(1, 20)]))
def test_gamma_recurrence(x):
    assert gamma_fn(x + 1) == pytest.approx(x * gamma_fn(x), rel=1e-12)
