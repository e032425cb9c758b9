import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from subdiff.cq import (
    CQContext,
    DividedDifferenceInstability,
    compose_check,
    cq_weight,
    cq_weight_divdiff,
    cq_weight_matrix,
    cq_weights_uniform,
    divided_difference_power,
)
from subdiff.l1 import L1Context, nodal_weights
from subdiff.mesh import TimeMesh, graded_mesh, uniform_mesh


def mesh_of(steps):
    return TimeMesh(np.concatenate([[0.0], np.cumsum(steps)]))


def test_diagonal_weight_closed_form():
    ctx = CQContext(mesh_of([0.3, 0.1]), 0.5)
    assert cq_weight(ctx, 1, 1) == pytest.approx(0.3162278, abs=5e-8)
    assert cq_weight_divdiff(ctx, 1, 1) == pytest.approx(math.sqrt(0.1), rel=1e-14)


def test_lag_one_uniform_weight():
    # kappa^(1-beta) * (1-beta) for the first off-diagonal coefficient
    ctx = CQContext(uniform_mesh(1.0, 10), 0.5)
    expected = 0.1**0.5 * 0.5
    assert cq_weights_uniform(0.1, 1, 0.5) == pytest.approx(expected, rel=1e-15)
    assert cq_weight(ctx, 5, 4) == pytest.approx(expected, rel=1e-9)
    assert cq_weight_divdiff(ctx, 5, 4) == pytest.approx(expected, rel=1e-12)


def test_uniform_coefficients():
    assert cq_weights_uniform(1.0, 0, 0.5) == 1.0
    assert cq_weights_uniform(0.25, 0, 0.3) == pytest.approx(0.25**0.7)
    assert cq_weights_uniform(1.0, 1, 0.5) == 0.5
    assert cq_weights_uniform(1.0, 2, 0.5) == 0.375
    with pytest.raises(ValueError):
        cq_weights_uniform(1.0, -1, 0.5)


def test_divdiff_unit_steps():
    ctx = CQContext(uniform_mesh(4.0, 4), 0.5)
    assert cq_weight_divdiff(ctx, 1, 0) == pytest.approx(0.5, rel=1e-14)


def test_two_distinct_steps_agree():
    ctx = CQContext(mesh_of([0.1, 0.2]), 0.5)
    assert cq_weight(ctx, 1, 0) == pytest.approx(cq_weight_divdiff(ctx, 1, 0), rel=1e-8)


def test_divided_difference_of_power_matches_polynomial_rule():
    # [x0,...,xm] s^m = 1 and [x0..x2] s^2 = 1 regardless of nodes
    assert float(divided_difference_power([0.3, 1.1, 2.0], 2.0)) == pytest.approx(1.0, rel=1e-25 + 1e-14)
    assert float(divided_difference_power([0.5, 0.5, 0.5], 3.0)) == pytest.approx(3 * 0.5, rel=1e-14)
    with pytest.raises(ValueError):
        divided_difference_power([0.0, 1.0], 0.5)


def test_divdiff_span_limit():
    ctx = CQContext(uniform_mesh(1.0, 30), 0.5)
    with pytest.raises(DividedDifferenceInstability):
        cq_weight_divdiff(ctx, 26, 0)


@pytest.mark.parametrize("beta", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("k", [1.0, 2.0])
def test_three_routes_agree(beta, k):
    mesh = graded_mesh(1.0, 20, k)
    ctx = CQContext(mesh, beta)
    W = cq_weight_matrix(ctx)
    for n in range(20):
        for j in range(n + 1):
            dd = cq_weight_divdiff(ctx, n, j)
            assert W[n, j] == pytest.approx(dd, rel=1e-8)
            if k == 1.0:
                assert dd == pytest.approx(cq_weights_uniform(mesh.steps[0], n - j, beta), rel=1e-8)
    for n, j in [(19, 0), (10, 3), (7, 7)]:
        assert cq_weight(ctx, n, j) == pytest.approx(W[n, j], rel=1e-8)


@given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=12), st.floats(0.05, 0.95))
def test_weights_positive_and_routes_agree_on_random_steps(steps, beta):
    ctx = CQContext(mesh_of(steps), beta)
    n = len(steps) - 1
    for j in range(n + 1):
        a, b = cq_weight(ctx, n, j), cq_weight_divdiff(ctx, n, j)
        assert a > 0 and b > 0
        assert a == pytest.approx(b, rel=1e-8)


def test_weight_index_checked():
    ctx = CQContext(uniform_mesh(1.0, 3), 0.5)
    with pytest.raises(IndexError):
        cq_weight(ctx, 3, 0)
    with pytest.raises(IndexError):
        cq_weight_divdiff(ctx, 1, 2)


def test_context_validation():
    with pytest.raises(ValueError):
        CQContext(uniform_mesh(1.0, 3), 1.2)
    with pytest.raises(ValueError):
        CQContext(uniform_mesh(1.0, 3), 0.5, quad_tol=0.0)


def test_composition_constant_data_zero_defect():
    ctx = CQContext(uniform_mesh(1.0, 8), 0.5)
    assert compose_check(ctx, 7, data=np.full(9, 3.0)) == 0.0


@pytest.mark.parametrize("k", [1.0, 2.0])
def test_composition_rule(k):
    ctx = CQContext(graded_mesh(1.0, 8, k), 0.4)
    for n in range(8):
        assert compose_check(ctx, n, samples=3, seed=n) <= 1e-8


def test_cq_tracks_l1_far_from_diagonal():
    # both discretise the same kernel; their relative gap shrinks with the lag
    mesh = uniform_mesh(1.0, 64)
    beta = 0.5
    W = cq_weight_matrix(CQContext(mesh, beta))
    l1 = nodal_weights(L1Context(mesh, beta), 63)
    lags = np.arange(8, 64)
    gaps = np.abs(W[63, 63 - lags] - l1[63 - lags]) / l1[63 - lags]
    C = np.max(gaps * lags)
    print(f"observed constant C = {C:.4f}")
    assert np.all(np.diff(gaps) < 0)
    assert np.isfinite(C)
