import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from subdiff.adaptive import DEFAULT_INITIAL_N, AdaptiveConfig, _splittable, adapt, mark
from subdiff.estimator import EstimateSeries, EstimatorConfig
from subdiff.mesh import TimeMesh, uniform_mesh
from subdiff.problems import ProblemSpec, make_problem
from subdiff.spatial import ScalarOperator
from subdiff.stepper import Problem


@pytest.mark.parametrize("values, theta, expected", [
    ([1, 2, 4, 3], 0.75, {2, 3}),
    ([5], 0.5, {0}),
    ([2, 2, 2], 0.9, {0, 1, 2}),
    ([0, 0, 0], 0.5, set()),
    ([1, 2, 4, 3], 0.2, {0, 1, 2, 3}),
])
def test_mark_examples(values, theta, expected):
    assert mark(values, theta) == expected


def test_mark_reads_the_series_after_the_initial_node():
    s = EstimateSeries(np.linspace(0, 1, 4), np.zeros(4), np.array([9.0, 1.0, 3.0, 2.0]))
    assert mark(s, 0.7) == {1}


def test_mark_rejects_bad_input():
    for theta in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            mark([1.0, 2.0], theta)
    with pytest.raises(ValueError):
        mark([], 0.5)


@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=40), st.floats(0.01, 0.99))
def test_marked_set_properties(values, theta):
    marked = mark(values, theta)
    top = max(values)
    if top == 0:
        assert marked == set()
        return
    assert int(np.argmax(values)) in marked
    assert all(values[n] >= theta * top for n in marked)
    assert all(values[n] < theta * top for n in set(range(len(values))) - marked)


def test_config_validation():
    with pytest.raises(ValueError):
        AdaptiveConfig(theta_mark=1.0)
    with pytest.raises(ValueError):
        AdaptiveConfig(max_intervals=DEFAULT_INITIAL_N)
    with pytest.raises(ValueError):
        AdaptiveConfig(max_intervals=16, initial_mesh=uniform_mesh(1.0, 20))
    with pytest.raises(ValueError):
        AdaptiveConfig(target=0.0)


def test_steady_state_stops_immediately():
    # U = u0 solves the scheme exactly when f = A u0, so every estimate is zero
    p = Problem(ScalarOperator(2.0), 0.5, lambda t: 4.0 + 0 * np.asarray(t), 2.0, exact=lambda t: 2.0 + 0 * np.asarray(t))
    trace = adapt(p, "l1")
    assert len(trace.iterations) == 1
    assert trace.stop_reason == "nothing marked"
    assert trace.final.N == DEFAULT_INITIAL_N
    assert trace.final.e_max_est <= 1e-14


@pytest.mark.parametrize("scheme", ["l1", "cq"])
def test_meshes_are_nested_and_grow(scheme):
    p = make_problem(ProblemSpec("ode_heaviside", 0.6))
    trace = adapt(p, scheme, AdaptiveConfig(max_intervals=64), EstimatorConfig(m_sub=2))
    assert trace.stop_reason == "budget"
    Ns = [it.N for it in trace.iterations]
    assert all(b > a for a, b in zip(Ns, Ns[1:]))
    assert Ns[0] == DEFAULT_INITIAL_N and Ns[-1] >= 64
    for a, b in zip(trace.iterations, trace.iterations[1:]):
        assert set(a.mesh.nodes) <= set(b.mesh.nodes)
    assert [row[1] for row in trace.rows()] == Ns


def test_target_stops_the_loop():
    p = make_problem(ProblemSpec("ode_ml", 0.7))
    trace = adapt(p, "l1", AdaptiveConfig(target=0.05, max_intervals=4096), EstimatorConfig(m_sub=2))
    assert trace.stop_reason == "target"
    assert trace.final.e_max_est <= 0.05
    assert all(it.e_max_est > 0.05 for it in trace.iterations[:-1])


def test_initial_mesh_and_horizon():
    p = make_problem(ProblemSpec("ode_ml", 0.5, T=2.0))
    trace = adapt(p, "l1", AdaptiveConfig(max_intervals=12), EstimatorConfig(m_sub=1))
    assert trace.iterations[0].mesh.T == 2.0
    start = uniform_mesh(0.5, 3)
    trace = adapt(p, "l1", AdaptiveConfig(max_intervals=5, initial_mesh=start), EstimatorConfig(m_sub=1))
    assert trace.iterations[0].mesh is start


def test_splittable_drops_intervals_without_a_midpoint():
    t = 0.25
    mesh = TimeMesh(np.array([0.0, t, np.nextafter(t, 1), 1.0]))
    assert _splittable(mesh, {0, 1, 2}) == {0, 2}
