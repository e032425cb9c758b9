"""Mark-and-bisect adaptive refinement driven by the L-infinity estimator."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .estimator import EstimateSeries, EstimatorConfig, estimate_series
from .mesh import TimeMesh, bisect, uniform_mesh
from .stepper import Problem, Trajectory, solve

DEFAULT_INITIAL_N = 8


def mark(series: EstimateSeries | Sequence[float], theta_mark: float) -> set[int]:
    """Intervals ``n`` with ``E2_est(t_{n+1}) >= theta_mark * max_j E2_est(t_j)``.

    ``series`` is either an :class:`EstimateSeries` or the values
    ``E2_est(t_1), ..., E2_est(t_N)`` directly. An all-zero series marks
    nothing.
    """
    if not 0 < theta_mark < 1:
        raise ValueError("theta_mark must lie in (0, 1)")
    if isinstance(series, EstimateSeries):
        values = np.asarray(series.e2_est[1:], dtype=float)
    else:
        values = np.asarray(series, dtype=float)
    if values.size == 0:
        raise ValueError("empty estimate series")
    top = values.max()
    if not top > 0:
        return set()
    return {int(n) for n in np.flatnonzero(values >= theta_mark * top)}


@dataclass(frozen=True)
class AdaptiveConfig:
    """Refinement controls.

    ``initial_mesh`` defaults to ``DEFAULT_INITIAL_N`` uniform steps over the
    problem horizon. The loop stops once the interval count reaches
    ``max_intervals``, once ``e_max_est <= target``, or when nothing is marked.
    """

    theta_mark: float = 0.75
    max_intervals: int = 1024
    target: float | None = None
    initial_mesh: TimeMesh | None = None

    def __post_init__(self) -> None:
        if not 0 < self.theta_mark < 1:
            raise ValueError("theta_mark must lie in (0, 1)")
        start = DEFAULT_INITIAL_N if self.initial_mesh is None else self.initial_mesh.N
        if self.max_intervals <= start:
            raise ValueError("max_intervals must exceed the initial interval count")
        if self.target is not None and not self.target > 0:
            raise ValueError("target must be positive")


@dataclass(frozen=True)
class AdaptiveIteration:
    mesh: TimeMesh
    trajectory: Trajectory
    series: EstimateSeries
    e_max: float | None
    e_max_est: float

    @property
    def N(self) -> int:
        return self.mesh.N


@dataclass
class AdaptiveTrace:
    iterations: list[AdaptiveIteration] = field(default_factory=list)
    stop_reason: str = ""

    @property
    def final(self) -> AdaptiveIteration:
        return self.iterations[-1]

    def rows(self):
        for i, it in enumerate(self.iterations):
            yield i, it.N, it.e_max, it.e_max_est


def _splittable(mesh: TimeMesh, marked: set[int]) -> set[int]:
    # a step of a few ulps has no representable midpoint left
    nodes = mesh.nodes
    return {n for n in marked if nodes[n] < nodes[n] + (nodes[n + 1] - nodes[n]) / 2 < nodes[n + 1]}


def adapt(
    problem: Problem,
    scheme: str,
    cfg: AdaptiveConfig = AdaptiveConfig(),
    est_cfg: EstimatorConfig = EstimatorConfig(),
) -> AdaptiveTrace:
    mesh = cfg.initial_mesh
    if mesh is None:
        mesh = uniform_mesh(problem.T if problem.T is not None else 1.0, DEFAULT_INITIAL_N)
    trace = AdaptiveTrace()
    while True:
        traj = solve(problem, mesh, scheme)
        series = estimate_series(traj, problem, est_cfg)
        e_max = None if series.e2 is None else float(series.e2[1:].max())
        e_max_est = float(series.e2_est[1:].max())
        trace.iterations.append(AdaptiveIteration(mesh, traj, series, e_max, e_max_est))

        if cfg.target is not None and e_max_est <= cfg.target:
            trace.stop_reason = "target"
            break
        marked = mark(series, cfg.theta_mark)
        if not marked:
            trace.stop_reason = "nothing marked"
            break
        marked = _splittable(mesh, marked)
        if not marked:
            trace.stop_reason = "step size at round-off"
            break
        if mesh.N >= cfg.max_intervals:
            trace.stop_reason = "budget"
            break
        mesh = bisect(mesh, marked)
    return trace
