"""A posteriori error estimators in L2(H) and L-infinity(H).

Both estimators are driven by the residual ``f - D_t^beta U_hat - A U_hat``
of the piecewise linear interpolant ``U_hat``, whose Caputo derivative is
evaluated exactly. Outer time integrals use a compound midpoint rule with
``m_sub`` sub-intervals per mesh interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .l1 import L1Context, frac_derivative_at, pow_diff
from .stepper import Problem, Trajectory

THETA_GRID = 256
ERROR_RULES = ("midpoint", "nodal")


@dataclass(frozen=True)
class EstimatorConfig:
    """Quadrature and constant choices.

    ``error_rule`` selects how the exact L2-in-time error is summed:
    ``"midpoint"`` samples ``u - U_hat`` at the estimator's midpoints,
    ``"nodal"`` uses ``sum_n kappa_n ||u(t_{n+1}) - U_{n+1}||^2``.
    """

    m_sub: int = 4
    theta_res: float | None = None
    error_rule: str = "midpoint"

    def __post_init__(self) -> None:
        if self.m_sub < 1:
            raise ValueError("m_sub must be at least 1")
        if self.error_rule not in ERROR_RULES:
            raise ValueError(f"unknown error rule {self.error_rule!r}; expected one of {ERROR_RULES}")
        if self.theta_res is not None and not 0 < self.theta_res < math.pi / 2:
            raise ValueError("theta_res must lie in (0, pi/2)")


@dataclass(frozen=True)
class StabilityConstants:
    beta: float
    T: float
    theta: float
    phi: float
    C1: float
    C2: float
    C_phi: float

    def g(self, t):
        """Kernel ``g_{beta,T}(t) = ((T - t)^-beta + t^-beta) / Gamma(1 - beta)``."""
        t = np.asarray(t, dtype=float)
        return ((self.T - t) ** -self.beta + t**-self.beta) / math.gamma(1 - self.beta)

    @property
    def linf_factor(self) -> float:
        return self.C_phi / math.sin(self.theta)


def sector_angle(theta: float, beta: float) -> float:
    return max(0.0, math.pi - (math.pi - theta) / beta)


def resolvent_constant(beta: float, phi: float) -> float:
    return math.cos(phi) ** (beta - 1) * math.gamma(1 - beta) / math.pi


def optimal_theta(beta: float) -> float:
    """Grid minimizer of ``C_{beta,phi(theta)} / sin(theta)`` over ``(0, pi/2)``."""
    thetas = np.arange(1, THETA_GRID + 1) * (math.pi / 2) / (THETA_GRID + 1)
    vals = [resolvent_constant(beta, sector_angle(th, beta)) / math.sin(th) for th in thetas]
    return float(thetas[int(np.argmin(vals))])


def l2_constants(beta: float, T: float) -> tuple[float, float]:
    big = max(2 ** (1 - beta) * math.gamma(1 - beta) * T**beta, 1.0)
    return 2 * big, 2 * T ** (1 - beta) / math.gamma(2 - beta) * big


def stability_constants(beta: float, T: float, theta_res: float | None = None) -> StabilityConstants:
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    if not T > 0:
        raise ValueError("T must be positive")
    theta = optimal_theta(beta) if theta_res is None else float(theta_res)
    if not 0 < theta < math.pi / 2:
        raise ValueError("theta must lie in (0, pi/2)")
    phi = sector_angle(theta, beta)
    C1, C2 = l2_constants(beta, T)
    return StabilityConstants(beta, T, theta, phi, C1, C2, resolvent_constant(beta, phi))


# ---------------------------------------------------------------------------
# residual


def _evaluate_many(fn, ts: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    try:
        out = np.asarray(fn(ts), dtype=float)
        if out.shape == ts.shape + shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.stack([np.asarray(fn(float(t)), dtype=float) for t in ts]) if ts.size else np.empty(ts.shape + shape)


def residual_at(traj: Trajectory, problem: Problem, tau):
    """``f(tau) - D_t^beta U_hat(tau) - A U_hat(tau)`` at one or many times."""
    tt = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tt <= 0) or np.any(tt > traj.mesh.T):
        raise ValueError(f"tau must lie in (0, {traj.mesh.T!r}]")
    op = problem.operator
    ctx = L1Context(traj.mesh, problem.beta)
    F = _evaluate_many(problem.f, tt, problem.u0.shape)
    D = frac_derivative_at(ctx, traj.values, tt)
    AU = op.apply(traj.values)
    AUhat = Trajectory(traj.mesh, AU, traj.scheme).interpolate(tt)
    R = F - D - AUhat
    return R[0] if np.ndim(tau) == 0 else R


@dataclass(frozen=True)
class _Samples:
    """Compound midpoint samples over the first ``n`` mesh intervals."""

    left: np.ndarray
    right: np.ndarray
    h: np.ndarray
    tau: np.ndarray

    @classmethod
    def build(cls, traj: Trajectory, m_sub: int, n: int | None = None) -> _Samples:
        mesh = traj.mesh
        n = mesh.N if n is None else n
        kappa = mesh.steps[:n]
        sub = np.arange(m_sub)
        left = (mesh.nodes[:n, None] + kappa[:, None] * sub[None, :] / m_sub).ravel()
        # shared edges, so t - right is exactly zero on the last piece and (t - right)^beta telescopes
        right = np.append(left[1:], mesh.nodes[n])
        h = right - left
        return cls(left, right, h, left + h / 2)

    def head(self, count: int) -> _Samples:
        return _Samples(self.left[:count], self.right[:count], self.h[:count], self.tau[:count])


def _residual_norms(traj: Trajectory, problem: Problem, samples: _Samples) -> np.ndarray:
    return np.asarray(problem.operator.norm(residual_at(traj, problem, samples.tau)))


def _initial_error(traj: Trajectory, problem: Problem) -> float:
    return float(problem.operator.norm(problem.u0 - traj.values[0]))


def _l2_value(beta: float, t: float, e0: float, s: _Samples, r: np.ndarray) -> float:
    C1, C2 = l2_constants(beta, t)
    # 1 / g_{beta,t}(tau), written to stay finite near both endpoints
    a, b = (t - s.tau) ** beta, s.tau**beta
    inv_g = math.gamma(1 - beta) * a * b / (a + b)
    Q = float(np.sum(s.h * inv_g * r**2))
    return math.sqrt(C1 * Q + C2 * e0**2)


def _linf_value(beta: float, t: float, e0: float, factor: float, s: _Samples, r: np.ndarray) -> float:
    # exact moments of (t - tau)^(beta-1) over each sub-interval
    moments = pow_diff(t - s.right, s.h, beta) / beta
    return e0 + factor * float(np.sum(r * moments))


def estimate_l2(traj: Trajectory, problem: Problem, t: float, cfg: EstimatorConfig = EstimatorConfig()) -> float:
    """Square root of the L2(0,t; H) error bound at the node ``t``."""
    n = traj.mesh.index_of(t)
    if n == 0:
        raise ValueError("t must be a mesh node > 0")
    s = _Samples.build(traj, cfg.m_sub, n)
    r = _residual_norms(traj, problem, s)
    return _l2_value(problem.beta, float(traj.mesh.nodes[n]), _initial_error(traj, problem), s, r)


def estimate_linf(traj: Trajectory, problem: Problem, t: float, cfg: EstimatorConfig = EstimatorConfig()) -> float:
    """Bound on ``||u(t) - U_hat(t)||`` at the node ``t``."""
    n = traj.mesh.index_of(t)
    if n == 0:
        raise ValueError("t must be a mesh node > 0")
    s = _Samples.build(traj, cfg.m_sub, n)
    r = _residual_norms(traj, problem, s)
    consts = stability_constants(problem.beta, traj.mesh.T, cfg.theta_res)
    return _linf_value(problem.beta, float(traj.mesh.nodes[n]), _initial_error(traj, problem), consts.linf_factor, s, r)


# ---------------------------------------------------------------------------
# series over all nodes


@dataclass
class EstimateSeries:
    times: np.ndarray
    e1_est: np.ndarray
    e2_est: np.ndarray
    e1: np.ndarray | None = None
    e2: np.ndarray | None = None
    constants: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.times.size - 1

    def at(self, t: float) -> dict:
        n = int(np.argmin(np.abs(self.times - t)))
        row = {"t": float(self.times[n]), "E1_est": float(self.e1_est[n]), "E2_est": float(self.e2_est[n])}
        if self.e1 is not None:
            row["E1"] = float(self.e1[n])
        if self.e2 is not None:
            row["E2"] = float(self.e2[n])
        return row

    def rows(self):
        for n, t in enumerate(self.times):
            yield (
                float(t),
                None if self.e1 is None else float(self.e1[n]),
                float(self.e1_est[n]),
                None if self.e2 is None else float(self.e2[n]),
                float(self.e2_est[n]),
            )


def exact_errors(traj: Trajectory, problem: Problem, cfg: EstimatorConfig = EstimatorConfig()):
    """``(E1, E2)`` at every node against the reference solution."""
    if problem.exact is None:
        raise ValueError("problem has no reference solution")
    op = problem.operator
    mesh = traj.mesh
    m = cfg.m_sub
    exact_nodes = _evaluate_many(problem.exact, mesh.nodes, problem.u0.shape)
    e2 = np.asarray(op.norm(exact_nodes - traj.values), dtype=float)
    e2[0] = _initial_error(traj, problem)

    if cfg.error_rule == "nodal":
        per_interval = mesh.steps * e2[1:] ** 2
    else:
        s = _Samples.build(traj, m)
        diff = _evaluate_many(problem.exact, s.tau, problem.u0.shape) - traj.interpolate(s.tau)
        per_interval = (s.h * np.asarray(op.norm(diff)) ** 2).reshape(mesh.N, m).sum(axis=1)
    e1 = np.sqrt(np.concatenate([[0.0], np.cumsum(per_interval)]))
    return e1, e2


def estimate_series(traj: Trajectory, problem: Problem, cfg: EstimatorConfig = EstimatorConfig()) -> EstimateSeries:
    """Both estimators (and exact errors when available) at every node."""
    mesh = traj.mesh
    beta = problem.beta
    consts = stability_constants(beta, mesh.T, cfg.theta_res)
    s = _Samples.build(traj, cfg.m_sub)
    r = _residual_norms(traj, problem, s)
    e0 = _initial_error(traj, problem)

    e1_est = np.empty(mesh.N + 1)
    e2_est = np.empty(mesh.N + 1)
    e1_est[0] = 0.0
    e2_est[0] = e0
    m = cfg.m_sub
    for n in range(1, mesh.N + 1):
        t = float(mesh.nodes[n])
        part = s.head(n * m)
        e1_est[n] = _l2_value(beta, t, e0, part, r[: n * m])
        e2_est[n] = _linf_value(beta, t, e0, consts.linf_factor, part, r[: n * m])

    series = EstimateSeries(
        mesh.nodes.copy(),
        e1_est,
        e2_est,
        constants={
            "C1": consts.C1,
            "C2": consts.C2,
            "C_phi": consts.C_phi,
            "phi": consts.phi,
            "theta": consts.theta,
            "m_sub": cfg.m_sub,
        },
    )
    if problem.exact is not None:
        series.e1, series.e2 = exact_errors(traj, problem, cfg)
    return series


def eoc(errors, ns=None) -> list[float | None]:
    """Rates ``log2(e_N / e_2N)`` between successive rows; first entry ``None``."""
    errors = [float(e) for e in errors]
    if any(not e > 0 for e in errors):
        raise ValueError("errors must be positive")
    if ns is not None:
        ns = [int(v) for v in ns]
        if len(ns) != len(errors):
            raise ValueError("errors and N values differ in length")
        for a, b in zip(ns, ns[1:]):
            if b != 2 * a:
                raise ValueError(f"successive N must double, got {a} -> {b}")
    rates: list[float | None] = [None]
    for a, b in zip(errors, errors[1:]):
        rates.append(math.log2(a / b))
    return rates
