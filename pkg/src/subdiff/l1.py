"""L1 weights and the exact Caputo derivative of a piecewise linear interpolant."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mesh import TimeMesh

# rows of the (points x intervals) weight matrix built per chunk
_CHUNK = 2048


def pow_diff(b, h, p: float):
    """``(b + h)^p - b^p`` for ``b >= 0``, ``h > 0``, without cancellation.

    Written as ``b^p * expm1(p * log1p(h / b))`` so that tiny steps far from
    the evaluation point keep full relative accuracy.
    """
    b = np.asarray(b, dtype=float)
    h = np.asarray(h, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        far = b**p * np.expm1(p * np.log1p(h / b))
    return np.where(b > 0, far, h**p)


@dataclass(frozen=True)
class L1Context:
    mesh: TimeMesh
    beta: float

    def __post_init__(self) -> None:
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")

    @property
    def gamma2(self) -> float:
        return math.gamma(2 - self.beta)


def omega_j(ctx: L1Context, j: int, t: float) -> float:
    """Time-continuous L1 weight ``omega_j(t)``; zero for ``t <= t_j``."""
    nodes = ctx.mesh.nodes
    tj, tj1 = nodes[j], nodes[j + 1]
    p = 1 - ctx.beta
    if t <= tj:
        return 0.0
    if t <= tj1:
        return (t - tj) ** p / ctx.gamma2
    return float(pow_diff(t - tj1, tj1 - tj, p)) / ctx.gamma2


def nodal_weights(ctx: L1Context, n: int) -> np.ndarray:
    """``omega_{n,j} = omega_j(t_{n+1})`` for ``j = 0..n``."""
    if not 0 <= n < ctx.mesh.N:
        raise IndexError(f"n = {n} outside [0, {ctx.mesh.N - 1}]")
    nodes = ctx.mesh.nodes
    t = nodes[n + 1]
    return pow_diff(t - nodes[1 : n + 2], np.diff(nodes[: n + 2]), 1 - ctx.beta) / ctx.gamma2


def weight_matrix(ctx: L1Context, t: np.ndarray, nint: int | None = None) -> np.ndarray:
    """Matrix ``W[i, j] = omega_j(t_i)`` over the first ``nint`` intervals."""
    nodes = ctx.mesh.nodes
    nint = ctx.mesh.N if nint is None else nint
    t = np.asarray(t, dtype=float)[:, None]
    tj = nodes[None, :nint]
    tj1 = nodes[None, 1 : nint + 1]
    p = 1 - ctx.beta
    inside = (t > tj) & (t <= tj1)
    past = t > tj1
    W = np.zeros((t.shape[0], nint))
    W = np.where(inside, np.maximum(t - tj, 0.0) ** p, W)
    W = np.where(past, pow_diff(np.maximum(t - tj1, 0.0), tj1 - tj, p), W)
    return W / ctx.gamma2


def _slopes(mesh: TimeMesh, U: np.ndarray) -> np.ndarray:
    kappa = mesh.steps[: U.shape[0] - 1]
    return np.diff(U, axis=0) / kappa.reshape((-1,) + (1,) * (U.ndim - 1))


def frac_derivative_at(ctx: L1Context, U, t):
    """Caputo derivative of the piecewise linear interpolant of ``U`` at ``t``.

    ``U`` holds nodal values ``U_0, U_1, ...`` (scalars or coefficient
    vectors along the trailing axis); ``t`` may be a scalar or an array.
    The result is exact for the interpolant.
    """
    U = np.asarray(U, dtype=float)
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    available = U.shape[0] - 1
    if available < 1:
        raise ValueError("need at least two nodal values")
    if np.any(tt > ctx.mesh.nodes[available]) or np.any(tt < 0):
        raise ValueError(
            f"requested time beyond the supplied history (t <= {ctx.mesh.nodes[available]!r})"
        )
    d = _slopes(ctx.mesh, U)
    out = np.empty((tt.size,) + U.shape[1:])
    for start in range(0, tt.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        out[sl] = weight_matrix(ctx, tt[sl], available) @ d
    if np.ndim(t) == 0:
        return out[0]
    return out


def _a_coefficients(ctx: L1Context, t: float, nint: int) -> np.ndarray:
    """``a_j(t) = (t - t_j)_+^{1-beta} / Gamma(2 - beta)`` for ``j = 0..nint``."""
    nodes = ctx.mesh.nodes[: nint + 1]
    return np.maximum(t - nodes, 0.0) ** (1 - ctx.beta) / ctx.gamma2


def frac_derivative_telescoped(ctx: L1Context, U, t: float):
    """Same derivative through ``a_0 d_0 + sum_j a_j (d_j - d_{j-1})``."""
    U = np.asarray(U, dtype=float)
    d = _slopes(ctx.mesh, U)
    a = _a_coefficients(ctx, t, d.shape[0] - 1)
    jumps = np.concatenate([d[:1], np.diff(d, axis=0)], axis=0)
    return np.tensordot(a, jumps, axes=(0, 0))
