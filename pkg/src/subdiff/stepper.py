"""Time marching for ``D_t^beta u + A u = f`` with L1, corrected L1 and CQ."""

from __future__ import annotations

import csv
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cq import CQContext, cq_weight_matrix
from .l1 import L1Context, nodal_weights
from .mesh import TimeMesh

SCHEMES = ("l1", "l1corr", "cq")


@dataclass(frozen=True)
class Problem:
    """Data of a subdiffusion problem.

    ``f`` maps a time to an element of ``H``; ``exact``, when available,
    maps a time to the reference solution in ``H``.
    """

    operator: object
    beta: float
    f: Callable[[float], np.ndarray]
    u0: np.ndarray
    exact: Callable[[float], np.ndarray] | None = None
    T: float | None = None
    name: str = ""

    def __post_init__(self) -> None:
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        object.__setattr__(self, "u0", np.asarray(self.u0, dtype=float))

    def source(self, t: float) -> np.ndarray:
        return np.asarray(self.f(float(t)), dtype=float)

    def sources(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.empty(ts.shape + self.u0.shape)
        for i, t in enumerate(ts):
            out[i] = self.source(t)
        return out


@dataclass(frozen=True)
class Trajectory:
    mesh: TimeMesh
    values: np.ndarray
    scheme: str

    def __post_init__(self) -> None:
        if self.values.shape[0] != self.mesh.N + 1:
            raise ValueError("need one value per mesh node")
        self.values.setflags(write=False)

    def interpolate(self, t) -> np.ndarray:
        """Piecewise linear interpolant ``U_hat`` at the times ``t``."""
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        n = self.mesh.interval_of(tt)
        nodes = self.mesh.nodes
        s = (tt - nodes[n]) / (nodes[n + 1] - nodes[n])
        s = s.reshape((-1,) + (1,) * (self.values.ndim - 1))
        out = (1 - s) * self.values[n] + s * self.values[n + 1]
        return out[0] if np.ndim(t) == 0 else out

    def dump(self, path: str | Path) -> None:
        """CSV rows ``t_n, U_n components...``."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            vals = self.values.reshape(self.mesh.N + 1, -1)
            width = vals.shape[1]
            writer.writerow(["t"] + (["U"] if width == 1 else [f"U{i}" for i in range(width)]))
            for t, row in zip(self.mesh.nodes, vals):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def _march(problem: Problem, mesh: TimeMesh, weight_row, correction) -> np.ndarray:
    """Generic step ``sum_j K_{n,j} (U_{j+1} - U_j) + A U_{n+1} = rhs_{n+1}``.

    ``weight_row(n)`` returns ``omega_{n,0..n}``; the divided differences
    ``(U_{j+1} - U_j) / kappa_j`` are carried along as history.
    """
    op = problem.operator
    kappa = mesh.steps
    N = mesh.N
    U = np.empty((N + 1,) + problem.u0.shape)
    U[0] = problem.u0
    slopes = np.empty((N,) + problem.u0.shape)
    for n in range(N):
        w = weight_row(n)
        rhs = problem.source(mesh.nodes[n + 1])
        if n == 0 and correction is not None:
            rhs = rhs - correction
        alpha = w[n] / kappa[n]
        if n:
            rhs = rhs - np.tensordot(w[:n], slopes[:n], axes=(0, 0))
        U[n + 1] = op.shifted_solve(alpha, rhs + alpha * U[n])
        slopes[n] = (U[n + 1] - U[n]) / kappa[n]
    return U


def solve_l1(problem: Problem, mesh: TimeMesh) -> Trajectory:
    ctx = L1Context(mesh, problem.beta)
    U = _march(problem, mesh, lambda n: nodal_weights(ctx, n), None)
    return Trajectory(mesh, U, "l1")


def first_step_correction(problem: Problem) -> np.ndarray:
    """``(A u0 - f(0)) / 2``, subtracted from the first right-hand side."""
    return 0.5 * (problem.operator.apply(problem.u0) - problem.source(0.0))


def solve_l1_corrected(problem: Problem, mesh: TimeMesh) -> Trajectory:
    ctx = L1Context(mesh, problem.beta)
    U = _march(problem, mesh, lambda n: nodal_weights(ctx, n), first_step_correction(problem))
    return Trajectory(mesh, U, "l1corr")


def solve_cq(problem: Problem, mesh: TimeMesh, quad_tol: float = 1e-10) -> Trajectory:
    W = cq_weight_matrix(CQContext(mesh, problem.beta, quad_tol))
    U = _march(problem, mesh, lambda n: W[n, : n + 1], None)
    return Trajectory(mesh, U, "cq")


def solve(problem: Problem, mesh: TimeMesh, scheme: str) -> Trajectory:
    if scheme == "l1":
        return solve_l1(problem, mesh)
    if scheme == "l1corr":
        return solve_l1_corrected(problem, mesh)
    if scheme == "cq":
        return solve_cq(problem, mesh)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
