"""Operators ``A`` on a Hilbert space ``H``.

Two realizations are provided: a scalar ``A = lambda`` on ``H = R`` and the
Galerkin Laplacian on piecewise quadratic finite elements over ``(0, pi)``
with homogeneous Dirichlet conditions. Elements of ``H`` are numpy arrays;
leading axes are treated as a batch.
"""

from __future__ import annotations

import math
import threading

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded


class ScalarOperator:
    """``A u = lam * u`` on the real line."""

    shape: tuple[int, ...] = ()

    def __init__(self, lam: float) -> None:
        if not lam > 0:
            raise ValueError("lambda must be positive")
        self.lam = float(lam)

    def __repr__(self) -> str:
        return f"ScalarOperator(lam={self.lam})"

    def zero(self) -> np.ndarray:
        return np.zeros(())

    def _check(self, u) -> np.ndarray:
        return np.asarray(u, dtype=float)

    def apply(self, u):
        return self.lam * self._check(u)

    def shifted_solve(self, alpha: float, rhs):
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        return self._check(rhs) / (alpha + self.lam)

    def inner(self, u, v):
        return self._check(u) * self._check(v)

    def norm(self, u):
        return np.abs(self._check(u))

    def energy_seminorm(self, u):
        return math.sqrt(self.lam) * np.abs(self._check(u))


# local matrices of quadratic Lagrange elements, node order (left, mid, right)
_K_REF = np.array([[7.0, -8.0, 1.0], [-8.0, 16.0, -8.0], [1.0, -8.0, 7.0]]) / 3.0
_M_REF = np.array([[4.0, 2.0, -1.0], [2.0, 16.0, 2.0], [-1.0, 2.0, 4.0]]) / 30.0


def element_stiffness(h: float) -> np.ndarray:
    return _K_REF / h


def element_mass(h: float) -> np.ndarray:
    return _M_REF * h


class FEMOperator:
    """Galerkin Dirichlet Laplacian on a uniform P2 mesh of ``(0, pi)``.

    Coefficient vectors live on the ``2E - 1`` interior nodes. ``apply``
    returns ``M^{-1} S u`` so that ``inner(apply(u), v) = u^T S v``.
    """

    def __init__(self, E: int, length: float = math.pi) -> None:
        if E < 2:
            raise ValueError("need at least 2 elements")
        self.E = int(E)
        self.length = float(length)
        self.h = self.length / self.E
        self.dim = 2 * self.E - 1
        self.shape = (self.dim,)
        self.nodes = np.arange(1, 2 * self.E) * (self.h / 2)

        full = 2 * self.E + 1
        S = np.zeros((3, full))  # upper banded storage, half-bandwidth 2
        M = np.zeros((3, full))
        Ke, Me = element_stiffness(self.h), element_mass(self.h)
        for e in range(self.E):
            dofs = (2 * e, 2 * e + 1, 2 * e + 2)
            for a in range(3):
                for b in range(a, 3):
                    row, col = dofs[a], dofs[b]
                    S[2 + row - col, col] += Ke[a, b]
                    M[2 + row - col, col] += Me[a, b]
        # drop the two Dirichlet nodes
        self.S_band = np.ascontiguousarray(S[:, 1:-1])
        self.M_band = np.ascontiguousarray(M[:, 1:-1])
        self._M_chol = cholesky_banded(self.M_band)
        self._factors: dict[float, np.ndarray] = {}
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"FEMOperator(E={self.E})"

    # -- banded helpers ----------------------------------------------------

    def _matvec(self, band: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Symmetric banded product along the last axis."""
        out = band[2] * u
        out[..., :-1] += band[1, 1:] * u[..., 1:]
        out[..., 1:] += band[1, 1:] * u[..., :-1]
        out[..., :-2] += band[0, 2:] * u[..., 2:]
        out[..., 2:] += band[0, 2:] * u[..., :-2]
        return out

    def _solve(self, chol: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        flat = rhs.reshape(-1, self.dim).T
        return cho_solve_banded((chol, False), flat).T.reshape(rhs.shape)

    def _shifted_factor(self, alpha: float) -> np.ndarray:
        with self._lock:
            chol = self._factors.get(alpha)
            if chol is None:
                chol = cholesky_banded(alpha * self.M_band + self.S_band)
                self._factors[alpha] = chol
            return chol

    def _check(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape[-1:] != self.shape:
            raise ValueError(f"expected trailing dimension {self.dim}, got shape {u.shape}")
        return u

    # -- public ------------------------------------------------------------

    def zero(self) -> np.ndarray:
        return np.zeros(self.shape)

    def mass(self, u):
        return self._matvec(self.M_band, self._check(u))

    def stiffness(self, u):
        return self._matvec(self.S_band, self._check(u))

    def dense_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """``(S, M)`` as dense arrays, for inspection and tests."""
        eye = np.eye(self.dim)
        return self._matvec(self.S_band, eye), self._matvec(self.M_band, eye)

    def apply(self, u):
        return self._solve(self._M_chol, self.stiffness(u))

    def shifted_solve(self, alpha: float, rhs):
        """Solve ``alpha U + A U = rhs``, i.e. ``(alpha M + S) U = M rhs``."""
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        return self._solve(self._shifted_factor(float(alpha)), self.mass(rhs))

    def inner(self, u, v):
        # each band pairs u_i v_j with u_j v_i, so swapping u and v is exact
        u, v = self._check(u), self._check(v)
        M = self.M_band
        out = np.sum(M[2] * (u * v), axis=-1)
        out = out + np.sum(M[1, 1:] * (u[..., :-1] * v[..., 1:] + u[..., 1:] * v[..., :-1]), axis=-1)
        return out + np.sum(M[0, 2:] * (u[..., :-2] * v[..., 2:] + u[..., 2:] * v[..., :-2]), axis=-1)

    def norm(self, u):
        return np.sqrt(np.maximum(self.inner(u, u), 0.0))

    def energy_seminorm(self, u):
        u = self._check(u)
        return np.sqrt(np.maximum(np.sum(u * self.stiffness(u), axis=-1), 0.0))

    def interpolate(self, fn) -> np.ndarray:
        return np.asarray(fn(self.nodes), dtype=float)

    def evaluate(self, u, x) -> np.ndarray:
        """Value of the finite element function with coefficients ``u`` at ``x``."""
        u = self._check(u)
        full = np.concatenate([[0.0], u, [0.0]])
        x = np.asarray(x, dtype=float)
        e = np.clip((x // self.h).astype(int), 0, self.E - 1)
        xi = 2 * (x - e * self.h) / self.h - 1
        phi = np.stack([xi * (xi - 1) / 2, 1 - xi**2, xi * (xi + 1) / 2])
        return full[2 * e] * phi[0] + full[2 * e + 1] * phi[1] + full[2 * e + 2] * phi[2]

    def l2_project(self, fn) -> np.ndarray:
        """L2 projection onto the finite element space, 3-point Gauss per element."""
        xi, wq = np.polynomial.legendre.leggauss(3)
        left = np.arange(self.E) * self.h
        x = left[:, None] + (xi[None, :] + 1) * (self.h / 2)
        fx = np.asarray(fn(x), dtype=float) * np.ones_like(x)
        phi = np.stack([xi * (xi - 1) / 2, 1 - xi**2, xi * (xi + 1) / 2])  # (3, q)
        local = (fx * wq)[:, None, :] * phi[None, :, :]
        local = local.sum(axis=-1) * (self.h / 2)  # (E, 3)
        b = np.zeros(2 * self.E + 1)
        np.add.at(b, 2 * np.arange(self.E), local[:, 0])
        np.add.at(b, 2 * np.arange(self.E) + 1, local[:, 1])
        np.add.at(b, 2 * np.arange(self.E) + 2, local[:, 2])
        return self._solve(self._M_chol, b[1:-1])


def assemble_fem(E: int) -> FEMOperator:
    return FEMOperator(E)


def l2_project(op, fn):
    if not isinstance(op, FEMOperator):
        raise TypeError("l2_project needs a finite element operator")
    return op.l2_project(fn)
