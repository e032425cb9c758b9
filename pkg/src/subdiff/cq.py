"""Backward-Euler convolution quadrature weights on non-uniform steps.

The weight for the fractional integral kernel ``K(s) = s^(beta-1)`` is

    omega_{n,j} = kappa_j sin((1-beta) pi)/pi
                  * int_0^inf x^(beta-1) prod_{k=j}^n (1 + x kappa_k)^(-1) dx.

Three independent evaluations are provided: the real-axis integral above
(composite Gauss-Legendre in ``s = log x`` with analytic end tails), Newton
divided differences of ``s^p`` at the reciprocal steps, and the closed-form
coefficients of ``kappa^(1-beta) (1 - zeta)^(beta-1)`` for uniform steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mesh import TimeMesh

MAX_DIVDIFF_SPAN = 25
PANEL_WIDTH = 2.0
GL_ORDER = 12
MAX_PANELS = 4096


class QuadratureError(ArithmeticError):
    """The weight integral did not converge within the panel budget."""


class DividedDifferenceInstability(ValueError):
    """Requested divided-difference table is wider than the supported span."""


@dataclass(frozen=True)
class CQContext:
    mesh: TimeMesh
    beta: float
    quad_tol: float = 1e-10

    def __post_init__(self) -> None:
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if not self.quad_tol > 0:
            raise ValueError("quad_tol must be positive")

    @property
    def prefactor(self) -> float:
        return math.sin((1 - self.beta) * math.pi) / math.pi


# ---------------------------------------------------------------------------
# real-axis quadrature


@lru_cache(maxsize=8)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _panels(s_lo: float, s_hi: float, width: float) -> tuple[np.ndarray, np.ndarray]:
    npanel = max(1, math.ceil((s_hi - s_lo) / width))
    if npanel > MAX_PANELS:
        raise QuadratureError(f"weight integral needs {npanel} panels (budget {MAX_PANELS})")
    edges = np.linspace(s_lo, s_hi, npanel + 1)
    xi, wi = _gauss_legendre(GL_ORDER)
    half = np.diff(edges)[:, None] / 2
    mid = (edges[:-1, None] + edges[1:, None]) / 2
    return (mid + half * xi).ravel(), (half * wi).ravel()


def _window(ctx: CQContext) -> tuple[float, float]:
    """Truncation points ``x_lo``, ``x_hi`` beyond which analytic tails apply."""
    beta, tol = ctx.beta, 1e-2 * ctx.quad_tol
    # lower tail keeps O((x S)^2) relative error, upper O((x kappa)^{-2})
    lo = tol ** (1 / (2 + beta)) / ctx.mesh.T
    hi = tol ** (-1 / (3 - beta)) / ctx.mesh.steps.min()
    return lo, hi


def _lower_tail(beta: float, x_lo: float, span: np.ndarray) -> np.ndarray:
    # prod (1 + x kappa)^(-1) = 1 - x * sum(kappa) + O(x^2)
    return x_lo**beta / beta - span * x_lo ** (beta + 1) / (beta + 1)


def _upper_tail(beta: float, x_hi: float, m: np.ndarray, log_prod: np.ndarray, inv_sum: np.ndarray) -> np.ndarray:
    # prod (1 + x kappa)^(-1) = prod (x kappa)^(-1) * (1 - x^-1 sum(1/kappa) + ...)
    # log_prod = sum log(x_hi kappa_k)
    lead = np.exp(beta * math.log(x_hi) - log_prod)
    return lead * (1 / (m - beta) - (inv_sum / x_hi) / (m + 1 - beta))


def _integral_scalar(ctx: CQContext, n: int, j: int, width: float) -> float:
    kappa = ctx.mesh.steps[j : n + 1]
    beta = ctx.beta
    x_lo, x_hi = _window(ctx)
    s, w = _panels(math.log(x_lo), math.log(x_hi), width)
    x = np.exp(s)
    log_terms = np.log1p(np.outer(kappa, x)).sum(axis=0)
    middle = float(np.sum(w * np.exp(beta * s - log_terms)))
    m = kappa.size
    lower = _lower_tail(beta, x_lo, np.array(kappa.sum()))
    upper = _upper_tail(beta, x_hi, np.array(m), np.log(x_hi * kappa).sum(), (1 / kappa).sum())
    return float(lower) + middle + float(upper)


def cq_weight(ctx: CQContext, n: int, j: int) -> float:
    """Single weight ``omega^CQ_{n,j}`` from the real-axis integral.

    The panel width is halved until two successive values agree to
    ``quad_tol``; ``j == n`` uses the closed form ``kappa_n^(1-beta)``.
    """
    if not 0 <= j <= n < ctx.mesh.N:
        raise IndexError(f"need 0 <= j <= n < {ctx.mesh.N}, got n={n}, j={j}")
    kappa = ctx.mesh.steps
    if j == n:
        return float(kappa[n] ** (1 - ctx.beta))

    width = PANEL_WIDTH
    prev = _integral_scalar(ctx, n, j, width)
    while True:
        width /= 2
        cur = _integral_scalar(ctx, n, j, width)
        if abs(cur - prev) <= ctx.quad_tol * abs(cur):
            return float(kappa[j] * ctx.prefactor * cur)
        prev = cur


def cq_weight_matrix(ctx: CQContext) -> np.ndarray:
    """All weights as a lower-triangular ``N x N`` array ``W[n, j]``.

    Uses one Gauss-Legendre grid for the whole mesh. The grid is accepted
    once the quadrature reproduces the closed-form diagonal
    ``kappa_n^(1-beta)`` to ``quad_tol``; otherwise panels are halved.
    """
    mesh, beta = ctx.mesh, ctx.beta
    kappa = mesh.steps
    N = mesh.N
    x_lo, x_hi = _window(ctx)
    exact_diag = kappa ** (1 - beta)

    width = PANEL_WIDTH
    while True:
        s, w = _panels(math.log(x_lo), math.log(x_hi), width)
        weighted = w * np.exp(beta * s)
        logs = np.log1p(np.outer(kappa, np.exp(s)))
        log_hi = np.log(x_hi * kappa)
        inv_k = 1 / kappa
        W = np.zeros((N, N))
        for n in range(N):
            # suffix sums over k = j..n, j = 0..n
            acc = np.cumsum(logs[n::-1], axis=0)[::-1]
            middle = np.exp(-acc) @ weighted
            m = np.arange(n + 1, 0, -1, dtype=float)
            span = mesh.nodes[n + 1] - mesh.nodes[: n + 1]
            upper = _upper_tail(
                beta,
                x_hi,
                m,
                np.cumsum(log_hi[n::-1])[::-1],
                np.cumsum(inv_k[n::-1])[::-1],
            )
            W[n, : n + 1] = kappa[: n + 1] * ctx.prefactor * (
                _lower_tail(beta, x_lo, span) + middle + upper
            )
        diag = np.diag(W).copy()
        if np.max(np.abs(diag - exact_diag) / exact_diag) <= ctx.quad_tol:
            W[np.diag_indices(N)] = exact_diag
            return W
        width /= 2


# ---------------------------------------------------------------------------
# divided differences


def divided_difference_power(x, p: float) -> float:
    """Newton divided difference ``[x_0, ..., x_m] s^p`` for positive nodes.

    Built from the recursive table in extended precision; coincident nodes
    use the confluent entry ``binom(p, l) x^(p-l)``.
    """
    import mpmath

    xs = np.sort(np.asarray(x, dtype=float))
    if np.any(xs <= 0):
        raise ValueError("nodes must be positive")
    # merge nodes equal up to round-off
    for i in range(1, xs.size):
        if xs[i] - xs[i - 1] <= 1e-13 * xs[i]:
            xs[i] = xs[i - 1]
    m = xs.size - 1
    gaps = np.diff(xs)
    rel = gaps[gaps > 0] / xs[1:][gaps > 0]
    loss = 0 if rel.size == 0 else max(0, math.ceil(-math.log10(rel.min())))
    digits = 30 + m * loss

    with mpmath.workdps(digits):
        X = [mpmath.mpf(float(v)) for v in xs]
        P = mpmath.mpf(p)
        d = [xi**P for xi in X]
        for level in range(1, m + 1):
            nxt = []
            for i in range(m - level + 1):
                if X[i + level] == X[i]:
                    nxt.append(mpmath.binomial(P, level) * X[i] ** (P - level))
                else:
                    nxt.append((d[i + 1] - d[i]) / (X[i + level] - X[i]))
            d = nxt
        return d[0]


def cq_weight_divdiff(ctx: CQContext, n: int, j: int, power: float | None = None) -> float:
    """``omega^CQ_{n,j}(K)`` for ``K(s) = s^power`` via divided differences.

    ``power`` defaults to ``beta - 1``. The weight is
    ``prod_{k=j+1}^n (-kappa_k)^(-1) * [1/kappa_j, ..., 1/kappa_n] K``.
    """
    import mpmath

    if not 0 <= j <= n < ctx.mesh.N:
        raise IndexError(f"need 0 <= j <= n < {ctx.mesh.N}, got n={n}, j={j}")
    if n - j > MAX_DIVDIFF_SPAN:
        raise DividedDifferenceInstability(
            f"n - j = {n - j} exceeds the supported span {MAX_DIVDIFF_SPAN}"
        )
    p = ctx.beta - 1 if power is None else power
    kappa = ctx.mesh.steps[j : n + 1]
    dd = divided_difference_power(1 / kappa, p)
    with mpmath.workdps(30):
        scale = mpmath.mpf(1)
        for k in kappa[1:]:
            scale /= -mpmath.mpf(float(k))
        return float(scale * dd)


# ---------------------------------------------------------------------------
# uniform steps


def cq_weights_uniform(kappa: float, m: int, beta: float) -> float:
    """Lag-``m`` weight on a uniform mesh: ``kappa^(1-beta) (-1)^m binom(beta-1, m)``."""
    if m < 0:
        raise ValueError("lag must be non-negative")
    w = 1.0
    for i in range(1, m + 1):
        w *= (i - beta) / i
    return kappa ** (1 - beta) * w


# ---------------------------------------------------------------------------
# composition rule


def compose_check(ctx: CQContext, n: int, samples: int = 4, seed: int = 0, data=None) -> float:
    """Maximum relative defect of the CQ composition identity at row ``n``.

    Compares ``sum_j omega_{n,j}(s^beta) (U_{j+1} - U_0)`` (divided
    differences) with ``sum_j omega_{n,j}(s^(beta-1)) (U_{j+1} - U_j)/kappa_j``
    (real-axis quadrature) for random data, or for ``data`` when given.
    """
    if not 0 <= n < ctx.mesh.N:
        raise IndexError(f"n = {n} outside [0, {ctx.mesh.N - 1}]")
    kappa = ctx.mesh.steps[: n + 1]
    w_full = np.array([cq_weight_divdiff(ctx, n, j, power=ctx.beta) for j in range(n + 1)])
    w_int = np.array([cq_weight(ctx, n, j) for j in range(n + 1)])

    if data is not None:
        batches = [np.asarray(data, dtype=float)]
    else:
        rng = np.random.default_rng(seed)
        batches = [rng.standard_normal(n + 2) for _ in range(samples)]

    worst = 0.0
    for U in batches:
        lhs = w_full @ (U[1 : n + 2] - U[0])
        rhs = w_int @ (np.diff(U[: n + 2]) / kappa)
        scale = max(abs(lhs), abs(rhs))
        if scale == 0.0:
            continue
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst
