"""Manufactured test problems: scalar ODEs and a 1D finite element PDE."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spatial import FEMOperator, ScalarOperator
from .special import mittag_leffler
from .stepper import Problem

PROBLEM_IDS = ("ode_ml", "ode_cos", "ode_heaviside", "pde_heaviside")


@dataclass(frozen=True)
class ProblemSpec:
    id: str
    beta: float
    lam: float = 1.0
    r: float = 0.28
    T: float = 1.0
    E: int = 64
    u0: float = 1.0

    def __post_init__(self) -> None:
        if self.id not in PROBLEM_IDS:
            raise ValueError(f"unknown problem {self.id!r}; expected one of {PROBLEM_IDS}")
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.id.endswith("heaviside") and not 0 < self.r < self.T:
            raise ValueError("r must lie in (0, T)")
        if self.id == "pde_heaviside" and self.E < 2:
            raise ValueError("need at least 2 elements")


def heaviside_profile(t, beta: float, r: float):
    """``1 + t^beta + H(t - r) (t - r)^beta``.

    Its Caputo derivative is ``Gamma(beta + 1) (1 + H(t - r))``, so the
    solution is continuous with a derivative singularity at ``t = r``.
    """
    t = np.asarray(t, dtype=float)
    late = np.maximum(t - r, 0.0)
    return 1 + t**beta + np.where(t > r, late**beta, 0.0)


def heaviside_forcing(t, beta: float, r: float):
    t = np.asarray(t, dtype=float)
    return math.gamma(beta + 1) * (1 + (t > r))


def _ode_ml(spec: ProblemSpec) -> Problem:
    beta, lam, u0 = spec.beta, spec.lam, spec.u0

    def exact(t):
        t = np.asarray(t, dtype=float)
        return u0 * mittag_leffler(beta, -lam * t**beta)

    return Problem(
        ScalarOperator(lam), beta, lambda t: np.zeros_like(np.asarray(t, dtype=float)), u0,
        exact=exact, T=spec.T, name="ode_ml",
    )


def _ode_cos(spec: ProblemSpec) -> Problem:
    return Problem(
        ScalarOperator(spec.lam), spec.beta, lambda t: 2 * np.cos(np.asarray(t, dtype=float)), spec.u0,
        T=spec.T, name="ode_cos",
    )


def _ode_heaviside(spec: ProblemSpec) -> Problem:
    beta, lam, r = spec.beta, spec.lam, spec.r

    def exact(t):
        return heaviside_profile(t, beta, r)

    def f(t):
        return lam * heaviside_profile(t, beta, r) + heaviside_forcing(t, beta, r)

    return Problem(ScalarOperator(lam), beta, f, 1.0, exact=exact, T=spec.T, name="ode_heaviside")


def _pde_heaviside(spec: ProblemSpec) -> Problem:
    beta, r = spec.beta, spec.r
    op = FEMOperator(spec.E)
    # both data and solution are a time profile times sin x
    shape = op.l2_project(np.sin)

    def exact(t):
        return np.multiply.outer(heaviside_profile(t, beta, r), shape)

    def f(t):
        return np.multiply.outer(heaviside_profile(t, beta, r) + heaviside_forcing(t, beta, r), shape)

    return Problem(op, beta, f, shape.copy(), exact=exact, T=spec.T, name="pde_heaviside")


def make_problem(spec: ProblemSpec) -> Problem:
    return {
        "ode_ml": _ode_ml,
        "ode_cos": _ode_cos,
        "ode_heaviside": _ode_heaviside,
        "pde_heaviside": _pde_heaviside,
    }[spec.id](spec)
