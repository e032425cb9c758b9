"""Convergence and adaptive study drivers with CSV output."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .adaptive import AdaptiveConfig, AdaptiveTrace, adapt
from .estimator import EstimatorConfig, eoc, estimate_series
from .mesh import dump_mesh, graded_mesh, uniform_mesh
from .problems import ProblemSpec, make_problem
from .stepper import SCHEMES, solve, solve_l1

REFERENCE_N = 20480
REFERENCE_GRADING = 2.0

CONVERGENCE_COLUMNS = (
    "N", "E1", "E1_eoc", "E1_est", "E1_est_eoc", "E2", "E2_eoc", "E2_est", "E2_est_eoc",
)
ADAPTIVE_COLUMNS = ("iteration", "N", "e_max", "e_max_est", "uniform_e_max", "uniform_e_max_est")


def _fmt(v) -> str:
    return "" if v is None else repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def write_csv(rows, columns, path: str | Path | None = None) -> str:
    """Render ``rows`` (dicts) as CSV; floats use ``repr`` so they re-parse exactly."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv(path_or_text: str | Path) -> list[dict]:
    text = Path(path_or_text).read_text() if isinstance(path_or_text, Path) else str(path_or_text)
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append({k: (float(v) if v not in ("",) else None) for k, v in row.items()})
    return out


# ---------------------------------------------------------------------------
# convergence tables


@dataclass(frozen=True)
class StudyConfig:
    """A convergence study.

    Every mesh covers ``[0, t_eval]`` with ``N`` intervals (graded with
    exponent ``grading``), and errors and estimates are reported at
    ``t = t_eval``.
    """

    problem: ProblemSpec
    scheme: str = "l1"
    grading: float = 1.0
    n_list: tuple[int, ...] = (10, 20, 40, 80, 160, 320)
    est_cfg: EstimatorConfig = field(default_factory=EstimatorConfig)
    t_eval: float = 0.5
    out: str | Path | None = None

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.n_list or any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ValueError("N sequence must be non-empty and increasing")
        if self.grading < 1:
            raise ValueError("grading exponent must be >= 1")
        if not self.t_eval > 0:
            raise ValueError("t_eval must be positive")


@lru_cache(maxsize=8)
def reference_value(spec: ProblemSpec, t: float = 0.5) -> float:
    """Fine-mesh L1 value ``u(t)`` for problems without a closed form."""
    problem = make_problem(spec)
    return float(solve_l1(problem, graded_mesh(t, REFERENCE_N, REFERENCE_GRADING)).values[-1])


def _with_rates(rows: list[dict], key: str, ns) -> None:
    vals = [r[key] for r in rows]
    if any(v is None for v in vals):
        for r in rows:
            r[key + "_eoc"] = None
        return
    if len(rows) == 1:
        rates = [None]
    elif all(b == 2 * a for a, b in zip(ns, ns[1:])):
        rates = eoc(vals, ns)
    else:
        # non-doubling sequences still get pairwise rates scaled by the N ratio
        rates = [None] + [float(np.log(a / b) / np.log(nb / na)) for a, b, na, nb in zip(vals, vals[1:], ns, ns[1:])]
    for r, q in zip(rows, rates):
        r[key + "_eoc"] = q


def run_convergence(cfg: StudyConfig) -> list[dict]:
    problem = make_problem(cfg.problem)
    reference = None if problem.exact is not None else reference_value(cfg.problem, cfg.t_eval)
    rows = []
    for N in cfg.n_list:
        mesh = graded_mesh(cfg.t_eval, N, cfg.grading)
        traj = solve(problem, mesh, cfg.scheme)
        series = estimate_series(traj, problem, cfg.est_cfg)
        row = {"N": N, "E1_est": series.e1_est[-1], "E2_est": series.e2_est[-1]}
        if series.e1 is not None:
            row["E1"], row["E2"] = series.e1[-1], series.e2[-1]
        else:
            row["E1"] = None
            row["E2"] = abs(reference - float(traj.values[-1]))
        rows.append(row)
    ns = list(cfg.n_list)
    for key in ("E1", "E1_est", "E2", "E2_est"):
        _with_rates(rows, key, ns)
    if cfg.out is not None:
        write_csv(rows, CONVERGENCE_COLUMNS, cfg.out)
    return rows


# ---------------------------------------------------------------------------
# adaptive runs


@dataclass(frozen=True)
class AdaptiveStudyConfig:
    problem: ProblemSpec
    scheme: str = "l1"
    adaptive: AdaptiveConfig = field(default_factory=AdaptiveConfig)
    est_cfg: EstimatorConfig = field(default_factory=EstimatorConfig)
    out: str | Path | None = None

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")


@dataclass
class AdaptiveStudy:
    trace: AdaptiveTrace
    rows: list[dict]


def run_adaptive(cfg: AdaptiveStudyConfig) -> AdaptiveStudy:
    """Adaptive loop plus a uniform baseline at every visited interval count.

    With ``out`` set to a directory, writes ``adaptive.csv`` and the final
    mesh as ``final_mesh.txt``.
    """
    problem = make_problem(cfg.problem)
    trace = adapt(problem, cfg.scheme, cfg.adaptive, cfg.est_cfg)
    T = trace.iterations[0].mesh.T
    rows = []
    for i, it in enumerate(trace.iterations):
        base = estimate_series(solve(problem, uniform_mesh(T, it.N), cfg.scheme), problem, cfg.est_cfg)
        rows.append({
            "iteration": i,
            "N": it.N,
            "e_max": it.e_max,
            "e_max_est": it.e_max_est,
            "uniform_e_max": None if base.e2 is None else float(base.e2[1:].max()),
            "uniform_e_max_est": float(base.e2_est[1:].max()),
        })
    if cfg.out is not None:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(rows, ADAPTIVE_COLUMNS, out / "adaptive.csv")
        dump_mesh(trace.final.mesh, out / "final_mesh.txt")
    return AdaptiveStudy(trace, rows)


# ---------------------------------------------------------------------------
# configuration files


def load_config(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ValueError(f"{path}:{lineno}: empty key")
        out[key.replace("-", "_")] = value
    return out
