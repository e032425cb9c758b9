"""Command line entry point: ``subdiff {converge,adaptive,weights,selftest}``."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .adaptive import AdaptiveConfig
from .cq import CQContext, compose_check, cq_weight, cq_weight_divdiff, cq_weights_uniform
from .estimator import ERROR_RULES, EstimatorConfig
from .mesh import graded_mesh, uniform_mesh
from .problems import PROBLEM_IDS, ProblemSpec
from .stepper import SCHEMES
from .studies import (
    ADAPTIVE_COLUMNS,
    CONVERGENCE_COLUMNS,
    AdaptiveStudyConfig,
    StudyConfig,
    load_config,
    run_adaptive,
    run_convergence,
    write_csv,
)

# option name -> (converter, default); shared by flags and config files
OPTIONS = {
    "problem": (str, "ode_ml"),
    "scheme": (str, "l1"),
    "beta": (float, 0.8),
    "lambda": (float, 1.0),
    "r": (float, 0.28),
    "T": (float, 1.0),
    "grading": (float, 1.0),
    "n_list": (lambda s: tuple(int(v) for v in str(s).replace(",", " ").split()), (10, 20, 40, 80, 160, 320)),
    "t_eval": (float, 0.5),
    "theta_mark": (float, 0.75),
    "max_intervals": (int, 1024),
    "initial_n": (int, 8),
    "target": (float, None),
    "m_sub": (int, 4),
    "theta_res": (float, None),
    "error_rule": (str, "midpoint"),
    "elements": (int, 64),
    "N": (int, 10),
    "out": (str, None),
}


def _settings(args: argparse.Namespace, keys) -> dict:
    """Merge built-in defaults, an optional config file and explicit flags."""
    cfg = load_config(args.config) if args.config else {}
    unknown = set(cfg) - set(OPTIONS)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = {}
    for key in keys:
        conv, default = OPTIONS[key]
        flag = getattr(args, key, None)
        if flag is not None:
            out[key] = conv(flag)
        elif key in cfg:
            out[key] = conv(cfg[key])
        else:
            out[key] = default
    return out


def _problem_spec(s: dict) -> ProblemSpec:
    return ProblemSpec(s["problem"], s["beta"], lam=s["lambda"], r=s["r"], T=s["T"], E=s["elements"])


def _est_cfg(s: dict) -> EstimatorConfig:
    return EstimatorConfig(m_sub=s["m_sub"], theta_res=s["theta_res"], error_rule=s["error_rule"])


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_converge(args) -> int:
    s = _settings(args, ["problem", "scheme", "beta", "lambda", "r", "T", "grading", "n_list", "t_eval",
                         "m_sub", "theta_res", "error_rule", "elements", "out"])
    cfg = StudyConfig(_problem_spec(s), s["scheme"], s["grading"], s["n_list"], _est_cfg(s), s["t_eval"])
    rows = run_convergence(cfg)
    _emit(write_csv(rows, CONVERGENCE_COLUMNS), s["out"])
    return 0


def cmd_adaptive(args) -> int:
    s = _settings(args, ["problem", "scheme", "beta", "lambda", "r", "T", "theta_mark", "max_intervals",
                         "initial_n", "target", "m_sub", "theta_res", "error_rule", "elements", "out"])
    acfg = AdaptiveConfig(s["theta_mark"], s["max_intervals"], s["target"], uniform_mesh(s["T"], s["initial_n"]))
    study = run_adaptive(AdaptiveStudyConfig(_problem_spec(s), s["scheme"], acfg, _est_cfg(s), s["out"]))
    if s["out"] is None:
        sys.stdout.write(write_csv(study.rows, ADAPTIVE_COLUMNS))
    print(f"# stopped: {study.trace.stop_reason}", file=sys.stderr)
    return 0


def cmd_weights(args) -> int:
    s = _settings(args, ["beta", "T", "grading", "N", "out"])
    mesh = graded_mesh(s["T"], s["N"], s["grading"])
    ctx = CQContext(mesh, s["beta"])
    rows = []
    for n in range(mesh.N):
        for j in range(n + 1):
            row = {"n": n, "j": j, "quadrature": cq_weight(ctx, n, j), "divdiff": cq_weight_divdiff(ctx, n, j)}
            if s["grading"] == 1.0:
                row["uniform"] = cq_weights_uniform(mesh.steps[0], n - j, s["beta"])
            rows.append(row)
    _emit(write_csv(rows, ("n", "j", "quadrature", "divdiff", "uniform")), s["out"])
    return 0


def _selftests():
    from .spatial import FEMOperator
    from .special import mittag_leffler

    def fem_eigen():
        import scipy.linalg

        S, M = FEMOperator(64).dense_matrices()
        return abs(scipy.linalg.eigh(S, M, eigvals_only=True)[0] - 1)

    def fem_projection():
        return abs(FEMOperator(64).norm(FEMOperator(64).l2_project(np.sin)) - math.sqrt(math.pi / 2))

    def ml_erfc():
        from scipy.special import erfc

        return abs(mittag_leffler(0.5, -1.0) - math.e * erfc(1.0))

    def weight_routes():
        ctx = CQContext(graded_mesh(1.0, 12, 2.0), 0.5)
        worst = 0.0
        for n in range(12):
            for j in range(n + 1):
                a, b = cq_weight(ctx, n, j), cq_weight_divdiff(ctx, n, j)
                worst = max(worst, abs(a - b) / abs(b))
        return worst

    def composition():
        return compose_check(CQContext(graded_mesh(1.0, 12, 2.0), 0.5), 11)

    return [
        ("generalized eigenvalue of (S, M)", fem_eigen, 1e-6),
        ("norm of projected sine", fem_projection, 1e-6),
        ("Mittag-Leffler against e*erfc(1)", ml_erfc, 1e-12),
        ("CQ quadrature vs divided differences", weight_routes, 1e-8),
        ("CQ composition defect", composition, 1e-8),
    ]


def cmd_selftest(args) -> int:
    failed = 0
    for name, fn, tol in _selftests():
        value = fn()
        ok = value <= tol
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {value:.3e} (tol {tol:.0e})")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subdiff", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *names):
        p.add_argument("--config", help="key = value file; flags override its entries")
        flags = {
            "problem": dict(choices=PROBLEM_IDS),
            "scheme": dict(choices=SCHEMES),
            "beta": dict(type=float),
            "lambda": dict(type=float, dest="lambda"),
            "r": dict(type=float, help="jump time of the Heaviside problems"),
            "T": dict(type=float, help="final time"),
            "grading": dict(type=float, help="mesh grading exponent k >= 1"),
            "n_list": dict(help="comma separated interval counts"),
            "t_eval": dict(type=float, help="measurement time; meshes cover [0, t_eval]"),
            "theta_mark": dict(type=float),
            "max_intervals": dict(type=int),
            "initial_n": dict(type=int),
            "target": dict(type=float),
            "m_sub": dict(type=int),
            "theta_res": dict(type=float),
            "error_rule": dict(choices=ERROR_RULES),
            "elements": dict(type=int),
            "N": dict(type=int),
            "out": dict(),
        }
        for name in names:
            opt = "--" + name.replace("_", "-") if name not in ("T", "N") else "-" + name
            p.add_argument(opt, default=None, **flags[name])

    p = sub.add_parser("converge", help="convergence table at a fixed time")
    common(p, "problem", "scheme", "beta", "lambda", "r", "T", "grading", "n_list", "t_eval",
           "m_sub", "theta_res", "error_rule", "elements", "out")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("adaptive", help="mark-and-bisect run with a uniform baseline")
    common(p, "problem", "scheme", "beta", "lambda", "r", "T", "theta_mark", "max_intervals",
           "initial_n", "target", "m_sub", "theta_res", "error_rule", "elements", "out")
    p.set_defaults(func=cmd_adaptive)

    p = sub.add_parser("weights", help="CQ weights by every available route")
    common(p, "beta", "T", "grading", "N", "out")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("selftest", help="quick numerical sanity checks")
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # report any failure as a diagnostic and nonzero exit
        print(f"subdiff {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
