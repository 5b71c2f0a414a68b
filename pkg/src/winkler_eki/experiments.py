"""Experiment recipes: ground-truth coefficients, synthetic observations,
and end-to-end direct/inverse runs with a reproducible on-disk layout.

Every experiment is fully described by its manifest (flat key=value file);
re-running from the manifest reproduces all outputs byte-exactly.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from ._rng import OBS_STREAM, stream
from .eki import EkiConfig, Observation, RunReport, run_inversion
from .grid import Grid, ScalarField, write_snake_csv
from .plate import ForwardContext, PlateModel, assemble_biharmonic, forward_solve
from .priors import PriorSpec, sample_prior

__all__ = [
    "TruthSpec",
    "ExperimentSpec",
    "truth_field",
    "make_observation",
    "run_direct_experiment",
    "run_inverse_experiment",
    "run_experiment",
    "write_manifest",
    "read_manifest",
    "run_from_manifest",
    "MANIFEST_KEYS",
    "PIECEWISE_TABLE",
]

# Region rows: (value, x-interval, y-interval); an interval is
# (lo, hi, lo_closed, hi_closed). First matching region wins; the rows are
# disjoint in y, so at most one can match. Openness is honored exactly.
PIECEWISE_TABLE = (
    (0.13, (0.1, 1.0, False, False), (0.0, 0.1, False, False)),
    (0.07, (0.5, 1.0, False, False), (0.1, 0.3, True, False)),
    (0.05, (0.0, 0.9, False, False), (0.3, 0.5, True, False)),
    (0.15, (0.0, 0.6, False, False), (0.5, 0.7, True, False)),
    (0.10, (0.0, 1.0, False, False), (0.7, 1.0, True, False)),
)

_TRUTH_KINDS = ("exp", "piecewise", "custom")


def _interval_contains(interval, t: float) -> bool:
    lo, hi, lo_closed, hi_closed = interval
    left = t >= lo if lo_closed else t > lo
    right = t <= hi if hi_closed else t < hi
    return left and right


@dataclass(frozen=True)
class TruthSpec:
    """Ground-truth coefficient description.

    kind "exp" is k(x,y) = e^(x+y); "piecewise" uses the five-region table
    above with ``fill`` (default 0) on uncovered nodes; "custom" evaluates a
    user table of the same row shape.
    """

    kind: str = "exp"
    table: tuple = PIECEWISE_TABLE
    fill: float = 0.0

    def __post_init__(self):
        if self.kind not in _TRUTH_KINDS:
            raise ValueError(
                f"truth kind must be one of {_TRUTH_KINDS}, got {self.kind!r}"
            )


def truth_field(spec, grid: Grid) -> ScalarField:
    """Evaluate the ground-truth coefficient at the interior nodes.

    ``spec`` may be a TruthSpec or one of the kind strings.
    """
    if isinstance(spec, str):
        spec = TruthSpec(kind=spec)
    if spec.kind == "exp":
        return ScalarField.from_function(grid, lambda x, y: np.exp(x + y))

    def lookup(x: float, y: float) -> float:
        for value, x_iv, y_iv in spec.table:
            if _interval_contains(x_iv, x) and _interval_contains(y_iv, y):
                return value
        return spec.fill

    x, y = grid.interior_coords()
    values = np.array([lookup(float(xi), float(yi)) for xi, yi in zip(x, y)])
    return ScalarField(grid, values)


_MODES = ("direct", "inverse")
_MANIFEST_TRUTHS = ("exp", "piecewise")
MANIFEST_KEYS = (
    "mode", "truth", "n", "gamma", "beta", "J", "sigma_mode",
    "dt", "N", "seed", "k_floor", "gamma_reg",
)


@dataclass(frozen=True)
class ExperimentSpec:
    """Complete description of one experiment; maps 1:1 onto the manifest."""

    mode: str = "inverse"
    truth: str = "exp"
    n: int = 10
    gamma: float = 0.01
    beta: float = 1e6
    J: int = 100
    sigma_mode: str = "gamma"
    dt: float = 1.0
    N: int = 2000
    seed: int = 0
    k_floor: float | None = None
    gamma_reg: float = 1e-8

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.truth not in _MANIFEST_TRUTHS:
            raise ValueError(
                f"truth must be one of {_MANIFEST_TRUTHS}, got {self.truth!r}"
            )
        if self.n < 4:
            raise ValueError(f"grid parameter n must be >= 4, got {self.n}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        # remaining fields share EkiConfig's rules; fail early here
        self.eki_config()

    def eki_config(self) -> EkiConfig:
        return EkiConfig(
            J=self.J, dt=self.dt, N=self.N, sigma_mode=self.sigma_mode,
            gamma_reg=self.gamma_reg, seed=self.seed, k_floor=self.k_floor,
        )

    def prior_spec(self) -> PriorSpec:
        return PriorSpec(beta=self.beta, seed=self.seed)


def _default_context(spec: ExperimentSpec) -> ForwardContext:
    grid = Grid(spec.n)
    return ForwardContext(grid=grid, model=PlateModel(), B=assemble_biharmonic(grid))


def make_observation(spec: ExperimentSpec, ctx: ForwardContext) -> Observation:
    """Synthetic data y = G(k_truth) + eta with eta ~ N(0, gamma Id).

    The noise stream is keyed by the experiment seed alone, so the same seed
    always yields the same data; gamma = 0 returns the exact solve and
    eta_norm = 0.
    """
    k_truth = truth_field(spec.truth, ctx.grid)
    clean = np.asarray(ctx(k_truth.values), dtype=np.float64)
    if spec.gamma == 0:
        return Observation(y=clean, gamma=0.0, eta_norm=0.0)
    eta = math.sqrt(spec.gamma) * stream(spec.seed, OBS_STREAM).standard_normal(
        clean.shape[0]
    )
    eta_norm = float(np.linalg.norm(eta)) / math.sqrt(spec.gamma)
    return Observation(y=clean + eta, gamma=spec.gamma, eta_norm=eta_norm)


def write_manifest(path, spec: ExperimentSpec) -> None:
    """Write the flat key=value manifest (documented key order)."""
    lines = []
    for key in MANIFEST_KEYS:
        value = getattr(spec, key)
        if key in ("n", "J", "N", "seed"):
            text = str(int(value))
        elif key == "k_floor":
            text = "none" if value is None else "%.17g" % value
        elif isinstance(value, str):
            text = value
        else:
            text = "%.17g" % value
        lines.append(f"{key}={text}\n")
    with open(path, "w") as fh:
        fh.writelines(lines)


def read_manifest(path) -> ExperimentSpec:
    """Parse a manifest back into an ExperimentSpec.

    Keys beyond the documented set (run metadata appended after completion)
    are ignored.
    """
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, text = line.partition("=")
            values[key.strip()] = text.strip()
    missing = [k for k in MANIFEST_KEYS if k not in values]
    if missing:
        raise ValueError(f"{path}: manifest is missing keys {missing}")
    return ExperimentSpec(
        mode=values["mode"],
        truth=values["truth"],
        n=int(values["n"]),
        gamma=float(values["gamma"]),
        beta=float(values["beta"]),
        J=int(values["J"]),
        sigma_mode=values["sigma_mode"],
        dt=float(values["dt"]),
        N=int(values["N"]),
        seed=int(values["seed"]),
        k_floor=None if values["k_floor"] == "none" else float(values["k_floor"]),
        gamma_reg=float(values["gamma_reg"]),
    )


def _append_run_metadata(path, y: Observation, report: RunReport) -> None:
    # run-level facts recorded alongside the spec keys once the run is done
    with open(path, "a") as fh:
        fh.write("eta_norm=%.17g\n" % y.eta_norm)
        fh.write(f"stop_reason={report.stop_reason}\n")


def _write_outputs(outdir, spec, *, grid, truth, obs, member0, recon, report):
    os.makedirs(outdir, exist_ok=True)
    manifest = os.path.join(outdir, "manifest")
    write_manifest(manifest, spec)
    truth.write_csv(os.path.join(outdir, "truth.csv"))
    ScalarField(grid, obs.y).write_csv(os.path.join(outdir, "obs.csv"))
    member0.write_csv(os.path.join(outdir, "prior_member0.csv"))
    recon.write_csv(os.path.join(outdir, "recon.csv"))
    write_snake_csv(os.path.join(outdir, "recon_snake.csv"), recon)
    report.write_csv(os.path.join(outdir, "report.csv"))
    _append_run_metadata(manifest, obs, report)


def run_inverse_experiment(spec: ExperimentSpec, ctx: ForwardContext | None = None,
                           outdir=None, *, workers: int = 1, strict: bool = False):
    """Reconstruct the foundation coefficient from noisy displacement data.

    Returns {k_truth, k_prior_sample, k_reconstructed, report, observation};
    when ``outdir`` is given also writes the documented file layout.
    """
    if spec.mode != "inverse":
        raise ValueError(f"spec.mode must be 'inverse', got {spec.mode!r}")
    if ctx is None:
        ctx = _default_context(spec)
    k_truth = truth_field(spec.truth, ctx.grid)
    y = make_observation(spec, ctx)
    ens = sample_prior(spec.prior_spec(), ctx.grid, ctx.B, spec.J)
    member0 = ScalarField(ctx.grid, ens.members[0].copy())
    report = run_inversion(y, spec.eki_config(), ens, ctx, k_truth=k_truth,
                           workers=workers, strict=strict)
    recon = ScalarField(ctx.grid, report.final_mean)
    if outdir is not None:
        _write_outputs(outdir, spec, grid=ctx.grid, truth=k_truth, obs=y,
                       member0=member0, recon=recon, report=report)
    return {
        "k_truth": k_truth,
        "k_prior_sample": member0,
        "k_reconstructed": recon,
        "report": report,
        "observation": y,
    }


def _identity(v):
    return v


def run_direct_experiment(spec: ExperimentSpec, ctx: ForwardContext | None = None,
                          outdir=None, *, workers: int = 1, strict: bool = False):
    """Denoise the displacement field itself.

    Solves the plate system at the ground-truth coefficient, perturbs the
    solution, and runs the ensemble update with the identity forward map to
    recover it. Returns {w_true, y_noisy, w_reconstructed, report}.
    """
    if spec.mode != "direct":
        raise ValueError(f"spec.mode must be 'direct', got {spec.mode!r}")
    if ctx is None:
        ctx = _default_context(spec)
    k_truth = truth_field(spec.truth, ctx.grid)
    w_true = forward_solve(ctx.B, k_truth.values, ctx.load, D=ctx.model.D)
    y = make_observation(spec, ctx)
    ens = sample_prior(spec.prior_spec(), ctx.grid, ctx.B, spec.J)
    member0 = ScalarField(ctx.grid, ens.members[0].copy())
    report = run_inversion(y, spec.eki_config(), ens, _identity,
                           k_truth=w_true, workers=workers, strict=strict)
    recon = ScalarField(ctx.grid, report.final_mean)
    if outdir is not None:
        _write_outputs(outdir, spec, grid=ctx.grid, truth=w_true, obs=y,
                       member0=member0, recon=recon, report=report)
    return {
        "w_true": w_true,
        "y_noisy": y,
        "w_reconstructed": recon,
        "report": report,
        "observation": y,
    }


def run_experiment(spec: ExperimentSpec, ctx: ForwardContext | None = None,
                   outdir=None, *, workers: int = 1, strict: bool = False):
    """Dispatch on spec.mode; see the mode-specific runners."""
    if spec.mode == "direct":
        return run_direct_experiment(spec, ctx, outdir, workers=workers, strict=strict)
    return run_inverse_experiment(spec, ctx, outdir, workers=workers, strict=strict)


def run_from_manifest(path, outdir=None, *, workers: int = 1, strict: bool = False):
    """Re-run an experiment from its manifest (bit-reproducible)."""
    spec = read_manifest(path)
    if outdir is None:
        outdir = os.path.dirname(os.path.abspath(path))
    return run_experiment(spec, outdir=outdir, workers=workers, strict=strict)
