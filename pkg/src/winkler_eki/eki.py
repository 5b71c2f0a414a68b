"""Iterative Ensemble Kalman Inversion with discrepancy-principle stopping.

Each iteration perturbs the data per member, forms empirical covariances
(divisor J, as defined), applies the shared Kalman gain to every member's
innovation, and re-evaluates the forward map. The run stops when the misfit
of the ensemble-mean prediction falls to the noise norm, at the iteration
cap, or on an unrecoverable solver failure.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ._rng import PERTURB_STREAM, stream
from .errors import SolverFailure
from .grid import ScalarField, snake_flatten, snake_unflatten

__all__ = [
    "Observation",
    "Ensemble",
    "EkiConfig",
    "Metrics",
    "EnsembleStats",
    "KalmanGain",
    "RunReport",
    "empirical_stats",
    "kalman_gain",
    "perturb_observations",
    "eki_step",
    "metrics",
    "run_inversion",
    "snake_flatten",
    "snake_unflatten",
]

logger = logging.getLogger(__name__)

STOP_DISCREPANCY = "discrepancy"
STOP_MAX_ITERATIONS = "max_iterations"
STOP_SOLVER_FAILURE = "solver_failure"


@dataclass
class Observation:
    """Measured data vector with its noise description.

    Parameters
    ----------
    y : ndarray
        Observed values (length q).
    gamma : float
        Noise level, Gamma = gamma * Id; >= 0.
    eta_norm : float
        Gamma-norm of the realized noise, used by the discrepancy stop
        (0 in the noise-free case).
    """

    y: np.ndarray
    gamma: float
    eta_norm: float = 0.0

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if not np.isfinite(self.y).all():
            raise ValueError("observation contains non-finite values")
        if not self.gamma >= 0:
            raise ValueError(f"noise level gamma must be >= 0, got {self.gamma}")
        if not self.eta_norm >= 0:
            raise ValueError(f"eta_norm must be >= 0, got {self.eta_norm}")
        if self.gamma == 0 and self.eta_norm != 0:
            raise ValueError("noise-free observation must carry eta_norm = 0")


@dataclass
class Ensemble:
    """J candidate fields with cached forward evaluations.

    ``members`` has shape (J, p); ``evaluations`` shape (J, q) or None until
    the forward map has been applied; ``iteration`` is the pseudo-time index.
    """

    members: np.ndarray
    evaluations: np.ndarray | None = None
    iteration: int = 0

    def __post_init__(self):
        self.members = np.asarray(self.members, dtype=np.float64)
        if self.members.ndim != 2 or self.members.shape[0] < 1:
            raise ValueError("members must be a (J, p) array with J >= 1")
        if self.evaluations is not None:
            self.evaluations = np.asarray(self.evaluations, dtype=np.float64)
            if (
                self.evaluations.ndim != 2
                or self.evaluations.shape[0] != self.members.shape[0]
            ):
                raise ValueError("evaluations must have one row per member")

    @property
    def J(self) -> int:
        return self.members.shape[0]


@dataclass(frozen=True)
class EkiConfig:
    """Inversion settings.

    Parameters
    ----------
    J : int
        Ensemble size, >= 2.
    dt : float
        Pseudo-time step, >= 1.
    N : int
        Maximum number of iterations, >= 1.
    sigma_mode : str
        Observation-perturbation covariance: "gamma" draws xi ~ N(0, Gamma)
        per member per iteration, "zero" keeps data unperturbed.
    gamma_reg : float
        Gain regularization used in place of gamma when gamma = 0, > 0.
    seed : int
        64-bit RNG seed keying the perturbation streams.
    k_floor : float or None
        Optional lower clamp applied to members after each update
        (default disabled).
    """

    J: int
    dt: float = 1.0
    N: int = 2000
    sigma_mode: str = "gamma"
    gamma_reg: float = 1e-8
    seed: int = 0
    k_floor: float | None = None

    def __post_init__(self):
        if self.J < 2:
            raise ValueError(f"ensemble size J must be >= 2, got {self.J}")
        if not self.dt >= 1:
            raise ValueError(f"pseudo-time step dt must be >= 1, got {self.dt}")
        if self.N < 1:
            raise ValueError(f"iteration cap N must be >= 1, got {self.N}")
        if self.sigma_mode not in ("zero", "gamma"):
            raise ValueError(
                f"sigma_mode must be 'zero' or 'gamma', got {self.sigma_mode!r}"
            )
        if not self.gamma_reg > 0:
            raise ValueError(f"gamma_reg must be > 0, got {self.gamma_reg}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit nonnegative integer, got {self.seed}")
        if self.k_floor is not None and not np.isfinite(self.k_floor):
            raise ValueError(f"k_floor must be finite or None, got {self.k_floor}")


@dataclass
class EnsembleStats:
    """Empirical means and covariances of an evaluated ensemble."""

    mean_k: np.ndarray
    mean_g: np.ndarray
    c_kw: np.ndarray
    c_ww: np.ndarray


def empirical_stats(ens: Ensemble) -> EnsembleStats:
    """Means and cross/auto covariances with divisor J (as defined, not J-1)."""
    if ens.J == 0:
        raise ValueError("empty ensemble")
    if ens.evaluations is None:
        raise ValueError("ensemble evaluations are not populated")
    members = ens.members
    evals = ens.evaluations
    mean_k = members.mean(axis=0)
    mean_g = evals.mean(axis=0)
    dk = members - mean_k
    dg = evals - mean_g
    c_kw = dk.T @ dg / ens.J
    c_ww = dg.T @ dg / ens.J
    return EnsembleStats(mean_k=mean_k, mean_g=mean_g, c_kw=c_kw, c_ww=c_ww)


class KalmanGain:
    """Linear map v -> C_kw (C_ww + dt^-1 gamma_eff I)^-1 v.

    Realized as a Cholesky solve against the regularized matrix; the inverse
    is never formed.
    """

    def __init__(self, stats: EnsembleStats, gamma_eff: float, dt: float):
        if not gamma_eff > 0:
            raise ValueError(f"gamma_eff must be > 0, got {gamma_eff}")
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        q = stats.c_ww.shape[0]
        regularized = stats.c_ww + (gamma_eff / dt) * np.eye(q)
        try:
            self._cho = scipy.linalg.cho_factor(regularized, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise SolverFailure(
                f"regularized gain matrix is not positive definite: {exc}"
            ) from exc
        self._c_kw = stats.c_kw

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Apply the gain to a vector (q,) or a stack of columns (q, m)."""
        return self._c_kw @ scipy.linalg.cho_solve(self._cho, v)

    def dense(self) -> np.ndarray:
        """Materialize the gain matrix (tests and diagnostics only)."""
        return self.apply(np.eye(self._c_kw.shape[1]))


def kalman_gain(stats: EnsembleStats, gamma_eff: float, dt: float) -> KalmanGain:
    """Kalman gain for the given statistics; see :class:`KalmanGain`."""
    return KalmanGain(stats, gamma_eff, dt)


def perturb_observations(y: Observation, cfg: EkiConfig, n: int, J: int) -> np.ndarray:
    """Per-member data vectors y + xi for iteration n, shape (J, q).

    With sigma_mode = "zero" (or gamma = 0) all rows equal y bit-exactly.
    Otherwise xi_j ~ N(0, gamma * Id) from the stream keyed (seed, n, j),
    so draws do not depend on evaluation order.
    """
    q = y.y.shape[0]
    out = np.tile(y.y, (J, 1))
    if cfg.sigma_mode == "zero" or y.gamma == 0:
        return out
    scale = np.sqrt(y.gamma)
    for j in range(J):
        xi = stream(cfg.seed, PERTURB_STREAM, n, j).standard_normal(q)
        out[j] += scale * xi
    return out


@dataclass
class Metrics:
    """Per-iteration diagnostics of an inversion run.

    ``theta`` is the misfit of the ensemble-mean prediction in the Gamma
    norm (plain L2 when gamma = 0, where the stopping rule is disabled);
    ``member_misfits`` are the per-member misfits in the same norm;
    ``deviations`` are relative spreads around the mean; ``residuals`` are
    relative distances to the truth (None when no truth is supplied).
    """

    theta: float
    member_misfits: np.ndarray
    deviations: np.ndarray
    residuals: np.ndarray | None = None


def metrics(ens: Ensemble, y: Observation, k_truth=None) -> Metrics:
    """Deviation e_j, residual r_j and misfit theta of the current ensemble."""
    if ens.evaluations is None:
        raise ValueError("ensemble evaluations are not populated")
    mean_k = ens.members.mean(axis=0)
    mean_g = ens.evaluations.mean(axis=0)
    scale = 1.0 / np.sqrt(y.gamma) if y.gamma > 0 else 1.0
    theta = float(np.linalg.norm(y.y - mean_g)) * scale
    member_misfits = np.linalg.norm(y.y - ens.evaluations, axis=1) * scale

    mean_norm = float(np.linalg.norm(mean_k))
    if mean_norm == 0.0:
        raise ValueError("ensemble mean has zero norm; deviations are undefined")
    deviations = np.linalg.norm(ens.members - mean_k, axis=1) / mean_norm

    residuals = None
    if k_truth is not None:
        truth = k_truth.values if isinstance(k_truth, ScalarField) else np.asarray(k_truth)
        truth = truth.reshape(-1)
        truth_norm = float(np.linalg.norm(truth))
        if truth_norm == 0.0:
            raise ValueError("truth field has zero norm; residuals are undefined")
        residuals = np.linalg.norm(ens.members - truth, axis=1) / truth_norm
    return Metrics(
        theta=theta,
        member_misfits=member_misfits,
        deviations=deviations,
        residuals=residuals,
    )


def _evaluate_members(members, fwd, *, iteration, workers=1, strict=False, previous=None):
    """Evaluate the forward map on every member row.

    Returns (members, evaluations); on a member solve failure the member is
    frozen at its previous state (requires ``previous``) unless ``strict``,
    in which case the typed failure propagates with (iteration, member).
    """
    J = members.shape[0]
    results = [None] * J
    failures: list[SolverFailure | None] = [None] * J

    def evaluate(j):
        try:
            results[j] = np.asarray(fwd(members[j]), dtype=np.float64)
        except SolverFailure as exc:
            failures[j] = exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(evaluate, range(J)))
    else:
        for j in range(J):
            evaluate(j)

    failed = [j for j, exc in enumerate(failures) if exc is not None]
    if failed:
        j0 = failed[0]
        if strict or previous is None:
            raise SolverFailure(str(failures[j0]), member=j0, iteration=iteration)
        prev_members, prev_evals = previous
        logger.warning(
            "iteration %d: froze %d member(s) after solver failure (first: member %d)",
            iteration, len(failed), j0,
        )
        for j in failed:
            members[j] = prev_members[j]
            results[j] = prev_evals[j]
    return members, np.stack(results)


def eki_step(ens: Ensemble, y: Observation, cfg: EkiConfig, fwd, *,
             workers: int = 1, strict: bool = False) -> Ensemble:
    """One ensemble update with a shared gain from the pre-update statistics.

    Every member receives k_j + K(y_j - G(k_j)) with its own (possibly
    perturbed) data vector y_j; the forward map is then re-evaluated on the
    new members and the iteration index advances by one.
    """
    if ens.evaluations is None:
        raise ValueError("ensemble evaluations must be populated before stepping")
    stats = empirical_stats(ens)
    gamma_eff = y.gamma if y.gamma > 0 else cfg.gamma_reg
    try:
        gain = kalman_gain(stats, gamma_eff, cfg.dt)
    except SolverFailure as exc:
        raise SolverFailure(str(exc), iteration=ens.iteration) from exc

    data = perturb_observations(y, cfg, ens.iteration, ens.J)
    innovations = data - ens.evaluations
    new_members = ens.members + gain.apply(innovations.T).T
    if cfg.k_floor is not None:
        np.maximum(new_members, cfg.k_floor, out=new_members)

    new_members, evaluations = _evaluate_members(
        new_members, fwd,
        iteration=ens.iteration + 1,
        workers=workers,
        strict=strict,
        previous=(ens.members, ens.evaluations),
    )
    return Ensemble(members=new_members, evaluations=evaluations,
                    iteration=ens.iteration + 1)


@dataclass
class RunReport:
    """Per-iteration traces plus the stopping diagnosis and final mean field.

    Row 0 describes the initial ensemble; each further row one completed
    update. ``resid_mean`` is NaN when no truth was supplied.
    """

    iters: np.ndarray
    theta: np.ndarray
    resid_mean: np.ndarray
    dev_mean: np.ndarray
    theta_min: np.ndarray
    theta_max: np.ndarray
    stop_reason: str
    eta_norm: float
    final_mean: np.ndarray = field(repr=False)

    @property
    def iterations(self) -> int:
        """Number of completed updates."""
        return int(self.iters[-1])

    def write_csv(self, path) -> None:
        """Write the documented report format."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["iter", "theta", "resid_mean", "dev_mean", "theta_min", "theta_max"]
            )
            for row in zip(self.iters, self.theta, self.resid_mean,
                           self.dev_mean, self.theta_min, self.theta_max):
                writer.writerow([int(row[0])] + ["%.17g" % v for v in row[1:]])

    @classmethod
    def read_csv(cls, path, *, stop_reason="unknown", eta_norm=float("nan"),
                 final_mean=None) -> "RunReport":
        """Read the report rows back (metadata lives in the run manifest)."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            expected = ["iter", "theta", "resid_mean", "dev_mean", "theta_min", "theta_max"]
            if header != expected:
                raise ValueError(f"{path}: expected header {','.join(expected)}")
            rows = [row for row in reader if row]
        if not rows:
            raise ValueError(f"{path}: no data rows")
        cols = list(zip(*rows))
        return cls(
            iters=np.array([int(v) for v in cols[0]]),
            theta=np.array([float(v) for v in cols[1]]),
            resid_mean=np.array([float(v) for v in cols[2]]),
            dev_mean=np.array([float(v) for v in cols[3]]),
            theta_min=np.array([float(v) for v in cols[4]]),
            theta_max=np.array([float(v) for v in cols[5]]),
            stop_reason=stop_reason,
            eta_norm=eta_norm,
            final_mean=np.empty(0) if final_mean is None else final_mean,
        )


def run_inversion(y: Observation, cfg: EkiConfig, prior, ctx, k_truth=None, *,
                  workers: int = 1, strict: bool = False) -> RunReport:
    """Run the full inversion loop.

    Parameters
    ----------
    y : Observation
        Data vector with noise level and realized noise norm.
    cfg : EkiConfig
        Iteration settings.
    prior : PriorSpec or Ensemble
        Prior to sample the initial ensemble from (needs a ForwardContext
        ``ctx`` for the grid and operator), or an explicit initial ensemble.
    ctx : callable
        Forward map applied to one member vector; typically a
        :class:`~winkler_eki.plate.ForwardContext`.
    k_truth : ScalarField or ndarray, optional
        Ground truth for residual traces.
    workers : int
        Worker threads for member evaluations (results are identical for
        any worker count).
    strict : bool
        Abort on the first member solver failure instead of freezing it.

    Returns
    -------
    RunReport
        One row for the initial ensemble plus one per completed update;
        ``stop_reason`` is "discrepancy" as soon as theta <= ||eta||
        (never when ||eta|| = 0), else "max_iterations", or
        "solver_failure" on an unrecoverable breakdown (partial report).
    """
    from .priors import PriorSpec, sample_prior  # late import, priors builds on eki

    if isinstance(prior, Ensemble):
        ens = prior
    elif isinstance(prior, PriorSpec):
        ens = sample_prior(prior, ctx.grid, ctx.B, cfg.J)
    else:
        raise TypeError(f"prior must be a PriorSpec or Ensemble, got {type(prior)!r}")
    if ens.J != cfg.J:
        raise ValueError(f"ensemble size {ens.J} does not match cfg.J={cfg.J}")

    if ens.evaluations is None:
        members, evaluations = _evaluate_members(
            ens.members.copy(), ctx,
            iteration=ens.iteration, workers=workers, strict=strict, previous=None,
        )
        ens = Ensemble(members=members, evaluations=evaluations,
                       iteration=ens.iteration)
    if ens.evaluations.shape[1] != y.y.shape[0]:
        raise ValueError(
            f"forward map returns {ens.evaluations.shape[1]} values but the "
            f"observation has {y.y.shape[0]}"
        )

    rows = []
    stop_reason = STOP_MAX_ITERATIONS
    failure = None
    while True:
        m = metrics(ens, y, k_truth)
        rows.append((
            ens.iteration,
            m.theta,
            float(np.mean(m.residuals)) if m.residuals is not None else float("nan"),
            float(np.mean(m.deviations)),
            float(np.min(m.member_misfits)),
            float(np.max(m.member_misfits)),
        ))
        if y.eta_norm > 0 and m.theta <= y.eta_norm:
            stop_reason = STOP_DISCREPANCY
            break
        if ens.iteration >= cfg.N:
            stop_reason = STOP_MAX_ITERATIONS
            break
        try:
            ens = eki_step(ens, y, cfg, ctx, workers=workers, strict=strict)
        except SolverFailure as exc:
            stop_reason = STOP_SOLVER_FAILURE
            failure = exc
            break

    cols = list(zip(*rows))
    report = RunReport(
        iters=np.array(cols[0], dtype=int),
        theta=np.array(cols[1]),
        resid_mean=np.array(cols[2]),
        dev_mean=np.array(cols[3]),
        theta_min=np.array(cols[4]),
        theta_max=np.array(cols[5]),
        stop_reason=stop_reason,
        eta_norm=y.eta_norm,
        final_mean=ens.members.mean(axis=0),
    )
    if failure is not None:
        logger.warning("inversion aborted: %s", failure)
    logger.info(
        "inversion finished: %d iteration(s), stop_reason=%s, theta=%.6g",
        report.iterations, stop_reason, report.theta[-1],
    )
    return report
