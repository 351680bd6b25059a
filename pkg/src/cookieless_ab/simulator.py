"""Monte Carlo harness for the two-site design.

Populations are synthesized from a declared outcome model, pushed
through the real randomization pipeline, and estimated with each method
so bias and dispersion can be measured against the known truth. All
draws derive from named substreams of one base seed: replication k of a
spec is bit-identical no matter which other replications ran before it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import (
    EXPOSURE_INDEX,
    EXPOSURE_PAIRS,
    DesignConfig,
    EstimatorMethod,
    PotentialOutcomeProfile,
    UserRecord,
    true_te,
)
from .errors import ValidationError
from .estimators import (
    CellQuartet,
    corrected_te,
    covariate_adjusted_ate,
    naive_adjusted_ate,
    naive_ate,
    summarize_cells,
)
from .randomization import Site1Log, derive_seed, expose_population, substream

SWEEP_AXES = ("delta1", "delta2", "p_overlap", "noise_sd")

# Methods reported by default, in presentation order.
DEFAULT_METHODS = (
    EstimatorMethod.NAIVE,
    EstimatorMethod.NAIVE_ADJ,
    EstimatorMethod.CORRECTED,
    EstimatorMethod.CORRECTED_ADJ,
)


@dataclass(frozen=True)
class SyntheticSpec:
    """Declarative description of a synthetic two-site population.

    Outcomes follow mean map ``mu`` over the six exposure pairs plus a
    linear covariate signal and Gaussian noise; ``delta1 = mu[1,4] -
    mu[1,3]`` and ``delta2 = mu[2,4] - mu[2,3]`` restate the cross-site
    effects and must agree with ``mu``. ``outcome_kind`` "binary" draws
    each potential outcome as Bernoulli(mu) instead and requires
    ``covariate_dim`` 0 so means stay exact probabilities.
    """

    mu: Mapping[tuple[int, int], float]
    delta1: float
    delta2: float
    p_overlap: float
    n_users: int
    n_reps: int
    seed: int
    noise_sd: float = 1.0
    covariate_dim: int = 0
    covariate_coeffs: tuple[float, ...] = ()
    outcome_kind: str = "gaussian"

    def __post_init__(self):
        mu = dict(self.mu)
        missing = [p for p in EXPOSURE_PAIRS if p not in mu]
        if missing:
            raise ValidationError(f"mu missing exposure pairs: {missing}")
        extra = set(mu) - set(EXPOSURE_PAIRS)
        if extra:
            raise ValidationError(f"mu has unknown exposure pairs: {sorted(extra)}")
        for pair, value in mu.items():
            if not math.isfinite(float(value)):
                raise ValidationError(f"mu[{pair}] must be finite")
        object.__setattr__(self, "mu", {p: float(mu[p]) for p in EXPOSURE_PAIRS})
        for name, want in (
            ("delta1", self.mu[(1, 4)] - self.mu[(1, 3)]),
            ("delta2", self.mu[(2, 4)] - self.mu[(2, 3)]),
        ):
            got = float(getattr(self, name))
            if abs(got - want) > 1e-9:
                raise ValidationError(
                    f"{name}={got!r} disagrees with mu (expected {want!r})"
                )
        if not (0.0 <= self.p_overlap <= 1.0):
            raise ValidationError(f"p_overlap must lie in [0, 1], got {self.p_overlap!r}")
        if self.n_users < 1:
            raise ValidationError("n_users must be >= 1")
        if self.n_reps < 1:
            raise ValidationError("n_reps must be >= 1")
        if self.n_users >= 2**32 or self.n_reps >= 2**31:
            raise ValidationError("n_users and n_reps must fit the uid layout")
        if self.covariate_dim < 0:
            raise ValidationError("covariate_dim must be >= 0")
        if len(self.covariate_coeffs) != self.covariate_dim:
            raise ValidationError(
                f"covariate_coeffs must have length {self.covariate_dim}"
            )
        if self.outcome_kind == "gaussian":
            if not (self.noise_sd > 0.0):
                raise ValidationError("noise_sd must be > 0 for gaussian outcomes")
        elif self.outcome_kind == "binary":
            if self.covariate_dim != 0:
                raise ValidationError(
                    "binary outcomes require covariate_dim = 0; the Bernoulli means "
                    "must equal mu exactly for the truth to stay analytic"
                )
            bad = {p: v for p, v in self.mu.items() if not (0.0 <= v <= 1.0)}
            if bad:
                raise ValidationError(f"binary outcomes need mu in [0, 1], got {bad}")
        else:
            raise ValidationError(
                f"outcome_kind must be 'gaussian' or 'binary', got {self.outcome_kind!r}"
            )

    @classmethod
    def from_deltas(
        cls,
        mu10: float,
        mu20: float,
        mu13: float,
        mu23: float,
        delta1: float,
        delta2: float,
        **kwargs,
    ) -> "SyntheticSpec":
        """Build the mean map from base means and the two cross effects."""
        mu = {
            (1, 0): mu10,
            (2, 0): mu20,
            (1, 3): mu13,
            (2, 3): mu23,
            (1, 4): mu13 + delta1,
            (2, 4): mu23 + delta2,
        }
        return cls(mu=mu, delta1=delta1, delta2=delta2, **kwargs)

    @property
    def true_te(self) -> float:
        return true_te(self.mu, self.p_overlap)

    @property
    def outcome_bounds(self) -> tuple[float, float] | None:
        return (0.0, 1.0) if self.outcome_kind == "binary" else None


@dataclass
class Population:
    """Columnar population: ids, covariates, all six potential outcomes."""

    uids: np.ndarray  # uint64
    covariates: np.ndarray  # (n, d)
    outcomes: np.ndarray  # (n, 6) in canonical exposure-pair order
    visits_both: np.ndarray  # bool
    outcome_bounds: tuple[float, float] | None = None

    @property
    def n(self) -> int:
        return len(self.uids)

    def users(self) -> list[UserRecord]:
        return [
            UserRecord(
                user_key=int(uid).to_bytes(8, "big"),
                visits_both=bool(v),
                covariates=tuple(float(x) for x in row),
            )
            for uid, v, row in zip(self.uids, self.visits_both, self.covariates)
        ]

    def profiles(self) -> list[PotentialOutcomeProfile]:
        return [
            PotentialOutcomeProfile(
                outcomes={pair: float(row[i]) for pair, i in EXPOSURE_INDEX.items()}
            )
            for row in self.outcomes
        ]


def generate_population(spec: SyntheticSpec, rep: int = 0) -> Population:
    """Draw one population for replication ``rep`` of the spec.

    User ids pack (rep, index) into 64 bits so macrocluster hashing sees
    fresh keys each replication. Overlap status is drawn independently
    of outcomes and covariates.
    """
    if not (0 <= rep < 2**31):
        raise ValidationError(f"rep must lie in [0, 2^31), got {rep!r}")
    n, d = spec.n_users, spec.covariate_dim
    uids = (np.uint64(rep) << np.uint64(32)) | np.arange(n, dtype=np.uint64)

    x = substream(spec.seed, "covariates", rep).standard_normal((n, d))
    mu_vec = np.array([spec.mu[p] for p in EXPOSURE_PAIRS])
    if spec.outcome_kind == "binary":
        u = substream(spec.seed, "outcomes", rep).random((n, 6))
        y = (u < mu_vec[None, :]).astype(np.float64)
    else:
        noise = substream(spec.seed, "outcomes", rep).standard_normal((n, 6))
        signal = x @ np.asarray(spec.covariate_coeffs) if d else 0.0
        y = mu_vec[None, :] + np.atleast_1d(signal)[:, None] + spec.noise_sd * noise

    visits = substream(spec.seed, "overlap", rep).random(n) < spec.p_overlap
    return Population(
        uids=uids,
        covariates=x,
        outcomes=y,
        visits_both=visits,
        outcome_bounds=spec.outcome_bounds,
    )


def run_replication(
    spec: SyntheticSpec, config: DesignConfig, rep: int = 0
) -> tuple[CellQuartet, Site1Log]:
    """Generate, expose, and summarize one replication."""
    population = generate_population(spec, rep)
    log = expose_population(population, config, derive_seed(spec.seed, "expose", rep))
    return summarize_cells(log), log


def estimate_methods(
    log: Site1Log,
    quartet: CellQuartet,
    alpha: float,
    methods: Sequence[EstimatorMethod] = DEFAULT_METHODS,
) -> dict[EstimatorMethod, float]:
    """Point estimates of each requested method on one replication."""
    out: dict[EstimatorMethod, float] = {}
    for method in methods:
        if method is EstimatorMethod.NAIVE:
            out[method] = naive_ate(quartet).point
        elif method is EstimatorMethod.NAIVE_ADJ:
            out[method] = naive_adjusted_ate(log).point
        elif method is EstimatorMethod.CORRECTED:
            out[method] = corrected_te(quartet, alpha).point
        elif method is EstimatorMethod.CORRECTED_ADJ:
            out[method] = covariate_adjusted_ate(log, alpha).point
        else:
            raise ValidationError(f"method {method} is not a sweepable estimator")
    return out


def replicate(
    spec: SyntheticSpec,
    config: DesignConfig,
    methods: Sequence[EstimatorMethod] = DEFAULT_METHODS,
) -> dict[EstimatorMethod, np.ndarray]:
    """Run all replications of a spec; estimates per method, one per rep."""
    series: dict[EstimatorMethod, list[float]] = {m: [] for m in methods}
    for rep in range(spec.n_reps):
        quartet, log = run_replication(spec, config, rep)
        for method, value in estimate_methods(log, quartet, config.alpha, methods).items():
            series[method].append(value)
    return {m: np.asarray(v) for m, v in series.items()}


@dataclass(frozen=True)
class ReplicationSummary:
    """Monte Carlo summary of one estimator at one configuration."""

    method: EstimatorMethod
    mean_estimate: float
    bias: float
    std_error_of_estimate: float
    n_reps: int

    @property
    def band_half_width(self) -> float:
        """Half-width of the 3-sigma Monte Carlo band around the mean."""
        return 3.0 * self.std_error_of_estimate / max(self.n_reps, 1) ** 0.5

    @classmethod
    def from_estimates(
        cls, method: EstimatorMethod, estimates: np.ndarray, truth: float
    ) -> "ReplicationSummary":
        estimates = np.asarray(estimates, dtype=np.float64)
        mean = float(np.mean(estimates))
        sd = float(np.std(estimates, ddof=1)) if len(estimates) > 1 else 0.0
        return cls(
            method=method,
            mean_estimate=mean,
            bias=mean - truth,
            std_error_of_estimate=sd,
            n_reps=int(len(estimates)),
        )


@dataclass(frozen=True)
class SweepPoint:
    axis: str
    value: float
    true_te: float
    summaries: tuple[ReplicationSummary, ...]


@dataclass(frozen=True)
class SweepResult:
    axis: str
    points: tuple[SweepPoint, ...]
    failures: tuple[tuple[float, str], ...]


def replace_axis(spec: SyntheticSpec, axis: str, value: float) -> SyntheticSpec:
    """Copy of the spec with one sweep axis moved to ``value``.

    The cross-effect axes move mu[1,4] (resp. mu[2,4]) while holding the
    arm-3 means fixed, so the truth itself never depends on them.
    """
    if axis == "delta1":
        mu = dict(spec.mu)
        mu[(1, 4)] = mu[(1, 3)] + value
        return replace(spec, mu=mu, delta1=value)
    if axis == "delta2":
        mu = dict(spec.mu)
        mu[(2, 4)] = mu[(2, 3)] + value
        return replace(spec, mu=mu, delta2=value)
    if axis == "p_overlap":
        return replace(spec, p_overlap=value)
    if axis == "noise_sd":
        return replace(spec, noise_sd=value)
    raise ValidationError(f"axis must be one of {SWEEP_AXES}, got {axis!r}")


def sweep(
    spec: SyntheticSpec,
    config: DesignConfig,
    axis: str,
    values: Iterable[float],
    methods: Sequence[EstimatorMethod] = DEFAULT_METHODS,
) -> SweepResult:
    """Replicate the experiment at each grid value of one axis.

    A failure at one grid point is recorded with its message and the
    sweep moves on, so a single degenerate configuration cannot sink an
    overnight run.
    """
    points: list[SweepPoint] = []
    failures: list[tuple[float, str]] = []
    for value in values:
        try:
            spec_v = replace_axis(spec, axis, float(value))
            estimates = replicate(spec_v, config, methods)
            truth = spec_v.true_te
            summaries = tuple(
                ReplicationSummary.from_estimates(m, estimates[m], truth)
                for m in methods
            )
            points.append(
                SweepPoint(axis=axis, value=float(value), true_te=truth, summaries=summaries)
            )
        except Exception as exc:  # noqa: BLE001 - per-point isolation is the contract
            failures.append((float(value), f"{type(exc).__name__}: {exc}"))
    return SweepResult(axis=axis, points=tuple(points), failures=tuple(failures))
