"""Core domain model for two-site experiments with overlapping audiences.

Site 1 runs an A/B test with two arms. A fraction ``p`` of its users also
visit site 2, which runs its own two-arm test. Each user therefore has one
of six potential outcomes for the site-1 metric, indexed by the exposure
pair ``(t, s)`` where ``t`` is the site-1 arm (1 or 2) and ``s`` is the
site-2 exposure (0 if the user never visits site 2, else 3 or 4 for the
two site-2 arms).

The identity that drives every estimator here: for a population where a
fraction ``p`` overlaps and site 2 gives arm 3 with probability ``alpha``,
the observed site-1 arm-``t`` mean is

    (1 - p) * mu[t, 0] + p * (alpha * mu[t, 3] + (1 - alpha) * mu[t, 4])

while the target effect compares arm 1 against arm 2 holding the site-2
experience fixed at its business-as-usual arms (3 for arm-1 users, 4 for
arm-2 users):

    true_te = (1 - p) * (mu[1,0] - mu[2,0]) + p * (mu[1,3] - mu[2,4])
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from .errors import ValidationError

# Minimum distance of alpha from 1/2. The corrected estimator divides by
# (2*alpha - 1), so configs must keep alpha outside this dead zone.
EPS_ALPHA = 1e-6

# The six admissible exposure pairs, in canonical column order.
EXPOSURE_PAIRS: tuple[tuple[int, int], ...] = (
    (1, 0),
    (2, 0),
    (1, 3),
    (1, 4),
    (2, 3),
    (2, 4),
)

# Column index of each exposure pair in array-of-outcome layouts.
EXPOSURE_INDEX: dict[tuple[int, int], int] = {
    pair: i for i, pair in enumerate(EXPOSURE_PAIRS)
}


class Cluster(Enum):
    """Macrocluster label assigned by the shared deterministic hash."""

    C1 = "C1"
    C2 = "C2"


class Site1Treatment(Enum):
    T1 = "T1"
    T2 = "T2"

    @property
    def index(self) -> int:
        return 1 if self is Site1Treatment.T1 else 2


class Site2Exposure(Enum):
    """Site-2 experience of a site-1 user: absent, arm 3, or arm 4."""

    NONE = 0
    T3 = 3
    T4 = 4


class EstimatorMethod(Enum):
    """Estimator families, labeled as they appear in reports and sweeps."""

    NAIVE = "uncorrected"
    NAIVE_ADJ = "uncorrected+adj"
    CORRECTED = "corrected"
    CORRECTED_ADJ = "corrected+adj"
    CATE = "cate"
    TRUE_ORACLE = "true"

    @property
    def label(self) -> str:
        return self.value


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return value


def _validate_mu(mu: Mapping[tuple[int, int], float]) -> dict[tuple[int, int], float]:
    extra = set(mu) - set(EXPOSURE_PAIRS)
    if extra:
        raise ValidationError(f"unknown exposure pairs in mean map: {sorted(extra)}")
    missing = [p for p in EXPOSURE_PAIRS if p not in mu]
    if missing:
        raise ValidationError(f"mean map missing exposure pairs: {missing}")
    return {p: _require_finite(f"mu[{p}]", mu[p]) for p in EXPOSURE_PAIRS}


@dataclass(frozen=True)
class TreatmentExposure:
    """What a single user actually experienced across the two sites."""

    site1: Site1Treatment
    site2: Site2Exposure

    @property
    def pair(self) -> tuple[int, int]:
        return (self.site1.index, self.site2.value)


@dataclass(frozen=True)
class PotentialOutcomeProfile:
    """All six potential outcomes of one user for the site-1 metric."""

    outcomes: Mapping[tuple[int, int], float]

    def __post_init__(self):
        object.__setattr__(self, "outcomes", _validate_mu(self.outcomes))

    def outcome(self, pair: tuple[int, int]) -> float:
        return self.outcomes[pair]


@dataclass(frozen=True)
class UserRecord:
    """One user prior to exposure.

    ``user_key`` is an opaque identifier used only for macrocluster
    hashing; ``visits_both`` says whether the user shows up on site 2 at
    all, independent of any treatment assignment.
    """

    user_key: bytes
    visits_both: bool
    covariates: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.user_key:
            raise ValidationError("user_key must be non-empty")


@dataclass(frozen=True)
class DesignConfig:
    """Parameters of the two-stage randomization design.

    ``alpha`` is the probability that site 2 serves arm 3 inside cluster
    C1; cluster C2 swaps it to ``1 - alpha``. ``site1_split`` is the
    probability of site-1 arm 1 in both clusters. ``allow_degenerate``
    admits boundary probabilities (0 or 1) for deterministic replay in
    tests; production configs must keep every probability interior.
    """

    alpha: float
    cluster_salt: int = 0
    site1_split: float = 0.5
    n_clusters: int = 2
    treatment_labels: tuple[str, str, str, str] = ("T1", "T2", "T3", "T4")
    allow_degenerate: bool = False

    def __post_init__(self):
        alpha = _require_finite("alpha", self.alpha)
        split = _require_finite("site1_split", self.site1_split)
        if abs(2.0 * alpha - 1.0) < 2.0 * EPS_ALPHA:
            raise ValidationError(
                "alpha is inside the eps_alpha dead zone around 0.5: "
                f"|2*alpha - 1| must be >= {2.0 * EPS_ALPHA:g}, got alpha={alpha!r}"
            )
        lo, hi = (0.0, 1.0)
        if self.allow_degenerate:
            if not (lo <= alpha <= hi):
                raise ValidationError(f"alpha must lie in [0, 1], got {alpha!r}")
            if not (lo <= split <= hi):
                raise ValidationError(f"site1_split must lie in [0, 1], got {split!r}")
        else:
            if not (lo < alpha < hi):
                raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")
            if not (lo < split < hi):
                raise ValidationError(f"site1_split must lie in (0, 1), got {split!r}")
        # Two macroclusters are structural: the swap between exactly two
        # allocation rows is what identifies the corrected estimator.
        # Generalizing needs a new weighting scheme, not just a config knob.
        if self.n_clusters != 2:
            raise ValidationError("n_clusters must be 2")
        if len(self.treatment_labels) != 4 or len(set(self.treatment_labels)) != 4:
            raise ValidationError("treatment_labels must be four distinct labels")
        if not (-(2**63) <= int(self.cluster_salt) < 2**64):
            raise ValidationError("cluster_salt must fit in 64 bits")


@dataclass(frozen=True)
class CellSummary:
    """Sufficient statistics of one (cluster, site-1 treatment) cell."""

    cluster: Cluster
    treatment: Site1Treatment
    n: int
    mean: float
    sample_variance: float
    outcome_bounds: tuple[float, float] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("cell must contain at least one observation")
        _require_finite("mean", self.mean)
        if not (self.sample_variance >= 0.0):
            raise ValidationError(
                f"sample_variance must be >= 0, got {self.sample_variance!r}"
            )
        if self.outcome_bounds is not None:
            lo, hi = self.outcome_bounds
            if not (lo < hi):
                raise ValidationError(f"outcome bounds must satisfy lo < hi, got {self.outcome_bounds!r}")
            if not (lo <= self.mean <= hi):
                raise ValidationError(
                    f"cell mean {self.mean!r} falls outside outcome bounds {self.outcome_bounds!r}"
                )

    @property
    def mean_variance(self) -> float:
        """Variance of the cell mean: sample variance over cell size."""
        return self.sample_variance / self.n


@dataclass(frozen=True)
class ConfidenceInterval:
    lo: float
    hi: float
    level: float

    def __post_init__(self):
        if not (0.0 < self.level < 1.0):
            raise ValidationError(f"level must lie in (0, 1), got {self.level!r}")
        if self.lo > self.hi:
            raise ValidationError(f"interval bounds out of order: {self.lo!r} > {self.hi!r}")

    def covers(self, value: float) -> bool:
        return self.lo <= value <= self.hi


@dataclass(frozen=True)
class EffectEstimate:
    """A point estimate of the site-1 treatment effect with uncertainty."""

    method: EstimatorMethod
    point: float
    std_error: float
    n_total: int
    ci: ConfidenceInterval | None = None

    def __post_init__(self):
        _require_finite("point", self.point)
        if not (self.std_error >= 0.0):
            raise ValidationError(f"std_error must be >= 0, got {self.std_error!r}")
        if self.ci is not None and not (self.ci.lo <= self.point <= self.ci.hi):
            raise ValidationError("confidence interval must contain the point estimate")


def resolve_observed_outcome(
    profile: PotentialOutcomeProfile, exposure: TreatmentExposure
) -> float:
    """Return the outcome the user realizes under the given exposure."""
    return profile.outcome(exposure.pair)


def expected_observed_mean(
    mu: Mapping[tuple[int, int], float],
    p_overlap: float,
    alpha: float,
    treatment: Site1Treatment,
) -> float:
    """Expected observed site-1 mean for one arm under overlap mixing.

    ``alpha`` is the probability that an overlapping user sees site-2 arm
    3; callers analyzing cluster C2 pass ``1 - alpha``.
    """
    mu = _validate_mu(mu)
    p = _require_finite("p_overlap", p_overlap)
    a = _require_finite("alpha", alpha)
    if not (0.0 <= p <= 1.0):
        raise ValidationError(f"p_overlap must lie in [0, 1], got {p!r}")
    if not (0.0 <= a <= 1.0):
        raise ValidationError(f"alpha must lie in [0, 1], got {a!r}")
    t = treatment.index
    return (1.0 - p) * mu[(t, 0)] + p * (a * mu[(t, 3)] + (1.0 - a) * mu[(t, 4)])


def true_te(mu: Mapping[tuple[int, int], float], p_overlap: float) -> float:
    """Target treatment effect of the site-1 test.

    Overlapping users are compared at their business-as-usual site-2
    arms: arm 3 alongside site-1 arm 1, arm 4 alongside site-1 arm 2.
    """
    mu = _validate_mu(mu)
    p = _require_finite("p_overlap", p_overlap)
    if not (0.0 <= p <= 1.0):
        raise ValidationError(f"p_overlap must lie in [0, 1], got {p!r}")
    return (1.0 - p) * (mu[(1, 0)] - mu[(2, 0)]) + p * (mu[(1, 3)] - mu[(2, 4)])
