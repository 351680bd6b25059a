"""Treatment-effect estimators over the four (cluster, arm) cells.

The observed site-1 data forms four cells: clusters C1/C2 crossed with
site-1 arms T1/T2. Because site 2 swaps its allocation probability
between the clusters, the weighted contrast

    ( alpha * mean(C1,T1) + (1-alpha) * mean(C1,T2)
      - (1-alpha) * mean(C2,T1) - alpha * mean(C2,T2) ) / (2*alpha - 1)

has expectation equal to the true site-1 effect even when site-2
exposure shifts outcomes. The uncorrected comparison (pooled arm-1 mean
minus pooled arm-2 mean) does not, and the gap between the two is the
cross-site interference bias this toolkit exists to remove.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Mapping

import numpy as np

from .core import (
    CellSummary,
    Cluster,
    ConfidenceInterval,
    EffectEstimate,
    EstimatorMethod,
    EPS_ALPHA,
    Site1Treatment,
)
from .errors import (
    EmptyCellError,
    EstimationError,
    MissingBoundsError,
    ValidationError,
)
from .randomization import Site1Log
from .regression import RegressionDataset, ols_fit

DEFAULT_CI_LEVEL = 0.95


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not math.isfinite(alpha) or not (0.0 <= alpha <= 1.0):
        raise ValidationError(f"alpha must lie in [0, 1], got {alpha!r}")
    if abs(2.0 * alpha - 1.0) < 2.0 * EPS_ALPHA:
        raise ValidationError(
            "alpha is inside the eps_alpha dead zone around 0.5; the corrected "
            "contrast divides by (2*alpha - 1)"
        )
    return alpha


@dataclass(frozen=True)
class CellQuartet:
    """The four observed cells of one experiment period."""

    c1_t1: CellSummary
    c1_t2: CellSummary
    c2_t1: CellSummary
    c2_t2: CellSummary

    def __post_init__(self):
        expect = {
            "c1_t1": (Cluster.C1, Site1Treatment.T1),
            "c1_t2": (Cluster.C1, Site1Treatment.T2),
            "c2_t1": (Cluster.C2, Site1Treatment.T1),
            "c2_t2": (Cluster.C2, Site1Treatment.T2),
        }
        for name, (cluster, treatment) in expect.items():
            cell = getattr(self, name)
            if cell.cluster is not cluster or cell.treatment is not treatment:
                raise ValidationError(f"cell {name} carries wrong labels")

    @property
    def cells(self) -> tuple[CellSummary, CellSummary, CellSummary, CellSummary]:
        return (self.c1_t1, self.c1_t2, self.c2_t1, self.c2_t2)

    @property
    def n_total(self) -> int:
        return sum(c.n for c in self.cells)


def summarize_cells(log: Site1Log) -> CellQuartet:
    """Aggregate a site-1 log into its four cell summaries."""
    cells = {}
    for cluster in Cluster:
        for treatment in Site1Treatment:
            values = log.outcomes[log.mask(cluster, treatment)]
            if len(values) == 0:
                raise EmptyCellError(
                    f"cell ({cluster.value}, {treatment.value}) has no observations"
                )
            variance = float(np.var(values, ddof=1)) if len(values) > 1 else 0.0
            cells[(cluster, treatment)] = CellSummary(
                cluster=cluster,
                treatment=treatment,
                n=int(len(values)),
                mean=float(np.mean(values)),
                sample_variance=variance,
                outcome_bounds=log.outcome_bounds,
            )
    return CellQuartet(
        c1_t1=cells[(Cluster.C1, Site1Treatment.T1)],
        c1_t2=cells[(Cluster.C1, Site1Treatment.T2)],
        c2_t1=cells[(Cluster.C2, Site1Treatment.T1)],
        c2_t2=cells[(Cluster.C2, Site1Treatment.T2)],
    )


def _normal_ci(point: float, se: float, level: float) -> ConfidenceInterval:
    zq = NormalDist().inv_cdf(0.5 + level / 2.0)
    return ConfidenceInterval(lo=point - zq * se, hi=point + zq * se, level=level)


def corrected_weights(alpha: float) -> tuple[float, float, float, float]:
    """Cell weights (C1T1, C1T2, C2T1, C2T2) of the corrected contrast."""
    a = _check_alpha(alpha)
    denom = 2.0 * a - 1.0
    return (a / denom, (1.0 - a) / denom, -(1.0 - a) / denom, -a / denom)


def corrected_te(
    quartet: CellQuartet, alpha: float, ci_level: float = DEFAULT_CI_LEVEL
) -> EffectEstimate:
    """Interference-corrected effect estimate from the four cell means.

    Unbiased for the true site-1 effect under the swapped two-cluster
    design, for any overlap fraction. Standard error propagates each
    cell's mean variance through the contrast weights.
    """
    w = corrected_weights(alpha)
    point = sum(wi * c.mean for wi, c in zip(w, quartet.cells))
    var = sum(wi * wi * c.mean_variance for wi, c in zip(w, quartet.cells))
    se = math.sqrt(var)
    return EffectEstimate(
        method=EstimatorMethod.CORRECTED,
        point=point,
        std_error=se,
        n_total=quartet.n_total,
        ci=_normal_ci(point, se, ci_level),
    )


def naive_ate(
    quartet: CellQuartet, ci_level: float = DEFAULT_CI_LEVEL
) -> EffectEstimate:
    """Uncorrected difference of pooled arm means, weighted by cell counts.

    This is what a site that ignores cross-site exposure would report.
    When overlapping users react to the other site's test, its
    expectation drifts away from the true effect in proportion to the
    overlap fraction.
    """
    arm_stats = []
    for pair in ((quartet.c1_t1, quartet.c2_t1), (quartet.c1_t2, quartet.c2_t2)):
        n = sum(c.n for c in pair)
        mean = sum(c.n * c.mean for c in pair) / n
        var_of_mean = sum(c.n * c.sample_variance for c in pair) / (n * n)
        arm_stats.append((mean, var_of_mean))
    point = arm_stats[0][0] - arm_stats[1][0]
    se = math.sqrt(arm_stats[0][1] + arm_stats[1][1])
    return EffectEstimate(
        method=EstimatorMethod.NAIVE,
        point=point,
        std_error=se,
        n_total=quartet.n_total,
        ci=_normal_ci(point, se, ci_level),
    )


def _adj_dataset(log: Site1Log, z1_mask: np.ndarray, z0_mask: np.ndarray) -> RegressionDataset:
    if not z1_mask.any() or not z0_mask.any():
        raise EmptyCellError("covariate adjustment needs both cells of each pairing")
    keep = z1_mask | z0_mask
    return RegressionDataset(
        y=log.outcomes[keep],
        x=log.covariates[keep],
        z=z1_mask[keep].astype(np.float64),
    )


def covariate_adjusted_ate(
    log: Site1Log, alpha: float, ci_level: float = DEFAULT_CI_LEVEL
) -> EffectEstimate:
    """Corrected effect estimate with regression-based noise removal.

    Runs two regressions pairing each cluster's arm-1 rows with the
    other cluster's arm-2 rows (the two cross-cluster contrasts that the
    corrected estimator combines), then merges their indicator
    coefficients with weights alpha and (alpha - 1) over (2*alpha - 1).
    With zero covariates this reproduces the unadjusted corrected
    estimate exactly; with predictive covariates it shrinks the variance
    while keeping the expectation.
    """
    a = _check_alpha(alpha)
    c1t1 = log.mask(Cluster.C1, Site1Treatment.T1)
    c1t2 = log.mask(Cluster.C1, Site1Treatment.T2)
    c2t1 = log.mask(Cluster.C2, Site1Treatment.T1)
    c2t2 = log.mask(Cluster.C2, Site1Treatment.T2)

    fit1 = ols_fit(_adj_dataset(log, c1t1, c2t2))
    fit2 = ols_fit(_adj_dataset(log, c2t1, c1t2))

    denom = 2.0 * a - 1.0
    point = (a * fit1.beta_z + (a - 1.0) * fit2.beta_z) / denom
    var = (a * a * fit1.beta_z_se**2 + (1.0 - a) ** 2 * fit2.beta_z_se**2) / denom**2
    se = math.sqrt(var)
    return EffectEstimate(
        method=EstimatorMethod.CORRECTED_ADJ,
        point=point,
        std_error=se,
        n_total=int(log.n),
        ci=_normal_ci(point, se, ci_level),
    )


def naive_adjusted_ate(
    log: Site1Log, ci_level: float = DEFAULT_CI_LEVEL
) -> EffectEstimate:
    """Standard single-regression adjustment, ignoring clusters.

    One fit of outcome on the arm-1 indicator plus covariates over all
    rows. Shares the uncorrected estimator's interference bias; included
    as the conventional baseline.
    """
    z = (log.treatment_codes == 0).astype(np.float64)
    fit = ols_fit(RegressionDataset(y=log.outcomes, x=log.covariates, z=z))
    return EffectEstimate(
        method=EstimatorMethod.NAIVE_ADJ,
        point=fit.beta_z,
        std_error=fit.beta_z_se,
        n_total=int(log.n),
        ci=_normal_ci(fit.beta_z, fit.beta_z_se, ci_level),
    )


def corrected_cate(
    bins: Mapping[str, CellQuartet], alpha: float, ci_level: float = DEFAULT_CI_LEVEL
) -> dict[str, EffectEstimate]:
    """Corrected effect within each covariate bin.

    Applies the same four-cell contrast separately per bin; bins must be
    defined by pre-treatment covariates for the estimates to stay valid.
    """
    if not bins:
        raise ValidationError("at least one bin is required")
    out: dict[str, EffectEstimate] = {}
    for label, quartet in bins.items():
        try:
            est = corrected_te(quartet, alpha, ci_level)
        except EstimationError as exc:
            raise EstimationError(f"bin {label!r}: {exc}") from exc
        out[label] = EffectEstimate(
            method=EstimatorMethod.CATE,
            point=est.point,
            std_error=est.std_error,
            n_total=est.n_total,
            ci=est.ci,
        )
    return out


def quartets_by_bin(
    log: Site1Log, covariate: int, n_bins: int
) -> dict[str, CellQuartet]:
    """Split a log into quantile bins of one covariate, one quartet each.

    Raises EmptyCellError naming the offending bin when any of its four
    cells comes up empty.
    """
    if not (0 <= covariate < log.covariate_dim):
        raise ValidationError(
            f"covariate index {covariate} out of range for d={log.covariate_dim}"
        )
    if n_bins < 1:
        raise ValidationError("n_bins must be >= 1")
    values = log.covariates[:, covariate]
    edges = np.quantile(values, np.linspace(0.0, 1.0, n_bins + 1))
    edges = np.unique(edges)
    if len(edges) - 1 < n_bins:
        raise ValidationError(
            f"covariate {covariate} has too few distinct values for {n_bins} bins"
        )
    out: dict[str, CellQuartet] = {}
    for i in range(n_bins):
        lo, hi = edges[i], edges[i + 1]
        mask = (values >= lo) & (values <= hi if i == n_bins - 1 else values < hi)
        label = f"x{covariate + 1}[{lo:.4g}, {hi:.4g}{']' if i == n_bins - 1 else ')'}"
        sub = Site1Log(
            cluster_codes=log.cluster_codes[mask],
            treatment_codes=log.treatment_codes[mask],
            outcomes=log.outcomes[mask],
            covariates=log.covariates[mask],
            outcome_bounds=log.outcome_bounds,
        )
        try:
            out[label] = summarize_cells(sub)
        except EmptyCellError as exc:
            raise EmptyCellError(f"bin {label!r}: {exc}") from exc
    return out


@dataclass(frozen=True)
class VarianceBound:
    """Design-implied bracket on the corrected estimator's variance.

    ``multiplier`` is 2 * (alpha^2 + (1-alpha)^2) / (2*alpha - 1)^2, the
    factor the contrast weights apply to a common cell-mean variance. It
    is smallest (2) at alpha in {0, 1} and grows without bound as alpha
    approaches 1/2.
    """

    v_min: float
    v_max: float
    multiplier: float
    var_lower: float
    var_upper: float


def variance_multiplier(alpha: float) -> float:
    a = _check_alpha(alpha)
    return 2.0 * (a * a + (1.0 - a) ** 2) / (2.0 * a - 1.0) ** 2


def variance_bound(quartet: CellQuartet, alpha: float) -> VarianceBound:
    """Bracket the corrected estimator's variance from cell dispersions."""
    mult = variance_multiplier(alpha)
    mean_vars = [c.mean_variance for c in quartet.cells]
    sample_vars = [c.sample_variance for c in quartet.cells]
    # Sum of squared contrast weights equals the multiplier, so a common
    # cell-mean variance V yields Var = multiplier * V exactly.
    return VarianceBound(
        v_min=min(sample_vars),
        v_max=max(sample_vars),
        multiplier=mult,
        var_lower=mult * min(mean_vars),
        var_upper=mult * max(mean_vars),
    )


def hoeffding_ci(
    quartet: CellQuartet, alpha: float, level: float = DEFAULT_CI_LEVEL
) -> tuple[float, float]:
    """Distribution-free interval for the corrected effect.

    Requires every cell to carry outcome bounds. The failure probability
    delta = 1 - level is split equally over the four cell means; each
    cell contributes |weight| * range * sqrt(ln(2 / (delta/4)) / (2 n)),
    and the half-width is the sum. Valid for any bounded outcome at any
    sample size, at the price of being wider than the normal interval.
    """
    if not (0.0 < level < 1.0):
        raise ValidationError(f"level must lie in (0, 1), got {level!r}")
    for cell in quartet.cells:
        if cell.outcome_bounds is None:
            raise MissingBoundsError(
                f"cell ({cell.cluster.value}, {cell.treatment.value}) has no outcome "
                "bounds; bounded outcomes are required for a distribution-free interval"
            )
    w = corrected_weights(alpha)
    delta = 1.0 - level
    half_width = 0.0
    for wi, cell in zip(w, quartet.cells):
        lo, hi = cell.outcome_bounds
        half_width += abs(wi) * (hi - lo) * math.sqrt(
            math.log(2.0 / (delta / 4.0)) / (2.0 * cell.n)
        )
    point = corrected_te(quartet, alpha).point
    return (point - half_width, point + half_width)
