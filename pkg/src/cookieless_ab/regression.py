"""Ordinary least squares tailored to treatment-indicator regressions.

The model is y = intercept + beta_z * z + X @ gamma + error, where z is a
binary indicator marking rows whose outcome came from site-1 arm 1. The
solver factors the design matrix with an orthogonal (QR) decomposition
rather than forming normal equations, which keeps the fit stable when
covariate columns are nearly collinear.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.linalg import qr

from .errors import (
    NoContrastError,
    UnderdeterminedError,
    ValidationError,
)

# Columns whose scaled R diagonal falls below this factor times the
# largest column norm are treated as rank deficient.
RANK_TOL = 1e-10


@dataclass(frozen=True)
class RegressionDataset:
    """Rows for one fit: outcomes, covariates, and the arm-1 indicator."""

    y: np.ndarray
    x: np.ndarray  # shape (n, d); d may be zero
    z: np.ndarray  # binary indicator, 1 when the outcome came from arm 1

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        x = np.asarray(self.x, dtype=np.float64)
        z = np.asarray(self.z, dtype=np.float64)
        if x.ndim != 2:
            raise ValidationError("x must be a 2-d array (n rows, d columns)")
        n = y.shape[0]
        if x.shape[0] != n or z.shape[0] != n:
            raise ValidationError("y, x, z must have the same number of rows")
        if not np.all(np.isfinite(y)) or not np.all(np.isfinite(x)):
            raise ValidationError("regression inputs must be finite")
        if not np.all((z == 0.0) | (z == 1.0)):
            raise ValidationError("z must contain only 0 and 1")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class RegressionFit:
    intercept: float
    beta_z: float
    gamma: tuple[float, ...]
    beta_z_se: float
    residual_variance: float
    rank_deficient: bool
    n: int

    def predict(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        out = self.intercept + self.beta_z * z
        if len(self.gamma):
            out = out + x @ np.asarray(self.gamma)
        return out


def _fit_no_covariates(data: RegressionDataset) -> RegressionFit:
    # With no covariates OLS reduces exactly to the two group means.
    y1 = data.y[data.z == 1.0]
    y0 = data.y[data.z == 0.0]
    n0, n1 = len(y0), len(y1)
    m0, m1 = float(np.mean(y0)), float(np.mean(y1))
    dof = data.n - 2
    if dof > 0:
        ssr = float(np.sum((y0 - m0) ** 2) + np.sum((y1 - m1) ** 2))
        sigma2 = ssr / dof
    else:
        sigma2 = 0.0
    se = float(np.sqrt(sigma2 * (1.0 / n0 + 1.0 / n1)))
    return RegressionFit(
        intercept=m0,
        beta_z=m1 - m0,
        gamma=(),
        beta_z_se=se,
        residual_variance=sigma2,
        rank_deficient=False,
        n=data.n,
    )


def ols_fit(data: RegressionDataset) -> RegressionFit:
    """Fit y on [1, z, X] and report the arm-1 coefficient with its SE.

    Raises NoContrastError when z never varies and UnderdeterminedError
    when there are not enough rows to identify all coefficients. A
    nearly collinear design is solved by pseudoinverse and flagged via
    ``rank_deficient`` instead of failing silently.
    """
    z = data.z
    if np.all(z == z[0]):
        raise NoContrastError(
            "treatment indicator z is constant; both arms must appear in the fit"
        )
    ncoef = 2 + data.d
    if data.n <= data.d + 1:
        raise UnderdeterminedError(
            f"need more than d + 1 = {data.d + 1} rows to fit {ncoef} coefficients, "
            f"got n = {data.n}"
        )
    if data.d == 0:
        return _fit_no_covariates(data)

    design = np.column_stack([np.ones(data.n), z, data.x])
    col_norms = np.linalg.norm(design, axis=0)
    tol = RANK_TOL * float(np.max(col_norms))

    q, r = qr(design, mode="reduced")
    rank_deficient = bool(np.min(np.abs(np.diag(r))) < tol * np.sqrt(data.n))
    if rank_deficient:
        coef, *_ = np.linalg.lstsq(design, data.y, rcond=RANK_TOL)
        fitted = design @ coef
        xtx_inv_zz = float(np.linalg.pinv(design.T @ design)[1, 1])
    else:
        coef = np.linalg.solve(r, q.T @ data.y)
        fitted = design @ coef
        # [ (A'A)^-1 ]_zz = || R^-T e_z ||^2 from A = QR.
        w = np.linalg.solve(r.T, np.eye(ncoef)[:, 1])
        xtx_inv_zz = float(w @ w)

    dof = data.n - ncoef
    ssr = float(np.sum((data.y - fitted) ** 2))
    sigma2 = ssr / dof if dof > 0 else 0.0
    return RegressionFit(
        intercept=float(coef[0]),
        beta_z=float(coef[1]),
        gamma=tuple(float(g) for g in coef[2:]),
        beta_z_se=float(np.sqrt(max(sigma2 * xtx_inv_zz, 0.0))),
        residual_variance=sigma2,
        rank_deficient=rank_deficient,
        n=data.n,
    )
