"""Calibrating agent parameters from historical investment/quality records.

Quality is regressed on cumulative investment with the line pinned through
the current state ``(i0, q0)``:

    Q = q0 + A (I - i0) + Sigma * xi,   xi ~ N(0, 1)

The maximum-likelihood slope is the least-squares slope through the anchor;
the noise scale is the root mean squared residual.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

CSV_HEADER = ("investment", "quality")


@dataclass(frozen=True)
class HistoricalRecord:
    investment: float
    quality: float

    def __post_init__(self):
        if not (math.isfinite(self.investment) and math.isfinite(self.quality)):
            raise ValueError(f"non-finite record {self!r}")


@dataclass(frozen=True)
class CalibrationFit:
    a_hat: float
    sigma_hat: float
    q0: float
    i0: float
    n_points: int
    mean_squared_residual: float
    a_std_error: float


@dataclass(frozen=True)
class DimensionlessParams:
    a: float
    sigma: float
    q_required: float
    horizon: float
    cost_rate: float


def fit_linear_mle(records: Sequence[HistoricalRecord], q0: float, i0: float) -> CalibrationFit:
    """Maximum-likelihood fit of the anchored linear quality model."""
    if len(records) < 2:
        raise ValueError(f"need at least 2 records, got {len(records)}")
    inv = np.array([r.investment for r in records], dtype=float)
    qual = np.array([r.quality for r in records], dtype=float)
    if np.all(inv == inv[0]):
        raise ValueError("all investments are identical; slope is undefined")
    d = inv - i0
    sxx = float(np.dot(d, d))
    if sxx == 0.0:
        raise ValueError("all investments equal the anchor investment; slope is undefined")
    a_hat = float(np.dot(d, qual - q0)) / sxx
    resid = q0 + a_hat * d - qual
    mse = float(np.mean(resid**2))
    sigma_hat = math.sqrt(mse)
    return CalibrationFit(
        a_hat=a_hat,
        sigma_hat=sigma_hat,
        q0=float(q0),
        i0=float(i0),
        n_points=len(records),
        mean_squared_residual=mse,
        a_std_error=sigma_hat / math.sqrt(sxx),
    )


def scaled_quality(q_physical: float, q0: float, q_required: float) -> float:
    """Map physical quality so the state of the art is 0 and the requirement is 1."""
    span = q_required - q0
    if span == 0:
        raise ZeroDivisionError("required quality equals the state of the art (q_required == q0)")
    return (q_physical - q0) / span


def to_dimensionless(
    fit: CalibrationFit, q_required: float, horizon: float, cost_rate: float
) -> DimensionlessParams:
    """Convert a physical-unit fit to the model's ``(a, sigma)``.

    Effort is investment above the anchor measured in units of
    ``horizon * cost_rate``, hence the factor on the slope.
    """
    span = q_required - fit.q0
    if span == 0:
        raise ZeroDivisionError("required quality equals the state of the art (q_required == q0)")
    if not (horizon > 0 and cost_rate > 0):
        raise ValueError("horizon and cost_rate must be positive")
    a = horizon * cost_rate * fit.a_hat / span
    sigma = fit.sigma_hat / span
    if sigma <= 0 or a <= 0:
        warnings.warn(
            f"calibrated parameters a={a!r}, sigma={sigma!r} fall outside the model "
            "domain (both must be positive)",
            RuntimeWarning,
            stacklevel=2,
        )
    return DimensionlessParams(
        a=a, sigma=sigma, q_required=q_required, horizon=horizon, cost_rate=cost_rate
    )


def read_records_csv(path: str | Path) -> list[HistoricalRecord]:
    """Read an ``investment,quality`` CSV (header required, any row order)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise ValueError(f"{path}: header must be 'investment,quality', got {header!r}")
        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                records.append(HistoricalRecord(float(row[0]), float(row[1])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return records


def write_records_csv(path: str | Path, records: Iterable[HistoricalRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([repr(r.investment), repr(r.quality)])


def synthetic_records(
    a_hat: float,
    sigma_hat: float,
    q0: float,
    i0: float,
    n: int,
    span: float,
    seed: int,
) -> list[HistoricalRecord]:
    """Sample ``n`` records from the anchored model over ``[i0 - span, i0]``."""
    rng = np.random.default_rng(seed)
    inv = np.linspace(i0 - span, i0, n)
    qual = q0 + a_hat * (inv - i0) + sigma_hat * rng.standard_normal(n)
    return [HistoricalRecord(float(i), float(q)) for i, q in zip(inv, qual)]


class LinearQualityRegressor(RegressorMixin, BaseEstimator):
    """Anchored quality-vs-investment regression with an sklearn interface.

    ``X`` is a single column of cumulative investment, ``y`` the observed
    quality.  After fitting, ``coef_`` holds the slope and ``sigma_`` the
    residual standard deviation.
    """

    def __init__(self, q0=0.0, i0=0.0):
        self.q0 = q0
        self.i0 = i0

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_min_samples=2, y_numeric=True)
        if X.shape[1] != 1:
            raise ValueError(f"expected a single investment column, got {X.shape[1]}")
        records = [HistoricalRecord(float(i), float(q)) for i, q in zip(X[:, 0], y)]
        self.fit_ = fit_linear_mle(records, self.q0, self.i0)
        self.coef_ = self.fit_.a_hat
        self.sigma_ = self.fit_.sigma_hat
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        X = check_array(X)
        return self.q0 + self.coef_ * (X[:, 0] - self.i0)

    def to_dimensionless(self, q_required, horizon, cost_rate) -> DimensionlessParams:
        check_is_fitted(self, "fit_")
        return to_dimensionless(self.fit_, q_required, horizon, cost_rate)
