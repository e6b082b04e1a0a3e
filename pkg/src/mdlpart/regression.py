"""Per-cluster model fitting: OLS, OLS on exponentiated features, and the mean model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import StructureError
from .encoding import bits_vector

LINEAR = "linear"
EXPONENTIAL = "exponential_linear"
NULL = "null_mean"
KINDS = (LINEAR, EXPONENTIAL, NULL)

EXP_GUARD = 700.0


class InsufficientRows(ValueError):
    """Too few rows to fit the requested model; callers fall back to the mean model."""


@dataclass(frozen=True)
class FitOptions:
    kind: str = LINEAR
    min_rows: int | None = None  # None -> d + 2
    rank_tolerance: float = 1e-10

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if self.min_rows is not None and self.min_rows < 1:
            raise ValueError("min_rows must be >= 1")
        if not self.rank_tolerance > 0:
            raise ValueError("rank_tolerance must be > 0")

    def rows_needed(self, d: int) -> int:
        return d + 2 if self.min_rows is None else self.min_rows


@dataclass(frozen=True)
class RegressionModel:
    """A fitted predictor.

    ``coefficients`` is ``(intercept, slope_1, ..., slope_d)`` for the linear
    kinds and ``(ybar,)`` for the mean model.
    """

    kind: str
    coefficients: np.ndarray
    fitted_on: str | None = None
    n_rows: int = 0
    param_bits: int = field(init=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        coef = np.array(self.coefficients, dtype=float).reshape(-1)
        if self.kind == NULL and coef.size != 1:
            raise StructureError("a mean model stores exactly one coefficient")
        if self.kind != NULL and coef.size < 2:
            raise StructureError("a linear model stores an intercept and at least one slope")
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "param_bits", bits_vector(coef))

    @property
    def d(self) -> int | None:
        return None if self.kind == NULL else self.coefficients.size - 1

    def predict(self, features) -> np.ndarray:
        return predict(self, features)

    def relabel(self, fitted_on: str | None) -> "RegressionModel":
        return RegressionModel(self.kind, self.coefficients, fitted_on, self.n_rows)


def _as_matrix(features) -> np.ndarray:
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    return X


def fit_ols(features, target, options: FitOptions | None = None,
            fitted_on: str | None = None) -> RegressionModel:
    """Least-squares fit with a prepended intercept column.

    Rank-deficient designs get the minimum-norm least-squares solution.
    Raises :class:`InsufficientRows` below ``options.rows_needed(d)`` rows.
    """
    options = options or FitOptions()
    X = _as_matrix(features)
    y = np.asarray(target, dtype=float)
    n, d = X.shape
    if y.shape != (n,):
        raise StructureError(f"target has shape {y.shape}, expected ({n},)")
    if n < 1 or n < options.rows_needed(d):
        raise InsufficientRows(f"{n} row(s) but {options.rows_needed(d)} needed for d={d}")
    X1 = np.empty((n, d + 1))
    X1[:, 0] = 1.0
    X1[:, 1:] = X
    beta, *_ = np.linalg.lstsq(X1, y, rcond=options.rank_tolerance)
    return RegressionModel(LINEAR, beta, fitted_on, n)


def fit_null(target, fitted_on: str | None = None) -> RegressionModel:
    y = np.asarray(target, dtype=float)
    if y.size < 1:
        raise InsufficientRows("the mean model needs at least one row")
    return RegressionModel(NULL, [y.mean()], fitted_on, int(y.size))


def transform_exponential(features) -> np.ndarray:
    X = _as_matrix(features)
    bad = np.argwhere(~(np.abs(X) <= EXP_GUARD))
    if bad.size:
        i, j = (int(v) for v in bad[0])
        raise ValueError(f"cell ({i}, {j}) = {X[i, j]!r} exceeds the exp() overflow guard "
                         f"|x| <= {EXP_GUARD}")
    return np.exp(X)


def fit(features, target, options: FitOptions | None = None,
        fitted_on: str | None = None) -> RegressionModel:
    """Fit a model of ``options.kind``."""
    options = options or FitOptions()
    if options.kind == NULL:
        return fit_null(target, fitted_on)
    if options.kind == EXPONENTIAL:
        m = fit_ols(transform_exponential(features), target, options, fitted_on)
        return RegressionModel(EXPONENTIAL, m.coefficients, fitted_on, m.n_rows)
    return fit_ols(features, target, options, fitted_on)


def fit_or_null(features, target, options: FitOptions | None = None,
                fitted_on: str | None = None) -> RegressionModel:
    """Like :func:`fit`, falling back to the mean model when rows are insufficient."""
    try:
        return fit(features, target, options, fitted_on)
    except InsufficientRows:
        return fit_null(target, fitted_on)


def predict(model: RegressionModel, features) -> np.ndarray:
    X = _as_matrix(features)
    if model.kind == NULL:
        return np.full(X.shape[0], model.coefficients[0])
    if X.shape[1] != model.d:
        raise StructureError(f"model expects d={model.d} features, got {X.shape[1]}")
    if model.kind == EXPONENTIAL:
        X = transform_exponential(X)
    return model.coefficients[0] + X @ model.coefficients[1:]


def rmse(target, estimates) -> float:
    y = np.asarray(target, dtype=float)
    yhat = np.asarray(estimates, dtype=float)
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {yhat.shape}")
    if y.size < 1:
        raise ValueError("rmse of an empty vector")
    return float(np.sqrt(np.mean((y - yhat) ** 2)))
