"""KPI statistics and sliding-window autoregressive forecasting.

The forecaster builds a lag-feature regression dataset over a value series,
fits ordinary least squares (normal equations with a tiny ridge term for
degenerate designs) on the chronologically earliest fraction, scores R^2 on
the held-out tail, then rolls the model forward for future predictions.
"""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from ..errors import InsufficientDataError, ValidationError

RIDGE_LAMBDA = 1e-8
ZERO_VARIANCE_EPS = 1e-12
ZERO_RESIDUAL_EPS = 1e-9


def kpi_stats(values: Sequence[float]) -> dict[str, Any]:
    """Summary statistics over a chronological series of at least two values."""
    n = len(values)
    if n < 2:
        raise InsufficientDataError(f"kpi analysis needs >= 2 values, got {n}")
    arr = np.asarray(values, dtype=float)
    idx = np.arange(n, dtype=float)
    # least-squares slope of value against sample index
    slope = float(np.sum((idx - idx.mean()) * (arr - arr.mean())) / np.sum((idx - idx.mean()) ** 2))
    rank = max(1, int(np.ceil(0.95 * n)))  # nearest-rank percentile
    p95 = float(np.sort(arr)[rank - 1])
    return {
        "count": n,
        "mean": float(arr.mean()),
        "sample_std": float(arr.std(ddof=1)),
        "min": float(arr.min()),
        "max": float(arr.max()),
        "p95": p95,
        "trend_slope": slope,
    }


def sliding_windows(series: Sequence[float], window_w: int) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix of w-lag windows and the next-value target vector."""
    arr = np.asarray(series, dtype=float)
    n = len(arr)
    if n <= window_w:
        raise InsufficientDataError(
            f"series of {n} values cannot form windows of size {window_w}"
        )
    X = np.stack([arr[i : i + window_w] for i in range(n - window_w)])
    y = arr[window_w:]
    return X, y


def fit_ols(X: np.ndarray, y: np.ndarray, ridge: float = RIDGE_LAMBDA) -> np.ndarray:
    """Intercept + coefficients via damped normal equations."""
    A = np.hstack([np.ones((X.shape[0], 1)), X])
    gram = A.T @ A + ridge * np.eye(A.shape[1])
    return np.linalg.solve(gram, A.T @ y)


def predict_ols(beta: np.ndarray, X: np.ndarray) -> np.ndarray:
    A = np.hstack([np.ones((X.shape[0], 1)), X])
    return A @ beta


def r_squared(actual: np.ndarray, predicted: np.ndarray) -> float:
    """1 - SS_res/SS_tot, with a fixed convention for zero-variance holdouts."""
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    ss_tot = float(np.sum((actual - actual.mean()) ** 2))
    if ss_tot < ZERO_VARIANCE_EPS:
        max_residual = float(np.max(np.abs(actual - predicted))) if len(actual) else 0.0
        return 1.0 if max_residual < ZERO_RESIDUAL_EPS else 0.0
    ss_res = float(np.sum((actual - predicted) ** 2))
    return 1.0 - ss_res / ss_tot


def forecast_series(
    series: Sequence[float],
    window_w: int,
    horizon_h: int,
    holdout_frac: float,
) -> dict[str, Any]:
    """Train/evaluate a lag-window OLS model and roll forward horizon_h steps."""
    if window_w < 1:
        raise ValidationError(f"window_w must be >= 1, got {window_w}")
    if horizon_h < 1:
        raise ValidationError(f"horizon_h must be >= 1, got {horizon_h}")
    if not 0.0 < holdout_frac < 0.5:
        raise ValidationError(f"holdout_frac must be in (0, 0.5), got {holdout_frac}")
    n = len(series)
    if n < 5 * window_w:
        raise InsufficientDataError(
            f"history of {n} values is below the minimum 5*window_w = {5 * window_w}"
        )
    X, y = sliding_windows(series, window_w)
    num_samples = len(y)
    train_size = int(num_samples * (1.0 - holdout_frac))
    test_size = num_samples - train_size
    if train_size < 1 or test_size < 1:
        raise InsufficientDataError(
            f"split of {num_samples} windowed samples leaves an empty partition"
        )
    beta = fit_ols(X[:train_size], y[:train_size])
    holdout_pred = predict_ols(beta, X[train_size:])
    score = r_squared(y[train_size:], holdout_pred)

    state = list(np.asarray(series, dtype=float)[-window_w:])
    predictions = []
    for _ in range(horizon_h):
        nxt = float(predict_ols(beta, np.asarray([state], dtype=float))[0])
        predictions.append(nxt)
        state = state[1:] + [nxt]

    return {
        "predictions": predictions,
        "r_squared": score,
        "train_size": train_size,
        "test_size": test_size,
        "holdout": {
            "actual": [float(v) for v in y[train_size:]],
            "predicted": [float(v) for v in holdout_pred],
        },
    }
