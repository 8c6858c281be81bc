"""Trace feature extraction.

Each of the RTT and CWND series is resampled onto a 0.1 s grid, smoothed with
an EWMA (alpha 0.3) and summarised by the 36 statistics in STAT_NAMES. The
two blocks are concatenated RTT first into a 72-entry vector.
"""

from collections.abc import Iterable, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from .errors import EmptySeriesError, InsufficientDataError
from .types import Dataset, FeatureVector, QueueLabel, Trace

RESAMPLE_DT_S = 0.1
EWMA_ALPHA = 0.3
MIN_SERIES_LEN = 8

STAT_NAMES: tuple[str, ...] = (
    "mean",
    "var",
    "min",
    "max",
    "median",
    "skew",
    "kurtosis",
    "range",
    "grad1_mean",
    "grad1_var",
    "grad1_min",
    "grad1_max",
    "grad1_abs_mean",
    "grad1_max_sum_subseq",
    "grad1_zero_crossings",
    "grad2_mean",
    "grad2_var",
    "grad2_min",
    "grad2_max",
    "grad2_abs_mean",
    "maxima_count",
    "maxima_mean",
    "maxima_var",
    "minima_count",
    "minima_mean",
    "minima_var",
    "maxima_spacing_mean",
    "maxima_spacing_var",
    "tv_l1",
    "tv_l2sq",
    "longest_rise",
    "longest_fall",
    "autocorr_lag1",
    "autocorr_lag5",
    "trend_slope",
    "trend_residual_var",
)
SERIES_NAMES = ("rtt", "cwnd")
FEATURE_NAMES: list[str] = [f"{s}_{stat}" for s in SERIES_NAMES for stat in STAT_NAMES]
N_FEATURES = len(FEATURE_NAMES)

LABEL_TO_Y: dict[QueueLabel, int] = {"DropTail": 0, "Pie": 1}
Y_TO_LABEL: dict[int, QueueLabel] = {0: "DropTail", 1: "Pie"}


def ewma(x: Sequence[float] | np.ndarray, alpha: float = EWMA_ALPHA) -> np.ndarray:
    """s0 = x0, s_t = alpha * x_t + (1 - alpha) * s_{t-1}."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise EmptySeriesError("ewma of an empty series")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if alpha == 1.0 or float(np.ptp(x)) == 0.0:
        return x.copy()
    return pd.Series(x).ewm(alpha=alpha, adjust=False).mean().to_numpy()


def interpolate(samples: Sequence[tuple[float, float]] | np.ndarray, at: np.ndarray) -> np.ndarray:
    """Linear interpolation; queries outside the sample span take the nearest endpoint."""
    arr = np.asarray(samples, dtype=float).reshape(-1, 2)
    return np.interp(np.asarray(at, dtype=float), arr[:, 0], arr[:, 1])


def resample_uniform(
    samples: Sequence[tuple[float, float]] | np.ndarray, dt_s: float = RESAMPLE_DT_S
) -> np.ndarray:
    """Values on the grid t0, t0 + dt, ..., t_end."""
    arr = np.asarray(samples, dtype=float).reshape(-1, 2)
    if arr.shape[0] < 2:
        raise InsufficientDataError(f"need at least 2 samples to resample, got {arr.shape[0]}")
    t = arr[:, 0]
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample timestamps must be strictly increasing")
    n = int(np.floor((t[-1] - t[0]) / dt_s + 1e-9)) + 1
    grid = t[0] + dt_s * np.arange(n)
    return interpolate(arr, grid)


def gradient(x: Sequence[float] | np.ndarray, order: int = 1) -> np.ndarray:
    """First (x[i+1] - x[i]) or second order differences."""
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    x = np.asarray(x, dtype=float)
    if x.size < order + 1:
        raise InsufficientDataError(f"gradient of order {order} needs {order + 1} points")
    return np.diff(x, n=order)


def local_extrema(x: Sequence[float] | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices of strict interior local maxima and minima."""
    x = np.asarray(x, dtype=float)
    if x.size < 3:
        empty = np.array([], dtype=int)
        return empty, empty.copy()
    mid, left, right = x[1:-1], x[:-2], x[2:]
    maxima = np.flatnonzero((mid > left) & (mid > right)) + 1
    minima = np.flatnonzero((mid < left) & (mid < right)) + 1
    return maxima, minima


def max_sum_subsequence(x: Sequence[float] | np.ndarray) -> float:
    """Largest sum over contiguous nonempty runs."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise EmptySeriesError("max_sum_subsequence of an empty series")
    prefix = np.concatenate(([0.0], np.cumsum(x)))
    return float(np.max(prefix[1:] - np.minimum.accumulate(prefix[:-1])))


def total_variation(x: Sequence[float] | np.ndarray, norm: str = "L1") -> float:
    d = np.diff(np.asarray(x, dtype=float))
    if norm == "L1":
        return float(np.sum(np.abs(d)))
    if norm == "L2sq":
        return float(np.sum(d * d))
    raise ValueError(f"unknown norm {norm!r}")


def _mean(a: np.ndarray) -> float:
    return float(np.mean(a)) if a.size else 0.0


def _var(a: np.ndarray) -> float:
    return float(np.var(a)) if a.size >= 2 else 0.0


def _min(a: np.ndarray) -> float:
    return float(np.min(a)) if a.size else 0.0


def _max(a: np.ndarray) -> float:
    return float(np.max(a)) if a.size else 0.0


def _constant(a: np.ndarray) -> bool:
    return a.size < 2 or float(np.ptp(a)) == 0.0


def _moment_stat(a: np.ndarray, fn) -> float:
    if _constant(a):
        return 0.0
    value = float(fn(a))
    return value if np.isfinite(value) else 0.0


def _longest_run(mask: np.ndarray) -> int:
    best = current = 0
    for flag in mask:
        current = current + 1 if flag else 0
        best = max(best, current)
    return best


def autocorrelation(x: np.ndarray, lag: int) -> float:
    """Sum of lagged centred products over (n - lag) * variance; 0 when undefined."""
    n = x.size
    if n <= lag or _constant(x):
        return 0.0
    mu = np.mean(x)
    v = np.var(x)
    return float(np.sum((x[: n - lag] - mu) * (x[lag:] - mu)) / ((n - lag) * v))


def _trend(x: np.ndarray, dt_s: float) -> tuple[float, float]:
    if x.size < 2 or _constant(x):
        return 0.0, 0.0
    t = dt_s * np.arange(x.size)
    fit = stats.linregress(t, x)
    residual = x - (fit.intercept + fit.slope * t)
    return float(fit.slope), _var(residual)


def series_features(x: np.ndarray, dt_s: float = RESAMPLE_DT_S) -> np.ndarray:
    """The 36 statistics of one smoothed series, ordered as STAT_NAMES."""
    x = np.asarray(x, dtype=float)
    if x.size < MIN_SERIES_LEN:
        raise InsufficientDataError(f"series has {x.size} points, need {MIN_SERIES_LEN}")

    g1 = gradient(x, 1)
    g2 = gradient(x, 2)
    maxima, minima = local_extrema(x)
    spacing = np.diff(maxima) * dt_s if maxima.size >= 2 else np.array([])
    slope, residual_var = _trend(x, dt_s)

    return np.array(
        [
            _mean(x),
            _var(x),
            _min(x),
            _max(x),
            float(np.median(x)),
            _moment_stat(x, stats.skew),
            _moment_stat(x, stats.kurtosis),
            float(np.ptp(x)),
            _mean(g1),
            _var(g1),
            _min(g1),
            _max(g1),
            _mean(np.abs(g1)),
            max_sum_subsequence(g1),
            float(np.count_nonzero(g1[:-1] * g1[1:] < 0)),
            _mean(g2),
            _var(g2),
            _min(g2),
            _max(g2),
            _mean(np.abs(g2)),
            float(maxima.size),
            _mean(x[maxima]),
            _var(x[maxima]),
            float(minima.size),
            _mean(x[minima]),
            _var(x[minima]),
            _mean(spacing),
            _var(spacing),
            total_variation(x, "L1"),
            total_variation(x, "L2sq"),
            float(_longest_run(g1 > 0)),
            float(_longest_run(g1 < 0)),
            autocorrelation(x, 1),
            autocorrelation(x, 5),
            slope,
            residual_var,
        ]
    )


def smoothed_series(
    samples: Sequence[tuple[float, float]], dt_s: float = RESAMPLE_DT_S, alpha: float = EWMA_ALPHA
) -> np.ndarray:
    return ewma(resample_uniform(samples, dt_s), alpha)


def featurize(
    trace: Trace, dt_s: float = RESAMPLE_DT_S, alpha: float = EWMA_ALPHA
) -> FeatureVector:
    """72-entry feature vector: RTT block then CWND block."""
    blocks = [
        series_features(smoothed_series(trace.rtt, dt_s, alpha), dt_s),
        series_features(smoothed_series(trace.cwnd, dt_s, alpha), dt_s),
    ]
    return FeatureVector(
        features=np.concatenate(blocks),
        label=trace.label,
        topology_seed=trace.topology_seed,
        feature_names=list(FEATURE_NAMES),
    )


def vectors_to_dataset(vectors: Sequence[FeatureVector]) -> Dataset:
    if not vectors:
        return Dataset(
            np.empty((0, N_FEATURES)),
            np.empty(0, dtype=int),
            np.empty(0, dtype=np.uint64),
            list(FEATURE_NAMES),
        )
    return Dataset(
        X=np.vstack([v.features for v in vectors]),
        y=np.array([LABEL_TO_Y[v.label] for v in vectors], dtype=int),
        topology_seeds=np.array([v.topology_seed for v in vectors], dtype=np.uint64),
        feature_names=list(FEATURE_NAMES),
    )


def featurize_many(traces: Iterable[Trace]) -> Dataset:
    """One row per trace, in input order."""
    return vectors_to_dataset([featurize(t) for t in traces])


def concat_datasets(parts: Sequence[Dataset]) -> Dataset:
    parts = [p for p in parts if len(p)]
    if not parts:
        return vectors_to_dataset([])
    return Dataset(
        X=np.vstack([p.X for p in parts]),
        y=np.concatenate([p.y for p in parts]),
        topology_seeds=np.concatenate([p.topology_seeds for p in parts]),
        feature_names=list(parts[0].feature_names),
    )
