"""Speed and CLT-variance estimation from pooled regeneration blocks."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import InsufficientBlocksWarning, InsufficientDataError, MalformedInputError
from .cuts import DEFAULT_BUFFER, block_arrays, blocks, detect_cuts

__all__ = [
    "SpeedEstimate",
    "CutDetector",
    "RegenerationSpeedEstimator",
    "estimate",
    "naive_speed",
    "residuals",
]


@dataclass(frozen=True)
class SpeedEstimate:
    k_hat1: float
    k_hat2: float
    se_speed: float
    n_blocks: int
    n_runs: int
    mean_d_tau: float
    m2: float
    c1: float
    censored_tail: int = 0

    def as_dict(self):
        return asdict(self)


def _split(block_lists):
    runs = [block_arrays(bl) for bl in block_lists]
    return [(t, l) for t, l in runs if t.size]


def residuals(block_lists, k_hat1):
    """Per-run residuals ``Y_i = dL_i - k_hat1 * dTau_i``."""
    return [l - k_hat1 * t for t, l in _split(block_lists)]


def _lag_cov(ys, lag):
    num = sum(float(np.dot(y[:-lag], y[lag:])) for y in ys if y.size > lag)
    den = sum(y.size - lag for y in ys if y.size > lag)
    return (num / den if den else math.nan), den


def _ratio_se(num, den):
    """Standard error of ``sum(num) / sum(den)`` treating runs as i.i.d. batches."""
    r = num.size
    if r < 2:
        return math.nan
    k = num.sum() / den.sum()
    dev = num - k * den
    return math.sqrt(float(np.dot(dev, dev)) / (r * (r - 1))) / float(den.mean())


def estimate(block_lists, *, censored_tail=0):
    """Pool blocks from independent runs into a :class:`SpeedEstimate`.

    ``block_lists`` holds one entry per run (RegenBlocks or ``(dTau, dL)``
    pairs). The speed is the ratio of pooled means. The variance parameter
    is ``(mean Y^2 + 2 * lag-1 autocovariance) / mean dTau``, with the
    lag-1 term taken within runs only and the result floored at 0. The
    standard error comes from run-level ratio batching; with a single run it
    falls back to the asymptotic ``sqrt(k_hat2 / total time)``.
    """
    runs = _split(block_lists)
    if not runs:
        raise InsufficientDataError("no regeneration blocks to estimate from")
    d_tau = np.concatenate([t for t, _ in runs])
    d_l = np.concatenate([l for _, l in runs])
    total_tau = float(d_tau.sum())
    if not total_tau > 0:
        raise MalformedInputError("total block duration must be positive")
    k1 = float(d_l.sum()) / total_tau
    ys = [l - k1 * t for t, l in runs]
    m2 = float(np.mean(np.concatenate(ys) ** 2))
    c1, n_pairs = _lag_cov(ys, 1)
    if not n_pairs:
        c1 = 0.0
    mean_tau = total_tau / d_tau.size
    k2 = max(0.0, (m2 + 2.0 * c1) / mean_tau)
    if d_tau.size < 2:
        warnings.warn("a single block carries no variance information", InsufficientBlocksWarning, stacklevel=2)
    if len(runs) >= 2:
        se = _ratio_se(np.array([l.sum() for _, l in runs]), np.array([t.sum() for t, _ in runs]))
    else:
        se = math.sqrt(k2 / total_tau)
    return SpeedEstimate(k1, k2, se, int(d_tau.size), len(runs), mean_tau, m2, c1, int(censored_tail))


def naive_speed(runs):
    """Pooled ``sum |X_T| / sum T`` with run-level batching standard error."""
    levels = np.array([float(r.final_level) for r in runs])
    times = np.array([float(r.end_time) for r in runs])
    if not times.sum() > 0:
        raise MalformedInputError("runs have no elapsed time")
    return float(levels.sum() / times.sum()), _ratio_se(levels, times)


def _as_runs(X):
    if hasattr(X, "times"):
        return [X]
    return list(X)


class CutDetector(TransformerMixin, BaseEstimator):
    """Stateless transformer: trajectories to lists of :class:`CutRecord`."""

    def __init__(self, buffer=DEFAULT_BUFFER, with_paths=False):
        self.buffer = buffer
        self.with_paths = with_paths

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        return [detect_cuts(t, self.buffer, with_paths=self.with_paths) for t in _as_runs(X)]

    def __sklearn_is_fitted__(self):
        return True


class RegenerationSpeedEstimator(BaseEstimator):
    """Estimate the linear speed of ``|X_t|`` and its CLT variance.

    ``fit`` takes uncensored trajectories. Fitted attributes: ``speed_``,
    ``clt_variance_``, ``se_speed_``, ``n_blocks_``, ``estimate_`` and
    ``cuts_`` (per run). ``predict(t)`` returns the expected level
    ``speed_ * t``.
    """

    def __init__(self, buffer=DEFAULT_BUFFER):
        self.buffer = buffer

    def fit(self, X, y=None):
        runs = _as_runs(X)
        if not runs:
            raise InsufficientDataError("no trajectories given")
        self.cuts_ = CutDetector(self.buffer).transform(runs)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InsufficientBlocksWarning)
            block_lists = [blocks(c) for c in self.cuts_]
        tail = sum(r.final_level - (c[-1].level if c else 0) for r, c in zip(runs, self.cuts_))
        self.blocks_ = block_lists
        self.estimate_ = estimate(block_lists, censored_tail=tail)
        self.speed_ = self.estimate_.k_hat1
        self.clt_variance_ = self.estimate_.k_hat2
        self.se_speed_ = self.estimate_.se_speed
        self.n_blocks_ = self.estimate_.n_blocks
        return self

    def predict(self, t):
        check_is_fitted(self, "speed_")
        return self.speed_ * np.asarray(t, dtype=np.float64)
