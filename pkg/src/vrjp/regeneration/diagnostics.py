"""Return probability, first-cut tails and CLT normality checks."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from ..exceptions import CensoredTrajectoryError, InsufficientDataError
from ..numerics import compute_constants, tail_bound_l
from .cuts import DEFAULT_BUFFER, detect_cuts
from .estimator import _lag_cov, estimate, residuals

__all__ = [
    "AD_CRITICAL_1PCT",
    "CltReport",
    "ReturnEstimate",
    "TailPoint",
    "anderson_darling_normal",
    "clt_diagnostic",
    "first_cut_level",
    "l1_tail",
    "return_probability",
    "return_probability_from_flags",
    "returned",
    "returned_in_two_jumps",
]

# Asymptotic 1% point of A^2 for a fully specified null distribution.
AD_CRITICAL_1PCT = 3.857
RESIDUAL_EPS = 1e-4


def _binom_se(p, n):
    return math.sqrt(max(p * (1.0 - p), 0.0) / n) if n else math.nan


def returned(traj):
    """``True`` if the root is occupied again after the first jump."""
    if traj.nodes.size < 3:
        return False
    return bool(np.any(traj.nodes[2:] == 0))


def returned_in_two_jumps(traj):
    return traj.nodes.size >= 3 and int(traj.nodes[2]) == 0


@dataclass(frozen=True)
class ReturnEstimate:
    estimate: float
    stderr: float
    two_jump: float
    two_jump_stderr: float
    n_used: int
    n_flagged: int
    residual_bound: float

    def __iter__(self):
        yield self.estimate
        yield self.stderr

    def as_dict(self):
        return asdict(self)


def return_probability(runs, *, strict=False, eps=RESIDUAL_EPS):
    """Fraction of runs that revisit the root after ``T_1``.

    Runs that returned count as returns whatever their stop reason. A run
    that stopped at its max level without returning counts as a non-return.
    ``residual_bound`` is the tail bound on ``P(l_1 >= n)`` at the smallest
    max level among those runs: a later return forces ``l_1`` beyond that
    level, so it bounds the chance of a misclassified non-return. With
    ``strict=True`` such runs count only if the bound is below ``eps``;
    the call is refused otherwise. Censored runs without a return are
    flagged and left out.
    """
    runs = list(runs)
    if not runs:
        raise InsufficientDataError("no runs")
    return return_probability_from_flags(
        runs[0].b,
        [returned(r) for r in runs],
        [returned_in_two_jumps(r) for r in runs],
        [r.stop_reason for r in runs],
        [r.final_level for r in runs],
        strict=strict,
        eps=eps,
    )


def return_probability_from_flags(b, returns, two_jumps, stop_reasons, final_levels, *, strict=False, eps=RESIDUAL_EPS):
    """:func:`return_probability` on per-run summaries (as stored in archives)."""
    flags = np.asarray(returns, dtype=bool)
    two = np.asarray(two_jumps, dtype=bool)
    if flags.size == 0:
        raise InsufficientDataError("no runs")
    uncensored = np.array([s == "max-level" for s in stop_reasons])
    tops = np.asarray(final_levels)[~flags & uncensored]
    bound = 0.0
    if tops.size:
        n = int(tops.min())
        try:
            bound = tail_bound_l(n, 1.0 / n, compute_constants(b)) if n > 0 else 1.0
        except ValueError:
            bound = 1.0
    if strict and bound >= eps and not flags.all():
        raise CensoredTrajectoryError(
            f"non-returns cannot be certified: residual return bound {bound:.3g} >= {eps:g}"
        )
    usable = flags | uncensored
    used = int(usable.sum())
    if used == 0:
        raise CensoredTrajectoryError("every run is censored without a return")
    est = float(flags[usable].mean())
    n_all = int(flags.size)
    two_est = float(two.mean())
    return ReturnEstimate(
        est, _binom_se(est, used), two_est, _binom_se(two_est, n_all), used, n_all - used, float(bound)
    )


def first_cut_level(traj, buffer=DEFAULT_BUFFER):
    """Smallest detected cut level, or ``None`` if no level qualified."""
    cuts = detect_cuts(traj, buffer)
    return cuts[0].level if cuts else None


@dataclass(frozen=True)
class TailPoint:
    n: int
    bound: float
    empirical: float
    stderr: float

    def as_tuple(self):
        return (self.n, self.bound, self.empirical, self.stderr)


def l1_tail(runs, ns, *, buffer=DEFAULT_BUFFER, constants=None, first_levels=None):
    """Empirical ``P(l_1 >= n)`` next to the tail bound at ``s = 1/n``.

    A run enters ``l_1 >= n`` unless a cut below ``n`` was detected, so runs
    without any classified cut (too short, or ``n`` above the scanned range)
    count against the bound.
    """
    runs = list(runs)
    if first_levels is None:
        first_levels = [first_cut_level(r, buffer) for r in runs]
    if not first_levels:
        raise InsufficientDataError("no runs")
    if constants is None:
        constants = compute_constants(runs[0].b)
    out = []
    total = len(first_levels)
    for n in ns:
        hit = sum(1 for f in first_levels if f is None or f >= n)
        p = hit / total
        out.append(TailPoint(int(n), tail_bound_l(int(n), 1.0 / n, constants), p, _binom_se(p, total)))
    return out


def anderson_darling_normal(x):
    """A^2 of the sample against the fully specified standard normal."""
    x = np.sort(np.asarray(x, dtype=np.float64))
    n = x.size
    i = np.arange(1, n + 1)
    logcdf = stats.norm.logcdf(x)
    logsf = stats.norm.logsf(x[::-1])
    return float(-n - np.sum((2 * i - 1) * (logcdf + logsf)) / n)


@dataclass(frozen=True)
class CltReport:
    degenerate: bool
    n_runs: int
    n_residuals: int
    ad_statistic: float
    ad_critical: float
    normal_pass: bool | None
    lag1_autocov: float
    lag2_autocorr: float
    lag2_band: float
    lag2_pass: bool
    standardized: tuple

    @property
    def passed(self):
        return self.lag2_pass and (self.degenerate or bool(self.normal_pass))

    def as_dict(self, include_sums=False):
        d = asdict(self)
        if not include_sums:
            d.pop("standardized")
        d["passed"] = self.passed
        return d


def clt_diagnostic(block_lists, est=None, *, min_runs=50):
    """Normality of standardized per-run residual sums and the lag-2 check.

    ``S_r = sum_i Y_i / sqrt(n_r * k_hat2 * mean dTau)`` is compared with
    N(0, 1) by Anderson-Darling at the 1% level. The lag-2 autocorrelation
    of the residuals must lie within ``3 / sqrt(n_pairs)`` of 0.
    """
    block_lists = list(block_lists)
    if est is None:
        est = estimate(block_lists)
    ys = residuals(block_lists, est.k_hat1)
    if len(ys) < min_runs:
        raise InsufficientDataError(f"need at least {min_runs} runs with blocks, got {len(ys)}")
    n_res = sum(y.size for y in ys)
    c2, n_pairs = _lag_cov(ys, 2)
    rho2 = c2 / est.m2 if est.m2 > 0 and n_pairs else 0.0
    band = 3.0 / math.sqrt(n_pairs) if n_pairs else math.inf
    lag2_ok = bool(abs(rho2) <= band)
    scale = est.k_hat2 * est.mean_d_tau
    if scale <= 0:
        return CltReport(True, len(ys), n_res, math.nan, AD_CRITICAL_1PCT, None, est.c1, rho2, band, lag2_ok, ())
    s = np.array([y.sum() / math.sqrt(y.size * scale) for y in ys])
    a2 = anderson_darling_normal(s)
    return CltReport(
        False, len(ys), n_res, a2, AD_CRITICAL_1PCT, bool(a2 < AD_CRITICAL_1PCT), est.c1, rho2, band, lag2_ok, tuple(s)
    )
