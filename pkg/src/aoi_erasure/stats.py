"""Renewal-reward estimation and analytic-vs-simulation oracles."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import t as student_t

from .analytic import aoi_maf_wfb, aoi_rr_nofb
from .model import EpochRecord, Feedback

__all__ = [
    "RenewalEstimate",
    "renewal_estimate",
    "ratio_estimate",
    "batch_means_ci",
    "closed_form_aoi",
    "ValidationRecord",
    "validate",
    "grid_oracle_gamma",
    "sim_gamma_curve",
]

_Z95 = 1.959963984540054  # two-sided 95% normal quantile


@dataclass(frozen=True, slots=True)
class RenewalEstimate:
    """Empirical long-term average AoI from i.i.d. epochs."""

    point: float
    ci_half_width: float
    n_epochs: int


def ratio_estimate(y: np.ndarray, R: np.ndarray) -> tuple[float, float]:
    """Ratio-of-sums estimator of E[R]/E[y] with a delta-method 95% CI."""
    n = y.size
    if n == 0:
        raise ValueError("no epochs to estimate from")
    point = float(R.sum() / y.sum())
    if n == 1:
        return point, 0.0
    cov = np.cov(R, y, ddof=1)
    var_r, var_y, cov_ry = cov[0, 0], cov[1, 1], cov[0, 1]
    ybar = float(y.mean())
    var_point = (var_r - 2.0 * point * cov_ry + point * point * var_y) / (n * ybar * ybar)
    return point, _Z95 * float(np.sqrt(max(var_point, 0.0)))


def renewal_estimate(epochs: Sequence[EpochRecord]) -> RenewalEstimate:
    """Estimate the average AoI from collected epoch records."""
    n = len(epochs)
    if n == 0:
        raise ValueError("no epochs to estimate from")
    if n < 30:
        warnings.warn(f"only {n} epochs; the normal CI is unreliable below 30", RuntimeWarning)
    y = np.fromiter((e.y for e in epochs), dtype=np.float64, count=n)
    R = np.fromiter((e.R for e in epochs), dtype=np.float64, count=n)
    point, ci = ratio_estimate(y, R)
    return RenewalEstimate(point=point, ci_half_width=ci, n_epochs=n)


def batch_means_ci(batches: np.ndarray) -> float:
    """95% half-width from batch means (Student t, B - 1 degrees of freedom)."""
    b = batches.size
    if b < 2:
        return 0.0
    se = float(np.std(batches, ddof=1)) / np.sqrt(b)
    return float(student_t.ppf(0.975, b - 1)) * se


def closed_form_aoi(q: float, M: int, setting: Feedback | str, gamma: float) -> float:
    """Dispatch to the closed form matching the feedback setting."""
    setting = Feedback(setting) if not isinstance(setting, Feedback) else setting
    if setting is Feedback.NOFB:
        return aoi_rr_nofb(q, M, gamma)
    return aoi_maf_wfb(q, M, gamma)


@dataclass(frozen=True, slots=True)
class ValidationRecord:
    """Outcome of one analytic-vs-simulation comparison."""

    q: float
    M: int
    setting: Feedback
    gamma: float
    analytic: float
    sim_mean: float
    sim_ci: float
    n_epochs: int
    seed: int
    rel_tol: float
    passed: bool

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def _simulate_pooled(
    q: float, M: int, setting: Feedback, gamma: float, n_epochs: int, seed: int
) -> tuple[float, float]:
    # epoch arrays straight from the engine; building record objects for
    # every cell of a large grid would dominate the runtime
    from .simulator import _epochs_nofb, _epochs_wfb, _spawn_streams

    rng_a, rng_e, rng_o = _spawn_streams(seed, None)
    engine = _epochs_wfb if setting is Feedback.WFB else _epochs_nofb
    raw = engine(q, M, gamma, n_epochs, rng_a, rng_e, rng_o)
    y = np.concatenate(raw.ys)
    return ratio_estimate(y, 0.5 * y * y)


def validate(
    q: float,
    M: int,
    setting: Feedback | str,
    gamma: float,
    n_epochs: int,
    seed: int,
    rel_tol: float = 0.01,
) -> ValidationRecord:
    """Simulate one cell and compare against its closed form.

    PASS means the gap is within max(3 CI half-widths, rel_tol relative),
    so a cell passes either because it is statistically indistinguishable
    or because it is numerically close.
    """
    setting = Feedback(setting) if not isinstance(setting, Feedback) else setting
    analytic = closed_form_aoi(q, M, setting, gamma)
    point, ci = _simulate_pooled(q, M, setting, gamma, n_epochs, seed)
    passed = abs(point - analytic) <= max(3.0 * ci, rel_tol * analytic)
    return ValidationRecord(
        q=q,
        M=M,
        setting=setting,
        gamma=gamma,
        analytic=analytic,
        sim_mean=point,
        sim_ci=ci,
        n_epochs=n_epochs,
        seed=seed,
        rel_tol=rel_tol,
        passed=passed,
    )


_GRID_HI = 5.0


def grid_oracle_gamma(
    q: float,
    M: int,
    setting: Feedback | str,
    grid_step: float,
    n_epochs: int | None = None,
    seed: int = 0,
) -> float:
    """Brute-force threshold search on gamma in {0, step, ..., 5}.

    With n_epochs unset the closed form is scanned, giving an optimizer
    oracle; with n_epochs set each grid point is simulated (one common
    seed across points, so the curve is smooth in gamma) and the
    empirical argmin is returned.
    """
    if grid_step <= 0.0:
        raise ValueError("grid_step must be positive")
    setting = Feedback(setting) if not isinstance(setting, Feedback) else setting
    gammas = np.arange(0.0, _GRID_HI + 0.5 * grid_step, grid_step)
    if n_epochs is None:
        vals = [closed_form_aoi(q, M, setting, g) for g in gammas]
    else:
        vals = [_simulate_pooled(q, M, setting, g, n_epochs, seed)[0] for g in gammas]
    return float(gammas[int(np.argmin(vals))])


def sim_gamma_curve(
    q: float,
    M: int,
    setting: Feedback | str,
    gammas: Sequence[float],
    n_epochs: int,
    seed: int = 0,
) -> list[RenewalEstimate]:
    """Simulated AoI estimates along a gamma grid, common random numbers."""
    setting = Feedback(setting) if not isinstance(setting, Feedback) else setting
    out = []
    for g in gammas:
        point, ci = _simulate_pooled(q, M, setting, g, n_epochs, seed)
        out.append(RenewalEstimate(point=point, ci_half_width=ci, n_epochs=n_epochs * M))
    return out
