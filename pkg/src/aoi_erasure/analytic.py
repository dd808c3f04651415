"""Closed-form AoI evaluators and threshold solvers.

Covers the four setting combinations (single or many sources, with or
without erasure feedback), the infinite-battery baselines, and the gain
metrics comparing the two feedback settings. All operations are pure
functions of their arguments.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

from scipy.optimize import bisect

from .model import AnalyticSolution, Feedback, Regime

__all__ = [
    "BracketError",
    "RootSolverConfig",
    "MaxMoments",
    "exp_max_moments",
    "p_nofb",
    "solve_nofb",
    "p_wfb",
    "solve_wfb",
    "aoi_rr_nofb",
    "aoi_maf_wfb",
    "optimize_gamma",
    "baseline_infinite_battery",
    "feedback_gain",
    "percentage_gain",
]


class BracketError(ValueError):
    """The configured bracket does not straddle a sign change."""


@dataclass(frozen=True, slots=True)
class RootSolverConfig:
    bracket_lo: float = 0.0
    bracket_hi: float = 50.0
    tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self) -> None:
        if not self.bracket_lo < self.bracket_hi:
            raise ValueError("bracket_lo must be below bracket_hi")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


DEFAULT_SOLVER = RootSolverConfig()


@dataclass(frozen=True, slots=True)
class MaxMoments:
    """First two moments of max(gamma, tau) for tau ~ exponential(1)."""

    m1: float
    m2: float


def _require_q(q: float) -> float:
    if not 0.0 <= q < 1.0:
        raise ValueError(f"q must satisfy 0 <= q < 1, got {q!r}")
    if q >= 0.999:
        # 1/(1-q)^2 terms dominate here; results are valid but extreme
        warnings.warn(f"q = {q} is close to 1; AoI values grow like 1/(1-q)^2", RuntimeWarning)
    return float(q)


def _require_m(M: int) -> int:
    m = int(M)
    if m != M or m < 1:
        raise ValueError(f"M must be a positive integer, got {M!r}")
    return m


def _as_feedback(setting: Feedback | str) -> Feedback:
    if isinstance(setting, Feedback):
        return setting
    return Feedback(str(setting).strip().lower())


def exp_max_moments(gamma: float) -> MaxMoments:
    """Moments of the wait max(gamma, tau), tau ~ exp(1).

    m1 = gamma + e^-gamma and m2 = gamma^2 + 2(gamma+1)e^-gamma; these are
    the building blocks of every threshold-policy AoI expression here.
    """
    if gamma < 0.0:
        raise ValueError(f"gamma must be nonnegative, got {gamma!r}")
    e = math.exp(-gamma)
    return MaxMoments(m1=gamma + e, m2=gamma * gamma + 2.0 * (gamma + 1.0) * e)


def p_nofb(lambda_prime: float, q: float) -> float:
    """Root function whose zero gives the optimal no-feedback threshold.

    Positive below the optimal threshold, negative above it; strictly
    decreasing in lambda_prime.
    """
    q = _require_q(q)
    if lambda_prime < 0.0:
        raise ValueError("lambda_prime must be nonnegative")
    e = math.exp(-lambda_prime)
    num = (1.0 - q) * (e - 0.5 * lambda_prime * lambda_prime) - q * (lambda_prime + e) ** 2
    return num / (1.0 - q) ** 2


def _bisect_checked(f: Callable[[float], float], lo: float, hi: float, cfg: RootSolverConfig) -> float:
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise BracketError(
            f"no sign change on [{lo:g}, {hi:g}] (f(lo) = {flo:g}, f(hi) = {fhi:g}); adjust the bracket"
        )
    root = bisect(f, lo, hi, xtol=cfg.tol, maxiter=cfg.max_iter, disp=True)
    # bisection converged to xtol; the residual should be derivative-small
    h = 1e-6
    slope = abs(f(root + h) - f(root - h)) / (2.0 * h)
    if abs(f(root)) > (slope + 1.0) * cfg.tol * 1e3:
        raise RuntimeError(f"root residual {f(root):g} exceeds the tolerance-scaled bound")
    return float(root)


def solve_nofb(q: float, cfg: RootSolverConfig = DEFAULT_SOLVER) -> AnalyticSolution:
    """Optimal single-source policy without erasure feedback.

    For q >= 1/2 the optimum is greedy with average AoI 1/(1-q). Below
    that, the optimal threshold lambda' is the unique zero of p_nofb and
    the optimal AoI follows from it in closed form.
    """
    q = _require_q(q)
    if q >= 0.5:
        lam = 1.0 / (1.0 - q)
        return AnalyticSolution(regime=Regime.GREEDY, lambda_star=lam, threshold=0.0, q=q)
    lp = _bisect_checked(lambda x: p_nofb(x, q), cfg.bracket_lo, cfg.bracket_hi, cfg)
    lam = (1.0 + q) / (1.0 - q) * lp + 2.0 * q / (1.0 - q) * math.exp(-lp)
    return AnalyticSolution(regime=Regime.THRESHOLD, lambda_star=lam, threshold=lp, q=q)


def p_wfb(lam: float, q: float) -> float:
    """Root function for the with-feedback setting, piecewise in lam.

    The breakpoint sits at q/(1-q), the mean retransmission overhead of
    the greedy phase.
    """
    q = _require_q(q)
    if lam < 0.0:
        raise ValueError("lam must be nonnegative")
    d = q / (1.0 - q)
    if lam < d:
        return 1.0 - lam / (1.0 - q) + (2.0 * q - q * q) / (1.0 - q) ** 2
    return math.exp(-(lam - d)) - 0.5 * lam * lam + (2.0 * q - q * q) / (2.0 * (1.0 - q) ** 2)


def solve_wfb(q: float, cfg: RootSolverConfig = DEFAULT_SOLVER) -> AnalyticSolution:
    """Optimal single-source policy with erasure feedback.

    The optimal structure is threshold-greedy for every q: threshold
    gamma* = lambda* - q/(1-q) on the first attempt after a success,
    greedy retransmissions afterwards. lambda* is the unique zero of
    p_wfb beyond the breakpoint, and gamma* is always positive.
    """
    q = _require_q(q)
    d = q / (1.0 - q)
    lo = max(d, cfg.bracket_lo)
    if lo >= cfg.bracket_hi:
        raise BracketError(
            f"breakpoint q/(1-q) = {d:g} is at or beyond bracket_hi = {cfg.bracket_hi:g}"
        )
    lam = _bisect_checked(lambda x: p_wfb(x, q), lo, cfg.bracket_hi, cfg)
    return AnalyticSolution(regime=Regime.THRESHOLD, lambda_star=lam, threshold=lam - d, q=q)


def aoi_rr_nofb(q: float, M: int, gamma: float) -> float:
    """Average AoI of M round-robin sources, no feedback, threshold gamma."""
    q = _require_q(q)
    M = _require_m(M)
    mm = exp_max_moments(gamma)
    return mm.m2 / (2.0 * mm.m1) + ((M - 1) / 2.0 + M * q / (1.0 - q)) * mm.m1


def aoi_maf_wfb(q: float, M: int, gamma: float) -> float:
    """Average AoI of M max-age-first sources, with feedback, threshold gamma.

    Built from the per-turn service moments: a turn takes max(gamma, tau)
    plus a geometric number of greedy retransmission waits.
    """
    q = _require_q(q)
    M = _require_m(M)
    mm = exp_max_moments(gamma)
    d = q / (1.0 - q)
    a = mm.m1 + d
    s = mm.m2 + 2.0 * mm.m1 * d + 2.0 * q / (1.0 - q) ** 2
    return s / (2.0 * a) + (M - 1) * a / 2.0


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float, max_iter: int) -> float:
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    else:
        raise RuntimeError(f"golden-section search did not shrink below tol in {max_iter} iterations")
    return 0.5 * (a + b)


def optimize_gamma(
    q: float,
    M: int,
    setting: Feedback | str,
    cfg: RootSolverConfig = DEFAULT_SOLVER,
) -> tuple[float, float]:
    """Minimize the matching closed form over the threshold gamma.

    Both closed forms are unimodal in gamma, so golden-section search on
    [bracket_lo, bracket_hi] finds the interior candidate; the gamma = 0
    boundary is then compared explicitly because for enough sources the
    minimizer sits exactly there.
    """
    setting = _as_feedback(setting)
    if setting is Feedback.NOFB:
        f = lambda g: aoi_rr_nofb(q, M, g)
    else:
        f = lambda g: aoi_maf_wfb(q, M, g)
    x = _golden_section(f, max(0.0, cfg.bracket_lo), cfg.bracket_hi, cfg.tol, cfg.max_iter)
    fx = f(x)
    f0 = f(0.0)
    if f0 <= fx:
        return 0.0, f0
    return x, fx


def baseline_infinite_battery(q: float, setting: Feedback | str) -> float:
    """Optimal average AoI with an infinite battery, used as a lower bound."""
    q = _require_q(q)
    if _as_feedback(setting) is Feedback.NOFB:
        return (1.0 + q) / (2.0 * (1.0 - q))
    return 1.0 / (2.0 * (1.0 - q))


def feedback_gain(q: float, cfg: RootSolverConfig = DEFAULT_SOLVER) -> float:
    """Absolute single-source AoI reduction from having erasure feedback."""
    return solve_nofb(q, cfg).lambda_star - solve_wfb(q, cfg).lambda_star


def percentage_gain(q: float, M: int, cfg: RootSolverConfig = DEFAULT_SOLVER) -> float:
    """Relative AoI reduction from feedback with M sources, in percent.

    Each setting is evaluated at its own optimal threshold.
    """
    _, rr = optimize_gamma(q, M, Feedback.NOFB, cfg)
    _, maf = optimize_gamma(q, M, Feedback.WFB, cfg)
    return (1.0 - maf / rr) * 100.0
