"""Sweeps over N and kappa built on the margin LP and the multiplier checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateMultiplierError
from .lti import StateSpaceModel, nyquist_value
from .margin import ZERO_DECISION, DualCertificate, MarginProblem, PrimalSolution, build_margin_problem, solve_margin_lp
from .multiplier import FdiReport, ResponseCache, ZFMultiplier, certify_global_fdi, synth_pwl_multiplier

# (N, points per arc) tried in order when searching for a certified multiplier
DEFAULT_SCHEDULE: Tuple[Tuple[int, int], ...] = ((5, 8), (10, 8), (20, 8), (40, 8), (80, 8), (160, 8), (320, 8))


@dataclass(frozen=True)
class SweepPoint:
    N: int
    t_star: float
    certified_zero: Optional[bool]
    primal: PrimalSolution = field(repr=False)
    dual: DualCertificate = field(repr=False)
    problem: MarginProblem = field(repr=False)


def sweep_n(ss: StateSpaceModel, kappa: float, Ns: Sequence[int], exact: Optional[bool] = None,
            stop_at_zero: bool = False) -> List[SweepPoint]:
    out = []
    for N in Ns:
        p = build_margin_problem(ss, N, kappa)
        pr, du = solve_margin_lp(p, exact=exact)
        out.append(SweepPoint(N, pr.t_star, du.certified_zero, pr, du, p))
        if stop_at_zero and du.certified_zero:
            break
    return out


def find_zero_certificate(ss: StateSpaceModel, kappa: float, nmax: int = 12) -> Optional[SweepPoint]:
    """Smallest N <= nmax with an exactly certified t* = 0."""
    for pt in sweep_n(ss, kappa, range(1, nmax + 1)):
        if pt.certified_zero:
            return pt
    return None


@dataclass(frozen=True)
class MultiplierResult:
    multiplier: ZFMultiplier
    report: FdiReport
    N: int
    oversample: int
    t_star: float


def find_multiplier(ss: StateSpaceModel, kappa: float, schedule=DEFAULT_SCHEDULE,
                    cache: Optional[ResponseCache] = None) -> Optional[MultiplierResult]:
    """First multiplier along ``schedule`` whose FDI is certified on the whole circle."""
    if cache is None:
        cache = ResponseCache(ss)
    for N, K in schedule:
        p = build_margin_problem(ss, N, kappa, oversample=K)
        pr, _ = solve_margin_lp(p, exact=False)
        if pr.t_star < ZERO_DECISION:
            continue
        try:
            m = synth_pwl_multiplier(pr)
        except DegenerateMultiplierError:
            continue
        rep = certify_global_fdi(m, ss, kappa, cache=cache)
        if rep.passed:
            return MultiplierResult(m, rep, N, K, pr.t_star)
    return None


@dataclass(frozen=True)
class KappaVerdict:
    kappa: float
    multiplier: Optional[MultiplierResult]
    zero: Optional[SweepPoint]

    @property
    def stable(self) -> bool:
        return self.multiplier is not None


def classify_kappa(ss: StateSpaceModel, kappa: float, nmax: int = 12, schedule=DEFAULT_SCHEDULE,
                   cache: Optional[ResponseCache] = None) -> KappaVerdict:
    """A certified t* = 0 rules a multiplier out; otherwise search for one."""
    zero = find_zero_certificate(ss, kappa, nmax)
    if zero is not None:
        return KappaVerdict(kappa, None, zero)
    return KappaVerdict(kappa, find_multiplier(ss, kappa, schedule, cache), None)


@dataclass(frozen=True)
class ThresholdResult:
    certified: KappaVerdict
    refuted: KappaVerdict
    step: float
    evaluations: int

    @property
    def threshold(self) -> float:
        return self.certified.kappa


def _grid_kappa(i: int, step: float) -> float:
    return round(i * step, 10)


def kappa_threshold(ss: StateSpaceModel, step: float = 0.01, refine: Optional[float] = None,
                    nmax: int = 12, schedule=DEFAULT_SCHEDULE) -> ThresholdResult:
    """Bisection on a kappa grid for the largest value with a certified multiplier.

    A multiplier valid at kappa stays valid below it (Re M >= 0), so the
    predicate is monotone.  The upper end of the search is the Nyquist value.
    """
    cache = ResponseCache(ss)
    evals = 0

    def verdict(i, h):
        nonlocal evals
        evals += 1
        return classify_kappa(ss, _grid_kappa(i, h), nmax, schedule, cache)

    nyq = nyquist_value(ss)
    hi = int(math.floor(min(nyq, 1e3) / step)) + 1
    lo = 1
    v_lo = verdict(lo, step)
    if not v_lo.stable:
        raise ValueError("no certified multiplier even at the smallest kappa")
    v_hi = verdict(hi, step)
    if v_hi.stable:
        return ThresholdResult(v_hi, v_hi, step, evals)
    h = step
    while True:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            v = verdict(mid, h)
            if v.stable:
                lo, v_lo = mid, v
            else:
                hi, v_hi = mid, v
        if refine is None or h <= refine:
            break
        factor = int(round(h / refine))
        lo, hi, h = lo * factor, hi * factor, refine
    return ThresholdResult(v_lo, v_hi, h, evals)
