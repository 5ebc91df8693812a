"""Analytic lower bounds and standalone verifiers.

Every success-probability formula used by the pipelines lives here as a
pure double-precision function (the formulas contain transcendental
constants; the Monte Carlo counts they are compared with stay exact).
Linear factors are clamped at zero, so out-of-range arguments yield the
vacuous bound 0 rather than a spurious positive value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

TWO_SIN = 2.0 * math.sin(math.pi / 32.0)


def sinc(x: float) -> float:
    """sin(pi x)/(pi x), continuously extended at 0."""
    if x == 0:
        return 1.0
    return math.sin(math.pi * x) / (math.pi * x)


def _pos(x: float) -> float:
    return x if x > 0 else 0.0


# -- perturbed geometric sums -------------------------------------------------


class InvalidInstance(ValueError):
    """Instance violates the admissibility conditions of the inequality."""


@dataclass
class GeomSumInstance:
    """Perturbed geometric sum with missing terms.

    n      -- root-of-unity order (n >= 2)
    delta  -- frequency perturbation, |delta| < 1
    js     -- retained indices, subset of 0..n-1
    thetas -- per-index phase perturbations, |theta_j| <= n/32
    """

    n: int
    delta: float
    js: np.ndarray
    thetas: np.ndarray

    def validate(self):
        if self.n < 2:
            raise InvalidInstance("need n >= 2")
        if not abs(self.delta) < 1:
            raise InvalidInstance("need |delta| < 1")
        if len(self.js) != len(self.thetas) or len(self.js) == 0:
            raise InvalidInstance("index and perturbation arrays must align")
        if len(np.unique(self.js)) != len(self.js):
            raise InvalidInstance("duplicate indices")
        if self.js.min() < 0 or self.js.max() >= self.n:
            raise InvalidInstance("indices out of range")
        if np.abs(self.thetas).max() > self.n / 32 + 1e-12:
            raise InvalidInstance("phase perturbation exceeds n/32")
        needed = geomsum_min_kept(self.n, self.delta)
        if needed > self.n:
            raise InvalidInstance(
                "no admissible subset exists for this perturbation"
            )
        if len(self.js) < needed:
            raise InvalidInstance("too few retained indices")


def geomsum_min_kept(n: int, delta: float) -> int:
    """Smallest admissible number of retained indices."""
    return math.ceil(n * (1.0 - sinc(delta)) / (1.0 - TWO_SIN) - 1e-12)


def geomsum_lhs(inst: GeomSumInstance) -> float:
    inst.validate()
    phases = np.exp(2j * np.pi * (inst.delta * inst.js + inst.thetas) / inst.n)
    total = phases.sum()
    return float(abs(total) ** 2) / len(inst.js) ** 2


def geomsum_rhs(inst: GeomSumInstance) -> float:
    inst.validate()
    base = 1.0 - TWO_SIN - (1.0 - sinc(inst.delta)) * inst.n / len(inst.js)
    return base * base


def random_geomsum_instance(rng, n_min: int = 2, n_max: int = 2048,
                            delta: float | None = None,
                            prefix: bool = False,
                            min_size: bool = True) -> GeomSumInstance:
    """Random admissible instance; retained set of minimum admissible size
    (or any admissible size), as a random subset or contiguous prefix."""
    for _ in range(1000):
        n = int(rng.integers(n_min, n_max + 1))
        d = float(rng.uniform(0, 1)) if delta is None else delta
        needed = max(1, geomsum_min_kept(n, d))
        if needed > n:
            if delta is not None:
                raise InvalidInstance("requested perturbation is inadmissible")
            continue
        size = needed if min_size else int(rng.integers(needed, n + 1))
        js = np.arange(size) if prefix else np.sort(
            rng.choice(n, size=size, replace=False)
        )
        thetas = rng.uniform(-n / 32, n / 32, size=size)
        return GeomSumInstance(n=n, delta=d, js=js, thetas=thetas)
    raise InvalidInstance("failed to draw an admissible instance")


# -- success-probability formulas ---------------------------------------------


def success_circ_lower(S: float, q: float) -> float:
    """Lower bound on single-invocation period-recovery success."""
    if S <= 2 or q < S * S:
        return 0.0
    core = _pos(sinc(0.5 + 0.5 / S) - TWO_SIN)
    return 0.5 * _pos(1 / 32 - 2 / S) ** 2 * _pos(1 - 2 * S / q) ** 2 * core**4


def success_circ_limit() -> float:
    """Large-size limit of the period-recovery bound."""
    return 0.5 * (1 / 32) ** 2 * (sinc(0.5) - TWO_SIN) ** 4


def periodic_lower(N: float, R: float, gap_min: float, q: float) -> float:
    """Lower bound on measuring a truly periodic support."""
    return _pos(1 - 1 / (N * gap_min) - 1 / (N * R)) * _pos(1 - 2 * N * R / q)


def dlog_kappa_interval(q_factor: int) -> tuple[float, float]:
    lo = (1.0 - sinc(0.75)) / (1.0 - TWO_SIN)
    hi = 1.0 - 2.0 / (2.0 * q_factor + 1.0)
    return lo, hi


def _kappa_core(kappa: float) -> float:
    return _pos(1.0 - TWO_SIN - (1.0 - sinc(0.75)) / kappa)


def _grid_maximize(fn, lo: float, hi: float, points: int = 64) -> tuple[float, float]:
    """Coarse grid plus one local refinement pass; (argmax, max)."""
    if not hi > lo:
        return lo, 0.0
    xs = np.linspace(lo, hi, points + 2)[1:-1]
    vals = [fn(x) for x in xs]
    best = int(np.argmax(vals))
    span = (hi - lo) / points
    fine = np.linspace(max(lo, xs[best] - span), min(hi, xs[best] + span), 65)[1:-1]
    fvals = [fn(x) for x in fine]
    fbest = int(np.argmax(fvals))
    if fvals[fbest] >= vals[best]:
        return float(fine[fbest]), float(fvals[fbest])
    return float(xs[best]), float(vals[best])


def success_dlog_lower(q_factor: int, B: float, p_g: float,
                       kappa: float | None = None,
                       return_kappa: bool = False):
    """Lower bound on single-invocation dlog success (kappa maximized)."""
    lo, hi = dlog_kappa_interval(q_factor)

    def at(k: float) -> float:
        return (p_g
                * _pos(1 - 2 / ((2 * q_factor + 1) * (1 - k))) ** 2
                * (k * k / 2) * _kappa_core(k) ** 4
                * _pos(1 / 64 - 2 / B) ** 2)

    if kappa is not None:
        if not (lo < kappa < hi):
            raise ValueError("kappa outside the admissible interval")
        return at(kappa)
    k_best, val = _grid_maximize(at, lo, hi)
    return (val, k_best) if return_kappa else val


def success_dlog_simplified(p_g: float, return_kappa: bool = False):
    """Size-independent dlog bound valid once R >= 256 and q_factor >= 8."""
    lo, _ = dlog_kappa_interval(8)
    hi = 1.0 - 1.0 / 8.0  # the simplified penalty needs 1 - kappa > 1/8

    def at(k: float) -> float:
        return (p_g * _pos(1 - 1 / (8 * (1 - k))) ** 2
                * (k * k / 2) * _kappa_core(k) ** 4 * (1 / 128) ** 2)

    k_best, val = _grid_maximize(at, lo, hi)
    return (val, k_best) if return_kappa else val


# -- experiments ---------------------------------------------------------------


#: reference value of the sum of inverse squared primes
PRIME_SQUARE_RECIP = 0.4522474200
COPRIME_FLOOR = 1.0 - PRIME_SQUARE_RECIP
COPRIME_LIMIT = 6.0 / math.pi**2


@dataclass
class BoundReport:
    formula: str
    inputs: dict
    analytic: float
    empirical: float
    trials: int
    verdict: bool
    slack: float = 0.0
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "formula": self.formula, "inputs": self.inputs,
            "analytic": self.analytic, "empirical": self.empirical,
            "trials": self.trials, "verdict": bool(self.verdict),
            "slack": self.slack, **({"extra": self.extra} if self.extra else {}),
        }


def one_sided_pass(successes: int, trials: int, bound: float,
                   alpha: float = 0.01) -> bool:
    """Accept the claim rate >= bound unless the data refute it at level alpha."""
    if bound <= 0:
        return True
    return float(binom.cdf(successes, trials, min(bound, 1.0))) >= alpha


def coprime_experiment(n_range: int, trials: int, rng,
                       exhaustive: bool = False) -> BoundReport:
    """Empirical frequency of coprime uniform pairs from 1..n_range."""
    if exhaustive:
        a = np.arange(1, n_range + 1)
        g = np.gcd.outer(a, a)
        hits = int((g == 1).sum())
        total = n_range * n_range
        freq = hits / total
    else:
        total = trials
        hits = 0
        chunk = 1 << 20
        left = trials
        while left:
            size = min(chunk, left)
            a = rng.integers(1, n_range + 1, size=size)
            b = rng.integers(1, n_range + 1, size=size)
            hits += int((np.gcd(a, b) == 1).sum())
            left -= size
        freq = hits / total
    sigma = math.sqrt(max(freq * (1 - freq), 1e-12) / total)
    verdict = freq >= 0.5 and abs(freq - COPRIME_LIMIT) <= max(0.01, 6 * sigma)
    return BoundReport(
        formula="coprime", inputs={"n_range": n_range, "exhaustive": exhaustive},
        analytic=0.5, empirical=freq, trials=total, verdict=verdict,
        slack=6 * sigma, extra={"floor": COPRIME_FLOOR, "limit": COPRIME_LIMIT},
    )


def cf_approx(r, c):
    """Convergent p/q of r with q <= c and |r - p/q| < 1/(c q); c > 1."""
    from .period import Convergent
    from .scaled import sr

    r = sr(r)
    if not c > 1:
        raise ValueError("need c > 1")
    num, den = r.m, r.s
    p_prev, p_cur = 1, num // den
    q_prev, q_cur = 0, 1
    num, den = den, num - (num // den) * den
    while den:
        a = num // den
        num, den = den, num - a * den
        p_next, q_next = a * p_cur + p_prev, a * q_cur + q_prev
        if q_next > c:
            break
        p_prev, p_cur = p_cur, p_next
        q_prev, q_cur = q_cur, q_next
    return Convergent(p_cur, q_cur)
