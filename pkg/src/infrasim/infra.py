"""Infrastructure backends: a finite cyclic set of elements on a circle.

An infrastructure is a finite set of elements injectively placed on a
circle of circumference R.  Algorithms may only use the access model
below: walk to the neighbouring element (``bs`` / ``bs_inv``), combine
two elements (``gs``), and read *approximate* relative distances to a
requested number of bits.  The circumference and absolute positions are
hidden; only exact test backends expose them for verification.
"""
from __future__ import annotations

import json
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from .scaled import ScaledReal, sr


class BackendError(ValueError):
    """Malformed element encoding or unsupported backend operation."""


@dataclass(frozen=True)
class InfraParams:
    """Certified structural constants a backend promises to satisfy.

    gap_min   -- lower bound on every neighbour gap (> 0)
    gap_max   -- upper bound on every neighbour gap
    span_steps -- number of consecutive steps certified to cover span_dist
    span_dist -- lower bound on the distance covered by span_steps steps
    circ_upper -- upper bound on the circumference
    """

    gap_min: ScaledReal
    gap_max: ScaledReal
    span_steps: int
    span_dist: ScaledReal
    circ_upper: ScaledReal

    def __post_init__(self):
        if not (self.gap_min > 0 and self.gap_max >= self.gap_min):
            raise ValueError("need 0 < gap_min <= gap_max")
        if self.span_steps < 1 or not self.span_dist > 0:
            raise ValueError("need span_steps >= 1 and span_dist > 0")


class Infrastructure:
    """Access model shared by every backend.

    Elements are opaque hashable values; equality is canonical.  All
    handles are immutable after construction and safe to share.
    """

    params: InfraParams
    origin: object  # element with distance 0

    def bs(self, x):
        raise NotImplementedError

    def bs_inv(self, x):
        raise NotImplementedError

    def gs(self, x, y):
        raise NotImplementedError

    def delta_bs(self, x, m: int) -> ScaledReal:
        """Gap to the next element, within 2**-m, deterministic in (x, m)."""
        raise NotImplementedError

    def delta_gs(self, x, y, m: int) -> ScaledReal:
        """Distance correction of gs(x, y), within 2**-m."""
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


class ExactInfrastructure(Infrastructure):
    """Test-only extension: backends whose geometry is known exactly.

    Pipelines must never call these methods; they exist so tests can
    check results against ground truth.
    """

    def distance(self, x) -> Fraction:
        raise NotImplementedError

    def circumference(self) -> Fraction:
        raise NotImplementedError

    def elements(self):
        raise NotImplementedError

    def h_exact(self, r) -> tuple:
        """The unique (element, offset) pair at absolute position r."""
        raise NotImplementedError


class CyclicInfra(ExactInfrastructure):
    """Finite cyclic group of a given order as a discrete infrastructure.

    Elements are exponents 0..order-1 of a fixed generator; every gap is
    exactly 1 and every giant-step correction exactly 0.
    """

    def __init__(self, order: int):
        if order < 1:
            raise ValueError("order must be positive")
        self.order = order
        self.origin = 0
        one = sr(1)
        self.params = InfraParams(one, one, 1, one, sr(order))

    def _check(self, x):
        if not isinstance(x, int) or not (0 <= x < self.order):
            raise BackendError(f"bad cyclic element {x!r}")
        return x

    def bs(self, x):
        return (self._check(x) + 1) % self.order

    def bs_inv(self, x):
        return (self._check(x) - 1) % self.order

    def gs(self, x, y):
        return (self._check(x) + self._check(y)) % self.order

    def delta_bs(self, x, m):
        self._check(x)
        return sr(1)

    def delta_gs(self, x, y, m):
        self._check(x), self._check(y)
        return sr(0)

    def distance(self, x):
        return Fraction(self._check(x))

    def circumference(self):
        return Fraction(self.order)

    def elements(self):
        return range(self.order)

    def h_exact(self, r):
        fr = sr(r).as_fraction() % self.order
        x = int(fr)
        return x, ScaledReal.from_fraction(fr - x)

    def describe(self):
        return {"type": "cyclic", "order": self.order}


class SyntheticInfra(ExactInfrastructure):
    """Synthetic oracle backend built from an explicit list of gaps.

    The gaps are exact rationals, so relative distances are returned
    exactly for any requested precision.  Tests use the exact geometry;
    algorithms only see the generic access model.
    """

    def __init__(self, gaps, span_steps: int = 1, circ_upper=None):
        fracs = [sr(g).as_fraction() for g in gaps]
        if not fracs or any(g <= 0 for g in fracs):
            raise ValueError("need a nonempty list of positive gaps")
        self.gaps = fracs
        self.n = len(fracs)
        self.origin = 0

        den = lcm(*[g.denominator for g in fracs])
        self._den = den
        nums = [int(g * den) for g in fracs]
        self._gap_num = nums
        dist = [0]
        for v in nums[:-1]:
            dist.append(dist[-1] + v)
        self._dist_num = dist  # strictly increasing, starts at 0
        self._circ_num = dist[-1] + nums[-1]

        if span_steps < 1 or span_steps > self.n:
            raise ValueError("span_steps out of range")
        span = min(
            sum(nums[(i + k) % self.n] for k in range(span_steps))
            for i in range(self.n)
        )
        self.params = InfraParams(
            gap_min=ScaledReal(min(nums), den),
            gap_max=ScaledReal(max(nums), den),
            span_steps=span_steps,
            span_dist=ScaledReal(span, den),
            circ_upper=sr(circ_upper) if circ_upper is not None
            else ScaledReal(self._circ_num, den),
        )

    def _check(self, x):
        if not isinstance(x, int) or not (0 <= x < self.n):
            raise BackendError(f"bad synthetic element {x!r}")
        return x

    def bs(self, x):
        return (self._check(x) + 1) % self.n

    def bs_inv(self, x):
        return (self._check(x) - 1) % self.n

    def gs(self, x, y):
        t = (self._dist_num[self._check(x)] + self._dist_num[self._check(y)]) % self._circ_num
        idx = bisect_left(self._dist_num, t)
        return idx % self.n

    def delta_bs(self, x, m):
        return ScaledReal(self._gap_num[self._check(x)], self._den)

    def delta_gs(self, x, y, m):
        t = (self._dist_num[self._check(x)] + self._dist_num[self._check(y)]) % self._circ_num
        idx = bisect_left(self._dist_num, t)
        d_z = self._dist_num[idx] if idx < self.n else self._circ_num
        return ScaledReal(d_z - t, self._den)

    def distance(self, x):
        return Fraction(self._dist_num[self._check(x)], self._den)

    def circumference(self):
        return Fraction(self._circ_num, self._den)

    def elements(self):
        return range(self.n)

    def h_exact(self, r):
        fr = sr(r).as_fraction() % self.circumference()
        scaled = fr * self._den
        floor_scaled = scaled.numerator // scaled.denominator
        # last element whose distance is <= fr (int n <= fr*den iff n <= floor)
        idx = bisect_right(self._dist_num, floor_scaled) - 1
        return idx, ScaledReal.from_fraction(fr - Fraction(self._dist_num[idx], self._den))

    def describe(self):
        return {"type": "synthetic", "gaps": [str(g) for g in self.gaps]}


def backend_from_config(config) -> Infrastructure:
    """Build a backend from a JSON dict, JSON text, or shorthand string.

    Accepted shorthands: "cyclic:12", "quadratic:13".  Full configs:
    {"type":"synthetic","gaps":["3/5","11/10","4/5"]},
    {"type":"cyclic","order":12}, {"type":"quadratic","D":13}.
    """
    if isinstance(config, str):
        text = config.strip()
        if text.startswith("{"):
            config = json.loads(text)
        elif ":" in text:
            kind, _, arg = text.partition(":")
            config = {"type": kind.strip()}
            if kind.strip() == "cyclic":
                config["order"] = int(arg)
            elif kind.strip() == "quadratic":
                config["D"] = int(arg)
            else:
                raise BackendError(f"unknown backend shorthand {text!r}")
        else:
            raise BackendError(f"unparseable backend spec {text!r}")
    kind = config.get("type")
    if kind == "cyclic":
        return CyclicInfra(int(config["order"]))
    if kind == "synthetic":
        return SyntheticInfra(
            config["gaps"],
            span_steps=int(config.get("span_steps", 1)),
            circ_upper=config.get("circ_upper"),
        )
    if kind == "quadratic":
        from .quadfield import QuadInfra

        return QuadInfra(int(config["D"]), precision_guard=int(config.get("guard", 12)))
    raise BackendError(f"unknown backend type {kind!r}")
