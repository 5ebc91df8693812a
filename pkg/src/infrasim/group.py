"""Circle-group arithmetic on f-representations.

A group element is a pair (x, f): an infrastructure element plus a
nonnegative offset short of the next element.  Addition composes the
elements with a giant step and repairs the offset with baby steps; the
accumulated (non-wrapped) distance of every computation is tracked
exactly in rational arithmetic so evaluation of the line homomorphism
r -> (x, f) can certify its final error against a precision budget.
"""
from __future__ import annotations

from dataclasses import dataclass

from .infra import Infrastructure, InfraParams, ExactInfrastructure, BackendError
from .scaled import ScaledReal, ZERO, sr, round_nearest, floor_scaled


class BudgetError(RuntimeError):
    """A walk exceeded its certified step budget or no precision certifies."""


@dataclass(frozen=True)
class FRep:
    """Canonical pair (element, offset) with 0 <= offset < next gap."""

    x: object
    f: ScaledReal


@dataclass(frozen=True)
class ShiftedGrid:
    """Evaluation points i/N + j/L with N | L and 0 <= j < L/N."""

    N: int
    L: int
    j: int

    def __post_init__(self):
        if self.N < 1 or self.L % self.N != 0 or not (0 <= self.j < self.L // self.N):
            raise ValueError("invalid grid parameters")

    def point(self, i: int) -> ScaledReal:
        return ScaledReal(i * (self.L // self.N) + self.j, self.L)


@dataclass(frozen=True)
class PrecisionBudget:
    """Certified working precision for a family of evaluations.

    ``bound`` is the closed-form worst-case deviation between tracked and
    true accumulated distance; certification means bound < target.
    """

    m: int
    L: int
    target: ScaledReal
    bound: ScaledReal
    span_clamp: ScaledReal
    reach: ScaledReal  # largest evaluation point the budget covers


def grid_points_per_unit(params: InfraParams) -> int:
    """Smallest grid density giving two points between any two elements."""
    return (2 / params.gap_min).ceil()


def _error_terms(params: InfraParams, m: int, B: ScaledReal, A: int, extra_steps: int):
    kb = params.span_steps
    C = (2 * params.gap_max / params.span_dist).ceil()
    K = kb + 1 + kb * C
    K2 = 1 + kb * C
    pow2 = 1 << m
    a_max = (B / params.span_dist).floor() + 2
    e_h = ScaledReal(a_max * K + a_max.bit_length() * K2, pow2)
    e_land = e_h + ScaledReal(kb, pow2) * ((e_h + params.gap_max * kb) / params.span_dist).ceil()
    e_scalar = ZERO if A <= 1 else ScaledReal(A * K + A.bit_length() * K2 + K2, pow2)
    drift = ScaledReal(extra_steps * K2, pow2) if extra_steps else ZERO
    return e_land + e_scalar + drift


def choose_precision(params: InfraParams, B, L: int, A: int = 1,
                     extra_steps: int = 0, target=None, m_floor: int = 1,
                     m_cap: int = 4096) -> PrecisionBudget:
    """Smallest working precision whose closed-form error bound meets target.

    ``B`` bounds the evaluation points, ``A`` the scalar multiplier range,
    ``extra_steps`` the number of incremental grid advances sharing the
    budget.  Default target is half a grid cell, 1/(2L).
    """
    B = sr(B)
    target = ScaledReal(1, 2 * L) if target is None else sr(target)
    if not target > 0:
        raise ValueError("target must be positive")

    def ok(m):
        return _error_terms(params, m, B, A, extra_steps) < target

    lo = max(1, m_floor)
    if not ok(m_cap):
        raise BudgetError("no working precision up to the cap certifies the bound")
    hi = lo
    while not ok(hi):
        hi = min(2 * hi + 8, m_cap)
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    m = hi
    return PrecisionBudget(
        m=m, L=L, target=target, bound=_error_terms(params, m, B, A, extra_steps),
        span_clamp=params.span_dist, reach=B,
    )


def recursion_error_estimate(params: InfraParams, B, m: int) -> ScaledReal:
    """Step-by-step simulation of the error recursion for one evaluation.

    Iterates the per-doubling error growth and the addition chain instead
    of the closed form; used to confirm the closed form dominates.
    """
    B = sr(B)
    kb = params.span_steps
    C = (2 * params.gap_max / params.span_dist).ceil()
    pow2 = 1 << m
    unit = ScaledReal(1, pow2)
    a_max = (B / params.span_dist).floor() + 2
    bits = max(1, a_max.bit_length())
    e = ScaledReal(kb, pow2)  # error of the initial span walk
    per_add = unit * (1 + kb * C)
    doubles = []
    for _ in range(bits):
        doubles.append(e)
        e = 2 * e + unit + ScaledReal(kb * C, pow2)
    acc = ZERO
    for d in doubles:
        acc = acc + d + per_add
    e_land = acc + ScaledReal(kb, pow2) * ((acc + params.gap_max * kb) / params.span_dist).ceil()
    return e_land


# -- tracked walks ---------------------------------------------------------


def _step_budget(params: InfraParams, f: ScaledReal) -> int:
    base = 4 * params.span_steps * (2 * params.gap_max / params.span_dist).ceil()
    extra = params.span_steps * ((abs(f) + 2 * params.gap_max) / params.span_dist).ceil()
    return base + extra + params.span_steps


def _reduce_walk(infra: Infrastructure, x, f: ScaledReal, m: int,
                 max_steps: int | None = None):
    """Normalize (x, f) to 0 <= f < gap(x), preserving tracked distance."""
    budget = _step_budget(infra.params, f) if max_steps is None else max_steps
    steps = 0
    while f < 0:
        x = infra.bs_inv(x)
        f = f + infra.delta_bs(x, m)
        steps += 1
        if steps > budget:
            raise BudgetError("backward reduction exceeded its step budget")
    gap = infra.delta_bs(x, m)
    while f >= gap:
        f = f - gap
        x = infra.bs(x)
        gap = infra.delta_bs(x, m)
        steps += 1
        if steps > budget:
            raise BudgetError("forward reduction exceeded its step budget")
    return x, f, steps


def reduce_pair(infra: Infrastructure, pair, m: int, max_steps: int | None = None) -> FRep:
    """Public reduction of an arbitrary (element, offset) pair."""
    x, f, _ = _reduce_walk(infra, pair[0], sr(pair[1]), m, max_steps)
    return FRep(x, f)


def add(infra: Infrastructure, p: FRep, q: FRep, m: int) -> FRep:
    z = infra.gs(p.x, q.x)
    f = p.f + q.f - infra.delta_gs(p.x, q.x, m)
    x, f, _ = _reduce_walk(infra, z, f, m)
    return FRep(x, f)


def scalar_mul(infra: Infrastructure, a: int, p: FRep, m: int) -> FRep:
    """a-fold sum of p by binary doubling; a >= 0."""
    if a < 0:
        raise ValueError("scalar must be nonnegative")
    result = None
    square = p
    while a:
        if a & 1:
            result = square if result is None else add(infra, result, square, m)
        a >>= 1
        if a:
            square = add(infra, square, square, m)
    return result if result is not None else FRep(infra.origin, ZERO)


def _add_tracked(infra, p, q, m):
    (px, pf, pt), (qx, qf, qt) = p, q
    z = infra.gs(px, qx)
    f = pf + qf - infra.delta_gs(px, qx, m)
    x, f, _ = _reduce_walk(infra, z, f, m)
    return x, f, pt + qt


def _scalar_mul_tracked(infra, a, p, m):
    result = None
    square = p
    while a:
        if a & 1:
            result = square if result is None else _add_tracked(infra, result, square, m)
        a >>= 1
        if a:
            square = _add_tracked(infra, square, square, m)
    return result if result is not None else (infra.origin, ZERO, ZERO)


def _span_start(infra: Infrastructure, m: int):
    """Walk span_steps from the origin; returns (element, clamped distance)."""
    x = infra.origin
    t = ZERO
    for _ in range(infra.params.span_steps):
        t = t + infra.delta_bs(x, m)
        x = infra.bs(x)
    if t < infra.params.span_dist:
        t = infra.params.span_dist
    return x, t


def h_tilde(infra: Infrastructure, r, budget: PrecisionBudget,
            allow_negative: bool = False) -> FRep:
    """Approximate f-representation of absolute position r >= 0.

    The first component is off by at most one neighbour step; when the
    true offset stays a grid cell away from both ends of its gap the
    representation is exact in the first component and the offset error
    is below half a grid cell.
    """
    r = sr(r)
    if r < 0:
        if not allow_negative:
            raise ValueError("negative evaluation points are not supported here")
        lift = (abs(r) / infra.params.circ_upper).ceil()
        r = r + infra.params.circ_upper * lift
    m = budget.m
    xs, ts = _span_start(infra, m)
    a = round_nearest(r / ts)
    if a <= 0:
        x, f, _ = _reduce_walk(infra, infra.origin, r, m, max_steps=None)
        return FRep(x, f)
    x, f, t = _scalar_mul_tracked(infra, a, (xs, ZERO, ts), m)
    f = f + (r - t)
    x, f, _ = _reduce_walk(infra, x, f, m, max_steps=None)
    return FRep(x, f)


def g_tilde(infra: Infrastructure, a: int, r, x, budget: PrecisionBudget) -> FRep:
    """Approximate f-representation of a*(x, 0) + h(r)."""
    if a < 0:
        raise ValueError("scalar must be nonnegative")
    base = scalar_mul(infra, a, FRep(x, ZERO), budget.m)
    tail = h_tilde(infra, r, budget)
    return add(infra, base, tail, budget.m)


def quantize_h(infra: Infrastructure, i: int, grid: ShiftedGrid,
               budget: PrecisionBudget):
    """Grid evaluation (element, floor(offset * N)) at point i/N + j/L."""
    rep = h_tilde(infra, grid.point(i), budget)
    return rep.x, floor_scaled(rep.f, grid.N)


def quantize_g(infra: Infrastructure, a: int, b: int, x, grid: ShiftedGrid,
               budget: PrecisionBudget):
    rep = g_tilde(infra, a, grid.point(b), x, budget)
    return rep.x, floor_scaled(rep.f, grid.N)


def probe_targets(infra: Infrastructure, rep: FRep, m: int, targets: dict,
                  span: int):
    """Search +-span neighbour steps around rep for any target element.

    Returns (label, offset) with the target instance sitting at tracked
    distance (evaluation point - offset); offsets go negative on the
    forward side.  Nearest hit wins; None if nothing within range.
    """
    if rep.x in targets:
        return targets[rep.x], rep.f
    fx, ff = rep.x, rep.f
    bx, bf = rep.x, rep.f
    for _ in range(span):
        ff = ff - infra.delta_bs(fx, m)
        fx = infra.bs(fx)
        if fx in targets:
            return targets[fx], ff
        bx = infra.bs_inv(bx)
        bf = bf + infra.delta_bs(bx, m)
        if bx in targets:
            return targets[bx], bf
    return None


def h_exact(infra: Infrastructure, r) -> FRep:
    """Exact homomorphism value; only exact test backends can provide it."""
    if not isinstance(infra, ExactInfrastructure):
        raise BackendError("exact evaluation requires an exact test backend")
    x, f = infra.h_exact(sr(r))
    return FRep(x, f)


# -- shift selection -------------------------------------------------------


def pick_shift_circ(params: InfraParams, N: int, q: int, p_h, rng) -> ShiftedGrid:
    """Grid for one-variable evaluation: density N over q points.

    The denominator is large enough that at most a (1 - p_h) fraction of
    shifts put a grid point within one cell of an element.
    """
    if N < grid_points_per_unit(params):
        raise ValueError("grid density below the two-points-per-gap floor")
    p_h = sr(p_h)
    if not (0 < p_h < 1):
        raise ValueError("p_h must be in (0, 1)")
    inner = (sr(q) / (N * params.span_dist)).ceil()
    L = N * ((2 * params.span_steps * inner) / (1 - p_h)).ceil()
    return ShiftedGrid(N=N, L=L, j=int(rng.integers(L // N)))


def pick_shift_dlog(params: InfraParams, N: int, A: int, R_hat, p_g, rng) -> ShiftedGrid:
    """Grid for two-variable evaluation over A scalar values."""
    if N < grid_points_per_unit(params):
        raise ValueError("grid density below the two-points-per-gap floor")
    p_g = sr(p_g)
    if not (0 < p_g < 1):
        raise ValueError("p_g must be in (0, 1)")
    inner = (sr(R_hat) / params.span_dist).ceil()
    L = ((2 * A * params.span_steps * inner) / (1 - p_g)).ceil() * N
    return ShiftedGrid(N=N, L=L, j=int(rng.integers(L // N)))
