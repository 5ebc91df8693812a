"""Real quadratic backend: reduced forms of a nonsquare discriminant D.

Elements are reduced quadratic irrationals (P + sqrt(D))/Q encoded as
integer pairs; the neighbour step is one continued-fraction step, the
combine step is ideal composition followed by reduction.  Neighbour
gaps are natural logarithms of the exact step multipliers, evaluated to
the requested precision; the sum of the gaps around the cycle is the
regulator of Z[sqrt(D)], i.e. log of the fundamental solution of
x^2 - D y^2 = +-1.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gcd, isqrt

from mpmath import mp

from .infra import BackendError, Infrastructure, InfraParams
from .scaled import ScaledReal


@dataclass(frozen=True)
class ReducedForm:
    """The quadratic irrational (P + sqrt(D))/Q, Q > 0, Q | D - P^2."""

    P: int
    Q: int
    D: int

    def conj_in_window(self) -> bool:
        """-1 < (P - sqrt(D))/Q < 0, checked in exact integer arithmetic."""
        P, Q, D = self.P, self.Q, self.D
        upper = P < 0 or P * P < D          # P < sqrt(D)
        s = P + Q
        lower = s > 0 and s * s > D          # P + Q > sqrt(D)
        return upper and lower

    def is_reduced(self) -> bool:
        P, Q, D = self.P, self.Q, self.D
        if Q <= 0 or (D - P * P) % Q != 0:
            return False
        t = Q - P
        exceeds_one = t <= 0 or t * t < D    # (P + sqrt(D))/Q > 1
        return exceeds_one and self.conj_in_window()


def _floor_quad(P: int, Q: int, D: int, s: int) -> int:
    """Exact floor((P + sqrt(D))/Q) for nonsquare D, s = isqrt(D)."""
    if Q > 0:
        return (P + s) // Q
    return -((P + s) // (-Q) + 1)


def _rho(P: int, Q: int, D: int, s: int):
    """One reduction step; returns (P', Q') and the multiplier data.

    The step multiplies the underlying ideal by (P' + sqrt(D))/Q.
    """
    a = _floor_quad(P, Q, D, s)
    P2 = a * Q - P
    Q2 = (D - P2 * P2) // Q
    return P2, Q2


class _QuadInt:
    """Exact u + v*sqrt(D) over an integer denominator, for multiplier tracking."""

    __slots__ = ("u", "v", "den", "D")

    def __init__(self, D, u=1, v=0, den=1):
        self.D, self.u, self.v, self.den = D, u, v, den

    def mul_step(self, P2: int, Q: int):
        u, v, D = self.u, self.v, self.D
        self.u, self.v = u * P2 + v * D, u + v * P2
        self.den *= Q

    def log_abs(self, m: int) -> ScaledReal:
        return _log_quad_abs(self.u, self.v, self.den, self.D, m)


_LOG_CACHE: dict = {}


def _log_quad_abs(u: int, v: int, den: int, D: int, m: int) -> ScaledReal:
    """ln |(u + v*sqrt(D))/den| rounded to a dyadic with error < 2^-(m+1)."""
    key = (u, v, den, D, m)
    hit = _LOG_CACHE.get(key)
    if hit is not None:
        return hit
    guard = 24 + max(x.bit_length() for x in (abs(u), abs(v), abs(den), D))
    with mp.workprec(m + guard):
        val = mp.log(abs((u + v * mp.sqrt(D)) / den))
        mant = int(mp.nint(mp.ldexp(val, m + 2)))
    out = ScaledReal(mant, 1 << (m + 2))
    _LOG_CACHE[key] = out
    return out


class QuadInfra(Infrastructure):
    """Infrastructure of the principal cycle of reduced forms for D.

    Construction enumerates the cycle once (desk scale) to certify the
    structural constants; the algorithms themselves never touch the
    enumeration.
    """

    MAX_CYCLE = 10_000_000

    def __init__(self, D: int, precision_guard: int = 12):
        if D <= 1 or isqrt(D) ** 2 == D:
            raise BackendError("D must be a nonsquare integer > 1")
        self.D = D
        self.s = isqrt(D)
        self.origin = ReducedForm(self.s, 1, D)
        self._gs_cache: dict = {}

        # One pass around the cycle: certify gap bounds and circumference.
        cert_prec = 72
        forms = []
        step_pairs = []
        form = self.origin
        while True:
            forms.append(form)
            P2, Q2 = _rho(form.P, form.Q, D, self.s)
            step_pairs.append((P2, form.Q))
            form = ReducedForm(P2, Q2, D)
            if form == self.origin:
                break
            if len(forms) > self.MAX_CYCLE:
                raise BackendError("cycle too long for desk-scale certification")
        self.cycle_length = len(forms)
        self._cycle_set = frozenset(forms)

        eps = ScaledReal(1, 1 << (cert_prec - 4))
        gap_vals = [_log_quad_abs(P2, 1, Q, D, cert_prec) for (P2, Q) in step_pairs]
        gap_lo = min(gap_vals) - eps
        gap_hi = max(gap_vals) + eps
        circ_hi = sum(gap_vals, ScaledReal(0)) + eps * len(gap_vals)
        if not gap_lo > 0:
            raise BackendError(f"gap certification failed for D={D}")
        self.params = InfraParams(
            gap_min=gap_lo, gap_max=gap_hi, span_steps=1,
            span_dist=gap_lo, circ_upper=circ_hi,
        )
        # Precision floor: approximations below this would be coarser than
        # the smallest gap, breaking the representation invariant.
        inv = (4 / gap_lo).ceil()
        self.m_floor = max(precision_guard, inv.bit_length())

    # -- element checks -------------------------------------------------

    def _check(self, x) -> ReducedForm:
        if not isinstance(x, ReducedForm) or x.D != self.D:
            raise BackendError(f"element {x!r} does not belong to D={self.D}")
        if not x.is_reduced():
            raise BackendError(f"non-reduced form {x!r}")
        return x

    # -- walk operations --------------------------------------------------

    def bs(self, x):
        x = self._check(x)
        P2, Q2 = _rho(x.P, x.Q, self.D, self.s)
        return ReducedForm(P2, Q2, self.D)

    def bs_inv(self, x):
        x = self._check(x)
        Q0 = (self.D - x.P * x.P) // x.Q
        a = (x.P + self.s) // Q0
        P0 = a * Q0 - x.P
        return ReducedForm(P0, Q0, self.D)

    def delta_bs(self, x, m: int) -> ScaledReal:
        x = self._check(x)
        m = max(m, self.m_floor)
        P2, _ = _rho(x.P, x.Q, self.D, self.s)
        return _log_quad_abs(P2, 1, x.Q, self.D, m)

    # -- composition ------------------------------------------------------

    def _compose_reduce(self, x: ReducedForm, y: ReducedForm):
        """Compose ideals, reduce, and track the exact multiplier.

        Returns (reduced form, multiplier _QuadInt, reduction steps).
        Cached on the unordered pair so both argument orders agree.
        """
        key = (x, y) if (x.P, x.Q) <= (y.P, y.Q) else (y, x)
        hit = self._gs_cache.get(key)
        if hit is not None:
            return hit
        a, b = key
        if a.Q == 1:  # unit ideal: composition is the other operand
            out = (b, _QuadInt(self.D), 0)
            self._gs_cache[key] = out
            return out
        if b.Q == 1:
            out = (a, _QuadInt(self.D), 0)
            self._gs_cache[key] = out
            return out
        A, B, content = _compose_forms(
            (a.Q, 2 * a.P, (a.P * a.P - self.D) // a.Q),
            (b.Q, 2 * b.P, (b.P * b.P - self.D) // b.Q),
        )
        P, Q = (B // 2) % A, A
        # Composition strips the content: I1*I2 = content * I3, so the
        # tracked multiplier starts at 1/content.
        mult = _QuadInt(self.D, den=content)
        steps = 0
        budget = 64 + 4 * (max(abs(P), Q, self.D).bit_length())
        form = ReducedForm(P, Q, self.D)
        while not form.is_reduced():
            P2, Q2 = _rho(form.P, form.Q, self.D, self.s)
            mult.mul_step(P2, form.Q)
            form = ReducedForm(P2, Q2, self.D)
            steps += 1
            if steps > budget:
                raise BackendError("reduction did not terminate within budget")
        out = (form, mult, steps)
        self._gs_cache[key] = out
        return out

    def gs(self, x, y):
        x, y = self._check(x), self._check(y)
        form, _, _ = self._compose_reduce(x, y)
        return form

    def delta_gs(self, x, y, m: int) -> ScaledReal:
        x, y = self._check(x), self._check(y)
        m = max(m, self.m_floor)
        _, mult, _ = self._compose_reduce(x, y)
        if mult.v == 0 and mult.u == mult.den:
            return ScaledReal(0)
        return mult.log_abs(m)

    def gs_with_steps(self, x, y):
        """Composition result together with the reduction step count."""
        form, _, steps = self._compose_reduce(self._check(x), self._check(y))
        return form, steps

    def describe(self):
        return {"type": "quadratic", "D": self.D}


# -- form composition (discriminant 4D, even middle coefficients) -------


def _xgcd(a: int, b: int):
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def _compose_forms(f1, f2):
    """General Gauss composition of two forms of the same discriminant.

    Returns (a3, b3, content): the primitive composed form plus the
    integer content the raw module product carried, which the caller
    must fold into the distance correction.
    """
    a1, b1, c1 = f1
    a2, b2, c2 = f2
    if a1 > a2:
        (a1, b1, c1), (a2, b2, c2) = (a2, b2, c2), (a1, b1, c1)
    s = (b1 + b2) // 2
    n = b2 - s
    if a2 % a1 == 0:
        y1, d = 0, a1
    else:
        d, u, _ = _xgcd(a2, a1)
        y1 = u
    if s % d == 0:
        y2, x2, d1 = -1, 0, d
    else:
        d1, u, v = _xgcd(s, d)
        x2, y2 = u, -v
    v1 = a1 // d1
    v2 = a2 // d1
    r = (y1 * y2 * n - x2 * c2) % v1
    b3 = b2 + 2 * v2 * r
    a3 = v1 * v2
    num = c2 * d1 + r * (b2 + v2 * r)
    assert num % v1 == 0, "composition produced a non-integral form"
    return a3, b3, d1


# -- Pell post-processing ------------------------------------------------


def pell_solution(D: int, regulator_estimate=None, norm: int | None = None,
                  tolerance=ScaledReal(1, 100)):
    """Fundamental solution of x^2 - D y^2 = +-1 from the cf cycle of sqrt(D).

    The solution is reconstructed exactly from the continued-fraction
    convergents and verified in integer arithmetic.  If a regulator
    estimate is supplied it must match log(x + y*sqrt(D)); a mismatch
    signals the estimate was too coarse.  norm=+1 forces the smallest
    solution of norm exactly +1 (squaring the fundamental unit when its
    norm is -1).
    """
    if D <= 1 or isqrt(D) ** 2 == D:
        raise BackendError("D must be a nonsquare integer > 1")
    s = isqrt(D)
    P, Q = 0, 1
    p_prev, p = 0, 1  # convergent seeds p_{-2}, p_{-1}
    q_prev, q = 1, 0
    for _ in range(QuadInfra.MAX_CYCLE):
        a = (P + s) // Q
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        P = a * Q - P
        Q = (D - P * P) // Q
        if Q == 1:
            break
    else:
        raise BackendError("period search exceeded the desk-scale cap")
    x, y = p, q
    n = x * x - D * y * y
    assert n in (1, -1), "convergent at period end must have unit norm"
    if norm == 1 and n == -1:
        x, y, n = x * x + D * y * y, 2 * x * y, 1
    if norm == -1 and n == 1:
        raise BackendError(f"no solution of norm -1 exists for D={D}")
    if regulator_estimate is not None:
        reg = _log_quad_abs(x, y, 1, D, 40)
        if abs(reg - regulator_estimate) > tolerance:
            raise BackendError(
                f"regulator estimate {float(regulator_estimate):.6f} does not match "
                f"the reconstructed unit (log {float(reg):.6f})"
            )
    return x, y, n
