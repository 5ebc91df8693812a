"""Period estimation from Fourier samples and the circumference pipeline.

Two transform outcomes from a pair of pseudo-periodic states determine a
short list of period candidates through the convergents of their ratio.
Candidates are verified by walking the line homomorphism to the
candidate point and probing for the origin; accepted candidates are
reduced to the smallest passing value so multiples of the true
circumference are never reported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from . import bounds
from .group import (FRep, PrecisionBudget, choose_precision,
                    grid_points_per_unit, h_tilde, pick_shift_circ,
                    probe_targets)
from .infra import Infrastructure
from .sampler import build_fibers_1d, fourier_sample_1d, measure_second_register
from .scaled import ScaledReal, sr, round_nearest


class MaxTrialsError(RuntimeError):
    """The Las Vegas loop hit its trial cap; diagnostics attached."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class Convergent:
    p: int
    q: int


@dataclass
class CandidateList:
    values: list
    provenance: list  # Convergent that produced each value


@dataclass
class BatchPolicy:
    """Retry policy: one random shift is shared by every state preparation
    in a batch and rotated only after the whole batch fails."""

    batch_size: int = 32


@dataclass
class CircumferenceResult:
    R_hat: ScaledReal
    delta: ScaledReal
    trials_used: int
    accepted_candidate: int
    witness: str
    batches: int
    N: int
    q: int
    shift: int
    descent_hops: int = 0


def convergents(c: int, d: int, denom_cap: int) -> list[Convergent]:
    """All continued-fraction convergents of c/d with denominator <= cap."""
    if d < 1:
        raise ValueError("denominator must be positive")
    out = []
    p_prev, p_cur = 1, c // d
    q_prev, q_cur = 0, 1
    out.append(Convergent(p_cur, q_cur))
    num, den = d, c - (c // d) * d
    while den and q_cur <= denom_cap:
        a = num // den
        num, den = den, num - a * den
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        if q_cur <= denom_cap:
            out.append(Convergent(p_cur, q_cur))
    return out


def candidate_periods(c: int, d: int, q: int) -> CandidateList:
    """Period candidates round(p_i * q / c) over convergents of c/d."""
    if c < 1:
        raise ValueError("zero outcome: resample")
    values, prov = [], []
    for conv in convergents(c, d, q // 32):
        values.append(round_nearest(ScaledReal(conv.p * q, c)))
        prov.append(conv)
    return CandidateList(values=values, provenance=prov)


def estimate_period(sample_c, sample_d, q: int) -> CandidateList | None:
    """Candidate list from a pair of transform samples; None to resample."""
    c, d = sample_c.outcome, sample_d.outcome
    if c == 0 or d == 0:
        return None
    return candidate_periods(c, d, q)


# -- candidate verification --------------------------------------------------


def _attempt(infra: Infrastructure, r_prime: ScaledReal, budget: PrecisionBudget):
    """Evaluate the homomorphism at a candidate point and probe the origin.

    On success returns (estimate, witness): the tracked position of the
    origin crossing, i.e. a multiple of the circumference up to the
    budgeted error.
    """
    if not r_prime > 0 or r_prime > budget.reach:
        return None
    origin = infra.origin
    pred = infra.bs_inv(origin)
    targets = {origin: "origin", pred: "pred"}
    rep = h_tilde(infra, r_prime, budget)
    hit = probe_targets(infra, rep, budget.m, targets, infra.params.span_steps)
    if hit is None:
        return None
    witness, offset = hit
    estimate = r_prime - offset
    if witness == "pred":
        estimate = estimate + infra.delta_bs(pred, budget.m)
    return estimate, witness


def verify_and_refine(infra: Infrastructure, candidates: CandidateList, N: int,
                      delta, budget: PrecisionBudget,
                      descent_cap: int = 4096):
    """Test candidates (smallest first); reduce any accept to the least
    passing multiple.  Returns (R_hat, accepted, witness, hops) or None."""
    delta = sr(delta)
    floor = infra.params.span_dist / 2
    seen = set()
    for cand in sorted(set(candidates.values)):
        if cand < 1 or cand in seen:
            continue
        seen.add(cand)
        got = _attempt(infra, ScaledReal(cand, N), budget)
        if got is None:
            continue
        estimate, witness = got
        if not estimate > floor:
            continue
        # Descend to the smallest multiple that still passes.
        hops = 0
        tested = 0
        improved = True
        while improved:
            improved = False
            t_max = (estimate / infra.params.span_dist).floor()
            for t in range(2, t_max + 1):
                tested += 1
                if tested > descent_cap:
                    break
                lower = _attempt(infra, estimate / t, budget)
                if lower is None:
                    continue
                cand_est, cand_wit = lower
                if cand_est > floor and cand_est < estimate - delta:
                    estimate, witness = cand_est, cand_wit
                    improved = True
                    hops += 1
                    break
        return estimate, cand, witness, hops
    return None


# -- full pipeline ------------------------------------------------------------


def _pow2_in_square_window(M: int) -> int:
    sq = M * M
    t = sq.bit_length()
    return sq if sq == 1 << (t - 1) else 1 << t


def circumference_pipeline(infra: Infrastructure, delta, rng, *, p_h="3/4",
                           q_override: int | None = None,
                           N_override: int | None = None,
                           trials_cap: int | None = None,
                           policy: BatchPolicy | None = None) -> CircumferenceResult:
    """Las Vegas estimation of the circumference to within delta.

    Repeats state preparation / Fourier sampling / candidate verification
    until a candidate is accepted, reusing one random shift per batch.
    """
    delta = sr(delta)
    params = infra.params
    policy = policy or BatchPolicy()
    N = N_override or grid_points_per_unit(params)
    M = (N * params.circ_upper).ceil()
    q = q_override or _pow2_in_square_window(M)

    S_up = float(N * params.circ_upper)
    analytic = (bounds.success_circ_lower(S_up, q)
                * bounds.periodic_lower(N, float(params.circ_upper),
                                        float(params.gap_min), q) ** 2
                * float(sr(p_h)) ** 2)
    if trials_cap is None:
        trials_cap = math.ceil(50 / max(1, math.ceil(analytic)))

    grid0 = pick_shift_circ(params, N, q, p_h, rng)
    build_budget = choose_precision(params, sr(q) / N + params.circ_upper + 2,
                                    grid0.L, extra_steps=q)
    fine_target = min(ScaledReal(1, 4 * N), delta / 4)
    verify_budget = choose_precision(params, sr(q) / N + 2 * params.circ_upper + 2,
                                     grid0.L, target=fine_target)

    trials = 0
    batches = 0
    grid = grid0
    while trials < trials_cap:
        if batches:
            grid = pick_shift_circ(params, N, q, p_h, rng)
        table = build_fibers_1d(infra, q, grid, build_budget)
        for _ in range(policy.batch_size):
            if trials >= trials_cap:
                break
            trials += 1
            cands = None
            for _ in range(64):  # zero outcomes are redrawn, not counted
                s1 = fourier_sample_1d(measure_second_register(table, rng), q, rng, table)
                s2 = fourier_sample_1d(measure_second_register(table, rng), q, rng, table)
                cands = estimate_period(s1, s2, q)
                if cands is not None:
                    break
            if cands is None:
                continue
            got = verify_and_refine(infra, cands, N, delta, verify_budget)
            if got is not None:
                estimate, accepted, witness, hops = got
                return CircumferenceResult(
                    R_hat=estimate, delta=delta, trials_used=trials,
                    accepted_candidate=accepted, witness=witness,
                    batches=batches + 1, N=N, q=q, shift=grid.j,
                    descent_hops=hops,
                )
        batches += 1
    raise MaxTrialsError(
        f"no candidate accepted within {trials_cap} trials",
        {"trials": trials, "batches": batches, "N": N, "q": q,
         "analytic_bound": analytic},
    )
