"""Generalized discrete logarithm via two-variable Fourier sampling.

Parameter selection ties the grid to a high-precision circumference
estimate; the two-variable grid function is evaluated over its domain
(or, for large exact cyclic backends, sampled through the closed-form
transform of its arithmetic-progression fibers); two samples with
coprime second components combine through the extended Euclidean
algorithm into a distance estimate, which a final walk-and-probe both
verifies and refines.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np

from . import bounds
from .group import (PrecisionBudget, ShiftedGrid, choose_precision,
                    grid_points_per_unit, h_tilde, pick_shift_dlog,
                    probe_targets)
from .infra import CyclicInfra, Infrastructure
from .period import BatchPolicy, MaxTrialsError, circumference_pipeline
from .quadfield import _xgcd
from .sampler import (CELL_CAP, FiberTable2D, MemoryCapError, QuantumSample,
                      _clamped_distribution, build_fibers_2d, measure_fiber_2d,
                      sample_pair_factored)
from .scaled import ScaledReal, sr, round_nearest, mod_reduce


@dataclass
class DlogParams:
    M: int
    N: int
    B: int
    A: int
    q_factor: int
    unit_steps: int          # grid cells per unit distance
    R_hat: ScaledReal
    eps: ScaledReal          # certified circumference accuracy
    kappa: float | None
    k_cap: int               # largest usable second component

    def check(self):
        half = ScaledReal(1, 4)
        drift = abs(sr(self.M * self.B) - self.R_hat * (self.M * self.N))
        if not drift <= half:
            raise ValueError("grid invariant |M*B - M*N*R| <= 1/4 violated")
        if self.B < 2:
            raise ValueError("degenerate second-coordinate range")


@dataclass
class DlogResult:
    d_hat: ScaledReal
    d_refined: ScaledReal | None
    samples: tuple
    s: int
    t: int
    r: ScaledReal
    trials_used: int
    batches: int
    params: DlogParams


@dataclass
class DlogTrial:
    samples: tuple
    s: int | None = None
    t: int | None = None
    r: ScaledReal | None = None
    d_hat: ScaledReal | None = None
    rejected: str | None = None  # "k-range" | "gcd" | None


def select_params(infra: Infrastructure, rng, p_g="3/4",
                  q_factor_override: int | None = None,
                  circ_kwargs: dict | None = None) -> DlogParams:
    """Choose grid scales from a self-computed circumference estimate.

    The estimate is refined until its error is below 1/(16 M^2 c) where
    c is the per-unit grid density, which pins |M*B - M*N*R| <= 1/2.
    """
    unit_steps = grid_points_per_unit(infra.params)
    kwargs = dict(circ_kwargs or {})
    coarse = circumference_pipeline(infra, ScaledReal(1, 4), rng, **kwargs)
    M = (2 * (coarse.R_hat + ScaledReal(1, 4)) + 1).ceil()
    eps = ScaledReal(1, 16 * M * M * unit_steps)
    fine = circumference_pipeline(infra, eps, rng, **kwargs)
    R_hat = fine.R_hat

    if q_factor_override is None:
        conv = bounds.cf_approx(R_hat * unit_steps, 4 * M)
        q_factor = max(1, conv.q)
    else:
        q_factor = q_factor_override
    N = q_factor * unit_steps
    B = round_nearest(R_hat * N)
    A = M * B
    kappa = None
    lo, hi = bounds.dlog_kappa_interval(q_factor)
    if hi > lo:
        _, kappa = bounds.success_dlog_lower(q_factor, B, float(sr(p_g)),
                                             return_kappa=True)
    params = DlogParams(M=M, N=N, B=B, A=A, q_factor=q_factor,
                        unit_steps=unit_steps, R_hat=R_hat, eps=eps,
                        kappa=kappa, k_cap=B // 64 - 1)
    params.check()
    return params


# -- sampling tiers -----------------------------------------------------------


class _CyclicExactSampler:
    """Closed-form pair sampler for exact cyclic backends.

    Fibers of the two-variable grid function on a cyclic group are full
    arithmetic progressions in the first coordinate, possibly missing one
    residue class; their transforms are delta spikes plus one geometric
    series, so sampling needs no enumeration of the A x B domain.
    """

    def __init__(self, order: int, target: int, params: DlogParams):
        if params.R_hat != order:
            raise ValueError("closed-form tier needs the exact circumference")
        if params.B != order * params.N:
            raise ValueError("grid does not wrap the cyclic order exactly")
        self.n = order
        self.d_x = target
        self.p = params

    def draw(self, rng) -> QuantumSample:
        p = self.p
        n, d_x, N = self.n, self.d_x, p.N
        a = int(rng.integers(p.A))
        b = int(rng.integers(p.B - 1))
        y_d = (a * d_x + b // N) % n
        ell = b % N

        k = int(rng.integers(p.B))
        spike = (p.M * ((N * d_x * k) % p.B)) % p.A
        g = gcd(d_x, n)
        excl_count = 0
        if ell == N - 1 and (y_d + 1) % g == 0:
            excl_count = (p.A // n) * g
        if excl_count == 0:
            return QuantumSample(outcome=(spike, k), probability=1.0 / p.B)

        step = n // g
        A = p.A
        u = np.arange(A, dtype=np.int64)
        arg = (step * u) % A
        num = np.sin(np.pi * ((arg * excl_count) % (2 * A)) / A)
        den = np.sin(np.pi * arg / A)
        mags = np.where(arg == 0, float(excl_count),
                        np.abs(np.divide(num, den, out=np.ones_like(num),
                                         where=arg != 0)))
        mags[0] = A - excl_count  # full sum minus the excluded progression
        probs = _clamped_distribution(mags**2 / (A * (A - excl_count)))
        u_pick = int(rng.choice(A, p=probs))
        h = (u_pick + spike) % A
        return QuantumSample(outcome=(h, k), probability=float(probs[u_pick] / p.B))


@dataclass
class DlogSetup:
    infra: Infrastructure
    x: object
    params: DlogParams
    grid: ShiftedGrid
    budget: PrecisionBudget
    tier: str                      # "table" or "cyclic-exact"
    table: FiberTable2D | None = None
    exact: _CyclicExactSampler | None = None


def make_setup(infra: Infrastructure, x, params: DlogParams, rng, p_g="3/4",
               cell_cap: int = CELL_CAP, force_exact_tier: bool = False) -> DlogSetup:
    grid = pick_shift_dlog(infra.params, params.N, params.A, params.R_hat,
                           p_g, rng)
    domain = params.A * (params.B - 1)
    budget = choose_precision(
        infra.params, params.R_hat + 2, grid.L, A=params.A,
        extra_steps=domain + params.A,
    )
    use_exact = force_exact_tier or domain > cell_cap
    if use_exact:
        if not isinstance(infra, CyclicInfra):
            shrink = (domain / cell_cap) ** 0.5
            raise MemoryCapError(
                f"domain {params.A}x{params.B - 1} exceeds the {cell_cap}-cell cap; "
                f"shrink the infrastructure circumference by about {shrink:.1f}x"
            )
        if params.A > cell_cap:
            raise MemoryCapError("even the factored transform exceeds the cap")
        exact = _CyclicExactSampler(infra.order, int(x), params)
        return DlogSetup(infra=infra, x=x, params=params, grid=grid,
                         budget=budget, tier="cyclic-exact", exact=exact)
    table = build_fibers_2d(infra, x, params.A, params.B, params.M,
                            params.B - 1, grid, budget)
    return DlogSetup(infra=infra, x=x, params=params, grid=grid,
                     budget=budget, tier="table", table=table)


def fiber_sample(setup: DlogSetup, rng, lineage=()) -> QuantumSample:
    """One simulated two-variable Fourier sample."""
    if setup.tier == "cyclic-exact":
        return setup.exact.draw(rng)
    _, fiber = measure_fiber_2d(setup.table, rng)
    return sample_pair_factored(fiber, setup.params.A, setup.params.B,
                                setup.params.M, rng, lineage=lineage)


# -- combination and refinement ----------------------------------------------


def combine_samples(s1: QuantumSample, s2: QuantumSample,
                    params: DlogParams) -> DlogTrial:
    """Extended-Euclid combination of two samples into a distance estimate."""
    (h1, k1), (h2, k2) = s1.outcome, s2.outcome
    trial = DlogTrial(samples=(s1, s2))
    if k1 > params.k_cap or k2 > params.k_cap:
        trial.rejected = "k-range"
        return trial
    g, s, t = _xgcd(k1, k2)
    if g != 1:
        trial.rejected = "gcd"
        return trial
    r = ScaledReal(s * h1 + t * h2, params.N * params.M)
    trial.s, trial.t, trial.r = s, t, r
    trial.d_hat = mod_reduce(r, params.R_hat)
    return trial


def run_trial(setup: DlogSetup, rng, lineage=()) -> DlogTrial:
    s1 = fiber_sample(setup, rng, lineage=lineage + (0,))
    s2 = fiber_sample(setup, rng, lineage=lineage + (1,))
    return combine_samples(s1, s2, setup.params)


def refine_distance(infra: Infrastructure, x, d_hat: ScaledReal, delta,
                    params: DlogParams,
                    budget: PrecisionBudget | None = None):
    """Walk to the estimate and probe for the target element.

    A hit pins the target's accumulated distance to the budgeted error;
    a miss rejects the estimate.  Success therefore certifies the output
    without any oracle access.
    """
    delta = sr(delta)
    if budget is None:
        budget = choose_precision(
            infra.params, params.R_hat + 3, 4 * params.N,
            target=min(delta / 4, ScaledReal(1, 4 * params.N)),
        )
    pr = infra.params
    span = pr.span_steps * ((2 + 2 * pr.gap_max) / pr.span_dist).ceil() + pr.span_steps
    rep = h_tilde(infra, d_hat, budget)
    hit = probe_targets(infra, rep, budget.m, {x: "target"}, span)
    if hit is None:
        return None
    _, offset = hit
    return mod_reduce(d_hat - offset, params.R_hat)


def dlog_pipeline(infra: Infrastructure, x, rng, *, p_g="3/4", delta="1/1000",
                  q_factor: int | None = None,
                  params: DlogParams | None = None,
                  trials_cap: int = 512,
                  policy: BatchPolicy | None = None,
                  cell_cap: int = CELL_CAP,
                  force_exact_tier: bool = False) -> DlogResult:
    """Las Vegas distance recovery for one target element."""
    if params is None:
        params = select_params(infra, rng, p_g=p_g, q_factor_override=q_factor)
    policy = policy or BatchPolicy()
    delta = sr(delta)
    refine_budget = choose_precision(
        infra.params, params.R_hat + 3, 4 * params.N,
        target=min(delta / 4, ScaledReal(1, 4 * params.N)),
    )
    trials = 0
    batches = 0
    while trials < trials_cap:
        setup = make_setup(infra, x, params, rng, p_g=p_g, cell_cap=cell_cap,
                           force_exact_tier=force_exact_tier)
        for _ in range(policy.batch_size):
            if trials >= trials_cap:
                break
            trials += 1
            trial = run_trial(setup, rng, lineage=(batches, trials))
            if trial.d_hat is None:
                continue
            refined = refine_distance(infra, x, trial.d_hat, delta, params,
                                      budget=refine_budget)
            if refined is None:
                continue
            return DlogResult(
                d_hat=trial.d_hat, d_refined=refined, samples=trial.samples,
                s=trial.s, t=trial.t, r=trial.r, trials_used=trials,
                batches=batches + 1, params=params,
            )
        batches += 1
    raise MaxTrialsError(
        f"no combinable pair verified within {trials_cap} trials",
        {"trials": trials, "batches": batches, "params": params},
    )
