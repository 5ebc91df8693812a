"""Classical simulation of the quantum sampling steps.

State preparation + second-register measurement is simulated by fiber
sampling: evaluating the grid function over its whole domain once,
grouping indices by value, and drawing a fiber with probability
proportional to its size.  Fourier sampling then draws from the exact
transform distribution of the fiber indicator (positive-sign phase
convention), computed with fast transforms of any length.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import lcm

import numpy as np

from .group import FRep, PrecisionBudget, ShiftedGrid, _reduce_walk, add
from .infra import Infrastructure
from .scaled import ScaledReal, ZERO

#: probabilities below this are clamped to zero before renormalization
PROB_FLOOR = 1e-15

#: default hard cap on materialized transform cells
CELL_CAP = 1 << 24


class MemoryCapError(MemoryError):
    """A transform would materialize more cells than the configured cap."""


@dataclass
class QuantumSample:
    outcome: object  # int for 1-D, (h, k) pair for 2-D
    probability: float
    lineage: tuple = ()


@dataclass
class PseudoPeriodicState:
    """Post-measurement support: near-uniformly spaced indices in [0, q)."""

    support: np.ndarray
    q: int
    key: object
    probability: float
    offset: int = field(init=False)

    def __post_init__(self):
        self.offset = int(self.support[0])


def _dft_plus(values: np.ndarray) -> np.ndarray:
    """Unnormalized transform with exp(+2*pi*i/n) phases, any length."""
    return len(values) * np.fft.ifft(values)


def _clamped_distribution(raw: np.ndarray) -> np.ndarray:
    probs = raw.copy()
    probs[probs < PROB_FLOOR] = 0.0
    total = probs.sum()
    if not np.isfinite(total) or total <= 0:
        raise ArithmeticError("degenerate transform distribution")
    return probs / total


def support_distribution(support: np.ndarray, q: int) -> np.ndarray:
    """Exact Fourier-sampling distribution of a uniform support state."""
    if q > CELL_CAP:
        raise MemoryCapError(f"transform length {q} exceeds the cell cap")
    indicator = np.zeros(q)
    indicator[support] = 1.0
    amps = _dft_plus(indicator)
    return _clamped_distribution((amps.real**2 + amps.imag**2) / (q * len(support)))


# -- incremental integer walk ----------------------------------------------


class _GridWalk:
    """Exact integer walk along grid points spaced 1/N, starting at j/L.

    All quantities are integers over one common denominator, upgraded on
    the fly if a backend reports gaps on a finer scale.
    """

    def __init__(self, infra: Infrastructure, start: FRep, grid: ShiftedGrid, m: int):
        self.infra = infra
        self.m = m
        self.N = grid.N
        self.den = lcm(grid.L, start.f.s)
        self.x = start.x
        self.fnum = start.f.m * (self.den // start.f.s)
        self.step = self.den // grid.N
        self._gaps: dict = {}

    def _upgrade(self, scale: int):
        new = lcm(self.den, scale)
        if new != self.den:
            factor = new // self.den
            self.fnum *= factor
            self.step *= factor
            self._gaps = {k: v * factor for k, v in self._gaps.items()}
            self.den = new

    def _gap(self, x) -> int:
        g = self._gaps.get(x)
        if g is None:
            d = self.infra.delta_bs(x, self.m)
            if self.den % d.s:
                self._upgrade(d.s)
            g = d.m * (self.den // d.s)
            self._gaps[x] = g
        return g

    def normalize(self):
        gap = self._gap(self.x)
        while self.fnum >= gap:
            self.fnum -= gap
            self.x = self.infra.bs(self.x)
            gap = self._gap(self.x)

    def key(self):
        return self.x, (self.fnum * self.N) // self.den

    def advance(self):
        self.fnum += self.step
        self.normalize()

    def rep(self) -> FRep:
        return FRep(self.x, ScaledReal(self.fnum, self.den))


def _start_rep(infra: Infrastructure, grid: ShiftedGrid, m: int) -> FRep:
    x, f, _ = _reduce_walk(infra, infra.origin, ScaledReal(grid.j, grid.L), m)
    return FRep(x, f)


# -- one-variable fibers ----------------------------------------------------


@dataclass
class FiberTable:
    """Partition of [0, q) by grid value, with cached sampling data."""

    q: int
    grid: ShiftedGrid
    keys: list
    fibers: dict
    _dists: dict = field(default_factory=dict)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(self.fibers[k]) for k in self.keys], dtype=np.int64)

    def distribution(self, key) -> np.ndarray:
        dist = self._dists.get(key)
        if dist is None:
            dist = support_distribution(self.fibers[key], self.q)
            self._dists[key] = dist
        return dist


def build_fibers_1d(infra: Infrastructure, q: int, grid: ShiftedGrid,
                    budget: PrecisionBudget) -> FiberTable:
    """Evaluate the grid function on 0..q-1 and group equal values.

    Uses an incremental walk (one grid cell per step); the budget must
    have been certified with extra_steps >= q so the accumulated drift
    stays inside the same error bound as pointwise evaluation.
    """
    walk = _GridWalk(infra, _start_rep(infra, grid, budget.m), grid, budget.m)
    walk.normalize()
    fibers: dict = {}
    for i in range(q):
        fibers.setdefault(walk.key(), []).append(i)
        walk.advance()
    fibers = {k: np.array(v, dtype=np.int64) for k, v in fibers.items()}
    return FiberTable(q=q, grid=grid, keys=list(fibers), fibers=fibers)


def measure_second_register(table: FiberTable, rng) -> PseudoPeriodicState:
    """Sample a fiber with probability size/q; the post-measurement state."""
    sizes = table.sizes
    probs = sizes / table.q
    idx = int(rng.choice(len(table.keys), p=probs))
    key = table.keys[idx]
    return PseudoPeriodicState(
        support=table.fibers[key], q=table.q, key=key, probability=float(probs[idx])
    )


def fourier_sample_1d(state: PseudoPeriodicState, q: int, rng,
                      table: FiberTable | None = None,
                      lineage: tuple = ()) -> QuantumSample:
    """Draw one transform outcome from the exact support distribution."""
    if table is not None and state.key in table.fibers:
        probs = table.distribution(state.key)
    else:
        probs = support_distribution(state.support, q)
    outcome = int(rng.choice(q, p=probs))
    return QuantumSample(outcome=outcome, probability=float(probs[outcome]),
                         lineage=lineage)


# -- two-variable fibers ----------------------------------------------------


@dataclass
class FiberTable2D:
    """Partition of [0, A) x [0, b_count) by grid value."""

    A: int
    B: int
    M: int
    b_count: int
    grid: ShiftedGrid
    keys: list
    fibers: dict  # key -> (a_array, b_array)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(self.fibers[k][0]) for k in self.keys], dtype=np.int64)


def build_fibers_2d(infra: Infrastructure, x, A: int, B: int, M: int,
                    b_count: int, grid: ShiftedGrid,
                    budget: PrecisionBudget) -> FiberTable2D:
    """Evaluate the two-variable grid function over its whole domain.

    Row starts advance by one group addition of (x, 0); within a row the
    second coordinate advances by single grid cells.
    """
    if A * b_count > CELL_CAP:
        raise MemoryCapError(f"domain {A}x{b_count} exceeds the cell cap")
    m = budget.m
    fibers: dict = {}
    row_start = _start_rep(infra, grid, m)
    hop = FRep(x, ZERO)
    for a in range(A):
        walk = _GridWalk(infra, row_start, grid, m)
        walk.normalize()
        for b in range(b_count):
            fibers.setdefault(walk.key(), [[], []])
            pair = fibers[walk.key()]
            pair[0].append(a)
            pair[1].append(b)
            walk.advance()
        if a + 1 < A:
            row_start = add(infra, row_start, hop, m)
    fibers = {
        k: (np.array(av, dtype=np.int64), np.array(bv, dtype=np.int64))
        for k, (av, bv) in fibers.items()
    }
    return FiberTable2D(A=A, B=B, M=M, b_count=b_count, grid=grid,
                        keys=list(fibers), fibers=fibers)


def measure_fiber_2d(table: FiberTable2D, rng):
    sizes = table.sizes
    probs = sizes / sizes.sum()
    idx = int(rng.choice(len(table.keys), p=probs))
    return table.keys[idx], table.fibers[table.keys[idx]]


def pair_distribution(fiber, A: int, B: int, M: int,
                      cell_cap: int = CELL_CAP) -> np.ndarray:
    """Full joint transform distribution of a 2-D fiber indicator.

    Reference implementation; materializes A*B cells.  The amplitude at
    (h, k) sums exp(+2*pi*i*(a*h + M*b*k)/A) over the fiber, with A = M*B.
    """
    if A * B > cell_cap:
        raise MemoryCapError(f"transform {A}x{B} exceeds the cell cap")
    if A != M * B:
        raise ValueError("need A = M * B")
    a_arr, b_arr = fiber
    joint = np.empty((A, B))
    for k in range(B):
        amps = _column_transform(a_arr, b_arr, A, B, k)
        joint[:, k] = amps.real**2 + amps.imag**2
    return _clamped_distribution(joint / (A * B * len(a_arr)))


def _column_transform(a_arr, b_arr, A, B, k):
    v = np.zeros(A, dtype=complex)
    np.add.at(v, a_arr, np.exp(2j * np.pi * ((b_arr * k) % B) / B))
    return _dft_plus(v)


def fourier_sample_2d(fiber, A: int, B: int, M: int, rng,
                      cell_cap: int = CELL_CAP, lineage: tuple = ()) -> QuantumSample:
    """Sample (h, k) from the full materialized joint distribution."""
    joint = pair_distribution(fiber, A, B, M, cell_cap=cell_cap)
    flat = joint.ravel()
    idx = int(rng.choice(flat.size, p=flat))
    h, k = divmod(idx, B)
    return QuantumSample(outcome=(h, k), probability=float(flat[idx]), lineage=lineage)


def sample_pair_factored(fiber, A: int, B: int, M: int, rng,
                         cell_cap: int = CELL_CAP, lineage: tuple = ()) -> QuantumSample:
    """Sample (h, k) without materializing the joint table.

    The k-marginal of the joint distribution is exactly uniform (each
    row phase vector has unit-modulus entries, so the per-k transform
    masses are all equal by Parseval); h is then drawn from the exact
    conditional via one length-A transform.
    """
    if A > cell_cap:
        raise MemoryCapError(f"transform length {A} exceeds the cell cap")
    if A != M * B:
        raise ValueError("need A = M * B")
    a_arr, b_arr = fiber
    k = int(rng.integers(B))
    amps = _column_transform(a_arr, b_arr, A, B, k)
    cond = _clamped_distribution(
        (amps.real**2 + amps.imag**2) / (A * len(a_arr))
    )
    h = int(rng.choice(A, p=cond))
    return QuantumSample(outcome=(h, k), probability=float(cond[h] / B),
                         lineage=lineage)
