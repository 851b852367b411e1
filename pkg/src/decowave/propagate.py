"""Chebyshev-polynomial propagation, psi(t) = exp(-iHt) psi(0).

With H rescaled to Hs = (H - b)/a, whose spectrum lies in [-1, 1],

    exp(-iHt) = exp(-ibt) [J_0(at) + 2 sum_k (-i)^k J_k(at) T_k(Hs)]

and the T_k(Hs) psi follow from the three-term recursion. One recursion can
serve several target times at once because only the Bessel coefficients
depend on t; ``evolve_samples`` uses this to produce a dense time series at
the cost of a few long expansions instead of many short ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.special import jv

from . import _kernels
from .basis import ChainSpec
from .errors import ContractViolation, DomainError, PrecisionError
from .operators import StateVector, hamiltonian_matvec, spectral_bounds

# sample buffers for one multi-time expansion are capped at this many bytes
CHUNK_MEMORY = 256 * 2**20
# buffer of Chebyshev vectors awaiting a block update
BLOCK_MEMORY = 128 * 2**20


@dataclass(frozen=True)
class PropagatorConfig:
    coefficient_cutoff: float = 1e-16
    bounds: tuple[float, float] | None = None
    max_order: int | None = None
    # longest time span covered by one expansion in evolve_samples
    chunk_span: float = 2.5

    def __post_init__(self):
        if not 0 < self.coefficient_cutoff <= 1e-8:
            raise DomainError("coefficient_cutoff must lie in (0, 1e-8]")
        if self.bounds is not None and not self.bounds[0] < self.bounds[1]:
            raise DomainError("bounds must satisfy e_min < e_max")
        if self.chunk_span <= 0:
            raise DomainError("chunk_span must be positive")

    def resolve_bounds(self, chain: ChainSpec, sector) -> tuple[float, float]:
        if self.bounds is not None:
            return self.bounds
        return tuple(float(b) for b in spectral_bounds(chain, sector))

    def order_cap(self, scaled_time: float) -> int:
        if self.max_order is not None:
            return self.max_order
        return int(10 * (abs(scaled_time) + 50))


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    dt: float
    sample_times: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        if self.t_end < self.t_start:
            raise DomainError("t_end must be >= t_start")
        steps = int(round((self.t_end - self.t_start) / self.dt))
        times = self.t_start + self.dt * np.arange(steps + 1)
        object.__setattr__(self, "sample_times", times)

    def __len__(self):
        return self.sample_times.shape[0]

    def index_of(self, t: float, tol: float | None = None) -> int:
        """Grid index closest to t; raises if farther than ``tol`` (default dt/100)."""
        tol = self.dt / 100 if tol is None else tol
        k = int(round((t - self.t_start) / self.dt))
        if not 0 <= k < len(self) or abs(self.sample_times[k] - t) > tol:
            raise DomainError(f"time {t} does not lie on the grid (dt={self.dt})")
        return k


def chebyshev_coefficients(scaled_times: np.ndarray, cutoff: float, cap: int):
    """Expansion coefficients (2 - delta_k0) (-i)^k J_k(x), one row per x.

    Each row is truncated at the first order above |x| from which all its
    coefficients stay below ``cutoff``; returns (coefs, row_orders) where
    columns beyond a row's order are zero. Raises :class:`PrecisionError` if
    some row needs more than ``cap`` terms.
    """
    x = np.asarray(scaled_times, dtype=float)
    xmax = float(np.max(np.abs(x)))
    orders = np.arange(cap + 1)
    mags = np.abs(jv(orders[None, :], np.abs(x)[:, None]))
    small = (mags < cutoff) & (orders[None, :] > np.abs(x)[:, None])
    # first order of the tail that is small all the way to the cap
    tail_small = np.flip(np.logical_and.accumulate(np.flip(small, axis=1), axis=1), axis=1)
    if not np.all(tail_small[:, -1]):
        raise PrecisionError(
            f"Chebyshev series needs more than {cap} terms for |a t| = {xmax:.3g}",
            achieved_bound=float(mags[:, -1].max()),
        )
    row_orders = np.argmax(tail_small, axis=1)
    k_stop = int(row_orders.max())
    k = orders[:k_stop]
    signs = np.where(x[:, None] < 0, (-1.0) ** k[None, :], 1.0)
    coefs = jv(k[None, :], np.abs(x)[:, None]) * signs * ((-1j) ** k)[None, :]
    coefs[:, 1:] *= 2.0
    coefs[k[None, :] >= row_orders[:, None]] = 0.0
    return coefs, row_orders


def _expand(amps, matvec, bounds, offsets, cfg):
    """States exp(-iH tau) amps for every tau in ``offsets`` from one recursion.

    Chebyshev vectors are buffered in blocks and folded into the samples with
    one matrix product per block, which keeps memory traffic near one pass
    over each vector regardless of the number of sample times.
    """
    e_min, e_max = bounds
    a = 0.5 * (e_max - e_min)
    b = 0.5 * (e_max + e_min)
    offsets = np.asarray(offsets, dtype=float)
    scaled = a * offsets
    coefs, _ = chebyshev_coefficients(scaled, cfg.coefficient_cutoff, cfg.order_cap(np.max(np.abs(scaled))))
    coefs *= np.exp(-1j * b * offsets)[:, None]
    order = coefs.shape[1]
    dim = amps.shape[0]

    block = int(min(order, max(1, BLOCK_MEMORY // (16 * dim)), 64))
    buf = np.empty((block, dim), dtype=np.complex128)
    out = np.zeros((offsets.shape[0], dim), dtype=np.complex128)
    prev = np.array(amps, dtype=np.complex128)
    cur = np.empty_like(prev)
    nxt = np.empty_like(prev)
    filled = 0
    for k in range(order):
        if k == 0:
            vec = prev
        elif k == 1:
            matvec(prev, cur)
            cur -= b * prev
            cur /= a
            vec = cur
        else:
            matvec(cur, nxt)
            _kernels.chebyshev_step(nxt, cur, prev, 1.0 / a, b / a)
            prev, cur, nxt = cur, nxt, prev
            vec = cur
        buf[filled] = vec
        filled += 1
        if filled == block or k == order - 1:
            out += coefs[:, k + 1 - filled : k + 1] @ buf[:filled]
            filled = 0
    return out


def evolve(psi: StateVector, chain: ChainSpec, delta_t: float, cfg: PropagatorConfig | None = None) -> StateVector:
    """exp(-iH delta_t) psi. Negative delta_t runs the evolution backwards."""
    cfg = cfg or PropagatorConfig()
    if psi.chain.n_sites != chain.n_sites:
        raise ContractViolation("state and Hamiltonian have different N")
    if not psi.normalized:
        raise ContractViolation("evolve expects a normalized state")
    if delta_t == 0:
        return psi.with_chain(chain)
    matvec = hamiltonian_matvec(chain, psi.sector)
    bounds = cfg.resolve_bounds(chain, psi.sector)
    out = _expand(psi.amplitudes, matvec, bounds, [delta_t], cfg)[0]
    return StateVector(chain, out, psi.sector)


def evolve_samples(
    psi: StateVector,
    chain: ChainSpec,
    times: Sequence[float],
    cfg: PropagatorConfig | None = None,
    t0: float | None = None,
) -> Iterator[tuple[float, StateVector]]:
    """Yield (t, psi(t)) for ascending ``times``; psi is the state at ``t0``.

    ``t0`` defaults to the first time. Consecutive times are grouped so that
    one Chebyshev expansion spans at most ``cfg.chunk_span``; each group
    restarts from the last state of the previous one.
    """
    cfg = cfg or PropagatorConfig()
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return
    if np.any(np.diff(times) <= 0):
        raise DomainError("sample times must be strictly increasing")
    t0 = float(times[0]) if t0 is None else float(t0)
    if times[0] < t0:
        raise DomainError("sample times must not precede the initial time")
    matvec = hamiltonian_matvec(chain, psi.sector)
    bounds = cfg.resolve_bounds(chain, psi.sector)
    max_rows = max(1, CHUNK_MEMORY // (16 * psi.dimension))

    base, t_base = psi.with_chain(chain), t0
    i = 0
    while i < times.size:
        if times[i] == t_base:
            yield float(times[i]), base
            i += 1
            continue
        j = i
        while j < times.size and j - i < max_rows and (j == i or times[j] - t_base <= cfg.chunk_span):
            j += 1
        block = _expand(base.amplitudes, matvec, bounds, times[i:j] - t_base, cfg)
        for t, row in zip(times[i:j], block):
            yield float(t), StateVector(chain, row, base.sector)
        base, t_base = StateVector(chain, block[-1], base.sector), float(times[j - 1])
        i = j


def evolve_through_grid(
    psi: StateVector,
    chain: ChainSpec,
    grid: TimeGrid,
    cfg: PropagatorConfig | None = None,
    sampler: Callable[[float, StateVector], object] | None = None,
) -> list:
    """Evolve psi (the state at ``grid.t_start``) across the grid.

    Returns ``sampler(t, state)`` at each sample time, or the states themselves
    when no sampler is given.
    """
    sampler = sampler or (lambda t, state: state)
    return [sampler(t, state) for t, state in evolve_samples(psi, chain, grid.sample_times, cfg)]
