"""Matrix-free application of the XXZ ring Hamiltonian and local spin operators.

    H = J sum_<ij> S_i . S_j + Delta sum_<ij> S^z_i S^z_j

over the N bonds (i, i+1 mod N). No Hamiltonian matrix is ever stored; the
only cached arrays are the Ising diagonal and, for sector bases, the code
tables from :mod:`decowave.basis`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import _kernels
from .basis import ChainSpec, SzSector, check_dimension, enumerate_sector
from .errors import ContractViolation, DomainError

AXES = ("x", "y", "z")
NORM_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over the full 2^N basis or over one S^z sector.

    ``normalized=False`` flags intermediates such as H|psi>.
    """

    chain: ChainSpec
    amplitudes: np.ndarray
    sector: SzSector | None = None
    normalized: bool = True
    norm_tolerance: float = NORM_TOLERANCE

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1:
            raise ContractViolation("amplitudes must be one-dimensional")
        check_dimension(self.chain, self.sector, amps.shape[0])
        object.__setattr__(self, "amplitudes", amps)
        if self.normalized:
            err = abs(np.linalg.norm(amps) - 1.0)
            if err > self.norm_tolerance:
                raise ContractViolation(f"state flagged normalized but |norm - 1| = {err:.3e}")

    @property
    def dimension(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def n_sites(self) -> int:
        return self.chain.n_sites

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def renormalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0.0:
            raise ContractViolation("cannot normalize the zero vector")
        return replace(self, amplitudes=self.amplitudes / nrm, normalized=True)

    def with_amplitudes(self, amps, normalized=None) -> "StateVector":
        if normalized is None:
            normalized = self.normalized
        return StateVector(self.chain, amps, self.sector, normalized, self.norm_tolerance)

    def with_chain(self, chain: ChainSpec) -> "StateVector":
        if chain.n_sites != self.chain.n_sites:
            raise ContractViolation("chain length differs")
        return StateVector(chain, self.amplitudes, self.sector, self.normalized, self.norm_tolerance)

    def codes(self) -> np.ndarray:
        if self.sector is None:
            return np.arange(self.dimension, dtype=np.int64)
        return self.sector.member_codes

    def to_full(self) -> "StateVector":
        if self.sector is None:
            return self
        full = np.zeros(self.chain.dimension, dtype=np.complex128)
        full[self.sector.member_codes] = self.amplitudes
        return StateVector(self.chain, full, None, self.normalized, self.norm_tolerance)

    def to_sector(self, total_sz: float, atol: float = 0.0) -> "StateVector":
        """Restrict a full-space state to a sector; weight outside must be <= atol."""
        if self.sector is not None:
            if self.sector.total_sz == total_sz:
                return self
            return self.to_full().to_sector(total_sz, atol)
        sector = enumerate_sector(self.chain, total_sz)
        inside = self.amplitudes[sector.member_codes]
        rest = self.amplitudes.copy()
        rest[sector.member_codes] = 0
        outside = float(np.vdot(rest, rest).real)
        if outside > atol:
            raise ContractViolation(f"state has weight {outside:.3e} outside S^z={total_sz}")
        return StateVector(self.chain, inside, sector, self.normalized, self.norm_tolerance)

    def vdot(self, other: "StateVector") -> complex:
        a, b = _common_basis(self, other)
        return complex(np.vdot(a.amplitudes, b.amplitudes))


def _common_basis(a: StateVector, b: StateVector):
    if a.chain.n_sites != b.chain.n_sites:
        raise ContractViolation("states belong to chains of different length")
    if a.sector == b.sector:
        return a, b
    return a.to_full(), b.to_full()


def product_state(chain: ChainSpec, code: int, sector: SzSector | None = None) -> StateVector:
    if sector is None:
        amps = np.zeros(chain.dimension, dtype=np.complex128)
        amps[code] = 1.0
        return StateVector(chain, amps)
    from .basis import sector_rank

    amps = np.zeros(sector.size, dtype=np.complex128)
    amps[sector_rank(sector, code)] = 1.0
    return StateVector(chain, amps, sector)


@dataclass(frozen=True)
class LocalSpinOp:
    """S^axis at a 1-based site."""

    site: int
    axis: str

    def __post_init__(self):
        if self.axis not in AXES:
            raise DomainError(f"axis must be one of {AXES}, got {self.axis!r}")
        if self.site < 1:
            raise DomainError(f"site must be >= 1, got {self.site}")

    def check(self, chain: ChainSpec):
        if not 1 <= self.site <= chain.n_sites:
            raise DomainError(f"site {self.site} outside chain of {chain.n_sites} sites")


@lru_cache(maxsize=8)
def ising_diagonal(chain: ChainSpec, sector: SzSector | None) -> np.ndarray:
    codes = np.arange(chain.dimension, dtype=np.int64) if sector is None else sector.member_codes
    zz = (chain.exchange_j + chain.anisotropy_delta) / 4.0
    diag = _kernels.ising_diagonal(codes, chain.n_sites, zz)
    diag.setflags(write=False)
    return diag


def hamiltonian_matvec(chain: ChainSpec, sector: SzSector | None = None, real: bool = False):
    """Return ``f(x, out=None) -> H @ x`` for raw arrays in the given basis."""
    diag = ising_diagonal(chain, sector)
    n = chain.n_sites
    half_j = chain.exchange_j / 2.0
    dtype = np.float64 if real else np.complex128
    if sector is None:
        kernel = _kernels.hamiltonian_full_real if real else _kernels.hamiltonian_full

        def matvec(x, out=None):
            if out is None:
                out = np.empty(x.shape[0], dtype=dtype)
            kernel(x, out, diag, n, half_j)
            return out

    else:
        kernel = _kernels.hamiltonian_sector_real if real else _kernels.hamiltonian_sector
        codes = sector.member_codes
        rank = sector.rank_table

        def matvec(x, out=None):
            if out is None:
                out = np.empty(x.shape[0], dtype=dtype)
            kernel(x, out, codes, rank, diag, n, half_j)
            return out

    return matvec


def apply_hamiltonian(chain: ChainSpec, psi: StateVector) -> StateVector:
    if psi.chain.n_sites != chain.n_sites:
        raise ContractViolation(f"state has N={psi.chain.n_sites}, Hamiltonian has N={chain.n_sites}")
    check_dimension(chain, psi.sector, psi.dimension)
    out = hamiltonian_matvec(chain, psi.sector)(psi.amplitudes)
    return StateVector(chain, out, psi.sector, normalized=False)


def apply_local_spin(op: LocalSpinOp, psi: StateVector) -> StateVector:
    """S^axis_site |psi>. x and y leave any S^z sector, so the result is full-space."""
    op.check(psi.chain)
    bit = 1 << (op.site - 1)
    if op.axis == "z":
        up = (psi.codes() & bit) != 0
        out = np.where(up, 0.5, -0.5) * psi.amplitudes
        return StateVector(psi.chain, out, psi.sector, normalized=False)
    amps = psi.to_full().amplitudes
    source = np.arange(amps.shape[0], dtype=np.int64) ^ bit
    out = amps[source]
    if op.axis == "x":
        out = 0.5 * out
    else:
        # S^y|up> = (i/2)|down>, S^y|down> = (-i/2)|up>; target up means source down
        target_up = (np.arange(amps.shape[0]) & bit) != 0
        out = np.where(target_up, -0.5j, 0.5j) * out
    return StateVector(psi.chain, out, None, normalized=False)


def certified_norm_bound(chain: ChainSpec) -> float:
    """Triangle-inequality cap: ||H|| <= N (3|J|/4 + |Delta|/4)."""
    return chain.n_sites * (3.0 * abs(chain.exchange_j) + abs(chain.anisotropy_delta)) / 4.0


def spectral_bounds(
    chain: ChainSpec,
    sector: SzSector | None = None,
    padding: float = 0.01,
    krylov_dim: int = 120,
    seed: int = 7,
) -> tuple[float, float]:
    """Interval containing the spectrum of H (restricted to ``sector`` if given).

    Lanczos extremal Ritz values are widened by ``padding`` times the width
    plus the Ritz residuals, then clipped to the certified norm bound.
    """
    return _spectral_bounds(chain, sector, padding, krylov_dim, seed)


@lru_cache(maxsize=32)
def _spectral_bounds(chain, sector, padding, krylov_dim, seed):
    from .eigensolve import lanczos_tridiagonal

    cap = certified_norm_bound(chain)
    dim = chain.dimension if sector is None else sector.size
    matvec = hamiltonian_matvec(chain, sector, real=True)
    rng = np.random.default_rng(seed)
    start = rng.standard_normal(dim)
    alphas, betas, _ = lanczos_tridiagonal(matvec, start, min(krylov_dim, dim), store_basis=False)
    from scipy.linalg import eigh_tridiagonal

    k = alphas.shape[0]
    theta, s = eigh_tridiagonal(alphas, betas[: k - 1])
    last_beta = betas[k - 1] if betas.shape[0] >= k else 0.0
    res_lo = abs(last_beta * s[-1, 0])
    res_hi = abs(last_beta * s[-1, -1])
    width = theta[-1] - theta[0]
    e_min = theta[0] - padding * width - res_lo
    e_max = theta[-1] + padding * width + res_hi
    return max(e_min, -cap), min(e_max, cap)


def cyclic_shift(psi: StateVector, steps: int = 1) -> StateVector:
    """Translate the ring: the spin at site m moves to site m + steps."""
    n = psi.n_sites
    steps %= n
    mask = (1 << n) - 1
    codes = psi.codes()
    shifted = ((codes << steps) | (codes >> (n - steps))) & mask
    if psi.sector is None:
        out = np.empty_like(psi.amplitudes)
        out[shifted] = psi.amplitudes
    else:
        out = np.empty_like(psi.amplitudes)
        out[psi.sector.rank_table[shifted]] = psi.amplitudes
    return psi.with_amplitudes(out)


def spin_flip(psi: StateVector) -> StateVector:
    """Global complement of every spin (maps S^z sector s to -s)."""
    n = psi.n_sites
    mask = (1 << n) - 1
    full = psi.to_full()
    out = full.amplitudes[np.arange(full.dimension, dtype=np.int64) ^ mask]
    return full.with_amplitudes(out)
