"""Product basis of a spin-1/2 ring encoded as bitstrings.

Convention, used by every module: bit ``b`` of a basis code is the spin at
site ``b + 1`` (1 = up, 0 = down). Codes are ordered as plain integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import comb

import numpy as np

from . import _kernels
from .errors import ContractViolation, DomainError

MIN_SITES = 4
MAX_SITES = 32


@dataclass(frozen=True)
class ChainSpec:
    """Antiferromagnetic XXZ ring with periodic boundary.

    ``anisotropy_delta`` is the extra Ising coupling on top of the isotropic
    exchange, so the zz coupling per bond is ``exchange_j + anisotropy_delta``.
    """

    n_sites: int
    exchange_j: float = 1.0
    anisotropy_delta: float = 0.0

    def __post_init__(self):
        n = self.n_sites
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise DomainError(f"n_sites must be an integer, got {n!r}")
        if n < MIN_SITES or n % 2:
            raise DomainError(f"n_sites must be even and >= {MIN_SITES}, got {n}")
        if n > MAX_SITES:
            raise DomainError(f"n_sites={n} exceeds the addressable limit {MAX_SITES}")
        if not self.exchange_j > 0:
            raise DomainError(f"exchange_j must be > 0 (antiferromagnet), got {self.exchange_j}")
        object.__setattr__(self, "n_sites", int(n))
        object.__setattr__(self, "exchange_j", float(self.exchange_j))
        object.__setattr__(self, "anisotropy_delta", float(self.anisotropy_delta))

    @property
    def dimension(self) -> int:
        return 1 << self.n_sites

    @property
    def boundary(self) -> str:
        return "periodic"


@dataclass(frozen=True, eq=False)
class SzSector:
    """All basis codes with a fixed total S^z, in ascending order."""

    n_sites: int
    total_sz: float
    member_codes: np.ndarray

    @property
    def n_up(self) -> int:
        return int(round(self.total_sz + self.n_sites / 2))

    @property
    def size(self) -> int:
        return self.member_codes.shape[0]

    @cached_property
    def rank_table(self) -> np.ndarray:
        # dense code -> position lookup used by the compiled kernels
        table = np.full(1 << self.n_sites, -1, dtype=np.int32)
        table[self.member_codes] = np.arange(self.size, dtype=np.int32)
        return table

    def __eq__(self, other):
        if not isinstance(other, SzSector):
            return NotImplemented
        return self.n_sites == other.n_sites and self.total_sz == other.total_sz

    def __hash__(self):
        return hash((self.n_sites, self.total_sz))

    def __len__(self):
        return self.size


def _check_total_sz(n_sites, total_sz):
    n_up = total_sz + n_sites / 2
    if abs(total_sz) > n_sites / 2 or abs(n_up - round(n_up)) > 1e-12:
        raise DomainError(f"total_sz={total_sz} is not a valid S^z value for N={n_sites}")
    return int(round(n_up))


def enumerate_sector(spec: ChainSpec | int, total_sz: float) -> SzSector:
    n = spec.n_sites if isinstance(spec, ChainSpec) else int(spec)
    n_up = _check_total_sz(n, total_sz)
    return _sector(n, n_up)


@lru_cache(maxsize=16)
def _sector(n_sites: int, n_up: int) -> SzSector:
    codes = _kernels.sector_codes(n_sites, n_up, comb(n_sites, n_up))
    codes.setflags(write=False)
    return SzSector(n_sites, n_up - n_sites / 2, codes)


def sector_rank(sector: SzSector, code: int) -> int:
    codes = sector.member_codes
    pos = int(np.searchsorted(codes, code))
    if pos >= codes.shape[0] or codes[pos] != code:
        raise LookupError(f"code {code:#b} is not in the S^z={sector.total_sz} sector")
    return pos


def total_sz_of(code: int, n_sites: int) -> float:
    return bin(code).count("1") - n_sites / 2


def product_state_code(pattern: str) -> int:
    """Code for a pattern like ``"udud..."`` or ``"↑↓↑↓"``; first char is site 1."""
    code = 0
    for b, ch in enumerate(pattern):
        if ch in "u↑1+":
            code |= 1 << b
        elif ch not in "d↓0-":
            raise DomainError(f"unknown spin symbol {ch!r} in {pattern!r}")
    return code


def check_dimension(spec: ChainSpec, sector: SzSector | None, length: int):
    expected = spec.dimension if sector is None else sector.size
    if sector is not None and sector.n_sites != spec.n_sites:
        raise ContractViolation(f"sector built for N={sector.n_sites}, chain has N={spec.n_sites}")
    if length != expected:
        raise ContractViolation(f"vector length {length} does not match basis dimension {expected}")
