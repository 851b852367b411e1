"""Expectation values on state vectors and spectra of their time series."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .basis import ChainSpec
from .errors import ContractViolation, DomainError
from .operators import AXES, StateVector, apply_hamiltonian

REALITY_TOL = 1e-12


def _check_site(psi: StateVector, site: int):
    if not 1 <= site <= psi.n_sites:
        raise DomainError(f"site {site} outside chain of {psi.n_sites} sites")


def _bit_values(psi: StateVector, site: int) -> np.ndarray:
    """+1/2 where the spin at ``site`` is up, -1/2 where down."""
    up = (psi.codes() >> (site - 1)) & 1
    return up - 0.5


def _real(value: complex, what: str) -> float:
    if abs(value.imag) > REALITY_TOL * max(1.0, abs(value.real)):
        raise ContractViolation(f"{what} has imaginary part {value.imag:.3e}")
    return float(value.real)


def magnetization(psi: StateVector, site: int, axis: str = "z") -> float:
    _check_site(psi, site)
    if axis not in AXES:
        raise DomainError(f"axis must be one of {AXES}")
    amps = psi.amplitudes
    if axis == "z":
        return float(np.dot(np.abs(amps) ** 2, _bit_values(psi, site)))
    if psi.sector is not None:
        # S^x and S^y change total S^z by one, so they have no diagonal block
        return 0.0
    bit = 1 << (site - 1)
    idx = np.arange(amps.shape[0], dtype=np.int64)
    flipped = amps[idx ^ bit]
    if axis == "x":
        value = 0.5 * np.vdot(amps, flipped)
    else:
        # <c|S^y|c^bit> = -i/2 if c is up, +i/2 if c is down
        phase = np.where(idx & bit, -0.5j, 0.5j)
        value = np.vdot(amps, phase * flipped)
    return _real(complex(value), f"<S^{axis}_{site}>")


@lru_cache(maxsize=4)
def _site_spins(n_sites: int, sector) -> np.ndarray:
    """(dim, N) table of S^z eigenvalues +-1/2 per basis state and site."""
    codes = np.arange(1 << n_sites, dtype=np.int64) if sector is None else sector.member_codes
    table = ((codes[:, None] >> np.arange(n_sites)) & 1) - 0.5
    table.setflags(write=False)
    return table


def magnetization_profile(psi: StateVector, axis: str = "z") -> np.ndarray:
    """<S^axis_m> for m = 1..N."""
    if axis == "z":
        probs = np.abs(psi.amplitudes) ** 2
        return probs @ _site_spins(psi.n_sites, psi.sector)
    return np.array([magnetization(psi, m, axis) for m in range(1, psi.n_sites + 1)])


def correlation(psi: StateVector, site_a: int, site_b: int, axis: str = "z") -> float:
    """Equal-time <S^axis_a S^axis_b>."""
    _check_site(psi, site_a)
    _check_site(psi, site_b)
    if axis not in AXES:
        raise DomainError(f"axis must be one of {AXES}")
    if site_a == site_b:
        return 0.25 * psi.norm() ** 2
    amps = psi.amplitudes
    if axis == "z":
        weights = _bit_values(psi, site_a) * _bit_values(psi, site_b)
        return float(np.dot(np.abs(amps) ** 2, weights))
    a, b = sorted((site_a, site_b))
    mask = (1 << (a - 1)) | (1 << (b - 1))
    codes = psi.codes()
    antiparallel = (((codes >> (a - 1)) ^ (codes >> (b - 1))) & 1).astype(bool)
    partners = codes ^ mask
    if psi.sector is None:
        flipped = amps[partners]
    else:
        # a parallel pair leaves the sector and contributes nothing
        flipped = np.zeros_like(amps)
        flipped[antiparallel] = amps[psi.sector.rank_table[partners[antiparallel]]]
    if axis == "x":
        factor = 0.25
    else:
        # product of the two S^y phases: -1/4 for a parallel pair, +1/4 antiparallel
        factor = np.where(antiparallel, 0.25, -0.25)
    value = np.vdot(amps, factor * flipped)
    return _real(complex(value), f"<S^{axis}_{site_a} S^{axis}_{site_b}>")


def correlation_profile(psi: StateVector, anchor: int = 1, axis: str = "z") -> np.ndarray:
    """<S_anchor S_anchor+m> for m = 0..N-1 (ring distance m)."""
    n = psi.n_sites
    return np.array([correlation(psi, anchor, (anchor - 1 + m) % n + 1, axis) for m in range(n)])


def energy(psi: StateVector, chain: ChainSpec) -> float:
    h_psi = apply_hamiltonian(chain, psi)
    return _real(complex(np.vdot(psi.amplitudes, h_psi.amplitudes)), "<H>")


def staggered_magnetization(psi: StateVector) -> float:
    """(1/N) sum_m (-1)^(m-1) <S^z_m>."""
    profile = magnetization_profile(psi, "z")
    signs = np.where(np.arange(psi.n_sites) % 2 == 0, 1.0, -1.0)
    return float(np.dot(signs, profile) / psi.n_sites)


def total_magnetization(psi: StateVector, axis: str = "z") -> float:
    return float(magnetization_profile(psi, axis).sum())


def total_spin_squared(psi: StateVector) -> float:
    """<S_tot^2> = 3N/4 + 2 sum_{a<b} <S_a . S_b>."""
    n = psi.n_sites
    total = 0.75 * n
    for a in range(1, n + 1):
        for b in range(a + 1, n + 1):
            total += 2 * sum(correlation(psi, a, b, ax) for ax in AXES)
    return total


@dataclass(frozen=True, eq=False)
class TimeSeriesRecord:
    """A sampled observable. ``axis`` encodes the kind of quantity:

    ``x|y|z`` site magnetization, ``xx@a|yy@a|zz@a`` correlation of ``site``
    with anchor ``a``, ``energy`` and ``staggered`` for global quantities
    (``site`` 0). ``pre_event`` maps event times to the value just before
    the projection; ``values`` at those times hold the post-projection value.
    """

    site: int
    axis: str
    times: np.ndarray
    values: np.ndarray
    pre_event: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape:
            raise ContractViolation("times and values differ in length")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ContractViolation("times must be strictly ascending")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def key(self) -> tuple:
        return (self.site, self.axis)

    def __eq__(self, other):
        if not isinstance(other, TimeSeriesRecord):
            return NotImplemented
        return (
            self.key == other.key
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.values, other.values)
            and self.pre_event == other.pre_event
        )


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Half spectrum |sum_k w_k x_k exp(-i omega t_k)| on omega = 2 pi f.

    Magnitudes are the raw DFT moduli; ``parseval_power`` relates them to
    the time-domain power of the windowed series.
    """

    omegas: np.ndarray
    magnitudes: np.ndarray
    window: str
    detrend: bool
    dt: float
    n_samples: int

    def dominant_frequency(self, tie_tol: float = 1e-12) -> float:
        positive = self.omegas > 0
        if not np.any(positive):
            raise DomainError("spectrum has no positive frequencies")
        mags = self.magnitudes[positive]
        best = mags.max()
        return float(self.omegas[positive][np.flatnonzero(mags >= best - tie_tol)[0]])

    def parseval_power(self) -> float:
        """sum |x_k w_k|^2 reconstructed from the half spectrum."""
        sq = self.magnitudes**2
        weights = np.full(sq.shape, 2.0)
        weights[0] = 1.0
        if self.n_samples % 2 == 0:
            weights[-1] = 1.0
        return float(np.dot(weights, sq) / self.n_samples)


WINDOWS = ("rectangular", "hann")


def _window(kind: str, n: int) -> np.ndarray:
    if kind == "rectangular":
        return np.ones(n)
    if kind == "hann":
        return np.hanning(n)
    raise DomainError(f"window must be one of {WINDOWS}")


def fourier_spectrum(series: TimeSeriesRecord, window: str = "rectangular", detrend: bool = True) -> Spectrum:
    times, values = series.times, series.values
    if times.size < 2:
        raise ContractViolation("need at least two samples")
    steps = np.diff(times)
    dt = float(steps.mean())
    if np.max(np.abs(steps - dt)) > 1e-9 * max(1.0, abs(dt)):
        raise ContractViolation("fourier_spectrum requires a uniform time grid")
    x = values - values.mean() if detrend else values
    x = x * _window(window, x.size)
    mags = np.abs(np.fft.rfft(x))
    omegas = 2 * np.pi * np.fft.rfftfreq(x.size, dt)
    return Spectrum(omegas, mags, window, detrend, dt, x.size)


def windowed_power(series: TimeSeriesRecord, window: str = "rectangular", detrend: bool = True) -> float:
    x = series.values - series.values.mean() if detrend else series.values
    x = x * _window(window, x.size)
    return float(np.dot(x, x))
