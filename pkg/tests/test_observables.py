import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_state
from decowave.basis import ChainSpec, enumerate_sector, product_state_code
from decowave.errors import ContractViolation, DomainError
from decowave.measurement import ProjectorSpec, project
from decowave.observables import (
    TimeSeriesRecord,
    correlation,
    correlation_profile,
    energy,
    fourier_spectrum,
    magnetization,
    magnetization_profile,
    staggered_magnetization,
    total_magnetization,
    total_spin_squared,
    windowed_power,
)
from decowave.operators import StateVector, product_state
from decowave.oracle import spin_matrix
from decowave.oracle import total_spin_squared as dense_casimir
from decowave.propagate import evolve_samples

axes = st.sampled_from("xyz")


def neel(n):
    chain = ChainSpec(n)
    return product_state(chain, product_state_code("ud" * (n // 2)))


def test_neel_values():
    psi = neel(10)
    assert magnetization(psi, 1) == 0.5
    assert magnetization(psi, 2) == -0.5
    assert staggered_magnetization(psi) == 0.5


def test_two_site_singlet_zz():
    chain = ChainSpec(4)
    amps = np.zeros(16, dtype=complex)
    amps[product_state_code("uddd")] = 1 / np.sqrt(2)
    amps[product_state_code("dudd")] = -1 / np.sqrt(2)
    assert correlation(StateVector(chain, amps), 1, 2, "z") == pytest.approx(-0.25)


@given(seed=st.integers(0, 2**31), axis=axes)
def test_magnetization_matches_dense(seed, axis):
    chain = ChainSpec(6)
    psi = random_state(chain, np.random.default_rng(seed))
    site = seed % 6 + 1
    dense = np.vdot(psi.amplitudes, spin_matrix(6, site, axis) @ psi.amplitudes).real
    assert magnetization(psi, site, axis) == pytest.approx(dense, abs=1e-14)


@given(seed=st.integers(0, 2**31), axis=axes)
def test_correlation_matches_dense_and_is_symmetric(seed, axis):
    chain = ChainSpec(6)
    rng = np.random.default_rng(seed)
    psi = random_state(chain, rng)
    a, b = (int(x) for x in rng.integers(1, 7, size=2))
    op = spin_matrix(6, a, axis) @ spin_matrix(6, b, axis)
    dense = np.vdot(psi.amplitudes, op @ psi.amplitudes).real
    assert correlation(psi, a, b, axis) == pytest.approx(dense, abs=1e-14)
    assert correlation(psi, a, b, axis) == correlation(psi, b, a, axis)


@pytest.mark.parametrize("axis", ["x", "y", "z"])
def test_sector_correlation_matches_full(rng, axis):
    chain = ChainSpec(8)
    psi = random_state(chain, rng, enumerate_sector(chain, 0))
    for b in (2, 5):
        assert correlation(psi, 1, b, axis) == pytest.approx(correlation(psi.to_full(), 1, b, axis), abs=1e-14)


def test_sector_transverse_magnetization_vanishes(rng):
    chain = ChainSpec(8)
    psi = random_state(chain, rng, enumerate_sector(chain, 1))
    assert magnetization(psi, 3, "x") == 0.0
    assert magnetization(psi.to_full(), 3, "x") == pytest.approx(0.0, abs=1e-15)


def test_casimir_matches_dense(rng):
    chain = ChainSpec(6)
    psi = random_state(chain, rng)
    dense = np.vdot(psi.amplitudes, dense_casimir(6) @ psi.amplitudes).real
    assert total_spin_squared(psi) == pytest.approx(dense, abs=1e-12)


def test_ground_state_energy_consistency(ground_states):
    gs = ground_states(12)
    assert energy(gs.state, gs.state.chain) == pytest.approx(gs.energy, abs=1e-10)


def test_ground_state_zz_matches_dense_oracle(ground_states):
    from decowave.eigensolve import dense_ground_state

    dense = dense_ground_state(ChainSpec(10)).state
    lanczos = ground_states(10).state
    for b in range(1, 11):
        assert correlation(lanczos, 1, b, "z") == pytest.approx(correlation(dense, 1, b, "z"), abs=1e-10)
    assert correlation(lanczos, 1, 5, "z") == pytest.approx(0.0432666696, abs=1e-9)


def test_ground_state_short_ranged_n20(ground_states):
    psi = ground_states(20).state
    assert abs(correlation(psi, 1, 5, "z")) <= 0.04
    assert abs(staggered_magnetization(psi)) <= 1e-10


def test_su2_symmetric_correlations(ground_states):
    psi = ground_states(12).state
    for axis in "xy":
        np.testing.assert_allclose(correlation_profile(psi, 1, axis), correlation_profile(psi, 1, "z"), atol=1e-8)


def test_strong_anisotropy_creates_sublattice_order(ground_states):
    post = project(ground_states(10, 3.0).state, ProjectorSpec(1)).state
    assert staggered_magnetization(post) > 0.25


def test_transverse_stays_zero_after_z_measurement(ground_states):
    post = project(ground_states(10).state, ProjectorSpec(1)).state.to_full()
    chain = post.chain
    for _, state in evolve_samples(post, chain, np.arange(0.0, 10.01, 0.5)):
        for axis in "xy":
            assert np.max(np.abs(magnetization_profile(state, axis))) <= 1e-8


def test_reflection_symmetry_and_sz_conservation(ground_states):
    post = project(ground_states(12, 0.4).state, ProjectorSpec(1)).state
    n = 12
    mirror = [(-k) % n for k in range(n)]
    for _, state in evolve_samples(post, post.chain, np.arange(0.0, 8.01, 0.4)):
        prof = magnetization_profile(state)
        assert np.max(np.abs(prof - prof[mirror])) <= 1e-8
        assert abs(total_magnetization(state) - 0.0) <= 1e-10


def test_site_range_checked():
    psi = neel(4)
    with pytest.raises(DomainError):
        magnetization(psi, 5)
    with pytest.raises(DomainError):
        correlation(psi, 0, 1)


def test_series_record_contracts():
    with pytest.raises(ContractViolation):
        TimeSeriesRecord(1, "z", [0, 1], [0.0])
    with pytest.raises(ContractViolation):
        TimeSeriesRecord(1, "z", [1, 0], [0.0, 0.0])


def test_constant_series_peaks_at_zero():
    rec = TimeSeriesRecord(1, "z", np.arange(100) * 0.1, np.full(100, 0.3))
    spec = fourier_spectrum(rec, detrend=False)
    assert np.argmax(spec.magnitudes) == 0
    assert np.all(spec.magnitudes[1:] <= 1e-12)


def test_cosine_dominant_frequency():
    t = np.round(np.arange(10001) * 0.1, 10)
    spec = fourier_spectrum(TimeSeriesRecord(1, "z", t, np.cos(0.5 * t)))
    bin_width = spec.omegas[1] - spec.omegas[0]
    assert abs(spec.dominant_frequency() - 0.5) <= bin_width
    assert np.all(np.diff(spec.omegas) > 0) and spec.omegas[0] == 0


def test_tie_breaks_to_lowest_frequency():
    t = np.arange(64.0)
    x = np.cos(2 * np.pi * 4 / 64 * t) + np.cos(2 * np.pi * 9 / 64 * t)
    spec = fourier_spectrum(TimeSeriesRecord(1, "z", t, x))
    assert spec.dominant_frequency() == pytest.approx(2 * np.pi * 4 / 64)


def test_non_uniform_grid_rejected():
    rec = TimeSeriesRecord(1, "z", [0.0, 0.1, 0.3], [0.0, 1.0, 0.0])
    with pytest.raises(ContractViolation):
        fourier_spectrum(rec)


@given(
    n=st.integers(2, 300),
    window=st.sampled_from(["rectangular", "hann"]),
    detrend=st.booleans(),
    seed=st.integers(0, 2**31),
)
def test_parseval(n, window, detrend, seed):
    rng = np.random.default_rng(seed)
    rec = TimeSeriesRecord(1, "z", np.arange(n) * 0.1, rng.normal(size=n))
    spec = fourier_spectrum(rec, window, detrend)
    power = windowed_power(rec, window, detrend)
    assert spec.parseval_power() == pytest.approx(power, rel=1e-8, abs=1e-8)
