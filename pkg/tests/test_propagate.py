import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import jv

from conftest import random_state
from decowave.basis import ChainSpec, enumerate_sector
from decowave.errors import ContractViolation, DomainError, PrecisionError
from decowave.observables import energy, total_magnetization
from decowave.operators import product_state
from decowave.oracle import dense_propagator
from decowave.propagate import (
    PropagatorConfig,
    TimeGrid,
    chebyshev_coefficients,
    evolve,
    evolve_samples,
    evolve_through_grid,
)


def test_zero_time_is_identity(rng):
    chain = ChainSpec(8)
    psi = random_state(chain, rng)
    out = evolve(psi, chain, 0.0)
    assert np.array_equal(out.amplitudes, psi.amplitudes)


@pytest.mark.parametrize("delta,t", [(0.0, 3.7), (1.0, 12.0), (-0.4, 0.05)])
def test_eigenstate_phase(delta, t):
    chain = ChainSpec(8, 1.0, delta)
    psi = product_state(chain, 2**8 - 1)
    e = 8 * (1.0 + delta) / 4
    out = evolve(psi, chain, t)
    np.testing.assert_allclose(out.amplitudes, np.exp(-1j * e * t) * psi.amplitudes, atol=1e-12)


@pytest.mark.parametrize("delta", [0.0, 2.0])
def test_matches_dense_expm_n10(rng, delta):
    chain = ChainSpec(10, 1.0, delta)
    psi = random_state(chain, rng)
    exact = dense_propagator(chain, 10.0) @ psi.amplitudes
    assert np.max(np.abs(evolve(psi, chain, 10.0).amplitudes - exact)) <= 1e-10


def test_sector_evolution_matches_full(rng):
    chain = ChainSpec(10, 1.0, 0.5)
    sector = enumerate_sector(chain, 0)
    psi = random_state(chain, rng, sector)
    a = evolve(psi, chain, 4.0).to_full().amplitudes
    b = evolve(psi.to_full(), chain, 4.0).amplitudes
    assert np.max(np.abs(a - b)) <= 1e-12


def test_coefficients_are_scaled_bessel_values():
    x = np.array([0.5, 7.0])
    coefs, orders = chebyshev_coefficients(x, 1e-16, 1000)
    for row, xv, k_max in zip(coefs, x, orders):
        k = np.arange(k_max)
        expected = np.where(k == 0, 1.0, 2.0) * (-1j) ** k * jv(k, xv)
        np.testing.assert_allclose(row[:k_max], expected, atol=1e-17)
        assert abs(jv(k_max, xv)) < 1e-16


def test_order_cap_raises_precision_error(rng):
    chain = ChainSpec(6)
    psi = random_state(chain, rng)
    with pytest.raises(PrecisionError):
        evolve(psi, chain, 50.0, PropagatorConfig(max_order=10))


def test_grid_samples():
    grid = TimeGrid(0.0, 1.0, 0.1)
    assert len(grid) == 11
    assert grid.sample_times[-1] == pytest.approx(1.0)
    assert grid.index_of(0.3) == 3
    assert grid.index_of(0.3005) == 3
    with pytest.raises(DomainError):
        grid.index_of(0.305)
    with pytest.raises(DomainError):
        TimeGrid(0, 1, 0)
    with pytest.raises(DomainError):
        TimeGrid(1, 0, 0.1)


def test_single_point_grid(rng):
    chain = ChainSpec(6)
    psi = random_state(chain, rng)
    states = evolve_through_grid(psi, chain, TimeGrid(0.0, 0.0, 0.1))
    assert len(states) == 1
    assert np.array_equal(states[0].amplitudes, psi.amplitudes)


def test_composition_of_steps(rng):
    chain = ChainSpec(10, 1.0, 0.3)
    psi = random_state(chain, rng)
    stepped = psi
    for _ in range(10):
        stepped = evolve(stepped, chain, 1.0)
    direct = evolve(psi, chain, 10.0)
    assert np.max(np.abs(stepped.amplitudes - direct.amplitudes)) <= 1e-10


def test_samples_match_individual_evolutions(rng):
    chain = ChainSpec(10, 1.0, 1.0)
    psi = random_state(chain, rng)
    times = np.linspace(0.0, 7.0, 36)
    for t, state in evolve_samples(psi, chain, times):
        assert np.max(np.abs(state.amplitudes - evolve(psi, chain, t).amplitudes)) <= 1e-11


def test_samples_with_offset_start(rng):
    chain = ChainSpec(8)
    psi = random_state(chain, rng)
    (t, state), = list(evolve_samples(psi, chain, [5.5], t0=2.0))
    assert t == 5.5
    np.testing.assert_allclose(state.amplitudes, evolve(psi, chain, 3.5).amplitudes, atol=1e-12)


def test_samples_reject_bad_times(rng):
    chain = ChainSpec(6)
    psi = random_state(chain, rng)
    with pytest.raises(DomainError):
        list(evolve_samples(psi, chain, [1.0, 0.5]))
    with pytest.raises(DomainError):
        list(evolve_samples(psi, chain, [1.0], t0=2.0))


def test_norm_drift_long_run(rng):
    chain = ChainSpec(10, 1.0, 2.0)
    psi = random_state(chain, rng)
    last = None
    for _, state in evolve_samples(psi, chain, np.arange(0, 501, 1.0)):
        last = state
    assert abs(last.norm() - 1) <= 1e-10


@given(delta=st.sampled_from([0.0, 0.2, 2.0]), t=st.floats(0.0, 15.0), seed=st.integers(0, 2**31))
def test_unitarity_energy_and_sz(delta, t, seed):
    chain = ChainSpec(8, 1.0, delta)
    psi = random_state(chain, np.random.default_rng(seed))
    out = evolve(psi, chain, t)
    assert abs(out.norm() - 1) <= 1e-12
    assert abs(energy(out, chain) - energy(psi, chain)) <= 1e-10
    assert abs(total_magnetization(out) - total_magnetization(psi)) <= 1e-10


@given(t=st.floats(0.1, 20.0), seed=st.integers(0, 2**31))
def test_time_reversal_round_trip(t, seed):
    chain = ChainSpec(8, 1.0, 0.7)
    psi = random_state(chain, np.random.default_rng(seed))
    back = evolve(evolve(psi, chain, t), chain, -t)
    assert np.max(np.abs(back.amplitudes - psi.amplitudes)) <= 1e-10


def test_config_validation():
    with pytest.raises(DomainError):
        PropagatorConfig(coefficient_cutoff=1e-6)
    with pytest.raises(DomainError):
        PropagatorConfig(bounds=(1.0, -1.0))


def test_rejects_unnormalized_or_mismatched(rng):
    chain = ChainSpec(6)
    psi = random_state(chain, rng)
    with pytest.raises(ContractViolation):
        evolve(psi.with_amplitudes(2 * psi.amplitudes, normalized=False), chain, 1.0)
    with pytest.raises(ContractViolation):
        evolve(psi, ChainSpec(8), 1.0)
