import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_state
from decowave.basis import ChainSpec, enumerate_sector, product_state_code
from decowave.errors import ContractViolation, DomainError
from decowave.operators import (
    LocalSpinOp,
    StateVector,
    apply_hamiltonian,
    apply_local_spin,
    certified_norm_bound,
    cyclic_shift,
    product_state,
    spectral_bounds,
    spin_flip,
)
from decowave.oracle import dense_hamiltonian, dense_spectrum, spin_matrix

deltas = st.sampled_from([0.0, 0.1, -0.3, 1.0, 2.0])
sizes = st.sampled_from([4, 6, 8])


def test_polarized_eigenvalue_isotropic():
    chain = ChainSpec(4)
    psi = product_state(chain, 0b1111)
    h = apply_hamiltonian(chain, psi)
    np.testing.assert_allclose(h.amplitudes, psi.amplitudes, atol=0)


def test_polarized_eigenvalue_with_anisotropy():
    chain = ChainSpec(4, 1.0, 1.0)
    psi = product_state(chain, 0b1111)
    np.testing.assert_allclose(apply_hamiltonian(chain, psi).amplitudes, 2.0 * psi.amplitudes, atol=0)


def test_matches_dense_matrix_n10(rng):
    chain = ChainSpec(10)
    psi = random_state(chain, rng)
    dense = dense_hamiltonian(chain) @ psi.amplitudes
    assert np.max(np.abs(apply_hamiltonian(chain, psi).amplitudes - dense)) <= 1e-13


@pytest.mark.parametrize("delta", [0.0, 0.37, -1.2])
def test_sector_matvec_matches_full(rng, delta):
    chain = ChainSpec(10, 1.0, delta)
    sector = enumerate_sector(chain, 1)
    psi = random_state(chain, rng, sector)
    full = apply_hamiltonian(chain, psi.to_full()).amplitudes
    out = apply_hamiltonian(chain, psi).amplitudes
    np.testing.assert_allclose(out, full[sector.member_codes], atol=1e-14)


def test_neel_energy_by_hand():
    # every bond antiparallel: diagonal (J + Delta)/4 * (-N); hopping leaves the state
    chain = ChainSpec(6, 1.0, 0.5)
    psi = product_state(chain, product_state_code("udud" + "ud"))
    h = apply_hamiltonian(chain, psi)
    assert np.vdot(psi.amplitudes, h.amplitudes).real == pytest.approx(-6 * 1.5 / 4)


def test_sz_on_up_site():
    chain = ChainSpec(4)
    psi = product_state(chain, product_state_code("uddd"))
    out = apply_local_spin(LocalSpinOp(1, "z"), psi)
    np.testing.assert_allclose(out.amplitudes, 0.5 * psi.amplitudes)


def test_sx_flips_site():
    chain = ChainSpec(4)
    psi = product_state(chain, product_state_code("uddd"))
    out = apply_local_spin(LocalSpinOp(1, "x"), psi)
    assert out.amplitudes[0] == 0.5
    assert np.count_nonzero(out.amplitudes) == 1


def test_sy_phases():
    chain = ChainSpec(4)
    up = product_state(chain, product_state_code("uddd"))
    down = product_state(chain, 0)
    assert apply_local_spin(LocalSpinOp(1, "y"), up).amplitudes[0] == pytest.approx(0.5j)
    assert apply_local_spin(LocalSpinOp(1, "y"), down).amplitudes[1] == pytest.approx(-0.5j)


@pytest.mark.parametrize("axis", ["x", "y", "z"])
def test_local_spin_matches_kronecker_matrix(rng, axis):
    chain = ChainSpec(8)
    psi = random_state(chain, rng)
    for site in (1, 4, 8):
        dense = spin_matrix(8, site, axis) @ psi.amplitudes
        np.testing.assert_allclose(apply_local_spin(LocalSpinOp(site, axis), psi).amplitudes, dense, atol=1e-15)


@given(n=sizes, axis=st.sampled_from("xyz"), seed=st.integers(0, 2**31))
def test_spin_squares_to_quarter(n, axis, seed):
    chain = ChainSpec(n)
    psi = random_state(chain, np.random.default_rng(seed))
    site = seed % n + 1
    op = LocalSpinOp(site, axis)
    twice = apply_local_spin(op, apply_local_spin(op, psi))
    np.testing.assert_allclose(twice.amplitudes, psi.amplitudes / 4, atol=1e-15)


@given(n=sizes, delta=deltas, seed=st.integers(0, 2**31))
def test_hermiticity(n, delta, seed):
    chain = ChainSpec(n, 1.0, delta)
    rng = np.random.default_rng(seed)
    phi, psi = random_state(chain, rng), random_state(chain, rng)
    lhs = np.vdot(phi.amplitudes, apply_hamiltonian(chain, psi).amplitudes)
    rhs = np.conj(np.vdot(psi.amplitudes, apply_hamiltonian(chain, phi).amplitudes))
    assert abs(lhs - rhs) <= 1e-12


@given(n=sizes, delta=deltas, data=st.data())
def test_sz_conservation_of_full_space_product(n, delta, data):
    chain = ChainSpec(n, 1.0, delta)
    k = data.draw(st.integers(0, n))
    sector = enumerate_sector(chain, k - n / 2)
    rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
    psi = random_state(chain, rng, sector).to_full()
    out = apply_hamiltonian(chain, psi).amplitudes
    outside = np.ones(chain.dimension, dtype=bool)
    outside[sector.member_codes] = False
    assert np.all(out[outside] == 0)


@given(n=sizes, delta=deltas, seed=st.integers(0, 2**31), steps=st.integers(1, 7))
def test_translation_covariance(n, delta, seed, steps):
    chain = ChainSpec(n, 1.0, delta)
    psi = random_state(chain, np.random.default_rng(seed))
    a = cyclic_shift(apply_hamiltonian(chain, psi), steps)
    b = apply_hamiltonian(chain, cyclic_shift(psi, steps))
    assert np.max(np.abs(a.amplitudes - b.amplitudes)) <= 1e-13


def test_cyclic_shift_moves_spin():
    chain = ChainSpec(4)
    psi = product_state(chain, product_state_code("uddd"))
    shifted = cyclic_shift(psi, 1)
    assert shifted.amplitudes[product_state_code("dudd")] == 1


@pytest.mark.parametrize("delta", [0.0, 0.7, -2.0])
def test_global_spin_flip_leaves_matrix_invariant(delta):
    chain = ChainSpec(8, 1.0, delta)
    h = dense_hamiltonian(chain)
    perm = np.arange(chain.dimension) ^ (chain.dimension - 1)
    np.testing.assert_array_equal(h[np.ix_(perm, perm)], h)


def test_spin_flip_commutes_with_hamiltonian(rng):
    chain = ChainSpec(8, 1.0, 0.4)
    psi = random_state(chain, rng)
    a = spin_flip(apply_hamiltonian(chain, psi))
    b = apply_hamiltonian(chain, spin_flip(psi))
    np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-14)


def test_bounds_contain_small_spectrum():
    lo, hi = spectral_bounds(ChainSpec(4))
    assert lo <= -2.0 and hi >= 1.0


@pytest.mark.parametrize("n,delta", [(6, 0.0), (8, 2.0), (10, -0.5), (10, 1.0)])
def test_bounds_contain_dense_spectrum(n, delta):
    chain = ChainSpec(n, 1.0, delta)
    evals, _ = dense_spectrum(chain)
    lo, hi = spectral_bounds(chain)
    cap = certified_norm_bound(chain)
    assert -cap <= lo <= evals[0] and evals[-1] <= hi <= cap


def test_sector_bounds_contain_sector_spectrum():
    chain = ChainSpec(10, 1.0, 2.0)
    sector = enumerate_sector(chain, 0)
    h = dense_hamiltonian(chain)[np.ix_(sector.member_codes, sector.member_codes)]
    evals = np.linalg.eigvalsh(h)
    lo, hi = spectral_bounds(chain, sector)
    assert lo <= evals[0] and evals[-1] <= hi


def test_state_vector_contracts():
    chain = ChainSpec(4)
    with pytest.raises(ContractViolation):
        StateVector(chain, np.ones(16))
    with pytest.raises(ContractViolation):
        StateVector(chain, np.ones(8) / np.sqrt(8))
    unnormalized = StateVector(chain, np.ones(16), normalized=False)
    assert unnormalized.renormalized().norm() == pytest.approx(1.0)
    with pytest.raises(ContractViolation):
        apply_hamiltonian(ChainSpec(6), product_state(chain, 0))


def test_local_op_site_range():
    with pytest.raises(DomainError):
        apply_local_spin(LocalSpinOp(5, "z"), product_state(ChainSpec(4), 0))
    with pytest.raises(DomainError):
        LocalSpinOp(1, "w")


def test_to_sector_round_trip(rng):
    chain = ChainSpec(8)
    sector = enumerate_sector(chain, 0)
    psi = random_state(chain, rng, sector)
    back = psi.to_full().to_sector(0)
    np.testing.assert_array_equal(back.amplitudes, psi.amplitudes)
    with pytest.raises(ContractViolation):
        random_state(chain, rng).to_sector(0)
