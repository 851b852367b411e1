"""Dense reference implementations for small rings (N <= 12).

Everything here is built from Kronecker products of 2x2 spin matrices and
shares no code with the bitstring kernels, so it can serve as an independent
check on them.
"""

from functools import reduce

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .basis import ChainSpec
from .errors import DomainError

MAX_DENSE_SITES = 12

# single-site basis ordered (down, up) so that index == bit value
SX = np.array([[0.0, 0.5], [0.5, 0.0]], dtype=complex)
SY = np.array([[0.0, 0.5j], [-0.5j, 0.0]], dtype=complex)
SZ = np.array([[-0.5, 0.0], [0.0, 0.5]], dtype=complex)
SPIN = {"x": SX, "y": SY, "z": SZ}


def _guard(n):
    if n > MAX_DENSE_SITES:
        raise DomainError(f"dense oracle refuses N={n} > {MAX_DENSE_SITES}")


def _site_sparse(n, site, op):
    factors = [sp.identity(2, dtype=complex, format="csr")] * n
    factors = list(factors)
    factors[n - site] = sp.csr_matrix(op)
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), factors)


def site_operator(n: int, site: int, op: np.ndarray) -> np.ndarray:
    """Embed a one-site operator; site 1 is the least significant factor."""
    _guard(n)
    return _site_sparse(n, site, op).toarray()


def spin_matrix(n: int, site: int, axis: str) -> np.ndarray:
    return site_operator(n, site, SPIN[axis])


def dense_hamiltonian(chain: ChainSpec) -> np.ndarray:
    n = chain.n_sites
    _guard(n)
    spins = {a: [_site_sparse(n, m, SPIN[a]) for m in range(1, n + 1)] for a in "xyz"}
    h = sp.csr_matrix((1 << n, 1 << n), dtype=complex)
    for i in range(n):
        j = (i + 1) % n
        for a in "xyz":
            h = h + chain.exchange_j * (spins[a][i] @ spins[a][j])
        h = h + chain.anisotropy_delta * (spins["z"][i] @ spins["z"][j])
    return h.toarray()


def dense_spectrum(chain: ChainSpec, lowest: int | None = None):
    """Eigenvalues and eigenvectors, optionally only the ``lowest`` few.

    The S^x S^x + S^y S^y combination is real, so the real symmetric solver is used.
    """
    h = dense_hamiltonian(chain)
    if np.abs(h.imag).max() == 0:
        h = h.real
    subset = None if lowest is None else [0, lowest - 1]
    return scipy.linalg.eigh(h, subset_by_index=subset)


def dense_propagator(chain: ChainSpec, t: float) -> np.ndarray:
    return scipy.linalg.expm(-1j * t * dense_hamiltonian(chain))


def projector_matrix(n: int, site: int, axis: str, sign: int) -> np.ndarray:
    # (1 +- 2 S)/2
    return 0.5 * (np.eye(1 << n) + 2 * sign * spin_matrix(n, site, axis))


def projected_expectation(rho: np.ndarray, projector: np.ndarray, observable: np.ndarray):
    """Tr[O P rho P] / Tr[P rho P] together with the normalization Tr[P rho P]."""
    prp = projector @ rho @ projector
    norm = np.trace(prp).real
    return np.trace(observable @ prp).real / norm, norm


def nonselective_expectation(rho, projectors, observable):
    """Tr[O sum_i P_i rho P_i]."""
    mixed = sum(p @ rho @ p for p in projectors)
    return np.trace(observable @ mixed).real


def total_spin_squared(n: int) -> np.ndarray:
    _guard(n)
    total = {a: sum(_site_sparse(n, m, SPIN[a]) for m in range(1, n + 1)) for a in "xyz"}
    return sum(s @ s for s in total.values()).toarray()
