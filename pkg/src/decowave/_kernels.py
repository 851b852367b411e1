"""Compiled inner loops.

Bit b of a basis code is the spin at site b+1 (1 = up). Bonds are the N ring
pairs (b, b+1 mod N). For a code c, ``c ^ rotr(c)`` has bit b set exactly when
bond (b, b+1) is antiparallel, i.e. when the transverse term can flip it.
All kernels use the gather formulation: each output index reads from its own
partners, so no two iterations write the same element.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _antiparallel_bonds(c, n, mask):
    return (c ^ (((c >> 1) | (c << (n - 1))) & mask)) & mask


@njit(cache=True)
def _bond_mask(low, n):
    # low is the single bit of site b; the bond partner is b+1 mod n
    if low == (1 << (n - 1)):
        return low | 1
    return low | (low << 1)


@njit(cache=True)
def sector_codes(n, n_up, count):
    """Ascending codes with popcount n_up (Gosper's hack)."""
    out = np.empty(count, dtype=np.int64)
    if n_up == 0:
        out[0] = 0
        return out
    c = (np.int64(1) << n_up) - 1
    for i in range(count):
        out[i] = c
        u = c & -c
        v = c + u
        c = (((v ^ c) >> 2) // u) | v
    return out


@njit(cache=True)
def ising_diagonal(codes, n, zz):
    """Diagonal of H: zz per parallel bond, -zz per antiparallel bond."""
    mask = (np.int64(1) << n) - 1
    out = np.empty(codes.shape[0], dtype=np.float64)
    for i in range(codes.shape[0]):
        x = _antiparallel_bonds(codes[i], n, mask)
        k = 0
        while x:
            x &= x - 1
            k += 1
        out[i] = zz * (n - 2 * k)
    return out


@njit(cache=True)
def hamiltonian_full(psi, out, diag, n, half_j):
    mask = (np.int64(1) << n) - 1
    for i in range(psi.shape[0]):
        x = _antiparallel_bonds(np.int64(i), n, mask)
        acc = 0j
        while x:
            low = x & -x
            acc += psi[i ^ _bond_mask(low, n)]
            x ^= low
        out[i] = diag[i] * psi[i] + half_j * acc


@njit(cache=True)
def hamiltonian_sector(psi, out, codes, rank, diag, n, half_j):
    mask = (np.int64(1) << n) - 1
    for i in range(codes.shape[0]):
        c = codes[i]
        x = _antiparallel_bonds(c, n, mask)
        acc = 0j
        while x:
            low = x & -x
            acc += psi[rank[c ^ _bond_mask(low, n)]]
            x ^= low
        out[i] = diag[i] * psi[i] + half_j * acc


@njit(cache=True)
def hamiltonian_full_real(psi, out, diag, n, half_j):
    mask = (np.int64(1) << n) - 1
    for i in range(psi.shape[0]):
        x = _antiparallel_bonds(np.int64(i), n, mask)
        acc = 0.0
        while x:
            low = x & -x
            acc += psi[i ^ _bond_mask(low, n)]
            x ^= low
        out[i] = diag[i] * psi[i] + half_j * acc


@njit(cache=True)
def hamiltonian_sector_real(psi, out, codes, rank, diag, n, half_j):
    mask = (np.int64(1) << n) - 1
    for i in range(codes.shape[0]):
        c = codes[i]
        x = _antiparallel_bonds(c, n, mask)
        acc = 0.0
        while x:
            low = x & -x
            acc += psi[rank[c ^ _bond_mask(low, n)]]
            x ^= low
        out[i] = diag[i] * psi[i] + half_j * acc


@njit(cache=True)
def chebyshev_step(h_next, h_cur, h_prev, scale, shift):
    """h_next <- 2*(scale*h_next - shift*h_cur) - h_prev, in place.

    On entry h_next holds H @ h_cur.
    """
    for i in range(h_next.shape[0]):
        h_next[i] = 2.0 * (scale * h_next[i] - shift * h_cur[i]) - h_prev[i]


@njit(cache=True)
def accumulate(samples, coefs, v):
    """samples[j] += coefs[j] * v for every row j, in one pass over v."""
    for j in range(coefs.shape[0]):
        c = coefs[j]
        row = samples[j]
        for i in range(v.shape[0]):
            row[i] += c * v[i]
