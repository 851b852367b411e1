"""Ground states of the XXZ ring.

The production path is a real-arithmetic Lanczos iteration on the
matrix-free Hamiltonian. ``dense_ground_state`` is the small-N oracle and
``bethe_reference_energy_per_site`` the thermodynamic-limit reference.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .basis import ChainSpec, SzSector, enumerate_sector
from .errors import ContractViolation, ConvergenceError, DomainError
from .operators import StateVector, apply_hamiltonian, hamiltonian_matvec
from .oracle import MAX_DENSE_SITES, dense_spectrum

log = logging.getLogger(__name__)

REORTHOGONALIZE = ("full", "selective")


@dataclass(frozen=True)
class LanczosConfig:
    max_krylov_dim: int = 300
    energy_tol: float = 1e-12
    reorthogonalize: str = "full"
    seed: int = 1234
    max_restarts: int = 3
    check_every: int = 5

    def __post_init__(self):
        if self.max_krylov_dim < 2:
            raise DomainError("max_krylov_dim must be >= 2")
        if not self.energy_tol > 0:
            raise DomainError("energy_tol must be > 0")
        if self.reorthogonalize not in REORTHOGONALIZE:
            raise DomainError(f"reorthogonalize must be one of {REORTHOGONALIZE}")


@dataclass(frozen=True, eq=False)
class GroundStateResult:
    energy: float
    state: StateVector
    residual: float
    iterations: int
    sector_used: SzSector | None = None


def residual_tolerance(energy: float) -> float:
    return 1e-10 * max(1.0, abs(energy))


def fix_phase(amps: np.ndarray, rel_tol: float = 1e-6) -> np.ndarray:
    """Rotate so the largest-magnitude amplitude is real and positive.

    Near-ties (within ``rel_tol``) resolve to the lowest basis index, which
    keeps the choice stable when symmetry makes several entries equal.
    """
    mags = np.abs(amps)
    top = mags.max()
    if top == 0:
        return amps
    idx = int(np.flatnonzero(mags >= top * (1 - rel_tol))[0])
    return amps * (abs(amps[idx]) / amps[idx])


def lanczos_tridiagonal(matvec, start, steps, store_basis=True, full_reorth=True):
    """Plain Lanczos tridiagonalization with a fixed number of steps.

    Returns (alphas, betas, basis); ``betas[j]`` couples vectors j and j+1,
    so ``betas`` has one more entry than the off-diagonal of T. Stops early on
    breakdown. ``basis`` is None unless requested.
    """
    v = start / np.linalg.norm(start)
    dim = v.shape[0]
    steps = min(steps, dim)
    basis = np.empty((steps, dim)) if (store_basis or full_reorth) else None
    alphas, betas = [], []
    v_prev = np.zeros_like(v)
    beta = 0.0
    for j in range(steps):
        if basis is not None:
            basis[j] = v
        w = matvec(v)
        alpha = float(v @ w)
        w -= alpha * v + beta * v_prev
        if full_reorth:
            w -= basis[: j + 1].T @ (basis[: j + 1] @ w)
        alphas.append(alpha)
        beta = float(np.linalg.norm(w))
        betas.append(beta)
        if beta < 1e-13 * max(1.0, abs(alpha)):
            break
        v_prev, v = v, w / beta
    k = len(alphas)
    if basis is not None:
        basis = basis[:k]
    return np.array(alphas), np.array(betas), (basis if store_basis else None)


def _lowest_ritz(alphas, betas):
    k = alphas.shape[0]
    if k == 1:
        return alphas[0], np.ones(1)
    theta, s = eigh_tridiagonal(alphas, betas[: k - 1], select="i", select_range=(0, 0))
    return theta[0], s[:, 0]


def _krylov_full(matvec, start, cfg):
    """Lanczos with full reorthogonalization and periodic convergence checks."""
    dim = start.shape[0]
    m = min(cfg.max_krylov_dim, dim)
    basis = np.empty((m, dim))
    basis[0] = start / np.linalg.norm(start)
    alphas, betas = [], []
    beta = 0.0
    prev_theta = math.inf
    for j in range(m):
        v = basis[j]
        w = matvec(v)
        alpha = float(v @ w)
        w -= alpha * v
        if j:
            w -= beta * basis[j - 1]
        # two Gram-Schmidt passes keep the basis orthogonal to machine precision
        for _ in range(2):
            w -= basis[: j + 1].T @ (basis[: j + 1] @ w)
        alphas.append(alpha)
        beta = float(np.linalg.norm(w))
        betas.append(beta)
        a, b = np.array(alphas), np.array(betas)
        breakdown = beta < 1e-13 * max(1.0, abs(alpha))
        last = j == m - 1
        if breakdown or last or (j + 1) % cfg.check_every == 0:
            theta, s = _lowest_ritz(a, b)
            res_est = abs(beta * s[-1])
            stable = abs(theta - prev_theta) <= cfg.energy_tol * max(1.0, abs(theta))
            prev_theta = theta
            if breakdown or last or (stable and res_est <= 0.1 * residual_tolerance(theta)):
                vec = basis[: j + 1].T @ s
                return theta, vec, j + 1, breakdown
        if j + 1 < m:
            basis[j + 1] = w / beta
    raise AssertionError("unreachable")


def _krylov_two_pass(matvec, start, cfg):
    """Lanczos without a stored basis: the Ritz vector is rebuilt in a second pass.

    Only the two most recent vectors are kept and each new vector is
    reorthogonalized against them. Spurious copies of converged Ritz values
    may appear but do not move the lowest one.
    """
    dim = start.shape[0]
    m = min(cfg.max_krylov_dim, dim)
    v0 = start / np.linalg.norm(start)
    alphas, betas = [], []
    v_prev, v, beta = np.zeros(dim), v0, 0.0
    prev_theta = math.inf
    steps, breakdown, s = 0, False, None
    for j in range(m):
        w = matvec(v)
        alpha = float(v @ w)
        w -= alpha * v + beta * v_prev
        w -= (v @ w) * v + (v_prev @ w) * v_prev
        alphas.append(alpha)
        beta = float(np.linalg.norm(w))
        betas.append(beta)
        steps = j + 1
        breakdown = beta < 1e-13 * max(1.0, abs(alpha))
        if breakdown or steps == m or steps % cfg.check_every == 0:
            theta, s = _lowest_ritz(np.array(alphas), np.array(betas))
            res_est = abs(beta * s[-1])
            stable = abs(theta - prev_theta) <= cfg.energy_tol * max(1.0, abs(theta))
            prev_theta = theta
            if breakdown or steps == m or (stable and res_est <= 0.1 * residual_tolerance(theta)):
                break
        v_prev, v = v, w / beta
    vec = s[0] * v0
    v_prev, v, beta = np.zeros(dim), v0, 0.0
    for j in range(steps - 1):
        w = matvec(v)
        w -= alphas[j] * v + beta * v_prev
        w -= (v @ w) * v + (v_prev @ w) * v_prev
        beta = betas[j]
        v_prev, v = v, w / beta
        vec += s[j + 1] * v
    return theta, vec, steps, breakdown


def lanczos_ground_state(
    chain: ChainSpec,
    cfg: LanczosConfig | None = None,
    sector: SzSector | None | str = "auto",
) -> GroundStateResult:
    """Lowest eigenpair of H.

    ``sector="auto"`` solves in the S^z = 0 sector, which holds the ground
    state for every anisotropy of an antiferromagnetic ring; pass ``None``
    for the full 2^N space or an explicit :class:`SzSector`.
    """
    cfg = cfg or LanczosConfig()
    if isinstance(sector, str):
        if sector != "auto":
            raise DomainError(f"unknown sector selector {sector!r}")
        sector = enumerate_sector(chain, 0)
    matvec = hamiltonian_matvec(chain, sector, real=True)
    dim = chain.dimension if sector is None else sector.size
    krylov = _krylov_full if cfg.reorthogonalize == "full" else _krylov_two_pass

    rng = np.random.default_rng(cfg.seed)
    start = rng.standard_normal(dim)
    best = (math.inf, None, None)
    total_iter = 0
    for attempt in range(cfg.max_restarts + 1):
        theta, vec, iters, breakdown = krylov(matvec, start, cfg)
        total_iter += iters
        vec /= np.linalg.norm(vec)
        resid = float(np.linalg.norm(matvec(vec) - theta * vec))
        log.debug("lanczos attempt %d: E=%.15f residual=%.2e iters=%d", attempt, theta, resid, iters)
        if resid < best[0]:
            best = (resid, theta, vec)
        if resid <= residual_tolerance(theta):
            break
        if breakdown:
            # invariant subspace without the ground state: reseed
            start = vec + 0.1 * np.random.default_rng(cfg.seed + attempt + 1).standard_normal(dim)
        else:
            start = vec
    resid, theta, vec = best
    if resid > residual_tolerance(theta):
        raise ConvergenceError(
            f"Lanczos did not converge after {cfg.max_restarts} restarts (residual {resid:.3e})",
            best_residual=resid,
        )
    amps = fix_phase(vec.astype(np.complex128))
    state = StateVector(chain, amps / np.linalg.norm(amps), sector)
    return GroundStateResult(float(theta), state, resid, total_iter, sector)


def dense_ground_state(chain: ChainSpec) -> GroundStateResult:
    if chain.n_sites > MAX_DENSE_SITES:
        raise DomainError(f"dense diagonalization refused for N={chain.n_sites} > {MAX_DENSE_SITES}")
    evals, evecs = dense_spectrum(chain, lowest=1)
    state = StateVector(chain, fix_phase(evecs[:, 0].astype(np.complex128)))
    resid = float(np.linalg.norm(apply_hamiltonian(chain, state).amplitudes - evals[0] * state.amplitudes))
    return GroundStateResult(float(evals[0]), state, resid, 0, None)


def bethe_reference_energy_per_site(exchange_j: float = 1.0) -> float:
    """Ground-state energy per site of the infinite isotropic chain, J (1/4 - ln 2)."""
    return exchange_j * (0.25 - math.log(2.0))


def ground_state(chain: ChainSpec, cfg: LanczosConfig | None = None, use_sector: bool = True):
    return lanczos_ground_state(chain, cfg, "auto" if use_sector else None)


def check_ground_state(result: GroundStateResult):
    if abs(result.state.norm() - 1) > 1e-12:
        raise ContractViolation("ground state not normalized")
    if result.residual > residual_tolerance(result.energy):
        raise ContractViolation("ground-state residual above tolerance")
