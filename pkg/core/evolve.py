"""
core/evolve.py — Coupled-mode propagation

Solves -i dpsi/dz = H psi for ring Hamiltonians. The exact path diagonalizes
H with cyclic Jacobi rotations (vectorized over a batch of matrices) and
applies psi(z) = V diag(exp(i lambda z)) V^T psi(0). A fixed-step RK4
stepper is kept as an independent oracle.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
import structlog

from core.errors import ConfigError, ConvergenceError, StepperError
from core.lattice import Hamiltonian

logger = structlog.get_logger()

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
NORM_TOL = 1e-10
STEPPER_DRIFT_TOL = 1e-6


@dataclass(frozen=True)
class FieldState:
    amplitudes: np.ndarray
    z: float = 0.0

    def __post_init__(self):
        psi = np.array(self.amplitudes, dtype=complex)
        if psi.ndim != 1:
            raise ConfigError("amplitudes must be a vector")
        if not np.all(np.isfinite(psi)):
            raise ConfigError("amplitudes must be finite")
        psi.setflags(write=False)
        object.__setattr__(self, "amplitudes", psi)

    @classmethod
    def single_site(cls, n: int, site: int = 0) -> "FieldState":
        psi = np.zeros(n, dtype=complex)
        psi[site] = 1.0
        return cls(psi, 0.0)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues; column k of eigenvectors pairs with eigenvalue k."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def jacobi_eigh(matrices: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cyclic Jacobi diagonalization of a stack of real symmetric matrices.

    Every (p, q) rotation is applied to the whole batch at once. Stops when
    each matrix's off-diagonal Frobenius norm is <= tol * ||H||_F.
    Returns (eigenvalues (B, n) ascending, eigenvectors (B, n, n)).
    """
    a = np.array(matrices, dtype=float)
    squeeze = a.ndim == 2
    if squeeze:
        a = a[np.newaxis]
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise ConfigError(f"expected (B, n, n) matrices, got {a.shape}")

    batch, n, _ = a.shape
    v = np.broadcast_to(np.eye(n), (batch, n, n)).copy()
    scale = np.sqrt(np.sum(a * a, axis=(1, 2)))
    off_mask = ~np.eye(n, dtype=bool)
    pairs = [(p, q) for p in range(n - 1) for q in range(p + 1, n)]

    def off_norm():
        return np.sqrt(np.sum(np.where(off_mask, a * a, 0.0), axis=(1, 2)))

    sweeps = 0
    while np.any(off_norm() > tol * scale):
        if sweeps >= max_sweeps:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps (n={n})")
        sweeps += 1
        for p, q in pairs:
            apq = a[:, p, q]
            active = apq != 0.0
            if not np.any(active):
                continue
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                theta = (a[:, q, q] - a[:, p, p]) / np.where(active, 2.0 * apq, 1.0)
                t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(active & np.isfinite(t), t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            cc, sc = c[:, np.newaxis], s[:, np.newaxis]
            col_p, col_q = a[:, :, p].copy(), a[:, :, q].copy()
            a[:, :, p] = cc * col_p - sc * col_q
            a[:, :, q] = sc * col_p + cc * col_q
            row_p, row_q = a[:, p, :].copy(), a[:, q, :].copy()
            a[:, p, :] = cc * row_p - sc * row_q
            a[:, q, :] = sc * row_p + cc * row_q
            a[:, p, q] = 0.0
            a[:, q, p] = 0.0

            vp, vq = v[:, :, p].copy(), v[:, :, q].copy()
            v[:, :, p] = cc * vp - sc * vq
            v[:, :, q] = sc * vp + cc * vq

    eigenvalues = np.diagonal(a, axis1=1, axis2=2).copy()
    order = np.argsort(eigenvalues, axis=1, kind="stable")
    eigenvalues = np.take_along_axis(eigenvalues, order, axis=1)
    v = np.take_along_axis(v, order[:, np.newaxis, :], axis=2)
    logger.debug("jacobi_converged", batch=batch, n=n, sweeps=sweeps)

    if squeeze:
        return eigenvalues[0], v[0]
    return eigenvalues, v


def eigendecompose(h: Hamiltonian) -> Spectrum:
    values, vectors = jacobi_eigh(h.matrix)
    return Spectrum(values, vectors)


def _check_distance(z: float) -> float:
    z = float(z)
    if not np.isfinite(z) or z < 0:
        raise ConfigError(f"propagation distance must be finite and >= 0, got {z}")
    return z


def propagate_spectral(spectrum: Spectrum, psi0: FieldState, z: float) -> FieldState:
    """Exact evolution from a precomputed spectrum."""
    z = _check_distance(z)
    v = spectrum.eigenvectors
    phases = np.exp(1j * spectrum.eigenvalues * z)
    psi = v @ (phases * (v.T @ psi0.amplitudes))
    return FieldState(psi, psi0.z + z)


def propagate(h: Hamiltonian, psi0: FieldState, z: float) -> FieldState:
    """psi(z) = V diag(exp(i lambda z)) V^T psi(0)."""
    if psi0.amplitudes.size != h.n:
        raise ConfigError(f"state has {psi0.amplitudes.size} sites, Hamiltonian has {h.n}")
    return propagate_spectral(eigendecompose(h), psi0, z)


def propagate_stepper(h: Hamiltonian, psi0: FieldState, z: float, dz: float) -> FieldState:
    """Classical RK4 on dpsi/dz = i H psi with a fixed step (last step shortened)."""
    z = _check_distance(z)
    if psi0.amplitudes.size != h.n:
        raise ConfigError(f"state has {psi0.amplitudes.size} sites, Hamiltonian has {h.n}")
    if z == 0.0:
        return FieldState(psi0.amplitudes, psi0.z)
    if not dz > 0 or dz > z:
        raise ConfigError(f"step must satisfy 0 < dz <= z, got dz={dz}, z={z}")

    gen = 1j * h.matrix
    psi = psi0.amplitudes.copy()
    norm0 = psi0.norm
    steps = int(np.floor(z / dz + 1e-9))
    remainder = z - steps * dz

    def rk4(state: np.ndarray, step: float) -> np.ndarray:
        k1 = gen @ state
        k2 = gen @ (state + 0.5 * step * k1)
        k3 = gen @ (state + 0.5 * step * k2)
        k4 = gen @ (state + step * k3)
        return state + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    for _ in range(steps):
        psi = rk4(psi, dz)
    if remainder > 1e-15 * z:
        psi = rk4(psi, remainder)

    drift = abs(float(np.sum(np.abs(psi) ** 2)) - norm0)
    if drift > STEPPER_DRIFT_TOL * max(norm0, 1.0):
        raise StepperError(f"norm drift {drift:.3e} exceeds {STEPPER_DRIFT_TOL}; step {dz} too large")
    return FieldState(psi, psi0.z + z)


def intensities(psi: FieldState) -> np.ndarray:
    return np.abs(psi.amplitudes) ** 2


def propagate_ensemble(matrices: np.ndarray, excited_site: int, z: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Output amplitudes of a single-site excitation for a stack of Hamiltonians.

    (B, n, n) -> (amplitudes complex (B, n), eigenvalues (B, n)), using
    psi_j = sum_k V[j,k] exp(i lambda_k z) V[s,k].
    """
    z = _check_distance(z)
    m = np.asarray(matrices, dtype=float)
    if m.ndim == 2:
        m = m[np.newaxis]
    if not 0 <= excited_site < m.shape[1]:
        raise ConfigError(f"excited_site {excited_site} outside [0, {m.shape[1]})")
    values, vectors = jacobi_eigh(m)
    weights = np.exp(1j * values * z) * vectors[:, excited_site, :]
    return np.einsum("bjk,bk->bj", vectors, weights), values


def pairing_mismatch(eigenvalues: np.ndarray) -> np.ndarray:
    """max_k |lambda_k + lambda_{n+1-k}| over ascending eigenvalues (last axis)."""
    ev = np.asarray(eigenvalues, dtype=float)
    return np.max(np.abs(ev + ev[..., ::-1]), axis=-1)


def to_distance(z_normalized: float, c_mean: float) -> float:
    """Physical z for a normalized distance z * c_mean."""
    if c_mean <= 0:
        raise ConfigError(f"c_mean must be positive, got {c_mean}")
    return float(z_normalized) / float(c_mean)
