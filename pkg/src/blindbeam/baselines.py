"""
Comparator beamformers: the clairvoyant optimum, CMA(2,2) and MUSIC steering.

MUSIC scans the *ideal* manifold. Under unknown imperfections the true
response ``a_I`` is not on that manifold, which is exactly the failure mode
the gradient beamformer is meant to avoid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array import ArrayGeometry, CarrierSpec, steering_vector
from .errors import DimensionMismatch
from .signals import QPSK_CONSTELLATION


def oracle_weights(a_imp) -> np.ndarray:
    """Unit-norm optimum ``a_I / ||a_I||``."""
    a = np.asarray(a_imp, dtype=complex)
    norm = np.linalg.norm(a)
    if norm == 0:
        raise ValueError("steering vector is identically zero")
    return a / norm


# --------------------------------------------------------------- CMA ----

def cma_dispersion(constellation=QPSK_CONSTELLATION) -> float:
    """Godard dispersion constant ``E|s|^4 / E|s|^2``."""
    p = np.abs(np.asarray(constellation)) ** 2
    return float(np.mean(p ** 2) / np.mean(p))


@dataclass(frozen=True)
class CmaConfig:
    step_size: float = 0.1
    dispersion: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.step_size) and self.step_size >= 0):
            raise ValueError(f"CMA step_size must be nonnegative, got {self.step_size}")
        if not self.dispersion > 0:
            raise ValueError(f"CMA dispersion must be positive, got {self.dispersion}")


def cma_step(weights, snapshot, cfg: CmaConfig) -> np.ndarray:
    """
    One stochastic-gradient CMA(2,2) update followed by renormalization.

    ``y = w^H r``, ``e = y (|y|^2 - R2)``, ``w <- w - step * conj(e) * r``.
    """
    w = np.asarray(weights, dtype=complex)
    r = np.asarray(snapshot, dtype=complex)
    if w.shape != r.shape or w.ndim != 1:
        raise DimensionMismatch(f"weights {w.shape} and snapshot {r.shape} must be equal-length vectors")
    y = np.vdot(w, r)
    e = y * (abs(y) ** 2 - cfg.dispersion)
    w = w - cfg.step_size * np.conj(e) * r
    return w / np.linalg.norm(w)


def cma_frame(weights, snapshots, cfg: CmaConfig, agc: bool = True) -> np.ndarray:
    """
    Run :func:`cma_step` over the rows of ``snapshots`` in order.

    With ``agc`` the snapshots are first scaled so that their mean total
    power is one; the output of the optimal unit-norm beamformer then has
    unit power and matches the dispersion constant of a unit-modulus
    constellation. The scale is blind (no geometry or channel knowledge).
    """
    w = np.asarray(weights, dtype=complex)
    x = np.asarray(snapshots, dtype=complex)
    if x.ndim != 2 or x.shape[1] != w.size:
        raise DimensionMismatch(f"snapshots must have shape (K, {w.size}), got {x.shape}")
    if agc:
        total = np.mean(np.sum(np.abs(x) ** 2, axis=1))
        if total > 0:
            x = x / np.sqrt(total)
    for r in x:
        w = cma_step(w, r, cfg)
    return w


# -------------------------------------------------------------- MUSIC ----

@dataclass(frozen=True, eq=False)
class CovarianceEstimate:
    matrix: np.ndarray
    sample_count: int


def sample_covariance(snapshots) -> CovarianceEstimate:
    """``R = (1/K) sum_n r[n] r[n]^H`` over the rows of ``snapshots``."""
    x = np.asarray(snapshots, dtype=complex)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("need at least one snapshot")
    R = x.T @ x.conj() / x.shape[0]
    R = 0.5 * (R + R.conj().T)
    return CovarianceEstimate(R, x.shape[0])


def _noise_subspace(cov: CovarianceEstimate, n_sources: int = 1) -> np.ndarray:
    R = np.asarray(cov.matrix)
    M = R.shape[0]
    if R.shape != (M, M):
        raise DimensionMismatch(f"covariance must be square, got {R.shape}")
    if M < 2:
        raise ValueError("MUSIC needs at least two elements")
    scale = max(np.max(np.abs(R)), np.finfo(float).tiny)
    if np.max(np.abs(R - R.conj().T)) > 1e-10 * scale:
        raise ValueError("covariance matrix is not Hermitian")
    _, vecs = np.linalg.eigh(0.5 * (R + R.conj().T))
    return vecs[:, :M - n_sources]


def music_spectrum(cov: CovarianceEstimate, geom: ArrayGeometry, carrier: CarrierSpec,
                   grid, steering: np.ndarray | None = None) -> np.ndarray:
    """
    Single-source MUSIC pseudo-spectrum ``1 / ||E_n^H a(phi)||^2``.

    ``E_n`` holds the ``M - 1`` eigenvectors of the smallest eigenvalues;
    ``a(phi)`` is the ideal manifold evaluated on ``grid`` [rad]. Pass the
    ``(G, M)`` matrix ``steering_vector(geom, grid, carrier)`` as
    ``steering`` to skip recomputing it when scanning many frames.
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ValueError("MUSIC grid is empty")
    En = _noise_subspace(cov)
    if En.shape[0] != geom.M:
        raise DimensionMismatch(f"covariance is {En.shape[0]}x{En.shape[0]}, geometry has {geom.M} elements")
    A = steering_vector(geom, grid, carrier) if steering is None else steering
    if A.shape != (grid.size, geom.M):
        raise DimensionMismatch(f"steering matrix has shape {A.shape}, expected ({grid.size}, {geom.M})")
    den = np.sum(np.abs(A.conj() @ En) ** 2, axis=1)
    return 1.0 / np.maximum(den, np.finfo(float).tiny)


def _is_full_circle(grid: np.ndarray) -> bool:
    if grid.size < 3:
        return False
    step = np.diff(grid)
    if not np.allclose(step, step[0]):
        return False
    return np.isclose(grid[-1] + step[0] - grid[0], 2 * np.pi, atol=1e-9)


def spectrum_peak(spectrum, grid, circular: bool | None = None) -> float:
    """
    Peak location with parabolic interpolation on the dB spectrum.

    ``circular`` wraps the neighbors of an edge peak; by default it is
    inferred from whether the uniform grid spans a full turn.
    """
    p = 10 * np.log10(np.asarray(spectrum, dtype=float))
    grid = np.asarray(grid, dtype=float)
    if circular is None:
        circular = _is_full_circle(grid)
    k = int(np.argmax(p))
    n = p.size
    if n < 3 or (not circular and k in (0, n - 1)):
        return float(grid[k])
    left, right = p[(k - 1) % n], p[(k + 1) % n]
    curv = left - 2 * p[k] + right
    if curv >= 0:
        return float(grid[k])
    delta = np.clip(0.5 * (left - right) / curv, -0.5, 0.5)
    step = grid[1] - grid[0]
    phi = grid[k] + delta * step
    return float(np.mod(phi, 2 * np.pi)) if circular else float(phi)


def music_estimate(cov: CovarianceEstimate, geom: ArrayGeometry, carrier: CarrierSpec, grid) -> float:
    """AoA estimate [rad] from the MUSIC pseudo-spectrum peak."""
    grid = np.asarray(grid, dtype=float)
    return spectrum_peak(music_spectrum(cov, geom, carrier, grid), grid)


def music_weights(phi_hat: float, geom: ArrayGeometry, carrier: CarrierSpec) -> np.ndarray:
    """Conventional steering ``a(phi_hat) / sqrt(M)`` on the ideal manifold."""
    return steering_vector(geom, phi_hat, carrier) / np.sqrt(geom.M)


def default_music_grid(geom: ArrayGeometry, step_deg: float = 0.1) -> np.ndarray:
    """``[0, 180)`` degrees for arrays on the x-axis (mirror ambiguity), ``[0, 360)`` otherwise."""
    collinear_x = np.allclose(geom.positions[:, 1], 0.0)
    stop = 180.0 if collinear_x else 360.0
    return np.deg2rad(np.arange(0.0, stop, step_deg))
