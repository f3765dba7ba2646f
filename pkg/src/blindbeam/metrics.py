"""Beamformer quality measures."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .array import (ArrayGeometry, CarrierSpec, ImperfectionSpec, imperfect_steering_vector,
                    steering_vector)
from .errors import DimensionMismatch


class Algorithm(str, enum.Enum):
    GBF = "GBF"
    CMA = "CMA"
    MUSIC = "MUSIC"
    ORACLE = "ORACLE"


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    frame_index: int
    algorithm: Algorithm
    normalized_power: float
    true_phi: float
    snr_db: float
    n_gradient_samples: int
    trial_seed: int


def normalized_power(w, a_imp) -> float:
    """
    Fraction of the optimal array gain achieved by ``w``.

    ``|w^H a_I|^2 / (||w||^2 ||a_I||^2)``; equals 1 for ``w`` proportional to
    ``a_I`` with any global phase. ``w`` is expected to be unit norm; the norm
    is divided out anyway so that rounding can't push the ratio above one.
    """
    w = np.asarray(w, dtype=complex)
    a = np.asarray(a_imp, dtype=complex)
    if w.shape != a.shape:
        raise DimensionMismatch(f"weights {w.shape} and steering vector {a.shape} differ")
    aa = np.vdot(a, a).real
    if aa == 0:
        raise ValueError("steering vector is identically zero")
    return float(abs(np.vdot(w, a)) ** 2 / (np.vdot(w, w).real * aa))


def measured_normalized_power(w, samples) -> float:
    """
    Sample-based counterpart of :func:`normalized_power`.

    Output power divided by the total received power, i.e. by the output
    power of the best unit-norm beamformer in a noise-free single-source
    channel with unit-gain elements.
    """
    w = np.asarray(w, dtype=complex)
    r = np.asarray(samples)
    if r.ndim != 2 or r.shape[1] != w.size:
        raise DimensionMismatch(f"samples must have shape (N, {w.size}), got {r.shape}")
    total = np.mean(np.sum(np.abs(r) ** 2, axis=1))
    if total == 0:
        raise ValueError("received samples are identically zero")
    return float(np.mean(np.abs(r @ w.conj()) ** 2) / (np.vdot(w, w).real * total))


def convergence_frames(trace, threshold: float = 0.99) -> int | None:
    """
    First frame index from which every value stays at or above ``threshold``.

    Returns ``None`` when the trace ends below the threshold.
    """
    tr = np.asarray(trace, dtype=float)
    if tr.size == 0:
        raise ValueError("empty trace")
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    below = np.flatnonzero(tr < threshold)
    if below.size == 0:
        return 0
    last = int(below[-1])
    return None if last == tr.size - 1 else last + 1


def first_crossing(trace, threshold: float = 0.99) -> int | None:
    """First frame index at which the trace reaches ``threshold``, or ``None``."""
    hit = np.flatnonzero(np.asarray(trace, dtype=float) >= threshold)
    return int(hit[0]) if hit.size else None


def beam_pattern(w, geom: ArrayGeometry, carrier: CarrierSpec, grid,
                 compensation: ImperfectionSpec | None = None) -> np.ndarray:
    """
    Array gain ``20 log10 |w^H a(phi)|`` over ``grid`` [rad], peak at 0 dB.

    With ``compensation`` the pattern is evaluated against the imperfect
    manifold it describes, i.e. the known calibration terms are removed from
    the weights before looking at the physical azimuth response.
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ValueError("pattern grid is empty")
    w = np.asarray(w, dtype=complex)
    if w.shape != (geom.M,):
        raise DimensionMismatch(f"weights have shape {w.shape}, geometry has {geom.M} elements")
    if compensation is None:
        A = steering_vector(geom, grid, carrier)
    else:
        A = imperfect_steering_vector(geom, grid, carrier, compensation)
    gain = np.abs(A @ w.conj())
    gain = np.maximum(gain, np.finfo(float).tiny)
    db = 20 * np.log10(gain)
    return db - db.max()


def average_normalized_power(traces) -> float:
    """Mean over all frames of all trials, transient included."""
    if isinstance(traces, np.ndarray):
        flat = traces.astype(float).ravel()
    else:
        parts = [np.ravel(np.asarray(t, dtype=float)) for t in traces]
        flat = np.concatenate(parts) if parts else np.empty(0)
    if flat.size == 0:
        raise ValueError("no normalized-power values to average")
    return float(flat.mean())
