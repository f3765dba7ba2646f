"""
Planar array geometries and their steering vectors.

Element positions are stored in meters relative to the array phase center,
which is the coordinate origin. A plane wave arriving from azimuth ``phi``
(measured from the x-axis) reaches element ``i`` with delay
``tau_i = -(x_i cos(phi) + y_i sin(phi)) / c`` and the element response is
``exp(-j 2 pi f_c tau_i)``.

Steering vectors are plain complex ``numpy`` arrays of shape ``(M,)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class CarrierSpec:
    """Carrier frequency ``f_c`` [Hz] and propagation speed ``c`` [m/s]."""

    f_c: float = 2e9
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not (np.isfinite(self.f_c) and self.f_c > 0):
            raise ValueError(f"carrier frequency must be positive, got {self.f_c}")
        if not (np.isfinite(self.c) and self.c > 0):
            raise ValueError(f"propagation speed must be positive, got {self.c}")

    @property
    def wavelength(self) -> float:
        return self.c / self.f_c


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Element positions of a planar array, shape ``(M, 2)`` in meters."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] < 1:
            raise ValueError(f"positions must have shape (M, 2) with M >= 1, got {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        if pos.shape[0] > 1 and len(np.unique(pos, axis=0)) != pos.shape[0]:
            raise ValueError("two elements share identical coordinates")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def element_count(self) -> int:
        return self.positions.shape[0]

    # short alias used throughout the numerics
    @property
    def M(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True, eq=False)
class ImperfectionSpec:
    """
    Static per-element array imperfections.

    Parameters
    ----------
    phase_offsets : array_like, shape (M,)
        Additional phase ``alpha_i`` [rad] injected into each element's
        response (mutual coupling / miscalibration).
    gain_factors : array_like, shape (M,), optional
        Positive amplitude factors; all ones when omitted.
    position_jitter : array_like, shape (M, 2), optional
        Position errors [m] added to the nominal element positions.
    """

    phase_offsets: np.ndarray
    gain_factors: np.ndarray = field(default=None)
    position_jitter: np.ndarray = field(default=None)

    def __post_init__(self):
        alpha = np.array(self.phase_offsets, dtype=float).reshape(-1)
        M = alpha.size
        gains = np.ones(M) if self.gain_factors is None else np.array(self.gain_factors, dtype=float)
        jitter = (np.zeros((M, 2)) if self.position_jitter is None
                  else np.array(self.position_jitter, dtype=float))
        if gains.shape != (M,):
            raise DimensionMismatch(f"gain_factors has shape {gains.shape}, expected ({M},)")
        if jitter.shape != (M, 2):
            raise DimensionMismatch(f"position_jitter has shape {jitter.shape}, expected ({M}, 2)")
        if not np.all(np.isfinite(alpha)):
            raise ValueError("phase_offsets must be finite")
        if not np.all(gains > 0):
            raise ValueError("gain_factors must be positive")
        if not np.all(np.isfinite(jitter)):
            raise ValueError("position_jitter must be finite")
        for name, arr in (("phase_offsets", alpha), ("gain_factors", gains),
                          ("position_jitter", jitter)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def element_count(self) -> int:
        return self.phase_offsets.size

    @classmethod
    def identity(cls, M: int) -> "ImperfectionSpec":
        """No imperfections: reproduces the ideal manifold exactly."""
        return cls(np.zeros(M))

    @classmethod
    def uniform_phase(cls, M: int, half_range: float = np.pi / 2, seed=None) -> "ImperfectionSpec":
        """Phase offsets drawn i.i.d. uniform on ``[-half_range, half_range]``."""
        rng = np.random.default_rng(seed)
        return cls(rng.uniform(-half_range, half_range, M))


def make_ula(M: int, spacing: float) -> ArrayGeometry:
    """Uniform linear array along the x-axis, centered on the origin."""
    if int(M) != M or M < 1:
        raise ValueError(f"ULA needs M >= 1 elements, got {M}")
    if not spacing > 0:
        raise ValueError(f"ULA spacing must be positive, got {spacing}")
    x = (np.arange(M) - (M - 1) / 2) * spacing
    return ArrayGeometry(np.column_stack([x, np.zeros(M)]))


def make_uca(M: int, inter_element_distance: float) -> ArrayGeometry:
    """
    Uniform circular array centered on the origin.

    The radius ``R = d / (2 sin(pi / M))`` makes the chord between adjacent
    elements equal to ``d``; element ``i`` sits at angle ``2 pi i / M``.
    """
    if int(M) != M or M < 2:
        raise ValueError(f"UCA needs M >= 2 elements, got {M}")
    if not inter_element_distance > 0:
        raise ValueError(f"UCA inter-element distance must be positive, got {inter_element_distance}")
    radius = inter_element_distance / (2 * np.sin(np.pi / M))
    ang = 2 * np.pi * np.arange(M) / M
    return ArrayGeometry(np.column_stack([radius * np.cos(ang), radius * np.sin(ang)]))


def _delays(positions: np.ndarray, phi, c: float) -> np.ndarray:
    # phi may be scalar -> (M,) or an array of shape (G,) -> (G, M)
    phi = np.asarray(phi, dtype=float)
    proj = np.multiply.outer(np.cos(phi), positions[:, 0]) + np.multiply.outer(np.sin(phi), positions[:, 1])
    return -proj / c


def element_delays(geom: ArrayGeometry, phi: float, carrier: CarrierSpec) -> np.ndarray:
    """Plane-wave delay of each element relative to the phase center [s]."""
    return _delays(geom.positions, phi, carrier.c)


def steering_vector(geom: ArrayGeometry, phi, carrier: CarrierSpec) -> np.ndarray:
    """
    Ideal array response ``a(phi)``.

    Parameters
    ----------
    geom : ArrayGeometry
    phi : float or ndarray
        Azimuth [rad]. An array of ``G`` angles yields a ``(G, M)`` matrix,
        one steering vector per row.
    carrier : CarrierSpec

    Returns
    -------
    ndarray, complex
        Unit-modulus entries ``exp(-j 2 pi f_c tau_i(phi))``.
    """
    phase = -2 * np.pi * carrier.f_c * _delays(geom.positions, phi, carrier.c)
    return np.exp(1j * phase)


def imperfect_steering_vector(geom: ArrayGeometry, phi, carrier: CarrierSpec,
                              imp: ImperfectionSpec) -> np.ndarray:
    """
    Array response ``a_I(phi)`` including unknown imperfections.

    Entry ``i`` is ``g_i exp(-j 2 pi f_c tau~_i(phi) + j alpha_i)`` where
    ``tau~`` uses the jittered element positions. Vectorized over ``phi``
    like :func:`steering_vector`.
    """
    if imp.element_count != geom.M:
        raise DimensionMismatch(
            f"imperfection spec has {imp.element_count} elements, geometry has {geom.M}")
    positions = geom.positions + imp.position_jitter
    phase = -2 * np.pi * carrier.f_c * _delays(positions, phi, carrier.c) + imp.phase_offsets
    return imp.gain_factors * np.exp(1j * phase)
