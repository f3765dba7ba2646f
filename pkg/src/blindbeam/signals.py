"""
Baseband waveform and channel synthesis.

QPSK symbols are shaped with a unit-energy root-raised-cosine filter, then
impressed on the (possibly imperfect) array manifold with circular white
Gaussian noise::

    r[n] = s[n] a_I(phi) + eta[n]

The angle of arrival evolves frame by frame as a Gaussian random walk.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import DimensionMismatch

QPSK_CONSTELLATION = np.exp(1j * (np.pi / 4 + np.pi / 2 * np.arange(4)))


@dataclass(frozen=True)
class WaveformConfig:
    samples_per_symbol: int = 8
    rrc_rolloff: float = 0.35
    rrc_span_symbols: int = 10

    def __post_init__(self):
        if int(self.samples_per_symbol) != self.samples_per_symbol or self.samples_per_symbol < 1:
            raise ValueError(f"samples_per_symbol must be a positive integer, got {self.samples_per_symbol}")
        if not 0 < self.rrc_rolloff <= 1:
            raise ValueError(f"rrc_rolloff must lie in (0, 1], got {self.rrc_rolloff}")
        span = self.rrc_span_symbols
        if int(span) != span or span < 2 or span % 2:
            raise ValueError(f"rrc_span_symbols must be a positive even integer, got {span}")

    @property
    def n_taps(self) -> int:
        return self.rrc_span_symbols * self.samples_per_symbol + 1

    @property
    def group_delay(self) -> int:
        """Delay of the filter peak, in samples."""
        return (self.n_taps - 1) // 2


@dataclass(frozen=True)
class NoiseSpec:
    """
    Per-element AWGN level.

    ``snr_db = inf`` gives a noise-free channel. ``signal_power`` is the
    average per-element signal power the SNR is referenced to.
    """

    snr_db: float
    signal_power: float = 1.0

    @property
    def variance(self) -> float:
        if np.isposinf(self.snr_db):
            return 0.0
        return self.signal_power / 10 ** (self.snr_db / 10)


@dataclass(frozen=True, eq=False)
class AoATrajectory:
    initial_phi: float
    step_std: float
    phis: np.ndarray


@dataclass(frozen=True, eq=False)
class SnapshotFrame:
    """``samples`` has shape ``(N', M)``; row ``n`` is the snapshot ``r[n]``."""

    samples: np.ndarray
    true_phi: float
    frame_index: int = 0

    @property
    def n_elements(self) -> int:
        return self.samples.shape[1]


def gen_qpsk(n_symbols: int, seed) -> np.ndarray:
    """Uniform i.i.d. unit-modulus QPSK symbols (Gray ordering is irrelevant here)."""
    if int(n_symbols) != n_symbols or n_symbols < 1:
        raise ValueError(f"n_symbols must be a positive integer, got {n_symbols}")
    rng = np.random.default_rng(seed)
    return QPSK_CONSTELLATION[rng.integers(0, 4, int(n_symbols))]


def rrc_taps(cfg: WaveformConfig) -> np.ndarray:
    """
    Root-raised-cosine impulse response, normalized to unit energy.

    Sampled at ``samples_per_symbol`` points per symbol over
    ``rrc_span_symbols`` symbols, symmetric about the center tap.
    """
    sps, beta = cfg.samples_per_symbol, cfg.rrc_rolloff
    t = (np.arange(cfg.n_taps) - cfg.group_delay) / sps
    h = np.empty_like(t)
    for k, tk in enumerate(t):
        if np.isclose(tk, 0.0):
            h[k] = 1 - beta + 4 * beta / np.pi
        elif np.isclose(abs(4 * beta * tk), 1.0):
            h[k] = beta / np.sqrt(2) * ((1 + 2 / np.pi) * np.sin(np.pi / (4 * beta))
                                        + (1 - 2 / np.pi) * np.cos(np.pi / (4 * beta)))
        else:
            num = np.sin(np.pi * tk * (1 - beta)) + 4 * beta * tk * np.cos(np.pi * tk * (1 + beta))
            h[k] = num / (np.pi * tk * (1 - (4 * beta * tk) ** 2))
    return h / np.linalg.norm(h)


def pulse_shape(symbols, cfg: WaveformConfig = WaveformConfig()) -> np.ndarray:
    """
    Upsample ``symbols`` and filter with the RRC pulse.

    The output has ``(n - 1) * sps + n_taps`` samples: the peak of symbol
    ``m`` lands on sample ``m * sps + cfg.group_delay``.
    """
    symbols = np.asarray(symbols)
    if symbols.ndim != 1 or symbols.size == 0:
        raise ValueError("symbol stream must be a non-empty 1-D sequence")
    sps = cfg.samples_per_symbol
    up = np.zeros((symbols.size - 1) * sps + 1, dtype=complex)
    up[::sps] = symbols
    return np.convolve(up, rrc_taps(cfg))


def matched_filter(samples: np.ndarray, cfg: WaveformConfig = WaveformConfig()) -> np.ndarray:
    """
    Filter each column of ``samples`` with the (real, symmetric) RRC pulse.

    Output is aligned with the input: sample ``n`` of the result is the
    matched-filter output centered on input sample ``n``.
    """
    h = rrc_taps(cfg)
    x = np.asarray(samples)
    x2 = x.reshape(x.shape[0], -1)
    out = np.stack([np.convolve(x2[:, i], h)[cfg.group_delay:cfg.group_delay + x.shape[0]]
                    for i in range(x2.shape[1])], axis=1)
    return out.reshape(x.shape)


ManifoldSource = Union[Callable[[float], np.ndarray], np.ndarray]


def synth_frame(baseband, phi: float, manifold: ManifoldSource, noise: NoiseSpec,
                seed, frame_index: int = 0) -> SnapshotFrame:
    """
    Received snapshots for one frame.

    Parameters
    ----------
    baseband : array_like, shape (N',)
        Transmitted baseband samples ``s[n]`` for this frame.
    phi : float
        True angle of arrival [rad].
    manifold : callable or ndarray
        Either ``phi -> a_I(phi)`` or a precomputed steering vector.
    noise : NoiseSpec
    seed : int or SeedSequence
        Seeds the noise draw.
    """
    s = np.asarray(baseband)
    if s.ndim != 1:
        raise DimensionMismatch(f"baseband must be 1-D, got shape {s.shape}")
    a = np.asarray(manifold(phi) if callable(manifold) else manifold)
    if a.ndim != 1 or a.size < 1:
        raise DimensionMismatch(f"steering vector must be a non-empty 1-D array, got shape {a.shape}")
    samples = np.outer(s, a)
    var = noise.variance
    if var > 0:
        rng = np.random.default_rng(seed)
        eta = rng.standard_normal((s.size, a.size)) + 1j * rng.standard_normal((s.size, a.size))
        samples = samples + np.sqrt(var / 2) * eta
    return SnapshotFrame(samples, float(phi), int(frame_index))


def random_walk_aoa(initial_phi: float, step_std: float, n_frames: int, seed) -> AoATrajectory:
    """``phi[0] = initial_phi``, then i.i.d. ``Normal(0, step_std**2)`` increments."""
    if int(n_frames) != n_frames or n_frames < 1:
        raise ValueError(f"n_frames must be a positive integer, got {n_frames}")
    if not step_std >= 0:
        raise ValueError(f"step_std must be nonnegative, got {step_std}")
    rng = np.random.default_rng(seed)
    steps = rng.normal(0.0, step_std, int(n_frames) - 1) if step_std > 0 else np.zeros(int(n_frames) - 1)
    phis = initial_phi + np.concatenate([[0.0], np.cumsum(steps)])
    return AoATrajectory(float(initial_phi), float(step_std), phis)
