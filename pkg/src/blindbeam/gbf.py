"""
Gradient-based blind beamformer.

The weights are constrained to equal amplitude, ``w_i = exp(j theta_i) / sqrt(M)``,
so every update is a pure phase rotation and ``||w|| = 1`` holds by
construction. Each frame the beamformer estimates the output power over its
first ``N`` snapshots, takes one gradient-ascent step in the phases, and then
combines the whole frame with the updated weights. No reference signal and no
array geometry are used.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatch
from .signals import SnapshotFrame

STEP_MODES = ("normalized", "first-frame", "fixed")


@dataclass(frozen=True, eq=False)
class WeightVector:
    phases: np.ndarray

    def __post_init__(self):
        ph = np.array(self.phases, dtype=float).reshape(-1)
        ph.setflags(write=False)
        object.__setattr__(self, "phases", ph)

    @property
    def M(self) -> int:
        return self.phases.size

    @property
    def weights(self) -> np.ndarray:
        """Complex weights ``exp(j theta) / sqrt(M)``."""
        return np.exp(1j * self.phases) / np.sqrt(self.M)


@dataclass(frozen=True)
class GbfConfig:
    """
    Parameters
    ----------
    mu : float
        Step size. Its meaning depends on ``step_mode``:

        - ``"normalized"``: the step on frame ``k`` is ``mu / P_k`` where
          ``P_k`` is that frame's power estimate (scale invariant).
        - ``"first-frame"``: ``mu / P_0`` with ``P_0`` from the first frame.
        - ``"fixed"``: ``mu`` as is.
    gradient_samples : int
        ``N``, snapshots used for the power estimate and gradient.
    frame_length : int
        ``N'``, snapshots per frame; ``N <= N'``.
    """

    mu: float = 1.0
    gradient_samples: int = 8
    frame_length: int = 256
    step_mode: str = "normalized"

    def __post_init__(self):
        if not (np.isfinite(self.mu) and self.mu >= 0):
            raise ValueError(f"mu must be finite and nonnegative, got {self.mu}")
        if int(self.gradient_samples) != self.gradient_samples or self.gradient_samples < 1:
            raise ValueError(f"gradient_samples must be a positive integer, got {self.gradient_samples}")
        if self.gradient_samples > self.frame_length:
            raise ValueError(
                f"gradient_samples ({self.gradient_samples}) exceeds frame_length ({self.frame_length})")
        if self.step_mode not in STEP_MODES:
            raise ValueError(f"step_mode must be one of {STEP_MODES}, got {self.step_mode!r}")


@dataclass(frozen=True)
class BeamformerState:
    weights: WeightVector
    frame_counter: int = 0
    last_power: float = 0.0
    # power estimate of the first frame, used by the "first-frame" step mode
    first_power: float | None = None


def init_weights(M: int, random: bool = False, seed=None) -> WeightVector:
    """
    Initial weights: all phases zero (``w_i = 1/sqrt(M)``) unless ``random``,
    in which case phases are drawn uniformly on ``[0, 2 pi)``.
    """
    if int(M) != M or M < 1:
        raise ValueError(f"M must be a positive integer, got {M}")
    if random:
        return WeightVector(np.random.default_rng(seed).uniform(0.0, 2 * np.pi, int(M)))
    return WeightVector(np.zeros(int(M)))


def _as_samples(samples, M: int) -> np.ndarray:
    r = np.asarray(samples)
    if r.ndim != 2 or r.shape[1] != M:
        raise DimensionMismatch(f"samples must have shape (N, {M}), got {r.shape}")
    return r


def beamform_output(w, samples) -> np.ndarray:
    """``y[n] = w^H r[n]`` for each row of ``samples``. ``w`` may be a WeightVector or complex array."""
    wc = w.weights if isinstance(w, WeightVector) else np.asarray(w)
    r = _as_samples(samples, wc.size)
    return r @ wc.conj()


def estimate_power(y) -> float:
    """Mean of ``|y[n]|**2``."""
    y = np.asarray(y)
    if y.size == 0:
        raise ValueError("cannot estimate power of an empty output")
    return float(np.mean(y.real ** 2 + y.imag ** 2))


def power_gradient(samples, w: WeightVector, y) -> np.ndarray:
    """
    Derivative of the estimated output power with respect to each phase.

    With ``y = w^H r`` and ``w_i = exp(j theta_i)/sqrt(M)``::

        dP/dtheta_i = 2/(N sqrt(M)) * sum_n Im(exp(-j theta_i) r_i[n] conj(y[n]))

    which vanishes at every stationary point of the power, in particular at
    ``w = a_I exp(j gamma) / sqrt(M)``.
    """
    r = _as_samples(samples, w.M)
    y = np.asarray(y)
    if y.shape != (r.shape[0],):
        raise DimensionMismatch(f"output has shape {y.shape}, expected ({r.shape[0]},)")
    terms = np.exp(-1j * w.phases) * r * y.conj()[:, None]
    return 2.0 / (r.shape[0] * np.sqrt(w.M)) * terms.imag.sum(axis=0)


def effective_step(state: BeamformerState, cfg: GbfConfig) -> float:
    """Step actually applied to the gradient, after power normalization."""
    if cfg.step_mode == "fixed":
        return cfg.mu
    ref = state.last_power if cfg.step_mode == "normalized" else state.first_power
    # an all-zero frame has zero gradient as well; do not divide by zero
    if not ref:
        return 0.0
    return cfg.mu / ref


def update_weights(state: BeamformerState, grad, cfg: GbfConfig) -> BeamformerState:
    """One ascent step ``theta <- theta + step * grad``; advances the frame counter."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != (state.weights.M,):
        raise DimensionMismatch(f"gradient has shape {grad.shape}, expected ({state.weights.M},)")
    if not np.all(np.isfinite(grad)):
        raise ValueError("gradient contains non-finite values")
    step = effective_step(state, cfg)
    phases = state.weights.phases + step * grad
    return replace(state, weights=WeightVector(phases), frame_counter=state.frame_counter + 1)


def process_frame(state: BeamformerState, frame: SnapshotFrame | np.ndarray,
                  cfg: GbfConfig) -> tuple[np.ndarray, BeamformerState]:
    """
    Run one adaptation cycle on a frame.

    The first ``N`` snapshots drive one gradient step; the full frame is then
    combined with the updated weights.

    Returns
    -------
    outputs : ndarray, shape (N',)
    new_state : BeamformerState
    """
    r = frame.samples if isinstance(frame, SnapshotFrame) else np.asarray(frame)
    r = _as_samples(r, state.weights.M)
    N = cfg.gradient_samples
    if r.shape[0] < N:
        raise DimensionMismatch(f"frame has {r.shape[0]} snapshots, need at least N = {N}")
    head = r[:N]
    y = beamform_output(state.weights, head)
    power = estimate_power(y)
    grad = power_gradient(head, state.weights, y)
    first = power if state.first_power is None else state.first_power
    state = replace(state, last_power=power, first_power=first)
    state = update_weights(state, grad, cfg)
    return beamform_output(state.weights, r), state


def new_state(M: int, random: bool = False, seed=None) -> BeamformerState:
    return BeamformerState(init_weights(M, random=random, seed=seed))
