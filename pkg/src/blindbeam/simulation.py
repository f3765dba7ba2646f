"""
Monte Carlo trial engine.

One trial draws its imperfections, AoA trajectory, symbols and noise from a
seed derived from the master seed and the trial index, synthesizes every
frame once, and runs each configured algorithm over the same frames.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import baselines, gbf
from .array import ImperfectionSpec, imperfect_steering_vector, steering_vector
from .config import GridPoint, ScenarioConfig
from .metrics import Algorithm, TrialRecord, normalized_power
from .signals import (NoiseSpec, WaveformConfig, gen_qpsk, matched_filter, pulse_shape,
                      random_walk_aoa, synth_frame)

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_SHARED_SALT = 0x5EED_1A7E_C0FF_EE00


def splitmix64(x: int) -> int:
    """One step of the SplitMix64 generator (Steele, Lea & Flood)."""
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def trial_seed(master_seed: int, trial: int) -> int:
    """Seed of trial ``trial``: the ``trial``-th output of a SplitMix64 stream."""
    return splitmix64((master_seed + trial * _GOLDEN) & _MASK64)


@dataclass
class TrialResult:
    trial: int
    seed: int
    point: GridPoint
    phis: np.ndarray
    imperfection: ImperfectionSpec
    traces: dict = field(default_factory=dict)
    final_weights: dict = field(default_factory=dict)

    def records(self) -> list[TrialRecord]:
        out = []
        for alg, trace in self.traces.items():
            for k, value in enumerate(trace):
                out.append(TrialRecord(self.trial, k, alg, float(value), float(self.phis[k]),
                                       self.point.snr_db, self.point.gradient_samples, self.seed))
        return out


def draw_imperfection(cfg: ScenarioConfig, M: int, seed) -> ImperfectionSpec:
    imp = cfg.imperfection
    if imp.mode == "none":
        return ImperfectionSpec.identity(M)
    rng = np.random.default_rng(seed)
    if imp.mode == "explicit":
        alpha = np.asarray(imp.phase_offsets_rad, dtype=float)
    else:
        alpha = rng.uniform(-imp.range_rad, imp.range_rad, M)
    gains = 10 ** (rng.normal(0.0, imp.gain_std_db, M) / 20) if imp.gain_std_db > 0 else None
    jitter = rng.normal(0.0, imp.jitter_std_m, (M, 2)) if imp.jitter_std_m > 0 else None
    return ImperfectionSpec(alpha, gains, jitter)


def run_trial(cfg: ScenarioConfig, point: GridPoint, trial: int,
              master_seed: int | None = None) -> TrialResult:
    """Simulate one trial of one grid point for every configured algorithm."""
    master = cfg.mc.master_seed if master_seed is None else master_seed
    seed = trial_seed(master, trial)
    imp_ss, aoa_ss, sym_ss, noise_ss, init_ss = np.random.SeedSequence(seed).spawn(5)

    geom = cfg.geometry()
    carrier = cfg.carrier_spec
    M = geom.M
    n_frames = cfg.mc.frames
    n_prime = cfg.frame_length
    sig = cfg.signal
    wf = WaveformConfig(sig.sps, sig.rolloff, sig.span_symbols)

    if cfg.imperfection.seed_policy == "shared":
        imp = draw_imperfection(cfg, M, splitmix64(master ^ _SHARED_SALT))
    else:
        imp = draw_imperfection(cfg, M, imp_ss)

    aoa_rng = np.random.default_rng(aoa_ss)
    if cfg.aoa.initial_range_deg is not None:
        lo, hi = cfg.aoa.initial_range_deg
        phi0 = np.deg2rad(aoa_rng.uniform(lo, hi))
    else:
        phi0 = np.deg2rad(cfg.aoa.initial_deg)
    traj = random_walk_aoa(phi0, np.deg2rad(point.walk_std_deg), n_frames, aoa_rng)

    # guard symbols on both sides keep every frame clear of the filter transients
    guard = sig.span_symbols
    symbols = gen_qpsk(n_frames * sig.frame_symbols + 2 * guard, sym_ss)
    shaped = pulse_shape(symbols, wf) * np.sqrt(sig.sps)
    start = guard * sig.sps + wf.group_delay
    baseband = shaped[start:start + n_frames * n_prime]
    noise = NoiseSpec(point.snr_db, float(np.mean(np.abs(baseband) ** 2)))

    def manifold(phi):
        return imperfect_steering_vector(geom, phi, carrier, imp)

    noise_seeds = noise_ss.spawn(n_frames)
    frames = [synth_frame(baseband[k * n_prime:(k + 1) * n_prime], traj.phis[k], manifold,
                          noise, noise_seeds[k], k) for k in range(n_frames)]
    a_true = [manifold(phi) for phi in traj.phis]

    result = TrialResult(trial, seed, point, traj.phis, imp)
    bf = cfg.beamformer
    N = point.gradient_samples
    for name in bf.algorithms:
        alg = Algorithm(name)
        trace = np.empty(n_frames)
        if alg is Algorithm.GBF:
            gcfg = gbf.GbfConfig(bf.mu, N, n_prime, bf.step_mode)
            state = gbf.new_state(M, random=bf.init == "random", seed=init_ss)
            for k, frame in enumerate(frames):
                _, state = gbf.process_frame(state, frame, gcfg)
                trace[k] = normalized_power(state.weights.weights, a_true[k])
            w = state.weights.weights
        elif alg is Algorithm.CMA:
            ccfg = baselines.CmaConfig(bf.cma_step, baselines.cma_dispersion())
            received = np.vstack([f.samples for f in frames])
            filtered = matched_filter(received, wf)
            n_sym = max(1, math.ceil(N / sig.sps))
            offsets = np.arange(n_sym) * sig.sps
            w = np.full(M, 1 / np.sqrt(M), dtype=complex)
            for k in range(n_frames):
                w = baselines.cma_frame(w, filtered[k * n_prime + offsets], ccfg)
                trace[k] = normalized_power(w, a_true[k])
        elif alg is Algorithm.MUSIC:
            grid = baselines.default_music_grid(geom, bf.music_grid_deg)
            A = steering_vector(geom, grid, carrier)
            for k, frame in enumerate(frames):
                cov = baselines.sample_covariance(frame.samples)
                spec = baselines.music_spectrum(cov, geom, carrier, grid, steering=A)
                w = baselines.music_weights(baselines.spectrum_peak(spec, grid), geom, carrier)
                trace[k] = normalized_power(w, a_true[k])
        else:
            for k in range(n_frames):
                w = baselines.oracle_weights(a_true[k])
                trace[k] = normalized_power(w, a_true[k])
        result.traces[alg] = trace
        result.final_weights[alg] = w
    return result


def _run_one(args):
    cfg, point, trial, master = args
    return run_trial(cfg, point, trial, master)


def run_trials(cfg: ScenarioConfig, point: GridPoint, trials: int | None = None,
               master_seed: int | None = None, workers: int = 1) -> list[TrialResult]:
    """Run trials ``0 .. trials-1``; results come back in trial order regardless of ``workers``."""
    n = cfg.mc.trials if trials is None else trials
    jobs = [(cfg, point, t, master_seed) for t in range(n)]
    if workers <= 1 or n == 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs))
