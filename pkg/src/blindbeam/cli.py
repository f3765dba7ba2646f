"""
Command-line scenario runner.

::

    blindbeam simulate --config fig2_uca.toml --out frames.csv [--seed N] [--workers N]
    blindbeam sweep    --config fig4.toml     --out sweep.csv
    blindbeam pattern  --config fig3.toml     --out pattern.csv

Exit status: 0 on success, 2 for configuration errors, 3 for dimension
errors, 4 for I/O errors.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import SWEEP_HOME, SWEEPABLE, ScenarioConfig, grid_points, load_config, sweep_points
from .errors import ConfigError, DimensionMismatch
from .metrics import Algorithm, average_normalized_power, beam_pattern, convergence_frames
from .simulation import run_trial, run_trials

log = logging.getLogger("blindbeam")

FRAME_HEADER = ("trial", "frame", "algorithm", "normalized_power", "true_phi_deg", "snr_db",
                "n_samples", "seed")
SWEEP_HEADER = ("algorithm", "sweep_key", "sweep_value", "avg_normalized_power",
                "mean_convergence_frames", "trials")
PATTERN_HEADER = ("algorithm", "angle_deg", "gain_db")

EXIT_CONFIG, EXIT_DIMENSION, EXIT_IO = 2, 3, 4


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, Algorithm):
        return value.value
    if isinstance(value, (float, np.floating)):
        return "%.10g" % value
    return str(value)


def write_csv(path, header, rows) -> None:
    """Write rows atomically: a temp file in the target directory, then rename."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(fmt(v) for v in row) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def mean_convergence(traces, threshold: float) -> float:
    """Mean convergence frame over trials; a trial that never settles counts as its trace length."""
    frames = []
    for tr in traces:
        k = convergence_frames(tr, threshold)
        frames.append(len(tr) if k is None else k)
    return float(np.mean(frames))


def _with_seed(cfg: ScenarioConfig, seed: int | None) -> ScenarioConfig:
    if seed is None:
        return cfg
    return replace(cfg, mc=replace(cfg.mc, master_seed=seed))


def run_simulate(cfg: ScenarioConfig, out, seed: int | None = None, workers: int = 1) -> list:
    """Per-frame normalized power of every algorithm for every grid point and trial."""
    cfg = _with_seed(cfg, seed)
    rows, summary = [], []
    for point in grid_points(cfg):
        log.info("simulating %s", point)
        results = run_trials(cfg, point, workers=workers)
        for res in results:
            n_frames = len(res.phis)
            for k in range(n_frames):
                phi_deg = np.rad2deg(res.phis[k])
                for alg, trace in res.traces.items():
                    rows.append((res.trial, k, alg, trace[k], phi_deg, point.snr_db,
                                 point.gradient_samples, res.seed))
        for alg in results[0].traces:
            traces = [r.traces[alg] for r in results]
            summary.append((point, alg, average_normalized_power(traces),
                            mean_convergence(traces, cfg.mc.convergence_threshold)))
    write_csv(out, FRAME_HEADER, rows)
    return summary


def run_sweep(cfg: ScenarioConfig, out, seed: int | None = None, workers: int = 1) -> list:
    """One aggregate row per (algorithm, sweep point)."""
    cfg = _with_seed(cfg, seed)
    points = sweep_points(cfg)
    base_lists = {"snr_db": cfg.signal.snr_db, "gradient_samples": cfg.beamformer.gradient_samples,
                  "walk_std_deg": cfg.aoa.walk_std_deg}
    for key in SWEEPABLE:
        if key not in cfg.sweep and len(base_lists[key]) > 1:
            raise ConfigError(SWEEP_HOME[key], "multi-valued but not swept; move it to [sweep] or give one value")
    keys = list(cfg.sweep)
    rows = []
    for values in points:
        sub = cfg.with_overrides(**values)
        point = grid_points(sub)[0]
        log.info("sweep point %s", values)
        results = run_trials(sub, point, workers=workers)
        sweep_key = ";".join(keys)
        sweep_value = ";".join(fmt(values[k]) for k in keys)
        for alg in results[0].traces:
            traces = [r.traces[alg] for r in results]
            rows.append((alg, sweep_key, sweep_value, average_normalized_power(traces),
                         mean_convergence(traces, cfg.mc.convergence_threshold), len(results)))
    write_csv(out, SWEEP_HEADER, rows)
    return rows


def run_pattern(cfg: ScenarioConfig, out, seed: int | None = None, workers: int = 1) -> dict:
    """
    Beam patterns of the final weights of one trial.

    Returns ``{algorithm: peak_angle_deg}`` along with the true final AoA
    under the key ``"true_phi_deg"``.
    """
    cfg = _with_seed(cfg, seed)
    pat = cfg.pattern
    point = grid_points(cfg)[0]
    res = run_trial(cfg, point, pat.trial)
    geom, carrier = cfg.geometry(), cfg.carrier_spec
    angles = np.arange(pat.start_deg, pat.stop_deg, pat.grid_step_deg)
    grid = np.deg2rad(angles)
    comp = res.imperfection if pat.compensate else None
    rows, peaks = [], {"true_phi_deg": float(np.rad2deg(res.phis[-1]))}
    for alg, w in res.final_weights.items():
        gain = beam_pattern(w, geom, carrier, grid, compensation=comp)
        peaks[alg.value] = float(angles[int(np.argmax(gain))])
        rows.extend((alg, a, g) for a, g in zip(angles, gain))
    write_csv(out, PATTERN_HEADER, rows)
    return peaks


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blindbeam", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("simulate", "per-frame Monte Carlo traces"),
                        ("sweep", "aggregate metrics over a parameter sweep"),
                        ("pattern", "beam patterns of converged weights")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="scenario TOML file")
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--seed", type=int, default=None, help="override mc.master_seed")
        p.add_argument("--workers", type=int, default=1, help="parallel trial workers")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        if args.command == "simulate":
            summary = run_simulate(cfg, args.out, args.seed, args.workers)
            for point, alg, avg, conv in summary:
                print(f"snr={fmt(point.snr_db)} N={point.gradient_samples} walk={fmt(point.walk_std_deg)} "
                      f"{alg.value:6s} avg_norm_power={avg:.4f} mean_conv_frames={conv:.1f}")
        elif args.command == "sweep":
            for alg, key, value, avg, conv, n in run_sweep(cfg, args.out, args.seed, args.workers):
                print(f"{key}={value} {alg.value:6s} avg_norm_power={avg:.4f} "
                      f"mean_conv_frames={conv:.1f} trials={n}")
        else:
            peaks = run_pattern(cfg, args.out, args.seed, args.workers)
            print(f"true AoA {peaks.pop('true_phi_deg'):.2f} deg")
            for alg, angle in peaks.items():
                print(f"{alg:6s} pattern peak {angle:.2f} deg")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DimensionMismatch as exc:
        print(f"dimension error: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
