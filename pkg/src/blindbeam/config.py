"""
Scenario configuration.

Scenarios are TOML files with the sections ``array``, ``carrier``,
``imperfection``, ``signal``, ``beamformer``, ``aoa``, ``mc`` and the optional
``sweep`` and ``pattern``. Unknown sections or keys are rejected so that a
typo in a sweep definition fails loudly instead of silently running the
default. See ``configs/`` for complete examples.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .array import SPEED_OF_LIGHT, ArrayGeometry, CarrierSpec, make_uca, make_ula
from .errors import ConfigError, DimensionMismatch
from .metrics import Algorithm

SWEEPABLE = ("snr_db", "gradient_samples", "walk_std_deg")
# where each sweepable key lives in the base configuration
SWEEP_HOME = {"snr_db": "signal.snr_db", "gradient_samples": "beamformer.gradient_samples",
              "walk_std_deg": "aoa.walk_std_deg"}


@dataclass(frozen=True)
class ArraySection:
    type: str = "uca"
    elements: int = 8
    spacing_m: float | None = None
    positions_m: tuple | None = None


@dataclass(frozen=True)
class CarrierSection:
    f_c_hz: float = 2e9
    c_mps: float = SPEED_OF_LIGHT


@dataclass(frozen=True)
class ImperfectionSection:
    mode: str = "uniform-phase"
    range_rad: float = math.pi / 2
    phase_offsets_rad: tuple | None = None
    gain_std_db: float = 0.0
    jitter_std_m: float = 0.0
    seed_policy: str = "per-trial"


@dataclass(frozen=True)
class SignalSection:
    modulation: str = "qpsk"
    sps: int = 8
    rolloff: float = 0.35
    span_symbols: int = 10
    frame_symbols: int = 32
    snr_db: tuple = (10.0,)


@dataclass(frozen=True)
class BeamformerSection:
    algorithms: tuple = ("GBF", "CMA", "MUSIC", "ORACLE")
    mu: float = 1.0
    step_mode: str = "normalized"
    gradient_samples: tuple = (8,)
    init: str = "uniform"
    cma_step: float = 0.1
    music_grid_deg: float = 0.1


@dataclass(frozen=True)
class AoaSection:
    initial_deg: float = 60.0
    initial_range_deg: tuple | None = None
    walk_std_deg: tuple = (0.5,)


@dataclass(frozen=True)
class McSection:
    trials: int = 100
    frames: int = 300
    master_seed: int = 1
    convergence_threshold: float = 0.99


@dataclass(frozen=True)
class PatternSection:
    grid_step_deg: float = 0.5
    start_deg: float = 0.0
    stop_deg: float = 360.0
    compensate: bool = True
    trial: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    array: ArraySection = field(default_factory=ArraySection)
    carrier: CarrierSection = field(default_factory=CarrierSection)
    imperfection: ImperfectionSection = field(default_factory=ImperfectionSection)
    signal: SignalSection = field(default_factory=SignalSection)
    beamformer: BeamformerSection = field(default_factory=BeamformerSection)
    aoa: AoaSection = field(default_factory=AoaSection)
    mc: McSection = field(default_factory=McSection)
    sweep: dict = field(default_factory=dict)
    pattern: PatternSection = field(default_factory=PatternSection)

    @property
    def carrier_spec(self) -> CarrierSpec:
        return CarrierSpec(self.carrier.f_c_hz, self.carrier.c_mps)

    @property
    def frame_length(self) -> int:
        return self.signal.frame_symbols * self.signal.sps

    def geometry(self) -> ArrayGeometry:
        arr = self.array
        if arr.type == "custom":
            return ArrayGeometry(np.asarray(arr.positions_m, dtype=float))
        spacing = arr.spacing_m if arr.spacing_m is not None else self.carrier_spec.wavelength / 2
        if arr.type == "ula":
            return make_ula(arr.elements, spacing)
        return make_uca(arr.elements, spacing)

    def with_overrides(self, **values) -> "ScenarioConfig":
        """Copy with sweepable keys replaced by single values."""
        sig, bf, aoa = self.signal, self.beamformer, self.aoa
        if "snr_db" in values:
            sig = replace(sig, snr_db=(float(values["snr_db"]),))
        if "gradient_samples" in values:
            bf = replace(bf, gradient_samples=(int(values["gradient_samples"]),))
        if "walk_std_deg" in values:
            aoa = replace(aoa, walk_std_deg=(float(values["walk_std_deg"]),))
        return replace(self, signal=sig, beamformer=bf, aoa=aoa)


@dataclass(frozen=True)
class GridPoint:
    snr_db: float
    gradient_samples: int
    walk_std_deg: float


def grid_points(cfg: ScenarioConfig) -> list[GridPoint]:
    """Cartesian product of the list-valued scenario parameters, in file order."""
    return [GridPoint(s, n, w) for s, n, w in itertools.product(
        cfg.signal.snr_db, cfg.beamformer.gradient_samples, cfg.aoa.walk_std_deg)]


def sweep_points(cfg: ScenarioConfig) -> list[dict]:
    """Cartesian product of the ``[sweep]`` section; each item maps key -> value."""
    if not cfg.sweep:
        raise ConfigError("sweep", "no swept key; expected at least one of " + ", ".join(SWEEPABLE))
    keys = list(cfg.sweep)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(cfg.sweep[k] for k in keys))]


# ------------------------------------------------------------ parsing ----

def _number(key, value, *, integer=False, positive=False, nonneg=False, allow_inf=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if integer and (not isinstance(value, int)):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    if math.isnan(value) or (math.isinf(value) and not allow_inf):
        raise ConfigError(key, f"expected a finite number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(key, f"must be positive, got {value!r}")
    if nonneg and not value >= 0:
        raise ConfigError(key, f"must be nonnegative, got {value!r}")
    return value


def _list(key, value, item, *, allow_scalar=False):
    if not isinstance(value, list):
        if allow_scalar:
            value = [value]
        else:
            raise ConfigError(key, f"expected a list, got {value!r}")
    if len(value) == 0:
        raise ConfigError(key, "list must not be empty")
    return tuple(item(f"{key}[{i}]", v) for i, v in enumerate(value))


def _choice(key, value, options):
    if value not in options:
        raise ConfigError(key, f"expected one of {list(options)}, got {value!r}")
    return value


def _section(name, raw, cls, parsers):
    if not isinstance(raw, dict):
        raise ConfigError(name, "expected a table")
    known = {f.name for f in fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown key")
    values = {}
    for key, value in raw.items():
        parse = parsers.get(key)
        values[key] = parse(f"{name}.{key}", value) if parse else value
    return cls(**values)


def _bool(key, value):
    if not isinstance(value, bool):
        raise ConfigError(key, f"expected true/false, got {value!r}")
    return value


def _pos_int(key, v):
    return _number(key, v, integer=True, positive=True)


def _pos(key, v):
    return _number(key, v, positive=True)


def _nonneg(key, v):
    return _number(key, v, nonneg=True)


def _finite(key, v):
    return _number(key, v)


def _snr(key, v):
    return float(_number(key, v, allow_inf=True))


def _point(key, v):
    if not isinstance(v, list) or len(v) != 2:
        raise ConfigError(key, f"expected [x, y], got {v!r}")
    return tuple(float(_finite(f"{key}[{i}]", c)) for i, c in enumerate(v))


_PARSERS = {
    "array": (ArraySection, {
        "type": lambda k, v: _choice(k, v, ("ula", "uca", "custom")),
        "elements": _pos_int,
        "spacing_m": _pos,
        "positions_m": lambda k, v: _list(k, v, _point),
    }),
    "carrier": (CarrierSection, {"f_c_hz": _pos, "c_mps": _pos}),
    "imperfection": (ImperfectionSection, {
        "mode": lambda k, v: _choice(k, v, ("none", "uniform-phase", "explicit")),
        "range_rad": _nonneg,
        "phase_offsets_rad": lambda k, v: _list(k, v, lambda kk, vv: float(_finite(kk, vv))),
        "gain_std_db": _nonneg,
        "jitter_std_m": _nonneg,
        "seed_policy": lambda k, v: _choice(k, v, ("per-trial", "shared")),
    }),
    "signal": (SignalSection, {
        "modulation": lambda k, v: _choice(k, str(v).lower(), ("qpsk",)),
        "sps": _pos_int,
        "rolloff": _pos,
        "span_symbols": _pos_int,
        "frame_symbols": _pos_int,
        "snr_db": lambda k, v: _list(k, v, _snr, allow_scalar=True),
    }),
    "beamformer": (BeamformerSection, {
        "algorithms": lambda k, v: _list(k, v, lambda kk, vv: _choice(kk, str(vv).upper(),
                                                                     [a.value for a in Algorithm])),
        "mu": _nonneg,
        "step_mode": lambda k, v: _choice(k, v, ("normalized", "first-frame", "fixed")),
        "gradient_samples": lambda k, v: _list(k, v, _pos_int, allow_scalar=True),
        "init": lambda k, v: _choice(k, v, ("uniform", "random")),
        "cma_step": _nonneg,
        "music_grid_deg": _pos,
    }),
    "aoa": (AoaSection, {
        "initial_deg": lambda k, v: float(_finite(k, v)),
        "initial_range_deg": lambda k, v: _point(k, v),
        "walk_std_deg": lambda k, v: _list(k, v, lambda kk, vv: float(_nonneg(kk, vv)), allow_scalar=True),
    }),
    "mc": (McSection, {
        "trials": _pos_int,
        "frames": _pos_int,
        "master_seed": lambda k, v: _number(k, v, integer=True, nonneg=True),
        "convergence_threshold": _pos,
    }),
    "pattern": (PatternSection, {
        "grid_step_deg": _pos,
        "start_deg": lambda k, v: float(_finite(k, v)),
        "stop_deg": lambda k, v: float(_finite(k, v)),
        "compensate": _bool,
        "trial": lambda k, v: _number(k, v, integer=True, nonneg=True),
    }),
}

_SWEEP_ITEM = {
    "snr_db": _snr,
    "gradient_samples": _pos_int,
    "walk_std_deg": lambda k, v: float(_nonneg(k, v)),
}


def parse_config(raw: dict) -> ScenarioConfig:
    """Validate a decoded TOML document and build a :class:`ScenarioConfig`."""
    sections = {}
    for name, value in raw.items():
        if name == "sweep":
            if not isinstance(value, dict):
                raise ConfigError("sweep", "expected a table")
            sweep = {}
            for key, vals in value.items():
                if key not in _SWEEP_ITEM:
                    raise ConfigError(f"sweep.{key}", "unknown key; sweepable keys are " + ", ".join(SWEEPABLE))
                sweep[key] = _list(f"sweep.{key}", vals, _SWEEP_ITEM[key])
            sections["sweep"] = sweep
        elif name in _PARSERS:
            cls, parsers = _PARSERS[name]
            sections[name] = _section(name, value, cls, parsers)
        else:
            raise ConfigError(name, "unknown section")
    arr = sections.get("array")
    if arr is not None and arr.positions_m is not None and "elements" not in raw["array"]:
        sections["array"] = replace(arr, elements=len(arr.positions_m))
    cfg = ScenarioConfig(**sections)
    _check(cfg)
    return cfg


def _check(cfg: ScenarioConfig) -> None:
    arr = cfg.array
    if arr.type == "custom":
        if arr.positions_m is None:
            raise ConfigError("array.positions_m", "required for a custom array")
        if len(arr.positions_m) != arr.elements:
            raise DimensionMismatch(
                f"array.positions_m: {len(arr.positions_m)} positions for {arr.elements} elements")
        try:
            ArrayGeometry(np.asarray(arr.positions_m))
        except ValueError as exc:
            raise ConfigError("array.positions_m", str(exc)) from None
    else:
        if arr.positions_m is not None:
            raise ConfigError("array.positions_m", f"only allowed with type = 'custom', not {arr.type!r}")
        if arr.type == "uca" and arr.elements < 2:
            raise ConfigError("array.elements", "a UCA needs at least 2 elements")
    M = cfg.geometry().M
    imp = cfg.imperfection
    if imp.mode == "explicit":
        if imp.phase_offsets_rad is None:
            raise ConfigError("imperfection.phase_offsets_rad", "required when mode = 'explicit'")
        if len(imp.phase_offsets_rad) != M:
            raise DimensionMismatch(
                f"imperfection.phase_offsets_rad: {len(imp.phase_offsets_rad)} values for {M} elements")
    elif imp.phase_offsets_rad is not None:
        raise ConfigError("imperfection.phase_offsets_rad", "only allowed with mode = 'explicit'")
    if not 0 < cfg.signal.rolloff <= 1:
        raise ConfigError("signal.rolloff", f"must lie in (0, 1], got {cfg.signal.rolloff}")
    if cfg.signal.span_symbols % 2:
        raise ConfigError("signal.span_symbols", "must be even")
    n_prime = cfg.frame_length
    for n in list(cfg.beamformer.gradient_samples) + list(cfg.sweep.get("gradient_samples", ())):
        if n > n_prime:
            raise ConfigError("beamformer.gradient_samples",
                              f"N = {n} exceeds the frame length N' = {n_prime} samples")
    if not 0 < cfg.mc.convergence_threshold < 1:
        raise ConfigError("mc.convergence_threshold", "must lie in (0, 1)")
    rng = cfg.aoa.initial_range_deg
    if rng is not None and not rng[0] < rng[1]:
        raise ConfigError("aoa.initial_range_deg", f"expected [low, high] with low < high, got {list(rng)}")
    pat = cfg.pattern
    if not pat.start_deg < pat.stop_deg:
        raise ConfigError("pattern.stop_deg", "must exceed pattern.start_deg")
    if pat.trial >= cfg.mc.trials:
        raise ConfigError("pattern.trial", f"trial {pat.trial} out of range for {cfg.mc.trials} trials")


def load_config(path) -> ScenarioConfig:
    """Read and validate a scenario file; raises ConfigError or OSError."""
    text = Path(path).read_bytes()
    try:
        raw = tomllib.loads(text.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(str(path), f"could not parse TOML: {exc}") from None
    return parse_config(raw)
