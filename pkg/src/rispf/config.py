"""Simulation configuration and its INI-style file format.

A config file has the sections ``[simulation]``, ``[geometry]``, ``[ris]``,
``[link]`` and ``[nr]``; every key is optional and falls back to the
defaults below, or to a named preset given as ``[simulation] preset = lab``.
Lists are comma separated; position lists use ``;`` between
points, e.g. ``ue_positions = 70 0; 90 -10``. See ``configs/`` for examples.
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace

from .channel import LinkBudget
from .scheduler import SLOT_DURATION_S

MODES = ("theory", "nr")
SCHEDULERS = ("pf", "rr", "genie", "no-ris")
FADING = ("rayleigh", "none")
FADING_REFRESH = ("static", "block", "slot")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class SimConfig:
    mode: str = "theory"
    scheduler: str = "pf"
    n_slots: int = 200_000
    n_trials: int = 20
    seed: int = 1
    warmup_slots: int = 0
    slot_duration_ms: float = SLOT_DURATION_S * 1e3
    tc_slots: tuple = (1000.0,)
    ts_slots: tuple = (1,)
    workers: int = 1

    # geometry
    bs_position: tuple = (0.0, 0.0)
    ris_position: tuple = (60.0, 20.0)
    ue_box: tuple = (70.0, 120.0, -20.0, 20.0)
    n_ues: int = 10
    ue_positions: tuple = ()  # explicit positions override box sampling
    ue_polar: tuple = ()  # (azimuth_deg, distance_m) pairs relative to the RIS

    # RIS
    n_x: int = 16
    n_y: int = 16
    spacing_wavelengths: float = 0.25
    n_states: int = 10
    codebook_angles_deg: tuple = ()  # fixed beams instead of clustering UE directions

    # link
    budget: LinkBudget = field(default_factory=LinkBudget)
    residual_gain_db: float = -20.0  # non-beamformed power relative to the aligned array gain N^2
    fading: str = "rayleigh"
    fading_refresh: str = "static"

    # nr
    rsrp_offset_db: float = -114.0
    bler_slope: float = 2.0

    def __post_init__(self):
        validate(self)

    @property
    def n_elements(self) -> int:
        return self.n_x * self.n_y

    @property
    def slot_duration_s(self) -> float:
        return self.slot_duration_ms * 1e-3

    @property
    def k(self) -> int:
        return len(self.ue_positions) or len(self.ue_polar) or self.n_ues

    def single(self, **overrides) -> "SimConfig":
        return replace(self, **overrides)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["budget"] = asdict(self.budget)
        return d

    def digest(self) -> str:
        """Short hash of every result-affecting field (``workers`` is excluded)."""
        d = self.to_dict()
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _fail(key, msg):
    raise ConfigError(f"{key}: {msg}")


def validate(cfg: SimConfig) -> None:
    if cfg.mode not in MODES:
        _fail("simulation.mode", f"expected one of {MODES}, got {cfg.mode!r}")
    if cfg.scheduler not in SCHEDULERS:
        _fail("simulation.scheduler", f"expected one of {SCHEDULERS}, got {cfg.scheduler!r}")
    for key in ("n_slots", "n_trials", "n_ues", "n_x", "n_y", "n_states", "workers"):
        if int(getattr(cfg, key)) < 1:
            _fail(key, f"must be positive, got {getattr(cfg, key)}")
    if not 0 <= cfg.warmup_slots < cfg.n_slots:
        _fail("simulation.warmup_slots", "must satisfy 0 <= warmup_slots < n_slots")
    if not cfg.slot_duration_ms > 0:
        _fail("simulation.slot_duration_ms", "must be positive")
    if not cfg.tc_slots or any(not tc > 1 for tc in cfg.tc_slots):
        _fail("simulation.tc_slots", f"every EWMA window must exceed one slot, got {cfg.tc_slots}")
    if not cfg.ts_slots or any(int(ts) != ts or ts < 0 for ts in cfg.ts_slots):
        _fail("simulation.ts_slots", f"switching intervals must be integers >= 0, got {cfg.ts_slots}")
    if not cfg.spacing_wavelengths > 0:
        _fail("ris.spacing_wavelengths", "must be positive")
    if len(cfg.ue_box) != 4 or cfg.ue_box[0] > cfg.ue_box[1] or cfg.ue_box[2] > cfg.ue_box[3]:
        _fail("geometry.ue_box", f"expected xmin, xmax, ymin, ymax, got {cfg.ue_box}")
    if cfg.ue_positions and cfg.ue_polar:
        _fail("geometry.ue_positions", "give either ue_positions or ue_polar, not both")
    if cfg.fading not in FADING:
        _fail("link.fading", f"expected one of {FADING}, got {cfg.fading!r}")
    if cfg.fading_refresh not in FADING_REFRESH:
        _fail("link.fading_refresh", f"expected one of {FADING_REFRESH}, got {cfg.fading_refresh!r}")
    if not cfg.bler_slope > 0:
        _fail("nr.bler_slope", "must be positive")


# ---------------------------------------------------------------- file format

_SECTIONS = {
    "simulation": {
        "preset": str, "mode": str, "scheduler": str, "n_slots": int, "n_trials": int, "seed": int,
        "warmup_slots": int, "slot_duration_ms": float, "tc_slots": "floats",
        "ts_slots": "ints", "tc_seconds": "floats", "ts_seconds": "floats", "workers": int,
    },
    "geometry": {
        "bs_position": "floats", "ris_position": "floats", "ue_box": "floats",
        "n_ues": int, "ue_positions": "points", "ue_polar": "points",
    },
    "ris": {
        "n_x": int, "n_y": int, "n_elements": int, "spacing_wavelengths": float,
        "n_states": int, "codebook_angles_deg": "floats",
    },
    "link": {
        "c0_db": float, "exponent_bs_ris": float, "exponent_ris_ue": float,
        "exponent_bs_ue": float, "tx_snr_db": float, "residual_gain_db": float,
        "fading": str, "fading_refresh": str,
    },
    "nr": {"rsrp_offset_db": float, "bler_slope": float},
}


def _parse_value(kind, raw, key):
    try:
        if kind is str:
            return raw.strip()
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind == "floats":
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if kind == "ints":
            vals = tuple(float(x) for x in raw.split(",") if x.strip())
            if any(v != int(v) for v in vals):
                raise ValueError("non-integer entry")
            return tuple(int(v) for v in vals)
        if kind == "points":
            pts = []
            for chunk in raw.split(";"):
                if chunk.strip():
                    x, y = (float(v) for v in chunk.replace(",", " ").split())
                    pts.append((x, y))
            return tuple(pts)
    except ValueError as exc:
        _fail(key, f"cannot parse {raw!r} ({exc})")
    raise AssertionError(kind)


def parse_config_text(text: str, source: str = "<string>") -> SimConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            _fail(section, f"unknown section (expected one of {sorted(_SECTIONS)})")
        for key, raw in parser.items(section):
            if key not in _SECTIONS[section]:
                _fail(f"{section}.{key}", "unknown key")
            values[key] = _parse_value(_SECTIONS[section][key], raw, f"{section}.{key}")
    return config_from_mapping(values)


def config_from_mapping(values: dict) -> SimConfig:
    """Build a config from flat ``key: value`` pairs; ``preset`` names a base from :data:`PRESETS`."""
    values = dict(values)
    base_budget = LinkBudget()
    if "preset" in values:
        name = values.pop("preset")
        if name not in PRESETS:
            _fail("simulation.preset", f"unknown preset {name!r} (expected one of {sorted(PRESETS)})")
        base = dict(PRESETS[name])
        base_budget = base.pop("budget", base_budget)
        if "ue_positions" in values or "ue_polar" in values:
            base.pop("ue_positions", None)
            base.pop("ue_polar", None)
        for key in ("tc_slots", "ts_slots"):
            if key.replace("slots", "seconds") in values:
                base.pop(key, None)
        values = {**base, **values}
    slot_ms = values.get("slot_duration_ms", SimConfig.slot_duration_ms)
    if "tc_seconds" in values:
        if "tc_slots" in values:
            _fail("simulation.tc_seconds", "give tc_slots or tc_seconds, not both")
        values["tc_slots"] = tuple(s / (slot_ms * 1e-3) for s in values.pop("tc_seconds"))
    if "ts_seconds" in values:
        if "ts_slots" in values:
            _fail("simulation.ts_seconds", "give ts_slots or ts_seconds, not both")
        ts = []
        for s in values.pop("ts_seconds"):
            n = s / (slot_ms * 1e-3)
            if abs(n - round(n)) > 1e-9:
                _fail("simulation.ts_seconds", f"{s} s is not a whole number of slots")
            ts.append(int(round(n)))
        values["ts_slots"] = tuple(ts)
    if "n_elements" in values:
        n = values.pop("n_elements")
        side = int(round(n ** 0.5))
        if side * side != n:
            _fail("ris.n_elements", f"{n} is not a square array size; give n_x and n_y")
        values.setdefault("n_x", side)
        values.setdefault("n_y", side)
    for key in ("bs_position", "ris_position"):
        if key in values and len(values[key]) != 2:
            _fail(f"geometry.{key}", "expected two coordinates")
    budget_keys = {f.name for f in fields(LinkBudget)}
    budget_vals = {k: values.pop(k) for k in list(values) if k in budget_keys}
    try:
        budget = replace(base_budget, **budget_vals)
    except ValueError as exc:
        raise ConfigError(f"link: {exc}") from None
    known = {f.name for f in fields(SimConfig)}
    unknown = set(values) - known
    if unknown:
        _fail(sorted(unknown)[0], "unknown field")
    return SimConfig(budget=budget, **values)


def load_config(path) -> SimConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config_text(text, source=str(path))


# ---------------------------------------------------------------- presets

_LAB = dict(
    mode="nr", n_ues=2, bs_position=(-1.5, 0.0), ris_position=(0.0, 0.0),
    ue_polar=((30.0, 1.52), (60.0, 1.52)), codebook_angles_deg=(30.0, 60.0), n_states=2,
    fading="none", residual_gain_db=-10.0, budget=LinkBudget(tx_snr_db=34.0),
    n_slots=1_200_000, n_trials=10,
)

PRESETS = {
    # single operating point of the 10-UE outdoor layout
    "theory": dict(),
    # throughput vs EWMA window and switching interval, 10-UE layout
    "fig3": dict(tc_slots=(100.0, 1000.0, 10_000.0, 100_000.0), ts_slots=(1, 10, 100),
                 n_slots=200_000, n_trials=20),
    # two-UE indoor NR layout with beams at 30 and 60 degrees
    "lab": dict(_LAB, tc_slots=(200.0, 2000.0, 20_000.0),
                ts_slots=(2000, 6000, 10_000, 18_000, 30_000)),
    "heatmap": dict(_LAB, tc_slots=(20_000.0,), ts_slots=(10_000,), n_slots=600_000),
}


def preset(name: str, **overrides) -> SimConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r} (expected one of {sorted(PRESETS)})")
    return SimConfig(**{**PRESETS[name], **overrides})
