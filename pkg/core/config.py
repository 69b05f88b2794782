"""
core/config.py — Defaults, env vars and run configuration

Precedence for every setting: CLI flags > TOML config file > defaults.
"""

import os
from dataclasses import dataclass, fields
from typing import Any, Dict, Mapping, Optional, Tuple

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from core.errors import ConfigError

# Env vars
THREADS_ENV = "RINGTHERM_THREADS"
CONFIG_ENV = "RINGTHERM_CONFIG"

# Experiment defaults
DEFAULT_C_MEAN = 0.5  # mm^-1
DEFAULT_ETA = 0.8
DEFAULT_Z_NORMALIZED = 17.25  # z * c_mean of the fabricated chips
FIGURE_Z_NORMALIZED = 17.5  # z * c_mean of the gap-map simulation
DEFAULT_SAMPLES = 120
LARGE_RING_SAMPLES = 200
LARGE_RING_THRESHOLD = 11
DEFAULT_EXCITED_SITE = 0
DEFAULT_WAVEGUIDE_LENGTH_MM = 34.5

# Statistics defaults
DEFAULT_REPEATS = 1000
DEFAULT_HISTOGRAM_BINS = 30

# Sweep defaults
DEFAULT_SITE_COUNTS: Tuple[int, ...] = tuple(range(3, 31))
DEFAULT_DISORDER_LEVELS: Tuple[float, ...] = tuple(round(0.05 * k, 2) for k in range(1, 21))
DEFAULT_CELL_ENSEMBLE = 800 * 120
DEFAULT_GAP_THRESHOLD = 0.3
DEFAULT_STUDY_SIZES: Tuple[int, ...] = (10, 20, 40, 60, 80, 100, 120, 160, 200)
DEFAULT_STUDY_REPEATS = 800

SEED_AUTO = "auto"


def worker_count() -> int:
    """Worker processes allowed by RINGTHERM_THREADS (default 1)."""
    raw = os.getenv(THREADS_ENV, "1")
    try:
        requested = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if requested < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1, got {requested}")
    return min(requested, os.cpu_count() or 1)


def default_samples(sites: int) -> int:
    return LARGE_RING_SAMPLES if sites >= LARGE_RING_THRESHOLD else DEFAULT_SAMPLES


def parse_seed(value: Any) -> Optional[int]:
    """
    Integer seed, or None for the literal 'auto'.
    Missing seeds are rejected so no run is silently irreproducible.
    """
    if value is None:
        raise ConfigError("a seed is required: pass --seed <int> or --seed auto")
    if isinstance(value, str) and value.strip().lower() == SEED_AUTO:
        return None
    try:
        seed = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer or '{SEED_AUTO}', got {value!r}")
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")
    return seed


def resolve_seed(value: Any) -> int:
    from core.rng import fresh_seed

    seed = parse_seed(value)
    return fresh_seed() if seed is None else seed


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    """Read a TOML config file; the path may also come from RINGTHERM_CONFIG."""
    path = path or os.getenv(CONFIG_ENV)
    if not path:
        return {}
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"invalid TOML in {path}: {e}")


def merge(defaults: Mapping[str, Any], file_section: Mapping[str, Any], flags: Mapping[str, Any]) -> Dict[str, Any]:
    """flags > file > defaults; None flags do not override."""
    unknown = set(file_section) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    merged = dict(defaults)
    merged.update(file_section)
    merged.update({k: v for k, v in flags.items() if v is not None and k in defaults})
    return merged


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one simulated ensemble run; validated before any work starts."""

    sites: int
    eta: float = DEFAULT_ETA
    c_mean: float = DEFAULT_C_MEAN
    z_normalized: float = DEFAULT_Z_NORMALIZED
    samples: int = DEFAULT_SAMPLES
    master_seed: int = 0
    excited_site: int = DEFAULT_EXCITED_SITE
    output: str = "run.jsonl"

    def __post_init__(self):
        if int(self.sites) != self.sites or self.sites < 3:
            raise ConfigError(f"sites must be an integer >= 3, got {self.sites}")
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError(f"eta must lie in [0, 1], got {self.eta}")
        if not self.c_mean > 0:
            raise ConfigError(f"c_mean must be positive, got {self.c_mean}")
        if not self.z_normalized >= 0:
            raise ConfigError(f"z_normalized must be >= 0, got {self.z_normalized}")
        if int(self.samples) != self.samples or self.samples < 2:
            raise ConfigError(f"samples must be an integer >= 2, got {self.samples}")
        if self.master_seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.master_seed}")
        if not 0 <= self.excited_site < self.sites:
            raise ConfigError(f"excited_site {self.excited_site} outside [0, {self.sites})")
        if not self.output:
            raise ConfigError("an output path is required")

    @property
    def z(self) -> float:
        """Physical propagation distance in mm."""
        return self.z_normalized / self.c_mean

    def to_dict(self) -> Dict[str, Any]:
        """Simulation parameters only; the output path is not part of a run's identity."""
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "output"}

    @classmethod
    def resolve(cls, flags: Mapping[str, Any], file_config: Optional[Mapping[str, Any]] = None) -> "RunConfig":
        section = dict((file_config or {}).get("run", {}))
        seed_source = flags.get("seed") if flags.get("seed") is not None else section.pop("seed", None)
        section.pop("seed", None)
        defaults = {
            "sites": None,
            "eta": DEFAULT_ETA,
            "c_mean": DEFAULT_C_MEAN,
            "z_normalized": DEFAULT_Z_NORMALIZED,
            "samples": None,
            "excited_site": DEFAULT_EXCITED_SITE,
            "output": None,
        }
        values = merge(defaults, section, flags)
        if values["sites"] is None:
            raise ConfigError("sites is required")
        if values["output"] is None:
            raise ConfigError("an output path is required (--out)")
        if values["samples"] is None:
            values["samples"] = default_samples(int(values["sites"]))
        return cls(master_seed=resolve_seed(seed_source), **values)
