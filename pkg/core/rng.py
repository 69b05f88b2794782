"""
core/rng.py — Keyed random streams

All randomness in ringtherm flows from one master seed. A stream is a
Philox (counter-based) generator keyed by the master seed plus an integer
key path, so any unit of work can rebuild its own stream without knowing
what ran before it.
"""

from typing import Tuple

import numpy as np

from core.errors import ConfigError

# Key tags keep the different consumers of one master seed apart.
REALIZATION_TAG = 0
BOOTSTRAP_TAG = 1
STUDY_TAG = 2
SYNTHETIC_TAG = 3

ETA_KEY_SCALE = 10**6


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Generator for (master_seed, *key); identical keys give identical draws."""
    if master_seed < 0 or any(k < 0 for k in key):
        raise ConfigError(f"seed and stream keys must be non-negative, got {master_seed}, {key}")
    seq = np.random.SeedSequence([int(master_seed), *(int(k) for k in key)])
    return np.random.Generator(np.random.Philox(seq))


def cell_key(n_sites: int, eta: float) -> Tuple[int, int]:
    """Grid-independent key of a (N, eta) cell."""
    return int(n_sites), int(round(float(eta) * ETA_KEY_SCALE))


def fresh_seed() -> int:
    """Entropy-backed seed for `--seed auto`."""
    return int(np.random.SeedSequence().generate_state(1, dtype=np.uint32)[0])
