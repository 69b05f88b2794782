"""
core/layout.py — Waveguide layout geometry

Turns a coupling vector into waveguide positions: each coupling maps to a
separation through an exponential calibration, the separations are closed
into a cyclic polygon by solving for the circumscribed radius, and sites
are placed around that circle.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import structlog
from scipy.optimize import bisect

from core.config import DEFAULT_WAVEGUIDE_LENGTH_MM
from core.errors import ConfigError, GeometryError

logger = structlog.get_logger()

REFERENCE_SEPARATION_UM = 9.76
REFERENCE_COUPLING = 0.5  # mm^-1 at the reference separation
REFERENCE_WAVELENGTH_NM = 852.0
# Illustrative only; measure the decay length for a real writing process.
EXAMPLE_DECAY_LENGTH_UM = 1.5

RADIUS_RTOL = 4 * np.finfo(float).eps
RADIUS_MAXITER = 400


@dataclass(frozen=True)
class CouplingCalibration:
    """c(d) = c_ref * exp(-(d - d_ref) / decay_length)."""

    d_ref: float = REFERENCE_SEPARATION_UM
    c_ref: float = REFERENCE_COUPLING
    decay_length: float = EXAMPLE_DECAY_LENGTH_UM
    wavelength: float = REFERENCE_WAVELENGTH_NM

    def __post_init__(self):
        for name in ("d_ref", "c_ref", "decay_length", "wavelength"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"calibration {name} must be positive, got {value}")


@dataclass(frozen=True)
class ChipLayout:
    circumradius: float
    site_coordinates: Tuple[Tuple[float, float], ...]
    chord_lengths: Tuple[float, ...]
    waveguide_length: float = DEFAULT_WAVEGUIDE_LENGTH_MM

    @property
    def n_sites(self) -> int:
        return len(self.site_coordinates)

    def measured_chords(self) -> np.ndarray:
        xy = np.asarray(self.site_coordinates)
        return np.linalg.norm(np.roll(xy, -1, axis=0) - xy, axis=1)


def distance_to_coupling(d, cal: CouplingCalibration):
    return cal.c_ref * np.exp(-(np.asarray(d, dtype=float) - cal.d_ref) / cal.decay_length)


def coupling_to_distance(c, cal: CouplingCalibration):
    """d = d_ref - decay_length * ln(c / c_ref)."""
    c = np.asarray(c, dtype=float)
    if np.any(~np.isfinite(c)) or np.any(c <= 0):
        raise GeometryError("couplings must be positive to map to a separation")
    d = cal.d_ref - cal.decay_length * np.log(c / cal.c_ref)
    return float(d) if d.ndim == 0 else d


def _angle_excess(radius: float, chords: np.ndarray) -> float:
    return float(np.sum(2.0 * np.arcsin(np.minimum(chords / (2.0 * radius), 1.0))) - 2.0 * np.pi)


def solve_circumradius(chords: Sequence[float]) -> float:
    """
    Radius R >= max(chord)/2 at which the central angles 2 asin(chord/2R)
    sum to 2 pi. The sum decreases strictly in R, so the root is unique.
    """
    c = np.asarray(chords, dtype=float)
    if c.ndim != 1 or c.size < 3:
        raise GeometryError(f"a closed polygon needs at least 3 chords, got {c.size}")
    if np.any(~np.isfinite(c)) or np.any(c <= 0):
        raise GeometryError("chords must be positive")

    r_lo = float(c.max()) / 2.0
    excess_lo = _angle_excess(r_lo, c)
    if excess_lo < 0:
        raise GeometryError(
            "chord set cannot close around the circle center: "
            f"angle sum {excess_lo + 2 * np.pi:.6f} < 2 pi at R = max/2"
        )
    if excess_lo == 0:
        return r_lo

    # asin(x) <= pi x / 2 on [0, 1], so the excess is negative beyond sum/4
    r_hi = 2.0 * max(float(c.sum()) / 4.0, r_lo)
    radius = bisect(_angle_excess, r_lo, r_hi, args=(c,), xtol=1e-300, rtol=RADIUS_RTOL, maxiter=RADIUS_MAXITER)
    return float(radius)


def place_sites(chords: Sequence[float], radius: float, waveguide_length: float = DEFAULT_WAVEGUIDE_LENGTH_MM) -> ChipLayout:
    """Site 0 at angle 0, each next site advanced by the chord's central angle."""
    c = np.asarray(chords, dtype=float)
    if radius < c.max() / 2.0:
        raise GeometryError(f"radius {radius} shorter than half the longest chord")
    angles = 2.0 * np.arcsin(c / (2.0 * radius))
    theta = np.concatenate(([0.0], np.cumsum(angles[:-1])))
    coords = tuple((float(radius * np.cos(t)), float(radius * np.sin(t))) for t in theta)
    return ChipLayout(
        circumradius=float(radius),
        site_coordinates=coords,
        chord_lengths=tuple(c.tolist()),
        waveguide_length=float(waveguide_length),
    )


def layout_from_couplings(
    couplings: Sequence[float],
    cal: CouplingCalibration,
    waveguide_length: float = DEFAULT_WAVEGUIDE_LENGTH_MM,
) -> ChipLayout:
    chords = np.atleast_1d(coupling_to_distance(couplings, cal))
    radius = solve_circumradius(chords)
    layout = place_sites(chords, radius, waveguide_length)
    logger.info("layout_solved", n_sites=layout.n_sites, circumradius=radius)
    return layout


def couplings_from_layout(layout: ChipLayout, cal: CouplingCalibration) -> np.ndarray:
    """Recover couplings from the measured site-to-site distances."""
    return distance_to_coupling(layout.measured_chords(), cal)
