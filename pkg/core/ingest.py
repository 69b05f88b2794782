"""
core/ingest.py — Facet-image intensity extraction

Loads grayscale facet images (binary PGM natively, other grayscale formats
through Pillow) and turns known spot positions into a normalized per-site
intensity vector by fitting an isotropic Gaussian to each spot.
"""

import csv
import os
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple, Union

import numpy as np
import structlog
from PIL import Image, UnidentifiedImageError
from scipy.optimize import least_squares

from core.errors import ConfigError, DataIOError, FitError, ImageFormatError

logger = structlog.get_logger()

WINDOW_RADII = 3.0  # fit window radius in units of radius_1e
ANNULUS_INNER_RADII = 2.5
OVERLAP_RADII = 2.0
CENTER_SLACK_PX = 1.0
PGM_WHITESPACE = b" \t\n\r\v\f"

BackgroundStrategy = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class RasterImage:
    pixels: np.ndarray  # (height, width)
    bit_depth: int
    maxval: int

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=float)
        if px.ndim != 2 or px.size == 0:
            raise ImageFormatError(f"image must be a nonempty 2-D grid, got shape {px.shape}")
        if self.bit_depth not in (8, 16):
            raise ImageFormatError(f"bit depth must be 8 or 16, got {self.bit_depth}")
        if not 0 < self.maxval < 2 ** self.bit_depth:
            raise ImageFormatError(f"maxval {self.maxval} does not fit {self.bit_depth} bits")
        if np.any(px < 0) or np.any(px > self.maxval):
            raise ImageFormatError(f"pixel values outside [0, {self.maxval}]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])


@dataclass(frozen=True)
class SiteSpot:
    center: Tuple[float, float]  # (x, y) pixels
    radius_1e: float

    def __post_init__(self):
        if not self.radius_1e > 0:
            raise ConfigError(f"radius_1e must be positive, got {self.radius_1e}")


@dataclass(frozen=True)
class SpotFit:
    amplitude: float
    width: float
    center: Tuple[float, float]
    offset: float

    @property
    def intensity(self) -> float:
        return self.amplitude * self.width ** 2


# ─── Loading ──────────────────────────────────────────────────────────

def _read_token(data: bytes, pos: int) -> Tuple[bytes, int]:
    """Next header token, skipping whitespace and '#' comments."""
    n = len(data)
    while pos < n:
        if data[pos] == ord("#"):
            while pos < n and data[pos] not in b"\n\r":
                pos += 1
        elif data[pos] in PGM_WHITESPACE:
            pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos] not in PGM_WHITESPACE and data[pos] != ord("#"):
        pos += 1
    if start == pos:
        raise ImageFormatError("malformed PGM header: unexpected end of header")
    return data[start:pos], pos


def parse_pgm(data: bytes) -> RasterImage:
    """Binary PGM (P5); 16-bit samples are big-endian when maxval > 255."""
    magic, pos = _read_token(data, 0)
    if magic != b"P5":
        raise ImageFormatError(f"not a binary PGM (magic {magic[:2]!r})")
    fields = []
    for name in ("width", "height", "maxval"):
        token, pos = _read_token(data, pos)
        try:
            fields.append(int(token))
        except ValueError:
            raise ImageFormatError(f"malformed PGM header: {name} {token!r} is not an integer")
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise ImageFormatError(f"malformed PGM header: size {width}x{height}")
    if not 0 < maxval <= 65535:
        raise ImageFormatError(f"unsupported maxval {maxval}")
    if pos >= len(data) or data[pos] not in PGM_WHITESPACE:
        raise ImageFormatError("malformed PGM header: missing separator before raster")
    pos += 1

    bit_depth = 8 if maxval < 256 else 16
    dtype = np.dtype(">u2") if bit_depth == 16 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    payload = data[pos:pos + expected]
    if len(payload) < expected:
        raise ImageFormatError(f"truncated PGM payload: {len(payload)} of {expected} bytes")
    pixels = np.frombuffer(payload, dtype=dtype).reshape(height, width).astype(float)
    return RasterImage(pixels=pixels, bit_depth=bit_depth, maxval=maxval)


def _load_with_pillow(path: str) -> RasterImage:
    try:
        with Image.open(path) as img:
            mode = img.mode
            if mode == "L":
                return RasterImage(np.asarray(img, dtype=float), 8, 255)
            if mode.startswith("I;16") or mode == "I":
                pixels = np.asarray(img, dtype=float)
                return RasterImage(pixels, 16, 65535)
    except UnidentifiedImageError:
        raise ImageFormatError(f"unrecognized image format: {path}")
    raise ImageFormatError(f"unsupported image mode {mode!r}; grayscale images only")


def load_image(path: str) -> RasterImage:
    """Load a grayscale raster; PGM is parsed natively, other formats via Pillow."""
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise DataIOError(f"cannot read image {path}: {e}")
    if data[:2] == b"P5":
        image = parse_pgm(data)
    elif data[:1] == b"P":
        raise ImageFormatError(f"only binary PGM (P5) is supported, got {data[:2]!r}")
    else:
        image = _load_with_pillow(path)
    logger.info("image_loaded", path=path, width=image.width, height=image.height, bit_depth=image.bit_depth)
    return image


def encode_pgm(pixels: np.ndarray, maxval: int = 255) -> bytes:
    px = np.asarray(np.rint(pixels))
    if np.any(px < 0) or np.any(px > maxval):
        raise ImageFormatError(f"pixel values outside [0, {maxval}]")
    dtype = ">u2" if maxval > 255 else "u1"
    height, width = px.shape
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    return header + px.astype(dtype).tobytes()


# ─── Background strategies ───────────────────────────────────────────

def annulus_median(annulus: np.ndarray) -> float:
    return float(np.median(annulus)) if annulus.size else 0.0


def no_background(annulus: np.ndarray) -> float:
    return 0.0


BACKGROUND_STRATEGIES: Dict[str, BackgroundStrategy] = {
    "annulus-median": annulus_median,
    "none": no_background,
}


def _strategy(background: Union[str, BackgroundStrategy]) -> BackgroundStrategy:
    if callable(background):
        return background
    try:
        return BACKGROUND_STRATEGIES[background]
    except KeyError:
        raise ConfigError(f"unknown background strategy {background!r}; choose from {sorted(BACKGROUND_STRATEGIES)}")


# ─── Fitting ─────────────────────────────────────────────────────────

def check_spots(image: RasterImage, spots: Sequence[SiteSpot]) -> None:
    if not spots:
        raise ConfigError("at least one spot is required")
    for k, spot in enumerate(spots):
        x, y = spot.center
        reach = WINDOW_RADII * spot.radius_1e
        if x - reach < 0 or y - reach < 0 or x + reach > image.width - 1 or y + reach > image.height - 1:
            raise FitError(f"spot {k} window at ({x}, {y}) r={reach:.2f} leaves the image")
    for a in range(len(spots)):
        for b in range(a + 1, len(spots)):
            sa, sb = spots[a], spots[b]
            dist = np.hypot(sa.center[0] - sb.center[0], sa.center[1] - sb.center[1])
            if dist < OVERLAP_RADII * (sa.radius_1e + sb.radius_1e):
                raise FitError(f"spots {a} and {b} overlap ({dist:.2f} px apart)")


def fit_spot(image: RasterImage, spot: SiteSpot, background: BackgroundStrategy = annulus_median) -> SpotFit:
    """
    Separable least squares: for each trial (x0, y0, w) the amplitude and a
    residual offset are solved linearly; the center may move by <= 1 pixel.
    """
    cx, cy = spot.center
    r = spot.radius_1e
    reach = WINDOW_RADII * r
    x0, x1 = int(np.floor(cx - reach)), int(np.ceil(cx + reach))
    y0, y1 = int(np.floor(cy - reach)), int(np.ceil(cy + reach))
    yy, xx = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    dist = np.hypot(xx - cx, yy - cy)
    window = dist <= reach
    annulus = window & (dist >= ANNULUS_INNER_RADII * r)

    patch = image.pixels[y0:y1 + 1, x0:x1 + 1]
    level = background(patch[annulus])
    xs, ys = xx[window].astype(float), yy[window].astype(float)
    values = patch[window] - level
    scale = float(np.max(np.abs(values))) or 1.0
    values = values / scale

    def linear_part(p):
        g = np.exp(-((xs - p[0]) ** 2 + (ys - p[1]) ** 2) / (p[2] ** 2))
        design = np.column_stack([g, np.ones_like(g)])
        coef, *_ = np.linalg.lstsq(design, values, rcond=None)
        return design, coef

    def residuals(p):
        design, coef = linear_part(p)
        return design @ coef - values

    result = least_squares(
        residuals,
        x0=[cx, cy, r],
        bounds=([cx - CENTER_SLACK_PX, cy - CENTER_SLACK_PX, 0.25 * r], [cx + CENTER_SLACK_PX, cy + CENTER_SLACK_PX, 4.0 * r]),
        xtol=1e-12,
        ftol=1e-12,
        gtol=1e-12,
        max_nfev=2000,
    )
    if not result.success:
        raise FitError(f"Gaussian fit did not converge at {spot.center}: {result.message}")
    _, coef = linear_part(result.x)
    amplitude = float(coef[0]) * scale
    if not amplitude > 0:
        raise FitError(f"no positive peak found at {spot.center}")
    return SpotFit(
        amplitude=amplitude,
        width=float(result.x[2]),
        center=(float(result.x[0]), float(result.x[1])),
        offset=float(coef[1]) * scale + level,
    )


def extract_site_intensities(
    image: RasterImage,
    spots: Sequence[SiteSpot],
    background: Union[str, BackgroundStrategy] = "annulus-median",
) -> np.ndarray:
    """Fitted volumes A * w^2 per spot, normalized to unit sum, in spot order."""
    check_spots(image, spots)
    strategy = _strategy(background)
    fits = [fit_spot(image, spot, strategy) for spot in spots]
    volumes = np.array([f.intensity for f in fits])
    logger.debug("spots_fitted", spots=len(spots), widths=[round(f.width, 3) for f in fits])
    return volumes / volumes.sum()


# ─── Tables ──────────────────────────────────────────────────────────

def read_spot_table(path: str) -> List[SiteSpot]:
    """CSV with header site,x,y,radius_1e; rows are returned in site order."""
    try:
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
    except OSError as e:
        raise DataIOError(f"cannot read spot table {path}: {e}")
    required = {"site", "x", "y", "radius_1e"}
    if not rows or not required.issubset(rows[0].keys()):
        raise DataIOError(f"spot table {path} needs columns {sorted(required)}")
    try:
        rows.sort(key=lambda row: int(row["site"]))
        return [SiteSpot((float(row["x"]), float(row["y"])), float(row["radius_1e"])) for row in rows]
    except ValueError as e:
        raise DataIOError(f"bad value in spot table {path}: {e}")


def image_label(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]
