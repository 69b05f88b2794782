"""
core/stats.py — Ensemble observables

Intensity correlation g2 = <I^2>/<I>^2 over disorder realizations,
bootstrap uncertainty, localization level, amplitude-law classification
and histogram emission.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy import stats as sps

from core.errors import ConfigError, StatisticsError

logger = structlog.get_logger()

NORMALIZATION_TOL = 1e-9
LAMBDA_INPUT_TOL = 1e-6
MIN_CLASSIFY_SAMPLES = 50
BOOTSTRAP_CHUNK = 2_000_000  # resampled values held in memory at once

RAYLEIGH_LIKE = "rayleigh-like"
GAUSSIAN_LIKE = "gaussian-like"
DEGENERATE = "degenerate"  # every sample equal


@dataclass(frozen=True)
class EnsembleRecord:
    """
    One realization's persisted result; intensities are normalized to unit sum.
    Records extracted from facet images carry no couplings (empty tuple).
    """

    realization_seed: int
    couplings: Tuple[float, ...]
    normalized_intensities: Tuple[float, ...]
    excited_site: int
    n_sites: int
    amplitudes: Optional[Tuple[complex, ...]] = None

    def __post_init__(self):
        intens = np.asarray(self.normalized_intensities, dtype=float)
        if intens.size != self.n_sites or len(self.couplings) not in (0, self.n_sites):
            raise ConfigError(
                f"record for {self.n_sites} sites has {len(self.couplings)} couplings, {intens.size} intensities"
            )
        if np.any(intens < 0) or not np.all(np.isfinite(intens)):
            raise StatisticsError("intensities must be finite and non-negative")
        if abs(float(intens.sum()) - 1.0) > NORMALIZATION_TOL:
            raise StatisticsError(f"intensities sum to {intens.sum():.12f}, expected 1")
        if not 0 <= self.excited_site < self.n_sites:
            raise ConfigError(f"excited_site {self.excited_site} outside [0, {self.n_sites})")

    @classmethod
    def from_output(
        cls,
        realization_seed: int,
        couplings: Sequence[float],
        raw_intensities: Sequence[float],
        excited_site: int,
        amplitudes: Optional[Sequence[complex]] = None,
    ) -> "EnsembleRecord":
        """Build a record, normalizing raw intensities to unit sum."""
        intens = normalize(raw_intensities)
        return cls(
            realization_seed=int(realization_seed),
            couplings=tuple(float(c) for c in couplings),
            normalized_intensities=tuple(intens.tolist()),
            excited_site=int(excited_site),
            n_sites=int(intens.size),
            amplitudes=None if amplitudes is None else tuple(complex(a) for a in amplitudes),
        )

    @property
    def excited_intensity(self) -> float:
        return self.normalized_intensities[self.excited_site]


@dataclass(frozen=True)
class BootstrapReport:
    g2_mean: float
    g2_std: float
    resample_size: int
    repeats: int


@dataclass(frozen=True)
class AmplitudeClassification:
    label: str
    log_likelihood_ratio: float  # Rayleigh minus half-normal total log-likelihood
    rayleigh_scale: float
    halfnorm_scale: float
    samples: int


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def density(self) -> np.ndarray:
        total = self.counts.sum()
        return self.counts / (total * np.diff(self.edges))


@dataclass(frozen=True)
class IntensityProfile:
    """Ensemble-averaged intensity per site and by ring distance from the excited site."""

    per_site: np.ndarray
    by_distance: np.ndarray
    excited_share: float = field(default=0.0)


def normalize(intensities: Sequence[float]) -> np.ndarray:
    i = np.asarray(intensities, dtype=float)
    if np.any(i < 0) or not np.all(np.isfinite(i)):
        raise StatisticsError("intensities must be finite and non-negative")
    total = i.sum()
    if total <= 0:
        raise StatisticsError("cannot normalize an all-zero intensity vector")
    return i / total


def g2(samples: Sequence[float]) -> float:
    """<I^2> / <I>^2 over the sample set."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise StatisticsError(f"g2 needs at least 2 samples, got {x.size}")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise StatisticsError("g2 samples must be finite and non-negative")
    mean = x.mean()
    if mean == 0:
        raise StatisticsError("g2 undefined for all-zero samples")
    return float(np.mean(x * x) / (mean * mean))


def g2_rows(samples: np.ndarray) -> np.ndarray:
    """Row-wise g2 of a (R, S) sample matrix."""
    x = np.asarray(samples, dtype=float)
    mean = x.mean(axis=1)
    if np.any(mean == 0):
        raise StatisticsError("g2 undefined for an all-zero resample")
    return np.mean(x * x, axis=1) / (mean * mean)


def excited_samples(ensemble: Sequence[EnsembleRecord]) -> np.ndarray:
    return np.array([r.excited_intensity for r in ensemble], dtype=float)


def intensity_matrix(ensemble: Sequence[EnsembleRecord]) -> np.ndarray:
    if not ensemble:
        raise StatisticsError("empty ensemble")
    sizes = {r.n_sites for r in ensemble}
    if len(sizes) != 1:
        raise StatisticsError(f"ensemble mixes ring sizes {sorted(sizes)}")
    return np.array([r.normalized_intensities for r in ensemble], dtype=float)


def g2_per_site(ensemble: Sequence[EnsembleRecord]) -> np.ndarray:
    """g2 at every site, relative to each record's excited site (index 0 = excited)."""
    m = _aligned_intensities(ensemble)
    return np.array([g2(m[:, j]) for j in range(m.shape[1])])


def bootstrap_samples(
    samples: np.ndarray,
    resample_size: int,
    repeats: int,
    stream: np.random.Generator,
) -> BootstrapReport:
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise StatisticsError("bootstrap needs a nonempty ensemble")
    if resample_size < 2 or repeats < 2:
        raise ConfigError(f"resample_size and repeats must be >= 2, got {resample_size}, {repeats}")
    block = max(1, BOOTSTRAP_CHUNK // resample_size)
    values = np.empty(repeats)
    for start in range(0, repeats, block):
        stop = min(start + block, repeats)
        idx = stream.integers(0, x.size, size=(stop - start, resample_size))
        values[start:stop] = g2_rows(x[idx])
    return BootstrapReport(
        g2_mean=float(values.mean()),
        g2_std=float(values.std(ddof=1)),
        resample_size=int(resample_size),
        repeats=int(repeats),
    )


def bootstrap_g2(
    ensemble: Sequence[EnsembleRecord],
    resample_size: Optional[int],
    repeats: int,
    stream: np.random.Generator,
) -> BootstrapReport:
    """
    Resample the ensemble with replacement `repeats` times and report the
    mean and standard deviation of the resampled g2 values.
    resample_size defaults to the ensemble size.
    """
    samples = excited_samples(ensemble)
    size = samples.size if resample_size is None else resample_size
    report = bootstrap_samples(samples, size, repeats, stream)
    logger.debug("bootstrap_done", records=samples.size, g2_mean=report.g2_mean, g2_std=report.g2_std)
    return report


def localization_level(mean_intensities: Sequence[float]) -> float:
    """lambda = 1/2 sum |I_i - 1/N| for a unit-sum intensity vector."""
    i = np.asarray(mean_intensities, dtype=float)
    if i.ndim != 1 or i.size == 0:
        raise StatisticsError("localization level needs a nonempty intensity vector")
    if abs(float(i.sum()) - 1.0) > LAMBDA_INPUT_TOL:
        raise StatisticsError(f"intensities sum to {i.sum():.9f}; normalize first")
    return float(0.5 * np.sum(np.abs(i - 1.0 / i.size)))


def mean_intensities(ensemble: Sequence[EnsembleRecord]) -> np.ndarray:
    return intensity_matrix(ensemble).mean(axis=0)


def _aligned_intensities(ensemble: Sequence[EnsembleRecord]) -> np.ndarray:
    """Rows rolled so the excited site sits at index 0."""
    m = intensity_matrix(ensemble)
    shifts = np.array([r.excited_site for r in ensemble])
    cols = (np.arange(m.shape[1])[np.newaxis, :] + shifts[:, np.newaxis]) % m.shape[1]
    return np.take_along_axis(m, cols, axis=1)


def mean_intensity_profile(ensemble: Sequence[EnsembleRecord]) -> IntensityProfile:
    """Averaged light distribution, per site and folded by ring distance."""
    per_site = mean_intensities(ensemble)
    aligned = _aligned_intensities(ensemble).mean(axis=0)
    n = aligned.size
    by_distance = np.zeros(n // 2 + 1)
    for offset in range(n):
        by_distance[min(offset, n - offset)] += aligned[offset]
    return IntensityProfile(per_site=per_site, by_distance=by_distance, excited_share=float(aligned[0]))


def classify_amplitude_distribution(amplitudes: Sequence[float]) -> AmplitudeClassification:
    """
    Maximum-likelihood Rayleigh vs half-normal fit to nonnegative amplitudes.
    The larger total log-likelihood wins.
    """
    x = np.asarray(amplitudes, dtype=float)
    if x.size < MIN_CLASSIFY_SAMPLES:
        raise StatisticsError(f"need at least {MIN_CLASSIFY_SAMPLES} amplitude samples, got {x.size}")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise StatisticsError("amplitudes must be finite and non-negative")
    if np.ptp(x) == 0:
        raise StatisticsError("degenerate amplitude samples (all equal)")

    second_moment = float(np.mean(x * x))
    rayleigh_scale = np.sqrt(second_moment / 2.0)
    halfnorm_scale = np.sqrt(second_moment)
    with np.errstate(divide="ignore"):
        ll_rayleigh = float(np.sum(sps.rayleigh.logpdf(x, loc=0.0, scale=rayleigh_scale)))
    ll_halfnorm = float(np.sum(sps.halfnorm.logpdf(x, loc=0.0, scale=halfnorm_scale)))
    ratio = ll_rayleigh - ll_halfnorm
    return AmplitudeClassification(
        label=RAYLEIGH_LIKE if ratio > 0 else GAUSSIAN_LIKE,
        log_likelihood_ratio=ratio,
        rayleigh_scale=float(rayleigh_scale),
        halfnorm_scale=float(halfnorm_scale),
        samples=int(x.size),
    )


def classify_sites(amplitude_matrix: np.ndarray) -> List[AmplitudeClassification]:
    """
    Classification per column of a (realizations, sites) |psi| matrix.
    A column with a single repeated value (eta = 0 ensembles) is labelled
    degenerate instead of failing the whole report.
    """
    m = np.abs(np.asarray(amplitude_matrix))
    results = []
    for j in range(m.shape[1]):
        column = m[:, j]
        if column.size >= MIN_CLASSIFY_SAMPLES and np.ptp(column) == 0:
            logger.warning("degenerate_site_amplitudes", site_offset=j, value=float(column[0]))
            value = float(column[0])
            results.append(AmplitudeClassification(DEGENERATE, 0.0, value / np.sqrt(2.0), value, int(column.size)))
            continue
        results.append(classify_amplitude_distribution(column))
    return results


def histogram(samples: Sequence[float], bins: int, value_range: Optional[Tuple[float, float]] = None) -> Histogram:
    """Half-open bins, last bin closed."""
    if bins < 1:
        raise ConfigError(f"bins must be >= 1, got {bins}")
    x = np.asarray(samples, dtype=float)
    if value_range is not None and not value_range[0] < value_range[1]:
        raise StatisticsError(f"empty histogram range {value_range}")
    counts, edges = np.histogram(x, bins=bins, range=value_range)
    return Histogram(edges=edges, counts=counts)
