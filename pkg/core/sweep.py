"""
core/sweep.py — Phase-diagram engines

Gap maps of g2 over (N, eta), localization-level maps, the lambda bound
separating the gap-observable and localized regions, and the ensemble-size
study. Every random draw derives from (master_seed, cell key, realization
index), so results do not depend on grid composition or worker count.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from core import rng, stats
from core.config import (
    DEFAULT_C_MEAN,
    DEFAULT_CELL_ENSEMBLE,
    DEFAULT_REPEATS,
    FIGURE_Z_NORMALIZED,
)
from core.errors import BoundError, ConfigError
from core.evolve import pairing_mismatch, propagate_ensemble, to_distance
from core.lattice import (
    DisorderSpec,
    RingLattice,
    build_hamiltonian,
    find_chiral_permutation,
    ring_matrices,
    sample_coupling_batch,
)
from core.scheduler import WorkerPool

logger = structlog.get_logger()

SIMULATION_CHUNK = 8192
PAIRING_TOL = 1e-9
OPERATING_POINT_SIZE = 120
CELL_COLUMNS = ("n_sites", "eta", "g2_mean", "g2_std", "lambda_mean", "chiral")


@dataclass(frozen=True)
class SweepGrid:
    site_counts: Tuple[int, ...]
    disorder_levels: Tuple[float, ...]
    z_normalized: float = FIGURE_Z_NORMALIZED
    ensemble_size: int = DEFAULT_CELL_ENSEMBLE
    repeats: int = DEFAULT_REPEATS
    master_seed: int = 0
    c_mean: float = DEFAULT_C_MEAN
    excited_site: int = 0

    def __post_init__(self):
        sites = tuple(sorted({int(n) for n in self.site_counts}))
        etas = tuple(sorted({float(e) for e in self.disorder_levels}))
        if not sites or not etas:
            raise ConfigError("sweep grid needs at least one site count and one disorder level")
        if sites[0] < 3:
            raise ConfigError(f"site counts must be >= 3, got {sites[0]}")
        if etas[0] < 0 or etas[-1] > 1:
            raise ConfigError("disorder levels must lie in [0, 1]")
        if self.ensemble_size < 2 or self.repeats < 2:
            raise ConfigError("ensemble_size and repeats must be >= 2")
        if self.z_normalized < 0 or self.c_mean <= 0:
            raise ConfigError("z_normalized must be >= 0 and c_mean > 0")
        if not 0 <= self.excited_site < sites[0]:
            raise ConfigError(f"excited_site {self.excited_site} outside the smallest ring")
        object.__setattr__(self, "site_counts", sites)
        object.__setattr__(self, "disorder_levels", etas)


@dataclass(frozen=True)
class PhaseCell:
    n_sites: int
    eta: float
    g2_mean: float
    g2_std: float
    lambda_mean: float
    chiral: bool
    spectrally_paired: bool = False
    mean_intensity: Tuple[float, ...] = field(default=(), repr=False)

    def row(self) -> Tuple:
        return (self.n_sites, self.eta, self.g2_mean, self.g2_std, self.lambda_mean, self.chiral)


@dataclass(frozen=True)
class EnsembleOutput:
    couplings: np.ndarray  # (B, n)
    amplitudes: np.ndarray  # complex (B, n)
    eigenvalues: np.ndarray  # (B, n)

    @property
    def intensities(self) -> np.ndarray:
        raw = np.abs(self.amplitudes) ** 2
        return raw / raw.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class ParityGap:
    n_even: int
    n_odd: int
    eta: float
    g2_even: float
    g2_odd: float
    lambda_mean: float

    @property
    def gap(self) -> float:
        return abs(self.g2_even - self.g2_odd)


@dataclass(frozen=True)
class BoundEstimate:
    bound: float
    threshold: float
    boundary: Tuple[Tuple[int, float], ...]
    marked: int
    total: int


@dataclass(frozen=True)
class SizeBand:
    size: int
    n_sites: int
    g2_mean: float
    g2_std: float
    values: Tuple[float, ...] = field(default=(), repr=False)  # g2 of every simulated ensemble

    @property
    def low(self) -> float:
        return self.g2_mean - self.g2_std

    @property
    def high(self) -> float:
        return self.g2_mean + self.g2_std

    @property
    def operating_point(self) -> bool:
        return self.size == OPERATING_POINT_SIZE


def simulate_ensemble(
    spec: DisorderSpec,
    n_sites: int,
    z_normalized: float,
    indices: Iterable[int],
    master_seed: int,
    key: Sequence[int],
    excited_site: int = 0,
) -> EnsembleOutput:
    """Sample, diagonalize and propagate a set of realizations in chunks."""
    idx = np.fromiter((int(i) for i in indices), dtype=np.int64)
    z = to_distance(z_normalized, spec.c_mean)
    couplings = sample_coupling_batch(spec, n_sites, master_seed, idx, key)
    amplitudes = np.empty((idx.size, n_sites), dtype=complex)
    eigenvalues = np.empty((idx.size, n_sites))
    for start in range(0, idx.size, SIMULATION_CHUNK):
        stop = min(start + SIMULATION_CHUNK, idx.size)
        amps, values = propagate_ensemble(ring_matrices(couplings[start:stop]), excited_site, z)
        amplitudes[start:stop] = amps
        eigenvalues[start:stop] = values
    return EnsembleOutput(couplings, amplitudes, eigenvalues)


def cell_stream_key(n_sites: int, eta: float) -> Tuple[int, ...]:
    return (rng.REALIZATION_TAG, *rng.cell_key(n_sites, eta))


def run_cell(n: int, eta: float, grid: SweepGrid) -> PhaseCell:
    """Simulate one (N, eta) cell: bootstrap g2, ensemble-averaged lambda, chiral flag."""
    spec = DisorderSpec(grid.c_mean, eta)
    out = simulate_ensemble(
        spec, n, grid.z_normalized, range(grid.ensemble_size), grid.master_seed,
        cell_stream_key(n, eta), grid.excited_site,
    )
    intens = out.intensities
    boot = stats.bootstrap_samples(
        intens[:, grid.excited_site],
        grid.ensemble_size,
        grid.repeats,
        rng.stream(grid.master_seed, rng.BOOTSTRAP_TAG, *rng.cell_key(n, eta)),
    )
    mean_intensity = intens.mean(axis=0)
    mean_intensity = mean_intensity / mean_intensity.sum()
    lam = stats.localization_level(mean_intensity)

    chiral = find_chiral_permutation(build_hamiltonian(RingLattice(out.couplings[0]))) is not None
    scale = np.max(np.abs(out.eigenvalues), axis=1)
    paired = bool(np.all(pairing_mismatch(out.eigenvalues) <= PAIRING_TOL * np.maximum(scale, 1.0)))
    if chiral and not paired:
        logger.warning("chiral_cell_unpaired", n_sites=n, eta=eta)

    cell = PhaseCell(
        n_sites=int(n),
        eta=float(eta),
        g2_mean=boot.g2_mean,
        g2_std=boot.g2_std,
        lambda_mean=lam,
        chiral=chiral,
        spectrally_paired=paired,
        mean_intensity=tuple(mean_intensity.tolist()),
    )
    logger.debug("cell_done", n_sites=n, eta=eta, g2_mean=cell.g2_mean, lambda_mean=lam)
    return cell


def _cell_task(item: Tuple[int, float, SweepGrid]) -> PhaseCell:
    return run_cell(*item)


def gap_map(grid: SweepGrid, pool: Optional[WorkerPool] = None) -> List[List[PhaseCell]]:
    """One PhaseCell per (N, eta), rows by N, columns by eta."""
    pool = pool or WorkerPool(workers=1)
    items = [(n, eta, grid) for n in grid.site_counts for eta in grid.disorder_levels]
    flat = pool.map(_cell_task, items, label="cells")
    width = len(grid.disorder_levels)
    cells = [flat[i:i + width] for i in range(0, len(flat), width)]
    logger.info("gap_map_done", rows=len(cells), cols=width)
    return cells


def cell_rows(cells: Sequence[Sequence[PhaseCell]]) -> List[Tuple]:
    """Row-major by (n_sites, eta)."""
    flat = [c for row in cells for c in row]
    flat.sort(key=lambda c: (c.n_sites, c.eta))
    return [c.row() for c in flat]


def localization_map(cells: Sequence[Sequence[PhaseCell]]) -> List[Tuple[int, float, int, float]]:
    """Long-format averaged light distribution: (n_sites, eta, site, mean_intensity)."""
    rows = []
    for cell in sorted((c for row in cells for c in row), key=lambda c: (c.n_sites, c.eta)):
        for site, value in enumerate(cell.mean_intensity):
            rows.append((cell.n_sites, cell.eta, site, value))
    return rows


def parity_gaps(cells: Sequence[Sequence[PhaseCell]]) -> List[ParityGap]:
    """|g2_even - g2_odd| for each even N paired with N - 1 (4-3, 6-5, ...)."""
    lookup: Dict[Tuple[int, float], PhaseCell] = {(c.n_sites, c.eta): c for row in cells for c in row}
    gaps = []
    for (n, eta), even in sorted(lookup.items()):
        if n % 2:
            continue
        odd = lookup.get((n - 1, eta))
        if odd is None:
            continue
        gaps.append(ParityGap(
            n_even=n,
            n_odd=n - 1,
            eta=eta,
            g2_even=even.g2_mean,
            g2_odd=odd.g2_mean,
            lambda_mean=0.5 * (even.lambda_mean + odd.lambda_mean),
        ))
    return gaps


def derive_bound(
    gap_cells: Sequence[Sequence[PhaseCell]],
    loc_cells: Sequence[Sequence[PhaseCell]],
    gap_threshold: float,
) -> BoundEstimate:
    """
    Mark parity pairs whose g2 difference is below the threshold and return
    the median lambda over marked cells that border an unmarked cell.
    """
    gaps = parity_gaps(gap_cells)
    if not gaps:
        raise BoundError("grid has no adjacent odd/even site counts")
    lam_lookup = {(c.n_sites, c.eta): c.lambda_mean for row in loc_cells for c in row}

    pairs = sorted({g.n_even for g in gaps})
    etas = sorted({g.eta for g in gaps})
    marked = np.zeros((len(pairs), len(etas)), dtype=bool)
    present = np.zeros_like(marked)
    lam = np.full(marked.shape, np.nan)
    for g in gaps:
        i, j = pairs.index(g.n_even), etas.index(g.eta)
        try:
            lam[i, j] = 0.5 * (lam_lookup[(g.n_even, g.eta)] + lam_lookup[(g.n_odd, g.eta)])
        except KeyError:
            raise BoundError(f"localization cells do not cover N={g.n_even}/{g.n_odd}, eta={g.eta}")
        present[i, j] = True
        marked[i, j] = g.gap < gap_threshold

    if not marked.any() or marked[present].all():
        raise BoundError(f"no boundary at gap threshold {gap_threshold}: marked {int(marked.sum())} of {int(present.sum())}")

    boundary = []
    for i, j in zip(*np.nonzero(marked)):
        for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            ni, nj = i + di, j + dj
            if 0 <= ni < len(pairs) and 0 <= nj < len(etas) and present[ni, nj] and not marked[ni, nj]:
                boundary.append((i, j))
                break
    if not boundary:
        raise BoundError("grid too coarse to locate a boundary")

    bound = float(np.median([lam[i, j] for i, j in boundary]))
    estimate = BoundEstimate(
        bound=bound,
        threshold=float(gap_threshold),
        boundary=tuple((pairs[i], etas[j]) for i, j in boundary),
        marked=int(marked.sum()),
        total=int(present.sum()),
    )
    logger.info("bound_derived", bound=bound, threshold=gap_threshold, boundary_cells=len(boundary))
    return estimate


def _study_task(item: Tuple[int, int, int, DisorderSpec, float, int, int]) -> SizeBand:
    n, size, repeats, spec, z_normalized, master_seed, excited_site = item
    eta_key = rng.cell_key(n, spec.eta)[1]
    couplings = np.vstack([
        sample_coupling_batch(spec, n, master_seed, range(size), (rng.STUDY_TAG, n, eta_key, size, r))
        for r in range(repeats)
    ])
    z = to_distance(z_normalized, spec.c_mean)
    samples = np.empty(couplings.shape[0])
    for start in range(0, couplings.shape[0], SIMULATION_CHUNK):
        stop = min(start + SIMULATION_CHUNK, couplings.shape[0])
        amps, _ = propagate_ensemble(ring_matrices(couplings[start:stop]), excited_site, z)
        raw = np.abs(amps) ** 2
        samples[start:stop] = raw[:, excited_site] / raw.sum(axis=1)
    values = stats.g2_rows(samples.reshape(repeats, size))
    return SizeBand(
        size=size,
        n_sites=n,
        g2_mean=float(values.mean()),
        g2_std=float(values.std(ddof=1)),
        values=tuple(values.tolist()),
    )


def ensemble_size_study(
    n_odd: int,
    n_even: int,
    sizes: Sequence[int],
    repeats: int,
    spec: DisorderSpec,
    z_normalized: float,
    master_seed: int,
    excited_site: int = 0,
    pool: Optional[WorkerPool] = None,
) -> Dict[int, List[SizeBand]]:
    """
    For each ensemble size, simulate `repeats` independent ensembles per
    parity and report mean +- 1 std of g2 across them.
    """
    sizes = [int(s) for s in sizes]
    if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ConfigError(f"sizes must be nonempty and strictly ascending, got {sizes}")
    if sizes[0] < 2 or repeats < 2:
        raise ConfigError("ensemble sizes and repeats must be >= 2")
    if n_odd % 2 == 0 or n_even % 2 == 1:
        raise ConfigError(f"expected an odd and an even site count, got {n_odd}, {n_even}")

    pool = pool or WorkerPool(workers=1)
    items = [(n, s, repeats, spec, z_normalized, master_seed, excited_site) for n in (n_odd, n_even) for s in sizes]
    bands = pool.map(_study_task, items, label="ensemble sizes")
    result = {n_odd: bands[:len(sizes)], n_even: bands[len(sizes):]}
    logger.info("size_study_done", n_odd=n_odd, n_even=n_even, sizes=len(sizes), repeats=repeats)
    return result


def bands_overlap(a: SizeBand, b: SizeBand) -> bool:
    return a.low <= b.high and b.low <= a.high
