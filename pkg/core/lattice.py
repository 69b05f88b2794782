"""
core/lattice.py — Disordered ring lattices

Builds disorder realizations of nearest-neighbor ring lattices with
off-diagonal (coupling) disorder, their coupled-mode Hamiltonians, and
detects chiral structure: a two-coloring of the sites under which the
Hamiltonian becomes block off-diagonal.
"""

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import structlog

from core import rng
from core.errors import ConfigError

logger = structlog.get_logger()

MIN_RING_SITES = 3
SYMMETRY_ATOL = 1e-12
REALIZATION_BLOCK = 1024


@dataclass(frozen=True)
class DisorderSpec:
    """Uniform coupling law on [c_mean - half_width, c_mean + half_width]."""

    c_mean: float
    eta: float

    def __post_init__(self):
        if not np.isfinite(self.c_mean) or self.c_mean <= 0:
            raise ConfigError(f"c_mean must be positive, got {self.c_mean}")
        if not np.isfinite(self.eta) or not 0.0 <= self.eta <= 1.0:
            raise ConfigError(f"eta must lie in [0, 1], got {self.eta}")

    @property
    def half_width(self) -> float:
        return self.eta * self.c_mean

    @property
    def low(self) -> float:
        return self.c_mean - self.half_width

    @property
    def high(self) -> float:
        return self.c_mean + self.half_width


@dataclass(frozen=True)
class RingLattice:
    """One realization: couplings[k] joins site k and site (k + 1) mod n_sites."""

    couplings: np.ndarray
    excited_site: int = 0

    def __post_init__(self):
        c = np.array(self.couplings, dtype=float)
        if c.ndim != 1 or c.size < MIN_RING_SITES:
            raise ConfigError(f"a ring needs at least {MIN_RING_SITES} sites, got {c.size}")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise ConfigError("couplings must be finite and non-negative")
        if not 0 <= self.excited_site < c.size:
            raise ConfigError(f"excited_site {self.excited_site} outside [0, {c.size})")
        c.setflags(write=False)
        object.__setattr__(self, "couplings", c)

    @property
    def n_sites(self) -> int:
        return int(self.couplings.size)


@dataclass(frozen=True)
class Hamiltonian:
    """Real symmetric coupling matrix with zero diagonal."""

    matrix: np.ndarray

    def __post_init__(self):
        h = np.array(self.matrix, dtype=float)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ConfigError(f"Hamiltonian must be square, got shape {h.shape}")
        if not np.allclose(h, h.T, rtol=0.0, atol=SYMMETRY_ATOL):
            raise ConfigError("Hamiltonian must be symmetric")
        if np.any(np.diag(h) != 0.0):
            raise ConfigError("only off-diagonal disorder is supported; diagonal must be zero")
        h.setflags(write=False)
        object.__setattr__(self, "matrix", h)

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])


@dataclass(frozen=True)
class Bipartition:
    """Two-coloring of the sites; permutation lists A-sites then B-sites."""

    coloring: Tuple[str, ...]
    permutation: Tuple[int, ...] = field(default=())

    @property
    def a_sites(self) -> List[int]:
        return [i for i, label in enumerate(self.coloring) if label == "A"]

    @property
    def b_sites(self) -> List[int]:
        return [i for i, label in enumerate(self.coloring) if label == "B"]


def sample_couplings(spec: DisorderSpec, n_sites: int, stream: np.random.Generator) -> np.ndarray:
    """
    Draw n_sites i.i.d. couplings from Uniform[c_mean - dc, c_mean + dc].
    Edge k receives the k-th draw of the stream.
    """
    if n_sites < 2:
        raise ConfigError(f"n_sites must be >= 2, got {n_sites}")
    return stream.uniform(spec.low, spec.high, size=int(n_sites))


def sample_coupling_batch(
    spec: DisorderSpec,
    n_sites: int,
    master_seed: int,
    indices: Iterable[int],
    key: Sequence[int] = (rng.REALIZATION_TAG,),
) -> np.ndarray:
    """
    Stacked coupling vectors, one row per realization index.

    Realization i is row i % REALIZATION_BLOCK of a block drawn from the
    stream (master_seed, *key, i // REALIZATION_BLOCK); edge k is column k.
    A row depends only on (master_seed, key, i, k), never on which other
    indices were requested.
    """
    if n_sites < 2:
        raise ConfigError(f"n_sites must be >= 2, got {n_sites}")
    idx = np.fromiter((int(i) for i in indices), dtype=np.int64)
    out = np.empty((idx.size, n_sites))
    if idx.size == 0:
        return out
    if np.any(idx < 0):
        raise ConfigError("realization indices must be non-negative")
    blocks = idx // REALIZATION_BLOCK
    for block in np.unique(blocks):
        stream = rng.stream(master_seed, *key, int(block))
        drawn = stream.uniform(spec.low, spec.high, size=(REALIZATION_BLOCK, n_sites))
        mask = blocks == block
        out[mask] = drawn[idx[mask] % REALIZATION_BLOCK]
    return out


def realization(
    spec: DisorderSpec,
    n_sites: int,
    master_seed: int,
    index: int,
    key: Sequence[int] = (rng.REALIZATION_TAG,),
    excited_site: int = 0,
) -> RingLattice:
    """The index-th realization of a ring ensemble keyed by (master_seed, key)."""
    couplings = sample_coupling_batch(spec, n_sites, master_seed, [index], key)[0]
    return RingLattice(couplings, excited_site=excited_site)


def build_hamiltonian(lattice: RingLattice) -> Hamiltonian:
    return Hamiltonian(ring_matrices(lattice.couplings[np.newaxis, :])[0])


def ring_matrices(couplings: np.ndarray) -> np.ndarray:
    """Batched ring Hamiltonians: (B, n) couplings -> (B, n, n) matrices."""
    c = np.asarray(couplings, dtype=float)
    if c.ndim != 2 or c.shape[1] < MIN_RING_SITES:
        raise ConfigError(f"couplings must have shape (B, n>={MIN_RING_SITES}), got {c.shape}")
    batch, n = c.shape
    h = np.zeros((batch, n, n))
    k = np.arange(n)
    nxt = (k + 1) % n
    h[:, k, nxt] = c
    h[:, nxt, k] = c
    return h


def find_chiral_permutation(hamiltonian: Hamiltonian) -> Optional[Bipartition]:
    """
    Two-color the graph of nonzero off-diagonal entries.

    Returns None when the graph has an odd cycle (chiral symmetry broken).
    Site 0's color is labeled A.
    """
    h = hamiltonian.matrix
    graph = nx.Graph()
    graph.add_nodes_from(range(hamiltonian.n))
    rows, cols = np.nonzero(np.triu(h, k=1))
    graph.add_edges_from(zip(rows.tolist(), cols.tolist()))

    if not nx.is_bipartite(graph):
        logger.debug("bipartition_absent", n=hamiltonian.n)
        return None

    colors = nx.bipartite.color(graph)
    anchor = colors[0]
    coloring = tuple("A" if colors[i] == anchor else "B" for i in range(hamiltonian.n))
    permutation = tuple(
        [i for i, label in enumerate(coloring) if label == "A"]
        + [i for i, label in enumerate(coloring) if label == "B"]
    )
    return Bipartition(coloring=coloring, permutation=permutation)


def permute(hamiltonian: Hamiltonian, bipartition: Bipartition) -> np.ndarray:
    """H reordered by the bipartition permutation."""
    p = np.asarray(bipartition.permutation, dtype=int)
    return hamiltonian.matrix[np.ix_(p, p)]


def is_block_off_diagonal(hamiltonian: Hamiltonian, bipartition: Bipartition) -> bool:
    m = permute(hamiltonian, bipartition)
    n_a = len(bipartition.a_sites)
    return bool(np.all(m[:n_a, :n_a] == 0.0) and np.all(m[n_a:, n_a:] == 0.0))


def is_chiral_ring(n_sites: int) -> bool:
    """Parity law for rings: bipartite iff the site count is even."""
    return n_sites % 2 == 0
