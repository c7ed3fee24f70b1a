"""Seeded shuffling, chunking, splitting and bootstrap resampling.

Everything here is deterministic given its seed.  PRNG_ID names the
generator and library version and is embedded in every CLI artifact so
results can be reproduced exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

PRNG_ID = f"numpy.random.Generator(PCG64) numpy=={np.__version__}"

# How bootstrap sets are drawn: each set as k independent line draws with
# replacement ("per_line", the default), or k distinct lines per set with
# overlap only across sets ("distinct_lines", for sensitivity checks).
PER_LINE = "per_line"
DISTINCT_LINES = "distinct_lines"


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Wrap an int seed; pass SeedSequence substreams through unchanged."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


@dataclass(frozen=True)
class ChunkingConfig:
    chunk_size: int
    shuffle: bool = True
    seed: int | None = None

    def __post_init__(self):
        if self.chunk_size < 1:
            raise ValueError(f"chunk_size must be >= 1, got {self.chunk_size}")


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Feature rows with author labels and per-row provenance.

    ``provenance`` holds one (source_id, line_names) tuple per row so a
    chunk can always be traced back to its constituent lines.
    """

    X: np.ndarray
    y: np.ndarray
    provenance: tuple = ()

    def __post_init__(self):
        if len(self.X) != len(self.y):
            raise ValueError("X and y row counts differ")
        if self.provenance and len(self.provenance) != len(self.X):
            raise ValueError("provenance length differs from row count")

    def __len__(self):
        return len(self.X)

    def take(self, indices) -> "LabeledDataset":
        indices = np.asarray(indices, dtype=np.intp)
        prov = tuple(self.provenance[i] for i in indices) if self.provenance else ()
        return LabeledDataset(self.X[indices], self.y[indices], prov)


def permutation_indices(n: int, seed) -> np.ndarray:
    return np.random.default_rng(seed).permutation(n)


def shuffle_lines(vectors, seed) -> np.ndarray:
    """Return the vectors in a seed-determined random order."""
    vectors = np.asarray(vectors, dtype=float)
    return vectors[permutation_indices(len(vectors), seed)]


def chunk_mean(vectors, k: int) -> np.ndarray:
    """Mean of consecutive k-line groups; the n mod k remainder is dropped."""
    if k < 1:
        raise ValueError(f"chunk size must be >= 1, got {k}")
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    n_chunks = len(vectors) // k
    if n_chunks == 0:
        return np.empty((0, vectors.shape[1]))
    used = vectors[: n_chunks * k]
    return used.reshape(n_chunks, k, -1).mean(axis=1)


def train_test_split(ds: LabeledDataset, test_fraction: float, seed):
    """Stratified split; round(test_fraction * n) test rows per label."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for label in sorted(np.unique(ds.y).tolist()):
        rows = np.flatnonzero(ds.y == label)
        if len(rows) < 2:
            raise DataError(f"label {label!r} has fewer than 2 rows; cannot split")
        rows = rows[rng.permutation(len(rows))]
        n_test = int(round(test_fraction * len(rows)))
        test_idx.extend(rows[:n_test].tolist())
        train_idx.extend(rows[n_test:].tolist())
    return ds.take(sorted(train_idx)), ds.take(sorted(test_idx))


def bootstrap_chunks(vectors, k: int, n_samples: int, seed,
                     replacement: str = PER_LINE) -> np.ndarray:
    """n_samples rows, each the mean of a random k-line set.

    ``seed`` may be an int or a numpy SeedSequence (callers that score
    windows in parallel pass per-window substreams).
    """
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    n = len(vectors)
    if n == 0:
        raise DataError("cannot bootstrap from an empty line set")
    rng = np.random.default_rng(seed)
    out = np.empty((n_samples, vectors.shape[1]))
    if replacement == PER_LINE:
        # gather in blocks to bound the (rows, k, features) intermediate
        block = max(1, 2_000_000 // max(k, 1))
        for start in range(0, n_samples, block):
            stop = min(start + block, n_samples)
            idx = rng.integers(0, n, size=(stop - start, k))
            out[start:stop] = vectors[idx].mean(axis=1)
    elif replacement == DISTINCT_LINES:
        if k > n:
            raise DataError(f"cannot draw {k} distinct lines from {n}")
        for i in range(n_samples):
            idx = rng.choice(n, size=k, replace=False, shuffle=False)
            out[i] = vectors[idx].mean(axis=0)
    else:
        raise ValueError(f"unknown replacement mode {replacement!r}")
    return out
