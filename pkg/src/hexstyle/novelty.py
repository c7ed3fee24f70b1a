"""One-class novelty scoring against a bootstrap target distribution.

A query passage is collapsed to its mean feature vector and scored by
squared Mahalanobis distance against a target distribution built from
many random same-size chunks of the reference corpus, with the query's
own lines excluded from every draw.  The distance decomposes into
per-feature contributions that sum exactly to the total, and a p-value
follows from the chi-square survival function.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .features import FEATURE_NAMES
from .numerics import (
    TargetDistribution,
    build_distribution,
    chi2_sf,
    contribution_vector,
    pearson_r,
)
from .sampling import PER_LINE, bootstrap_chunks

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoveltyParams:
    chunk_size: int = 81
    n_samples: int = 10_000
    seed: int = 0
    df: int | None = None          # None: feature count - 1
    replacement: str = PER_LINE


@dataclass(frozen=True, eq=False)
class NoveltyReport:
    """Everything needed to reproduce and read one novelty score.

    ``contributions`` is sorted by score descending; ``sample_pct`` and
    ``target_pct`` stay in canonical feature order (query and target
    feature means, times 100).
    """

    query_id: str
    M2: float
    p: float
    df: int
    contributions: tuple[tuple[str, float], ...]
    sample_pct: np.ndarray
    target_pct: np.ndarray
    n_samples: int
    chunk_size: int
    seed: int
    ridge_used: float

    def contribution_in_order(self) -> np.ndarray:
        by_name = dict(self.contributions)
        return np.array([by_name[name] for name in FEATURE_NAMES[: len(by_name)]])


def build_target(corpus_lines, exclude=(), *, k: int = 81, n_samples: int = 10_000,
                 seed=0, df: int | None = None,
                 replacement: str = PER_LINE) -> TargetDistribution:
    """Bootstrap a target distribution from the non-excluded lines."""
    corpus_lines = np.atleast_2d(np.asarray(corpus_lines, dtype=float))
    n = len(corpus_lines)
    exclude = set(int(i) for i in exclude)
    if exclude:
        bad = [i for i in exclude if not 0 <= i < n]
        if bad:
            raise DataError(f"excluded indices {bad[:5]} outside corpus of {n} lines")
        keep = np.array([i for i in range(n) if i not in exclude], dtype=np.intp)
        corpus_lines = corpus_lines[keep]
    if len(corpus_lines) < k:
        raise DataError(
            f"only {len(corpus_lines)} lines remain after exclusion; "
            f"need at least {k} to draw {k}-line sets"
        )
    samples = bootstrap_chunks(corpus_lines, k, n_samples, seed, replacement)
    return build_distribution(samples, df=df)


def _make_report(query_vec, dist: TargetDistribution, params: NoveltyParams,
                 query_id: str) -> NoveltyReport:
    contrib = contribution_vector(query_vec, dist)
    m2 = max(float(contrib.sum()), 0.0)
    p = chi2_sf(m2, dist.df)
    names = FEATURE_NAMES[: len(contrib)]
    entries = sorted(zip(names, (float(v) for v in contrib)),
                     key=lambda item: -item[1])
    report = NoveltyReport(
        query_id=query_id,
        M2=m2,
        p=p,
        df=dist.df,
        contributions=tuple(entries),
        sample_pct=np.asarray(query_vec, dtype=float) * 100.0,
        target_pct=dist.mu * 100.0,
        n_samples=params.n_samples,
        chunk_size=params.chunk_size,
        seed=params.seed,
        ridge_used=dist.ridge_used,
    )
    _check_report(report)
    return report


def _check_report(report: NoveltyReport) -> None:
    # post-write consistency: contributions sum to M2, p matches it
    total = sum(v for _, v in report.contributions)
    if abs(total - report.M2) > 1e-9 * max(abs(report.M2), 1.0):
        raise AssertionError(
            f"contribution sum {total} != M2 {report.M2} for {report.query_id}"
        )
    if abs(report.p - chi2_sf(report.M2, report.df)) > 1e-12:
        raise AssertionError(f"p-value inconsistent for {report.query_id}")


def novelty_test(query_lines, corpus_lines, params: NoveltyParams | None = None,
                 exclude=None, query_id: str = "query", seed=None) -> NoveltyReport:
    """Score a multi-line query against a reference corpus.

    The query collapses to a single mean vector.  When the query's lines
    are part of the corpus, pass their indices as ``exclude`` so the
    target is built leave-query-out.
    """
    params = params or NoveltyParams()
    query_lines = np.atleast_2d(np.asarray(query_lines, dtype=float))
    if len(query_lines) == 0:
        raise DataError("query is empty")
    dist = build_target(
        corpus_lines,
        () if exclude is None else exclude,
        k=params.chunk_size,
        n_samples=params.n_samples,
        seed=params.seed if seed is None else seed,
        df=params.df,
        replacement=params.replacement,
    )
    return _make_report(query_lines.mean(axis=0), dist, params, query_id)


def centroid_compare(corpus_a_lines, corpus_b_lines,
                     params: NoveltyParams | None = None,
                     query_id: str = "centroid") -> NoveltyReport:
    """Score the centroid of corpus A against a target built from corpus B."""
    params = params or NoveltyParams()
    corpus_a_lines = np.atleast_2d(np.asarray(corpus_a_lines, dtype=float))
    if len(corpus_a_lines) == 0:
        raise DataError("corpus A is empty")
    dist = build_target(
        corpus_b_lines, (),
        k=params.chunk_size, n_samples=params.n_samples,
        seed=params.seed, df=params.df, replacement=params.replacement,
    )
    return _make_report(corpus_a_lines.mean(axis=0), dist, params, query_id)


def window_starts(n: int, window: int, step: int) -> range:
    """Start offsets of full windows: 0, step, ... while start+window <= n."""
    if window < 1 or step < 1:
        raise ValueError("window and step must be >= 1")
    if n < window:
        return range(0)
    return range(0, n - window + 1, step)


def rolling_scan(corpus_lines, window: int = 81, step: int = 27,
                 params: NoveltyParams | None = None,
                 labels=None) -> list[NoveltyReport]:
    """Leave-window-out novelty score for every full window of the corpus.

    Each window's bootstrap runs on its own substream derived from
    (seed, window index), so scores do not depend on evaluation order.
    """
    params = params or NoveltyParams()
    corpus_lines = np.atleast_2d(np.asarray(corpus_lines, dtype=float))
    n = len(corpus_lines)
    if n < window:
        raise DataError(f"corpus has {n} lines, smaller than the window {window}")
    reports = []
    for w_index, start in enumerate(window_starts(n, window, step)):
        stop = start + window
        if labels is not None:
            label = f"{labels[start]}-{labels[stop - 1]}"
        else:
            label = f"lines {start + 1}-{stop}"
        sub_seed = np.random.SeedSequence(params.seed, spawn_key=(w_index,))
        reports.append(
            novelty_test(
                corpus_lines[start:stop],
                corpus_lines,
                params,
                exclude=range(start, stop),
                query_id=label,
                seed=sub_seed,
            )
        )
    return reports


def correlation_table(corpus_lines, threshold: float) -> list[tuple[str, str, float]]:
    """Unordered feature pairs with |r| >= threshold, strongest first.

    Constant features cannot be correlated and are skipped with a notice.
    """
    corpus_lines = np.atleast_2d(np.asarray(corpus_lines, dtype=float))
    if len(corpus_lines) < 2:
        raise DataError("need at least 2 lines to correlate features")
    names = FEATURE_NAMES[: corpus_lines.shape[1]]
    usable = []
    for i, name in enumerate(names):
        if np.ptp(corpus_lines[:, i]) == 0.0:
            log.info("feature %s is constant; skipped from correlation table", name)
        else:
            usable.append(i)
    pairs = []
    for a_pos, i in enumerate(usable):
        for j in usable[a_pos + 1:]:
            r = pearson_r(corpus_lines[:, i], corpus_lines[:, j])
            if r is not None and abs(r) >= threshold:
                pairs.append((names[i], names[j], r))
    pairs.sort(key=lambda entry: -abs(entry[2]))
    return pairs
