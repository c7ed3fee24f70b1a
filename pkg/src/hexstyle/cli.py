"""Batch command-line interface.

Commands: features, classify, novelty, rolling, correlations, fetch.
Feature files (CSV or JSONL) are the interchange format between
commands: parse and accent once, analyze many times.  Every produced
artifact begins with a run manifest (command, arguments, seed, PRNG id,
toolkit version, input digests, timestamp); re-running a command with
identical inputs and seed reproduces the data section byte for byte.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .accent import AccentConfig
from .corpus import parse_document
from .errors import DataError, NumericsError, ToolkitError, UsageError
from .features import FEATURE_NAMES, feature_matrix, homodyne_percentages
from .fetch import default_cache_dir, fetch_corpus
from .models import (
    HyperParams,
    ModelKind,
    average_importances,
    kind_from_name,
    pairwise_experiment,
)
from .novelty import (
    NoveltyParams,
    NoveltyReport,
    correlation_table,
    novelty_test,
    rolling_scan,
    window_starts,
)
from .sampling import DISTINCT_LINES, PER_LINE, PRNG_ID, ChunkingConfig

log = logging.getLogger(__name__)

_MODEL_CHOICES = [k.value for k in ModelKind] + ["all"]


# ---------------------------------------------------------------- manifests

def _sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def build_manifest(command: str, arguments: dict, seed, input_paths,
                   extra: dict | None = None) -> dict:
    manifest = {
        "command": command,
        "arguments": {k: v for k, v in sorted(arguments.items())},
        "seed": seed,
        "prng_id": PRNG_ID,
        "toolkit_version": __version__,
        "input_digests": {str(p): _sha256_file(p) for p in input_paths},
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    if extra:
        manifest.update(extra)
    return manifest


def manifest_comment_lines(manifest: dict) -> list[str]:
    return [f"# {key}: {json.dumps(value, sort_keys=True)}\n"
            for key, value in manifest.items()]


def _open_output(output):
    if output is None:
        return sys.stdout, False
    return open(output, "w", encoding="utf-8", newline=""), True


def write_csv_artifact(output, manifest, header, rows) -> None:
    stream, close = _open_output(output)
    try:
        stream.writelines(manifest_comment_lines(manifest))
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if close:
            stream.close()


def write_json_artifact(output, manifest, payload: dict) -> None:
    text = json.dumps({"manifest": manifest, **payload}, indent=2)
    if output is None:
        print(text)
    else:
        Path(output).write_text(text + "\n", encoding="utf-8")


def _fmt(value) -> str:
    # tables and CSV data cells: 6 significant digits, '.' decimal
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


# ------------------------------------------------------------ feature files

def _check_feature_header(columns, path):
    expected = ["source_id", "name", *FEATURE_NAMES]
    if list(columns) != expected:
        raise DataError(
            f"{path}: feature file header {list(columns)!r} does not match "
            f"the canonical layout {expected!r}"
        )


def read_feature_csv(path):
    meta, rows = [], []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty feature file") from None
        _check_feature_header(header, path)
        for lineno, record in enumerate(reader, start=2):
            if len(record) != len(header):
                raise DataError(f"{path}: row {lineno} has {len(record)} "
                                f"columns, expected {len(header)}")
            meta.append((record[0], record[1]))
            rows.append([float(v) for v in record[2:]])
    X = np.array(rows, dtype=float) if rows else np.empty((0, len(FEATURE_NAMES)))
    return meta, X


def read_feature_jsonl(path):
    meta, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            raw = raw.strip()
            if not raw:
                continue
            obj = json.loads(raw)
            if "manifest" in obj and "source_id" not in obj:
                continue
            meta.append((obj["source_id"], obj["name"]))
            rows.append([float(obj[name]) for name in FEATURE_NAMES])
    X = np.array(rows, dtype=float) if rows else np.empty((0, len(FEATURE_NAMES)))
    return meta, X


def load_features(path):
    """Read a feature file written by the features command."""
    try:
        if str(path).endswith(".jsonl"):
            return read_feature_jsonl(path)
        return read_feature_csv(path)
    except OSError as exc:
        raise DataError(f"cannot read feature file {path}: {exc}") from exc
    except (ValueError, KeyError) as exc:
        raise DataError(f"{path}: malformed feature file: {exc}") from exc


def _require_positive(args, names) -> None:
    for name in names:
        value = getattr(args, name)
        if value is not None and value < 1:
            raise UsageError(f"--{name} must be a positive integer, got {value}")


def _parse_range(text: str, n: int, what: str) -> range:
    """1-based inclusive "start:end" into a 0-based row range."""
    sep = ":" if ":" in text else "-"
    parts = text.split(sep)
    if len(parts) != 2:
        raise UsageError(f"{what} must look like START:END, got {text!r}")
    try:
        start, end = int(parts[0]), int(parts[1])
    except ValueError:
        raise UsageError(f"{what} must be integers, got {text!r}") from None
    if start < 1 or end < start:
        raise UsageError(f"{what} {text!r} is not an increasing 1-based range")
    if end > n:
        raise DataError(f"{what} {text!r} outside corpus of {n} lines")
    return range(start - 1, end)


# ------------------------------------------------------------------ tables

def _print_novelty_table(report: NoveltyReport, stream=None) -> None:
    stream = stream or sys.stdout
    samp = dict(zip(FEATURE_NAMES, report.sample_pct))
    mean = dict(zip(FEATURE_NAMES, report.target_pct))
    print(f"query: {report.query_id}", file=stream)
    print(
        f"M2 = {_fmt(report.M2)}   df = {report.df}   p = {_fmt(report.p)}   "
        f"(k={report.chunk_size}, n_samples={report.n_samples}, "
        f"seed={report.seed}, ridge={_fmt(report.ridge_used)})",
        file=stream,
    )
    print(f"{'Feat':<6} {'Score':>9} {'Samp%':>8} {'Mean%':>8}", file=stream)
    for name, score in report.contributions:
        print(
            f"{name:<6} {_fmt(score):>9} {samp[name]:>8.2f} {mean[name]:>8.2f}",
            file=stream,
        )
    print(file=stream)


def _report_payload(report: NoveltyReport) -> dict:
    return {
        "query_id": report.query_id,
        "M2": report.M2,
        "p": report.p,
        "df": report.df,
        "contributions": [[name, value] for name, value in report.contributions],
        "sample_pct": [float(v) for v in report.sample_pct],
        "target_pct": [float(v) for v in report.target_pct],
        "n_samples": report.n_samples,
        "chunk_size": report.chunk_size,
        "seed": report.seed,
        "ridge_used": report.ridge_used,
    }


# ---------------------------------------------------------------- commands

def cmd_features(args) -> int:
    accent_cfg = (AccentConfig.from_file(args.accent_config)
                  if args.accent_config else AccentConfig.default())
    inputs = [Path(p) for p in args.inputs]
    failures = []
    meta, matrices, summaries = [], [], []
    for path in inputs:
        try:
            corpus = parse_document(path, source_id=path.stem)
        except (OSError, DataError) as exc:
            failures.append(f"{path}: {exc}")
            continue
        X = feature_matrix(corpus.lines, accent_cfg)
        matrices.append(X)
        meta.extend((corpus.source_id, line.name) for line in corpus.lines)
        summaries.append((corpus.source_id, len(corpus.lines), len(corpus.skipped), X))
    if failures:
        for failure in failures:
            print(f"error: {failure}", file=sys.stderr)
        raise DataError(f"{len(failures)} of {len(inputs)} inputs unreadable")

    X = (np.vstack([m for m in matrices if len(m)])
         if any(len(m) for m in matrices) else np.empty((0, len(FEATURE_NAMES))))
    manifest = build_manifest(
        "features",
        {"inputs": [str(p) for p in inputs],
         "accent_config": args.accent_config, "format": args.format},
        args.seed, inputs,
    )
    header = ["source_id", "name", *FEATURE_NAMES]
    if args.format == "jsonl":
        stream, close = _open_output(args.output)
        try:
            stream.write(json.dumps({"manifest": manifest}) + "\n")
            for (source_id, name), row in zip(meta, X):
                obj = {"source_id": source_id, "name": name}
                obj.update({f: int(v) for f, v in zip(FEATURE_NAMES, row)})
                stream.write(json.dumps(obj) + "\n")
        finally:
            if close:
                stream.close()
    else:
        rows = [[source_id, name, *(int(v) for v in row)]
                for (source_id, name), row in zip(meta, X)]
        write_csv_artifact(args.output, manifest, header, rows)

    info = sys.stdout if args.output else sys.stderr
    for source_id, n_lines, n_skipped, matrix in summaries:
        print(f"{source_id}: {n_lines} hexameters, {n_skipped} skipped", file=info)
        if len(matrix):
            rates = homodyne_percentages(matrix)
            print(
                "  homodyne by foot: "
                + "  ".join(f"F{i + 1} {rate:.2f}%" for i, rate in enumerate(rates))
                + f"  (fourth-foot homodyne {rates[3]:.2f}%)",
                file=info,
            )
    return 0


def _subset_indices(spec_text: str) -> list[int]:
    names = [name.strip() for name in spec_text.split(",") if name.strip()]
    unknown = [name for name in names if name not in FEATURE_NAMES]
    if unknown:
        raise UsageError(f"unknown feature names: {unknown}")
    if not names:
        raise UsageError("empty feature subset")
    return [FEATURE_NAMES.index(name) for name in names]


def _child_seed(root_seed: int, *key) -> int:
    return int(np.random.SeedSequence(root_seed, spawn_key=key).generate_state(1)[0])


def cmd_classify(args) -> int:
    _require_positive(args, ["chunk"])
    meta_a, X_a = load_features(args.corpus_a)
    meta_b, X_b = load_features(args.corpus_b)
    names_a = [name for _, name in meta_a]
    names_b = [name for _, name in meta_b]
    pair = (meta_a[0][0] if meta_a else Path(args.corpus_a).stem,
            meta_b[0][0] if meta_b else Path(args.corpus_b).stem)

    feature_names = FEATURE_NAMES
    if args.features:
        idx = _subset_indices(args.features)
        X_a, X_b = X_a[:, idx], X_b[:, idx]
        feature_names = tuple(FEATURE_NAMES[i] for i in idx)

    kinds = ([kind_from_name(args.model)] if args.model != "all"
             else list(ModelKind))
    if args.sweep:
        try:
            sizes = [int(s) for s in args.sweep.split(",")]
        except ValueError:
            raise UsageError(f"--sweep must be comma-separated integers, "
                             f"got {args.sweep!r}") from None
        if any(s < 1 for s in sizes):
            raise UsageError("--sweep sizes must be positive")
    else:
        sizes = [args.chunk]
    hyper = HyperParams()

    reports = []
    for si, size in enumerate(sizes):
        for ki, kind in enumerate(kinds):
            seed = _child_seed(args.seed, si, ki)
            report = pairwise_experiment(
                X_a, X_b,
                ChunkingConfig(chunk_size=size, shuffle=not args.no_shuffle),
                kind, hyper, seed=seed, pair=pair,
                names_a=names_a, names_b=names_b,
                feature_names=feature_names,
            )
            reports.append(report)
            print(f"chunk {size:>3}  {kind.value:<10} accuracy {report.accuracy:.4f}")

    manifest = build_manifest(
        "classify",
        {"corpus_a": str(args.corpus_a), "corpus_b": str(args.corpus_b),
         "chunk": args.chunk, "model": args.model, "features": args.features,
         "sweep": args.sweep, "no_shuffle": args.no_shuffle},
        args.seed, [args.corpus_a, args.corpus_b],
    )
    write_json_artifact(
        args.output, manifest,
        {"reports": [r.to_dict(PRNG_ID) for r in reports]},
    )
    if args.sweep:
        if not args.output:
            raise UsageError("--sweep needs --output to place the sweep CSV")
        sweep_path = Path(args.output).with_suffix(".sweep.csv")
        write_csv_artifact(
            sweep_path, manifest,
            ["chunk_size", "model", "accuracy"],
            [[r.chunk_size, r.model, _fmt(r.accuracy)] for r in reports],
        )
        print(f"sweep table written to {sweep_path}")

    # ranked importance table per model kind that defines one, averaged
    # over this run's experiments (only meaningful on the full feature set)
    if args.output and not args.features:
        rows = []
        for kind in kinds:
            with_imps = [r for r in reports
                         if r.model == kind.value and r.importances is not None]
            if not with_imps:
                continue
            for feature, score in average_importances(with_imps):
                rows.append([kind.value, feature, _fmt(score)])
        if rows:
            imp_path = Path(args.output).with_suffix(".importances.csv")
            write_csv_artifact(imp_path, manifest,
                               ["model", "feature", "score"], rows)
            print(f"importance table written to {imp_path}")
    return 0


def _novelty_params(args) -> NoveltyParams:
    return NoveltyParams(
        chunk_size=args.k,
        n_samples=args.n,
        seed=args.seed,
        df=args.df,
        replacement=args.replacement,
    )


def cmd_novelty(args) -> int:
    _require_positive(args, ["k", "n", "df"])
    if bool(args.query_range) == bool(args.query_file):
        raise UsageError("give exactly one of --query-range or --query-file")
    meta, X = load_features(args.corpus)
    params = _novelty_params(args)
    if args.query_range:
        rows = _parse_range(args.query_range, len(X), "query range")
        query = X[list(rows)]
        label = (f"{meta[rows[0]][1]}-{meta[rows[-1]][1]}"
                 if meta else args.query_range)
        report = novelty_test(query, X, params, exclude=rows, query_id=label)
        inputs = [args.corpus]
    else:
        _, query = load_features(args.query_file)
        if len(query) == 0:
            raise DataError(f"{args.query_file}: no query lines")
        report = novelty_test(query, X, params,
                              query_id=Path(args.query_file).stem)
        inputs = [args.corpus, args.query_file]

    _print_novelty_table(report)
    manifest = build_manifest(
        "novelty",
        {"corpus": str(args.corpus), "query_range": args.query_range,
         "query_file": args.query_file, "k": args.k, "n": args.n,
         "df": report.df, "replacement": args.replacement},
        args.seed, inputs,
    )
    if args.output:
        write_json_artifact(args.output, manifest, {"report": _report_payload(report)})
    return 0


def cmd_rolling(args) -> int:
    _require_positive(args, ["window", "step", "k", "n", "df"])
    meta, X = load_features(args.corpus)
    names = [name for _, name in meta]
    params = _novelty_params(args)

    reference = None
    if args.exclude_range:
        rows = _parse_range(args.exclude_range, len(X), "exclude range")
        keep = [i for i in range(len(X)) if i not in set(rows)]
        excluded = X[list(rows)]
        excluded_label = (f"{names[rows[0]]}-{names[rows[-1]]}"
                          if names else args.exclude_range)
        X = X[keep]
        names = [names[i] for i in keep]
        if args.threshold_from_query:
            reference = novelty_test(excluded, X, params, query_id=excluded_label)
    elif args.threshold_from_query:
        raise UsageError("--threshold-from-query needs --exclude-range")

    if len(X) < args.window:
        raise DataError(
            f"corpus has {len(X)} lines after exclusion, smaller than the "
            f"window {args.window}"
        )
    reports = rolling_scan(X, window=args.window, step=args.step,
                           params=params, labels=names or None)
    starts = list(window_starts(len(X), args.window, args.step))

    extra = {}
    if reference is not None:
        extra = {"reference_query": reference.query_id,
                 "reference_m2": reference.M2, "reference_p": reference.p}
    manifest = build_manifest(
        "rolling",
        {"corpus": str(args.corpus), "window": args.window, "step": args.step,
         "exclude_range": args.exclude_range,
         "threshold_from_query": args.threshold_from_query,
         "k": args.k, "n": args.n, "replacement": args.replacement},
        args.seed, [args.corpus], extra=extra,
    )
    write_csv_artifact(
        args.output, manifest,
        ["window_start_line", "window_label", "M2", "p"],
        [[start + 1, report.query_id, _fmt(report.M2), _fmt(report.p)]
         for start, report in zip(starts, reports)],
    )

    if reference is not None:
        print(f"reference query {reference.query_id}: "
              f"M2 = {_fmt(reference.M2)}, p = {_fmt(reference.p)}")
        outliers = [r for r in reports if r.M2 > reference.M2]
        kind = f"M2 above the reference {_fmt(reference.M2)}"
    else:
        outliers = [r for r in reports if r.p < 0.01]
        kind = "p < 0.01"
    print(f"{len(reports)} windows scanned; {len(outliers)} with {kind}")
    for report in outliers:
        _print_novelty_table(report)
    return 0


def cmd_correlations(args) -> int:
    _, X = load_features(args.corpus)
    pairs = correlation_table(X, args.threshold)
    manifest = build_manifest(
        "correlations",
        {"corpus": str(args.corpus), "threshold": args.threshold},
        args.seed, [args.corpus],
    )
    write_csv_artifact(
        args.output, manifest,
        ["feature_a", "feature_b", "r"],
        [[a, b, _fmt(r)] for a, b, r in pairs],
    )
    if args.output:
        print(f"{'Feature 1':<10} {'Feature 2':<10} {'r':>8}")
        for a, b, r in pairs:
            print(f"{a:<10} {b:<10} {_fmt(r):>8}")
    return 0


def cmd_fetch(args) -> int:
    cache_dir = Path(args.cache_dir) if args.cache_dir else default_cache_dir()
    path = fetch_corpus(args.url, cache_dir, refresh=args.refresh)
    print(path)
    return 0


# ------------------------------------------------------------------ parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="root seed for every random choice (default 0)")
    common.add_argument("--output", help="artifact path (default: stdout)")
    common.add_argument("--format", choices=["csv", "jsonl"], default="csv",
                        help="feature file format (features command)")

    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument("--k", type=int, default=81,
                          help="lines per bootstrap set (default 81)")
    sampling.add_argument("--n", type=int, default=10_000,
                          help="bootstrap sets in the target (default 10000)")
    sampling.add_argument("--df", type=int, default=None,
                          help="chi-square degrees of freedom (default: features - 1)")
    sampling.add_argument("--replacement", choices=[PER_LINE, DISTINCT_LINES],
                          default=PER_LINE,
                          help="bootstrap draw mode (default per_line)")

    parser = _Parser(prog="hexstyle",
                     description="Metrical stylometry for Latin hexameter")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", parents=[common],
                       help="extract per-line feature vectors from scansion XML")
    p.add_argument("inputs", nargs="+", help="MQDQ scansion XML files")
    p.add_argument("--accent-config", help="TOML/JSON accent configuration")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("classify", parents=[common],
                       help="pairwise author classification on chunked features")
    p.add_argument("corpus_a")
    p.add_argument("corpus_b")
    p.add_argument("--chunk", type=int, default=81)
    p.add_argument("--model", choices=_MODEL_CHOICES, default="all")
    p.add_argument("--features", help="comma-separated feature subset (e.g. F1S,SYN)")
    p.add_argument("--sweep", help="comma-separated chunk sizes to sweep")
    p.add_argument("--no-shuffle", action="store_true",
                   help="keep lines in document order before chunking")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("novelty", parents=[common, sampling],
                       help="score one passage against a corpus")
    p.add_argument("corpus", help="feature file of the reference corpus")
    p.add_argument("--query-range",
                   help="1-based inclusive row range within the corpus (START:END)")
    p.add_argument("--query-file", help="feature file holding the query lines")
    p.set_defaults(func=cmd_novelty)

    p = sub.add_parser("rolling", parents=[common, sampling],
                       help="leave-window-out novelty scan across a corpus")
    p.add_argument("corpus")
    p.add_argument("--window", type=int, default=81)
    p.add_argument("--step", type=int, default=27)
    p.add_argument("--exclude-range",
                   help="1-based inclusive row range removed before scanning")
    p.add_argument("--threshold-from-query", action="store_true",
                   help="score the excluded range first and use its M2 as threshold")
    p.set_defaults(func=cmd_rolling)

    p = sub.add_parser("correlations", parents=[common],
                       help="feature correlation pairs above a threshold")
    p.add_argument("corpus")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_correlations)

    p = sub.add_parser("fetch", parents=[common],
                       help="download a corpus file with local caching")
    p.add_argument("url")
    p.add_argument("--cache-dir",
                   help="cache directory (default: $HEXSTYLE_CACHE_DIR "
                        "or ~/.cache/hexstyle)")
    p.add_argument("--refresh", action="store_true", help="force re-download")
    p.set_defaults(func=cmd_fetch)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("HEXSTYLE_LOGLEVEL", "WARNING"))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
