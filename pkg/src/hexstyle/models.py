"""Four two-label classifiers with a common train/predict surface.

All four are implemented here directly on numpy: extremely randomized
trees (random split thresholds, Gini), Gaussian naive Bayes with
variance smoothing, L2 logistic regression by gradient descent with
backtracking line search, and a linear SVM trained with the Pegasos
stochastic subgradient schedule.  Feature importances are defined for
the tree ensemble (mean impurity decrease, normalized to sum 100) and
the linear SVM (absolute averaged weights); the other two have none.

Label handling is uniform: the two labels are sorted and mapped to 0/1
internally, and prediction ties break toward the lower label.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .features import FEATURE_NAMES
from .sampling import (
    ChunkingConfig,
    LabeledDataset,
    as_seed_sequence,
    chunk_mean,
    permutation_indices,
    train_test_split,
)

log = logging.getLogger(__name__)


class ModelKind(enum.Enum):
    EXTRA_TREES = "extratrees"
    GAUSSIAN_NB = "gnb"
    LOGISTIC_REGRESSION = "logreg"
    LINEAR_SVM = "svm"


def kind_from_name(name: str) -> ModelKind:
    for kind in ModelKind:
        if kind.value == name:
            return kind
    raise ValueError(f"unknown model kind {name!r}; "
                     f"choose from {[k.value for k in ModelKind]}")


@dataclass(frozen=True)
class HyperParams:
    """Training knobs; the defaults are the toolkit's reference settings."""

    n_trees: int = 100
    max_candidate_features: int | None = None  # None: ceil(sqrt(n_features))
    min_samples_split: int = 2
    var_smoothing: float = 1e-9
    logreg_l2: float = 1.0
    logreg_tol: float = 1e-8
    logreg_max_iter: int = 10_000
    svm_epochs: int = 200


DEFAULT_HYPERPARAMS = HyperParams()


@dataclass(frozen=True, eq=False)
class TrainedModel:
    kind: ModelKind
    labels: tuple          # sorted pair; index 0 is the tie-break winner
    feature_names: tuple[str, ...]
    params: dict           # kind-specific fitted state


@dataclass(frozen=True, eq=False)
class _Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray       # -1 marks a leaf
    right: np.ndarray
    leaf_p1: np.ndarray    # class-1 probability at leaves


def _gini(ones: int, n: int) -> float:
    p1 = ones / n
    p0 = 1.0 - p1
    return 1.0 - (p0 * p0 + p1 * p1)


def _grow_tree(X, y01, k_candidates, min_split, rng):
    """One extremely randomized tree plus its raw impurity decreases.

    At each node up to k candidate features (non-constant in the node)
    each get one uniformly random threshold; the best Gini gain wins.
    """
    n_total, d = X.shape
    feature, threshold, left, right, leaf_p1 = [], [], [], [], []
    decreases = np.zeros(d)

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf_p1.append(-1.0)
        return len(feature) - 1

    stack = [(np.arange(n_total), new_node())]
    while stack:
        idx, nid = stack.pop()
        ys = y01[idx]
        n = idx.size
        ones = int(ys.sum())
        if n < min_split or ones == 0 or ones == n:
            leaf_p1[nid] = ones / n
            continue
        parent_gini = _gini(ones, n)
        best_gain = -1.0
        best = None
        tried = 0
        for f in rng.permutation(d):
            col = X[idx, f]
            lo = float(col.min())
            hi = float(col.max())
            if lo == hi:
                continue
            cut = rng.uniform(lo, hi)
            mask = col <= cut
            nl = int(mask.sum())
            nr = n - nl
            ones_l = int(ys[mask].sum())
            gain = parent_gini - (
                nl * _gini(ones_l, nl) + nr * _gini(ones - ones_l, nr)
            ) / n
            if gain > best_gain:
                best_gain, best = gain, (int(f), float(cut), mask)
            tried += 1
            if tried >= k_candidates:
                break
        if best is None:
            leaf_p1[nid] = ones / n
            continue
        f, cut, mask = best
        decreases[f] += (n / n_total) * best_gain
        lid, rid = new_node(), new_node()
        feature[nid], threshold[nid] = f, cut
        left[nid], right[nid] = lid, rid
        stack.append((idx[mask], lid))
        stack.append((idx[~mask], rid))

    tree = _Tree(
        feature=np.array(feature, dtype=np.intp),
        threshold=np.array(threshold),
        left=np.array(left, dtype=np.intp),
        right=np.array(right, dtype=np.intp),
        leaf_p1=np.array(leaf_p1),
    )
    return tree, decreases


def _tree_apply(tree: _Tree, X) -> np.ndarray:
    """Leaf class-1 probability for every row, walked level by level."""
    nodes = np.zeros(len(X), dtype=np.intp)
    rows = np.arange(len(X))
    active = tree.left[nodes] != -1
    while active.any():
        cur = nodes[active]
        go_left = X[rows[active], tree.feature[cur]] <= tree.threshold[cur]
        nodes[active] = np.where(go_left, tree.left[cur], tree.right[cur])
        active = tree.left[nodes] != -1
    return tree.leaf_p1[nodes]


def _fit_extra_trees(X, y01, hyper, seed):
    n, d = X.shape
    k_cand = hyper.max_candidate_features or math.ceil(math.sqrt(d))
    trees = []
    importances = np.zeros(d)
    for ss in as_seed_sequence(seed).spawn(hyper.n_trees):
        tree, decreases = _grow_tree(
            X, y01, k_cand, hyper.min_samples_split, np.random.default_rng(ss)
        )
        trees.append(tree)
        total = decreases.sum()
        if total > 0:
            importances += decreases / total
    total = importances.sum()
    if total > 0:
        importances = importances * (100.0 / total)
    else:
        importances = np.full(d, 100.0 / d)
    return {"trees": trees, "importances": importances}


def _predict_extra_trees(model, X):
    p1 = np.zeros(len(X))
    for tree in model.params["trees"]:
        p1 += _tree_apply(tree, X)
    p1 /= len(model.params["trees"])
    return (p1 > 0.5).astype(int)


def _fit_gnb(X, y01, hyper):
    d = X.shape[1]
    overall_var = X.var(axis=0)
    eps = hyper.var_smoothing * float(overall_var.max())
    if eps == 0.0:
        eps = hyper.var_smoothing
    theta = np.empty((2, d))
    var = np.empty((2, d))
    log_prior = np.empty(2)
    for c in (0, 1):
        rows = X[y01 == c]
        theta[c] = rows.mean(axis=0)
        var[c] = rows.var(axis=0) + eps
        log_prior[c] = math.log(len(rows) / len(X))
    return {"theta": theta, "var": var, "log_prior": log_prior}


def _predict_gnb(model, X):
    theta = model.params["theta"]
    var = model.params["var"]
    log_prior = model.params["log_prior"]
    scores = np.empty((len(X), 2))
    for c in (0, 1):
        z = (X - theta[c]) ** 2 / var[c]
        scores[:, c] = log_prior[c] - 0.5 * (z + np.log(2.0 * np.pi * var[c])).sum(axis=1)
    # argmax takes the first maximum, i.e. the lower label on ties
    return scores.argmax(axis=1)


def _fit_logreg(X, y01, hyper):
    n, d = X.shape
    lam = hyper.logreg_l2
    w = np.zeros(d)
    b = 0.0

    def loss_and_grad(w, b):
        z = X @ w + b
        # mean log-loss, stable via logaddexp, plus L2 on the weights only
        loss = float(np.logaddexp(0.0, z).mean() - (y01 * z).mean())
        loss += 0.5 * lam * float(w @ w)
        residual = 1.0 / (1.0 + np.exp(-z)) - y01
        grad_w = X.T @ residual / n + lam * w
        grad_b = float(residual.mean())
        return loss, grad_w, grad_b

    loss, grad_w, grad_b = loss_and_grad(w, b)
    iterations = 0
    for iterations in range(1, hyper.logreg_max_iter + 1):
        grad_norm = max(float(np.abs(grad_w).max()), abs(grad_b))
        if grad_norm < hyper.logreg_tol:
            break
        sq = float(grad_w @ grad_w) + grad_b * grad_b
        step = 1.0
        for _ in range(60):
            new_w = w - step * grad_w
            new_b = b - step * grad_b
            new_loss, new_gw, new_gb = loss_and_grad(new_w, new_b)
            if new_loss <= loss - 1e-4 * step * sq:
                break
            step /= 2.0
        w, b, loss, grad_w, grad_b = new_w, new_b, new_loss, new_gw, new_gb
    return {"w": w, "b": b, "iterations": iterations}


def _predict_logreg(model, X):
    z = X @ model.params["w"] + model.params["b"]
    # z == 0 sits on the boundary; the lower label wins
    return (z > 0).astype(int)


def _fit_svm(X, y01, hyper, seed):
    n, d = X.shape
    y_pm = np.where(y01 == 1, 1.0, -1.0)
    lam = 1.0 / n
    rng = np.random.default_rng(seed)
    w = np.zeros(d)
    b = 0.0
    w_avg = np.zeros(d)
    b_avg = 0.0
    t = 0
    for _ in range(hyper.svm_epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            margin = y_pm[i] * (X[i] @ w + b)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += eta * y_pm[i] * X[i]
                b += eta * y_pm[i]
            # running average of the iterates; the averaged weights are
            # also what importances are read from
            w_avg += (w - w_avg) / t
            b_avg += (b - b_avg) / t
    return {"w": w_avg, "b": b_avg}


def _predict_svm(model, X):
    z = X @ model.params["w"] + model.params["b"]
    return (z > 0).astype(int)


def train(kind: ModelKind, train_ds: LabeledDataset,
          hyper: HyperParams | None = None, seed=0,
          feature_names=None) -> TrainedModel:
    """Fit one model kind on a two-label dataset."""
    hyper = hyper or DEFAULT_HYPERPARAMS
    X = np.asarray(train_ds.X, dtype=float)
    labels = sorted(np.unique(train_ds.y).tolist())
    if len(labels) != 2:
        raise DataError(f"need exactly 2 labels, got {labels}")
    y01 = (train_ds.y == labels[1]).astype(int)
    if np.all(X == X[0]):
        log.warning("degenerate training data: every row is identical")

    if kind is ModelKind.EXTRA_TREES:
        params = _fit_extra_trees(X, y01, hyper, seed)
    elif kind is ModelKind.GAUSSIAN_NB:
        params = _fit_gnb(X, y01, hyper)
    elif kind is ModelKind.LOGISTIC_REGRESSION:
        params = _fit_logreg(X, y01, hyper)
    elif kind is ModelKind.LINEAR_SVM:
        params = _fit_svm(X, y01, hyper, seed)
    else:
        raise ValueError(f"unknown model kind {kind!r}")

    names = feature_names or FEATURE_NAMES[: X.shape[1]]
    return TrainedModel(kind=kind, labels=tuple(labels),
                        feature_names=tuple(names), params=params)


def predict(model: TrainedModel, X) -> np.ndarray:
    """Labels for each row of X; pure and deterministic given the model."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        return np.array([], dtype=object)
    if X.shape[1] != len(model.feature_names):
        raise DataError(
            f"feature count mismatch: model has {len(model.feature_names)}, "
            f"input has {X.shape[1]}"
        )
    if model.kind is ModelKind.EXTRA_TREES:
        idx = _predict_extra_trees(model, X)
    elif model.kind is ModelKind.GAUSSIAN_NB:
        idx = _predict_gnb(model, X)
    elif model.kind is ModelKind.LOGISTIC_REGRESSION:
        idx = _predict_logreg(model, X)
    else:
        idx = _predict_svm(model, X)
    return np.array([model.labels[i] for i in idx], dtype=object)


def feature_importances(model: TrainedModel) -> np.ndarray | None:
    """Importance per feature, or None where the model defines none.

    Tree ensemble: mean impurity decrease scaled to sum 100.  Linear
    SVM: absolute averaged weights, unnormalized.  GNB and logistic
    regression expose nothing.
    """
    if model.kind is ModelKind.EXTRA_TREES:
        return model.params["importances"].copy()
    if model.kind is ModelKind.LINEAR_SVM:
        return np.abs(model.params["w"])
    return None


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    pair: tuple[str, str]
    chunk_size: int
    model: str
    accuracy: float
    confusion: np.ndarray        # rows true label, cols predicted, sorted order
    importances: np.ndarray | None
    seed: int

    def to_dict(self, prng_id: str) -> dict:
        return {
            "pair": list(self.pair),
            "chunk_size": self.chunk_size,
            "model": self.model,
            "accuracy": self.accuracy,
            "confusion": self.confusion.tolist(),
            "importances": None if self.importances is None
            else [float(v) for v in self.importances],
            "seed": self.seed,
            "prng_id": prng_id,
        }


def pairwise_experiment(corpus_a, corpus_b, cfg: ChunkingConfig, kind: ModelKind,
                        hyper: HyperParams | None = None, seed=0,
                        pair: tuple[str, str] = ("A", "B"),
                        names_a=None, names_b=None,
                        feature_names=FEATURE_NAMES) -> ExperimentReport:
    """Shuffle, chunk, split 80/20, train a model, and score it.

    ``corpus_a`` and ``corpus_b`` are per-line feature matrices; each
    needs at least two chunks' worth of lines.
    """
    corpus_a = np.atleast_2d(np.asarray(corpus_a, dtype=float))
    corpus_b = np.atleast_2d(np.asarray(corpus_b, dtype=float))
    k = cfg.chunk_size
    for name, corpus in ((pair[0], corpus_a), (pair[1], corpus_b)):
        if len(corpus) < 2 * k:
            raise DataError(
                f"corpus {name!r} has {len(corpus)} lines; "
                f"need at least {2 * k} for chunk size {k}"
            )

    shuffle_root = cfg.seed if cfg.seed is not None else seed
    ss_shuffle = as_seed_sequence(shuffle_root).spawn(2)
    ss_split, ss_train = as_seed_sequence(seed).spawn(4)[2:]

    chunks = []
    labels = []
    provenance = []
    for which, (name, corpus, names) in enumerate(
        ((pair[0], corpus_a, names_a), (pair[1], corpus_b, names_b))
    ):
        if cfg.shuffle:
            perm = permutation_indices(len(corpus), ss_shuffle[which])
            corpus = corpus[perm]
            names = [names[i] for i in perm] if names is not None else None
        chunked = chunk_mean(corpus, k)
        chunks.append(chunked)
        labels.extend([name] * len(chunked))
        for ci in range(len(chunked)):
            members = (
                tuple(names[ci * k: (ci + 1) * k]) if names is not None else ()
            )
            provenance.append((name, members))

    ds = LabeledDataset(
        np.vstack(chunks), np.array(labels, dtype=object), tuple(provenance)
    )
    train_ds, test_ds = train_test_split(ds, 0.2, ss_split)
    model = train(kind, train_ds, hyper, ss_train, feature_names=feature_names)
    predicted = predict(model, test_ds.X)

    order = sorted(set(model.labels))
    confusion = np.zeros((2, 2), dtype=int)
    for true, pred in zip(test_ds.y, predicted):
        confusion[order.index(true), order.index(pred)] += 1
    accuracy = float((predicted == test_ds.y).mean())

    return ExperimentReport(
        pair=pair,
        chunk_size=k,
        model=kind.value,
        accuracy=accuracy,
        confusion=confusion,
        importances=feature_importances(model),
        seed=int(seed) if np.isscalar(seed) else 0,
    )


def average_importances(reports) -> list[tuple[str, float]]:
    """Mean importance per feature over reports, sorted descending."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to average")
    kinds = {r.model for r in reports}
    if len(kinds) != 1:
        raise ValueError(f"reports mix model kinds: {sorted(kinds)}")
    if any(r.importances is None for r in reports):
        raise ValueError(f"model kind {kinds.pop()!r} has no importances")
    stacked = np.vstack([r.importances for r in reports])
    if stacked.shape[1] != len(FEATURE_NAMES):
        raise ValueError("importance averaging requires the full feature set")
    means = stacked.mean(axis=0)
    table = sorted(zip(FEATURE_NAMES, means.tolist()), key=lambda item: -item[1])
    return [(name, float(score)) for name, score in table]


def select_top_k(importance_table, k: int) -> tuple[int, ...]:
    """Canonical feature indices of the k top-ranked table entries."""
    if not 1 <= k <= len(importance_table):
        raise ValueError(f"k must be in 1..{len(importance_table)}, got {k}")
    return tuple(FEATURE_NAMES.index(name) for name, _ in importance_table[:k])
