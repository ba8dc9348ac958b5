"""Desk-scale classification over topological feature sets.

Two feature pipelines: top-k lifespan vectors from graph filtration, and
flattened upper triangles of inter-ROI distance matrices from the Rips
pipeline. Models are k-nearest-neighbours and multinomial logistic
regression trained by gradient descent with a backtracking line search;
all randomness (splits) flows from one explicit seed, and splits are made
over unique subjects so no subject lands on both sides.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .analytics import DistanceMatrix, LifespanFeatures
from .errors import SchemaError, ValidationError


@dataclass(frozen=True, eq=False)
class Dataset:
    items: tuple          # of (subject_id, np.ndarray vector, class index)
    feature_kind: str     # "lifespans" | "flattened_wd_roi"
    class_names: tuple    # class index -> label

    def __post_init__(self):
        if not self.items:
            raise SchemaError("empty dataset")
        width = len(self.items[0][1])
        counts = [0] * len(self.class_names)
        for sid, vec, cls in self.items:
            if len(vec) != width:
                raise SchemaError(
                    f"subject {sid!r}: vector length {len(vec)} != {width}"
                )
            if not np.isfinite(vec).all():
                raise ValidationError(f"subject {sid!r}: non-finite features")
            counts[cls] += 1
        if len(self.class_names) < 2 or any(c < 2 for c in counts):
            raise ValidationError(
                f"need >= 2 classes with >= 2 items each, got counts {counts}"
            )

    @property
    def vectors(self) -> np.ndarray:
        return np.array([vec for _, vec, _ in self.items])

    @property
    def labels(self) -> np.ndarray:
        return np.array([cls for _, _, cls in self.items], dtype=int)

    @property
    def subject_ids(self) -> tuple:
        return tuple(sid for sid, _, _ in self.items)


@dataclass(frozen=True, eq=False)
class EvalReport:
    accuracy: float
    confusion: np.ndarray   # rows = true class, cols = predicted
    per_fold: tuple
    split_spec: dict        # train_fraction, folds, seed
    class_names: tuple

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "confusion": [[int(v) for v in row] for row in self.confusion],
            "per_fold": list(self.per_fold),
            "split_spec": dict(self.split_spec),
            "class_names": list(self.class_names),
        }


def _class_indexing(labels: dict):
    names = tuple(sorted(set(labels.values())))
    return names, {name: i for i, name in enumerate(names)}


def make_dataset_lifespans(features: dict, labels: dict) -> Dataset:
    """Dataset of top-k lifespan vectors, one network and dimension at a time."""
    missing = [sid for sid in features if sid not in labels]
    if missing:
        raise ValidationError(f"subjects without labels: {missing[:5]}")
    ks = {len(f.lifespans) for f in features.values()}
    if len(ks) != 1:
        raise SchemaError(f"mixed lifespan lengths {sorted(ks)}")
    nets = {(f.network, f.dimension) for f in features.values()}
    if len(nets) != 1:
        raise SchemaError(
            f"features mix networks/dimensions {sorted(nets)}; "
            "build one dataset per network and dimension"
        )
    names, index = _class_indexing(
        {sid: labels[sid] for sid in features}
    )
    items = tuple(
        (sid, np.array(f.lifespans, dtype=np.float64), index[labels[sid]])
        for sid, f in features.items()
    )
    return Dataset(items=items, feature_kind="lifespans", class_names=names)


def make_dataset_wd(matrices: dict, labels: dict) -> Dataset:
    """Dataset of flattened upper triangles of per-subject distance matrices."""
    missing = [sid for sid in matrices if sid not in labels]
    if missing:
        raise ValidationError(f"subjects without labels: {missing[:5]}")
    shapes = {m.values.shape for m in matrices.values()}
    metas = {m.meta for m in matrices.values()}
    if len(shapes) != 1 or len(metas) != 1:
        raise SchemaError("matrices differ in shape or meta")
    n = next(iter(shapes))[0]
    iu = np.triu_indices(n, k=1)
    names, index = _class_indexing({sid: labels[sid] for sid in matrices})
    items = tuple(
        (sid, m.values[iu].astype(np.float64), index[labels[sid]])
        for sid, m in matrices.items()
    )
    return Dataset(items=items, feature_kind="flattened_wd_roi",
                   class_names=names)


def stratified_kfold(dataset: Dataset, folds: int, seed: int) -> list:
    """Deterministic stratified folds: per-class proportions within one item.

    Returns a list of (train_indices, test_indices) tuples partitioning the
    dataset's index set.
    """
    if folds < 2:
        raise ValidationError(f"folds must be >= 2, got {folds}")
    labels = dataset.labels
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(labels), dtype=int)
    for cls in range(len(dataset.class_names)):
        idx = np.nonzero(labels == cls)[0]
        if len(idx) < folds:
            raise ValidationError(
                f"class {dataset.class_names[cls]!r} has {len(idx)} items, "
                f"fewer than {folds} folds"
            )
        idx = idx[rng.permutation(len(idx))]
        for pos, item in enumerate(idx):
            assignment[item] = pos % folds
    out = []
    everything = np.arange(len(labels))
    for f in range(folds):
        test = everything[assignment == f]
        train = everything[assignment != f]
        out.append((tuple(int(i) for i in train), tuple(int(i) for i in test)))
    return out


def knn_classify(train: Dataset, test_vectors, k_neighbors: int,
                 metric: str = "euclidean"):
    """Majority vote among the k nearest training vectors.

    Vote ties break to the class with the smaller mean distance among its
    voting neighbours, then to the lower class index.
    """
    if metric != "euclidean":
        raise ValidationError(f"unsupported metric {metric!r}")
    X = train.vectors
    y = train.labels
    if len(X) == 0:
        raise ValidationError("empty training set")
    if not 1 <= k_neighbors <= len(X):
        raise ValidationError(
            f"k_neighbors must be in 1..{len(X)}, got {k_neighbors}"
        )
    test_vectors = np.atleast_2d(np.asarray(test_vectors, dtype=np.float64))
    out = []
    for v in test_vectors:
        dist = np.sqrt(((X - v) ** 2).sum(axis=1))
        nearest = np.argsort(dist, kind="stable")[:k_neighbors]
        votes: dict = {}
        for idx in nearest:
            votes.setdefault(int(y[idx]), []).append(float(dist[idx]))
        best = min(
            votes.items(),
            key=lambda kv: (-len(kv[1]), sum(kv[1]) / len(kv[1]), kv[0]),
        )
        out.append(best[0])
    return out


@dataclass(frozen=True, eq=False)
class LogisticModel:
    weights: np.ndarray       # (d + 1, c); last row is the bias
    class_names: tuple
    train_counts: tuple       # per-class item counts, for prediction ties
    losses: tuple             # training loss per iteration (incl. initial)


def _softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def logistic_loss_grad(weights: np.ndarray, X: np.ndarray, y: np.ndarray,
                       n_classes: int, l2: float):
    """Mean multinomial negative log-likelihood with an L2 penalty on the
    non-bias rows, and its gradient in the weights."""
    n = X.shape[0]
    Xa = np.hstack([X, np.ones((n, 1))])
    P = _softmax(Xa @ weights)
    eps = 1e-300  # guards log(0) for extremely confident wrong predictions
    nll = -np.log(P[np.arange(n), y] + eps).mean()
    penalty = 0.5 * l2 * float((weights[:-1] ** 2).sum())
    Y = np.zeros((n, n_classes))
    Y[np.arange(n), y] = 1.0
    grad = Xa.T @ (P - Y) / n
    grad[:-1] += l2 * weights[:-1]
    return nll + penalty, grad


def logistic_train(train: Dataset, l2: float = 0.0,
                   max_iter: int = 200) -> LogisticModel:
    """Multinomial logistic fit by full-batch gradient descent.

    Weights start at zero (deterministic); each step uses a backtracking
    line search, so the training loss is non-increasing across iterations.
    """
    if l2 < 0:
        raise ValidationError(f"l2 must be >= 0, got {l2}")
    X = train.vectors
    y = train.labels
    c = len(train.class_names)
    W = np.zeros((X.shape[1] + 1, c))
    loss, grad = logistic_loss_grad(W, X, y, c, l2)
    losses = [float(loss)]
    step = 1.0
    for _ in range(max_iter):
        gnorm2 = float((grad * grad).sum())
        if gnorm2 < 1e-18:
            break
        step = min(step * 2.0, 1e6)
        while True:
            W_next = W - step * grad
            loss_next, grad_next = logistic_loss_grad(W_next, X, y, c, l2)
            if loss_next <= loss - 1e-4 * step * gnorm2:
                break
            step /= 2.0
            if step < 1e-15:
                W_next, loss_next, grad_next = W, loss, grad
                break
        if W_next is W:
            break
        W, loss, grad = W_next, loss_next, grad_next
        losses.append(float(loss))
    counts = tuple(int((y == k).sum()) for k in range(c))
    return LogisticModel(weights=W, class_names=train.class_names,
                         train_counts=counts, losses=tuple(losses))


def logistic_predict(model: LogisticModel, vectors):
    """Argmax class per vector; exact probability ties break to the class
    with more training items, then to the lower index."""
    V = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    Xa = np.hstack([V, np.ones((V.shape[0], 1))])
    P = _softmax(Xa @ model.weights)
    out = []
    for row in P:
        best = min(
            range(len(row)),
            key=lambda k: (-row[k], -model.train_counts[k], k),
        )
        out.append(best)
    return out


def select_top_features(dataset: Dataset, n: int = 5) -> Dataset:
    """Keep the n coordinates with the largest absolute class-mean spread."""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    X = dataset.vectors
    y = dataset.labels
    means = np.array([
        X[y == cls].mean(axis=0) for cls in range(len(dataset.class_names))
    ])
    spread = means.max(axis=0) - means.min(axis=0)
    keep = np.sort(np.argsort(-spread, kind="stable")[: min(n, X.shape[1])])
    items = tuple(
        (sid, vec[keep], cls) for sid, vec, cls in dataset.items
    )
    return Dataset(items=items, feature_kind=dataset.feature_kind,
                   class_names=dataset.class_names)


def _subject_split_holdout(dataset: Dataset, train_fraction: float, seed: int):
    """Stratified holdout over unique subjects."""
    sids = dataset.subject_ids
    if len(set(sids)) != len(sids):
        raise SchemaError("duplicate subject ids in dataset")
    labels = dataset.labels
    rng = np.random.default_rng(seed)
    test_mask = np.zeros(len(sids), dtype=bool)
    for cls in range(len(dataset.class_names)):
        idx = np.nonzero(labels == cls)[0]
        n_test = int(round((1.0 - train_fraction) * len(idx)))
        n_test = min(max(n_test, 1), len(idx) - 1)
        chosen = idx[rng.permutation(len(idx))][:n_test]
        test_mask[chosen] = True
    everything = np.arange(len(sids))
    return (tuple(int(i) for i in everything[~test_mask]),
            tuple(int(i) for i in everything[test_mask]))


def _fit_predict(dataset: Dataset, train_idx, test_idx, model_spec: dict):
    sub_items = tuple(dataset.items[i] for i in train_idx)
    train = Dataset(items=sub_items, feature_kind=dataset.feature_kind,
                    class_names=dataset.class_names)
    test_vectors = np.array([dataset.items[i][1] for i in test_idx])
    kind = model_spec.get("model", "knn")
    if kind == "knn":
        k = int(model_spec.get("k_neighbors", 3))
        return knn_classify(train, test_vectors, k_neighbors=min(k, len(train_idx)))
    if kind == "logistic":
        model = logistic_train(train, l2=float(model_spec.get("l2", 0.01)),
                               max_iter=int(model_spec.get("max_iter", 200)))
        return logistic_predict(model, test_vectors)
    raise ValidationError(f"unknown model {kind!r}")


def evaluate(dataset: Dataset, protocol: str = "holdout_80_20",
             model_spec: dict | None = None, seed: int = 0,
             folds: int = 5) -> EvalReport:
    """Run a split protocol and report accuracy plus the confusion matrix.

    protocol "holdout_80_20" makes one stratified 80/20 split over unique
    subjects; "kfold" cross-validates with the given fold count. The
    confusion matrix accumulates over all test predictions, and accuracy
    is its trace over its total.
    """
    model_spec = model_spec or {"model": "knn", "k_neighbors": 3}
    c = len(dataset.class_names)
    confusion = np.zeros((c, c), dtype=int)
    per_fold = []
    if protocol == "holdout_80_20":
        splits = [_subject_split_holdout(dataset, 0.8, seed)]
        split_spec = {"train_fraction": 0.8, "folds": 1, "seed": seed}
    elif protocol == "kfold":
        splits = stratified_kfold(dataset, folds, seed)
        split_spec = {"train_fraction": 1.0 - 1.0 / folds, "folds": folds,
                      "seed": seed}
    else:
        raise ValidationError(f"unknown protocol {protocol!r}")
    y = dataset.labels
    for train_idx, test_idx in splits:
        if set(train_idx) & set(test_idx):
            raise SchemaError("split leaks items between train and test")
        preds = _fit_predict(dataset, train_idx, test_idx, model_spec)
        hits = 0
        for idx, pred in zip(test_idx, preds):
            confusion[y[idx], pred] += 1
            hits += int(pred == y[idx])
        per_fold.append(hits / len(test_idx))
    accuracy = float(np.trace(confusion)) / float(confusion.sum())
    return EvalReport(accuracy=accuracy, confusion=confusion,
                      per_fold=tuple(per_fold), split_spec=split_spec,
                      class_names=dataset.class_names)


def save_report(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
