"""Binary CART for scenario discovery.

Trees are grown best-first: at every step the leaf whose best split yields the
largest weighted Gini decrease (node share x impurity drop) is split, until
``max_leaves`` is reached or no split improves purity.  Thresholds are
midpoints between consecutive distinct values and a sample goes left when
``x <= threshold``.  Ties are broken by lowest column, then lowest threshold,
then earliest-created leaf, so the fitted tree does not depend on row order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .scenario_space import COLUMN_IDS, DERIVED_NAMES, ScenarioVector, derived_features

CLASSES = ("success", "failure")
TIE_TOL = 1e-12


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with binary labels (0 = success, 1 = failure)."""

    X: np.ndarray
    y: np.ndarray
    columns: tuple[str, ...]
    classes: tuple[str, str] = CLASSES

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=int)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError(f"feature matrix {X.shape} does not match {y.shape[0]} labels")
        if X.shape[1] != len(self.columns):
            raise ValueError(f"{X.shape[1]} columns but {len(self.columns)} names")
        if not np.all(np.isfinite(X)):
            raise ValueError("feature matrix has missing or non-finite values")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("labels must be 0 (success) or 1 (failure)")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "columns", tuple(self.columns))

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    def subset(self, rows) -> "LabeledDataset":
        return LabeledDataset(self.X[rows], self.y[rows], self.columns, self.classes)


def encode_labels(labels: Sequence[str], classes: tuple[str, str] = CLASSES) -> np.ndarray:
    index = {c: i for i, c in enumerate(classes)}
    try:
        return np.array([index[lab] for lab in labels], dtype=int)
    except KeyError as exc:
        raise ValueError(f"unknown label {exc.args[0]!r}; expected one of {classes}") from None


def scenario_dataset(vectors: Sequence[ScenarioVector], labels: Sequence[str]) -> LabeledDataset:
    """The 47 event parameters plus the 4 cumulative columns."""
    rows = []
    for v in vectors:
        d = derived_features(v.values)
        rows.append(list(v.values) + [d[name] for name in DERIVED_NAMES])
    X = np.array(rows, dtype=float).reshape(len(rows), len(COLUMN_IDS) + len(DERIVED_NAMES))
    return LabeledDataset(X, encode_labels(labels), COLUMN_IDS + DERIVED_NAMES)


def gini(class_counts) -> float:
    """Gini impurity 1 - sum p_c^2 of a node."""
    counts = np.asarray(class_counts, dtype=float)
    if np.any(counts < 0):
        raise ValueError("class counts must be non-negative")
    total = counts.sum()
    if total <= 0:
        raise ValueError("gini of an empty node")
    p = counts / total
    return float(1.0 - np.sum(p * p))


@dataclass
class Node:
    node_id: int
    depth: int
    counts: tuple[int, int]
    gini: float
    share: float  # fraction of training rows reaching the node
    feature: int | None = None
    threshold: float | None = None
    left: int | None = None
    right: int | None = None
    decrease: float = 0.0  # weighted gini decrease of this node's split
    order: int | None = None  # position in the growth sequence

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def prediction(self) -> int:
        # majority class; ties go to success
        return int(self.counts[1] > self.counts[0])

    def class_share(self, k: int) -> float:
        return self.counts[k] / self.n


@dataclass
class ClassificationTree:
    nodes: list[Node]
    columns: tuple[str, ...]
    max_leaves: int
    max_unique_features: int | None
    classes: tuple[str, str] = CLASSES

    @property
    def root(self) -> Node:
        return self.nodes[0]

    @property
    def leaves(self) -> list[Node]:
        return [n for n in self.nodes if n.is_leaf]

    @property
    def internal(self) -> list[Node]:
        return [n for n in self.nodes if not n.is_leaf]

    def used_features(self) -> list[int]:
        return sorted({n.feature for n in self.internal})

    def split_sequence(self) -> list[tuple[int, int, float]]:
        """(node id, feature, threshold) in the order splits were accepted."""
        return [(n.node_id, n.feature, n.threshold) for n in sorted(self.internal, key=lambda n: n.order)]

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf id reached by each row."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty(X.shape[0], dtype=int)
        for i, row in enumerate(X):
            node = self.root
            while not node.is_leaf:
                node = self.nodes[node.left if row[node.feature] <= node.threshold else node.right]
            out[i] = node.node_id
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        leaf_pred = {n.node_id: n.prediction for n in self.leaves}
        return np.array([leaf_pred[i] for i in self.apply(X)], dtype=int)


def _best_split(X: np.ndarray, y: np.ndarray, features: Sequence[int]):
    """Largest gini drop over ``features``; returns (drop, feature, threshold) or None."""
    n = y.shape[0]
    n1 = int(y.sum())
    parent = gini((n - n1, n1))
    best = None
    for j in features:
        order = np.argsort(X[:, j], kind="stable")
        xs, ys = X[order, j], y[order]
        cut = np.flatnonzero(xs[1:] > xs[:-1])  # split after position cut
        if cut.size == 0:
            continue
        nl = cut + 1.0
        l1 = np.cumsum(ys)[cut].astype(float)
        nr = n - nl
        r1 = n1 - l1
        gl = 1.0 - (l1 / nl) ** 2 - ((nl - l1) / nl) ** 2
        gr = 1.0 - (r1 / nr) ** 2 - ((nr - r1) / nr) ** 2
        drop = parent - (nl * gl + nr * gr) / n
        k = int(np.argmax(drop))
        # argmax returns the lowest threshold among exact ties; treat near-ties the same way
        k = int(np.flatnonzero(drop >= drop[k] - TIE_TOL)[0])
        if best is None or drop[k] > best[0] + TIE_TOL:
            best = (float(drop[k]), j, float((xs[cut[k]] + xs[cut[k] + 1]) / 2.0))
    return best


def fit_tree(ds: LabeledDataset, max_leaves: int = 8,
             max_unique_features: int | None = None) -> ClassificationTree:
    if max_leaves < 1:
        raise ValueError("max_leaves must be >= 1")
    if max_unique_features is not None and max_unique_features < 1:
        raise ValueError("max_unique_features must be >= 1")
    X, y = ds.X, ds.y
    N = ds.n_rows
    if N == 0:
        raise ValueError("cannot fit a tree on an empty dataset")

    def make(rows, depth):
        c1 = int(y[rows].sum())
        counts = (len(rows) - c1, c1)
        node = Node(len(nodes), depth, counts, gini(counts), len(rows) / N)
        nodes.append(node)
        members[node.node_id] = rows
        return node

    nodes: list[Node] = []
    members: dict[int, np.ndarray] = {}
    make(np.arange(N), 0)
    used: list[int] = []
    all_features = list(range(X.shape[1]))
    n_leaves = 1
    order = 0
    while n_leaves < max_leaves:
        if max_unique_features is not None and len(used) >= max_unique_features:
            candidates = sorted(used)
        else:
            candidates = all_features
        best = None
        for node in nodes:
            if not node.is_leaf or node.gini == 0.0:
                continue
            rows = members[node.node_id]
            found = _best_split(X[rows], y[rows], candidates)
            if found is None:
                continue
            weighted = found[0] * node.share
            if weighted <= TIE_TOL:
                continue
            if best is None or weighted > best[0] + TIE_TOL:
                best = (weighted, node, found[1], found[2])
        if best is None:
            break
        weighted, node, j, thr = best
        rows = members[node.node_id]
        go_left = X[rows, j] <= thr
        node.feature, node.threshold, node.decrease = j, thr, weighted
        node.order = order
        order += 1
        node.left = make(rows[go_left], node.depth + 1).node_id
        node.right = make(rows[~go_left], node.depth + 1).node_id
        if j not in used:
            used.append(j)
        n_leaves += 1
    return ClassificationTree(nodes, ds.columns, max_leaves, max_unique_features, ds.classes)


def _check_columns(tree: ClassificationTree, ds: LabeledDataset) -> None:
    if tuple(tree.columns) != tuple(ds.columns):
        raise ValueError("dataset columns do not match the columns the tree was fitted on")


def scores(tree: ClassificationTree, ds: LabeledDataset) -> tuple[float, float]:
    """(interpretability, coverage) of ``tree`` on ``ds``."""
    _check_columns(tree, ds)
    k = len(tree.used_features())
    interpretability = 1.0 if k == 0 else 1.0 / k
    coverage = float(np.mean(tree.predict(ds.X) == ds.y))
    return interpretability, coverage


def kfold_cv(ds: LabeledDataset, k: int = 5, max_leaves: int = 8,
             max_unique_features: int | None = None, seed: int = 0) -> float:
    """Mean held-out accuracy over ``k`` seeded folds."""
    if k < 2 or k > ds.n_rows:
        raise ValueError(f"k must be in [2, {ds.n_rows}], got {k}")
    perm = np.random.default_rng(seed).permutation(ds.n_rows)
    folds = np.array_split(perm, k)
    accs = []
    for i, test in enumerate(folds):
        train = np.concatenate([f for m, f in enumerate(folds) if m != i])
        tree = fit_tree(ds.subset(train), max_leaves, max_unique_features)
        held = ds.subset(test)
        accs.append(float(np.mean(tree.predict(held.X) == held.y)))
    return float(np.mean(accs))


def feature_importances(tree: ClassificationTree) -> dict[str, float]:
    """Normalized weighted gini decrease per split feature."""
    raw: dict[int, float] = {}
    for node in tree.internal:
        raw[node.feature] = raw.get(node.feature, 0.0) + node.decrease
    total = sum(raw.values())
    if not raw or total <= 0:
        return {}
    return {tree.columns[j]: raw[j] / total for j in sorted(raw)}


# ----------------------------------------------------------------------------
# failure-path display


@dataclass(frozen=True)
class FailurePaths:
    """Display view of a tree keeping only root-to-leaf paths to failure leaves.

    The underlying tree is untouched, so predictions are unaffected.
    """

    tree: ClassificationTree
    paths: tuple[tuple[int, ...], ...]  # node ids root..leaf
    purity: float

    @property
    def kept_nodes(self) -> frozenset[int]:
        return frozenset(i for p in self.paths for i in p)

    @property
    def empty(self) -> bool:
        return not self.paths

    def conditions(self, path: Sequence[int]) -> list[tuple[str, str, float]]:
        out = []
        for parent, child in zip(path, path[1:]):
            node = self.tree.nodes[parent]
            op = "<=" if child == node.left else ">"
            out.append((self.tree.columns[node.feature], op, node.threshold))
        return out


def prune_failure_paths(tree: ClassificationTree, purity: float = 0.9) -> FailurePaths:
    parent = {}
    for node in tree.internal:
        parent[node.left] = node.node_id
        parent[node.right] = node.node_id
    paths = []
    for leaf in tree.leaves:
        if leaf.n == 0 or leaf.class_share(1) < purity:
            continue
        path = [leaf.node_id]
        while path[-1] in parent:
            path.append(parent[path[-1]])
        paths.append(tuple(reversed(path)))
    return FailurePaths(tree, tuple(paths), purity)


# ----------------------------------------------------------------------------
# export


def tree_to_dict(tree: ClassificationTree) -> dict:
    nodes = []
    for n in tree.nodes:
        entry = {
            "id": n.node_id,
            "depth": n.depth,
            "samples": n.n,
            "share": n.share,
            "class_shares": {c: n.counts[k] / n.n for k, c in enumerate(tree.classes)},
            "gini": n.gini,
            "class": tree.classes[n.prediction],
        }
        if not n.is_leaf:
            entry.update(feature=tree.columns[n.feature], threshold=n.threshold,
                         left=n.left, right=n.right, gini_decrease=n.decrease)
        nodes.append(entry)
    return {
        "max_leaves": tree.max_leaves,
        "max_unique_features": tree.max_unique_features,
        "classes": list(tree.classes),
        "nodes": nodes,
    }


def failure_paths_to_dict(fp: FailurePaths) -> dict:
    return {
        "purity": fp.purity,
        "paths": [
            {
                "nodes": list(p),
                "conditions": [{"feature": f, "op": op, "threshold": t} for f, op, t in fp.conditions(p)],
                "failure_share": fp.tree.nodes[p[-1]].class_share(1),
                "sample_share": fp.tree.nodes[p[-1]].share,
            }
            for p in fp.paths
        ],
    }


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def tree_to_text(tree: ClassificationTree, keep: frozenset[int] | None = None) -> str:
    """Indented rendering; ``keep`` restricts output to a set of node ids."""
    lines: list[str] = []

    def label(n: Node) -> str:
        shares = ", ".join(f"{c}={n.counts[k] / n.n:.3f}" for k, c in enumerate(tree.classes))
        return f"[{tree.classes[n.prediction]}] samples={n.share:.3f} gini={n.gini:.4f} ({shares})"

    def walk(i: int, prefix: str) -> None:
        n = tree.nodes[i]
        if keep is not None and i not in keep:
            return
        if n.is_leaf:
            lines.append(f"{prefix}leaf {label(n)}")
            return
        name = tree.columns[n.feature]
        lines.append(f"{prefix}{name} <= {n.threshold:.6g}  {label(n)}")
        walk(n.left, prefix + "  ")
        if keep is None or n.right in keep:
            lines.append(f"{prefix}{name} > {n.threshold:.6g}")
        walk(n.right, prefix + "  ")

    walk(0, "")
    return "\n".join(lines) + "\n"
