"""Greedy Gini decision tree over mixed quantitative/qualitative features.

Internal nodes test either ``x[j] < threshold`` (quantitative) or
``x[j] == category`` (qualitative, one-vs-rest); the matching side is left.
Training is deterministic: candidate splits are scanned in parameter order
and ties keep the first minimum, i.e. the lowest parameter index, then the
lowest threshold / category code.  Leaves store per-label counts in
decision-set order, so prediction ties also resolve to the earlier label.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Optional

import numpy as np

from . import _kernels
from .dataset import LabeledDataset
from .schema import FeatureVector, ParameterSchema


class TreeError(ValueError):
    """Raised on invalid training configs or prediction inputs."""


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int = 12
    min_leaf: int = 1
    criterion: str = "gini"

    def __post_init__(self) -> None:
        if self.max_depth < 0:
            raise TreeError("max_depth must be >= 0")
        if self.min_leaf < 1:
            raise TreeError("min_leaf must be >= 1")
        if self.criterion != "gini":
            raise TreeError(f"unsupported criterion {self.criterion!r}")


@dataclass(frozen=True)
class DecisionTreeModel:
    """Flattened binary tree plus label metadata.

    Node arrays are index-aligned; ``left[i] < 0`` marks a leaf.  ``counts``
    holds the per-label training counts of the records routed to each node.
    """

    schema: ParameterSchema
    decision_set: tuple[str, ...]
    config: TreeConfig
    feat: np.ndarray        # int64, parameter index (-1 at leaves)
    thr: np.ndarray         # float64, quantitative threshold (nan otherwise)
    mask: np.ndarray        # int64, qualitative left-side category bitmask
    is_qual: np.ndarray     # bool
    left: np.ndarray        # int64 child index, -1 at leaves
    right: np.ndarray       # int64 child index, -1 at leaves
    counts: np.ndarray      # float64, shape (n_nodes, k)

    @property
    def n_nodes(self) -> int:
        return int(self.feat.shape[0])

    def label_code(self, label: str) -> int:
        try:
            return self.decision_set.index(label)
        except ValueError:
            raise TreeError(f"unknown label {label!r}") from None

    def route(self, x_codes: np.ndarray) -> np.ndarray:
        """Leaf node index for each row of an encoded feature matrix."""
        x2 = np.atleast_2d(np.asarray(x_codes, dtype=np.float64))
        return _kernels.route_batch(
            x2, self.feat, self.thr, self.mask, self.is_qual, self.left, self.right
        )

    def predict_codes(self, x_codes: np.ndarray) -> np.ndarray:
        """Predicted label codes for each row (argmax of leaf counts)."""
        leaves = self.route(x_codes)
        return np.argmax(self.counts[leaves], axis=1)

    def score_codes(self, x_codes: np.ndarray, target_code: int) -> np.ndarray:
        """Normalized leaf frequency of *target_code* for each row."""
        leaves = self.route(x_codes)
        c = self.counts[leaves]
        return c[:, target_code] / c.sum(axis=1)

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):  # parents precede children (preorder)
            for child in (self.left[i], self.right[i]):
                if child >= 0:
                    depths[child] = depths[i] + 1
        return int(depths.max())


def train_tree(dataset: LabeledDataset, config: Optional[TreeConfig] = None) -> DecisionTreeModel:
    """Grow a tree by greedy Gini minimization; see module docstring."""
    cfg = config or TreeConfig()
    schema = dataset.schema
    decision_set = dataset.decision_set
    k = len(decision_set)
    X = dataset.to_matrix()
    y = dataset.label_codes()
    quant = np.asarray([p.is_quantitative for p in schema], dtype=bool)
    n_cats = np.asarray(
        [1 if p.is_quantitative else len(p.categories) for p in schema], dtype=np.int64
    )

    feat: list[int] = []
    thr: list[float] = []
    mask: list[int] = []
    is_qual: list[bool] = []
    left: list[int] = []
    right: list[int] = []
    counts: list[np.ndarray] = []

    def new_node(node_counts: np.ndarray) -> int:
        feat.append(-1)
        thr.append(float("nan"))
        mask.append(0)
        is_qual.append(False)
        left.append(-1)
        right.append(-1)
        counts.append(node_counts)
        return len(feat) - 1

    def build(idx: np.ndarray, depth: int) -> int:
        node_counts = np.bincount(y[idx], minlength=k).astype(np.float64)
        node = new_node(node_counts)
        if depth >= cfg.max_depth or np.count_nonzero(node_counts) <= 1:
            return node

        best = (np.inf, -1)  # (weighted gini, feature index)
        best_split: Any = None
        for j in range(len(schema)):
            col = X[idx, j]
            if quant[j]:
                order = np.argsort(col, kind="stable")
                g, i = _kernels.quant_split_scan(
                    np.ascontiguousarray(col[order]),
                    np.ascontiguousarray(y[idx][order]),
                    k,
                    cfg.min_leaf,
                )
                if i >= 0 and g < best[0]:
                    sorted_col = col[order]
                    threshold = 0.5 * (sorted_col[i - 1] + sorted_col[i])
                    best = (g, j)
                    best_split = ("quant", threshold, idx[col < threshold], idx[col >= threshold])
            else:
                g, cat = _kernels.qual_split_scan(
                    np.ascontiguousarray(col.astype(np.int64)),
                    np.ascontiguousarray(y[idx]),
                    int(n_cats[j]),
                    k,
                    cfg.min_leaf,
                )
                if cat >= 0 and g < best[0]:
                    best = (g, j)
                    best_split = ("qual", cat, idx[col == cat], idx[col != cat])

        if best_split is None:
            return node
        kind, where, idx_l, idx_r = best_split
        feat[node] = best[1]
        if kind == "quant":
            thr[node] = float(where)
        else:
            is_qual[node] = True
            mask[node] = 1 << int(where)
        left[node] = build(idx_l, depth + 1)
        right[node] = build(idx_r, depth + 1)
        return node

    build(np.arange(len(dataset), dtype=np.int64), 0)
    return DecisionTreeModel(
        schema=schema,
        decision_set=decision_set,
        config=cfg,
        feat=np.asarray(feat, dtype=np.int64),
        thr=np.asarray(thr, dtype=np.float64),
        mask=np.asarray(mask, dtype=np.int64),
        is_qual=np.asarray(is_qual, dtype=bool),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        counts=np.stack(counts),
    )


def predict(model: DecisionTreeModel, x: FeatureVector) -> tuple[str, tuple[float, ...]]:
    """Route one complete vector; returns (label, normalized score vector)."""
    if not x.is_complete:
        raise TreeError(
            f"vector is missing {list(x.missing_ids())}; impute before predicting"
        )
    leaf = int(model.route(x.to_codes())[0])
    c = model.counts[leaf]
    label = model.decision_set[int(np.argmax(c))]
    scores = tuple(float(v) for v in c / c.sum())
    return label, scores


def model_to_dict(model: DecisionTreeModel) -> dict[str, Any]:
    nodes = []
    for i in range(model.n_nodes):
        node: dict[str, Any] = {"counts": model.counts[i].tolist()}
        if model.left[i] >= 0:
            node["parameter"] = model.schema.parameters[int(model.feat[i])].id
            if model.is_qual[i]:
                spec = model.schema.parameters[int(model.feat[i])]
                code = int(model.mask[i]).bit_length() - 1
                node["category"] = spec.categories[code]
            else:
                node["threshold"] = float(model.thr[i])
            node["left"] = int(model.left[i])
            node["right"] = int(model.right[i])
        nodes.append(node)
    return {
        "decision_set": list(model.decision_set),
        "config": {
            "max_depth": model.config.max_depth,
            "min_leaf": model.config.min_leaf,
            "criterion": model.config.criterion,
        },
        "nodes": nodes,
    }


def model_from_dict(data: Mapping[str, Any], schema: ParameterSchema) -> DecisionTreeModel:
    nodes = data["nodes"]
    n = len(nodes)
    if n == 0:
        raise TreeError("model has no nodes")
    k = len(data["decision_set"])
    feat = np.full(n, -1, dtype=np.int64)
    thr = np.full(n, np.nan, dtype=np.float64)
    mask = np.zeros(n, dtype=np.int64)
    is_qual = np.zeros(n, dtype=bool)
    left = np.full(n, -1, dtype=np.int64)
    right = np.full(n, -1, dtype=np.int64)
    counts = np.zeros((n, k), dtype=np.float64)
    for i, node in enumerate(nodes):
        counts[i] = np.asarray(node["counts"], dtype=np.float64)
        if "parameter" in node:
            j = schema.index_of(node["parameter"])
            feat[i] = j
            spec = schema.parameters[j]
            if "category" in node:
                if spec.is_quantitative:
                    raise TreeError(f"category split on quantitative {spec.id!r}")
                is_qual[i] = True
                mask[i] = 1 << spec.category_code(node["category"])
            else:
                thr[i] = float(node["threshold"])
            left[i] = int(node["left"])
            right[i] = int(node["right"])
            if not (0 <= left[i] < n and 0 <= right[i] < n):
                raise TreeError(f"node {i} has out-of-range children")
    cfg = TreeConfig(**data.get("config", {}))
    return DecisionTreeModel(
        schema=schema,
        decision_set=tuple(data["decision_set"]),
        config=cfg,
        feat=feat,
        thr=thr,
        mask=mask,
        is_qual=is_qual,
        left=left,
        right=right,
        counts=counts,
    )
