"""Random forest of Gini-grown trees.

Trees are grown with scikit-learn and then held as plain node arrays, so a
trained forest is a value that can be saved, loaded and evaluated without
the estimator object.
"""

from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from sklearn.ensemble import RandomForestClassifier

from app.logger import logger
from app.models.base import FrameClassifier, FrameDataset, Params, TrainConfig


LEAF = -1


def gini_impurity(counts) -> float:
    """1 - sum(p_c^2) over the class counts of a node; 0 for an empty node."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.sum(p * p))


class DecisionTree(BaseModel):
    """Axis-aligned binary tree; node 0 is the root.

    An internal node sends x left when ``x[feature] <= threshold``. A leaf has
    ``left == right == -1`` and ``value`` holds its positive-class fraction.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    weight: np.ndarray

    @field_validator("feature", "left", "right", mode="before")
    @classmethod
    def _ints(cls, v):
        arr = np.array(v, dtype=np.int64).reshape(-1)
        arr.setflags(write=False)
        return arr

    @field_validator("threshold", "value", "weight", mode="before")
    @classmethod
    def _floats(cls, v):
        arr = np.array(v, dtype=np.float64).reshape(-1)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _check(self) -> "DecisionTree":
        n = len(self.value)
        if n == 0:
            raise ValueError("a tree needs at least one node")
        for name in ("feature", "threshold", "left", "right", "weight"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has {len(getattr(self, name))} entries for {n} nodes")
        if np.any((self.value < 0.0) | (self.value > 1.0)):
            raise ValueError("leaf fractions must lie in [0, 1]")
        is_leaf = self.left == LEAF
        if np.any(is_leaf != (self.right == LEAF)):
            raise ValueError("a node must have both children or none")
        children = np.concatenate([self.left[~is_leaf], self.right[~is_leaf]])
        if np.any((children <= 0) | (children >= n)):
            raise ValueError("child index out of range")
        return self

    @classmethod
    def leaf(cls, fraction: float) -> "DecisionTree":
        return cls(feature=[-2], threshold=[-2.0], left=[LEAF], right=[LEAF], value=[fraction], weight=[1.0])

    @classmethod
    def from_sklearn(cls, estimator) -> "DecisionTree":
        t = estimator.tree_
        class_mass = t.value[:, 0, :]
        totals = class_mass.sum(axis=1)
        fraction = np.divide(class_mass[:, 1], totals, out=np.zeros_like(totals), where=totals > 0)
        return cls(
            feature=t.feature,
            threshold=t.threshold,
            left=t.children_left,
            right=t.children_right,
            value=np.clip(fraction, 0.0, 1.0),
            weight=t.weighted_n_node_samples,
        )

    @property
    def n_nodes(self) -> int:
        return len(self.value)

    @property
    def is_leaf(self) -> np.ndarray:
        return self.left == LEAF

    def apply(self, features: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        x = np.asarray(features, dtype=np.float32).astype(np.float64)
        node = np.zeros(x.shape[0], dtype=np.int64)
        active = ~self.is_leaf[node]
        rows = np.arange(x.shape[0])
        while np.any(active):
            r, n = rows[active], node[active]
            go_left = x[r, self.feature[n]] <= self.threshold[n]
            node[r] = np.where(go_left, self.left[n], self.right[n])
            active = ~self.is_leaf[node]
        return node

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return self.value[self.apply(features)]

    def impurity_decrease(self, n_features: int) -> np.ndarray:
        """Weighted Gini decrease per feature, summed over this tree's splits."""
        gini = 2.0 * self.value * (1.0 - self.value)
        out = np.zeros(n_features)
        for node in np.flatnonzero(~self.is_leaf):
            l, r = self.left[node], self.right[node]
            gain = (
                self.weight[node] * gini[node]
                - self.weight[l] * gini[l]
                - self.weight[r] * gini[r]
            )
            out[self.feature[node]] += gain
        return out


class RfModel(FrameClassifier):
    kind = "rf"

    trees: Tuple[DecisionTree, ...]

    @field_validator("trees")
    @classmethod
    def _non_empty(cls, v):
        if not v:
            raise ValueError("a forest needs at least one tree")
        return tuple(v)

    @model_validator(mode="after")
    def _features_in_range(self) -> "RfModel":
        for tree in self.trees:
            used = tree.feature[~tree.is_leaf]
            if np.any((used < 0) | (used >= self.n_features)):
                raise ValueError("split feature index out of range")
        return self

    def _predict(self, features: np.ndarray) -> np.ndarray:
        return np.mean([tree.predict_proba(features) for tree in self.trees], axis=0)

    def parameters(self) -> Params:
        """Node arrays of all trees concatenated, with ``offsets`` marking tree starts."""
        sizes = [t.n_nodes for t in self.trees]
        params = {
            name: np.concatenate([getattr(t, name) for t in self.trees])
            for name in ("feature", "threshold", "left", "right", "value", "weight")
        }
        params["offsets"] = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        return params

    @classmethod
    def from_parameters(cls, params: Params, n_features: int, seed: int = 0) -> "RfModel":
        offsets = params["offsets"]
        trees = []
        for start, stop in zip(offsets[:-1], offsets[1:]):
            trees.append(
                DecisionTree(
                    **{
                        name: params[name][start:stop]
                        for name in ("feature", "threshold", "left", "right", "value", "weight")
                    }
                )
            )
        return cls(trees=tuple(trees), n_features=n_features, seed=seed)

    def feature_importances(self) -> np.ndarray:
        """Mean over trees of the normalised Gini decrease per feature."""
        per_tree = []
        for tree in self.trees:
            dec = tree.impurity_decrease(self.n_features)
            total = dec.sum()
            per_tree.append(dec / total if total > 0 else dec)
        return np.mean(per_tree, axis=0)


def train_rf(ds: FrameDataset, cfg: TrainConfig = TrainConfig()) -> RfModel:
    """Bootstrap on frames, sqrt(d) candidate features per split, no depth cap."""
    ds.require_both_classes()
    forest = RandomForestClassifier(
        n_estimators=cfg.n_trees,
        criterion="gini",
        max_features="sqrt",
        min_samples_split=2,
        class_weight="balanced" if cfg.class_weighting == "inverse_frequency" else None,
        bootstrap=True,
        random_state=cfg.seed,
        n_jobs=1,
    )
    forest.fit(ds.features, ds.labels)
    trees = tuple(DecisionTree.from_sklearn(est) for est in forest.estimators_)
    logger.debug(
        f"rf grew {len(trees)} trees, mean {np.mean([t.n_nodes for t in trees]):.0f} nodes"
    )
    return RfModel(trees=trees, n_features=ds.features.shape[1], seed=cfg.seed)
