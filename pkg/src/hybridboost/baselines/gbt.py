from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ..errors import ConfigError, DegenerateOutcomeError
from .tree import Tree, grow_tree


@dataclass(frozen=True)
class GbtConfig:
    trees: int = 100
    depth: int = 3
    shrinkage: float = 0.1
    min_leaf: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.depth < 1:
            raise ConfigError("depth must be at least 1")
        if self.trees < 0:
            raise ConfigError("trees must be non-negative")
        if self.shrinkage < 0:
            raise ConfigError("shrinkage must be non-negative")
        if self.min_leaf < 1:
            raise ConfigError("min_leaf must be at least 1")


@dataclass
class GradientBoostedTrees:
    f0: float
    stages: list[Tree]
    config: GbtConfig
    deviance_path: list[float] = field(default_factory=list)

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        f = np.full(X.shape[0], self.f0)
        for tree in self.stages:
            f += tree.predict(X)
        return f

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.decision_function(X))


def _dev(y, f):
    return float(2.0 * np.sum(np.logaddexp(0.0, f) - y * f))


def fit_gbt(design, y, cfg: GbtConfig | None = None) -> GradientBoostedTrees:
    """Stagewise depth-limited regression trees on logistic pseudo-residuals.

    Each tree is grown on ``y - p`` with squared-error splits; its leaves
    take a shrunken Newton step, halved until the leaf's deviance does not
    rise. Leaf values already include the shrinkage.
    """
    cfg = cfg or GbtConfig()
    X = np.asarray(getattr(design, "X", design), dtype=float)
    y = np.asarray(y, dtype=float)
    q = y.mean()
    if q <= 0 or q >= 1:
        raise DegenerateOutcomeError("outcome is constant")
    f0 = math.log(q / (1 - q))
    f = np.full(len(y), f0)
    model = GradientBoostedTrees(f0, [], cfg, [_dev(y, f)])
    for _ in range(cfg.trees):
        p = expit(f)
        resid = y - p
        tree = grow_tree(X, resid, "mse", max_depth=cfg.depth, min_leaf=cfg.min_leaf)
        leaves = np.flatnonzero(tree.feature < 0)
        for leaf in leaves:
            r = tree.rows[leaf]
            h = float(np.sum(p[r] * (1 - p[r])))
            step = cfg.shrinkage * float(np.sum(resid[r])) / h if h > 0 else 0.0
            before = _dev(y[r], f[r])
            while step != 0.0 and _dev(y[r], f[r] + step) > before:
                step *= 0.5
                if abs(step) < 1e-12:
                    step = 0.0
            tree.value[leaf] = step
        tree.value[tree.feature >= 0] = 0.0
        f = f + tree.value[tree.apply(X)]
        model.stages.append(tree)
        model.deviance_path.append(_dev(y, f))
    for tree in model.stages:
        tree.rows = []
    return model
