from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .tree import Tree, grow_tree


@dataclass(frozen=True)
class ForestConfig:
    ntree: int = 500
    mtry: int = 7
    seed: int = 0

    def __post_init__(self):
        if self.ntree < 1:
            raise ConfigError("ntree must be at least 1")
        if self.mtry < 1:
            raise ConfigError("mtry must be at least 1")


@dataclass
class RandomForest:
    trees: list[Tree]
    inbag: np.ndarray  # ntree x n bootstrap counts
    config: ForestConfig

    def votes(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.array([t.predict(X) > 0.5 for t in self.trees], dtype=float)

    def predict_proba(self, X) -> np.ndarray:
        """Fraction of trees voting for class 1."""
        return self.votes(X).mean(axis=0)

    def oob_proba(self, X) -> np.ndarray:
        """Out-of-bag vote fraction per training row (NaN if never out of bag)."""
        votes = self.votes(X)
        oob = self.inbag == 0
        counts = oob.sum(axis=0)
        with np.errstate(invalid="ignore"):
            return np.where(counts > 0, (votes * oob).sum(axis=0) / counts, np.nan)


def fit_random_forest(design, y, cfg: ForestConfig | None = None) -> RandomForest:
    """Bagged Gini CART trees grown to purity with ``mtry`` features per split."""
    cfg = cfg or ForestConfig()
    X = np.asarray(getattr(design, "X", design), dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if cfg.mtry > p:
        raise ConfigError(f"mtry={cfg.mtry} exceeds the number of features ({p})")
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.ntree)
    trees, inbag = [], np.zeros((cfg.ntree, n), dtype=int)
    for k, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        rows = np.sort(rng.integers(0, n, size=n))
        inbag[k] = np.bincount(rows, minlength=n)
        tree = grow_tree(X, y, "gini", rows=rows, mtry=cfg.mtry, rng=rng)
        tree.rows = []
        trees.append(tree)
    return RandomForest(trees, inbag, cfg)
