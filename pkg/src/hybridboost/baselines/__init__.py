"""Black-box comparison models: random forest, tree boosting, one-layer network."""

from .forest import ForestConfig, RandomForest, fit_random_forest
from .gbt import GbtConfig, GradientBoostedTrees, fit_gbt
from .mlp import Mlp, MlpConfig, fit_mlp

__all__ = [
    "ForestConfig",
    "RandomForest",
    "fit_random_forest",
    "GbtConfig",
    "GradientBoostedTrees",
    "fit_gbt",
    "MlpConfig",
    "Mlp",
    "fit_mlp",
]
