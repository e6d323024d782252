"""Component-wise and sparse-group boosting for survey-based logistic models."""

from .baselearners import BaseLearner, build_interactions, build_learners, solve_ridge_lambda
from .boost import BoostModel, FitConfig, fit_boost, importance_table, predict_proba
from .dataset import Dataset, DesignMatrix, SurveySchema, Variable, load_survey, prepare
from .errors import HybridBoostError, InputError, NumericalError
from .evaluation import accuracy, auc, roc_curve
from .glm import climate_effect_analysis, fit_logistic

__version__ = "0.1.0"

__all__ = [
    "BaseLearner",
    "build_interactions",
    "build_learners",
    "solve_ridge_lambda",
    "BoostModel",
    "FitConfig",
    "fit_boost",
    "importance_table",
    "predict_proba",
    "Dataset",
    "DesignMatrix",
    "SurveySchema",
    "Variable",
    "load_survey",
    "prepare",
    "HybridBoostError",
    "InputError",
    "NumericalError",
    "accuracy",
    "auc",
    "roc_curve",
    "climate_effect_analysis",
    "fit_logistic",
]
