"""ROC/AUC/accuracy and the seven-model comparison on a held-out split."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.stats import rankdata

from .baselines import ForestConfig, GbtConfig, MlpConfig, fit_gbt, fit_mlp, fit_random_forest
from .boost import FitConfig, fit_boost, predict_proba
from .dataset import Dataset, DesignMatrix, SurveySchema, prepare
from .errors import ConfigError, MetricError
from .glm import CLIMATE_BLOCKS, fit_logistic

logger = logging.getLogger(__name__)

MODELS = ("glm", "mb", "sgb", "mb-int", "rf", "gbm", "nn")
TARGETS = ("high", "low")
SCOPES = ("combined", "Chile", "Tunisia")


def _check(scores, labels):
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels, dtype=float).ravel()
    if scores.shape != labels.shape:
        raise MetricError("scores and labels differ in length")
    if not np.all((labels == 0) | (labels == 1)):
        raise MetricError("labels must be 0/1")
    return scores, labels


def _both_classes(labels):
    if labels.min() == labels.max():
        raise MetricError("labels contain a single class; ROC/AUC undefined")


def roc_curve(scores, labels) -> list[tuple[float, float]]:
    """(fpr, tpr) at every distinct threshold, from (0, 0) to (1, 1).

    A row is called positive when its score is >= the threshold; thresholds
    run from the largest score down.
    """
    scores, labels = _check(scores, labels)
    _both_classes(labels)
    order = np.argsort(-scores, kind="stable")
    s, l = scores[order], labels[order]
    tp = np.cumsum(l)
    fp = np.cumsum(1.0 - l)
    last = np.r_[np.flatnonzero(s[:-1] != s[1:]), len(s) - 1]
    P, N = tp[-1], fp[-1]
    points = [(0.0, 0.0)]
    points += [(float(fp[i] / N), float(tp[i] / P)) for i in last]
    return points


def roc_area(points: Sequence[tuple[float, float]]) -> float:
    """Trapezoidal area under a piecewise-linear ROC curve."""
    pts = np.asarray(points, dtype=float)
    return float(np.sum(np.diff(pts[:, 0]) * (pts[1:, 1] + pts[:-1, 1]) / 2.0))


def auc(scores, labels) -> float:
    """Mann-Whitney AUC: P(positive outscores negative) + half the tie rate."""
    scores, labels = _check(scores, labels)
    _both_classes(labels)
    pos = labels == 1
    n1, n0 = int(pos.sum()), int((~pos).sum())
    # doubled midranks are integers, so the U statistic is exact
    r2 = np.rint(2.0 * rankdata(scores)).astype(np.int64)
    u2 = int(r2[pos].sum()) - n1 * (n1 + 1)
    return (u2 / 2) / (n1 * n0)


def accuracy(scores, labels, threshold: float = 0.5) -> float:
    scores, labels = _check(scores, labels)
    if len(labels) == 0:
        raise MetricError("no observations")
    return float(np.mean((scores >= threshold).astype(float) == labels))


@dataclass(frozen=True)
class MetricsRow:
    model: str
    target: str
    scope: str
    accuracy: float
    auc: float
    n_train: int = 0
    n_test: int = 0


@dataclass(frozen=True)
class CompareConfig:
    fit: FitConfig = field(default_factory=FitConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    gbt: GbtConfig = field(default_factory=GbtConfig)
    mlp: MlpConfig = field(default_factory=MlpConfig)
    threshold: float = 0.5
    models: tuple[str, ...] = MODELS
    interaction_scopes: tuple[str, ...] = ("combined",)

    def __post_init__(self):
        bad = set(self.models) - set(MODELS)
        if bad:
            raise ConfigError(f"unknown models {sorted(bad)}; choose from {MODELS}")


def climate_columns(design: DesignMatrix) -> list[int]:
    return [j for j, c in enumerate(design.columns) if c.group in CLIMATE_BLOCKS]


def fit_scorer(name: str, design: DesignMatrix, y: np.ndarray, cfg: CompareConfig):
    """Fit model ``name`` on ``design``; returns (fitted object, scoring function)."""
    if name == "glm":
        cols = climate_columns(design)
        if not cols:
            raise ConfigError("the glm comparator needs climate-experience/income-damage columns")
        fit = fit_logistic(design.X[:, cols], y, [design.names[c] for c in cols])
        return fit, lambda d: fit.predict_proba(d.X[:, cols])
    if name in ("mb", "sgb", "mb-int"):
        model = fit_boost(design, y, replace(cfg.fit, learner_mode=name))
        return model, lambda d: predict_proba(model, d)
    if name == "rf":
        mtry = min(cfg.forest.mtry, design.p)
        forest = fit_random_forest(design, y, replace(cfg.forest, mtry=mtry))
        return forest, lambda d: forest.predict_proba(d.X)
    if name == "gbm":
        gbt = fit_gbt(design, y, cfg.gbt)
        return gbt, lambda d: gbt.predict_proba(d.X)
    if name == "nn":
        mlp = fit_mlp(design, y, cfg.mlp)
        return mlp, lambda d: mlp.predict_proba(d.X)
    raise ConfigError(f"unknown model {name!r}")


@dataclass
class Comparison:
    rows: list[MetricsRow] = field(default_factory=list)
    roc: dict = field(default_factory=dict)
    models: dict = field(default_factory=dict)
    designs: dict = field(default_factory=dict)


def comparison_table(
    train: Dataset,
    test: Dataset,
    schema: SurveySchema,
    cfg: CompareConfig | None = None,
    scopes: Sequence[str] = SCOPES,
    targets: Sequence[str] = TARGETS,
    progress: Callable[[str], None] | None = None,
) -> Comparison:
    """Fit every comparator on ``train`` per (scope, target); score on ``test``.

    ``mb-int`` runs only for scopes listed in ``cfg.interaction_scopes``.
    """
    cfg = cfg or CompareConfig()
    out = Comparison()
    for scope in scopes:
        dtr, otr = prepare(train.subset_country(scope, schema), schema)
        dte, ote = prepare(test.subset_country(scope, schema), schema)
        out.designs[scope] = (dtr, otr, dte, ote)
        for target in targets:
            ytr, yte = otr.target(target), ote.target(target)
            for name in cfg.models:
                if name == "mb-int" and scope not in cfg.interaction_scopes:
                    continue
                if progress:
                    progress(f"{scope}/{target}/{name}")
                model, score = fit_scorer(name, dtr, ytr, cfg)
                s = score(dte)
                out.models[(scope, target, name)] = model
                out.roc[(scope, target, name)] = roc_curve(s, yte)
                out.rows.append(
                    MetricsRow(name, target, scope, accuracy(s, yte, cfg.threshold), auc(s, yte),
                               dtr.n, dte.n)
                )
    return out


def write_comparison(rows: Sequence[MetricsRow], csv_path, json_path) -> None:
    fields = list(MetricsRow.__dataclass_fields__)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in asdict(r).values()])
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump([asdict(r) for r in rows], fh, indent=2)
        fh.write("\n")


def write_roc(points, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fpr", "tpr"])
        for fpr, tpr in points:
            w.writerow([repr(fpr), repr(tpr)])
