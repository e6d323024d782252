"""Component-wise gradient boosting of a logistic model.

Each iteration fits every base-learner to the pseudo-residuals ``y - p``
and moves only the best one (smallest residual sum of squares) a step of
length ``nu``. Stopping is chosen by k-fold cross-validation of the held-out
binomial deviance. With individual and group learners in the same set this
is sparse-group boosting; with pairwise product learners it screens
interactions.

The intercept starts at the log-odds of the training prevalence and is
refreshed by ``nu * mean(residual)`` every iteration, so that a single
unpenalized learner converges to the ordinary logistic MLE.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit

from .baselearners import BaseLearner, build_interactions, build_learners, recalibrate
from .dataset import ColumnMeta, DesignMatrix, GroupMap, group_map
from .errors import ConfigError, DegenerateOutcomeError, LookupFailure, SchemaError

logger = logging.getLogger(__name__)

MODES = ("mb", "sgb", "mb-int")


@dataclass(frozen=True)
class FitConfig:
    nu: float = 0.3
    mstop_max: int = 3000
    alpha: float = 0.5
    folds: int = 25
    seed: int = 0
    learner_mode: str = "sgb"

    def __post_init__(self):
        if not 0.0 < self.nu <= 1.0:
            raise ConfigError(f"nu must lie in (0, 1], got {self.nu}")
        if self.mstop_max < 1:
            raise ConfigError("mstop_max must be at least 1")
        if self.folds < 2:
            raise ConfigError("folds must be at least 2")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.learner_mode not in MODES:
            raise ConfigError(f"learner_mode must be one of {MODES}, got {self.learner_mode!r}")


def negative_gradient(y, f) -> np.ndarray:
    """Pseudo-residuals of the binomial deviance: ``y - sigmoid(f)``."""
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    if y.shape != f.shape:
        raise ConfigError("y and f must have equal length")
    return y - expit(f)


def deviance(y, f) -> float:
    """Binomial deviance, -2 log-likelihood, of scores ``f``."""
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    return float(2.0 * np.sum(np.logaddexp(0.0, f) - y * f))


def _term_keys(p: int, learners: Sequence[BaseLearner]) -> list[tuple[int, ...]]:
    keys = [(j,) for j in range(p)]
    keys += [tuple(lr.columns) for lr in learners if lr.kind == "interaction"]
    return keys


def _raw_terms(X: np.ndarray, keys) -> np.ndarray:
    p = X.shape[1]
    extra = [X[:, k[0]] * X[:, k[1]] for k in keys[p:]]
    if not extra:
        return X.copy()
    return np.column_stack([X] + extra)


class LearnerSet:
    """Learners compiled against one design for fast per-iteration scoring.

    All learner fits derive from the single product ``Z' u``; single-column
    learners are scored in one vectorized pass and group learners through
    their pre-inverted ridge systems.
    """

    def __init__(self, learners: Sequence[BaseLearner], X: np.ndarray, keys=None):
        self.learners = sorted(learners, key=lambda lr: lr.id)
        if not self.learners:
            raise ConfigError("empty learner list")
        X = np.asarray(X, dtype=float)
        self.p = X.shape[1]
        self.keys = keys if keys is not None else _term_keys(self.p, self.learners)
        index = {k: t for t, k in enumerate(self.keys)}
        raw = _raw_terms(X, self.keys)
        self.means = raw.mean(axis=0)
        self.Z = raw - self.means
        self.terms_of = []
        single_pos, single_t, single_lam = [], [], []
        self.groups = []
        for pos, lr in enumerate(self.learners):
            if lr.kind == "interaction":
                tidx = np.array([index[tuple(lr.columns)]])
            else:
                tidx = np.array([index[(c,)] for c in lr.columns])
            self.terms_of.append(tidx)
            if len(tidx) == 1:
                single_pos.append(pos)
                single_t.append(tidx[0])
                single_lam.append(lr.lam)
            else:
                Zb = self.Z[:, tidx]
                G = Zb.T @ Zb
                if np.isinf(lr.lam):
                    M = np.zeros_like(G)
                else:
                    M = np.linalg.inv(G + lr.lam * np.eye(len(tidx)))
                self.groups.append((pos, tidx, M, G))
        self.single_pos = np.array(single_pos, dtype=int)
        self.single_t = np.array(single_t, dtype=int)
        self.single_ss = np.einsum("ij,ij->j", self.Z[:, self.single_t], self.Z[:, self.single_t])
        self.single_denom = self.single_ss + np.array(single_lam, dtype=float)
        self._slot = {pos: k for k, pos in enumerate(single_pos)}

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Centered terms of new rows, using this set's training means."""
        return _raw_terms(np.asarray(X, dtype=float), self.keys) - self.means

    def score(self, u: np.ndarray):
        """Residual SSE of every learner fitted to ``u`` (learner order)."""
        g = self.Z.T @ u
        uu = float(u @ u)
        sse = np.empty(len(self.learners))
        gs = g[self.single_t]
        with np.errstate(invalid="ignore", divide="ignore"):
            b = np.where(np.isinf(self.single_denom), 0.0, gs / self.single_denom)
        sse[self.single_pos] = uu - 2.0 * b * gs + b * b * self.single_ss
        for pos, tidx, M, G in self.groups:
            gb = g[tidx]
            bb = M @ gb
            sse[pos] = uu - 2.0 * bb @ gb + bb @ (G @ bb)
        return sse, g

    def coef(self, pos: int, g: np.ndarray) -> np.ndarray:
        tidx = self.terms_of[pos]
        if pos in self._slot:
            k = self._slot[pos]
            d = self.single_denom[k]
            return np.array([0.0 if np.isinf(d) else g[tidx[0]] / d])
        for gpos, gt, M, _ in self.groups:
            if gpos == pos:
                return M @ g[gt]
        raise LookupFailure(pos)


@dataclass
class BoostModel:
    learners: list[BaseLearner]
    keys: list[tuple[int, ...]]
    term_means: np.ndarray
    coef: np.ndarray
    intercept_offset: float
    intercept: float
    column_names: list[str]
    columns: list[ColumnMeta] | None = None
    history: list[tuple[int, int]] = field(default_factory=list)
    updates: list[tuple[int, np.ndarray, float]] = field(default_factory=list)
    risk_reduction: np.ndarray | None = None
    selection_count: np.ndarray | None = None
    deviance_path: list[float] = field(default_factory=list)
    cv_risk: np.ndarray | None = None
    config: FitConfig = field(default_factory=FitConfig)

    @property
    def mstop_used(self) -> int:
        return len(self.history)

    @property
    def p(self) -> int:
        return len(self.column_names)

    def term_name(self, t: int) -> str:
        return ":".join(self.column_names[c] for c in self.keys[t])

    def learner(self, learner_id: int) -> BaseLearner:
        for lr in self.learners:
            if lr.id == learner_id:
                return lr
        raise LookupFailure(f"no learner with id {learner_id}")

    @property
    def coefficients(self) -> dict[str, float]:
        """Main-effect coefficients by column name (centered scale)."""
        return {self.column_names[j]: float(self.coef[j]) for j in range(self.p)}

    @property
    def interaction_coefficients(self) -> dict[str, float]:
        return {self.term_name(t): float(self.coef[t]) for t in range(self.p, len(self.keys))}

    def coef_path(self, m: int) -> tuple[float, np.ndarray]:
        """Intercept and term coefficients after ``m`` iterations."""
        if not 0 <= m <= self.mstop_used:
            raise ConfigError(f"iteration {m} outside 0..{self.mstop_used}")
        coef = np.zeros(len(self.keys))
        intercept = self.intercept_offset
        index = {k: t for t, k in enumerate(self.keys)}
        for learner_id, delta, d_int in self.updates[:m]:
            lr = self.learner(learner_id)
            if lr.kind == "interaction":
                tidx = [index[tuple(lr.columns)]]
            else:
                tidx = list(lr.columns)
            coef[tidx] += delta
            intercept += d_int
        return intercept, coef

    def decision_function(self, design) -> np.ndarray:
        X = _checked_matrix(self, design)
        Z = _raw_terms(X, self.keys) - self.term_means
        return self.intercept + Z @ self.coef

    def to_dict(self) -> dict:
        return {
            "intercept_offset": self.intercept_offset,
            "intercept": self.intercept,
            "column_names": list(self.column_names),
            "terms": [
                {"name": self.term_name(t), "columns": list(k), "mean": float(self.term_means[t]),
                 "coef": float(self.coef[t])}
                for t, k in enumerate(self.keys)
            ],
            "learners": [
                {"id": lr.id, "kind": lr.kind, "columns": list(lr.columns), "name": lr.name,
                 "df_target": lr.df_target, "lambda": lr.lam}
                for lr in self.learners
            ],
            "history": [[m, lid] for m, lid in self.history],
            "mstop": self.mstop_used,
            "config": asdict(self.config),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "BoostModel":
        learners = [
            BaseLearner(e["id"], e["kind"], tuple(e["columns"]), e["df_target"], e["lambda"], e["name"])
            for e in d["learners"]
        ]
        terms = d["terms"]
        model = cls(
            learners=learners,
            keys=[tuple(t["columns"]) for t in terms],
            term_means=np.array([t["mean"] for t in terms]),
            coef=np.array([t["coef"] for t in terms]),
            intercept_offset=d["intercept_offset"],
            intercept=d["intercept"],
            column_names=list(d["column_names"]),
            history=[(int(m), int(lid)) for m, lid in d["history"]],
            config=FitConfig(**d["config"]),
        )
        return model

    @classmethod
    def from_json(cls, text: str) -> "BoostModel":
        return cls.from_dict(json.loads(text))


def _checked_matrix(model: BoostModel, design) -> np.ndarray:
    if isinstance(design, DesignMatrix):
        if design.names != list(model.column_names):
            raise SchemaError("design columns do not match the columns the model was trained on")
        return design.X
    X = np.asarray(design, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.p:
        raise SchemaError(f"expected {model.p} columns, got shape {X.shape}")
    return X


def _binary(y) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if not np.all((y == 0) | (y == 1)):
        raise ConfigError("outcome must be coded 0/1")
    return y


def _offset(y: np.ndarray) -> float:
    q = y.mean()
    if q <= 0.0 or q >= 1.0:
        raise DegenerateOutcomeError("outcome is constant; the offset log(q/(1-q)) is infinite")
    return math.log(q / (1.0 - q))


def _init_model(learners, X, columns, names, offset, config, keys=None) -> tuple[BoostModel, LearnerSet]:
    lset = LearnerSet(learners, X, keys)
    model = BoostModel(
        learners=lset.learners,
        keys=list(lset.keys),
        term_means=lset.means.copy(),
        coef=np.zeros(len(lset.keys)),
        intercept_offset=offset,
        intercept=offset,
        column_names=list(names),
        columns=columns,
        risk_reduction=np.zeros(len(lset.learners)),
        selection_count=np.zeros(len(lset.learners), dtype=int),
        config=config,
    )
    return model, lset


def _step(model: BoostModel, lset: LearnerSet, y: np.ndarray, f: np.ndarray, nu: float) -> np.ndarray:
    """One boosting iteration in place; returns the updated scores."""
    u = y - expit(f)
    sse, g = lset.score(u)
    pos = int(np.argmin(sse))
    b = lset.coef(pos, g)
    tidx = lset.terms_of[pos]
    d_int = nu * float(u.mean())
    delta = nu * b
    f_new = f + d_int + lset.Z[:, tidx] @ delta
    before = model.deviance_path[-1] if model.deviance_path else deviance(y, f)
    after = deviance(y, f_new)
    if not model.deviance_path:
        model.deviance_path.append(before)
    model.deviance_path.append(after)
    model.coef[tidx] += delta
    model.intercept += d_int
    lr = lset.learners[pos]
    model.history.append((len(model.history) + 1, lr.id))
    model.updates.append((lr.id, delta, d_int))
    model.risk_reduction[pos] += before - after
    model.selection_count[pos] += 1
    return f_new


def init_model(design, y, learners: Sequence[BaseLearner], config: FitConfig | None = None) -> BoostModel:
    """Model at iteration 0: offset intercept, all coefficients zero."""
    X, columns, names = _design_parts(design)
    y = _binary(y)
    offset = _offset(y)
    model, _ = _init_model(learners, X, columns, names, offset, config or FitConfig())
    model.deviance_path.append(deviance(y, np.full(len(y), offset)))
    return model


def boost_step(model: BoostModel, learners, design, y, nu: float) -> BoostModel:
    """Apply one iteration to ``model`` (copied) and return the result."""
    if not learners:
        raise ConfigError("empty learner list")
    X = _checked_matrix(model, design)
    y = _binary(y)
    lset = LearnerSet(learners, X, model.keys)
    new = BoostModel(
        learners=lset.learners,
        keys=list(model.keys),
        term_means=lset.means.copy(),
        coef=model.coef.copy(),
        intercept_offset=model.intercept_offset,
        intercept=model.intercept,
        column_names=list(model.column_names),
        columns=model.columns,
        history=list(model.history),
        updates=list(model.updates),
        risk_reduction=(
            model.risk_reduction.copy() if model.risk_reduction is not None else np.zeros(len(lset.learners))
        ),
        selection_count=(
            model.selection_count.copy()
            if model.selection_count is not None
            else np.zeros(len(lset.learners), dtype=int)
        ),
        deviance_path=list(model.deviance_path),
        config=model.config,
    )
    f = new.decision_function(X)
    _step(new, lset, y, f, nu)
    return new


def _design_parts(design):
    if isinstance(design, DesignMatrix):
        return design.X, design.columns, design.names
    X = np.asarray(design, dtype=float)
    return X, None, [f"x{j}" for j in range(X.shape[1])]


def make_learners(design, config: FitConfig, groups=None, quiet: bool = False) -> list[BaseLearner]:
    """The learner set implied by ``config.learner_mode``.

    ``mb`` uses individual learners only, ``sgb`` adds one learner per
    group, ``mb-int`` adds every pairwise product learner. Individual and
    product learners share df = alpha.
    """
    X, columns, _ = _design_parts(design)
    if config.learner_mode == "sgb":
        if groups is None:
            groups = group_map(columns) if columns is not None else {}
        return build_learners(design, groups, config.alpha, quiet=quiet)
    if config.alpha == 0:
        raise ConfigError(f"mode {config.learner_mode!r} needs alpha > 0")
    singles = build_learners(design, None, config.alpha, quiet=quiet)
    if config.learner_mode == "mb":
        return singles
    return singles + build_interactions(design, config.alpha, start_id=len(singles), quiet=quiet)


def _fold_ids(n: int, folds: int, rng: np.random.Generator) -> np.ndarray:
    ids = np.empty(n, dtype=int)
    for k, chunk in enumerate(np.array_split(rng.permutation(n), folds)):
        ids[chunk] = k
    return ids


def cv_risk(design, y, config: FitConfig, learners=None, groups=None) -> np.ndarray:
    """Mean out-of-fold deviance per observation at iterations 0..mstop_max."""
    X, _, _ = _design_parts(design)
    y = _binary(y)
    n = len(y)
    if config.folds > n:
        raise ConfigError(f"{config.folds} folds need at least as many rows, got {n}")
    if learners is None:
        learners = make_learners(design, config, groups, quiet=True)
    rng = np.random.default_rng(config.seed)
    ids = _fold_ids(n, config.folds, rng)

    def degenerate(ids):
        for k in range(config.folds):
            yt = y[ids != k]
            if yt.min() == yt.max():
                return True
        return False

    if degenerate(ids):
        ids = _fold_ids(n, config.folds, rng)
        if degenerate(ids):
            raise DegenerateOutcomeError("a CV fold has a constant training outcome after reshuffling")
    keys = _term_keys(X.shape[1], learners)
    total = np.zeros(config.mstop_max + 1)
    for k in range(config.folds):
        tr, va = ids != k, ids == k
        fold_learners = recalibrate(learners, X[tr])
        total += _heldout_path(fold_learners, X[tr], y[tr], X[va], y[va], config, keys)
    return total / n


def _heldout_path(learners, Xtr, ytr, Xva, yva, config, keys) -> np.ndarray:
    lset = LearnerSet(learners, Xtr, keys)
    Zva = lset.transform(Xva)
    offset = _offset(ytr)
    f = np.full(len(ytr), offset)
    fva = np.full(len(yva), offset)
    out = np.empty(config.mstop_max + 1)
    out[0] = deviance(yva, fva)
    nu = config.nu
    for m in range(1, config.mstop_max + 1):
        u = ytr - expit(f)
        sse, g = lset.score(u)
        pos = int(np.argmin(sse))
        delta = nu * lset.coef(pos, g)
        tidx = lset.terms_of[pos]
        d_int = nu * float(u.mean())
        f += d_int + lset.Z[:, tidx] @ delta
        fva += d_int + Zva[:, tidx] @ delta
        out[m] = deviance(yva, fva)
    return out


def cross_validate_mstop(design, y, config: FitConfig, learners=None, groups=None) -> int:
    """Iteration count minimizing the mean out-of-fold deviance (0..mstop_max)."""
    return int(np.argmin(cv_risk(design, y, config, learners, groups)))


def fit_boost(
    design,
    y,
    config: FitConfig | None = None,
    learners: Sequence[BaseLearner] | None = None,
    mstop: int | None = None,
    groups: GroupMap | dict | None = None,
) -> BoostModel:
    """Fit a boosted logistic model; ``mstop`` defaults to the CV choice."""
    config = config or FitConfig()
    X, columns, names = _design_parts(design)
    y = _binary(y)
    if len(y) != X.shape[0]:
        raise ConfigError("outcome length does not match the design")
    offset = _offset(y)
    if learners is None:
        learners = make_learners(design, config, groups)
    if not learners:
        raise ConfigError("no base-learners could be built for this design")
    risk = None
    if mstop is None:
        risk = cv_risk(design, y, config, learners, groups)
        mstop = int(np.argmin(risk))
        logger.info("cross-validated mstop = %d", mstop)
    if mstop < 0:
        raise ConfigError("mstop must be non-negative")
    model, lset = _init_model(learners, X, columns, names, offset, config)
    model.cv_risk = risk
    f = np.full(len(y), offset)
    model.deviance_path.append(deviance(y, f))
    for _ in range(mstop):
        f = _step(model, lset, y, f, config.nu)
    return model


def predict_proba(model: BoostModel, design) -> np.ndarray:
    return expit(model.decision_function(design))


def variable_importance(model: BoostModel) -> list[tuple[int, float, int]]:
    """(learner id, deviance reduction, selection count), largest reduction first."""
    rows = [
        (lr.id, float(model.risk_reduction[k]), int(model.selection_count[k]))
        for k, lr in enumerate(model.learners)
        if model.selection_count is not None and model.selection_count[k] > 0
    ]
    return sorted(rows, key=lambda r: (-r[1], r[0]))


def importance_table(model: BoostModel) -> list[dict]:
    """Importance rows with learner names, kinds and group directions."""
    out = []
    for lid, reduction, count in variable_importance(model):
        lr = model.learner(lid)
        row = {"learner_id": lid, "name": lr.name, "kind": lr.kind,
               "risk_reduction": reduction, "selections": count, "direction": ""}
        if lr.kind == "group" and model.columns is not None:
            row["direction"] = group_direction(model, lr.name).sign or ""
        elif lr.kind == "individual":
            c = float(model.coef[lr.columns[0]])
            row["direction"] = "+" if c > 0 else "-" if c < 0 else ""
        elif lr.kind == "interaction":
            t = model.keys.index(tuple(lr.columns))
            c = float(model.coef[t])
            row["direction"] = "+" if c > 0 else "-" if c < 0 else ""
        out.append(row)
    return out


@dataclass(frozen=True)
class GroupDirection:
    sign: str | None
    total: float
    note: str = ""


def group_direction(model: BoostModel, group: str) -> GroupDirection:
    """Sign of the summed log-odds coefficients over a group's columns.

    Undefined (``sign=None``) for groups holding unordered nominal dummies
    and when the coefficients sum to exactly zero.
    """
    if model.columns is None:
        raise LookupFailure("model carries no column metadata")
    cols = [j for j, c in enumerate(model.columns) if c.group == group]
    if not cols:
        raise LookupFailure(f"unknown group {group!r}")
    total = float(np.sum(model.coef[cols]))
    if any(model.columns[j].nominal and not model.columns[j].ordinal for j in cols):
        return GroupDirection(None, total, "group contains non-ordinal nominal dummies")
    if total == 0.0:
        return GroupDirection(None, total, "coefficients sum to zero")
    return GroupDirection("+" if total > 0 else "-", total)
