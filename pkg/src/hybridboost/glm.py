"""Logistic regression by IRLS with Wald inference."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from .dataset import Dataset, SurveySchema, prepare
from .errors import ConfigError, DegenerateOutcomeError, InputError, RankError, SeparationError

Z975 = float(norm.ppf(0.975))
SCORE_TOL = 1e-8
MAX_ITER = 50
SEPARATION_BOUND = 15.0


@dataclass
class GlmFit:
    coefficients: np.ndarray
    covariance: np.ndarray
    converged: bool
    iterations: int
    names: list[str]
    loglik: float
    loglik_path: list[float] = field(default_factory=list)
    intercept: bool = True

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.intercept:
            X = np.column_stack([np.ones(len(X)), X])
        return X @ self.coefficients

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.decision_function(X))


def _loglik(X, y, beta) -> float:
    eta = X @ beta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit_logistic(
    X,
    y,
    names: Sequence[str] | None = None,
    intercept: bool = True,
    max_iter: int = MAX_ITER,
    tol: float = SCORE_TOL,
) -> GlmFit:
    """Maximum-likelihood logistic regression via Newton/IRLS with step halving.

    Raises :class:`SeparationError` when a coefficient passes +-15 while the
    Newton step is still non-negligible, and :class:`RankError` when the
    design (with intercept) is rank deficient.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float).ravel()
    if len(y) != X.shape[0]:
        raise ConfigError("outcome length does not match the design")
    if not np.all((y == 0) | (y == 1)):
        raise ConfigError("outcome must be coded 0/1")
    if y.min() == y.max():
        raise DegenerateOutcomeError("outcome is constant")
    names = list(names) if names is not None else [f"x{j}" for j in range(X.shape[1])]
    if intercept:
        X = np.column_stack([np.ones(len(y)), X])
        names = ["(Intercept)"] + names
    n, k = X.shape
    if n <= k:
        raise RankError(f"need more observations ({n}) than parameters ({k})")
    if np.linalg.matrix_rank(X) < k:
        raise RankError("design matrix is rank deficient")

    beta = np.zeros(k)
    if intercept:
        q = y.mean()
        beta[0] = math.log(q / (1.0 - q))
    ll = _loglik(X, y, beta)
    path = [ll]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = expit(X @ beta)
        score = X.T @ (y - p)
        if np.max(np.abs(score)) < tol:
            converged = True
            it -= 1
            break
        info = (X * (p * (1.0 - p))[:, None]).T @ X
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            raise RankError("singular information matrix") from None
        t = 1.0
        for _ in range(40):
            cand = beta + t * step
            ll_new = _loglik(X, y, cand)
            if ll_new >= ll - 1e-12 * max(1.0, abs(ll)):
                break
            t *= 0.5
        beta, ll = cand, ll_new
        path.append(ll)
        if np.max(np.abs(beta)) > SEPARATION_BOUND and np.max(np.abs(t * step)) > 1e-3:
            raise SeparationError("coefficients diverge; the data appear (quasi-)separated")
    p = expit(X @ beta)
    if not converged and np.max(np.abs(X.T @ (y - p))) < tol:
        converged = True
    info = (X * (p * (1.0 - p))[:, None]).T @ X
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        raise RankError("singular information matrix at the solution") from None
    cov = 0.5 * (cov + cov.T)
    return GlmFit(beta, cov, converged, it, names, ll, path, intercept)


@dataclass(frozen=True)
class EffectEstimate:
    variable: str
    coef: float
    se: float
    odds_ratio: float
    p_value: float
    ci_low: float
    ci_high: float


def wald_p(z: float) -> float:
    """Two-sided normal tail probability."""
    return float(math.erfc(abs(z) / math.sqrt(2.0)))


def effect_table(fit: GlmFit, include_intercept: bool = False) -> list[EffectEstimate]:
    """Odds ratios with Wald p-values and 95% intervals exp(b +- z se)."""
    rows = []
    se = fit.se
    for j, name in enumerate(fit.names):
        if fit.intercept and j == 0 and not include_intercept:
            continue
        b, s = float(fit.coefficients[j]), float(se[j])
        rows.append(
            EffectEstimate(
                variable=name,
                coef=b,
                se=s,
                odds_ratio=math.exp(b),
                p_value=wald_p(b / s) if s > 0 else (1.0 if b == 0 else 0.0),
                ci_low=math.exp(b - Z975 * s),
                ci_high=math.exp(b + Z975 * s),
            )
        )
    return rows


CLIMATE_BLOCKS = ("climate-experience", "income-damage")


@dataclass(frozen=True)
class EffectRow:
    block: str
    scope: str
    target: str
    estimate: EffectEstimate
    n: int


def climate_effect_analysis(
    data: Dataset,
    schema: SurveySchema,
    scope: str = "combined",
    mode: str = "joint",
    targets: Sequence[str] = ("high", "low"),
) -> list[EffectRow]:
    """Odds ratios of the climate-experience and income-damage predictors.

    ``mode="joint"`` fits one model per block holding that block's
    predictors together; ``mode="univariate"`` fits each predictor alone.
    """
    if mode not in ("joint", "univariate"):
        raise ConfigError(f"mode must be 'joint' or 'univariate', got {mode!r}")
    sub = data.subset_country(scope, schema)
    if sub.n == 0:
        raise InputError(f"no observations for scope {scope!r}")
    rows = []
    for block in CLIMATE_BLOCKS:
        variables = [v for v in schema.variables if v.group == block]
        if not variables:
            raise InputError(f"schema has no variables in group {block!r}")
        specs = [variables] if mode == "joint" else [[v] for v in variables]
        for spec in specs:
            sub_schema = SurveySchema(tuple(spec), schema.outcome, schema.outcome_map, schema.country)
            design, outcomes = prepare(sub, sub_schema)
            for target in targets:
                fit = fit_logistic(design.X, outcomes.target(target), design.names)
                for est in effect_table(fit):
                    rows.append(EffectRow(block, scope, target, est, design.n))
    return rows


def format_p(p: float) -> str:
    return "<0.001" if p < 0.001 else f"{p:.3f}"


def write_effect_tables(rows: Sequence[EffectRow], csv_path, json_path) -> None:
    """Wide CSV (one row per predictor, one column per scope x target) and long JSON."""
    cols = []
    for r in rows:
        key = (r.scope, r.target)
        if key not in cols:
            cols.append(key)
    table: dict = {}
    for r in rows:
        table.setdefault((r.block, r.estimate.variable), {})[(r.scope, r.target)] = r.estimate
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["block", "variable"] + [f"{s} {t} wellbeing" for s, t in cols])
        for (block, var), cells in table.items():
            w.writerow(
                [block, var]
                + [
                    f"{cells[c].odds_ratio:.3f} ({format_p(cells[c].p_value)})" if c in cells else ""
                    for c in cols
                ]
            )
    records = [
        {"block": r.block, "scope": r.scope, "target": r.target, "n": r.n, **asdict(r.estimate)}
        for r in rows
    ]
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(records, fh, indent=2)
        fh.write("\n")
