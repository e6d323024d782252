"""Ridge base-learners with penalties calibrated to a degrees-of-freedom target.

Every learner is a penalized least-squares fit on a centered column block.
The penalty is chosen so that the trace of the ridge hat matrix equals the
learner's df target; equal df keeps selection between blocks of different
size fair.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .dataset import DesignMatrix, GroupMap
from .errors import CalibrationError, ConfigError, RankError

logger = logging.getLogger(__name__)

KINDS = ("individual", "group", "interaction")
DF_TOL = 1e-10
MAX_BISECT = 200


@dataclass(frozen=True)
class BaseLearner:
    id: int
    kind: str
    columns: tuple[int, ...]
    df_target: float
    lam: float
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown learner kind {self.kind!r}")
        if self.kind == "individual" and len(self.columns) != 1:
            raise ConfigError("individual learners take exactly one column")
        if self.kind == "interaction" and (len(self.columns) != 2 or self.columns[0] == self.columns[1]):
            raise ConfigError("interaction learners take two distinct columns")
        if self.lam < 0:
            raise ConfigError("ridge penalty must be non-negative")

    @property
    def width(self) -> int:
        return 1 if self.kind == "interaction" else len(self.columns)


def _matrix(design) -> np.ndarray:
    return design.X if isinstance(design, DesignMatrix) else np.asarray(design, dtype=float)


def basis(learner: BaseLearner, X: np.ndarray) -> np.ndarray:
    """Centered columns the learner regresses on (n x width)."""
    if learner.kind == "interaction":
        i, j = learner.columns
        block = (X[:, i] * X[:, j])[:, None]
    else:
        block = X[:, list(learner.columns)]
    return block - block.mean(axis=0)


def _sq_singular_values(block: np.ndarray) -> np.ndarray:
    block = np.atleast_2d(np.asarray(block, dtype=float))
    if block.shape[0] == 0 or block.shape[1] == 0:
        return np.zeros(0)
    s = np.linalg.svd(block, compute_uv=False)
    return s * s


def _rank_from_sq(d2: np.ndarray, shape) -> int:
    if d2.size == 0 or d2.max() <= 0:
        return 0
    tol = np.sqrt(d2.max()) * max(shape) * np.finfo(float).eps
    return int(np.sum(np.sqrt(d2) > tol))


def numerical_rank(block: np.ndarray) -> int:
    block = np.atleast_2d(block)
    return _rank_from_sq(_sq_singular_values(block), block.shape)


def ridge_df(block: np.ndarray, lam: float) -> float:
    """trace(B (B'B + lam I)^-1 B') computed from the singular values of B."""
    block = np.atleast_2d(block)
    d2 = _sq_singular_values(block)
    if lam == 0:
        return float(_rank_from_sq(d2, block.shape))
    return float(np.sum(d2 / (d2 + lam)))


def solve_ridge_lambda(block: np.ndarray, df_target: float) -> float:
    """Ridge penalty whose hat-matrix trace equals ``df_target``.

    df is strictly decreasing in the penalty, so the root is bracketed by
    growing an upper bound geometrically and found by bisection.
    """
    block = np.atleast_2d(np.asarray(block, dtype=float))
    d2 = _sq_singular_values(block)
    rank = _rank_from_sq(d2, block.shape)
    if df_target <= 0:
        raise CalibrationError(f"df target must be positive, got {df_target}")
    if df_target > rank + DF_TOL:
        raise CalibrationError(f"df target {df_target} exceeds block rank {rank}")
    if abs(df_target - rank) <= DF_TOL:
        return 0.0
    d2 = d2[: rank]

    def df(lam):
        return float(np.sum(d2 / (d2 + lam)))

    lo, hi = 0.0, float(d2.max())
    while df(hi) > df_target:
        lo, hi = hi, hi * 2.0
    for _ in range(MAX_BISECT):
        mid = 0.5 * (lo + hi)
        value = df(mid)
        if abs(value - df_target) <= DF_TOL:
            return mid
        if value > df_target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fit_block(learner: BaseLearner, design, target: np.ndarray) -> tuple[np.ndarray, float]:
    """Ridge coefficients of ``target`` on the learner's block and the residual SSE."""
    X = _matrix(design)
    target = np.asarray(target, dtype=float)
    if target.shape[0] != X.shape[0]:
        raise ConfigError("target length does not match the design")
    B = basis(learner, X)
    if np.isinf(learner.lam):
        return np.zeros(B.shape[1]), float(target @ target)
    gram = B.T @ B + learner.lam * np.eye(B.shape[1])
    try:
        coef = np.linalg.solve(gram, B.T @ target)
    except np.linalg.LinAlgError:
        raise RankError(f"learner {learner.name or learner.id}: singular ridge system") from None
    resid = target - B @ coef
    return coef, float(resid @ resid)


def _calibrated(kind, columns, df_target, X, next_id, name, quiet=False):
    proto = BaseLearner(next_id, kind, tuple(columns), df_target, 0.0, name)
    block = basis(proto, X)
    rank = numerical_rank(block)
    if rank == 0:
        if not quiet:
            warnings.warn(f"learner {name!r} has a constant block; omitted", stacklevel=3)
        return None
    if df_target > rank:
        if not quiet:
            warnings.warn(
                f"learner {name!r}: df target {df_target} capped at block rank {rank}", stacklevel=3
            )
        df_target = float(rank)
    lam = solve_ridge_lambda(block, df_target)
    return replace(proto, df_target=df_target, lam=lam)


def _column_names(design, p):
    if isinstance(design, DesignMatrix):
        return design.names
    return [f"x{j}" for j in range(p)]


def build_learners(
    design,
    groups: GroupMap | Mapping[str, Sequence[int]] | None,
    alpha: float,
    quiet: bool = False,
) -> list[BaseLearner]:
    """One individual learner per column (df = alpha) and one per group (df = 1 - alpha).

    Learners whose df target is zero are left out, so ``alpha=1`` gives
    plain component-wise boosting and ``alpha=0`` pure group selection.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")
    X = _matrix(design)
    names = _column_names(design, X.shape[1])
    group_dict = groups.groups if isinstance(groups, GroupMap) else dict(groups or {})
    learners = []
    if alpha > 0:
        for j in range(X.shape[1]):
            lr = _calibrated("individual", (j,), alpha, X, len(learners), names[j], quiet)
            if lr is not None:
                learners.append(lr)
    if alpha < 1:
        for label, cols in group_dict.items():
            cols = tuple(int(c) for c in cols)
            if not cols:
                continue
            if max(cols) >= X.shape[1]:
                raise ConfigError(f"group {label!r} refers to a column outside the design")
            lr = _calibrated("group", cols, 1.0 - alpha, X, len(learners), str(label), quiet)
            if lr is not None:
                learners.append(lr)
    return learners


def interaction_pairs(design) -> list[tuple[int, int]]:
    """Unordered column pairs that come from distinct source variables."""
    X = _matrix(design)
    p = X.shape[1]
    if isinstance(design, DesignMatrix):
        source = [c.variable for c in design.columns]
    else:
        source = list(range(p))
    return [(i, j) for i in range(p) for j in range(i + 1, p) if source[i] != source[j]]


def build_interactions(
    design, alpha: float = 0.5, start_id: int = 0, quiet: bool = False
) -> list[BaseLearner]:
    """Pairwise product learners, treated as individual learners (df = alpha)."""
    X = _matrix(design)
    if X.shape[1] < 2:
        raise ConfigError("interactions need at least two columns")
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(f"interaction df alpha must lie in (0, 1], got {alpha}")
    names = _column_names(design, X.shape[1])
    learners = []
    for i, j in interaction_pairs(design):
        lr = _calibrated(
            "interaction", (i, j), alpha, X, start_id + len(learners), f"{names[i]}:{names[j]}", quiet
        )
        if lr is not None:
            learners.append(lr)
    return learners


def recalibrate(learners: Sequence[BaseLearner], X: np.ndarray) -> list[BaseLearner]:
    """Same learners with penalties re-solved on other rows (e.g. a CV fold).

    Learners whose block is constant on these rows keep an infinite penalty,
    which makes them fit nothing.
    """
    out = []
    for lr in learners:
        block = basis(lr, X)
        rank = numerical_rank(block)
        if rank == 0:
            out.append(replace(lr, lam=np.inf))
            continue
        out.append(replace(lr, lam=solve_ridge_lambda(block, min(lr.df_target, float(rank)))))
    return out
