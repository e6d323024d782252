"""Survey ingestion, binarization and design-matrix construction.

A :class:`SurveySchema` declares every predictor with its group and the rule
that turns the raw answer into 0/1 columns. ``load_survey`` reads a delimited
table into a :class:`Dataset`, ``encode`` produces a :class:`DesignMatrix`
with complete-case deletion, and ``code_outcomes`` derives the high/low
wellbeing pair from the five-level self report.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import CodingError, ConfigError, EncodingError, InputError, SchemaError

logger = logging.getLogger(__name__)

GROUPS = (
    "natural",
    "human",
    "social",
    "biophysical",
    "economic",
    "climate-experience",
    "income-damage",
)
ENCODINGS = (
    "dichotomous",
    "likert5-top2",
    "count-threshold",
    "interval-threshold",
    "nominal",
)
WELLBEING_LEVELS = ("very well", "well", "neutral", "not well", "not at all well")
MISSING_TOKENS = {"", "na", "n/a", "nan", "null", "none", "."}

_TRUE_TOKENS = ("1", "yes", "y", "true")
_FALSE_TOKENS = ("0", "no", "n", "false")


def _norm(value) -> str | None:
    if value is None:
        return None
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    text = str(value).strip()
    if text.lower() in MISSING_TOKENS:
        return None
    return text


@dataclass(frozen=True)
class Variable:
    """One survey question and its binarization rule.

    ``threshold`` applies to the two threshold encodings (value > threshold
    codes 1, or >= when ``inclusive``). ``positive``/``negative`` list the raw
    answers of a dichotomous variable; anything else is treated as missing.
    ``recode`` maps raw answers to canonical ones before any rule applies.
    """

    name: str
    encoding: str
    group: str | None = None
    reference: str | None = None
    threshold: float | None = None
    inclusive: bool = False
    levels: tuple[str, ...] = ()
    positive: tuple[str, ...] = ()
    negative: tuple[str, ...] = ()
    recode: Mapping[str, str] = field(default_factory=dict, hash=False)
    ordinal: bool = False

    def __post_init__(self):
        if self.encoding not in ENCODINGS:
            raise SchemaError(f"variable {self.name!r}: unknown encoding {self.encoding!r}")
        if self.group is not None and self.group not in GROUPS:
            raise SchemaError(f"variable {self.name!r}: unknown group {self.group!r}")
        if self.encoding == "nominal":
            if len(self.levels) < 2:
                raise SchemaError(f"nominal variable {self.name!r} needs at least 2 levels")
            if len(set(self.levels)) != len(self.levels):
                raise SchemaError(f"nominal variable {self.name!r} has duplicate levels")
            if self.reference is not None and self.reference not in self.levels:
                raise SchemaError(
                    f"nominal variable {self.name!r}: reference {self.reference!r} is not a level"
                )
        if self.encoding.endswith("threshold") and self.threshold is None:
            raise SchemaError(f"variable {self.name!r}: threshold encoding needs a threshold")

    @property
    def is_numeric(self) -> bool:
        return self.encoding in ("likert5-top2", "count-threshold", "interval-threshold")

    @property
    def reference_level(self) -> str | None:
        if self.encoding != "nominal":
            return self.reference
        return self.reference if self.reference is not None else sorted(self.levels)[0]

    @property
    def dummy_levels(self) -> tuple[str, ...]:
        ref = self.reference_level
        return tuple(lv for lv in self.levels if lv != ref)

    def encode_values(self, values: pd.Series) -> np.ndarray:
        """Encoded columns (n x k) with NaN where the answer is missing or invalid."""
        if self.recode:
            values = values.map(lambda v: self.recode.get(_norm(v), v) if _norm(v) is not None else v)
        n = len(values)
        if self.is_numeric:
            num = pd.to_numeric(values, errors="coerce").to_numpy(dtype=float)
            out = np.full(n, np.nan)
            ok = np.isfinite(num)
            if self.encoding == "likert5-top2":
                ok &= np.isin(num, (1.0, 2.0, 3.0, 4.0, 5.0))
                out[ok] = (num[ok] >= 4).astype(float)
            elif self.inclusive:
                out[ok] = (num[ok] >= self.threshold).astype(float)
            else:
                out[ok] = (num[ok] > self.threshold).astype(float)
            return out[:, None]
        tokens = [_norm(v) for v in values]
        if self.encoding == "dichotomous":
            pos = {t.lower() for t in (self.positive or _TRUE_TOKENS)}
            neg = {t.lower() for t in (self.negative or _FALSE_TOKENS)}
            out = np.full(n, np.nan)
            for i, t in enumerate(tokens):
                if t is None:
                    continue
                if t.lower() in pos:
                    out[i] = 1.0
                elif t.lower() in neg:
                    out[i] = 0.0
            return out[:, None]
        # nominal
        levels = {lv.lower(): lv for lv in self.levels}
        dummies = self.dummy_levels
        out = np.full((n, len(dummies)), np.nan)
        for i, t in enumerate(tokens):
            if t is None or t.lower() not in levels:
                continue
            level = levels[t.lower()]
            out[i] = [1.0 if level == d else 0.0 for d in dummies]
        return out

    def to_dict(self) -> dict:
        d = {"name": self.name, "encoding": self.encoding, "group": self.group}
        if self.reference is not None:
            d["reference"] = self.reference
        if self.threshold is not None:
            d["threshold"] = self.threshold
        if self.inclusive:
            d["inclusive"] = True
        for key in ("levels", "positive", "negative"):
            if getattr(self, key):
                d[key] = list(getattr(self, key))
        if self.recode:
            d["recode"] = dict(self.recode)
        if self.ordinal:
            d["ordinal"] = True
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "Variable":
        unknown = set(d) - {
            "name", "encoding", "group", "reference", "threshold", "inclusive",
            "levels", "positive", "negative", "recode", "ordinal",
        }
        if unknown:
            raise SchemaError(f"variable {d.get('name')!r}: unknown keys {sorted(unknown)}")
        if "name" not in d or "encoding" not in d:
            raise SchemaError(f"variable entry needs 'name' and 'encoding': {dict(d)}")
        return cls(
            name=str(d["name"]),
            encoding=str(d["encoding"]),
            group=d.get("group"),
            reference=None if d.get("reference") is None else str(d["reference"]),
            threshold=None if d.get("threshold") is None else float(d["threshold"]),
            inclusive=bool(d.get("inclusive", False)),
            levels=tuple(str(v) for v in d.get("levels", ())),
            positive=tuple(str(v) for v in d.get("positive", ())),
            negative=tuple(str(v) for v in d.get("negative", ())),
            recode={str(k): str(v) for k, v in (d.get("recode") or {}).items()},
            ordinal=bool(d.get("ordinal", False)),
        )


@dataclass(frozen=True)
class ColumnMeta:
    name: str
    variable: str
    level: str | None
    group: str | None
    nominal: bool = False
    ordinal: bool = False


@dataclass(frozen=True)
class SurveySchema:
    variables: tuple[Variable, ...]
    outcome: str | None = None
    outcome_map: Mapping[str, str] = field(default_factory=dict, hash=False)
    country: str | None = None

    def __post_init__(self):
        names = [v.name for v in self.variables]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise SchemaError(f"duplicate variables in schema: {dupes}")
        for target in self.outcome_map.values():
            if target not in WELLBEING_LEVELS:
                raise SchemaError(f"outcome map target {target!r} is not a wellbeing level")

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise SchemaError(f"no variable named {name!r} in schema")

    @property
    def required_columns(self) -> list[str]:
        cols = [v.name for v in self.variables]
        cols += [c for c in (self.outcome, self.country) if c is not None]
        return cols

    def columns(self) -> list[ColumnMeta]:
        metas = []
        for v in self.variables:
            if v.encoding == "nominal":
                for level in v.dummy_levels:
                    metas.append(
                        ColumnMeta(f"{v.name}[{level}]", v.name, level, v.group, True, v.ordinal)
                    )
            else:
                metas.append(ColumnMeta(v.name, v.name, None, v.group, False, True))
        return metas

    def to_dict(self) -> dict:
        d: dict = {"variables": [v.to_dict() for v in self.variables]}
        if self.outcome is not None:
            d["outcome"] = self.outcome
        if self.outcome_map:
            d["outcome_map"] = dict(self.outcome_map)
        if self.country is not None:
            d["country"] = self.country
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "SurveySchema":
        if "variables" not in d:
            raise SchemaError("schema needs a 'variables' list")
        return cls(
            variables=tuple(Variable.from_dict(v) for v in d["variables"]),
            outcome=d.get("outcome"),
            outcome_map={str(k): str(v) for k, v in (d.get("outcome_map") or {}).items()},
            country=d.get("country"),
        )


def load_schema(path) -> SurveySchema:
    """Read a schema from a JSON or YAML document."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() in (".yaml", ".yml"):
        import yaml

        doc = yaml.safe_load(text)
    else:
        doc = json.loads(text)
    if isinstance(doc, Mapping) and "schema" in doc and "variables" not in doc:
        doc = doc["schema"]
    return SurveySchema.from_dict(doc)


@dataclass
class Dataset:
    """Typed survey table. Missing cells are ``None`` (text) or NaN (numeric)."""

    frame: pd.DataFrame
    country: str = "both"

    @property
    def n(self) -> int:
        return len(self.frame)

    def take(self, rows) -> "Dataset":
        sub = self.frame.iloc[np.asarray(rows, dtype=int)].reset_index(drop=True)
        return Dataset(sub, self.country)

    def subset_country(self, scope: str, schema: SurveySchema) -> "Dataset":
        """Rows of one country (``scope``) or all rows for ``combined``/``both``."""
        if scope in ("combined", "both"):
            return self
        if schema.country is None:
            raise SchemaError("schema declares no country column; cannot scope by country")
        col = self.frame[schema.country].map(_norm)
        mask = (col == scope).to_numpy()
        if not mask.any():
            raise InputError(f"no observations for scope {scope!r}")
        return Dataset(self.frame.loc[mask].reset_index(drop=True), scope)


def _typed_frame(raw: pd.DataFrame, schema: SurveySchema) -> pd.DataFrame:
    frame = {}
    for col in raw.columns:
        values = raw[col]
        try:
            var = schema.variable(col)
        except SchemaError:
            var = None
        if var is not None and var.is_numeric and not var.recode:
            frame[col] = pd.to_numeric(values.map(_norm), errors="coerce")
        else:
            frame[col] = values.map(_norm).astype(object)
    return pd.DataFrame(frame, columns=list(raw.columns))


def _country_label(frame: pd.DataFrame, schema: SurveySchema) -> str:
    if schema.country is None or schema.country not in frame:
        return "both"
    present = sorted({c for c in frame[schema.country] if c is not None})
    return present[0] if len(present) == 1 else "both"


def load_survey(path, schema: SurveySchema, delimiter: str | None = None) -> Dataset:
    """Read a delimited survey table (comma default; ``.tsv`` files use tabs)."""
    path = Path(path)
    if delimiter is None:
        delimiter = "\t" if path.suffix.lower() in (".tsv", ".tab") else ","
    try:
        raw = pd.read_csv(
            path, sep=delimiter, dtype=str, keep_default_na=False, encoding="utf-8"
        )
    except pd.errors.EmptyDataError:
        raise InputError(f"{path}: empty file") from None
    raw.columns = [c.strip() for c in raw.columns]
    for col in schema.required_columns:
        if col not in raw.columns:
            raise SchemaError(f"{path}: missing required column {col!r}")
    if len(raw) == 0:
        raise InputError(f"{path}: no observations")
    frame = _typed_frame(raw, schema)
    return Dataset(frame, _country_label(frame, schema))


def write_survey(data: Dataset, path, delimiter: str = ",") -> None:
    def cell(v):
        if v is None or (isinstance(v, float) and math.isnan(v)):
            return ""
        if isinstance(v, float) and v.is_integer():
            return str(int(v))
        return str(v)

    out = data.frame.apply(lambda s: s.map(cell))
    out.to_csv(path, sep=delimiter, index=False, encoding="utf-8")


@dataclass(frozen=True)
class OutcomePair:
    high: np.ndarray
    low: np.ndarray

    def __post_init__(self):
        if np.any(self.high * self.low != 0):
            raise CodingError("high and low wellbeing overlap")

    def target(self, name: str) -> np.ndarray:
        if name not in ("high", "low"):
            raise ConfigError(f"unknown target {name!r}; expected 'high' or 'low'")
        return self.high if name == "high" else self.low


def code_outcomes(raw_wellbeing: Iterable, outcome_map: Mapping[str, str] | None = None) -> OutcomePair:
    """Two binary recodings of the five-level wellbeing answer.

    ``high`` is 1 for "well"/"very well"; ``low`` is 1 for "not well"/
    "not at all well"; "neutral" is 0 in both.
    """
    outcome_map = {k.lower(): v for k, v in (outcome_map or {}).items()}
    high, low = [], []
    for value in raw_wellbeing:
        token = _norm(value)
        if token is None:
            raise CodingError("missing wellbeing value")
        level = outcome_map.get(token.lower(), token).lower()
        if level not in WELLBEING_LEVELS:
            raise CodingError(f"unknown wellbeing level {token!r}")
        high.append(level in ("well", "very well"))
        low.append(level in ("not well", "not at all well"))
    return OutcomePair(np.array(high, dtype=float), np.array(low, dtype=float))


@dataclass
class DesignMatrix:
    """Encoded 0/1 predictors with per-column metadata.

    ``X`` is uncentered; ``means`` holds the column means of ``X`` and
    ``centered()`` subtracts them. ``rows`` are positions in the source
    dataset that survived complete-case deletion.
    """

    X: np.ndarray
    columns: list[ColumnMeta]
    rows: np.ndarray
    country: np.ndarray | None = None
    dropped: int = 0
    missing: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2 or self.X.shape[1] != len(self.columns):
            raise SchemaError("design matrix width does not match column metadata")
        self.means = self.X.mean(axis=0) if len(self.X) else np.zeros(self.X.shape[1])

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def centered(self) -> np.ndarray:
        return self.X - self.means

    def column_index(self, name: str) -> int:
        for j, c in enumerate(self.columns):
            if c.name == name:
                return j
        from .errors import LookupFailure

        raise LookupFailure(f"no design column named {name!r}")

    def take(self, rows) -> "DesignMatrix":
        rows = np.asarray(rows, dtype=int)
        return DesignMatrix(
            self.X[rows],
            self.columns,
            self.rows[rows],
            None if self.country is None else self.country[rows],
        )

    def select(self, names: Sequence[str]) -> "DesignMatrix":
        idx = [self.column_index(n) for n in names]
        return DesignMatrix(
            self.X[:, idx], [self.columns[i] for i in idx], self.rows, self.country, self.dropped,
            self.missing,
        )

    def to_csv(self, path) -> None:
        frame = pd.DataFrame(self.X, columns=self.names)
        frame.insert(0, "row", self.rows)
        frame.to_csv(path, index=False, float_format="%.17g")


def encode(data: Dataset, schema: SurveySchema, extra_required: Sequence[str] = ()) -> DesignMatrix:
    """Apply every variable's rule and drop incomplete rows.

    Columns named in ``extra_required`` (e.g. the outcome) take part in the
    complete-case rule without being encoded.
    """
    blocks = []
    missing = {}
    for var in schema.variables:
        if var.name not in data.frame:
            raise SchemaError(f"dataset lacks column {var.name!r}")
        block = var.encode_values(data.frame[var.name])
        blocks.append(block)
        missing[var.name] = int(np.isnan(block).any(axis=1).sum())
    X = np.hstack(blocks) if blocks else np.zeros((data.n, 0))
    keep = ~np.isnan(X).any(axis=1)
    for col in extra_required:
        if col not in data.frame:
            raise SchemaError(f"dataset lacks column {col!r}")
        absent = data.frame[col].map(_norm).isna().to_numpy()
        missing[col] = int(absent.sum())
        keep &= ~absent
    dropped = int((~keep).sum())
    if dropped:
        logger.info("complete-case deletion dropped %d of %d rows", dropped, data.n)
    if not keep.any():
        raise EncodingError(
            "all rows dropped by complete-case deletion; per-variable missing counts: "
            + json.dumps({k: v for k, v in missing.items() if v}),
            report=missing,
        )
    country = None
    if schema.country is not None and schema.country in data.frame:
        country = np.array(
            [c if c is not None else "" for c in data.frame[schema.country].map(_norm)], dtype=object
        )[keep]
    return DesignMatrix(X[keep], schema.columns(), np.flatnonzero(keep), country, dropped, missing)


def prepare(data: Dataset, schema: SurveySchema) -> tuple[DesignMatrix, OutcomePair]:
    """Encode predictors and outcomes over the rows complete on both."""
    if schema.outcome is None:
        raise SchemaError("schema declares no outcome column")
    design = encode(data, schema, extra_required=[schema.outcome])
    raw = data.frame[schema.outcome].iloc[design.rows]
    return design, code_outcomes(raw, schema.outcome_map)


def missingness_report(design: DesignMatrix, n_input: int) -> dict:
    return {
        "n_input": int(n_input),
        "n_complete": int(design.n),
        "dropped": int(design.dropped),
        "missing_by_variable": {k: v for k, v in sorted(design.missing.items())},
    }


def split(
    data: Dataset,
    fraction: float = 0.7,
    seed: int = 0,
    stratify: np.ndarray | None = None,
) -> tuple[Dataset, Dataset]:
    """Random train/test partition with ``round(fraction * n)`` training rows."""
    train_idx, test_idx = split_indices(data.n, fraction, seed, stratify)
    return data.take(train_idx), data.take(test_idx)


def split_indices(n: int, fraction: float, seed: int, stratify=None):
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"split fraction must lie in (0, 1), got {fraction}")
    n_train = int(math.floor(fraction * n + 0.5))
    rng = np.random.default_rng(seed)
    if stratify is None:
        perm = rng.permutation(n)
        train = np.sort(perm[:n_train])
    else:
        stratify = np.asarray(stratify)
        if len(stratify) != n:
            raise ConfigError("stratification labels must have one entry per row")
        classes = sorted(set(stratify.tolist()))
        members = [np.flatnonzero(stratify == c) for c in classes]
        exact = [fraction * len(m) for m in members]
        alloc = [int(math.floor(e)) for e in exact]
        order = sorted(range(len(classes)), key=lambda k: (-(exact[k] - alloc[k]), k))
        for k in order[: n_train - sum(alloc)]:
            alloc[k] += 1
        picked = [rng.permutation(m)[:a] for m, a in zip(members, alloc)]
        train = np.sort(np.concatenate(picked))
    mask = np.zeros(n, dtype=bool)
    mask[train] = True
    return train, np.flatnonzero(~mask)


@dataclass(frozen=True)
class GroupMap:
    groups: dict
    individual: list

    def group_of(self, column: int) -> str | None:
        for label, cols in self.groups.items():
            if column in cols:
                return label
        return None


def group_map(schema_or_columns) -> GroupMap:
    """Column indices per group label, in first-appearance order."""
    metas = (
        schema_or_columns.columns()
        if isinstance(schema_or_columns, SurveySchema)
        else list(schema_or_columns)
    )
    groups: dict[str, list[int]] = {}
    individual = []
    for j, meta in enumerate(metas):
        if meta.group is None:
            individual.append(j)
        else:
            groups.setdefault(meta.group, []).append(j)
    return GroupMap(groups, individual)
