"""End-to-end run: effect tables, importance, interactions, model comparison.

Every file goes through :class:`Manifest`, which records its relative path
and SHA-256. The manifest itself holds no timestamps, so two runs with the
same config and seed write byte-identical output trees.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import yaml

from .baselines import ForestConfig, GbtConfig, MlpConfig
from .boost import (
    BoostModel,
    FitConfig,
    fit_boost,
    group_direction,
    importance_table,
    predict_proba,
)
from .dataset import (
    DesignMatrix,
    SurveySchema,
    load_survey,
    missingness_report,
    prepare,
    split,
)
from .errors import ConfigError, HybridBoostError, LookupFailure
from .evaluation import SCOPES, TARGETS, CompareConfig, comparison_table, write_comparison, write_roc
from .farm import farm_survey_schema
from .glm import climate_effect_analysis, write_effect_tables

logger = logging.getLogger(__name__)

ANALYSES = ("rq1", "rq2", "rq3", "compare")


@dataclass(frozen=True)
class RunConfig:
    data: str
    schema: SurveySchema
    out: str = "out"
    seed: int = 0
    split_fraction: float = 0.7
    fit: FitConfig = field(default_factory=FitConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    gbt: GbtConfig = field(default_factory=GbtConfig)
    mlp: MlpConfig = field(default_factory=MlpConfig)
    scopes: tuple[str, ...] = SCOPES
    targets: tuple[str, ...] = TARGETS
    analyses: tuple[str, ...] = ANALYSES
    models: tuple[str, ...] = ("glm", "mb", "sgb", "mb-int", "rf", "gbm", "nn")
    effect_mode: str = "joint"
    interaction_scopes: tuple[str, ...] = ("combined",)
    grid_pairs: tuple[tuple[str, str], ...] = ()
    grid_top: int = 2

    def __post_init__(self):
        if not self.analyses:
            raise ConfigError("at least one analysis must be selected")
        bad = set(self.analyses) - set(ANALYSES)
        if bad:
            raise ConfigError(f"unknown analyses {sorted(bad)}; choose from {ANALYSES}")
        if not 0.0 < self.split_fraction < 1.0:
            raise ConfigError("split_fraction must lie in (0, 1)")
        if not self.scopes:
            raise ConfigError("at least one scope must be selected")

    def seeded(self) -> "RunConfig":
        """Copy whose component seeds all equal ``self.seed``."""
        return replace(
            self,
            fit=replace(self.fit, seed=self.seed),
            forest=replace(self.forest, seed=self.seed),
            gbt=replace(self.gbt, seed=self.seed),
            mlp=replace(self.mlp, seed=self.seed),
        )

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["schema"] = self.schema.to_dict()
        for key in ("fit", "forest", "gbt", "mlp"):
            d[key] = asdict(d[key])
        for key in ("scopes", "targets", "analyses", "models", "interaction_scopes"):
            d[key] = list(d[key])
        d["grid_pairs"] = [list(p) for p in self.grid_pairs]
        return d

    def hash(self) -> str:
        """SHA-256 of the canonical config, excluding the output directory."""
        d = self.to_dict()
        d.pop("out")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def _sub(cls, doc, key):
    raw = doc.get(key) or {}
    if not isinstance(raw, Mapping):
        raise ConfigError(f"{key!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown {key} keys {sorted(unknown)}")
    return cls(**raw)


def config_from_dict(doc: Mapping, base_dir: Path | str = ".") -> RunConfig:
    """Build a :class:`RunConfig`; relative paths resolve against ``base_dir``."""
    base = Path(base_dir)
    if "data" not in doc:
        raise ConfigError("config lacks a 'data' path")
    schema_doc = doc.get("schema", "farm")
    if schema_doc == "farm":
        schema = farm_survey_schema()
    elif isinstance(schema_doc, str):
        from .dataset import load_schema

        schema = load_schema(base / schema_doc)
    elif isinstance(schema_doc, Mapping):
        schema = SurveySchema.from_dict(schema_doc)
    else:
        raise ConfigError("'schema' must be 'farm', a path, or an embedded mapping")
    simple = {}
    for key in ("seed", "split_fraction", "effect_mode", "grid_top"):
        if key in doc:
            simple[key] = doc[key]
    for key in ("scopes", "targets", "analyses", "models", "interaction_scopes"):
        if key in doc:
            simple[key] = tuple(doc[key])
    if "grid_pairs" in doc:
        pairs = []
        for p in doc["grid_pairs"]:
            if len(p) != 2:
                raise ConfigError(f"grid pair {p!r} must name two columns")
            pairs.append((str(p[0]), str(p[1])))
        simple["grid_pairs"] = tuple(pairs)
    known = {f.name for f in fields(RunConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    return RunConfig(
        data=str(base / doc["data"]),
        schema=schema,
        out=str(base / doc.get("out", "out")),
        fit=_sub(FitConfig, doc, "fit"),
        forest=_sub(ForestConfig, doc, "forest"),
        gbt=_sub(GbtConfig, doc, "gbt"),
        mlp=_sub(MlpConfig, doc, "mlp"),
        **simple,
    )


def load_config(path) -> RunConfig:
    """Read a YAML or JSON run config."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML/JSON: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise ConfigError(f"config {path} must be a mapping")
    return config_from_dict(doc, path.parent)


class Manifest:
    """Serialized writer that records every artifact exactly once."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.files: dict[str, str] = {}

    def path(self, rel: str) -> Path:
        if rel in self.files:
            raise ConfigError(f"artifact {rel} written twice")
        p = self.root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def record(self, rel: str) -> None:
        digest = hashlib.sha256((self.root / rel).read_bytes()).hexdigest()
        self.files[rel] = digest

    def write_text(self, rel: str, text: str) -> None:
        self.path(rel).write_text(text, encoding="utf-8")
        self.record(rel)

    def write_json(self, rel: str, obj) -> None:
        self.write_text(rel, json.dumps(obj, indent=2) + "\n")

    def write_csv(self, rel: str, header: Sequence[str], rows) -> None:
        with open(self.path(rel), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([repr(v) if isinstance(v, float) else v for v in r])
        self.record(rel)

    def finish(self, status: str, seed: int, config_hash: str, analyses, error: str | None = None):
        doc = {
            "status": status,
            "seed": seed,
            "config_hash": config_hash,
            "analyses": list(analyses),
            "files": [{"path": k, "sha256": v} for k, v in sorted(self.files.items())],
        }
        if error is not None:
            doc["error"] = error
        (self.root / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        return doc


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", text).strip("_").lower()


def interaction_grid(
    model: BoostModel,
    factors: tuple[str, str],
    design: DesignMatrix,
    country: str | None = None,
) -> list[dict]:
    """Predicted probability for each 0/1 combination of two factors.

    Other columns sit at the mean of the training rows of ``country`` (or
    of all rows when ``country`` is None).
    """
    a, b = factors
    ja, jb = design.column_index(a), design.column_index(b)
    if country is None:
        rows = np.arange(design.n)
    else:
        if design.country is None:
            raise LookupFailure("design carries no country labels")
        rows = np.flatnonzero(design.country == country)
        if len(rows) == 0:
            raise LookupFailure(f"country {country!r} absent from the training data")
    base = design.X[rows].mean(axis=0)
    out = []
    for va in (0, 1):
        for vb in (0, 1):
            x = base.copy()
            x[ja], x[jb] = va, vb
            p = float(predict_proba(model, x[None, :])[0])
            out.append({"country": country or "combined", a: va, b: vb, "probability": p})
    return out


def _importance_rows(model: BoostModel, scope: str, target: str):
    for rank, r in enumerate(importance_table(model), start=1):
        yield [scope, target, rank, r["name"], r["kind"], r["risk_reduction"], r["selections"],
               r["direction"]]


def _group_rows(model: BoostModel, design: DesignMatrix, scope: str, target: str):
    groups = []
    for c in design.columns:
        if c.group is not None and c.group not in groups:
            groups.append(c.group)
    for g in groups:
        d = group_direction(model, g)
        yield [scope, target, g, d.sign or "", d.total, d.note]


def _run_rq1(cfg: RunConfig, data, man: Manifest) -> None:
    rows = []
    for scope in cfg.scopes:
        rows += climate_effect_analysis(data, cfg.schema, scope, cfg.effect_mode, cfg.targets)
    write_effect_tables(rows, man.path("rq1/effects.csv"), man.path("rq1/effects.json"))
    man.record("rq1/effects.csv")
    man.record("rq1/effects.json")


def _run_rq2(cfg: RunConfig, data, man: Manifest) -> None:
    imp, grp = [], []
    fit = replace(cfg.fit, learner_mode="sgb")
    for scope in cfg.scopes:
        design, outcomes = prepare(data.subset_country(scope, cfg.schema), cfg.schema)
        for target in cfg.targets:
            logger.info("rq2 sgb %s/%s", scope, target)
            model = fit_boost(design, outcomes.target(target), fit)
            imp += list(_importance_rows(model, scope, target))
            grp += list(_group_rows(model, design, scope, target))
            man.write_text(f"rq2/models/sgb_{_slug(scope)}_{target}.json", model.to_json(indent=1) + "\n")
    man.write_csv(
        "rq2/importance.csv",
        ["scope", "target", "rank", "learner", "kind", "risk_reduction", "selections", "direction"],
        imp,
    )
    man.write_csv("rq2/group_directions.csv", ["scope", "target", "group", "sign", "sum", "note"], grp)


def _run_rq3(cfg: RunConfig, data, man: Manifest) -> None:
    fit = replace(cfg.fit, learner_mode="mb-int")
    ranking = []
    for scope in cfg.interaction_scopes:
        design, outcomes = prepare(data.subset_country(scope, cfg.schema), cfg.schema)
        countries = sorted(set(design.country.tolist())) if design.country is not None else []
        for target in cfg.targets:
            logger.info("rq3 mb-int %s/%s", scope, target)
            model = fit_boost(design, outcomes.target(target), fit)
            man.write_text(f"rq3/models/mbint_{_slug(scope)}_{target}.json", model.to_json(indent=1) + "\n")
            inter = [r for r in importance_table(model) if r["kind"] == "interaction"]
            for rank, r in enumerate(inter, start=1):
                ranking.append([scope, target, rank, r["name"], r["risk_reduction"], r["selections"],
                                r["direction"]])
            pairs = list(cfg.grid_pairs)
            for r in inter[: cfg.grid_top]:
                lr = model.learner(r["learner_id"])
                pair = (design.names[lr.columns[0]], design.names[lr.columns[1]])
                if pair not in pairs:
                    pairs.append(pair)
            for pair in pairs:
                cells = []
                for c in countries or [None]:
                    cells += interaction_grid(model, pair, design, c)
                man.write_csv(
                    f"rq3/grid_{_slug(scope)}_{target}_{_slug(pair[0])}__{_slug(pair[1])}.csv",
                    ["country", pair[0], pair[1], "probability"],
                    [[c["country"], c[pair[0]], c[pair[1]], c["probability"]] for c in cells],
                )
    man.write_csv(
        "rq3/interactions.csv",
        ["scope", "target", "rank", "interaction", "risk_reduction", "selections", "direction"],
        ranking,
    )


def _run_compare(cfg: RunConfig, data, man: Manifest) -> None:
    train, test = split(data, cfg.split_fraction, cfg.seed)
    ccfg = CompareConfig(cfg.fit, cfg.forest, cfg.gbt, cfg.mlp, models=cfg.models,
                         interaction_scopes=cfg.interaction_scopes)
    result = comparison_table(train, test, cfg.schema, ccfg, cfg.scopes, cfg.targets,
                              progress=lambda s: logger.info("compare %s", s))
    write_comparison(result.rows, man.path("compare/table1.csv"), man.path("compare/table1.json"))
    man.record("compare/table1.csv")
    man.record("compare/table1.json")
    for (scope, target, name), points in result.roc.items():
        rel = f"compare/roc/{_slug(scope)}_{target}_{_slug(name)}.csv"
        write_roc(points, man.path(rel))
        man.record(rel)


def run_pipeline(cfg: RunConfig) -> dict:
    """Run the selected analyses and return the manifest document.

    On failure the manifest is still written, marked ``failed`` and listing
    the artifacts finished so far; the error is then re-raised.
    """
    cfg = cfg.seeded()
    root = Path(cfg.out)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output directory {root} is not writable: {exc}") from exc
    man = Manifest(root)
    chash = cfg.hash()
    try:
        data = load_survey(cfg.data, cfg.schema)
        if set(cfg.analyses) - {"rq1"}:
            # audit dump of the full encoded design used by the boosting analyses
            design, _ = prepare(data, cfg.schema)
            design.to_csv(man.path("data/design.csv"))
            man.record("data/design.csv")
            man.write_json("data/missingness.json", missingness_report(design, data.n))
        steps = {"rq1": _run_rq1, "rq2": _run_rq2, "rq3": _run_rq3, "compare": _run_compare}
        for name in ANALYSES:
            if name in cfg.analyses:
                steps[name](cfg, data, man)
    except HybridBoostError as exc:
        man.finish("failed", cfg.seed, chash, cfg.analyses, str(exc))
        raise
    return man.finish("complete", cfg.seed, chash, cfg.analyses)
