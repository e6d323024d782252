"""The fruit-farm survey layout and a synthetic survey generator.

``farm_survey_schema`` describes the 54 questions of the farm financial
wellbeing survey (58 encoded columns in seven groups). ``simulate_farm_survey``
writes raw answers in the same layout, driven by a planted ordinal-logistic
model, so the whole pipeline can run without the original interviews.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from .dataset import Dataset, SurveySchema, Variable

OUTCOME = "Financial wellbeing"
COUNTRY = "Country"
REGIONS = ("CentralChile", "CentralTunisia", "NorthernTunisia", "SouthernChile")

USE_OF = (
    "Use of newspapers and magazines",
    "Use of farming journals",
    "Use of television",
    "Use of radio",
    "Use of internet",
    "Use of extension experts",
    "Use of government experts",
    "Use of neighbours",
    "Use of industry information",
    "Use of farm associations",
)
TRUST_IN = (
    "Trust in newspapers and magazines",
    "Trust in farming journals",
    "Trust in television",
    "Trust in radio",
    "Trust in internet",
    "Trust in extension experts",
    "Trust in government workers",
    "Trust in neighbours",
    "Trust in industry",
    "Trust in farm associations",
    "Trust in government institutions",
    "Trust in other farmers",
    "Trust in my religion",
    "Trust in fate",
)
INCOME_DAMAGE = (
    "Temperature income damage",
    "Precipitation income damage",
    "Drought income damage",
    "Extreme weather income damage",
)
# observed-change codes: 1 increased, 2 unchanged, 3 decreased, 4 unpredictable
CLIMATE_EXPERIENCE = {
    "Temperature increase": "1",
    "Rainfall decrease": "3",
    "Drought increase": "1",
    "Extreme weather increase": "1",
}


def _yes_no(name, group):
    return Variable(name, "dichotomous", group, reference="no", positive=("yes",), negative=("no",))


def farm_survey_schema() -> SurveySchema:
    v = []
    for name in ("Agronomic measures", "Economic measures", "Technological measures",
                 "Use of well as water source"):
        v.append(_yes_no(name, "biophysical"))
    v.append(Variable("Farm size", "interval-threshold", "biophysical", reference="<=7ha", threshold=7))
    v.append(Variable("Orchard size", "interval-threshold", "biophysical", reference="<=2ha", threshold=2))
    v.append(_yes_no("More than one variety grown", "biophysical"))
    v.append(_yes_no("Other products", "biophysical"))
    v.append(Variable("Regions", "nominal", "natural", levels=REGIONS))
    # answer 5 on the 0-20% ... 80-100% scale
    v.append(Variable("Percentage of income invested", "interval-threshold", "economic",
                      reference="<80%", threshold=4))
    v.append(Variable("Farm debt load", "dichotomous", "economic", reference="rest",
                      positive=("heavily in debt",),
                      negative=("no debt", "lightly in debt", "moderately in debt")))
    v.append(Variable("Family members dependent on farm", "count-threshold", "economic",
                      reference="<=2", threshold=2))
    v.append(Variable("Family farm engagement", "count-threshold", "economic", reference="<=2",
                      threshold=2))
    # "Global climate is not changing": answering "incorrect" accepts climate change
    v.append(Variable("Climate change acceptance", "dichotomous", "human", reference="no",
                      positive=("incorrect",), negative=("correct",)))
    v.append(Variable("Human cause climate change", "dichotomous", "human", reference="no",
                      positive=("correct",), negative=("incorrect",)))
    v.append(Variable("Climate change causes extremes", "dichotomous", "human", reference="no",
                      positive=("correct",), negative=("incorrect",)))
    v.append(Variable("Age of farmer", "count-threshold", "human", reference="<=50", threshold=50))
    v.append(Variable("Gender of farmer", "dichotomous", "human", reference="F", positive=("M",),
                      negative=("F",)))
    v.append(Variable("Education of farmer", "dichotomous", "human", reference="no primary",
                      positive=("3", "4", "5", "6", "7", "8"), negative=("1", "2")))
    v.append(Variable("Generations of farm ownership", "nominal", "human", reference="0",
                      levels=("0", "1", "2", "3+"), ordinal=True,
                      recode={str(k): "3+" for k in range(3, 16)}))
    v.append(Variable("Prior ownership", "dichotomous", "human", reference="other",
                      positive=("family",), negative=("other",)))
    v.append(Variable("Years of farm management", "count-threshold", "human", reference="<=10",
                      threshold=10))
    for name in USE_OF + TRUST_IN:
        v.append(Variable(name, "likert5-top2", "social", reference="1,2,3"))
    for name, code in CLIMATE_EXPERIENCE.items():
        others = tuple(c for c in ("1", "2", "3", "4") if c != code)
        v.append(Variable(name, "dichotomous", "climate-experience", reference="no",
                          positive=(code,), negative=others))
    for name in INCOME_DAMAGE:
        v.append(Variable(name, "likert5-top2", "income-damage", reference="1,2,3"))
    return SurveySchema(tuple(v), outcome=OUTCOME, country=COUNTRY)


# share of "1" answers per binary column, roughly matching the interview counts
_PREVALENCE = {
    "Agronomic measures": 0.81, "Economic measures": 0.58, "Technological measures": 0.90,
    "Use of well as water source": 0.29, "Farm size": 0.35, "Orchard size": 0.40,
    "More than one variety grown": 0.63, "Other products": 0.71,
    "Percentage of income invested": 0.17, "Farm debt load": 0.12,
    "Family members dependent on farm": 0.66, "Family farm engagement": 0.25,
    "Climate change acceptance": 0.84, "Human cause climate change": 0.86,
    "Climate change causes extremes": 0.94, "Age of farmer": 0.55, "Gender of farmer": 0.85,
    "Education of farmer": 0.79, "Prior ownership": 0.50, "Years of farm management": 0.55,
    "Temperature increase": 0.79, "Rainfall decrease": 0.82, "Drought increase": 0.84,
    "Extreme weather increase": 0.68,
}
_LIKERT_PREVALENCE = dict(
    zip(USE_OF, (0.12, 0.20, 0.52, 0.27, 0.40, 0.43, 0.21, 0.39, 0.24, 0.12)),
    **dict(zip(TRUST_IN, (0.22, 0.36, 0.41, 0.30, 0.40, 0.54, 0.33, 0.40, 0.27, 0.23, 0.27, 0.21,
                          0.29, 0.33))),
    **dict(zip(INCOME_DAMAGE, (0.37, 0.27, 0.20, 0.23))),
)

# planted log-odds effects on the latent wellbeing scale (higher = better off)
DEFAULT_EFFECTS = {
    "Trust in industry": 1.4,
    "Use of newspapers and magazines": 1.1,
    "Regions[SouthernChile]": -1.3,
    "Prior ownership": -0.8,
    "Farm size": 0.8,
    "Rainfall decrease": -0.6,
    "Drought income damage": -1.0,
    "Farm debt load": -1.2,
}
DEFAULT_INTERACTIONS = {
    ("Use of newspapers and magazines", "Rainfall decrease"): 0.9,
}


def _raw_binary(name, bit, rng):
    """Render a 0/1 latent answer as a raw survey response."""
    n = len(bit)
    if name == "Farm size":
        return np.where(bit, np.round(rng.uniform(7.5, 40, n), 1), np.round(rng.uniform(0.5, 7, n), 1))
    if name == "Orchard size":
        return np.where(bit, np.round(rng.uniform(2.5, 20, n), 1), np.round(rng.uniform(0.2, 2, n), 1))
    if name == "Percentage of income invested":
        return np.where(bit, 5, rng.integers(1, 5, n))
    if name == "Farm debt load":
        rest = rng.choice(["no debt", "lightly in debt", "moderately in debt"], n)
        return np.where(bit, "heavily in debt", rest)
    if name in ("Family members dependent on farm", "Family farm engagement"):
        return np.where(bit, rng.integers(3, 8, n), rng.integers(0, 3, n))
    if name == "Climate change acceptance":
        return np.where(bit, "incorrect", "correct")
    if name in ("Human cause climate change", "Climate change causes extremes"):
        return np.where(bit, "correct", "incorrect")
    if name == "Age of farmer":
        return np.where(bit, rng.integers(51, 85, n), rng.integers(22, 51, n))
    if name == "Gender of farmer":
        return np.where(bit, "M", "F")
    if name == "Education of farmer":
        return np.where(bit, rng.integers(3, 9, n), rng.integers(1, 3, n)).astype(str)
    if name == "Prior ownership":
        return np.where(bit, "family", "other")
    if name == "Years of farm management":
        return np.where(bit, rng.integers(11, 45, n), rng.integers(1, 11, n))
    if name in CLIMATE_EXPERIENCE:
        code = CLIMATE_EXPERIENCE[name]
        others = [c for c in ("1", "2", "3", "4") if c != code]
        return np.where(bit, code, rng.choice(others, n))
    if name in _LIKERT_PREVALENCE:
        return np.where(bit, rng.integers(4, 6, n), rng.integers(1, 4, n))
    return np.where(bit, "yes", "no")


def simulate_farm_survey(
    seed: int = 0,
    n_chile: int = 400,
    n_tunisia: int = 401,
    effects: dict | None = None,
    interactions: dict | None = None,
    missing_rate: float = 0.0,
) -> Dataset:
    """Synthetic raw survey in the :func:`farm_survey_schema` layout.

    Binary answers are drawn independently at survey-like prevalences; the
    three-level wellbeing answer comes from an ordinal logistic model whose
    linear predictor holds ``effects`` (keyed by encoded column name) and
    pairwise ``interactions``. About 45% of farms report doing well and 22%
    not doing well.
    """
    rng = np.random.default_rng(seed)
    effects = DEFAULT_EFFECTS if effects is None else effects
    interactions = DEFAULT_INTERACTIONS if interactions is None else interactions
    n = n_chile + n_tunisia
    country = np.array(["Chile"] * n_chile + ["Tunisia"] * n_tunisia, dtype=object)
    regions = np.empty(n, dtype=object)
    regions[:n_chile] = np.where(np.arange(n_chile) < n_chile // 2, "CentralChile", "SouthernChile")
    regions[n_chile:] = np.where(
        np.arange(n_tunisia) < n_tunisia - n_tunisia // 2, "NorthernTunisia", "CentralTunisia"
    )
    bits: dict[str, np.ndarray] = {}
    raw: dict[str, object] = {COUNTRY: country}
    schema = farm_survey_schema()
    for var in schema.variables:
        if var.name == "Regions":
            raw[var.name] = regions
            for lv in REGIONS[1:]:
                bits[f"Regions[{lv}]"] = (regions == lv).astype(float)
            continue
        if var.name == "Generations of farm ownership":
            gen = rng.choice([0, 1, 2, 3, 4], size=n, p=[0.28, 0.29, 0.16, 0.20, 0.07])
            raw[var.name] = gen
            for lv, cond in (("1", gen == 1), ("2", gen == 2), ("3+", gen >= 3)):
                bits[f"Generations of farm ownership[{lv}]"] = cond.astype(float)
            continue
        prev = _PREVALENCE.get(var.name, _LIKERT_PREVALENCE.get(var.name, 0.5))
        bit = rng.random(n) < prev
        bits[var.name] = bit.astype(float)
        raw[var.name] = _raw_binary(var.name, bit, rng)
    eta = np.zeros(n)
    for name, beta in effects.items():
        eta += beta * (bits[name] - bits[name].mean())
    for (a, b), beta in interactions.items():
        prod = bits[a] * bits[b]
        eta += beta * (prod - prod.mean())
    latent = eta + rng.logistic(size=n)
    well = latent > 0.2
    not_well = latent < -1.6
    very = rng.random(n) < 0.3
    worst = rng.random(n) < 0.3
    labels = np.where(
        well,
        np.where(very, "very well", "well"),
        np.where(not_well, np.where(worst, "not at all well", "not well"), "neutral"),
    )
    raw[OUTCOME] = labels
    frame = pd.DataFrame({c: pd.Series(v, dtype=object) for c, v in raw.items()})
    frame = frame[[COUNTRY] + [v.name for v in schema.variables] + [OUTCOME]]
    frame = frame.apply(lambda s: s.map(lambda x: x if isinstance(x, str) else str(x)))
    if missing_rate > 0:
        cols = [v.name for v in schema.variables]
        mask = rng.random((n, len(cols))) < missing_rate
        values = frame[cols].to_numpy(dtype=object)
        values[mask] = None
        frame[cols] = values
    # numeric answers typed as load_survey would type them
    for var in schema.variables:
        if var.is_numeric and not var.recode:
            frame[var.name] = pd.to_numeric(frame[var.name], errors="coerce")
    return Dataset(frame, "both")
