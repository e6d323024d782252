"""Interpretable boosting against black-box comparators on a held-out split."""

from hybridboost.baselines import ForestConfig, GbtConfig, MlpConfig
from hybridboost.boost import FitConfig
from hybridboost.dataset import split
from hybridboost.evaluation import CompareConfig, comparison_table
from hybridboost.farm import farm_survey_schema, simulate_farm_survey

schema = farm_survey_schema()
data = simulate_farm_survey(seed=3)
train, test = split(data, 0.7, seed=0)
print(f"train {train.n} / test {test.n}")

cfg = CompareConfig(
    fit=FitConfig(folds=5, mstop_max=600),
    forest=ForestConfig(ntree=200),
    gbt=GbtConfig(trees=100),
    mlp=MlpConfig(epochs=1000),
)
result = comparison_table(train, test, schema, cfg, scopes=("combined",))

print(f"\n{'model':8s} {'target':6s} {'acc':>6s} {'auc':>6s}")
for r in result.rows:
    print(f"{r.model:8s} {r.target:6s} {r.accuracy:6.3f} {r.auc:6.3f}")

fpr, tpr = zip(*result.roc[("combined", "high", "sgb")])
print(f"\nsgb ROC has {len(fpr)} points")
