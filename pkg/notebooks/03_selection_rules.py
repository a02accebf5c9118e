# %% [markdown]
# # Dynamic selection rules side by side
#
# `DynamicSelector` wraps every DCS and DES rule behind one interface. We fit
# each on the same pool and DSEL and compare test accuracy with plain K-NN.

# %%
import numpy as np

from dsknn import (RULES, DynamicSelector, KNNClassifier, SplitSpec, apply_standardizer, bagging_generate,
                   build_oracle_matrix, fit_standardizer, load_fixture, stratified_split)
from dsknn.data import merge

ds = load_fixture("wdbc")
train, dsel, test = stratified_split(ds, SplitSpec(seed=0), 0)
stats = fit_standardizer(train)
train, dsel, test = (apply_standardizer(stats, p) for p in (train, dsel, test))
pool = bagging_generate(train, 25, seed=1)
om = build_oracle_matrix(pool, dsel)

# %%
scores = {}
for rule in RULES:
    pred = DynamicSelector(rule, K=7, seed=0).fit(pool, dsel, om).predict(test.features)
    scores[rule] = np.mean(pred == test.labels)
scores["7-NN"] = np.mean(KNNClassifier(7).fit(merge(train, dsel)).predict(test.features) == test.labels)
for name, acc in sorted(scores.items(), key=lambda kv: -kv[1]):
    print(f"{name:15s} {100 * acc:.2f}")

# %% [markdown]
# One query in detail: which members KNORA-E keeps and whether it had to
# fall back to the whole pool.

# %%
sel = DynamicSelector("knora-e", K=7).fit(pool, dsel, om)
out = sel.classify(test.features[0])
print(out.rule, "selected", out.selected_indices.tolist(), "label", out.predicted_label,
      "fallback", out.fallback_used)
