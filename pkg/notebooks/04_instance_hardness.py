# %% [markdown]
# # Instance hardness and where K-NN breaks
#
# kDN is the share of an instance's K nearest neighbours carrying a different
# label. Binning the test set by kDN shows K-NN collapsing on hard instances
# while dynamic selection keeps some of them.

# %%
import numpy as np

from dsknn import (DynamicSelector, HybridClassifier, KNNClassifier, SplitSpec, bagging_generate,
                   bin_by_hardness, build_oracle_matrix, generate_synthetic, stratified_split)
from dsknn.data import merge

ds = generate_synthetic("moons", 1000, 0.3, seed=1)
train, dsel, test = stratified_split(ds, SplitSpec(seed=1), 0)
pool = bagging_generate(train, 25, seed=2)
om = build_oracle_matrix(pool, dsel)
reference = merge(train, dsel)

bins = bin_by_hardness(test, reference, K=7)
bins.add("7-NN", KNNClassifier(7).fit(reference).predict(test.features))
bins.add("KNORA-U", DynamicSelector("knora-u").fit(pool, dsel, om).predict(test.features))
print("kDN   n   7-NN  KNORA-U")
for m in range(8):
    if bins.counts[m]:
        acc = {t: bins.correct[t][m] / bins.counts[m] for t in bins.correct}
        print(f"{m}/7 {bins.counts[m]:4d}  {acc['7-NN']:.2f}  {acc['KNORA-U']:.2f}")

# %% [markdown]
# The hybrid sends only queries whose neighbourhood looks mixed to the DS
# rule; everything else stays with K-NN.

# %%
for tau in (0.0, 0.4, 1.01):
    h = HybridClassifier(DynamicSelector("knora-u"), tau=tau).fit(train, dsel, pool, om)
    labels, routes = h.predict(test.features, return_routes=True)
    print(f"tau={tau:<5} accuracy {np.mean(labels == test.labels):.3f}  routed to DS {np.mean(routes == 'ds'):.1%}")
