# %% [markdown]
# # Data, splits and scaling
#
# Every experiment starts from a `Dataset`: a float feature matrix, integer
# labels and the original label names. Here we load a bundled fixture, draw
# a stratified train / DSEL / test split and standardize with the training
# statistics only.

# %%
import numpy as np

from dsknn import SplitSpec, apply_standardizer, fit_standardizer, generate_synthetic, load_fixture, stratified_split

wine = load_fixture("wine")
print(wine.name, wine.features.shape, wine.class_count, wine.label_names)
print("class counts:", wine.class_counts())

# %% [markdown]
# The split keeps each class's share close to its overall prior. Replication
# `r` of seed `s` is always the same split.

# %%
spec = SplitSpec(0.25, 0.50, 0.25, seed=7, replications=3)
for rep in range(3):
    train, dsel, test = stratified_split(wine, spec, rep)
    shares = [p.class_counts() / p.n_samples for p in (train, dsel, test)]
    print(rep, [p.n_samples for p in (train, dsel, test)], np.round(shares[2], 2))

# %%
stats = fit_standardizer(train)
train_s, test_s = apply_standardizer(stats, train), apply_standardizer(stats, test)
print("train mean ~ 0:", np.allclose(train_s.features.mean(0), 0))
print("test mean (not 0, scaled with train stats):", np.round(test_s.features.mean(0)[:4], 2))

# %% [markdown]
# Synthetic two-class problems for desk-scale runs.

# %%
for kind in ("banana", "lithuanian", "moons", "circles", "xor"):
    ds = generate_synthetic(kind, 400, 0.3, seed=1)
    print(f"{kind:11s}", ds.features.shape, ds.class_counts())
