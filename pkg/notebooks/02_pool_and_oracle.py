# %% [markdown]
# # Bagged perceptron pool and the oracle matrix
#
# The pool is a list of one-vs-rest perceptrons, each trained on a bootstrap
# resample of the training partition. All selection rules read the cached
# DSEL predictions and correctness from an `OracleMatrix`.

# %%
import numpy as np

from dsknn import SplitSpec, bagging_generate, build_oracle_matrix, generate_synthetic, stratified_split

ds = generate_synthetic("banana", 600, 1.0, seed=3)
train, dsel, test = stratified_split(ds, SplitSpec(seed=3), 0)
pool = bagging_generate(train, pool_size=25, seed=11)
om = build_oracle_matrix(pool, dsel)
print(len(pool), "members; oracle correctness", om.correctness.shape)

# %% [markdown]
# Individual members are weak linear boundaries on a banana-shaped problem,
# but the oracle (any member right) covers most of DSEL.

# %%
member_acc = om.correctness.mean(axis=1)
print("member accuracy on DSEL: min %.2f  median %.2f  max %.2f"
      % (member_acc.min(), np.median(member_acc), member_acc.max()))
print("oracle accuracy on DSEL: %.3f" % om.correctness.any(axis=0).mean())

# %%
epochs = [m.epochs_run for m in pool.members]
print("epochs used per member:", epochs[:10], "...")
