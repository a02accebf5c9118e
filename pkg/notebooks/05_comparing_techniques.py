# %% [markdown]
# # Comparing techniques over many datasets
#
# A small replicated experiment, then Friedman average ranks and the sign
# test against the K-NN baselines.

# %%
from dsknn.evaluation import sign_test_critical
from dsknn.harness import ExperimentConfig, run_experiment

cfg = ExperimentConfig(
    datasets=[{"name": k, "synthetic": k, "n": 400, "noise": s, "seed": 1}
              for k, s in [("banana", 1.0), ("moons", 0.3), ("xor", 0.5)]]
    + [{"name": f, "fixture": f} for f in ("iris", "wine")],
    techniques=["ola", "mcb", "knora-u", "des-p", "des-kl"],
    pool_size=15, replications=3, epochs=50,
)
report = run_experiment(cfg)
for name, rank in sorted(report.ranks().items(), key=lambda kv: kv[1]):
    print(f"{name:16s} {rank:.2f}")

# %%
n = len(report.datasets)
print("wins needed over", n, "datasets:", {a: sign_test_critical(n, a) for a in (0.10, 0.05, 0.01)})
for tech, w in report.win_tie_loss()["7nn"].items():
    print(f"{tech:16s} W/T/L vs 7nn: {w.wins}/{w.ties}/{w.losses}")
