"""Regenerate the CSV fixtures shipped in src/dsknn/data/.

Needs scikit-learn and statsmodels, which bundle these tables offline.
The package itself never imports either library.
"""
import csv
from pathlib import Path

from sklearn.datasets import load_breast_cancer, load_iris, load_wine
import statsmodels.api as sm

OUT = Path(__file__).resolve().parents[1] / "src" / "dsknn" / "data"


def write(name, X, y, cols, ycol="class"):
    with open(OUT / f"{name}.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(list(cols) + [ycol])
        for row, lab in zip(X, y):
            w.writerow([repr(float(v)) for v in row] + [lab])


def main():
    w = load_wine()
    write("wine", w.data, w.target, [c.replace(" ", "_") for c in w.feature_names])
    i = load_iris()
    write("iris", i.data, [i.target_names[t] for t in i.target],
          [c.replace(" (cm)", "").replace(" ", "_") for c in i.feature_names])
    b = load_breast_cancer()
    write("wdbc", b.data, [b.target_names[t] for t in b.target],
          [c.replace(" ", "_") for c in b.feature_names], "diagnosis")
    a = sm.datasets.anes96.load_pandas().data.drop(columns=["logpopul"])
    write("anes96", a.drop(columns=["vote"]).values, a["vote"].astype(int).values,
          [c for c in a.columns if c != "vote"], "vote")
    f = sm.datasets.fair.load_pandas().data.sample(n=1000, random_state=7)
    write("fair", f.drop(columns=["affairs"]).values, (f["affairs"] > 0).astype(int).values,
          [c for c in f.columns if c != "affairs"], "had_affair")


if __name__ == "__main__":
    main()
