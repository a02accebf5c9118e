"""Command-line entry point: ``dsknn run|hardness|compare|generate``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .data import SYNTHETIC_KINDS, generate_synthetic, ingest_csv, write_csv
from .evaluation import Z_VALUES, ResultsTable, sign_test, win_tie_loss
from .hardness import kdn_profile
from .harness import OUTPUT_ENV, ExperimentConfig, ExperimentReport, desk_preset, full_preset, report_render, run_experiment


def _label_column(value):
    try:
        return int(value)
    except ValueError:
        return value


def cmd_run(args):
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        base = Path(args.config).resolve().parent
    else:
        cfg = desk_preset() if args.preset == "desk" else full_preset()
        base = None
    if args.seed is not None:
        cfg.seed = args.seed
    if args.replications is not None:
        cfg.replications = args.replications
    out = args.out or os.environ.get(OUTPUT_ENV) or cfg.output_dir
    report = run_experiment(cfg.validate(), base_dir=base)
    written = []
    for fmt in args.format:
        written += report_render(report, fmt, out)
    print(json.dumps({"status": "ok", "files": [str(p) for p in written],
                      "failures": report.failures}))
    return 0


def cmd_hardness(args):
    if args.synthetic:
        ds = generate_synthetic(args.synthetic, args.n, args.noise, args.seed)
    else:
        ds = ingest_csv(args.dataset, _label_column(args.label_column))
    prof = kdn_profile(ds, K=args.k)
    counts = np.bincount(prof.counts, minlength=args.k + 1)
    lines = ["index,label,disagreeing,kdn"]
    lines += [f"{i},{ds.label_names[y]},{c},{c / args.k:.6f}" for i, (y, c) in enumerate(zip(ds.labels, prof.counts))]
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
    summary = {"status": "ok", "dataset": ds.name, "K": args.k, "n": ds.n_samples,
               "bin_counts": counts.tolist(), "mean_kdn": float(prof.values.mean())}
    if args.out:
        summary["file"] = str(args.out)
    else:
        print("\n".join(lines))
    print(json.dumps(summary), file=sys.stderr if not args.out else sys.stdout)
    return 0


def _pick(report, technique):
    if technique:
        if technique not in report.techniques:
            raise ValueError(f"technique {technique!r} not in report (have {report.techniques})")
        return technique
    ranks = report.ranks()
    return min(report.techniques, key=lambda t: (ranks[t], report.techniques.index(t)))


def cmd_compare(args):
    a, b = ExperimentReport.load(args.report_a), ExperimentReport.load(args.report_b)
    ta, tb = _pick(a, args.technique_a), _pick(b, args.technique_b)
    common = [d for d in a.datasets if d in b.datasets]
    if not common:
        raise ValueError("the two reports share no datasets")
    tab_a, tab_b = a.table(), b.table()
    col_a = tab_a.column(ta)[[a.datasets.index(d) for d in common]]
    col_b = tab_b.column(tb)[[b.datasets.index(d) for d in common]]
    name_a, name_b = f"A:{ta}", f"B:{tb}"
    table = ResultsTable(common, (name_a, name_b), np.column_stack([col_a, col_b]))
    wtl = win_tie_loss(table, name_b)[name_a]
    print(json.dumps({
        "status": "ok",
        "technique": name_a,
        "baseline": name_b,
        "datasets": len(common),
        "wins": wtl.wins, "ties": wtl.ties, "losses": wtl.losses,
        "reject_equivalence": {str(alpha): sign_test(wtl, alpha) for alpha in Z_VALUES},
    }))
    return 0


def cmd_generate(args):
    ds = generate_synthetic(args.kind, args.n, args.noise, args.seed)
    path = write_csv(ds, args.out)
    print(json.dumps({"status": "ok", "file": str(path), "n": ds.n_samples, "kind": args.kind}))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="dsknn", description="Dynamic selection vs K-NN experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment and write reports")
    r.add_argument("config", nargs="?", help="YAML config file; omit to use --preset")
    r.add_argument("--preset", choices=["desk", "full"], default="desk")
    r.add_argument("--out", help=f"output directory (overrides ${OUTPUT_ENV} and the config)")
    r.add_argument("--format", nargs="+", choices=["json", "csv", "markdown"],
                   default=["json", "csv", "markdown"])
    r.add_argument("--seed", type=int)
    r.add_argument("--replications", type=int)
    r.set_defaults(func=cmd_run)

    h = sub.add_parser("hardness", help="kDN profile of a dataset (each instance against the rest)")
    h.add_argument("dataset", nargs="?", help="CSV file")
    h.add_argument("--label-column", default="-1", help="label column name or zero-based index")
    h.add_argument("--synthetic", choices=sorted(SYNTHETIC_KINDS))
    h.add_argument("--n", type=int, default=1000)
    h.add_argument("--noise", type=float, default=0.1)
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("-k", type=int, default=7)
    h.add_argument("--out", help="write the per-instance profile CSV here")
    h.set_defaults(func=cmd_hardness)

    c = sub.add_parser("compare", help="sign test between techniques of two report files")
    c.add_argument("report_a")
    c.add_argument("report_b")
    c.add_argument("--technique-a", help="default: best-ranked technique of report A")
    c.add_argument("--technique-b", help="default: best-ranked technique of report B")
    c.set_defaults(func=cmd_compare)

    g = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    g.add_argument("kind", choices=sorted(SYNTHETIC_KINDS))
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--noise", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.command == "hardness" and not (args.dataset or args.synthetic):
        parser.error("hardness needs a CSV path or --synthetic")
    try:
        return args.func(args)
    except Exception as exc:
        print(json.dumps({"status": "error", "error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
