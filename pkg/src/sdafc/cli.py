"""``sdafc`` command line: run grids, summarize results, emit failure curves, rerun a row."""
import argparse
import json
import sys

from .harness import (
    ExperimentConfig,
    emit_failure_curve,
    rerun,
    run_grid,
    summarize,
)


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _names(text):
    return [x.strip() for x in text.split(",") if x.strip()]


def _build_config(args):
    doc = {}
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    overrides = {
        "dataset": args.dataset,
        "methods": args.methods,
        "p": args.p,
        "rates": args.rates,
        "seeds": args.seeds,
        "k": args.k,
        "m": args.m,
        "fuzzy_degree": args.fuzzy_degree,
        "out": args.out,
        "parallel_clients": args.parallel_clients,
        "partition": args.partition,
        "n_init": args.n_init,
    }
    doc.update({k: v for k, v in overrides.items() if v is not None})
    if args.epochs is not None:
        doc["gan"] = {**doc.get("gan", {}), "epochs": args.epochs}
    if args.dump_synthetic:
        doc["dump_synthetic"] = True
    return ExperimentConfig.from_dict(doc)


def _add_grid_flags(sp):
    sp.add_argument("--config", help="JSON config file; flags override its fields")
    sp.add_argument("--dataset", help="toy2, toy4, toy-split or a CSV path (label in last column)")
    sp.add_argument("--methods", type=_names, help="comma list, e.g. sda-fc-km,k-fed")
    sp.add_argument("--p", type=_floats, help="comma list of non-IID levels")
    sp.add_argument("--rates", type=_floats, help="comma list of disconnection rates")
    sp.add_argument("--seeds", type=_ints, help="comma list of seeds")
    sp.add_argument("--k", type=int)
    sp.add_argument("--m", type=int)
    sp.add_argument("--fuzzy-degree", type=float)
    sp.add_argument("--out")
    sp.add_argument("--parallel-clients", type=int)
    sp.add_argument("--partition", choices=("noniid", "split"))
    sp.add_argument("--n-init", type=int)
    sp.add_argument("--epochs", type=int, help="GAN training epochs")
    sp.add_argument("--dump-synthetic", action="store_true", help="write server-side synthetic data as CSV")


def _print_row(r):
    status = r.error or f"nmi={r.nmi:.4f} kappa={r.kappa:.4f}"
    print(f"{r.method:<12} p={r.p:<5g} rate={r.rate:<5g} seed={r.seed:<3d} {status} ({r.wall_time_s:.1f}s)",
          file=sys.stderr, flush=True)


def main(argv=None):
    ap = argparse.ArgumentParser(prog="sdafc", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("run", help="run a methods x p x rates x seeds grid")
    _add_grid_flags(sp)

    sp = sub.add_parser("summarize", help="mean metric per (dataset, method, p) with count rows")
    sp.add_argument("results")

    sp = sub.add_parser("failure-curve", help="rate, mean NMI, mean Kappa for one method")
    sp.add_argument("results")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--method", required=True)
    sp.add_argument("--p", type=float)
    sp.add_argument("--out")

    sp = sub.add_parser("rerun", help="recompute one row from a saved config")
    sp.add_argument("config")
    sp.add_argument("--method", required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--rate", type=float, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--parallel-clients", type=int)

    args = ap.parse_args(argv)
    try:
        if args.command == "run":
            cfg = _build_config(args)
            results = run_grid(cfg, log=_print_row)
            failed = sum(not r.ok for r in results)
            print(f"{len(results)} rows written to {cfg.out}/results.csv ({failed} failed)")
        elif args.command == "summarize":
            print(summarize(args.results), end="")
        elif args.command == "failure-curve":
            print(emit_failure_curve(args.results, args.dataset, args.method, args.p, args.out), end="")
        else:
            res = rerun(ExperimentConfig.load(args.config), args.method, args.p, args.rate, args.seed,
                        args.parallel_clients)
            print(json.dumps(dict(zip(("nmi", "kappa", "error"), (res.nmi, res.kappa, res.error)))))
    except (OSError, ValueError) as exc:
        print(f"sdafc: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
