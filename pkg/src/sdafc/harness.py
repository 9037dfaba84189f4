"""Seeded experiment grids, results CSV, summary tables and failure curves.

A grid is the Cartesian product methods x p x rates x seeds. For one cell
the dataset, partition and connection mask are pure functions of
``(dataset source, seed, p, rate)``, so any row of the results CSV can be
recomputed on its own from the saved config.
"""
import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import rng as _rng
from .dataset import LabeledDataset, load_csv, normalize_minmax, write_csv
from .errors import EmptySelectionError, ParseError
from .federation import run_centralized, run_ffcm, run_kfed, run_oracle, run_sda_fc
from .metrics import evaluate
from .partition import partition_noniid, sample_connection_mask
from .synthesis import default_gan_config
from .toys import TOY_NAMES, make_toy, split_partition

METHODS = ("sda-fc-km", "sda-fc-fcm", "k-fed", "ffcm", "km-central", "fcm-central", "oracle")
FEDERATED = ("sda-fc-km", "sda-fc-fcm", "k-fed", "ffcm")
RIVALS = {"sda-fc-km": "k-fed", "k-fed": "sda-fc-km", "sda-fc-fcm": "ffcm", "ffcm": "sda-fc-fcm"}
COLUMNS = ("dataset", "method", "p", "rate", "seed", "k", "m", "fuzzy_degree",
           "nmi", "kappa", "wall_time_s", "uploads", "broadcasts", "error")

TOY_EPOCHS = 500
CSV_EPOCHS = 200


@dataclass
class ExperimentConfig:
    """One experiment. ``dataset`` is a built-in toy name or a CSV path.

    ``partition`` is ``"noniid"`` (the p-controlled split) or ``"split"``
    (two clients cut across the cluster direction; p is then only a label).
    ``k`` and ``m`` default to the number of classes. ``gan`` holds overrides
    for the generator/discriminator training settings.
    """

    dataset: str = "toy2"
    methods: list = field(default_factory=lambda: ["sda-fc-km", "k-fed"])
    p: list = field(default_factory=lambda: [1.0])
    rates: list = field(default_factory=lambda: [0.0])
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    k: int = None
    m: int = None
    fuzzy_degree: float = 1.1
    gan: dict = field(default_factory=dict)
    n_init: int = 10
    partition: str = "noniid"
    label_column: int = -1
    parallel_clients: int = 0
    out: str = "results"
    dump_synthetic: bool = False

    def __post_init__(self):
        self.methods = [str(x) for x in self.methods]
        self.p = [float(x) for x in self.p]
        self.rates = [float(x) for x in self.rates]
        self.seeds = [int(x) for x in self.seeds]
        self.validate()

    def validate(self):
        if not (self.methods and self.p and self.rates and self.seeds):
            raise ValueError("methods, p, rates and seeds must all be non-empty")
        bad = [x for x in self.methods if x not in METHODS]
        if bad:
            raise ValueError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
        if any(not 0.0 <= x <= 1.0 for x in self.p + self.rates):
            raise ValueError("every p and rate must lie in [0, 1]")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.m is not None and self.m < 1:
            raise ValueError("m must be >= 1")
        if not self.fuzzy_degree > 1.0:
            raise ValueError("fuzzy_degree must exceed 1")
        if self.partition not in ("noniid", "split"):
            raise ValueError("partition must be 'noniid' or 'split'")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, doc):
        known = set(cls.__dataclass_fields__)
        extra = set(doc) - known
        if extra:
            raise ValueError(f"unknown config field(s): {sorted(extra)}")
        return cls(**doc)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


@dataclass
class RunResult:
    dataset: str
    method: str
    p: float
    rate: float
    seed: int
    k: int
    m: int
    fuzzy_degree: float
    nmi: float = math.nan
    kappa: float = math.nan
    wall_time_s: float = 0.0
    uploads: int = 0
    broadcasts: int = 0
    error: str = ""

    def row(self):
        return [getattr(self, c) for c in COLUMNS]

    @property
    def ok(self):
        return not self.error


def load_dataset(cfg, seed):
    """Built-in toys are regenerated from the run seed; CSV data is fixed."""
    if cfg.dataset in TOY_NAMES:
        return make_toy(cfg.dataset, seed)
    return normalize_minmax(load_csv(cfg.dataset, label_column=cfg.label_column))


def gan_settings(cfg, ds, k):
    epochs = TOY_EPOCHS if cfg.dataset in TOY_NAMES else CSV_EPOCHS
    return default_gan_config(ds.d, k, **{"epochs": epochs, **cfg.gan})


def _partition(cfg, ds, p, seed, m):
    if cfg.partition == "split":
        return split_partition(ds, seed)
    return partition_noniid(ds, p, m, seed=_rng.derive_seed(seed, _rng.PARTITION, p))


def execute(cfg, method, p, rate, seed, ds=None):
    """Run one grid cell. Returns ``(RunResult, MethodResult or None)``; errors are caught."""
    res = RunResult(cfg.dataset, method, p, rate, seed, 0, 0, cfg.fuzzy_degree)
    t0 = time.perf_counter()
    out = None
    try:
        ds = load_dataset(cfg, seed) if ds is None else ds
        k = ds.k_true if cfg.k is None else cfg.k
        m = ds.k_true if cfg.m is None else cfg.m
        if cfg.partition == "split":
            m = 2
        res.k, res.m = k, m
        if method in FEDERATED:
            part = _partition(cfg, ds, p, seed, m)
            mask = sample_connection_mask(m, rate, seed=_rng.derive_seed(seed, _rng.MASK, rate))
            common = dict(k=k, seed=seed, n_init=cfg.n_init, parallel_clients=cfg.parallel_clients)
            if method.startswith("sda-fc"):
                out = run_sda_fc(ds, part, mask, variant=method.rsplit("-", 1)[1],
                                 gan_cfg=gan_settings(cfg, ds, k), fuzzy_degree=cfg.fuzzy_degree, **common)
            elif method == "k-fed":
                out = run_kfed(ds, part, mask, **common)
            else:
                out = run_ffcm(ds, part, mask, fuzzy_degree=cfg.fuzzy_degree, **common)
            connected = sum(mask.connected[c] for c in part.client_ids)
            if out.trace.uploads_count != connected or out.trace.broadcasts_count != 1:
                raise RuntimeError("one-round contract violated")
        elif method == "oracle":
            out = run_oracle(ds, k=k)
        else:
            out = run_centralized(ds, method.split("-")[0], k=k, seed=seed,
                                  fuzzy_degree=cfg.fuzzy_degree, n_init=cfg.n_init)
        report = evaluate(ds.labels[out.rows], out.labels)
        res.nmi, res.kappa = report.nmi, report.kappa
        res.uploads, res.broadcasts = out.trace.uploads_count, out.trace.broadcasts_count
    except Exception as exc:  # a failed cell is recorded, the grid goes on
        res.error = f"{type(exc).__name__}: {exc}".replace("\n", " ")
        out = None
    res.wall_time_s = round(time.perf_counter() - t0, 3)
    return res, out


def grid_cells(cfg):
    for method in cfg.methods:
        for p in cfg.p:
            for rate in cfg.rates:
                for seed in cfg.seeds:
                    yield method, p, rate, seed


def run_grid(cfg, write=True, log=None):
    """Run every cell in canonical order; write ``results.csv`` and ``config.json`` under ``cfg.out``."""
    out_dir = Path(cfg.out)
    if write:
        out_dir.mkdir(parents=True, exist_ok=True)
        cfg.save(out_dir / "config.json")
    cache = {}
    results = []
    for method, p, rate, seed in grid_cells(cfg):
        key = seed if cfg.dataset in TOY_NAMES else None
        if key not in cache:
            try:
                cache[key] = load_dataset(cfg, seed)
            except Exception:
                cache[key] = None  # execute() reloads and records the error
        res, out = execute(cfg, method, p, rate, seed, ds=cache[key])
        results.append(res)
        if log:
            log(res)
        if write and cfg.dump_synthetic and out is not None and out.synthetic is not None:
            syn_dir = out_dir / "synthetic"
            syn_dir.mkdir(exist_ok=True)
            dump = LabeledDataset(out.synthetic, None, "synthetic")
            write_csv(dump, syn_dir / f"{method}_p{p:g}_rate{rate:g}_seed{seed}.csv")
    if write:
        write_results(results, out_dir / "results.csv")
    return results


def write_results(results, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for r in results:
            w.writerow(r.row())


_INT_COLS = ("seed", "k", "m", "uploads", "broadcasts")
_FLOAT_COLS = ("p", "rate", "fuzzy_degree", "nmi", "kappa", "wall_time_s")


def read_results(path):
    """Parse a results CSV back into RunResult rows; malformed lines raise ParseError."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("results file is empty", 1)
        if tuple(header) != COLUMNS:
            raise ParseError(f"expected header {','.join(COLUMNS)}", 1)
        for lineno, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != len(COLUMNS):
                raise ParseError(f"expected {len(COLUMNS)} fields, got {len(fields)}", lineno)
            doc = dict(zip(COLUMNS, fields))
            try:
                for c in _INT_COLS:
                    doc[c] = int(doc[c])
                for c in _FLOAT_COLS:
                    doc[c] = float(doc[c])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            rows.append(RunResult(**doc))
    if not rows:
        raise ParseError("results file has no data rows", 1)
    return rows


def rerun(cfg, method, p, rate, seed, parallel_clients=None):
    """Recompute one row from its config echo, optionally with a different client parallelism."""
    if parallel_clients is not None:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "parallel_clients": parallel_clients})
    res, _ = execute(cfg, method, float(p), float(rate), int(seed))
    return res


def cell_means(rows):
    """Mean (nmi, kappa, count) per (dataset, method, p) over successful rows."""
    acc = {}
    for r in rows:
        if not r.ok:
            continue
        acc.setdefault((r.dataset, r.method, r.p), []).append((r.nmi, r.kappa))
    return {key: (float(np.mean([v[0] for v in vals])), float(np.mean([v[1] for v in vals])), len(vals))
            for key, vals in acc.items()}


def best_counts(means, metric="nmi"):
    """Cells where each method beats its same-family rival on the mean metric."""
    col = 0 if metric == "nmi" else 1
    counts = {}
    for (ds, method, p), vals in means.items():
        other = means.get((ds, RIVALS.get(method), p))
        if other is None:
            continue
        counts.setdefault(method, 0)
        if vals[col] > other[col]:
            counts[method] += 1
    return counts


def summarize(results_csv):
    """Plain-text table: one line per (dataset, method) with a column per p, plus count rows."""
    rows = read_results(results_csv)
    means = cell_means(rows)
    ps = sorted({key[2] for key in means})
    pairs = sorted({key[:2] for key in means})
    seeds = sorted({r.seed for r in rows})
    buf = io.StringIO()
    buf.write(f"mean over {len(seeds)} seed(s) per cell; failed rows: {sum(not r.ok for r in rows)}\n")
    for metric, col in (("nmi", 0), ("kappa", 1)):
        buf.write(f"\n[{metric}]\n")
        buf.write(f"{'dataset':<24}{'method':<14}" + "".join(f"p={p:<8g}" for p in ps) + "\n")
        for ds, method in pairs:
            cells = []
            for p in ps:
                v = means.get((ds, method, p))
                cells.append(f"{v[col]:<10.4f}" if v else f"{'-':<10}")
            buf.write(f"{ds:<24}{method:<14}" + "".join(cells) + "\n")
        counts = best_counts(means, metric)
        if counts:
            buf.write("count  " + "  ".join(f"{k}={v}" for k, v in sorted(counts.items())) + "\n")
    return buf.getvalue()


def failure_curve(results_csv, dataset, method, p=None):
    """``[(rate, mean nmi, mean kappa), ...]`` sorted by rate."""
    rows = [r for r in read_results(results_csv)
            if r.ok and r.dataset == dataset and r.method == method and (p is None or r.p == float(p))]
    if not rows:
        raise EmptySelectionError(f"no successful rows for dataset={dataset!r} method={method!r} p={p}")
    rates = sorted({r.rate for r in rows})
    if len(rates) < 2:
        raise ValueError(f"need at least 2 distinct rates, found {rates}")
    curve = []
    for rate in rates:
        sel = [r for r in rows if r.rate == rate]
        curve.append((rate, float(np.mean([r.nmi for r in sel])), float(np.mean([r.kappa for r in sel]))))
    return curve


def emit_failure_curve(results_csv, dataset, method, p=None, out=None):
    """Failure curve as CSV text (``rate,nmi,kappa``); also written to ``out`` if given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("rate", "nmi", "kappa"))
    for rate, n, k in failure_curve(results_csv, dataset, method, p):
        w.writerow((rate, n, k))
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text
