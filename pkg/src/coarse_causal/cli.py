"""Command-line entry point: ``coarse-causal {generate,learn,eval,sweep,lattice}``.

Exit codes: 0 success, 1 statistical-pipeline failure, 2 I/O or config failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from itertools import product
from pathlib import Path

import numpy as np

from . import io
from .coarsening import Coarsening, enumerate_valid, interventional_coarsening, lattice_to_dot, level_counts
from .graph import Dag
from .metrics import ari, coarsened_edge_metrics, grid_select
from .repare import OracleContractError, SignatureRefineOracle, dsep_edge_oracle, repare
from .scm import experiment_suite
from .stats import Learner, TestConfig, learn

logger = logging.getLogger("coarse_causal")

SEED_ENV = "COARSE_CAUSAL_SEED"
RESULT_FIELDS = ["seed", "family", "d", "density", "iota", "n", "alpha_ref", "alpha_edge",
                 "ari", "precision", "recall", "f", "score", "runtime_ms"]


class ConfigError(ValueError):
    pass


def _listify(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


@dataclass
class ExperimentConfig:
    family: list = field(default_factory=lambda: ["er"])
    d: list = field(default_factory=lambda: [10])
    density: list = field(default_factory=lambda: [0.2])
    iota: list = field(default_factory=lambda: [5])
    n_grid: list = field(default_factory=lambda: [1000])
    seeds: list = field(default_factory=lambda: [0])
    alpha_grid: list = field(default_factory=lambda: [[0.05, 0.05]])
    output_dir: str = "out"

    def __post_init__(self):
        for f in fields(self):
            if f.name != "output_dir":
                setattr(self, f.name, _listify(getattr(self, f.name)))
                if not getattr(self, f.name):
                    raise ConfigError(f"{f.name}: must be non-empty")
        for fam in self.family:
            if fam not in ("er", "sf"):
                raise ConfigError(f"family: unknown graph family {fam!r}")
        for d in self.d:
            if int(d) < 2:
                raise ConfigError(f"d: must be at least 2, got {d}")
            for i in self.iota:
                if not 0 <= int(i) <= int(d):
                    raise ConfigError(f"iota: must lie in [0, d={d}], got {i}")
        for x in self.density:
            if not 0 <= float(x) <= 1:
                raise ConfigError(f"density: must lie in [0, 1], got {x}")
        for n in self.n_grid:
            if int(n) < 3:
                raise ConfigError(f"n_grid: sample sizes must be at least 3, got {n}")
        try:
            self.alpha_grid = [TestConfig(float(a), float(b)) for a, b in self.alpha_grid]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"alpha_grid: {exc}") from exc

    @classmethod
    def load(cls, path: str | None, overrides: dict) -> "ExperimentConfig":
        base = {}
        if path:
            try:
                base = json.loads(Path(path).read_text())
            except OSError as exc:
                raise FileNotFoundError(f"{path}: {exc.strerror}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
            unknown = set(base) - {f.name for f in fields(cls)}
            if unknown:
                raise ConfigError(f"{sorted(unknown)[0]}: unknown config field")
        base.update({k: v for k, v in overrides.items() if v is not None})
        if "seeds" not in base:
            base["seeds"] = [_default_seed()]
        return cls(**base)


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV}: not an integer ({raw!r})") from exc


def _write_json(obj, path: str | None):
    text = json.dumps(obj, indent=2) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# ---------------------------------------------------------------- generate

def cmd_generate(args) -> int:
    cfg = ExperimentConfig.load(args.config, _config_overrides(args))
    out = Path(args.output or cfg.output_dir)
    written = []
    for fam, d, dens, iota, n, seed in product(cfg.family, cfg.d, cfg.density, cfg.iota, cfg.n_grid, cfg.seeds):
        exp = experiment_suite(int(d), float(dens), int(iota), int(n), seed=int(seed), family=fam)
        single = len(cfg.seeds) * len(cfg.n_grid) * len(cfg.family) * len(cfg.d) * len(cfg.density) * len(cfg.iota) == 1
        target = out if single else out / f"{fam}_d{d}_p{dens}_i{iota}_n{n}_s{seed}"
        written.append(str(io.write_experiment(target, exp)))
    for path in written:
        print(path)
    return 0


# ---------------------------------------------------------------- learn

def cmd_learn(args) -> int:
    manifest = Path(args.manifest)
    data = io.read_environments(manifest)
    if args.oracle:
        gt = manifest.parent / io.GROUND_TRUTH
        g, targets, _, _ = io.read_ground_truth(gt)
        refine = SignatureRefineOracle.from_graph(g, targets)
        c, trace = repare(g.d, refine, dsep_edge_oracle(g))
    else:
        res = learn(data, TestConfig(args.alpha_ref, args.alpha_edge))
        c, trace = res.coarsening, res.trace
    _write_json(c.to_dict(), args.output)
    if args.trace:
        Path(args.trace).write_text(trace.to_jsonl())
    print(f"learned {c.partition} with {len(c.edges)} edges", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- eval

def evaluate(learned: Coarsening, g: Dag, truth: Coarsening) -> dict:
    em = coarsened_edge_metrics(learned, g)
    return {"ari": ari(learned.partition, truth.partition), **em.to_dict()}


def cmd_eval(args) -> int:
    g, _, truth, _ = io.read_ground_truth(args.ground_truth)
    learned = Coarsening.from_dict(json.loads(Path(args.learned).read_text()))
    if learned.partition.d != g.d:
        raise ConfigError(f"learned coarsening covers {learned.partition.d} nodes, ground truth has {g.d}")
    out = evaluate(learned, g, truth)
    _write_json(out, args.output)
    print(f"ARI {out['ari']:.3f}  precision {out['precision']:.3f}  recall {out['recall']:.3f}  "
          f"F {out['f_score']:.3f}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- sweep

def _sweep_cell(job):
    """One (graph setting, seed, n) cell: every alpha pair, plus selection if requested."""
    fam, d, dens, iota, n, seed, alphas, select = job
    exp = experiment_suite(d, dens, iota, n, seed=seed, family=fam)
    targets = [iv.targets for iv in exp.interventions]
    truth = interventional_coarsening(exp.graph, targets)
    base = {"seed": seed, "family": fam, "d": d, "density": dens, "iota": iota, "n": n}
    rows, failures = [], []
    for cfg in alphas:
        try:
            t0 = time.perf_counter()
            res = learn(exp.data, cfg)
            ms = (time.perf_counter() - t0) * 1e3
        except (ValueError, OracleContractError, np.linalg.LinAlgError) as exc:
            failures.append({**base, "alpha_ref": cfg.alpha_ref, "alpha_edge": cfg.alpha_edge, "error": str(exc)})
            continue
        em = coarsened_edge_metrics(res.coarsening, exp.graph)
        rows.append({**base, "alpha_ref": cfg.alpha_ref, "alpha_edge": cfg.alpha_edge,
                     "ari": ari(res.coarsening.partition, truth.partition), "precision": em.precision,
                     "recall": em.recall, "f": em.f_score, "score": "", "runtime_ms": ms})
    selected = None
    if select:
        try:
            best, _ = grid_select(alphas, Learner(exp.data), truth.partition)
            em = coarsened_edge_metrics(best.coarsening, exp.graph)
            selected = {**base, "alpha_ref": best.config.alpha_ref, "alpha_edge": best.config.alpha_edge,
                        "ari": best.ari, "precision": em.precision, "recall": em.recall, "f": em.f_score,
                        "score": best.score, "runtime_ms": ""}
        except ValueError as exc:
            failures.append({**base, "alpha_ref": "select", "alpha_edge": "", "error": str(exc)})
    return rows, selected, failures


def _write_rows(path: Path, rows, header):
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def cmd_sweep(args) -> int:
    cfg = ExperimentConfig.load(args.config, _config_overrides(args))
    out = Path(args.output or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(fam, int(d), float(dens), int(iota), int(n), int(seed), cfg.alpha_grid, args.select == "score")
            for fam, d, dens, iota, seed, n in product(cfg.family, cfg.d, cfg.density, cfg.iota, cfg.seeds, cfg.n_grid)]
    workers = args.jobs or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_sweep_cell, jobs))  # map keeps cell order
    else:
        results = [_sweep_cell(j) for j in jobs]
    rows = [r for res in results for r in res[0]]
    selected = [res[1] for res in results if res[1] is not None]
    failures = [f for res in results for f in res[2]]
    _write_rows(out / "results.csv", rows, RESULT_FIELDS)
    if args.select == "score":
        _write_rows(out / "selected.csv", selected, RESULT_FIELDS)
    if failures:
        _write_rows(out / "failures.csv", failures, ["seed", "family", "d", "density", "iota", "n",
                                                     "alpha_ref", "alpha_edge", "error"])
    if args.plot:
        from .plot import summary_plots
        for path in summary_plots(rows, out):
            print(path)
    print(f"{len(rows)} rows, {len(failures)} failures -> {out / 'results.csv'}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- lattice

def cmd_lattice(args) -> int:
    text = Path(args.graph).read_text()
    g = Dag.from_dot(text) if args.graph.endswith((".dot", ".gv")) else Dag.from_json(text)
    valid = enumerate_valid(g, args.cap)
    if args.format == "dot":
        out = lattice_to_dot(valid)
        if args.output in (None, "-"):
            sys.stdout.write(out)
        else:
            Path(args.output).write_text(out)
    else:
        _write_json({"d": g.d, "count": len(valid), "level_counts": list(level_counts(valid, g.d)),
                     "coarsenings": [c.to_dict() for c in valid]}, args.output)
    return 0


# ---------------------------------------------------------------- parser

def _config_overrides(args) -> dict:
    keys = ("family", "d", "density", "iota", "n_grid", "seeds", "alpha_grid")
    return {k: getattr(args, k, None) for k in keys}


def _alpha_pair(text: str):
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected ALPHA_REF,ALPHA_EDGE, got {text!r}") from exc
    return [a, b]


def _add_experiment_flags(p):
    p.add_argument("--config", help="experiment config JSON; flags override its fields")
    p.add_argument("--family", nargs="+", choices=["er", "sf"])
    p.add_argument("--d", nargs="+", type=int)
    p.add_argument("--density", nargs="+", type=float)
    p.add_argument("--iota", nargs="+", type=int)
    p.add_argument("--n", dest="n_grid", nargs="+", type=int)
    p.add_argument("--seeds", nargs="+", type=int, help=f"default: ${SEED_ENV} or 0")
    p.add_argument("-o", "--output", help="output directory (overrides output_dir)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coarse-causal", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample synthetic experiments to CSV")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("learn", help="learn a coarsening from a manifest")
    p.add_argument("manifest")
    p.add_argument("--alpha-ref", type=float, default=0.05)
    p.add_argument("--alpha-edge", type=float, default=0.05)
    p.add_argument("-o", "--output", help="coarsening JSON (default stdout)")
    p.add_argument("--trace", help="write a JSON-lines trace here")
    p.add_argument("--oracle", action="store_true",
                   help="use exact oracles from the adjacent ground_truth.json")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("eval", help="score a learned coarsening against ground truth")
    p.add_argument("learned")
    p.add_argument("ground_truth")
    p.add_argument("-o", "--output", help="metrics JSON (default stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="generate, learn and evaluate over a grid")
    _add_experiment_flags(p)
    p.add_argument("--alpha", dest="alpha_grid", nargs="+", type=_alpha_pair, metavar="AREF,AEDGE")
    p.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    p.add_argument("--select", choices=["score"], help="add likelihood-based selection per cell")
    p.add_argument("--plot", action="store_true", help="write SVG summary plots")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("lattice", help="enumerate valid coarsenings of a graph (JSON or DOT)")
    p.add_argument("graph")
    p.add_argument("--format", choices=["json", "dot"], default="json")
    p.add_argument("--cap", type=int, default=10, help="largest d to enumerate")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_lattice)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ConfigError, io.DataFormatError, json.JSONDecodeError, KeyError) as exc:
        if isinstance(exc, FileNotFoundError) and exc.filename:
            msg = f"no such file: {exc.filename}"
        else:
            msg = str(exc)
        print(f"error: {msg}", file=sys.stderr)
        return 2
    except (ValueError, OracleContractError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
