"""On-disk layout: one CSV per environment, a manifest, and ground truth."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .coarsening import Coarsening, interventional_coarsening
from .graph import Dag
from .scm import Experiment, Lganm
from .stats import EnvironmentData

MANIFEST = "manifest.json"
GROUND_TRUTH = "ground_truth.json"


class DataFormatError(ValueError):
    """A data or manifest file does not follow the expected layout."""


def write_csv(path: Path, x: np.ndarray):
    header = ",".join(str(v) for v in range(1, x.shape[1] + 1))
    np.savetxt(path, x, delimiter=",", header=header, comments="", fmt="%.17g")


def read_csv(path: Path) -> np.ndarray:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    try:
        x = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
    if x.shape[1] != len(header):
        raise DataFormatError(f"{path}: header lists {len(header)} columns, rows have {x.shape[1]}")
    if [h.strip() for h in header] != [str(v) for v in range(1, len(header) + 1)]:
        raise DataFormatError(f"{path}: header must be the node ids 1..{len(header)}")
    return x


def write_environments(out: Path, data: EnvironmentData) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "env_obs.csv", data.observational)
    entries = []
    targets = data.targets or [None] * len(data.interventional)
    for i, (x, t) in enumerate(zip(data.interventional, targets), start=1):
        name = f"env_{i}.csv"
        write_csv(out / name, x)
        entries.append({"file": name, "targets": None if t is None else [int(v) for v in t]})
    manifest = {"observational": "env_obs.csv", "interventions": entries}
    path = out / MANIFEST
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def read_environments(manifest_path) -> EnvironmentData:
    """Load a manifest and its CSVs. Paths in the manifest are relative to it."""
    manifest_path = Path(manifest_path)
    meta = json.loads(manifest_path.read_text())
    if not meta.get("observational"):
        raise DataFormatError(f"{manifest_path}: missing observational environment")
    base = manifest_path.parent
    obs = read_csv(base / meta["observational"])
    ivs = meta.get("interventions", [])
    xs = [read_csv(base / e["file"]) for e in ivs]
    targets = [e.get("targets") for e in ivs]
    return EnvironmentData(obs, xs, targets if any(t is not None for t in targets) else None)


def ground_truth(exp: Experiment) -> dict:
    targets = [sorted(iv.targets) for iv in exp.interventions]
    return {
        "graph": exp.graph.to_dict(),
        "model": exp.model.to_dict(),
        "targets": targets,
        "coarsening": interventional_coarsening(exp.graph, targets).to_dict(),
    }


def write_experiment(out, exp: Experiment) -> Path:
    out = Path(out)
    manifest = write_environments(out, exp.data)
    (out / GROUND_TRUTH).write_text(json.dumps(ground_truth(exp), indent=2) + "\n")
    return manifest


def read_ground_truth(path) -> tuple[Dag, list, Coarsening, Lganm | None]:
    obj = json.loads(Path(path).read_text())
    g = Dag.from_dict(obj["graph"])
    model = Lganm.from_dict(obj["model"]) if "model" in obj else None
    return g, obj.get("targets", []), Coarsening.from_dict(obj["coarsening"], g.d), model
