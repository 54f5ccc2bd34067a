"""Random DAGs, linear Gaussian additive-noise models and soft shift interventions."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import networkx as nx
import numpy as np

from .graph import Dag
from .stats import EnvironmentData

logger = logging.getLogger(__name__)

WEIGHT_RANGE = (0.5, 2.0)
MEAN_RANGE = (-2.0, 2.0)
VARIANCE_RANGE = (0.5, 2.0)


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def sample_er_dag(d: int, density: float, rng=None) -> Dag:
    """Erdős–Rényi DAG: each forward pair of a random causal order kept with probability ``density``."""
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density must lie in [0, 1], got {density}")
    rng = _rng(rng)
    order = rng.permutation(d) + 1
    iu, ju = np.triu_indices(d, k=1)
    keep = rng.random(iu.size) < density
    return Dag(d, [(int(order[i]), int(order[j])) for i, j in zip(iu[keep], ju[keep])])


def ba_attachment(d: int, density: float) -> int:
    """Attachment count ``m = round(max(deg / 2, 1))`` with ``deg = density * (d - 1)``."""
    m = int(round(max(density * (d - 1) / 2.0, 1.0)))
    if m >= d:
        logger.warning("BA attachment m=%d clamped to %d", m, d - 1)
        m = d - 1
    return m


def sample_ba_dag(d: int, density: float, rng=None) -> Dag:
    """Barabási–Albert graph oriented along a uniformly random node order."""
    if d < 2:
        raise ValueError("BA graphs need d >= 2")
    rng = _rng(rng)
    m = ba_attachment(d, density)
    seed = int(rng.integers(2**32))
    ug = nx.barabasi_albert_graph(d, m, seed=seed)
    rank = np.empty(d, dtype=int)
    rank[rng.permutation(d)] = np.arange(d)
    edges = [(u + 1, v + 1) if rank[u] < rank[v] else (v + 1, u + 1) for u, v in ug.edges()]
    return Dag(d, edges)


def sample_dag(family: str, d: int, density: float, rng=None) -> Dag:
    if family == "er":
        return sample_er_dag(d, density, rng)
    if family in ("sf", "ba"):
        return sample_ba_dag(d, density, rng)
    raise ValueError(f"unknown graph family {family!r}")


@dataclass(frozen=True)
class SoftIntervention:
    """Shift the noise mean of ``targets`` by ``mean_shift`` and set its variance."""

    targets: frozenset
    mean_shift: float = 2.0
    variance: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "targets", frozenset(int(t) for t in self.targets))
        if not self.targets:
            raise ValueError("intervention targets must be non-empty")
        if self.variance <= 0:
            raise ValueError("intervention variance must be positive")


@dataclass
class Lganm:
    """``X_v = sum_u w_uv X_u + eps_v`` with ``eps_v ~ N(mean_v, var_v)``.

    Arrays are 0-indexed by node ``v - 1``; ``weights[u-1, v-1]`` is the
    coefficient of edge ``u -> v``.
    """

    graph: Dag
    weights: np.ndarray
    noise_means: np.ndarray
    noise_variances: np.ndarray
    _order: list = field(init=False, repr=False)

    def __post_init__(self):
        d = self.graph.d
        self.weights = np.asarray(self.weights, dtype=float)
        self.noise_means = np.asarray(self.noise_means, dtype=float)
        self.noise_variances = np.asarray(self.noise_variances, dtype=float)
        if self.weights.shape != (d, d) or self.noise_means.shape != (d,) or self.noise_variances.shape != (d,):
            raise ValueError("parameter shapes do not match the graph")
        mask = np.zeros((d, d), dtype=bool)
        for u, v in self.graph.edges:
            mask[u - 1, v - 1] = True
        if np.any(self.weights[~mask] != 0):
            raise ValueError("weights must vanish off the graph's edges")
        if np.any(self.noise_variances <= 0):
            raise ValueError("noise variances must be positive")
        self._order = [v - 1 for v in self.graph.topological_order()]

    @property
    def d(self) -> int:
        return self.graph.d

    def _noise(self, iv: SoftIntervention | None):
        mean = self.noise_means.copy()
        var = self.noise_variances.copy()
        if iv is not None:
            idx = [t - 1 for t in iv.targets]
            mean[idx] += iv.mean_shift
            var[idx] = iv.variance
        return mean, var

    def mean(self, iv: SoftIntervention | None = None) -> np.ndarray:
        """Closed form ``(I - B^T)^{-1} mu``."""
        mu, _ = self._noise(iv)
        return np.linalg.solve(np.eye(self.d) - self.weights.T, mu)

    def covariance(self, iv: SoftIntervention | None = None) -> np.ndarray:
        """Closed form ``(I - B^T)^{-1} Omega (I - B^T)^{-T}``."""
        _, var = self._noise(iv)
        a = np.linalg.inv(np.eye(self.d) - self.weights.T)
        return a @ np.diag(var) @ a.T

    def to_dict(self) -> dict:
        return {
            "graph": self.graph.to_dict(),
            "weights": [[u, v, float(self.weights[u - 1, v - 1])] for u, v in sorted(self.graph.edges)],
            "noise_means": self.noise_means.tolist(),
            "noise_variances": self.noise_variances.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Lganm":
        g = Dag.from_dict(data["graph"])
        w = np.zeros((g.d, g.d))
        for u, v, x in data["weights"]:
            w[u - 1, v - 1] = x
        return cls(g, w, data["noise_means"], data["noise_variances"])


def sample_lganm(g: Dag, rng=None) -> Lganm:
    rng = _rng(rng)
    d = g.d
    w = np.zeros((d, d))
    for u, v in sorted(g.edges):
        mag = rng.uniform(*WEIGHT_RANGE)
        w[u - 1, v - 1] = mag if rng.random() < 0.5 else -mag
    return Lganm(g, w, rng.uniform(*MEAN_RANGE, size=d), rng.uniform(*VARIANCE_RANGE, size=d))


def sample_environment(model: Lganm, iv: SoftIntervention | None, n: int, rng=None) -> np.ndarray:
    """Ancestral sampling of ``n`` rows, optionally under a soft intervention."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = _rng(rng)
    mean, var = model._noise(iv)
    eps = rng.standard_normal((n, model.d)) * np.sqrt(var) + mean
    x = np.zeros((n, model.d))
    for v in model._order:
        pa = [u - 1 for u in model.graph.parents_of(v + 1)]
        x[:, v] = eps[:, v] + (x[:, pa] @ model.weights[pa, v] if pa else 0.0)
    return x


@dataclass
class Experiment:
    graph: Dag
    model: Lganm
    interventions: list
    data: EnvironmentData


def experiment_suite(d: int, density: float, iota: int, n: int, seed=None, family: str = "er",
                     standardize: bool = True) -> Experiment:
    """One synthetic experiment: graph, model, ``iota`` single-target shifts and their data.

    The seed is split into independent sub-streams for the graph, model,
    targets and each environment, so changing ``n`` leaves the graph and
    model unchanged.
    """
    if not 0 <= iota <= d:
        raise ValueError(f"iota must lie in [0, d={d}], got {iota}")
    ss = np.random.SeedSequence(seed)
    s_graph, s_model, s_targets, s_data = ss.spawn(4)
    g = sample_dag(family, d, density, np.random.default_rng(s_graph))
    model = sample_lganm(g, np.random.default_rng(s_model))
    targets = np.random.default_rng(s_targets).choice(np.arange(1, d + 1), size=iota, replace=False)
    ivs = [SoftIntervention({int(t)}) for t in targets]
    env_seeds = s_data.spawn(iota + 1)
    obs = sample_environment(model, None, n, np.random.default_rng(env_seeds[0]))
    xs = [sample_environment(model, iv, n, np.random.default_rng(s)) for iv, s in zip(ivs, env_seeds[1:])]
    data = EnvironmentData(obs, xs, [sorted(iv.targets) for iv in ivs])
    if standardize:
        data = data.standardized()
    return Experiment(g, model, ivs, data)


def environment_targets(ivs: Sequence[SoftIntervention]) -> list:
    return [sorted(iv.targets) for iv in ivs]
