"""Evaluation metrics and the likelihood score used for threshold selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import comb

from .coarsening import Coarsening, Partition, quotient_edges
from .graph import Dag
from .stats import DescendantMatrix, EnvironmentData, Learner, TestConfig

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-10


def _labels(p) -> np.ndarray:
    return np.asarray(p.labels if isinstance(p, Partition) else p)


def ari(p1, p2) -> float:
    """Hubert–Arabie adjusted Rand index between two partitions of the same node set.

    Two single-block (or two all-singleton) partitions score 1, where the
    formula would divide by zero.
    """
    a, b = _labels(p1), _labels(p2)
    if a.shape != b.shape:
        raise ValueError(f"partitions cover {a.size} and {b.size} nodes")
    n = a.size
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    index = comb(table, 2).sum()
    rows = comb(table.sum(axis=1), 2).sum()
    cols = comb(table.sum(axis=0), 2).sum()
    total = comb(n, 2)
    expected = rows * cols / total if total else 0.0
    best = (rows + cols) / 2.0
    if best == expected:
        return 1.0
    return float((index - expected) / (best - expected))


@dataclass(frozen=True)
class EdgeMetrics:
    precision: float
    recall: float
    f_score: float
    tp: int
    fp: int
    fn: int

    @classmethod
    def from_sets(cls, learned: set, truth: set) -> "EdgeMetrics":
        tp = len(learned & truth)
        fp = len(learned - truth)
        fn = len(truth - learned)
        # empty prediction -> precision 1, empty truth -> recall 1
        p = tp / (tp + fp) if tp + fp else 1.0
        r = tp / (tp + fn) if tp + fn else 1.0
        f = 2 * p * r / (p + r) if tp else (1.0 if not learned and not truth else 0.0)
        return cls(p, r, f, tp, fp, fn)

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f_score": self.f_score,
                "tp": self.tp, "fp": self.fp, "fn": self.fn}


def coarsened_edge_metrics(learned: Coarsening, true_g: Dag) -> EdgeMetrics:
    """Compare learned part edges with the (possibly cyclic) quotient of ``true_g``."""
    if learned.partition.d != true_g.d:
        raise ValueError("learned partition and graph have different node counts")
    truth = set(quotient_edges(true_g, learned.partition))
    return EdgeMetrics.from_sets(set(learned.edges), truth)


def expansion_parents(c: Coarsening) -> list:
    """Parent lists (0-based) of the fine DAG that expands ``c``.

    Each part becomes a complete DAG in increasing node order, and every
    part edge ``P -> Q`` becomes all fine edges from ``P`` into ``Q``.
    """
    parts = c.partition.parts
    d = c.partition.d
    parents = [[] for _ in range(d)]
    into = {j: [i for i, jj in c.edges if jj == j] for j in range(len(parts))}
    for j, part in enumerate(parts):
        outside = sorted(v for i in into[j] for v in parts[i])
        members = sorted(part)
        for k, v in enumerate(members):
            parents[v - 1] = [u - 1 for u in outside + members[:k]]
    return parents


def _root_flags(c: Coarsening, entries: np.ndarray) -> np.ndarray:
    """Keep flags only where no parent part carries a flag for the same environment."""
    lab = np.asarray(c.partition.labels)
    k = len(c.partition)
    part_flag = np.zeros((k, entries.shape[1]), dtype=bool)
    np.logical_or.at(part_flag, lab, entries)
    inherited = np.zeros_like(part_flag)
    for i, j in c.edges:
        inherited[j] |= part_flag[i]
    return entries & ~inherited[lab]


@dataclass(frozen=True)
class ScoredCandidate:
    config: TestConfig
    coarsening: Coarsening
    score: float
    ari: float | None = None


def mle_score(c: Coarsening, data: EnvironmentData, m: DescendantMatrix | np.ndarray) -> float:
    """Maximised interventional Gaussian log-likelihood of the expansion of ``c``.

    ``B`` is fitted by per-node least squares on the pooled,
    environment-centred samples. A node's noise variance is free in an
    environment when ``m`` flags it there and no parent part of its part
    holds a flagged node (it sits at a root of that environment's flagged
    set, where the targets must be); otherwise it is shared across
    environments. With ``K = (I - B) Omega^{-1} (I - B)^T`` the score is
    ``sum_I n_I / 2 * (ln det K^I - tr(K^I S^I))`` without the 2*pi term.
    """
    entries = np.asarray(getattr(m, "entries", m), dtype=bool)
    envs = [x - x.mean(axis=0) for x in data.environments]
    d = data.d
    if entries.shape != (d, len(envs) - 1):
        raise ValueError(f"descendant matrix has shape {entries.shape}, expected {(d, len(envs) - 1)}")
    flags = np.hstack([np.zeros((d, 1), dtype=bool), _root_flags(c, entries)])
    pooled = np.vstack(envs)
    sizes = np.array([x.shape[0] for x in envs])
    resid = np.empty_like(pooled)
    for v, pa in enumerate(expansion_parents(c)):
        y = pooled[:, v]
        if pa:
            coef, *_ = np.linalg.lstsq(pooled[:, pa], y, rcond=None)
            y = y - pooled[:, pa] @ coef
        resid[:, v] = y
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    # per-environment residual sums of squares, shape (d, environments)
    rss = np.stack([(resid[bounds[i]:bounds[i + 1]] ** 2).sum(axis=0) for i in range(len(envs))], axis=1)
    shared = (rss * ~flags).sum(axis=1) / np.maximum((sizes * ~flags).sum(axis=1), 1)
    omega = np.where(flags, rss / sizes, shared[:, None])
    if np.any(omega < VARIANCE_FLOOR):
        logger.warning("near-singular fitted covariance; variances floored at %g", VARIANCE_FLOOR)
        omega = np.maximum(omega, VARIANCE_FLOOR)
    loglik = -0.5 * (sizes * np.log(omega) + rss / omega)
    return float(loglik.sum())


def grid_select(grid: Sequence[TestConfig], data: EnvironmentData | Learner,
                truth: Partition | None = None) -> tuple[ScoredCandidate, list]:
    """Pick the configuration whose learned coarsening scores highest.

    Ties go to fewer parts, then smaller ``alpha_ref``. Returns the winner
    and all scored candidates in grid order; ``truth`` only fills in ARI
    for reporting.
    """
    if not grid:
        raise ValueError("grid must be non-empty")
    learner = data if isinstance(data, Learner) else Learner(data)
    scored, failures = [], []
    for cfg in grid:
        try:
            res = learner.fit(cfg)
            s = mle_score(res.coarsening, learner.data, res.descendants)
        except (ValueError, np.linalg.LinAlgError) as exc:
            logger.warning("grid cell %s failed: %s", cfg, exc)
            failures.append((cfg, exc))
            continue
        a = ari(res.coarsening.partition, truth) if truth is not None else None
        scored.append(ScoredCandidate(cfg, res.coarsening, s, a))
    if not scored:
        raise ValueError(f"all {len(grid)} grid configurations failed")
    best = max(scored, key=lambda sc: (sc.score, -len(sc.coarsening.partition), -sc.config.alpha_ref))
    return best, scored
