"""Statistical oracles: two-sample shift detection and CCA edge tests.

Descendant detection runs a two-sided Welch t-test per (node, intervention)
against the observational sample. Edge queries are answered by
residualising both blocks on the conditioning columns (OLS with intercept),
computing canonical correlations, and testing Wilks' lambda with Bartlett's
chi-squared approximation. Only observational data enters the edge test.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special, stats

from .coarsening import Coarsening
from .graph import Dag
from .repare import EdgeQuery, LearningTrace, SignatureRefineOracle, repare

logger = logging.getLogger(__name__)


class DegenerateDataError(ValueError):
    """Data carries no variation to learn from."""


class SampleSizeError(ValueError):
    """Too few samples for the requested block dimensions."""


@dataclass(frozen=True)
class TestConfig:
    """Significance levels for refinement and edge tests."""

    __test__ = False  # not a pytest class

    alpha_ref: float = 0.05
    alpha_edge: float = 0.05
    ridge_epsilon: float = 1e-8

    def __post_init__(self):
        for name in ("alpha_ref", "alpha_edge"):
            a = getattr(self, name)
            if not 0.0 < a < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {a}")
        if self.ridge_epsilon < 0:
            raise ValueError("ridge_epsilon must be non-negative")


@dataclass
class EnvironmentData:
    """Samples per environment; rows are samples, columns are nodes ``1..d``.

    ``targets`` (one entry per interventional environment, possibly None)
    is never read by the learner; it only travels along for evaluation.
    """

    observational: np.ndarray
    interventional: list = field(default_factory=list)
    targets: list | None = None

    def __post_init__(self):
        self.observational = np.atleast_2d(np.asarray(self.observational, dtype=float))
        self.interventional = [np.atleast_2d(np.asarray(x, dtype=float)) for x in self.interventional]
        d = self.observational.shape[1]
        for i, x in enumerate(self.environments):
            if x.shape[1] != d:
                raise ValueError(f"environment {i} has {x.shape[1]} columns, expected {d}")
            if x.shape[0] < 3:
                raise ValueError(f"environment {i} has {x.shape[0]} samples; at least 3 are required")
        if self.targets is not None and len(self.targets) != len(self.interventional):
            raise ValueError("targets must list one entry per interventional environment")

    @property
    def d(self) -> int:
        return self.observational.shape[1]

    @property
    def environments(self) -> list:
        """Observational sample first, then interventional ones in order."""
        return [self.observational, *self.interventional]

    def standardized(self) -> "EnvironmentData":
        """Apply one pooled affine map per column to every environment.

        Pooling keeps between-environment mean shifts intact; scaling each
        environment separately would erase exactly what the t-tests look for.
        """
        pooled = np.vstack(self.environments)
        mean = pooled.mean(axis=0)
        std = pooled.std(axis=0)
        const = std == 0
        if const.any():
            logger.warning("constant columns left unscaled: %s", (np.flatnonzero(const) + 1).tolist())
            std = np.where(const, 1.0, std)
        return EnvironmentData((self.observational - mean) / std,
                               [(x - mean) / std for x in self.interventional], self.targets)


def welch_pvalues(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Column-wise two-sided Welch t-test p-values between samples ``x`` and ``y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        return welch_pvalues(x[:, None], y[:, None])[0]
    nx, ny = x.shape[0], y.shape[0]
    if nx < 2 or ny < 2:
        raise SampleSizeError("Welch test needs at least two samples per group")
    mx, my = x.mean(axis=0), y.mean(axis=0)
    vx, vy = x.var(axis=0, ddof=1) / nx, y.var(axis=0, ddof=1) / ny
    se2 = vx + vy
    p = np.empty(x.shape[1])
    degenerate = se2 == 0
    p[degenerate] = np.where(mx[degenerate] == my[degenerate], 1.0, 0.0)
    ok = ~degenerate
    if ok.any():
        t2 = (mx[ok] - my[ok]) ** 2 / se2[ok]
        df = se2[ok] ** 2 / (vx[ok] ** 2 / (nx - 1) + vy[ok] ** 2 / (ny - 1))
        p[ok] = special.betainc(df / 2.0, 0.5, df / (df + t2))
    return np.clip(p, 0.0, 1.0)


def welch_t_test(x, y) -> float:
    """Two-sided Welch t-test p-value (Satterthwaite degrees of freedom).

    Two constant samples give p = 1 when equal and p = 0 otherwise.
    """
    return float(welch_pvalues(np.ravel(x), np.ravel(y)))


@dataclass(frozen=True)
class DescendantMatrix:
    """Detected intervention effects, nodes x interventional environments."""

    entries: np.ndarray
    pvalues: np.ndarray
    alpha: float
    warnings: tuple = ()

    @classmethod
    def from_pvalues(cls, pvalues: np.ndarray, alpha: float, warnings: tuple = ()) -> "DescendantMatrix":
        pvalues = np.asarray(pvalues, dtype=float)
        return cls(pvalues < alpha, pvalues, alpha, warnings)


def descendant_pvalues(data: EnvironmentData) -> tuple[np.ndarray, tuple]:
    """Welch p-values for every (node, interventional environment) pair."""
    obs = data.observational
    out = np.ones((data.d, len(data.interventional)))
    warnings = []
    const_obs = obs.var(axis=0) == 0
    for j, x in enumerate(data.interventional):
        out[:, j] = welch_pvalues(x, obs)
        both = const_obs & (x.var(axis=0) == 0)
        for v in np.flatnonzero(both):
            warnings.append(f"node {v + 1} constant in environments 0 and {j + 1}")
    for w in warnings:
        logger.warning(w)
    return out, tuple(warnings)


def descendant_matrix(data: EnvironmentData, alpha_ref: float = 0.05) -> DescendantMatrix:
    """Flag node ``v`` for intervention ``I`` when Welch's p-value is below ``alpha_ref``."""
    if data.observational is None:
        raise ValueError("missing observational environment")
    p, warnings = descendant_pvalues(data)
    return DescendantMatrix.from_pvalues(p, alpha_ref, warnings)


def noiseless_descendant_matrix(g: Dag, targets: Sequence) -> DescendantMatrix:
    """Descendant matrix read off the graph (p-values 0 or 1)."""
    m = SignatureRefineOracle.from_graph(g, [t for t in targets if t]).matrix
    return DescendantMatrix(m, np.where(m, 0.0, 1.0), 0.5)


def ols_residualize(block: np.ndarray, conditioners: np.ndarray | None = None) -> np.ndarray:
    """Least-squares residuals of ``block`` on ``conditioners`` plus an intercept.

    Rank-deficient conditioners are fine: ``lstsq`` returns the minimum-norm
    fit, whose residuals are the projection onto the orthogonal complement.
    """
    block = np.asarray(block, dtype=float)
    centered = block - block.mean(axis=0)
    if conditioners is None or np.size(conditioners) == 0:
        return centered
    z = np.asarray(conditioners, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    if z.shape[0] != block.shape[0]:
        raise ValueError("block and conditioners must have the same number of rows")
    z = z - z.mean(axis=0)
    coef, *_ = np.linalg.lstsq(z, centered, rcond=None)
    return centered - z @ coef


def _whitener(cov: np.ndarray, ridge: float) -> np.ndarray:
    # inverse square root on the non-null eigenspace; null directions are dropped
    lam, vec = np.linalg.eigh(cov)
    top = lam.max() if lam.size else 0.0
    keep = lam > max(ridge * top, 0.0) if top > 0 else np.zeros_like(lam, dtype=bool)
    return vec[:, keep] / np.sqrt(lam[keep])


def canonical_correlations(u: np.ndarray, w: np.ndarray, ridge: float = 1e-8) -> np.ndarray:
    """Canonical correlations between the column spaces of ``u`` and ``w``.

    Eigen-directions with variance at or below ``ridge`` times the largest
    are treated as null and excluded.
    """
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    if w.ndim == 1:
        w = w[:, None]
    u = u - u.mean(axis=0)
    w = w - w.mean(axis=0)
    n = u.shape[0]
    wu = _whitener(u.T @ u / (n - 1), ridge)
    ww = _whitener(w.T @ w / (n - 1), ridge)
    if wu.shape[1] == 0 or ww.shape[1] == 0:
        return np.zeros(0)
    cross = wu.T @ (u.T @ w / (n - 1)) @ ww
    rho = np.linalg.svd(cross, compute_uv=False)
    return np.clip(rho, 0.0, 1.0)


def wilks_lambda(rho: np.ndarray) -> float:
    return float(np.prod(1.0 - np.asarray(rho) ** 2))


def cca_wilks_test(u: np.ndarray, w: np.ndarray, n_conditioners: int = 0,
                   ridge: float = 1e-8) -> float:
    """p-value for independence of two residual blocks.

    Uses Bartlett's approximation
    ``-(n - 1 - k - (p + q + 1) / 2) * ln(Lambda) ~ chi2(p * q)``, where
    ``k`` is the number of conditioning columns already regressed out and
    ``p``, ``q`` are the (numerical) ranks of the blocks.

    Raises
    ------
    SampleSizeError
        If ``n <= p + q + k + 2``.
    """
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    if w.ndim == 1:
        w = w[:, None]
    n, p_dim = u.shape
    q_dim = w.shape[1]
    if w.shape[0] != n:
        raise ValueError("blocks must have the same number of rows")
    if n <= p_dim + q_dim + n_conditioners + 2:
        raise SampleSizeError(
            f"n={n} too small for blocks of size {p_dim} and {q_dim} with {n_conditioners} conditioners")
    rho = canonical_correlations(u, w, ridge)
    if rho.size == 0:
        return 1.0
    # numerical ranks after dropping null directions
    p_eff = np.linalg.matrix_rank(u - u.mean(axis=0)) if p_dim > 1 else 1
    q_eff = np.linalg.matrix_rank(w - w.mean(axis=0)) if q_dim > 1 else 1
    with np.errstate(divide="ignore"):
        log_lambda = float(np.sum(np.log1p(-rho ** 2)))
    factor = n - 1 - n_conditioners - (p_eff + q_eff + 1) / 2.0
    stat = -factor * log_lambda
    return float(stats.chi2.sf(stat, p_eff * q_eff))


class CITester:
    """Caches edge-test p-values for one observational sample."""

    def __init__(self, observational: np.ndarray, ridge: float = 1e-8):
        self.x = np.asarray(observational, dtype=float)
        self.ridge = ridge
        self._cache: dict = {}

    def pvalue(self, query: EdgeQuery) -> float:
        key = (query.source, query.target, query.conditioning)
        if key not in self._cache:
            self._cache[key] = self._compute(*key)
        return self._cache[key]

    def _compute(self, source, target, cond) -> float:
        cols = lambda s: [v - 1 for v in sorted(s)]  # noqa: E731
        z = self.x[:, cols(cond)] if cond else None
        u = ols_residualize(self.x[:, cols(source)], z)
        w = ols_residualize(self.x[:, cols(target)], z)
        try:
            return cca_wilks_test(u, w, len(cond), self.ridge)
        except SampleSizeError as exc:
            logger.warning("edge test skipped (%s); treating as no edge", exc)
            return 1.0


def is_edge_test(query: EdgeQuery, data: EnvironmentData, config: TestConfig) -> bool:
    """Edge iff the CCA test on observational data rejects independence at ``alpha_edge``."""
    return CITester(data.observational, config.ridge_epsilon).pvalue(query) < config.alpha_edge


class StatisticalEdgeOracle:
    def __init__(self, tester: CITester, alpha: float):
        self.tester = tester
        self.alpha = alpha

    def __call__(self, query: EdgeQuery) -> bool:
        return self.tester.pvalue(query) < self.alpha


def _require_variation(data: EnvironmentData):
    if np.all(np.vstack(data.environments).var(axis=0) == 0):
        raise DegenerateDataError("every column is constant across all environments")


def statistical_oracles(data: EnvironmentData, config: TestConfig = TestConfig()):
    """Refine and edge oracles backed by hypothesis tests.

    Data is standardized first. Returns ``(refine, is_edge)``; the refine
    oracle carries the matching edge schedule.
    """
    _require_variation(data)
    data = data.standardized()
    m = descendant_matrix(data, config.alpha_ref)
    return SignatureRefineOracle(m), StatisticalEdgeOracle(CITester(data.observational, config.ridge_epsilon),
                                                           config.alpha_edge)


@dataclass
class LearnResult:
    coarsening: Coarsening
    trace: LearningTrace
    descendants: DescendantMatrix
    config: TestConfig


class Learner:
    """Full estimator on one dataset; reuses test p-values across configurations."""

    def __init__(self, data: EnvironmentData, ridge: float = 1e-8):
        _require_variation(data)
        self.data = data.standardized()
        self._desc_p, self._warnings = descendant_pvalues(self.data)
        self._tester = CITester(self.data.observational, ridge)

    def descendants(self, alpha_ref: float) -> DescendantMatrix:
        return DescendantMatrix.from_pvalues(self._desc_p, alpha_ref, self._warnings)

    def fit(self, config: TestConfig = TestConfig()) -> LearnResult:
        m = self.descendants(config.alpha_ref)
        c, trace = repare(self.data.d, SignatureRefineOracle(m),
                          StatisticalEdgeOracle(self._tester, config.alpha_edge))
        return LearnResult(c, trace, m, config)


def learn(data: EnvironmentData, config: TestConfig = TestConfig()) -> LearnResult:
    """Run the statistical pipeline end to end."""
    return Learner(data, config.ridge_epsilon).fit(config)
