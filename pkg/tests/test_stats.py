import numpy as np
import pytest
from scipy import stats as sps

from coarse_causal.coarsening import Partition
from coarse_causal.graph import Dag
from coarse_causal.repare import EdgeQuery, repare
from coarse_causal.scm import SoftIntervention, sample_environment, sample_lganm
from coarse_causal.stats import (DegenerateDataError, EnvironmentData, SampleSizeError, TestConfig,
                                 canonical_correlations, cca_wilks_test, descendant_matrix, is_edge_test, learn,
                                 noiseless_descendant_matrix, ols_residualize, statistical_oracles,
                                 welch_pvalues, welch_t_test)

P = frozenset
EX = Dag(4, [(1, 3), (2, 3), (3, 4)])


def ex_data(n, seed, targets=((1,), (2,))):
    rng = np.random.default_rng(seed)
    model = sample_lganm(EX, rng)
    obs = sample_environment(model, None, n, rng)
    xs = [sample_environment(model, SoftIntervention(t), n, rng) for t in targets]
    return EnvironmentData(obs, xs, [list(t) for t in targets])


def qr_canonical_correlations(u, w):
    # independent route: singular values of Q_u^T Q_w
    qu, _ = np.linalg.qr(u - u.mean(axis=0))
    qw, _ = np.linalg.qr(w - w.mean(axis=0))
    return np.linalg.svd(qu.T @ qw, compute_uv=False)


# Welch

def test_welch_matches_scipy(rng):
    for _ in range(20):
        x = rng.normal(0, rng.uniform(0.5, 3), int(rng.integers(2, 60)))
        y = rng.normal(rng.normal(), rng.uniform(0.5, 3), int(rng.integers(2, 60)))
        assert welch_t_test(x, y) == pytest.approx(sps.ttest_ind(x, y, equal_var=False).pvalue, rel=1e-9)


def test_welch_edge_cases(rng):
    x = rng.normal(size=100)
    assert welch_t_test(x, x) == 1.0
    assert welch_t_test(np.ones(5), np.ones(7)) == 1.0
    assert welch_t_test(np.ones(5), 2 * np.ones(7)) == 0.0
    assert welch_t_test(rng.normal(0, 1, 1000), rng.normal(2, 1, 1000)) < 1e-6
    with pytest.raises(SampleSizeError):
        welch_t_test([1.0], [1.0, 2.0])


def test_welch_is_affine_invariant(rng):
    x, y = rng.normal(size=50), rng.normal(0.3, 1.5, 70)
    assert welch_t_test(3 * x - 7, 3 * y - 7) == pytest.approx(welch_t_test(x, y), abs=1e-8)


def test_welch_calibration():
    rng = np.random.default_rng(7)
    p = welch_pvalues(rng.normal(size=(50, 10_000)), rng.normal(size=(40, 10_000)))
    assert 0.04 <= np.mean(p < 0.05) <= 0.06
    assert np.all((0 <= p) & (p <= 1))


# descendant matrix

def test_identical_environment_gives_empty_column(rng):
    x = rng.normal(size=(30, 3))
    m = descendant_matrix(EnvironmentData(x, [x.copy()]), 0.05)
    assert not m.entries.any() and np.all(m.pvalues == 1)
    assert np.array_equal(m.entries, m.pvalues < m.alpha)


def test_descendants_of_shifted_source_are_flagged():
    m = descendant_matrix(ex_data(100_000, 3, targets=((1,),)), 0.05)
    assert set(np.flatnonzero(m.entries[:, 0]) + 1) == EX.descendants({1}) == {1, 3, 4}


def test_noiseless_matrix_matches_reachability():
    m = noiseless_descendant_matrix(EX, [(), (1,), (2,)])
    assert m.entries.tolist() == [[True, False], [False, True], [True, True], [True, True]]


def test_constant_columns_warn(rng):
    x = rng.normal(size=(20, 2))
    x[:, 1] = 1.0
    m = descendant_matrix(EnvironmentData(x, [x + [0.0, 0.0]]), 0.05)
    assert m.warnings and m.pvalues[1, 0] == 1.0


def test_environment_validation(rng):
    with pytest.raises(ValueError):
        EnvironmentData(rng.normal(size=(2, 3)))
    with pytest.raises(ValueError):
        EnvironmentData(rng.normal(size=(5, 3)), [rng.normal(size=(5, 2))])


def test_standardization_is_pooled(rng):
    data = EnvironmentData(rng.normal(size=(500, 2)), [rng.normal(3, 2, size=(500, 2))]).standardized()
    pooled = np.vstack(data.environments)
    assert np.allclose(pooled.mean(axis=0), 0) and np.allclose(pooled.std(axis=0), 1)
    # the shift survives
    assert data.interventional[0].mean() - data.observational.mean() > 1


# residualisation and CCA

def test_residualize_basic(rng):
    x = rng.normal(size=(200, 2)) + 5
    assert np.allclose(ols_residualize(x), x - x.mean(axis=0))
    z = rng.normal(size=(200, 3))
    exact = z @ rng.normal(size=(3, 2)) + 4
    assert np.abs(ols_residualize(exact, z)).max() < 1e-8
    r = ols_residualize(x, z)
    assert np.abs(r.T @ z).max() < 1e-8 and np.abs(r.sum(axis=0)).max() < 1e-8


def test_residualize_independent_conditioners_keep_variance():
    rng = np.random.default_rng(1)
    x, z = rng.normal(size=(10_000, 2)), rng.normal(size=(10_000, 3))
    assert np.allclose(ols_residualize(x, z).var(axis=0) / x.var(axis=0), 1, atol=0.02)


def test_residualize_rank_deficient_conditioners(rng):
    z = rng.normal(size=(100, 1))
    x = rng.normal(size=(100, 1))
    a = ols_residualize(x, np.hstack([z, 2 * z]))
    assert np.allclose(a, ols_residualize(x, z))


def test_canonical_correlations_match_qr_route(rng):
    for p, q in [(1, 1), (2, 3), (4, 2)]:
        u = rng.normal(size=(300, p))
        w = u[:, :1] @ rng.normal(size=(1, q)) + rng.normal(size=(300, q))
        rho = canonical_correlations(u, w)
        assert np.allclose(np.sort(rho)[::-1], qr_canonical_correlations(u, w)[:len(rho)], atol=1e-10)


def test_univariate_wilks_is_pearson(rng):
    u = rng.normal(size=500)
    w = 0.3 * u + rng.normal(size=500)
    r = np.corrcoef(u, w)[0, 1]
    rho = canonical_correlations(u, w)
    assert abs((1 - rho[0] ** 2) - (1 - r ** 2)) < 1e-10
    stat = -(500 - 1 - 1.5) * np.log(1 - r ** 2)
    assert cca_wilks_test(u, w) == pytest.approx(sps.chi2.sf(stat, 1), rel=1e-9)


def test_wilks_perfect_dependence(rng):
    u = rng.normal(size=(500, 2))
    assert cca_wilks_test(u, u.copy()) < 1e-10


def test_wilks_sample_size_error(rng):
    with pytest.raises(SampleSizeError):
        cca_wilks_test(rng.normal(size=(5, 2)), rng.normal(size=(5, 2)))


def test_wilks_affine_invariant(rng):
    u, w = rng.normal(size=(200, 2)), rng.normal(size=(200, 2))
    w[:, 0] += 0.2 * u[:, 1]
    a = np.array([[2.0, 1.0], [0.0, 3.0]])
    assert cca_wilks_test(u @ a + 5, w * 0.1 - 2) == pytest.approx(cca_wilks_test(u, w), abs=1e-8)


def test_wilks_constant_block_gives_one(rng):
    assert cca_wilks_test(np.ones((50, 1)), rng.normal(size=(50, 2))) == 1.0


def test_wilks_calibration():
    rng = np.random.default_rng(11)
    p = np.array([cca_wilks_test(rng.normal(size=(10_000, 2)), rng.normal(size=(10_000, 2)))
                  for _ in range(1000)])
    assert 0.03 <= np.mean(p < 0.05) <= 0.07


# edge test and the full estimator

def test_edge_test_detects_dependence():
    data = ex_data(100_000, 0).standardized()
    assert is_edge_test(EdgeQuery(P({1}), P({3, 4})), data, TestConfig())


def test_edge_test_null_cases():
    rng = np.random.default_rng(5)
    rejections = 0
    for _ in range(100):
        # {1, 2} -> {3} and an isolated 4
        g = Dag(4, [(1, 3), (2, 3)])
        model = sample_lganm(g, rng)
        data = EnvironmentData(sample_environment(model, None, 2000, rng))
        rejections += is_edge_test(EdgeQuery(P({1, 2}), P({4})), data, TestConfig())
    assert rejections <= 12  # about 5 expected


def test_chain_conditional_independence():
    rng = np.random.default_rng(8)
    g = Dag(3, [(1, 2), (2, 3)])
    hits = 0
    for _ in range(100):
        data = EnvironmentData(sample_environment(sample_lganm(g, rng), None, 2000, rng))
        hits += is_edge_test(EdgeQuery(P({1}), P({3}), (P({2}),)), data, TestConfig())
    assert hits <= 12


def test_statistical_pipeline_on_example():
    ok = 0
    for seed in range(10):
        refine, is_edge = statistical_oracles(ex_data(100_000, seed), TestConfig(0.05, 0.05))
        c, _ = repare(4, refine, is_edge)
        ok += c.partition == Partition.parse("1|2|34") and len(c.edges) == 2
    assert ok >= 8


def test_tiny_samples_do_not_crash():
    for seed in range(5):
        res = learn(ex_data(10, seed))
        assert res.coarsening.partition.d == 4


def test_degenerate_data_raises():
    with pytest.raises(DegenerateDataError):
        learn(EnvironmentData(np.ones((10, 3)), [np.ones((10, 3))]))


def test_config_validation():
    with pytest.raises(ValueError):
        TestConfig(alpha_ref=0.0)
    with pytest.raises(ValueError):
        TestConfig(alpha_edge=1.0)
