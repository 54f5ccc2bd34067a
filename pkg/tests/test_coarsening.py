import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings

from coarse_causal.coarsening import (Coarsening, InvalidCoarseningError, Partition, enumerate_partitions,
                                      enumerate_valid, induce, interventional_coarsening, is_distributive,
                                      is_valid, join, lattice_to_dot, level_counts, marginal_coarsening,
                                      meet, quotient_edges, refines)
from coarse_causal.graph import Dag

from conftest import dags, random_dag


def stirling2(n, k):
    # S(n, k) = k S(n-1, k) + S(n-1, k-1)
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


def brute_valid(g):
    """Valid partitions by canonicalising every labelling and checking the quotient with networkx."""
    seen = set()
    for labels in itertools.product(range(g.d), repeat=g.d):
        p = Partition.from_labels(labels)
        if p in seen:
            continue
        q = nx.DiGraph()
        q.add_nodes_from(range(len(p)))
        q.add_edges_from((p.part_of(u), p.part_of(v)) for u, v in g.edges if p.part_of(u) != p.part_of(v))
        if nx.is_directed_acyclic_graph(q):
            seen.add(p)
    return seen


def test_partition_canonical_form():
    p = Partition([[4, 3], [2], [1]])
    assert str(p) == "1|2|34"
    assert p == Partition.parse("1|2|34") == Partition.parse("1|2|3,4") == Partition.from_labels("xyzz")
    assert p.labels == (0, 1, 2, 2)
    assert p.part_of(4) == 2
    assert Partition.from_list(p.to_list()) == p
    with pytest.raises(ValueError):
        Partition([[1, 2], [2, 3]])
    with pytest.raises(ValueError):
        Partition([[1], [3]])


def test_refinement_meet_join():
    a, b = Partition.parse("12|34"), Partition.parse("13|24")
    assert a.meet(b) == Partition.discrete(4)
    assert a.join(b) == Partition.trivial(4)
    assert refines(Partition.discrete(4), a) and not refines(a, b)
    assert Partition.parse("1|2|34").refines(Partition.parse("12|34"))


@pytest.mark.parametrize("d", range(1, 8))
def test_bell_and_stirling_counts(d):
    parts = enumerate_partitions(d)
    assert len(parts) == sum(stirling2(d, k) for k in range(1, d + 1))
    assert len(set(parts)) == len(parts)
    assert level_counts(parts, d) == tuple(stirling2(d, k) for k in range(1, d + 1))


def test_bell_small_values():
    # 1, 2, 5, 15, 52, 203 (OEIS A000110)
    assert [len(enumerate_partitions(d)) for d in range(1, 7)] == [1, 2, 5, 15, 52, 203]


def test_enumeration_cap():
    with pytest.raises(ValueError, match="cap"):
        enumerate_partitions(11)
    assert len(enumerate_partitions(3, cap=3)) == 5


def test_four_path_lattice(path4):
    assert level_counts(enumerate_partitions(4), 4) == (1, 7, 6, 1)
    c = induce(path4, Partition.parse("1|2|34"))
    assert c.part_edges() == {(frozenset({1}), frozenset({2})), (frozenset({2}), frozenset({3, 4}))}
    assert not is_valid(path4, Partition.parse("1|3|24"))
    with pytest.raises(InvalidCoarseningError) as err:
        induce(path4, Partition.parse("1|3|24"))
    assert err.value.cycle[0] == err.value.cycle[-1]
    valid = enumerate_valid(path4)
    # a 4-path admits exactly the 2^3 interval partitions
    assert len(valid) == 8
    assert all(all(max(p) - min(p) + 1 == len(p) for p in c.parts) for c in valid)


@settings(max_examples=60, deadline=None)
@given(dags(max_d=5))
def test_enumerate_valid_matches_brute_force(g):
    assert {c.partition for c in enumerate_valid(g)} == brute_valid(g)


@settings(max_examples=40, deadline=None)
@given(dags(max_d=5))
def test_meet_and_join_are_closed(g):
    valid = enumerate_valid(g)
    vset = set(valid)
    for c1, c2 in itertools.combinations(valid, 2):
        m, j = meet(g, c1, c2), join(g, c1, c2)
        assert m in vset and j in vset
        # join is the least valid upper bound
        uppers = [c for c in valid if c1.partition.refines(c.partition) and c2.partition.refines(c.partition)]
        assert all(j.partition.refines(u.partition) for u in uppers)


def test_meet_rejects_foreign_coarsening(path4):
    other = induce(Dag(4), Partition.parse("12|34"))
    with pytest.raises(ValueError):
        meet(path4, other, induce(path4, Partition.trivial(4)))


def test_coarsening_rejects_cyclic_edges():
    with pytest.raises(InvalidCoarseningError):
        Coarsening(Partition.parse("1|2"), [(0, 1), (1, 0)])
    with pytest.raises(ValueError):
        Coarsening(Partition.parse("1|2"), [(0, 2)])


def test_coarsening_roundtrip(ex_ivn):
    c = interventional_coarsening(ex_ivn, [(1,), (2,)])
    assert Coarsening.from_dict(c.to_dict()) == c
    assert "->" in c.to_dot()
    assert c.as_dag().edges == {(1, 3), (2, 3)}


def test_interventional_example(ex_ivn):
    c = interventional_coarsening(ex_ivn, [(), (1,), (2,)])
    assert c.partition == Partition.parse("1|2|34")
    assert c.part_edges() == {(frozenset({1}), frozenset({3, 4})), (frozenset({2}), frozenset({3, 4}))}


def test_interventional_without_interventions_is_trivial(ex_ivn):
    assert interventional_coarsening(ex_ivn, [()]).partition == Partition.trivial(4)
    with pytest.raises(ValueError):
        interventional_coarsening(ex_ivn, [(7,)])


def test_marginal_example(ex_ess):
    c = marginal_coarsening(ex_ess)
    assert c.partition == Partition([[1, 2], [4], [3, 5]])
    assert len(c.edges) == 2


@settings(max_examples=50, deadline=None)
@given(dags(max_d=7))
def test_special_coarsenings_are_valid(g):
    assert is_valid(g, marginal_coarsening(g).partition)
    assert is_valid(g, interventional_coarsening(g, [(v,) for v in g.nodes if v % 2]).partition)


def test_distributivity_small_cases():
    # 1 -> 2 -> 3: four valid coarsenings forming a square, which is distributive
    chain = enumerate_valid(Dag(3, [(1, 2), (2, 3)]))
    assert len(chain) == 4 and is_distributive(chain)
    # full partition lattice of 3 elements is M3 (not distributive)
    assert not is_distributive(enumerate_valid(Dag(3)))
    with pytest.raises(ValueError):
        is_distributive([Partition.parse("12|3"), Partition.parse("13|2"), Partition.parse("1|2|3")])


def test_quotient_edges_may_be_cyclic(path4):
    q = quotient_edges(path4, Partition.parse("1|3|24"))
    assert (1, 2) in q and (2, 1) in q


def test_lattice_dot_has_hasse_edges(path4):
    dot = lattice_to_dot(enumerate_valid(path4))
    # the 8-element Boolean lattice has 12 covering pairs
    assert dot.count("->") == 12


def test_enumeration_order_is_restricted_growth(rng):
    g = random_dag(rng, 6)
    labels = [c.partition.labels for c in enumerate_valid(g)]
    assert labels == sorted(labels)
    assert all(lab[0] == 0 for lab in labels)
    assert np.all([max(lab[:i + 1]) + 1 >= lab[i + 1] for lab in labels for i in range(5)])
