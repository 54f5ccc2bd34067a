import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarse_causal.coarsening import Partition, enumerate_valid, induce, interventional_coarsening
from coarse_causal.graph import Dag
from coarse_causal.repare import (BETWEEN, CHILD, PARENT, EdgeQuery, ExactRefineOracle, OracleContractError,
                                  OracleCycleError, RefineDecision, SignatureRefineOracle, dsep_edge_oracle,
                                  exact_edge_oracle, repare)

from conftest import dags

P = frozenset


def test_decision_and_query_validation():
    with pytest.raises(OracleContractError):
        RefineDecision(P({1, 2}), P({1}), P({1, 2}))
    with pytest.raises(OracleContractError):
        RefineDecision(P({1, 2}), P(), P({1, 2}))
    with pytest.raises(OracleContractError):
        EdgeQuery(P({1}), P({1, 2}))
    with pytest.raises(OracleContractError):
        EdgeQuery(P({1}), P({2}), (P({2, 3}),))
    q = EdgeQuery(P({1}), P({3, 4}), (P({2}), P({5})), PARENT)
    assert q.conditioning == {2, 5}
    assert q.to_dict() == {"kind": PARENT, "from": [1], "to": [3, 4], "given": [[2], [5]]}


def test_no_split_returns_trivial():
    c, trace = repare(3, lambda parts: None, lambda q: True)
    assert c.partition == Partition.trivial(3) and not c.edges
    assert len(trace) == 0
    assert trace.events() == [{"event": "result", "coarsening": c.to_dict()}]


@settings(max_examples=80, deadline=None)
@given(dags(min_d=2, max_d=6), st.data())
def test_exact_oracles_recover_any_valid_coarsening(g, data):
    valid = enumerate_valid(g)
    target = data.draw(st.sampled_from(valid))
    c, _ = repare(g.d, ExactRefineOracle(target.partition, g), exact_edge_oracle(g))
    assert c == target


@settings(max_examples=80, deadline=None)
@given(dags(min_d=2, max_d=7), st.data())
def test_signature_oracle_identifies_interventional_coarsening(g, data):
    targets = data.draw(st.lists(st.integers(1, g.d), unique=True, max_size=g.d))
    ivs = [(t,) for t in targets]
    truth = interventional_coarsening(g, ivs)
    refine = SignatureRefineOracle.from_graph(g, ivs)
    for oracle in (exact_edge_oracle(g), dsep_edge_oracle(g)):
        c, _ = repare(g.d, refine, oracle)
        assert c == truth


def test_pivot_must_have_minimal_signature():
    # 2 -> 1 -> 3 with every node intervened: the smallest id does not carry
    # the smallest signature, and splitting on it would leave {2, 3} joined
    g = Dag(3, [(2, 1), (1, 3)])
    ivs = [(1,), (2,), (3,)]
    c, _ = repare(3, SignatureRefineOracle.from_graph(g, ivs), dsep_edge_oracle(g))
    assert c == interventional_coarsening(g, ivs) == induce(g, Partition.discrete(3))


def test_interventional_example_trace(ex_ivn):
    refine = SignatureRefineOracle.from_graph(ex_ivn, [(), (1,), (2,)])
    c, trace = repare(4, refine, dsep_edge_oracle(ex_ivn))
    assert c.partition == Partition.parse("1|2|34")
    events = [json.loads(line) for line in trace.to_jsonl().splitlines()]
    assert [e["event"] for e in events] == ["split", "split", "result"]
    assert events[0]["target"] == [1, 2, 3, 4]
    kinds = {q["kind"] for e in events[:-1] for q in e["queries"]}
    assert kinds <= {BETWEEN, PARENT, CHILD}
    assert events[-1]["coarsening"] == c.to_dict()


def test_signature_oracle_ignores_data_shape():
    m = np.array([[True, False], [True, True], [False, False]])
    oracle = SignatureRefineOracle(m)
    dec = oracle([P({1, 2, 3})])
    # node 3 has the empty signature and is the pivot
    assert dec.a == {3} and dec.b == {1, 2}
    assert oracle([P({3}), P({1}), P({2})]) is None
    with pytest.raises(ValueError):
        SignatureRefineOracle(np.zeros(3, dtype=bool))


def test_split_of_unknown_part_is_rejected():
    bad = lambda parts: RefineDecision(P({1, 9}), P({1}), P({9}))  # noqa: E731
    with pytest.raises(OracleContractError):
        repare(2, bad, lambda q: False)


def test_cyclic_answers_raise_with_witness():
    calls = iter([RefineDecision(P({1, 2}), P({1}), P({2})), None])
    with pytest.raises(OracleCycleError) as err:
        repare(2, lambda parts: next(calls), lambda q: True)
    assert err.value.cycle[0] == err.value.cycle[-1]
    assert isinstance(err.value, OracleContractError)


def test_exact_refine_rejects_unrelated_state(path4):
    oracle = ExactRefineOracle(Partition.parse("12|34"), path4)
    with pytest.raises(OracleContractError):
        oracle([P({1, 3}), P({2, 4})])


def test_custom_schedule_is_used():
    seen = []

    def schedule(state, dec):
        seen.append(dec)
        yield EdgeQuery(dec.a, dec.b)

    calls = iter([RefineDecision(P({1, 2}), P({1}), P({2})), None])
    c, _ = repare(2, lambda parts: next(calls), lambda q: True, schedule=schedule)
    assert len(seen) == 1 and c.edges == {(0, 1)}
