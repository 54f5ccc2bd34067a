"""Recursive partition refinement (RePaRe) over the coarsening lattice.

The engine starts at the one-part coarsening and repeatedly asks a *refine
oracle* for a split of one part. Edges incident to the split part are
dropped and re-derived by posing :class:`EdgeQuery` objects to an *edge
oracle*; all other edges carry over. The queries for each split come from a
schedule, a generator that yields queries and receives each answer through
``send``, so later conditioning sets can depend on earlier answers.

Refine oracles are callables ``refine(parts) -> RefineDecision | None``. An
oracle may provide its own ``edge_schedule`` attribute; otherwise
:func:`default_edge_schedule` is used.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Generator, Iterable, Sequence

import numpy as np

from .coarsening import Coarsening, Partition, induce
from .graph import CycleError, Dag, find_cycle

BETWEEN = "between-split"
PARENT = "parent-of-split"
CHILD = "child-of-split"


class OracleContractError(ValueError):
    """An oracle answered outside its contract (bad split, cyclic edge set)."""


class OracleCycleError(OracleContractError, CycleError):
    def __init__(self, cycle):
        CycleError.__init__(
            self, cycle,
            "edge answers produced a cycle: " + " -> ".join(_fmt(p) for p in cycle))


def _fmt(part) -> str:
    return "{" + ",".join(map(str, sorted(part))) + "}"


def _by_min(parts: Iterable[frozenset]) -> list:
    return sorted(parts, key=min)


@dataclass(frozen=True)
class RefineDecision:
    """Split of ``target`` into the non-empty halves ``a`` and ``b``."""

    target: frozenset
    a: frozenset
    b: frozenset

    def __post_init__(self):
        if not self.a or not self.b or self.a & self.b or self.a | self.b != self.target:
            raise OracleContractError(
                f"split {_fmt(self.a)} / {_fmt(self.b)} is not a partition of {_fmt(self.target)}")


@dataclass(frozen=True)
class EdgeQuery:
    """Is there an edge ``source -> target`` given the conditioning parts?"""

    source: frozenset
    target: frozenset
    given: tuple = ()
    kind: str = BETWEEN

    def __post_init__(self):
        if self.source & self.target:
            raise OracleContractError("query parts overlap")
        for z in self.given:
            if z & (self.source | self.target):
                raise OracleContractError(
                    f"conditioning part {_fmt(z)} overlaps {_fmt(self.source)} or {_fmt(self.target)}")

    @property
    def conditioning(self) -> frozenset:
        return frozenset().union(*self.given)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "from": sorted(self.source), "to": sorted(self.target),
                "given": [sorted(z) for z in self.given]}


@dataclass(frozen=True)
class CoarseState:
    """Current parts (canonical order) and edges between them as part pairs."""

    parts: tuple
    edges: frozenset

    def parents(self, part) -> list:
        return _by_min(u for u, v in self.edges if v == part)

    def children(self, part) -> list:
        return _by_min(v for u, v in self.edges if u == part)

    def to_coarsening(self, d: int) -> Coarsening:
        p = Partition(self.parts, d)
        idx = {part: i for i, part in enumerate(p.parts)}
        return Coarsening(p, {(idx[u], idx[v]) for u, v in self.edges})


@dataclass
class TraceStep:
    partition: tuple
    decision: RefineDecision
    queries: list = field(default_factory=list)

    def to_dict(self, step: int) -> dict:
        return {
            "event": "split",
            "step": step,
            "partition": [sorted(p) for p in self.partition],
            "target": sorted(self.decision.target),
            "a": sorted(self.decision.a),
            "b": sorted(self.decision.b),
            "queries": [dict(q.to_dict(), result=bool(r)) for q, r in self.queries],
        }


@dataclass
class LearningTrace:
    steps: list = field(default_factory=list)
    result: Coarsening | None = None

    def __len__(self):
        return len(self.steps)

    def events(self) -> list[dict]:
        out = [s.to_dict(i) for i, s in enumerate(self.steps)]
        if self.result is not None:
            out.append({"event": "result", "coarsening": self.result.to_dict()})
        return out

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e) + "\n" for e in self.events())


Schedule = Callable[[CoarseState, RefineDecision], Generator]


def _incident_queries(state: CoarseState, dec: RefineDecision, a_to_b: bool, b_to_a: bool):
    """Parent-of-split then child-of-split queries for one split."""
    a, b = dec.a, dec.b
    pa = state.parents(dec.target)
    for pi in pa:
        rest = [x for x in pa if x != pi]
        yield EdgeQuery(pi, a, tuple(rest + ([b] if b_to_a else [])), PARENT)
        yield EdgeQuery(pi, b, tuple(rest + ([a] if a_to_b else [])), PARENT)
    for pi in state.children(dec.target):
        known = [x for x in state.parents(pi) if x != dec.target]
        a_to_pi = yield EdgeQuery(a, pi, tuple(known), CHILD)
        yield EdgeQuery(b, pi, tuple(_by_min(known + ([a] if a_to_pi else []))), CHILD)


def default_edge_schedule(state: CoarseState, dec: RefineDecision):
    """Probe both directions between the halves, then incident parts."""
    pa = tuple(state.parents(dec.target))
    a_to_b = yield EdgeQuery(dec.a, dec.b, pa, BETWEEN)
    b_to_a = yield EdgeQuery(dec.b, dec.a, pa, BETWEEN)
    yield from _incident_queries(state, dec, bool(a_to_b), bool(b_to_a))


def repare(d: int, refine: Callable, is_edge: Callable[[EdgeQuery], bool],
           schedule: Schedule | None = None) -> tuple[Coarsening, LearningTrace]:
    """Learn a coarsening of a DAG on ``1..d`` from refine and edge oracles.

    Parameters
    ----------
    d : int
        Number of fine-grained nodes.
    refine : callable
        ``refine(parts) -> RefineDecision | None``.
    is_edge : callable
        ``is_edge(query) -> bool``.
    schedule : callable, optional
        Query generator; defaults to ``refine.edge_schedule`` when present,
        else :func:`default_edge_schedule`.

    Returns
    -------
    coarsening : Coarsening
    trace : LearningTrace

    Raises
    ------
    OracleContractError
        If a split does not partition an existing part, or accepted edges
        form a cycle (``OracleCycleError`` with the witness).
    """
    if schedule is None:
        schedule = getattr(refine, "edge_schedule", default_edge_schedule)
    state = CoarseState((frozenset(range(1, d + 1)),), frozenset())
    trace = LearningTrace()
    while True:
        dec = refine(state.parts)
        if dec is None:
            break
        if dec.target not in state.parts:
            raise OracleContractError(f"refine oracle split {_fmt(dec.target)}, which is not a current part")
        step = TraceStep(state.parts, dec)
        edges = {(u, v) for u, v in state.edges if u != dec.target and v != dec.target}
        gen = schedule(state, dec)
        try:
            query = next(gen)
            while True:
                answer = bool(is_edge(query))
                step.queries.append((query, answer))
                if answer:
                    edges.add((query.source, query.target))
                query = gen.send(answer)
        except StopIteration:
            pass
        parts = tuple(_by_min([p for p in state.parts if p != dec.target] + [dec.a, dec.b]))
        succ: dict = {}
        for u, v in edges:
            succ.setdefault(u, []).append(v)
        cycle = find_cycle(parts, succ)
        if cycle is not None:
            raise OracleCycleError(cycle)
        trace.steps.append(step)
        state = CoarseState(parts, frozenset(edges))
    result = state.to_coarsening(d)
    trace.result = result
    return result, trace


class ExactRefineOracle:
    """Refine toward a known valid coarsening of ``g``.

    Picks the first current part (by minimum node) that is not a target
    part and splits off a source of the target coarsening restricted to its
    sub-parts (smallest minimum node among sources).
    """

    def __init__(self, target: Partition, g: Dag):
        self.target = induce(g, target)
        self._parts = frozenset(target.parts)
        self._edges = self.target.part_edges()

    def __call__(self, parts: Sequence[frozenset]) -> RefineDecision | None:
        if frozenset(parts) == self._parts:
            return None
        for part in _by_min(parts):
            if part in self._parts:
                continue
            subs = [t for t in self._parts if t <= part]
            if frozenset().union(*subs) != part:
                raise OracleContractError(f"current part {_fmt(part)} is not a union of target parts")
            sources = [t for t in subs if not any((s, t) in self._edges for s in subs)]
            a = min(sources, key=min)
            return RefineDecision(part, a, part - a)
        raise OracleContractError("current partition is not coarser than the target")


def exact_refine_oracle(target: Partition, g: Dag) -> ExactRefineOracle:
    return ExactRefineOracle(target, g)


def exact_edge_oracle(g: Dag) -> Callable[[EdgeQuery], bool]:
    """True iff some fine edge of ``g`` goes from the source part into the target part."""
    def is_edge(q: EdgeQuery) -> bool:
        return bool(g.parents(q.target) & q.source)
    return is_edge


def dsep_edge_oracle(g: Dag) -> Callable[[EdgeQuery], bool]:
    """Perfect conditional-independence answers read off ``g`` by d-separation."""
    def is_edge(q: EdgeQuery) -> bool:
        return not g.d_separated(q.source, q.target, q.conditioning)
    return is_edge


class SignatureRefineOracle:
    """Split parts by rows of a boolean node-by-intervention matrix.

    Scans parts in canonical order and splits the first one whose rows are
    not all equal. The pivot is a node with the fewest flagged interventions
    (smallest id on ties); its row is then inclusion-minimal within the
    part, so no node of the remainder can be an ancestor of the pivot's
    class. The pivot class becomes ``a``.
    """

    def __init__(self, m):
        m = np.asarray(getattr(m, "entries", m), dtype=bool)
        if m.ndim != 2:
            raise ValueError("descendant matrix must be 2-D (nodes x interventions)")
        self.matrix = m
        self.signatures = {v: frozenset(np.flatnonzero(m[v - 1]).tolist()) for v in range(1, m.shape[0] + 1)}

    @classmethod
    def from_graph(cls, g: Dag, interventions: Sequence[Iterable[int]]) -> "SignatureRefineOracle":
        """Noiseless matrix: node ``v`` is flagged for ``I`` iff ``v`` descends from ``I``.

        Empty (observational) entries are skipped, so columns follow the
        non-empty interventions in order.
        """
        targets = [frozenset(t) for t in interventions if t]
        m = np.zeros((g.d, len(targets)), dtype=bool)
        for j, t in enumerate(targets):
            for v in g.descendants(t):
                m[v - 1, j] = True
        return cls(m)

    def __call__(self, parts: Sequence[frozenset]) -> RefineDecision | None:
        sig = self.signatures
        for part in _by_min(parts):
            if len(part) < 2 or len({sig[v] for v in part}) < 2:
                continue
            pivot = min(part, key=lambda v: (len(sig[v]), v))
            a = frozenset(v for v in part if sig[v] == sig[pivot])
            return RefineDecision(part, a, part - a)
        return None

    def edge_schedule(self, state: CoarseState, dec: RefineDecision):
        """Queries with the conditioning sets used for interventional coarsenings.

        ``a -> b`` is only a candidate when ``a``'s signature is a proper
        subset of some signature in ``b``; the reverse direction never is.
        """
        sig_a = self.signatures[min(dec.a)]
        pa = tuple(state.parents(dec.target))
        a_to_b = False
        if any(sig_a < self.signatures[y] for y in dec.b):
            a_to_b = yield EdgeQuery(dec.a, dec.b, pa, BETWEEN)
        yield from _incident_queries(state, dec, bool(a_to_b), False)


def signature_refine_oracle(m) -> SignatureRefineOracle:
    return SignatureRefineOracle(m)


def signature_edge_schedule(m) -> Schedule:
    return SignatureRefineOracle(m).edge_schedule
