"""Partitions of ``1..d``, coarsenings of a DAG, and the coarsening lattice.

A coarsening of ``g`` is a partition of its nodes together with the
quotient edge set ``{part(u) -> part(v) | u -> v in g, part(u) != part(v)}``.
It is *valid* when that quotient is acyclic. Parts are always kept in
canonical order (sorted by minimum element) and edges refer to 0-based
indices into that order.
"""

from __future__ import annotations

import itertools
import json
import logging
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .graph import CycleError, Dag, find_cycle

logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_CAP = 10


class InvalidCoarseningError(CycleError):
    """The quotient of a DAG under a partition has a directed cycle.

    ``cycle`` holds part indices ``[i0, i1, ..., i0]`` of the witness.
    """

    def __init__(self, partition: "Partition", cycle: Sequence[int]):
        self.partition = partition
        shown = " -> ".join(_fmt_part(partition.parts[i]) for i in cycle)
        super().__init__(cycle, f"partition {partition} is not a valid coarsening: {shown}")


def _fmt_part(part) -> str:
    return "{" + ",".join(map(str, sorted(part))) + "}"


class Partition:
    """A set partition of ``1..d`` in canonical order.

    Parameters
    ----------
    parts : iterable of iterables of int
        Disjoint, non-empty blocks covering ``1..d``.
    d : int, optional
        Ground-set size; defaults to the largest node present.
    """

    __slots__ = ("_parts", "_labels", "_d")

    def __init__(self, parts: Iterable[Iterable[int]], d: int | None = None):
        blocks = [frozenset(int(v) for v in p) for p in parts]
        if any(not b for b in blocks):
            raise ValueError("partition blocks must be non-empty")
        nodes = [v for b in blocks for v in b]
        if d is None:
            d = max(nodes) if nodes else 0
        if len(nodes) != len(set(nodes)):
            raise ValueError("partition blocks overlap")
        if set(nodes) != set(range(1, d + 1)):
            raise ValueError(f"partition does not cover nodes 1..{d}")
        blocks.sort(key=min)
        labels = [0] * d
        for i, b in enumerate(blocks):
            for v in b:
                labels[v - 1] = i
        self._parts = tuple(blocks)
        self._labels = tuple(labels)
        self._d = d

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        """Build from a block label per node (``labels[v - 1]`` for node ``v``)."""
        groups: dict = {}
        for v, lab in enumerate(labels, start=1):
            groups.setdefault(lab, []).append(v)
        return cls(groups.values(), len(labels))

    @classmethod
    def trivial(cls, d: int) -> "Partition":
        return cls([range(1, d + 1)], d)

    @classmethod
    def discrete(cls, d: int) -> "Partition":
        return cls([[v] for v in range(1, d + 1)], d)

    @classmethod
    def parse(cls, text: str, d: int | None = None) -> "Partition":
        """Parse ``"1|2|34"`` (single-digit ids) or ``"1|2|3,4"``."""
        parts = []
        for chunk in text.split("|"):
            chunk = chunk.strip()
            if "," in chunk:
                parts.append([int(x) for x in chunk.split(",")])
            else:
                parts.append([int(x) for x in chunk])
        return cls(parts, d)

    @property
    def d(self) -> int:
        return self._d

    @property
    def parts(self) -> tuple:
        return self._parts

    @property
    def labels(self) -> tuple:
        return self._labels

    def part_of(self, v: int) -> int:
        """Index of the part containing node ``v`` (the surjection)."""
        return self._labels[v - 1]

    def __len__(self):
        return len(self._parts)

    def __iter__(self):
        return iter(self._parts)

    def __eq__(self, other):
        return isinstance(other, Partition) and self._labels == other._labels

    def __hash__(self):
        return hash(self._labels)

    def __str__(self):
        sep = "" if self._d < 10 else ","
        return "|".join(sep.join(map(str, sorted(p))) for p in self._parts)

    def __repr__(self):
        return f"Partition({self})"

    def refines(self, other: "Partition") -> bool:
        """True iff every part of ``self`` lies inside a part of ``other``."""
        if self._d != other._d:
            raise ValueError(f"partitions over different node counts ({self._d} vs {other._d})")
        return all(len({other._labels[v - 1] for v in p}) == 1 for p in self._parts)

    def meet(self, other: "Partition") -> "Partition":
        """Finest common refinement: the non-empty pairwise intersections."""
        if self._d != other._d:
            raise ValueError("partitions over different node counts")
        return Partition.from_labels(list(zip(self._labels, other._labels)))

    def join(self, other: "Partition") -> "Partition":
        """Coarsest-common-coarsening in the partition lattice (transitive overlap closure)."""
        if self._d != other._d:
            raise ValueError("partitions over different node counts")
        uf = _UnionFind(self._d)
        for p in itertools.chain(self._parts, other._parts):
            first = min(p)
            for v in p:
                uf.union(first, v)
        return Partition.from_labels([uf.find(v) for v in range(1, self._d + 1)])

    def to_list(self) -> list:
        return [sorted(p) for p in self._parts]

    @classmethod
    def from_list(cls, obj: list, d: int | None = None) -> "Partition":
        return cls(obj, d)


def refines(p1: Partition, p2: Partition) -> bool:
    return p1.refines(p2)


class _UnionFind:
    def __init__(self, d):
        self.parent = list(range(d + 1))

    def find(self, v):
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


class Coarsening:
    """A partition plus an acyclic edge set over its part indices."""

    __slots__ = ("_partition", "_edges")

    def __init__(self, partition: Partition, edges: Iterable[tuple[int, int]] = ()):
        edges = frozenset((int(i), int(j)) for i, j in edges)
        k = len(partition)
        for i, j in edges:
            if not (0 <= i < k and 0 <= j < k) or i == j:
                raise ValueError(f"edge ({i}, {j}) is not between distinct parts 0..{k - 1}")
        succ: dict = {}
        for i, j in edges:
            succ.setdefault(i, set()).add(j)
        cycle = find_cycle(range(k), succ)
        if cycle is not None:
            raise InvalidCoarseningError(partition, cycle)
        self._partition = partition
        self._edges = edges

    @property
    def partition(self) -> Partition:
        return self._partition

    @property
    def parts(self) -> tuple:
        return self._partition.parts

    @property
    def edges(self) -> frozenset:
        return self._edges

    def part_edges(self) -> frozenset:
        """Edges as pairs of parts (frozensets) rather than indices."""
        parts = self._partition.parts
        return frozenset((parts[i], parts[j]) for i, j in self._edges)

    def __eq__(self, other):
        return (isinstance(other, Coarsening) and self._partition == other._partition
                and self._edges == other._edges)

    def __hash__(self):
        return hash((self._partition, self._edges))

    def __repr__(self):
        parts = self._partition.parts
        arrows = ", ".join(f"{_fmt_part(parts[i])}->{_fmt_part(parts[j])}" for i, j in sorted(self._edges))
        return f"Coarsening({self._partition}; {arrows})"

    def as_dag(self) -> Dag:
        """The quotient DAG with part ``i`` relabelled as node ``i + 1``."""
        return Dag(len(self._partition), [(i + 1, j + 1) for i, j in self._edges])

    def to_dict(self) -> dict:
        return {"partition": self._partition.to_list(), "edges": [list(e) for e in sorted(self._edges)]}

    @classmethod
    def from_dict(cls, obj: dict, d: int | None = None) -> "Coarsening":
        return cls(Partition(obj["partition"], d), [tuple(e) for e in obj.get("edges", [])])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_dot(self, name: str = "coarsening") -> str:
        lines = [f"digraph {name} {{"]
        for i, p in enumerate(self._partition.parts):
            lines.append(f'  p{i} [label="{_fmt_part(p)}"];')
        for i, j in sorted(self._edges):
            lines.append(f"  p{i} -> p{j};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _edge_arrays(g: Dag):
    edges = sorted(g.edges)
    eu = np.array([u - 1 for u, _ in edges], dtype=np.intc)
    ev = np.array([v - 1 for _, v in edges], dtype=np.intc)
    return eu, ev


def _check_cover(g: Dag, p: Partition):
    if p.d != g.d:
        raise ValueError(f"partition covers 1..{p.d} but the graph has {g.d} nodes")


def quotient_edges(g: Dag, p: Partition) -> frozenset:
    """Quotient edge set of ``g`` under ``p``; may be cyclic."""
    _check_cover(g, p)
    lab = p.labels
    return frozenset((lab[u - 1], lab[v - 1]) for u, v in g.edges if lab[u - 1] != lab[v - 1])


def is_valid(g: Dag, p: Partition) -> bool:
    """True iff ``p`` induces an acyclic quotient of ``g``."""
    _check_cover(g, p)
    eu, ev = _edge_arrays(g)
    return bool(kernels.quotient_is_acyclic(np.array(p.labels, dtype=np.int8), eu, ev))


def induce(g: Dag, p: Partition) -> Coarsening:
    """Coarsening of ``g`` induced by ``p``.

    Raises
    ------
    InvalidCoarseningError
        If the quotient is cyclic; ``err.cycle`` holds a witness cycle.
    """
    return Coarsening(p, quotient_edges(g, p))


def _require_coarsening_of(g: Dag, c: Coarsening):
    if c.partition.d != g.d or quotient_edges(g, c.partition) != c.edges:
        raise ValueError(f"{c!r} is not a coarsening of {g!r}")


def meet(g: Dag, c1: Coarsening, c2: Coarsening) -> Coarsening:
    """Greatest common refinement of two valid coarsenings of ``g``."""
    _require_coarsening_of(g, c1)
    _require_coarsening_of(g, c2)
    return induce(g, c1.partition.meet(c2.partition))


def join(g: Dag, c1: Coarsening, c2: Coarsening) -> Coarsening:
    """Least valid coarsening coarser than both inputs.

    Start from the partition-lattice join, then merge every strongly
    connected component of its quotient. Any valid upper bound must merge
    each such component, so the condensation is the least one.
    """
    _require_coarsening_of(g, c1)
    _require_coarsening_of(g, c2)
    return _close_upward(g, c1.partition.join(c2.partition))


def _close_upward(g: Dag, p: Partition) -> Coarsening:
    import networkx as nx

    q = nx.DiGraph()
    q.add_nodes_from(range(len(p)))
    q.add_edges_from(quotient_edges(g, p))
    merged = [set().union(*(p.parts[i] for i in comp)) for comp in nx.strongly_connected_components(q)]
    return induce(g, Partition(merged, g.d))


def _bell(d: int) -> int:
    row = [1]
    for _ in range(d):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def enumerate_partitions(d: int, cap: int = DEFAULT_ENUMERATION_CAP) -> list[Partition]:
    """All partitions of ``1..d`` in restricted-growth-string order."""
    if d > cap:
        raise ValueError(f"d={d} exceeds the enumeration cap {cap} (Bell({d}) = {_bell(d)})")
    labels = kernels.partition_labels(d, capacity=_bell(d))
    return [Partition.from_labels(row) for row in labels.tolist()]


def enumerate_valid(g: Dag, cap: int = DEFAULT_ENUMERATION_CAP) -> list[Coarsening]:
    """All valid coarsenings of ``g`` in restricted-growth-string order."""
    if g.d > cap:
        raise ValueError(f"d={g.d} exceeds the enumeration cap {cap} (Bell({g.d}) = {_bell(g.d)})")
    eu, ev = _edge_arrays(g)
    labels = kernels.partition_labels(g.d, eu, ev, capacity=_bell(g.d))
    out = []
    for row in labels.tolist():
        p = Partition.from_labels(row)
        out.append(Coarsening(p, quotient_edges(g, p)))
    return out


def level_counts(partitions: Iterable[Partition | Coarsening], d: int) -> tuple[int, ...]:
    """Number of partitions with 1, 2, ..., d parts."""
    counts = [0] * d
    for p in partitions:
        counts[len(p.partition if isinstance(p, Coarsening) else p) - 1] += 1
    return tuple(counts)


def interventional_coarsening(g: Dag, interventions: Sequence[Iterable[int]]) -> Coarsening:
    """Group nodes whose intervened-ancestor signatures coincide."""
    interventions = [frozenset(t) for t in interventions]
    for t in interventions:
        bad = [v for v in t if not 1 <= v <= g.d]
        if bad:
            raise ValueError(f"intervention targets {bad} out of range 1..{g.d}")
    groups: dict = {}
    for v in g.nodes:
        groups.setdefault(g.intervened_ancestors(v, interventions), []).append(v)
    return induce(g, Partition(groups.values(), g.d))


def marginal_coarsening(g: Dag) -> Coarsening:
    """Group nodes whose sets of maximal (source) ancestors coincide."""
    groups: dict = {}
    for v in g.nodes:
        groups.setdefault(g.maximal_ancestors(v), []).append(v)
    return induce(g, Partition(groups.values(), g.d))


def _lattice_tables(elements: Sequence[Partition]):
    index = {p: i for i, p in enumerate(elements)}
    n = len(elements)
    leq = np.zeros((n, n), dtype=bool)
    for i, x in enumerate(elements):
        for j, y in enumerate(elements):
            leq[i, j] = x.refines(y)
    meet_t = np.empty((n, n), dtype=np.intp)
    join_t = np.empty((n, n), dtype=np.intp)
    for i in range(n):
        for j in range(i, n):
            m = index.get(elements[i].meet(elements[j]))
            if m is None:
                raise ValueError(f"not closed under meet: {elements[i]} and {elements[j]}")
            upper = np.flatnonzero(leq[i] & leq[j])
            least = [u for u in upper if leq[u, upper].all()]
            if not least:
                raise ValueError(f"no least upper bound for {elements[i]} and {elements[j]}")
            meet_t[i, j] = meet_t[j, i] = m
            join_t[i, j] = join_t[j, i] = least[0]
    return meet_t, join_t


def is_distributive(lattice: Sequence[Partition | Coarsening]) -> bool:
    """Check ``x ^ (y v z) == (x ^ y) v (x ^ z)`` over all triples.

    ``lattice`` must be closed under partition meets and must contain a
    least upper bound for every pair (as any enumerated coarsening lattice
    does); otherwise ``ValueError`` is raised.
    """
    elements = [c.partition if isinstance(c, Coarsening) else c for c in lattice]
    if len(set(elements)) != len(elements):
        raise ValueError("duplicate lattice elements")
    if len(elements) <= 2:
        return True
    meet_t, join_t = _lattice_tables(elements)
    n = len(elements)
    for x in range(n):
        # lhs[y, z] = x ^ (y v z); rhs[y, z] = (x ^ y) v (x ^ z)
        lhs = meet_t[x][join_t]
        mx = meet_t[x]
        rhs = join_t[mx[:, None], mx[None, :]]
        if not np.array_equal(lhs, rhs):
            return False
    return True


def lattice_to_dot(lattice: Sequence[Coarsening | Partition], name: str = "lattice") -> str:
    """Hasse diagram of a coarsening lattice (coarser partitions drawn on top)."""
    elements = [c.partition if isinstance(c, Coarsening) else c for c in lattice]
    n = len(elements)
    below = [[j for j in range(n) if j != i and elements[j].refines(elements[i])] for i in range(n)]
    lines = [f"digraph {name} {{", "  rankdir=BT;"]
    for i, p in enumerate(elements):
        lines.append(f'  n{i} [label="{p}"];')
    for i in range(n):
        for j in below[i]:
            # j is covered by i when nothing sits strictly between them
            if not any(k != j and j in below[k] for k in below[i]):
                lines.append(f"  n{j} -> n{i};")
    lines.append("}")
    return "\n".join(lines) + "\n"
