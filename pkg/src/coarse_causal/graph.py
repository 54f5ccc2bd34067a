"""Fine-grained DAGs over contiguous node ids ``1..d``.

Everything downstream (coarsenings, oracles, data generation) consumes the
reachability and separation primitives defined here.
"""

from __future__ import annotations

import heapq
import json
import operator
import re
from typing import Iterable, Sequence

NodeSet = frozenset


class CycleError(ValueError):
    """Raised when an edge relation contains a directed cycle."""

    def __init__(self, cycle: Sequence, message: str | None = None):
        self.cycle = list(cycle)
        super().__init__(message or "directed cycle " + " -> ".join(map(str, self.cycle)))


def find_cycle(nodes: Iterable, succ: dict) -> list | None:
    """Return one directed cycle ``[v0, v1, ..., v0]`` or None if acyclic."""
    color = {v: 0 for v in nodes}
    for root in sorted(color, key=_sort_key):
        if color[root]:
            continue
        stack = [(root, iter(sorted(succ.get(root, ()), key=_sort_key)))]
        path = [root]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                path.pop()
                color[node] = 2
            elif color[nxt] == 1:
                return path[path.index(nxt):] + [nxt]
            elif color[nxt] == 0:
                color[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(sorted(succ.get(nxt, ()), key=_sort_key))))
    return None


def _sort_key(x):
    # parts (frozensets) sort by their minimum element, plain ids by value
    return min(x) if isinstance(x, frozenset) else x


class Dag:
    """Immutable DAG on nodes ``1..d``.

    Parameters
    ----------
    d : int
        Number of nodes.
    edges : iterable of (int, int)
        Directed edges ``u -> v``.

    Raises
    ------
    ValueError
        On out-of-range ids, self-loops or duplicate edges.
    CycleError
        If the edges contain a directed cycle.
    """

    __slots__ = ("_d", "_edges", "_parents", "_children")

    def __init__(self, d: int, edges: Iterable[tuple[int, int]] = ()):
        if int(d) != d or d < 1:
            raise ValueError(f"node count must be a positive integer, got {d!r}")
        d = int(d)
        edge_list = [(int(u), int(v)) for u, v in edges]
        edge_set = frozenset(edge_list)
        if len(edge_set) != len(edge_list):
            raise ValueError("duplicate edges")
        parents = {v: set() for v in range(1, d + 1)}
        children = {v: set() for v in range(1, d + 1)}
        for u, v in edge_set:
            if not (1 <= u <= d and 1 <= v <= d):
                raise ValueError(f"edge ({u}, {v}) out of range 1..{d}")
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            parents[v].add(u)
            children[u].add(v)
        cycle = find_cycle(range(1, d + 1), children)
        if cycle is not None:
            raise CycleError(cycle)
        self._d = d
        self._edges = edge_set
        self._parents = {v: frozenset(p) for v, p in parents.items()}
        self._children = {v: frozenset(c) for v, c in children.items()}

    @property
    def d(self) -> int:
        return self._d

    @property
    def nodes(self) -> range:
        return range(1, self._d + 1)

    @property
    def edges(self) -> frozenset:
        return self._edges

    def __eq__(self, other):
        return isinstance(other, Dag) and self._d == other._d and self._edges == other._edges

    def __hash__(self):
        return hash((self._d, self._edges))

    def __repr__(self):
        return f"Dag(d={self._d}, edges={sorted(self._edges)})"

    def _check(self, s) -> frozenset:
        out = set()
        for v in s:
            try:
                iv = operator.index(v)
            except TypeError:
                raise ValueError(f"node {v!r} is not an integer id") from None
            if not 1 <= iv <= self._d:
                raise ValueError(f"node {v!r} out of range 1..{self._d}")
            out.add(iv)
        return frozenset(out)

    def parents_of(self, v: int) -> frozenset:
        return self._parents[v]

    def children_of(self, v: int) -> frozenset:
        return self._children[v]

    def parents(self, s: Iterable[int]) -> frozenset:
        s = self._check(s)
        return frozenset().union(*(self._parents[v] for v in s))

    def children(self, s: Iterable[int]) -> frozenset:
        s = self._check(s)
        return frozenset().union(*(self._children[v] for v in s))

    def _reach(self, s, nbrs) -> frozenset:
        seen = set(s)
        stack = list(s)
        while stack:
            for w in nbrs[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return frozenset(seen)

    def ancestors(self, s: Iterable[int]) -> frozenset:
        """All nodes with a directed path into ``s`` (``s`` included)."""
        return self._reach(self._check(s), self._parents)

    def descendants(self, s: Iterable[int]) -> frozenset:
        """All nodes reachable from ``s`` by directed paths (``s`` included)."""
        return self._reach(self._check(s), self._children)

    def topological_order(self) -> tuple[int, ...]:
        """Kahn's algorithm, always emitting the smallest available id."""
        indeg = {v: len(self._parents[v]) for v in self.nodes}
        heap = [v for v, k in indeg.items() if k == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            v = heapq.heappop(heap)
            order.append(v)
            for w in self._children[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    heapq.heappush(heap, w)
        if len(order) != self._d:
            raise CycleError(find_cycle(self.nodes, self._children) or [])
        return tuple(order)

    def d_separated(self, a: Iterable[int], b: Iterable[int], c: Iterable[int] = ()) -> bool:
        """Test ``a`` and ``b`` for d-separation given ``c`` (Bayes-ball reachability)."""
        a, b, c = self._check(a), self._check(b), self._check(c)
        if a & b or a & c or b & c:
            raise ValueError("a, b, c must be pairwise disjoint")
        if not a or not b:
            return True
        anc_c = self.ancestors(c)
        # direction True: ball arrived from a child (moving up)
        visited = set()
        stack = [(v, True) for v in a]
        while stack:
            v, up = stack.pop()
            if (v, up) in visited:
                continue
            visited.add((v, up))
            if v not in c and v in b:
                return False
            if up:
                if v not in c:
                    stack.extend((p, True) for p in self._parents[v])
                    stack.extend((ch, False) for ch in self._children[v])
            else:
                if v not in c:
                    stack.extend((ch, False) for ch in self._children[v])
                if v in anc_c:
                    stack.extend((p, True) for p in self._parents[v])
        return True

    def maximal_ancestors(self, v: int) -> frozenset:
        """Ancestors of ``v`` that are source nodes of the graph."""
        return frozenset(w for w in self.ancestors({v}) if not self._parents[w])

    def intervened_ancestors(self, v: int, interventions: Sequence[Iterable[int]]) -> frozenset:
        """Indices of interventions whose targets reach ``v``.

        This is the node's intervention signature. Observational (empty)
        entries never appear in the result.
        """
        anc = self.ancestors({v})
        return frozenset(i for i, targets in enumerate(interventions) if anc & self._check(targets))

    def longest_path_length(self) -> int:
        """Number of edges on a longest directed path."""
        dist = {}
        for v in self.topological_order():
            dist[v] = max((dist[p] + 1 for p in self._parents[v]), default=0)
        return max(dist.values())

    # I/O

    def to_dict(self) -> dict:
        return {"d": self._d, "edges": [list(e) for e in sorted(self._edges)]}

    @classmethod
    def from_dict(cls, obj: dict) -> "Dag":
        return cls(obj["d"], [tuple(e) for e in obj["edges"]])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Dag":
        return cls.from_dict(json.loads(text))

    def to_dot(self, name: str = "G") -> str:
        lines = [f"digraph {name} {{"]
        for v in self.nodes:
            kids = sorted(self._children[v])
            if kids:
                lines.append(f"  {v} -> {{{' '.join(map(str, kids))}}};")
            else:
                lines.append(f"  {v};")
        lines.append("}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dot(cls, text: str) -> "Dag":
        """Parse the adjacency-list DOT dialect written by :meth:`to_dot`.

        Plain ``u -> v;`` statements are accepted too.
        """
        body = text[text.index("{") + 1: text.rindex("}")]
        nodes, edges = set(), []
        for stmt in body.split(";"):
            stmt = stmt.strip()
            if not stmt:
                continue
            m = re.fullmatch(r"(\d+)\s*->\s*\{([\d\s]*)\}", stmt)
            if m:
                u = int(m.group(1))
                vs = [int(x) for x in m.group(2).split()]
            else:
                m = re.fullmatch(r"(\d+)\s*->\s*(\d+)", stmt)
                if m:
                    u, vs = int(m.group(1)), [int(m.group(2))]
                elif re.fullmatch(r"\d+", stmt):
                    u, vs = int(stmt), []
                else:
                    raise ValueError(f"unsupported DOT statement: {stmt!r}")
            nodes.add(u)
            nodes.update(vs)
            edges.extend((u, v) for v in vs)
        return cls(max(nodes), edges)
