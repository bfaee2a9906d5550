"""Acyclic mixed graphs and their combinatorial data."""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator


class GraphError(ValueError):
    """Base class for malformed graphs."""


class SelfLoop(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class NodeOutOfRange(GraphError):
    pass


class DirectedCycle(GraphError):
    def __init__(self, cycle: list[int]):
        self.cycle = cycle
        super().__init__("directed cycle " + " -> ".join(map(str, cycle)))


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class MixedGraph:
    """Mixed graph on nodes ``1..p``.

    ``directed`` holds pairs ``(u, v)`` for ``u -> v``; ``bidirected`` holds
    pairs ``(u, v)`` with ``u < v`` for ``u <-> v``.  Use :meth:`build` to
    construct from raw edge lists; it canonicalizes and validates.
    """

    p: int
    directed: frozenset = field(default_factory=frozenset)
    bidirected: frozenset = field(default_factory=frozenset)

    @classmethod
    def build(cls, p: int, directed: Iterable = (), bidirected: Iterable = ()) -> "MixedGraph":
        d = [tuple(e) for e in directed]
        if len(set(d)) != len(d):
            raise DuplicateEdge("directed edge listed twice")
        b = []
        for u, v in bidirected:
            if u == v:
                raise SelfLoop(f"bidirected self-loop at {u}")
            b.append((min(u, v), max(u, v)))
        if len(set(b)) != len(b):
            raise DuplicateEdge("bidirected edge listed twice")
        g = cls(int(p), frozenset(d), frozenset(b))
        validate(g)
        return g

    @property
    def nodes(self) -> range:
        return range(1, self.p + 1)

    @property
    def n_edges(self) -> int:
        return len(self.directed) + len(self.bidirected)

    def parents(self, v: int) -> list[int]:
        return sorted(u for u, w in self.directed if w == v)

    def children(self, v: int) -> list[int]:
        return sorted(w for u, w in self.directed if u == v)

    def siblings(self, v: int) -> list[int]:
        return sorted({u if w == v else w for u, w in self.bidirected if v in (u, w)})

    def lambdas(self) -> list[tuple[int, int]]:
        """Directed edges in canonical (edge index) order."""
        return sorted(self.directed)

    def omegas(self) -> list[tuple[int, int]]:
        """Diagonal entries ``(v, v)`` followed by bidirected pairs."""
        return [(v, v) for v in self.nodes] + sorted(self.bidirected)

    def encode(self) -> str:
        d = ",".join(f"{u}-{v}" for u, v in sorted(self.directed))
        b = ",".join(f"{u}-{v}" for u, v in sorted(self.bidirected))
        return f"p{self.p}|D:{d}|B:{b}"

    @classmethod
    def decode(cls, text: str) -> "MixedGraph":
        """Inverse of :meth:`encode`."""
        try:
            head, d, b = text.strip().split("|")
            if not (head.startswith("p") and d.startswith("D:") and b.startswith("B:")):
                raise ValueError
            p = int(head[1:])

            def edges(part):
                return [tuple(int(x) for x in e.split("-")) for e in part.split(",") if e]

            return cls.build(p, edges(d[2:]), edges(b[2:]))
        except ValueError as exc:
            raise GraphError(f"malformed graph code: {text!r}") from exc

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "directed": [list(e) for e in sorted(self.directed)],
            "bidirected": [list(e) for e in sorted(self.bidirected)],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "MixedGraph":
        if not isinstance(doc, dict) or "p" not in doc:
            raise GraphError("graph document needs a 'p' field")
        return cls.build(doc["p"], doc.get("directed", []), doc.get("bidirected", []))


def load_graph(path) -> MixedGraph:
    with open(path) as fh:
        return MixedGraph.from_json(json.load(fh))


def validate(graph: MixedGraph) -> None:
    p = graph.p
    for u, v in itertools.chain(graph.directed, graph.bidirected):
        if not (1 <= u <= p and 1 <= v <= p):
            raise NodeOutOfRange(f"edge ({u}, {v}) outside nodes 1..{p}")
        if u == v:
            raise SelfLoop(f"self-loop at node {u}")
    for u, v in graph.bidirected:
        if u > v:
            raise GraphError(f"bidirected pair ({u}, {v}) is not canonical")
    _topological_order_or_cycle(graph)


def _topological_order_or_cycle(graph: MixedGraph) -> list[int]:
    children = {v: [] for v in graph.nodes}
    indeg = {v: 0 for v in graph.nodes}
    for u, v in graph.directed:
        children[u].append(v)
        indeg[v] += 1
    ready = sorted(v for v in graph.nodes if indeg[v] == 0)
    order = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for w in sorted(children[v]):
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
                ready.sort()
    if len(order) < graph.p:
        raise DirectedCycle(_find_cycle(graph, {v for v in graph.nodes if indeg[v] > 0}))
    return order


def _find_cycle(graph: MixedGraph, candidates: set[int]) -> list[int]:
    # every remaining node has a parent among the remaining nodes; walk backwards
    parents = {v: [u for u, w in graph.directed if w == v and u in candidates] for v in candidates}
    v = min(candidates)
    seen: list[int] = []
    while v not in seen:
        seen.append(v)
        v = min(parents[v])
    cycle = seen[seen.index(v):]
    cycle.reverse()
    return cycle + [cycle[0]]


def topological_order(graph: MixedGraph) -> list[int]:
    """Deterministic topological order (smallest available label first)."""
    return _topological_order_or_cycle(graph)


def longest_path_lengths(graph: MixedGraph) -> list[list[int | None]]:
    """``L[s-1][u-1]``: most edges on a directed path ``s -> ... -> u``.

    ``0`` on the diagonal and ``None`` when ``u`` is unreachable from ``s``.
    """
    p = graph.p
    order = topological_order(graph)
    parents = {v: graph.parents(v) for v in graph.nodes}
    L: list[list[int | None]] = [[None] * p for _ in range(p)]
    for s in graph.nodes:
        row = L[s - 1]
        row[s - 1] = 0
        for v in order:
            best = row[v - 1]
            for u in parents[v]:
                lu = row[u - 1]
                if lu is not None and (best is None or lu + 1 > best):
                    best = lu + 1
            row[v - 1] = best
    return L


@dataclass(frozen=True)
class TrekWeights:
    """Weight of every covariance variable and the longest trek length."""

    sigma_weight: dict
    w_trek: int

    def __getitem__(self, pair):
        u, v = pair
        return self.sigma_weight[(min(u, v), max(u, v))]


def _tops(graph: MixedGraph) -> list[tuple[int, int]]:
    tops = [(v, v) for v in graph.nodes]
    for u, v in sorted(graph.bidirected):
        tops += [(u, v), (v, u)]
    return tops


def trek_weights(graph: MixedGraph) -> TrekWeights:
    L = longest_path_lengths(graph)
    weights = {}
    w_trek = 1
    tops = _tops(graph)
    for u in graph.nodes:
        for v in range(u, graph.p + 1):
            best = None
            for s, t in tops:
                a, b = L[s - 1][u - 1], L[t - 1][v - 1]
                if a is not None and b is not None and (best is None or a + b + 1 > best):
                    best = a + b + 1
            if best is None:
                weights[(u, v)] = 1
            else:
                weights[(u, v)] = best
                w_trek = max(w_trek, best)
    return TrekWeights(weights, w_trek)


@dataclass(frozen=True)
class TianComponent:
    """One mixed component: a bidirected-connected node set plus its parents."""

    nodes: tuple          # V_j, sorted
    internal: tuple       # C_j, sorted
    directed: frozenset   # D ∩ (V_j x C_j)
    bidirected: frozenset # B restricted to C_j

    @property
    def incoming(self) -> tuple:
        return tuple(v for v in self.nodes if v not in self.internal)

    def subgraph(self) -> tuple[MixedGraph, tuple]:
        """The component relabeled onto ``1..|V_j|``, plus the original labels."""
        labels = self.nodes
        pos = {v: i + 1 for i, v in enumerate(labels)}
        g = MixedGraph.build(
            len(labels),
            [(pos[u], pos[v]) for u, v in self.directed],
            [(pos[u], pos[v]) for u, v in self.bidirected],
        )
        return g, labels


def tian_decompose(graph: MixedGraph) -> list[TianComponent]:
    """Components ordered by their smallest internal node."""
    comp = {v: v for v in graph.nodes}

    def find(v):
        while comp[v] != v:
            comp[v] = comp[comp[v]]
            v = comp[v]
        return v

    for u, v in graph.bidirected:
        ru, rv = find(u), find(v)
        if ru != rv:
            comp[max(ru, rv)] = min(ru, rv)
    groups: dict[int, list[int]] = {}
    for v in graph.nodes:
        groups.setdefault(find(v), []).append(v)
    out = []
    for root in sorted(groups):
        internal = tuple(sorted(groups[root]))
        cset = set(internal)
        d = frozenset((u, v) for u, v in graph.directed if v in cset)
        nodes = tuple(sorted(cset | {u for u, _ in d}))
        b = frozenset((u, v) for u, v in graph.bidirected if u in cset)
        out.append(TianComponent(nodes, internal, d, b))
    return out


def canonical_form(graph: MixedGraph) -> tuple:
    """Isomorphism-invariant key: lexicographically least relabeled edge list."""
    best = None
    for perm in itertools.permutations(range(1, graph.p + 1)):
        pm = dict(zip(graph.nodes, perm))
        key = (
            tuple(sorted((pm[u], pm[v]) for u, v in graph.directed)),
            tuple(sorted(tuple(sorted((pm[u], pm[v]))) for u, v in graph.bidirected)),
        )
        if best is None or key < best:
            best = key
    return best


DEFAULT_ENUMERATION_CAP = 100_000


def count_graphs(p: int, max_edges: int) -> int:
    from math import comb

    pairs = p * (p - 1) // 2
    return sum(comb(2 * pairs, k) for k in range(max_edges + 1))


def enumerate_graphs(
    p: int,
    max_edges: int,
    up_to_isomorphism: bool = False,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> Iterator[MixedGraph]:
    """Mixed graphs with at most ``max_edges`` edges and ``u -> v`` only for ``u < v``.

    Ordered by edge count, then lexicographically in the edge listing
    (directed pairs first, then bidirected pairs).  With ``up_to_isomorphism``
    only the first member of each isomorphism class is produced.
    """
    if p > 5:
        raise ValueError("enumeration is limited to p <= 5")
    total = count_graphs(p, max_edges)
    if total > cap:
        raise BudgetExceeded(f"{total} graphs exceed the enumeration cap {cap}")
    pairs = list(itertools.combinations(range(1, p + 1), 2))
    edges = [("d", e) for e in pairs] + [("b", e) for e in pairs]
    seen = set()
    for k in range(min(max_edges, len(edges)) + 1):
        for chosen in itertools.combinations(edges, k):
            g = MixedGraph(
                p,
                frozenset(e for kind, e in chosen if kind == "d"),
                frozenset(e for kind, e in chosen if kind == "b"),
            )
            if up_to_isomorphism:
                key = canonical_form(g)
                if key in seen:
                    continue
                seen.add(key)
            yield g


def random_graph(p: int, edge_prob, rng_seed: int) -> MixedGraph:
    """Erdős–Rényi sample: every ``u -> v`` (``u < v``) and every ``u <-> v`` independently."""
    prob = Fraction(edge_prob)
    if not 0 <= prob <= 1:
        raise ValueError("edge probability must lie in [0, 1]")
    rng = random.Random(rng_seed)
    pairs = list(itertools.combinations(range(1, p + 1), 2))
    directed = [e for e in pairs if rng.random() < prob]
    bidirected = [e for e in pairs if rng.random() < prob]
    return MixedGraph(p, frozenset(directed), frozenset(bidirected))
