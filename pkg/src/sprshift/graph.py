"""Directed graphs for vertex Markov shifts.

Graphs are finite. Countable families (bouquets) are represented by an
explicit truncation plus the closed-form rule that generated them, so that
downstream code can attach analytic tail bounds.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components


class GraphParseError(ValueError):
    """Raised when a graph description is malformed."""


# ---------------------------------------------------------------------------
# bouquets
# ---------------------------------------------------------------------------

BOUQUET_RULES = ("table", "ceil_pow2_over_nsq", "ruette")


@dataclass(frozen=True)
class BouquetSpec:
    """A base vertex with ``ell(n)`` first-return petals of length ``n``.

    ``rule`` is one of ``"table"`` (explicit ``table[n]`` for ``n <= len``,
    zero beyond), ``"ceil_pow2_over_nsq"`` (``ceil(2^n / n^2)`` for
    ``n >= M``) or ``"ruette"`` (``2^(n - sqrt n)`` on perfect squares).
    """

    rule: str
    M: int = 1
    table: tuple[int, ...] = ()
    base: int = 0

    def __post_init__(self) -> None:
        if self.rule not in BOUQUET_RULES:
            raise GraphParseError(f"unknown bouquet rule {self.rule!r}")
        if self.rule == "table" and any((not isinstance(x, int)) or x < 0 for x in self.table):
            raise GraphParseError("bouquet table entries must be non-negative integers")
        if self.rule == "ceil_pow2_over_nsq" and self.M < 1:
            raise GraphParseError("bouquet parameter M must be >= 1")

    def ell(self, n: int) -> int:
        if n < 1:
            raise GraphParseError(f"bouquet rule undefined at n={n}")
        if self.rule == "table":
            return self.table[n - 1] if n <= len(self.table) else 0
        if self.rule == "ceil_pow2_over_nsq":
            if n < self.M:
                return 0
            return -((-(1 << n)) // (n * n))
        k = math.isqrt(n)
        return 1 << (n - k) if k * k == n else 0

    @property
    def finite_support(self) -> bool:
        return self.rule == "table"

    @property
    def radius(self) -> Fraction | float:
        """Exact radius of convergence of ``sum ell(n) t^n``."""
        if self.rule == "table":
            return math.inf
        return Fraction(1, 2)

    def tail_is_exact(self, t: float | Fraction, power: int = 0) -> bool:
        """Whether :meth:`tail_bound` returns the exact tail rather than a bound."""
        return self.rule == "table" or (self.rule == "ruette" and t == Fraction(1, 2) and power <= 1)

    def tail_bound(self, N: int, t: float | Fraction, power: int = 0) -> float:
        """Upper bound on ``sum_{n > N} n^power ell(n) t^n``.

        Rigorous for ``power`` in {0, 1} at every ``t`` where the series
        converges; ``math.inf`` when no finite bound is available.
        """
        t = float(t)
        if self.rule == "table":
            return 0.0 if N >= len(self.table) else math.fsum(
                n**power * self.ell(n) * t**n for n in range(N + 1, len(self.table) + 1)
            )
        if self.rule == "ruette":
            K = math.isqrt(N)
            if t == 0.5:
                # sum_{k>K} k^{2p} 2^{-k}; closed forms for p = 0, 1
                if power == 0:
                    return 2.0**-K
                if power == 1:
                    return 2.0**-K * (K * K + 4 * K + 6)
                return math.inf
            q = 2 * t
            if q >= 1:
                return math.inf
            # ell(k^2) t^{k^2} = q^{k^2} 2^{-k} <= q^{k^2}
            return _geometric_tail(K + 1, q, 2 * power, step_sq=True)
        # ceil rule: ell(n) <= 2^n / n^2 + 1 for n >= M
        m = max(N + 1, self.M)
        q = 2 * t
        if power == 0 and q == 1.0:
            return 1.0 / (m - 1) + _geometric_tail(m, t, 0) if m >= 2 else math.inf
        if q >= 1:
            return math.inf
        return _geometric_tail(m, q, power - 2) + _geometric_tail(m, t, power)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"rule": self.rule, "base": self.base}
        if self.rule == "table":
            d["table"] = list(self.table)
        if self.rule == "ceil_pow2_over_nsq":
            d["M"] = self.M
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "BouquetSpec":
        try:
            rule = d["rule"]
        except KeyError as exc:
            raise GraphParseError("bouquet description needs a 'rule'") from exc
        table = d.get("table", ())
        if isinstance(table, Mapping):
            # {n: ell_n}; missing n are 0
            top = max((int(k) for k in table), default=0)
            table = [int(table.get(str(n), table.get(n, 0))) for n in range(1, top + 1)]
        return cls(rule=rule, M=int(d.get("M", 1)), table=tuple(table), base=int(d.get("base", 0)))


def _geometric_tail(m: int, q: float, power: int, step_sq: bool = False) -> float:
    """Bound ``sum_{n >= m} n^power q^n`` (or over ``n = k^2`` when ``step_sq``)."""
    if q <= 0:
        return 0.0
    if step_sq:
        # terms decay faster than a geometric series with ratio q^(2m+1)
        first = m**power * q ** (m * m)
        ratio = q ** (2 * m + 1) * ((m + 1) / m) ** max(power, 0)
        return first / (1 - ratio) if ratio < 1 else math.inf
    first = m**power * q**m
    ratio = q * ((m + 1) / m) ** max(power, 0)
    return first / (1 - ratio) if ratio < 1 else math.inf


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Finite directed graph on vertices ``0..n-1``.

    ``succ[u]`` is the sorted tuple of successors of ``u``. ``mult`` holds
    edge multiplicities greater than one (only produced by bouquets whose
    rule asks for several petals of length one).
    """

    succ: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...] | None = None
    mult: Mapping[tuple[int, int], int] = field(default_factory=dict)
    bouquet: BouquetSpec | None = None
    truncation: int | None = None

    @property
    def n(self) -> int:
        return len(self.succ)

    @property
    def vertices(self) -> range:
        return range(self.n)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in self.vertices for v in self.succ[u]]

    def multiplicity(self, u: int, v: int) -> int:
        return self.mult.get((u, v), 1)

    @property
    def is_simple(self) -> bool:
        return not self.mult

    @cached_property
    def pred(self) -> tuple[tuple[int, ...], ...]:
        pr: list[list[int]] = [[] for _ in self.vertices]
        for u, v in self.edges():
            pr[v].append(u)
        return tuple(tuple(sorted(p)) for p in pr)

    def out_degree(self, u: int) -> int:
        return sum(self.multiplicity(u, v) for v in self.succ[u])

    def in_degree(self, v: int) -> int:
        return sum(self.multiplicity(u, v) for u in self.pred[v])

    @property
    def proper(self) -> bool:
        return all(self.out_degree(v) > 0 and self.in_degree(v) > 0 for v in self.vertices)

    @property
    def locally_finite(self) -> bool:
        # finite graphs always are; truncations record it for the family
        return True

    def adjacency(self, dtype: Any = float) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=dtype)
        for u, v in self.edges():
            A[u, v] = self.multiplicity(u, v)
        return A

    def sparse_adjacency(self) -> csr_matrix:
        rows, cols = zip(*self.edges()) if self.edges() else ((), ())
        data = [self.multiplicity(u, v) for u, v in zip(rows, cols)]
        return csr_matrix((data, (rows, cols)), shape=(self.n, self.n), dtype=float)

    def induced(self, keep: Sequence[int]) -> tuple["DirectedGraph", list[int]]:
        """Subgraph on ``keep`` (renumbered in sorted order) and the old ids."""
        old = sorted(set(keep))
        new_id = {v: i for i, v in enumerate(old)}
        succ = tuple(tuple(new_id[w] for w in self.succ[v] if w in new_id) for v in old)
        mult = {(new_id[u], new_id[v]): m for (u, v), m in self.mult.items() if u in new_id and v in new_id}
        labels = tuple(self.label(v) for v in old) if self.labels else None
        return DirectedGraph(succ=succ, labels=labels, mult=mult), old

    def label(self, v: int) -> str:
        return self.labels[v] if self.labels else str(v)

    # -- serialization -----------------------------------------------------

    def to_description(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "vertices": list(self.vertices),
            "edges": [[u, v] for u, v in self.edges()],
        }
        if self.mult:
            d["multiplicity"] = [[u, v, m] for (u, v), m in sorted(self.mult.items())]
        if self.labels:
            d["labels"] = list(self.labels)
        if self.bouquet is not None:
            d["bouquet"] = self.bouquet.to_dict()
            d["truncation"] = self.truncation
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_description(), sort_keys=True, separators=(",", ":"))

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def __eq__(self, other: object) -> bool:
        return isinstance(other, DirectedGraph) and self.to_json() == other.to_json()

    def __hash__(self) -> int:
        return hash(self.to_json())

    def __repr__(self) -> str:
        return f"DirectedGraph(n={self.n}, edges={len(self.edges())})"


def _from_edges(n: int, edges: Sequence[tuple[int, int]], labels=None, mult=None, **kw) -> DirectedGraph:
    succ: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise GraphParseError(f"edge ({u}, {v}) refers to a dangling vertex id")
        if v in succ[u]:
            raise GraphParseError(f"duplicate edge ({u}, {v})")
        succ[u].add(v)
    return DirectedGraph(
        succ=tuple(tuple(sorted(s)) for s in succ),
        labels=tuple(labels) if labels else None,
        mult=dict(mult or {}),
        **kw,
    )


def bouquet_graph(spec: BouquetSpec, N: int, max_vertices: int = 200_000) -> DirectedGraph:
    """Truncate a bouquet to petals of length ``<= N``.

    Vertex 0 is the base; the petals follow in order of length. Several
    petals of length one become a self-loop of that multiplicity.
    """
    if N < 1:
        raise GraphParseError("truncation must be >= 1")
    ells = [spec.ell(n) for n in range(1, N + 1)]
    total = 1 + sum(l * (n - 1) for n, l in zip(range(1, N + 1), ells))
    if total > max_vertices:
        raise GraphParseError(f"truncated bouquet would have {total} vertices (> {max_vertices})")
    edges: list[tuple[int, int]] = []
    mult: dict[tuple[int, int], int] = {}
    nxt = 1
    if ells[0] >= 1:
        edges.append((0, 0))
        if ells[0] > 1:
            mult[(0, 0)] = ells[0]
    for n, l in zip(range(2, N + 1), ells[1:]):
        for _ in range(l):
            path = [0] + list(range(nxt, nxt + n - 1)) + [0]
            nxt += n - 1
            edges.extend(zip(path[:-1], path[1:]))
    return _from_edges(total, edges, mult=mult, bouquet=spec, truncation=N)


def build_graph(source: Mapping[str, Any] | str) -> DirectedGraph:
    """Validate a graph description (dict or JSON text) and build the graph.

    Either ``vertices``/``edges`` or ``bouquet``/``truncation`` must be given.
    """
    if isinstance(source, str):
        try:
            source = json.loads(source)
        except json.JSONDecodeError as exc:
            raise GraphParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(source, Mapping):
        raise GraphParseError("graph description must be a JSON object")
    if source.get("bouquet") is not None:
        if source.get("truncation") is None:
            raise GraphParseError("a bouquet description needs a 'truncation' bound")
        return bouquet_graph(BouquetSpec.from_dict(source["bouquet"]), int(source["truncation"]))
    if "vertices" not in source or "edges" not in source:
        raise GraphParseError("graph description needs 'vertices' and 'edges'")
    verts = source["vertices"]
    if isinstance(verts, int):
        verts = list(range(verts))
    verts = [int(v) for v in verts]
    if len(set(verts)) != len(verts):
        raise GraphParseError("duplicate vertex id")
    if sorted(verts) != list(range(len(verts))):
        raise GraphParseError("vertex ids must be the dense range 0..n-1")
    try:
        edges = [(int(u), int(v)) for u, v in source["edges"]]
    except (TypeError, ValueError) as exc:
        raise GraphParseError("edges must be [u, v] pairs") from exc
    mult = {}
    for item in source.get("multiplicity", []):
        u, v, m = (int(x) for x in item)
        if m < 1:
            raise GraphParseError("edge multiplicity must be >= 1")
        if m > 1:
            mult[(u, v)] = m
    g = _from_edges(len(verts), edges, labels=source.get("labels"), mult=mult)
    if any(v not in g.succ[u] for u, v in mult):
        raise GraphParseError("multiplicity given for a missing edge")
    return g


def load_graph(path: str) -> DirectedGraph:
    with open(path, encoding="utf-8") as fh:
        return build_graph(fh.read())


def from_adjacency(A: np.ndarray | Sequence[Sequence[int]], labels=None) -> DirectedGraph:
    A = np.asarray(A)
    edges = [(int(u), int(v)) for u, v in zip(*np.nonzero(A))]
    mult = {(u, v): int(A[u, v]) for u, v in edges if A[u, v] > 1}
    return _from_edges(A.shape[0], edges, labels=labels, mult=mult)


# -- named families -----------------------------------------------------------


def golden_mean() -> DirectedGraph:
    return from_adjacency([[1, 1], [1, 0]])


def full_shift(k: int = 2) -> DirectedGraph:
    return from_adjacency(np.ones((k, k), dtype=int))


def cycle(n: int) -> DirectedGraph:
    return _from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def bipartite_square() -> DirectedGraph:
    """Complete bipartite graph between {0, 1} and {2, 3}, both directions (period 2)."""
    return from_adjacency([[0, 0, 1, 1], [0, 0, 1, 1], [1, 1, 0, 0], [1, 1, 0, 0]])


def disjoint_union(*graphs: DirectedGraph) -> DirectedGraph:
    edges, mult, off = [], {}, 0
    for g in graphs:
        edges += [(u + off, v + off) for u, v in g.edges()]
        mult.update({(u + off, v + off): m for (u, v), m in g.mult.items()})
        off += g.n
    return _from_edges(off, edges, mult=mult)


# ---------------------------------------------------------------------------
# connectivity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Component:
    vertices: tuple[int, ...]
    wandering: bool

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, v: object) -> bool:
        return v in self.vertices


def strongly_connected_components(g: DirectedGraph) -> list[Component]:
    """Strongly connected components ordered by their minimal vertex id.

    Singletons without a self-loop are flagged ``wandering``.
    """
    if g.n == 0:
        return []
    _, lab = connected_components(g.sparse_adjacency(), directed=True, connection="strong")
    groups: dict[int, list[int]] = {}
    for v, c in enumerate(lab):
        groups.setdefault(int(c), []).append(v)
    comps = []
    for vs in groups.values():
        vs.sort()
        wandering = len(vs) == 1 and vs[0] not in g.succ[vs[0]]
        comps.append(Component(tuple(vs), wandering))
    return sorted(comps, key=lambda c: c.vertices[0])


def component_of(g: DirectedGraph, v: int) -> Component:
    for c in strongly_connected_components(g):
        if v in c:
            return c
    raise ValueError(f"vertex {v} not in graph")


def is_irreducible(g: DirectedGraph) -> bool:
    comps = strongly_connected_components(g)
    return len(comps) == 1 and not comps[0].wandering


def _levels(g: DirectedGraph, comp: Component) -> dict[int, int]:
    members = set(comp.vertices)
    a = comp.vertices[0]
    level = {a: 0}
    frontier = [a]
    while frontier:
        nxt = []
        for u in frontier:
            for v in g.succ[u]:
                if v in members and v not in level:
                    level[v] = level[u] + 1
                    nxt.append(v)
        frontier = nxt
    return level


def period(g: DirectedGraph, component: Component | None = None) -> int:
    """gcd of the cycle lengths through the minimal vertex of ``component``."""
    comp = component if component is not None else _only_component(g)
    if comp.wandering:
        raise ValueError("period undefined: component has no cycle")
    members = set(comp.vertices)
    level = _levels(g, comp)
    p = 0
    for u in comp.vertices:
        for v in g.succ[u]:
            if v in members:
                p = math.gcd(p, level[u] + 1 - level[v])
    if p == 0:
        raise ValueError("period undefined: component has no cycle")
    return p


@dataclass(frozen=True)
class SpectralDecomposition:
    period: int
    classes: tuple[tuple[int, ...], ...]

    def class_of(self, v: int) -> int:
        for i, c in enumerate(self.classes):
            if v in c:
                return i
        raise KeyError(v)


def spectral_decomposition(g: DirectedGraph, component: Component | None = None) -> SpectralDecomposition:
    """Cyclic classes ``S_i`` = vertices reached from the base in ``i mod p`` steps."""
    comp = component if component is not None else _only_component(g)
    p = period(g, comp)
    level = _levels(g, comp)
    classes: list[list[int]] = [[] for _ in range(p)]
    for v in comp.vertices:
        classes[level[v] % p].append(v)
    members = set(comp.vertices)
    for u in comp.vertices:
        for v in g.succ[u]:
            if v in members and level[v] % p != (level[u] + 1) % p:
                raise AssertionError("cyclic class structure violated")  # pragma: no cover
    return SpectralDecomposition(p, tuple(tuple(c) for c in classes))


def _only_component(g: DirectedGraph) -> Component:
    comps = [c for c in strongly_connected_components(g) if not c.wandering]
    if len(comps) != 1:
        raise ValueError(f"expected one irreducible component, found {len(comps)}")
    return comps[0]


def require_irreducible(g: DirectedGraph) -> None:
    if not is_irreducible(g):
        raise ValueError("graph is not irreducible")


def relabel(g: DirectedGraph, f: Callable[[int], str]) -> DirectedGraph:
    return DirectedGraph(succ=g.succ, labels=tuple(f(v) for v in g.vertices), mult=dict(g.mult))
