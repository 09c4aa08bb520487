"""Locally constant potentials on vertex shifts.

A range-``k`` potential is a table on admissible words ``x_0 ... x_{k-1}``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Mapping, Sequence

import numpy as np

from .graph import DirectedGraph


class PotentialError(ValueError):
    pass


def admissible_words(g: DirectedGraph, k: int) -> Iterator[tuple[int, ...]]:
    """All paths with ``k`` vertices, in lexicographic order."""
    if k < 1:
        raise PotentialError("word length must be >= 1")

    def extend(word: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
        if len(word) == k:
            yield word
            return
        for v in g.succ[word[-1]]:
            yield from extend(word + (v,))

    for v in g.vertices:
        yield from extend((v,))


def is_admissible(g: DirectedGraph, word: Sequence[int]) -> bool:
    if any(not 0 <= v < g.n for v in word):
        return False
    return all(b in g.succ[a] for a, b in zip(word, word[1:]))


@dataclass(frozen=True, eq=False)
class CylinderPotential:
    """Function of the coordinates ``x_0 ... x_{k-1}`` of a one-sided path."""

    graph: DirectedGraph
    k: int
    table: Mapping[tuple[int, ...], float]

    def __post_init__(self) -> None:
        words = set(admissible_words(self.graph, self.k))
        keys = set(self.table)
        if keys != words:
            missing = sorted(words - keys)[:3]
            extra = sorted(keys - words)[:3]
            raise PotentialError(
                f"table must cover exactly the admissible {self.k}-words "
                f"(missing {missing}, inadmissible {extra})"
            )
        if not all(math.isfinite(v) for v in self.table.values()):
            raise PotentialError("potential values must be finite")

    def __call__(self, word: Sequence[int]) -> float:
        return self.table[tuple(word[: self.k])]

    @property
    def sup_norm(self) -> float:
        return max(abs(v) for v in self.table.values())

    def variations(self) -> list[float]:
        """``var[i]``: largest change between words agreeing on ``x_0..x_{i-1}``."""
        out = []
        for i in range(self.k):
            groups: dict[tuple[int, ...], list[float]] = {}
            for w, v in self.table.items():
                groups.setdefault(w[:i], []).append(v)
            out.append(max(max(vs) - min(vs) for vs in groups.values()))
        return out

    def holder_norm(self, beta: float) -> float:
        """``sup|psi| + sup |psi(x) - psi(y)| / d(x, y)^beta`` with ``d = e^{-first disagreement}``."""
        return self.sup_norm + max(v * math.exp(beta * i) for i, v in enumerate(self.variations()))

    def extend(self, k: int) -> "CylinderPotential":
        """Same function viewed as a range-``k`` potential (``k >= self.k``)."""
        if k < self.k:
            raise PotentialError("cannot shrink the range")
        if k == self.k:
            return self
        return CylinderPotential(self.graph, k, {w: self.table[w[: self.k]] for w in admissible_words(self.graph, k)})

    def birkhoff(self, path: Sequence[int], periodic: bool = False) -> float:
        """``sum_{j<n} psi(sigma^j x)`` over ``n`` starting positions.

        With ``periodic`` the path is read cyclically and ``n = len(path)``;
        otherwise ``n = len(path) - k + 1``.
        """
        if periodic:
            q = len(path)
            ext = list(path) * ((q + self.k - 1 + q - 1) // q)
            return math.fsum(self.table[tuple(ext[j: j + self.k])] for j in range(q))
        return math.fsum(self.table[tuple(path[j: j + self.k])] for j in range(len(path) - self.k + 1))

    def __add__(self, other: "CylinderPotential") -> "CylinderPotential":
        k = max(self.k, other.k)
        a, b = self.extend(k), other.extend(k)
        return CylinderPotential(self.graph, k, {w: a.table[w] + b.table[w] for w in a.table})

    def scale(self, t: float) -> "CylinderPotential":
        return CylinderPotential(self.graph, self.k, {w: t * v for w, v in self.table.items()})

    def shift_by(self, c: float) -> "CylinderPotential":
        return CylinderPotential(self.graph, self.k, {w: v + c for w, v in self.table.items()})

    def to_description(self) -> dict[str, Any]:
        return {"range": self.k, "table": [[list(w), v] for w, v in sorted(self.table.items())]}

    def to_json(self) -> str:
        return json.dumps(self.to_description(), sort_keys=True)


def from_function(g: DirectedGraph, k: int, f: Callable[[tuple[int, ...]], float]) -> CylinderPotential:
    return CylinderPotential(g, k, {w: float(f(w)) for w in admissible_words(g, k)})


def zero(g: DirectedGraph) -> CylinderPotential:
    return constant(g, 0.0)


def constant(g: DirectedGraph, c: float) -> CylinderPotential:
    return from_function(g, 1, lambda w: c)


def vertex_function(g: DirectedGraph, values: Sequence[float]) -> CylinderPotential:
    if len(values) != g.n:
        raise PotentialError("need one value per vertex")
    return from_function(g, 1, lambda w: values[w[0]])


def indicator(g: DirectedGraph, a: int) -> CylinderPotential:
    """``1_[a]``, the indicator of the cylinder ``{x_0 = a}``."""
    return from_function(g, 1, lambda w: 1.0 if w[0] == a else 0.0)


def coboundary(g: DirectedGraph, u: Sequence[float]) -> CylinderPotential:
    """``u(x_0) - u(x_1)``."""
    if len(u) != g.n:
        raise PotentialError("need one value of u per vertex")
    return from_function(g, 2, lambda w: u[w[0]] - u[w[1]])


def build_potential(g: DirectedGraph, source: Mapping[str, Any] | str) -> CylinderPotential:
    """Parse ``{"range": k, "table": [[word, value], ...]}``, ``{"vertex": [...]}``,
    ``{"indicator": a}``, ``{"constant": c}`` or ``{"coboundary": [...]}``."""
    if isinstance(source, str):
        try:
            source = json.loads(source)
        except json.JSONDecodeError as exc:
            raise PotentialError(f"invalid JSON: {exc}") from exc
    if not isinstance(source, Mapping):
        raise PotentialError("potential description must be a JSON object")
    if "vertex" in source:
        return vertex_function(g, [float(x) for x in source["vertex"]])
    if "indicator" in source:
        return indicator(g, int(source["indicator"]))
    if "constant" in source:
        return constant(g, float(source["constant"]))
    if "coboundary" in source:
        return coboundary(g, [float(x) for x in source["coboundary"]])
    if "range" in source and "table" in source:
        k = int(source["range"])
        table: dict[tuple[int, ...], float] = {}
        for w, v in source["table"]:
            w = tuple(int(x) for x in w)
            if len(w) != k:
                raise PotentialError(f"word {w} does not have length {k}")
            if w in table:
                raise PotentialError(f"duplicate word {w}")
            table[w] = float(v)
        return CylinderPotential(g, k, table)
    raise PotentialError("unrecognized potential description")


@dataclass(frozen=True)
class BlockRecoding:
    """Block graph on admissible ``(k-1)``-words with a potential on its edges.

    ``words[i]`` is the word of block vertex ``i``; ``edge_value[(i, j)]`` is
    the potential evaluated on the ``k``-word spelled by the edge ``i -> j``.
    For ``k <= 2`` the block graph is the original graph.
    """

    graph: DirectedGraph
    words: tuple[tuple[int, ...], ...]
    edge_value: Mapping[tuple[int, int], float]
    k: int

    def first_symbol(self, i: int) -> int:
        return self.words[i][0]

    def weight_matrix(self, t: float = 1.0) -> np.ndarray:
        B = np.zeros((self.graph.n, self.graph.n))
        for (i, j), v in self.edge_value.items():
            B[i, j] = self.graph.multiplicity(i, j) * math.exp(t * v)
        return B

    def encode(self, path: Sequence[int]) -> list[int]:
        """Block-vertex path of a symbol path (length drops by ``k - 2`` when ``k > 2``)."""
        m = max(self.k - 1, 1)
        index = {w: i for i, w in enumerate(self.words)}
        return [index[tuple(path[j: j + m])] for j in range(len(path) - m + 1)]


def higher_block_recode(psi: CylinderPotential) -> BlockRecoding:
    """Recode a range-``k`` potential as a function of one edge of a block graph."""
    g, k = psi.graph, psi.k
    if k <= 2:
        p2 = psi.extend(2)
        return BlockRecoding(g, tuple((v,) for v in g.vertices), dict(p2.table), k)
    from .graph import _from_edges

    words = tuple(admissible_words(g, k - 1))
    index = {w: i for i, w in enumerate(words)}
    edges, values = [], {}
    for w in admissible_words(g, k):
        e = (index[w[:-1]], index[w[1:]])
        edges.append(e)
        values[e] = psi.table[w]
    bg = _from_edges(len(words), edges, labels=["".join(map(str, w)) for w in words])
    return BlockRecoding(bg, words, values, k)
