"""Loop and first-return loop counts, Gurevich entropy and convergence radii."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np

from .graph import BouquetSpec, DirectedGraph, component_of, period as graph_period

DEFAULT_HORIZON = 64


class CensusError(ValueError):
    """Raised when a census cannot be formed or is too short for an estimate."""


@dataclass(frozen=True)
class LoopCensus:
    """Exact counts ``Z[n-1] = Z_n(a)`` and ``Zstar[n-1] = Z*_n(a)`` for ``n <= horizon``.

    ``support_bound`` is set when ``Z*_n = 0`` is certified for every
    ``n > support_bound`` (not just inside the window).
    """

    base: int
    horizon: int
    Z: tuple[int, ...]
    Zstar: tuple[int, ...]
    exact: bool = True
    period: int = 1
    support_bound: int | None = None
    taboo_radius: float | None = None
    bouquet: BouquetSpec | None = None

    def __post_init__(self) -> None:
        if len(self.Z) != self.horizon or len(self.Zstar) != self.horizon:
            raise CensusError("count arrays must have length equal to the horizon")
        check_renewal(self.Z, self.Zstar)

    @property
    def finite_support(self) -> bool:
        return self.support_bound is not None

    def to_csv(self) -> str:
        rows = ["n,Z,Zstar"]
        rows += [f"{n},{z},{zs}" for n, (z, zs) in enumerate(zip(self.Z, self.Zstar), start=1)]
        return "\n".join(rows) + "\n"


def renewal_rhs(Z: tuple[int, ...] | list[int], Zstar: tuple[int, ...] | list[int], n: int) -> int:
    """``Z*_n + sum_{k<n} Z*_k Z_{n-k}`` (1-based ``n``)."""
    return Zstar[n - 1] + sum(Zstar[k - 1] * Z[n - k - 1] for k in range(1, n))


def check_renewal(Z, Zstar) -> None:
    for n in range(1, len(Z) + 1):
        if Z[n - 1] < Zstar[n - 1] or Zstar[n - 1] < 0:
            raise CensusError(f"count ordering Z_n >= Z*_n >= 0 violated at n={n}")
        if Z[n - 1] != renewal_rhs(Z, Zstar, n):
            raise CensusError(f"renewal identity violated at n={n}")


def _edge_lists(g: DirectedGraph) -> list[list[tuple[int, int]]]:
    return [[(v, g.multiplicity(u, v)) for v in g.succ[u]] for u in g.vertices]


def _step(vec: dict[int, int], out: list[list[tuple[int, int]]]) -> dict[int, int]:
    nxt: dict[int, int] = {}
    for u, c in vec.items():
        for v, m in out[u]:
            nxt[v] = nxt.get(v, 0) + c * m
    return nxt


def taboo_core(g: DirectedGraph, a: int) -> list[int]:
    """Vertices other than ``a`` lying on some first-return path at ``a``."""
    fwd: set[int] = set()
    stack = [v for v in g.succ[a] if v != a]
    while stack:
        u = stack.pop()
        if u in fwd:
            continue
        fwd.add(u)
        stack.extend(v for v in g.succ[u] if v != a and v not in fwd)
    bwd: set[int] = set()
    stack = [u for u in g.pred[a] if u != a]
    while stack:
        v = stack.pop()
        if v in bwd:
            continue
        bwd.add(v)
        stack.extend(u for u in g.pred[v] if u != a and u not in bwd)
    return sorted(fwd & bwd)


def _longest_path_or_none(g: DirectedGraph, core: list[int]) -> int | None:
    """Vertex count of the longest path in the core, or ``None`` if it has a cycle."""
    members = set(core)
    indeg = {v: 0 for v in core}
    for u in core:
        for v in g.succ[u]:
            if v in members:
                indeg[v] += 1
    order, ready = [], [v for v in core if indeg[v] == 0]
    while ready:
        u = ready.pop()
        order.append(u)
        for v in g.succ[u]:
            if v in members:
                indeg[v] -= 1
                if indeg[v] == 0:
                    ready.append(v)
    if len(order) < len(core):
        return None
    depth = {v: 1 for v in core}
    for u in order:
        for v in g.succ[u]:
            if v in members:
                depth[v] = max(depth[v], depth[u] + 1)
    return max(depth.values(), default=0)


def count_loops(g: DirectedGraph, a: int, N: int = DEFAULT_HORIZON) -> LoopCensus:
    """Exact loop and first-return loop counts at ``a`` up to length ``N``.

    ``Z_n`` is the ``a``-entry of ``e_a A^n``; ``Z*_n`` is the same with the
    mass at ``a`` removed after every intermediate step. Both use Python
    integers, so no overflow is possible.
    """
    if N < 1:
        raise CensusError("horizon must be >= 1")
    if not 0 <= a < g.n:
        raise CensusError(f"base vertex {a} not in graph")
    comp = component_of(g, a)
    if comp.wandering:
        raise CensusError(f"base vertex {a} is wandering (lies on no cycle)")
    out = _edge_lists(g)
    Z, Zs = [], []
    full: dict[int, int] = {a: 1}
    taboo: dict[int, int] = {a: 1}
    for _ in range(N):
        full = _step(full, out)
        taboo = _step(taboo, out)
        Z.append(full.get(a, 0))
        Zs.append(taboo.pop(a, 0))
    core = taboo_core(g, a)
    longest = _longest_path_or_none(g, core)
    support = None
    radius = None
    if longest is not None:
        support = longest + 1 if core else 1
    else:
        sub, _ = g.induced(core)
        radius = float(max(abs(np.linalg.eigvals(sub.adjacency()))))
    return LoopCensus(
        base=a, horizon=N, Z=tuple(Z), Zstar=tuple(Zs), exact=True,
        period=graph_period(g, comp), support_bound=support, taboo_radius=radius,
    )


def bouquet_census(spec: BouquetSpec, N: int = DEFAULT_HORIZON) -> LoopCensus:
    """Census of the full (untruncated) bouquet at its base, from the closed form."""
    if N < 1:
        raise CensusError("horizon must be >= 1")
    Zs = [spec.ell(n) for n in range(1, N + 1)]
    Z: list[int] = []
    for n in range(1, N + 1):
        Z.append(Zs[n - 1] + sum(Zs[k - 1] * Z[n - k - 1] for k in range(1, n)))
    support = [n for n, x in enumerate(Zs, start=1) if x]
    if not support:
        raise CensusError("bouquet has no petals within the horizon")
    p = reduce(math.gcd, support)
    bound = (max(support) if spec.finite_support else None)
    return LoopCensus(
        base=spec.base, horizon=N, Z=tuple(Z), Zstar=tuple(Zs), exact=True,
        period=p, support_bound=bound, bouquet=spec,
    )


def census_for(g: DirectedGraph, a: int | None = None, N: int = DEFAULT_HORIZON) -> LoopCensus:
    """Closed-form census for untruncated bouquets, exact counting otherwise."""
    if g.bouquet is not None and (a is None or a == g.bouquet.base):
        return bouquet_census(g.bouquet, N)
    return count_loops(g, 0 if a is None else a, N)


# ---------------------------------------------------------------------------
# entropy and radii
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntropyEstimate:
    """Entropy point estimate with a rigorous lower and heuristic upper envelope."""

    h: float
    h_lo: float
    h_hi: float
    window: tuple[int, int]
    period: int

    def to_dict(self) -> dict:
        return {"h": self.h, "h_lo": self.h_lo, "h_hi": self.h_hi,
                "window": list(self.window), "period": self.period}


def gurevich_entropy(c: LoopCensus, p: int | None = None) -> EntropyEstimate:
    """Estimate ``h = lim (1/pn) log Z_{pn}``.

    ``h_lo = max_n (1/pn) log Z_{pn}`` is a lower bound because ``Z_{pn}`` is
    super-multiplicative. The point estimate is the last available growth
    ratio ``(1/p) log(Z_{pn}/Z_{p(n-1)})`` (never below ``h_lo``), which
    converges geometrically rather than like ``1/n``. ``h_hi`` is the
    largest ratio over the second half of the window and is not a bound.
    """
    p = c.period if p is None else p
    if p < 1:
        raise CensusError("period must be >= 1")
    if c.horizon < 4 * p:
        raise CensusError(f"horizon {c.horizon} shorter than 4p = {4 * p}")
    m = c.horizon // p
    vals = [c.Z[p * n - 1] for n in range(1, m + 1)]
    pos = [(n, z) for n, z in enumerate(vals, start=1) if z > 0]
    if not pos:
        raise CensusError("all Z_{pn} vanish in the window; entropy undefined at this horizon")
    h_lo = max(math.log(z) / (p * n) for n, z in pos)
    ratios = [(n, math.log(vals[n - 1] / vals[n - 2]) / p)
              for n in range(2, m + 1) if vals[n - 1] > 0 and vals[n - 2] > 0]
    if ratios:
        h = max(ratios[-1][1], h_lo)
        late = [r for n, r in ratios if n > m // 2] or [ratios[-1][1]]
        h_hi = max(max(late), h)
    else:
        h = h_hi = h_lo
    return EntropyEstimate(h=h, h_lo=h_lo, h_hi=h_hi, window=(p, p * m), period=p)


@dataclass(frozen=True)
class Radii:
    """``r_a = exp(-h)`` and the first-return radius ``R_a``.

    ``R_exact`` is true when ``R_a`` is certified: infinite by finite support,
    a closed form for built-in bouquets, or the inverse spectral radius of
    the taboo core (exact up to eigenvalue round-off).
    """

    r: float
    R: float | Fraction
    R_exact: bool
    method: str
    R_window: float


def first_return_rate(c: LoopCensus) -> float:
    """``max (1/n) log Z*_n`` over the second half of the window (``-inf`` if all vanish)."""
    lo = c.horizon // 2 + 1
    vals = [math.log(z) / n for n, z in enumerate(c.Zstar, start=1) if n >= lo and z > 0]
    return max(vals) if vals else -math.inf


def convergence_radii(c: LoopCensus, h: EntropyEstimate | None = None) -> Radii:
    if h is None:
        h = gurevich_entropy(c)
    r = math.exp(-h.h)
    rate = first_return_rate(c)
    R_window = math.exp(-rate) if rate > -math.inf else math.inf
    if c.bouquet is not None and not c.bouquet.finite_support:
        return Radii(r, c.bouquet.radius, True, "closed form", R_window)
    if c.finite_support:
        return Radii(r, math.inf, True, "finite support", R_window)
    if c.taboo_radius is not None and c.taboo_radius > 0:
        return Radii(r, 1.0 / c.taboo_radius, True, "taboo spectral radius", R_window)
    return Radii(r, R_window, False, "window estimate", R_window)
