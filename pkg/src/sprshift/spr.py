"""Strong positive recurrence diagnostics.

Three routes are offered: the first-return generating function at its
radius of convergence, the positive-recurrence series, and the exit-path
growth rate relative to a finite vertex set ``W``. SPR can be certified by
a finite partial sum; failure of SPR only with a closed-form tail bound.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable

import numpy as np

from .census import (
    DEFAULT_HORIZON,
    EntropyEstimate,
    LoopCensus,
    Radii,
    census_for,
    convergence_radii,
    first_return_rate,
    gurevich_entropy,
)
from .graph import DirectedGraph, strongly_connected_components
from .potential import CylinderPotential, higher_block_recode


class Verdict(str, enum.Enum):
    SPR = "SPR"
    POSITIVE_RECURRENT_NOT_SPR = "PositiveRecurrentNotSPR"
    NOT_SPR = "NotSPR"
    INCONCLUSIVE = "Inconclusive"


class SprError(ValueError):
    pass


@dataclass(frozen=True)
class Evidence:
    """One piece of numerical evidence.

    ``conclusion`` is what the item supports (a :class:`Verdict` or a short
    tag); ``rigorous`` says whether it is a certificate or a heuristic.
    """

    name: str
    value: float
    conclusion: str
    rigorous: bool
    detail: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "value": _jsonable(self.value), "conclusion": self.conclusion,
                "rigorous": self.rigorous, "detail": {k: _jsonable(v) for k, v in self.detail.items()}}


def _jsonable(x: Any) -> Any:
    if isinstance(x, Fraction):
        return float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, enum.Enum):
        return x.value
    return x


@dataclass(frozen=True)
class SprVerdict:
    verdict: Verdict
    evidence: tuple[Evidence, ...]

    def to_dict(self) -> dict[str, Any]:
        return {"verdict": self.verdict.value, "evidence": [e.to_dict() for e in self.evidence]}

    def get(self, name: str) -> Evidence:
        for e in self.evidence:
            if e.name == name:
                return e
        raise KeyError(name)


# ---------------------------------------------------------------------------
# route 1: first-return generating function
# ---------------------------------------------------------------------------


def _power_sum(counts: Iterable[int], t: float | Fraction, power: int = 0, shift: int = 0) -> float | Fraction:
    """``sum_n n^power c_n t^(n - shift)``, exact when ``t`` is a Fraction."""
    if isinstance(t, Fraction):
        return sum((Fraction(n**power * c) * t ** (n - shift) for n, c in enumerate(counts, start=1) if c),
                   Fraction(0))
    return math.fsum(n**power * c * t ** (n - shift) for n, c in enumerate(counts, start=1) if c)


def vere_jones_test(c: LoopCensus, R: float | Fraction | None = None) -> list[Evidence]:
    """Evaluate ``F_a(R_a) = sum Z*_n R_a^n`` by partial sums and tail bounds.

    Returns the ``F_a(R_a)`` item, plus ``F_a'(R_a)`` when ``F_a(R_a) = 1``
    is certified (this is what decides positive recurrence in that case).
    """
    radii_exact = True
    if R is None:
        radii = convergence_radii(c)
        R, radii_exact = radii.R, radii.R_exact
    if R == 0:
        raise SprError("R_a = 0: degenerate census (first returns grow super-exponentially)")
    if R == math.inf:
        if not any(c.Zstar):
            raise SprError("no first-return loop within the horizon")
        # F_a is a nonzero polynomial with nonnegative coefficients, so F_a(t) -> inf
        return [Evidence("F_a(R_a)", math.inf, Verdict.SPR.value, c.finite_support,
                         {"reason": "first returns have finite support; R_a = inf",
                          "support_bound": c.support_bound})]
    partial = _power_sum(c.Zstar, R)
    detail: dict[str, Any] = {"R_a": R, "horizon": c.horizon, "partial_sum": partial}
    if partial > 1:
        return [Evidence("F_a(R_a)", float(partial), Verdict.SPR.value, radii_exact, detail)]
    spec = c.bouquet
    if spec is None:
        return [Evidence("F_a(R_a)", float(partial), Verdict.INCONCLUSIVE.value, False,
                         dict(detail, reason="no closed-form tail bound"))]
    tail = spec.tail_bound(c.horizon, R, 0)
    exact = spec.tail_is_exact(R, 0)
    total = float(partial) + tail
    detail.update(tail_bound=tail, tail_exact=exact)
    if total > 1 or not math.isfinite(total):
        return [Evidence("F_a(R_a)", float(partial), Verdict.INCONCLUSIVE.value, False,
                         dict(detail, reason="partial sum plus tail bound exceeds 1"))]
    out = [Evidence("F_a(R_a)", total if exact else float(partial), "F_a(R_a) <= 1", True,
                    dict(detail, upper_bound=total))]
    if exact and math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-12):
        d_partial = _power_sum(c.Zstar, R, power=1, shift=1)
        d_tail = spec.tail_bound(c.horizon, R, 1) / float(R)
        d_total = float(d_partial) + d_tail
        out.append(Evidence("F_a'(R_a)", d_total, "finite" if math.isfinite(d_total) else "infinite",
                            spec.tail_is_exact(R, 1),
                            {"partial_sum": d_partial, "tail": d_tail}))
    return out


# ---------------------------------------------------------------------------
# route 2: positive-recurrence series
# ---------------------------------------------------------------------------


def positive_recurrence_test(c: LoopCensus, h: float | Fraction, h_exact: bool = False,
                             F_at_radius: tuple[float, bool] | None = None) -> list[Evidence]:
    """Partial sums of ``sum e^{-nh} Z_n`` and ``sum n e^{-nh} Z*_n``.

    The first series should diverge and the second converge for positive
    recurrence. Since ``sum Z_n t^n = F_a(t) / (1 - F_a(t))``, a certified
    value ``F_at_radius = (F_a(e^{-h}), exact)`` decides the first series:
    it converges when the value is an upper bound below 1 and diverges when
    it is exactly 1. Otherwise divergence is judged from the trend of the
    terms (not rigorous). Convergence of the second series is certified
    when the first returns have finite support or a closed-form tail bound
    applies at ``t = e^{-h}``.
    """
    t: float | Fraction
    if isinstance(h, Fraction):
        raise SprError("pass h as float; use t=e^{-h} via the bouquet radius for exact values")
    t = math.exp(-h)
    if c.bouquet is not None and h_exact and c.bouquet.radius != math.inf and math.isclose(
            float(c.bouquet.radius), t, rel_tol=1e-15):
        t = c.bouquet.radius
    terms = [z * float(t) ** n for n, z in enumerate(c.Z, start=1)]
    s1 = math.fsum(terms)
    m = len(terms)
    q3 = [x for x in terms[m // 2: 3 * m // 4] if x > 0]
    q4 = [x for x in terms[3 * m // 4:] if x > 0]
    divergent = bool(q3) and bool(q4) and (sum(q4) / len(q4)) >= 0.5 * (sum(q3) / len(q3))
    d1: dict[str, Any] = {"horizon": c.horizon, "last_term": terms[-1]}
    if F_at_radius is not None and h_exact and F_at_radius[0] < 1:
        F = F_at_radius[0]
        ev = [Evidence("sum e^-nh Z_n", s1, "converges", True, dict(d1, upper_bound=F / (1 - F)))]
    elif F_at_radius is not None and h_exact and F_at_radius[1] and F_at_radius[0] == 1:
        ev = [Evidence("sum e^-nh Z_n", s1, "diverges", True, dict(d1, reason="F_a(e^-h) = 1"))]
    else:
        ev = [Evidence("sum e^-nh Z_n", s1, "diverges" if divergent else "converges", False, d1)]
    s2 = _power_sum(c.Zstar, t, power=1)
    detail: dict[str, Any] = {"partial_sum": s2, "t": t}
    if c.finite_support and c.support_bound <= c.horizon:
        ev.append(Evidence("sum n e^-nh Z*_n", float(s2), "converges", True, detail))
    elif c.bouquet is not None:
        tail = c.bouquet.tail_bound(c.horizon, t, 1)
        detail.update(tail_bound=tail, tail_exact=c.bouquet.tail_is_exact(t, 1))
        total = float(s2) + tail
        ev.append(Evidence("sum n e^-nh Z*_n", total, "converges" if math.isfinite(total) else "unknown",
                           math.isfinite(total) and h_exact, detail))
    else:
        rate = first_return_rate(c)
        conv = rate < h
        if c.taboo_radius is not None:
            rate = math.log(c.taboo_radius) if c.taboo_radius > 0 else -math.inf
            conv = rate < h - 1e-12
        detail["first_return_rate"] = rate
        ev.append(Evidence("sum n e^-nh Z*_n", float(s2), "converges" if conv else "unknown", False, detail))
    return ev


# ---------------------------------------------------------------------------
# route 3: exit paths from a finite set W
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExitPathReport:
    W: tuple[int, ...]
    counts: tuple[int, ...]
    rate: float
    h_sub: float
    holds: bool
    rigorous: bool
    method: str

    def to_evidence(self) -> Evidence:
        concl = Verdict.SPR.value if self.holds else "criterion fails for this W"
        return Evidence("exit-path rate", self.rate, concl, self.rigorous and self.holds,
                        {"W": list(self.W), "h_Bor(W)": self.h_sub, "method": self.method})


def _spectral_radius(A: np.ndarray) -> float:
    if A.size == 0:
        return 0.0
    return float(max(abs(np.linalg.eigvals(A))))


def exit_path_rate(g: DirectedGraph, W: Iterable[int], N: int = DEFAULT_HORIZON) -> ExitPathReport:
    """Growth rate of paths ``(a, xi_1, ..., xi_n, b)`` with ``a, b`` in ``W`` and all ``xi_i`` outside.

    The criterion holds when the entropy of the shift restricted to ``W``
    is at least this rate. For finite graphs the rate is the log spectral
    radius of the part of ``V \\ W`` that exit paths can visit, so the
    comparison is exact; the windowed count estimate is also reported.
    """
    W = tuple(sorted(set(W)))
    if not W or any(not 0 <= w < g.n for w in W):
        raise SprError("W must be a nonempty set of vertices")
    sub, _ = g.induced(W)
    comps = strongly_connected_components(sub)
    if len(comps) != 1 or comps[0].wandering:
        raise SprError(f"shift restricted to W={list(W)} is not irreducible; enlarge W")
    h_sub = math.log(_spectral_radius(sub.adjacency())) if W else -math.inf
    Wset = set(W)
    bouquet = g.bouquet
    if bouquet is not None and W == (bouquet.base,):
        counts = tuple(bouquet.ell(n + 1) for n in range(1, N + 1))
        lo = N // 2 + 1
        vals = [math.log(x) / n for n, x in enumerate(counts, start=1) if n >= lo and x > 0]
        rate = max(vals) if vals else -math.inf
        return ExitPathReport(W, counts, rate, h_sub, h_sub >= rate, False, "closed form (window)")
    vec: dict[int, int] = {}
    for a in W:
        for v in g.succ[a]:
            if v not in Wset:
                vec[v] = vec.get(v, 0) + g.multiplicity(a, v)
    into_W = {v: sum(g.multiplicity(v, b) for b in g.succ[v] if b in Wset) for v in g.vertices}
    counts_l = []
    for _ in range(N):
        counts_l.append(sum(c * into_W[v] for v, c in vec.items()))
        nxt: dict[int, int] = {}
        for u, c in vec.items():
            for v in g.succ[u]:
                if v not in Wset:
                    nxt[v] = nxt.get(v, 0) + c * g.multiplicity(u, v)
        vec = nxt
    counts = tuple(counts_l)
    # vertices outside W reachable from W and co-reachable to W
    outside = [v for v in g.vertices if v not in Wset]
    fwd = _reach(g, [v for a in W for v in g.succ[a] if v not in Wset], Wset, forward=True)
    bwd = _reach(g, [u for b in W for u in g.pred[b] if u not in Wset], Wset, forward=False)
    core = sorted(fwd & bwd & set(outside))
    A_core = g.induced(core)[0].adjacency() if core else np.zeros((0, 0))
    rho = _spectral_radius(A_core)
    rate = math.log(rho) if rho > 1e-12 else -math.inf
    holds = h_sub >= rate - 1e-12
    return ExitPathReport(W, counts, rate, h_sub, holds, True, "spectral radius of exit core")


def _reach(g: DirectedGraph, start: list[int], blocked: set[int], forward: bool) -> set[int]:
    seen: set[int] = set()
    stack = list(start)
    nbrs = g.succ if forward else g.pred
    while stack:
        u = stack.pop()
        if u in seen or u in blocked:
            continue
        seen.add(u)
        stack.extend(nbrs[u])
    return seen


def grow_exit_set(g: DirectedGraph, W: Iterable[int], N: int = DEFAULT_HORIZON, rounds: int = 5) -> list[ExitPathReport | str]:
    """Try ``W``, then repeatedly add its in/out neighbours (at most ``rounds`` times).

    Returns the history; each entry is a report or an error message for a
    ``W`` on which the restricted shift is reducible.
    """
    W = set(W)
    history: list[ExitPathReport | str] = []
    for _ in range(rounds + 1):
        try:
            rep = exit_path_rate(g, W, N)
            history.append(rep)
            if rep.holds:
                break
        except SprError as exc:
            history.append(str(exc))
        boundary = {v for w in W for v in g.succ[w] + g.pred[w]} - W
        if not boundary:
            break
        W |= boundary
    return history


# ---------------------------------------------------------------------------
# weighted counts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightedCensus:
    base: int
    horizon: int
    Z: tuple[float, ...]
    Zstar: tuple[float, ...]
    pressure: float
    first_return_rate: float
    verdict: Verdict


def weighted_census(g: DirectedGraph, a: int, phi: CylinderPotential, N: int = DEFAULT_HORIZON) -> WeightedCensus:
    """``Z_n(phi, a)`` and ``Z*_n(phi, a)``: sums of ``e^{phi_n(x)}`` over ``n``-periodic ``x`` in ``[a]``.

    Periodic points correspond to closed walks in the block graph of
    ``phi``; first returns avoid block vertices whose first symbol is ``a``.
    The verdict compares the two exponential rates, computed from spectral
    radii of the weight matrix and its taboo restriction.
    """
    if phi.k > N:
        raise SprError(f"potential range {phi.k} exceeds horizon {N}")
    rec = higher_block_recode(phi)
    B = rec.weight_matrix()
    nb = B.shape[0]
    T = [i for i in range(nb) if rec.first_symbol(i) == a]
    if not T:
        raise SprError(f"vertex {a} does not occur in the block graph")
    Tc = [i for i in range(nb) if rec.first_symbol(i) != a]
    zrows = []
    for b in T:
        full = np.zeros(nb)
        full[b] = 1.0
        taboo = full.copy()
        zr, zsr = [], []
        for n in range(N):
            full = _fsum_matvec(full, B)
            taboo = _fsum_matvec(taboo, B)
            zr.append(full[b])
            zsr.append(taboo[b])
            taboo[T] = 0.0
        zrows.append((zr, zsr))
    Z = tuple(math.fsum(r[0][n] for r in zrows) for n in range(N))
    Zs = tuple(math.fsum(r[1][n] for r in zrows) for n in range(N))
    pressure = math.log(_spectral_radius(B))
    rho_t = _spectral_radius(B[np.ix_(Tc, Tc)]) if Tc else 0.0
    fr = math.log(rho_t) if rho_t > 1e-300 else -math.inf
    # Z*_n is a sum over first-return loops, so its rate is that of the taboo block
    if not any(Zs):
        fr = -math.inf
    verdict = Verdict.SPR if fr < pressure - 1e-12 else Verdict.INCONCLUSIVE
    return WeightedCensus(a, N, Z, Zs, pressure, fr, verdict)


def _fsum_matvec(x: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Row vector times matrix with compensated summation per entry."""
    nz = np.nonzero(x)[0]
    return np.array([math.fsum(x[i] * B[i, j] for i in nz) for j in range(B.shape[1])])


# ---------------------------------------------------------------------------
# combined gate
# ---------------------------------------------------------------------------


def spr_verdict(g: DirectedGraph, a: int | None = None, N: int = DEFAULT_HORIZON,
                W: Iterable[int] | None = None, grow: bool = False) -> SprVerdict:
    """Run every applicable route and combine them.

    SPR if any route certifies it; PositiveRecurrentNotSPR if
    ``F_a(R_a) = 1`` is certified together with a finite ``F_a'(R_a)``;
    NotSPR if ``F_a(R_a) <= 1`` is certified otherwise; Inconclusive else.
    Raises if a certified SPR meets a certified failure of SPR.
    """
    c = census_for(g, a, N)
    return verdict_from_census(c, graph=g, W=W, grow=grow)


def verdict_from_census(c: LoopCensus, graph: DirectedGraph | None = None,
                        W: Iterable[int] | None = None, grow: bool = False) -> SprVerdict:
    ent: EntropyEstimate | None
    try:
        ent = gurevich_entropy(c)
    except Exception:
        ent = None
    evidence: list[Evidence] = []
    if ent is not None:
        radii: Radii = convergence_radii(c, ent)
        evidence.append(Evidence("entropy", ent.h, "estimate", False, ent.to_dict()))
        evidence.append(Evidence("first-return rate", first_return_rate(c), "estimate", False,
                                 {"gap_vs_h": ent.h - first_return_rate(c)}))
        vj = vere_jones_test(c, radii.R) if radii.R_exact else vere_jones_test(c, radii.R_window)
        if not radii.R_exact:
            vj = [Evidence(e.name, e.value, e.conclusion, False, e.detail) for e in vj]
    else:
        vj = vere_jones_test(c)
    evidence += vj
    F = vj[0]
    # when F_a(R_a) <= 1 the entropy is exactly -log R_a
    h_val = ent.h if ent is not None else math.nan
    h_exact = False
    F_at = None
    if F.conclusion == "F_a(R_a) <= 1" and c.bouquet is not None:
        h_val, h_exact = -math.log(float(c.bouquet.radius)), True
        F_at = (F.detail["upper_bound"], bool(F.detail["tail_exact"]))
    if math.isfinite(h_val):
        evidence += positive_recurrence_test(c, h_val, h_exact, F_at)
    if graph is not None and W is not None:
        if grow:
            for rep in grow_exit_set(graph, W, c.horizon):
                if isinstance(rep, ExitPathReport):
                    evidence.append(rep.to_evidence())
                else:
                    evidence.append(Evidence("exit-path rate", math.nan, rep, False))
        else:
            evidence.append(exit_path_rate(graph, W, c.horizon).to_evidence())
    spr_cert = any(e.conclusion == Verdict.SPR.value and e.rigorous for e in evidence)
    not_spr_cert = F.conclusion == "F_a(R_a) <= 1" and F.rigorous
    if spr_cert and not_spr_cert:
        raise SprError("contradictory certificates: SPR and F_a(R_a) <= 1")
    if spr_cert:
        verdict = Verdict.SPR
    elif not_spr_cert:
        deriv = [e for e in evidence if e.name == "F_a'(R_a)"]
        if deriv and deriv[0].conclusion == "finite" and deriv[0].rigorous:
            verdict = Verdict.POSITIVE_RECURRENT_NOT_SPR
        else:
            verdict = Verdict.NOT_SPR
    else:
        verdict = Verdict.INCONCLUSIVE
    return SprVerdict(verdict, tuple(evidence))
