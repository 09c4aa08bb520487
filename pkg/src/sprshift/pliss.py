"""Pliss points, tempered envelopes and Pesin blocks for cocycles over periodic orbits.

Every object here lives on a periodic orbit ``x_0 -> x_1 -> ... -> x_{q-1} -> x_0``
carrying the uniform measure, or on a weighted union of such orbits. Sums
over all ``j >= 0`` reduce to one period: if the period sum of the increments
is positive the supremum of the partial sums is infinite, otherwise it is
attained within one period of the stride.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .graph import DirectedGraph
from .potential import CylinderPotential

ROUNDOFF = 1e-12


class PlissError(ValueError):
    pass


# ---------------------------------------------------------------------------
# orbit types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarOrbit:
    """Values ``phi(x_i)`` along a periodic orbit of period ``len(values)``."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise PlissError("orbit must have at least one point")
        if not all(math.isfinite(v) for v in self.values):
            raise PlissError("observable must be bounded (finite values only)")

    @property
    def period(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class MatrixCocycle:
    """Invertible 2x2 matrices ``A_i`` mapping the fibre at ``x_i`` to the fibre at ``x_{i+1}``."""

    matrices: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if not self.matrices:
            raise PlissError("cocycle must have at least one step")
        mats = []
        for A in self.matrices:
            A = np.asarray(A, dtype=float)
            if A.shape != (2, 2):
                raise PlissError("cocycle matrices must be 2x2")
            if not np.all(np.isfinite(A)) or abs(np.linalg.det(A)) < 1e-300:
                raise PlissError("cocycle matrices must be finite and invertible")
            mats.append(A)
        object.__setattr__(self, "matrices", tuple(mats))

    @property
    def period(self) -> int:
        return len(self.matrices)

    def forward(self, i: int, k: int) -> np.ndarray:
        """``A^k`` at ``x_i``: ``A_{i+k-1} ... A_i``."""
        q = self.period
        M = np.eye(2)
        for m in range(k):
            M = self.matrices[(i + m) % q] @ M
        return M

    def backward(self, i: int, k: int) -> np.ndarray:
        """``A^{-k}`` at ``x_i``: the inverse of ``A^k`` at ``x_{i-k}``."""
        return np.linalg.inv(self.forward((i - k) % self.period, k))

    def return_matrix(self, i: int = 0) -> np.ndarray:
        return self.forward(i, self.period)


@dataclass(frozen=True)
class OrbitEnsemble:
    """Weighted union of periodic orbits; the measure is uniform on each orbit."""

    orbits: tuple[Any, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.orbits or len(self.orbits) != len(self.weights):
            raise PlissError("need one weight per orbit and at least one orbit")
        if any(w < 0 for w in self.weights) or not math.isclose(sum(self.weights), 1.0, abs_tol=1e-12):
            raise PlissError("orbit weights must be non-negative and sum to 1")


def ensemble(orbits: Sequence[Any], weights: Sequence[float] | None = None) -> OrbitEnsemble:
    if weights is None:
        weights = [1.0 / len(orbits)] * len(orbits)
    return OrbitEnsemble(tuple(orbits), tuple(float(w) for w in weights))


def orbit_from_cycle(g: DirectedGraph, cycle: Sequence[int], psi: CylinderPotential) -> ScalarOrbit:
    """Values of ``psi`` along the periodic path that repeats ``cycle``."""
    q = len(cycle)
    for u, v in zip(cycle, list(cycle[1:]) + [cycle[0]]):
        if v not in g.succ[u]:
            raise PlissError(f"{list(cycle)} is not a cycle of the graph")
    ext = list(cycle) * (1 + (psi.k + q - 1) // q)
    return ScalarOrbit(tuple(psi.table[tuple(ext[i: i + psi.k])] for i in range(q)))


def build_orbits(source: Mapping[str, Any] | str) -> OrbitEnsemble:
    """Parse ``{"orbits": [{"values": [...]} | {"matrices": [...]}, ...], "weights": [...]}``."""
    if isinstance(source, str):
        try:
            source = json.loads(source)
        except json.JSONDecodeError as exc:
            raise PlissError(f"invalid JSON: {exc}") from exc
    if not isinstance(source, Mapping) or "orbits" not in source:
        raise PlissError("orbit description must be an object with an 'orbits' list")
    orbits: list[Any] = []
    for item in source["orbits"]:
        if "values" in item:
            orbits.append(ScalarOrbit(tuple(float(v) for v in item["values"])))
        elif "matrices" in item:
            orbits.append(MatrixCocycle(tuple(np.array(A, dtype=float) for A in item["matrices"])))
        else:
            raise PlissError("each orbit needs 'values' or 'matrices'")
    return ensemble(orbits, source.get("weights"))


# ---------------------------------------------------------------------------
# periodic partial sums
# ---------------------------------------------------------------------------


def _partial_sums(incr: Callable[[int], Any], q: int, stride: int) -> tuple[list[Any], Any]:
    """Partial sums ``S(j) = sum_{m < j*stride} incr(m)`` for ``j = 0..L`` and the period sum.

    ``L = q / gcd(q, stride)`` strides cover a whole number of periods, so
    ``S(j + L) = S(j) + S(L)``.
    """
    L = q // math.gcd(q, stride)
    sums, s = [incr(0) * 0], incr(0) * 0
    for j in range(1, L + 1):
        for m in range((j - 1) * stride, j * stride):
            s = s + incr(m)
        sums.append(s)
    return sums, sums[-1]


def _sup_partial(incr: Callable[[int], Any], q: int, stride: int = 1) -> Any:
    """``sup_{j >= 0} S(j)``; ``inf`` when the sums drift upward."""
    sums, total = _partial_sums(incr, q, stride)
    return math.inf if total > 0 else max(sums)


def _inf_partial(incr: Callable[[int], Any], q: int, stride: int = 1) -> Any:
    sums, total = _partial_sums(incr, q, stride)
    return -math.inf if total < 0 else min(sums)


# ---------------------------------------------------------------------------
# Pliss points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlissResult:
    """Pliss points of one orbit (or ensemble) and the measure lower bound."""

    points: tuple[tuple[int, int], ...]
    measure: Fraction
    bound: Fraction
    mass_above: Fraction
    holds: bool

    def to_dict(self) -> dict[str, Any]:
        return {"points": [list(p) for p in self.points], "measure": float(self.measure),
                "bound": float(self.bound), "mass_above": float(self.mass_above), "holds": self.holds}


def _frac(x: float | Fraction) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def pliss_set(orbit: ScalarOrbit, beta: float | Fraction) -> list[int]:
    """Indices ``i`` with ``phi_j(x_i) >= beta j`` for every ``j >= 0`` (exact)."""
    b = _frac(beta)
    vals = [_frac(v) - b for v in orbit.values]
    q = orbit.period
    return [i for i in range(q) if _inf_partial(lambda m, i=i: vals[(i + m) % q], q) >= 0]


def pliss_points(orbits: ScalarOrbit | OrbitEnsemble, beta: float, A: float,
                 kappa: float) -> PlissResult:
    """Pliss points with constant ``beta`` and the measure lower bound.

    Checks ``nu{phi > A} <= kappa`` and returns ``nu(P)`` together with
    ``(int phi - beta - kappa ||phi - A||_inf) / (A - beta)``, all in exact
    rational arithmetic on the binary values of the inputs.
    """
    ens = orbits if isinstance(orbits, OrbitEnsemble) else ensemble([orbits])
    if not all(isinstance(o, ScalarOrbit) for o in ens.orbits):
        raise PlissError("Pliss points need scalar orbits")
    b, a, k = _frac(beta), _frac(A), _frac(kappa)
    if b >= a:
        raise PlissError(f"need beta < A (got beta={beta}, A={A})")
    if not 0 <= k <= 1:
        raise PlissError("kappa must lie in [0, 1]")
    points: list[tuple[int, int]] = []
    measure = integral = above = Fraction(0)
    dev = Fraction(0)
    for o_idx, (orb, w) in enumerate(zip(ens.orbits, ens.weights)):
        wq = _frac(w) / orb.period
        vals = [_frac(v) for v in orb.values]
        integral += wq * sum(vals)
        if w > 0:
            above += wq * sum(1 for v in vals if v > a)
            dev = max(dev, max(abs(v - a) for v in vals))
        for i in pliss_set(orb, b):
            points.append((o_idx, i))
            measure += wq
    if above > k:
        raise PlissError(f"nu{{phi > A}} = {float(above)} exceeds kappa = {kappa}")
    bound = (integral - b - k * dev) / (a - b)
    return PlissResult(tuple(points), measure, bound, above, measure >= bound)


# ---------------------------------------------------------------------------
# tempered envelopes
# ---------------------------------------------------------------------------


def _envelope_log(logs: Sequence[float], eps: float) -> list[float]:
    """``max_{|n| < q} log Pi(x_{i+n}) - eps |n|``, the exact envelope on a period-``q`` orbit."""
    q = len(logs)
    return [max(logs[(i + n) % q] - eps * abs(n) for n in range(-q + 1, q)) for i in range(q)]


@dataclass(frozen=True)
class TemperedEnvelope:
    """``Pi`` and ``Pi_eps`` along one orbit with the tail inequality checked at every value."""

    values: tuple[float, ...]
    envelope: tuple[float, ...]
    eps: float
    c0: float
    factor: float
    checks: tuple[tuple[float, str, Fraction, Fraction], ...]
    holds: bool

    def to_dict(self) -> dict[str, Any]:
        return {"values": list(self.values), "envelope": list(self.envelope), "eps": self.eps,
                "c0": self.c0, "factor": self.factor, "holds": self.holds,
                "checks": [{"t": t, "relation": r, "lhs": float(lhs), "rhs": float(rhs)}
                           for t, r, lhs, rhs in self.checks]}


def tail_factor(c0: float, eps: float) -> float:
    return 4.0 * max(c0 / eps, 1.0)


def tempered_envelope(values: Sequence[float] | ScalarOrbit, eps: float) -> TemperedEnvelope:
    """``Pi_eps(x) = sup_n e^{-|n| eps} Pi(T^n x)`` on a periodic orbit.

    The supremum over ``n in Z`` is attained with ``|n| < q`` because ``Pi``
    is ``q``-periodic and ``e^{-|n| eps}`` decreases in ``|n|``. The tail
    inequality ``nu{Pi_eps > t} <= 4 max(c0/eps, 1) nu{Pi > t}`` is checked
    at each value ``t`` of ``Pi`` or ``Pi_eps``, both for ``> t`` and for
    ``>= t``, which covers every ``t > 0``.
    """
    vals = tuple(values.values if isinstance(values, ScalarOrbit) else (float(v) for v in values))
    if eps <= 0:
        raise PlissError("eps must be positive")
    if not vals or not all(math.isfinite(v) and v > 0 for v in vals):
        raise PlissError("Pi must be positive and finite")
    q = len(vals)
    logs = [math.log(v) for v in vals]
    env = tuple(max(vals[(i + n) % q] * math.exp(-eps * abs(n)) for n in range(-q + 1, q))
                for i in range(q))
    c0 = max(abs(logs[(i + 1) % q] - logs[i]) for i in range(q))
    factor = tail_factor(c0, eps)
    checks = []
    holds = True
    for t in sorted(set(vals) | set(env)):
        for rel, test in ((">", lambda x, t=t: x > t), (">=", lambda x, t=t: x >= t)):
            lhs = Fraction(sum(1 for x in env if test(x)), q)
            rhs = Fraction(sum(1 for x in vals if test(x)), q)
            checks.append((t, rel, lhs, rhs))
            holds &= float(lhs) <= factor * float(rhs)
    return TemperedEnvelope(vals, env, eps, c0, factor, tuple(checks), holds)


# ---------------------------------------------------------------------------
# hyperbolic splitting and optimal Pesin constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Splitting:
    """Unit vectors of ``E^s(x_i)``, ``E^u(x_i)`` and the one-step log rates along them.

    ``ls[i] = log ||A_i|E^s(x_i)||`` and ``lu[i] = log ||A_i|E^u(x_i)||``, so
    ``log ||A^k|E^s(x_i)|| = sum_{m<k} ls[i+m]`` exactly (the subspaces are lines).
    """

    es: np.ndarray
    eu: np.ndarray
    ls: tuple[float, ...]
    lu: tuple[float, ...]
    eigenvalues: tuple[float, float]


def hyperbolic_splitting(c: MatrixCocycle) -> Splitting:
    """Eigen-splitting of the return matrix, transported along the orbit."""
    R = c.return_matrix(0)
    lam, vec = np.linalg.eig(R)
    if np.any(np.abs(lam.imag) > 1e-12 * max(1.0, float(np.max(np.abs(lam))))):
        raise PlissError("return matrix has non-real eigenvalues: no hyperbolic splitting")
    lam, vec = lam.real, vec.real
    order = np.argsort(np.abs(lam))
    ls_, lu_ = abs(lam[order[0]]), abs(lam[order[1]])
    if not ls_ < 1.0 < lu_:
        raise PlissError(f"return matrix eigenvalues {lam.tolist()} are not split by the unit circle")
    q = c.period
    es = np.zeros((q, 2))
    eu = np.zeros((q, 2))
    ls, lu = [], []
    s, u = vec[:, order[0]], vec[:, order[1]]
    s, u = s / np.linalg.norm(s), u / np.linalg.norm(u)
    for i in range(q):
        es[i], eu[i] = s, u
        s2, u2 = c.matrices[i] @ s, c.matrices[i] @ u
        ns, nu = float(np.linalg.norm(s2)), float(np.linalg.norm(u2))
        ls.append(math.log(ns))
        lu.append(math.log(nu))
        s, u = s2 / ns, u2 / nu
    return Splitting(es, eu, tuple(ls), tuple(lu), (float(lam[order[0]]), float(lam[order[1]])))


def _log_pi(sp: Splitting, chi: float) -> tuple[list[float], list[float]]:
    """``log Pi^s`` and ``log Pi^u`` at every orbit point (``inf`` when unbounded).

    ``Pi^s(x) = sup_k ||A^k|E^s(x)|| e^{chi k}``,
    ``Pi^u(x) = sup_k ||A^{-k}|E^u(x)|| e^{chi k}``.
    """
    q = len(sp.ls)
    s = [_sup_partial(lambda m, i=i: sp.ls[(i + m) % q] + chi, q) for i in range(q)]
    u = [_sup_partial(lambda m, i=i: chi - sp.lu[(i - 1 - m) % q], q) for i in range(q)]
    return s, u


@dataclass(frozen=True, eq=False)
class PesinCertificate:
    """Optimal ``(chi, eps)``-Pesin bound ``K_*`` at every point of a periodic orbit.

    ``K[i]`` is the smallest ``K`` with
    ``max(||A^k|E^s(x_{i+n})||, ||A^{-k}|E^u(x_{i+n})||) <= K e^{-chi k + eps |n|}``
    for all ``n in Z``, ``k >= 0``. It is the ``eps``-tempered envelope of
    ``Pi = max(Pi^s, Pi^u)``. ``window`` is the ``(n, k)`` box on which the
    inequalities were re-verified by direct matrix products.
    """

    chi: float
    eps: float
    K: tuple[float, ...]
    splitting: Splitting
    window: tuple[tuple[int, int], tuple[int, int]]
    window_ok: bool
    tempered: bool

    @property
    def log_K(self) -> list[float]:
        return [math.log(k) for k in self.K]

    def to_dict(self) -> dict[str, Any]:
        return {"chi": self.chi, "eps": self.eps,
                "K": [k if math.isfinite(k) else None for k in self.K],
                "Es": self.splitting.es.tolist(), "Eu": self.splitting.eu.tolist(),
                "window": [list(self.window[0]), list(self.window[1])],
                "window_ok": self.window_ok, "tempered": self.tempered}


def _verify_window(c: MatrixCocycle, sp: Splitting, chi: float, eps: float, K: Sequence[float],
                   n_range: tuple[int, int], k_range: tuple[int, int]) -> bool:
    q = c.period
    for i in range(q):
        if not math.isfinite(K[i]):
            continue
        for n in range(n_range[0], n_range[1] + 1):
            y = (i + n) % q
            for k in range(k_range[0], k_range[1] + 1):
                lhs = max(np.linalg.norm(c.forward(y, k) @ sp.es[y]),
                          np.linalg.norm(c.backward(y, k) @ sp.eu[y]))
                if lhs > K[i] * math.exp(-chi * k + eps * abs(n)) * (1 + 1e-9):
                    return False
    return True


def optimal_pesin_constant(c: MatrixCocycle, chi: float, eps: float,
                           window: int | None = 3, verify: bool = True) -> PesinCertificate:
    """``K_*(chi, eps; x_i)`` for every orbit point, with a window re-check.

    ``K_*`` is infinite when ``chi`` exceeds the contraction rate along
    ``E^s`` or the expansion rate along ``E^u``. ``window = w`` re-verifies
    the defining inequalities for ``|n| <= w q``, ``0 <= k <= w q``.
    """
    if chi <= 0 or eps <= 0:
        raise PlissError("chi and eps must be positive")
    sp = hyperbolic_splitting(c)
    s, u = _log_pi(sp, chi)
    logpi = [max(a, b) for a, b in zip(s, u)]
    logK = [math.inf] * c.period if any(math.isinf(x) for x in logpi) else _envelope_log(logpi, eps)
    K = tuple(math.exp(x) if math.isfinite(x) else math.inf for x in logK)
    q = c.period
    tempered = all(
        math.isinf(logK[i]) or abs(logK[(i + 1) % q] - logK[i]) <= eps + ROUNDOFF for i in range(q)
    )
    w = 0 if window is None else window
    nr, kr = (-w * q, w * q), (0, w * q)
    ok = _verify_window(c, sp, chi, eps, K, nr, kr) if (verify and w) else True
    return PesinCertificate(chi, eps, K, sp, (nr, kr), ok, tempered)


# ---------------------------------------------------------------------------
# Pliss sets of cocycles and Pesin blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PesinBlockReport:
    """Both sides of ``nu(M - Lambda) <= 4 max(c0/eps, 1) nu(M - P)``.

    ``P`` is the Pliss set with step ``n0``; ``Lambda = {Pi_eps <= C}``.
    ``in_P`` and ``in_block`` list, per orbit, the membership of each point.
    """

    n0: int
    chi: float
    eps: float
    C: float
    c0: float
    factor: float
    outside_block: float
    outside_pliss: float
    in_P: tuple[tuple[bool, ...], ...]
    in_block: tuple[tuple[bool, ...], ...]
    pliss_inside_level: bool
    vacuous: bool
    holds: bool

    def to_dict(self) -> dict[str, Any]:
        return {"n0": self.n0, "chi": self.chi, "eps": self.eps, "C": self.C, "c0": self.c0,
                "factor": self.factor, "outside_block": self.outside_block,
                "outside_pliss": self.outside_pliss, "pliss_inside_level": self.pliss_inside_level,
                "vacuous": self.vacuous, "holds": self.holds}


def step_norm_constant(ens: OrbitEnsemble, n0: int) -> float:
    """``max_{0<=k<=n0} max(||A^k||, ||A^{-k}||)`` over all ensemble points.

    Every Pliss point has ``Pi <= C``: for ``k = j n0 + r`` with ``0 <= r < n0``,
    ``||A^k|E|| <= ||A^{(j+1) n0}|E|| ||A^{-(n0-r)}|| <= e^{-chi (j+1) n0} C``.
    """
    C = 1.0
    for c in ens.orbits:
        for i in range(c.period):
            for k in range(1, n0 + 1):
                nk = max(np.linalg.norm(c.forward(i, k), 2), np.linalg.norm(c.backward(i, k), 2))
                C = max(C, float(nk))
    return C


def cocycle_c0(ens: OrbitEnsemble, chi: float) -> float:
    """``chi + max(log sup ||A||, log sup ||A^{-1}||)``."""
    top = max(max(math.log(np.linalg.norm(A, 2)), math.log(np.linalg.norm(np.linalg.inv(A), 2)))
              for c in ens.orbits for A in c.matrices)
    return chi + top


def _pliss_membership(sp: Splitting | None, chi: float, n0: int, q: int) -> tuple[bool, ...]:
    if sp is None:
        return (False,) * q
    out = []
    for i in range(q):
        s = _sup_partial(lambda m: sp.ls[(i + m) % q] + chi, q, n0)
        u = _sup_partial(lambda m: chi - sp.lu[(i - 1 - m) % q], q, n0)
        out.append(s <= 0 and u <= 0)
    return tuple(out)


def pliss_set_to_block(ens: OrbitEnsemble, n0: int, chi: float, eps: float,
                       C: float | None = None) -> PesinBlockReport:
    """Compare the Pliss set ``P_{n0}`` with the Pesin block ``{Pi_eps <= C}``.

    Orbits whose return matrix has no hyperbolic splitting contribute no
    Pliss points and have ``Pi = inf``. ``C`` defaults to
    :func:`step_norm_constant`. Membership of the block allows a relative
    round-off of ``1e-12`` in ``Pi_eps <= C``.
    """
    if n0 < 1 or chi <= 0 or eps <= 0:
        raise PlissError("need n0 >= 1, chi > 0 and eps > 0")
    if not all(isinstance(o, MatrixCocycle) for o in ens.orbits):
        raise PlissError("Pesin blocks need matrix cocycles")
    C = step_norm_constant(ens, n0) if C is None else C
    c0 = cocycle_c0(ens, chi)
    factor = tail_factor(c0, eps)
    logC = math.log(C) + ROUNDOFF
    in_P, in_L = [], []
    out_L = out_P = 0.0
    level_ok = True
    for c, w in zip(ens.orbits, ens.weights):
        q = c.period
        try:
            sp = hyperbolic_splitting(c)
        except PlissError:
            sp = None
        P = _pliss_membership(sp, chi, n0, q)
        if sp is None:
            L = (False,) * q
        else:
            s, u = _log_pi(sp, chi)
            logpi = [max(a, b) for a, b in zip(s, u)]
            if any(math.isinf(x) for x in logpi):
                L = (False,) * q
            else:
                env = _envelope_log(logpi, eps)
                L = tuple(x <= logC for x in env)
                level_ok &= all(logpi[i] <= logC for i in range(q) if P[i])
        level_ok &= sp is not None or not any(P)
        in_P.append(P)
        in_L.append(L)
        out_P += w * sum(not p for p in P) / q
        out_L += w * sum(not x for x in L) / q
    vacuous = not any(any(P) for P in in_P)
    holds = out_L <= factor * out_P + ROUNDOFF
    return PesinBlockReport(n0, chi, eps, C, c0, factor, out_L, out_P, tuple(in_P), tuple(in_L),
                            level_ok, vacuous, holds)
