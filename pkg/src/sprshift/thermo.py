"""Thermodynamic formalism on finite irreducible graphs.

Measures of maximal entropy, equilibrium measures of locally constant
potentials, normalized transfer operators and their spectral gap, exact
correlations, asymptotic variance, pressure curves, rate functions,
return-time tails and periodic-orbit obstructions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .graph import DirectedGraph, _from_edges, is_irreducible
from .potential import (
    BlockRecoding,
    CylinderPotential,
    PotentialError,
    admissible_words,
    from_function,
    higher_block_recode,
    is_admissible,
    zero,
)

__all__ = [
    "ThermoError", "MarkovMeasure", "perron", "parry_measure", "equilibrium_measure",
    "cylinder_mass", "higher_block_recode", "sinai_reduction", "TransferOperator",
    "transfer_operator", "spectral_gap", "correlations", "pressure_curve",
    "asymptotic_variance", "green_kubo", "linear_response", "rate_function",
    "return_time_tail", "coboundary_obstruction_scan", "lift_measure",
    "expectation", "random_markov_measure", "stationary_distribution",
]

TOL_EIG = 1e-12
MAX_ITER = 100_000


class ThermoError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Perron-Frobenius data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PerronData:
    lam: float
    left: np.ndarray
    right: np.ndarray
    iterations: int
    residual: float


def perron(B: np.ndarray, tol: float = TOL_EIG, maxiter: int = MAX_ITER) -> PerronData:
    """Leading eigenvalue and positive eigenvectors of a nonnegative irreducible matrix.

    Power iteration on ``B + I`` from the all-ones vector; the shift makes
    the leading eigenvalue strictly dominant even for periodic matrices.
    The eigenvalue is the two-sided Rayleigh quotient ``lBr / lr``.
    Normalization: ``sum(l * r) = 1`` and ``sum(r) = 1`` before rescaling.
    """
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    M = B + np.eye(n)
    r = np.ones(n) / n
    l = np.ones(n) / n
    trace: list[float] = []
    for it in range(1, maxiter + 1):
        r = M @ r
        r /= r.sum()
        l = l @ M
        l /= l.sum()
        Br, lB = B @ r, l @ B
        lam = float(l @ Br) / float(l @ r)
        if lam <= 0:
            raise ThermoError("leading eigenvalue is zero: the graph has no cycle")
        res = max(np.abs(Br - lam * r).max() / (lam * r.max()), np.abs(lB - lam * l).max() / (lam * l.max()))
        trace.append(res)
        if res < tol:
            break
    else:
        raise ThermoError(f"power iteration did not converge in {maxiter} steps; last residuals {trace[-5:]}")
    if (r <= 0).any() or (l <= 0).any():
        raise ThermoError("Perron vectors not strictly positive: matrix is reducible")
    l = l / float(l @ r)
    return PerronData(lam, l, r, it, res)


# ---------------------------------------------------------------------------
# Markov measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """Stationary Markov measure ``mu[v_0 ... v_{n-1}] = p_{v_0} prod p_{v_i v_{i+1}}``.

    ``lam``, ``left`` and ``right`` are set for measures built from a
    Perron eigenproblem (MME or equilibrium measures); ``recoding`` is set
    when the measure lives on a block graph.
    """

    graph: DirectedGraph
    pi: np.ndarray
    P: np.ndarray
    entropy: float
    lam: float | None = None
    left: np.ndarray | None = None
    right: np.ndarray | None = None
    pressure: float | None = None
    recoding: BlockRecoding | None = None
    kind: str = "markov"

    def __post_init__(self) -> None:
        if abs(self.pi.sum() - 1) > 1e-12:
            raise ThermoError("initial distribution does not sum to 1")
        if np.abs(self.P.sum(axis=1) - 1).max() > 1e-12:
            raise ThermoError("transition matrix is not row-stochastic")
        if np.abs(self.pi @ self.P - self.pi).max() > 1e-10:
            raise ThermoError("initial distribution is not stationary")
        A = self.graph.adjacency() > 0
        if (self.P[~A] != 0).any():
            raise ThermoError("transition matrix charges a non-edge")

    @property
    def n(self) -> int:
        return self.graph.n

    def to_dict(self) -> dict:
        return {
            "p_v": [float(x) for x in self.pi],
            "p_uv": [[u, v, float(self.P[u, v])] for u, v in self.graph.edges()],
            "entropy": float(self.entropy),
        }


def entropy_of(pi: np.ndarray, P: np.ndarray) -> float:
    """``-sum_u p_u sum_v p_uv log p_uv``."""
    terms = [-pi[u] * P[u, v] * math.log(P[u, v]) for u, v in zip(*np.nonzero(P))]
    return math.fsum(terms)


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    n = P.shape[0]
    A = np.vstack([P.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0, None)
    return pi / pi.sum()


def markov_measure(g: DirectedGraph, P: np.ndarray) -> MarkovMeasure:
    """Stationary Markov measure of a row-stochastic ``P`` supported on the edges of ``g``."""
    P = np.asarray(P, dtype=float)
    pi = stationary_distribution(P)
    return MarkovMeasure(g, pi, P, entropy_of(pi, P))


def _require_finite_irreducible(g: DirectedGraph) -> None:
    if not g.is_simple:
        raise ThermoError("multigraphs are not supported here; use the block graph of the edge shift")
    if not is_irreducible(g):
        raise ThermoError("graph is not irreducible")


def _measure_from_weights(g: DirectedGraph, B: np.ndarray) -> tuple[PerronData, np.ndarray, np.ndarray]:
    pd = perron(B)
    P = B * pd.right[None, :] / (pd.lam * pd.right[:, None])
    # renormalize rows against round-off; the correction is below 1e-15
    P /= P.sum(axis=1, keepdims=True)
    pi = pd.left * pd.right
    pi /= pi.sum()
    return pd, pi, P


def parry_measure(g: DirectedGraph) -> MarkovMeasure:
    """Measure of maximal entropy: ``p_uv = r_v / (lam r_u)``, ``p_v = l_v r_v``."""
    _require_finite_irreducible(g)
    A = g.adjacency()
    pd, pi, P = _measure_from_weights(g, A)
    h = entropy_of(pi, P)
    if abs(h - math.log(pd.lam)) > 1e-10:
        raise ThermoError(f"entropy identity failed: {h} vs log lambda = {math.log(pd.lam)}")
    return MarkovMeasure(g, pi, P, h, pd.lam, pd.left, pd.right, math.log(pd.lam), kind="mme")


def _edge_matrix(rec: BlockRecoding) -> np.ndarray:
    n = rec.graph.n
    F = np.zeros((n, n))
    for (i, j), v in rec.edge_value.items():
        F[i, j] = v
    return F


def equilibrium_measure(g: DirectedGraph, phi: CylinderPotential) -> MarkovMeasure:
    """Equilibrium measure and pressure of a locally constant potential.

    ``B_uv = A_uv e^{phi(u, v)}`` on the block graph of ``phi``; the measure
    is ``p_uv = B_uv r_v / (lam r_u)``, ``p_v = l_v r_v`` and the pressure is
    ``log lam``. The variational identity ``h + mu(phi) = P`` is checked.
    """
    _require_finite_irreducible(g)
    rec = higher_block_recode(phi)
    G = rec.graph
    if phi.k > 2 and not is_irreducible(G):
        raise ThermoError("block graph is not irreducible")
    A = G.adjacency()
    F = _edge_matrix(rec)
    B = A * np.exp(F)
    pd, pi, P = _measure_from_weights(G, B)
    h = entropy_of(pi, P)
    mean_phi = math.fsum((pi[:, None] * P * F)[A > 0])
    pressure = math.log(pd.lam)
    if abs(h + mean_phi - pressure) > 1e-9:
        raise ThermoError(f"variational identity failed: {h} + {mean_phi} != {pressure}")
    return MarkovMeasure(G, pi, P, h, pd.lam, pd.left, pd.right, pressure,
                         rec if phi.k > 2 else None, kind="equilibrium")


def random_markov_measure(g: DirectedGraph, rng: np.random.Generator) -> MarkovMeasure:
    A = g.adjacency()
    W = A * rng.uniform(0.05, 1.0, size=A.shape)
    return markov_measure(g, W / W.sum(axis=1, keepdims=True))


# ---------------------------------------------------------------------------
# cylinders and observables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CylinderMass:
    value: float
    admissible: bool
    eigen_formula: float | None = None


def cylinder_mass(m: MarkovMeasure, word: Sequence[int]) -> CylinderMass:
    """``mu[v_0 ... v_{n-1}]`` as a product of transition probabilities.

    For the measure of maximal entropy the closed form
    ``lam^{-(n-1)} r_{v_{n-1}} / r_{v_0} p_{v_0}`` is reported too.
    """
    word = list(word)
    if not word:
        return CylinderMass(1.0, True, 1.0)
    if not is_admissible(m.graph, word):
        return CylinderMass(0.0, False, None)
    val = m.pi[word[0]]
    for a, b in zip(word, word[1:]):
        val *= m.P[a, b]
    eig = None
    if m.kind == "mme":
        eig = m.lam ** (-(len(word) - 1)) * m.right[word[-1]] / m.right[word[0]] * m.pi[word[0]]
    return CylinderMass(float(val), True, None if eig is None else float(eig))


def lift_measure(m: MarkovMeasure, w: int) -> tuple[MarkovMeasure, tuple[tuple[int, ...], ...]]:
    """The same measure as a Markov chain on ``w``-words (``w >= 1``)."""
    if w <= 1:
        return m, tuple((v,) for v in m.graph.vertices)
    words = tuple(admissible_words(m.graph, w))
    index = {x: i for i, x in enumerate(words)}
    edges = [(index[x[:-1]], index[x[1:]]) for x in admissible_words(m.graph, w + 1)]
    G = _from_edges(len(words), edges)
    P = np.zeros((len(words), len(words)))
    for i, j in edges:
        P[i, j] = m.P[words[j][-2], words[j][-1]]
    pi = np.array([cylinder_mass(m, x).value for x in words])
    pi /= pi.sum()
    return MarkovMeasure(G, pi, P, m.entropy), words


def _observable_on(m: MarkovMeasure, psi: CylinderPotential) -> CylinderPotential:
    """Express ``psi`` (given on the original graph) as a potential on ``m.graph``."""
    if psi.graph == m.graph:
        return psi
    rec = m.recoding
    if rec is None:
        raise ThermoError("observable is defined on a different graph than the measure")
    w = len(rec.words[0])
    j = max(psi.k - w + 1, 1)
    if psi.k <= w:
        return from_function(m.graph, 1, lambda b: psi.table[rec.words[b[0]][: psi.k]])

    def value(bs: tuple[int, ...]) -> float:
        sym = [rec.words[b][0] for b in bs] + list(rec.words[bs[-1]][1:])
        return psi.table[tuple(sym[: psi.k])]

    return from_function(m.graph, j, value)


def _edge_chain(m: MarkovMeasure, *obs: CylinderPotential):
    """Lift ``m`` so every observable becomes a function of one transition."""
    obs = tuple(_observable_on(m, o) for o in obs)
    k = max(max(o.k for o in obs), 2)
    lm, words = lift_measure(m, k - 1)
    mats = []
    for o in obs:
        o2 = o.extend(k)
        F = np.zeros((lm.n, lm.n))
        index = {x: i for i, x in enumerate(words)}
        for x, v in o2.table.items():
            F[index[x[:-1]], index[x[1:]]] = v
        mats.append(F)
    return lm, mats


def expectation(m: MarkovMeasure, psi: CylinderPotential) -> float:
    lm, (F,) = _edge_chain(m, psi)
    mask = lm.P > 0
    return math.fsum((lm.pi[:, None] * lm.P * F)[mask])


def correlations(m: MarkovMeasure, f: CylinderPotential, g: CylinderPotential | None = None,
                 nmax: int = 50) -> np.ndarray:
    """``C[n] = Cov(f, g o sigma^n)`` for ``n = 0..nmax``, computed exactly.

    The vector ``P^{n-1} G`` is re-centred after every step so that the
    invariant direction does not swamp geometrically small covariances.
    """
    g = f if g is None else g
    lm, (F, G) = _edge_chain(m, f, g)
    pi, P = lm.pi, lm.P
    mask = P > 0
    Ef = math.fsum((pi[:, None] * P * F)[mask])
    Eg = math.fsum((pi[:, None] * P * G)[mask])
    Fc = np.where(mask, F - Ef, 0.0)
    Gc = np.where(mask, G - Eg, 0.0)
    C = np.zeros(nmax + 1)
    C[0] = math.fsum((pi[:, None] * P * Fc * Gc)[mask])
    b = (pi[:, None] * P * Fc).sum(axis=0)
    x = (P * Gc).sum(axis=1)
    x -= pi @ x
    for n in range(1, nmax + 1):
        C[n] = math.fsum(b * x)
        x = P @ x
        x -= pi @ x
    return C


# ---------------------------------------------------------------------------
# transfer operator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransferOperator:
    """Normalized transfer operator ``(L f)(x) = sum_{y: sigma y = x} g(y) f(y)``.

    On functions of ``x_0``, ``L[x, y] = p_y p_{yx} / p_x``; equivalently
    ``g(y) = e^{phi(y)} h(y_0) / (lam h(x_0))`` with ``h`` the left Perron
    vector of the weight matrix.
    """

    matrix: np.ndarray
    lam: float | None
    h: np.ndarray | None
    nu: np.ndarray | None
    normalization_residual: float


def transfer_operator(m: MarkovMeasure) -> TransferOperator:
    L = (m.pi[:, None] * m.P).T / m.pi[:, None]
    res = float(np.abs(L.sum(axis=1) - 1).max())
    return TransferOperator(L, m.lam, m.left, m.right, res)


@dataclass(frozen=True)
class SpectralGap:
    leading: float
    rho: float
    period: int
    unit_eigenvalues: tuple[complex, ...]
    rho_p: float
    eigenvalues: tuple[complex, ...] = field(repr=False)


def spectral_gap(op: TransferOperator | MarkovMeasure, unit_tol: float = 1e-9) -> SpectralGap:
    """Subleading spectral radius of the normalized operator.

    Eigenvalues on the unit circle (the ``p``-th roots of unity for a
    period-``p`` measure) are set apart; ``rho`` is the largest remaining
    modulus and ``rho_p = rho**p`` is the gap of the ``p``-step operator.
    """
    if isinstance(op, MarkovMeasure):
        op = transfer_operator(op)
    ev = np.linalg.eigvals(op.matrix)
    order = np.argsort(-np.abs(ev), kind="stable")
    ev = ev[order]
    unit = tuple(complex(z) for z in ev if abs(abs(z) - 1) < unit_tol)
    rest = [abs(z) for z in ev if abs(abs(z) - 1) >= unit_tol]
    rho = float(max(rest)) if rest else 0.0
    if rho < 1e-13:
        rho = 0.0
    p = max(len(unit), 1)
    return SpectralGap(float(abs(ev[0])), rho, p, unit, rho**p, tuple(complex(z) for z in ev))


# ---------------------------------------------------------------------------
# pressure and variance
# ---------------------------------------------------------------------------


def _common_block(phi: CylinderPotential, psi: CylinderPotential):
    k = max(phi.k, psi.k)
    r1 = higher_block_recode(phi.extend(k))
    r2 = higher_block_recode(psi.extend(k))
    A = r1.graph.adjacency()
    return A, _edge_matrix(r1), _edge_matrix(r2)


def _log_lambda(A: np.ndarray, F: np.ndarray) -> float:
    return math.log(perron(A * np.exp(F)).lam)


@dataclass(frozen=True)
class PressureCurve:
    t: np.ndarray
    P: np.ndarray
    convex: bool
    min_second_difference: float
    max_third_difference: float
    flagged: tuple[float, ...]

    def to_csv(self) -> str:
        return "t,P\n" + "".join(f"{float(t)!r},{float(p)!r}\n" for t, p in zip(self.t, self.P))


def pressure_curve(g: DirectedGraph, phi: CylinderPotential | None, psi: CylinderPotential,
                   ts: Sequence[float]) -> PressureCurve:
    """``t -> P(phi + t psi) = log lam(t)`` on a grid, with convexity probe."""
    _require_finite_irreducible(g)
    phi = zero(g) if phi is None else phi
    A, F0, F1 = _common_block(phi, psi)
    ts = np.asarray(ts, dtype=float)
    vals, flagged = [], []
    for t in ts:
        try:
            vals.append(_log_lambda(A, F0 + t * F1))
        except ThermoError:
            vals.append(math.nan)
            flagged.append(float(t))
    P = np.array(vals)
    d2 = np.diff(P, 2) if len(P) >= 3 else np.zeros(0)
    d3 = np.diff(P, 3) if len(P) >= 4 else np.zeros(0)
    convex = bool((d2 >= -1e-9).all()) if d2.size else True
    return PressureCurve(ts, P, convex, float(d2.min()) if d2.size else 0.0,
                         float(np.abs(d3).max()) if d3.size else 0.0, tuple(flagged))


@dataclass(frozen=True)
class VarianceResult:
    sigma2: float
    method: str
    detail: dict


def green_kubo(m: MarkovMeasure, psi: CylinderPotential, tol: float = 1e-12) -> VarianceResult:
    """``(1/p)[Var(psi_p) + 2 sum_n Cov(psi_p, psi_p o sigma^{np})]`` with exact covariances.

    The number of terms ``N`` is chosen so that ``rho_p^N Var(psi_p) < tol``.
    """
    gap = spectral_gap(m)
    p = gap.period
    C0 = correlations(m, psi, nmax=2 * p)
    var_p = math.fsum(C0[abs(i - j)] for i in range(p) for j in range(p))
    if gap.rho_p == 0.0:
        N = 2
    else:
        N = max(2, int(math.ceil(math.log(tol / max(abs(var_p), 1e-300)) / math.log(gap.rho_p))) + 2)
    N = min(N, 200_000)
    C = correlations(m, psi, nmax=N * p + p)
    terms = [math.fsum(C[n * p + j - i] for i in range(p) for j in range(p)) for n in range(1, N + 1)]
    s2 = (var_p + 2 * math.fsum(terms)) / p
    return VarianceResult(max(s2, 0.0) if s2 > -1e-14 else s2, "green_kubo",
                          {"period": p, "terms": N, "rho_p": gap.rho_p, "var_p": var_p, "raw": s2})


def _centered_pressure(m: MarkovMeasure, psi: CylinderPotential):
    """``t -> P(phi + t psi)`` for the potential whose equilibrium measure is ``m``.

    The potential is recovered from the measure as ``log p_uv`` (cohomologous
    to the original one up to a constant), so only ``m`` is needed.
    """
    lm, (F,) = _edge_chain(m, psi)
    A = (lm.P > 0).astype(float)
    logP = np.where(A > 0, np.log(np.where(A > 0, lm.P, 1.0)), 0.0)
    return A, logP, F


def linear_response(m: MarkovMeasure, psi: CylinderPotential, steps: tuple[float, float] = (1e-2, 1e-3)) -> VarianceResult:
    """Second derivative of the pressure at 0 by centered differences with one Richardson step."""
    A, F0, F1 = _centered_pressure(m, psi)
    P0 = _log_lambda(A, F0)
    raws = []
    for h in steps:
        raws.append((_log_lambda(A, F0 + h * F1) - 2 * P0 + _log_lambda(A, F0 - h * F1)) / h**2)
    ratio = (steps[0] / steps[1]) ** 2
    rich = (ratio * raws[1] - raws[0]) / (ratio - 1)
    return VarianceResult(rich, "linear_response", {"raw": raws, "steps": list(steps)})


def asymptotic_variance(m: MarkovMeasure, psi: CylinderPotential, method: str = "green_kubo",
                        **kw) -> VarianceResult:
    """Asymptotic variance by ``green_kubo``, ``linear_response`` or ``empirical``.

    ``empirical`` forwards ``n``, ``R`` and ``seed`` to the sampler.
    """
    if method == "green_kubo":
        return green_kubo(m, psi, **kw)
    if method == "linear_response":
        return linear_response(m, psi, **kw)
    if method == "empirical":
        from .stochastics import empirical_variance

        return empirical_variance(m, psi, **kw)
    raise ThermoError(f"unknown variance method {method!r}")


# ---------------------------------------------------------------------------
# rate function
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateFunction:
    """Legendre transform ``I(s) = sup_t (s t - Lambda(t))`` of the centred log-moment function.

    ``domain`` is the measured radius around 0 on which
    ``1/(2 sigma^2) <= I'' <= 2/sigma^2``; ``c = domain / sigma^4``.
    """

    s: np.ndarray
    I: np.ndarray
    t_star: np.ndarray
    sigma2: float
    domain: float
    c: float
    curvature0: float
    checks: dict
    _A: np.ndarray = field(repr=False)
    _F0: np.ndarray = field(repr=False)
    _F1: np.ndarray = field(repr=False)
    _P0: float = field(repr=False)
    _tmax: float = field(repr=False)
    _grid: np.ndarray = field(repr=False)
    _grid_vals: np.ndarray = field(repr=False)

    def Lambda(self, t: float) -> float:
        return _log_lambda(self._A, self._F0 + t * self._F1) - self._P0

    def __call__(self, s: float) -> float:
        return _legendre(self.Lambda, s, self._tmax, self._grid, self._grid_vals)[0]

    def to_csv(self) -> str:
        return "s,I\n" + "".join(f"{float(s)!r},{float(i)!r}\n" for s, i in zip(self.s, self.I))


def _legendre(Lam, s: float, tmax: float, grid: np.ndarray | None = None,
              grid_vals: np.ndarray | None = None) -> tuple[float, float]:
    """``(sup_t (s t - Lam(t)), argmax)``: grid search then bounded refinement.

    ``grid_vals`` caches ``Lam`` on ``grid`` so repeated transforms reuse it.
    """
    if grid is None:
        grid = np.linspace(-tmax, tmax, 801)
    if grid_vals is None:
        grid_vals = np.array([Lam(t) for t in grid])
    vals = s * grid - grid_vals
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    if lo == hi:
        return float(vals[i]), float(grid[i])
    res = minimize_scalar(lambda t: -(s * t - Lam(t)), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    best = max(-res.fun, float(vals[i]))
    return float(best), float(res.x if -res.fun >= vals[i] else grid[i])


def rate_function(m: MarkovMeasure, psi: CylinderPotential, s_grid: Sequence[float] | None = None,
                  sigma2: float | None = None, tmax: float = 40.0) -> RateFunction:
    """Rate function of the centred observable ``psi - mu(psi)`` under ``m``.

    ``Lambda(t) = P(phi + t psi_bar) - P(phi)`` is evaluated through the
    Perron eigenvalue of the tilted transition matrix, and the transform is
    taken on a grid followed by bounded scalar refinement.
    """
    mean = expectation(m, psi)
    psi_c = psi.shift_by(-mean)
    A, F0, F1 = _centered_pressure(m, psi_c)
    P0 = _log_lambda(A, F0)
    if sigma2 is None:
        sigma2 = green_kubo(m, psi_c).sigma2
    if sigma2 <= 1e-12:
        raise ThermoError("rate function needs positive asymptotic variance")
    Lam = lambda t: _log_lambda(A, F0 + t * F1) - P0  # noqa: E731
    grid = np.linspace(-tmax, tmax, 801)
    grid_vals = np.array([Lam(t) for t in grid])

    def legendre(s: float) -> tuple[float, float]:
        return _legendre(Lam, s, tmax, grid, grid_vals)

    lo_s, hi_s = float(F1[A > 0].min()), float(F1[A > 0].max())
    if s_grid is None:
        s_grid = np.linspace(0.98 * lo_s, 0.98 * hi_s, 99)
    s_arr = np.asarray(s_grid, dtype=float)
    out = [legendre(s) for s in s_arr]
    I = np.array([o[0] for o in out])
    ts = np.array([o[1] for o in out])

    # curvature near 0 from a quadratic fit
    d = 0.05 * math.sqrt(sigma2)
    fit_s = np.linspace(-d, d, 11)
    fit_I = np.array([legendre(s)[0] for s in fit_s])
    curv0 = 2 * np.polyfit(fit_s, fit_I, 2)[0]

    # I''(s) = 1 / Lambda''(t) at s = Lambda'(t); walk t outward on each side
    # until 1/(2 sigma^2) <= I'' <= 2/sigma^2 first fails, then bisect in t
    hstep = 1e-3

    def s_and_ok(t: float) -> tuple[float, bool]:
        lp, l0, lm = Lam(t + hstep), Lam(t), Lam(t - hstep)
        L2 = (lp - 2 * l0 + lm) / hstep**2
        ipp = 1.0 / L2 if L2 > 0 else math.inf
        return (lp - lm) / (2 * hstep), 0.5 / sigma2 <= ipp <= 2.0 / sigma2

    span = min(-lo_s, hi_s)
    dt = 0.02 / math.sqrt(sigma2)
    side_domains = []
    for sign in (1.0, -1.0):
        good_t, good_s, bad_t = 0.0, 0.0, None
        for k in range(1, int(tmax / dt) + 1):
            t = sign * k * dt
            sv, ok = s_and_ok(t)
            if not ok or abs(sv) >= span:
                bad_t = t
                break
            good_t, good_s = t, abs(sv)
        if bad_t is not None:
            lo_t, hi_t = good_t, bad_t
            for _ in range(30):
                mid = 0.5 * (lo_t + hi_t)
                sv, ok = s_and_ok(mid)
                if ok and abs(sv) < span:
                    lo_t, good_s = mid, abs(sv)
                else:
                    hi_t = mid
        side_domains.append(min(good_s, span))
    domain = float(min(side_domains))
    I0 = legendre(0.0)[0]
    h = 1e-4
    I1 = (legendre(h)[0] - legendre(-h)[0]) / (2 * h)
    checks = {
        "I(0)": I0,
        "I'(0)": I1,
        "I''(0) fit": curv0,
        "1/sigma2": 1 / sigma2,
        "curvature_rel_err": abs(curv0 * sigma2 - 1),
        "convex": bool((np.diff(I, 2) >= -1e-9).all()) if len(I) >= 3 else True,
    }
    return RateFunction(s_arr, I, ts, sigma2, domain, domain / sigma2**2, curv0, checks,
                        A, F0, F1, P0, tmax, grid, grid_vals)


# ---------------------------------------------------------------------------
# return times
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReturnTail:
    tail: tuple
    theta: float
    fitted_ratio: float
    exact: bool


def return_time_tail(m: MarkovMeasure, a: int, N: int, exact: bool = False) -> ReturnTail:
    """``mu[inf{k >= 1: x_k = a} > n]`` for ``n = 0..N``.

    Computed as ``pi P[:, T] Q^{n-1} 1`` with ``T`` the vertices other than
    ``a`` and ``Q = P[T, T]``. With ``exact`` the float entries are
    converted to Fractions and the recursion is carried out exactly.
    ``theta`` is the spectral radius of ``Q``.
    """
    if not 0 <= a < m.n:
        raise ThermoError(f"vertex {a} not in graph")
    if m.pi[a] <= 0:
        raise ThermoError(f"vertex {a} has zero mass")
    T = [v for v in range(m.n) if v != a]
    Q = m.P[np.ix_(T, T)]
    theta = float(max(abs(np.linalg.eigvals(Q)))) if T else 0.0
    if exact:
        pi = [Fraction(float(x)) for x in m.pi]
        P = [[Fraction(float(x)) for x in row] for row in m.P]
        vec = [sum((pi[u] * P[u][v] for u in range(m.n)), Fraction(0)) for v in T]
        tail: list = [Fraction(1)]
        for _ in range(N):
            tail.append(sum(vec, Fraction(0)))
            vec = [sum((vec[i] * P[T[i]][T[j]] for i in range(len(T))), Fraction(0)) for j in range(len(T))]
    else:
        vec = m.pi @ m.P[:, T] if T else np.zeros(0)
        tail = [1.0]
        for _ in range(N):
            tail.append(math.fsum(vec))
            vec = vec @ Q
    fl = [float(x) for x in tail]
    ratios = [fl[n + 1] / fl[n] for n in range(len(fl) - 1) if fl[n] > 0 and fl[n + 1] > 0]
    fitted = ratios[-1] if ratios else 0.0
    if theta >= 1:
        raise ThermoError("taboo spectral radius is not below 1")
    return ReturnTail(tuple(tail), theta, fitted, exact)


# ---------------------------------------------------------------------------
# periodic orbits
# ---------------------------------------------------------------------------


def _is_primitive_min_rotation(w: tuple[int, ...]) -> bool:
    q = len(w)
    for s in range(1, q):
        r = w[s:] + w[:s]
        if r < w or r == w:
            return False
    return True


def periodic_orbits(g: DirectedGraph, L: int):
    """Primitive periodic orbits of length ``<= L``, each as its least rotation."""
    for q in range(1, L + 1):
        for start in g.vertices:
            stack = [(start,)]
            while stack:
                w = stack.pop()
                if len(w) == q:
                    if start in g.succ[w[-1]] and _is_primitive_min_rotation(w):
                        yield w
                    continue
                for v in g.succ[w[-1]]:
                    if v >= start:
                        stack.append(w + (v,))


@dataclass(frozen=True)
class ObstructionScan:
    orbits: tuple[tuple[tuple[int, ...], float], ...]
    max_abs: float
    mean: float


def coboundary_obstruction_scan(m: MarkovMeasure, psi: CylinderPotential, L: int) -> ObstructionScan:
    """``psi_q(x)/q - mu(psi)`` for every primitive periodic orbit of period ``q <= L``."""
    if L > 12:
        raise ThermoError("orbit scan limited to periods <= 12")
    psi = _observable_on(m, psi)
    mean = expectation(m, psi)
    out = []
    for w in periodic_orbits(m.graph, L):
        out.append((w, psi.birkhoff(w, periodic=True) / len(w) - mean))
    mx = max((abs(v) for _, v in out), default=0.0)
    return ObstructionScan(tuple(out), mx, mean)


# ---------------------------------------------------------------------------
# two-sided observables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SinaiReduction:
    """One-sided version ``psi o sigma^m`` of a potential on coordinates ``-m..m``.

    Birkhoff sums of the two differ by at most ``bound = 2 m sup|psi|``.
    """

    one_sided: CylinderPotential
    m: int
    bound: float

    def telescope_gap(self, path: Sequence[int], n: int) -> float:
        """``|psi_n(x) - psi~_n(x)|`` for ``path = x_{-m} ... x_{n+2m-1}``."""
        k = 2 * self.m + 1
        two = math.fsum(self.one_sided.table[tuple(path[j: j + k])] for j in range(n))
        one = math.fsum(self.one_sided.table[tuple(path[self.m + j: self.m + j + k])] for j in range(n))
        return abs(two - one)


def sinai_reduction(g: DirectedGraph, m: int, table: dict[tuple[int, ...], float]) -> SinaiReduction:
    """``table`` maps words ``x_{-m} ... x_m`` to values of a two-sided potential."""
    if m < 0:
        raise ThermoError("m must be >= 0")
    try:
        one = CylinderPotential(g, 2 * m + 1, dict(table))
    except PotentialError as exc:
        raise ThermoError(str(exc)) from exc
    return SinaiReduction(one, m, 2 * m * one.sup_norm)


def block_counts(g: DirectedGraph, k: int) -> tuple[int, int]:
    """Vertices and edges of the ``k``-block recoding (``(k-1)``-words, ``k``-words)."""
    if k <= 2:
        return g.n, len(g.edges())
    return (sum(1 for _ in admissible_words(g, k - 1)), sum(1 for _ in admissible_words(g, k)))

