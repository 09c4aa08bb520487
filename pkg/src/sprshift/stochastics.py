"""Sampling stationary Markov chains and checking limit laws of Birkhoff sums.

Random numbers come from Philox4x64-10, a counter-based generator: the
uniform for step ``i`` of replica ``r`` is a pure function of
``(seed, tag, r, i)``, so results do not depend on thread count or on the
order in which replicas are processed.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Any, Sequence

import numba
import numpy as np
from numba import njit, prange
from scipy import stats

from .potential import CylinderPotential, admissible_words, indicator
from .thermo import (
    MarkovMeasure,
    VarianceResult,
    _edge_chain,
    _legendre,
    cylinder_mass,
    entropy_of,
    equilibrium_measure,
    expectation,
    green_kubo,
    parry_measure,
    perron,
    return_time_tail,
)

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the workqueue layer needs no TBB or OpenMP runtime and is deterministic here
    numba.config.THREADING_LAYER = "workqueue"

STORE_LIMIT = 50_000_000  # symbols kept in memory before switching to streaming

# ---------------------------------------------------------------------------
# Philox4x64-10
# ---------------------------------------------------------------------------

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_TWO53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def _mulhilo(a, b):
    a_lo = a & _MASK32
    a_hi = a >> _S32
    b_lo = b & _MASK32
    b_hi = b >> _S32
    lo_lo = a_lo * b_lo
    hi_lo = a_hi * b_lo
    lo_hi = a_lo * b_hi
    hi_hi = a_hi * b_hi
    cross = (lo_lo >> _S32) + (hi_lo & _MASK32) + lo_hi
    hi = hi_hi + (hi_lo >> _S32) + (cross >> _S32)
    lo = a * b
    return hi, lo


@njit(cache=True)
def philox4x64(c0, c1, c2, c3, k0, k1):
    """Ten rounds of Philox4x64 on counter ``(c0..c3)`` with key ``(k0, k1)``."""
    for _ in range(10):
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = k0 + _W0
        k1 = k1 + _W1
    return c0, c1, c2, c3


@njit(cache=True)
def philox_block(block, replica, seed, tag):
    return philox4x64(np.uint64(block), np.uint64(replica), np.uint64(0), np.uint64(0),
                      np.uint64(seed), np.uint64(tag))


def uniforms(seed: int, replica: int, count: int, tag: int = 0) -> np.ndarray:
    """The first ``count`` uniforms of a replica stream (for inspection and tests)."""
    out = np.empty(count)
    for b in range((count + 3) // 4):
        words = philox_block(b, replica, seed, tag)
        for j in range(4):
            if 4 * b + j < count:
                out[4 * b + j] = (int(words[j]) >> 11) * _TWO53
    return out


# ---------------------------------------------------------------------------
# chain tables and kernels
# ---------------------------------------------------------------------------


def _tables(m: MarkovMeasure):
    n = m.n
    deg = max(len(s) for s in m.graph.succ)
    succ = np.full((n, deg), -1, dtype=np.int64)
    cdf = np.full((n, deg), 2.0)
    for u in range(n):
        vs = list(m.graph.succ[u])
        c = np.cumsum([m.P[u, v] for v in vs])
        c[-1] = 1.0
        succ[u, : len(vs)] = vs
        cdf[u, : len(vs)] = c
    pcdf = np.cumsum(m.pi)
    pcdf[-1] = 1.0
    return pcdf, succ, cdf


@njit(cache=True, inline="always")
def _pick(cdf_row, u):
    j = 0
    while u >= cdf_row[j]:
        j += 1
    return j


@njit(cache=True, inline="always")
def _uniform(words, j):
    return np.float64(words[j] >> _S11) * _TWO53


@njit(cache=True, parallel=True)
def _sample_paths(pcdf, succ, cdf, n, R, seed, tag, out):
    for r in prange(R):
        w0, w1, w2, w3 = philox_block(0, r, seed, tag)
        words = np.empty(4, dtype=np.uint64)
        words[0] = w0; words[1] = w1; words[2] = w2; words[3] = w3
        x = _pick(pcdf, _uniform(words, 0))
        out[r, 0] = x
        for i in range(1, n + 1):
            j = i & 3
            if j == 0:
                w0, w1, w2, w3 = philox_block(i >> 2, r, seed, tag)
                words[0] = w0; words[1] = w1; words[2] = w2; words[3] = w3
            x = succ[x, _pick(cdf[x], _uniform(words, j))]
            out[r, i] = x


@njit(cache=True, parallel=True)
def _stream_functionals(pcdf, succ, cdf, F, n, R, seed, tag, out):
    """Per replica: S_n, #{k: S_k > 0}, max_k S_k, sum of trapezoids, max_k |S_k|."""
    for r in prange(R):
        w0, w1, w2, w3 = philox_block(0, r, seed, tag)
        words = np.empty(4, dtype=np.uint64)
        words[0] = w0; words[1] = w1; words[2] = w2; words[3] = w3
        x = _pick(pcdf, _uniform(words, 0))
        s = 0.0
        pos = 0
        mx = -np.inf
        trap = 0.0
        amax = 0.0
        for i in range(1, n + 1):
            j = i & 3
            if j == 0:
                w0, w1, w2, w3 = philox_block(i >> 2, r, seed, tag)
                words[0] = w0; words[1] = w1; words[2] = w2; words[3] = w3
            y = succ[x, _pick(cdf[x], _uniform(words, j))]
            prev = s
            s += F[x, y]
            x = y
            if s > 0:
                pos += 1
            if s > mx:
                mx = s
            if abs(s) > amax:
                amax = abs(s)
            trap += 0.5 * (prev + s)
        out[r, 0] = s
        out[r, 1] = pos
        out[r, 2] = mx
        out[r, 3] = trap
        out[r, 4] = amax


@njit(cache=True, parallel=True)
def _stream_lil(pcdf, succ, cdf, F, n, R, seed, tag, sigma, c, k0, checkpoints, out, fr):
    """Running LIL maximum over ``k >= k0`` and Strassen fractions at checkpoints."""
    nc = checkpoints.shape[0]
    for r in prange(R):
        w0, w1, w2, w3 = philox_block(0, r, seed, tag)
        words = np.empty(4, dtype=np.uint64)
        words[0] = w0; words[1] = w1; words[2] = w2; words[3] = w3
        x = _pick(pcdf, _uniform(words, 0))
        s = 0.0
        above = 0
        lil = -np.inf
        ci = 0
        for i in range(1, n + 1):
            j = i & 3
            if j == 0:
                w0, w1, w2, w3 = philox_block(i >> 2, r, seed, tag)
                words[0] = w0; words[1] = w1; words[2] = w2; words[3] = w3
            y = succ[x, _pick(cdf[x], _uniform(words, j))]
            s += F[x, y]
            x = y
            if i >= 3:
                env = sigma * math.sqrt(2.0 * i * math.log(math.log(i)))
                if s > c * env:
                    above += 1
                if i >= k0:
                    v = s / env
                    if v > lil:
                        lil = v
            if ci < nc and i == checkpoints[ci]:
                fr[r, ci] = above / i
                ci += 1
        out[r, 0] = lil
        out[r, 1] = above / n
        out[r, 2] = s


@njit(cache=True, parallel=True)
def _stream_first_hit(pcdf, succ, cdf, a, N, R, seed, tag, out):
    """``inf{k >= 1: x_k = a}`` capped at ``N + 1``."""
    for r in prange(R):
        w0, w1, w2, w3 = philox_block(0, r, seed, tag)
        words = np.empty(4, dtype=np.uint64)
        words[0] = w0; words[1] = w1; words[2] = w2; words[3] = w3
        x = _pick(pcdf, _uniform(words, 0))
        hit = N + 1
        for i in range(1, N + 1):
            j = i & 3
            if j == 0:
                w0, w1, w2, w3 = philox_block(i >> 2, r, seed, tag)
                words[0] = w0; words[1] = w1; words[2] = w2; words[3] = w3
            x = succ[x, _pick(cdf[x], _uniform(words, j))]
            if x == a:
                hit = i
                break
        out[r] = hit


@njit(cache=True, parallel=True)
def _stream_tilted(pcdf, succ, cdf, F, logratio, logratio0, n, R, seed, tag, out):
    """Birkhoff sum and log likelihood ratio of the target against the sampling chain."""
    for r in prange(R):
        w0, w1, w2, w3 = philox_block(0, r, seed, tag)
        words = np.empty(4, dtype=np.uint64)
        words[0] = w0; words[1] = w1; words[2] = w2; words[3] = w3
        x = _pick(pcdf, _uniform(words, 0))
        s = 0.0
        lr = logratio0[x]
        for i in range(1, n + 1):
            j = i & 3
            if j == 0:
                w0, w1, w2, w3 = philox_block(i >> 2, r, seed, tag)
                words[0] = w0; words[1] = w1; words[2] = w2; words[3] = w3
            y = succ[x, _pick(cdf[x], _uniform(words, j))]
            s += F[x, y]
            lr += logratio[x, y]
            x = y
        out[r, 0] = s
        out[r, 1] = lr


def _set_threads() -> None:
    cap = os.environ.get("SPR_SHIFT_THREADS")
    if cap:
        numba.set_num_threads(max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS)))


# ---------------------------------------------------------------------------
# batches
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TrajectoryBatch:
    """``R`` stationary chains with ``n`` transitions each (``n + 1`` symbols).

    Either ``paths`` holds the symbols, or ``functionals`` holds per-replica
    streamed values of the registered observable, with columns
    ``S_n, #{S_k > 0}, max S_k, sum of trapezoids, max |S_k|``.
    """

    measure: MarkovMeasure
    n: int
    R: int
    seed: int
    paths: np.ndarray | None = None
    observable: CylinderPotential | None = None
    functionals: np.ndarray | None = None
    tag: int = 0

    @property
    def meta(self) -> dict[str, int]:
        return {"n": self.n, "R": self.R, "seed": self.seed}

    def birkhoff_sums(self) -> np.ndarray:
        if self.functionals is not None:
            return self.functionals[:, 0]
        raise ValueError("batch was sampled without a streamed observable")


def sample(m: MarkovMeasure, n: int, R: int, seed: int, observable: CylinderPotential | None = None,
           store: bool | None = None, tag: int = 0) -> TrajectoryBatch:
    """Sample ``R`` independent stationary chains of ``n`` steps.

    Paths are stored when ``store`` is true (default: when ``(n + 1) R`` is
    at most ``STORE_LIMIT``). With an observable of range at most 2 the
    Birkhoff functionals are streamed instead of storing paths.
    """
    if n < 1 or R < 1:
        raise ValueError("n and R must be >= 1")
    _set_threads()
    pcdf, succ, cdf = _tables(m)
    if store is None:
        store = observable is None and (n + 1) * R <= STORE_LIMIT
    if store:
        if (n + 1) * R > STORE_LIMIT:
            raise ValueError(f"refusing to store {(n + 1) * R} symbols; stream an observable instead")
        out = np.empty((R, n + 1), dtype=np.int64)
        _sample_paths(pcdf, succ, cdf, n, R, seed, tag, out)
        return TrajectoryBatch(m, n, R, seed, paths=out, observable=observable, tag=tag)
    if observable is None:
        raise ValueError("streaming needs an observable")
    F = _transition_values(m, observable)
    out = np.empty((R, 5))
    _stream_functionals(pcdf, succ, cdf, F, n, R, seed, tag, out)
    return TrajectoryBatch(m, n, R, seed, observable=observable, functionals=out, tag=tag)


def _transition_values(m: MarkovMeasure, psi: CylinderPotential) -> np.ndarray:
    lm, (F,) = _edge_chain(m, psi)
    if lm.n != m.n:
        raise ValueError("streamed observables must have range at most 2")
    return F


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StatReport:
    """``passed`` is ``|estimate - reference| <= tolerance``."""

    name: str
    estimate: float
    reference: float
    tolerance: float
    provenance: str
    se: float | None = None
    meta: dict[str, Any] = field(default_factory=dict)
    detail: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(abs(self.estimate - self.reference) <= self.tolerance)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name, "estimate": _num(self.estimate), "reference": _num(self.reference),
            "tolerance": _num(self.tolerance), "se": _num(self.se), "passed": self.passed,
            "provenance": self.provenance, "meta": self.meta,
            "detail": {k: _num(v) for k, v in self.detail.items()},
        }


def _num(x: Any) -> Any:
    if isinstance(x, (np.floating, np.integer)):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_num(v) for v in x]
    return x


def _require_sigma(sigma: float) -> None:
    if not sigma > 0:
        raise ValueError("sigma must be positive for this check")


def empirical_variance(m: MarkovMeasure, psi: CylinderPotential, n: int = 10_000, R: int = 10_000,
                       seed: int = 0) -> VarianceResult:
    """``Var(psi_n) / n`` over replicas with its standard error."""
    mean = expectation(m, psi)
    b = sample(m, n, R, seed, observable=psi.shift_by(-mean))
    S = b.birkhoff_sums()
    v = float(np.var(S, ddof=1)) / n
    m4 = float(np.mean((S - S.mean()) ** 4)) / n**2
    se = math.sqrt(max(m4 - v**2, 0.0) / R)
    return VarianceResult(v, "empirical", {"se": se, **b.meta})


def clt_check(batch: TrajectoryBatch, sigma: float, alpha: float = 0.01) -> list[StatReport]:
    """KS distance of ``psi_n / (sigma sqrt n)`` to N(0, 1), plus moments up to order 4."""
    _require_sigma(sigma)
    z = batch.birkhoff_sums() / (sigma * math.sqrt(batch.n))
    D = float(stats.kstest(z, "norm").statistic)
    crit = float(stats.kstwo.ppf(1 - alpha, batch.R))
    out = [StatReport("clt_ks", D, 0.0, crit, f"KS critical value at level {alpha}", meta=batch.meta)]
    gauss = {1: 0.0, 2: 1.0, 3: 0.0, 4: 3.0}
    gauss_2k = {1: 1.0, 2: 3.0, 3: 15.0, 4: 105.0}
    for k in (1, 2, 3, 4):
        mk = float(np.mean(z**k))
        se = math.sqrt((gauss_2k[k] - gauss[k] ** 2) / batch.R)
        out.append(StatReport(f"clt_moment_{k}", mk, gauss[k], 5 * se, "Gaussian moment", se=se, meta=batch.meta))
    return out


def degenerate_clt_check(batch: TrajectoryBatch, bound: float) -> StatReport:
    """For zero variance: ``max |psi_n| / sqrt n`` stays below ``bound / sqrt n``."""
    est = float(np.abs(batch.birkhoff_sums()).max()) / math.sqrt(batch.n)
    return StatReport("clt_degenerate", est, 0.0, bound / math.sqrt(batch.n), "coboundary bound", meta=batch.meta)


def arcsine_cdf(s: np.ndarray | float) -> np.ndarray | float:
    return 2 / np.pi * np.arcsin(np.sqrt(s))


def arcsine_check(batch: TrajectoryBatch, s_grid: Sequence[float] | None = None, tol: float = 0.02) -> StatReport:
    """Sup distance between the law of the fraction of positive partial sums and the arcsine law."""
    s_grid = np.linspace(0.0, 1.0, 101) if s_grid is None else np.asarray(s_grid)
    d = np.sort(batch.functionals[:, 1] / batch.n)
    emp = np.searchsorted(d, s_grid, side="right") / batch.R
    ref = arcsine_cdf(s_grid)
    dev = np.abs(emp - ref)
    spot = {f"F({s:g})": float(e) for s, e in zip(s_grid, emp) if s in (0.25, 0.5, 1.0)}
    return StatReport("arcsine", float(dev.max()), 0.0, tol, "2/pi arcsin(sqrt s)", meta=batch.meta,
                      detail={"argmax_s": float(s_grid[int(dev.argmax())]), **spot})


def records_reference(s: np.ndarray | float, sigma: float) -> np.ndarray | float:
    """``sqrt(2 / (pi sigma^2)) int_s^inf e^{-t^2 / 2 sigma^2} dt = 2 (1 - Phi(s / sigma))``."""
    return 2 * stats.norm.sf(np.asarray(s) / sigma)


def records_check(batch: TrajectoryBatch, sigma: float, s_grid: Sequence[float] | None = None,
                  tol: float = 0.02) -> StatReport:
    _require_sigma(sigma)
    s_grid = np.linspace(0.0, 3 * sigma, 61) if s_grid is None else np.asarray(s_grid)
    mx = batch.functionals[:, 2] / math.sqrt(batch.n)
    emp = np.array([(mx >= s).mean() for s in s_grid])
    dev = np.abs(emp - records_reference(s_grid, sigma))
    return StatReport("records", float(dev.max()), 0.0, tol, "half-normal law of the maximum",
                      meta=batch.meta, detail={"argmax_s": float(s_grid[int(dev.argmax())])})


def fclt_check(batch: TrajectoryBatch, sigma: float, alpha: float = 0.01) -> list[StatReport]:
    """Time average of the interpolated path against N(0, sigma^2/3); its sup against the records law."""
    _require_sigma(sigma)
    avg = batch.functionals[:, 3] / (batch.n * math.sqrt(batch.n))
    D = float(stats.kstest(avg / (sigma / math.sqrt(3)), "norm").statistic)
    crit = float(stats.kstwo.ppf(1 - alpha, batch.R))
    var_ratio = float(np.var(avg, ddof=1)) / (sigma**2 / 3)
    rep = StatReport("fclt_time_average", D, 0.0, crit, "int_0^1 B ~ N(0, 1/3)", meta=batch.meta,
                     detail={"variance_ratio": var_ratio})
    sup = records_check(batch, sigma)
    return [rep, StatReport("fclt_sup", sup.estimate, 0.0, sup.tolerance, sup.provenance, meta=batch.meta)]


def laplace_check(batch: TrajectoryBatch, sigma: float, zs: Sequence[complex] = (0.5, -0.5, 1j, -1j),
                  tol: float = 0.02) -> StatReport:
    """``E exp(z psi_n / sqrt n)`` against ``exp(sigma^2 z^2 / 2)``."""
    x = batch.birkhoff_sums() / math.sqrt(batch.n)
    devs = {}
    for z in zs:
        emp = complex(np.mean(np.exp(complex(z) * x)))
        devs[str(z)] = abs(emp - complex(np.exp(sigma**2 * complex(z) ** 2 / 2)))
    return StatReport("laplace", max(devs.values()), 0.0, tol, "Gaussian Laplace transform",
                      meta=batch.meta, detail=devs)


def strassen_reference(c: float) -> float:
    return 1 - math.exp(-4 * (c**-2 - 1))


def lil_strassen_check(m: MarkovMeasure, psi: CylinderPotential, sigma: float, c: float = 0.5,
                       n: int = 10_000_000, R: int = 100, seed: int = 0, k0: int = 1000,
                       tol: float = 0.1) -> list[StatReport]:
    """Running LIL maximum and Strassen frequency above ``c sigma sqrt(2k log log k)``.

    The frequency is averaged over ``R`` trajectories at the fixed horizon
    ``n``; the running maximum over checkpoints is reported alongside.
    """
    _require_sigma(sigma)
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    if n < 10_000_000:
        raise ValueError("the LIL check needs n >= 10^7")
    _set_threads()
    mean = expectation(m, psi)
    F = _transition_values(m, psi.shift_by(-mean))
    pcdf, succ, cdf = _tables(m)
    checkpoints = np.unique(np.logspace(4, math.log10(n), 25).astype(np.int64))
    out = np.empty((R, 3))
    fr = np.zeros((R, len(checkpoints)))
    _stream_lil(pcdf, succ, cdf, F, n, R, seed, 0, sigma, c, k0, checkpoints, out, fr)
    meta = {"n": n, "R": R, "seed": seed}
    lil = out[:, 0]
    frac = float(out[:, 1].mean())
    se = float(out[:, 1].std(ddof=1) / math.sqrt(R))
    lil_rep = StatReport("lil_max", float(np.median(lil)), 1.0, 0.3, "law of the iterated logarithm",
                         meta=meta, detail={"min": float(lil.min()), "max": float(lil.max()), "k0": k0})
    str_rep = StatReport("strassen_fraction", frac, strassen_reference(c), tol,
                         "Strassen frequency 1 - exp(-4(c^-2 - 1))", se=se, meta=meta,
                         detail={"c": c, "mean_of_running_max": float(fr.max(axis=1).mean())})
    return [lil_rep, str_rep]


# ---------------------------------------------------------------------------
# large deviations
# ---------------------------------------------------------------------------


def _lattice_form(values: np.ndarray) -> tuple[float, float] | None:
    """``(alpha, beta)`` with every value equal to ``alpha j + beta`` for an integer ``j >= 0``."""
    vals = np.unique(values)
    beta = float(vals[0])
    if len(vals) == 1:
        return 1.0, beta
    diffs = vals[1:] - beta
    alpha = float(diffs.min())
    ratios = diffs / alpha
    if np.allclose(ratios, np.round(ratios), atol=1e-9):
        return alpha, beta
    return None


def exact_upper_tail(m: MarkovMeasure, psi: CylinderPotential, a: float, ns: Sequence[int]) -> dict[int, float]:
    """``log mu[psi_n >= n a]`` by dynamic programming on state x integer lattice.

    Requires ``psi`` to take values on a lattice ``alpha j + beta``.
    """
    lm, (F,) = _edge_chain(m, psi)
    mask = lm.P > 0
    form = _lattice_form(F[mask])
    if form is None:
        raise ValueError("observable is not lattice-valued")
    alpha, beta = form
    J = np.where(mask, np.round((F - beta) / alpha), 0).astype(np.int64)
    jmax = int(J.max())
    N = max(ns)
    want = set(ns)
    dp = np.zeros((lm.n, N * jmax + 1))
    dp[:, 0] = lm.pi
    logscale = 0.0
    out: dict[int, float] = {}
    edges = [(u, v, J[u, v], lm.P[u, v]) for u, v in zip(*np.nonzero(mask))]
    for n in range(1, N + 1):
        nxt = np.zeros_like(dp)
        top = (n - 1) * jmax + 1
        for u, v, j, p in edges:
            nxt[v, j: j + top] += p * dp[u, :top]
        s = nxt.max()
        dp = nxt / s
        logscale += math.log(s)
        if n in want:
            jthr = math.ceil((n * a - n * beta) / alpha - 1e-9)
            tail = dp[:, max(jthr, 0):].sum()
            out[n] = math.log(tail) + logscale if tail > 0 else -math.inf
    return out


def ldp_empirical(m: MarkovMeasure, psi: CylinderPotential, rate, a: float,
                  ns: Sequence[int] = (64, 128, 256, 512, 1024), tol_rel: float = 0.1,
                  R: int = 20_000, seed: int = 0) -> StatReport:
    """Decay slope of ``log mu[psi_n >= n a]`` against ``-I(a)``.

    Exact lattice dynamic programming when possible; otherwise importance
    sampling from the tilted equilibrium measure with the exact likelihood
    ratio of the two chains.
    """
    if not 0 < abs(a) <= rate.domain:
        raise ValueError(f"a = {a} outside the rate-function domain (0, {rate.domain:.4g}] = (0, c sigma^4)")
    mean = expectation(m, psi)
    psi_c = psi.shift_by(-mean)
    ns = sorted(ns)
    try:
        logs = exact_upper_tail(m, psi_c, a, ns)
        method = "exact lattice"
    except ValueError:
        logs = _tilted_tail(m, psi_c, a, ns, rate, R, seed)
        method = "importance sampling"
    x = np.array(ns, dtype=float)
    y = np.array([logs[n] for n in ns])
    slope = float(np.polyfit(x, y, 1)[0])
    ref = -rate(a)
    return StatReport("ldp_slope", slope, ref, tol_rel * abs(ref), f"-I(a) ({method})",
                      meta={"ns": list(ns), "a": a}, detail={"log_tail": [float(v) for v in y]})


def _tilted_tail(m, psi_c, a, ns, rate, R, seed):
    t = _legendre(rate.Lambda, a, rate._tmax, rate._grid, rate._grid_vals)[1]
    lm, (F, ) = _edge_chain(m, psi_c)
    mask = lm.P > 0
    B = np.where(mask, lm.P * np.exp(t * F), 0.0)
    pd = perron(B)
    Pt = B * pd.right[None, :] / (pd.lam * pd.right[:, None])
    Pt /= Pt.sum(axis=1, keepdims=True)
    pit = pd.left * pd.right
    pit /= pit.sum()
    logratio = np.where(mask, np.log(np.where(mask, lm.P, 1)) - np.log(np.where(mask, Pt, 1)), 0.0)
    logratio0 = np.log(lm.pi) - np.log(pit)
    tilted = MarkovMeasure(lm.graph, pit, Pt, entropy_of(pit, Pt))
    pcdf, succ, cdf = _tables(tilted)
    out = {}
    for n in ns:
        res = np.empty((R, 2))
        _stream_tilted(pcdf, succ, cdf, F, logratio, logratio0, n, R, seed, n, res)
        w = np.where(res[:, 0] >= n * a, np.exp(res[:, 1] + 0.0), 0.0)
        est = float(w.mean())
        out[n] = math.log(est) if est > 0 else -math.inf
    return out


# ---------------------------------------------------------------------------
# return times, frequencies, effective ergodicity
# ---------------------------------------------------------------------------


def empirical_tail_check(m: MarkovMeasure, a: int, R: int = 1_000_000, N: int = 20, seed: int = 0,
                         n_se: float = 3.0) -> StatReport:
    """Empirical ``P[tau_a > n]`` over ``R`` independent stationary starts vs the exact tail."""
    _set_threads()
    exact = return_time_tail(m, a, N).tail
    pcdf, succ, cdf = _tables(m)
    hits = np.empty(R, dtype=np.int64)
    _stream_first_hit(pcdf, succ, cdf, a, N, R, seed, 1, hits)
    worst, worst_n = 0.0, 0
    for n in range(1, N + 1):
        p = float(exact[n])
        emp = float((hits > n).mean())
        se = math.sqrt(max(p * (1 - p), 1e-300) / R)
        z = abs(emp - p) / se if se > 0 else (0.0 if emp == p else math.inf)
        if z > worst:
            worst, worst_n = z, n
    return StatReport("return_tail", worst, 0.0, n_se, "taboo-matrix tail, binomial s.e. units",
                      meta={"R": R, "N": N, "seed": seed}, detail={"worst_n": worst_n})


def cylinder_frequency_check(batch: TrajectoryBatch, length: int = 3, n_se: float = 4.0,
                             batches: int = 100) -> StatReport:
    """Largest standardized gap between empirical word frequencies and cylinder masses.

    Standard errors come from batch means along each path.
    """
    if batch.paths is None:
        raise ValueError("cylinder frequencies need stored paths")
    m = batch.measure
    words = list(admissible_words(m.graph, length))
    worst = 0.0
    for path in batch.paths:
        L = len(path) - length + 1
        codes = np.zeros(L, dtype=np.int64)
        base = m.n
        for j in range(length):
            codes = codes * base + path[j: j + L]
        size = L // batches
        for w in words:
            code = 0
            for s in w:
                code = code * base + s
            hit = (codes[: size * batches] == code).reshape(batches, size).mean(axis=1)
            est = hit.mean()
            se = hit.std(ddof=1) / math.sqrt(batches)
            ref = cylinder_mass(m, w).value
            z = abs(est - ref) / se if se > 0 else (0.0 if est == ref else math.inf)
            worst = max(worst, z)
    return StatReport("cylinder_frequency", worst, 0.0, n_se, "cylinder masses, batch-means s.e. units",
                      meta=batch.meta)


@dataclass(frozen=True)
class ErgodicityScan:
    t: np.ndarray
    delta: np.ndarray
    dh: np.ndarray
    ratio: np.ndarray
    K: float
    sigma2: float


def effective_ergodicity_scan(g, psi: CylinderPotential, ts: Sequence[float], sharp_t: float = 0.05,
                              tol: float = 0.05) -> tuple[list[StatReport], ErgodicityScan]:
    """Mean shift against entropy drop along the tilted family ``nu_t`` of ``t psi``.

    Reports the sharp ratio ``Delta / sqrt(2 sigma^2 dh)`` at ``+-sharp_t``
    and the bound ``Delta <= K sqrt(dh)`` with ``K`` fitted on ``ts`` and
    verified on a five-times finer grid (1% slack).
    """
    mu = parry_measure(g)
    mean_mu = expectation(mu, psi)
    sigma2 = green_kubo(mu, psi).sigma2

    def point(t: float) -> tuple[float, float]:
        if t == 0:
            return 0.0, 0.0
        nu = equilibrium_measure(g, psi.scale(t))
        return abs(mean_mu - expectation(nu, psi)), mu.entropy - nu.entropy

    ts = np.asarray(ts, dtype=float)
    pts = np.array([point(t) for t in ts])
    delta, dh = pts[:, 0], pts[:, 1]
    reports = []
    if sigma2 <= 1e-12:
        reports.append(StatReport("ergodicity_zero_variance", float(delta.max()), 0.0, 1e-9,
                                  "Delta vanishes for zero variance"))
        return reports, ErgodicityScan(ts, delta, dh, np.full_like(ts, np.nan), 0.0, sigma2)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dh > 0, delta / np.sqrt(2 * sigma2 * np.maximum(dh, 1e-300)), np.nan)
        kvals = np.where(dh > 0, delta / np.sqrt(np.maximum(dh, 1e-300)), 0.0)
    K = float(np.nanmax(kvals))
    for t in (-sharp_t, sharp_t):
        d, h = point(t)
        r = d / math.sqrt(2 * sigma2 * h)
        reports.append(StatReport(f"ergodicity_ratio_t={t:+g}", r, 1.0, tol, "sharp constant sqrt(2 sigma^2)",
                                  meta={"t": t}))
    fine = np.linspace(ts.min(), ts.max(), 5 * len(ts) - 4)
    worst = 0.0
    for t in fine:
        d, h = point(t)
        if d > 0:
            worst = max(worst, d / (K * math.sqrt(max(h, 1e-300))))
    reports.append(StatReport("ergodicity_bound", worst, 0.0, 1.01, "Delta <= K sqrt(dh), K fitted",
                              detail={"K": K}))
    return reports, ErgodicityScan(ts, delta, dh, ratio, K, sigma2)


def frequency_report(batch: TrajectoryBatch, a: int) -> StatReport:
    """Empirical frequency of symbol ``a`` against ``p_a`` within 3 s.e. (i.i.d. s.e. scaled by ``sqrt(tau_int)``)."""
    if batch.paths is None:
        raise ValueError("frequency report needs stored paths")
    m = batch.measure
    x = (batch.paths == a).astype(float)
    est = float(x.mean())
    ref = float(m.pi[a])
    s2 = green_kubo(m, indicator(m.graph, a)).sigma2
    se = math.sqrt(s2 / x.size) if s2 > 0 else 0.0
    return StatReport(f"frequency[{a}]", est, ref, 3 * se if se > 0 else 1e-12, "stationary mass p_a",
                      se=se, meta=batch.meta)

