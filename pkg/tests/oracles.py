"""Independent reference computations used by the tests.

Nothing here calls the algorithms under test: loop counts come from
explicit path enumeration, measures from closed forms or numpy's dense
eigensolver, and Pesin constants from a direct search over a finite window.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

GOLDEN = (1 + math.sqrt(5)) / 2


def enumerate_loops(succ, a: int, n: int) -> tuple[int, int]:
    """``(Z_n, Z*_n)`` by depth-first enumeration of every path of length ``n`` from ``a``."""
    total = first = 0
    stack = [(a, 0, False)]
    while stack:
        v, depth, visited = stack.pop()
        if depth == n:
            if v == a:
                total += 1
                first += not visited
            continue
        hit = visited or (depth > 0 and v == a)
        for w in succ[v]:
            stack.append((w, depth + 1, hit))
    return total, first


def enumerate_loops_mult(succ, mult, a: int, n: int) -> tuple[int, int]:
    """As :func:`enumerate_loops`, weighting each edge by its multiplicity."""
    total = first = 0
    stack = [(a, 0, False, 1)]
    while stack:
        v, depth, visited, w8 = stack.pop()
        if depth == n:
            if v == a:
                total += w8
                first += 0 if visited else w8
            continue
        hit = visited or (depth > 0 and v == a)
        for w in succ[v]:
            stack.append((w, depth + 1, hit, w8 * mult.get((v, w), 1)))
    return total, first


def int_matrix_power_entry(A: np.ndarray, a: int, n: int) -> int:
    """``(A^n)_{aa}`` with Python integers."""
    M = [[int(x) for x in row] for row in A]
    k = len(M)
    R = [[int(i == j) for j in range(k)] for i in range(k)]
    for _ in range(n):
        R = [[sum(R[i][m] * M[m][j] for m in range(k)) for j in range(k)] for i in range(k)]
    return R[a][a]


def cycles_up_to(succ, L: int) -> list[tuple[int, ...]]:
    """Every closed walk (as a vertex tuple, first vertex repeated implicitly) of length ``<= L``."""
    out = []
    n = len(succ)
    for s in range(n):
        stack = [(s,)]
        while stack:
            w = stack.pop()
            if len(w) > L:
                continue
            for v in succ[w[-1]]:
                if v == s:
                    out.append(w)
                if len(w) < L:
                    stack.append(w + (v,))
    return out


def golden_parry() -> dict[str, float]:
    lam = GOLDEN
    return {"lam": lam, "p00": 1 / lam, "p01": 1 / lam**2, "p10": 1.0,
            "p0": lam**2 / (lam**2 + 1), "h": math.log(lam)}


def parry_from_eig(A: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """``(lambda, pi, P)`` of the Parry measure from numpy's dense eigensolver."""
    w, V = np.linalg.eig(A)
    wl, U = np.linalg.eig(A.T)
    r = np.abs(V[:, np.argmax(w.real)].real)
    l = np.abs(U[:, np.argmax(wl.real)].real)
    lam = float(max(w.real))
    P = A * r[None, :] / (lam * r[:, None])
    return lam, l * r / (l @ r), P


def dense_eigen_ratio(A: np.ndarray) -> float:
    ev = sorted(np.abs(np.linalg.eigvals(A)), reverse=True)
    return ev[1] / ev[0]


def bernoulli_pressure(t: float) -> float:
    return math.log1p(math.exp(t))


def binary_rate(s: float) -> float:
    """Rate function of the centred +-1/2 fair coin."""
    a, b = 0.5 + s, 0.5 - s
    return math.log(2) + a * math.log(a) + b * math.log(b)


def binary_entropy(p: float) -> float:
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


def pliss_measure_brute(values, beta, horizon_periods: int = 30) -> Fraction:
    """Fraction of orbit points whose Birkhoff sums stay above ``beta j`` for ``j`` up to a long horizon."""
    q = len(values)
    vals = [Fraction(v) - Fraction(beta) for v in values]
    good = 0
    for i in range(q):
        s, ok = Fraction(0), True
        for j in range(horizon_periods * q):
            s += vals[(i + j) % q]
            if s < 0:
                ok = False
                break
        good += ok
    return Fraction(good, q)


def envelope_brute(values, eps: float, reach: int = 10) -> list[float]:
    q = len(values)
    return [max(values[(i + n) % q] * math.exp(-eps * abs(n)) for n in range(-reach * q, reach * q + 1))
            for i in range(q)]


def _power_direction(M: np.ndarray, iters: int = 400) -> np.ndarray:
    v = np.array([1.0, 0.7315])
    for _ in range(iters):
        v = M @ v
        v /= np.linalg.norm(v)
    return v


def pesin_constant_brute(mats, chi: float, eps: float, reach: int = 3) -> list[float]:
    """``K_*`` by the largest ratio over ``|n| <= reach q``, ``0 <= k <= reach q``.

    The stable and unstable lines come from power iteration of the inverse
    and forward return matrices, not from an eigen-decomposition.
    """
    q = len(mats)

    def fwd(i, k):
        M = np.eye(2)
        for m in range(k):
            M = mats[(i + m) % q] @ M
        return M

    es, eu = [], []
    for i in range(q):
        R = fwd(i, q)
        eu.append(_power_direction(R))
        es.append(_power_direction(np.linalg.inv(R)))
    out = []
    for i in range(q):
        best = 0.0
        for n in range(-reach * q, reach * q + 1):
            y = (i + n) % q
            for k in range(0, reach * q + 1):
                s = np.linalg.norm(fwd(y, k) @ es[y])
                u = np.linalg.norm(np.linalg.inv(fwd((y - k) % q, k)) @ eu[y])
                best = max(best, max(s, u) * math.exp(chi * k - eps * abs(n)))
        out.append(best)
    return out


def random_hyperbolic_matrices(rng: np.random.Generator, max_period: int = 5) -> list[np.ndarray]:
    """Rotated, sheared diagonal 2x2 matrices whose return product has real eigenvalues off the unit circle."""
    q = int(rng.integers(1, max_period + 1))
    while True:
        mats = []
        for _ in range(q):
            a, th, sh = rng.uniform(0.2, 1.5), rng.uniform(0, math.pi), rng.normal(0, 0.5)
            R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
            mats.append(R @ np.array([[1.0, sh], [0.0, 1.0]]) @ np.diag([math.exp(-a), math.exp(a)]))
        M = np.eye(2)
        for A in mats:
            M = A @ M
        lam = np.linalg.eigvals(M)
        if np.all(np.isreal(lam)) and min(abs(lam.real)) < 1 < max(abs(lam.real)):
            return mats
