import math
from fractions import Fraction

import numpy as np
import pytest

from sprshift import graph as G
from sprshift import potential as Pot
from sprshift import thermo as T

from .oracles import GOLDEN, bernoulli_pressure, binary_rate, dense_eigen_ratio, golden_parry


@pytest.fixture(scope="module")
def golden():
    return T.parry_measure(G.golden_mean())


@pytest.fixture(scope="module")
def full2():
    return T.parry_measure(G.full_shift(2))


def test_parry_full2(full2):
    assert np.allclose(full2.pi, [0.5, 0.5], atol=1e-15)
    assert np.allclose(full2.P, 0.5, atol=1e-15)
    assert full2.entropy == pytest.approx(math.log(2), abs=1e-12)


def test_parry_golden(golden):
    o = golden_parry()
    assert abs(golden.P[0, 0] - o["p00"]) < 1e-12
    assert abs(golden.P[0, 1] - o["p01"]) < 1e-12
    assert abs(golden.P[1, 0] - o["p10"]) < 1e-12
    assert abs(golden.pi[0] - o["p0"]) < 1e-12
    assert abs(golden.entropy - o["h"]) < 1e-12


def test_parry_eigenvector_normalization(golden):
    assert float(golden.left @ golden.right) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(golden.pi, golden.left * golden.right, atol=1e-14)


def test_parry_cycle3():
    m = T.parry_measure(G.cycle(3))
    assert np.allclose(m.pi, 1 / 3, atol=1e-14) and m.entropy == pytest.approx(0, abs=1e-14)


def test_parry_rejects_reducible():
    with pytest.raises(T.ThermoError):
        T.parry_measure(G.disjoint_union(G.full_shift(2), G.full_shift(2)))


def test_measure_json(golden):
    d = golden.to_dict()
    assert set(d) == {"p_v", "p_uv", "entropy"} and len(d["p_uv"]) == 3


def test_cylinder_masses(full2, golden):
    assert T.cylinder_mass(full2, [0, 1]).value == pytest.approx(0.25, abs=1e-15)
    c = T.cylinder_mass(golden, [0, 1, 0])
    assert c.value == pytest.approx(golden.pi[0] * golden.P[0, 1] * golden.P[1, 0], abs=1e-15)
    assert abs(c.value - c.eigen_formula) < 1e-12
    assert T.cylinder_mass(golden, []).value == 1.0
    bad = T.cylinder_mass(golden, [1, 1])
    assert bad.value == 0.0 and not bad.admissible


def test_equilibrium_zero_is_parry(golden):
    g = G.golden_mean()
    m = T.equilibrium_measure(g, Pot.zero(g))
    assert np.allclose(m.pi, golden.pi, atol=1e-12) and np.allclose(m.P, golden.P, atol=1e-12)
    assert m.pressure == pytest.approx(math.log(GOLDEN), abs=1e-12)


@pytest.mark.parametrize("t", [-2.0, -0.5, 0.3, 1.7])
def test_equilibrium_bernoulli_tilt(t):
    g = G.full_shift(2)
    m = T.equilibrium_measure(g, Pot.indicator(g, 0).scale(t))
    p = math.exp(t) / (1 + math.exp(t))
    assert m.pressure == pytest.approx(bernoulli_pressure(t), abs=1e-12)
    assert m.pi[0] == pytest.approx(p, abs=1e-12)
    assert np.allclose(m.P[:, 0], p, atol=1e-12)


def test_equilibrium_constant_shift(golden):
    g = G.golden_mean()
    m = T.equilibrium_measure(g, Pot.constant(g, -0.7))
    assert np.allclose(m.P, golden.P, atol=1e-12)
    assert m.pressure == pytest.approx(math.log(GOLDEN) - 0.7, abs=1e-12)


def test_block_recoding_counts():
    assert T.block_counts(G.golden_mean(), 2) == (2, 3)
    assert T.block_counts(G.golden_mean(), 3) == (3, 5)
    assert T.block_counts(G.full_shift(2), 3) == (4, 8)
    g = G.golden_mean()
    rec = Pot.higher_block_recode(Pot.from_function(g, 3, lambda w: float(sum(w))))
    assert rec.words == ((0, 0), (0, 1), (1, 0)) and len(rec.graph.edges()) == 5


def test_block_recoding_preserves_cylinder_masses():
    g = G.golden_mean()
    psi2 = Pot.from_function(g, 2, lambda w: 0.3 * w[0] - 0.2 * w[1])
    direct = T.equilibrium_measure(g, psi2)
    recoded = T.equilibrium_measure(g, psi2.extend(3))
    assert recoded.recoding is not None and recoded.n == 3
    for n in (3, 4, 6):
        for w in Pot.admissible_words(g, n):
            a = T.cylinder_mass(recoded, recoded.recoding.encode(w)).value
            assert a == pytest.approx(T.cylinder_mass(direct, w).value, abs=1e-12)
    assert recoded.pressure == pytest.approx(direct.pressure, abs=1e-12)


def test_sinai_single_coordinate():
    g = G.full_shift(2)
    red = T.sinai_reduction(g, 0, {(0,): 1.0, (1,): -1.0})
    assert red.one_sided.table == {(0,): 1.0, (1,): -1.0} and red.bound == 0


def test_sinai_product_of_neighbours(full2):
    g = G.full_shift(2)
    s = {0: 1.0, 1: -1.0}
    red = T.sinai_reduction(g, 1, {w: s[w[0]] * s[w[1]] for w in Pot.admissible_words(g, 3)})
    shifted = Pot.from_function(g, 2, lambda w: s[w[0]] * s[w[1]])
    assert T.expectation(full2, red.one_sided) == pytest.approx(T.expectation(full2, shifted), abs=1e-15)
    for w in Pot.admissible_words(g, 4):
        assert T.cylinder_mass(full2, w).value == pytest.approx(1 / 16)
    rng = np.random.default_rng(3)
    for _ in range(50):
        path = list(rng.integers(0, 2, size=40))
        assert red.telescope_gap(path, 30) <= red.bound + 1e-12


def test_sinai_coboundary_stays_bounded():
    g = G.full_shift(2)
    u = [0.4, -1.1]
    red = T.sinai_reduction(g, 1, {w: u[w[1]] - u[w[2]] for w in Pot.admissible_words(g, 3)})
    rng = np.random.default_rng(4)
    for _ in range(20):
        path = list(rng.integers(0, 2, size=120))
        sums = [math.fsum(red.one_sided.table[tuple(path[j: j + 3])] for j in range(n)) for n in (10, 50, 100)]
        assert max(abs(x) for x in sums) <= 2 * max(abs(x) for x in u) + 1e-12


def test_transfer_operator_normalized(golden):
    op = T.transfer_operator(golden)
    assert op.normalization_residual < 1e-10


def test_spectral_gap_examples(full2, golden):
    assert T.spectral_gap(full2).rho == 0.0
    gap = T.spectral_gap(golden)
    oracle = dense_eigen_ratio(np.array([[1.0, 1.0], [1.0, 0.0]]))
    assert abs(gap.rho - oracle) < 1e-12
    assert abs(gap.rho - (math.sqrt(5) - 1) / (math.sqrt(5) + 1)) < 1e-12
    c3 = T.spectral_gap(T.parry_measure(G.cycle(3)))
    assert len(c3.unit_eigenvalues) == 3 and c3.period == 3 and c3.rho_p == 0.0


def test_spectral_gap_bipartite_period():
    gap = T.spectral_gap(T.parry_measure(G.bipartite_square()))
    assert gap.period == 2 and gap.rho_p == 0.0


def test_pressure_curve_bernoulli():
    g = G.full_shift(2)
    ts = np.linspace(-3, 3, 25)
    pc = T.pressure_curve(g, None, Pot.indicator(g, 0), ts)
    assert np.abs(pc.P - np.array([bernoulli_pressure(t) for t in ts])).max() < 1e-10
    assert pc.convex and not pc.flagged


def test_pressure_at_zero_is_entropy():
    g = G.golden_mean()
    pc = T.pressure_curve(g, None, Pot.from_function(g, 2, lambda w: w[0] - 2.0 * w[1]), [0.0])
    assert pc.P[0] == pytest.approx(math.log(GOLDEN), abs=1e-12)


def test_pressure_constant_direction_is_affine():
    g = G.golden_mean()
    ts = np.linspace(-1, 1, 9)
    pc = T.pressure_curve(g, None, Pot.constant(g, 0.8), ts)
    assert np.abs(pc.P - (math.log(GOLDEN) + 0.8 * ts)).max() < 1e-12


def test_pressure_csv():
    g = G.full_shift(2)
    text = T.pressure_curve(g, None, Pot.indicator(g, 0), [0.0, 1.0]).to_csv()
    assert text.splitlines()[0] == "t,P" and text.splitlines()[1] == f"0.0,{math.log(2)!r}"


def test_variance_pm1(full2):
    g = G.full_shift(2)
    psi = Pot.vertex_function(g, [1.0, -1.0])
    assert T.green_kubo(full2, psi).sigma2 == pytest.approx(1.0, abs=1e-12)
    assert T.linear_response(full2, psi).sigma2 == pytest.approx(1.0, abs=1e-6)
    emp = T.asymptotic_variance(full2, psi, "empirical", n=1000, R=4000, seed=11)
    assert abs(emp.sigma2 - 1.0) <= 3 * emp.detail["se"]


def test_variance_coboundary_vanishes(golden):
    g = G.golden_mean()
    psi = Pot.coboundary(g, [0.3, -1.2])
    assert T.green_kubo(golden, psi).sigma2 <= 1e-12
    assert abs(T.linear_response(golden, psi).sigma2) <= 1e-6


def test_variance_indicator(full2):
    g = G.full_shift(2)
    psi = Pot.indicator(g, 0)
    gk = T.green_kubo(full2, psi).sigma2
    lr = T.linear_response(full2, psi).sigma2
    # P''(0) of log(1 + e^t)
    assert gk == pytest.approx(0.25, abs=1e-12) and lr == pytest.approx(0.25, abs=1e-6)


def test_variance_golden_against_second_derivative(golden):
    g = G.golden_mean()
    psi = Pot.indicator(g, 0)
    gk = T.green_kubo(golden, psi).sigma2
    # closed form: P(t) = log of the Perron root of [[e^t, e^t], [1, 0]]
    lam = lambda t: (math.exp(t) + math.sqrt(math.exp(2 * t) + 4 * math.exp(t))) / 2  # noqa: E731
    h = 1e-4
    d2 = (math.log(lam(h)) - 2 * math.log(lam(0)) + math.log(lam(-h))) / h**2
    assert gk == pytest.approx(d2, abs=1e-6)


def test_unknown_variance_method(golden):
    with pytest.raises(T.ThermoError):
        T.asymptotic_variance(golden, Pot.indicator(G.golden_mean(), 0), "bogus")


@pytest.fixture(scope="module")
def binary_rate_fn(full2):
    g = G.full_shift(2)
    s = np.linspace(-0.45, 0.45, 19)
    return T.rate_function(full2, Pot.vertex_function(g, [0.5, -0.5]), s)


def test_rate_function_binary_entropy(binary_rate_fn):
    rf = binary_rate_fn
    ref = np.array([binary_rate(s) for s in rf.s])
    assert np.abs(rf.I - ref).max() < 1e-6
    assert abs(rf(0.0)) < 1e-12
    assert rf(0.2) == pytest.approx(binary_rate(0.2), abs=1e-9)
    assert binary_rate(0.2) == pytest.approx(0.0823, abs=5e-5)


def test_rate_function_checks(binary_rate_fn):
    rf = binary_rate_fn
    assert rf.sigma2 == pytest.approx(0.25, abs=1e-12)
    assert abs(rf.checks["I(0)"]) < 1e-12 and abs(rf.checks["I'(0)"]) < 1e-6
    assert rf.checks["curvature_rel_err"] < 0.05
    assert rf.domain > 0 and rf.c == pytest.approx(rf.domain / rf.sigma2**2)
    assert rf.to_csv().startswith("s,I\n")


def test_rate_function_needs_variance(golden):
    with pytest.raises(T.ThermoError):
        T.rate_function(golden, Pot.coboundary(G.golden_mean(), [1.0, 0.0]))


def test_return_tail_full2_exact(full2):
    rt = T.return_time_tail(full2, 0, 30, exact=True)
    assert all(rt.tail[n] == Fraction(1, 2**n) for n in range(31))
    assert rt.theta == pytest.approx(0.5, abs=1e-15)


def test_return_tail_cycle3():
    rt = T.return_time_tail(T.parry_measure(G.cycle(3)), 0, 5)
    # from a stationary start the first visit to v0 happens at step 1, 2 or 3
    assert np.allclose(rt.tail, [1, 2 / 3, 1 / 3, 0, 0, 0], atol=1e-15)


def test_return_tail_golden(golden):
    rt = T.return_time_tail(golden, 1, 40)
    assert rt.theta == pytest.approx(1 / GOLDEN, abs=1e-12)
    assert rt.fitted_ratio == pytest.approx(1 / GOLDEN, abs=1e-12)


def test_return_tail_rejects_bad_vertex(golden):
    with pytest.raises(T.ThermoError):
        T.return_time_tail(golden, 5, 3)


def test_obstructions(full2, golden):
    g2 = G.full_shift(2)
    cob = T.coboundary_obstruction_scan(golden, Pot.coboundary(G.golden_mean(), [1.0, -0.5]), 10)
    assert cob.max_abs <= 1e-12
    ind = T.coboundary_obstruction_scan(full2, Pot.indicator(g2, 0), 6)
    assert dict(ind.orbits)[(0,)] == pytest.approx(0.5)
    assert T.coboundary_obstruction_scan(full2, Pot.constant(g2, 2.5), 8).max_abs <= 1e-12
    with pytest.raises(T.ThermoError):
        T.coboundary_obstruction_scan(full2, Pot.constant(g2, 1.0), 13)


def test_periodic_orbit_counts():
    # primitive binary necklaces of length n: 2, 1, 2, 3, 6, 9
    counts = [0] * 7
    for w in T.periodic_orbits(G.full_shift(2), 6):
        counts[len(w)] += 1
    assert counts[1:] == [2, 1, 2, 3, 6, 9]


def test_correlations_golden_ratio(golden):
    g = G.golden_mean()
    C = T.correlations(golden, Pot.indicator(g, 0), nmax=50)
    r = np.abs(C[11:51] / C[10:50])
    assert np.abs(r - (math.sqrt(5) - 1) / (math.sqrt(5) + 1)).max() < 1e-6
