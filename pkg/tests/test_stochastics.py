import math

import numpy as np
import pytest
from scipy import integrate, stats

from sprshift import graph as G
from sprshift import potential as Pot
from sprshift import stochastics as St
from sprshift import thermo as T

from .oracles import GOLDEN, binary_entropy, binary_rate

U64 = np.uint64


@pytest.fixture(scope="module")
def full2():
    return T.parry_measure(G.full_shift(2))


@pytest.fixture(scope="module")
def golden():
    return T.parry_measure(G.golden_mean())


@pytest.fixture(scope="module")
def pm1_batch(full2):
    """``n = 10^4``, ``R = 10^4`` replicas of the +-1 observable on the full 2-shift."""
    g = G.full_shift(2)
    return St.sample(full2, 10_000, 10_000, seed=7, observable=Pot.vertex_function(g, [1.0, -1.0]))


def test_philox_known_answers():
    zero = St.philox4x64(U64(0), U64(0), U64(0), U64(0), U64(0), U64(0))
    assert [int(x) for x in zero] == [0x16554D9ECA36314C, 0xDB20FE9D672D0FDC,
                                      0xD7E772CEE186176B, 0x7E68B68AEC7BA23B]
    M = U64(2**64 - 1)
    ones = St.philox4x64(M, M, M, M, M, M)
    assert [int(x) for x in ones] == [0x87B092C3013FE90B, 0x438C3C67BE8D0224,
                                      0x9CC7D7C69CD777B6, 0xA09CAEBF594F0BA0]


def test_philox_matches_numpy():
    # numpy's Philox bit generator advances the counter before each block
    bg = np.random.Philox(counter=[10, 20, 30, 40], key=[123, 456])
    ref = [int(x) for x in bg.random_raw(4)]
    ours = St.philox4x64(U64(11), U64(20), U64(30), U64(40), U64(123), U64(456))
    assert [int(x) for x in ours] == ref


def test_uniforms_range_and_determinism():
    u = St.uniforms(5, 2, 10_000)
    assert u.min() >= 0 and u.max() < 1
    assert np.array_equal(u, St.uniforms(5, 2, 10_000))
    assert not np.array_equal(u, St.uniforms(5, 3, 10_000))
    assert abs(u.mean() - 0.5) < 4 * math.sqrt(1 / 12 / u.size)


def test_sample_reproducible(golden):
    a = St.sample(golden, 500, 20, seed=3)
    b = St.sample(golden, 500, 20, seed=3)
    c = St.sample(golden, 500, 20, seed=4)
    assert np.array_equal(a.paths, b.paths) and not np.array_equal(a.paths, c.paths)
    assert all(p[i + 1] in golden.graph.succ[p[i]] for p in a.paths for i in range(500))


def test_full2_frequency(full2):
    b = St.sample(full2, 1_000_000, 1, seed=1)
    rep = St.frequency_report(b, 0)
    assert rep.tolerance == pytest.approx(3 * 0.5 / math.sqrt(b.paths.size), rel=1e-9)
    assert rep.passed


def test_cycle3_is_deterministic():
    m = T.parry_measure(G.cycle(3))
    b = St.sample(m, 30, 5, seed=0)
    for p in b.paths:
        assert all((p[i + 1] - p[i]) % 3 == 1 for i in range(30))


def test_golden_frequency(golden):
    b = St.sample(golden, 1_000_000, 1, seed=2)
    rep = St.frequency_report(b, 0)
    assert rep.reference == pytest.approx(GOLDEN**2 / (GOLDEN**2 + 1), abs=1e-12)
    assert rep.passed


def test_streamed_sums_match_stored_paths(golden):
    g = G.golden_mean()
    psi = Pot.indicator(g, 0)
    stored = St.sample(golden, 300, 50, seed=9, store=True)
    streamed = St.sample(golden, 300, 50, seed=9, observable=psi)
    direct = (stored.paths[:, :300] == 0).sum(axis=1)
    assert np.array_equal(streamed.birkhoff_sums(), direct.astype(float))


def test_clt(pm1_batch):
    reps = St.clt_check(pm1_batch, 1.0)
    ks = reps[0]
    assert ks.estimate < 0.016 and ks.passed
    assert ks.tolerance == pytest.approx(stats.kstwo.ppf(0.99, 10_000))
    m4 = [r for r in reps if r.name == "clt_moment_4"][0]
    assert m4.reference == 3.0 and m4.passed
    assert all(r.passed for r in reps)


def test_clt_degenerate(golden):
    g = G.golden_mean()
    u = [0.7, -0.4]
    b = St.sample(golden, 10_000, 200, seed=5, observable=Pot.coboundary(g, u))
    rep = St.degenerate_clt_check(b, 2 * max(abs(x) for x in u))
    assert rep.passed
    with pytest.raises(ValueError):
        St.clt_check(b, 0.0)


def test_arcsine_references():
    assert St.arcsine_cdf(0.5) == pytest.approx(0.5, abs=1e-15)
    assert St.arcsine_cdf(0.25) == pytest.approx(1 / 3, abs=1e-15)
    assert St.arcsine_cdf(1.0) == pytest.approx(1.0, abs=1e-15)


def test_arcsine(pm1_batch):
    rep = St.arcsine_check(pm1_batch)
    assert rep.passed and rep.estimate <= 0.02


def test_records_references():
    assert St.records_reference(0.0, 0.5) == pytest.approx(1.0)
    assert St.records_reference(0.5, 0.5) == pytest.approx(2 * (1 - stats.norm.cdf(1)), abs=1e-12)
    assert St.records_reference(0.5, 0.5) == pytest.approx(0.3173, abs=1e-4)
    assert St.records_reference(40.0, 1.0) < 1e-300


def test_records(pm1_batch):
    assert St.records_check(pm1_batch, 1.0).passed


def test_brownian_time_average_variance():
    # int_0^1 int_0^1 min(s, t) ds dt, split along the diagonal so the integrand is smooth
    half, _ = integrate.dblquad(lambda s, t: s, 0, 1, 0, lambda t: t)
    val = 2 * half
    assert val == pytest.approx(1 / 3, abs=1e-10)


def test_fclt(pm1_batch):
    reps = St.fclt_check(pm1_batch, 1.0)
    assert all(r.passed for r in reps)
    assert reps[0].detail["variance_ratio"] == pytest.approx(1.0, abs=0.05)


def test_fclt_degenerate_sup(golden):
    g = G.golden_mean()
    b = St.sample(golden, 10_000, 100, seed=6, observable=Pot.coboundary(g, [1.0, 0.0]))
    assert (b.functionals[:, 4] / math.sqrt(b.n)).max() <= 2 / math.sqrt(b.n)


def test_laplace(pm1_batch):
    rep = St.laplace_check(pm1_batch, 1.0)
    assert rep.passed


def test_strassen_references():
    assert St.strassen_reference(0.5) == pytest.approx(1 - math.exp(-12), abs=1e-15)
    assert 0.99999 < St.strassen_reference(0.5) < 1
    assert St.strassen_reference(1 - 1e-9) < 1e-7
    assert St.strassen_reference(1 / math.sqrt(2)) == pytest.approx(1 - math.exp(-4), abs=1e-12)


def test_lil_refuses_short_runs(full2):
    g = G.full_shift(2)
    with pytest.raises(ValueError, match="10\\^7"):
        St.lil_strassen_check(full2, Pot.vertex_function(g, [1.0, -1.0]), 1.0, n=10**6)
    with pytest.raises(ValueError, match="c must"):
        St.lil_strassen_check(full2, Pot.vertex_function(g, [1.0, -1.0]), 1.0, c=1.5)


@pytest.fixture(scope="module")
def half_rate(full2):
    g = G.full_shift(2)
    psi = Pot.vertex_function(g, [0.5, -0.5])
    return psi, T.rate_function(full2, psi, np.linspace(-0.4, 0.4, 9))


def test_exact_tail_small_n(full2, half_rate):
    psi, _ = half_rate
    # psi_4 >= 4 * 0.2 means at least 3 zeros among 4 fair symbols
    tail = St.exact_upper_tail(full2, psi, 0.2, [4])
    assert math.exp(tail[4]) == pytest.approx(5 / 16, abs=1e-14)


def test_ldp_slope(full2, half_rate):
    psi, rf = half_rate
    rep = St.ldp_empirical(full2, psi, rf, 0.2)
    assert rep.reference == pytest.approx(-binary_rate(0.2), abs=1e-9)
    assert rep.reference == pytest.approx(-0.0823, abs=1e-4)
    assert rep.passed


def test_ldp_rejects_outside_domain(full2, half_rate):
    psi, rf = half_rate
    with pytest.raises(ValueError, match="domain"):
        St.ldp_empirical(full2, psi, rf, 0.0)
    with pytest.raises(ValueError, match="domain"):
        St.ldp_empirical(full2, psi, rf, 0.49)


def test_small_deviation_regime(half_rate):
    _, rf = half_rate
    a = 0.05
    assert rf(a) == pytest.approx(a**2 / (2 * rf.sigma2), rel=0.02)


def test_ergodicity_t_zero():
    g = G.full_shift(2)
    _, scan = St.effective_ergodicity_scan(g, Pot.indicator(g, 0), [0.0, 0.5])
    assert scan.delta[0] == 0 and scan.dh[0] == 0


def test_ergodicity_bernoulli_closed_form():
    g = G.full_shift(2)
    ts = np.linspace(-1, 1, 21)
    reports, scan = St.effective_ergodicity_scan(g, Pot.indicator(g, 0), ts)
    for t, d, h in zip(scan.t, scan.delta, scan.dh):
        p = math.exp(t) / (1 + math.exp(t))
        assert d == pytest.approx(abs(0.5 - p), abs=1e-12)
        assert h == pytest.approx(math.log(2) - binary_entropy(p) if t else 0.0, abs=1e-12)
    assert all(r.passed for r in reports)
    t = 0.05
    p = math.exp(t) / (1 + math.exp(t))
    ratio = abs(0.5 - p) / math.sqrt(2 * 0.25 * (math.log(2) - binary_entropy(p)))
    assert abs(ratio - 1) < 0.05
    rep = [r for r in reports if r.name == "ergodicity_ratio_t=+0.05"][0]
    assert rep.estimate == pytest.approx(ratio, rel=1e-9)


def test_ergodicity_constant_observable():
    g = G.golden_mean()
    reports, scan = St.effective_ergodicity_scan(g, Pot.constant(g, 1.3), [-1.0, 0.0, 1.0])
    assert np.all(scan.delta <= 1e-12)
    assert reports[0].name == "ergodicity_zero_variance" and reports[0].passed


def test_empirical_tail_full2(full2):
    rep = St.empirical_tail_check(full2, 0, R=200_000, N=20, seed=3)
    assert rep.passed


def test_empirical_tail_cycle3():
    m = T.parry_measure(G.cycle(3))
    rep = St.empirical_tail_check(m, 0, R=30_000, N=6, seed=1)
    assert rep.passed


def test_empirical_tail_golden(golden):
    rep = St.empirical_tail_check(golden, 1, R=200_000, N=20, seed=4)
    assert rep.passed


def test_cylinder_frequencies(golden):
    b = St.sample(golden, 1_000_000, 1, seed=8)
    assert St.cylinder_frequency_check(b).passed


def test_reports_are_reproducible(full2):
    g = G.full_shift(2)
    psi = Pot.vertex_function(g, [1.0, -1.0])
    a = [r.to_dict() for r in St.clt_check(St.sample(full2, 1000, 2000, 42, observable=psi), 1.0)]
    b = [r.to_dict() for r in St.clt_check(St.sample(full2, 1000, 2000, 42, observable=psi), 1.0)]
    assert a == b


def test_stat_report_pass_rule():
    assert St.StatReport("x", 1.0, 1.5, 0.5, "p").passed
    assert not St.StatReport("x", 1.0, 1.6, 0.5, "p").passed
