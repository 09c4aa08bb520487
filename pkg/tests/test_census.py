import math
from fractions import Fraction

import numpy as np
import pytest

from sprshift import census as C
from sprshift import graph as G

from .oracles import GOLDEN, enumerate_loops_mult, int_matrix_power_entry


def test_golden_counts():
    c = C.count_loops(G.golden_mean(), 0, 4)
    assert c.Z == (1, 2, 3, 5) and c.Zstar == (1, 1, 0, 0)


def test_full2_counts():
    c = C.count_loops(G.full_shift(2), 0, 4)
    assert c.Z == (1, 2, 4, 8) and c.Zstar == (1, 1, 1, 1)


def test_cycle3_counts():
    c = C.count_loops(G.cycle(3), 0, 3)
    assert c.Z == (0, 0, 1) and c.Zstar == (0, 0, 1)


@pytest.mark.parametrize("name", ["golden", "full2", "full3", "cycle3", "bipartite", "bouquet_M1_N12",
                                  "ruette_N9", "two_loops"])
def test_counts_match_path_enumeration(graphs, name):
    g = graphs[name]
    c = C.count_loops(g, 0, 10)
    for n in range(1, 11):
        assert (c.Z[n - 1], c.Zstar[n - 1]) == enumerate_loops_mult(g.succ, g.mult, 0, n)


def test_counts_are_exact_beyond_float_range():
    g = G.full_shift(3)
    c = C.count_loops(g, 0, 64)
    assert c.Z[63] == 3**63 and c.Z[63] == int_matrix_power_entry(g.adjacency(int), 0, 64)


def test_truncated_bouquet_matches_closed_form(graphs):
    spec = G.BouquetSpec("ceil_pow2_over_nsq", M=1)
    a = C.count_loops(graphs["bouquet_M1_N12"], 0, 12)
    b = C.bouquet_census(spec, 12)
    assert a.Z == b.Z and a.Zstar == b.Zstar


def test_renewal_violation_is_rejected():
    with pytest.raises(C.CensusError, match="renewal"):
        C.LoopCensus(0, 2, (1, 3), (1, 1))


def test_wandering_base_rejected():
    g = G.build_graph({"vertices": 2, "edges": [[0, 1], [1, 1]]})
    with pytest.raises(C.CensusError, match="wandering"):
        C.count_loops(g, 0, 5)


def test_entropy_full2():
    e = C.gurevich_entropy(C.count_loops(G.full_shift(2), 0, 64))
    assert e.h == pytest.approx(math.log(2), abs=1e-15)
    assert e.h_lo <= e.h <= e.h_hi


def test_entropy_golden():
    e = C.gurevich_entropy(C.count_loops(G.golden_mean(), 0, 64))
    lam = max(np.linalg.eigvals(np.array([[1.0, 1.0], [1.0, 0.0]])).real)
    assert abs(e.h - math.log(lam)) < 1e-6
    assert abs(e.h - math.log(GOLDEN)) < 1e-6
    assert e.h_lo <= e.h <= e.h_hi
    assert e.window == (1, 64)


def test_entropy_cycle3():
    e = C.gurevich_entropy(C.count_loops(G.cycle(3), 0, 64))
    assert e.h == 0.0 and e.period == 3


def test_entropy_needs_long_window():
    with pytest.raises(C.CensusError, match="horizon"):
        C.gurevich_entropy(C.count_loops(G.cycle(3), 0, 6))


def test_radii_golden():
    r = C.convergence_radii(C.count_loops(G.golden_mean(), 0, 64))
    assert r.R == math.inf and r.R_exact and r.method == "finite support"
    assert r.r == pytest.approx(1 / GOLDEN, abs=1e-9)


def test_radii_full2():
    r = C.convergence_radii(C.count_loops(G.full_shift(2), 0, 64))
    assert r.R == pytest.approx(1.0, abs=1e-12) and r.R_exact
    assert r.r == pytest.approx(0.5, abs=1e-15)


def test_radii_bouquet_closed_form(graphs):
    r = C.convergence_radii(C.census_for(graphs["bouquet_M1_N12"], N=64))
    assert r.R == Fraction(1, 2) and r.R_exact


def test_census_csv():
    text = C.count_loops(G.golden_mean(), 0, 3).to_csv()
    assert text == "n,Z,Zstar\n1,1,1\n2,2,1\n3,3,0\n"


def test_entropy_report_keys():
    d = C.gurevich_entropy(C.count_loops(G.golden_mean(), 0, 16)).to_dict()
    assert set(d) == {"h", "h_lo", "h_hi", "window", "period"}
