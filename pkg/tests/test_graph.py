import json
import math

import pytest

from sprshift import graph as G

from .oracles import cycles_up_to


def test_golden_mean_description():
    g = G.build_graph({"vertices": [0, 1], "edges": [[0, 0], [0, 1], [1, 0]]})
    assert g.n == 2
    assert g.succ == ((0, 1), (0,))
    assert g.proper and g.locally_finite
    assert g == G.golden_mean()


def test_full_shift_degrees():
    g = G.full_shift(2)
    assert g.proper
    assert all(g.out_degree(v) == 2 and g.in_degree(v) == 2 for v in g.vertices)


def test_bouquet_base_in_degree():
    spec = G.BouquetSpec("ceil_pow2_over_nsq", M=1)
    g = G.bouquet_graph(spec, 12)
    ells = [math.ceil(2**n / n**2) for n in range(1, 13)]
    assert g.in_degree(0) == sum(ells) == 80
    assert g.out_degree(0) == sum(ells)
    assert g.n == 1 + sum(l * (n - 1) for n, l in zip(range(1, 13), ells))
    assert g.multiplicity(0, 0) == 2
    assert g.proper


def test_bouquet_rules():
    ruette = G.BouquetSpec("ruette")
    assert [ruette.ell(n) for n in (1, 2, 4, 9, 16)] == [1, 0, 4, 64, 4096]
    assert G.BouquetSpec("ceil_pow2_over_nsq", M=5).ell(4) == 0
    assert G.BouquetSpec("table", table=(1, 0, 3)).ell(3) == 3
    assert G.BouquetSpec("table", table=(1, 0, 3)).ell(7) == 0


@pytest.mark.parametrize("desc, fragment", [
    ({"vertices": 2, "edges": [[0, 1], [0, 1]]}, "duplicate edge"),
    ({"vertices": 2, "edges": [[0, 2]]}, "dangling"),
    ({"vertices": [0, 0], "edges": []}, "duplicate vertex"),
    ({"bouquet": {"rule": "nope"}, "truncation": 3}, "unknown bouquet rule"),
    ({"bouquet": {"rule": "ruette"}}, "truncation"),
    ({"edges": []}, "vertices"),
])
def test_parse_errors(desc, fragment):
    with pytest.raises(G.GraphParseError, match=fragment):
        G.build_graph(desc)


def test_rule_undefined_at_zero():
    with pytest.raises(G.GraphParseError, match="undefined"):
        G.BouquetSpec("ruette").ell(0)


def test_invalid_json_text():
    with pytest.raises(G.GraphParseError, match="invalid JSON"):
        G.build_graph("{not json")


def test_serialization_is_byte_stable():
    g = G.build_graph({"vertices": 3, "edges": [[2, 0], [0, 1], [1, 2], [0, 0]]})
    text = g.to_json()
    assert text == G.build_graph(json.loads(text)).to_json()
    assert json.loads(text)["edges"] == [[0, 0], [0, 1], [1, 2], [2, 0]]
    assert len(g.digest) == 64


def test_bouquet_round_trip():
    g = G.bouquet_graph(G.BouquetSpec("ceil_pow2_over_nsq", M=3), 7)
    back = G.build_graph(g.to_json())
    assert back == g and back.bouquet == g.bouquet and back.truncation == 7


def test_components_golden():
    comps = G.strongly_connected_components(G.golden_mean())
    assert len(comps) == 1 and comps[0].vertices == (0, 1) and not comps[0].wandering


def test_components_disjoint_union():
    g = G.disjoint_union(G.full_shift(2), G.full_shift(2))
    comps = G.strongly_connected_components(g)
    assert [c.vertices for c in comps] == [(0, 1), (2, 3)]


def test_components_chain_wandering():
    g = G.build_graph({"vertices": 3, "edges": [[0, 1], [1, 2]]})
    comps = G.strongly_connected_components(g)
    assert [c.vertices for c in comps] == [(0,), (1,), (2,)]
    assert all(c.wandering for c in comps)
    with pytest.raises(ValueError):
        G.period(g, comps[0])


@pytest.mark.parametrize("name, p", [("full2", 1), ("cycle3", 3), ("golden", 1), ("bipartite", 2),
                                     ("bouquet_M1_N12", 1), ("ruette_N9", 1)])
def test_period_examples(graphs, name, p):
    assert G.period(graphs[name]) == p


def test_golden_period_from_loops():
    lengths = {len(c) for c in cycles_up_to(G.golden_mean().succ, 6)}
    assert math.gcd(*lengths) == 1 and {1, 2} <= lengths


def test_decomposition_examples(graphs):
    assert G.spectral_decomposition(graphs["cycle3"]).classes == ((0,), (1,), (2,))
    assert G.spectral_decomposition(graphs["full2"]).classes == ((0, 1),)
    dec = G.spectral_decomposition(graphs["bipartite"])
    assert dec.period == 2 and dec.classes == ((0, 1), (2, 3))


def test_induced_subgraph_keeps_multiplicity(graphs):
    sub, old = graphs["bouquet_M1_N12"].induced([0])
    assert old == [0] and sub.multiplicity(0, 0) == 2
