"""Loop census and SPR verdicts for the three bouquet families."""
from sprshift import census, graph, spr

for label, spec, N in [
    ("ceil(2^n/n^2), M=1", graph.BouquetSpec("ceil_pow2_over_nsq", M=1), 12),
    ("ceil(2^n/n^2), M=30", graph.BouquetSpec("ceil_pow2_over_nsq", M=30), 64),
    ("Ruette", graph.BouquetSpec("ruette"), 64),
]:
    c = census.bouquet_census(spec, N)
    v = spr.verdict_from_census(c)
    print(f"{label:<22} verdict {v.verdict.value}")
    for ev in v.evidence:
        print(f"    {ev.name:<18} {ev.conclusion:<28} value={ev.value!s:.14} rigorous={ev.rigorous}")

g = graph.bouquet_graph(graph.BouquetSpec("ceil_pow2_over_nsq", M=1), 12)
c = census.count_loops(g, 0, 12)
print("\nexplicit graph, 1 + sum ell(n)(n-1) =", g.n, "vertices")
print(c.to_csv())
