"""CLT, arcsine and records laws for the +-1 observable on the full 2-shift."""
from sprshift import graph, potential, stochastics, thermo

g = graph.full_shift(2)
m = thermo.parry_measure(g)
batch = stochastics.sample(m, 10_000, 10_000, seed=7, observable=potential.vertex_function(g, [1.0, -1.0]))
reports = stochastics.clt_check(batch, 1.0)
reports += [stochastics.arcsine_check(batch), stochastics.records_check(batch, 1.0)]
for r in reports:
    print(f"{r.name:<16} estimate {r.estimate:+.5f}  reference {r.reference:+.5f}  "
          f"tolerance {r.tolerance:.5f}  {'pass' if r.passed else 'FAIL'}")
