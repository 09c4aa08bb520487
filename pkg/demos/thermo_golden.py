"""Parry measure, spectral gap, variance and rate function on the golden-mean shift."""
import numpy as np

from sprshift import graph, potential, thermo

g = graph.golden_mean()
m = thermo.parry_measure(g)
print("p_v  =", m.pi)
print("p_uv =", m.P.tolist())
print("h    =", m.entropy)

gap = thermo.spectral_gap(m)
cov = thermo.correlations(m, potential.indicator(g, 0), nmax=20)
print("rho  =", gap.rho, " |Cov_20 / Cov_19| =", abs(cov[20] / cov[19]))

psi = potential.indicator(g, 0)
for method in ("green_kubo", "linear_response"):
    print(f"sigma^2 ({method}) =", thermo.asymptotic_variance(m, psi, method).sigma2)

rf = thermo.rate_function(m, psi, np.linspace(-0.1, 0.1, 5))
print("rate function domain", rf.domain)
for s in np.linspace(-0.1, 0.1, 5):
    print(f"  I({s:+.3f}) = {rf(s):.6f}")

tail = thermo.return_time_tail(m, 1, 10)
print("P[tau_1 > n], n = 0..10:", [round(float(x), 6) for x in tail.tail])
