"""Pliss points, tempered envelopes and optimal Pesin constants on periodic orbits."""
import math

import numpy as np

from sprshift import pliss

r = pliss.pliss_points(pliss.ScalarOrbit((1.0, 0.0)), beta=0.0, A=1.0, kappa=0.0)
print("Pliss measure", r.measure, ">= bound", r.bound)

env = pliss.tempered_envelope((1.0, math.e, math.e**2), eps=0.5)
print("Pi_eps", [round(x, 6) for x in env.envelope], "tail factor", env.factor, "holds", env.holds)


def hyp(a, th):
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    return R @ np.diag([math.exp(-a), math.exp(a)])


c = pliss.MatrixCocycle((hyp(1.0, 0.3), hyp(0.6, 1.1), hyp(0.9, 2.0)))
cert = pliss.optimal_pesin_constant(c, chi=0.1, eps=0.3)
print("K_*", [round(k, 6) for k in cert.K], "tempered", cert.tempered, "window ok", cert.window_ok)

ens = pliss.ensemble([c, pliss.MatrixCocycle((hyp(2.0, 0.0),) + (np.eye(2),) * 4)])
rep = pliss.pliss_set_to_block(ens, n0=2, chi=0.1, eps=0.3)
print(f"nu(M - block) = {rep.outside_block:.4f} <= {rep.factor:.2f} * nu(M - P) = "
      f"{rep.factor * rep.outside_pliss:.4f}: {rep.holds}")
