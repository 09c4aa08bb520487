"""Markov shifts on directed graphs: loop counting, strong positive recurrence,
thermodynamic formalism, limit laws of Birkhoff sums and Pesin-block lemmas
for cocycles over periodic orbits."""
from .census import LoopCensus, bouquet_census, census_for, convergence_radii, count_loops, gurevich_entropy
from .graph import (
    BouquetSpec,
    DirectedGraph,
    bouquet_graph,
    build_graph,
    full_shift,
    golden_mean,
    load_graph,
    period,
    spectral_decomposition,
    strongly_connected_components,
)
from .potential import CylinderPotential, build_potential
from .spr import SprVerdict, Verdict, exit_path_rate, spr_verdict, weighted_census
from .thermo import (
    MarkovMeasure,
    asymptotic_variance,
    equilibrium_measure,
    parry_measure,
    pressure_curve,
    rate_function,
    return_time_tail,
    spectral_gap,
    transfer_operator,
)

__version__ = "0.1.0"

__all__ = [
    "BouquetSpec", "CylinderPotential", "DirectedGraph", "LoopCensus", "MarkovMeasure", "SprVerdict",
    "Verdict", "asymptotic_variance", "bouquet_census", "bouquet_graph", "build_graph", "build_potential",
    "census_for", "convergence_radii", "count_loops", "equilibrium_measure", "exit_path_rate",
    "full_shift", "golden_mean", "gurevich_entropy", "load_graph", "parry_measure", "period",
    "pressure_curve", "rate_function", "return_time_tail", "spectral_decomposition", "spectral_gap",
    "spr_verdict", "strongly_connected_components", "transfer_operator", "weighted_census",
]
