import os

os.environ.setdefault("SPR_SHIFT_THREADS", "1")

import pytest  # noqa: E402
from hypothesis import HealthCheck, settings  # noqa: E402

from sprshift import graph as G  # noqa: E402

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def corpus() -> dict[str, G.DirectedGraph]:
    """Finite graphs shared by the tests, keyed by name."""
    return {
        "golden": G.golden_mean(),
        "full2": G.full_shift(2),
        "full3": G.full_shift(3),
        "cycle3": G.cycle(3),
        "bipartite": G.bipartite_square(),
        "bouquet_M1_N12": G.bouquet_graph(G.BouquetSpec("ceil_pow2_over_nsq", M=1), 12),
        "ruette_N9": G.bouquet_graph(G.BouquetSpec("ruette"), 9),
        "two_loops": G.build_graph({"vertices": 3, "edges": [[0, 1], [1, 0], [0, 2], [2, 2], [2, 0]]}),
    }


@pytest.fixture(scope="session")
def graphs() -> dict[str, G.DirectedGraph]:
    return corpus()


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
