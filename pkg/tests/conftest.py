import numpy as np
import pytest

from ducomp import (build_dispatch_instance, build_ring, build_weight_matrix,
                    kkt_oracle)
from ducomp.experiments import DEFAULT_ROWS, DEFAULT_TOTAL_DEMAND

ACCEPTANCE_RESULTS = []


@pytest.fixture(scope="session")
def table2_spec():
    return build_dispatch_instance(DEFAULT_ROWS, DEFAULT_TOTAL_DEMAND)


@pytest.fixture(scope="session")
def ring5():
    return build_ring(5)


@pytest.fixture(scope="session")
def W5(ring5):
    return build_weight_matrix(ring5)


@pytest.fixture(scope="session")
def table2_opt(table2_spec):
    return kkt_oracle(table2_spec)


def random_connected_topology(rng, m):
    """Random spanning tree plus a few extra edges."""
    edges = set()
    for i in range(1, m):
        j = int(rng.integers(0, i))
        edges.add((j, i))
    extra = int(rng.integers(0, m))
    for _ in range(extra):
        i, j = rng.choice(m, size=2, replace=False)
        edges.add((min(i, j), max(i, j)))
    from ducomp import Topology
    return Topology(m=m, edges=frozenset(edges))


def lstsq_slope_r2(ks, logvals):
    A = np.vstack([ks, np.ones_like(ks, dtype=float)]).T
    sol, *_ = np.linalg.lstsq(A, logvals, rcond=None)
    pred = A @ sol
    ss_res = float(((logvals - pred) ** 2).sum())
    ss_tot = float(((logvals - logvals.mean()) ** 2).sum())
    return float(sol[0]), 1.0 - ss_res / ss_tot


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}")
