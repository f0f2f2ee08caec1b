import numpy as np
import pytest

from qds import DistributedDatabase, StateVector, load_scenario

# Small two-machine instance used as a worked example throughout the suite:
# element totals (2, 2, 1, 0), M = 5.
INSTANCE_A = {
    "N": 4,
    "nu": 4,
    "machines": [
        {"elements": {"1": 2, "2": 1}},
        {"elements": {"2": 1, "3": 1}},
    ],
}


@pytest.fixture
def inst_a():
    return load_scenario(INSTANCE_A)


def random_database(rng, N, n, nu):
    """Random multiplicities with every column trimmed to the capacity."""
    counts = rng.integers(0, nu + 1, size=(n, N))
    for i in range(N):
        while counts[:, i].sum() > nu:
            j = rng.choice(np.flatnonzero(counts[:, i]))
            counts[j, i] -= 1
    if counts.sum() == 0:
        counts[rng.integers(n), rng.integers(N)] = 1
    return DistributedDatabase(N=N, n=n, nu=nu, counts=counts)


def random_state(rng, layout):
    vec = rng.normal(size=layout.total_dim) + 1j * rng.normal(size=layout.total_dim)
    vec /= np.linalg.norm(vec)
    return StateVector(layout, vec)
