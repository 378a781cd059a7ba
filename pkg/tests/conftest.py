import numpy as np
import pytest

from sprayopt.pareto import MAXIMIZE, MINIMIZE

# Six candidates under (max f1, min f2).  B dominates A, D weakly but not
# strongly dominates C, and the non-dominated set is {D, E, F}.
EXAMPLE_LABELS = ("A", "B", "C", "D", "E", "F")
EXAMPLE_RAW = np.array([
    [2.0, 7.0],
    [3.0, 5.0],
    [4.0, 6.0],
    [4.0, 4.0],
    [6.0, 5.0],
    [7.0, 7.0],
])
EXAMPLE_DIRECTIONS = (MAXIMIZE, MINIMIZE)


def brute_force_ranks(F):
    """O(n^2 k) peeling oracle for front ranks."""
    F = np.asarray(F)
    n = len(F)
    rank = np.zeros(n, dtype=int)
    remaining = set(range(n))
    r = 0
    while remaining:
        r += 1
        front = []
        for i in remaining:
            dominated = False
            for j in remaining:
                if j != i and np.all(F[j] <= F[i]) and np.any(F[j] < F[i]):
                    dominated = True
                    break
            if not dominated:
                front.append(i)
        for i in front:
            rank[i] = r
        remaining -= set(front)
    return rank


@pytest.fixture
def example_canonical():
    return EXAMPLE_RAW * np.array([-1.0, 1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
