import numpy as np
import pytest

from nonrev.chain import ChainSpec

# filled by test_acceptance.py, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


def random_chain(rng, n=None, extra=None, lo=0.2, hi=3.0):
    """Irreducible chain on a ring plus a few random chords, symmetric support."""
    n = int(rng.integers(3, 7)) if n is None else n
    R = np.zeros((n, n))
    pairs = {(i, (i + 1) % n) for i in range(n)}
    extra = int(rng.integers(0, n)) if extra is None else extra
    for _ in range(extra):
        x, y = rng.choice(n, 2, replace=False)
        pairs.add((int(x), int(y)))
    for x, y in pairs:
        R[x, y] = rng.uniform(lo, hi)
        R[y, x] = rng.uniform(lo, hi)
    return ChainSpec(R)


def random_density(rng, n, floor=0.05):
    p = rng.uniform(floor, 1.0, n)
    return p / p.sum()


def detailed_balance_chain(rng, n):
    """Rates r_xy = s_xy / w_x with symmetric s: reversible w.r.t. w."""
    w = random_density(rng, n)
    S = np.zeros((n, n))
    for i in range(n):
        k = (i + 1) % n
        S[i, k] = S[k, i] = rng.uniform(0.2, 2.0)
    return ChainSpec(S / w[:, None]), w


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def c2():
    return ChainSpec.from_triples(2, [(0, 1, 2.0), (1, 0, 1.0)])


@pytest.fixture
def r3():
    cw = [(0, 1, 2.0), (1, 2, 2.0), (2, 0, 2.0)]
    ccw = [(1, 0, 1.0), (2, 1, 1.0), (0, 2, 1.0)]
    return ChainSpec.from_triples(3, cw + ccw)
