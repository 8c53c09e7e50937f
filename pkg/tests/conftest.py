import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from sspa import library
from sspa.syntax import desugar, parse_model


def model(text):
    return desugar(parse_model(text))


@pytest.fixture
def bio():
    return library.load("biological")


@pytest.fixture
def bio_text():
    return library.load("biological_text")


@pytest.fixture
def spoiled():
    return library.load("spoiled")


@pytest.fixture
def alternating():
    return library.load("alternating")


@pytest.fixture
def nonassoc():
    return library.load("nonassoc")


LABELS = ["a", "b", "c"]
RATES = ["1.0", "2.0", "0.5", "?"]


@st.composite
def model_texts(draw, max_idents=4, nested=True):
    """Random model text over identifiers P0..Pk; nested prefixes optional."""
    n = draw(st.integers(1, max_idents))
    names = [f"P{i}" for i in range(n)]

    def cont(depth):
        opts = ["0"] + names
        if nested and depth < 2:
            choice = draw(st.integers(0, len(opts) + 1))
            if choice >= len(opts):
                return "(" + prefix(depth + 1) + ")"
            return opts[choice]
        return draw(st.sampled_from(opts))

    def prefix(depth):
        label = draw(st.sampled_from(LABELS))
        rate = draw(st.sampled_from(RATES))
        return f"({label},{rate}).{cont(depth)}"

    lines = []
    for name in names:
        k = draw(st.integers(1, 3))
        body = " + ".join(prefix(0) for _ in range(k))
        if draw(st.booleans()) and draw(st.booleans()):
            body = f"({body})[{draw(st.sampled_from(LABELS))} <- 1.5]"
        lines.append(f"{name} = {body};")
    return "\n".join(lines)


def random_closed_component(rng, n, prefix, label):
    """An irreducible closed component on n states: a ring plus random chords."""
    lines = []
    for i in range(n):
        branches = [f"({label},{rng.uniform(0.2, 5.0)!r}).{prefix}{(i + 1) % n}"]
        for j in range(n):
            if j != i and rng.random() < 0.3:
                branches.append(f"({label},{rng.uniform(0.2, 5.0)!r}).{prefix}{j}")
        if rng.random() < 0.3:
            branches.append(f"({label},{rng.uniform(0.2, 5.0)!r}).{prefix}{i}")
        lines.append(f"{prefix}{i} = " + " + ".join(branches) + ";")
    return "\n".join(lines)


def nullspace_measure(Q):
    """Independent oracle: normalized left null vector via SVD."""
    from scipy.linalg import null_space
    v = null_space(np.asarray(Q).T)
    assert v.shape[1] == 1
    v = v[:, 0]
    return v / v.sum()


def cell_generator(lam, delta, nu, gammas, kappa_c, eloop):
    """Joint generator of the cell system written out from the rules by hand.

    State (e, c, t) has index e*8 + c*2 + t; energy outermost, trigger innermost.
    """
    n = len(gammas)
    dims = (2, n + 1, 2)
    size = int(np.prod(dims))
    Q = np.zeros((size, size))

    def idx(e, c, t):
        return (e * dims[1] + c) * dims[2] + t

    for e, c, t in itertools.product(range(2), range(n + 1), range(2)):
        s = idx(e, c, t)
        up = min(c + 1, n)
        if e == 0:
            Q[s, idx(1, up, t)] += lam           # energy fires a, cell grows
            Q[s, idx(0, up, t)] += eloop         # self-loop on E0 still drives the cell
        else:
            Q[s, idx(0, c, t)] += delta          # energy recharges (d)
        if c >= 1:
            Q[s, idx(e, 0, 1)] += gammas[c - 1]  # cell fires c, trigger moves to T1
            Q[s, idx(e, c, 1)] += kappa_c        # c self-loop of the cell
        if t == 1:
            Q[s, idx(e, c, 0)] += nu             # trigger resets (e)
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return Q
