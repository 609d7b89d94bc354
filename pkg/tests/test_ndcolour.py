"""Distance colouring: frozen values, brute-force oracles, symmetry laws."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ringel.errors import InvalidEdgeError, ParameterError
from ringel.ndcolour import (
    Embedding,
    NDColouring,
    colour_of,
    reflect_embedding,
    shift_embedding,
    verify_two_factorization,
)


def oracle_colour(n, i, j):
    """Independent definition: the unique k in 1..n with i = j +- k mod 2n+1."""
    m = 2 * n + 1
    hits = [k for k in range(1, n + 1) if (j + k) % m == i or (j - k) % m == i]
    assert len(hits) == 1
    return hits[0]


def oracle_colour_grid(n):
    """Full M x M colour matrix, vectorized, diagonal left at 0."""
    m = 2 * n + 1
    idx = np.arange(m)
    d = (idx[:, None] - idx[None, :]) % m
    return np.minimum(d, m - d)


def test_colour_of_frozen_values():
    # K_9: vertices 0 and 5 are at cyclic distance 4
    assert colour_of(4, 0, 5) == 4
    # frozen from oracle_colour(4, 2, 7)
    assert colour_of(4, 2, 7) == 4
    assert colour_of(1, 0, 1) == 1
    assert colour_of(1, 0, 2) == 1
    assert colour_of(3, 0, 3) == 3
    assert colour_of(3, 6, 0) == 1


def test_colour_of_matches_enumeration_oracle():
    for n in (1, 2, 3, 4, 7, 12):
        m = 2 * n + 1
        for i in range(m):
            for j in range(m):
                if i == j:
                    continue
                assert colour_of(n, i, j) == oracle_colour(n, i, j)


def test_colour_of_rejects_bad_input():
    with pytest.raises(InvalidEdgeError):
        colour_of(4, 3, 3)
    with pytest.raises(InvalidEdgeError):
        colour_of(4, 0, 9)
    with pytest.raises(InvalidEdgeError):
        colour_of(4, -1, 3)
    with pytest.raises(ParameterError):
        colour_of(0, 0, 1)


@given(st.integers(1, 300), st.data())
def test_colour_shift_and_reflection_invariance(n, data):
    m = 2 * n + 1
    i = data.draw(st.integers(0, m - 1))
    j = data.draw(st.integers(0, m - 1))
    if i == j:
        j = (j + 1) % m
    s = data.draw(st.integers(0, m - 1))
    c = colour_of(n, i, j)
    assert 1 <= c <= n
    assert colour_of(n, (i + s) % m, (j + s) % m) == c
    assert colour_of(n, (-i) % m, (-j) % m) == c
    assert colour_of(n, j, i) == c


def test_verify_two_factorization_small():
    for n in (1, 2, 3, 4, 10, 37):
        assert verify_two_factorization(n)


def brute_force_two_factorization(n):
    """Literal whole-graph check: every vertex sees every colour exactly twice."""
    grid = oracle_colour_grid(n)
    m = 2 * n + 1
    for v in range(m):
        row = np.delete(grid[v], v)
        counts = np.bincount(row, minlength=n + 1)
        if counts[0] != 0 or not np.all(counts[1 : n + 1] == 2):
            return False
    return True


def test_verify_two_factorization_against_brute_force():
    for n in list(range(1, 61)) + [500]:
        assert verify_two_factorization(n) == brute_force_two_factorization(n)


def test_colour_class_is_2_regular_spanning():
    for n in (1, 4, 9):
        col = NDColouring(n)
        m = 2 * n + 1
        seen = set()
        for c in col.colours:
            edges = col.colour_class(c)
            assert len(edges) == m
            assert len(set(edges)) == m
            deg = [0] * m
            for u, v in edges:
                assert colour_of(n, u, v) == c
                deg[u] += 1
                deg[v] += 1
            assert all(d == 2 for d in deg)
            seen.update(edges)
        # colour classes partition the edge set
        assert len(seen) == m * (m - 1) // 2


def test_neighbours_by_colour():
    col = NDColouring(4)
    assert col.neighbours_by_colour(0, 4) == (4, 5)
    assert col.neighbours_by_colour(2, 1) == (1, 3)
    for v in range(9):
        for c in range(1, 5):
            a, b = col.neighbours_by_colour(v, c)
            assert colour_of(4, a, v) == c
            assert colour_of(4, b, v) == c


def test_embedding_shift_and_reflect_preserve_colours():
    e = Embedding(4, (0, 1, 3, 6))
    edges = [(0, 1), (1, 2), (2, 3)]
    base = [e.edge_colour(u, v) for u, v in edges]
    for s in range(9):
        es = shift_embedding(e, s)
        assert [es.edge_colour(u, v) for u, v in edges] == base
    er = reflect_embedding(e)
    assert [er.edge_colour(u, v) for u, v in edges] == base
    assert er.image == (0, 8, 6, 3)


def test_embedding_rejects_out_of_range():
    with pytest.raises(ParameterError):
        Embedding(2, (0, 5))


@settings(max_examples=50)
@given(st.integers(1, 80))
def test_two_factorization_property(n):
    assert verify_two_factorization(n)
