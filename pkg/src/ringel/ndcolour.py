"""Near-distance edge colouring of the odd complete graph K_{2n+1}.

Vertices are the residues Z_{2n+1}. The edge {i, j} gets colour
min(|i-j|, 2n+1-|i-j|), an integer in 1..n. Every colour class is a
spanning 2-regular subgraph (a Hamilton cycle when gcd allows, a union
of cycles otherwise), so the colouring is a 2-factorization. Shifting
all vertices by a constant and negating all vertices both preserve
colours, which is what makes shifted copies of one rainbow tree tile
the whole edge set.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidEdgeError, ParameterError


def _check_n(n: int) -> None:
    if not isinstance(n, int) or n < 1:
        raise ParameterError("n must be a positive integer", n=n)


def colour_of(n: int, i: int, j: int) -> int:
    """Colour of the edge {i, j} in K_{2n+1} under the distance colouring."""
    _check_n(n)
    m = 2 * n + 1
    if not (0 <= i < m and 0 <= j < m):
        raise InvalidEdgeError("vertex out of range", n=n, i=i, j=j)
    if i == j:
        raise InvalidEdgeError("loops have no colour", n=n, i=i, j=j)
    d = (i - j) % m
    return min(d, m - d)


def verify_two_factorization(n: int) -> bool:
    """Check that every colour class of K_{2n+1} is 2-regular and spanning.

    The incident edges of a vertex v are {v, v+d} for d in 1..2n, and the
    colour of {v, v+d} is min(d, 2n+1-d) independently of v, so the
    incident-colour profile of one vertex settles all of them. The check
    below walks that profile and demands each colour 1..n appear exactly
    twice and colour 0 never.
    """
    _check_n(n)
    m = 2 * n + 1
    counts = [0] * (n + 1)
    for d in range(1, m):
        c = min(d, m - d)
        if c == 0 or c > n:
            return False
        counts[c] += 1
    return all(counts[c] == 2 for c in range(1, n + 1))


class NDColouring:
    """The distance colouring of K_{2n+1} as a queryable object.

    This is the interface gadget builders rely on: a vertex count, a total
    colour function on pairs, and per-colour neighbourhood lookup. Other
    2-factorizations used in tests expose the same three members.
    """

    def __init__(self, n: int):
        _check_n(n)
        self.n = n
        self.m = 2 * n + 1

    @property
    def vertex_count(self) -> int:
        return self.m

    @property
    def colours(self) -> range:
        return range(1, self.n + 1)

    def colour_of(self, i: int, j: int) -> int:
        return colour_of(self.n, i, j)

    def neighbours_by_colour(self, v: int, c: int) -> tuple[int, int]:
        if not (0 <= v < self.m):
            raise ParameterError("vertex out of range", v=v, m=self.m)
        if not (1 <= c <= self.n):
            raise ParameterError("colour out of range", c=c, n=self.n)
        a = (v - c) % self.m
        b = (v + c) % self.m
        return (a, b) if a <= b else (b, a)

    def colour_class(self, c: int) -> list[tuple[int, int]]:
        """All 2n+1 edges of colour c, as sorted pairs, sorted."""
        if not (1 <= c <= self.n):
            raise ParameterError("colour out of range", c=c, n=self.n)
        edges = []
        for x in range(self.m):
            y = (x + c) % self.m
            edges.append((x, y) if x < y else (y, x))
        edges.sort()
        return edges


@dataclass(frozen=True)
class Embedding:
    """A placement of tree vertices into Z_{2n+1}.

    ``image[v]`` is where tree vertex v lands. Injectivity and
    rainbowness are properties to verify, not construction invariants,
    so a broken embedding can be represented and diagnosed.
    """

    n: int
    image: tuple[int, ...]

    def __post_init__(self):
        _check_n(self.n)
        m = 2 * self.n + 1
        object.__setattr__(self, "image", tuple(int(x) for x in self.image))
        for x in self.image:
            if not (0 <= x < m):
                raise ParameterError("image value out of range", value=x, m=m)

    @property
    def m(self) -> int:
        return 2 * self.n + 1

    def edge_colour(self, u: int, v: int) -> int:
        """Colour of the image of tree edge {u, v}."""
        return colour_of(self.n, self.image[u], self.image[v])


def shift_embedding(e: Embedding, s: int) -> Embedding:
    """Translate every image by s modulo 2n+1. Edge colours are preserved."""
    m = 2 * e.n + 1
    return Embedding(e.n, tuple((x + s) % m for x in e.image))


def reflect_embedding(e: Embedding) -> Embedding:
    """Negate every image modulo 2n+1. Edge colours are preserved."""
    m = 2 * e.n + 1
    return Embedding(e.n, tuple((-x) % m for x in e.image))
