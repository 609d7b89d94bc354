"""Colour switchers and the distributive-absorption machinery.

Four gadget families live here. Path switchers realize a fixed
vertex-to-vertex walk in the distance colouring whose colour set is a
fixed shared set plus exactly one colour chosen from a menu (a pair
for the two-switcher, up to a hundred for the multi-switcher).
Matching switchers do the same with perfect matchings instead of
paths, and work over any 2-factorized colouring. Robustly matchable
bipartite graphs act as templates that turn many local switchers into
one global choice, assembled and exercised by the flexible-set
builders. Constructions are untrusted: every builder re-verifies its
output before returning it, and each gadget carries the verification
routine so callers can audit tampered or deserialized instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConstructionFailureError,
    GuaranteeViolationError,
    InternalInvariantError,
    ParameterError,
)
from .ndcolour import NDColouring, colour_of

__all__ = [
    "PathSpec",
    "TwoSwitcher",
    "MultiSwitcher",
    "MatchingSwitcher",
    "RMBG",
    "FlexibleSet",
    "signed_step",
    "build_two_switcher",
    "build_multi_switcher",
    "build_matching_switcher",
    "build_rmbg",
    "verify_rmbg",
    "maximum_bipartite_matching",
    "assemble_flexible_set",
    "absorb",
    "cover_colours_matching",
    "connect_pairs_length3",
    "validate_finishing_parameter",
    "smallest_finishing_parameter",
]


# ---------------------------------------------------------------------------
# paths written as signed colour steps


def signed_step(n: int, frm: int, to: int) -> int:
    """The signed colour a with frm + a = to mod 2n+1 and |a| in [n]."""
    m = 2 * n + 1
    r = (to - frm) % m
    if r == 0:
        raise ParameterError("a step cannot stay in place", vertex=frm)
    return r if r <= n else r - m


@dataclass(frozen=True)
class PathSpec:
    """A walk start, start+a_1, start+a_1+a_2, ... in Z_{2n+1}.

    Steps are signed colours: step a moves by a mod 2n+1 and the edge
    it lays down has colour |a|. The walk is a path when the realized
    vertices are pairwise distinct, which is a property to check, not
    a construction invariant.
    """

    n: int
    start: int
    steps: tuple[int, ...]

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ParameterError("n must be a positive integer", n=self.n)
        if not (0 <= self.start <= 2 * self.n):
            raise ParameterError("start vertex out of range", start=self.start)
        object.__setattr__(self, "steps", tuple(int(a) for a in self.steps))
        for a in self.steps:
            if not (1 <= abs(a) <= self.n):
                raise ParameterError("step is not a signed colour", step=a)

    def vertices(self) -> tuple[int, ...]:
        m = 2 * self.n + 1
        out = [self.start]
        for a in self.steps:
            out.append((out[-1] + a) % m)
        return tuple(out)

    def colours(self) -> tuple[int, ...]:
        return tuple(abs(a) for a in self.steps)

    @property
    def end(self) -> int:
        m = 2 * self.n + 1
        return (self.start + sum(self.steps)) % m

    def interior(self) -> tuple[int, ...]:
        return self.vertices()[1:-1]

    def is_valid(self) -> bool:
        vs = self.vertices()
        return len(set(vs)) == len(vs)

    def is_rainbow(self) -> bool:
        return len(set(self.colours())) == len(self.steps)


def _check_colour(n: int, c: int, name: str) -> None:
    if not isinstance(c, int) or not (1 <= c <= n):
        raise ParameterError(f"{name} is not a colour", value=c, n=n)


# ---------------------------------------------------------------------------
# 1-in-2 switchers


@dataclass(frozen=True)
class TwoSwitcher:
    """Two x,y-paths of length 7 that differ in exactly one colour.

    Both paths use the six shared colours; path_for(c1) adds c1 and
    path_for(c2) adds c2. Swapping which path is walked swaps which of
    the two colours an enclosing rainbow structure consumes.
    """

    n: int
    x: int
    y: int
    c1: int
    c2: int
    shared_colours: frozenset[int]
    p: PathSpec
    q: PathSpec

    def path_for(self, c: int) -> PathSpec:
        if c == self.c1:
            return self.p
        if c == self.c2:
            return self.q
        raise ParameterError("colour is not one of the switched pair", colour=c)

    def interior_vertices(self) -> frozenset[int]:
        return frozenset(self.p.interior()) | frozenset(self.q.interior())

    def verify(self, forbidden_vertices=(), forbidden_colours=()) -> None:
        """Re-derive every invariant; raises on any mismatch."""
        if len(self.shared_colours) != 6:
            raise GuaranteeViolationError(
                "shared colour set must have six colours", size=len(self.shared_colours)
            )
        for c, path in ((self.c1, self.p), (self.c2, self.q)):
            if path.start != self.x or path.end != self.y:
                raise GuaranteeViolationError(
                    "path endpoints moved", start=path.start, end=path.end
                )
            if len(path.steps) != 7:
                raise GuaranteeViolationError("path length is not 7", got=len(path.steps))
            if not path.is_valid():
                raise GuaranteeViolationError("path revisits a vertex", colour=c)
            if not path.is_rainbow():
                raise GuaranteeViolationError("path repeats a colour", colour=c)
            if set(path.colours()) != set(self.shared_colours) | {c}:
                raise GuaranteeViolationError("path colour set is wrong", colour=c)
        if set(self.p.colours()) ^ set(self.q.colours()) != {self.c1, self.c2}:
            raise GuaranteeViolationError("paths do not switch the advertised pair")
        if self.shared_colours & (set(forbidden_colours) | {self.c1, self.c2}):
            raise GuaranteeViolationError("shared colours hit the forbidden set")
        hit = self.interior_vertices() & set(forbidden_vertices)
        if hit:
            raise GuaranteeViolationError(
                "interior touches a forbidden vertex", vertices=sorted(hit)
            )


def _extended(m: int, path: list[int], step: int, avoid: int) -> int | None:
    """Next vertex of the scaffold walk, or None if it collides."""
    v = (path[-1] + step) % m
    if v == avoid or v in path:
        return None
    return v


def _scaffold(n: int, first: int, k: int, banned: set) -> tuple[int, int, int, int]:
    """Distinct colours d1,d2,d3,d4 with d1+d2 = d3+d4+k mod 2n+1 whose
    step sequences stay vertex-disjoint from both launch points.

    Scans lexicographically; first hit wins so reruns reproduce it.
    """
    m = 2 * n + 1
    a0, b0 = [1, (1 + first) % m], [1, (1 + first + k) % m]
    avoid_a = (1 + first + k) % m
    avoid_b = (1 + first + 2 * k) % m
    for d1 in range(1, n + 1):
        if d1 in banned:
            continue
        a1 = _extended(m, a0, d1, avoid_a)
        b1 = _extended(m, b0, d1, avoid_b)
        if a1 is None or b1 is None:
            continue
        pa1, pb1 = a0 + [a1], b0 + [b1]
        for d2 in range(1, n + 1):
            if d2 in banned or d2 == d1:
                continue
            a2 = _extended(m, pa1, d2, avoid_a)
            b2 = _extended(m, pb1, d2, avoid_b)
            if a2 is None or b2 is None:
                continue
            pa2, pb2 = pa1 + [a2], pb1 + [b2]
            for d3 in range(1, n + 1):
                if d3 in banned or d3 in (d1, d2):
                    continue
                if _extended(m, pa2, -d3, avoid_a) is None:
                    continue
                if _extended(m, pb2, -d3, avoid_b) is None:
                    continue
                d4 = (d1 + d2 - d3 - k) % m
                if not (1 <= d4 <= n) or d4 in banned or d4 in (d1, d2, d3):
                    continue
                return d1, d2, d3, d4
    raise InternalInvariantError(
        "no colour quadruple found", n=n, first=first, k=k
    )


def build_two_switcher(
    n: int,
    x: int,
    y: int,
    c1: int,
    c2: int,
    forbidden_vertices=(),
    forbidden_colours=(),
) -> TwoSwitcher:
    """Length-7 path pair between x and y switching between c1 and c2.

    Normalizes the pair so the second colour is the first plus an even
    step 2k, finds a colour quadruple closing the figure-of-eight, then
    scans the launch offset until both interiors clear the forbidden
    vertices. Deterministic: ascending scans everywhere.
    """
    if not isinstance(n, int) or n < 1:
        raise ParameterError("n must be a positive integer", n=n)
    m = 2 * n + 1
    for name, v in (("x", x), ("y", y)):
        if not isinstance(v, int) or not (0 <= v < m):
            raise ParameterError(f"{name} is not a vertex", value=v, m=m)
    if x == y:
        raise ParameterError("endpoints must differ", x=x)
    _check_colour(n, c1, "c1")
    _check_colour(n, c2, "c2")
    if c1 == c2:
        raise ParameterError("switching a colour with itself is vacuous", c1=c1)
    fx = frozenset(forbidden_vertices)
    fc = frozenset(forbidden_colours)
    if 25 * len(fx) > n:
        raise ParameterError("too many forbidden vertices", size=len(fx), limit=n // 25)
    if 25 * len(fc) > n:
        raise ParameterError("too many forbidden colours", size=len(fc), limit=n // 25)

    # 2 is invertible mod the odd order; swap the pair if the half-step
    # lands in the upper range
    k = ((c2 - c1) * (n + 1)) % m
    first, second = c1, c2
    if k > n:
        k = m - k
        first, second = c2, c1

    banned = set(fc) | {c1, c2}
    d1, d2, d3, d4 = _scaffold(n, first, k, banned)

    off_p = [0, first, first + d1, first + d1 + d2, first + d1 + d2 - d3, first + k]
    off_q = [0, second, second + d4, second + d4 + d3, second + d4 + d3 - d2, first + k]
    quad = {d1, d2, d3, d4}
    for i in range(1, n + 1):
        if i in banned or i in quad:
            continue
        base = (x + i) % m
        ints_p = {(base + o) % m for o in off_p}
        ints_q = {(base + o) % m for o in off_q}
        ints = ints_p | ints_q
        if x in ints or y in ints:
            continue
        seventh = (base + first + k) % m
        r = (y - seventh) % m
        e = min(r, m - r)
        if e == 0 or e == i or e in banned or e in quad:
            continue
        if ints & fx:
            continue
        last = r if r <= n else r - m
        p = PathSpec(n, x, (i, first, d1, d2, -d3, -d4, last))
        q = PathSpec(n, x, (i, second, d4, d3, -d2, -d1, last))
        if first != c1:
            p, q = q, p
        sw = TwoSwitcher(
            n=n,
            x=x,
            y=y,
            c1=c1,
            c2=c2,
            shared_colours=frozenset({i, d1, d2, d3, d4, e}),
            p=p,
            q=q,
        )
        sw.verify(forbidden_vertices=fx, forbidden_colours=fc)
        return sw
    raise InternalInvariantError(
        "launch offset scan exhausted", n=n, x=x, y=y, c1=c1, c2=c2
    )


# ---------------------------------------------------------------------------
# 1-in-l switchers


@dataclass(frozen=True)
class MultiSwitcher:
    """An x,y-path family switching one colour out of up to a hundred.

    selector(c) walks x to the pivot through the link vertex for c,
    then through a chain of two-switchers angled so every link colour
    except the one paired with c gets used. All paths share the same
    colour set apart from the menu colour.
    """

    n: int
    x: int
    y: int
    colours: tuple[int, ...]
    pivot: int
    link_vertices: tuple[int, ...]
    link_colours: tuple[int, ...]
    waypoints: tuple[int, ...]
    switchers: tuple[TwoSwitcher, ...]
    shared_colours: frozenset[int]
    interior_vertices: frozenset[int]

    @property
    def ell(self) -> int:
        return len(self.colours)

    @property
    def path_length(self) -> int:
        return 7 * (self.ell - 1) + 2

    def selector(self, c: int) -> PathSpec:
        """The (shared + {c})-rainbow x,y-path for menu colour c."""
        if c not in self.colours:
            raise ParameterError("colour is not on the menu", colour=c)
        j = self.colours.index(c)
        steps = [self.link_colours[j], -self.colours[j]]
        for i, sw in enumerate(self.switchers):
            carry = self.link_colours[i] if i < j else self.link_colours[i + 1]
            steps.extend(sw.path_for(carry).steps)
        return PathSpec(self.n, self.x, tuple(steps))

    def verify(self, forbidden_vertices=(), forbidden_colours=()) -> None:
        ell = self.ell
        if len(self.shared_colours) != ell + 6 * (ell - 1):
            raise GuaranteeViolationError(
                "shared colour count is off",
                got=len(self.shared_colours),
                want=ell + 6 * (ell - 1),
            )
        if self.shared_colours & (set(forbidden_colours) | set(self.colours)):
            raise GuaranteeViolationError("shared colours hit the forbidden set")
        if self.interior_vertices & (set(forbidden_vertices) | {self.x, self.y}):
            raise GuaranteeViolationError("interior set touches a forbidden vertex")
        for c in self.colours:
            path = self.selector(c)
            if path.start != self.x or path.end != self.y:
                raise GuaranteeViolationError("selector endpoints moved", colour=c)
            if len(path.steps) != self.path_length:
                raise GuaranteeViolationError("selector path length is off", colour=c)
            if not path.is_valid():
                raise GuaranteeViolationError("selector path revisits a vertex", colour=c)
            if not path.is_rainbow():
                raise GuaranteeViolationError("selector path repeats a colour", colour=c)
            if set(path.colours()) != set(self.shared_colours) | {c}:
                raise GuaranteeViolationError("selector colour set is wrong", colour=c)
            if not set(path.interior()) <= self.interior_vertices:
                raise GuaranteeViolationError("selector leaves the vertex budget", colour=c)


def build_multi_switcher(
    n: int,
    x: int,
    y: int,
    colours,
    forbidden_vertices=(),
    forbidden_colours=(),
) -> MultiSwitcher:
    """Chain two-switchers into a 1-in-l colour switcher between x and y.

    A pivot vertex turns each menu colour c_i into a link colour d_i
    via a length-2 detour, so switching among menu colours reduces to
    switching among the d_i along a fixed chain.
    """
    if not isinstance(n, int) or n < 1:
        raise ParameterError("n must be a positive integer", n=n)
    m = 2 * n + 1
    cols = tuple(sorted(set(int(c) for c in colours)))
    if len(cols) != len(tuple(colours)):
        raise ParameterError("menu colours must be distinct")
    ell = len(cols)
    if not (2 <= ell <= 100):
        raise ParameterError("menu size must be between 2 and 100", ell=ell)
    for c in cols:
        _check_colour(n, c, "menu colour")
    for name, v in (("x", x), ("y", y)):
        if not isinstance(v, int) or not (0 <= v < m):
            raise ParameterError(f"{name} is not a vertex", value=v, m=m)
    if x == y:
        raise ParameterError("endpoints must differ", x=x)
    fx = frozenset(forbidden_vertices)
    fc = frozenset(forbidden_colours)
    if 1000 * len(fx) > n:
        raise ParameterError("too many forbidden vertices", size=len(fx), limit=n // 1000)
    if 1000 * len(fc) > n:
        raise ParameterError("too many forbidden colours", size=len(fc), limit=n // 1000)

    banned_links = set(cols) | set(fc)
    pivot = link_vs = link_cs = None
    for cand in range(m):
        if cand in fx or cand in (x, y):
            continue
        ds, ys = [], []
        for c in cols:
            d = (cand - x + c) % m
            if not (1 <= d <= n) or d in banned_links:
                break
            yv = (cand + c) % m
            if yv in fx or yv in (x, y, cand):
                break
            ds.append(d)
            ys.append(yv)
        else:
            pivot, link_cs, link_vs = cand, tuple(ds), tuple(ys)
            break
    if pivot is None:
        raise InternalInvariantError("no pivot vertex found", n=n, x=x, y=y)

    taken = set(fx) | {x, y, pivot} | set(link_vs)
    mids = []
    cand = 0
    while len(mids) < ell - 2:
        if cand >= m:
            raise InternalInvariantError("ran out of waypoint vertices", n=n)
        if cand not in taken:
            mids.append(cand)
            taken.add(cand)
        cand += 1
    waypoints = (x, pivot, *mids, y)

    switchers = []
    used_vertices = set(fx) | set(waypoints) | set(link_vs)
    used_colours = set(fc) | set(cols) | set(link_cs)
    for i in range(ell - 1):
        sw = build_two_switcher(
            n,
            waypoints[i + 1],
            waypoints[i + 2],
            link_cs[i],
            link_cs[i + 1],
            forbidden_vertices=used_vertices,
            forbidden_colours=used_colours,
        )
        switchers.append(sw)
        used_vertices |= sw.interior_vertices()
        used_colours |= sw.shared_colours

    shared = set(link_cs)
    for sw in switchers:
        shared |= sw.shared_colours
    if len(shared) != ell + 6 * (ell - 1):
        raise InternalInvariantError(
            "shared colours collided", got=len(shared), want=ell + 6 * (ell - 1)
        )
    interior = set(link_vs) | set(waypoints[1:-1])
    for sw in switchers:
        interior |= sw.interior_vertices()

    ms = MultiSwitcher(
        n=n,
        x=x,
        y=y,
        colours=cols,
        pivot=pivot,
        link_vertices=link_vs,
        link_colours=link_cs,
        waypoints=waypoints,
        switchers=tuple(switchers),
        shared_colours=frozenset(shared),
        interior_vertices=frozenset(interior),
    )
    ms.verify(forbidden_vertices=fx, forbidden_colours=fc)
    return ms


# ---------------------------------------------------------------------------
# matching switchers over any 2-factorized colouring


@dataclass(frozen=True)
class MatchingSwitcher:
    """A Figure-of-matchings gadget: one perfect matching per menu colour.

    matching_for(c_j) pairs x_j with its colour-c_j leaf and everyone
    else with a link vertex, so the link colours are all used and c_j
    is the only menu colour consumed.
    """

    colours: tuple[int, ...]
    xs: tuple[int, ...]
    ys: tuple[int, ...]
    link_colours: tuple[int, ...]
    z_left: tuple[int, ...]
    z_right: tuple[int, ...]

    @property
    def ell(self) -> int:
        return len(self.colours)

    def edges(self) -> tuple[tuple[int, int, int], ...]:
        """Every edge the gadget owns, as (source, target, colour)."""
        out = [(self.xs[i], self.ys[i], self.colours[i]) for i in range(self.ell)]
        for i in range(self.ell - 1):
            out.append((self.xs[i], self.z_left[i], self.link_colours[i]))
            out.append((self.xs[i + 1], self.z_right[i], self.link_colours[i]))
        return tuple(out)

    def matching_for(self, c: int) -> tuple[tuple[int, int, int], ...]:
        if c not in self.colours:
            raise ParameterError("colour is not on the menu", colour=c)
        j = self.colours.index(c)
        out = [(self.xs[j], self.ys[j], c)]
        for i in range(j):
            out.append((self.xs[i], self.z_left[i], self.link_colours[i]))
        for i in range(j, self.ell - 1):
            out.append((self.xs[i + 1], self.z_right[i], self.link_colours[i]))
        return tuple(sorted(out))

    def source_vertices(self) -> frozenset[int]:
        return frozenset(self.xs)

    def target_vertices(self) -> frozenset[int]:
        return frozenset(self.ys) | frozenset(self.z_left) | frozenset(self.z_right)

    def verify(self, colouring) -> None:
        if len(set(self.colours)) != self.ell or len(set(self.xs)) != self.ell:
            raise GuaranteeViolationError("menu colours or sources repeat")
        if len(set(self.link_colours)) != self.ell - 1:
            raise GuaranteeViolationError("link colours repeat")
        if set(self.link_colours) & set(self.colours):
            raise GuaranteeViolationError("link colours hit the menu")
        if self.source_vertices() & self.target_vertices():
            raise GuaranteeViolationError("sources and targets overlap")
        for a, b, c in self.edges():
            if colouring.colour_of(a, b) != c:
                raise GuaranteeViolationError(
                    "edge colour is wrong", edge=(a, b), want=c
                )
        want = set(self.link_colours)
        for c in self.colours:
            matching = self.matching_for(c)
            srcs = [e[0] for e in matching]
            tgts = [e[1] for e in matching]
            if sorted(srcs) != sorted(self.xs):
                raise GuaranteeViolationError("matching misses a source", colour=c)
            if len(set(tgts)) != self.ell:
                raise GuaranteeViolationError("matching reuses a target", colour=c)
            if sorted(e[2] for e in matching) != sorted(want | {c}):
                raise GuaranteeViolationError("matching colour set is wrong", colour=c)


def build_matching_switcher(
    colouring,
    source_pool,
    partner_pool,
    link_pool,
    link_colour_pool,
    target_colours,
) -> MatchingSwitcher:
    """Greedy matching switcher over any 2-factorized colouring.

    Picks, per menu colour, the smallest source with a partner of that
    colour, then stitches consecutive sources together through link
    vertices sharing a link colour. Missing edges are reported with
    the blocking index rather than patched over.
    """
    targets = tuple(int(c) for c in target_colours)
    if len(set(targets)) != len(targets) or not targets:
        raise ParameterError("target colours must be distinct and nonempty")
    sources = sorted(set(source_pool))
    partners = set(partner_pool)
    links = set(link_pool)
    link_cs = sorted(set(link_colour_pool))
    if set(sources) & partners:
        raise ParameterError("source and partner pools overlap")

    used = set()
    xs, ys = [], []
    for i, c in enumerate(targets):
        hit = None
        for xv in sources:
            if xv in used:
                continue
            cands = [
                u
                for u in colouring.neighbours_by_colour(xv, c)
                if u in partners and u not in used
            ]
            if cands:
                hit = (xv, min(cands))
                break
        if hit is None:
            raise ConstructionFailureError(
                "no available edge of a menu colour", colour=c, index=i
            )
        xs.append(hit[0])
        ys.append(hit[1])
        used.update(hit)

    ds, zl, zr = [], [], []
    for i in range(len(targets) - 1):
        hit = None
        for d in link_cs:
            if d in targets or d in ds:
                continue
            a = [
                u
                for u in colouring.neighbours_by_colour(xs[i], d)
                if u in links and u not in used
            ]
            b = [
                u
                for u in colouring.neighbours_by_colour(xs[i + 1], d)
                if u in links and u not in used
            ]
            if a and b:
                hit = (d, min(a), min(b))
                break
        if hit is None:
            raise ConstructionFailureError(
                "no shared link colour for consecutive sources", index=i
            )
        ds.append(hit[0])
        zl.append(hit[1])
        zr.append(hit[2])
        used.update(hit[1:])

    sw = MatchingSwitcher(
        colours=targets,
        xs=tuple(xs),
        ys=tuple(ys),
        link_colours=tuple(ds),
        z_left=tuple(zl),
        z_right=tuple(zr),
    )
    sw.verify(colouring)
    return sw


# ---------------------------------------------------------------------------
# robustly matchable bipartite graphs


def maximum_bipartite_matching(adj, n_right: int) -> list[int]:
    """Kuhn's augmenting-path matching; adj maps left index to rights.

    Returns the matched right per left vertex, -1 where unmatched.
    """
    match_left = [-1] * len(adj)
    match_right = [-1] * n_right

    def augment(u: int, seen: list[bool]) -> bool:
        for v in adj[u]:
            if seen[v]:
                continue
            seen[v] = True
            if match_right[v] < 0 or augment(match_right[v], seen):
                match_right[v] = u
                match_left[u] = v
                return True
        return False

    for u in range(len(adj)):
        augment(u, [False] * n_right)
    return match_left


@dataclass(frozen=True)
class RMBG:
    """Bipartite template on 3h lefts vs 2h + 2h rights.

    Rights 0..2h-1 are the fixed half, 2h..4h-1 the reservoir half.
    The robust property: any h reservoir rights, together with the
    fixed half, can be perfectly matched from the left class.
    """

    h: int
    degree_bound: int
    edges: tuple[tuple[int, int], ...]

    @property
    def left_size(self) -> int:
        return 3 * self.h

    @property
    def right_size(self) -> int:
        return 4 * self.h

    def adjacency(self) -> list[list[int]]:
        adj = [[] for _ in range(self.left_size)]
        for u, v in self.edges:
            adj[u].append(v)
        return adj

    def max_degree(self) -> int:
        deg = [0] * (self.left_size + self.right_size)
        for u, v in self.edges:
            deg[u] += 1
            deg[self.left_size + v] += 1
        return max(deg)


def _rmbg_subset_ok(adj, h: int, allowed: frozenset[int]) -> bool:
    filtered = [[v for v in row if v in allowed] for row in adj]
    match = maximum_bipartite_matching(filtered, 4 * h)
    return all(v >= 0 for v in match)


def verify_rmbg(g: RMBG, samples: int = 1000, seed: int = 0) -> bool:
    """Exhaustive reservoir-subset check for h <= 5, sampled above."""
    adj = g.adjacency()
    fixed = range(2 * g.h)
    reservoir = list(range(2 * g.h, 4 * g.h))
    if g.max_degree() > g.degree_bound:
        return False
    if g.h <= 5:
        pool = itertools.combinations(reservoir, g.h)
    else:
        rng = np.random.default_rng(seed)
        pool = (
            rng.choice(reservoir, size=g.h, replace=False) for _ in range(samples)
        )
    for subset in pool:
        if not _rmbg_subset_ok(adj, g.h, frozenset(fixed) | frozenset(int(v) for v in subset)):
            return False
    return True


def build_rmbg(h: int, degree_bound: int = 100, seed: int = 0, max_retries: int = 50) -> RMBG:
    """A verified robustly matchable template at scale h.

    Small scales fit the complete bipartite graph under the degree
    bound; beyond that, seeded random left-neighbourhoods are drawn
    and verified, retrying with fresh randomness on failure.
    """
    if not isinstance(h, int) or h < 1:
        raise ParameterError("h must be a positive integer", h=h)
    if degree_bound < 4:
        raise ParameterError("degree bound too small to be matchable", bound=degree_bound)
    if 4 * h <= degree_bound:
        edges = tuple(
            (u, v) for u in range(3 * h) for v in range(4 * h)
        )
        g = RMBG(h=h, degree_bound=degree_bound, edges=edges)
        if not verify_rmbg(g, seed=seed):
            raise InternalInvariantError("complete template failed verification", h=h)
        return g

    per_left = min(degree_bound, 4 * h, 32)
    for attempt in range(max_retries):
        rng = np.random.default_rng((seed, attempt))
        rows = [
            sorted(int(v) for v in rng.choice(4 * h, size=per_left, replace=False))
            for _ in range(3 * h)
        ]
        right_deg = [0] * (4 * h)
        for row in rows:
            for v in row:
                right_deg[v] += 1
        if max(right_deg) > degree_bound:
            continue
        g = RMBG(
            h=h,
            degree_bound=degree_bound,
            edges=tuple((u, v) for u, row in enumerate(rows) for v in row),
        )
        if verify_rmbg(g, seed=seed):
            return g
    raise ConstructionFailureError(
        "randomized template search exceeded its retry budget",
        h=h,
        retries=max_retries,
    )


# ---------------------------------------------------------------------------
# the flexible set: distributive absorption


@dataclass(frozen=True)
class FlexibleSet:
    """Per-template-vertex matching switchers wired to an RMBG.

    Fixed colours sit on the template's fixed rights, reservoir
    colours on the reservoir rights. Any draw of h reservoir colours
    can be absorbed: the template matches lefts to colours, and each
    left's switcher realizes its assigned colour.
    """

    template: RMBG
    units: tuple[MatchingSwitcher, ...]
    fixed_colours: tuple[int, ...]
    reservoir_colours: tuple[int, ...]

    @property
    def draw_size(self) -> int:
        return self.template.h

    def right_colour(self, r: int) -> int:
        k = 2 * self.template.h
        return self.fixed_colours[r] if r < k else self.reservoir_colours[r - k]

    def source_vertices(self) -> frozenset[int]:
        out = frozenset()
        for u in self.units:
            out |= u.source_vertices()
        return out

    def link_colour_union(self) -> frozenset[int]:
        out = frozenset()
        for u in self.units:
            out |= frozenset(u.link_colours)
        return out

    def expected_colours(self, c_star) -> frozenset[int]:
        return frozenset(c_star) | frozenset(self.fixed_colours) | self.link_colour_union()

    def verify_disjoint(self) -> None:
        """Units must not share sources, targets, or link colours."""
        seen_v, seen_c = set(), set()
        for i, u in enumerate(self.units):
            verts = u.source_vertices() | u.target_vertices()
            if verts & seen_v:
                raise GuaranteeViolationError("units share a vertex", unit=i)
            if set(u.link_colours) & seen_c:
                raise GuaranteeViolationError("units share a link colour", unit=i)
            seen_v |= verts
            seen_c |= set(u.link_colours)


def assemble_flexible_set(
    template: RMBG,
    colouring,
    fixed_colours,
    reservoir_colours,
    source_pool,
    partner_pool,
    link_pool,
    link_colour_pool,
    switcher_factory=build_matching_switcher,
) -> FlexibleSet:
    """One matching switcher per template left, over disjoint resources.

    Each left vertex needs a switcher for the colours sitting on its
    template neighbours; pools shrink as units claim vertices and link
    colours, which is what makes the final absorption matchings unite
    without clashes.
    """
    h = template.h
    fixed = tuple(int(c) for c in fixed_colours)
    reservoir = tuple(int(c) for c in reservoir_colours)
    if len(fixed) != 2 * h or len(reservoir) != 2 * h:
        raise ParameterError(
            "colour lists must each cover a template half",
            fixed=len(fixed),
            reservoir=len(reservoir),
            want=2 * h,
        )
    if len(set(fixed) | set(reservoir)) != 4 * h:
        raise ParameterError("template colours must be distinct")
    right_colour = fixed + reservoir

    srcs = set(source_pool)
    partners = set(partner_pool)
    links = set(link_pool)
    link_cs = set(link_colour_pool)
    if link_cs & set(right_colour):
        raise ParameterError("link colour pool collides with template colours")

    adj = template.adjacency()
    units = []
    for u in range(template.left_size):
        targets = tuple(right_colour[r] for r in sorted(adj[u]))
        sw = switcher_factory(colouring, srcs, partners, links, link_cs, targets)
        units.append(sw)
        srcs -= sw.source_vertices()
        partners -= sw.target_vertices()
        links -= sw.target_vertices()
        link_cs -= set(sw.link_colours)

    fs = FlexibleSet(
        template=template,
        units=tuple(units),
        fixed_colours=fixed,
        reservoir_colours=reservoir,
    )
    fs.verify_disjoint()
    return fs


def absorb(fs: FlexibleSet, c_star) -> tuple[tuple[int, int, int], ...]:
    """Perfect rainbow matching using exactly c_star plus the fixed stock.

    Matches template lefts onto the fixed rights plus the drawn
    reservoir rights, then concatenates each unit's matching for its
    assigned colour.
    """
    draw = frozenset(int(c) for c in c_star)
    if len(draw) != fs.draw_size:
        raise ParameterError(
            "draw has the wrong size", got=len(draw), want=fs.draw_size
        )
    if not draw <= set(fs.reservoir_colours):
        raise ParameterError("draw must come from the reservoir")

    h = fs.template.h
    allowed = set(range(2 * h))
    for idx, c in enumerate(fs.reservoir_colours):
        if c in draw:
            allowed.add(2 * h + idx)
    adj = fs.template.adjacency()
    filtered = [[v for v in row if v in allowed] for row in adj]
    assignment = maximum_bipartite_matching(filtered, 4 * h)
    if any(v < 0 for v in assignment):
        raise InternalInvariantError(
            "template has no matching for this draw; the robust property failed",
            draw=sorted(draw),
        )

    edges: list[tuple[int, int, int]] = []
    for u, r in enumerate(assignment):
        edges.extend(fs.units[u].matching_for(fs.right_colour(r)))
    edges.sort()

    used_colours = {e[2] for e in edges}
    if used_colours != fs.expected_colours(draw):
        raise InternalInvariantError("absorbed colour set is wrong")
    srcs = [e[0] for e in edges]
    tgts = [e[1] for e in edges]
    if len(edges) != len(used_colours) or len(set(srcs)) != len(edges) or len(
        set(tgts)
    ) != len(edges):
        raise InternalInvariantError("absorbed matching is not a rainbow matching")
    return tuple(edges)


# ---------------------------------------------------------------------------
# covering matchings and connecting paths


def cover_colours_matching(
    colouring,
    sources,
    targets,
    required_colours,
    fill_colours,
) -> tuple[tuple[int, int, int], ...]:
    """Perfect rainbow matching from sources hitting every required colour.

    Required colours are matched first, each at the smallest available
    source; leftover sources then take the smallest target giving any
    unused fill colour. Stalls name the stuck colour or vertex.
    """
    srcs = sorted(set(sources))
    tgts = sorted(set(targets))
    if set(srcs) & set(tgts):
        raise ParameterError("source and target pools overlap")
    required = sorted(set(required_colours))
    fill = set(fill_colours)
    if len(required) > len(srcs):
        raise ParameterError(
            "more required colours than sources", required=len(required), sources=len(srcs)
        )

    used_v, used_c = set(), set()
    out = []
    for c in required:
        hit = None
        for xv in srcs:
            if xv in used_v:
                continue
            cands = [
                u
                for u in colouring.neighbours_by_colour(xv, c)
                if u in set(tgts) and u not in used_v
            ]
            if cands:
                hit = (xv, min(cands), c)
                break
        if hit is None:
            raise ConstructionFailureError(
                "a required colour has no available edge", colour=c
            )
        out.append(hit)
        used_v.update(hit[:2])
        used_c.add(c)

    for xv in srcs:
        if xv in used_v:
            continue
        hit = None
        for tv in tgts:
            if tv in used_v:
                continue
            c = colouring.colour_of(xv, tv)
            if c in fill and c not in used_c:
                hit = (xv, tv, c)
                break
        if hit is None:
            raise ConstructionFailureError(
                "a source has no usable fill edge", vertex=xv
            )
        out.append(hit)
        used_v.update(hit[:2])
        used_c.add(hit[2])
    return tuple(out)


def connect_pairs_length3(
    colouring,
    pairs,
    vertex_pool,
    colour_pool,
) -> tuple[tuple[int, int, int, int], ...]:
    """Vertex-disjoint length-3 paths between given pairs, jointly rainbow.

    Greedy one pair at a time: smallest usable middle edge wins. A pair
    with no admissible middle edge is reported by its index.
    """
    pair_list = [(int(a), int(b)) for a, b in pairs]
    ends = [v for p in pair_list for v in p]
    if len(set(ends)) != len(ends):
        raise ParameterError("pair endpoints must be distinct")
    pool = sorted(set(vertex_pool) - set(ends))
    allowed_c = set(colour_pool)

    used_v, used_c = set(), set()
    out = []
    for idx, (a, b) in enumerate(pair_list):
        hit = None
        for u in pool:
            if u in used_v:
                continue
            c1 = colouring.colour_of(a, u)
            if c1 not in allowed_c or c1 in used_c:
                continue
            for v in pool:
                if v in used_v or v == u:
                    continue
                c2 = colouring.colour_of(u, v)
                c3 = colouring.colour_of(v, b)
                if len({c1, c2, c3}) != 3:
                    continue
                if c2 not in allowed_c or c3 not in allowed_c:
                    continue
                if c2 in used_c or c3 in used_c:
                    continue
                hit = (u, v, c1, c2, c3)
                break
            if hit:
                break
        if hit is None:
            raise ConstructionFailureError(
                "no connecting path for a pair", pair=idx, endpoints=(a, b)
            )
        u, v, c1, c2, c3 = hit
        out.append((a, u, v, b))
        used_v.update((u, v))
        used_c.update((c1, c2, c3))
    return tuple(out)


# ---------------------------------------------------------------------------
# finishing-parameter arithmetic


def validate_finishing_parameter(k: int) -> None:
    """The segment parameter must be 7 mod 12 and a multiple of 695.

    Values failing either condition are rejected, never rounded.
    """
    if not isinstance(k, int) or k < 1:
        raise ParameterError("parameter must be a positive integer", k=k)
    if k % 12 != 7:
        raise ParameterError("parameter must be 7 mod 12", k=k, residue=k % 12)
    if k % 695 != 0:
        raise ParameterError("parameter must be a multiple of 695", k=k)


def smallest_finishing_parameter(at_least: int = 1) -> int:
    """Smallest admissible segment parameter >= at_least."""
    if not isinstance(at_least, int) or at_least < 1:
        raise ParameterError("bound must be a positive integer", at_least=at_least)
    k = 695 * ((at_least + 694) // 695)
    while k % 12 != 7:
        k += 695
    return k
