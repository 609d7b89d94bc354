"""Trees and their structural analysis.

Beyond the Tree value type (canonical edge array, Prufer codec, text
formats) this module houses the structure lemmas the embedders lean on:

* leaves_or_bare_paths: every tree has many leaves or many disjoint
  bare paths (a bare path is one whose internal vertices have degree 2).
* divide_tree: edge-partition a tree into subtrees of comparable size.
* classify_case: every tree falls into case A (many spread-out leaves),
  case B (many long disjoint bare paths) or case C (a few vertices hold
  almost all vertices as leaf-children), witnessed constructively.
* split_layers: peel a tree into five nested forests (small core, stars,
  leaf-matchings, length-3 bare paths, leaf-matchings) with size bounds.

Everything is deterministic; greedy choices break ties by smallest
vertex index so repeated runs produce identical witnesses.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    DecompositionError,
    GuaranteeViolationError,
    InternalInvariantError,
    ParameterError,
    TreeError,
)


class Tree:
    """An unrooted tree on vertices {0..m-1} with a canonical edge array.

    Edges are stored as a (m-1, 2) integer array with each row sorted and
    rows in lexicographic order, so equal trees compare equal bytewise.
    Adjacency is materialized lazily in CSR form; the hot callers
    (classification at scale) only touch numpy arrays.
    """

    __slots__ = ("m", "_earr", "_indptr", "_indices", "_degrees", "_edge_cache")

    def __init__(self, m: int, earr: np.ndarray):
        # internal: use the from_* constructors
        self.m = m
        self._earr = earr
        self._indptr = None
        self._indices = None
        self._degrees = None
        self._edge_cache = None

    @staticmethod
    def _canonical(m: int, earr: np.ndarray) -> np.ndarray:
        earr = np.sort(earr.reshape(-1, 2), axis=1)
        if len(earr):
            earr = earr[np.lexsort((earr[:, 1], earr[:, 0]))]
        return np.ascontiguousarray(earr, dtype=np.int64)

    @classmethod
    def from_edge_list(cls, pairs, m: int | None = None) -> "Tree":
        earr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
        if m is None:
            if len(earr) == 0:
                raise TreeError("cannot infer vertex count from an empty edge list")
            m = int(earr.max()) + 1
        if m < 1:
            raise TreeError("vertex count must be positive", m=m)
        if len(earr) != m - 1:
            raise TreeError("a tree on m vertices has m-1 edges", m=m, edges=len(earr))
        if len(earr):
            if earr.min() < 0 or earr.max() >= m:
                raise TreeError("edge endpoint out of range", m=m)
            if np.any(earr[:, 0] == earr[:, 1]):
                raise TreeError("self-loop in edge list")
        earr = cls._canonical(m, earr)
        if len(earr):
            codes = earr[:, 0] * m + earr[:, 1]
            if len(np.unique(codes)) != len(earr):
                raise TreeError("duplicate edge in edge list")
        t = cls(m, earr)
        if not t._is_connected():
            raise TreeError("edge list is not connected", m=m)
        return t

    @classmethod
    def from_parents(cls, parents) -> "Tree":
        """Build from a parent array with parents[i] < i for i >= 1.

        The shape guarantees tree-ness, so validation is O(m) vectorized;
        this is the fast path for bulk random generation.
        """
        parents = np.asarray(parents, dtype=np.int64)
        m = len(parents)
        if m < 1:
            raise TreeError("empty parent array")
        idx = np.arange(m, dtype=np.int64)
        if m > 1 and not np.all((parents[1:] >= 0) & (parents[1:] < idx[1:])):
            raise TreeError("parents[i] must lie in [0, i) for i >= 1")
        earr = np.stack([parents[1:], idx[1:]], axis=1)
        return cls(m, cls._canonical(m, earr))

    @classmethod
    def from_prufer(cls, seq, m: int | None = None) -> "Tree":
        """Standard Prufer decoding; a sequence of length m-2 over {0..m-1}."""
        seq = [int(x) for x in seq]
        if m is None:
            m = len(seq) + 2
        if m < 2 or len(seq) != m - 2:
            raise TreeError("Prufer sequence must have length m-2", m=m, length=len(seq))
        if any(x < 0 or x >= m for x in seq):
            raise TreeError("Prufer entry out of range", m=m)
        deg = [1] * m
        for x in seq:
            deg[x] += 1
        edges = np.empty((m - 1, 2), dtype=np.int64)
        ptr = 0
        leaf = -1
        for i, x in enumerate(seq):
            if leaf < 0:
                while deg[ptr] != 1:
                    ptr += 1
                leaf = ptr
            edges[i, 0] = leaf
            edges[i, 1] = x
            deg[leaf] = 0
            deg[x] -= 1
            # the freed vertex re-enters immediately only if the pointer
            # has not passed it; otherwise the scan will find it later
            if deg[x] == 1 and x < ptr:
                leaf = x
            else:
                leaf = -1
        if leaf < 0:
            while deg[ptr] != 1:
                ptr += 1
            leaf = ptr
        edges[m - 2, 0] = leaf
        edges[m - 2, 1] = m - 1
        return cls(m, cls._canonical(m, edges))

    def to_prufer(self) -> tuple[int, ...]:
        """Inverse of from_prufer; smallest-leaf-first elimination."""
        m = self.m
        if m < 2:
            raise TreeError("Prufer encoding needs at least 2 vertices", m=m)
        if m == 2:
            return ()
        parent = self._parents_toward(m - 1)
        deg = self.degrees.tolist()
        seq = []
        ptr = 0
        leaf = -1
        for _ in range(m - 2):
            if leaf < 0:
                while deg[ptr] != 1:
                    ptr += 1
                leaf = ptr
            p = parent[leaf]
            seq.append(p)
            deg[leaf] = 0
            deg[p] -= 1
            if deg[p] == 1 and p < ptr:
                leaf = p
            else:
                leaf = -1
        return tuple(seq)

    def _ensure_csr(self):
        if self._indptr is None:
            m = self.m
            if len(self._earr):
                src = np.concatenate([self._earr[:, 0], self._earr[:, 1]])
                dst = np.concatenate([self._earr[:, 1], self._earr[:, 0]])
                order = np.lexsort((dst, src))
                self._indices = np.ascontiguousarray(dst[order])
                counts = np.bincount(src, minlength=m)
            else:
                self._indices = np.empty(0, dtype=np.int64)
                counts = np.zeros(m, dtype=np.int64)
            self._indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
            self._degrees = counts.astype(np.int64)

    @property
    def degrees(self) -> np.ndarray:
        self._ensure_csr()
        return self._degrees

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        if self._edge_cache is None:
            self._edge_cache = tuple(map(tuple, self._earr.tolist()))
        return self._edge_cache

    def edge_array(self) -> np.ndarray:
        return self._earr

    def neighbours(self, v: int) -> np.ndarray:
        self._ensure_csr()
        return self._indices[self._indptr[v] : self._indptr[v + 1]]

    def adjacency_lists(self) -> list[list[int]]:
        self._ensure_csr()
        indptr = self._indptr.tolist()
        indices = self._indices.tolist()
        return [indices[indptr[v] : indptr[v + 1]] for v in range(self.m)]

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.degrees == 1)

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbours(u)
        pos = np.searchsorted(nb, v)
        return pos < len(nb) and nb[pos] == v

    def _parents_toward(self, root: int) -> list[int]:
        adj = self.adjacency_lists()
        parent = [-1] * self.m
        parent[root] = root
        stack = [root]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if parent[w] < 0:
                    parent[w] = v
                    stack.append(w)
        parent[root] = -1
        return parent

    def _is_connected(self) -> bool:
        if self.m == 1:
            return True
        seen = np.zeros(self.m, dtype=bool)
        seen[0] = True
        queue = deque([0])
        count = 1
        while queue:
            v = queue.popleft()
            for w in self.neighbours(v).tolist():
                if not seen[w]:
                    seen[w] = True
                    count += 1
                    queue.append(w)
        return count == self.m

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Tree)
            and self.m == other.m
            and self._earr.shape == other._earr.shape
            and bool(np.all(self._earr == other._earr))
        )

    def __hash__(self) -> int:
        return hash((self.m, self._earr.tobytes()))

    def __repr__(self) -> str:
        return f"Tree(m={self.m}, edges={self.edges!r})"


# ---------------------------------------------------------------------------
# text formats


def parse_tree_text(text: str) -> Tree:
    """Edge format: first line m, then m-1 lines "u v"."""
    lines = [ln for ln in (s.strip() for s in text.splitlines()) if ln]
    if not lines:
        raise TreeError("empty tree file")
    try:
        m = int(lines[0])
    except ValueError as exc:
        raise TreeError("first line must be the vertex count") from exc
    if len(lines) != m:
        raise TreeError("expected m-1 edge lines after the count", m=m, lines=len(lines) - 1)
    pairs = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise TreeError("edge lines must contain two integers", line=ln)
        pairs.append((int(parts[0]), int(parts[1])))
    return Tree.from_edge_list(pairs, m=m)


def parse_prufer_text(text: str) -> Tree:
    """Prufer format: a single line of m-2 space-separated integers."""
    lines = [ln for ln in (s.strip() for s in text.splitlines()) if ln]
    if len(lines) > 1:
        raise TreeError("Prufer format is a single line")
    seq = [int(x) for x in lines[0].split()] if lines else []
    return Tree.from_prufer(seq)


def format_tree_text(t: Tree) -> str:
    out = [str(t.m)]
    out.extend(f"{u} {v}" for u, v in t.edges)
    return "\n".join(out) + "\n"


def random_attachment_tree(m: int, rng: np.random.Generator) -> Tree:
    """Uniform random-attachment tree: vertex i attaches to a uniform j < i."""
    if m < 1:
        raise ParameterError("need at least one vertex", m=m)
    parents = np.zeros(m, dtype=np.int64)
    if m > 1:
        parents[1:] = rng.integers(0, np.arange(1, m))
    return Tree.from_parents(parents)


# ---------------------------------------------------------------------------
# pieces and forests


@dataclass(frozen=True)
class Piece:
    """A connected subtree of a host tree, kept in the host's labels."""

    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def size(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class Forest:
    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Star:
    centre: int
    leaf_set: tuple[int, ...]


# ---------------------------------------------------------------------------
# leaves or bare paths


def _maximal_bare_chains(t: Tree) -> list[list[int]]:
    """Maximal paths whose internal vertices have degree 2, as vertex lists.

    Endpoints are the incident vertices of degree != 2 (leaves or branch
    vertices); each chain is reported once.
    """
    deg = t.degrees
    adj = t.adjacency_lists()
    visited = [False] * t.m
    chains = []
    for a in np.flatnonzero(deg != 2).tolist():
        for w in adj[a]:
            if deg[w] == 2 and not visited[w]:
                seq = [a, w]
                visited[w] = True
                prev, cur = a, w
                while deg[cur] == 2:
                    nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
                    seq.append(nxt)
                    if deg[nxt] == 2:
                        visited[nxt] = True
                    prev, cur = cur, nxt
                chains.append(seq)
    return chains


def _pack_bare_paths(t: Tree, k: int) -> list[tuple[int, ...]]:
    """Greedy family of vertex-disjoint bare paths with exactly k edges.

    Chains only share endpoints, so packing each chain left to right with
    an occupancy check on the window ends keeps the family disjoint.
    Longest chains are packed first.
    """
    if k < 1:
        raise ParameterError("path length must be positive", k=k)
    deg = t.degrees
    # quick reject: a bare path with k edges needs k-1 internal deg-2
    # vertices forming one chain; bound the longest chain first
    deg2 = deg == 2
    if np.count_nonzero(deg2) < k - 1:
        longest = 1 if len(t._earr) else 0
        if longest < k:
            return []
    chains = _maximal_bare_chains(t)
    if t.m >= 2 and not chains:
        # tree with every vertex of degree != 2 still has length-1 chains
        chains = []
    chains.sort(key=lambda c: (-len(c), c[0]))
    used = np.zeros(t.m, dtype=bool)
    paths = []
    for chain in chains:
        last = len(chain) - 1
        i = 0
        while i + k <= last:
            if used[chain[i]] or used[chain[i + k]]:
                i += 1
                continue
            window = chain[i : i + k + 1]
            paths.append(tuple(window))
            used[window] = True
            i += k + 1
    return paths


def leaves_or_bare_paths(t: Tree, k: int):
    """Either many leaves or many disjoint bare paths with k edges.

    Returns ("leaves", vertex tuple) or ("paths", tuple of vertex tuples);
    the winning side has at least floor(n / 4k) entries.
    """
    if not isinstance(k, int) or k <= 2:
        raise ParameterError("k must be an integer greater than 2", k=k)
    n = t.m
    if n < 4 * k:
        raise ParameterError("guarantee is vacuous below 4k vertices", n=n, k=k)
    threshold = n // (4 * k)
    leaves = t.leaves()
    if len(leaves) >= threshold:
        return ("leaves", tuple(leaves.tolist()))
    paths = _pack_bare_paths(t, k)
    if len(paths) >= threshold:
        return ("paths", tuple(paths))
    raise GuaranteeViolationError(
        "neither enough leaves nor enough bare paths",
        n=n,
        k=k,
        threshold=threshold,
        leaves=len(leaves),
        paths=len(paths),
    )


# ---------------------------------------------------------------------------
# divide_tree


def divide_tree(t: Tree, m: int) -> tuple[Piece, ...]:
    """Edge-partition t into subtrees with m <= size <= 4m vertices.

    Repeatedly splits off a small subtree of m..2m-1 vertices at the
    deepest vertex whose subtree still holds at least m vertices; the
    split vertex is shared between the piece and the remainder.
    """
    if not isinstance(m, int) or m < 2:
        raise ParameterError("piece size must be an integer >= 2", m=m)
    if t.m < m:
        raise ParameterError("tree smaller than one piece", n=t.m, m=m)
    adj = {v: set(t.neighbours(v).tolist()) for v in range(t.m)}
    current = set(range(t.m))
    pieces = []

    while len(current) > 4 * m:
        root = min(current)
        parent = {root: -1}
        order = [root]
        stack = [root]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in parent:
                    parent[w] = v
                    order.append(w)
                    stack.append(w)
        size = {v: 1 for v in current}
        children = {v: [] for v in current}
        for v in reversed(order):
            p = parent[v]
            if p >= 0:
                size[p] += size[v]
                children[p].append(v)
        # deepest vertex whose subtree holds at least m vertices
        v = root
        while True:
            big = [c for c in children[v] if size[c] >= m]
            if not big:
                break
            v = min(big)
        grabbed = []
        s = 0
        for c in sorted(children[v]):
            grabbed.append(c)
            s += size[c]
            if s >= m - 1:
                break
        if s < m - 1:
            raise InternalInvariantError("split vertex lost its weight", vertex=v)
        piece_vertices = {v}
        piece_edges = []
        stack = list(grabbed)
        for c in grabbed:
            piece_edges.append((min(v, c), max(v, c)))
        while stack:
            x = stack.pop()
            piece_vertices.add(x)
            for w in children[x]:
                piece_edges.append((min(x, w), max(x, w)))
                stack.append(w)
        if not (m <= len(piece_vertices) <= 3 * m):
            raise InternalInvariantError(
                "piece size out of range", size=len(piece_vertices), m=m
            )
        pieces.append(
            Piece(tuple(sorted(piece_vertices)), tuple(sorted(piece_edges)))
        )
        for x in piece_vertices - {v}:
            for w in adj[x]:
                adj[w].discard(x)
            adj[x] = set()
            current.discard(x)

    rest_edges = set()
    for v in current:
        for w in adj[v]:
            rest_edges.add((min(v, w), max(v, w)))
    pieces.append(Piece(tuple(sorted(current)), tuple(sorted(rest_edges))))
    total = sum(len(p.edges) for p in pieces)
    if total != t.m - 1:
        raise InternalInvariantError("pieces do not partition the edges", total=total)
    for p in pieces:
        if not (m <= p.size <= 4 * m):
            raise InternalInvariantError("final piece size out of range", size=p.size, m=m)
    return tuple(pieces)


# ---------------------------------------------------------------------------
# case classification


def as_fraction(delta) -> Fraction:
    """Exact rational view of a tolerance parameter.

    Floats go through their decimal string so 0.01 means 1/100, not the
    nearest binary float.
    """
    if isinstance(delta, Fraction):
        return delta
    if isinstance(delta, int):
        return Fraction(delta)
    if isinstance(delta, float):
        return Fraction(str(delta))
    if isinstance(delta, str):
        try:
            return Fraction(delta)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParameterError("delta is not a rational literal", delta=delta) from exc
    raise ParameterError("unsupported delta type", type=type(delta).__name__)


@dataclass(frozen=True)
class CaseWitness:
    """Constructive witness for the A/B/C case division.

    Exactly one payload group is populated. ``threshold`` is the already
    rounded bound the payload was checked against and ``rounding`` names
    the direction used.
    """

    case: str
    n: int
    delta: Fraction
    threshold: int
    rounding: str
    leaf_witness: tuple[int, ...] = ()
    path_witness: tuple[tuple[int, ...], ...] = ()
    pruned_vertices: tuple[int, ...] = ()
    centres: tuple[int, ...] = ()
    leaf_counts: tuple[int, ...] = ()

    def validate(self, t: Tree) -> None:
        """Re-check the case inequality against t; raises on any mismatch."""
        n = t.m
        if n != self.n:
            raise GuaranteeViolationError("witness bound to a different tree", n=n)
        delta = self.delta
        deg = t.degrees
        if self.case == "A":
            thr = _ceil_frac(delta**6 * n)
            w = self.leaf_witness
            if len(w) < thr or len(set(w)) != len(w):
                raise GuaranteeViolationError("leaf witness too small", count=len(w), threshold=thr)
            parents = []
            for v in w:
                if deg[v] != 1:
                    raise GuaranteeViolationError("witness vertex is not a leaf", vertex=int(v))
                parents.append(int(t.neighbours(v)[0]))
            if len(set(parents)) != len(parents):
                raise GuaranteeViolationError("witness leaves share a parent")
            ws = set(w)
            for v, p in zip(w, parents):
                if p in ws:
                    raise GuaranteeViolationError("witness leaves adjacent", pair=(int(v), p))
        elif self.case == "B":
            k = _ceil_frac(1 / delta)
            thr = _ceil_frac(delta * n / 800)
            if len(self.path_witness) < thr:
                raise GuaranteeViolationError(
                    "too few bare paths", count=len(self.path_witness), threshold=thr
                )
            seen = set()
            for path in self.path_witness:
                if len(path) - 1 < k:
                    raise GuaranteeViolationError("bare path too short", length=len(path) - 1, k=k)
                for u, v in zip(path, path[1:]):
                    if not t.has_edge(u, v):
                        raise GuaranteeViolationError("witness path edge missing", edge=(u, v))
                for v in path[1:-1]:
                    if deg[v] != 2:
                        raise GuaranteeViolationError("internal vertex not bare", vertex=int(v))
                for v in path:
                    if v in seen:
                        raise GuaranteeViolationError("witness paths overlap", vertex=int(v))
                    seen.add(v)
        elif self.case == "C":
            thr_centre = _ceil_frac(1 / delta**4)
            leaves = t.leaves()
            parent_of_leaf = t._indices[t._indptr[leaves]]
            cnt = np.bincount(parent_of_leaf, minlength=n)
            true_centres = np.flatnonzero(cnt >= thr_centre)
            if tuple(true_centres.tolist()) != self.centres:
                raise GuaranteeViolationError("centre list mismatch")
            if tuple(cnt[true_centres].tolist()) != self.leaf_counts:
                raise GuaranteeViolationError("leaf count mismatch")
            pruned = set(leaves[cnt[parent_of_leaf] >= thr_centre].tolist())
            kept = tuple(v for v in range(n) if v not in pruned)
            if kept != self.pruned_vertices:
                raise GuaranteeViolationError("pruned tree mismatch")
            if len(kept) * 100 > n:
                raise GuaranteeViolationError(
                    "pruned tree too large", kept=len(kept), n=n
                )
        else:
            raise GuaranteeViolationError("unknown case", case=self.case)


def _ceil_frac(x) -> int:
    return int(math.ceil(x))


def classify_case(t: Tree, delta) -> CaseWitness:
    """Classify t as case A, B or C with a validating witness.

    Preference order is C, then B, then A. Pruning removes every leaf
    whose neighbour has at least ceil(delta^-4) leaf-children; case C
    holds when at most floor(n/100) vertices survive. Case B packs
    vertex-disjoint bare paths with ceil(1/delta) edges; case A collects
    leaves with pairwise distinct neighbours.
    """
    delta = as_fraction(delta)
    if not (0 < delta <= Fraction(1, 20)):
        raise ParameterError("delta must lie in (0, 0.05]", delta=str(delta))
    n = t.m
    deg = t.degrees
    leaves = t.leaves()

    if n >= 2:
        t._ensure_csr()
        parent_of_leaf = t._indices[t._indptr[leaves]]
        thr_centre = _ceil_frac(1 / delta**4)
        cnt = np.bincount(parent_of_leaf, minlength=n)
        centres = np.flatnonzero(cnt >= thr_centre)
        if len(centres):
            pruned_mask = cnt[parent_of_leaf] >= thr_centre
            kept_count = n - int(np.count_nonzero(pruned_mask))
            if kept_count * 100 <= n:
                pruned = set(leaves[pruned_mask].tolist())
                kept = tuple(v for v in range(n) if v not in pruned)
                return CaseWitness(
                    case="C",
                    n=n,
                    delta=delta,
                    threshold=n // 100,
                    rounding="floor",
                    pruned_vertices=kept,
                    centres=tuple(centres.tolist()),
                    leaf_counts=tuple(cnt[centres].tolist()),
                )

        k = _ceil_frac(1 / delta)
        thr_b = _ceil_frac(delta * n / 800)
        paths = _pack_bare_paths(t, k)
        if len(paths) >= thr_b:
            return CaseWitness(
                case="B",
                n=n,
                delta=delta,
                threshold=thr_b,
                rounding="ceil",
                path_witness=tuple(paths),
            )

        thr_a = _ceil_frac(delta**6 * n)
        if n == 2:
            chosen = [0]
        else:
            # leaves ascending; first occurrence per parent keeps the
            # smallest leaf; distinct parents imply non-adjacency for n >= 3
            _, first = np.unique(parent_of_leaf, return_index=True)
            chosen = leaves[np.sort(first)].tolist()
        if len(chosen) >= thr_a:
            return CaseWitness(
                case="A",
                n=n,
                delta=delta,
                threshold=thr_a,
                rounding="ceil",
                leaf_witness=tuple(int(v) for v in chosen),
            )

    raise GuaranteeViolationError(
        "no case witness found", n=n, delta=str(delta)
    )


# ---------------------------------------------------------------------------
# five-layer splitting


@dataclass(frozen=True)
class LayerDecomposition:
    """Five nested forests T1 .. T5 = T described by their additions.

    Forward reading: T2 = T1 plus vertex-disjoint stars (each at least d
    new leaves, centre in T1 or new); T3 = T2 plus the leaf matchings in
    ``leaf_batches_3`` in order (a matching adds pairwise non-adjacent
    new vertices, each with exactly one neighbour present); T4 = T3 plus
    vertex-disjoint length-3 bare paths with new internal vertices; T5 =
    T4 plus the matchings in ``leaf_batches_5``.
    """

    tree: Tree
    d: int
    t1: Forest
    stars: tuple[Star, ...]
    leaf_batches_3: tuple[tuple[int, ...], ...]
    paths_4: tuple[tuple[int, int, int, int], ...]
    leaf_batches_5: tuple[tuple[int, ...], ...]

    def forests(self) -> tuple[Forest, ...]:
        """Materialize T1..T5 by replaying the additions."""
        t = self.tree
        verts = set(self.t1.vertices)
        edges = set(self.t1.edges)
        out = [Forest(tuple(sorted(verts)), tuple(sorted(edges)))]
        for star in self.stars:
            verts.add(star.centre)
            for leaf in star.leaf_set:
                verts.add(leaf)
                edges.add(_norm_edge(star.centre, leaf))
        out.append(Forest(tuple(sorted(verts)), tuple(sorted(edges))))
        for batch in self.leaf_batches_3:
            for v in batch:
                p = _present_neighbour(t, v, verts)
                verts.add(v)
                edges.add(_norm_edge(v, p))
        out.append(Forest(tuple(sorted(verts)), tuple(sorted(edges))))
        for a, b, c, e in self.paths_4:
            verts.update((b, c))
            edges.update({_norm_edge(a, b), _norm_edge(b, c), _norm_edge(c, e)})
        out.append(Forest(tuple(sorted(verts)), tuple(sorted(edges))))
        for batch in self.leaf_batches_5:
            for v in batch:
                p = _present_neighbour(t, v, verts)
                verts.add(v)
                edges.add(_norm_edge(v, p))
        out.append(Forest(tuple(sorted(verts)), tuple(sorted(edges))))
        return tuple(out)

    def validate(self, u=None) -> None:
        """Replay the layers and check every size and kind constraint."""
        t = self.tree
        n = t.m
        d = self.d
        verts = set(self.t1.vertices)
        edge_count = len(self.t1.edges)
        for uu, vv in self.t1.edges:
            if not t.has_edge(uu, vv):
                raise DecompositionError("T1 edge not in tree", edge=(uu, vv))
            if uu not in verts or vv not in verts:
                raise DecompositionError("T1 edge endpoint outside T1")
        # T1 must be induced: any tree edge inside V(T1) belongs to T1
        eset = set(self.t1.edges)
        for uu in verts:
            for vv in t.neighbours(uu).tolist():
                if vv in verts and _norm_edge(uu, vv) not in eset:
                    raise DecompositionError("missing induced T1 edge", edge=(uu, vv))
        if len(verts) * d > n:
            raise DecompositionError("T1 too large", t1=len(verts), bound=n // d)
        if u is not None:
            uset = set(int(x) for x in u)
            got = len(uset & verts)
            if got * d**6 < n:
                raise DecompositionError(
                    "too few marked vertices in T1", marked=got, n=n, d=d
                )

        star_vertices = set()
        for star in self.stars:
            if len(star.leaf_set) < d:
                raise DecompositionError("star too small", centre=star.centre, size=len(star.leaf_set))
            group = set(star.leaf_set)
            if star.centre not in verts:
                group.add(star.centre)
            if group & star_vertices:
                raise DecompositionError("stars overlap", centre=star.centre)
            star_vertices |= group
            if set(star.leaf_set) & verts:
                raise DecompositionError("star leaf already present", centre=star.centre)
            for leaf in star.leaf_set:
                if not t.has_edge(star.centre, leaf):
                    raise DecompositionError("star edge not in tree", edge=(star.centre, leaf))
        for star in self.stars:
            verts.add(star.centre)
            verts.update(star.leaf_set)
            edge_count += len(star.leaf_set)
        for star in self.stars:
            for leaf in star.leaf_set:
                nbrs = set(t.neighbours(leaf).tolist())
                if len(nbrs & verts) != 1:
                    raise DecompositionError("star leaf is not a leaf after stars", leaf=leaf)

        if len(self.leaf_batches_3) > d**8:
            raise DecompositionError("too many leaf matchings before the paths")
        for batch in self.leaf_batches_3:
            edge_count += _check_leaf_batch(t, batch, verts)
        t3_verts = set(verts)

        if len(self.paths_4) > n // d:
            raise DecompositionError("too many length-3 paths", count=len(self.paths_4))
        comp = _UnionFind(n)
        for uu, vv in _forest_edges_of(t, t3_verts):
            comp.union(uu, vv)
        path_vertices = set()
        for a, b, c, e in self.paths_4:
            if a not in t3_verts or e not in t3_verts:
                raise DecompositionError("path endpoint not present", path=(a, b, c, e))
            if b in t3_verts or c in t3_verts:
                raise DecompositionError("path interior already present", path=(a, b, c, e))
            for x in (a, b, c, e):
                if x in path_vertices:
                    raise DecompositionError("paths overlap", vertex=x)
            path_vertices.update((a, b, c, e))
            for x, y in ((a, b), (b, c), (c, e)):
                if not t.has_edge(x, y):
                    raise DecompositionError("path edge not in tree", edge=(x, y))
            if comp.find(a) == comp.find(e):
                raise DecompositionError("path joins a component to itself", path=(a, b, c, e))
            comp.union(a, e)
        for a, b, c, e in self.paths_4:
            verts.update((b, c))
            edge_count += 3
        for a, b, c, e in self.paths_4:
            if len(set(t.neighbours(b).tolist()) & verts) != 2:
                raise DecompositionError("path interior degree not 2", vertex=b)
            if len(set(t.neighbours(c).tolist()) & verts) != 2:
                raise DecompositionError("path interior degree not 2", vertex=c)

        if len(self.leaf_batches_5) > d**8:
            raise DecompositionError("too many leaf matchings after the paths")
        for batch in self.leaf_batches_5:
            edge_count += _check_leaf_batch(t, batch, verts)

        if len(verts) != n or edge_count != n - 1:
            raise DecompositionError(
                "layers do not reassemble the tree", vertices=len(verts), edges=edge_count
            )


def _norm_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def _present_neighbour(t: Tree, v: int, verts: set) -> int:
    present = [w for w in t.neighbours(v).tolist() if w in verts]
    if len(present) != 1:
        raise DecompositionError("added leaf has wrong attachment count", vertex=v, count=len(present))
    return present[0]


def _check_leaf_batch(t: Tree, batch, verts: set) -> int:
    bset = set(batch)
    if len(bset) != len(batch):
        raise DecompositionError("duplicate vertex in leaf matching")
    for v in batch:
        if v in verts:
            raise DecompositionError("matching vertex already present", vertex=v)
        nbrs = set(t.neighbours(v).tolist())
        if nbrs & bset:
            raise DecompositionError("matching vertices adjacent", vertex=v)
        if len(nbrs & verts) != 1:
            raise DecompositionError("matching vertex not a pendant leaf", vertex=v)
    verts |= bset
    return len(batch)


def _forest_edges_of(t: Tree, verts: set):
    for v in verts:
        for w in t.neighbours(v).tolist():
            if w > v and w in verts:
                yield (v, w)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def split_layers(t: Tree, d: int, u) -> LayerDecomposition:
    """Peel t into the five-layer decomposition, protecting marked vertices.

    Reverse construction: strip leaf matchings (reserving leaves whose
    parent holds at least d of them for the star layer), cut length-3
    windows out of long bare chains, strip leaf matchings again, then
    strip the reserved stars. What survives is T1. Four schedules are
    tried in order (pinning the marked survivors or not, reserving
    stars or not) and the first decomposition meeting every bound is
    returned. Fails loudly when all four miss.
    """
    n = t.m
    if not isinstance(d, int) or d < 2:
        raise ParameterError("d must be an integer >= 2", d=d)
    uset = sorted({int(x) for x in u})
    for x in uset:
        if not (0 <= x < n):
            raise ParameterError("marked vertex out of range", vertex=x)
    if len(uset) * d**3 < n or not uset:
        raise ParameterError(
            "marked set too small", marked=len(uset), required=-(-n // d**3)
        )
    q = -(-n // d**6)
    protected = set(uset[:q])

    # Try the gentlest schedule first: no pinned vertices and star
    # reservation on. Pinning guarantees marked survivors when luck
    # fails; dropping reservation lets leaf clusters peel as matchings
    # when keeping them as stars would leave T1 too big.
    first_error = None
    for pins, with_stars in (
        (set(), True),
        (protected, True),
        (set(), False),
        (protected, False),
    ):
        try:
            ld = _peel(t, d, pins, with_stars)
            ld.validate(uset)
            return ld
        except DecompositionError as exc:
            if first_error is None:
                first_error = exc
    raise DecompositionError(
        "all peeling passes missed a bound",
        first=first_error.message,
        first_details=first_error.details,
    )


def _peel(t: Tree, d: int, protected: set, with_stars: bool) -> LayerDecomposition:
    n = t.m
    adj = t.adjacency_lists()
    alive = [True] * n
    deg = t.degrees.tolist()

    def removable_leaves():
        """One matching of leaves: unprotected, unreserved, non-adjacent."""
        leaves = [v for v in range(n) if alive[v] and deg[v] == 1 and v not in protected]
        if not leaves:
            return []
        parent = {}
        for v in leaves:
            parent[v] = next(w for w in adj[v] if alive[w])
        if with_stars:
            # leaves whose parent holds a full star stay for the star layer
            counts = {}
            for v in leaves:
                counts[parent[v]] = counts.get(parent[v], 0) + 1
            leaves = [v for v in leaves if counts[parent[v]] < d]
        batch = []
        for v in leaves:
            p = parent[v]
            # a 2-vertex component has two mutually adjacent leaves; drop
            # only the larger index so the component survives the round
            if deg[p] == 1 and p not in protected and v < p:
                continue
            batch.append(v)
        return batch

    def remove_batch(batch):
        for v in batch:
            alive[v] = False
        for v in batch:
            for w in adj[v]:
                if alive[w]:
                    deg[w] -= 1
            deg[v] = 0

    batches5 = []
    for _ in range(d**3):
        batch = removable_leaves()
        if not batch:
            break
        remove_batch(batch)
        batches5.append(tuple(batch))

    # cut disjoint 3-edge windows out of long bare chains of the current
    # forest; window interiors become the new vertices of the path layer
    spacing = 4 * d
    budget = n // d
    paths = []
    visited = [False] * n
    anchors = [v for v in range(n) if alive[v] and deg[v] != 2]
    for a in anchors:
        if len(paths) >= budget:
            break
        for w in adj[a]:
            if not alive[w] or deg[w] != 2 or visited[w]:
                continue
            chain = [a, w]
            visited[w] = True
            prev, cur = a, w
            while deg[cur] == 2:
                nxt = next(x for x in adj[cur] if alive[x] and x != prev)
                chain.append(nxt)
                if deg[nxt] == 2:
                    visited[nxt] = True
                prev, cur = cur, nxt
            last = len(chain) - 1
            if last < 2 * spacing + 3:
                continue
            i = spacing
            while i + 3 <= last - spacing and len(paths) < budget:
                b, c = chain[i + 1], chain[i + 2]
                if b in protected or c in protected:
                    i += 1
                    continue
                paths.append((chain[i], b, c, chain[i + 3]))
                remove_batch([b, c])
                i += 3 + spacing
    paths.sort()

    batches3 = []
    for _ in range(d**8):
        batch = removable_leaves()
        if not batch:
            break
        remove_batch(batch)
        batches3.append(tuple(batch))

    stars = []
    if with_stars:
        leaf_children = {}
        for v in range(n):
            if alive[v] and deg[v] == 1 and v not in protected:
                p = next(w for w in adj[v] if alive[w])
                leaf_children.setdefault(p, []).append(v)
        for p in sorted(leaf_children):
            group = sorted(leaf_children[p])
            if len(group) >= d:
                stars.append(Star(p, tuple(group)))
                remove_batch(group)

    t1_vertices = tuple(v for v in range(n) if alive[v])
    alive_set = set(t1_vertices)
    t1_edges = tuple(sorted(_forest_edges_of(t, alive_set)))
    return LayerDecomposition(
        tree=t,
        d=d,
        t1=Forest(t1_vertices, t1_edges),
        stars=tuple(stars),
        leaf_batches_3=tuple(reversed(batches3)),
        paths_4=tuple(paths),
        leaf_batches_5=tuple(reversed(batches5)),
    )


# ---------------------------------------------------------------------------
# isomorphism-class enumeration


def canonical_key(t: Tree):
    """AHU canonical form, rooted at the centre (or centre edge).

    The centre (the 1 or 2 vertices minimizing eccentricity) is
    isomorphism-invariant, so two trees get the same key exactly when
    they are isomorphic.
    """
    m = t.m
    if m == 1:
        return ("c", ())
    adj = t.adjacency_lists()
    # find the centre by stripping leaves level by level
    deg = t.degrees.tolist()
    layer = [v for v in range(m) if deg[v] <= 1]
    removed = 0
    alive = [True] * m
    while m - removed > 2:
        nxt = []
        for v in layer:
            alive[v] = False
            removed += 1
            for w in adj[v]:
                if alive[w]:
                    deg[w] -= 1
                    if deg[w] == 1:
                        nxt.append(w)
        layer = nxt
    centres = [v for v in range(m) if alive[v]]

    def ahu(root, block) -> tuple:
        # iterative post-order so deep paths cannot overflow the stack
        parent = {root: block}
        order = [root]
        stack = [root]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w != parent[v]:
                    parent[w] = v
                    order.append(w)
                    stack.append(w)
        shape = {}
        for v in reversed(order):
            kids = sorted(shape[w] for w in adj[v] if parent.get(w) == v)
            shape[v] = tuple(kids)
        return shape[root]

    if len(centres) == 1:
        return ("c", ahu(centres[0], -1))
    a, b = centres
    return ("e", tuple(sorted([ahu(a, b), ahu(b, a)])))


def enumerate_tree_classes(max_m: int) -> dict[int, list[Tree]]:
    """All isomorphism classes of trees with up to max_m vertices.

    Grown by leaf extension with canonical-form dedup; every class on m
    vertices arises from some class on m-1 vertices by adding a leaf.
    """
    if max_m < 1:
        raise ParameterError("need at least one vertex", max_m=max_m)
    classes = {1: [Tree.from_parents([0])]}
    for m in range(2, max_m + 1):
        seen = {}
        for t in classes[m - 1]:
            base = t.edges
            for v in range(t.m):
                t2 = Tree.from_edge_list(base + ((v, m - 1),), m=m)
                key = canonical_key(t2)
                if key not in seen:
                    seen[key] = t2
        classes[m] = [t for _, t in sorted(seen.items())]
    return classes
