"""Deterministic rainbow embedders for trees dominated by leafy centres.

Three constructions, each verified on output rather than trusted:

* one large vertex: the centre goes to 1, the rest of the tree is
  embedded greedily into [n], and the missing leaves land at 2n+2-c
  for each unused colour c, which buys colour c exactly.
* small tree into prescribed intervals: the vertex classes V0, V1, V2
  go into disjoint intervals I0, I1, I2, with V1 and V2 spread one
  vertex per length-k^3 subinterval so consecutive images stay close.
* multi-centre assembly: embed the pruned tree with the centres held
  in narrow intervals, split the unused colours into consecutive
  blocks, and attach each centre's leaves by adding or subtracting its
  block, direction chosen by centre type.

All greedy choices take the smallest available value, so outputs are
deterministic functions of the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmbeddingFailureError,
    InternalInvariantError,
    NotApplicableError,
    ParameterError,
    RingelError,
)
from .ndcolour import Embedding, colour_of
from .tree import Tree


def log_ceil(n: int) -> int:
    """Ceiling of the natural log; the rounding used by every threshold here."""
    if n < 2:
        return 1
    return math.ceil(math.log(n))


def paper_gap(n: int) -> int:
    """Default bound on the spacing of consecutive images in I1 or I2."""
    return 16 * log_ceil(n) ** 3


def paper_block_parameter(n: int) -> int:
    """Largest odd k <= 2 ln n; the colour-residue modulus is 2k+1."""
    k = int(2 * math.log(n)) if n >= 2 else 1
    if k % 2 == 0:
        k -= 1
    return max(k, 1)


def default_min_leaf_count(n: int) -> int:
    return math.ceil(math.log(n) ** 4) if n >= 2 else 1


# ---------------------------------------------------------------------------
# one large vertex


def embed_one_large_vertex(t: Tree, n: int) -> Embedding:
    """Rainbow-embed an (n+1)-vertex tree with a vertex holding >= 2n/3 leaves.

    The centre is fixed at 1 and the tree minus the centre's leaves is
    embedded greedily in [n]: at each step at most |T'| vertices are
    occupied and 2|T'| more are blocked through used colours, which is
    under n, so a free vertex with a fresh colour always exists. Each
    unused colour c is then bought by the leaf 2n+2-c.
    """
    if not isinstance(n, int) or n < 1:
        raise ParameterError("n must be a positive integer", n=n)
    if t.m != n + 1:
        raise ParameterError("tree must have n+1 vertices", m=t.m, n=n)
    m_mod = 2 * n + 1

    need = -(-2 * n // 3)
    leaf_mask = t.degrees == 1
    # count leaf neighbours per vertex through the edge array
    earr = t.edge_array()
    a, b = earr[:, 0], earr[:, 1]
    la, lb = leaf_mask[a], leaf_mask[b]
    counts = np.bincount(b[la], minlength=t.m) + np.bincount(a[lb], minlength=t.m)
    candidates = np.flatnonzero(counts >= need)
    if len(candidates) == 0:
        raise NotApplicableError(
            "no vertex holds enough leaves", required=need, best=int(counts.max(initial=0))
        )
    v1 = int(candidates[0])

    dropped = np.concatenate([a[(b == v1) & la], b[(a == v1) & lb]])
    dropped = sorted(int(v) for v in dropped)
    keep_set = set(range(t.m)) - set(dropped)

    image = [-1] * t.m
    image[v1] = 1
    occupied = bytearray(m_mod)
    occupied[1] = 1
    colour_used = bytearray(n + 1)

    # jump[x] = a candidate >= x with everything in between occupied;
    # compressed as the occupied prefix grows
    jump = list(range(n + 2))

    def first_free(x: int) -> int:
        trail = []
        while x <= n:
            x = jump[x]
            if x > n or not occupied[x]:
                break
            trail.append(x)
            x += 1
        for s in trail:
            jump[s] = x
        return x

    order = _bfs_order(t, v1, keep_set)
    parent = _bfs_parents(t, v1, keep_set)
    for v in order[1:]:
        ip = image[parent[v]]
        u = first_free(1)
        c = 0
        while u <= n:
            d = (u - ip) % m_mod
            c = d if d <= n else m_mod - d
            if not colour_used[c]:
                break
            u = first_free(u + 1)
        if u > n:
            raise InternalInvariantError("greedy ran out of room", vertex=v)
        image[v] = u
        occupied[u] = 1
        colour_used[c] = 1

    unused = [c for c in range(1, n + 1) if not colour_used[c]]
    if len(unused) != len(dropped):
        raise InternalInvariantError(
            "leaf count does not match unused colours",
            leaves=len(dropped),
            colours=len(unused),
        )
    for leaf, c in zip(dropped, unused):
        image[leaf] = (2 * n + 2 - c) % m_mod

    emb = Embedding(n, tuple(image))
    _verify_exact_rainbow(t, emb, stage="one_large_vertex")
    return emb


def _bfs_order(t: Tree, root: int, allowed: set) -> list[int]:
    order = [root]
    seen = {root}
    head = 0
    while head < len(order):
        v = order[head]
        head += 1
        for w in t.neighbours(v).tolist():
            if w in allowed and w not in seen:
                seen.add(w)
                order.append(w)
    return order


def _bfs_parents(t: Tree, root: int, allowed: set) -> dict:
    parent = {root: root}
    queue = [root]
    head = 0
    while head < len(queue):
        v = queue[head]
        head += 1
        for w in t.neighbours(v).tolist():
            if w in allowed and w not in parent:
                parent[w] = v
                queue.append(w)
    return parent


def _verify_exact_rainbow(t: Tree, emb: Embedding, stage: str) -> None:
    """Injective image, distinct colours, and (for n+1 vertices) all of [n]."""
    n = emb.n
    m_mod = 2 * n + 1
    img = np.asarray(emb.image, dtype=np.int64)
    values, val_counts = np.unique(img, return_counts=True)
    if len(values) != t.m:
        clash = int(values[val_counts > 1][0])
        where = [int(v) for v in np.flatnonzero(img == clash)[:2]]
        raise EmbeddingFailureError(
            "two vertices share an image", stage=stage, image=clash, vertices=where
        )
    earr = t.edge_array()
    if len(earr):
        d = (img[earr[:, 0]] - img[earr[:, 1]]) % m_mod
        col = np.minimum(d, m_mod - d)
        cols, col_counts = np.unique(col, return_counts=True)
        if len(cols) != len(earr):
            clash = int(cols[col_counts > 1][0])
            raise EmbeddingFailureError(
                "two edges share a colour", stage=stage, colour=clash
            )
        if t.m == n + 1 and (len(cols) != n or cols[0] != 1 or cols[-1] != n):
            raise EmbeddingFailureError(
                "colours do not cover [n]", stage=stage, used=len(cols)
            )


# ---------------------------------------------------------------------------
# small tree into prescribed intervals


@dataclass(frozen=True)
class IntervalPlan:
    """Three disjoint target intervals with the vertex classes they host.

    Intervals are inclusive integer pairs inside [0, 2n]. ``gap`` bounds
    the distance between consecutive images in i1 and in i2; the default
    16*ceil(ln n)^3 matches the residue construction at full scale.
    """

    n: int
    i0: tuple[int, int]
    i1: tuple[int, int]
    i2: tuple[int, int]
    v0: tuple[int, ...]
    v1: tuple[int, ...]
    v2: tuple[int, ...]
    gap: int | None = None

    def __post_init__(self):
        if self.gap is None:
            object.__setattr__(self, "gap", paper_gap(self.n))
        object.__setattr__(self, "v0", tuple(int(x) for x in self.v0))
        object.__setattr__(self, "v1", tuple(int(x) for x in self.v1))
        object.__setattr__(self, "v2", tuple(int(x) for x in self.v2))

    def intervals(self) -> tuple[tuple[int, int], ...]:
        return (self.i0, self.i1, self.i2)

    def classes(self) -> tuple[tuple[int, ...], ...]:
        return (self.v0, self.v1, self.v2)

    def validate(self, t: Tree) -> None:
        m_mod = 2 * self.n + 1
        for lo, hi in self.intervals():
            if not (0 <= lo <= hi < m_mod):
                raise ParameterError("interval out of range", interval=(lo, hi))
        spans = sorted(self.intervals())
        for (alo, ahi), (blo, bhi) in zip(spans, spans[1:]):
            if ahi >= blo:
                raise ParameterError(
                    "intervals overlap", first=(alo, ahi), second=(blo, bhi)
                )
        allv = self.v0 + self.v1 + self.v2
        if sorted(allv) != list(range(t.m)):
            raise ParameterError("classes must partition the tree's vertices")
        for (lo, hi), vs in zip(self.intervals(), self.classes()):
            if hi - lo + 1 < len(vs):
                raise ParameterError(
                    "interval cannot hold its class", interval=(lo, hi), size=len(vs)
                )
        if self.gap < 1:
            raise ParameterError("gap bound must be positive", gap=self.gap)

    def meets_paper_bounds(self) -> bool:
        """The full-scale hypotheses; desk-scale plans usually miss them."""
        lg3 = log_ceil(self.n) ** 3
        lg4 = log_ceil(self.n) ** 4
        if _length(self.i0) < 7 * len(self.v0):
            return False
        for iv, vs in ((self.i1, self.v1), (self.i2, self.v2)):
            if _length(iv) < 8 * len(vs) * lg3:
                return False
            if len(vs) * lg4 > 2 * self.n:
                return False
        return True


def _length(iv: tuple[int, int]) -> int:
    return iv[1] - iv[0] + 1


def choose_block_parameter(plan: IntervalPlan) -> int:
    """Largest odd k, capped at the full-scale value, whose k^3-subintervals fit."""
    k = paper_block_parameter(plan.n)
    for iv, vs in ((plan.i1, plan.v1), (plan.i2, plan.v2)):
        if vs:
            k = min(k, int(round((_length(iv) // len(vs)) ** (1 / 3))))
    while k > 1 and (k % 2 == 0 or any(
        vs and k**3 * len(vs) > _length(iv)
        for iv, vs in ((plan.i1, plan.v1), (plan.i2, plan.v2))
    )):
        k -= 1
    return max(k, 1)


@dataclass(frozen=True)
class StepRecord:
    """One greedy step: where a tree vertex went and what the step saw."""

    vertex: int
    image: int
    colour: int | None
    part: int
    class_index: int | None
    free_slots: tuple[int, int]


@dataclass(frozen=True)
class SmallTreeReport:
    embedding: Embedding
    k: int
    steps: tuple[StepRecord, ...]
    used_class_indices: tuple[tuple[int, ...], tuple[int, ...]]

    def top_classes_unused(self) -> bool:
        """Whether the last residue class of each used part stayed untouched."""
        return all(self.k not in used for used in self.used_class_indices)

    def claim_violations(self) -> tuple[tuple[int, int, int, int], ...]:
        """Steps where class s of part p was used with >= |V_p|/2^s slots free.

        Returns (part, class_index, vertex, free_before) tuples. The
        threshold claim fails by construction at s=1 (the first vertex
        of a part uses class 1 with every slot free), so callers treat
        s=1 rows as informational and s>=2 rows as genuine anomalies.
        """
        sizes = {1: 0, 2: 0}
        for rec in self.steps:
            if rec.part in (1, 2):
                sizes[rec.part] += 1
        out = []
        for rec in self.steps:
            if rec.class_index is None or rec.part not in (1, 2):
                continue
            free = rec.free_slots[rec.part - 1]
            if free * 2**rec.class_index >= sizes[rec.part]:
                out.append((rec.part, rec.class_index, rec.vertex, free))
        return tuple(out)


def embed_small_tree_intervals(t: Tree, plan: IntervalPlan, n: int) -> Embedding:
    """Rainbow-embed t with each class landing inside its planned interval."""
    return embed_small_tree_report(t, plan, n).embedding


def embed_small_tree_report(t: Tree, plan: IntervalPlan, n: int) -> SmallTreeReport:
    """As embed_small_tree_intervals, but keeping the per-step trace.

    Colours are split by parity and residue: odd colours (plus even
    multiples of 2k+1) serve I0, while even colours with residue i and
    i+k mod 2k+1 serve the i-th classes of I1 and I2. V1 and V2 vertices
    occupy one length-k^3 subinterval each, which is what keeps
    consecutive images within the gap bound.
    """
    if not isinstance(n, int) or n < 1:
        raise ParameterError("n must be a positive integer", n=n)
    if plan.n != n:
        raise ParameterError("plan built for a different n", plan_n=plan.n, n=n)
    if 100 * t.m > n:
        raise ParameterError("tree too large for interval embedding", m=t.m, n=n)
    plan.validate(t)
    m_mod = 2 * n + 1

    k = choose_block_parameter(plan)
    mod = 2 * k + 1
    part_of = {}
    for p, vs in enumerate(plan.classes()):
        for v in vs:
            part_of[v] = p

    # slot j of part p is [start + j*k^3, start + (j+1)*k^3 - 1]
    slot_starts = {
        p: [plan.intervals()[p][0] + j * k**3 for j in range(len(plan.classes()[p]))]
        for p in (1, 2)
    }
    slot_free = {p: [True] * len(slot_starts[p]) for p in (1, 2)}

    occupied = bytearray(m_mod)
    colour_used = bytearray(n + 1)
    image = [-1] * t.m
    steps = []
    used_idx = {1: set(), 2: set()}

    def free_slot_counts():
        return (sum(slot_free[1]), sum(slot_free[2]))

    def place_in_part0(v, parent_image):
        lo, hi = plan.i0
        for u in range(lo, hi + 1):
            if occupied[u]:
                continue
            if parent_image is None:
                return u, None
            d = (u - parent_image) % m_mod
            c = d if d <= n else m_mod - d
            if not colour_used[c] and (c % 2 == 1 or c % mod == 0):
                return u, c
        raise EmbeddingFailureError(
            "no free vertex in the base interval", stage="small_tree", vertex=v
        )

    def candidate_colours(target, parent_image, lo, hi):
        """Free colours of the target residue class whose edge from the
        parent lands in [lo, hi]; yields (vertex, colour) pairs."""
        p, j = target
        base = j if p == 1 else j + k
        out = []
        for sign in (1, -1):
            # u = parent + sign*c lies in [lo, hi]; solve for c
            if sign == 1:
                clo, chi = (lo - parent_image) % m_mod, (hi - parent_image) % m_mod
            else:
                clo, chi = (parent_image - hi) % m_mod, (parent_image - lo) % m_mod
            segs = [(clo, chi)] if clo <= chi else [(clo, m_mod - 1), (0, chi)]
            for slo, shi in segs:
                slo, shi = max(slo, 1), min(shi, n)
                if slo > shi:
                    continue
                # smallest even c >= slo with c % mod == base
                c = slo + ((base - slo) % mod)
                if c % 2 == 1:
                    c += mod
                for cc in range(c, shi + 1, 2 * mod):
                    if not colour_used[cc]:
                        out.append(((parent_image + sign * cc) % m_mod, cc))
        return out

    def place_in_slots(v, p, parent_image):
        starts = slot_starts[p]
        if parent_image is None:
            for s, start in enumerate(starts):
                if slot_free[p][s]:
                    slot_free[p][s] = False
                    return start, None, None
            raise EmbeddingFailureError(
                "no free subinterval", stage="small_tree", vertex=v
            )
        for j in range(1, k + 1):
            for s, start in enumerate(starts):
                if not slot_free[p][s]:
                    continue
                found = candidate_colours((p, j), parent_image, start, start + k**3 - 1)
                if found:
                    u, c = min(found)
                    slot_free[p][s] = False
                    return u, c, j
        raise EmbeddingFailureError(
            "no residue class reaches a free subinterval", stage="small_tree", vertex=v
        )

    order = _bfs_order(t, 0, set(range(t.m)))
    parent = _bfs_parents(t, 0, set(range(t.m)))
    for v in order:
        p = part_of[v]
        parent_image = None if v == order[0] else image[parent[v]]
        free_before = free_slot_counts()
        if p == 0:
            u, c = place_in_part0(v, parent_image)
            j = None
        else:
            u, c, j = place_in_slots(v, p, parent_image)
            if j is not None:
                used_idx[p].add(j)
        image[v] = u
        occupied[u] = 1
        if c is not None:
            colour_used[c] = 1
        steps.append(StepRecord(v, u, c, p, j, free_before))

    emb = Embedding(n, tuple(image))
    _verify_exact_rainbow(t, emb, stage="small_tree")
    _verify_plan_placement(emb, plan)
    return SmallTreeReport(
        embedding=emb,
        k=k,
        steps=tuple(steps),
        used_class_indices=(tuple(sorted(used_idx[1])), tuple(sorted(used_idx[2]))),
    )


def _verify_plan_placement(emb: Embedding, plan: IntervalPlan) -> None:
    for (lo, hi), vs in zip(plan.intervals(), plan.classes()):
        for v in vs:
            if not (lo <= emb.image[v] <= hi):
                raise EmbeddingFailureError(
                    "vertex escaped its interval",
                    stage="small_tree",
                    vertex=v,
                    image=emb.image[v],
                )
    for p in (1, 2):
        placed = sorted(emb.image[v] for v in plan.classes()[p])
        for a, b in zip(placed, placed[1:]):
            if b - a > plan.gap:
                raise EmbeddingFailureError(
                    "consecutive images exceed the gap bound",
                    stage="small_tree",
                    pair=(a, b),
                    gap=plan.gap,
                )


# ---------------------------------------------------------------------------
# the multi-centre assembly


@dataclass(frozen=True)
class CaseCInstance:
    """A pruned tree plus the leaf counts to restore at chosen centres."""

    base: Tree
    centres: tuple[int, ...]
    leaf_counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "centres", tuple(int(x) for x in self.centres))
        object.__setattr__(self, "leaf_counts", tuple(int(x) for x in self.leaf_counts))

    def validate(self, n: int, d_min: int = 1) -> None:
        if len(self.centres) != len(self.leaf_counts) or not self.centres:
            raise ParameterError(
                "centres and leaf counts must align and be nonempty",
                centres=len(self.centres),
                counts=len(self.leaf_counts),
            )
        if len(set(self.centres)) != len(self.centres):
            raise ParameterError("centres must be distinct")
        for v in self.centres:
            if not (0 <= v < self.base.m):
                raise ParameterError("centre outside the base tree", vertex=v)
        for d in self.leaf_counts:
            if d < max(1, d_min):
                raise ParameterError("leaf count below the minimum", d=d, d_min=d_min)
        if sum(self.leaf_counts) != n + 1 - self.base.m:
            raise ParameterError(
                "leaf counts do not complete an (n+1)-vertex tree",
                total=sum(self.leaf_counts),
                required=n + 1 - self.base.m,
            )

    def full_tree(self) -> Tree:
        """The (n+1)-vertex tree: base labels kept, leaves appended in order."""
        edges = list(self.base.edges)
        nxt = self.base.m
        for v, d in zip(self.centres, self.leaf_counts):
            for _ in range(d):
                edges.append((v, nxt))
                nxt += 1
        return Tree.from_edge_list(edges, m=nxt)

    def leaf_range(self, i: int) -> range:
        """Full-tree indices of centre i's appended leaves."""
        start = self.base.m + sum(self.leaf_counts[:i])
        return range(start, start + self.leaf_counts[i])


@dataclass(frozen=True)
class CentreReport:
    """Where one centre ended up in the assembled embedding."""

    vertex: int
    new_index: int
    vertex_type: int
    anchor: int
    colour_block: tuple[int, int]
    raw_span: tuple[int, int]


@dataclass(frozen=True)
class CaseCReport:
    embedding: Embedding
    n: int
    delegated: bool
    m: int | None
    plan: IntervalPlan | None
    small_tree: SmallTreeReport | None
    centres: tuple[CentreReport, ...]

    def audit_intervals(self) -> dict[str, bool]:
        """Literal containment and ordering conclusions, re-derived.

        Checks, per type: type-1 neighbour values inside [1, u_1);
        type-2 inside (u_2, 0.82n]; type-3 inside [0.96n, 1.92n] with
        both anchors and colour blocks increasing with the index.
        """
        if self.delegated:
            return {"delegated": True}
        n = self.n
        u1 = next(c.anchor for c in self.centres if c.new_index == 1)
        u2 = next((c.anchor for c in self.centres if c.new_index == 2), None)
        out = {
            "type1_low": True,
            "type2_band": True,
            "type3_band": True,
            "type3_ordered": True,
            "blocks_ordered": True,
        }
        last3 = None
        prev_block_hi = None
        for c in sorted(self.centres, key=lambda r: r.new_index):
            lo, hi = c.raw_span
            if c.vertex_type == 1:
                out["type1_low"] &= 1 <= lo and hi < u1
            elif c.vertex_type == 2:
                out["type2_band"] &= u2 is not None and lo > u2 and hi <= 82 * n // 100
            else:
                out["type3_band"] &= 96 * n // 100 <= lo and hi <= 192 * n // 100
                if last3 is not None:
                    out["type3_ordered"] &= last3.anchor < c.anchor and last3.raw_span[1] < lo
                last3 = c
            if prev_block_hi is not None:
                out["blocks_ordered"] &= prev_block_hi < c.colour_block[0]
            prev_block_hi = c.colour_block[1]
        return out


def embed_case_c(inst: CaseCInstance, n: int, d_min: int | None = None) -> Embedding:
    """Rainbow-embed the full tree described by a multi-centre instance."""
    return case_c_report(inst, n, d_min=d_min).embedding


def case_c_report(inst: CaseCInstance, n: int, d_min: int | None = None) -> CaseCReport:
    """As embed_case_c, but keeping anchors, blocks, and the base trace.

    Centres are ordered by decreasing leaf count; the smallest prefix
    holding more than n/20 missing leaves becomes V1 and the remaining
    centres V2. After the base embedding, V1 is relabelled along its
    interval in the zig-zag order (odd indices ascending, then even
    indices descending) and V2 ascending, the unused colours are cut
    into consecutive blocks sized by the relabelled leaf counts, and
    block i attaches at anchor minus colour (type 1, odd index) or
    anchor plus colour (types 2 and 3).
    """
    if not isinstance(n, int) or n < 1:
        raise ParameterError("n must be a positive integer", n=n)
    if d_min is None:
        d_min = default_min_leaf_count(n)
    inst.validate(n, d_min=d_min)
    if 100 * inst.base.m > n:
        raise ParameterError(
            "base tree too large", m=inst.base.m, limit=n // 100
        )
    m_mod = 2 * n + 1
    full = inst.full_tree()

    if max(inst.leaf_counts) * 3 >= 2 * n:
        try:
            emb = embed_one_large_vertex(full, n)
        except RingelError as exc:
            raise EmbeddingFailureError(
                "delegation failed", stage="one_large_vertex", reason=exc.message
            ) from exc
        return CaseCReport(
            embedding=emb,
            n=n,
            delegated=True,
            m=None,
            plan=None,
            small_tree=None,
            centres=(),
        )

    # sort by leaf count, largest first; prefix sums fix m
    order = sorted(range(len(inst.centres)), key=lambda i: (-inst.leaf_counts[i], inst.centres[i]))
    total = 0
    m = 0
    for rank, i in enumerate(order, start=1):
        total += inst.leaf_counts[i]
        if 20 * total > n:
            m = rank
            break
    v1_ids = order[:m]
    v2_ids = order[m:]
    v1_set = {inst.centres[i] for i in v1_ids}
    v2_set = {inst.centres[i] for i in v2_ids}

    plan = IntervalPlan(
        n=n,
        i0=(83 * n // 100, 90 * n // 100),
        i1=(70 * n // 100, 71 * n // 100),
        i2=(91 * n // 100, 92 * n // 100),
        v0=tuple(v for v in range(inst.base.m) if v not in v1_set and v not in v2_set),
        v1=tuple(sorted(v1_set)),
        v2=tuple(sorted(v2_set)),
    )
    try:
        small = embed_small_tree_report(inst.base, plan, n)
    except RingelError as exc:
        raise EmbeddingFailureError(
            "base embedding failed", stage="small_tree", reason=exc.message
        ) from exc
    base_image = small.embedding.image

    # zig-zag relabelling: positions ascending carry indices 1,3,...,4,2
    by_pos_1 = sorted(v1_ids, key=lambda i: base_image[inst.centres[i]])
    zig = list(range(1, m + 1, 2))
    zag = list(range(m - 1, 0, -2)) if m % 2 else list(range(m, 0, -2))
    new_index = {}
    for rank, i in enumerate(by_pos_1):
        new_index[i] = (zig + zag)[rank]
    by_pos_2 = sorted(v2_ids, key=lambda i: base_image[inst.centres[i]])
    for rank, i in enumerate(by_pos_2, start=m + 1):
        new_index[i] = rank

    ell = len(inst.centres)
    by_new = sorted(new_index, key=lambda i: new_index[i])
    used = {colour_of(n, base_image[u], base_image[v]) for u, v in inst.base.edges}
    free = [c for c in range(1, n + 1) if c not in used]
    if len(free) != sum(inst.leaf_counts):
        raise InternalInvariantError(
            "free colours do not match missing leaves", free=len(free)
        )

    image = [-1] * full.m
    for v in range(inst.base.m):
        image[v] = base_image[v]

    reports = []
    offset = 0
    for i in by_new:
        idx = new_index[i]
        d = inst.leaf_counts[i]
        block = free[offset : offset + d]
        offset += d
        anchor = base_image[inst.centres[i]]
        if idx <= m and idx % 2 == 1:
            vtype = 1
            raw = [anchor - c for c in block]
        else:
            vtype = 2 if idx <= m else 3
            raw = [anchor + c for c in block]
        for leaf, r in zip(inst.leaf_range(i), raw):
            image[leaf] = r % m_mod
        reports.append(
            CentreReport(
                vertex=inst.centres[i],
                new_index=idx,
                vertex_type=vtype,
                anchor=anchor,
                colour_block=(block[0], block[-1]),
                raw_span=(min(raw), max(raw)),
            )
        )

    emb = Embedding(n, tuple(image))
    _verify_exact_rainbow(full, emb, stage="case_c")
    return CaseCReport(
        embedding=emb,
        n=n,
        delegated=False,
        m=m,
        plan=plan,
        small_tree=small,
        centres=tuple(reports),
    )
