"""Tests for tree construction, Prufer codes, and the structure toolkit.

Oracles come first: a naive quadratic Prufer decoder, a from-scratch
division checker, and direct degree arithmetic. Library results are
compared against those, never against themselves.
"""

import itertools
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ringel.errors import (
    DecompositionError,
    GuaranteeViolationError,
    ParameterError,
    TreeError,
)
from ringel.tree import (
    CaseWitness,
    Forest,
    LayerDecomposition,
    Piece,
    Star,
    Tree,
    canonical_key,
    classify_case,
    divide_tree,
    enumerate_tree_classes,
    format_tree_text,
    leaves_or_bare_paths,
    parse_prufer_text,
    parse_tree_text,
    random_attachment_tree,
    split_layers,
)


# ---------------------------------------------------------------------------
# builders and oracles


def path_tree(m: int) -> Tree:
    return Tree.from_parents([0] + list(range(m - 1)))


def star_tree(m: int) -> Tree:
    """K_{1,m-1} centred at vertex 0."""
    return Tree.from_parents([0] * m)


def perfect_binary(depth: int) -> Tree:
    m = 2 ** (depth + 1) - 1
    return Tree.from_parents([0] + [(i - 1) // 2 for i in range(1, m)])


def naive_prufer_decode(seq, m):
    """Textbook quadratic decoder, written independently of the library."""
    seq = list(seq)
    degree = [1] * m
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        # smallest current leaf not promised to a later sequence entry
        leaf = min(
            v for v in range(m) if degree[v] == 1 and v not in seq[len(edges):]
        )
        edges.append(tuple(sorted((leaf, x))))
        degree[leaf] -= 1
        degree[x] -= 1
    last = [v for v in range(m) if degree[v] == 1]
    edges.append(tuple(sorted(last)))
    return sorted(edges)


@st.composite
def trees(draw, min_m=2, max_m=40):
    m = draw(st.integers(min_m, max_m))
    parents = [0] + [draw(st.integers(0, i - 1)) for i in range(1, m)]
    return Tree.from_parents(parents)


def assert_is_partition_into_subtrees(t, m, pieces):
    """Independent check of every division guarantee."""
    all_edges = sorted(e for p in pieces for e in p.edges)
    assert all_edges == sorted(t.edges), "edges are not partitioned"
    for p in pieces[:-1]:
        assert m <= p.size <= 3 * m
    assert pieces[-1].size <= 4 * m
    for p in pieces:
        vs = set(p.vertices)
        assert len(p.edges) == len(vs) - 1
        # connectivity: grow from one vertex along piece edges
        if p.edges:
            reached = {p.edges[0][0]}
            frontier = True
            while frontier:
                frontier = False
                for a, b in p.edges:
                    if (a in reached) != (b in reached):
                        reached.update((a, b))
                        frontier = True
            assert reached == vs
    covered = set()
    for p in pieces:
        covered.update(p.vertices)
    assert covered == set(range(t.m))


# ---------------------------------------------------------------------------
# construction and codecs


class TestConstruction:
    def test_edge_list_example(self):
        t = Tree.from_edge_list([(0, 1), (1, 2), (0, 3)])
        assert t.m == 4
        assert t.degrees.tolist() == [2, 2, 1, 1]
        assert t.edges == ((0, 1), (0, 3), (1, 2))

    def test_edge_order_and_direction_do_not_matter(self):
        a = Tree.from_edge_list([(0, 1), (1, 2), (0, 3)])
        b = Tree.from_edge_list([(3, 0), (2, 1), (1, 0)])
        assert a == b
        assert hash(a) == hash(b)

    def test_rejects_wrong_edge_count(self):
        with pytest.raises(TreeError):
            Tree.from_edge_list([(0, 1)], m=3)

    def test_rejects_out_of_range(self):
        with pytest.raises(TreeError):
            Tree.from_edge_list([(0, 5)], m=2)

    def test_rejects_self_loop(self):
        with pytest.raises(TreeError):
            Tree.from_edge_list([(0, 0), (0, 1), (1, 2)], m=3)

    def test_rejects_duplicate_edge(self):
        with pytest.raises(TreeError):
            Tree.from_edge_list([(0, 1), (1, 0), (1, 2)], m=3)

    def test_rejects_cycle_with_disconnection(self):
        # right edge count, wrong shape
        with pytest.raises(TreeError):
            Tree.from_edge_list([(0, 1), (1, 2), (2, 0)], m=4)

    def test_from_parents_rejects_forward_reference(self):
        with pytest.raises(TreeError):
            Tree.from_parents([0, 1, 1])

    def test_single_vertex(self):
        t = Tree.from_edge_list([], m=1)
        assert t.m == 1
        assert t.edges == ()
        assert t.leaves().tolist() == []

    def test_neighbours_sorted_and_has_edge(self):
        t = Tree.from_edge_list([(2, 0), (0, 3), (0, 1)])
        assert t.neighbours(0).tolist() == [1, 2, 3]
        assert t.has_edge(3, 0) and not t.has_edge(1, 2)

    def test_text_round_trip(self):
        t = Tree.from_edge_list([(0, 1), (1, 2), (0, 3), (3, 4)])
        assert parse_tree_text(format_tree_text(t)) == t

    def test_parse_rejects_garbage(self):
        with pytest.raises(TreeError):
            parse_tree_text("")
        with pytest.raises(TreeError):
            parse_tree_text("two\n0 1\n")
        with pytest.raises(TreeError):
            parse_tree_text("3\n0 1\n")


class TestPrufer:
    def test_empty_sequence_is_single_edge(self):
        assert Tree.from_prufer((), m=2).edges == ((0, 1),)

    def test_constant_sequence_is_star(self):
        t = Tree.from_prufer((0, 0, 0), m=5)
        assert t == star_tree(5)

    def test_short_path_example(self):
        t = Tree.from_prufer((2, 3))
        assert t.edges == ((0, 2), (1, 3), (2, 3))

    def test_star_and_path_encodings(self):
        assert star_tree(6).to_prufer() == (0, 0, 0, 0)
        assert path_tree(5).to_prufer() == (1, 2, 3)

    def test_rejects_bad_length_and_range(self):
        with pytest.raises(TreeError):
            Tree.from_prufer((0,), m=2)
        with pytest.raises(TreeError):
            Tree.from_prufer((5,), m=3)
        with pytest.raises(TreeError):
            Tree.from_edge_list([], m=1).to_prufer()

    @pytest.mark.parametrize("m", [3, 4, 5, 6, 7])
    def test_decoder_matches_naive_oracle_exhaustively(self, m):
        for seq in itertools.product(range(m), repeat=m - 2):
            t = Tree.from_prufer(seq, m=m)
            assert list(t.edges) == naive_prufer_decode(seq, m)

    @pytest.mark.parametrize("m", [8, 9, 12, 30])
    def test_decoder_matches_naive_oracle_sampled(self, m):
        rng = np.random.default_rng(m)
        for _ in range(300):
            seq = tuple(rng.integers(0, m, size=m - 2).tolist())
            t = Tree.from_prufer(seq, m=m)
            assert list(t.edges) == naive_prufer_decode(seq, m)

    @pytest.mark.parametrize("m", [2, 3, 4, 5, 6, 7, 8])
    def test_round_trip_exhaustive(self, m):
        # encode(decode(s)) = s for every sequence; with decode a bijection
        # onto labelled trees this pins decode(encode(t)) = t as well
        for seq in itertools.product(range(m), repeat=m - 2):
            assert Tree.from_prufer(seq, m=m).to_prufer() == seq

    def test_round_trip_sampled_m9(self):
        rng = np.random.default_rng(9)
        for _ in range(20000):
            seq = tuple(rng.integers(0, 9, size=7).tolist())
            assert Tree.from_prufer(seq, m=9).to_prufer() == seq

    @given(trees(min_m=2, max_m=60))
    def test_encode_then_decode_is_identity(self, t):
        assert Tree.from_prufer(t.to_prufer(), m=t.m) == t

    def test_parse_prufer_text(self):
        assert parse_prufer_text("0 0 0\n") == star_tree(5)
        assert parse_prufer_text("") == Tree.from_prufer((), m=2)
        with pytest.raises(TreeError):
            parse_prufer_text("0\n0\n")


class TestRandomAttachment:
    def test_seeded_determinism(self):
        a = random_attachment_tree(50, np.random.default_rng(123))
        b = random_attachment_tree(50, np.random.default_rng(123))
        assert a == b

    def test_is_a_tree_of_requested_size(self):
        t = random_attachment_tree(200, np.random.default_rng(0))
        assert t.m == 200 and len(t.edges) == 199


# ---------------------------------------------------------------------------
# leaves or bare paths


class TestLeavesOrBarePaths:
    def test_path_forty_gives_paths(self):
        kind, paths = leaves_or_bare_paths(path_tree(40), 3)
        assert kind == "paths"
        assert len(paths) >= 40 // 12
        self._check_paths(path_tree(40), paths, 3)

    def test_star_forty_gives_leaves(self):
        kind, leaves = leaves_or_bare_paths(star_tree(40), 3)
        assert kind == "leaves"
        assert len(leaves) == 39

    def test_perfect_binary_gives_leaves(self):
        t = perfect_binary(5)
        assert t.m == 63
        kind, leaves = leaves_or_bare_paths(t, 3)
        assert kind == "leaves"
        assert len(leaves) == 32
        assert len(leaves) >= 63 // 12

    def test_rejects_small_k_and_small_trees(self):
        with pytest.raises(ParameterError):
            leaves_or_bare_paths(path_tree(40), 2)
        with pytest.raises(ParameterError):
            leaves_or_bare_paths(path_tree(11), 3)

    @staticmethod
    def _check_paths(t, paths, k):
        seen = set()
        for p in paths:
            assert len(p) == k + 1
            for u, v in zip(p, p[1:]):
                assert t.has_edge(u, v)
            for v in p[1:-1]:
                assert t.degrees[v] == 2
            for v in p:
                assert v not in seen
                seen.add(v)

    @given(trees(min_m=12, max_m=120), st.integers(3, 5))
    def test_guarantee_on_random_trees(self, t, k):
        if t.m < 4 * k:
            return
        kind, wit = leaves_or_bare_paths(t, k)
        if kind == "leaves":
            assert len(wit) >= t.m // (4 * k)
            assert all(t.degrees[v] == 1 for v in wit)
        else:
            assert len(wit) >= t.m // (4 * k)
            self._check_paths(t, wit, k)


# ---------------------------------------------------------------------------
# division into bounded pieces


class TestDivideTree:
    def test_small_tree_is_a_single_piece(self):
        t = path_tree(10)
        pieces = divide_tree(t, 3)
        assert len(pieces) == 1
        assert pieces[0].size == 10
        assert_is_partition_into_subtrees(t, 3, pieces)

    def test_path_twenty(self):
        pieces = divide_tree(path_tree(20), 3)
        assert len(pieces) > 1
        assert_is_partition_into_subtrees(path_tree(20), 3, pieces)

    def test_star_pieces_share_the_centre(self):
        t = star_tree(17)
        pieces = divide_tree(t, 4)
        assert_is_partition_into_subtrees(t, 4, pieces)
        assert all(0 in p.vertices for p in pieces)

    def test_rejects_undersized_parameters(self):
        with pytest.raises(ParameterError):
            divide_tree(path_tree(10), 1)
        with pytest.raises(ParameterError):
            divide_tree(path_tree(3), 4)

    def test_thousand_random_trees(self):
        rng = np.random.default_rng(2026)
        for _ in range(1000):
            m = int(rng.integers(2, 9))
            size = int(rng.integers(max(m, 8), 61))
            t = random_attachment_tree(size, rng)
            pieces = divide_tree(t, m)
            assert_is_partition_into_subtrees(t, m, pieces)

    @given(trees(min_m=8, max_m=100), st.integers(2, 8))
    def test_division_properties(self, t, m):
        if t.m < m:
            return
        pieces = divide_tree(t, m)
        assert_is_partition_into_subtrees(t, m, pieces)


# ---------------------------------------------------------------------------
# case classification


class TestClassifyCase:
    def test_long_path_is_case_b(self):
        t = path_tree(10**4)
        w = classify_case(t, 0.01)
        assert w.case == "B"
        assert len(w.path_witness) >= 13  # ceil(0.01 * 10^4 / 800)
        for p in w.path_witness:
            assert len(p) == 101  # k = 1/delta edges per path
        w.validate(t)

    def test_spider_is_case_a(self):
        parents = [0]
        for _ in range(1000):
            parents.append(0)
            parents.append(len(parents) - 1)
        t = Tree.from_parents(parents)
        w = classify_case(t, 0.05)
        assert w.case == "A"
        assert len(w.leaf_witness) == 1000
        # the witness leaves are the leg tips, pairwise non-adjacent
        assert all(t.degrees[v] == 1 for v in w.leaf_witness)
        w.validate(t)

    def test_huge_star_is_case_c(self):
        t = star_tree(170001)
        w = classify_case(t, 0.05)
        assert w.case == "C"
        assert w.centres == (0,)
        assert len(w.pruned_vertices) == 1
        w.validate(t)

    def test_case_c_beats_case_a(self):
        # star big enough for C, plus a few legs so A holds as well
        parents = [0] * 170001
        for _ in range(10):
            parents.append(0)
            parents.append(len(parents) - 1)
        t = Tree.from_parents(parents)
        assert classify_case(t, 0.05).case == "C"

    def test_case_b_beats_case_a(self):
        # a long path with scattered extra leaves satisfies both B and A
        parents = [0] + list(range(9999))
        for i in range(50):
            parents.append(200 * i + 7)
        t = Tree.from_parents(parents)
        assert classify_case(t, 0.01).case == "B"

    def test_two_vertex_tree(self):
        t = path_tree(2)
        w = classify_case(t, Fraction(1, 20))
        assert w.case == "A"
        assert w.leaf_witness == (0,)
        w.validate(t)

    def test_delta_forms_agree(self):
        t = path_tree(500)
        cases = {
            classify_case(t, d).case
            for d in (0.05, Fraction(1, 20), "0.05", "1/20")
        }
        assert len(cases) == 1

    def test_rejects_bad_delta(self):
        t = path_tree(10)
        for bad in (0, -1, 0.2, Fraction(1, 19), "nonsense"):
            with pytest.raises(ParameterError):
                classify_case(t, bad)

    def test_tampered_witness_fails_validation(self):
        parents = [0]
        for _ in range(200):
            parents.append(0)
            parents.append(len(parents) - 1)
        t = Tree.from_parents(parents)
        w = classify_case(t, 0.05)
        assert w.case == "A"
        # swap a tip for its interior parent: no longer a leaf
        tip = w.leaf_witness[0]
        parent = int(t.neighbours(tip)[0])
        bad = replace(w, leaf_witness=(parent,) + w.leaf_witness[1:])
        with pytest.raises(GuaranteeViolationError):
            bad.validate(t)

    def test_witness_bound_to_tree(self):
        t = path_tree(10**4)
        w = classify_case(t, 0.01)
        with pytest.raises(GuaranteeViolationError):
            w.validate(path_tree(9999))

    @given(trees(min_m=2, max_m=400))
    def test_random_trees_classify_and_validate(self, t):
        w = classify_case(t, Fraction(1, 20))
        assert w.case in "ABC"
        w.validate(t)


# ---------------------------------------------------------------------------
# five-layer splitting


class TestSplitLayers:
    def test_star_with_all_marked(self):
        t = star_tree(51)
        ld = split_layers(t, 3, range(51))
        assert ld.t1.vertices == (0,)
        assert len(ld.stars) == 1
        assert ld.stars[0].centre == 0
        assert len(ld.stars[0].leaf_set) == 50
        assert ld.leaf_batches_3 == () and ld.paths_4 == () and ld.leaf_batches_5 == ()
        ld.validate(range(51))

    def test_broom_keeps_its_star(self):
        t = Tree.from_parents([0] + list(range(19)) + [19] * 30)
        ld = split_layers(t, 3, range(50))
        assert any(len(s.leaf_set) >= 30 for s in ld.stars)
        ld.validate(range(50))

    def test_pinning_rescues_a_sparse_marked_set(self):
        # marks clustered at one end of a path force the pinned pass
        t = path_tree(200)
        ld = split_layers(t, 3, range(8))
        assert set(ld.t1.vertices) & set(range(8))
        ld.validate(range(8))

    def test_random_tree_layers_validate(self):
        rng = np.random.default_rng(7)
        t = random_attachment_tree(200, rng)
        u = sorted(rng.choice(200, size=50, replace=False).tolist())
        ld = split_layers(t, 3, u)
        ld.validate(u)

    def test_forests_are_nested_and_exhaustive(self):
        rng = np.random.default_rng(11)
        t = random_attachment_tree(300, rng)
        ld = split_layers(t, 3, range(300))
        f1, f2, f3, f4, f5 = ld.forests()
        for small, big in zip((f1, f2, f3, f4), (f2, f3, f4, f5)):
            assert set(small.vertices) <= set(big.vertices)
            assert set(small.edges) <= set(big.edges)
        assert set(f5.vertices) == set(range(t.m))
        assert set(f5.edges) == set(t.edges)
        assert len(f1.vertices) * 3 <= t.m

    def test_rejects_bad_parameters(self):
        t = path_tree(50)
        with pytest.raises(ParameterError):
            split_layers(t, 1, range(50))
        with pytest.raises(ParameterError):
            split_layers(t, 3, [])
        with pytest.raises(ParameterError):
            split_layers(t, 3, [0])  # 1 * 27 < 50
        with pytest.raises(ParameterError):
            split_layers(t, 3, [0, 1, 99])

    def test_tampered_layers_fail_validation(self):
        t = star_tree(51)
        ld = split_layers(t, 3, range(51))
        # shrink the star below d leaves
        small = Star(0, ld.stars[0].leaf_set[:2])
        bad = replace(ld, stars=(small,))
        with pytest.raises(DecompositionError):
            bad.validate(range(51))

    @given(trees(min_m=10, max_m=200), st.integers(2, 3))
    @settings(max_examples=40, deadline=None)
    def test_random_trees_split(self, t, d):
        ld = split_layers(t, d, range(t.m))
        ld.validate(range(t.m))


# ---------------------------------------------------------------------------
# canonical forms and enumeration


class TestCanonicalForms:
    def test_path_and_star_differ(self):
        assert canonical_key(path_tree(6)) != canonical_key(star_tree(6))

    def test_key_is_relabelling_invariant(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            t = random_attachment_tree(int(rng.integers(2, 40)), rng)
            perm = rng.permutation(t.m)
            relabelled = Tree.from_edge_list(
                [(int(perm[u]), int(perm[v])) for u, v in t.edges], m=t.m
            )
            assert canonical_key(t) == canonical_key(relabelled)

    def test_distinguishes_same_degree_sequence(self):
        # two 7-vertex trees with degree sequence (3,2,2,1,1,1,1)
        a = Tree.from_edge_list([(0, 1), (1, 2), (2, 3), (3, 4), (2, 5), (5, 6)])
        b = Tree.from_edge_list([(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (2, 6)])
        assert sorted(a.degrees.tolist()) == sorted(b.degrees.tolist())
        assert canonical_key(a) != canonical_key(b)

    def test_enumeration_counts(self):
        classes = enumerate_tree_classes(10)
        got = [len(classes[m]) for m in range(1, 11)]
        assert got == [1, 1, 1, 2, 3, 6, 11, 23, 47, 106]

    @pytest.mark.parametrize("m", [2, 3, 4, 5, 6, 7, 8])
    def test_enumeration_matches_prufer_census(self, m):
        # all labelled trees, collapsed by canonical key, give the same set
        census = set()
        for seq in itertools.product(range(m), repeat=m - 2):
            census.add(canonical_key(Tree.from_prufer(seq, m=m)))
        listed = [canonical_key(t) for t in enumerate_tree_classes(m)[m]]
        assert len(listed) == len(set(listed))
        assert set(listed) == census

    def test_enumerated_trees_have_the_right_size(self):
        classes = enumerate_tree_classes(7)
        for m, ts in classes.items():
            assert all(t.m == m for t in ts)
