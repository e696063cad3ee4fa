import itertools

import pytest

from eppa.amalgamation import (AmalgamInstance, canonical_form,
                               check_clique_characterization, enumerate_structures,
                               exists_embedding, forb_e_member, free_amalgam,
                               is_graph_universe, minimal_forbidden)
from eppa.errors import EppaError
from eppa.structures import (GRAPH_SIGNATURE, Signature, Structure,
                             automorphism_group, graph, induced_substructure,
                             is_embedding, is_gaifman_clique)


def max_degree_at_most_one(structure: Structure) -> bool:
    if not structure.is_graphlike():
        return False
    degree = [0] * structure.size
    for a, b in structure.tuples("E"):
        if a < b:
            degree[a] += 1
            degree[b] += 1
    return all(d <= 1 for d in degree)


def triangle_free_graph(structure: Structure) -> bool:
    k3 = graph(3, [(0, 1), (1, 2), (0, 2)])
    return structure.is_graphlike() and exists_embedding(k3, structure) is None


def symmetric_hypergraph(structure: Structure) -> bool:
    tuples = structure.tuple_set("H")
    for t in tuples:
        if len(set(t)) != 3:
            return False
        if any(tuple(p) not in tuples for p in itertools.permutations(t)):
            return False
    return True


def hypergraph(n, edges):
    sig = Signature.make(("H", 3))
    tuples = [p for e in edges for p in itertools.permutations(e)]
    return Structure.make(sig, n, {"H": tuples})


def enumerate_hypergraphs(signature, size, universe=None):
    """Symmetry-aware enumerator over unordered 3-sets (the raw slot grid is
    far too large for this arity)."""
    supports = list(itertools.combinations(range(size), 3))
    out, seen = [], set()
    for state in range(1 << len(supports)):
        edges = [supports[k] for k in range(len(supports)) if state >> k & 1]
        s = hypergraph(size, edges)
        if universe is not None and not universe(s):
            continue
        canon = canonical_form(s)
        if canon not in seen:
            seen.add(canon)
            out.append(canon)
    return out


class TestFreeAmalgam:
    def test_two_edges_over_a_vertex(self):
        edge = graph(2, [(0, 1)])
        point = graph(1, [])
        inst = AmalgamInstance(shared=point, left=edge, right=edge,
                               into_left=(0,), into_right=(0,))
        glued, left_map, right_map = free_amalgam(inst)
        assert glued == graph(3, [(0, 1), (0, 2)])
        assert left_map == (0, 1) and right_map == (0, 2)

    def test_degenerate_glue(self, k3):
        ident = tuple(range(3))
        inst = AmalgamInstance(shared=k3, left=k3, right=k3,
                               into_left=ident, into_right=ident)
        glued, _, _ = free_amalgam(inst)
        assert glued == k3

    def test_two_triangles_over_an_edge(self, k2, k3):
        inst = AmalgamInstance(shared=k2, left=k3, right=k3,
                               into_left=(0, 1), into_right=(0, 1))
        glued, _, right_map = free_amalgam(inst)
        assert glued.size == 4
        edges = {tuple(sorted(t)) for t in glued.tuples("E")}
        assert len(edges) == 5
        apexes = (2, right_map[2])
        assert tuple(sorted(apexes)) not in edges

    def test_no_tuple_meets_both_outer_sides(self, k2, k3):
        inst = AmalgamInstance(shared=k2, left=k3, right=k3,
                               into_left=(0, 1), into_right=(0, 1))
        glued, left_map, right_map = free_amalgam(inst)
        shared_pts = set(left_map[x] for x in (0, 1))
        left_only = set(left_map) - shared_pts
        right_only = set(right_map) - shared_pts
        for t in glued.tuples("E"):
            pts = set(t)
            assert not (pts & left_only and pts & right_only)

    def test_invalid_inclusion_rejected(self, k2, k3):
        with pytest.raises(EppaError):
            AmalgamInstance(shared=k2, left=k3, right=k3,
                            into_left=(0, 0), into_right=(0, 1))

    def test_union_of_compatible_automorphisms(self, k2, k3):
        # automorphisms of both sides agreeing on the shared part unite to an
        # automorphism of the free amalgam
        instances = [
            AmalgamInstance(shared=graph(1, []), left=graph(2, [(0, 1)]),
                            right=graph(2, [(0, 1)]), into_left=(0,), into_right=(0,)),
            AmalgamInstance(shared=k2, left=k3, right=k3,
                            into_left=(0, 1), into_right=(0, 1)),
            AmalgamInstance(shared=graph(2, []), left=graph(3, [(0, 1)]),
                            right=graph(3, [(1, 2)]), into_left=(0, 2), into_right=(0, 2)),
        ]
        for inst in instances:
            glued, left_map, right_map = free_amalgam(inst)
            shared_left = [inst.into_left[a] for a in range(inst.shared.size)]
            for alpha in automorphism_group(inst.left).elements:
                if {alpha(x) for x in shared_left} != set(shared_left):
                    continue
                for beta in automorphism_group(inst.right).elements:
                    agree = all(
                        alpha(inst.into_left[a]) == inst.into_left[
                            _pull(inst, beta, a)]
                        for a in range(inst.shared.size)
                        if _pull(inst, beta, a) is not None)
                    compatible = all(_pull(inst, beta, a) is not None
                                     for a in range(inst.shared.size))
                    if not compatible or not agree:
                        continue
                    union = [None] * glued.size
                    for x in range(inst.left.size):
                        union[left_map[x]] = left_map[alpha(x)]
                    for x in range(inst.right.size):
                        union[right_map[x]] = right_map[beta(x)]
                    assert is_embedding(union, glued, glued)


def _pull(inst, beta, a):
    """Index of the shared point that beta sends the a-th shared point to,
    or None when beta moves it outside the shared part."""
    image = beta(inst.into_right[a])
    for b in range(inst.shared.size):
        if inst.into_right[b] == image:
            return b
    return None


class TestEmbeddingSearch:
    def test_edge_into_triangle(self, k2, k3):
        assert exists_embedding(k2, k3) is not None

    def test_triangle_into_path(self, k3, path3):
        assert exists_embedding(k3, path3) is None

    def test_tetrahedron_avoids_three_face_hypergraph(self):
        # embeddings are induced, so neither hypergraph embeds into the other;
        # a mere homomorphism of the three-face pattern into the tetrahedron
        # does exist
        tetra = hypergraph(4, itertools.combinations(range(4), 3))
        three_faces = hypergraph(4, [(0, 1, 2), (0, 1, 3), (0, 2, 3)])
        assert exists_embedding(tetra, three_faces) is None
        assert exists_embedding(three_faces, tetra) is None
        from eppa.structures import is_homomorphism
        assert is_homomorphism([0, 1, 2, 3], three_faces, tetra)

    def test_first_witness_is_deterministic(self, k2, k4):
        assert exists_embedding(k2, k4) == (0, 1)


class TestForbMembership:
    def test_small_clique_cases(self, k3, k4):
        assert forb_e_member(k3, [k4])
        assert not forb_e_member(k4, [k3])

    def test_tetrahedron_in_forb_of_three_faces(self):
        tetra = hypergraph(4, itertools.combinations(range(4), 3))
        q = hypergraph(4, [(0, 1, 2), (0, 1, 3), (0, 2, 3)])
        assert forb_e_member(tetra, [q])

    def test_membership_is_hereditary(self, k3):
        structure = graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
        assert forb_e_member(structure, [k3])
        for pts in itertools.combinations(range(4), 3):
            sub, _ = induced_substructure(structure, pts)
            assert forb_e_member(sub, [k3])


class TestMinimalForbidden:
    def test_triangle_free_graphs_give_k3(self, k3):
        found = minimal_forbidden(triangle_free_graph, 4, GRAPH_SIGNATURE,
                                  is_graph_universe)
        assert [canonical_form(s) for s in found] == [canonical_form(k3)]

    def test_max_degree_one_gives_path_and_triangle(self, k3, path3):
        # the three-point star and the triangle are both minimal: deleting
        # any vertex of either lands back in the class
        found = minimal_forbidden(max_degree_at_most_one, 3, GRAPH_SIGNATURE,
                                  is_graph_universe)
        expected = {canonical_form(path3), canonical_form(k3)}
        assert {canonical_form(s) for s in found} == expected
        for witness in found:
            assert not max_degree_at_most_one(witness)
            for v in range(witness.size):
                rest, _ = induced_substructure(
                    witness, [x for x in range(witness.size) if x != v])
                assert max_degree_at_most_one(rest)

    def test_everything_allowed_gives_nothing(self):
        found = minimal_forbidden(lambda s: True, 3, GRAPH_SIGNATURE,
                                  is_graph_universe)
        assert found == []

    def test_forb_class_reproduces_its_forbidder(self, k3):
        member = lambda s: forb_e_member(s, [k3])
        found = minimal_forbidden(member, 3, GRAPH_SIGNATURE, is_graph_universe)
        assert [canonical_form(s) for s in found] == [canonical_form(k3)]


class TestCharacterization:
    def test_triangle_free_both_sides_hold(self):
        report = check_clique_characterization(
            triangle_free_graph, 4, GRAPH_SIGNATURE, is_graph_universe)
        assert report.cliques_side and report.closure_side and report.agree()

    def test_max_degree_one_both_sides_fail(self, path3):
        report = check_clique_characterization(
            max_degree_at_most_one, 3, GRAPH_SIGNATURE, is_graph_universe)
        assert not report.cliques_side and not report.closure_side
        assert report.agree()
        assert canonical_form(report.non_clique_witness) == canonical_form(path3)
        left, right, shared, glued = report.closure_witness
        assert not max_degree_at_most_one(glued)

    def test_three_face_hypergraph_class(self):
        q = hypergraph(4, [(0, 1, 2), (0, 1, 3), (0, 2, 3)])
        assert is_gaifman_clique(q)
        member = lambda s: forb_e_member(s, [q])
        sig = q.signature
        # enumeration over the raw ternary slot grid is infeasible; use the
        # symmetry-aware hypergraph enumerator instead
        found = []
        for size in range(5):
            for s in enumerate_hypergraphs(sig, size, symmetric_hypergraph):
                if member(s):
                    continue
                if all(member(induced_substructure(
                        s, [x for x in range(s.size) if x != v])[0])
                       for v in range(s.size)):
                    found.append(s)
        assert [canonical_form(s) for s in found] == [canonical_form(q)]
        assert all(is_gaifman_clique(s) for s in found)

    def test_free_amalgams_preserve_clique_forb_classes(self, k3):
        # gluing two triangle-free graphs over a shared part stays
        # triangle-free
        members = [s for n in range(1, 4)
                   for s in enumerate_structures(GRAPH_SIGNATURE, n, is_graph_universe)
                   if triangle_free_graph(s)]
        for left in members:
            for right in members:
                shared, _ = induced_substructure(left, range(min(1, left.size)))
                into_left = tuple(range(shared.size))
                into_right = tuple(range(shared.size))
                if not is_embedding(into_right, shared, right):
                    continue
                inst = AmalgamInstance(shared=shared, left=left, right=right,
                                       into_left=into_left, into_right=into_right)
                glued, _, _ = free_amalgam(inst)
                assert triangle_free_graph(glued)
