import itertools

import pytest

from eppa.base_extension import BaseEppaCertificate, base_eppa
from eppa.coherence import ExtensionMap, coherent_triples
from eppa.errors import EppaError
from eppa.faithful import (ValuedPoint, build_valued_extension,
                           clique_faithful_extension, enumerate_cliques,
                           forb_e_eppa, generic_subsets, hat_extend, is_generic,
                           large_sets, projection_is_small, theta,
                           value_permutation, verify_faithful_certificate)
from eppa.structures import (PartialAutomorphism, Permutation, graph,
                             enumerate_partial_automorphisms, is_embedding)


def single_in_k2_cert():
    """Hand fixture: one vertex embedded in an edge, identity assignments."""
    k2 = graph(2, [(0, 1)])
    single = graph(1, [])
    ident = Permutation.identity(2)
    phi = ExtensionMap(1, 2, (0,), {"-": ident, "0>0": ident})
    return BaseEppaCertificate(base=single, extension=k2, embedding=(0,), phi=phi)


class TestLargeSets:
    def test_k2_over_one_point(self):
        cert = single_in_k2_cert()
        family = large_sets(cert.extension, cert.embedding)
        assert family.sets == (0b11,)

    def test_everything_large_over_empty_inner(self, k2):
        family = large_sets(k2, ())
        assert sorted(family.sets) == [0b01, 0b10, 0b11]

    def test_nothing_large_when_inner_is_everything(self, k2):
        family = large_sets(k2, (0, 1))
        assert family.sets == ()

    def test_family_closed_under_automorphisms(self, path3):
        cert = base_eppa(path3)
        family = large_sets(cert.extension, cert.embedding)
        for g in family.aut.elements:
            for idx in range(len(family.sets)):
                family.image_index(g, idx)  # raises if the image is missing


class TestGenericity:
    def test_singletons_generic(self):
        cert = single_in_k2_cert()
        family = large_sets(cert.extension, cert.embedding)
        pt = ValuedPoint(owner=0, values=(1,))
        assert is_generic([pt], family)

    def test_fixture_pair_not_generic(self):
        cert = single_in_k2_cert()
        family = large_sets(cert.extension, cert.embedding)
        a = ValuedPoint(owner=0, values=(1,))
        b = ValuedPoint(owner=1, values=(1,))
        assert not is_generic([a, b], family)

    def test_subsets_of_generic_sets_are_generic(self, path3):
        fc = clique_faithful_extension(path3)
        ext = fc.extension
        nu_pts = [ext.points[i] for i in ext.nu]
        assert is_generic(nu_pts, ext.family)
        for k in range(len(nu_pts) + 1):
            for combo in itertools.combinations(nu_pts, k):
                assert is_generic(list(combo), ext.family)


class TestBuildValuedExtension:
    def test_fixture_two_points_no_edge(self):
        cert = single_in_k2_cert()
        family = large_sets(cert.extension, cert.embedding)
        ext = build_valued_extension(cert, family)
        assert ext.structure.size == 2
        assert ext.structure.tuples("E") == ()
        assert ext.points[ext.nu[0]] == ValuedPoint(owner=0, values=(1,))

    def test_degenerate_family_copies_extension(self, k3):
        cert = base_eppa(k3)
        assert cert.extension == k3
        family = large_sets(cert.extension, cert.embedding)
        assert family.sets == ()
        ext = build_valued_extension(cert, family)
        assert ext.structure.size == k3.size
        assert sorted(ext.structure.tuples("E")) == sorted(k3.tuples("E"))

    def test_counting_oracle_empty_inner(self):
        # two isolated points over an empty inner copy: the closed-form
        # size sum over owners of products of (|u| - 1) is zero, since the
        # singleton large sets contribute empty value ranges
        two = graph(2, [])
        phi = ExtensionMap(0, 2, (), {"-": Permutation.identity(2)})
        cert = BaseEppaCertificate(base=graph(0, []), extension=two,
                                   embedding=(), phi=phi)
        family = large_sets(two, ())
        expected = 0
        for b in range(2):
            prod = 1
            for idx in family.member_indices(b):
                prod *= family.set_size(idx) - 1
            expected += prod
        ext = build_valued_extension(cert, family)
        assert expected == 0
        assert ext.structure.size == expected

    def test_nu_is_generic_embedding(self, path3):
        fc = clique_faithful_extension(path3)
        ext = fc.extension
        assert is_embedding(ext.nu, path3, ext.structure)
        assert is_generic([ext.points[i] for i in ext.nu], ext.family)


class TestTheta:
    def setup_method(self):
        self.fc = clique_faithful_extension(graph(3, [(0, 1), (1, 2)]))
        self.base_cert = self.fc.base_cert
        self.ext = self.fc.extension
        assert len(self.ext.family.sets) >= 1

    def test_fixes_zero(self):
        for p in enumerate_partial_automorphisms(self.base_cert.base):
            g = self.base_cert.phi.lookup(p)
            for idx in range(len(self.ext.family.sets)):
                assert theta(p, g, idx, self.ext)(0) == 0

    def test_identity_inputs_give_identity(self):
        ident_p = PartialAutomorphism.identity_on(range(3))
        g = self.base_cert.phi.lookup(ident_p)
        for idx in range(len(self.ext.family.sets)):
            perm = theta(ident_p, g, idx, self.ext)
            assert perm == Permutation.identity(perm.degree)

    def test_empty_map_gives_identity(self):
        empty = PartialAutomorphism.empty()
        ident = Permutation.identity(self.base_cert.extension.size)
        for idx in range(len(self.ext.family.sets)):
            perm = theta(empty, ident, idx, self.ext)
            assert perm == Permutation.identity(perm.degree)

    def test_composition_identity_on_values(self):
        # the per-set value permutations compose along coherent triples, in
        # both the realized-value and the completed-value regime
        maps = enumerate_partial_automorphisms(self.base_cert.base)
        family = self.ext.family
        for p1, p2, q in coherent_triples(maps):
            g1 = self.base_cert.phi.lookup(p1)
            g2 = self.base_cert.phi.lookup(p2)
            gq = self.base_cert.phi.lookup(q)
            assert gq == g1.compose(g2)
            for idx in range(len(family.sets)):
                mid = family.image_index(g2, idx)
                lhs = theta(q, gq, idx, self.ext)
                rhs = theta(p1, g1, mid, self.ext).compose(theta(p2, g2, idx, self.ext))
                assert lhs == rhs

    def test_realized_and_unrealized_values(self):
        p = PartialAutomorphism.from_map({0: 2})
        g = self.base_cert.phi.lookup(p)
        idx = 0
        perm = theta(p, g, idx, self.ext)
        src = self.ext.points[self.ext.nu[0]]
        dst = self.ext.points[self.ext.nu[2]]
        realized = src.value_on(self.ext.family, idx)
        target = dst.value_on(self.ext.family, self.ext.family.image_index(g, idx))
        if realized:
            assert perm(realized) == target
        rest_src = [v for v in range(1, perm.degree) if v != realized]
        rest_dst = [v for v in range(1, perm.degree) if v != target]
        assert [perm(v) for v in rest_src] == rest_dst  # order preserving


class TestHatExtend:
    def test_identity(self, path3):
        fc = clique_faithful_extension(path3)
        ident_p = PartialAutomorphism.identity_on(range(3))
        pairs = [(fc.extension.points[fc.extension.nu[x]],
                  fc.extension.points[fc.extension.nu[x]]) for x in range(3)]
        g = fc.base_cert.phi.lookup(ident_p)
        perm = hat_extend(pairs, g, fc.extension)
        assert perm == Permutation.identity(fc.structure.size)

    def test_fixture_swap(self):
        cert = single_in_k2_cert()
        family = large_sets(cert.extension, cert.embedding)
        ext = build_valued_extension(cert, family)
        swap = Permutation((1, 0))
        perm = hat_extend([], swap, ext)
        assert perm.images == (1, 0)
        assert is_embedding(perm.images, ext.structure, ext.structure)

    def test_extends_through_nu(self, path3):
        fc = clique_faithful_extension(path3)
        ext = fc.extension
        for p in enumerate_partial_automorphisms(path3):
            perm = fc.phi.lookup(p)
            for x, y in p.pairs:
                assert perm(ext.nu[x]) == ext.nu[y]
            assert is_embedding(perm.images, ext.structure, ext.structure)


class TestPipeline:
    def test_single_vertex_trivial(self):
        fc = clique_faithful_extension(graph(1, []))
        assert fc.structure.size == 1
        assert verify_faithful_certificate(fc)

    def test_fixture_via_base_override(self):
        fc = clique_faithful_extension(graph(1, []), base_cert=single_in_k2_cert())
        assert fc.structure.size == 2
        assert fc.structure.tuples("E") == ()
        assert verify_faithful_certificate(fc)
        # every clique is a single point and lands inside nu(A)
        for clique, witness in fc.clique_witnesses.items():
            assert len(clique) == 1
            assert witness(clique[0]) in set(fc.extension.nu)

    def test_small_graphs_verified(self, graphs_up_to_3):
        for structure in graphs_up_to_3:
            fc = clique_faithful_extension(structure)
            assert verify_faithful_certificate(fc)

    def test_cliques_of_c_are_generic(self, path3):
        fc = clique_faithful_extension(path3)
        for clique in enumerate_cliques(fc.structure):
            assert is_generic([fc.extension.points[i] for i in clique],
                              fc.extension.family)

    def test_mixed_signature_pipeline(self):
        from eppa.structures import Signature, Structure
        sig = Signature.make(("U", 1), ("E", 2))
        mixed = Structure.make(sig, 2, {"U": [(0,)], "E": [(0, 1), (1, 0)]})
        fc = clique_faithful_extension(mixed)
        assert verify_faithful_certificate(fc)

    def test_digraph_pipeline(self):
        from eppa.structures import GRAPH_SIGNATURE, Structure
        arc = Structure.make(GRAPH_SIGNATURE, 2, {"E": [(0, 1)]})
        fc = clique_faithful_extension(arc)
        assert verify_faithful_certificate(fc)


class TestForbE:
    def test_path_stays_triangle_free(self, path3, k3):
        from eppa.amalgamation import exists_embedding
        fc = forb_e_eppa(path3, [k3])
        assert exists_embedding(k3, fc.structure) is None
        assert verify_faithful_certificate(fc)

    def test_rejects_non_free_input(self, k3):
        with pytest.raises(EppaError):
            forb_e_eppa(k3, [k3])

    def test_rejects_non_clique_forbidder(self, path3):
        with pytest.raises(EppaError):
            forb_e_eppa(graph(2, []), [path3])

    def test_forbidden_edge_gives_edgeless_extension(self, k2):
        fc = forb_e_eppa(graph(1, []), [k2])
        assert fc.structure.tuples("E") == ()


class TestGenericProjections:
    def test_generic_sets_project_small(self, graphs_up_to_3):
        for structure in graphs_up_to_3:
            fc = clique_faithful_extension(structure)
            for subset in generic_subsets(fc.extension, fc.size_cap):
                assert projection_is_small(fc.extension, subset)

    def test_value_permutation_requires_compatible_map(self):
        cert = single_in_k2_cert()
        family = large_sets(cert.extension, cert.embedding)
        ext = build_valued_extension(cert, family)
        a = ext.points[0]
        with pytest.raises(EppaError):
            value_permutation([(a, a)], Permutation((1, 0)), family, 0)
