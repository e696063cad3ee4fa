"""Gaifman-clique-faithful coherent extensions.

Starting from a verified coherent base extension A <= B, the extension C
consists of valued points (b, chi) where chi assigns to every listed large
subset u of B a value in [1, |u|) when b lies in u and 0 otherwise.  Tuples
of C are the B-satisfied tuples whose point set is generic (distinct owners,
clashing values on every shared large set); this destroys every clique that
cannot be moved into A, while coherent extensions lift through value
permutations that fix 0 and complete order-preservingly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import config
from .base_extension import BaseEppaCertificate, base_eppa, verify_base_certificate
from .coherence import (ExtensionMap, PermutationGroup, Verdict,
                        check_forced_values, verify_coherence, verify_extension)
from .errors import BoundExceededError, EppaError, VerificationError
from .structures import (PartialAutomorphism, Permutation, Structure,
                         automorphism_group, enumerate_partial_automorphisms,
                         gaifman_graph, is_embedding, is_gaifman_clique)


@dataclass(frozen=True)
class LargeSetFamily:
    """Large subsets of B (no automorphism image inside A), as bitmasks in
    deterministic (size, lexicographic) order, optionally capped by size."""

    universe: int
    inner: frozenset[int]
    sets: tuple[int, ...]
    size_cap: int | None
    aut: PermutationGroup = field(hash=False)

    def index_of(self, mask: int) -> int:
        return self.sets.index(mask)

    def member_indices(self, b: int) -> tuple[int, ...]:
        return tuple(i for i, u in enumerate(self.sets) if u >> b & 1)

    def image_index(self, g: Permutation, idx: int) -> int:
        mask = 0
        u = self.sets[idx]
        while u:
            bit = u & -u
            u ^= bit
            mask |= 1 << g(bit.bit_length() - 1)
        return self.sets.index(mask)

    def set_size(self, idx: int) -> int:
        return bin(self.sets[idx]).count("1")


def _mask_points(mask: int) -> list[int]:
    out = []
    while mask:
        bit = mask & -mask
        mask ^= bit
        out.append(bit.bit_length() - 1)
    return out


def is_small(mask: int, inner: frozenset[int], aut: PermutationGroup) -> bool:
    """u is small iff some automorphism maps it inside the inner copy."""
    pts = _mask_points(mask)
    return any(all(g(x) in inner for x in pts) for g in aut.elements)


def large_sets(extension: Structure, inner: Iterable[int],
               size_cap: int | None = None,
               aut: PermutationGroup | None = None) -> LargeSetFamily:
    """All large subsets of the extension within the cap; smallness is decided
    by scanning the materialized automorphism group."""
    inner_set = frozenset(inner)
    if aut is None:
        aut = automorphism_group(extension)
    n = extension.size
    cap = n if size_cap is None else min(size_cap, n)
    found = []
    for size in range(1, cap + 1):
        for combo in itertools.combinations(range(n), size):
            mask = 0
            for x in combo:
                mask |= 1 << x
            if not is_small(mask, inner_set, aut):
                found.append(mask)
    return LargeSetFamily(universe=n, inner=inner_set, sets=tuple(found),
                          size_cap=size_cap, aut=aut)


@dataclass(frozen=True)
class ValuedPoint:
    """C-point: an owner b of B with its values on the large sets containing b,
    aligned with the family's member indices for b."""

    owner: int
    values: tuple[int, ...]

    def value_on(self, family: LargeSetFamily, idx: int) -> int:
        if not family.sets[idx] >> self.owner & 1:
            return 0
        return self.values[family.member_indices(self.owner).index(idx)]


def is_generic(points: Sequence[ValuedPoint], family: LargeSetFamily) -> bool:
    """Distinct owners, and on every listed set containing two owners their
    values differ."""
    pts = list(points)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            a, b = pts[i], pts[j]
            if a == b:
                continue
            if a.owner == b.owner:
                return False
            for idx, u in enumerate(family.sets):
                if u >> a.owner & 1 and u >> b.owner & 1:
                    if a.value_on(family, idx) == b.value_on(family, idx):
                        return False
    return True


@dataclass(frozen=True)
class ValuedExtension:
    """Materialized C: point list, index, projection and the embedding of A."""

    structure: Structure
    points: tuple[ValuedPoint, ...]
    family: LargeSetFamily
    nu: tuple[int, ...]

    def index_of(self, point: ValuedPoint) -> int:
        return self.points.index(point)

    def projection(self, idx: int) -> int:
        return self.points[idx].owner


def valuation_count(extension: Structure, family: LargeSetFamily) -> int:
    total = 0
    for b in range(extension.size):
        prod = 1
        for idx in family.member_indices(b):
            prod *= family.set_size(idx) - 1
        total += prod
    return total


def build_valued_extension(base_cert: BaseEppaCertificate,
                           family: LargeSetFamily) -> ValuedExtension:
    """Materialize C with the generic-tuple relation rule and the canonical
    embedding of A (values index the ascending enumeration of u intersected
    with A, starting at 1)."""
    extension = base_cert.extension
    bound = config.max_valued_points()
    count = valuation_count(extension, family)
    if count > bound:
        raise BoundExceededError(
            f"valued extension would have {count} points (bound {bound}); "
            "pass a smaller size_cap")

    points: list[ValuedPoint] = []
    for b in range(extension.size):
        ranges = []
        feasible = True
        for idx in family.member_indices(b):
            size = family.set_size(idx)
            if size < 2:
                feasible = False
                break
            ranges.append(range(1, size))
        if not feasible:
            continue
        for values in itertools.product(*ranges):
            points.append(ValuedPoint(owner=b, values=values))
    index = {pt: i for i, pt in enumerate(points)}

    inner = sorted(base_cert.embedding)
    nu_points = []
    for a in range(base_cert.base.size):
        b = base_cert.embedding[a]
        values = []
        for idx in family.member_indices(b):
            members = sorted(x for x in _mask_points(family.sets[idx]) if x in set(inner))
            values.append(members.index(b) + 1)
        pt = ValuedPoint(owner=b, values=tuple(values))
        if pt not in index:
            raise EppaError(f"embedding valuation for point {a} is infeasible")
        nu_points.append(index[pt])

    rels: dict[str, list[tuple[int, ...]]] = {}
    budget = 2_000_000
    produced = 0
    for name, arity in extension.signature.symbols:
        tuples = set()
        for t in extension.tuples(name):
            pools = [[i for i, pt in enumerate(points) if pt.owner == b] for b in t]
            est = 1
            for pool in pools:
                est *= len(pool)
            produced += est
            if produced > budget:
                raise BoundExceededError("relation materialization of C too large")
            for combo in itertools.product(*pools):
                chosen = sorted(set(combo))
                if is_generic([points[i] for i in chosen], family):
                    tuples.add(combo)
        rels[name] = sorted(tuples)
    structure = Structure.make(extension.signature, len(points), rels)
    return ValuedExtension(structure=structure, points=tuple(points),
                           family=family, nu=tuple(nu_points))


def value_permutation(valued_pairs: Sequence[tuple[ValuedPoint, ValuedPoint]],
                      g: Permutation, family: LargeSetFamily,
                      idx: int) -> Permutation:
    """The per-set value permutation: fixes 0, sends each realized source
    value to the image point's value on g(u), and completes the remainder
    order-preservingly."""
    size = family.set_size(idx)
    gidx = family.image_index(g, idx)
    mapping = {0: 0}
    sources = set()
    targets = set()
    for src, dst in valued_pairs:
        if g(src.owner) != dst.owner:
            raise EppaError("permutation does not extend the valued map")
        if family.sets[idx] >> src.owner & 1:
            s = src.value_on(family, idx)
            t = dst.value_on(family, gidx)
            if mapping.get(s) == t and s in sources:
                continue
            if s in sources or t in targets:
                raise EppaError("valued map is not generic on the family")
            mapping[s] = t
            sources.add(s)
            targets.add(t)
    rest_src = [v for v in range(1, size) if v not in sources]
    rest_dst = [v for v in range(1, size) if v not in targets]
    for s, t in zip(rest_src, rest_dst):
        mapping[s] = t
    return Permutation(tuple(mapping[v] for v in range(size)))


def theta(p: PartialAutomorphism, g: Permutation, idx: int,
          extension: ValuedExtension) -> Permutation:
    """Value permutation of the set at `idx` induced by a partial automorphism
    of A (through the canonical embedding) and an extension g of it on B."""
    pairs = [(extension.points[extension.nu[x]], extension.points[extension.nu[y]])
             for x, y in p.pairs]
    return value_permutation(pairs, g, extension.family, idx)


def hat_extend(valued_pairs: Sequence[tuple[ValuedPoint, ValuedPoint]],
               g: Permutation, extension: ValuedExtension) -> Permutation:
    """Total extension on C of a compatible valued partial map: owners move
    by g, values by the per-set value permutations."""
    family = extension.family
    thetas = {idx: value_permutation(valued_pairs, g, family, idx)
              for idx in range(len(family.sets))}
    gset = {idx: family.image_index(g, idx) for idx in range(len(family.sets))}
    index = {pt: i for i, pt in enumerate(extension.points)}
    images = []
    for pt in extension.points:
        owner = g(pt.owner)
        member = family.member_indices(owner)
        values = [0] * len(member)
        for pos, idx in enumerate(family.member_indices(pt.owner)):
            values[member.index(gset[idx])] = thetas[idx](pt.values[pos])
        image = ValuedPoint(owner=owner, values=tuple(values))
        images.append(index[image])
    return Permutation(tuple(images))


def enumerate_cliques(structure: Structure, max_size: int | None = None) -> list[tuple[int, ...]]:
    """All nonempty Gaifman cliques up to the size bound, lexicographically."""
    gaif = gaifman_graph(structure)
    edges = gaif.tuple_set("E")
    neighbours = [frozenset(v for u, v in edges if u == x) for x in range(structure.size)]
    cap = structure.size if max_size is None else max_size
    out: list[tuple[int, ...]] = []

    def extend(current: list[int], candidates: Iterable[int]):
        if len(current) >= cap:
            return
        for v in sorted(candidates):
            out.append(tuple(current + [v]))
            extend(current + [v], [w for w in candidates if w > v and w in neighbours[v]])

    extend([], range(structure.size))
    return out


@dataclass(frozen=True)
class FaithfulCertificate:
    """Verified clique-faithful coherent extension, with per-clique witnesses."""

    base_cert: BaseEppaCertificate
    extension: ValuedExtension
    phi: ExtensionMap = field(hash=False)
    clique_witnesses: dict[tuple[int, ...], Permutation] = field(hash=False)
    size_cap: int | None = None
    forbidden: tuple[Structure, ...] = ()

    @property
    def structure(self) -> Structure:
        return self.extension.structure

    def nu(self) -> tuple[int, ...]:
        return self.extension.nu


def clique_faithful_extension(base: Structure,
                              size_cap: int | None = None,
                              base_cert: BaseEppaCertificate | None = None,
                              forbidden: Sequence[Structure] = ()) -> FaithfulCertificate:
    """Full pipeline: coherent base extension, valued extension, coherent lift
    of every partial automorphism, and constructed witnesses moving each
    enumerated clique into the embedded copy of A."""
    if base_cert is None:
        base_cert = base_eppa(base)
    else:
        verdict = verify_base_certificate(base_cert)
        if not verdict:
            raise VerificationError(f"supplied base certificate invalid: {verdict.message()}")
        if base_cert.base != base:
            raise EppaError("base certificate is for a different structure")
    family = large_sets(base_cert.extension, base_cert.embedding, size_cap)
    extension = build_valued_extension(base_cert, family)

    maps = enumerate_partial_automorphisms(base)
    table: dict[str, Permutation] = {}
    for p in maps:
        g = base_cert.phi.lookup(p)
        pairs = [(extension.points[extension.nu[x]], extension.points[extension.nu[y]])
                 for x, y in p.pairs]
        table[p.encode()] = hat_extend(pairs, g, extension)
    phi = ExtensionMap(domain_universe=base.size,
                       codomain_universe=extension.structure.size,
                       embedding=extension.nu, table=table)

    inner = frozenset(base_cert.embedding)
    nu_set = frozenset(extension.nu)
    witnesses: dict[tuple[int, ...], Permutation] = {}
    for clique in enumerate_cliques(extension.structure, size_cap):
        pts = [extension.points[i] for i in clique]
        if not is_generic(pts, family):
            raise VerificationError(f"clique {clique} is not generic")
        projection = [pt.owner for pt in pts]
        witness_g = None
        for g in family.aut.elements:
            if all(g(b) in inner for b in projection):
                witness_g = g
                break
        if witness_g is None:
            raise VerificationError(
                f"projection of clique {clique} is large; faithfulness fails")
        back = {b: a for a, b in enumerate(base_cert.embedding)}
        pairs = [(pt, extension.points[extension.nu[back[witness_g(pt.owner)]]])
                 for pt in pts]
        moved = hat_extend(pairs, witness_g, extension)
        if any(moved(i) not in nu_set for i in clique):
            raise VerificationError(f"witness for clique {clique} misses the inner copy")
        witnesses[clique] = moved

    cert = FaithfulCertificate(base_cert=base_cert, extension=extension, phi=phi,
                               clique_witnesses=witnesses, size_cap=size_cap,
                               forbidden=tuple(forbidden))
    verdict = verify_faithful_certificate(cert)
    if not verdict:
        raise VerificationError(f"pipeline produced invalid certificate: {verdict.message()}")
    return cert


def verify_faithful_view(base: Structure, c_structure: Structure,
                         phi: ExtensionMap,
                         clique_witnesses: dict[tuple[int, ...], Permutation],
                         size_cap: int | None,
                         forbidden: Sequence[Structure]) -> Verdict:
    """Verify a faithful certificate from its serializable surface alone."""
    nu = phi.embedding
    if not is_embedding(nu, base, c_structure):
        return Verdict.failed("embedding", "nu is not an embedding of A into C")
    maps = enumerate_partial_automorphisms(base)
    for p in maps:
        try:
            g = phi.lookup(p)
        except EppaError as exc:
            return Verdict.failed("table", str(exc))
        if not is_embedding(g.images, c_structure, c_structure):
            return Verdict.failed("automorphism",
                                  f"phi({p.encode()}) is not an automorphism of C")
    for check in (verify_extension(phi, maps),
                  verify_coherence(phi, maps),
                  check_forced_values(phi, maps)):
        if not check:
            return check
    nu_set = frozenset(nu)
    cliques = set(enumerate_cliques(c_structure, size_cap))
    for clique, witness in clique_witnesses.items():
        if clique not in cliques:
            return Verdict.failed("clique", f"{clique} is not a Gaifman clique of C")
        if not is_embedding(witness.images, c_structure, c_structure):
            return Verdict.failed("clique-witness",
                                  f"witness for {clique} is not an automorphism")
        if any(witness(i) not in nu_set for i in clique):
            return Verdict.failed("clique-witness",
                                  f"witness for {clique} does not map into nu(A)")
    missing = cliques - set(clique_witnesses)
    if missing:
        return Verdict.failed("clique-cover",
                              f"no witness recorded for clique {sorted(missing)[0]}")
    from .amalgamation import exists_embedding
    for q in forbidden:
        hit = exists_embedding(q, c_structure)
        if hit is not None:
            return Verdict.failed("freeness", f"forbidden structure embeds at {hit}")
    return Verdict.passed()


def verify_faithful_certificate(cert: FaithfulCertificate) -> Verdict:
    """Re-check every certified property from the materialized objects."""
    return verify_faithful_view(cert.base_cert.base, cert.extension.structure,
                                cert.phi, cert.clique_witnesses, cert.size_cap,
                                cert.forbidden)


def forb_e_eppa(base: Structure, forbidden: Sequence[Structure],
                size_cap: int | None = None) -> FaithfulCertificate:
    """Coherent EPPA inside the class of structures embedding no member of a
    family of Gaifman cliques; the output is re-verified to stay in the class."""
    from .amalgamation import exists_embedding, forb_e_member
    forbidden = tuple(forbidden)
    for q in forbidden:
        if not is_gaifman_clique(q):
            raise EppaError("forbidden family contains a structure that is not a Gaifman clique")
    if not forb_e_member(base, forbidden):
        raise EppaError("input structure embeds a forbidden structure")
    if size_cap is None and forbidden:
        size_cap = max(q.size for q in forbidden)
    cert = clique_faithful_extension(base, size_cap=size_cap, forbidden=forbidden)
    for q in forbidden:
        if exists_embedding(q, cert.structure) is not None:
            raise VerificationError("extension is not free of the forbidden family")
    return cert


def generic_subsets(extension: ValuedExtension, max_size: int | None = None
                    ) -> list[tuple[int, ...]]:
    """All nonempty generic subsets of C up to the size bound (lexicographic)."""
    family = extension.family
    cap = len(extension.points) if max_size is None else max_size
    out: list[tuple[int, ...]] = []

    def compatible(chosen: list[int], candidate: int) -> bool:
        return is_generic([extension.points[i] for i in chosen + [candidate]], family)

    def extend(current: list[int], start: int):
        if len(current) >= cap:
            return
        for v in range(start, len(extension.points)):
            if compatible(current, v):
                out.append(tuple(current + [v]))
                extend(current + [v], v + 1)

    extend([], 0)
    return out


def projection_is_small(extension: ValuedExtension, subset: Sequence[int]) -> bool:
    """Witnessed smallness of the projection of a subset of C."""
    family = extension.family
    owners = {extension.points[i].owner for i in subset}
    return any(all(g(b) in family.inner for b in owners) for g in family.aut.elements)
