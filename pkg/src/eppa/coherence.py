"""Coherent triples, coherence/extension verification, and the coherent lift
of set-level partial maps to permutations.

A triple (p1, p2, q) of partial bijections is coherent when dom(p2) = dom(q),
range(p1) = range(q), range(p2) = dom(p1) and q = p1 o p2.  A map into a
permutation group is coherent when it sends coherent triples to composing
permutations; on a group of total maps this is exactly a homomorphism.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import EppaError
from .structures import PartialAutomorphism, Permutation


@dataclass(frozen=True)
class PermutationGroup:
    """Finite permutation group materialized as a full element list."""

    degree: int
    elements: tuple[Permutation, ...]
    generators: tuple[Permutation, ...]

    def __post_init__(self):
        if not self.elements:
            raise EppaError("group must contain at least the identity")

    @staticmethod
    def from_generators(degree: int, generators: Iterable[Permutation]) -> "PermutationGroup":
        gens = tuple(generators)
        for g in gens:
            if g.degree != degree:
                raise EppaError("generator degree mismatch")
        elements = {Permutation.identity(degree)}
        frontier = list(elements)
        while frontier:
            nxt = []
            for a in frontier:
                for g in gens:
                    b = g.compose(a)
                    if b not in elements:
                        elements.add(b)
                        nxt.append(b)
            frontier = nxt
        ordered = tuple(sorted(elements, key=lambda p: p.images))
        return PermutationGroup(degree=degree, elements=ordered, generators=gens)

    def __contains__(self, g: Permutation) -> bool:
        return g in set(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def is_closed(self) -> bool:
        elems = set(self.elements)
        if Permutation.identity(self.degree) not in elems:
            return False
        for a in self.elements:
            if a.inverse() not in elems:
                return False
        for a in self.elements:
            for b in self.elements:
                if a.compose(b) not in elems:
                    return False
        return True

    def generates_all(self) -> bool:
        regen = PermutationGroup.from_generators(self.degree, self.generators)
        return set(regen.elements) == set(self.elements)

    def index_of(self, g: Permutation) -> int:
        return self.elements.index(g)


@dataclass(frozen=True)
class Verdict:
    """Outcome of a verifier; `condition` names the violated check when not ok."""

    ok: bool
    condition: str = ""
    detail: str = ""

    @staticmethod
    def passed() -> "Verdict":
        return Verdict(True)

    @staticmethod
    def failed(condition: str, detail: str = "") -> "Verdict":
        return Verdict(False, condition, detail)

    def __bool__(self) -> bool:
        return self.ok

    def message(self) -> str:
        if self.ok:
            return "ok"
        return f"{self.condition}: {self.detail}" if self.detail else self.condition


@dataclass(frozen=True)
class ExtensionMap:
    """Table assigning a codomain permutation to every encoded partial
    automorphism, together with the point embedding it extends through."""

    domain_universe: int
    codomain_universe: int
    embedding: tuple[int, ...]
    table: dict[str, Permutation] = field(hash=False)

    def __post_init__(self):
        if len(self.embedding) != self.domain_universe:
            raise EppaError("embedding length does not match domain universe")
        for key, perm in self.table.items():
            if perm.degree != self.codomain_universe:
                raise EppaError(f"table value for {key} is not a codomain permutation")

    def lookup(self, p: PartialAutomorphism) -> Permutation:
        key = p.encode()
        if key not in self.table:
            raise EppaError(f"missing table entry for {key}")
        return self.table[key]

    def embed(self, x: int) -> int:
        return self.embedding[x]


def coherent_triples(maps: Sequence[PartialAutomorphism]
                     ) -> list[tuple[PartialAutomorphism, PartialAutomorphism, PartialAutomorphism]]:
    """All coherent triples within `maps`: composable pairs with their
    composite, which must itself belong to `maps`."""
    by_key = {p.encode(): p for p in maps}
    out = []
    for p2 in maps:
        for p1 in maps:
            if p1.domain() != p2.image():
                continue
            q = p1.compose(p2)
            ql = by_key.get(q.encode())
            if ql is not None:
                out.append((p1, p2, ql))
    return out


def verify_coherence(phi: ExtensionMap, maps: Sequence[PartialAutomorphism]) -> Verdict:
    """Brute-force complete: checks phi(q) = phi(p1) o phi(p2) on exactly the
    triples produced by coherent_triples."""
    for p1, p2, q in coherent_triples(maps):
        g1 = phi.lookup(p1)
        g2 = phi.lookup(p2)
        gq = phi.lookup(q)
        if g1.compose(g2) != gq:
            return Verdict.failed(
                "coherence",
                f"triple ({p1.encode()}, {p2.encode()}, {q.encode()}): "
                f"phi(q) != phi(p1) o phi(p2)")
    return Verdict.passed()


def verify_extension(phi: ExtensionMap, maps: Sequence[PartialAutomorphism]) -> Verdict:
    """phi(p) must extend p through the embedding, for every p."""
    for p in maps:
        g = phi.lookup(p)
        for x, y in p.pairs:
            if g(phi.embed(x)) != phi.embed(y):
                return Verdict.failed(
                    "extension",
                    f"phi({p.encode()}) moves embedded point {x} to "
                    f"{g(phi.embed(x))}, expected image of {y}")
    return Verdict.passed()


@dataclass(frozen=True)
class SetPartialMap:
    """Partial function on subsets of X (as bitmasks), induced elementwise by
    a witness permutation: image = witness[preimage] for every pair."""

    universe: int
    pairs: tuple[tuple[int, int], ...]
    witness: Permutation

    def __post_init__(self):
        seen = set()
        for a, b in self.pairs:
            if a in seen:
                raise EppaError("duplicate domain set")
            seen.add(a)
            if _apply_mask(self.witness, a, self.universe) != b:
                raise EppaError("witness fails to induce the map on some domain set")

    def domain_sets(self) -> tuple[int, ...]:
        return tuple(a for a, _ in self.pairs)

    def image_of(self, a: int) -> int:
        for x, y in self.pairs:
            if x == a:
                return y
        raise KeyError(a)


def _apply_mask(perm: Permutation, mask: int, universe: int) -> int:
    out = 0
    m = mask
    while m:
        b = m & -m
        m ^= b
        out |= 1 << perm(b.bit_length() - 1)
    return out


def mask_atoms(universe: int, masks: Iterable[int]) -> list[int]:
    """Atoms of the Boolean algebra generated by `masks` (with X and the empty
    set), via partition refinement; ordered by least element."""
    full = (1 << universe) - 1
    cells = [full] if universe else []
    for m in masks:
        nxt = []
        for c in cells:
            inside = c & m
            outside = c & ~m
            if inside:
                nxt.append(inside)
            if outside:
                nxt.append(outside)
        cells = nxt
    return sorted(cells, key=lambda c: (c & -c).bit_length())


def _bits(mask: int) -> list[int]:
    out = []
    m = mask
    while m:
        b = m & -m
        m ^= b
        out.append(b.bit_length() - 1)
    return out


def coherent_lift(universe: int, maps: Sequence[SetPartialMap]) -> list[Permutation]:
    """Lift each set-level partial map to a permutation of X so that the
    assignment is coherent and agrees with the map on its domain sets.

    Closing each domain under complement and finite intersections generates a
    Boolean algebra whose atoms are the refinement cells of the domain sets;
    the lift maps each atom onto its witness image by the unique
    order-preserving bijection, under the natural order of X.
    """
    out = []
    for m in maps:
        if m.universe != universe:
            raise EppaError("universe mismatch")
        atoms = mask_atoms(universe, m.domain_sets())
        images = [None] * universe
        for atom in atoms:
            target = _apply_mask(m.witness, atom, universe)
            src = _bits(atom)
            dst = sorted(_bits(target))
            for i, j in zip(src, dst):
                images[i] = j
        out.append(Permutation(tuple(images)))
    return out


def set_map_coherent_triples(maps: Sequence[SetPartialMap]
                             ) -> list[tuple[int, int, int]]:
    """Indices (i1, i2, iq) of coherent triples among set-level maps."""
    out = []
    for i2, p2 in enumerate(maps):
        dom2 = frozenset(p2.domain_sets())
        rng2 = frozenset(b for _, b in p2.pairs)
        for i1, p1 in enumerate(maps):
            if frozenset(p1.domain_sets()) != rng2:
                continue
            rng1 = frozenset(b for _, b in p1.pairs)
            comp = {a: p1.image_of(p2.image_of(a)) for a in dom2}
            for iq, q in enumerate(maps):
                if frozenset(q.domain_sets()) != dom2:
                    continue
                if frozenset(b for _, b in q.pairs) != rng1:
                    continue
                if all(q.image_of(a) == comp[a] for a in dom2):
                    out.append((i1, i2, iq))
    return out


def check_forced_values(phi: ExtensionMap, maps: Sequence[PartialAutomorphism]) -> Verdict:
    """phi(empty) = id, phi(id_D) = id, phi(p^-1) = phi(p)^-1 whenever present."""
    ident = Permutation.identity(phi.codomain_universe)
    by_key = {p.encode(): p for p in maps}
    for p in maps:
        if all(x == y for x, y in p.pairs):
            if phi.lookup(p) != ident:
                return Verdict.failed("forced-identity",
                                      f"phi({p.encode()}) is not the identity")
        q = p.inverse()
        if q.encode() in by_key:
            if phi.lookup(q) != phi.lookup(p).inverse():
                return Verdict.failed("forced-inverse",
                                      f"phi({q.encode()}) != phi({p.encode()})^-1")
    return Verdict.passed()
