"""Finite relational structures, morphisms, partial automorphisms and the
reflexive-to-irreflexive signature transform.

Universes are always initial segments {0, ..., n-1}; every canonical order
used elsewhere in the package derives from this numbering.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .config import DEFAULT_AUT_DEGREE_BOUND
from .errors import BoundExceededError, EppaError


@dataclass(frozen=True)
class Signature:
    """Ordered list of (name, arity) pairs; the order is part of identity."""

    symbols: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [s for s, _ in self.symbols]
        if len(set(names)) != len(names):
            raise EppaError(f"duplicate symbol names in {names}")
        for name, arity in self.symbols:
            if arity < 1:
                raise EppaError(f"arity of {name} must be >= 1, got {arity}")

    @staticmethod
    def make(*symbols: tuple[str, int]) -> "Signature":
        return Signature(tuple((str(n), int(a)) for n, a in symbols))

    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.symbols)

    def arity(self, name: str) -> int:
        for n, a in self.symbols:
            if n == name:
                return a
        raise KeyError(name)

    def index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.symbols):
            if n == name:
                return i
        raise KeyError(name)


GRAPH_SIGNATURE = Signature.make(("E", 2))


@dataclass(frozen=True)
class Structure:
    """Finite relational structure; relations are stored sorted per symbol."""

    signature: Signature
    size: int
    relations: tuple[tuple[tuple[int, ...], ...], ...]

    def __post_init__(self):
        if len(self.relations) != len(self.signature.symbols):
            raise EppaError("relation list does not match signature")
        for (name, arity), tuples in zip(self.signature.symbols, self.relations):
            if list(tuples) != sorted(set(tuples)):
                raise EppaError(f"relation {name} is not canonically sorted")
            for t in tuples:
                if len(t) != arity:
                    raise EppaError(f"tuple {t} has wrong arity for {name}")
                for x in t:
                    if not 0 <= x < self.size:
                        raise EppaError(f"point {x} out of range in {name}{t}")

    @staticmethod
    def make(signature: Signature,
             size: int,
             relations: Mapping[str, Iterable[Sequence[int]]] | None = None) -> "Structure":
        relations = relations or {}
        unknown = set(relations) - set(signature.names())
        if unknown:
            raise EppaError(f"unknown symbols {sorted(unknown)}")
        rels = tuple(
            tuple(sorted({tuple(map(int, t)) for t in relations.get(name, ())}))
            for name, _ in signature.symbols)
        return Structure(signature, size, rels)

    def tuples(self, name: str) -> tuple[tuple[int, ...], ...]:
        return self.relations[self.signature.index(name)]

    def tuple_set(self, name: str) -> frozenset[tuple[int, ...]]:
        return frozenset(self.tuples(name))

    def holds(self, name: str, t: Sequence[int]) -> bool:
        return tuple(t) in self.tuple_set(name)

    def is_graphlike(self) -> bool:
        """All symbols binary with symmetric irreflexive interpretation."""
        for (name, arity), tuples in zip(self.signature.symbols, self.relations):
            if arity != 2:
                return False
            for a, b in tuples:
                if a == b or (b, a) not in tuples:
                    return False
        return True


def graph(n: int, edges: Iterable[tuple[int, int]]) -> Structure:
    """Symmetric irreflexive binary structure over the standard graph signature."""
    rel = set()
    for a, b in edges:
        if a == b:
            raise EppaError(f"loop {a} not allowed in graph()")
        rel.add((a, b))
        rel.add((b, a))
    return Structure.make(GRAPH_SIGNATURE, n, {"E": rel})


@dataclass(frozen=True)
class Permutation:
    """Permutation of {0,...,n-1} given by its image array."""

    images: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.images) != list(range(len(self.images))):
            raise EppaError(f"not a permutation: {self.images}")

    @staticmethod
    def identity(n: int) -> "Permutation":
        return Permutation(tuple(range(n)))

    @property
    def degree(self) -> int:
        return len(self.images)

    def __call__(self, x: int) -> int:
        return self.images[x]

    def compose(self, other: "Permutation") -> "Permutation":
        """self after other: (self.compose(other))(x) = self(other(x))."""
        return Permutation(tuple(self.images[y] for y in other.images))

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.images)
        for i, v in enumerate(self.images):
            inv[v] = i
        return Permutation(tuple(inv))

    def apply_set(self, points: Iterable[int]) -> frozenset[int]:
        return frozenset(self.images[x] for x in points)


@dataclass(frozen=True)
class PartialAutomorphism:
    """Isomorphism between two induced substructures, as a sorted pair list."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if list(self.pairs) != sorted(self.pairs):
            raise EppaError("pairs must be sorted")
        xs = [x for x, _ in self.pairs]
        ys = [y for _, y in self.pairs]
        if len(set(xs)) != len(xs) or len(set(ys)) != len(ys):
            raise EppaError("coordinates must be distinct")

    @staticmethod
    def from_map(mapping: Mapping[int, int]) -> "PartialAutomorphism":
        return PartialAutomorphism(tuple(sorted(mapping.items())))

    @staticmethod
    def empty() -> "PartialAutomorphism":
        return PartialAutomorphism(())

    @staticmethod
    def identity_on(points: Iterable[int]) -> "PartialAutomorphism":
        return PartialAutomorphism(tuple((x, x) for x in sorted(points)))

    def as_dict(self) -> dict[int, int]:
        return dict(self.pairs)

    def domain(self) -> frozenset[int]:
        return frozenset(x for x, _ in self.pairs)

    def image(self) -> frozenset[int]:
        return frozenset(y for _, y in self.pairs)

    def __call__(self, x: int) -> int:
        for a, b in self.pairs:
            if a == x:
                return b
        raise KeyError(x)

    def __len__(self) -> int:
        return len(self.pairs)

    def inverse(self) -> "PartialAutomorphism":
        return PartialAutomorphism(tuple(sorted((y, x) for x, y in self.pairs)))

    def compose(self, other: "PartialAutomorphism") -> "PartialAutomorphism":
        """self after other, defined on other's domain (requires composability)."""
        m = self.as_dict()
        return PartialAutomorphism(tuple(sorted((x, m[y]) for x, y in other.pairs)))

    def encode(self) -> str:
        """Canonical key: comma-joined "x>y" pairs, "-" for the empty map."""
        if not self.pairs:
            return "-"
        return ",".join(f"{x}>{y}" for x, y in self.pairs)

    @staticmethod
    def decode(key: str) -> "PartialAutomorphism":
        if key == "-":
            return PartialAutomorphism(())
        pairs = []
        for item in key.split(","):
            x, y = item.split(">")
            pairs.append((int(x), int(y)))
        return PartialAutomorphism(tuple(sorted(pairs)))


def induced_substructure(structure: Structure,
                         points: Iterable[int]) -> tuple[Structure, dict[int, int]]:
    """Substructure on `points` reindexed by the order-preserving index map."""
    pts = sorted(set(points))
    for x in pts:
        if not 0 <= x < structure.size:
            raise EppaError(f"point {x} outside universe of size {structure.size}")
    index = {x: i for i, x in enumerate(pts)}
    rels = {}
    for name, _ in structure.signature.symbols:
        rels[name] = [tuple(index[x] for x in t)
                      for t in structure.tuples(name)
                      if all(x in index for x in t)]
    return Structure.make(structure.signature, len(pts), rels), index


def is_homomorphism(h: Sequence[int], a: Structure, b: Structure) -> bool:
    """h total on A's universe; satisfied tuples must map to satisfied tuples."""
    _check_map(h, a, b)
    for name, _ in a.signature.symbols:
        target = b.tuple_set(name)
        for t in a.tuples(name):
            if tuple(h[x] for x in t) not in target:
                return False
    return True


def is_embedding(h: Sequence[int], a: Structure, b: Structure) -> bool:
    """Injective homomorphism whose image reflects every relation of b."""
    _check_map(h, a, b)
    if len(set(h)) != a.size:
        return False
    if not is_homomorphism(h, a, b):
        return False
    image = set(h)
    back = {v: i for i, v in enumerate(h)}
    for name, _ in a.signature.symbols:
        source = a.tuple_set(name)
        for t in b.tuples(name):
            if all(x in image for x in t):
                if tuple(back[x] for x in t) not in source:
                    return False
    return True


def _check_map(h: Sequence[int], a: Structure, b: Structure) -> None:
    if a.signature != b.signature:
        raise EppaError("signature mismatch")
    if len(h) != a.size:
        raise EppaError(f"map has {len(h)} entries for universe of {a.size}")
    for v in h:
        if not 0 <= v < b.size:
            raise EppaError(f"image point {v} outside codomain of size {b.size}")


def is_partial_automorphism(structure: Structure, p: PartialAutomorphism) -> bool:
    """Does p map the induced substructure on dom(p) isomorphically onto range?"""
    dom = p.domain()
    img = p.image()
    if any(not 0 <= x < structure.size for x in dom | img):
        return False
    m = p.as_dict()
    inv = {y: x for x, y in p.pairs}
    for name, _ in structure.signature.symbols:
        tuples = structure.tuple_set(name)
        for t in tuples:
            if all(x in dom for x in t) and tuple(m[x] for x in t) not in tuples:
                return False
            if all(x in img for x in t) and tuple(inv[x] for x in t) not in tuples:
                return False
    return True


def enumerate_partial_automorphisms(structure: Structure) -> list[PartialAutomorphism]:
    """All of Part(A), empty map included, in lexicographic encoded order
    within each (domain-size, domain, image assignment) sweep."""
    out = []
    pts = range(structure.size)
    for k in range(structure.size + 1):
        for dom in itertools.combinations(pts, k):
            for img in itertools.permutations(pts, k):
                p = PartialAutomorphism(tuple(zip(dom, img)))
                if is_partial_automorphism(structure, p):
                    out.append(p)
    return out


def automorphism_group(structure: Structure,
                       degree_bound: int = DEFAULT_AUT_DEGREE_BOUND):
    """Materialized Aut(A) via backtracking; refuses degrees above the bound."""
    from .coherence import PermutationGroup  # cycle: groups live with coherence

    if structure.size > degree_bound:
        raise BoundExceededError(
            f"automorphism search on {structure.size} points exceeds bound {degree_bound}")
    n = structure.size
    tuple_sets = [structure.tuple_set(name) for name, _ in structure.signature.symbols]
    found: list[Permutation] = []

    def consistent(assigned: list[int], k: int) -> bool:
        # check every tuple fully inside {0..k} in both directions
        dom = set(range(k + 1))
        img = {assigned[i]: i for i in dom}
        for tuples in tuple_sets:
            for t in tuples:
                if all(x <= k for x in t):
                    if tuple(assigned[x] for x in t) not in tuples:
                        return False
                if all(x in img for x in t):
                    if tuple(img[x] for x in t) not in tuples:
                        return False
        return True

    assigned = [-1] * n
    used = [False] * n

    def search(k: int):
        if k == n:
            found.append(Permutation(tuple(assigned)))
            return
        for v in range(n):
            if used[v]:
                continue
            assigned[k] = v
            used[v] = True
            if consistent(assigned, k):
                search(k + 1)
            used[v] = False
        assigned[k] = -1

    search(0)
    elements = tuple(sorted(found, key=lambda g: g.images))
    return PermutationGroup(degree=n, elements=elements, generators=elements)


def gaifman_graph(structure: Structure) -> Structure:
    """Co-occurrence graph: distinct points adjacent iff they share a satisfied tuple."""
    edges = set()
    for name, _ in structure.signature.symbols:
        for t in structure.tuples(name):
            for u, v in itertools.combinations(sorted(set(t)), 2):
                edges.add((u, v))
    return graph(structure.size, edges)


def is_gaifman_clique(structure: Structure, points: Iterable[int] | None = None) -> bool:
    """True iff every two distinct points of the set co-occur in some tuple."""
    pts = sorted(set(points)) if points is not None else list(range(structure.size))
    for x in pts:
        if not 0 <= x < structure.size:
            raise EppaError(f"point {x} outside universe")
    gaif = gaifman_graph(structure)
    edges = gaif.tuple_set("E")
    return all((u, v) in edges for u, v in itertools.combinations(pts, 2))


def _partitions(r: int):
    """Partitions of {0,...,r-1} in restricted-growth-string order."""
    rgs = [0] * r

    def rec(i: int, mx: int):
        if i == r:
            yield tuple(rgs)
            return
        for c in range(mx + 2):
            rgs[i] = c
            yield from rec(i + 1, max(mx, c))

    yield from rec(1, 0) if r > 0 else iter(())


def _growth_strings(r: int) -> list[tuple[int, ...]]:
    if r == 0:
        return []
    if r == 1:
        return [(0,)]
    return list(_partitions(r))


def derived_signature(signature: Signature) -> Signature:
    """One symbol per (symbol, set partition of its positions); name carries
    the restricted growth string."""
    symbols = []
    for name, arity in signature.symbols:
        for rgs in _growth_strings(arity):
            blocks = max(rgs) + 1
            symbols.append((f"{name}_" + "".join(map(str, rgs)), blocks))
    return Signature(tuple(symbols))


def irreflexivize(structure: Structure) -> Structure:
    """Split every symbol by the equality pattern of its arguments; the result
    is irreflexive and remembers each original tuple at its kernel partition."""
    sig = derived_signature(structure.signature)
    rels: dict[str, set[tuple[int, ...]]] = {s: set() for s in sig.names()}
    for name, arity in structure.signature.symbols:
        for rgs in _growth_strings(arity):
            dname = f"{name}_" + "".join(map(str, rgs))
            blocks = max(rgs) + 1
            for t in structure.tuples(name):
                if _kernel(t) == rgs:
                    ys = [0] * blocks
                    for pos, b in enumerate(rgs):
                        ys[b] = t[pos]
                    rels[dname].add(tuple(ys))
    return Structure.make(sig, structure.size, rels)


def deirreflexivize(structure: Structure, original: Signature) -> Structure:
    """Canonical inverse of irreflexivize: read each tuple off its kernel
    partition's derived symbol."""
    if structure.signature != derived_signature(original):
        raise EppaError("signature mismatch: not the derived signature of the original")
    rels: dict[str, set[tuple[int, ...]]] = {n: set() for n in original.names()}
    for name, arity in original.symbols:
        for t in itertools.product(range(structure.size), repeat=arity):
            rgs = _kernel(t)
            dname = f"{name}_" + "".join(map(str, rgs))
            blocks = max(rgs) + 1
            ys = [0] * blocks
            for pos, b in enumerate(rgs):
                ys[b] = t[pos]
            if structure.holds(dname, ys):
                rels[name].add(t)
    return Structure.make(original, structure.size, rels)


def _kernel(t: Sequence[int]) -> tuple[int, ...]:
    """Equality pattern of a tuple as a restricted growth string."""
    seen: dict[int, int] = {}
    out = []
    for x in t:
        if x not in seen:
            seen[x] = len(seen)
        out.append(seen[x])
    return tuple(out)
