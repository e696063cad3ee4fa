"""Free amalgams, embedding search, forbidden-family membership, minimal
forbidden structures and the desk-scale clique characterization of free
amalgamation classes."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import BoundExceededError, EppaError
from .structures import (Signature, Structure, induced_substructure,
                         is_embedding, is_gaifman_clique)


@dataclass(frozen=True)
class AmalgamInstance:
    """Two extensions of a common substructure, glued freely."""

    shared: Structure
    left: Structure
    right: Structure
    into_left: tuple[int, ...]
    into_right: tuple[int, ...]

    def __post_init__(self):
        if not is_embedding(self.into_left, self.shared, self.left):
            raise EppaError("left inclusion is not an embedding")
        if not is_embedding(self.into_right, self.shared, self.right):
            raise EppaError("right inclusion is not an embedding")


def free_amalgam(instance: AmalgamInstance) -> tuple[Structure, tuple[int, ...], tuple[int, ...]]:
    """Disjoint union of the two sides glued along the shared part; relations
    are exactly the union, so no tuple meets both outer sides."""
    left, right = instance.left, instance.right
    left_map = tuple(range(left.size))
    shared_image = {instance.into_right[a]: instance.into_left[a]
                    for a in range(instance.shared.size)}
    right_map = []
    fresh = left.size
    for b in range(right.size):
        if b in shared_image:
            right_map.append(shared_image[b])
        else:
            right_map.append(fresh)
            fresh += 1
    rels: dict[str, set[tuple[int, ...]]] = {}
    for name, _ in left.signature.symbols:
        rels[name] = {tuple(left_map[x] for x in t) for t in left.tuples(name)}
        rels[name] |= {tuple(right_map[x] for x in t) for t in right.tuples(name)}
    glued = Structure.make(left.signature, fresh, rels)
    return glued, left_map, tuple(right_map)


def exists_embedding(pattern: Structure, target: Structure) -> tuple[int, ...] | None:
    """First embedding of `pattern` into `target` in lexicographic order of
    assignments, or None; backtracking with tuple-wise pruning."""
    if pattern.signature != target.signature:
        raise EppaError("signature mismatch")
    m, n = pattern.size, target.size
    if m > n:
        return None
    pattern_tuples = [(name, t) for name, _ in pattern.signature.symbols
                      for t in pattern.tuples(name)]
    target_sets = {name: target.tuple_set(name) for name, _ in target.signature.symbols}
    assignment: list[int] = [-1] * m
    used = [False] * n

    def consistent(k: int) -> bool:
        bound = set(range(k + 1))
        image = {assignment[i]: i for i in bound}
        for name, t in pattern_tuples:
            if all(x <= k for x in t):
                if tuple(assignment[x] for x in t) not in target_sets[name]:
                    return False
        for name, _ in pattern.signature.symbols:
            for t in target_sets[name]:
                if all(x in image for x in t):
                    if tuple(image[x] for x in t) not in pattern.tuple_set(name):
                        return False
        return True

    def search(k: int) -> bool:
        if k == m:
            return True
        for v in range(n):
            if used[v]:
                continue
            assignment[k] = v
            used[v] = True
            if consistent(k) and search(k + 1):
                return True
            used[v] = False
        assignment[k] = -1
        return False

    if search(0):
        return tuple(assignment)
    return None


def forb_e_member(structure: Structure, forbidden: Sequence[Structure]) -> bool:
    """No member of the family embeds."""
    return all(exists_embedding(q, structure) is None for q in forbidden)


def canonical_form(structure: Structure) -> Structure:
    """Minimum relation encoding over all permutations of the universe;
    brute force, intended for sizes <= 5."""
    n = structure.size
    best = None
    for perm in itertools.permutations(range(n)):
        rels = tuple(
            tuple(sorted(tuple(perm[x] for x in t) for t in tuples))
            for tuples in structure.relations)
        if best is None or rels < best:
            best = rels
    return Structure(structure.signature, n, best if best is not None else structure.relations)


def enumerate_structures(signature: Signature, size: int,
                         universe: Callable[[Structure], bool] | None = None
                         ) -> list[Structure]:
    """Canonical representatives of all structures of exactly `size` points,
    optionally restricted to a hereditary universe predicate."""
    slots: list[tuple[str, tuple[int, ...]]] = []
    for name, arity in signature.symbols:
        for t in itertools.product(range(size), repeat=arity):
            slots.append((name, t))
    if len(slots) > 20:
        raise BoundExceededError(f"{len(slots)} relation slots; enumeration refused")
    seen: set[Structure] = set()
    out: list[Structure] = []
    for state in range(1 << len(slots)):
        rels: dict[str, set[tuple[int, ...]]] = {name: set() for name, _ in signature.symbols}
        for k, (name, t) in enumerate(slots):
            if state >> k & 1:
                rels[name].add(t)
        s = Structure.make(signature, size, rels)
        if universe is not None and not universe(s):
            continue
        canon = canonical_form(s)
        if canon not in seen:
            seen.add(canon)
            out.append(canon)
    return out


def minimal_forbidden(member: Callable[[Structure], bool], max_size: int,
                      signature: Signature,
                      universe: Callable[[Structure], bool] | None = None
                      ) -> list[Structure]:
    """Non-members all of whose one-point deletions are members, up to
    isomorphism, for sizes <= max_size."""
    out = []
    for size in range(max_size + 1):
        for s in enumerate_structures(signature, size, universe):
            if member(s):
                continue
            minimal = True
            for v in range(size):
                rest, _ = induced_substructure(s, [x for x in range(size) if x != v])
                if not member(rest):
                    minimal = False
                    break
            if minimal:
                out.append(s)
    return out


@dataclass(frozen=True)
class CharacterizationReport:
    """Outcome of the desk-scale biconditional: minimal forbidden structures
    are all Gaifman cliques iff the class is closed under free amalgams."""

    cliques_side: bool
    closure_side: bool
    non_clique_witness: Structure | None
    closure_witness: tuple[Structure, Structure, Structure, Structure] | None
    minimal: tuple[Structure, ...]

    def agree(self) -> bool:
        return self.cliques_side == self.closure_side


def check_clique_characterization(member: Callable[[Structure], bool],
                                  max_size: int, signature: Signature,
                                  universe: Callable[[Structure], bool] | None = None
                                  ) -> CharacterizationReport:
    """Check both sides of the characterization on structures of bounded size
    and report a witness for whichever side fails."""
    minimal = tuple(minimal_forbidden(member, max_size, signature, universe))
    non_clique = None
    for f in minimal:
        if not is_gaifman_clique(f):
            non_clique = f
            break

    closure_witness = None
    members: list[Structure] = []
    for size in range(max_size + 1):
        members.extend(s for s in enumerate_structures(signature, size, universe)
                       if member(s))
    for left in members:
        for right in members:
            for k in range(min(left.size, right.size) + 1):
                if left.size + right.size - k > max_size:
                    continue
                for pts_left in itertools.combinations(range(left.size), k):
                    shared, _ = induced_substructure(left, pts_left)
                    for pts_right in itertools.combinations(range(right.size), k):
                        for image in itertools.permutations(pts_right):
                            mapping = tuple(image)
                            try:
                                inst = AmalgamInstance(
                                    shared=shared, left=left, right=right,
                                    into_left=tuple(pts_left), into_right=mapping)
                            except EppaError:
                                continue
                            glued, _, _ = free_amalgam(inst)
                            if universe is not None and not universe(glued):
                                continue
                            if not member(glued):
                                closure_witness = (left, right, shared, glued)
                                break
                        if closure_witness:
                            break
                    if closure_witness:
                        break
                if closure_witness:
                    break
            if closure_witness:
                break
        if closure_witness:
            break

    return CharacterizationReport(
        cliques_side=non_clique is None,
        closure_side=closure_witness is None,
        non_clique_witness=non_clique,
        closure_witness=closure_witness,
        minimal=minimal)


def is_graph_universe(structure: Structure) -> bool:
    """Universe predicate for simple graphs over a single binary symbol."""
    return structure.is_graphlike()
