"""
Free groups: reduced words, Stallings foldings, basis-aligned free factors and
(partial) automorphisms.

This module is the shared currency of the toolkit. Every vertex group, edge
group and loop of a graph of groups is described with the types defined here:
- Basis / Word: finite-rank free groups and their reduced words
- FreeMap / Automorphism: homomorphisms given by generator images
- BasisAlignedFactor / PartialAutomorphism: free factors spanned by a subset of
  a basis and isomorphisms between them with a canonical ambient extension
- SubgroupGraph: folded core graph of a finitely generated subgroup, used for
  membership tests and for rewriting elements in terms of the generators

Why is this important?
-----------------------------------
Words are kept freely reduced at all times, so equality of group elements is
equality of letter tuples. That single fact is what makes factor membership a
normal-form check and keeps all higher layers deterministic.

All types are immutable; every operation is a pure function.
"""

# Import dataclasses for immutable value types.
from dataclasses import dataclass, field
# Import typing for type hints.
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
# Import random for seeded word sampling.
import random
# Import re for the word text syntax.
import re

# Import toolkit exceptions.
from .exceptions import (
    BasisMismatch,
    IndexOutOfRange,
    InvalidInput,
    NotABasisOfFactor,
    NotSurjective,
    RankMismatch,
)


@dataclass(frozen=True)
class Basis:
    """
    Ordered free basis of a finite-rank free group.

    Attributes:
        rank (int): Number of generators, at least 1
        names (Tuple[str, ...]): Distinct generator labels, one per generator
    """
    rank: int
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError(f"basis rank must be positive, got {self.rank}")
        if not self.names:
            object.__setattr__(self, "names", tuple(f"x{i}" for i in range(1, self.rank + 1)))
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if len(names) != self.rank:
            raise ValueError(f"basis of rank {self.rank} needs {self.rank} names, got {len(names)}")
        if len(set(names)) != len(names):
            raise ValueError(f"basis names must be distinct: {names}")

    @classmethod
    def standard(cls, rank: int, prefix: str = "x") -> "Basis":
        return cls(rank, tuple(f"{prefix}{i}" for i in range(1, rank + 1)))

    def index(self, name: str) -> int:
        """
        Return the 1-based index of a generator label.
        """
        try:
            return self.names.index(name) + 1
        except ValueError:
            raise InvalidInput(f"unknown generator {name!r} for basis {self.names}")

    def generator(self, i: int) -> "Word":
        return Word(self, (i,))

    def generators(self) -> Tuple["Word", ...]:
        return tuple(self.generator(i) for i in range(1, self.rank + 1))

    def identity(self) -> "Word":
        return Word(self, ())


def _free_reduce(letters: Iterable[int], rank: int) -> Tuple[int, ...]:
    stack: List[int] = []
    for letter in letters:
        letter = int(letter)
        if letter == 0 or abs(letter) > rank:
            raise IndexOutOfRange(f"letter {letter} outside basis of rank {rank}")
        if stack and stack[-1] == -letter:
            stack.pop()
        else:
            stack.append(letter)
    return tuple(stack)


@dataclass(frozen=True)
class Word:
    """
    Reduced word over a basis.

    Letters are signed 1-based generator indices (+i is generator i, -i its
    inverse). The constructor freely reduces, so no instance ever holds an
    adjacent cancelling pair and the empty tuple is the identity.
    """
    basis: Basis
    letters: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", _free_reduce(self.letters, self.basis.rank))

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def is_identity(self) -> bool:
        return not self.letters

    def __mul__(self, other: "Word") -> "Word":
        return concat(self, other)

    def __invert__(self) -> "Word":
        return invert(self)

    def __pow__(self, n: int) -> "Word":
        if n < 0:
            return invert(self) ** (-n)
        return Word(self.basis, self.letters * n)

    def exponent_sums(self) -> List[int]:
        sums = [0] * self.basis.rank
        for letter in self.letters:
            sums[abs(letter) - 1] += 1 if letter > 0 else -1
        return sums

    def uses(self) -> frozenset:
        return frozenset(abs(letter) for letter in self.letters)

    def __str__(self) -> str:
        return format_word(self)


def reduce(letters: Sequence[int], basis: Basis) -> Word:
    """
    Freely reduce a raw signed sequence into a Word.

    Raises:
        IndexOutOfRange: if a letter is 0 or exceeds the basis rank
    """
    return Word(basis, tuple(letters))


def concat(a: Word, b: Word) -> Word:
    if a.basis != b.basis:
        raise BasisMismatch(f"cannot multiply words over {a.basis.names} and {b.basis.names}")
    return Word(a.basis, a.letters + b.letters)


def invert(a: Word) -> Word:
    return Word(a.basis, tuple(-letter for letter in reversed(a.letters)))


def commutator(a: Word, b: Word) -> Word:
    """
    Return [a, b] = a b a^-1 b^-1.
    """
    return a * b * ~a * ~b


@dataclass(frozen=True)
class FreeMap:
    """
    Homomorphism between free groups given by one image word per source generator.
    """
    source: Basis
    target: Basis
    images: Tuple[Word, ...]

    def __post_init__(self):
        images = tuple(self.images)
        object.__setattr__(self, "images", images)
        if len(images) != self.source.rank:
            raise RankMismatch(f"map needs {self.source.rank} images, got {len(images)}")
        for image in images:
            if image.basis != self.target:
                raise BasisMismatch("map image is not a word over the target basis")

    @classmethod
    def identity(cls, basis: Basis) -> "FreeMap":
        return cls(basis, basis, basis.generators())

    @classmethod
    def from_letters(cls, source: Basis, target: Basis, images: Sequence[Sequence[int]]) -> "FreeMap":
        return cls(source, target, tuple(Word(target, tuple(img)) for img in images))

    def __call__(self, w: Word) -> Word:
        return apply_map(self, w)

    def compose(self, other: "FreeMap") -> "FreeMap":
        """
        Return self o other (apply other first).
        """
        if other.target != self.source:
            raise BasisMismatch("composition of maps over mismatched bases")
        return FreeMap(other.source, self.target, tuple(self(img) for img in other.images))

    def is_identity(self) -> bool:
        return self.source == self.target and self.images == self.source.generators()


def apply_map(m: FreeMap, w: Word) -> Word:
    """
    Substitute generator images into w and reduce.

    Raises:
        BasisMismatch: if w is not a word over m.source
    """
    if w.basis != m.source:
        raise BasisMismatch(f"word over {w.basis.names} given to a map from {m.source.names}")
    out: List[int] = []
    for letter in w.letters:
        image = m.images[abs(letter) - 1].letters
        if letter > 0:
            out.extend(image)
        else:
            out.extend(-x for x in reversed(image))
    return Word(m.target, tuple(out))


@dataclass(frozen=True)
class Automorphism:
    """
    Automorphism of a free group together with its inverse.
    """
    forward: FreeMap
    inverse: FreeMap

    def __post_init__(self):
        if self.forward.source != self.forward.target:
            raise BasisMismatch("automorphism must map a basis to itself")
        if self.inverse.source != self.forward.target or self.inverse.target != self.forward.source:
            raise BasisMismatch("inverse map does not match the forward map")

    @property
    def basis(self) -> Basis:
        return self.forward.source

    @classmethod
    def identity(cls, basis: Basis) -> "Automorphism":
        ident = FreeMap.identity(basis)
        return cls(ident, ident)

    def __call__(self, w: Word) -> Word:
        return self.forward(w)

    def compose(self, other: "Automorphism") -> "Automorphism":
        """
        Return self o other.
        """
        return Automorphism(self.forward.compose(other.forward), other.inverse.compose(self.inverse))

    def inverted(self) -> "Automorphism":
        return Automorphism(self.inverse, self.forward)

    def is_consistent(self) -> bool:
        return (self.forward.compose(self.inverse).is_identity()
                and self.inverse.compose(self.forward).is_identity())


@dataclass(frozen=True)
class BasisAlignedFactor:
    """
    Free factor spanned by an ordered subset of an ambient basis.
    """
    ambient: Basis
    selected: Tuple[int, ...]

    def __post_init__(self):
        selected = tuple(int(i) for i in self.selected)
        object.__setattr__(self, "selected", selected)
        if not selected:
            raise ValueError("edge factors must have positive rank")
        if len(set(selected)) != len(selected):
            raise ValueError(f"factor indices must be distinct: {selected}")
        for i in selected:
            if i < 1 or i > self.ambient.rank:
                raise IndexOutOfRange(f"factor index {i} outside basis of rank {self.ambient.rank}")

    @property
    def rank(self) -> int:
        return len(self.selected)

    @property
    def basis(self) -> Basis:
        return Basis(self.rank, tuple(self.ambient.names[i - 1] for i in self.selected))

    def generators(self) -> Tuple[Word, ...]:
        return tuple(self.ambient.generator(i) for i in self.selected)

    def complement(self) -> Tuple[int, ...]:
        chosen = set(self.selected)
        return tuple(i for i in range(1, self.ambient.rank + 1) if i not in chosen)

    def inclusion(self) -> FreeMap:
        """
        Map from the factor's own basis into the ambient group.
        """
        return FreeMap(self.basis, self.ambient, self.generators())

    def __contains__(self, w: Word) -> bool:
        return factor_membership(w, self)


def factor_membership(w: Word, f: BasisAlignedFactor) -> bool:
    """
    True iff the reduced word w only uses generators selected by f.
    """
    if w.basis != f.ambient:
        raise BasisMismatch("word and factor live over different bases")
    return w.uses() <= set(f.selected)


@dataclass(frozen=True)
class PartialAutomorphism:
    """
    Isomorphism between basis-aligned factors with a canonical ambient extension.

    Attributes:
        domain (BasisAlignedFactor): N
        codomain (BasisAlignedFactor): M
        map (FreeMap): from N's own basis to ambient words spanning M
        extension (Automorphism): ambient automorphism restricting to map on N
    """
    domain: BasisAlignedFactor
    codomain: BasisAlignedFactor
    map: FreeMap
    extension: Automorphism

    def __call__(self, w: Word) -> Word:
        if not factor_membership(w, self.domain):
            raise NotABasisOfFactor("word lies outside the domain factor")
        return self.extension(w)

    def inverse_on(self, w: Word) -> Word:
        if not factor_membership(w, self.codomain):
            raise NotABasisOfFactor("word lies outside the codomain factor")
        return self.extension.inverse(w)


class SubgroupGraph:
    """
    Folded Stallings graph of a finitely generated subgroup.

    Each edge carries, besides its letter, a weight: a word in the subgroup
    generators. For every edge u -l-> v the invariant h_u * l = weight * h_v holds
    for fixed elements h_u (h_base = 1), so the weights read along a closed path
    at the basepoint spell the path's element in terms of the generators.
    """

    def __init__(self, basis: Basis, gens: Sequence[Word], weight_basis: Optional[Basis] = None):
        self.basis = basis
        gens = tuple(gens)
        for g in gens:
            if g.basis != basis:
                raise BasisMismatch("subgroup generators over mixed bases")
        self.generators = gens
        if weight_basis is None:
            weight_basis = Basis.standard(max(1, len(gens)), prefix="g")
        elif weight_basis.rank != len(gens):
            raise RankMismatch("weight basis must have one symbol per generator")
        self.weight_basis = weight_basis
        self.base = 0
        self._vertices = {0}
        self._edges: List[Tuple[int, int, int, Word]] = []
        self._build()
        self._fold()
        self._out: Dict[int, Dict[int, Tuple[int, Word]]] = {v: {} for v in self._vertices}
        for src, letter, dst, weight in self._edges:
            self._out[src][letter] = (dst, weight)
            self._out[dst][-letter] = (src, ~weight)

    def _build(self) -> None:
        one = self.weight_basis.identity()
        fresh = 1
        for j, g in enumerate(self.generators, start=1):
            if g.is_identity():
                continue
            current = self.base
            for pos, letter in enumerate(g.letters):
                last = pos == len(g.letters) - 1
                target = self.base if last else fresh
                if not last:
                    self._vertices.add(fresh)
                    fresh += 1
                weight = self.weight_basis.generator(j) if last else one
                # stored with a positive letter
                if letter > 0:
                    self._edges.append((current, letter, target, weight))
                else:
                    self._edges.append((target, -letter, current, ~weight))
                current = target

    def _oriented(self, k: int, vertex: int, signed: int) -> Tuple[int, Word]:
        src, letter, dst, weight = self._edges[k]
        if signed > 0 and src == vertex:
            return dst, weight
        return src, ~weight

    def _find_collision(self) -> Optional[Tuple[int, int, int, int]]:
        seen: Dict[Tuple[int, int], int] = {}
        for k, (src, letter, dst, _) in enumerate(self._edges):
            for key in ((src, letter), (dst, -letter)):
                if key in seen and seen[key] != k:
                    return seen[key], k, key[0], key[1]
                seen[key] = k
        return None

    def _merge(self, keep: int, drop: int, delta: Word) -> None:
        # h_keep = delta * h_drop
        inv = ~delta
        edges = []
        for src, letter, dst, weight in self._edges:
            if src == drop:
                src, weight = keep, delta * weight
            if dst == drop:
                dst, weight = keep, weight * inv
            edges.append((src, letter, dst, weight))
        self._edges = edges
        self._vertices.discard(drop)

    def _fold(self) -> None:
        while True:
            hit = self._find_collision()
            if hit is None:
                return
            k1, k2, vertex, signed = hit
            a1, c1 = self._oriented(k1, vertex, signed)
            a2, c2 = self._oriented(k2, vertex, signed)
            if a1 != a2:
                if a2 == self.base:
                    self._merge(a2, a1, ~c2 * c1)
                else:
                    self._merge(a1, a2, ~c1 * c2)
            del self._edges[k2]

    def rank(self) -> int:
        return len(self._edges) - len(self._vertices) + 1

    def _read(self, w: Word) -> Optional[Tuple[int, Word]]:
        if w.basis != self.basis:
            raise BasisMismatch("word and subgroup live over different bases")
        vertex = self.base
        weight = self.weight_basis.identity()
        for letter in w.letters:
            step = self._out[vertex].get(letter)
            if step is None:
                return None
            vertex, edge_weight = step
            weight = weight * edge_weight
        return vertex, weight

    def membership(self, w: Word) -> bool:
        read = self._read(w)
        return read is not None and read[0] == self.base

    def express(self, w: Word) -> Optional[Word]:
        """
        Express a member as a word in the generator symbols, None if w is not a member.
        """
        read = self._read(w)
        if read is None or read[0] != self.base:
            return None
        return read[1]

    def vertex_count(self) -> int:
        return len(self._vertices)

    def edge_count(self) -> int:
        return len(self._edges)


def fold_subgroup(gens: Sequence[Word], basis: Optional[Basis] = None,
                  weight_basis: Optional[Basis] = None) -> SubgroupGraph:
    """
    Fold the petal graph of gens into the subgroup's core graph.

    An empty generator list needs the basis argument and yields the trivial subgroup.
    """
    gens = list(gens)
    if basis is None:
        if not gens:
            raise ValueError("basis is required for an empty generator list")
        basis = gens[0].basis
    return SubgroupGraph(basis, gens, weight_basis)


def verify_automorphism(m: FreeMap) -> Automorphism:
    """
    Check that m is onto and return it with a constructively computed inverse.

    Each generator is expressed in the image basis through the folded graph of
    the images; a surjective endomorphism of a free group of finite rank is an
    automorphism.

    Raises:
        BasisMismatch: if source and target differ
        NotSurjective: if some generator is outside the image subgroup
    """
    if m.source != m.target:
        raise BasisMismatch("an automorphism needs source == target")
    graph = fold_subgroup(m.images, m.target, weight_basis=m.source)
    inverse_images = []
    for g in m.target.generators():
        expressed = graph.express(g)
        if expressed is None:
            raise NotSurjective(f"generator {format_word(g)} is not in the image subgroup")
        inverse_images.append(expressed)
    return Automorphism(m, FreeMap(m.target, m.source, tuple(inverse_images)))


def invert_onto_factor(m: FreeMap, codomain: BasisAlignedFactor) -> FreeMap:
    """
    Invert a map whose images form a basis of a basis-aligned factor.

    Returns the map from the codomain's own basis to words over m.source.

    Raises:
        NotABasisOfFactor: if an image leaves the factor or the images do not
            form a basis of it
    """
    if m.target != codomain.ambient:
        raise BasisMismatch("map images and factor live over different bases")
    if m.source.rank != codomain.rank:
        raise NotABasisOfFactor(
            f"{m.source.rank} images cannot form a basis of a rank {codomain.rank} factor")
    for image in m.images:
        if not factor_membership(image, codomain):
            raise NotABasisOfFactor(f"image {format_word(image)} leaves the codomain factor")
    graph = fold_subgroup(m.images, m.target, weight_basis=m.source)
    out = []
    for g in codomain.generators():
        expressed = graph.express(g)
        if expressed is None:
            raise NotABasisOfFactor(f"generator {format_word(g)} is not reached by the images")
        out.append(expressed)
    return FreeMap(codomain.basis, m.source, tuple(out))


def extend_partial(domain: BasisAlignedFactor, codomain: BasisAlignedFactor,
                   map: FreeMap) -> PartialAutomorphism:
    """
    Extend an isomorphism N -> M of basis-aligned factors to the ambient group.

    The i-th complementary generator of the domain goes to the i-th complementary
    generator of the codomain, in ambient index order.

    Raises:
        RankMismatch: if the factors (or the map source) have different ranks
        NotABasisOfFactor: if the images are not a basis of the codomain factor
    """
    if domain.ambient != codomain.ambient:
        raise BasisMismatch("partial automorphism factors must share the ambient basis")
    if domain.rank != codomain.rank or map.source.rank != domain.rank:
        raise RankMismatch(
            f"domain rank {domain.rank}, codomain rank {codomain.rank}, map rank {map.source.rank}")
    if map.target != domain.ambient:
        raise BasisMismatch("map images must be ambient words")
    invert_onto_factor(map, codomain)
    ambient = domain.ambient
    images: List[Optional[Word]] = [None] * ambient.rank
    for j, i in enumerate(domain.selected):
        images[i - 1] = map.images[j]
    for i, k in zip(domain.complement(), codomain.complement()):
        images[i - 1] = ambient.generator(k)
    extension = verify_automorphism(FreeMap(ambient, ambient, tuple(images)))
    return PartialAutomorphism(domain, codomain, map, extension)


_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z0-9_@.]*?)(?:\^(-?\d+))?$")


def parse_tokens(text: str) -> List[Tuple[str, int]]:
    """
    Split `x1 x2^-1 t1^3` into (name, exponent) pairs; "" and "1" are empty.
    """
    out = []
    for token in text.replace("*", " ").split():
        if token == "1":
            continue
        match = _TOKEN.match(token)
        if not match:
            raise InvalidInput(f"cannot parse token {token!r}")
        out.append((match.group(1), int(match.group(2)) if match.group(2) else 1))
    return out


def parse_word(text: str, basis: Basis) -> Word:
    letters: List[int] = []
    for name, exponent in parse_tokens(text):
        index = basis.index(name)
        letters.extend([index if exponent > 0 else -index] * abs(exponent))
    return Word(basis, tuple(letters))


def format_word(w: Word) -> str:
    if w.is_identity():
        return "1"
    tokens = []
    run_letter, run = w.letters[0], 0
    for letter in w.letters + (0,):
        if letter == run_letter:
            run += 1
            continue
        name = w.basis.names[abs(run_letter) - 1]
        exponent = run if run_letter > 0 else -run
        tokens.append(name if exponent == 1 else f"{name}^{exponent}")
        run_letter, run = letter, 1
    return " ".join(tokens)


def random_word(basis: Basis, length: int, rng: random.Random) -> Word:
    """
    Sample a reduced word of exactly the given length.
    """
    letters: List[int] = []
    choices = [i for i in range(1, basis.rank + 1)] + [-i for i in range(1, basis.rank + 1)]
    while len(letters) < length:
        letter = rng.choice(choices)
        if letters and letters[-1] == -letter:
            continue
        letters.append(letter)
    return Word(basis, tuple(letters))
