"""
Separation of elements by finite p-group quotients.

This module builds, for a clean presentation, the finite-index subgroup G and
the finite p-group quotients of G that separate a given element:
1. kernel_cover: the Schreier cover of the loops for the theta_1 image group;
   its loop kernel Q defines G
2. lift_gog / rewrite_into_cover: G as the fundamental group of the lifted
   graph of groups, and words of G in its presentation
3. quotient_gog / check_filtration: vertex groups pushed to F / gamma^p_n(F)
4. depth_cover / build_psi / free_kernel_basis: the Q_n cover, the per-vertex
   automorphisms psi_v and the free kernel of psi
5. separate / verify_certificate: permutation certificates and their
   independent checker

All actions are right actions; a word acts letter by letter from the left.

Why is this important?
-----------------------------------
A certificate is a list of permutations that anyone can check against the
cover presentation without trusting anything computed here.
"""

# Import logging for pipeline progress.
import logging
# Import deque for breadth-first closures.
from collections import deque
# Import ThreadPoolExecutor for the concurrent depth search.
from concurrent.futures import ThreadPoolExecutor
# Import dataclasses for value types.
from dataclasses import dataclass, field
# Import typing for type hints.
from typing import Any, Callable, Dict, FrozenSet, Hashable, List, Optional, Sequence, Tuple, Union

# Import numpy for permutation arrays and GL(n, p) arithmetic.
import numpy as np
# Import sympy permutation groups for the independent order check.
from sympy.combinatorics import Permutation, PermutationGroup

# Import toolkit modules.
from .caps import CapMonitor, ElementCapMonitor
from .exceptions import DepthExceeded, IdentityElement, OutsideSubgroup, PathDependence
from .freegrp import Automorphism, Basis, BasisAlignedFactor, FreeMap, Word
from .gog import (
    CleanPresentation,
    Edge,
    GoGWord,
    Graph,
    GraphOfGroups,
    Presentation,
    britton_reduce,
    collapse,
    reduce_pinches,
    spanning_tree,
)
from .pfiltration import (
    InducedAut,
    QuotientGroup,
    build_lambda_oracle,
    lambda_factor_member,
    quotient_group,
    quotient_log_order,
    sigma_n,
    theta1,
)
from .schemas import SUPPORTED_PRIMES, CertificateMeta, CertificateModel, NonPWitnessModel, RunConfig

logger = logging.getLogger(__name__)


def _monitor(monitor: Optional[CapMonitor]) -> CapMonitor:
    return monitor if monitor is not None else ElementCapMonitor()


class SchreierCover:
    """
    Finite cover of the rose on the loops, given by a finite group action.

    States are the elements of the group generated by the loop images, found
    by breadth-first right multiplication from the identity (state 0, the
    basepoint). transitions[k][i - 1] is the state reached from k along loop i.

    Attributes:
        generators (Tuple): Loop images
        states (List[Hashable]): Group elements, in discovery order
        transitions (List[List[int]]): Forward transitions
        parents (List[Optional[Tuple[int, int]]]): Discovery edge (state, loop) per state
    """

    def __init__(self, generators: Sequence[Any], states: List[Hashable],
                 transitions: List[List[int]], parents: List[Optional[Tuple[int, int]]]):
        self.generators = tuple(generators)
        self.states = states
        self.transitions = transitions
        self.parents = parents
        self._inverse = [[0] * len(self.generators) for _ in states]
        for k, row in enumerate(transitions):
            for i, target in enumerate(row):
                self._inverse[target][i] = k

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def loop_count(self) -> int:
        return len(self.generators)

    def step(self, k: int, letter: int) -> int:
        if letter > 0:
            return self.transitions[k][letter - 1]
        return self._inverse[k][-letter - 1]

    def path_end(self, letters: Sequence[int], start: int = 0) -> int:
        k = start
        for letter in letters:
            k = self.step(k, letter)
        return k


def schreier_closure(identity: Hashable, generators: Sequence[Any],
                     mul: Callable[[Any, Any], Hashable], monitor: CapMonitor) -> SchreierCover:
    index = {identity: 0}
    states = [identity]
    parents: List[Optional[Tuple[int, int]]] = [None]
    transitions = []
    k = 0
    while k < len(states):
        row = []
        for i, g in enumerate(generators, start=1):
            nxt = mul(states[k], g)
            j = index.get(nxt)
            if j is None:
                j = len(states)
                monitor.admit("element", j + 1)
                index[nxt] = j
                states.append(nxt)
                parents.append((k, i))
            row.append(j)
        transitions.append(row)
        k += 1
    return SchreierCover(generators, states, transitions, parents)


def _matrix_state(m: np.ndarray) -> Tuple[Tuple[int, ...], ...]:
    return tuple(tuple(int(x) for x in row) for row in m)


def kernel_cover(extensions: Sequence[Automorphism], p: int,
                 monitor: Optional[CapMonitor] = None) -> SchreierCover:
    """
    Cover whose loop kernel Q is the kernel of the loops acting on L_1 = H_1(F, F_p).

    States are the elements of the subgroup of GL(rank, F_p) generated by the
    theta_1 images of the extensions.
    """
    if extensions and any(a.basis != extensions[0].basis for a in extensions):
        raise ValueError("extensions must share one basis")
    rank = extensions[0].basis.rank if extensions else 0
    matrices = [theta1(a, p) for a in extensions]
    mul = lambda s, a: _matrix_state(np.array(s, dtype=np.int64).reshape(rank, rank) @ a % p)
    cover = schreier_closure(_matrix_state(np.eye(rank, dtype=np.int64)), matrices, mul, _monitor(monitor))
    logger.debug(f"kernel cover for p={p}: {cover.size} states over {len(matrices)} loops")
    return cover


def trivial_cover(loop_count: int) -> SchreierCover:
    """
    One-state cover in which every loop is a self-loop.
    """
    return SchreierCover([None] * loop_count, [()], [[0] * loop_count], [None])


@dataclass
class CoveredGoG:
    """
    Graph of groups of the cover and its collapsed presentation.

    Attributes:
        base (CleanPresentation): Presentation being covered
        cover (SchreierCover): States and transitions
        gog (GraphOfGroups): One copy of F per state (vertex "s<k>"), one edge
            pair per (state, loop)
        tree (List[str]): Spanning tree edges, oriented away from s0
        presentation (CleanPresentation): Collapse of gog rooted at s0
        paths (List[List[int]]): Base loop letters along the tree from s0 to each state
        name_origin (Dict[str, Tuple[int, int]]): Cover generator name -> (state, base generator)
        edge_origin (Dict[str, Tuple[int, int, int]]): Edge id -> (origin state, loop, sign)
    """
    base: CleanPresentation
    cover: SchreierCover
    gog: GraphOfGroups
    tree: List[str]
    presentation: CleanPresentation
    paths: List[List[int]]
    name_origin: Dict[str, Tuple[int, int]]
    edge_origin: Dict[str, Tuple[int, int, int]]

    def edge_id(self, k: int, i: int) -> str:
        return f"{self.base.loop_names[i - 1]}_{k}"

    def non_tree_count(self) -> int:
        return len(self.presentation.loops)

    def generator_words(self) -> List[GoGWord]:
        """
        Each generator of the cover presentation as a word of the base presentation.

        A vertex generator of state k is tau_k x tau_k^-1, and the loop of the
        edge (k, i) is tau_k t_i tau_{k'}^-1, with tau the tree paths.
        """
        c = self.base
        out = []
        for name in self.presentation.basis.names:
            k, l = self.name_origin[name]
            path = self.paths[k]
            out.append(c.word(path + [c.basis.generator(l)] + [-x for x in reversed(path)]))
        for name in self.presentation.loop_names:
            k, i, _ = self.edge_origin[name]
            target = self.cover.transitions[k][i - 1]
            out.append(c.word(self.paths[k] + [i] + [-x for x in reversed(self.paths[target])]))
        return out


def lift_gog(c: CleanPresentation, s: SchreierCover) -> CoveredGoG:
    """
    Lift the presentation to the cover and collapse the lift at the basepoint.

    The edge (k, i) runs from state k to k' = k * A_i; its factor is the loop
    domain inside the copy at k' and its map is the loop map into the copy at k.
    """
    if s.loop_count != len(c.loops):
        raise ValueError(f"cover has {s.loop_count} loops, presentation has {len(c.loops)}")
    vertices = tuple(f"s{k}" for k in range(s.size))
    bases = {
        f"s{k}": Basis(c.basis.rank, tuple(f"{name}_{k}" for name in c.basis.names))
        for k in range(s.size)
    }
    edges: Dict[str, Edge] = {}
    factors: Dict[str, BasisAlignedFactor] = {}
    maps: Dict[str, FreeMap] = {}
    edge_origin: Dict[str, Tuple[int, int, int]] = {}
    for k in range(s.size):
        for i, loop in enumerate(c.loops, start=1):
            target = s.transitions[k][i - 1]
            e = f"{loop.name}_{k}"
            b = f"{e}.bar"
            edges[e] = Edge(e, b, f"s{target}")
            edges[b] = Edge(b, e, f"s{k}")
            factors[e] = BasisAlignedFactor(bases[f"s{target}"], loop.domain.selected)
            factors[b] = BasisAlignedFactor(bases[f"s{k}"], loop.codomain.selected)
            source = bases[f"s{k}"]
            maps[e] = FreeMap(factors[e].basis, source,
                              tuple(Word(source, img.letters) for img in loop.phi.map.images))
            edge_origin[e] = (k, i, 1)
            edge_origin[b] = (target, i, -1)
    gog = GraphOfGroups(Graph(vertices, edges), bases, factors, maps)
    presentation = collapse(gog, root="s0")
    tree = spanning_tree(gog.graph, "s0")

    paths: List[Optional[List[int]]] = [None] * s.size
    paths[0] = []
    for e in tree:
        origin, i, sign = edge_origin[e]
        child = int(gog.graph.tau(e)[1:])
        paths[child] = paths[origin] + [sign * i]

    name_origin = {}
    for k in range(s.size):
        for l, name in enumerate(bases[f"s{k}"].names, start=1):
            name_origin[name] = (k, l)
    logger.debug(f"lifted {len(c.loops)} loops to {s.size} states, "
                 f"{len(presentation.loops)} non-tree edges")
    return CoveredGoG(c, s, gog, tree, presentation, paths, name_origin, edge_origin)


def rewrite_into_cover(w: GoGWord, s: SchreierCover, cov: CoveredGoG) -> GoGWord:
    """
    Rewrite a word of the base presentation lying in G into the cover presentation.

    Raises:
        OutsideSubgroup: if the loop path of w does not return to the basepoint
    """
    c, target = cov.base, cov.presentation
    items: List[Union[Word, int]] = []
    k = 0
    for item in w.items():
        if isinstance(item, Word):
            vertex = f"s{k}"
            local = Word(cov.gog.vertex_basis[vertex], item.letters)
            items.append(FreeMap(local.basis, target.basis, target.dictionary[vertex])(local))
            continue
        i = abs(item)
        origin = k if item > 0 else s.step(k, item)
        e = cov.edge_id(origin, i)
        if e in target.edge_letters:
            index, sign = target.edge_letters[e]
            items.append(index * sign * (1 if item > 0 else -1))
        k = s.step(k, item)
    if k != 0:
        raise OutsideSubgroup(s.states[k])
    return target.word(items)


def _subgroup_indices(q: QuotientGroup, gens: Sequence[int]) -> FrozenSet[int]:
    tables = [q.right_multiplication(g) for g in gens]
    seen = np.zeros(q.order, dtype=bool)
    seen[q.identity] = True
    frontier = np.array([q.identity], dtype=np.int64)
    while frontier.size:
        reached = np.unique(np.concatenate([t[frontier] for t in tables])) if tables else frontier[:0]
        fresh = reached[~seen[reached]]
        seen[fresh] = True
        frontier = fresh
    return frozenset(int(i) for i in np.nonzero(seen)[0])


@dataclass
class QuotientLoop:
    """
    Loop of the quotient graph of groups: sigma restricted to the image of N.

    Attributes:
        name (str): Loop name
        domain (FrozenSet[int]): Image of N in the quotient
        codomain (FrozenSet[int]): Image of M in the quotient
        sigma (InducedAut): Permutation induced by the loop extension
        inverse (Tuple[int, ...]): Inverse permutation
        well_defined (bool): sigma is a homomorphism and maps domain onto codomain
    """
    name: str
    domain: FrozenSet[int]
    codomain: FrozenSet[int]
    sigma: InducedAut
    inverse: Tuple[int, ...]
    well_defined: bool


class _QuotientOps:
    """
    Britton reduction operations over quotient vertex groups.
    """

    def __init__(self, fq: "FiniteQuotientGoG"):
        self.fq = fq

    def mul(self, a: int, b: int) -> int:
        return self.fq.q.mul(a, b)

    def in_domain(self, i: int, u: int) -> bool:
        return u in self.fq.loops[i - 1].domain

    def in_codomain(self, i: int, u: int) -> bool:
        return u in self.fq.loops[i - 1].codomain

    def apply(self, i: int, u: int) -> int:
        return self.fq.loops[i - 1].sigma.perm[u]

    def apply_inverse(self, i: int, u: int) -> int:
        return self.fq.loops[i - 1].inverse[u]


@dataclass
class FiniteQuotientGoG:
    """
    Graph of finite p-groups obtained by replacing every vertex group by F / gamma^p_n(F).

    All vertices of a cover carry the same quotient and every lift of a loop
    the same edge data, so one QuotientGroup and one QuotientLoop per base loop
    describe the whole graph.
    """
    p: int
    n: int
    q: QuotientGroup
    loops: List[QuotientLoop]
    base: CleanPresentation
    cover: Optional[CoveredGoG] = None

    @property
    def vertex_groups(self) -> Dict[str, QuotientGroup]:
        if self.cover is None:
            return {"v": self.q}
        return {v: self.q for v in self.cover.gog.graph.vertices}

    @property
    def edges(self) -> Dict[str, QuotientLoop]:
        if self.cover is None:
            return {loop.name: loop for loop in self.loops}
        return {e: self.loops[i - 1] for e, (_, i, _) in self.cover.edge_origin.items()}

    @property
    def well_defined(self) -> bool:
        return all(loop.well_defined for loop in self.loops)

    def is_p_group(self) -> bool:
        return self.q.is_p_power()

    def reduce(self, w: GoGWord) -> Tuple[List[int], List[int]]:
        """
        Britton reduction of a base word in the quotient multiple HNN extension.
        """
        syllables = [self.q.index_of_word(u) for u in w.syllables]
        return reduce_pinches(syllables, list(w.letters), _QuotientOps(self))

    def survives(self, w: GoGWord) -> bool:
        syllables, letters = self.reduce(w)
        return bool(letters) or syllables[0] != self.q.identity


def quotient_gog(target: Union[CoveredGoG, CleanPresentation], p: int, n: int,
                 monitor: Optional[CapMonitor] = None) -> FiniteQuotientGoG:
    """
    Push vertex groups, edge factors and partial maps to F / gamma^p_n(F).

    Raises:
        CapExceeded: if the oracle or the quotient does not fit the caps
    """
    cover = target if isinstance(target, CoveredGoG) else None
    c = target.base if isinstance(target, CoveredGoG) else target
    # the quotient is materialized below; refuse before building the oracle
    _monitor(monitor).admit("element", p ** quotient_log_order(c.basis.rank, n))
    oracle = build_lambda_oracle(p, c.basis.rank, max(n, 1), monitor)
    q = quotient_group(oracle, n, monitor)
    loops = []
    for loop in c.loops:
        domain = _subgroup_indices(q, [q.index_of_word(g) for g in loop.domain.generators()])
        codomain = _subgroup_indices(q, [q.index_of_word(g) for g in loop.codomain.generators()])
        sigma = sigma_n(loop.phi.extension, q)
        inverse = tuple(int(i) for i in np.argsort(np.array(sigma.perm, dtype=np.int64)))
        well_defined = sigma.well_defined and frozenset(sigma.perm[u] for u in domain) == codomain
        if not well_defined:
            logger.warning(f"loop {loop.name} does not descend to a partial automorphism at depth {n}")
        loops.append(QuotientLoop(loop.name, domain, codomain, sigma, inverse, well_defined))
    return FiniteQuotientGoG(p, n, q, loops, c, cover)


@dataclass
class FiltrationReport:
    """
    Outcome of the filtration hypothesis checks.

    Attributes:
        checks (int): Number of individual checks run
        failures (List[Dict[str, Any]]): kind, loop, depth and word of each failure
    """
    checks: int = 0
    failures: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _short_words_outside(f: BasisAlignedFactor) -> List[Word]:
    basis = f.ambient
    letters = [i for i in range(1, basis.rank + 1)] + [-i for i in range(1, basis.rank + 1)]
    words = [Word(basis, (a,)) for a in letters]
    words += [Word(basis, (a, b)) for a in letters for b in letters if a != -b]
    return [w for w in words if w not in f]


def check_filtration(target: Union[CoveredGoG, CleanPresentation], p: int, depths: Sequence[int],
                     monitor: Optional[CapMonitor] = None) -> FiltrationReport:
    """
    Check compatibility, edge separation and normality of the natural filtration.

    (a) for each loop and sampled u in N: u in gamma_n iff phi(u) in gamma_n;
    (b) each word of length <= 2 outside an edge factor leaves factor * gamma_n
        at some listed depth;
    (c) each layer is closed under conjugation by the generators.
    Domain violations are reported, never raised.
    """
    c = target.base if isinstance(target, CoveredGoG) else target
    report = FiltrationReport()
    depths = sorted(set(depths))
    if not depths:
        return report
    oracle = build_lambda_oracle(p, c.basis.rank, max(depths), monitor)

    for loop in c.loops:
        gens = list(loop.domain.generators())
        samples = gens + [g ** p for g in gens] + [a * b for a in gens for b in gens if a != b]
        samples += [~a * ~b * a * b for a in gens for b in gens if a != b]
        for n in depths:
            for u in samples:
                report.checks += 1
                if oracle.member(u, n) != oracle.member(loop.phi(u), n):
                    report.failures.append({"kind": "compatibility", "loop": loop.name, "depth": n,
                                            "word": str(u)})

        for side, factor in (("domain", loop.domain), ("codomain", loop.codomain)):
            for u in _short_words_outside(factor):
                report.checks += 1
                if all(lambda_factor_member(u, factor, n, oracle) for n in depths):
                    report.failures.append({"kind": "separation", "loop": loop.name, "depth": max(depths),
                                            "word": f"{side}: {u}"})

    G = oracle.layer(1)
    for n in depths:
        layer = oracle.layer(n)
        for h in layer.pcgs.elements():
            for g in G.generators:
                report.checks += 1
                if not layer.contains(g.inverse() * h * g):
                    report.failures.append({"kind": "normality", "loop": None, "depth": n, "word": None})
    return report


def depth_cover(extensions: Sequence[Automorphism], q: QuotientGroup, p: int,
                monitor: Optional[CapMonitor] = None) -> SchreierCover:
    """
    Cover for Q_n: states are pairs (theta_1 image, sigma_n image) of loop products.
    """
    rank = q.rank
    generators = [(theta1(a, p), np.array(sigma_n(a, q).perm, dtype=np.int64)) for a in extensions]

    def mul(state, g):
        matrix, alpha = state
        a, sigma = g
        product = np.array(matrix, dtype=np.int64).reshape(rank, rank) @ a % p
        return _matrix_state(product), tuple(int(x) for x in np.array(alpha, dtype=np.int64)[sigma])

    identity = (_matrix_state(np.eye(rank, dtype=np.int64)), tuple(range(q.order)))
    cover = schreier_closure(identity, generators, mul, _monitor(monitor))
    logger.debug(f"depth-{q.n} cover: {cover.size} states")
    return cover


@dataclass
class PsiSystem:
    """
    Automorphisms psi_v of F / gamma^p_n(F) attached to the states of a cover.

    Attributes:
        quotient (FiniteQuotientGoG): Vertex group and loop data
        cover (SchreierCover): The cover the psi_v live on
        psi (List[Tuple[int, ...]]): psi_v as permutations of representatives
        edge_restrictions (Dict[Tuple[int, int], Dict[int, int]]): For the edge
            (k, i), psi of the target restricted to the image of N_i
    """
    quotient: FiniteQuotientGoG
    cover: SchreierCover
    psi: List[Tuple[int, ...]]
    edge_restrictions: Dict[Tuple[int, int], Dict[int, int]]
    basepoint: int = 0


def build_psi(fq: FiniteQuotientGoG, cover: SchreierCover) -> PsiSystem:
    """
    Compose sigma_n of the loop extensions along the discovery tree of the cover.

    Raises:
        PathDependence: if psi_{k'} differs from psi_k o sigma_i on some edge (k, i)
    """
    sigmas = [np.array(loop.sigma.perm, dtype=np.int64) for loop in fq.loops]
    psi: List[Optional[np.ndarray]] = [None] * cover.size
    psi[0] = np.arange(fq.q.order, dtype=np.int64)
    for k in range(1, cover.size):
        parent, i = cover.parents[k]
        psi[k] = psi[parent][sigmas[i - 1]]
    restrictions = {}
    for k in range(cover.size):
        for i in range(1, cover.loop_count + 1):
            target = cover.transitions[k][i - 1]
            if not np.array_equal(psi[target], psi[k][sigmas[i - 1]]):
                raise PathDependence({"source": k, "loop": fq.loops[i - 1].name, "target": target})
            restrictions[(k, i)] = {u: int(psi[target][u]) for u in sorted(fq.loops[i - 1].domain)}
    return PsiSystem(fq, cover, [tuple(int(x) for x in a) for a in psi], restrictions)


class FreeKernel:
    """
    Free basis of ker psi, indexed by the non-tree edges of its quotient graph.

    The graph has one vertex per state v and, for each loop i, one edge from v
    to v * delta_i per coset x * psi_v(M_i) of the quotient. A word of the
    base presentation walks (x, v) from (1, basepoint); loop letters traverse
    the edge of the current coset.
    """

    def __init__(self, ps: PsiSystem):
        self.psi_system = ps
        q, cover = ps.quotient.q, ps.cover
        self._coset: Dict[Tuple[int, int], np.ndarray] = {}
        for v in range(cover.size):
            for i, loop in enumerate(ps.quotient.loops, start=1):
                image = sorted({ps.psi[v][m] for m in loop.codomain})
                self._coset[(v, i)] = np.min(np.stack([q.right_multiplication(h) for h in image]), axis=0)

        outgoing: Dict[int, List[Tuple[int, int, int]]] = {v: [] for v in range(cover.size)}
        incoming: Dict[int, List[Tuple[int, int, int]]] = {v: [] for v in range(cover.size)}
        self.edges: List[Tuple[int, int, int]] = []
        for (v, i), cosets in sorted(self._coset.items()):
            for o in sorted(set(int(x) for x in cosets)):
                key = (v, i, o)
                self.edges.append(key)
                outgoing[v].append(key)
                incoming[cover.transitions[v][i - 1]].append(key)

        self.tree = set()
        seen = {0}
        queue = deque([0])
        while queue:
            v = queue.popleft()
            for key in outgoing[v]:
                target = cover.transitions[key[0]][key[1] - 1]
                if target not in seen:
                    seen.add(target)
                    self.tree.add(key)
                    queue.append(target)
            for key in incoming[v]:
                if key[0] not in seen:
                    seen.add(key[0])
                    self.tree.add(key)
                    queue.append(key[0])
        self.labels = {key: index for index, key in
                       enumerate((k for k in self.edges if k not in self.tree), start=1)}
        self.rank = len(self.labels)
        self.basis = Basis(self.rank, tuple(f"e{j}" for j in range(1, self.rank + 1))) if self.rank else None

    def label(self, v: int, i: int, x: int) -> int:
        """
        Basis index of the edge leaving (x, v) along loop i, 0 on the tree.
        """
        return self.labels.get((v, i, int(self._coset[(v, i)][x])), 0)

    def walk(self, w: GoGWord) -> Tuple[Tuple[int, int], List[int]]:
        """
        End point (x, v) of w from (1, basepoint) and the signed labels it crossed.
        """
        ps = self.psi_system
        q, cover = ps.quotient.q, ps.cover
        x, v = q.identity, 0
        labels = []
        for item in w.items():
            if isinstance(item, Word):
                x = q.mul(x, ps.psi[v][q.index_of_word(item)])
                continue
            i = abs(item)
            if item > 0:
                label = self.label(v, i, x)
                v = cover.step(v, item)
            else:
                v = cover.step(v, item)
                label = -self.label(v, i, x)
            if label:
                labels.append(label)
        return (x, v), labels

    def rewrite(self, w: GoGWord) -> Word:
        """
        w as a word in the free basis.

        Raises:
            OutsideSubgroup: if w is not in ker psi
        """
        end, labels = self.walk(w)
        if end != (0, 0):
            raise OutsideSubgroup(end)
        if self.basis is None:
            return Word(Basis(1, ("e1",)), ())
        return Word(self.basis, tuple(labels))


def free_kernel_basis(ps: PsiSystem) -> FreeKernel:
    return FreeKernel(ps)


def p_core(member: Callable[[Any], bool], transversal: Sequence[Any]) -> Callable[[Any], bool]:
    """
    Membership oracle for the intersection of the conjugates t S t^-1 over a transversal.

    Elements need `*` and `~`; h is in t S t^-1 iff t^-1 h t is in S.
    """
    def core_member(h) -> bool:
        return all(member(~t * h * t) for t in transversal)
    return core_member


class PermutationAction:
    """
    Right action of the base presentation on range(size).

    Attributes:
        size (int): Number of points
        vertex_perms (List[np.ndarray]): Image arrays of the vertex generators
        loop_perms (List[np.ndarray]): Image arrays of the loop letters
    """

    def __init__(self, size: int, vertex_perms: List[np.ndarray], loop_perms: List[np.ndarray]):
        self.size = size
        self.vertex_perms = vertex_perms
        self.loop_perms = loop_perms
        self._inverses: Dict[Tuple[str, int], np.ndarray] = {}

    def _letter(self, kind: str, letter: int) -> np.ndarray:
        perms = self.vertex_perms if kind == "vertex" else self.loop_perms
        if letter > 0:
            return perms[letter - 1]
        key = (kind, -letter)
        if key not in self._inverses:
            self._inverses[key] = np.argsort(perms[-letter - 1])
        return self._inverses[key]

    def evaluate(self, w: GoGWord) -> np.ndarray:
        out = np.arange(self.size, dtype=np.int64)
        for item in w.items():
            if isinstance(item, Word):
                for letter in item.letters:
                    out = self._letter("vertex", letter)[out]
            else:
                out = self._letter("loop", item)[out]
        return out

    def transversal(self, c: CleanPresentation, start: int = 0) -> List[GoGWord]:
        """
        One word per point of the orbit of start, in breadth-first order.
        """
        moves: List[Tuple[np.ndarray, Union[Word, int]]] = []
        for l in range(1, c.basis.rank + 1):
            moves += [(self._letter("vertex", l), c.basis.generator(l)),
                      (self._letter("vertex", -l), ~c.basis.generator(l))]
        for i in range(1, len(c.loops) + 1):
            moves += [(self._letter("loop", i), i), (self._letter("loop", -i), -i)]
        words = {start: c.identity()}
        queue = deque([start])
        while queue:
            point = queue.popleft()
            for perm, item in moves:
                nxt = int(perm[point])
                if nxt not in words:
                    words[nxt] = words[point] * c.word([item])
                    queue.append(nxt)
        return [words[k] for k in sorted(words)]


def delta_action(c: CleanPresentation, dc: SchreierCover) -> PermutationAction:
    """
    Action on the states of the Q_n cover; vertex generators act trivially.
    """
    identity = np.arange(dc.size, dtype=np.int64)
    loops = [np.array([row[i] for row in dc.transitions], dtype=np.int64) for i in range(dc.loop_count)]
    return PermutationAction(dc.size, [identity] * c.basis.rank, loops)


def fiber_action(c: CleanPresentation, ps: PsiSystem, monitor: Optional[CapMonitor] = None) -> PermutationAction:
    """
    Action on pairs (x, v), point v * |Q| + x: x_l sends x to x * psi_v(x_l), t_i moves v.
    """
    q, dc = ps.quotient.q, ps.cover
    size = q.order * dc.size
    _monitor(monitor).admit("element", size)
    offsets = np.arange(dc.size, dtype=np.int64) * q.order
    vertex = []
    for l in range(1, c.basis.rank + 1):
        g = q.index_of_word(c.basis.generator(l))
        vertex.append(np.concatenate([offsets[v] + q.right_multiplication(ps.psi[v][g]) for v in range(dc.size)]))
    x = np.tile(np.arange(q.order, dtype=np.int64), dc.size)
    v = np.repeat(np.arange(dc.size, dtype=np.int64), q.order)
    loops = []
    for i in range(dc.loop_count):
        targets = np.array([row[i] for row in dc.transitions], dtype=np.int64)
        loops.append(targets[v] * q.order + x)
    return PermutationAction(size, vertex, loops)


def kernel_action(fiber: PermutationAction, kernel: FreeKernel, rq: QuotientGroup,
                  monitor: Optional[CapMonitor] = None) -> PermutationAction:
    """
    Action on pairs (y, z), point y * |fiber| + z: loop letters also multiply
    y by the free basis element of the crossed edge.
    """
    ps = kernel.psi_system
    order = ps.quotient.q.order
    inner = fiber.size
    size = rq.order * inner
    _monitor(monitor).admit("element", size)
    y = np.arange(rq.order, dtype=np.int64)
    vertex = [(y[:, None] * inner + perm[None, :]).reshape(-1) for perm in fiber.vertex_perms]
    shifts = {0: y}
    loops = []
    for i, perm in enumerate(fiber.loop_perms, start=1):
        out = np.empty(size, dtype=np.int64)
        for z in range(inner):
            label = kernel.label(z // order, i, z % order)
            if label not in shifts:
                shifts[label] = rq.right_table(label)
            out[y * inner + z] = shifts[label] * inner + perm[z]
        loops.append(out)
    return PermutationAction(size, vertex, loops)


@dataclass
class Certificate:
    """
    Permutation image of the cover presentation in a finite p-group.

    Attributes:
        p (int): Prime
        degree (int): Number of points; the action is regular
        order_exp (int): The image group has order p^order_exp
        generator_names (Tuple[str, ...]): Cover presentation generators
        generator_images (Tuple[Tuple[int, ...], ...]): One permutation per generator
        element_image (Tuple[int, ...]): Image of the separated element
        meta (CertificateMeta): Depth, cover index, kernel level and rank
    """
    p: int
    degree: int
    order_exp: int
    generator_names: Tuple[str, ...]
    generator_images: Tuple[Tuple[int, ...], ...]
    element_image: Tuple[int, ...]
    meta: CertificateMeta

    def to_model(self) -> CertificateModel:
        return CertificateModel(
            p=self.p, degree=self.degree, order_exp=self.order_exp,
            generator_names=list(self.generator_names),
            generator_images=[list(img) for img in self.generator_images],
            element_image=list(self.element_image), meta=self.meta,
        )

    @classmethod
    def from_model(cls, model: CertificateModel) -> "Certificate":
        return cls(model.p, model.degree, model.order_exp, tuple(model.generator_names),
                   tuple(tuple(img) for img in model.generator_images), tuple(model.element_image),
                   model.meta)


@dataclass
class NonPWitness:
    """
    Homomorphism onto the theta_1 image group in which the element is nontrivial.
    """
    p: int
    order: int
    state: Tuple[Tuple[int, ...], ...]
    generator_names: Tuple[str, ...]
    generator_images: Tuple[Tuple[int, ...], ...]
    element_image: Tuple[int, ...]

    def to_model(self) -> NonPWitnessModel:
        return NonPWitnessModel(
            p=self.p, order=self.order, state=[list(row) for row in self.state],
            generator_names=list(self.generator_names),
            generator_images=[list(img) for img in self.generator_images],
            element_image=list(self.element_image),
        )


def _non_p_witness(c: CleanPresentation, kc: SchreierCover, w: GoGWord, p: int) -> NonPWitness:
    action = PermutationAction(
        kc.size,
        [np.arange(kc.size, dtype=np.int64)] * c.basis.rank,
        [np.array([row[i] for row in kc.transitions], dtype=np.int64) for i in range(kc.loop_count)],
    )
    images = [np.arange(kc.size)] * c.basis.rank + action.loop_perms
    end = kc.path_end(w.letters)
    return NonPWitness(
        p=p, order=kc.size, state=kc.states[end],
        generator_names=c.basis.names + c.loop_names,
        generator_images=tuple(tuple(int(x) for x in img) for img in images),
        element_image=tuple(int(x) for x in action.evaluate(w)),
    )


def _log_p(order: int, p: int) -> Optional[int]:
    a = 0
    while order % p == 0:
        order //= p
        a += 1
    return a if order == 1 else None


def _regular_certificate(action: PermutationAction, cov: CoveredGoG, w: GoGWord, p: int,
                         meta: CertificateMeta, monitor: CapMonitor) -> Optional[Certificate]:
    """
    Regular representation of the image of G, restricted to a G-orbit moved by w.
    """
    w_perm = action.evaluate(w)
    moved = np.nonzero(w_perm != np.arange(action.size))[0]
    if moved.size == 0:
        return None
    gen_perms = [action.evaluate(gw) for gw in cov.generator_words()]

    start = int(moved[0])
    seen = {start}
    queue = deque([start])
    while queue:
        point = queue.popleft()
        for perm in gen_perms:
            nxt = int(perm[point])
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    orbit = np.array(sorted(seen), dtype=np.int64)
    position = np.full(action.size, -1, dtype=np.int64)
    position[orbit] = np.arange(orbit.size)
    restricted = [position[perm[orbit]] for perm in gen_perms]
    w_restricted = tuple(int(x) for x in position[w_perm[orbit]])

    identity = tuple(range(orbit.size))
    found = {identity}
    elements = [identity]
    queue = deque([identity])
    while queue:
        e = np.array(queue.popleft(), dtype=np.int64)
        for g in restricted:
            nxt = tuple(int(x) for x in g[e])
            if nxt not in found:
                monitor.admit("order", len(found) + 1)
                found.add(nxt)
                elements.append(nxt)
                queue.append(nxt)
    order_exp = _log_p(len(elements), p)
    if order_exp is None:
        raise RuntimeError(f"image of G has order {len(elements)}, not a power of {p}")
    if w_restricted not in found:
        raise RuntimeError("image of the element is outside the image of G")

    elements.sort()
    index = {e: k for k, e in enumerate(elements)}
    arrays = np.array(elements, dtype=np.int64)

    def regular(g: Sequence[int]) -> Tuple[int, ...]:
        g = np.asarray(g, dtype=np.int64)
        return tuple(index[tuple(int(x) for x in g[row])] for row in arrays)

    return Certificate(
        p=p, degree=len(elements), order_exp=order_exp,
        generator_names=cov.presentation.basis.names + cov.presentation.loop_names,
        generator_images=tuple(regular(g) for g in restricted),
        element_image=regular(w_restricted),
        meta=meta,
    )


def _separate_at_depth(c: CleanPresentation, cov: CoveredGoG, w: GoGWord, p: int, n: int,
                       depth_cap: int, monitor: CapMonitor) -> Optional[Certificate]:
    fq = quotient_gog(cov, p, n, monitor)
    if not fq.survives(w):
        logger.debug(f"depth {n}: element dies in the quotient graph of groups")
        return None
    dc = depth_cover(c.extensions(), fq.q, p, monitor)
    ps = build_psi(fq, dc)
    meta = dict(depth=n, cover_index=cov.cover.size)

    cert = _regular_certificate(delta_action(c, dc), cov, w, p,
                                CertificateMeta(kernel_level=0, **meta), monitor)
    if cert is not None:
        return cert
    fiber = fiber_action(c, ps, monitor)
    cert = _regular_certificate(fiber, cov, w, p, CertificateMeta(kernel_level=1, **meta), monitor)
    if cert is not None:
        return cert

    kernel = free_kernel_basis(ps)
    if kernel.rank == 0:
        return None
    r_word = kernel.rewrite(w)
    if r_word.is_identity():
        logger.debug(f"depth {n}: element is trivial in the free kernel")
        return None
    for j in range(2, depth_cap + 1):
        # every later level materializes a quotient at least this large
        monitor.admit("element", p ** quotient_log_order(kernel.rank, j))
        oracle = build_lambda_oracle(p, kernel.rank, j, monitor)
        if oracle.member(r_word, j):
            continue

        def in_level(h: GoGWord, oracle=oracle, j=j) -> bool:
            end, labels = kernel.walk(h)
            return end == (0, 0) and oracle.member(Word(kernel.basis, tuple(labels)), j)

        core = p_core(in_level, fiber.transversal(c))
        if core(w):
            raise RuntimeError(f"element lies in the core of level {j}")
        action = kernel_action(fiber, kernel, quotient_group(oracle, j, monitor), monitor)
        return _regular_certificate(action, cov, w, p,
                                    CertificateMeta(kernel_level=j, kernel_rank=kernel.rank, **meta), monitor)
    return None


def separate(c: CleanPresentation, w: GoGWord, p: int = 2,
             config: Optional[RunConfig] = None) -> Union[Certificate, NonPWitness]:
    """
    Find a finite quotient of G in which w survives.

    Returns a NonPWitness when w is outside G, otherwise a Certificate from the
    smallest depth n in 2..depth_cap at which w survives and a kernel level
    separates it.

    Raises:
        IdentityElement: if w is trivial
        DepthExceeded: if no depth up to the cap separates w
        CapExceeded: if an enumeration exceeds a cap
    """
    config = config if config is not None else RunConfig(p=p)
    monitor = config.monitor()
    if britton_reduce(w, c).is_identity():
        raise IdentityElement(f"{w} is the identity")

    kc = kernel_cover(c.extensions(), p, monitor)
    if kc.path_end(w.letters) != 0:
        logger.debug("element is outside the finite-index subgroup")
        return _non_p_witness(c, kc, w, p)
    cov = lift_gog(c, kc)

    depths = list(range(2, config.depth_cap + 1))
    attempt = lambda n: _separate_at_depth(c, cov, w, p, n, config.depth_cap, monitor)
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            futures = [pool.submit(attempt, n) for n in depths]
        for n, future in zip(depths, futures):
            result = future.result()
            if result is not None:
                return result
    else:
        for n in depths:
            result = attempt(n)
            if result is not None:
                return result
    raise DepthExceeded(config.depth_cap)


@dataclass
class VerificationReport:
    failures: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self) -> bool:
        return self.ok


def _evaluate(images: Dict[str, np.ndarray], w: GoGWord, degree: int) -> np.ndarray:
    out = np.arange(degree, dtype=np.int64)
    inverses: Dict[str, np.ndarray] = {}

    def apply(name: str, sign: int) -> None:
        nonlocal out
        if sign > 0:
            out = images[name][out]
            return
        if name not in inverses:
            inverses[name] = np.argsort(images[name])
        out = inverses[name][out]

    for item in w.items():
        if isinstance(item, Word):
            for letter in item.letters:
                apply(w.basis.names[abs(letter) - 1], letter)
        else:
            apply(w.loop_names[abs(item) - 1], item)
    return out


def verify_certificate(cert: Union[Certificate, CertificateModel], pres: Presentation, w: GoGWord,
                       cover_index: Optional[int] = None) -> VerificationReport:
    """
    Check a certificate using only itself, the cover presentation and the word.

    Checks: supported prime; permutations of range(degree); degree = p^order_exp;
    every relator maps to the identity; the group generated (order computed by
    sympy) has order p^order_exp and is transitive; the recomputed image of w
    equals the recorded one and is not the identity.
    """
    if isinstance(cert, CertificateModel):
        cert = Certificate.from_model(cert)
    report = VerificationReport()
    fail = report.failures.append

    if cert.p not in SUPPORTED_PRIMES:
        fail(f"unsupported prime {cert.p}")
        return report
    if cert.degree != cert.p ** cert.order_exp:
        fail(f"degree {cert.degree} is not {cert.p}^{cert.order_exp}")
    if cover_index is not None and cert.meta.cover_index != cover_index:
        fail(f"cover index {cert.meta.cover_index}, expected {cover_index}")
    if cert.generator_names and tuple(cert.generator_names) != tuple(pres.generators):
        fail("generator names do not match the presentation")
    if len(cert.generator_images) != len(pres.generators) or not pres.generators:
        fail(f"{len(cert.generator_images)} generator images for {len(pres.generators)} generators")
        return report
    target = list(range(cert.degree))
    for name, image in zip(pres.generators, cert.generator_images):
        if sorted(image) != target:
            fail(f"image of {name} is not a permutation of range({cert.degree})")
    if sorted(cert.element_image) != target:
        fail("element image is not a permutation")
    if report.failures:
        return report

    images = {name: np.array(img, dtype=np.int64) for name, img in zip(pres.generators, cert.generator_images)}
    identity = np.arange(cert.degree, dtype=np.int64)
    for r in pres.relators:
        if not np.array_equal(_evaluate(images, r, cert.degree), identity):
            fail(f"relator {r} is not mapped to the identity")
            break

    group = PermutationGroup([Permutation(list(img), size=cert.degree) for img in cert.generator_images])
    if group.order() != cert.p ** cert.order_exp:
        fail(f"generated group has order {group.order()}, claimed {cert.p}^{cert.order_exp}")
    if not group.is_transitive():
        fail("generated group is not transitive")

    element = _evaluate(images, w, cert.degree)
    if not np.array_equal(element, np.array(cert.element_image, dtype=np.int64)):
        fail("recorded element image does not match the recomputed one")
    if np.array_equal(element, identity):
        fail("element image is the identity")
    return report
