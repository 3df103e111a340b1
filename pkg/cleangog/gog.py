"""
Graphs of free groups.

This module covers everything between an input graph of groups and the word
problem in its fundamental group:
- Graph / GraphOfGroups: underlying graph with bar involution and terminal map,
  vertex bases, edge factors and edge maps
- validate_clean: structured report on algebraic cleanness
- spanning_tree / collapse: amalgamate along a spanning tree into a one-vertex
  multiple HNN presentation (CleanPresentation) with a generator dictionary
- GoGWord / britton_reduce: alternating words and their Britton normal form
- pi1_presentation / project_to_graph_group / polyfree_chain

Edge conventions: edge_map[e] sends the basis of factor(e), a factor of
G_tau(e), to words of G_tau(bar e) spanning factor(bar e). The letter e runs
from tau(bar e) to tau(e) and satisfies e * g * e^-1 = edge_map[e](g).
"""

# Import logging for collapse progress.
import logging
# Import deque for the spanning-tree BFS.
from collections import deque
# Import dataclasses for value types.
from dataclasses import dataclass, field
# Import typing for type hints.
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

# Import networkx for connectivity diagnostics.
import networkx as nx

# Import toolkit types and errors.
from .exceptions import (
    BasisMismatch,
    CleanGogError,
    Disconnected,
    IndexOutOfRange,
    InvalidInput,
    NotABasisOfFactor,
    NotClean,
    UnalignedCollapse,
)
from .freegrp import (
    Automorphism,
    Basis,
    BasisAlignedFactor,
    FreeMap,
    PartialAutomorphism,
    Word,
    extend_partial,
    factor_membership,
    fold_subgroup,
    format_word,
    invert_onto_factor,
    parse_tokens,
)
from .schemas import GraphOfGroupsModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Edge:
    id: str
    bar: str
    tau: str


@dataclass
class Graph:
    """
    Oriented graph with an edge involution.

    Attributes:
        vertices (Tuple[str, ...]): Vertex ids
        edges (Dict[str, Edge]): Edges by id
    """
    vertices: Tuple[str, ...]
    edges: Dict[str, Edge] = field(default_factory=dict)

    def origin(self, e: str) -> str:
        return self.edges[self.edges[e].bar].tau

    def tau(self, e: str) -> str:
        return self.edges[e].tau

    def bar(self, e: str) -> str:
        return self.edges[e].bar

    def representatives(self) -> List[str]:
        """
        One edge per pair, the smaller id.
        """
        return sorted(e for e, edge in self.edges.items() if e <= edge.bar)

    def diagnostics(self) -> List[Dict[str, Any]]:
        out = []
        vertex_set = set(self.vertices)
        for e, edge in sorted(self.edges.items()):
            if edge.tau not in vertex_set:
                out.append(_diag("UnknownVertex", e, f"edge {e} ends at unknown vertex {edge.tau}"))
            if edge.bar == e:
                out.append(_diag("BarFixedPoint", e, f"edge {e} is its own reverse"))
            elif edge.bar not in self.edges:
                out.append(_diag("UnknownEdge", e, f"reverse {edge.bar} of edge {e} does not exist"))
            elif self.edges[edge.bar].bar != e:
                out.append(_diag("BarNotInvolution", e,
                                 f"bar(bar({e})) = {self.edges[edge.bar].bar}, expected {e}"))
        return out

    def to_networkx(self) -> nx.MultiGraph:
        g = nx.MultiGraph()
        g.add_nodes_from(self.vertices)
        for e in self.representatives():
            g.add_edge(self.origin(e), self.tau(e), key=e)
        return g


def _diag(kind: str, target: str, message: str) -> Dict[str, Any]:
    return {"kind": kind, "target": target, "message": message}


@dataclass
class GraphOfGroups:
    """
    Graph of finite-rank free groups.

    Attributes:
        graph (Graph): Underlying graph
        vertex_basis (Dict[str, Basis]): Vertex group bases
        edge_factor (Dict[str, BasisAlignedFactor]): factor(e) inside G_tau(e)
        edge_map (Dict[str, FreeMap]): Given edge maps, at least one per pair
    """
    graph: Graph
    vertex_basis: Dict[str, Basis]
    edge_factor: Dict[str, BasisAlignedFactor]
    edge_map: Dict[str, FreeMap]

    @classmethod
    def from_model(cls, model: GraphOfGroupsModel) -> "GraphOfGroups":
        """
        Build from the JSON model.

        Raises:
            InvalidInput: if a factor or map cannot be constructed at all
        """
        graph = Graph(tuple(model.vertices), {e.id: Edge(e.id, e.bar, e.tau) for e in model.edges})
        names = model.vertex_names or {}
        bases = {}
        try:
            for v in model.vertices:
                if v not in model.vertex_ranks:
                    raise InvalidInput(f"vertex {v} has no rank")
                rank = model.vertex_ranks[v]
                if v in names:
                    bases[v] = Basis(rank, tuple(names[v]))
                elif len(model.vertices) == 1:
                    bases[v] = Basis.standard(rank)
                else:
                    bases[v] = Basis(rank, tuple(f"x{i}_{v}" for i in range(1, rank + 1)))
            factors = {}
            for e, f in model.edge_factors.items():
                if e in graph.edges and graph.tau(e) in bases:
                    factors[e] = BasisAlignedFactor(bases[graph.tau(e)], tuple(f.selected))
            maps = {}
            for e, m in model.edge_maps.items():
                if e not in factors or graph.bar(e) not in graph.edges or graph.origin(e) not in bases:
                    raise InvalidInput(f"edge map for {e} has no factor or endpoint")
                if m.source_rank != factors[e].rank:
                    raise InvalidInput(f"edge map for {e} has source rank {m.source_rank}, "
                                       f"factor rank {factors[e].rank}")
                maps[e] = FreeMap.from_letters(factors[e].basis, bases[graph.origin(e)], m.images)
        except (ValueError, IndexOutOfRange, BasisMismatch) as exc:
            raise InvalidInput(str(exc))
        return cls(graph, bases, factors, maps)

    def map_for(self, e: str) -> FreeMap:
        """
        Edge map of e, inverting the map of bar(e) when only that one is given.
        """
        if e in self.edge_map:
            return self.edge_map[e]
        b = self.graph.bar(e)
        inverse = invert_onto_factor(self.edge_map[b], self.edge_factor[e])
        return self.edge_factor[b].inclusion().compose(inverse)


@dataclass
class CleanReport:
    diagnostics: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    def kinds(self) -> List[str]:
        return [d["kind"] for d in self.diagnostics]

    def raise_for_status(self) -> None:
        if self.ok:
            return
        if "Disconnected" in self.kinds():
            raise Disconnected("graph of groups is not connected")
        raise NotClean(f"graph of groups is not algebraically clean: {self.kinds()}", self.diagnostics)


def _to_factor_basis(w: Word, f: BasisAlignedFactor) -> Word:
    position = {i: k for k, i in enumerate(f.selected, start=1)}
    return Word(f.basis, tuple(position[abs(l)] * (1 if l > 0 else -1) for l in w.letters))


def validate_clean(g: GraphOfGroups) -> CleanReport:
    """
    Check algebraic cleanness; every violation becomes one diagnostic.
    """
    report = CleanReport(g.graph.diagnostics())
    graph = g.graph
    for v in graph.vertices:
        if v not in g.vertex_basis:
            report.diagnostics.append(_diag("MissingVertexGroup", v, f"vertex {v} has no group"))
    if report.diagnostics:
        return report

    if not nx.is_connected(graph.to_networkx()):
        components = nx.number_connected_components(graph.to_networkx())
        report.diagnostics.append(_diag("Disconnected", "graph", f"graph has {components} components"))

    for e in sorted(graph.edges):
        if e not in g.edge_factor:
            report.diagnostics.append(_diag("MissingFactor", e, f"edge {e} has no factor"))
    for e in graph.representatives():
        b = graph.bar(e)
        if e not in g.edge_factor or b not in g.edge_factor:
            continue
        if g.edge_factor[e].rank != g.edge_factor[b].rank:
            report.diagnostics.append(_diag(
                "RankMismatch", e, f"factors of {e} and {b} have ranks "
                f"{g.edge_factor[e].rank} and {g.edge_factor[b].rank}"))
            continue
        given = [x for x in (e, b) if x in g.edge_map]
        if not given:
            report.diagnostics.append(_diag("MissingEdgeMap", e, f"edge pair {e}/{b} has no edge map"))
            continue
        valid = True
        for x in given:
            try:
                invert_onto_factor(g.edge_map[x], g.edge_factor[graph.bar(x)])
            except NotABasisOfFactor as exc:
                valid = False
                report.diagnostics.append(_diag("NotABasisOfFactor", x, str(exc)))
        if valid and len(given) == 2:
            forward, backward = g.edge_map[e], g.edge_map[b]
            for gen, image in zip(g.edge_factor[e].generators(), forward.images):
                back = backward(_to_factor_basis(image, g.edge_factor[b]))
                if back != gen:
                    report.diagnostics.append(_diag(
                        "InconsistentEdgeMaps", e,
                        f"edge maps of {e} and {b} are not inverse on {format_word(gen)}"))
                    break
    return report


def spanning_tree(graph: Graph, root: Optional[str] = None) -> List[str]:
    """
    Deterministic BFS spanning tree.

    Returns the tree edges oriented away from the root, in discovery order.
    The root defaults to the least vertex id; ties between parallel edges go
    to the least edge id.

    Raises:
        Disconnected: if some vertex is not reached
    """
    root = root if root is not None else min(graph.vertices)
    outgoing: Dict[str, List[str]] = {v: [] for v in graph.vertices}
    for e in sorted(graph.edges):
        outgoing[graph.origin(e)].append(e)
    seen = {root}
    tree = []
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for e in outgoing[u]:
            v = graph.tau(e)
            if v not in seen:
                seen.add(v)
                tree.append(e)
                queue.append(v)
    if len(seen) != len(graph.vertices):
        missing = sorted(set(graph.vertices) - seen)
        raise Disconnected(f"vertices {missing} are not reachable from {root}")
    return tree


@dataclass(frozen=True)
class Loop:
    """
    Stable letter of a one-vertex presentation: t * g * t^-1 = phi(g) for g in N.
    """
    name: str
    phi: PartialAutomorphism

    @property
    def domain(self) -> BasisAlignedFactor:
        return self.phi.domain

    @property
    def codomain(self) -> BasisAlignedFactor:
        return self.phi.codomain


@dataclass(frozen=True)
class CleanPresentation:
    """
    One-vertex multiple HNN form of an algebraically clean graph of free groups.

    Attributes:
        basis (Basis): Basis of the collapsed vertex group F
        loops (Tuple[Loop, ...]): Stable letters with their partial automorphisms
        tree_record (Tuple[Dict[str, Any], ...]): Collapsed tree edges (edge, parent, child, rank)
        dictionary (Dict[str, Tuple[Word, ...]]): Images of each original vertex
            generator as words over basis
        edge_letters (Dict[str, Tuple[int, int]]): Original non-tree edge -> (loop index, sign)
    """
    basis: Basis
    loops: Tuple[Loop, ...]
    tree_record: Tuple[Dict[str, Any], ...] = ()
    dictionary: Dict[str, Tuple[Word, ...]] = field(default_factory=dict)
    edge_letters: Dict[str, Tuple[int, int]] = field(default_factory=dict)

    @property
    def loop_names(self) -> Tuple[str, ...]:
        return tuple(loop.name for loop in self.loops)

    def extensions(self) -> List[Automorphism]:
        return [loop.phi.extension for loop in self.loops]

    def word(self, items: Sequence[Union[Word, int]]) -> "GoGWord":
        return GoGWord.build(self.basis, self.loop_names, items)

    def identity(self) -> "GoGWord":
        return self.word([])

    def summary(self) -> Dict[str, Any]:
        return {
            "rank": self.basis.rank,
            "generators": list(self.basis.names),
            "loops": [
                {
                    "name": loop.name,
                    "domain": [self.basis.names[i - 1] for i in loop.domain.selected],
                    "codomain": [self.basis.names[i - 1] for i in loop.codomain.selected],
                    "map": [format_word(img) for img in loop.phi.map.images],
                    "extension": [format_word(img) for img in loop.phi.extension.forward.images],
                }
                for loop in self.loops
            ],
            "tree": [dict(record) for record in self.tree_record],
        }


def one_vertex(basis: Basis, loops: Sequence[Tuple[str, PartialAutomorphism]]) -> CleanPresentation:
    """
    Presentation given directly by a basis and loops.
    """
    return CleanPresentation(basis, tuple(Loop(name, phi) for name, phi in loops),
                             dictionary={"v": basis.generators()})


def _aligned(images: Sequence[Word], basis: Basis, source: Basis) -> Tuple[BasisAlignedFactor, List[Word]]:
    """
    Factor spanned by the letters of images, provided images form a basis of it.

    Returns the factor and each factor generator as a word over source (one
    symbol per image).
    """
    letters = sorted(set().union(*(img.uses() for img in images)))
    if len(letters) != len(images) or not letters:
        raise UnalignedCollapse(f"loop factor {[format_word(i) for i in images]} is not basis aligned after collapse",
                                [_diag("UnalignedFactor", "collapse", "rewritten loop factor is not basis aligned")])
    factor = BasisAlignedFactor(basis, tuple(letters))
    graph = fold_subgroup(images, basis, weight_basis=source)
    expressed = []
    for g in factor.generators():
        w = graph.express(g)
        if w is None:
            raise UnalignedCollapse(f"generator {format_word(g)} is not spanned by the rewritten loop factor",
                                    [_diag("UnalignedFactor", "collapse", "rewritten loop factor is not a basis")])
        expressed.append(w)
    return factor, expressed


def _substitute(images: Sequence[Tuple[int, ...]], letters: Sequence[int]) -> Tuple[int, ...]:
    out: List[int] = []
    for letter in letters:
        image = images[abs(letter) - 1]
        out.extend(image if letter > 0 else tuple(-x for x in reversed(image)))
    return tuple(out)


def collapse(g: GraphOfGroups, root: Optional[str] = None) -> CleanPresentation:
    """
    Collapse a spanning tree into a one-vertex presentation.

    Each tree edge e from parent u to child c amalgamates G_c into the current
    group: the generators of factor(e) are replaced by their edge-map images,
    the remaining generators of G_c become new basis letters. Non-tree edges
    become loops whose factors and maps are rewritten through the resulting
    generator dictionary.

    Raises:
        Disconnected: if the graph is not connected
        NotClean: if validate_clean fails
        UnalignedCollapse: if a loop factor of a clean input stops being
            basis aligned after rewriting
    """
    validate_clean(g).raise_for_status()
    graph = g.graph
    root = root if root is not None else min(graph.vertices)
    tree = spanning_tree(graph, root)

    names: List[str] = list(g.vertex_basis[root].names)
    images: Dict[str, List[Tuple[int, ...]]] = {root: [(i,) for i in range(1, len(names) + 1)]}
    record = []
    for e in tree:
        parent, child = graph.origin(e), graph.tau(e)
        factor = g.edge_factor[e]
        edge_map = g.map_for(e)
        child_images = []
        for i, name in enumerate(g.vertex_basis[child].names, start=1):
            if i in factor.selected:
                image = edge_map.images[factor.selected.index(i)].letters
                child_images.append(_substitute(images[parent], image))
            else:
                names.append(name if name not in names else f"{name}@{child}")
                child_images.append((len(names),))
        images[child] = child_images
        record.append({"edge": e, "parent": parent, "child": child, "rank": factor.rank})

    basis = Basis(len(names), tuple(names))
    dictionary = {v: tuple(Word(basis, img) for img in images[v]) for v in graph.vertices}
    tree_pairs = set(tree) | {graph.bar(e) for e in tree}

    loops = []
    edge_letters = {}
    for e in graph.representatives():
        if e in tree_pairs:
            continue
        b = graph.bar(e)
        factor_e = g.edge_factor[e]
        edge_map = g.map_for(e)
        to_ambient = FreeMap(g.vertex_basis[graph.origin(e)], basis, dictionary[graph.origin(e)])
        n_images = [dictionary[graph.tau(e)][i - 1] for i in factor_e.selected]
        m_images = [to_ambient(img) for img in edge_map.images]
        domain, expressed = _aligned(n_images, basis, factor_e.basis)
        codomain, _ = _aligned(m_images, basis, factor_e.basis)
        phi_of = FreeMap(factor_e.basis, basis, tuple(m_images))
        phi_map = FreeMap(domain.basis, basis, tuple(phi_of(w) for w in expressed))
        try:
            phi = extend_partial(domain, codomain, phi_map)
        except CleanGogError as exc:
            raise NotClean(f"loop {e} does not give a partial automorphism: {exc}",
                           [_diag(type(exc).__name__, e, str(exc))])
        edge_letters[e] = (len(loops) + 1, 1)
        edge_letters[b] = (len(loops) + 1, -1)
        loops.append(Loop(e, phi))

    logger.debug(f"collapsed {len(graph.vertices)} vertices into rank {basis.rank} with {len(loops)} loops")
    return CleanPresentation(basis, tuple(loops), tuple(record), dictionary, edge_letters)


@dataclass(frozen=True)
class GoGWord:
    """
    Alternating word s_0 t^{e_1} s_1 ... t^{e_k} s_k in a one-vertex presentation.

    Syllables are reduced vertex words; letters are signed 1-based loop
    indices. The constructor merges syllables around cancelling letters
    separated by an empty syllable, so t * t^-1 never survives.
    """
    basis: Basis
    loop_names: Tuple[str, ...]
    syllables: Tuple[Word, ...]
    letters: Tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.syllables) != len(self.letters) + 1:
            raise ValueError("a word with k loop letters needs k + 1 syllables")
        syllables = [self.syllables[0]]
        letters: List[int] = []
        for letter, syllable in zip(self.letters, self.syllables[1:]):
            if letter == 0 or abs(letter) > len(self.loop_names):
                raise IndexOutOfRange(f"loop letter {letter} outside {len(self.loop_names)} loops")
            if letters and letters[-1] == -letter and syllables[-1].is_identity():
                letters.pop()
                syllables.pop()
                syllables[-1] = syllables[-1] * syllable
            else:
                letters.append(letter)
                syllables.append(syllable)
        object.__setattr__(self, "syllables", tuple(syllables))
        object.__setattr__(self, "letters", tuple(letters))

    @classmethod
    def build(cls, basis: Basis, loop_names: Sequence[str],
              items: Sequence[Union[Word, int]]) -> "GoGWord":
        """
        Build from a flat sequence of vertex words and signed loop indices.
        """
        syllables = [basis.identity()]
        letters = []
        for item in items:
            if isinstance(item, Word):
                syllables[-1] = syllables[-1] * item
            else:
                letters.append(int(item))
                syllables.append(basis.identity())
        return cls(basis, tuple(loop_names), tuple(syllables), tuple(letters))

    def items(self) -> List[Union[Word, int]]:
        out: List[Union[Word, int]] = [self.syllables[0]]
        for letter, syllable in zip(self.letters, self.syllables[1:]):
            out.extend([letter, syllable])
        return out

    def is_identity(self) -> bool:
        return not self.letters and self.syllables[0].is_identity()

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "GoGWord") -> "GoGWord":
        if other.basis != self.basis or other.loop_names != self.loop_names:
            raise BasisMismatch("graph-of-groups words over different presentations")
        return GoGWord.build(self.basis, self.loop_names, self.items() + other.items())

    def __invert__(self) -> "GoGWord":
        items = [~x if isinstance(x, Word) else -x for x in reversed(self.items())]
        return GoGWord.build(self.basis, self.loop_names, items)

    def __str__(self) -> str:
        return format_gog_word(self)


def parse_gog_word(text: str, c: CleanPresentation) -> GoGWord:
    """
    Parse `x1 x2^-1 t1 ...`; names resolve against the vertex basis, then the loops.
    """
    items: List[Union[Word, int]] = []
    loops = {name: i for i, name in enumerate(c.loop_names, start=1)}
    for name, exponent in parse_tokens(text):
        if name in c.basis.names:
            index = c.basis.index(name)
            items.append(Word(c.basis, (index if exponent > 0 else -index,) * abs(exponent)))
        elif name in loops:
            items.extend([loops[name] if exponent > 0 else -loops[name]] * abs(exponent))
        else:
            raise InvalidInput(f"unknown generator {name!r}")
    return c.word(items)


def format_gog_word(w: GoGWord) -> str:
    tokens = []
    for item in w.items():
        if isinstance(item, Word):
            if not item.is_identity():
                tokens.append(format_word(item))
        else:
            name = w.loop_names[abs(item) - 1]
            tokens.append(name if item > 0 else f"{name}^-1")
    return " ".join(tokens) if tokens else "1"


class VertexOps:
    """
    Vertex-group operations Britton reduction needs, over free words.

    Subclasses supply the same interface for other vertex groups (finite
    quotients); elements only need to support the operations below.
    """

    def __init__(self, c: CleanPresentation):
        self.c = c

    def mul(self, a, b):
        return a * b

    def in_domain(self, i: int, u) -> bool:
        return factor_membership(u, self.c.loops[i - 1].domain)

    def in_codomain(self, i: int, u) -> bool:
        return factor_membership(u, self.c.loops[i - 1].codomain)

    def apply(self, i: int, u):
        return self.c.loops[i - 1].phi(u)

    def apply_inverse(self, i: int, u):
        return self.c.loops[i - 1].phi.inverse_on(u)


def reduce_pinches(syllables: Sequence[Any], letters: Sequence[int], ops) -> Tuple[List[Any], List[int]]:
    """
    Leftmost-innermost removal of pinches t u t^-1 (u in N) and t^-1 v t (v in M).
    """
    out_syllables = [syllables[0]]
    out_letters: List[int] = []
    for letter, syllable in zip(letters, syllables[1:]):
        out_letters.append(letter)
        out_syllables.append(syllable)
        if len(out_letters) < 2:
            continue
        a, b = out_letters[-2], out_letters[-1]
        if a != -b:
            continue
        u = out_syllables[-2]
        i = abs(a)
        if a > 0 and ops.in_domain(i, u):
            image = ops.apply(i, u)
        elif a < 0 and ops.in_codomain(i, u):
            image = ops.apply_inverse(i, u)
        else:
            continue
        merged = ops.mul(ops.mul(out_syllables[-3], image), out_syllables[-1])
        del out_letters[-2:]
        del out_syllables[-3:]
        out_syllables.append(merged)
    return out_syllables, out_letters


def britton_reduce(w: GoGWord, c: CleanPresentation) -> GoGWord:
    """
    Britton normal form: no pinch remains, and the result is the identity iff w = 1.
    """
    if w.basis != c.basis or w.loop_names != c.loop_names:
        raise BasisMismatch("word does not belong to this presentation")
    syllables, letters = reduce_pinches(w.syllables, w.letters, VertexOps(c))
    return GoGWord(c.basis, c.loop_names, tuple(syllables), tuple(letters))


def has_pinch(w: GoGWord, c: CleanPresentation) -> bool:
    ops = VertexOps(c)
    for k in range(len(w.letters) - 1):
        a, b = w.letters[k], w.letters[k + 1]
        u = w.syllables[k + 1]
        if a == -b and ((a > 0 and ops.in_domain(a, u)) or (a < 0 and ops.in_codomain(-a, u))):
            return True
    return False


def is_trivial(w: GoGWord, c: CleanPresentation) -> bool:
    return britton_reduce(w, c).is_identity()


def project_to_graph_group(w: GoGWord) -> Word:
    """
    Delete vertex syllables and freely reduce the loop letters.
    """
    basis = Basis(len(w.loop_names), w.loop_names) if w.loop_names else Basis(1, ("t",))
    return Word(basis, w.letters)


@dataclass(frozen=True)
class Presentation:
    generators: Tuple[str, ...]
    relators: Tuple[GoGWord, ...]


def pi1_presentation(c: CleanPresentation) -> Presentation:
    """
    Generators: vertex basis and loop letters. One relator t g t^-1 phi(g)^-1
    per loop and domain basis element g.
    """
    relators = []
    for i, loop in enumerate(c.loops, start=1):
        for g in loop.domain.generators():
            relators.append(c.word([i, g, -i, ~loop.phi(g)]))
    return Presentation(c.basis.names + c.loop_names, tuple(relators))


def graph_relators(g: GraphOfGroups) -> List[List[Tuple[str, str, Any]]]:
    """
    Relators e * g * e^-1 * edge_map[e](g)^-1 of the original graph of groups,
    as token lists of ("vertex", v, Word) and ("edge", e, sign).
    """
    out = []
    for e in g.graph.representatives():
        edge_map = g.map_for(e)
        for gen, image in zip(g.edge_factor[e].generators(), edge_map.images):
            out.append([
                ("edge", e, 1),
                ("vertex", g.graph.tau(e), gen),
                ("edge", e, -1),
                ("vertex", g.graph.origin(e), ~image),
            ])
    return out


def rewrite_tokens(tokens: Sequence[Tuple[str, str, Any]], c: CleanPresentation) -> GoGWord:
    """
    Rewrite an original-graph word through the collapse dictionary; tree edges vanish.
    """
    items: List[Union[Word, int]] = []
    for kind, name, value in tokens:
        if kind == "vertex":
            images = c.dictionary[name]
            m = FreeMap(value.basis, c.basis, images)
            items.append(m(value))
        elif name in c.edge_letters:
            index, sign = c.edge_letters[name]
            items.append(index * sign * value)
    return c.word(items)


@dataclass
class PolyFreeReport:
    """
    Chain 1 <| <<F>> <| pi_1 with free quotients.

    Attributes:
        quotient_rank (int): Rank of pi_1 / <<F>>, the loop count
        relators_project_trivially (bool): Every relator dies in the loop free group
        chain (List[str]): Terms of the chain, smallest first
        kernel_factors (List[Dict[str, Any]]): Edge factors of the tree of free
            groups the normal closure of F splits as
    """
    quotient_rank: int
    relators_project_trivially: bool
    chain: List[str]
    kernel_factors: List[Dict[str, Any]]

    @property
    def chain_length(self) -> int:
        return len(self.chain) - 1


def _ambient_factor(factor: BasisAlignedFactor, basis: Basis) -> bool:
    return isinstance(factor, BasisAlignedFactor) and factor.ambient == basis


def polyfree_chain(c: CleanPresentation) -> PolyFreeReport:
    """
    The normal poly-free chain of a clean presentation.

    The normal closure of F acts on the Bass-Serre tree of the loops with
    vertex groups conjugates of F and edge groups conjugates of the loop
    domains, each a basis-aligned free factor; the quotient is free on the loops.
    """
    pres = pi1_presentation(c)
    trivial = all(project_to_graph_group(r).is_identity() for r in pres.relators)
    kernel_factors = [
        {"loop": loop.name, "domain_rank": loop.domain.rank, "codomain_rank": loop.codomain.rank,
         "free_factors": _ambient_factor(loop.domain, c.basis) and _ambient_factor(loop.codomain, c.basis)}
        for loop in c.loops
    ]
    chain = ["1", "<<F>>", "pi1"] if c.loops else ["1", "pi1"]
    return PolyFreeReport(len(c.loops), trivial, chain, kernel_factors)
