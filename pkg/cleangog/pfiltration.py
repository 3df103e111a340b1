"""
Exact lower p-central filtration of finite-rank free groups.

The free group F is modelled through its truncated Magnus embedding
x_i -> 1 + X_i into the free associative algebra over F_p, cut off above a
degree d. The image of F is a finite p-group inside the unipotent group
1 + (degree >= 1 terms); with d = p^(n-1) - 1 the kernel of the truncation
lies inside gamma^p_n(F), so membership in the first n filtration layers is
decided exactly in the finite image.

Subgroups of the image are never enumerated element by element. They are held
as echelon sequences (a polycyclic generating sequence adapted to the degree
filtration): elements sorted by the degree of their leading homogeneous part,
with pivot coefficients normalized to 1. Sifting through such a sequence gives
membership tests, subgroup orders p^len, and, for a normal subgroup in reduced
echelon form, the lexicographically smallest element of every coset.

Main entry points:
- magnus_embed / MagnusContext / TruncatedSeries
- enumerate_image_group, verbal_lambda_step, build_lambda_oracle
- lambda_factor_member, quotient_group, layer_dims
- theta1, sigma_n, perm_order, layer_action
"""

# Import logging for oracle construction progress.
import logging
# Import threading to guard the oracle cache.
import threading
# Import deque for closure queues and BFS, OrderedDict for the bounded caches.
from collections import OrderedDict, deque
# Import typing for type hints.
from typing import Any, Dict, Hashable, List, Optional, Sequence, Tuple

# Import numpy for coefficient vectors over F_p.
import numpy as np
# Import sympy permutations for cycle-type orders and divisors for necklace counts.
from sympy import divisors, factorint
from sympy.combinatorics import Permutation

# Import cap monitors and toolkit types.
from .caps import CapMonitor, ElementCapMonitor, NoCapMonitor
from .exceptions import BasisMismatch, CapExceeded, InvalidInput
from .freegrp import Automorphism, Basis, BasisAlignedFactor, Word, commutator

logger = logging.getLogger(__name__)

SUPPORTED_PRIMES = (2, 3, 5)


def truncation_degree(p: int, n: int) -> int:
    """
    Smallest degree at which layer n is exact: max(1, p^(n-1) - 1).
    """
    return max(1, p ** (n - 1) - 1)


def _mobius(e: int) -> int:
    exponents = factorint(e).values()
    if any(k > 1 for k in exponents):
        return 0
    return -1 if len(exponents) % 2 else 1


def necklace_count(rank: int, k: int) -> int:
    """
    Dimension of the degree-k part of the free Lie algebra on rank generators.
    """
    return sum(_mobius(e) * rank ** (k // e) for e in divisors(k)) // k


def expected_layer_dims(rank: int, n: int) -> List[int]:
    """
    dim L_j for j = 1..n, where L_j = gamma^p_j / gamma^p_{j+1} of F(rank).

    The graded object is free over F_p[pi], so dim L_j is the sum of the
    necklace counts of degrees 1..j, for every prime.
    """
    dims, total = [], 0
    for j in range(1, n + 1):
        total += necklace_count(rank, j)
        dims.append(total)
    return dims


def quotient_log_order(rank: int, n: int) -> int:
    """
    log_p |F(rank) / gamma^p_n(F(rank))|.
    """
    return sum(expected_layer_dims(rank, n - 1))


def image_log_order(p: int, rank: int, degree: int) -> int:
    """
    log_p of the order of the image of F(rank) in the algebra truncated above degree.

    The successive quotients of the mod-p dimension subgroups have dimensions
    sum of necklace_count(rank, i) over i * p^j = k.
    """
    total = 0
    for i in range(1, degree + 1):
        power = i
        while power <= degree:
            total += necklace_count(rank, i)
            power *= p
    return total


def series_size(rank: int, degree: int) -> int:
    """
    Number of monomials of degree <= degree in rank letters.
    """
    return sum(rank ** k for k in range(degree + 1))


class MagnusContext:
    """
    Arithmetic of the truncated free associative algebra F_p<X_1..X_rank> / (degree > d).

    Monomials are indexed degree by degree; inside a degree they are ordered
    lexicographically with the first letter most significant. The product table
    is stored as three index arrays (left, right, product) so that a product of
    two series is a single bincount.
    """

    def __init__(self, p: int, rank: int, degree: int, monitor: Optional[CapMonitor] = None):
        if p not in SUPPORTED_PRIMES:
            raise ValueError(f"prime {p} not in supported set {SUPPORTED_PRIMES}")
        if rank < 1 or degree < 1:
            raise InvalidInput(f"rank and degree must be positive, got rank {rank} and degree {degree}")
        self.p = p
        self.rank = rank
        self.degree = degree
        self.offsets = [0]
        for k in range(degree + 1):
            self.offsets.append(self.offsets[-1] + rank ** k)
        self.size = self.offsets[-1]
        (monitor or ElementCapMonitor()).admit("monomial", self.size)

        lefts, rights, products = [], [], []
        for i in range(degree + 1):
            for j in range(degree + 1 - i):
                a = np.arange(rank ** i)
                b = np.arange(rank ** j)
                left = np.repeat(a, rank ** j)
                right = np.tile(b, rank ** i)
                lefts.append(self.offsets[i] + left)
                rights.append(self.offsets[j] + right)
                products.append(self.offsets[i + j] + left * rank ** j + right)
        self._left = np.concatenate(lefts)
        self._right = np.concatenate(rights)
        self._product = np.concatenate(products)

    def _multiply(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        weights = a[self._left] * b[self._right]
        out = np.bincount(self._product, weights=weights, minlength=self.size)
        return np.rint(out).astype(np.int64) % self.p

    def one(self) -> "TruncatedSeries":
        coeffs = np.zeros(self.size, dtype=np.int64)
        coeffs[0] = 1
        return TruncatedSeries(self, coeffs)

    def monomial_index(self, letters: Sequence[int]) -> int:
        """
        Index of the monomial X_{l1} X_{l2} ... (letters are 1-based).
        """
        local = 0
        for letter in letters:
            local = local * self.rank + (letter - 1)
        return self.offsets[len(letters)] + local

    def degree_of(self, index: int) -> int:
        return int(np.searchsorted(self.offsets, index, side="right")) - 1

    def generator(self, i: int) -> "TruncatedSeries":
        coeffs = np.zeros(self.size, dtype=np.int64)
        coeffs[0] = 1
        coeffs[self.monomial_index([i])] = 1
        return TruncatedSeries(self, coeffs)

    def generator_inverse(self, i: int) -> "TruncatedSeries":
        # 1 - X + X^2 - ... up to the truncation degree
        coeffs = np.zeros(self.size, dtype=np.int64)
        for k in range(self.degree + 1):
            coeffs[self.monomial_index([i] * k)] = (-1) ** k
        return TruncatedSeries(self, coeffs)

    def embed(self, w: Word) -> "TruncatedSeries":
        if w.basis.rank != self.rank:
            raise BasisMismatch(f"word of rank {w.basis.rank} in a rank {self.rank} context")
        result = self.one()
        gens = {}
        for letter in w.letters:
            if letter not in gens:
                gens[letter] = self.generator(letter) if letter > 0 else self.generator_inverse(-letter)
            result = result * gens[letter]
        return result


class TruncatedSeries:
    """
    Element of the truncated algebra: one F_p coefficient per monomial.
    """

    __slots__ = ("ctx", "coeffs", "_key", "_inverse")

    def __init__(self, ctx: MagnusContext, coeffs: np.ndarray):
        self.ctx = ctx
        self.coeffs = np.asarray(coeffs, dtype=np.int64) % ctx.p
        self.coeffs.setflags(write=False)
        self._key = None
        self._inverse = None

    @property
    def key(self) -> bytes:
        if self._key is None:
            self._key = self.coeffs.astype(np.uint8).tobytes()
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, TruncatedSeries) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __lt__(self, other: "TruncatedSeries") -> bool:
        return self.key < other.key

    def __mul__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return TruncatedSeries(self.ctx, self.ctx._multiply(self.coeffs, other.coeffs))

    def inverse(self) -> "TruncatedSeries":
        """
        Inverse of a unipotent series, cached on the series.

        (1 + n)^-1 = (1 - n)(1 + n^2)(1 + n^4)..., stopping once the power of n
        is truncated away.
        """
        if self._inverse is None:
            ctx = self.ctx
            nil = self.coeffs.copy()
            nil[0] = 0
            result = (-nil) % ctx.p
            result[0] = 1
            power = nil
            while True:
                power = ctx._multiply(power, power)
                if not power.any():
                    break
                factor = power.copy()
                factor[0] = 1
                result = ctx._multiply(result, factor)
            inv = TruncatedSeries(ctx, result)
            inv._inverse = self
            self._inverse = inv
        return self._inverse

    def __pow__(self, e: int) -> "TruncatedSeries":
        base = self if e >= 0 else self.inverse()
        e = abs(e)
        result = self.ctx.one()
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def is_identity(self) -> bool:
        return self.coeffs[0] == 1 and not self.coeffs[1:].any()

    def leading(self) -> Optional[Tuple[int, int]]:
        """
        (degree, pivot index) of the first nonzero non-constant coefficient, None for 1.
        """
        nonzero = np.flatnonzero(self.coeffs[1:])
        if nonzero.size == 0:
            return None
        pivot = int(nonzero[0]) + 1
        return self.ctx.degree_of(pivot), pivot

    def component(self, k: int) -> np.ndarray:
        return self.coeffs[self.ctx.offsets[k]:self.ctx.offsets[k + 1]]

    def as_dict(self) -> Dict[Tuple[int, ...], int]:
        """
        Nonzero coefficients keyed by monomial letter tuples.
        """
        out = {}
        for index in np.flatnonzero(self.coeffs):
            k = self.ctx.degree_of(int(index))
            local = int(index) - self.ctx.offsets[k]
            letters = []
            for _ in range(k):
                letters.append(local % self.ctx.rank + 1)
                local //= self.ctx.rank
            out[tuple(reversed(letters))] = int(self.coeffs[index])
        return out


def series_commutator(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    return a * b * a.inverse() * b.inverse()


def magnus_embed(w: Word, ctx: MagnusContext) -> TruncatedSeries:
    """
    Image of w under x_i -> 1 + X_i, truncated above ctx.degree.
    """
    return ctx.embed(w)


class _Entry:
    __slots__ = ("series", "degree", "pivot", "neg_powers")

    def __init__(self, series: TruncatedSeries, degree: int, pivot: int):
        self.series = series
        self.degree = degree
        self.pivot = pivot
        inv = series.inverse()
        powers = [series.ctx.one(), inv]
        for _ in range(2, series.ctx.p):
            powers.append(powers[-1] * inv)
        self.neg_powers = powers


class PcSequence:
    """
    Echelon generating sequence of a subgroup of the unipotent group.

    Entries are grouped by leading degree; within a degree each entry's pivot
    (first nonzero coefficient of its leading part) is 1 and is zero in every
    entry inserted after it. After reduce() the pivots are also zero in every
    other entry of the same degree.

    Every entry holds ctx.size coefficients; the total held by the sequence is
    admitted against the monomial cap as entries are added.
    """

    def __init__(self, ctx: MagnusContext, monitor: Optional[CapMonitor] = None):
        self.ctx = ctx
        self.monitor = monitor or ElementCapMonitor()
        self._by_degree: Dict[int, List[_Entry]] = {}

    def __len__(self) -> int:
        return sum(len(v) for v in self._by_degree.values())

    def entries(self) -> List[_Entry]:
        return [e for k in sorted(self._by_degree) for e in self._by_degree[k]]

    def elements(self) -> List[TruncatedSeries]:
        return [e.series for e in self.entries()]

    def sift(self, u: TruncatedSeries) -> TruncatedSeries:
        r = u
        for k in sorted(self._by_degree):
            for entry in self._by_degree[k]:
                a = int(r.coeffs[entry.pivot])
                if a:
                    r = r * entry.neg_powers[a]
        return r

    def _normalize(self, r: TruncatedSeries) -> _Entry:
        degree, pivot = r.leading()
        a = int(r.coeffs[pivot])
        if a != 1:
            r = r ** pow(a, -1, self.ctx.p)
        return _Entry(r, degree, pivot)

    def close(self, seeds: Sequence[TruncatedSeries],
              conjugators: Sequence[Tuple[TruncatedSeries, TruncatedSeries]] = ()) -> None:
        """
        Extend the sequence until it generates <current, seeds>, closed under
        conjugation by the given (x, x^-1) pairs.

        Raises:
            CapExceeded: if the coefficients held by the sequence exceed the monomial cap
        """
        queue = deque(seeds)
        while queue:
            r = self.sift(queue.popleft())
            if r.is_identity():
                continue
            self.monitor.admit("monomial", (len(self) + 1) * self.ctx.size)
            entry = self._normalize(r)
            existing = self.entries()
            self._by_degree.setdefault(entry.degree, []).append(entry)
            h = entry.series
            queue.append(h ** self.ctx.p)
            for other in existing:
                queue.append(series_commutator(h, other.series))
            for x, x_inv in conjugators:
                queue.append(x_inv * h * x)

    def reduce(self) -> None:
        """
        Bring every degree block into reduced echelon form.
        """
        for k, block in self._by_degree.items():
            block.sort(key=lambda e: e.pivot)
            series = [e.series for e in block]
            for i, entry in enumerate(block):
                pivot_inv = None
                for j in range(len(block)):
                    b = int(series[j].coeffs[entry.pivot]) if j != i else 0
                    if b:
                        if pivot_inv is None:
                            pivot_inv = series[i].inverse()
                        series[j] = series[j] * pivot_inv ** b
            self._by_degree[k] = [
                e if e.series is s else _Entry(s, k, e.pivot) for e, s in zip(block, series)
            ]


class EnumeratedSubgroup:
    """
    Subgroup of the finite image group, held as generators plus an echelon sequence.

    Attributes:
        ctx (MagnusContext): Arithmetic context
        generators (List[TruncatedSeries]): Generators the subgroup was built from
        pcgs (PcSequence): Reduced echelon sequence; the order is p^len(pcgs)
    """

    def __init__(self, ctx: MagnusContext, generators: Sequence[TruncatedSeries], pcgs: PcSequence):
        self.ctx = ctx
        self.generators = list(generators)
        self.pcgs = pcgs

    @property
    def log_order(self) -> int:
        return len(self.pcgs)

    @property
    def order(self) -> int:
        return self.ctx.p ** len(self.pcgs)

    def contains(self, u: TruncatedSeries) -> bool:
        return self.pcgs.sift(u).is_identity()

    def canonical(self, u: TruncatedSeries) -> TruncatedSeries:
        """
        Lexicographically smallest element of the coset u * self.
        """
        return self.pcgs.sift(u)

    def is_trivial(self) -> bool:
        return len(self.pcgs) == 0

    def elements(self, monitor: Optional[CapMonitor] = None) -> set:
        """
        Materialize all elements by BFS over the echelon sequence.

        Raises:
            CapExceeded: if the order is above the element cap
        """
        (monitor or ElementCapMonitor()).admit("element", self.order)
        gens = self.pcgs.elements()
        one = self.ctx.one()
        seen = {one}
        queue = deque([one])
        while queue:
            u = queue.popleft()
            for g in gens:
                v = u * g
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen


def subgroup_generated(ctx: MagnusContext, seeds: Sequence[TruncatedSeries],
                       conjugators: Sequence[TruncatedSeries] = (),
                       monitor: Optional[CapMonitor] = None) -> EnumeratedSubgroup:
    """
    Subgroup generated by seeds, or their normal closure when conjugators are given.
    """
    pcgs = PcSequence(ctx, monitor)
    pairs = [(x, x.inverse()) for x in conjugators]
    pcgs.close(seeds, pairs)
    pcgs.reduce()
    return EnumeratedSubgroup(ctx, seeds, pcgs)


def enumerate_image_group(ctx: MagnusContext, monitor: Optional[CapMonitor] = None) -> EnumeratedSubgroup:
    """
    The finite p-group image of F in the truncated algebra.

    Raises:
        CapExceeded: if its echelon sequence holds more coefficients than the monomial cap
    """
    gens = [ctx.generator(i) for i in range(1, ctx.rank + 1)]
    group = subgroup_generated(ctx, gens, monitor=monitor)
    logger.debug(f"image group p={ctx.p} rank={ctx.rank} d={ctx.degree}: order p^{group.log_order}")
    return group


def verbal_lambda_step(G: EnumeratedSubgroup, prev: EnumeratedSubgroup,
                       monitor: Optional[CapMonitor] = None) -> EnumeratedSubgroup:
    """
    Normal closure in G of y^p and [x, y] for x in gens(G), y generating prev.
    """
    ys = prev.pcgs.elements()
    seeds = [y ** G.ctx.p for y in ys]
    seeds.extend(series_commutator(x, y) for x in G.generators for y in ys)
    return subgroup_generated(G.ctx, seeds, conjugators=G.generators, monitor=monitor)


class LambdaOracle:
    """
    Layers gamma^p_1 .. gamma^p_n of the image group of F.

    Attributes:
        context (MagnusContext): Arithmetic context (exact for levels <= depth)
        depth (int): n
        layers (List[EnumeratedSubgroup]): layers[j-1] is the image of gamma^p_j(F)
    """

    def __init__(self, context: MagnusContext, depth: int, layers: List[EnumeratedSubgroup]):
        self.context = context
        self.depth = depth
        self.layers = layers
        self.basis = Basis.standard(context.rank)
        self._factor_cache: Dict[Tuple[Tuple[int, ...], int], EnumeratedSubgroup] = {}
        self._lock = threading.Lock()

    @property
    def key(self) -> Tuple[int, int, int, int]:
        """
        (p, rank, depth, truncation degree), the parameters that determine the layers.
        """
        return self.context.p, self.context.rank, self.depth, self.context.degree

    @property
    def p(self) -> int:
        return self.context.p

    @property
    def rank(self) -> int:
        return self.context.rank

    def layer(self, j: int) -> EnumeratedSubgroup:
        if j < 1 or j > self.depth:
            raise ValueError(f"level {j} outside 1..{self.depth}")
        return self.layers[j - 1]

    def member(self, w: Word, j: int) -> bool:
        """
        Decide w in gamma^p_j(F), exact for j <= depth.
        """
        return self.layer(j).contains(self.context.embed(w))

    def factor_subgroup(self, f: BasisAlignedFactor, n: int) -> EnumeratedSubgroup:
        """
        Image of N * gamma^p_n(F) for the factor N spanned by f.
        """
        if f.ambient.rank != self.rank:
            raise BasisMismatch("factor rank does not match the oracle")
        key = (f.selected, n)
        with self._lock:
            cached = self._factor_cache.get(key)
        if cached is not None:
            return cached
        layer = self.layer(n)
        seeds = layer.pcgs.elements() + [self.context.generator(i) for i in f.selected]
        # a subgroup of layer 1, whose sequence was admitted when the oracle was built
        group = subgroup_generated(self.context, seeds, monitor=NoCapMonitor())
        with self._lock:
            self._factor_cache[key] = group
        return group


class BoundedCache:
    """
    Thread-safe mapping that keeps the maxsize most recently used entries.
    """

    def __init__(self, maxsize: int):
        if maxsize < 1:
            raise ValueError("maxsize must be positive")
        self.maxsize = maxsize
        self._data: "OrderedDict[Hashable, Any]" = OrderedDict()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        with self._lock:
            return len(self._data)

    def get(self, key: Hashable) -> Optional[Any]:
        with self._lock:
            value = self._data.get(key)
            if value is not None:
                self._data.move_to_end(key)
            return value

    def put(self, key: Hashable, value: Any) -> None:
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)

    def clear(self) -> None:
        with self._lock:
            self._data.clear()


ORACLE_CACHE_SIZE = 16
QUOTIENT_CACHE_SIZE = 32

_ORACLE_CACHE = BoundedCache(ORACLE_CACHE_SIZE)


def build_lambda_oracle(p: int, rank: int, n: int, monitor: Optional[CapMonitor] = None,
                        degree: Optional[int] = None) -> LambdaOracle:
    """
    Build layers 1..n of the lower p-central filtration of F(rank).

    Args:
        p: prime in SUPPORTED_PRIMES
        rank: rank of the free group
        n: depth
        monitor: cap monitor (monomial and depth caps)
        degree: truncation degree override; defaults to truncation_degree(p, n)

    The image group is known in advance to need image_log_order entries of
    series_size coefficients each; that total is admitted against the monomial
    cap before any closure work, for cached oracles as well.

    Raises:
        CapExceeded: if the coefficient count or the depth is above its cap
        InvalidInput: if the rank or the depth is not positive
    """
    if n < 1 or rank < 1:
        raise InvalidInput(f"rank and depth must be positive, got rank {rank} and depth {n}")
    monitor = monitor or ElementCapMonitor()
    monitor.admit("depth", n)
    d = degree if degree is not None else truncation_degree(p, n)
    monitor.admit("monomial", series_size(rank, d) * image_log_order(p, rank, d))
    key = (p, rank, n, d)
    cached = _ORACLE_CACHE.get(key)
    if cached is not None:
        return cached
    ctx = MagnusContext(p, rank, d, monitor)
    G = enumerate_image_group(ctx, monitor)
    layers = [G]
    for _ in range(2, n + 1):
        layers.append(verbal_lambda_step(G, layers[-1], monitor))
    oracle = LambdaOracle(ctx, n, layers)
    logger.debug(f"lambda oracle p={p} rank={rank} n={n} d={d}: "
                 f"log orders {[layer.log_order for layer in layers]}")
    _ORACLE_CACHE.put(key, oracle)
    return oracle


def lambda_factor_member(w: Word, f: BasisAlignedFactor, n: int, oracle: LambdaOracle) -> bool:
    """
    True iff w lies in N * gamma^p_n(F), N the factor spanned by f.
    """
    if w.basis != f.ambient:
        raise BasisMismatch("word and factor live over different bases")
    return oracle.factor_subgroup(f, n).contains(oracle.context.embed(w))


def layer_dims(oracle: LambdaOracle) -> List[int]:
    """
    dim over F_p of L_j = layer_j / layer_{j+1} for j = 1 .. depth-1.
    """
    logs = [layer.log_order for layer in oracle.layers]
    return [logs[j] - logs[j + 1] for j in range(len(logs) - 1)]


class QuotientGroup:
    """
    F / gamma^p_n(F) with canonical coset representatives.

    Representatives are the lexicographically smallest series of each coset,
    indexed in increasing order (index 0 is the identity). Each representative
    keeps a word reaching it from the identity; products are computed by
    walking that word through the right-multiplication tables.
    """

    def __init__(self, oracle: LambdaOracle, n: int, monitor: Optional[CapMonitor] = None):
        self.oracle = oracle
        self.n = n
        self.p = oracle.p
        self.rank = oracle.rank
        self.basis = oracle.basis
        G = oracle.layer(1)
        self.kernel = oracle.layer(n)
        self.order = self.p ** (G.log_order - self.kernel.log_order)
        (monitor or ElementCapMonitor()).admit("element", self.order)

        ctx = oracle.context
        letters = list(range(1, self.rank + 1)) + [-i for i in range(1, self.rank + 1)]
        steps = {l: (ctx.generator(l) if l > 0 else ctx.generator_inverse(-l)) for l in letters}
        identity = self.kernel.canonical(ctx.one())
        found: Dict[TruncatedSeries, Tuple[int, ...]] = {identity: ()}
        edges: Dict[Tuple[TruncatedSeries, int], TruncatedSeries] = {}
        queue = deque([identity])
        while queue:
            rep = queue.popleft()
            for l in letters:
                nxt = self.kernel.canonical(rep * steps[l])
                edges[(rep, l)] = nxt
                if nxt not in found:
                    found[nxt] = found[rep] + (l,)
                    queue.append(nxt)
        if len(found) != self.order:
            raise RuntimeError(f"coset enumeration found {len(found)} of {self.order} cosets")

        self.representatives: List[TruncatedSeries] = sorted(found)
        self._index = {rep: i for i, rep in enumerate(self.representatives)}
        self._words = [Word(self.basis, found[rep]) for rep in self.representatives]
        self._right = {
            l: np.array([self._index[edges[(rep, l)]] for rep in self.representatives], dtype=np.int64)
            for l in letters
        }

    def __len__(self) -> int:
        return self.order

    @property
    def identity(self) -> int:
        return 0

    def element_word(self, i: int) -> Word:
        return self._words[i]

    def index_of_word(self, w: Word, start: int = 0) -> int:
        if w.basis.rank != self.rank:
            raise BasisMismatch("word rank does not match the quotient")
        i = start
        for letter in w.letters:
            i = int(self._right[letter][i])
        return i

    def index_of_series(self, u: TruncatedSeries) -> int:
        return self._index[self.kernel.canonical(u)]

    def right_table(self, letter: int) -> np.ndarray:
        return self._right[letter]

    def mul(self, i: int, j: int) -> int:
        return self.index_of_word(self._words[j], start=i)

    def right_multiplication(self, j: int) -> np.ndarray:
        """
        Array whose entry i is the index of rep_i * rep_j.
        """
        out = np.arange(self.order, dtype=np.int64)
        for letter in self._words[j].letters:
            out = self._right[letter][out]
        return out

    def inverse(self, i: int) -> int:
        return self.index_of_word(~self._words[i])

    def is_p_power(self) -> bool:
        order = self.order
        while order % self.p == 0:
            order //= self.p
        return order == 1


_QUOTIENT_CACHE = BoundedCache(QUOTIENT_CACHE_SIZE)


def quotient_group(oracle: LambdaOracle, n: int, monitor: Optional[CapMonitor] = None) -> QuotientGroup:
    """
    F / gamma^p_n(F) with canonical representatives.

    Raises:
        CapExceeded: if the quotient order is above the element cap
    """
    key = oracle.key + (n,)
    cached = _QUOTIENT_CACHE.get(key)
    if cached is not None:
        (monitor or ElementCapMonitor()).admit("element", cached.order)
        return cached
    q = QuotientGroup(oracle, n, monitor)
    _QUOTIENT_CACHE.put(key, q)
    return q


def theta1(a: Automorphism, p: int) -> np.ndarray:
    """
    Action on L_1 = H_1(F, F_p): column i is the exponent-sum vector of a(x_i) mod p.
    """
    columns = [img.exponent_sums() for img in a.forward.images]
    return (np.array(columns, dtype=np.int64).T % p).astype(np.int64)


class InducedAut:
    """
    Permutation of coset representatives induced by an automorphism.

    Attributes:
        perm (Tuple[int, ...]): perm[i] is the index of a(rep_i)
        source (Automorphism): the automorphism
        quotient (QuotientGroup): where it acts
        well_defined (bool): homomorphism check on every Cayley edge passed
    """

    def __init__(self, perm: Tuple[int, ...], source: Automorphism, quotient: QuotientGroup,
                 well_defined: bool):
        self.perm = perm
        self.source = source
        self.quotient = quotient
        self.well_defined = well_defined

    def __call__(self, i: int) -> int:
        return self.perm[i]

    def is_identity(self) -> bool:
        return all(i == v for i, v in enumerate(self.perm))


def sigma_n(a: Automorphism, q: QuotientGroup) -> InducedAut:
    """
    Permutation of F/gamma^p_n(F) induced by a, with sigma(a o b) = sigma(a) o sigma(b).
    """
    if a.basis.rank != q.rank:
        raise BasisMismatch("automorphism rank does not match the quotient")
    local = lambda w: Word(q.basis, w.letters)
    perm = tuple(q.index_of_word(local(a(Word(a.basis, q.element_word(i).letters)))) for i in range(q.order))
    images = {}
    for l in range(1, q.rank + 1):
        images[l] = q.index_of_word(local(a(a.basis.generator(l))))
    well_defined = len(set(perm)) == q.order and perm[0] == 0
    if well_defined:
        # checked on every Cayley edge: perm(rep_i * x_l) = perm(rep_i) * a(x_l)
        perm_array = np.array(perm, dtype=np.int64)
        for l, image in images.items():
            lhs = perm_array[q.right_table(l)]
            rhs = q.right_multiplication(image)[perm_array]
            if not np.array_equal(lhs, rhs):
                well_defined = False
                break
    return InducedAut(perm, a, q, well_defined)


def perm_order(s) -> int:
    """
    Multiplicative order of a permutation (InducedAut or sequence).
    """
    perm = s.perm if isinstance(s, InducedAut) else tuple(s)
    if not perm:
        return 1
    return int(Permutation([int(i) for i in perm]).order())


def layer_word_generators(basis: Basis, j: int, p: int) -> List[Word]:
    """
    Words whose images span L_j: x_i at level 1, then y^p and [x_i, y].
    """
    words = list(basis.generators())
    for _ in range(1, j):
        words = [y ** p for y in words] + [commutator(x, y) for x in basis.generators() for y in words]
    return words


def layer_action(a: Automorphism, oracle: LambdaOracle, j: int) -> np.ndarray:
    """
    Matrix over F_p of the map induced by a on L_j = layer_j / layer_{j+1}.

    Needs oracle.depth >= j + 1. The basis of L_j is chosen greedily among the
    images of layer_word_generators, in order.
    """
    if j + 1 > oracle.depth:
        raise CapExceeded("depth", oracle.depth, j + 1, f"layer action on L_{j} needs depth {j + 1}")
    ctx = oracle.context
    p = ctx.p
    upper = oracle.layer(j + 1)
    size = p ** (oracle.layer(j).log_order - upper.log_order)
    basis_words: List[Word] = []
    coords: Dict[TruncatedSeries, Tuple[int, ...]] = {upper.canonical(ctx.one()): ()}
    for w in layer_word_generators(oracle.basis, j, p):
        if len(coords) == size:
            break
        image = upper.canonical(ctx.embed(w))
        if image in coords:
            continue
        basis_words.append(w)
        grown = {}
        for rep, vec in coords.items():
            power = ctx.one()
            for c in range(p):
                grown[upper.canonical(rep * power)] = vec + (c,)
                power = power * image
        coords = grown
    if len(coords) != size:
        raise RuntimeError(f"layer words span {len(coords)} of {size} elements of L_{j}")
    dim = len(basis_words)
    matrix = np.zeros((dim, dim), dtype=np.int64)
    for col, w in enumerate(basis_words):
        image = upper.canonical(ctx.embed(Word(oracle.basis, a(Word(a.basis, w.letters)).letters)))
        matrix[:, col] = coords[image]
    return matrix
