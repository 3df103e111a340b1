"""
Property suites for the filtration, the induced automorphisms and the pipeline.

Each suite is registered under a name in SUITES and takes LabParams. A suite
never raises for a failed property: it counts checks and records
counterexamples in a SuiteReport. Cap hits inside the soundness and mutation
suites are counted as limits.

Why is this important?
-----------------------------------
The statements the separation pipeline relies on (commutator containments of
the layers, p-power orders of sigma_n, agreement of the Britton oracle with a
free rewriting, soundness of every emitted certificate) are checked here on
seeded samples, reproducibly.
"""

# Import logging for suite progress.
import logging
# Import random for seeded sampling.
import random
# Import time for suite timings.
import time
# Import dataclasses for parameters and reports.
from dataclasses import dataclass, field
# Import partial to bind certificate rechecks.
from functools import partial
# Import typing for type hints.
from typing import Any, Callable, Dict, List, Optional

# Import numpy for permutation composition.
import numpy as np
# Import sympy permutations for the independent certificate recheck.
from sympy.combinatorics import Permutation, PermutationGroup

# Import toolkit modules.
from .caps import CapMonitor
from .exceptions import CapExceeded, DepthExceeded, IdentityElement
from .fixtures import fixture_names, load_fixture
from .freegrp import Automorphism, Basis, FreeMap, Word, verify_automorphism
from .gog import (
    CleanPresentation,
    GoGWord,
    GraphOfGroups,
    Presentation,
    britton_reduce,
    collapse,
    parse_gog_word,
    pi1_presentation,
)
from .pfiltration import (
    build_lambda_oracle,
    layer_action,
    perm_order,
    quotient_group,
    series_commutator,
    sigma_n,
    truncation_degree,
)
from .registry import Registry
from .schemas import SUPPORTED_PRIMES, CertificateModel, RunConfig
from .separator import (
    Certificate,
    NonPWitness,
    kernel_cover,
    lift_gog,
    rewrite_into_cover,
    schreier_closure,
    separate,
    verify_certificate,
)

logger = logging.getLogger(__name__)

SUITES = Registry("suite")


@dataclass
class LabParams:
    """
    Parameters shared by all suites.

    Attributes:
        p (int): Prime
        rank (int): Free rank where a suite samples in F_rank
        depth (int): Largest filtration depth
        seed (int): Seed of the suite's random.Random
        count (Optional[int]): Sample count; None uses the suite default
        config (RunConfig): Caps for pipeline suites
        fixtures (Optional[List[str]]): Fixtures walked by soundness; None walks all of them
    """
    p: int = 2
    rank: int = 2
    depth: Optional[int] = None
    seed: int = 0
    count: Optional[int] = None
    config: Optional[RunConfig] = None
    fixtures: Optional[List[str]] = None

    def __post_init__(self):
        if self.config is None:
            self.config = RunConfig(p=self.p)
        if self.depth is None:
            self.depth = self.config.depth_cap

    def samples(self, default: int) -> int:
        return self.count if self.count is not None else default

    @property
    def monitor(self) -> CapMonitor:
        return self.config.monitor()


@dataclass
class SuiteReport:
    suite: str
    params: Dict[str, Any]
    checks: int = 0
    limits: int = 0
    counterexamples: List[Dict[str, Any]] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def failures(self) -> int:
        return len(self.counterexamples)

    @property
    def ok(self) -> bool:
        return not self.counterexamples

    def fail(self, **details) -> None:
        self.counterexamples.append(details)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "params": self.params,
            "checks": self.checks,
            "failures": self.failures,
            "limits": self.limits,
            "ok": self.ok,
            "counterexamples": self.counterexamples[:10],
            "elapsed": round(self.elapsed, 3),
        }


def run_suite(name: str, params: LabParams) -> SuiteReport:
    """
    Run a registered suite and time it.

    Raises:
        InvalidInput: if no suite has that name
    """
    entry = SUITES.get(name)
    report = SuiteReport(name, {"p": params.p, "rank": params.rank, "depth": params.depth,
                                "seed": params.seed, "count": params.count,
                                "fixtures": params.fixtures})
    start = time.time()
    entry.execute(params, report)
    report.elapsed = time.time() - start
    logger.debug(f"suite {name}: {report.checks} checks, {report.failures} failures in {report.elapsed:.2f}s")
    return report


def _random_layer_element(layer, ctx, p: int, rng: random.Random):
    out = ctx.one()
    for e in layer.pcgs.elements():
        out = out * (e ** rng.randrange(p))
    return out


@SUITES.register("filtration-laws", "Commutators of layers m, n lie in layer m+n; p-th powers of layer m in m+1")
def filtration_laws(params: LabParams, report: SuiteReport) -> None:
    rng = random.Random(params.seed)
    oracle = build_lambda_oracle(params.p, params.rank, params.depth, params.monitor)
    ctx = oracle.context
    for m in range(1, params.depth):
        for n in range(1, params.depth - m + 1):
            for _ in range(params.samples(1000)):
                h = _random_layer_element(oracle.layer(m), ctx, params.p, rng)
                k = _random_layer_element(oracle.layer(n), ctx, params.p, rng)
                report.checks += 1
                if not oracle.layer(m + n).contains(series_commutator(h, k)):
                    report.fail(kind="commutator", m=m, n=n, h=str(h.as_dict()), k=str(k.as_dict()))
                report.checks += 1
                if not oracle.layer(m + 1).contains(h ** params.p):
                    report.fail(kind="power", m=m, h=str(h.as_dict()))


def ia_generators(basis: Basis, p: int) -> List[Automorphism]:
    """
    Automorphisms acting trivially on H_1(F, F_p): x_i -> x_j x_i x_j^-1 and x_i -> x_i x_j^p.
    """
    gens = []
    xs = basis.generators()
    for i in range(basis.rank):
        for j in range(basis.rank):
            if i == j:
                continue
            for image in (xs[j] * xs[i] * ~xs[j], xs[i] * xs[j] ** p):
                images = list(xs)
                images[i] = image
                gens.append(verify_automorphism(FreeMap(basis, basis, tuple(images))))
    return gens


def random_ia_automorphism(basis: Basis, p: int, rng: random.Random, length: int = 4) -> Automorphism:
    """
    Random product of IA generators and their inverses.
    """
    gens = ia_generators(basis, p)
    out = Automorphism.identity(basis)
    if not gens:
        return out
    for _ in range(rng.randint(1, length)):
        g = rng.choice(gens)
        out = out.compose(g if rng.random() < 0.5 else g.inverted())
    return out


def _is_p_power(order: int, p: int) -> bool:
    while order % p == 0:
        order //= p
    return order == 1


@SUITES.register("sigma-order", "sigma_n of automorphisms with trivial theta_1 has p-power order")
def sigma_order(params: LabParams, report: SuiteReport) -> None:
    rng = random.Random(params.seed)
    basis = Basis.standard(params.rank)
    oracle = build_lambda_oracle(params.p, params.rank, params.depth, params.monitor)
    q = quotient_group(oracle, params.depth, params.monitor)
    for _ in range(params.samples(100)):
        a = random_ia_automorphism(basis, params.p, rng)
        induced = sigma_n(a, q)
        order = perm_order(induced)
        report.checks += 1
        if not induced.well_defined or not _is_p_power(order, params.p):
            report.fail(images=[str(img) for img in a.forward.images], order=order,
                        well_defined=induced.well_defined)


@SUITES.register("theta-propagation", "Automorphisms with trivial theta_1 act trivially on L_2 .. L_(depth-1)")
def theta_propagation(params: LabParams, report: SuiteReport) -> None:
    rng = random.Random(params.seed)
    basis = Basis.standard(params.rank)
    oracle = build_lambda_oracle(params.p, params.rank, params.depth, params.monitor)
    for _ in range(params.samples(100)):
        a = random_ia_automorphism(basis, params.p, rng)
        for j in range(2, params.depth):
            report.checks += 1
            matrix = layer_action(a, oracle, j)
            if not np.array_equal(matrix, np.eye(matrix.shape[0], dtype=np.int64)):
                report.fail(layer=j, images=[str(img) for img in a.forward.images])


def automorphism_pool(basis: Basis, p: int) -> List[Automorphism]:
    """
    Rank-2 automorphisms with theta_1 images of various orders.
    """
    letters = [
        [[2], [1]],
        [[1, 2], [2]],
        [[2], [1, 2]],
        [[-1], [2]],
        [[2, 1, -2], [2]],
        [[1] + [2] * p, [2]],
    ]
    return [verify_automorphism(FreeMap.from_letters(basis, basis, images)) for images in letters]


def _sigma_image_order(gens: List[Automorphism], q, monitor: CapMonitor) -> int:
    perms = [np.array(sigma_n(a, q).perm, dtype=np.int64) for a in gens]
    mul = lambda s, g: tuple(int(x) for x in np.array(s, dtype=np.int64)[g])
    return schreier_closure(tuple(range(q.order)), perms, mul, monitor).size


@SUITES.register("corollary", "theta_1 image a p-group iff the sigma_n images are p-groups")
def corollary(params: LabParams, report: SuiteReport) -> None:
    rng = random.Random(params.seed)
    basis = Basis.standard(2)
    pool = automorphism_pool(basis, params.p)
    monitor = params.monitor
    top = min(params.depth, 3)
    oracle = build_lambda_oracle(params.p, 2, top, monitor)
    for _ in range(params.samples(20)):
        gens = rng.sample(pool, rng.randint(1, 2))
        theta_order = kernel_cover(gens, params.p, monitor).size
        if _is_p_power(theta_order, params.p):
            for n in range(2, top + 1):
                order = _sigma_image_order(gens, quotient_group(oracle, n, monitor), monitor)
                report.checks += 1
                if not _is_p_power(order, params.p):
                    report.fail(direction="p-group lifts", depth=n, theta_order=theta_order, order=order)
        else:
            order = _sigma_image_order(gens, quotient_group(oracle, 2, monitor), monitor)
            report.checks += 1
            if _is_p_power(order, params.p):
                report.fail(direction="non-p detected", depth=2, theta_order=theta_order, order=order)


@SUITES.register("oracle-stability", "Membership verdicts unchanged when the truncation degree is raised by one")
def oracle_stability(params: LabParams, report: SuiteReport) -> None:
    rng = random.Random(params.seed)
    basis = Basis.standard(params.rank)
    n = params.depth
    oracle = build_lambda_oracle(params.p, params.rank, n, params.monitor)
    higher = build_lambda_oracle(params.p, params.rank, n, params.monitor,
                                 degree=truncation_degree(params.p, n) + 1)
    letters = [i for i in range(1, basis.rank + 1)] + [-i for i in range(1, basis.rank + 1)]
    for _ in range(params.samples(500)):
        w = Word(basis, tuple(rng.choice(letters) for _ in range(rng.randint(0, 12))))
        for j in range(1, n + 1):
            report.checks += 1
            if oracle.member(w, j) != higher.member(w, j):
                report.fail(word=str(w), layer=j)


def load_presentation(name: str) -> CleanPresentation:
    return collapse(GraphOfGroups.from_model(load_fixture(name).gog))


def _random_gog_word(c: CleanPresentation, rng: random.Random, max_syllables: int = 12) -> GoGWord:
    letters = [i for i in range(1, c.basis.rank + 1)] + [-i for i in range(1, c.basis.rank + 1)]
    loops = [i for i in range(1, len(c.loops) + 1)] + [-i for i in range(1, len(c.loops) + 1)]
    items: List[Any] = []
    for k in range(rng.randint(1, max_syllables)):
        if k:
            items.append(rng.choice(loops))
        items.append(Word(c.basis, tuple(rng.choice(letters) for _ in range(rng.randint(0, 3)))))
    return c.word(items)


def _free_rewrite(w: GoGWord, free: Basis) -> Word:
    # x1 -> x, x2 -> t x t^-1, t1 -> t
    images = {1: (1,), 2: (2, 1, -2)}
    letters: List[int] = []
    for item in w.items():
        if isinstance(item, Word):
            for l in item.letters:
                image = images[abs(l)]
                letters.extend(image if l > 0 else [-x for x in reversed(image)])
        else:
            letters.append(2 if item > 0 else -2)
    return Word(free, tuple(letters))


def _substitute_x2(w: GoGWord, c: CleanPresentation) -> GoGWord:
    items: List[Any] = []
    x1 = c.basis.generator(1)
    for item in w.items():
        if not isinstance(item, Word):
            items.append(item)
            continue
        for l in item.letters:
            if abs(l) == 1:
                items.append(x1 if l > 0 else ~x1)
            else:
                items.extend([1, x1 if l > 0 else ~x1, -1])
    return c.word(items)


@SUITES.register("britton-oracle", "Britton triviality on the partial HNN fixture agrees with free reduction")
def britton_oracle(params: LabParams, report: SuiteReport) -> None:
    rng = random.Random(params.seed)
    c = load_presentation("partial_hnn")
    free = Basis(2, ("x", "t"))
    for _ in range(params.samples(10000)):
        w = _random_gog_word(c, rng)
        # the second sample is trivial by construction
        for sample in (w, w * ~_substitute_x2(w, c)):
            report.checks += 1
            if britton_reduce(sample, c).is_identity() != _free_rewrite(sample, free).is_identity():
                report.fail(word=str(sample))


def _certificates(params: LabParams, report: SuiteReport, limit: int) -> List[tuple]:
    """
    (certificate, presentation, cover word, cover index) from the fixture corpora.
    """
    out = []
    for name in ("swap", "partial_hnn"):
        c = load_presentation(name)
        kc = kernel_cover(c.extensions(), params.p, params.monitor)
        cov = lift_gog(c, kc)
        pres = pi1_presentation(cov.presentation)
        for text in load_fixture(name).nontrivial_words:
            if len(out) >= limit:
                return out
            w = parse_gog_word(text, c)
            try:
                result = separate(c, w, params.p, params.config)
            except (CapExceeded, DepthExceeded):
                report.limits += 1
                continue
            if isinstance(result, Certificate):
                out.append((result, pres, rewrite_into_cover(w, kc, cov), kc.size))
    return out


MUTATIONS = ("generator", "element", "prime", "order_exp", "degree", "cover_index", "non_permutation")


def _sympy_image(perms: Dict[str, Permutation], w: GoGWord, degree: int) -> Permutation:
    result = Permutation(list(range(degree)))
    for item in w.items():
        if isinstance(item, Word):
            steps = [(w.basis.names[abs(letter) - 1], letter) for letter in item.letters]
        else:
            steps = [(w.loop_names[abs(item) - 1], item)]
        for name, sign in steps:
            result = result * (perms[name] if sign > 0 else ~perms[name])
    return result


def certificate_holds(model: CertificateModel, pres: Presentation, w: GoGWord, cover_index: int) -> bool:
    """
    Recheck a certificate with sympy permutation products, independently of verify_certificate.

    True iff the claims are all met: supported prime, degree p^order_exp,
    matching cover index, permutations of range(degree), every relator trivial,
    a transitive group of order degree, and a nontrivial element image that
    equals the recorded one.
    """
    degree = model.degree
    if model.p not in SUPPORTED_PRIMES or degree != model.p ** model.order_exp:
        return False
    if model.meta.cover_index != cover_index or len(model.generator_images) != len(pres.generators):
        return False
    target = list(range(degree))
    if any(sorted(image) != target for image in model.generator_images + [model.element_image]):
        return False
    perms = {name: Permutation(list(image)) for name, image in zip(pres.generators, model.generator_images)}
    identity = Permutation(target)
    if any(_sympy_image(perms, r, degree) != identity for r in pres.relators):
        return False
    group = PermutationGroup(list(perms.values()))
    if group.order() != degree or not group.is_transitive():
        return False
    element = _sympy_image(perms, w, degree)
    return element != identity and list(element.array_form) == list(model.element_image)


def _mutate_once(cert: Certificate, rng: random.Random) -> tuple:
    data = cert.to_model().model_dump()
    kind = rng.choice(MUTATIONS)
    if kind in ("generator", "element", "non_permutation"):
        if kind == "element":
            image = data["element_image"]
        else:
            image = data["generator_images"][rng.randrange(len(data["generator_images"]))]
        if len(image) < 2:
            data["order_exp"] += 1
        elif kind == "non_permutation":
            image[0] = image[1]
        else:
            a, b = rng.sample(range(len(image)), 2)
            image[a], image[b] = image[b], image[a]
    elif kind == "prime":
        data["p"] = rng.choice([q for q in SUPPORTED_PRIMES if q != cert.p])
    elif kind == "order_exp":
        data["order_exp"] += rng.choice([-1, 1]) if cert.order_exp > 0 else 1
    elif kind == "degree":
        data["degree"] += rng.choice([-1, 1]) if cert.degree > 1 else 1
    else:
        data["meta"]["cover_index"] += 1
    return kind, CertificateModel.model_validate(data)


def mutate(cert: Certificate, rng: random.Random,
           holds: Optional[Callable[[CertificateModel], bool]] = None, attempts: int = 50) -> tuple:
    """
    Change exactly one field of a certificate.

    A transposition inside a generator image can produce another genuine
    certificate: swapping two points of (1,0,3,2) gives the 4-cycle (3,0,1,2),
    which with (2,3,0,1) still generates a regular group of order 4 satisfying
    every relator. When holds is given, draws for which it returns True are
    discarded; after attempts such draws the order exponent is raised, which
    no certificate survives.

    Returns:
        (kind, mutated model)
    """
    for _ in range(attempts):
        kind, mutated = _mutate_once(cert, rng)
        if holds is None or not holds(mutated):
            return kind, mutated
    data = cert.to_model().model_dump()
    data["order_exp"] += 1
    return "order_exp", CertificateModel.model_validate(data)

@SUITES.register("mutation", "Single-field mutations of valid certificates are rejected")
def mutation(params: LabParams, report: SuiteReport) -> None:
    rng = random.Random(params.seed)
    corpus = _certificates(params, report, limit=4)
    if not corpus:
        report.fail(reason="no certificates to mutate")
        return
    for cert, pres, w, index in corpus:
        report.checks += 1
        if not certificate_holds(cert.to_model(), pres, w, index):
            report.fail(kind="original", word=str(w), reason="independent recheck rejects a verified certificate")
    for _ in range(params.samples(200)):
        cert, pres, w, index = rng.choice(corpus)
        holds = partial(certificate_holds, pres=pres, w=w, cover_index=index)
        kind, mutated = mutate(cert, rng, holds=holds)
        report.checks += 1
        if verify_certificate(mutated, pres, w, cover_index=index):
            report.fail(kind=kind, word=str(w))


@SUITES.register("soundness", "Every certificate from the fixture corpora verifies; identity words are rejected")
def soundness(params: LabParams, report: SuiteReport) -> None:
    names = params.fixtures or fixture_names()
    per_fixture = params.samples(10)
    for name in names:
        fixture = load_fixture(name)
        c = load_presentation(name)
        kc = kernel_cover(c.extensions(), params.p, params.monitor)
        cov = lift_gog(c, kc)
        pres = pi1_presentation(cov.presentation)
        for text in fixture.trivial_words:
            report.checks += 1
            try:
                separate(c, parse_gog_word(text, c), params.p, params.config)
                report.fail(fixture=name, word=text, reason="identity word was separated")
            except IdentityElement:
                pass
        for text in fixture.nontrivial_words[:per_fixture]:
            w = parse_gog_word(text, c)
            report.checks += 1
            try:
                result = separate(c, w, params.p, params.config)
            except CapExceeded:
                report.limits += 1
                continue
            except DepthExceeded:
                report.fail(fixture=name, word=text, reason="no separating depth within the cap")
                continue
            if isinstance(result, NonPWitness):
                if list(result.element_image) == list(range(result.order)):
                    report.fail(fixture=name, word=text, reason="witness image is the identity")
                continue
            verdict = verify_certificate(result, pres, rewrite_into_cover(w, kc, cov), cover_index=kc.size)
            if not verdict:
                report.fail(fixture=name, word=text, reason="; ".join(verdict.failures))


__all__ = ["SUITES", "LabParams", "SuiteReport", "run_suite", "mutate", "certificate_holds"]
