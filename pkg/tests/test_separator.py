import unittest

from sympy.combinatorics import Permutation

from cleangog.exceptions import CapExceeded, DepthExceeded, IdentityElement, OutsideSubgroup, PathDependence
from cleangog.fixtures import fixture_names, load_fixture
from cleangog.freegrp import Automorphism, Basis, BasisAlignedFactor, FreeMap, PartialAutomorphism, verify_automorphism
from cleangog.gog import GraphOfGroups, collapse, one_vertex, parse_gog_word, pi1_presentation
from cleangog.schemas import CertificateModel, RunConfig
from cleangog.separator import (
    Certificate,
    NonPWitness,
    _separate_at_depth,
    build_psi,
    check_filtration,
    depth_cover,
    fiber_action,
    free_kernel_basis,
    kernel_cover,
    lift_gog,
    p_core,
    quotient_gog,
    rewrite_into_cover,
    separate,
    trivial_cover,
    verify_certificate,
)


def presentation(name):
    return collapse(GraphOfGroups.from_model(load_fixture(name).gog))


class TestKernelCover(unittest.TestCase):
    """
    Tests for the theta_1 cover and the lifted graph of groups.

    These tests verify that:
    - The cover has one state per element of the theta_1 image group
    - The lift has loops * states - states + 1 non-tree edges
    - Words of G are rewritten into the cover presentation, others are refused
    """

    def setUp(self):
        self.swap = presentation("swap")
        self.basis = Basis(2)

    def test_state_counts(self):
        swap = verify_automorphism(FreeMap.from_letters(self.basis, self.basis, [[2], [1]]))
        fibonacci = verify_automorphism(FreeMap.from_letters(self.basis, self.basis, [[2], [1, 2]]))
        self.assertEqual(kernel_cover([Automorphism.identity(self.basis)], 2).size, 1)
        self.assertEqual(kernel_cover([swap], 2).size, 2)
        self.assertEqual(kernel_cover([fibonacci], 2).size, 3)
        # swap and fibonacci generate GL(2, 2)
        self.assertEqual(kernel_cover([swap, fibonacci], 2).size, 6)

    def test_non_tree_counts(self):
        for name in ("swap", "fibonacci", "partial_hnn", "amalgam"):
            with self.subTest(fixture=name):
                c = presentation(name)
                kc = kernel_cover(c.extensions(), 2)
                cov = lift_gog(c, kc)
                self.assertEqual(cov.non_tree_count(), len(c.loops) * kc.size - kc.size + 1)

    def test_swap_lift(self):
        kc = kernel_cover(self.swap.extensions(), 2)
        cov = lift_gog(self.swap, kc)
        self.assertEqual(cov.presentation.basis.rank, 2)
        self.assertEqual(cov.tree, ["t1_0"])
        words = cov.generator_words()
        self.assertEqual(len(words), 3)
        self.assertEqual(words[-1].letters, (1, 1))

    def test_rewrite(self):
        kc = kernel_cover(self.swap.extensions(), 2)
        cov = lift_gog(self.swap, kc)
        w = rewrite_into_cover(parse_gog_word("x1 t1^2", self.swap), kc, cov)
        self.assertEqual(w.letters, (1,))
        self.assertEqual(w.syllables[0].letters, (1,))
        with self.assertRaises(OutsideSubgroup):
            rewrite_into_cover(parse_gog_word("t1", self.swap), kc, cov)


class TestQuotients(unittest.TestCase):
    """
    Tests for the quotient graphs of groups and the filtration hypotheses.

    Why is this important?
    -----------------------------------
    The separation argument needs every loop to descend to a partial
    automorphism of F / gamma^p_n(F). A loop that does not descend must be
    reported instead of silently producing wrong permutations.
    """

    def setUp(self):
        self.swap = presentation("swap")

    def test_orders(self):
        self.assertEqual(quotient_gog(self.swap, 2, 2).q.order, 4)
        self.assertEqual(quotient_gog(self.swap, 2, 3).q.order, 32)
        self.assertTrue(quotient_gog(self.swap, 2, 2).is_p_group())

    def test_survival(self):
        fq = quotient_gog(presentation("partial_hnn"), 2, 2)
        c = fq.base
        self.assertTrue(fq.well_defined)
        self.assertTrue(fq.survives(parse_gog_word("x1", c)))
        self.assertFalse(fq.survives(parse_gog_word("x1^2", c)))
        self.assertFalse(fq.survives(parse_gog_word("t1 x1 t1^-1 x2^-1", c)))

    def test_survival_is_monotone_in_depth(self):
        for name in ("swap", "partial_hnn"):
            c = presentation(name)
            quotients = [quotient_gog(c, 2, n) for n in (2, 3, 4)]
            for text in load_fixture(name).nontrivial_words:
                w = parse_gog_word(text, c)
                for lower, upper in zip(quotients, quotients[1:]):
                    if lower.well_defined and upper.well_defined and lower.survives(w):
                        with self.subTest(fixture=name, word=text, depth=lower.n):
                            self.assertTrue(upper.survives(w))
        swap = presentation("swap")
        square = parse_gog_word("x1^2", swap)
        self.assertFalse(quotient_gog(swap, 2, 2).survives(square))
        self.assertTrue(quotient_gog(swap, 2, 3).survives(square))

    def test_fixture_filtrations(self):
        for name in ("swap", "partial_hnn", "amalgam"):
            with self.subTest(fixture=name):
                report = check_filtration(presentation(name), 2, [2, 3])
                self.assertTrue(report.ok, report.failures)
                self.assertGreater(report.checks, 0)

    def test_incompatible_loop_is_reported(self):
        basis = Basis(2)
        x1, x2 = basis.generators()
        factor = BasisAlignedFactor(basis, (1, 2))
        squaring = FreeMap(basis, basis, (x1 ** 2, x2))
        broken = PartialAutomorphism(factor, factor, FreeMap(factor.basis, basis, (x1 ** 2, x2)),
                                     Automorphism(squaring, FreeMap.identity(basis)))
        c = one_vertex(basis, [("t1", broken)])
        report = check_filtration(c, 2, [2])
        self.assertFalse(report.ok)
        self.assertIn("compatibility", [f["kind"] for f in report.failures])


class TestPsiAndKernel(unittest.TestCase):
    """
    Tests for the per-state automorphisms psi_v and the free kernel of psi.
    """

    def test_path_independence_on_fixtures(self):
        for name in fixture_names():
            c = presentation(name)
            for n in (2, 3):
                with self.subTest(fixture=name, depth=n):
                    fq = quotient_gog(c, 2, n)
                    dc = depth_cover(c.extensions(), fq.q, 2)
                    self.assertEqual(len(build_psi(fq, dc).psi), dc.size)

    def test_path_dependence(self):
        fq = quotient_gog(presentation("swap"), 2, 2)
        with self.assertRaises(PathDependence):
            build_psi(fq, trivial_cover(1))

    def test_kernel_rank(self):
        for name, expected in (("swap", 1), ("partial_hnn", 3)):
            with self.subTest(fixture=name):
                c = presentation(name)
                fq = quotient_gog(c, 2, 2)
                dc = depth_cover(c.extensions(), fq.q, 2)
                kernel = free_kernel_basis(build_psi(fq, dc))
                self.assertEqual(kernel.rank, len(kernel.edges) - dc.size + 1)
                self.assertEqual(kernel.rank, expected)

    def test_fiber_action_sizes(self):
        c = presentation("swap")
        fq = quotient_gog(c, 2, 2)
        dc = depth_cover(c.extensions(), fq.q, 2)
        action = fiber_action(c, build_psi(fq, dc))
        self.assertEqual(action.size, fq.q.order * dc.size)
        self.assertEqual(len(action.transversal(c)), action.size)

    def test_rewrite_in_kernel(self):
        c = presentation("swap")
        fq = quotient_gog(c, 2, 2)
        dc = depth_cover(c.extensions(), fq.q, 2)
        kernel = free_kernel_basis(build_psi(fq, dc))
        self.assertEqual(kernel.rewrite(parse_gog_word("x1^2", c)).letters, ())
        self.assertEqual(len(kernel.rewrite(parse_gog_word("t1^2", c))), 1)
        with self.assertRaises(OutsideSubgroup):
            kernel.rewrite(parse_gog_word("x1", c))


class TestPCore(unittest.TestCase):
    """
    Tests for the core of a subgroup given by a membership oracle.
    """

    def setUp(self):
        self.x = Permutation([1, 0, 2])
        self.y = Permutation([0, 2, 1])
        self.stabilizer = lambda h: h(0) == 0

    def test_core_of_point_stabilizer(self):
        core = p_core(self.stabilizer, [Permutation([0, 1, 2]), self.x])
        self.assertTrue(core(Permutation([0, 1, 2])))
        self.assertTrue(self.stabilizer(self.y))
        self.assertFalse(core(self.y))

    def test_single_coset(self):
        core = p_core(self.stabilizer, [Permutation([0, 1, 2])])
        self.assertTrue(core(self.y))
        self.assertFalse(core(self.x))


class TestSeparate(unittest.TestCase):
    """
    Tests for the end-to-end separation pipeline and the certificate checker.

    Why is this important?
    -----------------------------------
    A certificate is the only output a user has to trust; these tests check
    that what the pipeline emits passes the independent checker and that the
    checker rejects what it should.
    """

    def setUp(self):
        self.c = presentation("swap")
        self.kc = kernel_cover(self.c.extensions(), 2)
        self.cov = lift_gog(self.c, self.kc)
        self.pres = pi1_presentation(self.cov.presentation)
        self.w = parse_gog_word("x1", self.c)
        self.cover_word = rewrite_into_cover(self.w, self.kc, self.cov)

    def test_certificate_verifies(self):
        cert = separate(self.c, self.w, 2)
        self.assertIsInstance(cert, Certificate)
        self.assertEqual(cert.degree, 2 ** cert.order_exp)
        self.assertEqual(cert.meta.cover_index, 2)
        report = verify_certificate(cert, self.pres, self.cover_word, cover_index=self.kc.size)
        self.assertTrue(report.ok, report.failures)

    def test_model_round_trip_verifies(self):
        cert = separate(self.c, self.w, 2)
        model = cert.to_model()
        self.assertEqual(Certificate.from_model(model), cert)
        self.assertTrue(verify_certificate(model, self.pres, self.cover_word))

    def test_wrong_word_is_rejected(self):
        cert = separate(self.c, self.w, 2)
        self.assertFalse(verify_certificate(cert, self.pres, self.cov.presentation.identity()))

    def test_mutated_element_is_rejected(self):
        data = separate(self.c, self.w, 2).to_model().model_dump()
        image = data["element_image"]
        image[0], image[1] = image[1], image[0]
        mutated = Certificate.from_model(CertificateModel.model_validate(data))
        self.assertFalse(verify_certificate(mutated, self.pres, self.cover_word))

    def test_outside_subgroup_gives_witness(self):
        result = separate(self.c, parse_gog_word("t1", self.c), 2)
        self.assertIsInstance(result, NonPWitness)
        self.assertEqual(result.order, 2)
        self.assertNotEqual(list(result.element_image), [0, 1])

    def test_identity_is_refused(self):
        with self.assertRaises(IdentityElement):
            separate(self.c, parse_gog_word("", self.c), 2)
        with self.assertRaises(IdentityElement):
            separate(self.c, parse_gog_word("t1 x1 t1^-1 x2^-1", self.c), 2)

    def test_deterministic_and_jobs_independent(self):
        first = separate(self.c, self.w, 2).to_model()
        second = separate(self.c, self.w, 2).to_model()
        threaded = separate(self.c, self.w, 2, RunConfig(p=2, jobs=3)).to_model()
        self.assertEqual(first, second)
        self.assertEqual(first, threaded)

    def test_least_separating_depth(self):
        config = RunConfig(p=2)
        monitor = config.monitor()
        for name in ("swap", "partial_hnn"):
            c = presentation(name)
            kc = kernel_cover(c.extensions(), 2)
            cov = lift_gog(c, kc)
            for text in load_fixture(name).nontrivial_words[:6]:
                w = parse_gog_word(text, c)
                try:
                    result = separate(c, w, 2, config)
                except (CapExceeded, DepthExceeded):
                    continue
                if not isinstance(result, Certificate):
                    continue
                depth = result.meta.depth
                with self.subTest(fixture=name, word=text):
                    self.assertTrue(quotient_gog(cov, 2, depth).survives(w))
                    for n in range(2, depth):
                        self.assertIsNone(_separate_at_depth(c, cov, w, 2, n, config.depth_cap, monitor))


if __name__ == "__main__":
    unittest.main()
