import random
import time
import unittest

import numpy as np

from cleangog.exceptions import InvalidInput
from cleangog.freegrp import Basis
from cleangog.gog import parse_gog_word, pi1_presentation
from cleangog.lemmalab import (
    MUTATIONS,
    SUITES,
    LabParams,
    automorphism_pool,
    certificate_holds,
    ia_generators,
    load_presentation,
    mutate,
    run_suite,
)
from cleangog.pfiltration import theta1
from cleangog.separator import kernel_cover, lift_gog, rewrite_into_cover, separate, verify_certificate


class TestSuiteRegistry(unittest.TestCase):
    """
    Tests for suite registration and lookup.
    """

    def test_registered_suites(self):
        self.assertEqual(SUITES.names(), sorted([
            "britton-oracle", "corollary", "filtration-laws", "mutation",
            "oracle-stability", "sigma-order", "soundness", "theta-propagation",
        ]))

    def test_unknown_suite(self):
        with self.assertRaises(InvalidInput):
            run_suite("no-such-suite", LabParams(count=1))

    def test_params_defaults(self):
        self.assertEqual(LabParams().depth, 4)
        self.assertEqual(LabParams(p=3).depth, 3)
        self.assertEqual(LabParams(count=3).samples(100), 3)
        self.assertEqual(LabParams().samples(100), 100)


class TestAlgebraicSuites(unittest.TestCase):
    """
    Runs the algebraic property suites with small sample counts.

    Why is this important?
    -----------------------------------
    These suites check the group-theoretic facts the separation argument
    rests on. A failure here means an oracle or an induced action is wrong,
    not that a certificate happened to be unlucky.
    """

    def assertSuiteOk(self, name, **kwargs):
        report = run_suite(name, LabParams(**kwargs))
        self.assertTrue(report.ok, report.counterexamples[:3])
        self.assertGreater(report.checks, 0)
        return report

    def test_filtration_laws(self):
        report = self.assertSuiteOk("filtration-laws", depth=3, count=10)
        # layer pairs (1, 1), (1, 2), (2, 1), two checks each
        self.assertEqual(report.checks, 3 * 10 * 2)

    def test_filtration_laws_odd_prime(self):
        self.assertSuiteOk("filtration-laws", p=3, depth=3, count=5)

    def test_sigma_order(self):
        self.assertSuiteOk("sigma-order", depth=3, count=5)

    def test_theta_propagation(self):
        self.assertSuiteOk("theta-propagation", depth=3, count=5)

    def test_corollary(self):
        self.assertSuiteOk("corollary", depth=3, count=5)

    def test_oracle_stability(self):
        self.assertSuiteOk("oracle-stability", depth=3, count=20)

    def test_britton_oracle(self):
        report = self.assertSuiteOk("britton-oracle", count=50)
        self.assertEqual(report.checks, 100)

    def test_report_document(self):
        doc = run_suite("oracle-stability", LabParams(depth=2, count=3)).to_dict()
        self.assertEqual(doc["suite"], "oracle-stability")
        self.assertTrue(doc["ok"])
        self.assertEqual(doc["failures"], 0)
        self.assertEqual(doc["params"]["depth"], 2)


class TestAutomorphismHelpers(unittest.TestCase):
    """
    Tests for the automorphism samplers used by the suites.
    """

    def test_ia_generators_act_trivially_on_homology(self):
        basis = Basis.standard(3)
        for p in (2, 3):
            for a in ia_generators(basis, p):
                with self.subTest(p=p, images=[str(w) for w in a.forward.images]):
                    self.assertTrue(np.array_equal(theta1(a, p), np.eye(3, dtype=np.int64)))

    def test_pool(self):
        self.assertEqual(len(automorphism_pool(Basis.standard(2), 2)), 6)


class TestCertificateSuites(unittest.TestCase):
    """
    Tests for certificate mutation and the end-to-end soundness suite.

    Why is this important?
    -----------------------------------
    A mutation that happens to produce another genuine certificate is not a
    verifier bug. Mutations are redrawn until an independent recheck rejects
    them, so every rejection the suite counts is a real one.
    """

    def setUp(self):
        c = load_presentation("swap")
        w = parse_gog_word("x1", c)
        self.cert = separate(c, w, 2)
        kc = kernel_cover(c.extensions(), 2)
        cov = lift_gog(c, kc)
        self.pres = pi1_presentation(cov.presentation)
        self.word = rewrite_into_cover(w, kc, cov)
        self.index = kc.size

    def holds(self, model):
        return certificate_holds(model, self.pres, self.word, self.index)

    def test_mutate_changes_one_field(self):
        rng = random.Random(3)
        original = self.cert.to_model()
        for _ in range(30):
            kind, mutated = mutate(self.cert, rng)
            self.assertIn(kind, MUTATIONS)
            self.assertNotEqual(mutated, original)

    def test_independent_recheck_accepts_emitted_certificate(self):
        self.assertTrue(self.holds(self.cert.to_model()))
        self.assertTrue(verify_certificate(self.cert, self.pres, self.word, cover_index=self.index))

    def test_mutations_are_rejected(self):
        rng = random.Random(0)
        for _ in range(200):
            kind, mutated = mutate(self.cert, rng, holds=self.holds)
            self.assertFalse(self.holds(mutated), kind)
            self.assertFalse(verify_certificate(mutated, self.pres, self.word, cover_index=self.index), kind)

    def test_mutate_falls_back_to_order_exponent(self):
        kind, mutated = mutate(self.cert, random.Random(1), holds=lambda model: True, attempts=3)
        self.assertEqual(kind, "order_exp")
        self.assertEqual(mutated.order_exp, self.cert.order_exp + 1)
        self.assertFalse(self.holds(mutated))

    def test_mutation_suite(self):
        report = run_suite("mutation", LabParams(count=10))
        self.assertTrue(report.ok, report.counterexamples[:3])
        # corpus originals are rechecked too
        self.assertGreater(report.checks, 10)
        self.assertLessEqual(report.checks, 14)

    def test_mutation_suite_full_count(self):
        for p in (2, 3):
            report = run_suite("mutation", LabParams(p=p))
            self.assertTrue(report.ok, (p, report.counterexamples[:3]))
            self.assertGreaterEqual(report.checks, 200)

    def test_soundness_suite(self):
        report = run_suite("soundness", LabParams(count=1))
        self.assertTrue(report.ok, report.counterexamples[:3])

    def test_soundness_single_fixture_is_bounded(self):
        for p in (2, 3):
            start = time.time()
            report = run_suite("soundness", LabParams(p=p, fixtures=["swap"]))
            self.assertTrue(report.ok, (p, report.counterexamples[:3]))
            self.assertEqual(report.params["fixtures"], ["swap"])
            self.assertLess(time.time() - start, 300)


if __name__ == "__main__":
    unittest.main()
