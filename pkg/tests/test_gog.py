import unittest

from cleangog.exceptions import BasisMismatch, Disconnected, InvalidInput, NotClean, UnalignedCollapse
from cleangog.fixtures import fixture_names, load_fixture
from cleangog.gog import (
    GraphOfGroups,
    britton_reduce,
    collapse,
    format_gog_word,
    graph_relators,
    has_pinch,
    parse_gog_word,
    pi1_presentation,
    polyfree_chain,
    project_to_graph_group,
    rewrite_tokens,
    spanning_tree,
    validate_clean,
)
from cleangog.schemas import GraphOfGroupsModel


def fixture_gog(name):
    return GraphOfGroups.from_model(load_fixture(name).gog)


def modified(name, change):
    data = load_fixture(name).gog.model_dump()
    change(data)
    return GraphOfGroups.from_model(GraphOfGroupsModel.model_validate(data))


def unaligned_loop_gog():
    # tree edge a2 -> a1 b1, b2 -> b1; loop <a2> -> <b2> at w
    return GraphOfGroups.from_model(GraphOfGroupsModel.model_validate({
        "vertices": ["v", "w"],
        "edges": [
            {"id": "e", "bar": "e.bar", "tau": "w"},
            {"id": "e.bar", "bar": "e", "tau": "v"},
            {"id": "s", "bar": "s.bar", "tau": "w"},
            {"id": "s.bar", "bar": "s", "tau": "w"},
        ],
        "vertex_ranks": {"v": 2, "w": 2},
        "vertex_names": {"v": ["a1", "b1"], "w": ["a2", "b2"]},
        "edge_factors": {
            "e": {"selected": [1, 2]},
            "e.bar": {"selected": [1, 2]},
            "s": {"selected": [1]},
            "s.bar": {"selected": [2]},
        },
        "edge_maps": {
            "e": {"source_rank": 2, "images": [[1, 2], [2]]},
            "s": {"source_rank": 1, "images": [[2]]},
        },
    }))


class TestValidateClean(unittest.TestCase):
    """
    Tests for the algebraic cleanness checks.

    These tests verify that:
    - Every shipped fixture is clean
    - A broken edge involution, a non-basis edge map and a disconnected graph
      are each reported as a diagnostic instead of raising

    Why is this important?
    -----------------------------------
    Everything downstream (collapse, covers, certificates) assumes clean edge
    maps. The validator is the only gate in front of those assumptions.
    """

    def test_fixtures_are_clean(self):
        for name in fixture_names():
            with self.subTest(fixture=name):
                self.assertTrue(validate_clean(fixture_gog(name)).ok)

    def test_bar_not_involution(self):
        def corrupt(data):
            data["edges"][1]["bar"] = data["edges"][1]["id"]
        report = validate_clean(modified("swap", corrupt))
        self.assertFalse(report.ok)
        self.assertIn("BarNotInvolution", report.kinds())
        with self.assertRaises(NotClean):
            report.raise_for_status()

    def test_non_basis_edge_map(self):
        def corrupt(data):
            data["edge_maps"]["t1"]["images"] = [[1, 1], [2]]
        report = validate_clean(modified("swap", corrupt))
        self.assertEqual(report.kinds(), ["NotABasisOfFactor"])

    def test_inconsistent_edge_maps(self):
        def corrupt(data):
            data["edge_maps"]["t1.bar"] = {"source_rank": 2, "images": [[1], [2]]}
        report = validate_clean(modified("swap", corrupt))
        self.assertIn("InconsistentEdgeMaps", report.kinds())

    def test_disconnected(self):
        model = GraphOfGroupsModel(vertices=["u", "v"], vertex_ranks={"u": 1, "v": 1})
        report = validate_clean(GraphOfGroups.from_model(model))
        self.assertEqual(report.kinds(), ["Disconnected"])
        with self.assertRaises(Disconnected):
            report.raise_for_status()

    def test_edge_map_without_factor(self):
        def corrupt(data):
            del data["edge_factors"]["t1"]
        with self.assertRaises(InvalidInput):
            modified("swap", corrupt)


class TestCollapse(unittest.TestCase):
    """
    Tests for collapsing a spanning tree into a one-vertex presentation.
    """

    def setUp(self):
        self.amalgam = fixture_gog("amalgam")
        self.c = collapse(self.amalgam)

    def test_spanning_tree(self):
        self.assertEqual(spanning_tree(self.amalgam.graph), ["e"])

    def test_amalgam_basis(self):
        self.assertEqual(self.c.basis.names, ("a1", "b1", "b2"))
        self.assertEqual(self.c.loop_names, ("s",))

    def test_loop_factors(self):
        loop = self.c.loops[0]
        self.assertEqual(loop.domain.selected, (3,))
        self.assertEqual(loop.codomain.selected, (1,))
        # a1 -> b1 -> b2 -> a1
        images = [w.letters for w in loop.phi.extension.forward.images]
        self.assertEqual(images, [(2,), (3,), (1,)])

    def test_graph_relators_become_trivial(self):
        for tokens in graph_relators(self.amalgam):
            w = rewrite_tokens(tokens, self.c)
            self.assertTrue(britton_reduce(w, self.c).is_identity(), tokens)

    def test_unclean_graph_is_refused(self):
        def corrupt(data):
            data["edge_maps"]["t1"]["images"] = [[1, 1], [2]]
        with self.assertRaises(NotClean):
            collapse(modified("swap", corrupt))

    def test_unaligned_loop_factor_is_unsupported(self):
        g = unaligned_loop_gog()
        self.assertTrue(validate_clean(g).ok)
        with self.assertRaises(UnalignedCollapse) as ctx:
            collapse(g)
        self.assertNotIsInstance(ctx.exception, NotClean)
        self.assertEqual(ctx.exception.diagnostics[0]["kind"], "UnalignedFactor")

    def test_summary(self):
        summary = self.c.summary()
        self.assertEqual(summary["rank"], 3)
        self.assertEqual(summary["loops"][0]["domain"], ["b2"])
        self.assertEqual(summary["loops"][0]["codomain"], ["a1"])
        self.assertEqual(summary["tree"][0]["edge"], "e")


class TestBrittonReduction(unittest.TestCase):
    """
    Tests for graph-of-groups words and Britton normal forms.

    Why is this important?
    -----------------------------------
    The word problem is solved by Britton reduction alone; the separation
    pipeline trusts it to reject identity words before any enumeration.
    """

    def setUp(self):
        self.presentations = {name: collapse(fixture_gog(name)) for name in fixture_names()}

    def test_corpora(self):
        for name, c in self.presentations.items():
            fixture = load_fixture(name)
            for text in fixture.trivial_words:
                with self.subTest(fixture=name, word=text):
                    self.assertTrue(britton_reduce(parse_gog_word(text, c), c).is_identity())
            for text in fixture.nontrivial_words:
                with self.subTest(fixture=name, word=text):
                    self.assertFalse(britton_reduce(parse_gog_word(text, c), c).is_identity())

    def test_normal_form_has_no_pinch(self):
        c = self.presentations["partial_hnn"]
        w = parse_gog_word("x2 t1 x1^2 t1^-1 x1 t1 x2 t1^-1", c)
        self.assertTrue(has_pinch(w, c))
        reduced = britton_reduce(w, c)
        self.assertFalse(has_pinch(reduced, c))
        self.assertEqual(format_gog_word(reduced), "x2^3 x1 t1 x2 t1^-1")

    def test_adjacent_loop_letters_cancel(self):
        c = self.presentations["swap"]
        self.assertTrue(c.word([1, -1]).is_identity())
        x1 = c.basis.generator(1)
        self.assertEqual(len(c.word([x1, 1, -1, x1])), 0)

    def test_format_round_trip(self):
        c = self.presentations["swap"]
        self.assertEqual(format_gog_word(parse_gog_word("t1 x1^2 t1^-1", c)), "t1 x1^2 t1^-1")
        self.assertEqual(format_gog_word(c.identity()), "1")

    def test_unknown_generator(self):
        with self.assertRaises(InvalidInput):
            parse_gog_word("y1", self.presentations["swap"])

    def test_foreign_word(self):
        swap = self.presentations["swap"]
        other = self.presentations["amalgam"]
        with self.assertRaises(BasisMismatch):
            britton_reduce(other.word([other.basis.generator(1)]), swap)


class TestPresentation(unittest.TestCase):
    """
    Tests for the fundamental group presentation and the poly-free chain report.
    """

    def test_swap_presentation(self):
        c = collapse(fixture_gog("swap"))
        pres = pi1_presentation(c)
        self.assertEqual(pres.generators, ("x1", "x2", "t1"))
        self.assertEqual(len(pres.relators), 2)
        self.assertEqual(format_gog_word(pres.relators[0]), "t1 x1 t1^-1 x2^-1")

    def test_polyfree_chain(self):
        c = collapse(fixture_gog("amalgam"))
        report = polyfree_chain(c)
        self.assertEqual(report.quotient_rank, 1)
        self.assertTrue(report.relators_project_trivially)
        self.assertEqual(report.chain_length, 2)

    def test_polyfree_on_fixtures(self):
        for name in fixture_names():
            with self.subTest(fixture=name):
                g = fixture_gog(name)
                report = polyfree_chain(collapse(g))
                self.assertTrue(report.relators_project_trivially)
                self.assertTrue(all(k["free_factors"] for k in report.kernel_factors))
                self.assertEqual(report.quotient_rank, len(g.graph.representatives()) - len(g.graph.vertices) + 1)

    def test_projection(self):
        c = collapse(fixture_gog("swap"))
        w = parse_gog_word("t1 x1 t1 x2 t1^-1", c)
        self.assertEqual(project_to_graph_group(w).letters, (1,))


if __name__ == "__main__":
    unittest.main()
