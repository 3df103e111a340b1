import json
import os
import tempfile
import unittest

from pydantic import ValidationError

from cleangog.exceptions import InvalidInput
from cleangog.fixtures import fixture_names, load_fixture, load_gog
from cleangog.schemas import (
    CertificateMeta,
    CertificateModel,
    CommandResponse,
    FactorModel,
    FreeMapModel,
    GraphOfGroupsModel,
    RunConfig,
)


class TestRunConfig(unittest.TestCase):
    """
    Tests for run configuration defaults and validation.
    """

    def test_prime_dependent_depth(self):
        self.assertEqual(RunConfig().depth_cap, 4)
        self.assertEqual(RunConfig(p=3).depth_cap, 3)
        self.assertEqual(RunConfig(p=5, depth_cap=2).depth_cap, 2)

    def test_unsupported_prime(self):
        with self.assertRaises(ValidationError):
            RunConfig(p=7)

    def test_invalid_limits(self):
        with self.assertRaises(ValidationError):
            RunConfig(jobs=0)
        with self.assertRaises(ValidationError):
            RunConfig(depth_cap=0)
        with self.assertRaises(ValidationError):
            RunConfig(element_cap=-1)


class TestInputModels(unittest.TestCase):
    """
    Tests for the graph-of-groups input schema.

    These tests verify that:
    - Every shipped fixture parses
    - Letters must be nonzero and there is one image per source generator
    - Vertex ranks are positive and factors select at least one generator

    Why is this important?
    -----------------------------------
    Schema errors are caught before any algebra runs, so the algebraic
    validator only ever sees well-formed maps.
    """

    def test_fixtures_parse(self):
        self.assertEqual(fixture_names(), ["amalgam", "fibonacci", "partial_hnn", "swap"])
        for name in fixture_names():
            with self.subTest(fixture=name):
                fixture = load_fixture(name)
                self.assertEqual(fixture.name, name)
                self.assertTrue(fixture.nontrivial_words)

    def test_zero_letter(self):
        with self.assertRaises(ValidationError):
            FreeMapModel(source_rank=1, images=[[1, 0]])

    def test_image_count(self):
        with self.assertRaises(ValidationError):
            FreeMapModel(source_rank=2, images=[[1]])

    def test_positive_ranks(self):
        with self.assertRaises(ValidationError):
            GraphOfGroupsModel(vertices=["v"], vertex_ranks={"v": 0})

    def test_empty_factor(self):
        with self.assertRaises(ValidationError):
            FactorModel(selected=[])

    def test_load_gog_sources(self):
        by_name = load_gog("swap")
        self.assertEqual(by_name.vertex_ranks, {"v": 2})
        with tempfile.TemporaryDirectory() as tmp:
            bare = os.path.join(tmp, "bare.json")
            with open(bare, "w", encoding="utf-8") as handle:
                handle.write(by_name.model_dump_json())
            self.assertEqual(load_gog(bare), by_name)

            broken = os.path.join(tmp, "broken.json")
            with open(broken, "w", encoding="utf-8") as handle:
                json.dump({"vertices": []}, handle)
            with self.assertRaises(InvalidInput):
                load_gog(broken)

    def test_missing_file_and_fixture(self):
        with self.assertRaises(InvalidInput):
            load_gog("/nonexistent/graph.json")
        with self.assertRaises(InvalidInput):
            load_fixture("nope")


class TestOutputModels(unittest.TestCase):
    """
    Tests for certificate and response documents.
    """

    def test_certificate_constraints(self):
        meta = CertificateMeta(depth=2, cover_index=1, kernel_level=0)
        with self.assertRaises(ValidationError):
            CertificateModel(p=2, degree=0, order_exp=0, generator_images=[], element_image=[], meta=meta)
        cert = CertificateModel(p=2, degree=2, order_exp=1, generator_names=["x1"],
                                generator_images=[[1, 0]], element_image=[1, 0], meta=meta)
        self.assertEqual(CertificateModel.model_validate_json(cert.model_dump_json()), cert)

    def test_command_response(self):
        response = CommandResponse(status="limit", message="element cap hit", data={"cap": "element"})
        self.assertEqual(response.status, "limit")
        with self.assertRaises(ValidationError):
            CommandResponse(status="unknown", message="x")
        with self.assertRaises(ValidationError):
            CommandResponse(status="success", message="")


if __name__ == "__main__":
    unittest.main()
