import io
import json
import os
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout

from cleangog.cli import EXIT_CAP, EXIT_INVALID, EXIT_NEGATIVE, EXIT_NON_P, EXIT_OK, main
from cleangog.fixtures import load_fixture


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


def response(err):
    """
    Last CommandResponse document written to stderr.
    """
    lines = [line for line in err.splitlines() if line.startswith('{"status"')]
    return json.loads(lines[-1]) if lines else None


class TestCliCommands(unittest.TestCase):
    """
    Tests for the command-line surface and its exit codes.

    These tests verify that:
    - Each command prints JSON on stdout and exits 0 on success
    - Identity words, non-p elements, caps and bad input map to exit codes 1-4
    - A certificate written by separate is accepted by verify

    Why is this important?
    -----------------------------------
    Scripts drive the toolkit through exit codes. A wrong code turns a
    rejected certificate or a cap hit into an apparent success.
    """

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def test_validate(self):
        code, out, _ = run_cli("validate", "swap")
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(json.loads(out)["clean"])

    def test_validate_unclean(self):
        data = load_fixture("swap").gog.model_dump()
        data["edge_maps"]["t1"]["images"] = [[1, 1], [2]]
        bad = self.path("bad.json")
        with open(bad, "w", encoding="utf-8") as handle:
            json.dump(data, handle)
        code, _, err = run_cli("validate", bad)
        self.assertEqual(code, EXIT_INVALID)
        doc = response(err)
        self.assertEqual(doc["status"], "error")
        self.assertIn("NotABasisOfFactor", doc["message"])

    def test_collapse_and_reduce(self):
        code, out, _ = run_cli("collapse", "amalgam")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(json.loads(out)["rank"], 3)
        code, out, _ = run_cli("reduce", "swap", "t1 x1 t1^-1 x2^-1")
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(json.loads(out)["identity"])

    def test_separate_and_verify(self):
        cert = self.path("cert.json")
        code, out, _ = run_cli("separate", "swap", "x1", "--cert-out", cert)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(json.loads(out)["certificate"], cert)
        self.assertTrue(os.path.exists(cert))
        code, out, _ = run_cli("verify", cert, "swap", "x1")
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(json.loads(out)["valid"])

    def test_verify_rejects(self):
        cert = self.path("cert.json")
        run_cli("separate", "swap", "x1", "--cert-out", cert)
        code, _, err = run_cli("verify", cert, "swap", "")
        self.assertEqual(code, EXIT_NEGATIVE)
        self.assertEqual(response(err)["message"], "certificate rejected")
        code, _, _ = run_cli("verify", cert, "swap", "t1")
        self.assertEqual(code, EXIT_NEGATIVE)

        with open(cert, encoding="utf-8") as handle:
            data = json.load(handle)
        data["meta"]["cover_index"] += 1
        with open(cert, "w", encoding="utf-8") as handle:
            json.dump(data, handle)
        code, _, _ = run_cli("verify", cert, "swap", "x1")
        self.assertEqual(code, EXIT_NEGATIVE)

    def test_separate_outcomes(self):
        code, out, _ = run_cli("separate", "swap", "x1")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("generator_images", json.loads(out))

        code, _, _ = run_cli("separate", "swap", "t1 x1 t1^-1 x2^-1")
        self.assertEqual(code, EXIT_NEGATIVE)

        code, out, _ = run_cli("separate", "swap", "t1")
        self.assertEqual(code, EXIT_NON_P)
        self.assertEqual(json.loads(out)["order"], 2)

    def test_limits(self):
        code, _, err = run_cli("separate", "swap", "x1", "--element-cap", "1")
        self.assertEqual(code, EXIT_CAP)
        doc = response(err)
        self.assertEqual(doc["status"], "limit")
        self.assertEqual(doc["data"]["cap"], "element")

        code, _, err = run_cli("separate", "swap", "x1", "--depth-cap", "1")
        self.assertEqual(code, EXIT_CAP)
        self.assertEqual(response(err)["data"]["exception"], "DepthExceeded")

    def test_invalid_input(self):
        self.assertEqual(run_cli("validate", self.path("missing.json"))[0], EXIT_INVALID)
        self.assertEqual(run_cli("separate", "swap", "y7")[0], EXIT_INVALID)
        code, _, err = run_cli("separate", "swap", "x1", "--p", "7")
        self.assertEqual(code, EXIT_INVALID)
        self.assertEqual(response(err)["data"]["exception"], "ValidationError")

    def test_unaligned_collapse_is_unsupported(self):
        data = load_fixture("amalgam").gog.model_dump()
        data["edge_factors"] = {"e": {"selected": [1, 2]}, "e.bar": {"selected": [1, 2]},
                                "s": {"selected": [1]}, "s.bar": {"selected": [2]}}
        data["edge_maps"] = {"e": {"source_rank": 2, "images": [[1, 2], [2]]},
                             "s": {"source_rank": 1, "images": [[2]]}}
        path = self.path("unaligned.json")
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(data, handle)
        self.assertEqual(run_cli("validate", path)[0], EXIT_OK)
        code, _, err = run_cli("collapse", path)
        self.assertEqual(code, EXIT_INVALID)
        doc = response(err)
        self.assertEqual(doc["status"], "unsupported")
        self.assertEqual(doc["data"]["exception"], "UnalignedCollapse")
        self.assertEqual(doc["data"]["diagnostics"][0]["kind"], "UnalignedFactor")

    def test_nonpositive_rank_and_depth(self):
        for argv in (("pfilt", "dims", "--rank", "0"), ("pfilt", "member", "x1", "--rank", "0"),
                     ("pfilt", "dims", "--depth", "0"), ("info", "amalgam", "--depth", "0"),
                     ("lemmalab", "filtration-laws", "--depth", "0")):
            with self.subTest(argv=argv):
                code, _, err = run_cli(*argv)
                self.assertEqual(code, EXIT_INVALID)
                self.assertEqual(response(err)["data"]["exception"], "InvalidInput")

    def test_lemmalab(self):
        code, out, _ = run_cli("lemmalab", "--list")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("soundness", json.loads(out))
        code, out, _ = run_cli("lemmalab", "filtration-laws", "--depth", "3", "--count", "3")
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(json.loads(out)["ok"])
        code, out, _ = run_cli("lemmalab", "soundness", "--fixture", "swap", "--count", "1")
        self.assertIn(code, (EXIT_OK, EXIT_NEGATIVE))
        self.assertEqual(json.loads(out)["params"]["fixtures"], ["swap"])

    def test_info_and_pfilt(self):
        code, out, _ = run_cli("info", "amalgam", "--depth", "2")
        self.assertEqual(code, EXIT_OK)
        doc = json.loads(out)
        self.assertEqual(doc["loop_count"], 1)
        self.assertEqual(doc["layer_dims"], [3])

        code, out, _ = run_cli("pfilt", "dims", "--rank", "2", "--depth", "3")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(json.loads(out)["dims"], [2, 3])

        code, out, _ = run_cli("pfilt", "member", "x1^2", "--depth", "3")
        self.assertEqual(code, EXIT_OK)
        doc = json.loads(out)
        self.assertEqual(doc["member"], [True, True, False])
        self.assertEqual(doc["level"], 2)


if __name__ == "__main__":
    unittest.main()
