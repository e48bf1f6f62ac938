import json

import numpy as np
import pytest

from jointsim.cli import build_parser, main
from jointsim.documents import family_document, parse_family
from jointsim.famgen import GenSpec, Recipe, generate
from jointsim.spectra import jordan_block


def run_failing(argv):
    with pytest.raises(SystemExit) as excinfo:
        main(argv)
    return excinfo.value.code


def read(path):
    return json.loads(path.read_text(encoding="utf-8"))


def write_json(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def similarity_doc(Y):
    Y = np.asarray(Y, dtype=np.complex128)
    return {"Y": {"re": Y.real.tolist(), "im": Y.imag.tolist()}}


class TestParser:

    def test_subcommands(self):
        parser = build_parser()
        args = parser.parse_args(["verify", "f.json", "y.json", "--tol-commute", "1e-6"])
        assert args.command == "verify"
        assert args.similarity == "y.json"
        assert args.tol_commute == 1e-6

    def test_command_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_unknown_recipe(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["generate", "--recipe", "random_walk"])


class TestAnalyze:

    def test_non_commuting_pair(self, tmp_path):
        family = tmp_path / "nc.json"
        out = tmp_path / "analysis.json"
        assert main(["generate", "--recipe", "counterexample_nc", "-o", str(family)]) == 0
        assert main(["analyze", str(family), "-o", str(out)]) == 0

        doc = read(out)
        assert doc["commutativity"]["residual"] == pytest.approx(0.8)
        assert doc["commutativity"]["commuting"] is False
        assert sorted(doc["commutativity"]["worst_pair"]) == ["T", "T_adj"]
        assert doc["obstructions"]
        assert all(w["obstructed"] for w in doc["obstructions"])
        assert doc["obstructions"][0]["spectral_radius"] == pytest.approx(4.0)

    def test_singleton_contraction(self, tmp_path, write_family):
        family = write_family([[[0.5]]])
        out = tmp_path / "analysis.json"
        assert main(["analyze", str(family), "-o", str(out)]) == 0

        member = read(out)["members"]["T1"]
        assert member["delta_set"] == []
        assert member["delta_value"] is None
        assert member["power_bound"]["is_power_bounded"] is True
        assert member["power_bound"]["K"] == pytest.approx(1.0)
        assert member["power_check"]["vacuous"] is True

    def test_planted_jordan_document(self, tmp_path):
        family = tmp_path / "planted.json"
        out = tmp_path / "analysis.json"
        argv = ["generate", "--recipe", "planted_jordan", "--seed", "3", "--n", "5", "-o", str(family)]
        assert main(argv) == 0
        assert "planted" in read(family)
        assert main(["analyze", str(family), "-o", str(out)]) == 0
        assert read(out)["planted_match"] == {"T1": True}

    def test_report_lists_obstructions(self, tmp_path):
        family = tmp_path / "nc.json"
        report = tmp_path / "analysis.md"
        main(["generate", "--recipe", "counterexample_nc", "-o", str(family)])
        assert main(["analyze", str(family), "-o", str(tmp_path / "a.json"), "--report", str(report)]) == 0

        text = report.read_text(encoding="utf-8")
        assert text.startswith("# Joint Similarity Report: analyze")
        assert "**Commuting**: no" in text
        assert "## Obstructions" in text
        assert "no joint similarity exists" in text

    def test_boundary_jordan_block(self, tmp_path, write_family):
        family = write_family([jordan_block(1.0, 2)])
        out = tmp_path / "analysis.json"
        assert main(["analyze", str(family), "-o", str(out)]) == 0
        member = read(out)["members"]["T1"]
        assert member["power_bound"]["is_power_bounded"] is False
        assert member["power_check"] is None


class TestDecompose:

    def test_jordan_plus_scalar(self, tmp_path, write_family, jordan_plus_scalar):
        family = write_family([jordan_plus_scalar])
        out = tmp_path / "decomposition.json"
        assert main(["decompose", str(family), "-o", str(out)]) == 0

        doc = read(out)
        assert [p["dim"] for p in doc["parts"]] == [2, 1]
        assert doc["parts"][0]["tags"]["T1"]["kind"] == "delta_spectrum"
        assert doc["parts"][1]["tags"]["T1"]["kind"] == "scalar"
        assert doc["parts"][1]["tags"]["T1"]["z"]["re"] == pytest.approx(0.9)
        assert doc["alpha"] == pytest.approx(1.0)

    def test_spectrum_outside_disc(self, write_family):
        family = write_family([np.diag([1.5, 0.2])])
        assert run_failing(["decompose", str(family)]) == 5


class TestSimilarize:

    def test_nilpotent(self, tmp_path, write_family, nilpotent):
        family = write_family([nilpotent])
        out = tmp_path / "certificate.json"
        assert main(["similarize", str(family), "-o", str(out)]) == 0

        cert = read(out)
        assert cert["norm_Y"] == pytest.approx(np.sqrt(8))
        assert cert["bound"] == pytest.approx(np.sqrt(8))
        assert cert["conjugated_norms"]["T1"] == pytest.approx(0.25)
        assert cert["verified"] is True

    def test_singleton_clamps_k(self, tmp_path, write_family):
        family = write_family([[[0.5]]])
        out = tmp_path / "certificate.json"
        assert main(["similarize", str(family), "-o", str(out)]) == 0

        cert = read(out)
        assert cert["k_clamped"] is True
        assert cert["conjugated_norms"]["T1"] == pytest.approx(0.5)
        assert cert["bound"] == pytest.approx(1.0)

    def test_non_commuting_pair(self, tmp_path):
        family = tmp_path / "nc.json"
        main(["generate", "--recipe", "counterexample_nc", "-o", str(family)])
        assert run_failing(["similarize", str(family)]) == 4

    def test_loose_commute_tolerance_is_caught_by_final_check(self, tmp_path):
        family = tmp_path / "nc.json"
        out = tmp_path / "certificate.json"
        main(["generate", "--recipe", "counterexample_nc", "-o", str(family)])
        assert run_failing(["similarize", str(family), "--tol-commute", "1.0", "-o", str(out)]) == 6

        cert = read(out)
        assert cert["verified"] is False
        assert max(cert["conjugated_norms"].values()) == pytest.approx(2.0)

    def test_not_power_bounded(self, write_family):
        family = write_family([jordan_block(1.0, 2)])
        assert run_failing(["similarize", str(family)]) == 5

    def test_report(self, tmp_path, write_family, nilpotent):
        family = write_family([nilpotent])
        report = tmp_path / "reports" / "similarize.md"
        assert main(["similarize", str(family), "-o", str(tmp_path / "c.json"), "--report", str(report)]) == 0

        text = report.read_text(encoding="utf-8")
        assert text.startswith("# Joint Similarity Report: similarize")
        assert "**Status**: OK" in text
        assert "**Dimension**: 2" in text


class TestVerify:

    def test_unbounded_family_round_trip(self, tmp_path):
        family = tmp_path / "unbounded.json"
        cert = tmp_path / "certificate.json"
        checked = tmp_path / "verify.json"
        assert main(["generate", "--recipe", "counterexample_unbounded", "--m", "5", "-o", str(family)]) == 0
        assert main(["similarize", str(family), "-o", str(cert)]) == 0
        assert read(cert)["conditioning_lower_bound"] == pytest.approx(20.0)
        assert main(["verify", str(family), str(cert), "-o", str(checked)]) == 0

        doc = read(checked)
        assert doc["passed"] is True
        assert doc["within_bound"] is True
        assert doc["bound"] == pytest.approx(np.sqrt(20))

    @pytest.mark.parametrize("seed", range(40))
    def test_polynomial_corpus(self, tmp_path, seed):
        family = tmp_path / "family.json"
        cert = tmp_path / "certificate.json"
        argv = ["generate", "--seed", str(seed), "--n", str(2 + seed % 5), "-o", str(family)]
        assert main(argv) == 0
        assert main(["similarize", str(family), "-o", str(cert)]) == 0
        assert main(["verify", str(family), str(cert), "-o", str(tmp_path / "verify.json")]) == 0

    def test_scaled_certificate_is_unbalanced(self, tmp_path):
        family = tmp_path / "unbounded.json"
        cert = tmp_path / "certificate.json"
        main(["generate", "--recipe", "counterexample_unbounded", "--m", "5", "-o", str(family)])
        main(["similarize", str(family), "-o", str(cert)])

        doc = read(cert)
        doc["Y"] = {part: (1.1 * np.array(doc["Y"][part])).tolist() for part in ("re", "im")}
        write_json(cert, doc)
        assert run_failing(["verify", str(family), str(cert)]) == 6

    def test_identity_is_not_enough(self, tmp_path, write_family, nilpotent):
        family = write_family([nilpotent])
        sim = write_json(tmp_path / "y.json", similarity_doc(np.eye(2)))
        out = tmp_path / "verify.json"
        assert run_failing(["verify", str(family), str(sim), "-o", str(out)]) == 6

        doc = read(out)
        assert doc["passed"] is False
        assert doc["worst_member"] == "T1"
        assert doc["worst_norm"] == pytest.approx(2.0)

    @pytest.mark.parametrize("k", [2.0, 4.0, 9.0])
    def test_hand_scaled(self, tmp_path, write_family, k):
        family = write_family([np.array([[0, k], [0, 0]])])
        sim = write_json(tmp_path / "y.json", similarity_doc(np.diag([k ** -0.5, k ** 0.5])))
        assert main(["verify", str(family), str(sim), "-o", str(tmp_path / "verify.json")]) == 0

    def test_singular_similarity(self, tmp_path, write_family, nilpotent):
        family = write_family([nilpotent])
        sim = write_json(tmp_path / "y.json", similarity_doc(nilpotent))
        assert run_failing(["verify", str(family), str(sim)]) == 5

    def test_missing_y(self, tmp_path, write_family, nilpotent):
        family = write_family([nilpotent])
        sim = write_json(tmp_path / "y.json", {"X": []})
        assert run_failing(["verify", str(family), str(sim)]) == 2


class TestSchemaErrors:

    def test_missing_n(self, tmp_path):
        path = write_json(tmp_path / "f.json", {"matrices": [{"re": [[0.5]]}]})
        assert run_failing(["analyze", str(path)]) == 2

    def test_bad_shape(self, tmp_path):
        path = write_json(tmp_path / "f.json", {"n": 2, "matrices": [{"re": [[0.5, 0.0]], "im": [[0, 0]]}]})
        assert run_failing(["analyze", str(path)]) == 2

    def test_unknown_key(self, tmp_path):
        path = write_json(tmp_path / "f.json", {"n": 1, "matrices": [{"re": [[0.5]]}], "comment": "x"})
        assert run_failing(["analyze", str(path)]) == 2

    def test_duplicate_names(self, tmp_path, write_family):
        path = write_family([[[0.5]], [[0.1]]], names=["A", "A"])
        assert run_failing(["analyze", str(path)]) == 2

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "f.json"
        path.write_text("{not json", encoding="utf-8")
        assert run_failing(["analyze", str(path)]) == 2

    def test_not_utf8(self, tmp_path):
        path = tmp_path / "f.json"
        path.write_bytes(b'{"n":1,"name":"\xff\xfe","matrices":[{"re":[[0.5]]}]}')
        assert run_failing(["analyze", str(path)]) == 2

    def test_missing_file(self, tmp_path):
        assert run_failing(["analyze", str(tmp_path / "absent.json")]) == 2

    def test_bad_tolerance(self, tmp_path, write_family):
        path = write_family([[[0.5]]], tolerances={"tol_cluster": "wide"})
        assert run_failing(["analyze", str(path)]) == 2


class TestGenerate:

    def test_config_file_with_flag_override(self, tmp_path):
        config = write_json(tmp_path / "gen.json", {"recipe": "planted_block_diagonal", "seed": 7, "n": 3})
        out = tmp_path / "family.json"
        assert main(["generate", "--config", str(config), "--seed", "8", "-o", str(out)]) == 0

        doc = read(out)
        assert doc["name"] == "planted_block_diagonal-seed8"
        assert doc["n"] == 3
        assert sum(doc["planted"]["partition"]) == 3

    def test_tolerance_flags_are_recorded(self, tmp_path):
        out = tmp_path / "family.json"
        assert main(["generate", "--tol-cluster", "1e-5", "-o", str(out)]) == 0
        assert read(out)["tolerances"]["tol_cluster"] == 1e-5

    def test_unknown_config_field(self, tmp_path):
        config = write_json(tmp_path / "gen.json", {"temperature": 0.7})
        assert run_failing(["generate", "--config", str(config)]) == 2

    def test_stdout(self, capsys):
        assert main(["generate", "--recipe", "counterexample_unbounded", "--m", "2"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert [m["name"] for m in doc["matrices"]] == ["T1", "T2"]


@pytest.mark.parametrize("seed", range(20))
def test_family_document_round_trip_is_exact(seed):
    recipe = list(Recipe)[seed % len(Recipe)]
    family = generate(GenSpec(seed=seed, n=2 + seed % 4, recipe=recipe))
    parsed = parse_family(json.loads(json.dumps(family_document(family))))
    assert parsed.name == family.name
    assert parsed.names == family.names
    assert parsed.tolerances == family.tolerances
    for A, B in zip(parsed.matrices, family.matrices):
        assert np.array_equal(A, B)
