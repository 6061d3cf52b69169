import json
import os

import numpy as np
import pytest

from qkdsim.cli import main
from qkdsim.scenarios import (
    ScenarioFormatError,
    load_scenario,
    paper_example,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)

from oracles import binary_entropy, pure_pair_c1, pure_pair_capacity


class TestScenarioIO:
    def test_builtin_paper_example_overlap(self):
        sc = load_scenario("paper-example", overlap=0.5)
        # letter states must overlap as <xi(0), xi(1)> = s^2 per qubit pair
        m0 = sc.ensemble.states[0].matrix
        m1 = sc.ensemble.states[1].matrix
        fidelity = np.trace(m0 @ m1).real
        assert fidelity == pytest.approx(0.5**4, abs=1e-12)

    def test_builtin_orthogonal(self):
        sc = load_scenario("orthogonal")
        m0, m1 = (s.matrix for s in sc.ensemble.states)
        assert np.trace(m0 @ m1).real == pytest.approx(0.0, abs=1e-12)

    def test_builtin_bsc_pair_marginals(self):
        sc = load_scenario("bsc-pair", params=(0.1, 0.3))
        v, w = sc.classical_pair
        np.testing.assert_allclose(v.matrix, [[0.9, 0.1], [0.1, 0.9]])
        np.testing.assert_allclose(w.matrix, [[0.7, 0.3], [0.3, 0.7]])
        bob = sc.bob_ensemble()
        np.testing.assert_allclose(bob.states[0].matrix, np.diag([0.9, 0.1]), atol=1e-12)
        eve = sc.eve_ensemble()
        np.testing.assert_allclose(eve.states[1].matrix, np.diag([0.3, 0.7]), atol=1e-12)

    def test_bsc_pair_needs_two_params(self):
        with pytest.raises(ScenarioFormatError, match="two crossover"):
            load_scenario("bsc-pair", params=(0.1,))

    def test_round_trip(self, tmp_path):
        sc = paper_example(0.37)
        path = tmp_path / "scenario.json"
        save_scenario(sc, str(path))
        back = load_scenario(str(path))
        assert back.name == sc.name
        assert back.key_count == sc.key_count
        for a, b in zip(back.ensemble.states, sc.ensemble.states):
            assert np.abs(a.matrix - b.matrix).max() < 1e-12
        for a, b in zip(back.theta.kraus, sc.theta.kraus):
            assert np.abs(a - b).max() < 1e-12
        np.testing.assert_allclose(back.ensemble.prior, sc.ensemble.prior, atol=1e-15)

    def test_round_trip_with_classical_pair(self, tmp_path):
        sc = load_scenario("bsc-pair", params=(0.2, 0.4))
        path = tmp_path / "bsc.json"
        save_scenario(sc, str(path))
        back = load_scenario(str(path))
        np.testing.assert_allclose(back.classical_pair[0].matrix, [[0.8, 0.2], [0.2, 0.8]])
        for a, b in zip(back.theta.kraus, sc.theta.kraus):
            assert np.abs(a - b).max() < 1e-12

    def test_file_with_builtin_identity_channel(self, tmp_path):
        data = {
            "format": "qkdsim-scenario-v1",
            "name": "custom",
            "key_count": 2,
            "alphabet_size": 2,
            "states": {
                "0": [[1, 0], [0, 0], [0, 0], [0, 0]],
                "1": [[0, 0], [0, 0], [0, 0], [1, 0]],
            },
            "channel": {"builtin": "identity"},
            "output_dims": [2, 2],
        }
        path = tmp_path / "custom.json"
        path.write_text(json.dumps(data))
        sc = load_scenario(str(path))
        assert sc.name == "custom"
        np.testing.assert_allclose(sc.ensemble.prior, [0.5, 0.5])
        assert sc.theta.out_factorization.dims == (2, 2)
        code = main(["analyze", str(path), "--restarts", "1"])
        assert code == 0

    def test_missing_state_names_letter(self, tmp_path):
        data = scenario_to_dict(paper_example(0.5))
        del data["states"]["1"]
        with pytest.raises(ScenarioFormatError, match="letter 1"):
            scenario_from_dict(data)

    def test_missing_field_diagnostic(self):
        with pytest.raises(ScenarioFormatError, match="channel: field missing"):
            scenario_from_dict(
                {
                    "format": "qkdsim-scenario-v1",
                    "name": "x",
                    "key_count": 2,
                    "alphabet_size": 2,
                    "states": {},
                    "output_dims": [2, 2],
                }
            )

    def test_bad_json_reports_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{ not json")
        with pytest.raises(ScenarioFormatError, match="invalid JSON"):
            load_scenario(str(path))

    def test_unknown_builtin_or_path(self):
        with pytest.raises(ScenarioFormatError, match="no such scenario"):
            load_scenario("definitely-not-a-file.json")


class TestAnalyzeCommand:
    def test_example_satisfied(self, capsys, tmp_path):
        out = tmp_path / "report.json"
        code = main(
            ["analyze", "paper-example", "--overlap", "0.5", "--restarts", "2",
             "--out", str(out)]
        )
        assert code == 0
        text = capsys.readouterr().out
        assert "satisfied=true" in text
        payload = json.loads(out.read_text())
        assert payload["satisfied"] is True
        assert payload["quantum"]["lhs"] == pytest.approx(pure_pair_capacity(0.5), abs=1e-4)
        assert payload["quantum"]["rhs"] == pytest.approx(pure_pair_c1(0.5), abs=1e-3)

    def test_orthogonal_not_satisfied(self, capsys):
        code = main(["analyze", "paper-example", "--overlap", "0.0", "--restarts", "1"])
        assert code == 0
        assert "satisfied=false" in capsys.readouterr().out

    def test_bsc_pair_advantage(self, capsys, tmp_path):
        out = tmp_path / "bsc.json"
        code = main(["analyze", "bsc-pair", "0.1", "0.3", "--restarts", "1", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        oracle = binary_entropy(0.3) - binary_entropy(0.1)
        assert payload["classical"]["lhs"] == pytest.approx(oracle, abs=1e-4)
        assert payload["classical"]["satisfied"] is True

    def test_bsc_pair_equal_not_satisfied(self, capsys, tmp_path):
        out = tmp_path / "eq.json"
        code = main(["analyze", "bsc-pair", "0.2", "0.2", "--restarts", "1", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert abs(payload["classical"]["lhs"]) <= 1e-9
        assert payload["classical"]["satisfied"] is False

    def test_deterministic_json(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        argv = ["analyze", "paper-example", "--overlap", "0.3", "--restarts", "2",
                "--seed", "4"]
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_twelve_significant_digits(self, tmp_path):
        out = tmp_path / "digits.json"
        main(["analyze", "paper-example", "--overlap", "0.5", "--restarts", "1",
              "--out", str(out)])
        raw = out.read_text()
        lhs_line = [l for l in raw.splitlines() if '"lhs"' in l][0]
        digits = lhs_line.split(":")[1].strip().rstrip(",")
        assert len(digits.replace("0.", "")) <= 12

    def test_validation_error_exit_code(self, capsys):
        code = main(["analyze", "paper-example", "--overlap", "1.5"])
        assert code == 1
        assert "overlap" in capsys.readouterr().err

    def test_no_tmp_files_left(self, tmp_path):
        out = tmp_path / "r.json"
        main(["analyze", "orthogonal", "--restarts", "1", "--out", str(out)])
        assert out.exists()
        assert [p for p in os.listdir(tmp_path) if p.endswith(".tmp")] == []


class TestSimulateCommand:
    def test_example_simulation(self, capsys, tmp_path):
        out = tmp_path / "sim.json"
        code = main(
            ["simulate", "paper-example", "--overlap", "0.5", "-n", "3",
             "--coder", "repetition", "--eve", "default", "--restarts", "1",
             "--out", str(out)]
        )
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["p_agree"] == pytest.approx(0.996078, abs=1e-6)
        assert payload["eve_info"] == pytest.approx(0.900789, abs=1e-5)
        assert payload["quantum_satisfied"] is True
        assert "wall_time" not in json.dumps(payload)

    def test_orthogonal_perfect(self, capsys):
        code = main(["simulate", "orthogonal", "-n", "1", "--restarts", "1"])
        assert code == 0
        assert "p_agree=1.000000" in capsys.readouterr().out

    def test_optimized_zero_restarts_equals_default(self, tmp_path):
        base = ["simulate", "paper-example", "--overlap", "0.5", "-n", "2", "--seed", "3"]
        a, b = tmp_path / "d.json", tmp_path / "o.json"
        assert main(base + ["--eve", "default", "--restarts", "0", "--out", str(a)]) == 0
        assert main(base + ["--eve", "optimized", "--restarts", "0", "--out", str(b)]) == 0
        da, db = json.loads(a.read_text()), json.loads(b.read_text())
        assert da["p_agree"] == db["p_agree"]
        assert da["bob_info"] == db["bob_info"]
        assert da["eve_info"] == db["eve_info"]

    def test_budget_exit_code_names_dimension(self, capsys):
        code = main(["simulate", "paper-example", "-n", "9", "--restarts", "1"])
        assert code == 3
        err = capsys.readouterr().err
        assert "budget" in err and str(4**9) in err


class TestSweepCommand:
    def test_csv_columns_and_rows(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = main(
            ["sweep", "paper-example", "--overlap", "0.5", "--n-range", "1..2",
             "--seeds", "0", "--restarts", "1", "--format", "csv", "--out", str(out)]
        )
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "scenario,n,seed,coder,eve,p_agree,bob_info,eve_info,flags"
        assert len(lines) == 3
        assert lines[1].startswith("paper-example(s=0.5),1,0,repetition,default,")

    def test_empty_n_range_header_only(self, tmp_path):
        out = tmp_path / "empty.csv"
        code = main(
            ["sweep", "paper-example", "--n-range", "", "--seeds", "0",
             "--restarts", "1", "--format", "csv", "--out", str(out)]
        )
        assert code == 0
        assert out.read_text().strip() == "scenario,n,seed,coder,eve,p_agree,bob_info,eve_info,flags"

    def test_partial_failure_markers_and_exit_2(self, tmp_path, capsys):
        out = tmp_path / "partial.csv"
        code = main(
            ["sweep", "paper-example", "--n-range", "1,9", "--seeds", "0",
             "--restarts", "1", "--format", "csv", "--out", str(out)]
        )
        assert code == 2
        lines = out.read_text().strip().splitlines()
        assert any("error:" in l for l in lines)
        ok_rows = [l for l in lines[1:] if ",ok" in l]
        assert len(ok_rows) == 1

    def test_json_format(self, tmp_path):
        out = tmp_path / "sweep.json"
        code = main(
            ["sweep", "paper-example", "--n-range", "1", "--seeds", "0,1",
             "--restarts", "1", "--format", "json", "--out", str(out)]
        )
        assert code == 0
        payload = json.loads(out.read_text())
        assert len(payload["rows"]) == 2
        assert payload["rows"][0]["flags"] == "ok"

    def test_deterministic_csv(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["sweep", "paper-example", "--overlap", "0.4", "--n-range", "1..2",
                "--seeds", "0..1", "--eve", "optimized", "--restarts", "2", "--seed", "5",
                "--format", "csv"]
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestInfoCommands:
    def test_capacity(self, capsys, tmp_path):
        out = tmp_path / "cap.json"
        code = main(["capacity", "paper-example", "--overlap", "0.5", "--restarts", "1",
                     "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["capacity"] == pytest.approx(pure_pair_capacity(0.5), abs=1e-6)
        assert payload["chi"] == pytest.approx(pure_pair_capacity(0.5), abs=1e-6)

    def test_accessible(self, capsys, tmp_path):
        out = tmp_path / "acc.json"
        code = main(["accessible", "paper-example", "--overlap", "0.5", "--restarts", "1",
                     "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["c1"] == pytest.approx(pure_pair_c1(0.5), abs=1e-4)
        assert payload["accessible_information"] == pytest.approx(pure_pair_c1(0.5), abs=1e-4)
