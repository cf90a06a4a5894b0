import json
from pathlib import Path

import numpy as np
import pytest

from qfilter import DensityOperator, KrausFamily, MeasurementStep, ErrorModel
from qfilter.cli import main
from qfilter.config import (
    build_steps,
    config_to_dict,
    load_config,
    parse_config,
    resolve_states,
)
from qfilter.errors import ConfigError
from qfilter import serialize
from qfilter.stability import random_density_operator, random_kraus_family

REPO = Path(__file__).resolve().parent.parent
CONFIGS = REPO / "configs"


class TestSerializeRoundTrip:
    def test_matrix_round_trip(self, rng):
        m = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        back = serialize.matrix_from_dict(serialize.matrix_to_dict(m))
        assert np.array_equal(back, m)  # bit-exact

    def test_density_round_trip(self, rng):
        rho = random_density_operator(rng, 4)
        back = serialize.density_from_dict(serialize.density_to_dict(rho))
        assert np.array_equal(back.matrix, rho.matrix)

    def test_kraus_family_round_trip(self, rng):
        family = random_kraus_family(rng, 3, 4)
        back = serialize.kraus_family_from_dict(
            serialize.kraus_family_to_dict(family)
        )
        assert np.array_equal(back.operators, family.operators)
        assert back.completeness_tolerance == family.completeness_tolerance

    def test_step_round_trip(self, two_level_step):
        back = serialize.step_from_dict(serialize.step_to_dict(two_level_step))
        assert np.array_equal(back.errors.eta, two_level_step.errors.eta)
        assert back.label == two_level_step.label

    def test_full_precision_floats(self):
        value = 0.1 + 0.2  # 0.30000000000000004
        m = np.array([[value + 0j]])
        text = serialize.dumps(serialize.matrix_to_dict(m))
        assert "0.30000000000000004" in text


class TestConfig:
    def test_shipped_configs_parse(self):
        for name in (
            "two_level.json",
            "two_level_filter.json",
            "photonbox_small.json",
            "verify_small.json",
        ):
            config = load_config(CONFIGS / name)
            assert config.horizon >= 1

    def test_round_trip_identity(self):
        raw = json.loads((CONFIGS / "two_level.json").read_text())
        config = parse_config(raw)
        assert config_to_dict(config) == raw
        # serialize -> parse -> identical dict
        assert parse_config(json.loads(json.dumps(raw))).raw == raw

    def test_schema_violation_has_path(self, tmp_path):
        bad = {"model": {"type": "generic", "steps": []}, "initial": {}, "horizon": 1}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(bad))
        with pytest.raises(ConfigError) as err:
            load_config(path)
        assert "bad.json" in str(err.value)

    def test_json_error_has_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"model": ')
        with pytest.raises(ConfigError) as err:
            load_config(path)
        assert "line" in str(err.value)

    def test_build_steps_cycles(self):
        config = load_config(CONFIGS / "two_level.json")
        steps = build_steps(config.model, 7)
        assert len(steps) == 7
        assert all(s.m_real == 2 for s in steps)

    def test_build_steps_photonbox(self):
        config = load_config(CONFIGS / "photonbox_small.json")
        steps = build_steps(config.model, 3)
        assert len(steps) == 3
        assert steps[0].family.count == 21
        assert steps[0].m_real == 6

    def test_resolve_states(self):
        config = load_config(CONFIGS / "photonbox_small.json")
        true_state, filters, dim = resolve_states(config)
        assert dim == 11
        assert true_state.matrix[0, 0] == pytest.approx(1.0)
        assert filters["agnostic"].matrix[0, 0] == pytest.approx(1 / 11)

    def test_alpha_schedule(self):
        model = {
            "type": "photonbox",
            "params": {"n_max": 4},
            "alpha": [[0.1, 0.0], [0.2, 0.0]],
        }
        steps = build_steps(model, 2)
        assert steps[0].family is not steps[1].family
        with pytest.raises(ConfigError):
            build_steps(model, 3)  # schedule too short


class TestCli:
    def test_filter_worked_example(self, tmp_path):
        out = tmp_path / "run"
        code = main(
            [
                "filter",
                "--config", str(CONFIGS / "two_level_filter.json"),
                "--outcomes", str(CONFIGS / "two_level_single_outcome.json"),
                "--out", str(out),
            ]
        )
        assert code == 0
        lines = (out / "filter.jsonl").read_text().splitlines()
        header = json.loads(lines[0])
        step = json.loads(lines[1])
        assert header["type"] == "filter_header"
        estimate = serialize.matrix_from_dict(step["estimate"])
        assert np.abs(estimate - np.diag([0.9, 0.1])).max() < 1e-14
        assert step["predicted"] == pytest.approx([0.5, 0.5])

    def test_filter_empty_outcomes(self, tmp_path):
        outcomes = tmp_path / "empty.json"
        outcomes.write_text('{"outcomes": []}')
        out = tmp_path / "run"
        code = main(
            [
                "filter",
                "--config", str(CONFIGS / "two_level_filter.json"),
                "--outcomes", str(outcomes),
                "--out", str(out),
            ]
        )
        assert code == 0
        lines = (out / "filter.jsonl").read_text().splitlines()
        assert len(lines) == 1  # header with the initial state only
        assert json.loads(lines[0])["type"] == "filter_header"

    def test_simulate_deterministic_across_runs(self, tmp_path):
        blobs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            code = main(
                [
                    "simulate",
                    "--config", str(CONFIGS / "two_level.json"),
                    "--out", str(out),
                ]
            )
            assert code == 0
            blobs.append((out / "trajectories.jsonl").read_bytes())
        assert blobs[0] == blobs[1]

    def test_simulate_seed_override_changes_output(self, tmp_path):
        outs = []
        for sub, seed in (("a", "7"), ("b", "8")):
            out = tmp_path / sub
            main(
                [
                    "simulate",
                    "--config", str(CONFIGS / "two_level.json"),
                    "--seed", seed,
                    "--out", str(out),
                ]
            )
            outs.append((out / "trajectories.jsonl").read_bytes())
        assert outs[0] != outs[1]

    def test_verify_small_gate_passes(self, tmp_path):
        out = tmp_path / "verify"
        code = main(
            [
                "verify",
                "--config", str(CONFIGS / "verify_small.json"),
                "--out", str(out),
                "--check", "ideal-reduction",
                "--check", "determinism",
            ]
        )
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["passed"]
        assert {s["name"] for s in report["suites"]} == {
            "ideal_reduction", "determinism",
        }

    def test_corrupted_error_model_surfaces(self, tmp_path):
        raw = json.loads((CONFIGS / "two_level.json").read_text())
        raw["model"]["steps"][0]["eta"]["rows"] = [[0.9, 0.1], [0.2, 0.9]]
        path = tmp_path / "corrupt.json"
        path.write_text(json.dumps(raw))
        code = main(
            ["simulate", "--config", str(path), "--out", str(tmp_path / "o")]
        )
        assert code == 1  # config error: column sums deviate

    def test_unknown_check_fails_with_code_2(self, tmp_path):
        code = main(
            [
                "verify",
                "--config", str(CONFIGS / "verify_small.json"),
                "--out", str(tmp_path),
                "--check", "no-such-suite",
            ]
        )
        assert code == 2
        report = json.loads((tmp_path / "report.json").read_text())
        assert not report["passed"]

    def test_usage_error_exit_code(self, capsys):
        assert main(["filter"]) == 1  # missing required arguments

    def test_missing_config_exit_code(self, tmp_path):
        code = main(
            [
                "simulate",
                "--config", str(tmp_path / "absent.json"),
                "--out", str(tmp_path),
            ]
        )
        assert code == 1

    def test_tolerance_override_parsing(self, tmp_path):
        code = main(
            [
                "simulate",
                "--config", str(CONFIGS / "two_level.json"),
                "--out", str(tmp_path / "o"),
                "--tolerance", "psd=1e-8",
            ]
        )
        assert code == 0
        code = main(
            [
                "simulate",
                "--config", str(CONFIGS / "two_level.json"),
                "--out", str(tmp_path / "o2"),
                "--tolerance", "bogus=1",
            ]
        )
        assert code == 1

    def test_photonbox_export(self, tmp_path):
        code = main(
            ["photonbox-export", "--out", str(tmp_path), "--alpha", "0.3", "0.0"]
        )
        assert code == 0
        payload = json.loads((tmp_path / "operators.json").read_text())
        assert len(payload["composite_kraus"]["operators"]) == 21
        assert payload["detection_error_model"]["m_real"] == 6
        ge = serialize.matrix_from_dict(payload["elementary_operators"]["ge"])
        eg = serialize.matrix_from_dict(payload["elementary_operators"]["eg"])
        assert np.array_equal(ge, eg)
