"""Command-line interface: outputs, exit codes, determinism."""
import json
import re

import pytest

from qkdplan.cli import (
    EXIT_INFEASIBLE,
    EXIT_INPUT_ERROR,
    EXIT_MODEL_DOMAIN,
    EXIT_OK,
    bundled_scenarios,
    main,
)
from qkdplan.router import solution_from_csv


def table_value(stdout: str, key: str) -> str:
    match = re.search(rf"\| {re.escape(key)} \| ([^|]+) \|", stdout)
    assert match, f"{key} not found in:\n{stdout}"
    return match.group(1).strip()


class TestRateCommand:
    def test_geo_column(self, capsys):
        assert main(["rate", "geo-gs", "--distance", "39000e3"]) == EXIT_OK
        out = capsys.readouterr().out
        assert float(table_value(out, "gain_signal_q_mu")) == pytest.approx(1.27e-5, rel=0.10)
        assert float(table_value(out, "qber_signal_e_mu_percent")) == pytest.approx(6.68, rel=0.02)
        assert 5 <= float(table_value(out, "secret_key_rate_bps")) <= 20

    def test_leo_column_gain(self, capsys):
        assert main(["rate", "leo-gs", "--distance", "1000e3"]) == EXIT_OK
        out = capsys.readouterr().out
        assert float(table_value(out, "gain_signal_q_mu")) == pytest.approx(1.96e-3, rel=0.10)
        assert float(table_value(out, "qber_signal_e_mu_percent")) == pytest.approx(0.04, abs=0.01)
        assert float(table_value(out, "total_attenuation_db")) == pytest.approx(21.9, abs=0.1)

    def test_decoy_override_matches_reference_cell(self, capsys):
        # the published leo-gs decoy gain corresponds to nu = 0.05
        assert main(["rate", "leo-gs", "--nu", "0.05"]) == EXIT_OK
        out = capsys.readouterr().out
        assert float(table_value(out, "gain_decoy_q_nu")) == pytest.approx(3.28e-4, rel=0.05)

    def test_near_field_distance_exits_3(self, capsys):
        assert main(["rate", "leo-gs", "--distance", "1"]) == EXIT_MODEL_DOMAIN
        assert "far-field" in capsys.readouterr().err

    def test_unknown_preset_exits_1(self, capsys):
        assert main(["rate", "meo-gs"]) == EXIT_INPUT_ERROR
        assert "unknown preset" in capsys.readouterr().err

    def test_bad_flag_exits_1(self, capsys):
        assert main(["rate", "geo-gs", "--warp", "9"]) == EXIT_INPUT_ERROR

    def test_invalid_protocol_override_exits_1(self, capsys):
        assert main(["rate", "geo-gs", "--nu", "0.7"]) == EXIT_INPUT_ERROR


class TestPlanCommand:
    def test_bundled_names_resolve(self):
        names = bundled_scenarios()
        assert "fig3like" in names and "overdemand" in names

    def test_mmd_on_fig3like(self, capsys):
        assert main(["plan", "fig3like", "--objective", "mmd"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "# qkdplan plan report" in out
        assert "| A->B |" in out
        assert out.rstrip().splitlines()[-1].endswith("| 600 |")  # min fulfilled

    def test_mr_with_no_requests_is_trivial(self, capsys):
        assert main(["plan", "empty-pairs", "--objective", "mr"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "| 0 | 0 | 0 | 0 |" in out

    def test_overdemand_exits_2(self, capsys):
        assert main(["plan", "overdemand", "--objective", "mr"]) == EXIT_INFEASIBLE
        assert "infeasible" in capsys.readouterr().err

    def test_missing_scenario_exits_1(self, capsys):
        assert main(["plan", "no-such-file.json", "--objective", "mmd"]) == EXIT_INPUT_ERROR
        assert "bundled" in capsys.readouterr().err

    def test_schema_error_diagnostics(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"nodes": [{"id": "g1", "kind": "blimp"}], "links": []}))
        assert main(["plan", str(bad), "--objective", "mmd"]) == EXIT_INPUT_ERROR
        err = capsys.readouterr().err
        assert "nodes[0].kind" in err

    def test_deterministic_stdout(self, capsys):
        assert main(["plan", "fig3like", "--objective", "mmd"]) == EXIT_OK
        first = capsys.readouterr().out
        assert main(["plan", "fig3like", "--objective", "mmd"]) == EXIT_OK
        second = capsys.readouterr().out
        assert first == second

    def test_csv_output_round_trips(self, tmp_path, capsys):
        out_file = tmp_path / "plan.csv"
        rc = main(
            ["plan", "fig3like", "--objective", "mr", "--format", "csv", "--out", str(out_file)]
        )
        assert rc == EXIT_OK
        parsed = solution_from_csv(out_file.read_text())
        assert parsed.total_flow == 15600
        assert parsed.demands == tuple([600.0] * 10)

    def test_csv_to_stdout(self, capsys):
        assert main(["plan", "micro-line", "--objective", "mr", "--format", "csv"]) == EXIT_OK
        out = capsys.readouterr().out
        parsed = solution_from_csv(out)
        assert parsed.demands == (6.0,)

    def test_dijkstra_objective(self, capsys):
        assert main(["plan", "order-demo", "--objective", "dijkstra"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "| A->D | 2000 |" in out
        assert "| B->D | 1600 |" in out

    def test_lp_tolerance_env(self, capsys, monkeypatch):
        monkeypatch.setenv("QKDPLAN_LP_TOL", "1e-7")
        assert main(["plan", "micro-shared", "--objective", "mmd"]) == EXIT_OK
        monkeypatch.setenv("QKDPLAN_LP_TOL", "not-a-number")
        assert main(["plan", "micro-shared", "--objective", "mmd"]) == EXIT_INPUT_ERROR

    def test_timing_goes_to_stderr(self, capsys):
        assert main(["plan", "micro-line", "--objective", "mmd"]) == EXIT_OK
        captured = capsys.readouterr()
        assert "wall-clock" in captured.err
        assert "wall-clock" not in captured.out

    def test_gs_relay_false_scenario(self, tmp_path, capsys):
        doc = {
            "nodes": [
                {"id": "a", "kind": "gs"},
                {"id": "b", "kind": "gs"},
                {"id": "c", "kind": "gs"},
                {"id": "s1", "kind": "leo"},
                {"id": "s2", "kind": "leo"},
            ],
            "links": [
                {"a": "a", "b": "s1", "rate_bps": 10},
                {"a": "s1", "b": "c", "rate_bps": 10},
                {"a": "c", "b": "s2", "rate_bps": 10},
                {"a": "s2", "b": "b", "rate_bps": 10},
            ],
            "elapsed_seconds": 1,
            "requests": [{"src": "a", "dst": "b", "demand_bits": 5}],
            "options": {"gs_relay": False},
        }
        path = tmp_path / "norelay.json"
        path.write_text(json.dumps(doc))
        assert main(["plan", str(path), "--objective", "mr"]) == EXIT_INFEASIBLE


class TestMicroScenarios:
    """The bundled micro scenarios carry brute-force-verified optima."""

    def test_micro_line_optimum(self, capsys):
        assert main(["plan", "micro-line", "--objective", "mmd"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "| g1->g2 | 6 |" in out

    def test_micro_shared_optimum(self, capsys):
        assert main(["plan", "micro-shared", "--objective", "mmd"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "| a->b | 5 |" in out
        assert "| c->d | 5 |" in out

    def test_micro_diamond_optimum(self, capsys):
        assert main(["plan", "micro-diamond", "--objective", "mmd"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "| a->b | 6 |" in out
