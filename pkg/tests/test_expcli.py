import csv
import dataclasses
import os
import subprocess
import sys

import pytest

from flowsim.errors import ConfigError
from flowsim.expcli import emit_results, load_spec, parse_spec, run_experiment, verify_workflow
from flowsim.expcli.cli import main
from flowsim.expcli.experiment import RESULT_COLUMNS, ResultRow, config_for, default_jobs, results_csv, run_seed
from flowsim.expcli.specfile import shipped_specs
from flowsim.simengine import ScenarioKind

TINY = """
[scenario]
name = inter_network
nodes = 30
side = 40

[radio]
tx_range_m = 10

[sweep]
kind = side
values = 40, 60
groups = 1, 4

[runs]
runs = 3
base_seed = 5
"""


def _row(group, value, runs=1):
    zeros = {m: 0.0 for m in ("reachability", "packets", "simtime", "throughput", "energy", "collisions")}
    return ResultRow("inter_network", group, "side", value, runs, dict(zeros), dict(zeros))


class TestSpecParsing:
    def test_tiny(self):
        spec = parse_spec(TINY)
        assert spec.sweep_values == (40.0, 60.0)
        assert spec.groups == (1, 4)
        assert spec.radio.tx_range_override_m == 10.0
        assert spec.runs == 3 and spec.base_seed == 5

    def test_range_syntax(self):
        spec = parse_spec("[sweep]\nkind = tx_power\nvalues = -14:-2:1\n")
        assert spec.sweep_values == tuple(float(v) for v in range(-14, -1))

    def test_gateway_section(self):
        spec = parse_spec(TINY + "[gateway]\nfeatures = 3\nthreshold = 0.4\naccepted = 0, 2\n")
        assert spec.gateway.accepted_ids == {0, 2} and spec.gateway.threshold == 0.4

    @pytest.mark.parametrize(
        "text,line,field",
        [
            ("[scenario]\ncolour = red\n", 2, "colour"),
            ("[runs]\nruns = 0\n", 2, "runs"),
            ("[sweep]\nvalues = 3, 2\n", 2, "values"),
            ("[sweep]\nvalues =\n", 2, "values"),
            ("[radio]\ntx_power_dbm = loud\n", 2, "tx_power_dbm"),
            ("[scenario]\nnodes = 5\nnodes = 6\n", 3, "nodes"),
            ("[bogus]\n", 1, None),
            ("nodes = 5\n", 1, None),
            ("[scenario]\nname = mesh\n", 2, "name"),
        ],
    )
    def test_errors_carry_location(self, text, line, field):
        with pytest.raises(ConfigError) as info:
            parse_spec(text)
        assert info.value.line == line
        assert info.value.field == field
        assert f"line {line}" in str(info.value)

    def test_groups_out_of_range(self):
        with pytest.raises(ConfigError):
            parse_spec("[sweep]\ngroups = 0, 5\n")

    def test_shipped_specs_parse(self):
        names = [p.stem for p in shipped_specs()]
        assert names == [f"fig{i}" for i in range(13, 20)]
        for p in shipped_specs():
            spec = load_spec(p)
            assert spec.runs >= 70

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_spec(tmp_path / "nope.spec")


class TestExperiment:
    def test_single_cell_has_zero_std(self):
        spec = dataclasses.replace(parse_spec(TINY), runs=1, sweep_values=(40.0,), groups=(1,))
        rows = run_experiment(spec).rows
        assert len(rows) == 1
        assert all(v == 0.0 for v in rows[0].std.values())
        assert rows[0].runs == 1

    def test_seeds_distinct_and_stable(self):
        spec = parse_spec(TINY)
        seeds = {run_seed(spec, v, g, r) for v in spec.sweep_values for g in spec.groups for r in range(spec.runs)}
        assert len(seeds) == 2 * 2 * 3
        wider = dataclasses.replace(spec, sweep_values=(40.0, 50.0, 60.0))
        assert run_seed(wider, 60.0, 4, 2) == run_seed(spec, 60.0, 4, 2)

    def test_placement_shared_across_groups_and_sweep(self):
        spec = parse_spec(TINY)
        a, b = config_for(spec, 40.0, 1, 2), config_for(spec, 60.0, 4, 2)
        assert a.placement_seed == b.placement_seed and a.seed != b.seed

    def test_sweep_kinds_map_to_config(self):
        base = parse_spec(TINY)
        assert config_for(dataclasses.replace(base, sweep_kind="tx_power"), -5.0, 1, 0).radio.tx_power_dbm == -5.0
        assert config_for(dataclasses.replace(base, sweep_kind="nodes"), 70, 1, 0).n_sensors == 70
        assert config_for(dataclasses.replace(base, sweep_kind="density"), 0.01, 1, 0).n_sensors == 16
        assert config_for(base, 60.0, 1, 0).side == 60.0

    def test_parallel_matches_serial(self):
        spec = parse_spec(TINY)
        assert results_csv(run_experiment(spec, jobs=2).rows) == results_csv(run_experiment(spec).rows)

    def test_rows_sorted_by_group_then_value(self, tmp_path):
        rows = [_row(4, 60.0), _row(1, 60.0), _row(4, 40.0), _row(1, 40.0)]
        emit_results(rows, tmp_path)
        with open(tmp_path / "results.csv") as fh:
            body = list(csv.reader(fh))
        assert tuple(body[0]) == RESULT_COLUMNS
        assert [(r[1], r[3]) for r in body[1:]] == [("1", "40"), ("1", "60"), ("4", "40"), ("4", "60")]

    def test_one_row_csv(self, tmp_path):
        emit_results([_row(1, 40.0)], tmp_path)
        assert len((tmp_path / "results.csv").read_text().splitlines()) == 2
        assert (tmp_path / "results.txt").exists()

    def test_reemit_identical(self, tmp_path):
        rows = run_experiment(parse_spec(TINY)).rows
        emit_results(rows, tmp_path / "a")
        emit_results(rows, tmp_path / "b")
        for name in ("results.csv", "results.txt"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_empty_rows_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_results([], tmp_path)

    def test_jobs_env_override(self, monkeypatch):
        monkeypatch.setenv("FLOWSIM_JOBS", "3")
        assert default_jobs(1) == 3
        monkeypatch.delenv("FLOWSIM_JOBS")
        assert default_jobs(None) == 1 and default_jobs(4) == 4


class TestVerifyWorkflow:
    def test_default_holds(self):
        report, ok = verify_workflow(3)
        assert ok and report.count(": holds") == 3

    def test_mutant_reports_ltl2(self):
        report, ok = verify_workflow(3, "drop-translation-edge")
        assert not ok
        assert "LTL2" in report and "counterexample: LTL2" in report

    def test_coverage_lists_all_tasks(self):
        report, _ = verify_workflow(4)
        assert "F1=yes, F2=yes, F3=yes, F4=yes" in report


class TestCli:
    def test_run_writes_outputs(self, tmp_path, capsys):
        spec = tmp_path / "tiny.spec"
        spec.write_text(TINY)
        assert main(["run", "--spec", str(spec), "--out", str(tmp_path / "out")]) == 0
        assert (tmp_path / "out" / "results.csv").exists()

    def test_run_gateway_actions(self, tmp_path):
        spec = tmp_path / "gw.spec"
        spec.write_text(TINY + "[gateway]\nfeatures = 4\n")
        assert main(["run", "--spec", str(spec), "--out", str(tmp_path / "out")]) == 0
        header = (tmp_path / "out" / "actions.csv").read_text().splitlines()[0]
        assert header == "feature_id,data_value,thres_value,exceeds,run_seed"

    def test_config_error_exit_2(self, tmp_path, capsys):
        spec = tmp_path / "bad.spec"
        spec.write_text("[scenario]\nnodes = many\n")
        assert main(["run", "--spec", str(spec), "--out", str(tmp_path)]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_unwritable_output(self, tmp_path):
        spec = tmp_path / "tiny.spec"
        spec.write_text(TINY)
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["run", "--spec", str(spec), "--out", str(blocker / "sub")]) != 0

    def test_verify_exit_codes(self, capsys):
        assert main(["verify", "--tasks", "3"]) == 0
        assert main(["verify", "--tasks", "3", "--mutate", "drop-translation-edge"]) == 1
        assert "counterexample: LTL2" in capsys.readouterr().out

    def test_topo_csv(self, tmp_path):
        out = tmp_path / "t.csv"
        assert main(["topo", "--seed", "3", "--scenario", "multicast", "--sensors", "20", "--out", str(out)]) == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["id", "kind", "x", "y", "network_id"]
        assert len(rows) == 25

    def test_console_script_module(self):
        proc = subprocess.run(
            [sys.executable, "-m", "flowsim", "verify", "--tasks", "2"],
            capture_output=True, text=True, env={**os.environ},
        )
        assert proc.returncode == 0 and "LTL3" in proc.stdout


def test_scenario_kinds_cover_placements():
    assert {k.placement.value for k in ScenarioKind} == {"inter_network", "multicast"}
