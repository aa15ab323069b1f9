"""Scenario loading, output files, and the command-line front end."""

from __future__ import annotations

import copy
import json
import re

import pytest

from solitonsim.cli import main
from solitonsim.errors import ScenarioError
from solitonsim.scenario import (
    bundled_scenario_names,
    evaluate_scenario,
    load_bundled_scenario,
    load_scenario,
    parse_scenario,
    run_scenario,
)

# Small chain, short run: enough to produce one pulse at v(2) quickly.
BASE_DOC = {
    "name": "probe_run",
    "builder": {"kind": "chain", "n_segments": 2},
    "stimuli": [
        {"node": "A", "amplitude": 6.0e-9, "t_start": 0.5e-3, "duration": 0.2e-3}
    ],
    "probes": ["v(2)", "v(3)"],
    "config": {"t_end": 5.0e-3},
}


def make_doc(**overrides):
    doc = copy.deepcopy(BASE_DOC)
    doc.update(overrides)
    return doc


# =====================================================================
# Schema validation: every violation names its field path
# =====================================================================


def test_parse_accepts_base_document():
    scenario = parse_scenario(make_doc())
    assert scenario.name == "probe_run"
    assert scenario.builder_kind == "chain"
    assert scenario.builder_args["n_segments"] == 2
    assert scenario.probes == ("v(2)", "v(3)")
    assert scenario.config.t_end == pytest.approx(5.0e-3)
    assert scenario.stimuli[0].amplitude == pytest.approx(6.0e-9)


def broken_documents():
    cases = []

    doc = make_doc()
    del doc["name"]
    cases.append(("missing_name", doc, "name:"))

    doc = make_doc(name="bad/name")
    cases.append(("unsafe_name", doc, "name:"))

    doc = make_doc()
    doc["frob"] = 1
    cases.append(("unknown_top_level", doc, "frob: unknown field"))

    doc = make_doc(builder={"kind": "ring", "n_segments": 2})
    cases.append(("unknown_builder_kind", doc, "builder.kind:"))

    doc = make_doc(builder={"kind": "chain"})
    cases.append(("missing_builder_arg", doc, "builder.n_segments: required"))

    doc = make_doc(builder={"kind": "chain", "n_segments": 2, "twist": 1})
    cases.append(("unknown_builder_arg", doc, "builder.twist: unknown field"))

    doc = make_doc(builder={"kind": "chain", "n_segments": 0})
    cases.append(("unbuildable_chain", doc, "builder:"))

    doc = make_doc(stimuli={"node": "A"})
    cases.append(("stimuli_not_list", doc, "stimuli: expected a list"))

    doc = make_doc()
    doc["stimuli"][0]["amplitude"] = "1e-6"  # a string, as unquoted YAML 1.1 yields
    cases.append(("string_amplitude", doc, "stimuli[0].amplitude: expected a number"))

    doc = make_doc()
    doc["stimuli"][0]["amplitude"] = True
    cases.append(("bool_amplitude", doc, "stimuli[0].amplitude: expected a number"))

    doc = make_doc()
    doc["stimuli"][0]["duration"] = -1.0e-3
    cases.append(("negative_duration", doc, "stimuli[0]:"))

    doc = make_doc()
    doc["stimuli"].append({"node": "Q9", "amplitude": 1.0e-9})
    cases.append(("unknown_stimulus_node", doc, "stimuli[1].node:"))

    doc = make_doc(probes=[])
    cases.append(("empty_probes", doc, "probes: expected a non-empty list"))

    doc = make_doc(probes=["v(2)", "v(99)"])
    cases.append(("unknown_probe", doc, "probes[1]:"))

    doc = make_doc(config={"t_end": 5.0e-3, "integrator": "rk4"})
    cases.append(("unknown_integrator", doc, "config.integrator:"))

    doc = make_doc(config={"dt": -1.0e-6})
    cases.append(("negative_dt", doc, "config:"))

    doc = make_doc(analysis={"truth_table": {"inputs": ["A", "Z"]}})
    cases.append(("truth_table_no_output", doc, "analysis.truth_table.output:"))

    doc = make_doc(analysis={"dispersion": {"early": "v(2)", "late": "v(77)"}})
    cases.append(("dispersion_bad_label", doc, "analysis.dispersion:"))

    return cases


@pytest.mark.parametrize(
    "doc,fragment",
    [pytest.param(doc, frag, id=name) for name, doc, frag in broken_documents()],
)
def test_schema_violations_name_the_field(doc, fragment):
    with pytest.raises(ScenarioError, match=re.escape(fragment)):
        parse_scenario(doc)


def test_load_scenario_from_file(tmp_path):
    path = tmp_path / "probe_run.yaml"
    path.write_text(
        "name: probe_run\n"
        "builder: {kind: chain, n_segments: 2}\n"
        "stimuli:\n"
        "  - {node: A, amplitude: 6.0e-9, t_start: 0.5e-3, duration: 0.2e-3}\n"
        "probes: [v(2), v(3)]\n"
        "config: {t_end: 5.0e-3}\n"
    )
    scenario = load_scenario(path)
    assert scenario.name == "probe_run"
    assert len(scenario.sha256) == 64
    # error messages carry the source path
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: x\nbuilder: {kind: nope}\n")
    with pytest.raises(ScenarioError, match="bad.yaml"):
        load_scenario(bad)


def test_load_scenario_rejects_non_yaml(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("{unbalanced: [\n")
    with pytest.raises(ScenarioError, match="not valid YAML"):
        load_scenario(path)


def test_load_scenario_missing_file(tmp_path):
    with pytest.raises(ScenarioError, match="not readable"):
        load_scenario(tmp_path / "absent.yaml")


# =====================================================================
# Bundled scenarios
# =====================================================================


def test_bundled_names():
    assert bundled_scenario_names() == [
        "fig11_or",
        "fig13_xor",
        "fig14_and",
        "fig16_taper",
        "fig1_patch",
        "fig7_chain",
        "fig8_reflection",
        "fig9_collision",
    ]


@pytest.mark.parametrize("name", bundled_scenario_names())
def test_bundled_scenarios_validate(name):
    scenario = load_bundled_scenario(name)
    assert scenario.name == name
    assert len(scenario.sha256) == 64


def test_unknown_bundled_name():
    with pytest.raises(ScenarioError, match="no bundled scenario"):
        load_bundled_scenario("fig99_missing")


# =====================================================================
# Output files
# =====================================================================


@pytest.fixture(scope="module")
def written(tmp_path_factory):
    out = tmp_path_factory.mktemp("out")
    scenario = parse_scenario(make_doc())
    csv_path, summary_path = run_scenario(scenario, out)
    return scenario, csv_path, summary_path


def test_csv_header_and_shape(written):
    scenario, csv_path, _ = written
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "t_s,v(2),v(3)"
    run = evaluate_scenario(scenario)
    assert len(lines) - 1 == len(run.waveform.times)
    for line in lines[1:]:
        assert len(line.split(",")) == 3


def test_csv_units_and_precision(written):
    _, csv_path, _ = written
    first = csv_path.read_text().splitlines()[1].split(",")
    # rest state at t=0, written in volts with 9 significant digits
    assert first[0] == "0"
    assert first[1] == "-0.07"
    # all values re-render identically under the same format
    for line in csv_path.read_text().splitlines()[1:]:
        for fieldtext in line.split(","):
            assert "%.9g" % float(fieldtext) == fieldtext


def test_summary_structure(written):
    scenario, _, summary_path = written
    summary = json.loads(summary_path.read_text())
    assert set(summary) == {"scenario", "resolved", "analysis"}
    assert summary["scenario"]["name"] == "probe_run"
    resolved = summary["resolved"]
    assert resolved["builder"] == {"kind": "chain", "n_segments": 2}
    assert set(resolved["params"]) == {
        "v_rest",
        "v_trigger",
        "v_na_cutoff",
        "v_k_cutoff",
        "j_na",
        "j_k",
        "c_mem",
        "g_mem",
        "rho_internal",
    }
    assert resolved["config"]["integrator"] == "trapezoidal"
    assert resolved["stimuli"][0]["node"] == "A"
    assert resolved["probes"] == ["v(2)", "v(3)"]
    # pulse lists exist for every probe; the driven node fired
    pulses = summary["analysis"]["pulses"]
    assert set(pulses) == {"v(2)", "v(3)"}
    assert len(pulses["v(2)"]) == 1
    assert pulses["v(2)"][0]["v_peak_mv"] > 40.0


def test_outputs_are_byte_deterministic(tmp_path):
    scenario = parse_scenario(make_doc())
    csv_a, json_a = run_scenario(scenario, tmp_path / "a")
    csv_b, json_b = run_scenario(scenario, tmp_path / "b")
    assert csv_a.read_bytes() == csv_b.read_bytes()
    assert json_a.read_bytes() == json_b.read_bytes()


def test_reflection_analysis_block(tmp_path):
    doc = make_doc(analysis={"reflection": {"node": "v(2)"}})
    scenario = parse_scenario(doc)
    run = evaluate_scenario(scenario)
    block = run.summary["analysis"]["reflection"]
    assert block["node"] == "v(2)"
    assert block["pulse_count"] == 1
    assert block["reflected"] is False


# =====================================================================
# Command line
# =====================================================================


def write_base_yaml(tmp_path, name="cli_case"):
    path = tmp_path / f"{name}.yaml"
    path.write_text(
        f"name: {name}\n"
        "builder: {kind: chain, n_segments: 2}\n"
        "stimuli:\n"
        "  - {node: A, amplitude: 6.0e-9, t_start: 0.5e-3, duration: 0.2e-3}\n"
        "probes: [v(2), v(3)]\n"
        "config: {t_end: 5.0e-3}\n"
    )
    return path


def test_cli_run_explicit_path(tmp_path, capsys):
    path = write_base_yaml(tmp_path)
    code = main(["run", str(path), "--out-dir", str(tmp_path / "out")])
    assert code == 0
    assert (tmp_path / "out" / "cli_case.csv").is_file()
    assert (tmp_path / "out" / "cli_case.summary.json").is_file()
    printed = capsys.readouterr().out
    assert "cli_case.csv" in printed


def test_cli_run_path_without_suffix(tmp_path):
    path = write_base_yaml(tmp_path)
    stem = str(path)[: -len(".yaml")]
    assert main(["run", stem, "--out-dir", str(tmp_path / "out")]) == 0


def test_cli_run_bundled_name(tmp_path):
    assert main(["run", "fig1_patch", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "fig1_patch.csv").is_file()


def test_cli_run_missing_scenario(tmp_path, capsys):
    assert main(["run", str(tmp_path / "ghost.yaml")]) == 2
    assert "error:" in capsys.readouterr().err


def test_cli_run_invalid_scenario(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: bad\nbuilder: {kind: chain}\nprobes: [v(2)]\n")
    assert main(["run", str(bad), "--out-dir", str(tmp_path)]) == 2
    assert "builder.n_segments" in capsys.readouterr().err


def test_cli_run_solver_failure_exit_code(tmp_path, capsys):
    # an absurd drive overflows the transient solve on the first steps
    path = tmp_path / "blowup.yaml"
    path.write_text(
        "name: blowup\n"
        "builder: {kind: chain, n_segments: 2}\n"
        "stimuli:\n"
        "  - {node: A, amplitude: 1.0e+300, t_start: 0.1e-3, duration: 1.0e-3}\n"
        "probes: [v(2)]\n"
        "config: {t_end: 2.0e-3}\n"
    )
    assert main(["run", str(path), "--out-dir", str(tmp_path)]) == 3
    assert "solver failure" in capsys.readouterr().err


def test_cli_sweep_writes_csv(tmp_path, capsys):
    path = write_base_yaml(tmp_path)
    code = main(
        [
            "sweep",
            str(path),
            "--param",
            "amplitude",
            "--from",
            "2e-9",
            "--to",
            "6e-9",
            "--steps",
            "2",
            "--metric",
            "logic",
            "--out-dir",
            str(tmp_path),
        ]
    )
    assert code == 0
    csv_path = tmp_path / "cli_case_sweep_amplitude_logic.csv"
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "amplitude,logic"
    assert lines[1] == "2e-09,0"
    assert lines[2] == "6e-09,1"


def test_cli_sweep_unknown_param(tmp_path, capsys):
    path = write_base_yaml(tmp_path)
    code = main(
        ["sweep", str(path), "--param", "bogus", "--from", "1", "--to", "2", "--steps", "2", "--metric", "logic"]
    )
    assert code == 2
    assert "unknown sweep parameter" in capsys.readouterr().err


def test_cli_sweep_unknown_metric(tmp_path, capsys):
    path = write_base_yaml(tmp_path)
    code = main(
        ["sweep", str(path), "--param", "amplitude", "--from", "1", "--to", "2", "--steps", "2", "--metric", "sparkle"]
    )
    assert code == 2
    assert "unknown sweep metric" in capsys.readouterr().err


def test_cli_requires_a_command():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
