"""Declarative scenario files: load, validate, run, serialize.

A scenario is one YAML document describing a topology builder, stimuli,
probes, solver settings, and requested analyses.  Loading validates the
whole document and reports the first offending field by its path
(``stimuli[1].amplitude: expected a number``).  Running produces two
files: ``<name>.csv`` with the probed waveforms (seconds and volts, 9
significant digits) and ``<name>.summary.json`` with the resolved
parameter set and analysis results.  Both outputs are byte-deterministic
for a given scenario and package version.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import yaml

from .analysis import DEFAULT_THRESHOLD_MV, detect_pulses, dispersion_metric, truth_table
from .engine import Integrator, SimConfig, Waveform, simulate
from .errors import InvalidSpecError, NotApplicableError, ScenarioError
from .membrane import MembraneParams, SegmentSpec
from .network import (
    Stimulus,
    Topology,
    build_and_gate,
    build_chain,
    build_junction,
    build_taper,
)

BUILDER_KINDS = ("chain", "junction", "and_gate", "taper")

_BUILDER_FIELDS: dict[str, dict[str, bool]] = {
    # arg name -> required
    "chain": {"n_segments": True, "terminal_extra_c": False},
    "junction": {"branch_len": True, "trunk_len": True, "junction_c_scale": False},
    "and_gate": {},
    "taper": {"n_segments": True, "d_start": True, "d_end": True},
}

_PARAM_FIELDS = (
    "v_rest",
    "v_trigger",
    "v_na_cutoff",
    "v_k_cutoff",
    "j_na",
    "j_k",
    "c_mem",
    "g_mem",
    "rho_internal",
)

_SEGMENT_FIELDS = ("length", "diameter", "active", "c_scale")


@dataclass(frozen=True)
class DispersionRequest:
    early: str
    late: str


@dataclass(frozen=True)
class ReflectionRequest:
    node: str


@dataclass(frozen=True)
class TruthTableRequest:
    inputs: tuple[str, ...]
    output: str


@dataclass(frozen=True)
class Scenario:
    """A fully validated scenario document."""

    name: str
    builder_kind: str
    builder_args: Mapping[str, Any]
    segment: SegmentSpec
    params: MembraneParams
    stimuli: tuple[Stimulus, ...]
    probes: tuple[str, ...]
    config: SimConfig
    threshold_mv: float = DEFAULT_THRESHOLD_MV
    pulses: bool = True
    dispersion: DispersionRequest | None = None
    reflection: ReflectionRequest | None = None
    truth: TruthTableRequest | None = None
    sha256: str = ""


@dataclass(frozen=True)
class ScenarioRun:
    """Outcome of evaluating a scenario in memory."""

    scenario: Scenario
    topology: Topology
    waveform: Waveform
    summary: dict[str, Any]


# ---------------------------------------------------------------------------
# validation helpers
# ---------------------------------------------------------------------------


def _fail(path: str, message: str) -> ScenarioError:
    return ScenarioError(f"{path}: {message}")


def _require_mapping(value: Any, path: str) -> Mapping[str, Any]:
    if not isinstance(value, Mapping):
        raise _fail(path, f"expected a mapping, got {type(value).__name__}")
    return value


def _require_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(path, f"expected a number, got {value!r}")
    return float(value)


def _require_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _fail(path, f"expected an integer, got {value!r}")
    return value


def _require_str(value: Any, path: str) -> str:
    if not isinstance(value, str) or not value:
        raise _fail(path, f"expected a non-empty string, got {value!r}")
    return value


def _require_bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise _fail(path, f"expected true/false, got {value!r}")
    return value


def _reject_unknown(section: Mapping[str, Any], allowed: tuple[str, ...], path: str) -> None:
    for key in section:
        if key not in allowed:
            raise _fail(f"{path}.{key}" if path else str(key), "unknown field")


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def parse_scenario(document: Any, *, sha256: str = "") -> Scenario:
    """Validate a decoded scenario document.

    Args:
        document: the decoded YAML value (must be a mapping).
        sha256: content hash recorded in summaries; filled by
            load_scenario.

    Raises:
        ScenarioError: any schema violation, naming the field path.
    """
    doc = _require_mapping(document, "document")
    _reject_unknown(
        doc,
        ("name", "builder", "segment", "params", "stimuli", "probes", "config", "analysis"),
        "",
    )

    name = _require_str(doc.get("name"), "name")
    if not all(ch.isalnum() or ch in "_.-" for ch in name):
        raise _fail("name", f"must be filesystem-safe (letters, digits, '_.-'), got {name!r}")

    builder = _require_mapping(doc.get("builder"), "builder")
    kind = _require_str(builder.get("kind"), "builder.kind")
    if kind not in BUILDER_KINDS:
        raise _fail("builder.kind", f"expected one of {', '.join(BUILDER_KINDS)}, got {kind!r}")
    fields = _BUILDER_FIELDS[kind]
    _reject_unknown(builder, ("kind", *fields), "builder")
    args: dict[str, Any] = {}
    for arg, required in fields.items():
        if arg in builder:
            if arg in ("n_segments", "branch_len", "trunk_len"):
                args[arg] = _require_int(builder[arg], f"builder.{arg}")
            else:
                args[arg] = _require_number(builder[arg], f"builder.{arg}")
        elif required:
            raise _fail(f"builder.{arg}", "required field is missing")

    segment_doc = _require_mapping(doc.get("segment", {}), "segment")
    _reject_unknown(segment_doc, _SEGMENT_FIELDS, "segment")
    seg_kwargs: dict[str, Any] = {}
    for key in _SEGMENT_FIELDS:
        if key in segment_doc:
            if key == "active":
                seg_kwargs[key] = _require_bool(segment_doc[key], f"segment.{key}")
            else:
                seg_kwargs[key] = _require_number(segment_doc[key], f"segment.{key}")
    try:
        segment = SegmentSpec(**seg_kwargs)
    except InvalidSpecError as exc:
        raise _fail("segment", str(exc)) from exc

    params_doc = _require_mapping(doc.get("params", {}), "params")
    _reject_unknown(params_doc, _PARAM_FIELDS, "params")
    param_kwargs = {
        key: _require_number(params_doc[key], f"params.{key}")
        for key in _PARAM_FIELDS
        if key in params_doc
    }
    try:
        params = MembraneParams(**param_kwargs)
    except InvalidSpecError as exc:
        raise _fail("params", str(exc)) from exc

    stimuli_doc = doc.get("stimuli", [])
    if not isinstance(stimuli_doc, list):
        raise _fail("stimuli", f"expected a list, got {type(stimuli_doc).__name__}")
    stimuli = []
    for i, item in enumerate(stimuli_doc):
        path = f"stimuli[{i}]"
        entry = _require_mapping(item, path)
        _reject_unknown(entry, ("node", "amplitude", "t_start", "duration"), path)
        if "node" not in entry:
            raise _fail(f"{path}.node", "required field is missing")
        node = entry["node"]
        if isinstance(node, bool) or not isinstance(node, (str, int)):
            raise _fail(f"{path}.node", f"expected a label or node id, got {node!r}")
        if "amplitude" not in entry:
            raise _fail(f"{path}.amplitude", "required field is missing")
        try:
            stimuli.append(
                Stimulus(
                    node=node,
                    amplitude=_require_number(entry["amplitude"], f"{path}.amplitude"),
                    t_start=_require_number(entry.get("t_start", 1e-3), f"{path}.t_start"),
                    duration=_require_number(entry.get("duration", 0.2e-3), f"{path}.duration"),
                )
            )
        except InvalidSpecError as exc:
            raise _fail(path, str(exc)) from exc

    probes_doc = doc.get("probes")
    if not isinstance(probes_doc, list) or not probes_doc:
        raise _fail("probes", "expected a non-empty list of labels")
    probes = tuple(_require_str(p, f"probes[{i}]") for i, p in enumerate(probes_doc))

    config_doc = _require_mapping(doc.get("config", {}), "config")
    _reject_unknown(config_doc, ("dt", "t_end", "record_stride", "integrator"), "config")
    cfg_kwargs: dict[str, Any] = {}
    for key in ("dt", "t_end"):
        if key in config_doc:
            cfg_kwargs[key] = _require_number(config_doc[key], f"config.{key}")
    if "record_stride" in config_doc:
        cfg_kwargs["record_stride"] = _require_int(config_doc["record_stride"], "config.record_stride")
    if "integrator" in config_doc:
        label = _require_str(config_doc["integrator"], "config.integrator")
        try:
            cfg_kwargs["integrator"] = Integrator(label)
        except ValueError:
            choices = ", ".join(i.value for i in Integrator)
            raise _fail("config.integrator", f"expected one of {choices}, got {label!r}") from None
    try:
        config = SimConfig(**cfg_kwargs)
    except InvalidSpecError as exc:
        raise _fail("config", str(exc)) from exc

    analysis_doc = _require_mapping(doc.get("analysis", {}), "analysis")
    _reject_unknown(
        analysis_doc,
        ("threshold_mv", "pulses", "dispersion", "reflection", "truth_table"),
        "analysis",
    )
    threshold = DEFAULT_THRESHOLD_MV
    if "threshold_mv" in analysis_doc:
        threshold = _require_number(analysis_doc["threshold_mv"], "analysis.threshold_mv")
    pulses = True
    if "pulses" in analysis_doc:
        pulses = _require_bool(analysis_doc["pulses"], "analysis.pulses")

    dispersion = None
    if "dispersion" in analysis_doc:
        sect = _require_mapping(analysis_doc["dispersion"], "analysis.dispersion")
        _reject_unknown(sect, ("early", "late"), "analysis.dispersion")
        dispersion = DispersionRequest(
            early=_require_str(sect.get("early"), "analysis.dispersion.early"),
            late=_require_str(sect.get("late"), "analysis.dispersion.late"),
        )

    reflection = None
    if "reflection" in analysis_doc:
        sect = _require_mapping(analysis_doc["reflection"], "analysis.reflection")
        _reject_unknown(sect, ("node",), "analysis.reflection")
        reflection = ReflectionRequest(node=_require_str(sect.get("node"), "analysis.reflection.node"))

    truth = None
    if "truth_table" in analysis_doc:
        sect = _require_mapping(analysis_doc["truth_table"], "analysis.truth_table")
        _reject_unknown(sect, ("inputs", "output"), "analysis.truth_table")
        inputs_doc = sect.get("inputs")
        if not isinstance(inputs_doc, list) or not inputs_doc:
            raise _fail("analysis.truth_table.inputs", "expected a non-empty list of labels")
        truth = TruthTableRequest(
            inputs=tuple(
                _require_str(x, f"analysis.truth_table.inputs[{i}]")
                for i, x in enumerate(inputs_doc)
            ),
            output=_require_str(sect.get("output"), "analysis.truth_table.output"),
        )

    scenario = Scenario(
        name=name,
        builder_kind=kind,
        builder_args=args,
        segment=segment,
        params=params,
        stimuli=tuple(stimuli),
        probes=probes,
        config=config,
        threshold_mv=threshold,
        pulses=pulses,
        dispersion=dispersion,
        reflection=reflection,
        truth=truth,
        sha256=sha256,
    )
    # build once here so label mistakes surface at load time, with paths
    try:
        topology = build_topology(scenario)
    except InvalidSpecError as exc:
        raise _fail("builder", str(exc)) from exc
    for i, probe in enumerate(probes):
        try:
            topology.resolve(probe)
        except KeyError:
            raise _fail(f"probes[{i}]", f"label {probe!r} does not exist in the topology") from None
    for i, stimulus in enumerate(scenario.stimuli):
        try:
            topology.resolve(stimulus.node)
        except KeyError:
            raise _fail(f"stimuli[{i}].node", f"{stimulus.node!r} does not exist in the topology") from None
    for req, base in (
        ((dispersion.early, dispersion.late) if dispersion else (), "analysis.dispersion"),
        ((reflection.node,) if reflection else (), "analysis.reflection"),
        ((*truth.inputs, truth.output) if truth else (), "analysis.truth_table"),
    ):
        for label in req:
            try:
                topology.resolve(label)
            except KeyError:
                raise _fail(base, f"label {label!r} does not exist in the topology") from None
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate one scenario file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ScenarioError(f"{path}: not readable: {exc}") from exc
    return _parse_bytes(raw, str(path))


def _parse_bytes(raw: bytes, source: str) -> Scenario:
    try:
        document = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{source}: not valid YAML: {exc}") from exc
    try:
        return parse_scenario(document, sha256=hashlib.sha256(raw).hexdigest())
    except ScenarioError as exc:
        raise ScenarioError(f"{source}: {exc}") from None


# ---------------------------------------------------------------------------
# bundled scenarios
# ---------------------------------------------------------------------------


def bundled_scenario_names() -> list[str]:
    """Names of the scenarios shipped inside the package."""
    root = resources.files("solitonsim.scenarios")
    return sorted(p.name[: -len(".yaml")] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_bundled_scenario(name: str) -> Scenario:
    """Load a shipped scenario by its name (no path, no extension)."""
    root = resources.files("solitonsim.scenarios")
    resource = root / f"{name}.yaml"
    if not resource.is_file():
        known = ", ".join(bundled_scenario_names())
        raise ScenarioError(f"no bundled scenario {name!r}; bundled: {known}")
    return _parse_bytes(resource.read_bytes(), f"bundled:{name}")


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


def build_topology(scenario: Scenario) -> Topology:
    """Construct the scenario's network."""
    args = dict(scenario.builder_args)
    if scenario.builder_kind == "chain":
        return build_chain(
            args["n_segments"], scenario.segment, terminal_extra_c=args.get("terminal_extra_c", 0.0)
        )
    if scenario.builder_kind == "junction":
        return build_junction(
            args["branch_len"],
            args["trunk_len"],
            scenario.segment,
            junction_c_scale=args.get("junction_c_scale", 1.0),
        )
    if scenario.builder_kind == "and_gate":
        return build_and_gate(scenario.segment)
    return build_taper(args["n_segments"], args["d_start"], args["d_end"], scenario.segment)


def _pulse_record(event) -> dict[str, float]:
    return {
        "t_onset_s": event.t_onset,
        "t_peak_s": event.t_peak,
        "v_peak_mv": event.v_peak,
        "fwhm_s": event.fwhm,
    }


def evaluate_scenario(scenario: Scenario) -> ScenarioRun:
    """Simulate a scenario and compute its requested analyses."""
    topology = build_topology(scenario)
    waveform = simulate(topology, scenario.stimuli, scenario.config, scenario.params)

    analysis: dict[str, Any] = {}
    if scenario.pulses:
        analysis["pulses"] = {
            probe: [
                _pulse_record(ev)
                for ev in detect_pulses(waveform, probe, scenario.threshold_mv)
            ]
            for probe in scenario.probes
        }
    if scenario.dispersion is not None:
        req = scenario.dispersion
        try:
            value: Any = _dispersion(waveform, req, scenario.threshold_mv)
        except NotApplicableError as exc:
            value = {"applicable": False, "reason": str(exc)}
        analysis["dispersion"] = value
    if scenario.reflection is not None:
        count = len(detect_pulses(waveform, scenario.reflection.node, scenario.threshold_mv))
        analysis["reflection"] = {
            "node": scenario.reflection.node,
            "pulse_count": count,
            "reflected": count >= 2,
        }
    if scenario.truth is not None:
        table = truth_table(
            topology,
            scenario.truth.inputs,
            scenario.truth.output,
            config=scenario.config,
            params=scenario.params,
            threshold_mv=scenario.threshold_mv,
        )
        analysis["truth_table"] = {
            "inputs": list(scenario.truth.inputs),
            "output": scenario.truth.output,
            "rows": [
                {"driven": list(combo), "value": result}
                for combo, result in table.items()
            ],
        }

    summary = {
        "scenario": {"name": scenario.name, "sha256": scenario.sha256},
        "resolved": {
            "builder": {"kind": scenario.builder_kind, **dict(scenario.builder_args)},
            "segment": asdict(scenario.segment),
            "params": asdict(scenario.params),
            "config": {
                "dt": scenario.config.dt,
                "t_end": scenario.config.t_end,
                "record_stride": scenario.config.record_stride,
                "integrator": scenario.config.integrator.value,
            },
            "stimuli": [
                {
                    "node": stim.node if isinstance(stim.node, str) else int(stim.node),
                    "amplitude": stim.amplitude,
                    "t_start": stim.t_start,
                    "duration": stim.duration,
                }
                for stim in scenario.stimuli
            ],
            "probes": list(scenario.probes),
            "threshold_mv": scenario.threshold_mv,
        },
        "analysis": analysis,
    }
    return ScenarioRun(scenario=scenario, topology=topology, waveform=waveform, summary=summary)


def _dispersion(waveform: Waveform, req: DispersionRequest, threshold_mv: float) -> dict[str, Any]:
    value = dispersion_metric(waveform, req.early, req.late, threshold_mv)
    return {"applicable": True, "early": req.early, "late": req.late, "value": value}


def write_waveform_csv(path: Path, waveform: Waveform, probes: tuple[str, ...]) -> None:
    """Write probed node voltages as CSV: seconds and volts, 9 digits."""
    columns = [waveform.column(p) for p in probes]
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("t_s," + ",".join(probes) + "\n")
        for row, t in enumerate(waveform.times):
            volts = (
                "%.9g" % (waveform.voltages_mv[row, col] * 1e-3) for col in columns
            )
            fh.write("%.9g," % t + ",".join(volts) + "\n")


def write_outputs(run: ScenarioRun, out_dir: str | Path = ".") -> tuple[Path, Path]:
    """Write a run's CSV and summary files; returns (csv_path, summary_path)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{run.scenario.name}.csv"
    summary_path = out / f"{run.scenario.name}.summary.json"
    write_waveform_csv(csv_path, run.waveform, run.scenario.probes)
    summary_path.write_text(
        json.dumps(run.summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return csv_path, summary_path


def run_scenario(scenario: Scenario, out_dir: str | Path = ".") -> tuple[Path, Path]:
    """Evaluate a scenario and write its two output files.

    Returns:
        (csv_path, summary_path).
    """
    return write_outputs(evaluate_scenario(scenario), out_dir)
