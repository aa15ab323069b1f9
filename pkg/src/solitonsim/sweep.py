"""One-parameter sweeps over a base scenario.

A sweep reruns one scenario across a range of values for a single
parameter and reduces each run to one scalar metric, producing a
two-column CSV (``<parameter>,<metric>``, 9 significant digits).  This
is how operating windows are mapped: amplitude ranges that still launch
a pulse, junction loadings that flip a gate between logic functions,
step sizes that keep the integration converged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .analysis import detect_pulses, dispersion_metric, truth_table
from .engine import refine_check, simulate
from .errors import NotApplicableError, ScenarioError
from .scenario import Scenario, build_topology

SWEEP_PARAMS = ("amplitude", "junction_c_scale", "taper_ratio", "dt", "skew")
SWEEP_METRICS = (
    "logic",
    "output_pulses",
    "peak_mv",
    "dispersion",
    "truth_ab",
    "refine_discrepancy",
)


@dataclass(frozen=True)
class SweepPoint:
    value: float
    metric: float


def sweep_values(start: float, stop: float, steps: int) -> list[float]:
    """Inclusive evenly spaced grid; steps is the number of points."""
    if steps < 1:
        raise ScenarioError(f"sweep steps must be >= 1, got {steps}")
    if steps == 1:
        return [float(start)]
    span = float(stop) - float(start)
    return [float(start) + span * i / (steps - 1) for i in range(steps)]


def apply_param(scenario: Scenario, param: str, value: float) -> Scenario:
    """Return a copy of the scenario with one swept parameter set.

    ``skew`` is not a scenario field: it offsets the last truth-table
    input at metric time, so here it leaves the scenario unchanged.
    """
    if param == "amplitude":
        if not scenario.stimuli:
            raise ScenarioError("amplitude sweep needs at least one stimulus")
        stimuli = tuple(replace(s, amplitude=value) for s in scenario.stimuli)
        return replace(scenario, stimuli=stimuli)
    if param == "junction_c_scale":
        if scenario.builder_kind != "junction":
            raise ScenarioError(
                f"junction_c_scale sweep needs a junction builder, got {scenario.builder_kind!r}"
            )
        args = dict(scenario.builder_args)
        args["junction_c_scale"] = value
        return replace(scenario, builder_args=args)
    if param == "taper_ratio":
        if scenario.builder_kind != "taper":
            raise ScenarioError(
                f"taper_ratio sweep needs a taper builder, got {scenario.builder_kind!r}"
            )
        if value <= 0.0:
            raise ScenarioError(f"taper_ratio must be positive, got {value}")
        args = dict(scenario.builder_args)
        args["d_end"] = args["d_start"] / value
        return replace(scenario, builder_args=args)
    if param == "dt":
        return replace(scenario, config=replace(scenario.config, dt=value))
    if param == "skew":
        return scenario
    raise ScenarioError(
        f"unknown sweep parameter {param!r}; expected one of {', '.join(SWEEP_PARAMS)}"
    )


def compute_metric(scenario: Scenario, metric: str, *, skew_s: float = 0.0) -> float:
    """Reduce one scenario run to a scalar.

    logic: 1.0 when the last probe sees at least one pulse.
    output_pulses: pulse count at the last probe.
    peak_mv: highest voltage at the last probe.
    dispersion: requested width metric; NaN when a pulse is missing.
    truth_ab: 1.0 when the all-inputs-driven truth-table row is true.
    refine_discrepancy: worst dt versus dt/2 voltage gap, millivolts.
    """
    if metric not in SWEEP_METRICS:
        raise ScenarioError(
            f"unknown sweep metric {metric!r}; expected one of {', '.join(SWEEP_METRICS)}"
        )

    topology = build_topology(scenario)

    if metric == "truth_ab":
        if scenario.truth is None:
            raise ScenarioError("truth_ab metric needs an analysis.truth_table request")
        req = scenario.truth
        skew = {req.inputs[-1]: skew_s} if skew_s else None
        table = truth_table(
            topology,
            req.inputs,
            req.output,
            combinations=[req.inputs],
            skew=skew,
            config=scenario.config,
            params=scenario.params,
            threshold_mv=scenario.threshold_mv,
        )
        return 1.0 if table[req.inputs] else 0.0

    if metric == "refine_discrepancy":
        report = refine_check(topology, scenario.stimuli, scenario.config, scenario.params)
        return report.max_discrepancy_mv

    waveform = simulate(topology, scenario.stimuli, scenario.config, scenario.params)
    probe = scenario.probes[-1]
    if metric == "logic":
        return 1.0 if detect_pulses(waveform, probe, scenario.threshold_mv) else 0.0
    if metric == "output_pulses":
        return float(len(detect_pulses(waveform, probe, scenario.threshold_mv)))
    if metric == "peak_mv":
        return float(waveform.voltage(probe).max())
    # dispersion
    if scenario.dispersion is None:
        raise ScenarioError("dispersion metric needs an analysis.dispersion request")
    try:
        return dispersion_metric(
            waveform,
            scenario.dispersion.early,
            scenario.dispersion.late,
            scenario.threshold_mv,
        )
    except NotApplicableError:
        return math.nan


def run_sweep(
    scenario: Scenario,
    param: str,
    values: Sequence[float],
    metric: str,
    out_path: str | Path | None = None,
) -> list[SweepPoint]:
    """Evaluate the metric at every value; optionally write the CSV."""
    if param not in SWEEP_PARAMS:
        raise ScenarioError(
            f"unknown sweep parameter {param!r}; expected one of {', '.join(SWEEP_PARAMS)}"
        )
    if metric not in SWEEP_METRICS:
        raise ScenarioError(
            f"unknown sweep metric {metric!r}; expected one of {', '.join(SWEEP_METRICS)}"
        )
    points = []
    for value in values:
        if param == "skew":
            result = compute_metric(scenario, metric, skew_s=value)
        else:
            result = compute_metric(apply_param(scenario, param, value), metric)
        points.append(SweepPoint(value=float(value), metric=result))
    if out_path is not None:
        path = Path(out_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{param},{metric}\n")
            for point in points:
                fh.write("%.9g,%.9g\n" % (point.value, point.metric))
    return points
