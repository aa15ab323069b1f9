"""Transient simulator for electrical solitons on segmented membrane lines."""

from __future__ import annotations

__version__ = "0.1.0"

from .membrane import (
    GateState,
    MembraneParams,
    SegmentSpec,
    SegmentElements,
    derive_elements,
    source_current,
    step_gate,
)
from .network import (
    Segment,
    Stimulus,
    Topology,
    build_and_gate,
    build_chain,
    build_junction,
    build_taper,
)
from .engine import ConvergenceReport, Integrator, SimConfig, Waveform, refine_check, simulate
from .analysis import (
    PulseEvent,
    detect_pulses,
    dispersion_metric,
    first_phase_time,
    logic_output,
    rising_edge_slope,
    truth_table,
)
from .scenario import (
    Scenario,
    ScenarioRun,
    bundled_scenario_names,
    evaluate_scenario,
    load_bundled_scenario,
    load_scenario,
    parse_scenario,
    run_scenario,
)
from .sweep import SweepPoint, run_sweep, sweep_values
from .suite import CriterionResult, format_report, run_paper_suite
from .errors import (
    InstabilityError,
    InvalidSpecError,
    NotApplicableError,
    ScenarioError,
    SolitonsimError,
    TopologyError,
)

__all__ = [
    "GateState",
    "MembraneParams",
    "SegmentSpec",
    "SegmentElements",
    "derive_elements",
    "source_current",
    "step_gate",
    "Segment",
    "Stimulus",
    "Topology",
    "build_and_gate",
    "build_chain",
    "build_junction",
    "build_taper",
    "ConvergenceReport",
    "Integrator",
    "SimConfig",
    "Waveform",
    "refine_check",
    "simulate",
    "PulseEvent",
    "detect_pulses",
    "dispersion_metric",
    "first_phase_time",
    "logic_output",
    "rising_edge_slope",
    "truth_table",
    "Scenario",
    "ScenarioRun",
    "bundled_scenario_names",
    "evaluate_scenario",
    "load_bundled_scenario",
    "load_scenario",
    "parse_scenario",
    "run_scenario",
    "SweepPoint",
    "run_sweep",
    "sweep_values",
    "CriterionResult",
    "format_report",
    "run_paper_suite",
    "InstabilityError",
    "InvalidSpecError",
    "NotApplicableError",
    "ScenarioError",
    "SolitonsimError",
    "TopologyError",
    "__version__",
]
