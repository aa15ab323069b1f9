"""Fixed-step implicit transient solver for segmented membrane lines.

The network is the standard nodal system  C dV/dt = -G V + b(t)  with a
diagonal capacitance matrix, a symmetric conductance matrix (axial elements
plus per-node leak), and a right-hand side holding the switched channel
sources and any stimuli.  Two implicit schemes are offered, backward Euler
and trapezoidal, both unconditionally stable on this passive system.

Three implementation choices worth knowing:

* The solve runs in deviation-from-rest coordinates (U = V - v_rest).  The
  leak battery term cancels identically, so a network with no stimulus
  stays at exactly U = 0: the zero right-hand side solves to exactly zero,
  bit for bit, under either scheme.
* Channel source states are frozen during a step.  The step solves a
  purely linear system; afterwards every segment's gate machine is stepped
  with the (previous, new) voltage pair of its head node, and the source
  vector is rebuilt if any phase changed.  Events are therefore resolved
  at step granularity, which is what the refinement check is for.
* Bare rail nodes (no shunt capacitance) make the system an index-1 DAE.
  Backward Euler handles those rows naturally.  A trapezoidal row would
  average the algebraic constraint across two steps and ring on an
  inconsistent start, so for C = 0 rows the trapezoidal scheme falls back
  to the backward-Euler form: the constraint is enforced at the new time
  point.

The left-hand matrix is constant, so it is factorized once (dense LU; the
networks here are at most a few dozen nodes) and back-substituted per step.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import warnings

import numpy as np
from scipy.linalg import LinAlgError, LinAlgWarning, lu_factor, lu_solve

from .errors import InstabilityError, InvalidSpecError, NotApplicableError, TopologyError
from .membrane import GateState, MembraneParams, derive_elements, source_current, step_gate
from .network import NodeId, Stimulus, Topology


class Integrator(Enum):
    BACKWARD_EULER = "backward_euler"
    TRAPEZOIDAL = "trapezoidal"


@dataclass(frozen=True)
class SimConfig:
    """Transient run settings.

    Attributes:
        dt: fixed step size, seconds.
        t_end: simulated duration, seconds.
        record_stride: keep every record_stride-th step (plus t = 0).
        integrator: stepping scheme.
    """

    dt: float = 1e-6
    t_end: float = 20e-3
    record_stride: int = 10
    integrator: Integrator = Integrator.TRAPEZOIDAL

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise InvalidSpecError(f"dt must be positive, got {self.dt}")
        if self.t_end <= self.dt:
            raise InvalidSpecError(f"t_end must exceed dt, got t_end={self.t_end} dt={self.dt}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise InvalidSpecError(f"record_stride must be a positive count, got {self.record_stride}")


@dataclass(frozen=True, eq=False)
class Waveform:
    """Recorded transient: voltages per node, gate phase per segment.

    Attributes:
        times: sample times, seconds, shape (n_samples,).
        voltages_mv: node voltages, millivolts, shape (n_samples, n_nodes);
            columns follow node_ids.
        node_ids: column order of voltages_mv.
        phases: gate phase codes (GateState values), shape
            (n_samples, n_segments); columns follow the topology's segment
            order.
        labels: human name -> node id, copied from the topology.
        rest_mv: resting potential the run started from, millivolts.
    """

    times: np.ndarray
    voltages_mv: np.ndarray
    node_ids: tuple[NodeId, ...]
    phases: np.ndarray
    labels: dict[str, NodeId]
    rest_mv: float

    def column(self, node: NodeId | str) -> int:
        """Column index of a node given by id or label."""
        if isinstance(node, str):
            if node not in self.labels:
                raise NotApplicableError(f"unknown node label {node!r}")
            node = self.labels[node]
        try:
            return self.node_ids.index(node)
        except ValueError:
            raise NotApplicableError(f"node {node} was not recorded") from None

    def voltage(self, node: NodeId | str) -> np.ndarray:
        """Voltage series of one node, millivolts."""
        return self.voltages_mv[:, self.column(node)]

    def phase(self, segment_index: int) -> np.ndarray:
        """Gate phase code series of one segment (by topology order)."""
        if not 0 <= segment_index < self.phases.shape[1]:
            raise NotApplicableError(f"no segment {segment_index}")
        return self.phases[:, segment_index]


@dataclass(frozen=True)
class ConvergenceReport:
    """Result of a dt versus dt/2 comparison at shared sample times."""

    dt_coarse: float
    dt_fine: float
    max_discrepancy_mv: float
    worst_node: NodeId
    worst_time: float
    firing_shift_s: float
    events_diverged: bool


# =====================================================================
# Assembly
# =====================================================================


def _assemble(topology: Topology, params: MembraneParams):
    """Build index maps, capacitance vector, conductance matrix, elements."""
    ids = topology.node_ids
    index = {node: i for i, node in enumerate(ids)}
    n = len(ids)

    cap = np.zeros(n)
    cond = np.zeros((n, n))
    elements = []
    heads = np.empty(len(topology.segments), dtype=np.intp)
    for s, seg in enumerate(topology.segments):
        el = derive_elements(seg.spec, params)
        elements.append(el)
        t, h = index[seg.tail], index[seg.head]
        heads[s] = h
        g_ax = 1.0 / el.r_axial
        cond[t, t] += g_ax
        cond[h, h] += g_ax
        cond[t, h] -= g_ax
        cond[h, t] -= g_ax
        cond[h, h] += 1.0 / el.r_loss
        cap[h] += el.c_shunt
    for node, extra in topology.extra_c.items():
        cap[index[node]] += extra
    return index, cap, cond, elements, heads


def _factorize(lhs: np.ndarray):
    """LU-factor the step matrix; reject singular systems."""
    try:
        with warnings.catch_warnings():
            # exact singularity is diagnosed below; no need for the warning
            warnings.simplefilter("ignore", LinAlgWarning)
            factor = lu_factor(lhs)
    except LinAlgError as exc:
        raise TopologyError(f"degenerate topology: {exc}") from exc
    diag = np.abs(np.diag(factor[0]))
    scale = np.abs(lhs).max()
    if scale == 0.0 or diag.min() <= scale * 1e-14:
        raise TopologyError(
            "degenerate topology: conductance system is singular (isolated node?)"
        )
    return factor


def _source_vector(n: int, states, elements, heads) -> np.ndarray:
    src = np.zeros(n)
    for s in range(len(states)):
        cur = source_current(states[s], elements[s])
        if cur != 0.0:
            src[heads[s]] += cur
    return src


# =====================================================================
# Simulation
# =====================================================================


def simulate(
    topology: Topology,
    stimuli: list[Stimulus] | tuple[Stimulus, ...] = (),
    config: SimConfig = SimConfig(),
    params: MembraneParams | None = None,
    initial_mv: dict[NodeId | str, float] | None = None,
) -> Waveform:
    """Run one transient and record voltages plus gate phases.

    Args:
        topology: network to simulate.
        stimuli: rectangular current injections; node may be an id or a
            label known to the topology.
        config: step size, duration, recording stride, integrator.
        params: membrane constants; defaults to MembraneParams().
        initial_mv: optional starting voltages (millivolts) per node id or
            label; unlisted nodes start at rest.  Gate machines always
            start at REST.

    Returns:
        Waveform sampled every record_stride steps, t = 0 included.

    Raises:
        TopologyError: singular system or a stimulus at an unknown node.
        InstabilityError: a step produced a non-finite voltage.
    """
    if params is None:
        params = MembraneParams()
    index, cap, cond, elements, heads = _assemble(topology, params)
    n = len(topology.node_ids)
    h = config.dt
    trapezoidal = config.integrator is Integrator.TRAPEZOIDAL
    capacitive = cap > 0.0

    if trapezoidal:
        lhs = np.diag(2.0 * cap / h) + cond
        # C = 0 rows keep the plain conductance row: backward-Euler form.
        rhs_matrix = np.diag(2.0 * cap / h) - cond
        rhs_matrix[~capacitive, :] = 0.0
        stim_prev_weight = np.where(capacitive, 1.0, 0.0)
    else:
        lhs = np.diag(cap / h) + cond
        rhs_matrix = None
        stim_prev_weight = None
    factor = _factorize(lhs)

    drive = []
    for stim in stimuli:
        try:
            node = topology.resolve(stim.node)
        except KeyError as exc:
            raise TopologyError(f"stimulus at unknown node: {exc}") from exc
        drive.append((index[node], stim.amplitude, stim.t_start, stim.t_start + stim.duration))

    def stim_vector(t: float) -> np.ndarray:
        vec = np.zeros(n)
        for col, amp, t0, t1 in drive:
            if t0 <= t < t1:
                vec[col] += amp
        return vec

    rest = params.v_rest
    u = np.zeros(n)
    if initial_mv:
        for node, mv in initial_mv.items():
            u[index[topology.resolve(node)]] = (mv - rest) * 1e-3

    n_segments = len(topology.segments)
    states = [GateState.REST] * n_segments
    src = _source_vector(n, states, elements, heads)

    n_steps = int(round(config.t_end / h))
    stride = int(config.record_stride)
    n_samples = n_steps // stride + 1
    times = np.empty(n_samples)
    voltages = np.empty((n_samples, n))
    phases = np.empty((n_samples, n_segments), dtype=np.uint8)

    def record(row: int, t: float, u_now: np.ndarray) -> None:
        times[row] = t
        voltages[row] = u_now * 1e3 + rest
        phases[row] = [state.value for state in states]

    record(0, 0.0, u)
    row = 1
    stim_now = stim_vector(0.0)
    be_coef = cap / h
    for k in range(1, n_steps + 1):
        t_now = k * h
        stim_prev, stim_now = stim_now, stim_vector(t_now)
        if trapezoidal:
            rhs = rhs_matrix @ u + 2.0 * src + stim_prev_weight * stim_prev + stim_now
        else:
            rhs = be_coef * u + src + stim_now
        # finiteness of the solution is checked below, not by scipy
        u_next = lu_solve(factor, rhs, check_finite=False)
        if not np.all(np.isfinite(u_next)):
            raise InstabilityError(f"non-finite voltage at step {k} (t = {t_now:.6g} s)", step=k)

        v_prev_mv = u[heads] * 1e3 + rest
        v_now_mv = u_next[heads] * 1e3 + rest
        changed = False
        for s in range(n_segments):
            new_state = step_gate(states[s], v_prev_mv[s], v_now_mv[s], params)
            if new_state is not states[s]:
                states[s] = new_state
                changed = True
        if changed:
            src = _source_vector(n, states, elements, heads)

        u = u_next
        if k % stride == 0:
            record(row, t_now, u)
            row += 1

    return Waveform(
        times=times,
        voltages_mv=voltages,
        node_ids=topology.node_ids,
        phases=phases,
        labels=dict(topology.labels),
        rest_mv=rest,
    )


# =====================================================================
# Step-size verification
# =====================================================================


def refine_check(
    topology: Topology,
    stimuli: list[Stimulus] | tuple[Stimulus, ...],
    config: SimConfig,
    params: MembraneParams | None = None,
) -> ConvergenceReport:
    """Compare a run at dt against dt/2 on the shared sample grid.

    The fine run records every 2*record_stride-th step, so both runs
    sample identical times.  Reported are the worst absolute voltage
    discrepancy over all nodes and shared samples, and the worst shift in
    per-segment first-firing times.  ``events_diverged`` is set when a
    segment fires in one run but not the other, or when the firing shift
    exceeds two coarse sample spacings: at a trustworthy dt the switching
    sequence must not move on refinement.
    """
    fine_config = replace(config, dt=config.dt / 2.0, record_stride=config.record_stride * 2)
    coarse = simulate(topology, stimuli, config, params)
    fine = simulate(topology, stimuli, fine_config, params)

    n_shared = min(len(coarse.times), len(fine.times))
    diff = np.abs(coarse.voltages_mv[:n_shared] - fine.voltages_mv[:n_shared])
    flat = int(np.argmax(diff))
    sample, col = np.unravel_index(flat, diff.shape)

    firing = GateState.FIRING.value
    shift = 0.0
    diverged = False
    for s in range(coarse.phases.shape[1]):
        hits_c = np.nonzero(coarse.phases[:n_shared, s] == firing)[0]
        hits_f = np.nonzero(fine.phases[:n_shared, s] == firing)[0]
        if (len(hits_c) == 0) != (len(hits_f) == 0):
            diverged = True
            continue
        if len(hits_c) and len(hits_f):
            shift = max(shift, abs(coarse.times[hits_c[0]] - fine.times[hits_f[0]]))
    spacing = config.record_stride * config.dt
    if shift > 2.0 * spacing:
        diverged = True

    return ConvergenceReport(
        dt_coarse=config.dt,
        dt_fine=fine_config.dt,
        max_discrepancy_mv=float(diff[sample, col]),
        worst_node=coarse.node_ids[int(col)],
        worst_time=float(coarse.times[int(sample)]),
        firing_shift_s=float(shift),
        events_diverged=diverged,
    )
