"""Structure-preserving fixed-step integration of the flows.

Position updates move along one-parameter subgroups, g <- g * exp(h v),
so group invariants survive arbitrarily long runs (rotation stacks are
re-orthonormalized whenever round-off drift exceeds 1e-9).  Two steppers
are provided: a geodesic Euler step and a fourth-order Runge-Kutta step
computed in the exponential chart around the current position with the
inverse differential of exp truncated after the double bracket
(Munthe-Kaas scheme).

A simulation is deterministic given the initial state, spec and step
size.  Convergence is declared when the largest per-edge potential value
stays below ``tol_c`` and the spread of agent velocities stays below
``tol_v`` for ``window`` consecutive samples, which filters out
transient velocity zero-crossings.  This is the consensus notion of
convergence: a velocity-synchronized swarm whose agents stay separated
reports not_converged and is judged through its sync residual instead.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import groups
from .dynamics import FlowKernel, FlowMode, FlowSpec, SwarmState
from .errors import AmbiguousLogarithm, NonFiniteState

CONVERGED = "converged"
NOT_CONVERGED = "not_converged"

DEFAULT_H = 1e-3
DEFAULT_TOL_C = 1e-10
DEFAULT_TOL_V = 1e-8
CONVERGENCE_WINDOW = 100


@dataclass
class Trajectory:
    """Time-sampled states plus per-sample diagnostics.

    ``energy`` is NaN except for the second-order flow.  ``states`` is
    empty when the simulation was run with ``store_states=False``.
    """

    times: np.ndarray
    potential: np.ndarray
    max_pair_value: np.ndarray
    max_velocity_norm: np.ndarray
    energy: np.ndarray
    states: list[SwarmState]
    status: str
    t_converged: float | None
    mode: FlowMode

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    def final_state(self) -> SwarmState:
        if not self.states:
            raise ValueError("trajectory was recorded without states")
        return self.states[-1]


def _euler_step(kern, desc, pos, vel, h, rates):
    v, a, _ = rates
    pos2 = groups.stacked_mul_exp(desc, pos, h * v)
    vel2 = None if a is None else vel + h * a
    return pos2, vel2


def _rk4_step(kern, desc, pos, vel, h, rates):
    second = kern.needs_velocities()
    k1v, k1a, _ = rates

    def stage(u, vstage):
        pos_s = groups.stacked_mul_exp(desc, pos, u)
        vr, ar, _ = kern.rates(pos_s, vstage)
        return groups.dexpinv(desc, u, vr), ar

    k2u, k2a = stage(0.5 * h * k1v, vel + 0.5 * h * k1a if second else None)
    k3u, k3a = stage(0.5 * h * k2u, vel + 0.5 * h * k2a if second else None)
    k4u, k4a = stage(h * k3u, vel + h * k3a if second else None)
    u = (h / 6.0) * (k1v + 2.0 * k2u + 2.0 * k3u + k4u)
    pos2 = groups.stacked_mul_exp(desc, pos, u)
    vel2 = None if not second else vel + (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    return pos2, vel2


_STEPPERS = {"euler": _euler_step, "rk4": _rk4_step}


def _single_step(state: SwarmState, spec: FlowSpec, h: float, method: str) -> SwarmState:
    kern = FlowKernel.from_state(state, spec)
    desc = state.descriptor
    pos = groups.stack_positions(state.positions)
    vel = None
    if kern.needs_velocities():
        if state.velocities is None:
            raise ValueError("second-order flow requires velocities")
        vel = np.array([v.coords for v in state.velocities])
    rates = kern.rates(pos, vel)
    pos2, vel2 = _STEPPERS[method](kern, desc, pos, vel, h, rates)
    pos2 = groups.stacked_normalize(desc, pos2)
    return SwarmState(
        positions=tuple(groups.unstack_positions(desc, pos2)),
        velocities=None
        if vel2 is None
        else tuple(groups.algebra_vector(desc, row) for row in vel2),
        natural_velocities=state.natural_velocities,
    )


def lie_euler_step(state: SwarmState, spec: FlowSpec, h: float) -> SwarmState:
    """One geodesic Euler step g <- g * exp(h v) (and v <- v + h dv/dt)."""
    if h <= 0:
        raise ValueError("step size must be positive")
    return _single_step(state, spec, h, "euler")


def rk4_step(state: SwarmState, spec: FlowSpec, h: float) -> SwarmState:
    """One fourth-order chart step (Runge-Kutta-Munthe-Kaas)."""
    if h <= 0:
        raise ValueError("step size must be positive")
    return _single_step(state, spec, h, "rk4")


def simulate(
    init: SwarmState,
    spec: FlowSpec,
    h: float = DEFAULT_H,
    t_end: float = 10.0,
    method: str = "rk4",
    sample_every: int = 1,
    tol_c: float = DEFAULT_TOL_C,
    tol_v: float = DEFAULT_TOL_V,
    window: int = CONVERGENCE_WINDOW,
    store_states: bool = True,
) -> Trajectory:
    """Fixed-step integration with convergence detection.

    Diagnostics are recorded every ``sample_every`` steps.  The run stops
    early once ``window`` consecutive samples satisfy both tolerances;
    ``t_converged`` is the time of the first sample of that window.
    Raises NonFiniteState if any diagnostic turns NaN or infinite.
    """
    if h <= 0 or t_end <= 0:
        raise ValueError("h and t_end must be positive")
    if method not in _STEPPERS:
        raise ValueError(f"unknown integrator {method!r}")
    kern = FlowKernel.from_state(init, spec)
    desc = init.descriptor
    step = _STEPPERS[method]
    pos = groups.stack_positions(init.positions)
    vel = None
    if kern.needs_velocities():
        if init.velocities is None:
            raise ValueError("second-order flow requires velocities")
        vel = np.array([v.coords for v in init.velocities])

    nsteps = max(1, int(round(t_end / h)))
    times, pots, pair_vals, vel_norms, energies = [], [], [], [], []
    snapshots: list[tuple[list[np.ndarray], np.ndarray | None]] = []
    streak = 0
    status = NOT_CONVERGED
    t_converged = None
    second = spec.mode == FlowMode.SECOND_ORDER

    for k in range(nsteps + 1):
        rates = kern.rates(pos, vel)
        if k % sample_every == 0 or k == nsteps:
            v, _, edge_vals = rates
            t = k * h
            v_t = float(np.dot(kern.w, edge_vals)) if len(kern.w) else 0.0
            max_pair = float(edge_vals.max()) if len(edge_vals) else 0.0
            norms = np.linalg.norm(v, axis=1)
            spread = float(np.max(np.linalg.norm(v - v.mean(axis=0), axis=1))) if kern.n else 0.0
            if not (math.isfinite(v_t) and np.all(np.isfinite(v))):
                raise NonFiniteState(f"non-finite state at t={t}")
            times.append(t)
            pots.append(v_t)
            pair_vals.append(max_pair)
            vel_norms.append(float(norms.max()) if len(norms) else 0.0)
            if second:
                kinetic = 0.5 * float(np.sum(vel * vel))
                energies.append(spec.k_p * v_t + kinetic)
            else:
                energies.append(math.nan)
            if store_states:
                snapshots.append((groups.stacked_copy(pos), None if vel is None else np.array(vel)))
            if max_pair < tol_c and spread < tol_v:
                streak += 1
                if streak >= window:
                    status = CONVERGED
                    t_converged = times[-window]
                    break
            else:
                streak = 0
        if k == nsteps:
            break
        pos, vel = step(kern, desc, pos, vel, h, rates)
        pos = groups.stacked_normalize(desc, pos)

    states: list[SwarmState] = []
    if store_states:
        for snap_pos, snap_vel in snapshots:
            states.append(
                SwarmState(
                    positions=tuple(groups.unstack_positions(desc, snap_pos)),
                    velocities=None
                    if snap_vel is None
                    else tuple(groups.algebra_vector(desc, row) for row in snap_vel),
                    natural_velocities=init.natural_velocities,
                )
            )

    return Trajectory(
        times=np.array(times),
        potential=np.array(pots),
        max_pair_value=np.array(pair_vals),
        max_velocity_norm=np.array(vel_norms),
        energy=np.array(energies),
        states=states,
        status=status,
        t_converged=t_converged,
        mode=spec.mode,
    )


def write_trajectory_csv(traj: Trajectory, path, include_log_coords: bool = False) -> None:
    """CSV export: t, V_T, max_pair_value, max_vel_norm, energy.

    Energy is left blank for first-order and sync runs.  With
    ``include_log_coords`` one column per agent and algebra coordinate is
    appended (NaN where the logarithm is ambiguous).
    """
    header = ["t", "V_T", "max_pair_value", "max_vel_norm", "energy"]
    coord_cols = 0
    if include_log_coords and traj.states:
        n = traj.states[0].n
        m = traj.states[0].descriptor.algebra_dim
        coord_cols = n * m
        header += [f"g{i}_c{c}" for i in range(n) for c in range(m)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        second = traj.mode == FlowMode.SECOND_ORDER
        for idx, t in enumerate(traj.times):
            row = [
                repr(float(t)),
                repr(float(traj.potential[idx])),
                repr(float(traj.max_pair_value[idx])),
                repr(float(traj.max_velocity_norm[idx])),
                repr(float(traj.energy[idx])) if second else "",
            ]
            if coord_cols:
                for g in traj.states[idx].positions:
                    try:
                        row.extend(repr(float(c)) for c in groups.log(g).coords)
                    except AmbiguousLogarithm:
                        row.extend("nan" for _ in range(g.descriptor.algebra_dim))
            writer.writerow(row)
