"""Right-hand sides of the consensus and synchronization flows.

Three flows share one coupling structure built from the pairwise errors
E_ij = g_j^-1 * g_i and a spring-like potential V:

- first order:   v_i = -k_P sum_j a_ij grad V(E_ij)
- second order:  dv_i/dt = -k_P sum_j a_ij grad V(E_ij) - k_D v_i
- sync:          v_i = w_i - k_P sum_j a_ij grad V(E_ij)

All velocities are left-translated to the Lie algebra.  For a curve with
left velocity v(t) the covariant acceleration left-translates to
dv/dt + 0.5 [v, v] = dv/dt, so the second-order flow integrates as a
plain ODE on the algebra.  Natural velocities w_i are constants fixed at
construction.

``FlowKernel`` evaluates the coupling on stacked arrays (one array per
primitive group factor) and is the hot path shared by the integrators
and the Jacobian machinery; the module-level functions wrap it for
single states.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import graphs, groups
from .groups import AlgebraVector, GroupElement
from .morse import MorsePotential, primitive_potentials


class FlowMode(str, Enum):
    FIRST_ORDER = "first_order"
    SECOND_ORDER = "second_order"
    SYNC = "sync"


@dataclass(frozen=True)
class FlowSpec:
    mode: FlowMode
    k_p: float
    graph: graphs.WeightedGraph
    potential: MorsePotential
    k_d: float = 0.0

    def __post_init__(self):
        if self.k_p <= 0:
            raise ValueError("k_p must be positive")
        if self.mode == FlowMode.SECOND_ORDER and self.k_d <= 0:
            raise ValueError("second-order flow requires k_d > 0")


@dataclass(frozen=True)
class SwarmState:
    """Positions plus, depending on the flow, velocities or natural velocities."""

    positions: tuple[GroupElement, ...]
    velocities: tuple[AlgebraVector, ...] | None = None
    natural_velocities: tuple[AlgebraVector, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(self.positions))
        desc = self.positions[0].descriptor
        for g in self.positions:
            if g.descriptor != desc:
                raise ValueError("all agents must live on the same group")
        for name in ("velocities", "natural_velocities"):
            vals = getattr(self, name)
            if vals is not None:
                vals = tuple(vals)
                if len(vals) != len(self.positions):
                    raise ValueError(f"{name} must have one entry per agent")
                for v in vals:
                    if v.descriptor != desc:
                        raise ValueError(f"{name} on a different group")
                object.__setattr__(self, name, vals)

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def descriptor(self) -> groups.GroupDescriptor:
        return self.positions[0].descriptor


@dataclass(frozen=True)
class FlowRates:
    """Position rates in the algebra and, for second-order, accelerations."""

    velocities: tuple[AlgebraVector, ...]
    accelerations: tuple[AlgebraVector, ...] | None = None


class FlowKernel:
    """Vectorized evaluation of one flow on stacked position arrays."""

    def __init__(self, spec: FlowSpec, descriptor, n: int, natural: np.ndarray | None):
        if spec.graph.n != n:
            raise ValueError(f"graph has {spec.graph.n} nodes but state has {n} agents")
        if spec.potential.descriptor != descriptor:
            raise ValueError("potential and state live on different groups")
        if spec.mode == FlowMode.SYNC and natural is None:
            raise ValueError("sync flow requires natural velocities")
        self.spec = spec
        self.descriptor = descriptor
        self.n = n
        self.m = descriptor.algebra_dim
        self.natural = natural
        self.factors = groups.primitive_slices(descriptor)
        self.potentials = primitive_potentials(spec.potential)
        edges = graphs.oriented_edges(spec.graph)
        self.src = edges.sources
        self.snk = edges.sinks
        self.w = edges.edge_weights

    @classmethod
    def from_state(cls, state: SwarmState, spec: FlowSpec) -> "FlowKernel":
        natural = None
        if state.natural_velocities is not None:
            natural = np.array([v.coords for v in state.natural_velocities])
        return cls(spec, state.descriptor, state.n, natural)

    def gradient_sums(self, pos: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
        """Per-agent sums sum_j a_ij grad V(E_ij) and per-edge values V(E_ij).

        Each edge is evaluated once; the reverse direction uses the exact
        gradient antisymmetry grad V(g^-1) = -grad V(g).
        """
        term = np.zeros((self.n, self.m))
        vals = np.zeros(len(self.w))
        for (fdesc, sl), fpot, fpos in zip(self.factors, self.potentials, pos):
            err = groups._f_mul(fdesc, groups._f_inv(fdesc, fpos[self.snk]), fpos[self.src])
            vals += fpot._stacked_value(err)
            grad = self.w[:, None] * fpot._stacked_gradient(err)
            view = term[:, sl]
            np.add.at(view, self.src, grad)
            np.subtract.at(view, self.snk, grad)
        return term, vals

    def rates(
        self, pos: list[np.ndarray], vel: np.ndarray | None
    ) -> tuple[np.ndarray, np.ndarray | None, np.ndarray]:
        """Velocity rates, accelerations (second order only), edge values."""
        term, vals = self.gradient_sums(pos)
        mode = self.spec.mode
        if mode == FlowMode.FIRST_ORDER:
            return -self.spec.k_p * term, None, vals
        if mode == FlowMode.SYNC:
            return self.natural - self.spec.k_p * term, None, vals
        if vel is None:
            raise ValueError("second-order flow requires velocities")
        return vel, -self.spec.k_p * term - self.spec.k_d * vel, vals

    def needs_velocities(self) -> bool:
        return self.spec.mode == FlowMode.SECOND_ORDER


def _stack_velocities(state: SwarmState) -> np.ndarray | None:
    if state.velocities is None:
        return None
    return np.array([v.coords for v in state.velocities])


def pair_error(state: SwarmState, i: int, j: int) -> GroupElement:
    """Left-invariant error E_ij = g_j^-1 * g_i; identity iff the agents coincide."""
    if not (0 <= i < state.n and 0 <= j < state.n):
        raise IndexError("agent index out of range")
    return groups.multiply(groups.inverse(state.positions[j]), state.positions[i])


def consensus_terms(state: SwarmState, spec: FlowSpec) -> list[AlgebraVector]:
    """sum_j a_ij grad V(E_ij) for every agent (no -k_P factor).

    This is also the per-agent gradient of the total potential, which is
    why the analysis module reuses it for equilibrium residuals.
    """
    kern = FlowKernel.from_state(state, spec)
    pos = groups.stack_positions(state.positions)
    term, _ = kern.gradient_sums(pos)
    return [groups.algebra_vector(state.descriptor, row) for row in term]


def consensus_term(state: SwarmState, spec: FlowSpec, i: int) -> AlgebraVector:
    if not 0 <= i < state.n:
        raise IndexError("agent index out of range")
    return consensus_terms(state, spec)[i]


def rhs(state: SwarmState, spec: FlowSpec) -> FlowRates:
    """Time derivative of the state under the configured flow."""
    if spec.mode == FlowMode.SECOND_ORDER and state.velocities is None:
        raise ValueError("second-order flow requires a state with velocities")
    if spec.mode == FlowMode.SYNC and state.natural_velocities is None:
        raise ValueError("sync flow requires a state with natural velocities")
    kern = FlowKernel.from_state(state, spec)
    pos = groups.stack_positions(state.positions)
    v, a, _ = kern.rates(pos, _stack_velocities(state))
    desc = state.descriptor
    return FlowRates(
        velocities=tuple(groups.algebra_vector(desc, row) for row in v),
        accelerations=None if a is None else tuple(groups.algebra_vector(desc, row) for row in a),
    )


def total_potential(state: SwarmState, spec: FlowSpec) -> float:
    """V_T = 0.5 * sum_{jk} a_jk V(E_jk); invariant under common left translation."""
    kern = FlowKernel.from_state(state, spec)
    pos = groups.stack_positions(state.positions)
    _, vals = kern.gradient_sums(pos)
    return float(np.dot(kern.w, vals))


def total_energy(state: SwarmState, spec: FlowSpec) -> float:
    """k_P V_T + kinetic energy; the Lyapunov diagnostic of the damped flow."""
    if spec.mode != FlowMode.SECOND_ORDER:
        raise ValueError("total_energy is defined for the second-order flow")
    if state.velocities is None:
        raise ValueError("state carries no velocities")
    kinetic = 0.5 * sum(v.norm() ** 2 for v in state.velocities)
    return spec.k_p * total_potential(state, spec) + kinetic
