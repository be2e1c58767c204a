"""Equilibrium classification, Jacobians and synchronization conditions.

Equilibria of the coupling field sum_j a_ij grad V(E_ij) = 0 come in
three flavors: consensus (every pair error at identity), anti-consensus
(pair errors at non-identity critical points) and non-trivial (per-agent
sums cancel without individual edge gradients vanishing; the splay state
on a 3-cycle is the canonical witness).  Trees admit only the trivial
kinds.

Jacobians are taken covariantly: the finite-difference chart derivative
of the field is corrected by the connection term v -> 0.5 [v, W(p)] per
agent, which makes the consensus Jacobian symmetric everywhere and makes
the drift contribution of the sync flow exactly skew-symmetric.  At
consensus states the Jacobian factorizes as -Bbar Dbar Bbar^T with one
edge Hessian block per edge, mirroring L = B D B^T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import graphs, groups
from .dynamics import (
    FlowKernel,
    FlowMode,
    FlowSpec,
    SwarmState,
    consensus_terms,
    pair_error,
)
from .errors import NoSolutionInU, NotATree, PreconditionViolation
from .groups import AlgebraVector, GroupElement

JACOBIAN_STEP = 1e-5
ZERO_EIG_TOL = 1e-6


# ---------------------------------------------------------------------------
# equilibrium classification


class EquilibriumKind(str, Enum):
    CONSENSUS = "consensus"
    ANTI_CONSENSUS = "anti_consensus"
    NON_TRIVIAL = "non_trivial"
    NOT_EQUILIBRIUM = "not_equilibrium"


@dataclass
class EquilibriumReport:
    kind: EquilibriumKind
    residual: float
    agent_residuals: list[float]
    edges: list[tuple[int, int]]
    edge_gradient_norms: list[float]
    edge_identity_distance: list[float]
    edge_critical_distance: list[float]
    edge_nearest_critical: list[GroupElement]
    tolerance: float

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "residual": self.residual,
            "agent_residuals": self.agent_residuals,
            "edges": [list(e) for e in self.edges],
            "edge_gradient_norms": self.edge_gradient_norms,
            "edge_identity_distance": self.edge_identity_distance,
            "edge_critical_distance": self.edge_critical_distance,
            "edge_nearest_critical": [
                groups.element_to_payload(g) for g in self.edge_nearest_critical
            ],
            "tolerance": self.tolerance,
        }


def classify_equilibrium(state: SwarmState, spec: FlowSpec, tol: float = 1e-4) -> EquilibriumReport:
    """Classify a state against the equilibrium condition.

    Non-trivial requires a vanishing residual together with some edge
    gradient above 10 * tol, which separates the classes robustly under
    integrator noise.
    """
    terms = consensus_terms(state, spec)
    agent_res = [t.norm() for t in terms]
    residual = max(agent_res) if agent_res else 0.0
    pot = spec.potential
    edges, gnorms, id_dist, c_dist, c_elem = [], [], [], [], []
    for i, j, _ in graphs.oriented_edges(spec.graph).pairs:
        err = pair_error(state, i, j)
        edges.append((i, j))
        gnorms.append(pot.lie_gradient(err).norm())
        id_dist.append(groups.log_norm(err))
        nearest, dist = pot.nearest_critical(err)
        c_elem.append(nearest)
        c_dist.append(dist)

    if residual > tol:
        kind = EquilibriumKind.NOT_EQUILIBRIUM
    elif all(d <= tol for d in id_dist):
        kind = EquilibriumKind.CONSENSUS
    elif any(g > 10.0 * tol for g in gnorms):
        kind = EquilibriumKind.NON_TRIVIAL
    else:
        kind = EquilibriumKind.ANTI_CONSENSUS
    return EquilibriumReport(
        kind=kind,
        residual=residual,
        agent_residuals=agent_res,
        edges=edges,
        edge_gradient_norms=gnorms,
        edge_identity_distance=id_dist,
        edge_critical_distance=c_dist,
        edge_nearest_critical=c_elem,
        tolerance=tol,
    )


# ---------------------------------------------------------------------------
# Jacobians


def _position_kernel(state: SwarmState, spec: FlowSpec) -> FlowKernel:
    if spec.mode == FlowMode.SECOND_ORDER:
        raise ValueError("Jacobian is defined for the position flows (first order or sync)")
    return FlowKernel.from_state(state, spec)


def numerical_jacobian(state: SwarmState, spec: FlowSpec, step: float = JACOBIAN_STEP) -> np.ndarray:
    """Covariant Jacobian of the flow field in per-agent algebra bases.

    Central finite differences of the left-trivialized field in
    exponential charts, plus the analytic connection term
    v_i -> 0.5 [v_i, W_i(p)] on each diagonal block.  At equilibria the
    correction vanishes; away from them it is what keeps gradient-field
    Jacobians symmetric and drift contributions skew.
    """
    kern = _position_kernel(state, spec)
    desc = state.descriptor
    n, m = kern.n, kern.m
    pos = groups.stack_positions(state.positions)
    base, _, _ = kern.rates(pos, None)
    J = np.empty((n * m, n * m))
    factors = groups.primitive_slices(desc)
    for k in range(n):
        for (fdesc, sl) in factors:
            width = sl.stop - sl.start
            for d in range(width):
                col = sl.start + d
                coords = np.zeros(m)
                coords[col] = step
                plus = groups.stacked_copy(pos)
                minus = groups.stacked_copy(pos)
                for fi, (fd, fsl) in enumerate(factors):
                    seg = coords[fsl]
                    if not seg.any():
                        continue
                    plus[fi][k] = groups._f_mul(fd, pos[fi][k], groups._f_exp(fd, seg[None, :])[0])
                    minus[fi][k] = groups._f_mul(fd, pos[fi][k], groups._f_exp(fd, -seg[None, :])[0])
                vp, _, _ = kern.rates(plus, None)
                vm, _, _ = kern.rates(minus, None)
                J[:, k * m + col] = ((vp - vm) / (2.0 * step)).ravel()
    for i in range(n):
        w = groups.algebra_vector(desc, base[i])
        block = np.empty((m, m))
        for d in range(m):
            e = np.zeros(m)
            e[d] = 1.0
            block[:, d] = 0.5 * groups.bracket(groups.algebra_vector(desc, e), w).coords
        J[i * m : (i + 1) * m, i * m : (i + 1) * m] += block
    return J


def block_jacobian_consensus(state: SwarmState, spec: FlowSpec) -> np.ndarray:
    """-Bbar Dbar Bbar^T with edge blocks a_ij * Hess V(E_ij).

    This is the Jacobian of the unscaled gradient field; multiplying by
    k_P recovers the first-order flow Jacobian.  It matches the covariant
    Jacobian wherever the edge gradients vanish (consensus and
    anti-consensus states; everywhere on Abelian groups).
    """
    pot = spec.potential
    n = state.n
    m = state.descriptor.algebra_dim
    J = np.zeros((n * m, n * m))
    for i, j, w in graphs.oriented_edges(spec.graph).pairs:
        H = w * pot.lie_hessian(pair_error(state, i, j))
        bi, bj = slice(i * m, (i + 1) * m), slice(j * m, (j + 1) * m)
        J[bi, bi] -= H
        J[bj, bj] -= H
        J[bi, bj] += H
        J[bj, bi] += H
    return J


def second_order_block(jacobian: np.ndarray, k_d: float) -> np.ndarray:
    """[[0, I], [A, -k_D I]]: linearization of the damped second-order flow."""
    k = jacobian.shape[0]
    top = np.hstack([np.zeros((k, k)), np.eye(k)])
    bottom = np.hstack([jacobian, -k_d * np.eye(k)])
    return np.vstack([top, bottom])


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    zero_count: int
    max_nonzero_real_part: float | None
    symmetric_part_min_eigenvalue: float
    tol_z: float
    scale: float

    def as_dict(self) -> dict:
        return {
            "eigenvalues": [[float(e.real), float(e.imag)] for e in self.eigenvalues],
            "zero_count": self.zero_count,
            "max_nonzero_real_part": self.max_nonzero_real_part,
            "symmetric_part_min_eigenvalue": self.symmetric_part_min_eigenvalue,
            "tol_z": self.tol_z,
            "scale": self.scale,
        }


def spectrum(matrix: np.ndarray, tol_z: float = ZERO_EIG_TOL) -> SpectrumReport:
    """Eigenvalues with a relative zero threshold and the symmetric-part
    minimum eigenvalue (the quantity that decides stability when the skew
    part is dropped)."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("spectrum requires a square matrix")
    eig = np.linalg.eigvals(matrix)
    scale = float(np.max(np.abs(eig))) if eig.size else 0.0
    threshold = tol_z * (scale if scale > 0 else 1.0)
    mask_zero = np.abs(eig) < threshold
    nonzero = eig[~mask_zero]
    sym_min = float(np.linalg.eigvalsh(0.5 * (matrix + matrix.T))[0]) if matrix.size else 0.0
    return SpectrumReport(
        eigenvalues=np.sort_complex(eig),
        zero_count=int(mask_zero.sum()),
        max_nonzero_real_part=float(nonzero.real.max()) if nonzero.size else None,
        symmetric_part_min_eigenvalue=sym_min,
        tol_z=tol_z,
        scale=scale,
    )


# ---------------------------------------------------------------------------
# synchronization


def sync_mean_velocity(natural_velocities) -> AlgebraVector:
    """The only velocity a synchronous swarm can settle at: the mean."""
    vals = list(natural_velocities)
    if not vals:
        raise ValueError("need at least one natural velocity")
    desc = vals[0].descriptor
    coords = np.mean([v.coords for v in vals], axis=0)
    return groups.algebra_vector(desc, coords)


def sync_residual(state: SwarmState, spec: FlowSpec) -> list[AlgebraVector]:
    """(w_i - w_S) - k_P sum_j a_ij grad V(E_ij) per agent.

    All residuals vanish exactly at a velocity-synchronous configuration;
    they always sum to zero because the edge gradients cancel pairwise.
    """
    if spec.mode != FlowMode.SYNC:
        raise ValueError("sync_residual requires the sync flow")
    if state.natural_velocities is None:
        raise ValueError("state carries no natural velocities")
    w_s = sync_mean_velocity(state.natural_velocities)
    terms = consensus_terms(state, spec)
    return [
        (w - w_s) - spec.k_p * t
        for w, t in zip(state.natural_velocities, terms)
    ]


@dataclass
class NecessaryCondition:
    """Per-agent test of the bound |w_i - w_S| <= deg(i) k_P lambda."""

    passed: list[bool]
    margins: list[float]
    deviations: list[float]
    lambda_value: float
    vacuous: bool = False

    @property
    def all_passed(self) -> bool:
        return all(self.passed)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "margins": self.margins,
            "deviations": self.deviations,
            "lambda": self.lambda_value,
            "vacuous": self.vacuous,
        }


def check_necessary_condition(spec: FlowSpec, natural_velocities) -> NecessaryCondition:
    """Synchrony is impossible for any agent whose deviation from the mean
    exceeds deg(i) * k_P * lambda.  With an unbounded gradient (Euclidean
    factors) the condition is vacuously true and flagged as such."""
    vals = list(natural_velocities)
    w_s = sync_mean_velocity(vals)
    lam = spec.potential.lambda_sup()
    deviations = [(w - w_s).norm() for w in vals]
    if not lam.bounded:
        return NecessaryCondition(
            passed=[True] * len(vals),
            margins=[math.inf] * len(vals),
            deviations=deviations,
            lambda_value=math.inf,
            vacuous=True,
        )
    margins, passed = [], []
    for i, dev in enumerate(deviations):
        bound = graphs.degree(spec.graph, i) * spec.k_p * lam.value
        margins.append(bound - dev)
        passed.append(dev <= bound)
    return NecessaryCondition(
        passed=passed, margins=margins, deviations=deviations, lambda_value=lam.value
    )


def solve_sync_tree(spec: FlowSpec, natural_velocities) -> SwarmState:
    """Construct a velocity-synchronous configuration on a tree.

    Leaves are stripped one at a time: the leaf equation pins the edge
    gradient to its accumulated deviation over k_P a_ij, the edge error
    is recovered through the local inverse of the gradient, and the
    deviation folds into the neighbor.  The last node's equation holds
    automatically because deviations sum to zero.  Absolute positions
    anchor agent 0 at the identity (solutions are left-translation
    classes).

    Raises NotATree for non-tree graphs and NoSolutionInU when a required
    gradient magnitude reaches the bijectivity radius mu.
    """
    if not graphs.is_tree(spec.graph):
        raise NotATree("synchronization solver requires a connected tree")
    vals = list(natural_velocities)
    n = spec.graph.n
    if len(vals) != n:
        raise ValueError("one natural velocity per node required")
    desc = vals[0].descriptor
    pot = spec.potential
    mu = pot.mu_radius()
    w_s = sync_mean_velocity(vals)
    dev = [w - w_s for w in vals]

    adj: dict[int, dict[int, float]] = {i: {} for i in range(n)}
    for i, j, w in graphs.oriented_edges(spec.graph).pairs:
        adj[i][j] = w
        adj[j][i] = w

    solved: dict[tuple[int, int], GroupElement] = {}
    remaining = set(range(n))
    while len(remaining) > 1:
        leaf = min(i for i in remaining if len(adj[i]) == 1)
        nb, weight = next(iter(adj[leaf].items()))
        xi = dev[leaf] * (1.0 / (spec.k_p * weight))
        if mu.bounded and xi.norm() >= mu.value:
            raise NoSolutionInU(
                f"edge ({leaf},{nb}) needs gradient magnitude {xi.norm():.6g} >= mu = {mu.value:.6g}"
            )
        solved[(leaf, nb)] = pot.inverse_gradient(xi)  # E_{leaf,nb} = g_nb^-1 g_leaf
        dev[nb] = dev[nb] + dev[leaf]
        del adj[nb][leaf]
        del adj[leaf]
        remaining.discard(leaf)

    positions: list[GroupElement | None] = [None] * n
    positions[0] = groups.identity(desc)
    stack = [0]
    tree_adj = {i: {} for i in range(n)}
    for i, j, w in graphs.oriented_edges(spec.graph).pairs:
        tree_adj[i][j] = w
        tree_adj[j][i] = w
    while stack:
        u = stack.pop()
        for x in tree_adj[u]:
            if positions[x] is not None:
                continue
            if (x, u) in solved:
                positions[x] = groups.multiply(positions[u], solved[(x, u)])
            else:
                positions[x] = groups.multiply(positions[u], groups.inverse(solved[(u, x)]))
            stack.append(x)
    return SwarmState(positions=tuple(positions), natural_velocities=tuple(vals))


# ---------------------------------------------------------------------------
# cohesiveness


def _circle_factor_angles(state: SwarmState) -> list[np.ndarray]:
    stacks = groups.stack_positions(state.positions)
    out = []
    for (f, _), arr in zip(groups.primitive_slices(state.descriptor), stacks):
        if f.kind == groups.CIRCLE:
            out.append(arr)
    return out


def arc_cohesiveness(state: SwarmState, gamma: float, graph: graphs.WeightedGraph | None = None) -> bool:
    """Do all angles fit in a closed arc of length gamma (per circle factor)?

    With a graph the per-edge variant is used instead: endpoint angles of
    every edge must lie within gamma of each other.  Only circle factors
    are supported; gamma must satisfy 0 <= gamma < pi.
    """
    if not 0.0 <= gamma < math.pi:
        raise PreconditionViolation("gamma must lie in [0, pi)")
    factor_angles = _circle_factor_angles(state)
    if not factor_angles:
        raise PreconditionViolation("group has no circle factors")
    for angles in factor_angles:
        if graph is not None:
            for i, j, _ in graphs.oriented_edges(graph).pairs:
                if abs(float(groups.principal_angle(angles[i] - angles[j]))) > gamma:
                    return False
            continue
        if len(angles) <= 1:
            continue
        srt = np.sort(angles)
        gaps = np.diff(srt)
        wrap = 2.0 * math.pi - (srt[-1] - srt[0])
        covering = 2.0 * math.pi - max(float(gaps.max()) if gaps.size else 0.0, wrap)
        if covering > gamma:
            return False
    return True


def u_cohesive(state: SwarmState, radius: float = 0.5 * math.pi) -> bool:
    """All pairwise errors inside the gradient-bijective neighborhood,
    realized concretely as log-norm below pi/2."""
    for i in range(state.n):
        for j in range(i + 1, state.n):
            if groups.log_norm(pair_error(state, i, j)) >= radius:
                return False
    return True
