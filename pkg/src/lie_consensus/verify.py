"""Runnable invariant suites behind ``lie-consensus verify``.

Each suite samples with a seeded generator and returns Check records, so
a verify run is reproducible and machine-readable.  The suites mirror
the structural properties the library is built on: group/algebra
identities, potential axioms, Laplacian factorizations, flow
specializations and energy decay, and the Jacobian/equilibrium
structure.
"""

from __future__ import annotations

import numpy as np

from . import analysis, graphs, groups, integrate, morse, so3
from .dynamics import FlowMode, FlowSpec, SwarmState, consensus_terms, pair_error, rhs, total_potential
from .errors import AmbiguousLogarithm
from .reporting import Check, CheckSuite

SUITE_NAMES = ("lie", "morse", "graph", "dynamics", "analysis")


def _worst(values) -> float:
    values = list(values)
    return float(max(values)) if values else 0.0


# ---------------------------------------------------------------------------
# lie suite


def lie_suite(rng: np.random.Generator) -> CheckSuite:
    checks = []
    descs = [groups.circle(), groups.euclidean(3), groups.rotation3(),
             groups.product(groups.circle(), groups.rotation3())]

    worst = 0.0
    for desc in descs:
        for _ in range(250):
            g = groups.random_element(desc, rng)
            try:
                lg = groups.log(g)
            except AmbiguousLogarithm:
                continue
            round2 = groups.log(groups.exp(lg))
            worst = max(worst, float(np.abs(round2.coords - lg.coords).max()))
    checks.append(Check("exp_log_roundtrip", worst <= 1e-9, worst, 1e-9))

    worst = 0.0
    d3 = groups.rotation3()
    for _ in range(200):
        y = groups.random_algebra(d3, rng, 3.0)
        M = np.empty((3, 3))
        for k in range(3):
            e = np.zeros(3)
            e[k] = 1.0
            M[:, k] = 0.5 * groups.bracket(groups.algebra_vector(d3, e), y).coords
        worst = max(worst, float(np.abs(M + M.T).max()))
    checks.append(Check("half_bracket_skew", worst <= 1e-12, worst, 1e-12))

    worst = 0.0
    for _ in range(1000):
        g = groups.random_element(d3, rng)
        x = groups.random_algebra(d3, rng, 2.0)
        y = groups.random_algebra(d3, rng, 2.0)
        lhs = groups.inner(groups.adjoint(g, x), groups.adjoint(g, y))
        worst = max(worst, abs(lhs - groups.inner(x, y)))
    checks.append(Check("ad_invariance", worst <= 1e-10, worst, 1e-10))

    worst = 0.0
    for _ in range(500):
        x = groups.random_algebra(d3, rng, 2.0)
        y = groups.random_algebra(d3, rng, 2.0)
        z = groups.random_algebra(d3, rng, 2.0)
        lhs = groups.inner(z, groups.bracket(x, y))
        rhs_ = groups.inner(x, groups.bracket(y, z))
        worst = max(worst, abs(lhs - rhs_))
    checks.append(Check("cyclic_bracket_identity", worst <= 1e-12, worst, 1e-12))

    worst = 0.0
    for desc in descs:
        e = groups.identity(desc)
        for _ in range(100):
            g = groups.random_element(desc, rng)
            worst = max(worst, groups.log_norm(groups.multiply(g, groups.inverse(g))))
            gg = groups.multiply(e, g)
            worst = max(
                worst,
                groups.log_norm(groups.multiply(groups.inverse(gg), g)),
            )
    checks.append(Check("group_laws", worst <= 1e-12, worst, 1e-12))

    return CheckSuite("lie", checks)


# ---------------------------------------------------------------------------
# morse suite


def _potentials():
    return [
        morse.Quadratic(groups.euclidean(2)),
        morse.CircleCosine(),
        morse.RotationTrace(),
        morse.default_potential(groups.product(groups.circle(), groups.rotation3())),
    ]


def morse_suite(rng: np.random.Generator) -> CheckSuite:
    checks = []

    # directional derivative of V vs analytic gradient, central differences
    worst = 0.0
    h = 1e-5
    for pot in _potentials():
        desc = pot.descriptor
        for _ in range(250):
            g = groups.random_element(desc, rng)
            x = groups.random_algebra(desc, rng, 1.0)
            vp = pot.value(groups.multiply(g, groups.exp(h * x)))
            vm = pot.value(groups.multiply(g, groups.exp(-1.0 * h * x)))
            fd = (vp - vm) / (2 * h)
            worst = max(worst, abs(groups.inner(pot.lie_gradient(g), x) - fd))
    checks.append(Check("gradient_matches_fd", worst <= 1e-6, worst, 1e-6))

    worst = 0.0
    for pot in _potentials():
        desc = pot.descriptor
        for _ in range(250):
            g = groups.random_element(desc, rng)
            diff = pot.lie_gradient(g) + pot.lie_gradient(groups.inverse(g))
            worst = max(worst, diff.norm())
    checks.append(Check("gradient_antisymmetry", worst <= 1e-8, worst, 1e-8))

    worst_sym, min_eig = 0.0, np.inf
    for pot in _potentials():
        desc = pot.descriptor
        for _ in range(200):
            x = groups.random_algebra(desc, rng, 0.5 * np.pi * 0.999)
            g = groups.exp(x)
            H = pot.lie_hessian(g)
            worst_sym = max(worst_sym, float(np.abs(H - H.T).max()))
            if groups.log_norm(g) < 0.5 * np.pi:
                min_eig = min(min_eig, float(np.linalg.eigvalsh(0.5 * (H + H.T))[0]))
    checks.append(Check("hessian_symmetric", worst_sym <= 1e-8, worst_sym, 1e-8))
    checks.append(Check("hessian_pd_in_U", min_eig > 0.0, min_eig, 0.0, "minimum eigenvalue"))

    gp_ok, gp_detail = True, []
    for pot in _potentials():
        suite = morse.verify_gpolar(pot, 2000, rng)
        gp_ok = gp_ok and suite.passed
        gp_detail.append(f"{suite.name}:{'ok' if suite.passed else 'FAIL'}")
    checks.append(Check("gpolar_axioms", gp_ok, 0.0 if gp_ok else 1.0, 0.5, ", ".join(gp_detail)))

    worst_grad, worst_eig = 0.0, -np.inf
    for pot in _potentials():
        crit = pot.critical_set()
        for c in crit.elements:
            worst_grad = max(worst_grad, pot.lie_gradient(c).norm())
            if groups.log_norm(c) > 1e-9:
                worst_eig = max(worst_eig, float(np.linalg.eigvalsh(pot.lie_hessian(c))[0]))
    checks.append(Check("critical_points_flat", worst_grad <= 1e-9, worst_grad, 1e-9))
    checks.append(
        Check(
            "saddles_have_unstable_direction",
            worst_eig <= -1e-6,
            worst_eig,
            -1e-6,
            "largest over non-identity critical points of the smallest Hessian eigenvalue",
        )
    )
    return CheckSuite("morse", checks)


# ---------------------------------------------------------------------------
# graph suite


def _random_graph(rng: np.random.Generator) -> graphs.WeightedGraph:
    n = int(rng.integers(2, 9))
    p = float(rng.uniform(0.1, 0.9))
    g = graphs.erdos_renyi(n, p, rng)
    if rng.uniform() < 0.5 and len(graphs.oriented_edges(g)) > 0:
        g = graphs.randomize_weights(g, rng, 0.2, 2.5)
    return g

def graph_suite(rng: np.random.Generator) -> CheckSuite:
    checks = []

    worst_fact, worst_row, worst_neg = 0.0, 0.0, 0.0
    for _ in range(100):
        g = _random_graph(rng)
        L = graphs.laplacian(g)
        B, D = graphs.incidence(g)
        worst_fact = max(worst_fact, float(np.abs(B @ D @ B.T - L).max()))
        worst_row = max(worst_row, float(np.abs(L.sum(axis=1)).max()))
        worst_neg = max(worst_neg, float(-np.linalg.eigvalsh(L)[0]))
    checks.append(Check("incidence_factorization", worst_fact <= 1e-12, worst_fact, 1e-12))
    checks.append(Check("laplacian_row_sums", worst_row <= 1e-12, worst_row, 1e-12))
    checks.append(Check("laplacian_psd", worst_neg <= 1e-10, worst_neg, 1e-10))

    agree = True
    rank_ok = True
    kernel_worst = 0.0
    for _ in range(200):
        g = _random_graph(rng)
        L = graphs.laplacian(g)
        eigs = np.linalg.eigvalsh(L)
        scale = max(float(np.abs(eigs).max()), 1.0)
        connected = graphs.is_connected(g)
        agree = agree and (connected == (graphs.lambda2(g) > 1e-9 * scale))
        zero_count = int((np.abs(eigs) < 1e-9 * scale).sum())
        rank_ok = rank_ok and ((g.n - zero_count == g.n - 1) == connected)
        if connected:
            w, vecs = np.linalg.eigh(L)
            v0 = vecs[:, 0]
            ones = np.ones(g.n) / np.sqrt(g.n)
            kernel_worst = max(kernel_worst, float(np.linalg.norm(v0 - np.dot(v0, ones) * ones)))
    checks.append(Check("connectivity_iff_lambda2", agree, 0.0 if agree else 1.0, 0.5))
    checks.append(Check("rank_deficiency_iff_connected", rank_ok, 0.0 if rank_ok else 1.0, 0.5))
    checks.append(Check("zero_eigvec_is_consensus", kernel_worst <= 1e-9, kernel_worst, 1e-9))

    trees_ok = all(graphs.is_tree(graphs.random_tree(int(rng.integers(2, 12)), rng)) for _ in range(100))
    checks.append(Check("random_tree_is_tree", trees_ok, 0.0 if trees_ok else 1.0, 0.5))

    spec_line = np.linalg.eigvalsh(graphs.laplacian(graphs.line(3)))
    err = float(np.abs(spec_line - np.array([0.0, 1.0, 3.0])).max())
    checks.append(Check("line3_spectrum", err <= 1e-9, err, 1e-9))
    err = abs(graphs.lambda2(graphs.complete(4)) - 4.0)
    checks.append(Check("k4_lambda2", err <= 1e-9, err, 1e-9))
    return CheckSuite("graph", checks)


# ---------------------------------------------------------------------------
# dynamics suite


def _random_state(desc, n, rng, radius=np.pi * 0.9, velocities=False, natural=False):
    positions = tuple(groups.exp(groups.random_algebra(desc, rng, radius)) for _ in range(n))
    vel = tuple(groups.random_algebra(desc, rng, 1.0) for _ in range(n)) if velocities else None
    nat = tuple(groups.random_algebra(desc, rng, 1.0) for _ in range(n)) if natural else None
    return SwarmState(positions=positions, velocities=vel, natural_velocities=nat)


def _specialization_worst(rng: np.random.Generator) -> float:
    """rhs against directly coded Laplacian/oscillator flows."""
    worst = 0.0
    for _ in range(250):
        n = int(rng.integers(2, 6))
        g = graphs.randomize_weights(graphs.complete(n), rng, 0.2, 1.5)
        a = g.weights
        k_p = float(rng.uniform(0.3, 2.0))
        k_d = float(rng.uniform(0.3, 2.0))

        desc = groups.euclidean(2)
        spec = FlowSpec(FlowMode.FIRST_ORDER, k_p, g, morse.Quadratic(desc))
        st = _random_state(desc, n, rng, radius=2.0)
        x = np.array([p.payload for p in st.positions])
        rates = rhs(st, spec)
        for i in range(n):
            ref = -k_p * sum(a[i, j] * (x[i] - x[j]) for j in range(n))
            worst = max(worst, float(np.abs(rates.velocities[i].coords - ref).max()))

        spec2 = FlowSpec(FlowMode.SECOND_ORDER, k_p, g, morse.Quadratic(desc), k_d=k_d)
        st2 = _random_state(desc, n, rng, radius=2.0, velocities=True)
        x = np.array([p.payload for p in st2.positions])
        v = np.array([w.coords for w in st2.velocities])
        rates2 = rhs(st2, spec2)
        for i in range(n):
            ref = -k_p * sum(a[i, j] * (x[i] - x[j]) for j in range(n)) - k_d * v[i]
            worst = max(worst, float(np.abs(rates2.accelerations[i].coords - ref).max()))

        cdesc = groups.circle()
        cspec = FlowSpec(FlowMode.FIRST_ORDER, k_p, g, morse.CircleCosine())
        cst = _random_state(cdesc, n, rng, radius=np.pi * 0.99)
        th = np.array([p.payload for p in cst.positions])
        crates = rhs(cst, cspec)
        for i in range(n):
            ref = -k_p * sum(a[i, j] * np.sin(th[i] - th[j]) for j in range(n))
            worst = max(worst, abs(float(crates.velocities[i].coords[0]) - ref))

        cspec2 = FlowSpec(FlowMode.SECOND_ORDER, k_p, g, morse.CircleCosine(), k_d=k_d)
        cst2 = _random_state(cdesc, n, rng, radius=np.pi * 0.99, velocities=True)
        th = np.array([p.payload for p in cst2.positions])
        cv = np.array([w.coords[0] for w in cst2.velocities])
        crates2 = rhs(cst2, cspec2)
        for i in range(n):
            ref = -k_p * sum(a[i, j] * np.sin(th[i] - th[j]) for j in range(n)) - k_d * cv[i]
            worst = max(worst, abs(float(crates2.accelerations[i].coords[0]) - ref))
    return worst


def dynamics_suite(rng: np.random.Generator) -> CheckSuite:
    checks = []

    worst = _specialization_worst(rng)
    checks.append(Check("specialization_exactness", worst <= 1e-12, worst, 1e-12))

    worst = 0.0
    pot = morse.RotationTrace()
    desc = groups.rotation3()
    for _ in range(300):
        n = int(rng.integers(2, 6))
        st = _random_state(desc, n, rng)
        i, j = rng.choice(n, size=2, replace=False)
        gi = pot.lie_gradient(pair_error(st, int(i), int(j)))
        gj = pot.lie_gradient(pair_error(st, int(j), int(i)))
        worst = max(worst, (gi + gj).norm())
    checks.append(Check("pair_gradient_antisymmetry", worst <= 1e-9, worst, 1e-9))

    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 7))
        g = graphs.randomize_weights(graphs.complete(n), rng, 0.2, 1.5)
        spec = FlowSpec(FlowMode.FIRST_ORDER, 1.0, g, pot)
        st = _random_state(desc, n, rng)
        total = sum((t for t in consensus_terms(st, spec)), groups.zero_vector(desc))
        worst = max(worst, total.norm())
    checks.append(Check("consensus_terms_sum_zero", worst <= 1e-10, worst, 1e-10))

    # V_T decay (first order) and energy decay (second order) along a run
    g = graphs.random_tree(5, rng)
    spec = FlowSpec(FlowMode.FIRST_ORDER, 1.0, g, pot)
    st = _random_state(desc, 5, rng, radius=0.8)
    traj = integrate.simulate(st, spec, h=0.01, t_end=15.0, store_states=False)
    inc = float(np.diff(traj.potential).max()) if len(traj.potential) > 1 else 0.0
    checks.append(Check("first_order_potential_decay", inc <= 1e-8, inc, 1e-8))

    spec2 = FlowSpec(FlowMode.SECOND_ORDER, 1.0, g, pot, k_d=1.0)
    st2 = _random_state(desc, 5, rng, radius=0.8, velocities=True)
    traj2 = integrate.simulate(st2, spec2, h=0.01, t_end=15.0, store_states=False)
    inc2 = float(np.diff(traj2.energy).max()) if len(traj2.energy) > 1 else 0.0
    checks.append(Check("second_order_energy_decay", inc2 <= 1e-8, inc2, 1e-8))

    # coincident agents with equal velocities stay coincident
    g0 = groups.random_element(desc, rng)
    v0 = groups.random_algebra(desc, rng, 1.0)
    st3 = SwarmState(positions=(g0, g0, g0), velocities=(v0, v0, v0))
    spec3 = FlowSpec(FlowMode.SECOND_ORDER, 1.0, graphs.complete(3), pot, k_d=1.0)
    rates3 = rhs(st3, spec3)
    rel = _worst(
        (rates3.velocities[i] - rates3.velocities[0]).norm() for i in range(3)
    )
    checks.append(Check("consensus_manifold_invariant", rel <= 1e-12, rel, 1e-12))

    # left translation of all agents leaves pairwise errors unchanged
    worst = 0.0
    g = graphs.random_tree(4, rng)
    spec4 = FlowSpec(FlowMode.FIRST_ORDER, 1.0, g, pot)
    st4 = _random_state(desc, 4, rng, radius=0.6)
    hshift = groups.random_element(desc, rng)
    shifted = SwarmState(positions=tuple(groups.multiply(hshift, p) for p in st4.positions))
    t1 = integrate.simulate(st4, spec4, h=0.01, t_end=5.0, sample_every=50)
    t2 = integrate.simulate(shifted, spec4, h=0.01, t_end=5.0, sample_every=50)
    for s1, s2 in zip(t1.states, t2.states):
        for i in range(4):
            for j in range(i + 1, 4):
                e1 = pair_error(s1, i, j)
                e2 = pair_error(s2, i, j)
                worst = max(
                    worst,
                    groups.log_norm(groups.multiply(groups.inverse(e1), e2)),
                )
    checks.append(Check("left_invariance_of_flow", worst <= 1e-9, worst, 1e-9))

    worst = 0.0
    for _ in range(100):
        g = graphs.randomize_weights(graphs.complete(3), rng, 0.2, 1.5)
        spec5 = FlowSpec(FlowMode.FIRST_ORDER, 1.0, g, pot)
        st5 = _random_state(desc, 3, rng)
        hshift = groups.random_element(desc, rng)
        shifted = SwarmState(positions=tuple(groups.multiply(hshift, p) for p in st5.positions))
        worst = max(worst, abs(total_potential(st5, spec5) - total_potential(shifted, spec5)))
    checks.append(Check("potential_left_invariant", worst <= 1e-12, worst, 1e-12))

    # long-run orthonormality drift: 1e6 geodesic Euler position updates of a
    # free agent (constant rhs), with the drift-triggered projection applied
    # at a cadence of 1000 steps
    R = so3.random_haar(rng)
    step = so3.exp(1e-3 * rng.normal(size=3))
    for _ in range(1000):
        for _ in range(1000):
            R = R @ step
        if so3.orthonormality_drift(R) > 1e-9:
            R = so3.project(R)
    drift = so3.orthonormality_drift(R)
    checks.append(Check("orthonormality_drift_1e6_steps", drift <= 1e-9, drift, 1e-9))

    return CheckSuite("dynamics", checks)


# ---------------------------------------------------------------------------
# analysis suite


def analysis_suite(rng: np.random.Generator) -> CheckSuite:
    checks = []

    # factorization agreement at random states inside U (circle: exact
    # everywhere) and at consensus states on SO(3)
    worst_rel = 0.0
    cdesc = groups.circle()
    cpot = morse.CircleCosine()
    for _ in range(500):
        n = int(rng.integers(2, 6))
        g = graphs.randomize_weights(graphs.complete(n), rng, 0.2, 1.5)
        spec = FlowSpec(FlowMode.FIRST_ORDER, float(rng.uniform(0.5, 2.0)), g, cpot)
        st = _random_state(cdesc, n, rng, radius=0.25 * np.pi)
        diff = analysis.block_jacobian_consensus(st, spec) - analysis.numerical_jacobian(st, spec) / spec.k_p
        worst_rel = max(worst_rel, float(np.abs(diff).max()) / n)
    rdesc = groups.rotation3()
    rpot = morse.RotationTrace()
    for _ in range(40):
        n = int(rng.integers(2, 5))
        g = graphs.randomize_weights(graphs.complete(n), rng, 0.2, 1.5)
        spec = FlowSpec(FlowMode.FIRST_ORDER, 1.0, g, rpot)
        g0 = groups.random_element(rdesc, rng)
        st = SwarmState(positions=tuple(g0 for _ in range(n)))
        diff = analysis.block_jacobian_consensus(st, spec) - analysis.numerical_jacobian(st, spec)
        worst_rel = max(worst_rel, float(np.abs(diff).max()) / (n * 3))
    checks.append(Check("jacobian_factorization", worst_rel <= 1e-5, worst_rel, 1e-5))

    # kernel of the consensus Jacobian = consensus velocities
    worst = 0.0
    for g in (graphs.line(4), graphs.star(5), graphs.cycle(5), graphs.complete(4)):
        for desc, pot in ((cdesc, cpot), (rdesc, rpot)):
            m = desc.algebra_dim
            spec = FlowSpec(FlowMode.FIRST_ORDER, 1.0, g, pot)
            g0 = groups.random_element(desc, rng)
            st = SwarmState(positions=tuple(g0 for _ in range(g.n)))
            J = analysis.block_jacobian_consensus(st, spec)
            w, vecs = np.linalg.eigh(J)
            scale = float(np.abs(w).max())
            kernel = vecs[:, np.abs(w) < 1e-9 * scale]
            basis = np.zeros((g.n * m, m))
            for c in range(m):
                basis[c::m, c] = 1.0 / np.sqrt(g.n)
            proj = basis @ (basis.T @ kernel)
            worst = max(worst, float(np.abs(kernel - proj).max()))
            if kernel.shape[1] != m:
                worst = max(worst, 1.0)
    checks.append(Check("consensus_kernel_structure", worst <= 1e-6, worst, 1e-6))

    # second-order transfer [[0, I], [J, -k_d I]]
    worst = -np.inf
    for g in (graphs.line(4), graphs.complete(4)):
        spec = FlowSpec(FlowMode.FIRST_ORDER, 1.0, g, rpot)
        st = SwarmState(positions=tuple(groups.identity(rdesc) for _ in range(g.n)))
        J = analysis.block_jacobian_consensus(st, spec)
        M = analysis.second_order_block(J, k_d=1.0)
        eig = np.linalg.eigvals(M)
        nz = eig[np.abs(eig) > 1e-8]
        worst = max(worst, float(nz.real.max()))
    checks.append(Check("second_order_transfer", worst < 0.0, worst, 0.0))

    # sync Jacobian = consensus Jacobian + skew drift
    worst = 0.0
    for desc, pot in ((cdesc, cpot), (rdesc, rpot)):
        g = graphs.random_tree(4, rng)
        ws = [groups.random_algebra(desc, rng, 0.15) for _ in range(4)]
        spec = FlowSpec(FlowMode.SYNC, 1.0, g, pot)
        sol = analysis.solve_sync_tree(spec, ws)
        Js = analysis.numerical_jacobian(sol, spec)
        cons = FlowSpec(FlowMode.FIRST_ORDER, 1.0, g, pot)
        Jc = analysis.numerical_jacobian(SwarmState(positions=sol.positions), cons)
        drift = Js - Jc
        worst = max(worst, float(np.abs(drift + drift.T).max()))
    checks.append(Check("sync_drift_skew", worst <= 1e-6, worst, 1e-6))

    # converged tree equilibria are never non-trivial
    bad = 0
    settled = 0
    total = 0
    for desc, pot, radius in ((cdesc, cpot, np.pi * 0.999), (rdesc, rpot, np.pi * 0.98)):
        for _ in range(100):
            total += 1
            n = int(rng.integers(3, 9))
            g = graphs.random_tree(n, rng)
            spec = FlowSpec(FlowMode.FIRST_ORDER, 1.0, g, pot)
            st = _random_state(desc, n, rng, radius=radius)
            traj = integrate.simulate(
                st, spec, h=0.02, t_end=120.0, method="euler", sample_every=10,
            )
            rep = analysis.classify_equilibrium(traj.final_state(), spec, tol=1e-4)
            if rep.kind == analysis.EquilibriumKind.NOT_EQUILIBRIUM:
                continue
            settled += 1
            if rep.kind == analysis.EquilibriumKind.NON_TRIVIAL:
                bad += 1
    detail = f"{settled}/{total} runs settled"
    ok = bad == 0 and settled >= int(0.8 * total)
    checks.append(Check("tree_equilibria_trivial", ok, float(bad), 0.5, detail))

    return CheckSuite("analysis", checks)


SUITES = {
    "lie": lie_suite,
    "morse": morse_suite,
    "graph": graph_suite,
    "dynamics": dynamics_suite,
    "analysis": analysis_suite,
}


def run_suites(names, seed: int) -> list[CheckSuite]:
    """Run the named suites (or all) with one seeded generator each."""
    if isinstance(names, str):
        names = [names]
    if "all" in names:
        names = list(SUITE_NAMES)
    out = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}; choose from {SUITE_NAMES + ('all',)}")
        out.append(SUITES[name](np.random.default_rng(seed)))
    return out
