"""Potential tests: frozen values checked against finite-difference,
sampling and bisection oracles."""

import math

import numpy as np
import pytest

from lie_consensus import groups as gr
from lie_consensus import morse
from lie_consensus.errors import DescriptorMismatch, OutOfBijectiveRange


def fd_directional(pot, g, x, h=1e-5):
    """Central-difference directional derivative of the potential at g."""
    vp = pot.value(gr.multiply(g, gr.exp(h * x)))
    vm = pot.value(gr.multiply(g, gr.exp(-h * x)))
    return (vp - vm) / (2 * h)


def fd_hessian(pot, g, h=1e-4):
    """Geodesic polarization oracle: quadratic form from 1-d second
    differences of V along exp charts, then polarized to a matrix."""
    desc = pot.descriptor
    m = desc.algebra_dim

    def q(coords):
        x = gr.algebra_vector(desc, coords)
        return (
            pot.value(gr.multiply(g, gr.exp(h * x)))
            - 2 * pot.value(g)
            + pot.value(gr.multiply(g, gr.exp(-h * x)))
        ) / h**2

    H = np.empty((m, m))
    eye = np.eye(m)
    for a in range(m):
        for b in range(a, m):
            H[a, b] = H[b, a] = 0.25 * (q(eye[a] + eye[b]) - q(eye[a] - eye[b]))
    return H


def _potentials():
    return [
        morse.Quadratic(gr.euclidean(2)),
        morse.CircleCosine(),
        morse.RotationTrace(),
        morse.default_potential(gr.product(gr.circle(), gr.rotation3())),
    ]


def test_values_table():
    cos = morse.CircleCosine()
    assert cos.value(gr.group_element(gr.circle(), math.pi)) == pytest.approx(2.0)
    trace = morse.RotationTrace()
    half_turn = gr.group_element(gr.rotation3(), np.diag([-1.0, -1.0, 1.0]))
    assert trace.value(half_turn) == pytest.approx(4.0)
    quad = morse.Quadratic(gr.euclidean(2))
    assert quad.value(gr.identity(gr.euclidean(2))) == 0.0


def test_value_nonnegative_zero_only_at_identity():
    rng = np.random.default_rng(0)
    for pot in _potentials():
        assert pot.value(gr.identity(pot.descriptor)) == pytest.approx(0.0, abs=1e-15)
        for _ in range(200):
            g = gr.random_element(pot.descriptor, rng)
            v = pot.value(g)
            assert v >= 0.0
            if gr.log_norm(g) > 1e-3:
                assert v > 0.0


def test_gradient_examples():
    cos = morse.CircleCosine()
    g = gr.group_element(gr.circle(), math.pi / 2)
    assert cos.lie_gradient(g).coords[0] == pytest.approx(1.0)

    for pot in _potentials():
        assert pot.lie_gradient(gr.identity(pot.descriptor)).norm() <= 1e-15

    # frozen value computed with the directional-derivative oracle below
    trace = morse.RotationTrace()
    rz = gr.exp(gr.algebra_vector(gr.rotation3(), [0, 0, math.pi / 2]))
    grad = trace.lie_gradient(rz)
    np.testing.assert_allclose(grad.coords, [0.0, 0.0, 2.0], atol=1e-12)
    for k in range(3):
        x = gr.algebra_vector(gr.rotation3(), np.eye(3)[k])
        assert gr.inner(grad, x) == pytest.approx(fd_directional(trace, rz, x), abs=1e-6)


def test_gradient_matches_fd_everywhere():
    rng = np.random.default_rng(1)
    worst = 0.0
    for pot in _potentials():
        for _ in range(250):
            g = gr.random_element(pot.descriptor, rng)
            x = gr.random_algebra(pot.descriptor, rng, 1.0)
            worst = max(worst, abs(gr.inner(pot.lie_gradient(g), x) - fd_directional(pot, g, x)))
    assert worst <= 1e-6


def test_gradient_antisymmetry():
    rng = np.random.default_rng(2)
    for pot in _potentials():
        for _ in range(300):
            g = gr.random_element(pot.descriptor, rng)
            assert (pot.lie_gradient(g) + pot.lie_gradient(gr.inverse(g))).norm() <= 1e-8


def test_hessian_examples():
    cos = morse.CircleCosine()
    assert cos.lie_hessian(gr.identity(gr.circle()))[0, 0] == pytest.approx(1.0)
    assert cos.lie_hessian(gr.group_element(gr.circle(), math.pi))[0, 0] == pytest.approx(-1.0)
    quad = morse.Quadratic(gr.euclidean(2))
    rng = np.random.default_rng(3)
    np.testing.assert_array_equal(
        quad.lie_hessian(gr.random_element(gr.euclidean(2), rng)), np.eye(2)
    )


def test_hessian_against_geodesic_oracle():
    rng = np.random.default_rng(4)
    for pot in _potentials():
        for _ in range(25):
            g = gr.random_element(pot.descriptor, rng)
            H = pot.lie_hessian(g)
            assert np.abs(H - H.T).max() <= 1e-8
            np.testing.assert_allclose(H, fd_hessian(pot, g), atol=1e-5)


def test_hessian_positive_definite_in_bijective_neighborhood():
    rng = np.random.default_rng(5)
    for pot in _potentials():
        for _ in range(200):
            x = gr.random_algebra(pot.descriptor, rng, 0.5 * math.pi * 0.999)
            g = gr.exp(x)
            if gr.log_norm(g) >= 0.5 * math.pi:
                continue
            assert np.linalg.eigvalsh(pot.lie_hessian(g))[0] > 0.0


def test_fd_hessian_fallback_matches_analytic():
    # the base-class finite-difference path used by custom potentials
    rng = np.random.default_rng(6)
    pot = morse.RotationTrace()
    for _ in range(10):
        g = gr.random_element(pot.descriptor, rng)
        analytic = pot.lie_hessian(g)
        fd = morse.MorsePotential.lie_hessian(pot, g)
        np.testing.assert_allclose(fd, analytic, atol=1e-7)


def test_critical_sets():
    cos = morse.CircleCosine()
    angles = sorted(c.payload for c in cos.critical_set().elements)
    assert angles == pytest.approx([0.0, math.pi])

    trace = morse.RotationTrace()
    elems = trace.critical_set().elements
    assert len(elems) == 4
    expected = {
        (1.0, 1.0, 1.0),
        (-1.0, -1.0, 1.0),
        (1.0, -1.0, -1.0),
        (-1.0, 1.0, -1.0),
    }
    got = {tuple(np.round(np.diag(e.payload), 12)) for e in elems}
    assert got == expected

    torus = morse.default_potential(gr.product(gr.circle(), gr.circle()))
    assert len(torus.critical_set().elements) == 4

    quad = morse.Quadratic(gr.euclidean(3))
    (only,) = quad.critical_set().elements
    assert gr.log_norm(only) == 0.0


def test_critical_points_flat_and_saddled():
    for pot in _potentials():
        for c in pot.critical_set().elements:
            assert pot.lie_gradient(c).norm() <= 1e-9
            if gr.log_norm(c) > 1e-9:
                assert np.linalg.eigvalsh(pot.lie_hessian(c))[0] <= -1e-6


def test_lambda_sup():
    assert morse.CircleCosine().lambda_sup().value == 1.0
    quad_bound = morse.Quadratic(gr.euclidean(2)).lambda_sup()
    assert not quad_bound.bounded and math.isinf(quad_bound.value)

    # dense-sampling oracle on SO(3): max gradient norm over a fine angle grid
    trace = morse.RotationTrace()
    d = gr.rotation3()
    grid = np.linspace(0.0, math.pi, 2001)
    sampled = max(
        trace.lie_gradient(gr.exp(gr.algebra_vector(d, [0, 0, t]))).norm() for t in grid
    )
    lam = trace.lambda_sup().value
    assert lam == pytest.approx(2.0)
    assert sampled <= lam + 1e-9
    assert sampled == pytest.approx(lam, abs=1e-5)

    prod = morse.default_potential(gr.product(gr.circle(), gr.rotation3()))
    assert prod.lambda_sup().value == pytest.approx(math.sqrt(1.0 + 4.0))
    mixed = morse.default_potential(gr.product(gr.circle(), gr.euclidean(1)))
    assert not mixed.lambda_sup().bounded


def test_mu_radius():
    assert morse.CircleCosine().mu_radius().value == 1.0
    assert morse.RotationTrace().mu_radius().value == 2.0
    assert not morse.Quadratic(gr.euclidean(1)).mu_radius().bounded
    torus = morse.default_potential(gr.product(gr.circle(), gr.circle()))
    assert torus.mu_radius().value == 1.0
    mixed = morse.default_potential(gr.product(gr.circle(), gr.euclidean(1)))
    assert mixed.mu_radius().value == 1.0

    # injectivity oracle: gradients of distinct points with angle < pi/2
    # never collide on SO(3)
    rng = np.random.default_rng(7)
    trace = morse.RotationTrace()
    d = gr.rotation3()
    pts = [gr.exp(gr.random_algebra(d, rng, 0.5 * math.pi * 0.999)) for _ in range(400)]
    grads = np.array([trace.lie_gradient(p).coords for p in pts])
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            sep = gr.log_norm(gr.multiply(gr.inverse(pts[i]), pts[j]))
            if sep > 1e-6:
                assert np.linalg.norm(grads[i] - grads[j]) > 1e-9


def test_inverse_gradient():
    cos = morse.CircleCosine()
    c = gr.circle()

    # bisection oracle for sin(theta) = 0.5 on (-pi/2, pi/2)
    lo, hi = 0.0, 0.5 * math.pi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if math.sin(mid) < 0.5:
            lo = mid
        else:
            hi = mid
    theta = cos.inverse_gradient(gr.algebra_vector(c, [0.5])).payload
    assert theta == pytest.approx(0.5 * (lo + hi), abs=1e-12)
    assert theta == pytest.approx(0.523598776, abs=1e-9)

    for pot in _potentials():
        e = pot.inverse_gradient(gr.zero_vector(pot.descriptor))
        assert gr.log_norm(e) == 0.0

    trace = morse.RotationTrace()
    with pytest.raises(OutOfBijectiveRange):
        trace.inverse_gradient(gr.algebra_vector(gr.rotation3(), [0, 0, 2.0]))

    rng = np.random.default_rng(8)
    for pot in _potentials():
        mu = pot.mu_radius()
        radius = min(mu.value, 2.0) * 0.95
        for _ in range(100):
            xi = gr.random_algebra(pot.descriptor, rng, radius)
            g = pot.inverse_gradient(xi)
            assert (pot.lie_gradient(g) - xi).norm() <= 1e-9


def test_nearest_critical():
    trace = morse.RotationTrace()
    d = gr.rotation3()
    g = gr.exp(gr.algebra_vector(d, [0, 0, 0.3]))
    nearest, dist = trace.nearest_critical(g)
    assert gr.log_norm(nearest) == 0.0
    assert dist == pytest.approx(0.3)
    # beyond pi/2 the nearest critical point is the half-turn about the
    # element's own axis, not necessarily a listed representative
    axis = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
    g = gr.exp(gr.algebra_vector(d, (math.pi - 0.05) * axis))
    nearest, dist = trace.nearest_critical(g)
    assert dist == pytest.approx(0.05, abs=1e-9)
    assert trace.lie_gradient(nearest).norm() <= 1e-12


def test_verify_gpolar_passes_for_table_potentials():
    rng = np.random.default_rng(9)
    for pot in _potentials():
        suite = morse.verify_gpolar(pot, 2000, rng)
        assert suite.passed, suite.as_dict()


class BrokenCosine:
    """1 - cos(theta) + 0.1 sin(theta): not inversion symmetric."""

    def __init__(self):
        self.descriptor = gr.circle()
        self.token = "broken"

    def value(self, g):
        return 1.0 - math.cos(g.payload) + 0.1 * math.sin(g.payload)

    def lie_gradient(self, g):
        return gr.algebra_vector(self.descriptor, [math.sin(g.payload) + 0.1 * math.cos(g.payload)])

    def critical_set(self):
        return morse.CriticalSet((gr.identity(self.descriptor),))


def test_verify_gpolar_catches_broken_potential():
    # at theta = pi/2 the two sides differ by 0.2
    rng = np.random.default_rng(10)
    suite = morse.verify_gpolar(BrokenCosine(), 500, rng)
    by_name = {c.name: c for c in suite.checks}
    assert not by_name["inversion_symmetry"].passed
    assert not suite.passed


def test_potential_tokens():
    desc = gr.product(gr.circle(), gr.rotation3())
    pot = morse.parse_potential("product(cos,trace)", desc)
    assert pot.token == "product(cos,trace)"
    assert morse.parse_potential("cos", gr.circle()).token == "cos"
    with pytest.raises(ValueError):
        morse.parse_potential("cos", gr.rotation3())
    with pytest.raises(ValueError):
        morse.parse_potential("nope", gr.circle())


def test_descriptor_mismatch_errors():
    cos = morse.CircleCosine()
    with pytest.raises(DescriptorMismatch):
        cos.value(gr.identity(gr.rotation3()))
    with pytest.raises(DescriptorMismatch):
        cos.inverse_gradient(gr.zero_vector(gr.rotation3()))
