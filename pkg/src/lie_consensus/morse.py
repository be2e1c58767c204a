"""Spring-like potentials on the supported groups.

Each potential is polar (global minimum at the identity, no other local
minima), inversion symmetric, has a critical set closed under the group
operation, and its left- and right-translated gradients coincide.  The
concrete forms are

====================  =======================  ============================
group                 potential                critical points
====================  =======================  ============================
Euclidean             0.5 * ||x||^2            {0}
circle                1 - cos(theta)           {0, pi}
SO(3)                 trace(I - R)             {I} and rotations by pi
products              sum over factors         products of factor sets
====================  =======================  ============================

Under the half-trace metric the SO(3) gradient at exp(theta * hat(n)) is
2 sin(theta) n, so the gradient supremum is 2 and the gradient map is a
bijection onto the open ball of radius 2 for angles below pi/2.

Note on SO(3): rotations by pi about *any* axis are critical (the
gradient 2 sin(theta) n vanishes at theta = pi), so the critical locus is
{I} union a projective plane.  ``critical_set`` lists the identity and
the three coordinate-axis half-turns, which form a subgroup and are the
conventional representatives; ``nearest_critical`` and the equilibrium
classifier measure distance to the exact critical locus so that
anti-alignment about an arbitrary axis is recognized.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import groups, so3
from .errors import DescriptorMismatch, OutOfBijectiveRange
from .groups import AlgebraVector, GroupDescriptor, GroupElement
from .reporting import UNBOUNDED, Bound, Check, CheckSuite


@dataclass(frozen=True)
class CriticalSet:
    """Listed representatives of the critical points (a discrete subgroup)."""

    elements: tuple[GroupElement, ...]
    tolerance: float = 1e-9


def _check_descriptor(potential: "MorsePotential", g) -> None:
    if g.descriptor != potential.descriptor:
        raise DescriptorMismatch(
            f"potential on {potential.descriptor} applied to {g.descriptor}"
        )


class MorsePotential:
    """Base class; value/gradient are supplied by subclasses.

    The default Lie Hessian uses central differences of the gradient along
    exponential charts (step 1e-5) plus the connection term
    0.5 * [v, grad], which restores the symmetry of the covariant Hessian
    on non-Abelian factors.  Subclasses override with analytic forms.
    """

    descriptor: GroupDescriptor
    token: str

    def value(self, g: GroupElement) -> float:
        raise NotImplementedError

    def lie_gradient(self, g: GroupElement) -> AlgebraVector:
        raise NotImplementedError

    def lie_hessian(self, g: GroupElement, step: float = 1e-5) -> np.ndarray:
        _check_descriptor(self, g)
        d = self.descriptor
        m = d.algebra_dim
        H = np.empty((m, m))
        for k in range(m):
            e = np.zeros(m)
            e[k] = step
            gp = groups.multiply(g, groups.exp(groups.algebra_vector(d, e)))
            gm = groups.multiply(g, groups.exp(groups.algebra_vector(d, -e)))
            H[:, k] = (self.lie_gradient(gp).coords - self.lie_gradient(gm).coords) / (2 * step)
        grad = self.lie_gradient(g)
        for k in range(m):
            e = np.zeros(m)
            e[k] = 1.0
            H[:, k] += 0.5 * groups.bracket(groups.algebra_vector(d, e), grad).coords
        return H

    def critical_set(self) -> CriticalSet:
        raise NotImplementedError

    def lambda_sup(self) -> Bound:
        """Supremum of the gradient norm over the group."""
        raise NotImplementedError

    def mu_radius(self) -> Bound:
        """Radius of the largest ball on which the gradient map is bijective."""
        raise NotImplementedError

    def inverse_gradient(self, xi: AlgebraVector) -> GroupElement:
        """The unique g near identity with lie_gradient(g) = xi."""
        raise NotImplementedError

    def nearest_critical(self, g: GroupElement) -> tuple[GroupElement, float]:
        """Closest point of the exact critical locus and its distance."""
        raise NotImplementedError

    def _require_invertible(self, xi: AlgebraVector) -> None:
        if xi.descriptor != self.descriptor:
            raise DescriptorMismatch("algebra vector is on a different group")
        mu = self.mu_radius()
        if mu.bounded and xi.norm() >= mu.value:
            raise OutOfBijectiveRange(
                f"|xi| = {xi.norm():.6g} is not below mu = {mu.value:.6g}"
            )


class Quadratic(MorsePotential):
    """0.5 * ||x||^2 on a Euclidean group."""

    token = "quadratic"

    def __init__(self, descriptor: GroupDescriptor):
        if descriptor.kind != groups.EUCLIDEAN:
            raise ValueError("quadratic potential requires a Euclidean group")
        self.descriptor = descriptor

    def value(self, g):
        _check_descriptor(self, g)
        return 0.5 * float(np.dot(g.payload, g.payload))

    def lie_gradient(self, g):
        _check_descriptor(self, g)
        return groups.algebra_vector(self.descriptor, g.payload)

    def lie_hessian(self, g, step=1e-5):
        _check_descriptor(self, g)
        return np.eye(self.descriptor.dim)

    def critical_set(self):
        return CriticalSet((groups.identity(self.descriptor),))

    def lambda_sup(self):
        return UNBOUNDED

    def mu_radius(self):
        return UNBOUNDED

    def inverse_gradient(self, xi):
        self._require_invertible(xi)
        return groups.group_element(self.descriptor, xi.coords)

    def nearest_critical(self, g):
        return groups.identity(self.descriptor), float(np.linalg.norm(g.payload))

    def _stacked_value(self, stack):
        return 0.5 * np.sum(stack * stack, axis=-1)

    def _stacked_gradient(self, stack):
        return np.array(stack)


class CircleCosine(MorsePotential):
    """1 - cos(theta) on the circle; gradient sin(theta), Hessian cos(theta)."""

    token = "cos"

    def __init__(self, descriptor: GroupDescriptor | None = None):
        descriptor = descriptor or groups.circle()
        if descriptor.kind != groups.CIRCLE:
            raise ValueError("cosine potential requires the circle")
        self.descriptor = descriptor

    def value(self, g):
        _check_descriptor(self, g)
        return 1.0 - math.cos(g.payload)

    def lie_gradient(self, g):
        _check_descriptor(self, g)
        return groups.algebra_vector(self.descriptor, [math.sin(g.payload)])

    def lie_hessian(self, g, step=1e-5):
        _check_descriptor(self, g)
        return np.array([[math.cos(g.payload)]])

    def critical_set(self):
        return CriticalSet(
            (
                groups.identity(self.descriptor),
                groups.group_element(self.descriptor, math.pi),
            )
        )

    def lambda_sup(self):
        return Bound(1.0)

    def mu_radius(self):
        # sin is a bijection from (-pi/2, pi/2) onto (-1, 1)
        return Bound(1.0)

    def inverse_gradient(self, xi):
        self._require_invertible(xi)
        return groups.group_element(self.descriptor, math.asin(float(xi.coords[0])))

    def nearest_critical(self, g):
        t = float(groups.principal_angle(g.payload))
        if abs(t) <= 0.5 * math.pi:
            return groups.identity(self.descriptor), abs(t)
        return groups.group_element(self.descriptor, math.pi), math.pi - abs(t)

    def _stacked_value(self, stack):
        return 1.0 - np.cos(stack)

    def _stacked_gradient(self, stack):
        return np.sin(stack)[:, None]


def _hessian_tensor():
    E = [so3.hat(np.eye(3)[k]) for k in range(3)]
    S = np.empty((3, 3, 3, 3))
    for k in range(3):
        for l in range(3):
            S[k, l] = E[k] @ E[l] + E[l] @ E[k]
    return S


_SO3_HESS = _hessian_tensor()


class RotationTrace(MorsePotential):
    """trace(I - R) on SO(3).

    Along exp(theta * hat(n)) the value is 2 (1 - cos(theta)); the left
    Lie gradient is vee(R - R^T) = 2 sin(theta) n and the covariant
    Hessian has entries H_kl = -0.5 trace(R (E_k E_l + E_l E_k)).
    """

    token = "trace"

    def __init__(self, descriptor: GroupDescriptor | None = None):
        descriptor = descriptor or groups.rotation3()
        if descriptor.kind != groups.ROTATION3:
            raise ValueError("trace potential requires SO(3)")
        self.descriptor = descriptor

    def value(self, g):
        # clamp: round-off can push the trace of a near-identity rotation
        # a few ulp above 3, and the value contract is >= 0
        _check_descriptor(self, g)
        return max(0.0, 3.0 - float(np.trace(g.payload)))

    def lie_gradient(self, g):
        _check_descriptor(self, g)
        return groups.algebra_vector(self.descriptor, so3.vee(g.payload - g.payload.T))

    def lie_hessian(self, g, step=1e-5):
        _check_descriptor(self, g)
        return -0.5 * np.einsum("ab,klba->kl", g.payload, _SO3_HESS)

    def critical_set(self):
        mk = lambda d: groups.group_element(self.descriptor, np.diag(d))
        return CriticalSet(
            (
                groups.identity(self.descriptor),
                mk([-1.0, -1.0, 1.0]),
                mk([1.0, -1.0, -1.0]),
                mk([-1.0, 1.0, -1.0]),
            )
        )

    def lambda_sup(self):
        return Bound(2.0)

    def mu_radius(self):
        # theta * n -> 2 sin(theta) n is a bijection of the angle-pi/2 ball
        # onto the open ball of radius 2
        return Bound(2.0)

    def inverse_gradient(self, xi):
        self._require_invertible(xi)
        r = xi.norm()
        if r == 0.0:
            return groups.identity(self.descriptor)
        theta = math.asin(0.5 * r)
        return groups.group_element(self.descriptor, so3.exp(theta * xi.coords / r))

    def nearest_critical(self, g):
        theta = float(so3.angle(g.payload))
        if theta <= 0.5 * math.pi:
            return groups.identity(self.descriptor), theta
        w = so3.log(g.payload, pi_tol=0.0)
        axis = w / np.linalg.norm(w)
        half_turn = groups.group_element(self.descriptor, so3.exp(math.pi * axis))
        return half_turn, math.pi - theta

    def _stacked_value(self, stack):
        return np.maximum(0.0, 3.0 - np.trace(stack, axis1=-2, axis2=-1))

    def _stacked_gradient(self, stack):
        return so3.vee(stack - np.swapaxes(stack, -1, -2))


class ProductSum(MorsePotential):
    """Sum of factor potentials on a direct product (axioms hold factor-wise)."""

    def __init__(self, descriptor: GroupDescriptor, factors: list[MorsePotential]):
        if descriptor.kind != groups.PRODUCT:
            raise ValueError("product potential requires a product group")
        if len(factors) != len(descriptor.factors):
            raise ValueError("one factor potential per group factor required")
        for f, p in zip(descriptor.factors, factors):
            if p.descriptor != f:
                raise DescriptorMismatch("factor potential does not match group factor")
        self.descriptor = descriptor
        self.factors = list(factors)

    @property
    def token(self):
        return "product(" + ",".join(p.token for p in self.factors) + ")"

    def value(self, g):
        _check_descriptor(self, g)
        return sum(p.value(c) for p, c in zip(self.factors, g.payload))

    def lie_gradient(self, g):
        _check_descriptor(self, g)
        coords = np.concatenate(
            [p.lie_gradient(c).coords for p, c in zip(self.factors, g.payload)]
        )
        return groups.algebra_vector(self.descriptor, coords)

    def lie_hessian(self, g, step=1e-5):
        _check_descriptor(self, g)
        m = self.descriptor.algebra_dim
        H = np.zeros((m, m))
        off = 0
        for p, c in zip(self.factors, g.payload):
            k = p.descriptor.algebra_dim
            H[off : off + k, off : off + k] = p.lie_hessian(c, step=step)
            off += k
        return H

    def critical_set(self):
        factor_sets = [p.critical_set().elements for p in self.factors]
        elems = tuple(
            groups.group_element(self.descriptor, combo)
            for combo in itertools.product(*factor_sets)
        )
        return CriticalSet(elems)

    def lambda_sup(self):
        vals = [p.lambda_sup() for p in self.factors]
        if not all(b.bounded for b in vals):
            return UNBOUNDED
        return Bound(math.sqrt(sum(b.value**2 for b in vals)))

    def mu_radius(self):
        vals = [p.mu_radius() for p in self.factors]
        value = min(b.value for b in vals)
        return Bound(value, bounded=math.isfinite(value))

    def inverse_gradient(self, xi):
        self._require_invertible(xi)
        parts = []
        off = 0
        for p in self.factors:
            k = p.descriptor.algebra_dim
            parts.append(p.inverse_gradient(groups.algebra_vector(p.descriptor, xi.coords[off : off + k])))
            off += k
        return groups.group_element(self.descriptor, tuple(parts))

    def nearest_critical(self, g):
        elems, dists = [], []
        for p, c in zip(self.factors, g.payload):
            e, d = p.nearest_critical(c)
            elems.append(e)
            dists.append(d)
        return (
            groups.group_element(self.descriptor, tuple(elems)),
            math.sqrt(sum(d * d for d in dists)),
        )


def primitive_potentials(potential: MorsePotential) -> list[MorsePotential]:
    """Factor potentials aligned with groups.primitive_factors."""
    if isinstance(potential, ProductSum):
        out = []
        for p in potential.factors:
            out.extend(primitive_potentials(p))
        return out
    return [potential]


def default_potential(desc: GroupDescriptor) -> MorsePotential:
    if desc.kind == groups.CIRCLE:
        return CircleCosine(desc)
    if desc.kind == groups.EUCLIDEAN:
        return Quadratic(desc)
    if desc.kind == groups.ROTATION3:
        return RotationTrace(desc)
    return ProductSum(desc, [default_potential(f) for f in desc.factors])


def parse_potential(token: str, desc: GroupDescriptor) -> MorsePotential:
    """Resolve a config token (quadratic | cos | trace | product(...))."""
    token = token.strip()
    if token == "quadratic":
        return Quadratic(desc)
    if token == "cos":
        return CircleCosine(desc)
    if token == "trace":
        return RotationTrace(desc)
    if token.startswith("product(") and token.endswith(")"):
        if desc.kind != groups.PRODUCT:
            raise ValueError("product potential token on a non-product group")
        inner = token[len("product(") : -1]
        parts, depth, start = [], 0, 0
        for k, ch in enumerate(inner):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "," and depth == 0:
                parts.append(inner[start:k])
                start = k + 1
        parts.append(inner[start:])
        if len(parts) != len(desc.factors):
            raise ValueError("product potential arity does not match the group")
        return ProductSum(desc, [parse_potential(p, f) for p, f in zip(parts, desc.factors)])
    raise ValueError(f"unrecognized potential token: {token!r}")


# ---------------------------------------------------------------------------
# axiom verification


def _sample_elements(desc: GroupDescriptor, rng: np.random.Generator, n: int):
    return [groups.random_element(desc, rng) for _ in range(n)]


def verify_gpolar(
    potential: MorsePotential,
    samples: int,
    rng: np.random.Generator,
    value_tol: float = 1e-10,
    grad_tol: float = 1e-8,
    closure_tol: float = 1e-9,
) -> CheckSuite:
    """Sampling-based check of the four polar-potential axioms.

    (a) inversion symmetry V(g) = V(g^-1);
    (b) gradient antisymmetry grad(g) = -grad(g^-1);
    (c) Ad-invariance Ad_g grad(g) = grad(g);
    (d) closure of the listed critical points under multiplication.

    Works with any object exposing value/lie_gradient/critical_set, so
    deliberately broken potentials can be fed in by tests.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    desc = potential.descriptor
    elems = _sample_elements(desc, rng, samples)
    inv = [groups.inverse(g) for g in elems]

    worst_val = 0.0
    worst_anti = 0.0
    worst_ad = 0.0
    for g, gi in zip(elems, inv):
        worst_val = max(worst_val, abs(potential.value(g) - potential.value(gi)))
        grad = potential.lie_gradient(g)
        worst_anti = max(worst_anti, (grad + potential.lie_gradient(gi)).norm())
        worst_ad = max(worst_ad, (groups.adjoint(g, grad) - grad).norm())

    crit = potential.critical_set()
    worst_closure = 0.0
    for a in crit.elements:
        for b in crit.elements:
            ab = groups.multiply(a, b)
            dist = min(
                groups.log_norm(groups.multiply(groups.inverse(c), ab))
                for c in crit.elements
            )
            worst_closure = max(worst_closure, dist)

    return CheckSuite(
        name=f"gpolar[{getattr(potential, 'token', type(potential).__name__)}]",
        checks=[
            Check("inversion_symmetry", worst_val <= value_tol, worst_val, value_tol),
            Check("gradient_antisymmetry", worst_anti <= grad_tol, worst_anti, grad_tol),
            Check("gradient_ad_invariance", worst_ad <= grad_tol, worst_ad, grad_tol),
            Check("critical_set_closure", worst_closure <= closure_tol, worst_closure, closure_tol),
        ],
    )
