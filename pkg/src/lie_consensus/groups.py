"""Group and algebra primitives for S^1, R^n, SO(3) and direct products.

Every supported group carries a bi-invariant metric.  Elements are stored
in a payload whose shape depends on the group kind (angle, vector, 3x3
rotation matrix, or tuple of factor elements); algebra vectors are always
flat coordinate arrays of length ``descriptor.algebra_dim`` so the same
vector arithmetic works on every group.  With the chosen normalization on
so(3) (inner product = half trace metric = dot product of axis
coordinates) norms and gradients are directly comparable across groups.

Values are immutable after construction and operations are pure
functions, so everything here is safe to share between threads.

The ``stacked_*`` functions operate on arrays holding one entry per agent
(one array per primitive factor of the group) and are the vectorized
backbone of the dynamics and integrator modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import so3
from .errors import DescriptorMismatch

TWO_PI = 2.0 * math.pi

CIRCLE = "circle"
EUCLIDEAN = "euclid"
ROTATION3 = "so3"
PRODUCT = "product"


# ---------------------------------------------------------------------------
# descriptors


@dataclass(frozen=True)
class GroupDescriptor:
    """Identifies one of the supported groups.

    kind is one of "circle", "euclid", "so3", "product"; ``dim`` is the
    coordinate dimension for Euclidean groups and ``factors`` the ordered
    factor descriptors for products.
    """

    kind: str
    dim: int = 0
    factors: tuple["GroupDescriptor", ...] = ()

    @property
    def algebra_dim(self) -> int:
        if self.kind == CIRCLE:
            return 1
        if self.kind == EUCLIDEAN:
            return self.dim
        if self.kind == ROTATION3:
            return 3
        return sum(f.algebra_dim for f in self.factors)

    def __str__(self) -> str:
        return descriptor_token(self)


def circle() -> GroupDescriptor:
    return GroupDescriptor(CIRCLE)


def euclidean(n: int) -> GroupDescriptor:
    if n < 1:
        raise ValueError("Euclidean dimension must be >= 1")
    return GroupDescriptor(EUCLIDEAN, dim=n)


def rotation3() -> GroupDescriptor:
    return GroupDescriptor(ROTATION3)


def product(*factors: GroupDescriptor) -> GroupDescriptor:
    if not factors:
        raise ValueError("product needs at least one factor")
    return GroupDescriptor(PRODUCT, factors=tuple(factors))


def descriptor_token(desc: GroupDescriptor) -> str:
    """Serialize a descriptor to its text token."""
    if desc.kind == CIRCLE:
        return "circle"
    if desc.kind == EUCLIDEAN:
        return f"euclid:{desc.dim}"
    if desc.kind == ROTATION3:
        return "so3"
    return "product(" + ",".join(descriptor_token(f) for f in desc.factors) + ")"


def parse_descriptor(token: str) -> GroupDescriptor:
    """Parse ``circle``, ``euclid:<n>``, ``so3`` or ``product(...)``."""
    token = token.strip()
    if token == "circle":
        return circle()
    if token == "so3":
        return rotation3()
    if token.startswith("euclid:"):
        return euclidean(int(token.split(":", 1)[1]))
    if token.startswith("product(") and token.endswith(")"):
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
        return product(*(parse_descriptor(p) for p in parts))
    raise ValueError(f"unrecognized group token: {token!r}")


def primitive_factors(desc: GroupDescriptor) -> list[tuple[GroupDescriptor, slice]]:
    """Flatten nested products into primitive factors with algebra slices."""
    out: list[tuple[GroupDescriptor, slice]] = []
    offset = 0

    def rec(d: GroupDescriptor) -> None:
        nonlocal offset
        if d.kind == PRODUCT:
            for f in d.factors:
                rec(f)
        else:
            out.append((d, slice(offset, offset + d.algebra_dim)))
            offset += d.algebra_dim

    rec(desc)
    return out


# ---------------------------------------------------------------------------
# elements and algebra vectors


def canonical_angle(theta):
    """Map angles into [0, 2*pi)."""
    r = np.mod(theta, TWO_PI)
    return np.where(r >= TWO_PI, 0.0, r)


def principal_angle(theta):
    """Map angles into (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), TWO_PI)


_ORTHO_HARD_LIMIT = 1e-6


@dataclass(frozen=True, eq=False)
class GroupElement:
    descriptor: GroupDescriptor
    payload: object

    def __repr__(self) -> str:
        return f"GroupElement({descriptor_token(self.descriptor)}, {self.payload!r})"


@dataclass(frozen=True, eq=False)
class AlgebraVector:
    descriptor: GroupDescriptor
    coords: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def __add__(self, other: "AlgebraVector") -> "AlgebraVector":
        _require_same(self.descriptor, other.descriptor)
        return AlgebraVector(self.descriptor, self.coords + other.coords)

    def __sub__(self, other: "AlgebraVector") -> "AlgebraVector":
        _require_same(self.descriptor, other.descriptor)
        return AlgebraVector(self.descriptor, self.coords - other.coords)

    def __mul__(self, scalar: float) -> "AlgebraVector":
        return AlgebraVector(self.descriptor, self.coords * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "AlgebraVector":
        return AlgebraVector(self.descriptor, -self.coords)


def _require_same(a: GroupDescriptor, b: GroupDescriptor) -> None:
    if a != b:
        raise DescriptorMismatch(f"descriptor mismatch: {a} vs {b}")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


def group_element(desc: GroupDescriptor, payload) -> GroupElement:
    """Validating constructor; canonicalizes angles and rotation payloads."""
    if desc.kind == CIRCLE:
        return GroupElement(desc, float(canonical_angle(float(payload))))
    if desc.kind == EUCLIDEAN:
        vec = np.asarray(payload, dtype=float).reshape(-1)
        if vec.shape != (desc.dim,):
            raise ValueError(f"expected vector of length {desc.dim}, got {vec.shape}")
        return GroupElement(desc, _freeze(vec))
    if desc.kind == ROTATION3:
        R = np.asarray(payload, dtype=float)
        if R.shape != (3, 3):
            raise ValueError("rotation payload must be 3x3")
        drift = so3.orthonormality_drift(R)
        if drift > _ORTHO_HARD_LIMIT:
            raise ValueError(f"payload is not a rotation (orthonormality drift {drift:.2e})")
        if np.linalg.det(R) <= 0:
            raise ValueError("rotation payload must have positive determinant")
        if drift > 1e-15:
            R = so3.project(R)
        return GroupElement(desc, _freeze(R))
    if desc.kind == PRODUCT:
        parts = tuple(payload)
        if len(parts) != len(desc.factors):
            raise ValueError("product payload arity does not match descriptor")
        comps = []
        for f, p in zip(desc.factors, parts):
            comps.append(p if isinstance(p, GroupElement) and p.descriptor == f else group_element(f, p))
        return GroupElement(desc, tuple(comps))
    raise ValueError(f"unknown group kind {desc.kind!r}")


def algebra_vector(desc: GroupDescriptor, coords) -> AlgebraVector:
    vec = np.asarray(coords, dtype=float).reshape(-1)
    if vec.shape != (desc.algebra_dim,):
        raise ValueError(f"expected {desc.algebra_dim} algebra coordinates, got {vec.shape}")
    return AlgebraVector(desc, _freeze(vec))


def zero_vector(desc: GroupDescriptor) -> AlgebraVector:
    return algebra_vector(desc, np.zeros(desc.algebra_dim))


# ---------------------------------------------------------------------------
# group operations


def identity(desc: GroupDescriptor) -> GroupElement:
    if desc.kind == CIRCLE:
        return GroupElement(desc, 0.0)
    if desc.kind == EUCLIDEAN:
        return GroupElement(desc, _freeze(np.zeros(desc.dim)))
    if desc.kind == ROTATION3:
        return GroupElement(desc, _freeze(np.eye(3)))
    return GroupElement(desc, tuple(identity(f) for f in desc.factors))


def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    _require_same(g.descriptor, h.descriptor)
    d = g.descriptor
    if d.kind == CIRCLE:
        return GroupElement(d, float(canonical_angle(g.payload + h.payload)))
    if d.kind == EUCLIDEAN:
        return GroupElement(d, _freeze(g.payload + h.payload))
    if d.kind == ROTATION3:
        return GroupElement(d, _freeze(g.payload @ h.payload))
    return GroupElement(d, tuple(multiply(a, b) for a, b in zip(g.payload, h.payload)))


def inverse(g: GroupElement) -> GroupElement:
    d = g.descriptor
    if d.kind == CIRCLE:
        return GroupElement(d, float(canonical_angle(-g.payload)))
    if d.kind == EUCLIDEAN:
        return GroupElement(d, _freeze(-g.payload))
    if d.kind == ROTATION3:
        return GroupElement(d, _freeze(g.payload.T.copy()))
    return GroupElement(d, tuple(inverse(p) for p in g.payload))


def exp(X: AlgebraVector) -> GroupElement:
    """Group exponential; on these groups it is also the geodesic through e."""
    d = X.descriptor
    if d.kind == CIRCLE:
        return GroupElement(d, float(canonical_angle(X.coords[0])))
    if d.kind == EUCLIDEAN:
        return GroupElement(d, _freeze(X.coords.copy()))
    if d.kind == ROTATION3:
        return GroupElement(d, _freeze(so3.exp(X.coords)))
    parts = []
    for f, sl in primitive_slices(d):
        parts.append((f, X.coords[sl]))
    return _element_from_primitives(d, [exp(algebra_vector(f, c)) for f, c in parts])


def log(g: GroupElement, pi_tol: float = 1e-6) -> AlgebraVector:
    """Principal logarithm.

    Circle angles map to (-pi, pi]; rotations return axis-angle coordinates
    with angle in [0, pi) and raise AmbiguousLogarithm within ``pi_tol``
    of pi.
    """
    d = g.descriptor
    if d.kind == CIRCLE:
        return AlgebraVector(d, _freeze(np.array([float(principal_angle(g.payload))])))
    if d.kind == EUCLIDEAN:
        return AlgebraVector(d, _freeze(g.payload.copy()))
    if d.kind == ROTATION3:
        return AlgebraVector(d, _freeze(so3.log(g.payload, pi_tol=pi_tol)))
    coords = np.concatenate([log(p, pi_tol=pi_tol).coords for p in g.payload])
    return AlgebraVector(d, _freeze(coords))


def log_norm(g: GroupElement) -> float:
    """Geodesic distance to the identity; well-defined even at angle pi."""
    d = g.descriptor
    if d.kind == CIRCLE:
        return abs(float(principal_angle(g.payload)))
    if d.kind == EUCLIDEAN:
        return float(np.linalg.norm(g.payload))
    if d.kind == ROTATION3:
        return float(so3.angle(g.payload))
    return math.sqrt(sum(log_norm(p) ** 2 for p in g.payload))


def adjoint(g: GroupElement, X: AlgebraVector) -> AlgebraVector:
    """Ad_g X, the conjugation g * h * g^-1 linearized at identity.

    The Abelian factors act trivially; on SO(3) the rotation matrix acts
    on axis coordinates.  Preserves the inner product (ad-invariance).
    """
    _require_same(g.descriptor, X.descriptor)
    d = g.descriptor
    if d.kind in (CIRCLE, EUCLIDEAN):
        return X
    if d.kind == ROTATION3:
        return AlgebraVector(d, _freeze(g.payload @ X.coords))
    out = np.array(X.coords)
    for (f, sl), p in zip(primitive_slices(d), _primitive_elements(g)):
        if f.kind == ROTATION3:
            out[sl] = p.payload @ X.coords[sl]
    return AlgebraVector(d, _freeze(out))


def bracket(X: AlgebraVector, Y: AlgebraVector) -> AlgebraVector:
    """Lie bracket; zero on Abelian factors, cross product on so(3)."""
    _require_same(X.descriptor, Y.descriptor)
    d = X.descriptor
    out = np.zeros(d.algebra_dim)
    for f, sl in primitive_slices(d):
        if f.kind == ROTATION3:
            out[sl] = np.cross(X.coords[sl], Y.coords[sl])
    return AlgebraVector(d, _freeze(out))


def inner(X: AlgebraVector, Y: AlgebraVector) -> float:
    _require_same(X.descriptor, Y.descriptor)
    return float(np.dot(X.coords, Y.coords))


def random_element(desc: GroupDescriptor, rng: np.random.Generator) -> GroupElement:
    """Uniform sample: Haar measure on compact factors, standard normal on
    Euclidean factors."""
    if desc.kind == CIRCLE:
        return GroupElement(desc, float(rng.uniform(0.0, TWO_PI)))
    if desc.kind == EUCLIDEAN:
        return GroupElement(desc, _freeze(rng.normal(size=desc.dim)))
    if desc.kind == ROTATION3:
        return GroupElement(desc, _freeze(so3.random_haar(rng)))
    return GroupElement(desc, tuple(random_element(f, rng) for f in desc.factors))


def random_algebra(desc: GroupDescriptor, rng: np.random.Generator, max_norm: float) -> AlgebraVector:
    """Uniform in the ball of radius ``max_norm`` in the algebra."""
    if max_norm <= 0:
        raise ValueError("max_norm must be positive")
    m = desc.algebra_dim
    v = rng.normal(size=m)
    v /= np.linalg.norm(v)
    r = max_norm * rng.uniform() ** (1.0 / m)
    return algebra_vector(desc, r * v)


# ---------------------------------------------------------------------------
# payload (de)serialization used by config/state files


def element_to_payload(g: GroupElement):
    d = g.descriptor
    if d.kind == CIRCLE:
        return float(g.payload)
    if d.kind == EUCLIDEAN:
        return [float(x) for x in g.payload]
    if d.kind == ROTATION3:
        return [[float(x) for x in row] for row in g.payload]
    return [element_to_payload(p) for p in g.payload]


def element_from_payload(desc: GroupDescriptor, data) -> GroupElement:
    if desc.kind == PRODUCT:
        return group_element(desc, tuple(element_from_payload(f, d) for f, d in zip(desc.factors, data)))
    return group_element(desc, data)


# ---------------------------------------------------------------------------
# stacked (vectorized) representation: one array per primitive factor


def primitive_slices(desc: GroupDescriptor) -> list[tuple[GroupDescriptor, slice]]:
    return primitive_factors(desc)


def _primitive_elements(g: GroupElement) -> list[GroupElement]:
    if g.descriptor.kind == PRODUCT:
        out = []
        for p in g.payload:
            out.extend(_primitive_elements(p))
        return out
    return [g]


def _element_from_primitives(desc: GroupDescriptor, prims: list[GroupElement]) -> GroupElement:
    it = iter(prims)

    def rec(d: GroupDescriptor) -> GroupElement:
        if d.kind == PRODUCT:
            return GroupElement(d, tuple(rec(f) for f in d.factors))
        return next(it)

    return rec(desc)


def stack_positions(elements) -> list[np.ndarray]:
    """Pack group elements (same descriptor) into per-factor arrays."""
    elements = list(elements)
    desc = elements[0].descriptor
    prims = [_primitive_elements(g) for g in elements]
    return [
        np.array([p[fi].payload for p in prims], dtype=float)
        for fi in range(len(primitive_slices(desc)))
    ]


def unstack_positions(desc: GroupDescriptor, stacks: list[np.ndarray]) -> list[GroupElement]:
    factors = primitive_slices(desc)
    n = stacks[0].shape[0]
    out = []
    for k in range(n):
        prims = []
        for fi, (f, _) in enumerate(factors):
            if f.kind == CIRCLE:
                prims.append(GroupElement(f, float(stacks[fi][k])))
            else:
                prims.append(GroupElement(f, _freeze(stacks[fi][k])))
        out.append(_element_from_primitives(desc, prims))
    return out


def stacked_identity(desc: GroupDescriptor, n: int) -> list[np.ndarray]:
    out = []
    for f, _ in primitive_slices(desc):
        if f.kind == CIRCLE:
            out.append(np.zeros(n))
        elif f.kind == EUCLIDEAN:
            out.append(np.zeros((n, f.dim)))
        else:
            out.append(np.broadcast_to(np.eye(3), (n, 3, 3)).copy())
    return out


def _f_mul(f: GroupDescriptor, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if f.kind == CIRCLE:
        return canonical_angle(A + B)
    if f.kind == EUCLIDEAN:
        return A + B
    return A @ B


def _f_inv(f: GroupDescriptor, A: np.ndarray) -> np.ndarray:
    if f.kind == CIRCLE:
        return canonical_angle(-A)
    if f.kind == EUCLIDEAN:
        return -A
    return np.swapaxes(A, -1, -2)


def _f_exp(f: GroupDescriptor, V: np.ndarray) -> np.ndarray:
    # V has shape (n, algebra_dim of the factor)
    if f.kind == CIRCLE:
        return canonical_angle(V[..., 0])
    if f.kind == EUCLIDEAN:
        return V
    return so3.exp(V)


def stacked_multiply(desc, A: list, B: list) -> list:
    return [_f_mul(f, a, b) for (f, _), a, b in zip(primitive_slices(desc), A, B)]


def stacked_inverse(desc, A: list) -> list:
    return [_f_inv(f, a) for (f, _), a in zip(primitive_slices(desc), A)]


def stacked_mul_exp(desc, A: list, V: np.ndarray) -> list:
    """Geodesic update g <- g * exp(V) per agent; V has shape (n, m)."""
    out = []
    for (f, sl), a in zip(primitive_slices(desc), A):
        out.append(_f_mul(f, a, _f_exp(f, V[:, sl])))
    return out


def stacked_take(A: list, idx) -> list:
    return [a[idx] for a in A]


def stacked_copy(A: list) -> list:
    return [np.array(a) for a in A]


def stacked_normalize(desc, A: list, drift_tol: float = 1e-9) -> list:
    """Re-orthonormalize rotation factors whose drift exceeds the tolerance."""
    out = []
    for (f, _), a in zip(primitive_slices(desc), A):
        if f.kind == ROTATION3 and so3.orthonormality_drift(a) > drift_tol:
            out.append(so3.project(a))
        else:
            out.append(a)
    return out


def stacked_log_norm(desc, A: list) -> np.ndarray:
    """Per-agent geodesic distance to identity, safe at angle pi."""
    n = A[0].shape[0]
    acc = np.zeros(n)
    for (f, _), a in zip(primitive_slices(desc), A):
        if f.kind == CIRCLE:
            acc += principal_angle(a) ** 2
        elif f.kind == EUCLIDEAN:
            acc += np.sum(a * a, axis=-1)
        else:
            acc += so3.angle(a) ** 2
    return np.sqrt(acc)


def stacked_bracket(desc, U: np.ndarray, K: np.ndarray) -> np.ndarray:
    """Componentwise Lie bracket on (n, m) coordinate arrays."""
    out = np.zeros_like(K)
    for f, sl in primitive_slices(desc):
        if f.kind == ROTATION3:
            out[:, sl] = np.cross(U[:, sl], K[:, sl])
    return out


def dexpinv(desc, U: np.ndarray, K: np.ndarray) -> np.ndarray:
    """Inverse right-trivialized differential of exp, truncated after the
    double bracket (sufficient for a fourth-order chart integrator)."""
    b1 = stacked_bracket(desc, U, K)
    if not b1.any():
        return K
    return K - 0.5 * b1 + stacked_bracket(desc, U, b1) / 12.0
