"""The ambient space H^3, its unit pseudo-sphere and the projective plane.

Ambient vectors are ``(3, 4)`` float arrays: three generalized quaternions
``(u0, u1, u2)``.  The real inner product is ``g(u, v) = Re(conj(u) . v)``,
which for the para tag has signature (6, 6).  The projective plane is the
quotient of ``{g(u, u) = 1}`` by right multiplication with unit elements;
everything here is computed upstairs on a fixed representative ``u`` using
horizontal lifts, i.e. vectors g-orthogonal to ``u, ui, uj, uk``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clifford import PARA, SignatureTag, qmul, unit

__all__ = [
    "GeometryError",
    "DegeneratePointError",
    "DegeneratePlaneError",
    "SamplingError",
    "SpherePoint",
    "HorizontalVector",
    "inner",
    "gram",
    "right_mul",
    "left_mul",
    "project_out",
    "ambient_inner",
    "sample_sphere_point",
    "vertical_basis",
    "horizontal_part",
    "project_pi_horizontal",
    "apply_J",
    "model_numerator",
    "model_sectional",
]

GENS = ("i", "j", "k")
PIVOT_TOL = 1e-9


class GeometryError(ValueError):
    pass


class DegeneratePointError(GeometryError):
    """Gram matrix of a spanning set is (numerically) singular."""


class DegeneratePlaneError(GeometryError):
    pass


class SamplingError(RuntimeError):
    pass


def inner(u, v, tag: SignatureTag) -> np.ndarray:
    """``g(u, v)``; broadcasts over leading axes of stacked ``(..., 3, 4)`` arrays."""
    return np.einsum("...ac,...ac,c->...", u, v, tag.norm_signs)


def gram(vectors, tag: SignatureTag) -> np.ndarray:
    """Gram matrix of a stack ``(n, 3, 4)`` of ambient vectors."""
    return np.einsum("mac,nac,c->mn", vectors, vectors, tag.norm_signs)


def right_mul(u, h, tag: SignatureTag) -> np.ndarray:
    """Componentwise ``u_a h``."""
    return qmul(u, np.broadcast_to(h, np.shape(u)), tag)


def left_mul(h, u, tag: SignatureTag) -> np.ndarray:
    """Componentwise ``h u_a``."""
    return qmul(np.broadcast_to(h, np.shape(u)), u, tag)


def project_out(X, basis, tag: SignatureTag, pivot_tol: float = PIVOT_TOL) -> np.ndarray:
    """Remove from ``X`` its g-orthogonal projection onto ``span(basis)``.

    ``X`` may be a single vector ``(3, 4)`` or a stack ``(m, 3, 4)``.
    """
    G = gram(basis, tag)
    scale = max(1.0, float(np.max(np.abs(G))))
    if np.min(np.abs(np.linalg.eigvalsh(G))) < pivot_tol * scale:
        raise DegeneratePointError("degenerate Gram matrix in orthogonal projection")
    X = np.asarray(X, dtype=float)
    stacked = X.ndim == 3
    Xs = X if stacked else X[None]
    rhs = np.einsum("nac,mac,c->nm", basis, Xs, tag.norm_signs)
    coef = np.linalg.solve(G, rhs)
    out = Xs - np.einsum("nm,nac->mac", coef, basis)
    return out if stacked else out[0]


@dataclass(frozen=True, eq=False)
class SpherePoint:
    """Point ``u`` with ``g(u, u) = 1``."""

    u: np.ndarray
    tag: SignatureTag = PARA

    def residual(self) -> float:
        return abs(float(inner(self.u, self.u, self.tag)) - 1.0)


@dataclass(frozen=True, eq=False)
class HorizontalVector:
    """Horizontal lift ``X`` at ``base`` (orthogonal to ``u, ui, uj, uk``)."""

    base: SpherePoint
    X: np.ndarray

    @property
    def tag(self) -> SignatureTag:
        return self.base.tag


def ambient_inner(u, v, tag: SignatureTag = PARA) -> float:
    return float(inner(u, v, tag))


def sample_sphere_point(seed, tag: SignatureTag = PARA, max_norm: float = 3.0,
                        max_tries: int = 10_000) -> SpherePoint:
    """Pseudo-random point of the unit pseudo-sphere, deterministic per seed.

    Gaussian coefficients are rescaled to ``g(u, u) = 1``; draws with
    non-positive norm or Euclidean length above ``max_norm`` (after rescaling)
    are rejected so samples stay away from the null cone.
    """
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        x = rng.standard_normal((3, 4))
        n = float(inner(x, x, tag))
        if n <= 0.0:
            continue
        u = x / np.sqrt(n)
        if np.linalg.norm(u) > max_norm:
            continue
        return SpherePoint(u, tag)
    raise SamplingError(f"no sphere point accepted after {max_tries} draws")


def vertical_basis(u, tag: SignatureTag) -> np.ndarray:
    """Stack ``(u, ui, uj, uk)``: sphere normal plus fiber directions."""
    return np.stack([u] + [right_mul(u, unit(g), tag) for g in GENS])


def horizontal_part(u, X, tag: SignatureTag) -> np.ndarray:
    return project_out(X, vertical_basis(u, tag), tag)


def project_pi_horizontal(p: SpherePoint, X) -> HorizontalVector:
    if isinstance(X, HorizontalVector):
        X = X.X
    return HorizontalVector(p, horizontal_part(p.u, X, p.tag))


def apply_J(h: HorizontalVector, alpha: int) -> HorizontalVector:
    """Right multiplication of the lift by the ``alpha``-th generator (1, 2, 3)."""
    if alpha not in (1, 2, 3):
        raise ValueError(f"alpha must be 1, 2 or 3, got {alpha}")
    return HorizontalVector(h.base, right_mul(h.X, unit(GENS[alpha - 1]), h.tag))


def _lift(v):
    return v.X if isinstance(v, HorizontalVector) else np.asarray(v, dtype=float)


def model_numerator(X, Y, cbar: float, tag: SignatureTag) -> float:
    """``<Rbar(X, Y) Y, X>`` of the projective plane with constant ``cbar``.

    ``(cbar / 4) (Q + 3 sum_a eps_a <X, J_a Y>^2)``; valid for any pair of
    horizontal vectors, not only orthonormal ones.
    """
    X, Y = _lift(X), _lift(Y)
    xx, yy, xy = inner(X, X, tag), inner(Y, Y, tag), inner(X, Y, tag)
    Q = xx * yy - xy * xy
    s = 0.0
    for eps, g in zip(tag.eps, GENS):
        s += eps * float(inner(X, right_mul(Y, unit(g), tag), tag)) ** 2
    return float(cbar / 4.0 * (Q + 3.0 * s))


def model_sectional(p: SpherePoint, X, Y, cbar: float = 4.0, tol: float = 1e-9) -> float:
    """Sectional curvature ``(cbar/4) (1 + 3 |Pr X|^2 / eps(X))`` of the plane.

    ``Pr`` projects onto ``span(Y, J1 Y, J2 Y, J3 Y)`` using the
    pseudo-orthonormal expansion; ``X`` and ``Y`` must be pseudo-orthonormal.
    """
    tag = p.tag
    X, Y = _lift(X), _lift(Y)
    xx, yy, xy = (float(inner(a, b, tag)) for a, b in ((X, X), (Y, Y), (X, Y)))
    Q = xx * yy - xy * xy
    if abs(Q) < tol:
        raise DegeneratePlaneError(f"degenerate plane, Q = {Q:.3g}")
    if abs(abs(xx) - 1.0) > 1e-8 or abs(abs(yy) - 1.0) > 1e-8 or abs(xy) > 1e-8:
        raise GeometryError("model_sectional expects a pseudo-orthonormal pair")
    span = [Y] + [right_mul(Y, unit(g), tag) for g in GENS]
    pr2 = 0.0
    for Z in span:
        zz = float(inner(Z, Z, tag))
        pr2 += float(inner(X, Z, tag)) ** 2 / zz
    return float(cbar / 4.0 * (1.0 + 3.0 * pr2 / np.sign(xx)))
