"""Weighted one-parameter reduction of the (para-)quaternionic projective plane.

The group ``G = {exp(t g)}`` (``g = j`` for the para tag, ``g = i`` for the
quaternionic tag) acts by

    phi_t(u0, u1, u2) = (exp(q t g) u0, exp(p t g) u1, exp(p t g) u2),

preserving the level set ``K0 = {q u0* g u0 + p u1* g u1 + p u2* g u2 = 0}``.
On ``K = K0 minus {n^2 = 0}`` the quotient ``K/G`` is a 4-manifold whose
curvature is given in closed form by a second fundamental form (Gauss
equation) plus a vertical-commutator correction (O'Neill).  Every quantity is
evaluated upstairs on a fixed representative ``u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import projplane as pp
from .clifford import PARA, SignatureTag, exp_generator, qconj, qmul, qsqnorm, unit
from .projplane import (
    GENS,
    DegeneratePointError,
    GeometryError,
    HorizontalVector,
    SamplingError,
    SpherePoint,
    inner,
    left_mul,
    project_out,
    right_mul,
)

__all__ = [
    "ReductionError",
    "SingularSetError",
    "ProjectionFailure",
    "ReductionParams",
    "PointOnK",
    "QuotientFrame",
    "SpectrumResult",
    "DELTA",
    "action_phi",
    "constraint",
    "constraint_value",
    "constraint_differential",
    "project_to_K0",
    "n_squared",
    "killing_lift",
    "killing_V",
    "lambda_op",
    "normal_directions",
    "quotient_vertical_basis",
    "h_part",
    "random_unit_direction",
    "h_orthonormal_basis",
    "quotient_frame",
    "second_fundamental_form",
    "plane_Q",
    "sectional_K0",
    "sectional_K0_gauss",
    "sectional_quotient",
    "quotient_numerator",
    "jacobi_bilinear",
    "jacobi_operator",
    "abc_coeffs",
    "jacobi_matrix",
    "jacobi_matrix_from_coeffs",
    "jacobi_matrix_spectrum",
    "closed_form_spectrum",
    "sample_point_on_K",
    "free_action_residual",
    "order_triple",
    "vv_sign",
    "vertical_commutator_coeff",
    "canonical_direction",
]

#: Minimal |n^2| for points of K; curvature grows like n^-6 near the singular set.
DELTA = 1e-6


class ReductionError(GeometryError):
    pass


class SingularSetError(ReductionError):
    """The point lies (numerically) on the singular set where n^2 = 0."""


class ProjectionFailure(ReductionError):
    """Newton projection onto the level set did not converge."""


@dataclass(frozen=True)
class ReductionParams:
    """Coprime weights ``(p, q)``, algebra tag and model curvature ``cbar``.

    ``cbar_sign_convention`` selects the sign convention of the reported Jacobi
    spectra: ``+1`` reports eigenvalues equal to the sectional curvature of
    the eigenplane (so ``cbar`` enters as ``+cbar``), ``-1`` reports the
    eigenvalues of ``Y -> R(X, Y) X`` for the usual
    ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y]`` (``cbar`` enters as ``-cbar``).
    """

    p: int
    q: int
    tag: SignatureTag = PARA
    cbar: float = 4.0
    cbar_sign_convention: int = 1

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
                raise ReductionError(f"{name} must be a positive integer, got {v!r}")
        if math.gcd(int(self.p), int(self.q)) != 1:
            raise ReductionError(f"p and q must be coprime, got ({self.p}, {self.q})")
        if self.cbar_sign_convention not in (1, -1):
            raise ReductionError("cbar_sign_convention must be +1 or -1")

    @property
    def gen(self) -> str:
        """Generator of the acting group: ``j`` for para, ``i`` otherwise."""
        return "j" if self.tag == PARA else "i"

    @property
    def weights(self) -> np.ndarray:
        return np.array([float(self.q), float(self.p), float(self.p)])

    @property
    def eps(self) -> tuple[int, int, int]:
        return self.tag.eps

    def with_convention(self, sign: int) -> ReductionParams:
        return ReductionParams(self.p, self.q, self.tag, self.cbar, sign)


@dataclass(frozen=True, eq=False)
class PointOnK:
    """Representative ``u`` of a point of K with its constraint residual and n^2."""

    u: SpherePoint
    residual: float
    n2: float

    @property
    def tag(self) -> SignatureTag:
        return self.u.tag


@dataclass(frozen=True, eq=False)
class QuotientFrame:
    """Unit vector ``e`` of the quotient-horizontal space with ``(J1 e, J2 e, J3 e)``."""

    base: PointOnK
    e: HorizontalVector
    basis: np.ndarray = field(repr=False)

    @classmethod
    def from_vector(cls, pt: PointOnK, e) -> QuotientFrame:
        X = e.X if isinstance(e, HorizontalVector) else np.asarray(e, dtype=float)
        tag = pt.tag
        basis = np.stack([X] + [right_mul(X, unit(g), tag) for g in GENS])
        return cls(pt, HorizontalVector(pt.u, X), basis)

    def gram(self) -> np.ndarray:
        return pp.gram(self.basis, self.base.tag)


# -- action and level set ---------------------------------------------------

def _weighted(params: ReductionParams, X) -> np.ndarray:
    return np.asarray(X) * params.weights[:, None]


def action_phi(params: ReductionParams, t: float, u) -> np.ndarray:
    tag = params.tag
    hq = exp_generator(params.gen, params.q * t, tag).as_array()
    hp = exp_generator(params.gen, params.p * t, tag).as_array()
    u = np.asarray(u, dtype=float)
    return np.stack([qmul(hq, u[0], tag), qmul(hp, u[1], tag), qmul(hp, u[2], tag)])


def constraint_value(params: ReductionParams, u) -> np.ndarray:
    """Full quaternion ``sum_a w_a conj(u_a) g u_a`` (its real part vanishes)."""
    tag = params.tag
    gu = left_mul(unit(params.gen), u, tag)
    terms = qmul(qconj(u), gu, tag)
    return params.weights @ terms


def constraint(params: ReductionParams, u) -> np.ndarray:
    """The i, j, k coefficients of the level-set function."""
    return constraint_value(params, u)[1:]


def constraint_differential(params: ReductionParams, w, X) -> np.ndarray:
    """Derivative of :func:`constraint` at ``w`` along each vector of the stack ``X``.

    Returns an array ``(3, m)`` (imaginary coefficients by columns).
    """
    tag = params.tag
    g = unit(params.gen)
    X = np.asarray(X, dtype=float)
    gw = left_mul(g, w, tag)
    wbar_g = qmul(qconj(w), np.broadcast_to(g, np.shape(w)), tag)
    # conj(x_a) g w_a + conj(w_a) g x_a, weighted and summed over a
    t1 = qmul(qconj(X), np.broadcast_to(gw, X.shape), tag)
    t2 = qmul(np.broadcast_to(wbar_g, X.shape), X, tag)
    d = np.einsum("a,mac->mc", params.weights, t1 + t2)
    return d[:, 1:].T


def n_squared(params: ReductionParams, u) -> float:
    """``q^2 |u0|^2 + p^2 |u1|^2 + p^2 |u2|^2`` with the algebra's square norm."""
    return float(params.weights**2 @ qsqnorm(u, params.tag))


def killing_lift(params: ReductionParams, u) -> np.ndarray:
    """Ambient vector ``g (q u0, p u1, p u2)`` generating the action."""
    return left_mul(unit(params.gen), _weighted(params, u), params.tag)


def normal_directions(params: ReductionParams, u) -> np.ndarray:
    """Stack of ``V i, V j, V k`` (lifts of J1 V, J2 V, J3 V), normal to K0."""
    V = killing_lift(params, u)
    return np.stack([right_mul(V, unit(g), params.tag) for g in GENS])


def _normalize(w, tag):
    nn = float(inner(w, w, tag))
    if nn <= 0.0:
        raise ProjectionFailure("iterate left the positive-norm region")
    return w / math.sqrt(nn)


def _backtrack(F, w, step, res0, min_factor=1.0 / 1024):
    f = 1.0
    while True:
        trial = w + f * step
        if np.linalg.norm(F(trial)) < res0 or f <= min_factor:
            return trial
        f *= 0.5


def _sphere_residual(params, w):
    return np.concatenate([constraint(params, w), [float(inner(w, w, params.tag)) - 1.0]])


def _sphere_jacobian(params, w):
    tag = params.tag
    E = np.eye(12).reshape(12, 3, 4)
    Jm = constraint_differential(params, w, E)
    Js = 2.0 * (w * tag.norm_signs).reshape(1, 12)
    return np.vstack([Jm, Js])


def project_to_K0(params: ReductionParams, u, *, directions=None, tol: float = 1e-12,
                  max_iter: int = 50, polish: int = 1, delta: float = DELTA) -> PointOnK:
    """Project ``u`` onto the level set inside the unit pseudo-sphere.

    By default each step is the least-norm (Gauss-Newton) correction for the
    three constraint equations together with ``g(w, w) = 1``, with
    backtracking.  If a stack ``directions`` is given, corrections move only
    along those vectors and the iterate is renormalized to the sphere after
    each step.
    """
    tag = params.tag
    if isinstance(u, SpherePoint):
        u = u.u
    w = np.asarray(u, dtype=float)
    if directions is None:
        F = lambda x: _sphere_residual(params, x)  # noqa: E731
    else:
        w = _normalize(w, tag)
        F = lambda x: constraint(params, x)  # noqa: E731
    extra = 0
    for _ in range(max_iter):
        f = F(w)
        res = float(np.linalg.norm(f))
        if res <= tol:
            if extra >= polish:
                break
            extra += 1
        if directions is None:
            step = -np.linalg.lstsq(_sphere_jacobian(params, w), f, rcond=None)[0].reshape(3, 4)
            w = _backtrack(F, w, step, res)
        else:
            Jm = constraint_differential(params, w, directions)
            try:
                s = np.linalg.solve(Jm, -f)
            except np.linalg.LinAlgError as exc:
                raise ProjectionFailure("singular constraint Jacobian") from exc
            w = _normalize(w + np.einsum("k,kac->ac", s, directions), tag)
    w = _normalize(w, tag)
    residual = float(np.linalg.norm(constraint(params, w)))
    if residual > max(tol, 1e-11):
        raise ProjectionFailure(f"no convergence in {max_iter} iterations "
                                f"(residual {residual:.3g})")
    n2 = n_squared(params, w)
    if abs(n2) < delta:
        raise SingularSetError(f"|n^2| = {abs(n2):.3g} below margin {delta:g}")
    return PointOnK(SpherePoint(w, tag), residual, n2)


def sample_point_on_K(params: ReductionParams, seed, *, delta: float = DELTA,
                      max_norm: float = 3.0, max_tries: int = 200) -> PointOnK:
    """Sphere sample projected onto K; deterministic per seed."""
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        start = pp.sample_sphere_point(rng, params.tag, max_norm=max_norm)
        try:
            pt = project_to_K0(params, start.u, delta=delta)
        except ReductionError:
            continue
        if np.linalg.norm(pt.u.u) <= max_norm:
            return pt
    raise SamplingError(f"no point of K accepted after {max_tries} starts")


# -- vector fields and subspaces -----------------------------------------------

def killing_V(params: ReductionParams, pt: PointOnK) -> HorizontalVector:
    u = pt.u.u
    return HorizontalVector(pt.u, pp.horizontal_part(u, killing_lift(params, u), params.tag))


def lambda_op(params: ReductionParams, pt: PointOnK, X) -> HorizontalVector:
    """Horizontal part of ``g (q x0, p x1, p x2)``; a skew operator."""
    X = X.X if isinstance(X, HorizontalVector) else X
    u = pt.u.u
    raw = left_mul(unit(params.gen), _weighted(params, X), params.tag)
    return HorizontalVector(pt.u, pp.horizontal_part(u, raw, params.tag))


def quotient_vertical_basis(params: ReductionParams, u) -> np.ndarray:
    """``u, ui, uj, uk`` plus the Killing lift: the directions killed by K -> K/G."""
    return np.concatenate([pp.vertical_basis(u, params.tag), killing_lift(params, u)[None]])


def _h_basis(params, u):
    return np.concatenate([pp.vertical_basis(u, params.tag),
                           killing_lift(params, u)[None], normal_directions(params, u)])


def h_part(params: ReductionParams, pt: PointOnK, X) -> np.ndarray:
    """Projection onto the orthogonal complement of ``u, ui, uj, uk, V, J1V, J2V, J3V``."""
    X = X.X if isinstance(X, HorizontalVector) else X
    return project_out(X, _h_basis(params, pt.u.u), params.tag)


def h_orthonormal_basis(params: ReductionParams, pt: PointOnK) -> tuple[np.ndarray, np.ndarray]:
    """g-orthonormal basis ``(4, 3, 4)`` of the quotient-horizontal space and its signs."""
    B = h_part(params, pt, np.eye(12).reshape(12, 3, 4)).reshape(12, 12)
    span = np.linalg.svd(B)[2][:4].reshape(4, 3, 4)
    w, R = np.linalg.eigh(pp.gram(span, params.tag))
    if np.min(np.abs(w)) < 1e-12:
        raise DegeneratePointError("degenerate metric on the horizontal space")
    basis = np.einsum("mn,mac->nac", R, span) / np.sqrt(np.abs(w))[:, None, None]
    return basis, np.sign(w)


def random_unit_direction(params: ReductionParams, pt: PointOnK, rng, *,
                          sign: int = 1, min_ratio: float = 0.25) -> np.ndarray:
    """Random quotient-horizontal ``X`` with ``<X, X> = sign``.

    Coefficients are Gaussian in a g-orthonormal basis; ``min_ratio`` rejects
    draws whose square length is tiny compared with the coefficient size.
    Near the null cone the coefficients ``a, b, c`` grow and their squares
    cancel in ``-a^2 + b^2 + c^2``, costing digits in the Jacobi matrix.
    """
    basis, signs = h_orthonormal_basis(params, pt)
    for _ in range(1000):
        c = rng.standard_normal(4)
        nn = float(np.sum(signs * c * c))
        if sign * nn > min_ratio * float(c @ c):
            return np.einsum("n,nac->ac", c, basis) / math.sqrt(sign * nn)
    raise SamplingError("no unit direction of the requested sign found")


def quotient_frame(params: ReductionParams, pt: PointOnK, rng=None) -> QuotientFrame:
    """Frame at ``pt``: random if ``rng`` is given, else :func:`canonical_direction`."""
    if rng is None:
        return QuotientFrame.from_vector(pt, canonical_direction(params, pt))
    return QuotientFrame.from_vector(pt, random_unit_direction(params, pt, rng))


def canonical_direction(params: ReductionParams, pt: PointOnK) -> np.ndarray:
    """Unit quotient-horizontal vector of least Euclidean length.

    The least-boosted choice keeps chart coordinates well scaled, which is
    what the finite-difference oracle needs.
    """
    tag = params.tag
    basis = _h_basis(params, pt.u.u).reshape(8, 12)
    # Euclidean orthonormal basis of the g-orthogonal complement of the 8 vectors
    metric = np.tile(tag.norm_signs, 3)
    _, sv, vt = np.linalg.svd(basis * metric)
    comp = vt[8:]
    G = (comp * metric) @ comp.T
    w, v = np.linalg.eigh(G)
    x = v[:, -1] / math.sqrt(w[-1])
    X = (x @ comp).reshape(3, 4)
    # fix the overall sign deterministically
    k = int(np.argmax(np.abs(X)))
    return X if X.flat[k] > 0 else -X


# -- closed-form curvature -----------------------------------------------------

def _vv(params, pt):
    V = killing_V(params, pt).X
    return float(inner(V, V, params.tag)), V


def _JL(params, pt, X):
    """Stack ``(J1 Lambda X, J2 Lambda X, J3 Lambda X)``."""
    L = lambda_op(params, pt, X).X
    return np.stack([right_mul(L, unit(g), params.tag) for g in GENS])


def plane_Q(X, Y, tag: SignatureTag) -> float:
    X = X.X if isinstance(X, HorizontalVector) else X
    Y = Y.X if isinstance(Y, HorizontalVector) else Y
    return float(inner(X, X, tag) * inner(Y, Y, tag) - inner(X, Y, tag) ** 2)


def _check_delta(vv, delta=DELTA):
    if abs(vv) < delta:
        raise SingularSetError(f"|<V, V>| = {abs(vv):.3g} below margin")


def second_fundamental_form(params: ReductionParams, pt: PointOnK, X, Y) -> np.ndarray:
    """``B(X, Y) = -(1/|V|^2) sum_i eps_i <Y, J_i Lambda X> J_i V``.

    ``|V|^2`` is the square length ``<V, V>`` of the Killing field, the Gram
    entry of the normal frame ``J_i V``.
    """
    X = X.X if isinstance(X, HorizontalVector) else X
    Y = Y.X if isinstance(Y, HorizontalVector) else Y
    tag = params.tag
    vv, V = _vv(params, pt)
    _check_delta(vv)
    JLX = _JL(params, pt, X)
    JV = np.stack([right_mul(V, unit(g), tag) for g in GENS])
    coef = np.array([e * float(inner(Y, JLX[i], tag)) for i, e in enumerate(tag.eps)])
    return -np.einsum("i,iac->ac", coef, JV) / vv


def _correction_terms(params, pt, X, Y):
    tag = params.tag
    JLX, JLY = _JL(params, pt, X), _JL(params, pt, Y)
    s = 0.0
    for i, e in enumerate(tag.eps):
        s += e * (float(inner(X, JLX[i], tag)) * float(inner(Y, JLY[i], tag))
                  - float(inner(Y, JLX[i], tag)) ** 2)
    return s


def _plane_args(X, Y, tag, tol):
    X = X.X if isinstance(X, HorizontalVector) else np.asarray(X, dtype=float)
    Y = Y.X if isinstance(Y, HorizontalVector) else np.asarray(Y, dtype=float)
    Q = plane_Q(X, Y, tag)
    if abs(Q) < tol:
        raise pp.DegeneratePlaneError(f"degenerate plane, Q = {Q:.3g}")
    return X, Y, Q


def sectional_K0(params: ReductionParams, pt: PointOnK, X, Y, tol: float = 1e-9) -> float:
    """Sectional curvature of K0 inside the projective plane (expanded Gauss form)."""
    tag = params.tag
    X, Y, Q = _plane_args(X, Y, tag, tol)
    vv, _ = _vv(params, pt)
    _check_delta(vv)
    kbar = pp.model_numerator(X, Y, params.cbar, tag) / Q
    return kbar + _correction_terms(params, pt, X, Y) / (vv * Q)


def sectional_K0_gauss(params: ReductionParams, pt: PointOnK, X, Y, tol: float = 1e-9) -> float:
    """Same as :func:`sectional_K0`, evaluated through ``B`` directly."""
    tag = params.tag
    X, Y, Q = _plane_args(X, Y, tag, tol)
    Bxy = second_fundamental_form(params, pt, X, Y)
    Bxx = second_fundamental_form(params, pt, X, X)
    Byy = second_fundamental_form(params, pt, Y, Y)
    kbar = pp.model_numerator(X, Y, params.cbar, tag) / Q
    return kbar + (float(inner(Bxx, Byy, tag)) - float(inner(Bxy, Bxy, tag))) / Q


def quotient_numerator(params: ReductionParams, pt: PointOnK, X, Y) -> float:
    """``K(X, Y) Q(X, Y)`` for the quotient metric; a quartic form, no division by Q."""
    tag = params.tag
    X = X.X if isinstance(X, HorizontalVector) else X
    Y = Y.X if isinstance(Y, HorizontalVector) else Y
    vv, _ = _vv(params, pt)
    _check_delta(vv)
    LY = lambda_op(params, pt, Y).X
    corr = _correction_terms(params, pt, X, Y) + 3.0 * float(inner(X, LY, tag)) ** 2
    return pp.model_numerator(X, Y, params.cbar, tag) + corr / vv


def sectional_quotient(params: ReductionParams, pt: PointOnK, X, Y, tol: float = 1e-9) -> float:
    """Sectional curvature of K/G: Gauss term plus ``3 <X, Lambda Y>^2 / (|V|^2 Q)``."""
    X, Y, Q = _plane_args(X, Y, params.tag, tol)
    return quotient_numerator(params, pt, X, Y) / Q


def jacobi_bilinear(params: ReductionParams, pt: PointOnK, X, basis) -> np.ndarray:
    """Symmetric form ``S(Y, Z) = <R(Y, X) X, Z>`` on ``basis`` by polarization."""
    n = len(basis)
    S = np.empty((n, n))
    diag = [quotient_numerator(params, pt, X, b) for b in basis]
    for a in range(n):
        S[a, a] = diag[a]
        for b in range(a + 1, n):
            full = quotient_numerator(params, pt, X, basis[a] + basis[b])
            S[a, b] = S[b, a] = 0.5 * (full - diag[a] - diag[b])
    return S


def jacobi_operator(params: ReductionParams, pt: PointOnK, X) -> np.ndarray:
    """Jacobi operator on ``(J1 X, J2 X, J3 X)`` from the closed-form sectional curvature.

    Matrix in that basis, in the sign convention of ``params`` (see
    :class:`ReductionParams`).
    """
    X = X.X if isinstance(X, HorizontalVector) else X
    tag = params.tag
    basis = np.stack([right_mul(X, unit(g), tag) for g in GENS])
    S = jacobi_bilinear(params, pt, X, basis)
    G = pp.gram(basis, tag)
    return params.cbar_sign_convention * np.linalg.solve(G, S)


def abc_coeffs(params: ReductionParams, pt: PointOnK, X) -> tuple[float, float, float]:
    """``(<X, J1 Lambda X>, <X, J2 Lambda X>, <X, J3 Lambda X>)``."""
    X = X.X if isinstance(X, HorizontalVector) else X
    JLX = _JL(params, pt, X)
    a, b, c = (float(inner(X, JLX[i], params.tag)) for i in range(3))
    return a, b, c


def jacobi_matrix_from_coeffs(a: float, b: float, c: float, n2: float, cbar: float = 4.0,
                          tag: SignatureTag = PARA) -> np.ndarray:
    """Jacobi matrix from the coefficients ``(a, b, c)`` and the square length ``n2``.

    For the para tag this is the array

        (2/n2) [[2a^2+b^2+c^2 - cbar n2/2, -3ab, -3ac],
                [3ab, -a^2-2b^2+c^2 - cbar n2/2, -3bc],
                [3ac, -3bc, -a^2+b^2-2c^2 - cbar n2/2]],

    i.e. ``(2/n2)(s I + 3 a a^T G) - cbar I`` with ``G = diag(1, -1, -1)``
    and ``s = -a^2 + b^2 + c^2``.  The quaternionic mirror is
    ``(2/n2)(|a|^2 I - 3 a a^T) - cbar I``.
    """
    v = np.array([a, b, c], dtype=float)
    G = np.diag(np.asarray(tag.eps, dtype=float))
    I3 = np.eye(3)
    if tag == PARA:
        s = -(v @ G @ v)
        return (2.0 / n2) * (s * I3 + 3.0 * np.outer(v, v) @ G) - cbar * I3
    return (2.0 / n2) * ((v @ G @ v) * I3 - 3.0 * np.outer(v, v) @ G).T - cbar * I3


def jacobi_matrix(params: ReductionParams, pt: PointOnK, X) -> np.ndarray:
    """Jacobi matrix on ``(J1 X, J2 X, J3 X)`` at a unit quotient-horizontal ``X``.

    The array is the transpose of the coordinate matrix of ``Y -> R(X, Y) X``
    (rows index the basis vectors), so its eigenvalues are those of the
    literal operator, i.e. the negatives of the sectional-convention values.
    """
    X = X.X if isinstance(X, HorizontalVector) else X
    vv, _ = _vv(params, pt)
    _check_delta(vv)
    a, b, c = abc_coeffs(params, pt, X)
    return jacobi_matrix_from_coeffs(a, b, c, pt.n2, params.cbar, params.tag)


def jacobi_matrix_spectrum(params: ReductionParams, pt: PointOnK, X) -> np.ndarray:
    """Eigenvalues of :func:`jacobi_matrix` in the convention of ``params``, sorted
    as ``(pair, pair, single)``."""
    ev = np.linalg.eigvals(jacobi_matrix(params, pt, X))
    if np.max(np.abs(ev.imag)) > 1e-8 * max(1.0, float(np.max(np.abs(ev)))):
        raise ReductionError("Jacobi matrix has complex eigenvalues")
    ev = -params.cbar_sign_convention * np.sort(ev.real)
    return order_triple(ev)


def order_triple(ev) -> np.ndarray:
    """Order three eigenvalues as ``(l1, l2, l3)`` with ``l1, l2`` the closest pair."""
    ev = np.sort(np.asarray(ev, dtype=float))
    if abs(ev[1] - ev[0]) <= abs(ev[2] - ev[1]):
        return np.array([ev[0], ev[1], ev[2]])
    return np.array([ev[1], ev[2], ev[0]])


@dataclass(frozen=True)
class SpectrumResult:
    """Closed-form Jacobi spectrum at a point with square length ``n2``.

    ``raw`` is the uncalibrated formula ``(-2x - 4, -2x - 4, 4x - 4)`` with
    ``x = p^4 q^2 / n2^3``; ``calibrated`` is ``sigma (cbar - 2x, cbar - 2x,
    cbar + 4x)`` in the active convention ``sigma``.
    """

    raw: tuple[float, float, float]
    calibrated: tuple[float, float, float]
    raw_combo: float
    combo: float
    convention: int


def closed_form_spectrum(params: ReductionParams, n2: float, delta: float = 0.0) -> SpectrumResult:
    if n2 == 0 or abs(n2) < delta:
        raise SingularSetError(f"n^2 = {n2!r} lies on the singular set")
    x = params.p ** 4 * params.q ** 2 / n2 ** 3
    raw = (-2.0 * x - 4.0, -2.0 * x - 4.0, 4.0 * x - 4.0)
    sig, c = params.cbar_sign_convention, params.cbar
    cal = (sig * (c - 2.0 * x), sig * (c - 2.0 * x), sig * (c + 4.0 * x))
    return SpectrumResult(raw, cal, raw[2] + 2.0 * raw[0], cal[2] + 2.0 * cal[0], sig)


def vv_sign(params: ReductionParams, pt: PointOnK) -> int:
    """Sign relating ``<V, V>`` to ``n^2`` (``-1`` for para, ``+1`` for quat)."""
    vv, _ = _vv(params, pt)
    r = vv / pt.n2
    if abs(abs(r) - 1.0) > 1e-8:
        raise ReductionError(f"<V, V> / n^2 = {r:.6g} is not +-1")
    return 1 if r > 0 else -1


def vertical_commutator_coeff(params: ReductionParams, pt: PointOnK, X, Y) -> float:
    """Coefficient of ``V`` in the vertical part of ``[X, Y]``: ``2 <X, Lambda Y> / <V, V>``."""
    X = X.X if isinstance(X, HorizontalVector) else X
    vv, _ = _vv(params, pt)
    _check_delta(vv)
    return 2.0 * float(inner(X, lambda_op(params, pt, Y).X, params.tag)) / vv


def free_action_residual(params: ReductionParams, pt: PointOnK, t: float) -> float:
    """Relative distance from ``phi_t(u)`` to the fiber ``{u h}``.

    Minimizes ``|phi_t(u) - u h|`` over every ``h`` in the algebra (a linear
    least-squares problem), which bounds the distance over unit ``h`` from
    below.  A positive value witnesses that ``phi_t`` moves the point.
    """
    u = pt.u.u
    tag = params.tag
    M = np.stack([right_mul(u, unit(g), tag).ravel() for g in ("1",) + GENS], axis=1)
    target = action_phi(params, t, u).ravel()
    h, *_ = np.linalg.lstsq(M, target, rcond=None)
    return float(np.linalg.norm(target - M @ h) / np.linalg.norm(u))
