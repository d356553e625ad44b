"""Quaternionic counterpart: weighted circle quotients of the quaternionic plane.

Closed forms for the Jacobi spectrum, sectional-curvature bounds, the
positivity region and pinching estimates, together with a numeric
cross-check that runs the generic reduction pipeline with the quaternionic
tag (generator ``i``) and the finite-difference oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import curvlab as cl
from . import reduction as rd
from .clifford import QUAT
from .projplane import inner

__all__ = [
    "OrbifoldError",
    "PreconditionError",
    "GLParams",
    "gl_spectrum",
    "gl_sectional_bounds",
    "positivity_predicate",
    "pinching_bounds",
    "CrosscheckReport",
    "gl_numeric_crosscheck",
]


class OrbifoldError(ValueError):
    pass


class PreconditionError(OrbifoldError):
    """Bounds requested outside the regime in which they hold."""


@dataclass(frozen=True)
class GLParams:
    """Coprime positive weights ``(p, q)``."""

    p: int
    q: int

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
                raise OrbifoldError(f"{name} must be a positive integer, got {v!r}")
        if math.gcd(int(self.p), int(self.q)) != 1:
            raise OrbifoldError(f"p and q must be coprime, got ({self.p}, {self.q})")

    def reduction_params(self, cbar: float = 4.0, convention: int = 1) -> rd.ReductionParams:
        return rd.ReductionParams(self.p, self.q, QUAT, cbar, convention)


def gl_spectrum(params: GLParams, V2: float) -> tuple[float, float, float]:
    """``(2x - 4, 2x - 4, -4x - 4)`` with ``x = p^4 q^2 / V2^3``.

    These are eigenvalues of ``Y -> R(X, Y) X``; sectional values are their
    negatives.
    """
    if not V2 > 0:
        raise OrbifoldError(f"|V|^2 must be positive, got {V2!r}")
    x = params.p ** 4 * params.q ** 2 / V2 ** 3
    return (2.0 * x - 4.0, 2.0 * x - 4.0, -4.0 * x - 4.0)


def gl_sectional_bounds(params: GLParams) -> tuple[float, float]:
    p, q = params.p, params.q
    if p <= q:
        r = q * q / (p * p)
    else:
        r = p ** 4 / q ** 4
    return (4.0 - 2.0 * r, 4.0 + 4.0 * r)


def positivity_predicate(params: GLParams) -> bool:
    """Strict ``p^2 < sqrt(2) q^2 < 2 sqrt(2) p^2``."""
    p2, q2 = params.p ** 2, params.q ** 2
    s = math.sqrt(2.0)
    return p2 < s * q2 < 2.0 * s * p2


def pinching_bounds(params: GLParams) -> tuple[float, float]:
    """Lower and upper estimates of the pinching constant in the positive regime."""
    if not positivity_predicate(params):
        raise PreconditionError(f"({params.p}, {params.q}) is outside the positive regime")
    p, q = params.p, params.q
    d2 = (q * q - p * p) / (p * p + q * q)
    d4 = (q ** 4 - p ** 4) / (p ** 4 + q ** 4)
    if p <= q:
        return (0.25 - 0.75 * d2, 0.25 + 0.75 * d4)
    return (0.25 + 0.75 * d4, 0.25 - 0.75 * d2)


@dataclass
class CrosscheckReport:
    params: GLParams
    seed: int
    lambda_u_range: tuple[float, float]
    lambda_u_ok: bool
    sectional_range: tuple[float, float]
    sectional_ok: bool
    bounds: tuple[float, float]
    spectrum_sign: int
    spectrum_rel_err: float
    spectrum_ok: bool
    spread_at_point: float
    spread_across_points: float
    points: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.lambda_u_ok and self.sectional_ok and self.spectrum_ok

    def to_dict(self) -> dict:
        return {
            "p": self.params.p,
            "q": self.params.q,
            "seed": self.seed,
            "lambda_u_sq_range": list(self.lambda_u_range),
            "lambda_u_sq_ok": self.lambda_u_ok,
            "sectional_range": list(self.sectional_range),
            "sectional_bounds": list(self.bounds),
            "sectional_ok": self.sectional_ok,
            "spectrum_sign": self.spectrum_sign,
            "spectrum_rel_err": self.spectrum_rel_err,
            "spectrum_ok": self.spectrum_ok,
            "osserman_spread_fd": self.spread_at_point,
            "lambda3_spread_across_points": self.spread_across_points,
            "points": self.points,
            "passed": self.passed,
        }


def gl_numeric_crosscheck(params: GLParams, npoints: int = 10, seed: int = 0, *,
                          planes: int = 5, tol_lambda_u: float = 1e-9,
                          tol_sectional: float = 1e-3, tol_spectrum: float = 1e-3,
                          h: float = cl.DEFAULT_H) -> CrosscheckReport:
    """Sample the quaternionic level set and compare closed forms with the oracle."""
    rp = params.reduction_params()
    bounds = gl_sectional_bounds(params)
    lo_n, hi_n = sorted((params.p ** 2, params.q ** 2))
    n2s, secs, errs, spreads, lam3, pts = [], [], [], [], [], []
    sign_votes = []
    for k in range(npoints):
        s = seed * 100_003 + k
        pt = rd.sample_point_on_K(rp, s)
        lift = rd.killing_lift(rp, pt.u.u)
        n2s.append(float(inner(lift, lift, QUAT)))
        ct = cl.riemann_fd(cl.build_chart(pt, rd.quotient_frame(rp, pt), rp, h=h))
        fd = cl.fd_spectrum(ct, np.eye(4)[0])
        closed = np.array(gl_spectrum(params, pt.n2))
        e = {sg: cl._rel_err(sg * fd, closed) for sg in (1, -1)}
        sg = min(e, key=e.get)
        sign_votes.append(sg)
        errs.append(e[sg])
        rng = np.random.default_rng(s + 17)
        for _ in range(planes):
            X = cl.random_chart_direction(ct.g, rng)
            Y = cl.random_chart_direction(ct.g, rng)
            secs.append(cl.sectional_from_tensor(ct, X, Y))
        spreads.append(cl.osserman_spread(rp, pt, 10, path="fd", seed=s, ct=ct))
        lam3.append(float(-closed[2]))
        pts.append({"n2": pt.n2, "closed": closed.tolist(), "fd": fd.tolist(), "rel_err": e[sg]})
    sign = max(set(sign_votes), key=sign_votes.count)
    consistent = all(v == sign for v in sign_votes)
    lam_range = (min(n2s), max(n2s))
    sec_range = (min(secs), max(secs))
    return CrosscheckReport(
        params=params,
        seed=seed,
        lambda_u_range=lam_range,
        lambda_u_ok=lo_n - tol_lambda_u <= lam_range[0] and lam_range[1] <= hi_n + tol_lambda_u,
        sectional_range=sec_range,
        sectional_ok=bounds[0] - tol_sectional <= sec_range[0] and sec_range[1] <= bounds[1] + tol_sectional,
        bounds=bounds,
        spectrum_sign=sign,
        spectrum_rel_err=max(errs),
        spectrum_ok=consistent and max(errs) <= tol_spectrum,
        spread_at_point=max(spreads),
        spread_across_points=max(lam3) - min(lam3),
        points=pts,
    )
