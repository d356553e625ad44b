"""Generalized quaternions C(eps1, eps2).

The algebra has basis 1, i, j, k with

    i^2 = -eps1,  j^2 = -eps2,  k^2 = -eps1*eps2,  ij = k = -ji.

``QUAT = SignatureTag(1, 1)`` gives Hamilton's quaternions and
``PARA = SignatureTag(1, -1)`` the para-quaternions (split quaternions).

Two layers are provided.  :class:`GenQuaternion` is a small immutable value
type for interactive use and for the public operations.  The geometry modules
work on raw ``(..., 4)`` float arrays through :func:`qmul`, :func:`qconj` and
:func:`qsqnorm`, which broadcast and avoid per-element Python objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "CliffordError",
    "TagMismatchError",
    "SingularElementError",
    "SignatureTag",
    "PARA",
    "QUAT",
    "NULL_TOL",
    "GenQuaternion",
    "mul",
    "conj",
    "re",
    "im",
    "sqnorm",
    "inverse",
    "exp_generator",
    "qmul",
    "qconj",
    "qsqnorm",
    "unit",
]

#: Elements with ``|sqnorm| < NULL_TOL`` are treated as null (not invertible).
NULL_TOL = 1e-9

GENERATORS = {"i": 1, "j": 2, "k": 3}


class CliffordError(ValueError):
    """Invalid input to a generalized-quaternion operation."""


class TagMismatchError(CliffordError):
    pass


class SingularElementError(CliffordError):
    """Raised when inverting a null (zero-divisor) element."""


@dataclass(frozen=True)
class SignatureTag:
    """Signs (eps1, eps2) fixing the generator squares; eps3 = eps1*eps2."""

    eps1: int
    eps2: int

    def __post_init__(self):
        if self.eps1 not in (1, -1) or self.eps2 not in (1, -1):
            raise CliffordError(f"signs must be +1 or -1, got {self.eps1}, {self.eps2}")

    @property
    def eps3(self) -> int:
        return self.eps1 * self.eps2

    @property
    def eps(self) -> tuple[int, int, int]:
        return (self.eps1, self.eps2, self.eps3)

    @property
    def name(self) -> str:
        if self == QUAT:
            return "quat"
        if self == PARA:
            return "para"
        return f"C({self.eps1},{self.eps2})"

    @cached_property
    def norm_signs(self) -> np.ndarray:
        """Diagonal of the quadratic form ``|q|^2`` in the basis 1, i, j, k."""
        return np.array([1.0, self.eps1, self.eps2, self.eps3])

    @cached_property
    def table(self) -> np.ndarray:
        """Structure constants ``C[a, b, c]`` with ``e_a e_b = sum_c C[a,b,c] e_c``."""
        e1, e2, e3 = self.eps
        C = np.zeros((4, 4, 4))
        # (a, b) -> (coefficient, index)
        rules = {
            (0, 0): (1, 0), (0, 1): (1, 1), (0, 2): (1, 2), (0, 3): (1, 3),
            (1, 0): (1, 1), (2, 0): (1, 2), (3, 0): (1, 3),
            (1, 1): (-e1, 0), (2, 2): (-e2, 0), (3, 3): (-e3, 0),
            (1, 2): (1, 3), (2, 1): (-1, 3),
            (2, 3): (e2, 1), (3, 2): (-e2, 1),
            (3, 1): (e1, 2), (1, 3): (-e1, 2),
        }
        for (a, b), (coef, c) in rules.items():
            C[a, b, c] = coef
        C.setflags(write=False)
        return C

    def generator_square(self, gen: str) -> int:
        """Real value of ``gen**2`` (one of -eps_alpha)."""
        return -self.eps[GENERATORS[gen] - 1]


QUAT = SignatureTag(1, 1)
PARA = SignatureTag(1, -1)


# -- array layer ------------------------------------------------------------

def qmul(a, b, tag: SignatureTag) -> np.ndarray:
    """Broadcasting product of coefficient arrays with trailing axis of length 4."""
    return np.einsum("...a,...b,abc->...c", a, b, tag.table)


_CONJ = np.array([1.0, -1.0, -1.0, -1.0])


def qconj(a) -> np.ndarray:
    return np.asarray(a) * _CONJ


def qsqnorm(a, tag: SignatureTag) -> np.ndarray:
    """``x^2 + eps1 y^2 + eps2 z^2 + eps3 w^2`` along the last axis."""
    a = np.asarray(a)
    return np.sum(a * a * tag.norm_signs, axis=-1)


def unit(gen: str) -> np.ndarray:
    """Coefficient array of the generator ``'1'``, ``'i'``, ``'j'`` or ``'k'``."""
    out = np.zeros(4)
    out[0 if gen == "1" else GENERATORS[gen]] = 1.0
    return out


# -- value type -------------------------------------------------------------

@dataclass(frozen=True)
class GenQuaternion:
    """``x + y i + z j + w k`` in the algebra selected by ``tag``."""

    x: float
    y: float
    z: float
    w: float
    tag: SignatureTag = PARA

    @classmethod
    def from_array(cls, arr, tag: SignatureTag = PARA) -> GenQuaternion:
        x, y, z, w = (float(v) for v in arr)
        return cls(x, y, z, w, tag)

    @classmethod
    def generator(cls, gen: str, tag: SignatureTag = PARA) -> GenQuaternion:
        return cls.from_array(unit(gen), tag)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.w])

    def _check(self, other: GenQuaternion):
        if self.tag != other.tag:
            raise TagMismatchError(f"cannot combine {self.tag.name} and {other.tag.name}")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            return GenQuaternion(self.x + other, self.y, self.z, self.w, self.tag)
        self._check(other)
        return GenQuaternion.from_array(self.as_array() + other.as_array(), self.tag)

    __radd__ = __add__

    def __neg__(self):
        return GenQuaternion(-self.x, -self.y, -self.z, -self.w, self.tag)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return GenQuaternion.from_array(self.as_array() * other, self.tag)
        return mul(self, other)

    def __rmul__(self, other):
        # only scalars reach here; scalars are central
        return self * other

    def conj(self) -> GenQuaternion:
        return conj(self)

    @property
    def re(self) -> float:
        return self.x

    def im(self) -> GenQuaternion:
        return im(self)

    def sqnorm(self) -> float:
        return sqnorm(self)

    def inverse(self) -> GenQuaternion:
        return inverse(self)

    def isclose(self, other: GenQuaternion, atol: float = 1e-12) -> bool:
        self._check(other)
        return bool(np.allclose(self.as_array(), other.as_array(), rtol=0.0, atol=atol))


def mul(a: GenQuaternion, b: GenQuaternion) -> GenQuaternion:
    a._check(b)
    return GenQuaternion.from_array(qmul(a.as_array(), b.as_array(), a.tag), a.tag)


def conj(a: GenQuaternion) -> GenQuaternion:
    return GenQuaternion(a.x, -a.y, -a.z, -a.w, a.tag)


def re(a: GenQuaternion) -> float:
    return a.x


def im(a: GenQuaternion) -> GenQuaternion:
    return GenQuaternion(0.0, a.y, a.z, a.w, a.tag)


def sqnorm(a: GenQuaternion) -> float:
    """Real part of ``a * conj(a)``; indefinite for the para tag."""
    return float(qsqnorm(a.as_array(), a.tag))


def inverse(a: GenQuaternion, null_tol: float = NULL_TOL) -> GenQuaternion:
    n = sqnorm(a)
    if abs(n) < null_tol:
        raise SingularElementError(f"null element {a} (sqnorm={n:.3g}) has no inverse")
    return conj(a) * (1.0 / n)


def exp_generator(gen: str, t: float, tag: SignatureTag = PARA) -> GenQuaternion:
    """One-parameter subgroup ``exp(t * gen)``.

    Trigonometric when ``gen^2 = -1`` and hyperbolic when ``gen^2 = +1``.
    """
    if gen not in GENERATORS:
        raise CliffordError(f"unknown generator {gen!r}")
    coeffs = np.zeros(4)
    if tag.generator_square(gen) < 0:
        coeffs[0], coeffs[GENERATORS[gen]] = math.cos(t), math.sin(t)
    else:
        coeffs[0], coeffs[GENERATORS[gen]] = math.cosh(t), math.sinh(t)
    return GenQuaternion.from_array(coeffs, tag)
