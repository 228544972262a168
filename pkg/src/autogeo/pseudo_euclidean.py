"""Signature-aware linear algebra in three dimensions.

Two metrics are supported: Euclidean ``diag(+,+,+)`` (index 0) and the
index-2 metric ``diag(+,-,-)`` whose 0-axis is timelike.  Vectors carry
contravariant components in an orthonormal frame.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import expm

EPS_NULL = 1e-9


@dataclass(frozen=True)
class Metric:
    """Diagonal metric with ``index`` minus signs (0 or 2)."""

    index: int = 0

    def __post_init__(self):
        if self.index not in (0, 2):
            raise ValueError(f"metric index must be 0 or 2, got {self.index}")

    @property
    def diag(self):
        return np.array([1.0, 1.0, 1.0]) if self.index == 0 else np.array([1.0, -1.0, -1.0])

    @property
    def G(self):
        return np.diag(self.diag)

    @property
    def name(self):
        return "euclid" if self.index == 0 else "pseudo"

    @classmethod
    def from_name(cls, name):
        try:
            return {"euclid": EUCLID, "pseudo": PSEUDO}[name]
        except KeyError:
            raise ValueError(f"unknown metric {name!r} (expected 'euclid' or 'pseudo')") from None


EUCLID = Metric(0)
PSEUDO = Metric(2)


class CausalClass(str, Enum):
    TIMELIKE = "timelike-positive"
    SPACELIKE = "spacelike-negative"
    NULL = "null"


def dot(v, w, g=EUCLID):
    return float(np.dot(g.diag * np.asarray(v, dtype=float), np.asarray(w, dtype=float)))


def causal_class(v, g=EUCLID):
    v = np.asarray(v, dtype=float)
    q = dot(v, v, g)
    scale = float(np.max(np.abs(v))) ** 2 if v.size else 0.0
    if abs(q) <= EPS_NULL * scale or scale == 0.0:
        return CausalClass.NULL
    return CausalClass.TIMELIKE if q > 0 else CausalClass.SPACELIKE


def norm(v, g=EUCLID):
    """Return ``(sqrt|v.v|, causal class)``."""
    return float(np.sqrt(abs(dot(v, v, g)))), causal_class(v, g)


def lowered_cross(v, w):
    """Covariant components ``e_abc v^b w^c`` (metric free, e_012 = +1)."""
    return np.cross(np.asarray(v, dtype=float), np.asarray(w, dtype=float))


def cross(v, w, g=EUCLID):
    """Metric cross product ``(v x w)^a = g^aa e_abc v^b w^c``."""
    return g.diag * lowered_cross(v, w)


def triple(a, b, c):
    """Parallelepipedal product: determinant with rows a, b, c."""
    return float(np.linalg.det(np.array([a, b, c], dtype=float)))


def dual2(w):
    """Planar dual ``(*w)_a = e_ba w^b`` with e_12 = +1."""
    w = np.asarray(w, dtype=float)
    return np.array([-w[1], w[0]])


def lie_algebra_element(rng, g=EUCLID):
    """Random element X of so(g), i.e. X^T G + G X = 0."""
    K = np.zeros((3, 3))
    iu = np.triu_indices(3, 1)
    K[iu] = rng.uniform(-1.0, 1.0, size=3)
    K -= K.T
    return g.diag[:, None] * K


def random_pseudo_rotation(seed, g=EUCLID):
    """Proper (pseudo-)rotation ``exp(X)`` for a seeded random X in so(g)."""
    rng = np.random.default_rng(seed)
    return expm(lie_algebra_element(rng, g))


def isometry_defect(R, g=EUCLID):
    R = np.asarray(R, dtype=float)
    return float(np.max(np.abs(R.T @ g.G @ R - g.G)))
