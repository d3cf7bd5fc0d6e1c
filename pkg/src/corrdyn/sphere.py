"""Points of the extended complex plane, the chordal metric, Mobius maps.

Infinity is a tagged value (``SpherePoint.is_inf``), never a huge float.
Array code uses the same convention: a complex array of finite values plus a
boolean mask marking the points at infinity (their complex slot is 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# default "same point" tolerance (chordal) for set operations
SAME_POINT_TOL = 1e-9


@dataclass(frozen=True)
class SpherePoint:
    value: complex = 0j
    is_inf: bool = False

    def __post_init__(self):
        if self.is_inf:
            object.__setattr__(self, "value", 0j)
            return
        v = complex(self.value)
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise ValueError(f"non-finite coordinates for a finite point: {v!r}")
        # adding 0.0 folds -0.0 into 0.0 so text forms are canonical
        object.__setattr__(self, "value", complex(v.real + 0.0, v.imag + 0.0))

    def __str__(self):
        if self.is_inf:
            return "inf"
        return f"{self.value.real!r},{self.value.imag!r}"

    def __repr__(self):
        return "SpherePoint(inf)" if self.is_inf else f"SpherePoint({self.value!r})"

    @classmethod
    def parse(cls, text: str) -> "SpherePoint":
        """Read the ``re,im`` / ``inf`` text form (a bare real or ``3+2j`` also works)."""
        t = text.strip()
        if t.lower() in ("inf", "infinity", "oo"):
            return INF
        if "," in t:
            re_s, im_s = t.split(",", 1)
            return cls(complex(float(re_s), float(im_s)))
        return cls(complex(t.replace(" ", "").replace("i", "j")))


INF = SpherePoint(is_inf=True)


def point(x) -> SpherePoint:
    """Coerce a number, string or SpherePoint into a SpherePoint."""
    if isinstance(x, SpherePoint):
        return x
    if isinstance(x, str):
        return SpherePoint.parse(x)
    x = complex(x)
    if math.isinf(x.real) or math.isinf(x.imag):
        return INF
    return SpherePoint(x)


def chordal_dist(p, q) -> float:
    p, q = point(p), point(q)
    if p.is_inf and q.is_inf:
        return 0.0
    if p.is_inf or q.is_inf:
        z = q.value if p.is_inf else p.value
        return 2.0 / math.hypot(1.0, abs(z))
    num = 2.0 * abs(p.value - q.value)
    if num == 0.0:
        return 0.0
    return min(2.0, num / (math.hypot(1.0, abs(p.value)) * math.hypot(1.0, abs(q.value))))


def close(p, q, tol: float = SAME_POINT_TOL) -> bool:
    return chordal_dist(p, q) < tol


def nearest(p, points) -> tuple[int, float]:
    """Index and chordal distance of the element of ``points`` closest to ``p``."""
    best, best_d = -1, math.inf
    for i, q in enumerate(points):
        d = chordal_dist(p, q)
        if d < best_d:
            best, best_d = i, d
    return best, best_d


# -- array versions -----------------------------------------------------------

def to_xyz(values: np.ndarray, inf_mask: np.ndarray | None = None) -> np.ndarray:
    """Inverse stereographic projection onto the unit sphere (infinity = north pole).

    Euclidean distance between the returned rows equals the chordal distance.
    """
    values = np.asarray(values, dtype=complex)
    out = np.empty(values.shape + (3,))
    m2 = np.abs(values) ** 2
    den = 1.0 + m2
    out[..., 0] = 2.0 * values.real / den
    out[..., 1] = 2.0 * values.imag / den
    out[..., 2] = (m2 - 1.0) / den
    if inf_mask is not None and np.any(inf_mask):
        out[inf_mask] = (0.0, 0.0, 1.0)
    return out


def chordal_dist_array(z1, inf1, z2, inf2) -> np.ndarray:
    """Elementwise (broadcasting) chordal distance between tagged arrays."""
    z1, z2 = np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex)
    inf1, inf2 = np.asarray(inf1, dtype=bool), np.asarray(inf2, dtype=bool)
    n1 = np.hypot(1.0, np.abs(z1))
    n2 = np.hypot(1.0, np.abs(z2))
    with np.errstate(invalid="ignore"):
        d = np.minimum(2.0, 2.0 * np.abs(z1 - z2) / (n1 * n2))
        d = np.where(inf1 & ~inf2, 2.0 / n2, d)
        d = np.where(inf2 & ~inf1, 2.0 / n1, d)
    return np.where(inf1 & inf2, 0.0, d)


# -- Mobius maps ----------------------------------------------------------------

@dataclass(frozen=True)
class MobiusMap:
    """z -> (m11 z + m12) / (m21 z + m22)."""

    m11: complex
    m12: complex
    m21: complex
    m22: complex

    def __post_init__(self):
        for name in ("m11", "m12", "m21", "m22"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        scale = max(abs(self.m11), abs(self.m12), abs(self.m21), abs(self.m22))
        if scale == 0.0 or abs(self.det) <= 1e-15 * scale * scale:
            raise ValueError(f"degenerate Mobius matrix (det={self.det!r})")

    @classmethod
    def identity(cls) -> "MobiusMap":
        return cls(1, 0, 0, 1)

    @property
    def det(self) -> complex:
        return self.m11 * self.m22 - self.m12 * self.m21

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    def __call__(self, p) -> SpherePoint:
        return mobius_apply(self, p)

    def inverse(self) -> "MobiusMap":
        return MobiusMap(self.m22, -self.m12, -self.m21, self.m11)

    def compose(self, other: "MobiusMap") -> "MobiusMap":
        """self o other."""
        m = self.matrix @ other.matrix
        return MobiusMap(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def is_proportional(self, other: "MobiusMap", tol: float = 1e-12) -> bool:
        a = self.matrix.ravel()
        b = other.matrix.ravel()
        k = int(np.argmax(np.abs(a)))
        if b[k] == 0:
            return False
        lam = a[k] / b[k]
        return bool(np.max(np.abs(a - lam * b)) <= tol * np.max(np.abs(a)))

    def apply_array(self, values: np.ndarray, inf_mask: np.ndarray):
        """Vectorised apply on a tagged array; returns ``(values, inf_mask)``."""
        values = np.asarray(values, dtype=complex)
        inf_mask = np.asarray(inf_mask, dtype=bool)
        num = self.m11 * values + self.m12
        den = self.m21 * values + self.m22
        with np.errstate(divide="ignore", invalid="ignore"):
            out = num / den
        pole = (den == 0) | ~np.isfinite(out)
        if self.m21 != 0:
            at_inf_img = self.m11 / self.m21
            out = np.where(inf_mask, at_inf_img, out)
            out_inf = pole & ~inf_mask
        else:
            out_inf = pole | inf_mask
        out = np.where(out_inf, 0j, out)
        return out, out_inf


def mobius_apply(M: MobiusMap, p) -> SpherePoint:
    p = point(p)
    if p.is_inf:
        return INF if M.m21 == 0 else SpherePoint(M.m11 / M.m21)
    z = p.value
    den = M.m21 * z + M.m22
    if den == 0:
        return INF
    w = (M.m11 * z + M.m12) / den
    if not (math.isfinite(w.real) and math.isfinite(w.imag)):
        return INF
    return SpherePoint(w)


def mobius_inverse(M: MobiusMap) -> MobiusMap:
    return M.inverse()


def mobius_compose(M: MobiusMap, N: MobiusMap) -> MobiusMap:
    return M.compose(N)
