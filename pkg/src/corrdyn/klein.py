"""Klein combination pair for |a - 4| <= 3, the restricted map f_a and escape times.

Delta_Cov is the region right of the curve L = Cov((-inf, -2]), which is the
right branch of the hyperbola y^2 = 3(x^2 - 1).  Delta_J is the exterior of
the circle through 1 and a centred on the real axis at 1 + r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corr import CorrContext, _klein_radius, cov_roots_array, fa_forward
from .errors import DomainError, InconsistencyError, ParameterError, UnsupportedParameterError
from .sphere import SpherePoint, chordal_dist, chordal_dist_array, mobius_apply, point

DISK_CENTER, DISK_RADIUS = 4.0, 3.0
# closure band for the escape test and f_a tie-breaking
ESCAPE_BAND = 1e-9
# strict-membership slack: points this close to a boundary count as boundary
MEMBER_TOL = 1e-12
# statistical checks ignore this chordal neighbourhood of z = 1 and boundary bands
NEAR_ONE = 1e-6
SAMPLE_BAND = 1e-6


def klein_radius(a) -> float:
    r = _klein_radius(complex(a))
    if r is None:
        raise ParameterError(f"Klein circle needs Re(a) > 1, got a = {complex(a)}")
    return r


def check_supported(a, tol: float = 1e-12):
    a = complex(a)
    if abs(a - DISK_CENTER) > DISK_RADIUS + tol:
        raise UnsupportedParameterError(
            f"a = {a} lies outside |a - 4| <= 3, where no Klein pair is constructed"
        )
    if a == 1:
        raise ParameterError("a = 1 is degenerate")


@dataclass(frozen=True)
class KleinPair:
    a: complex
    r: float

    @property
    def center(self) -> float:
        return 1.0 + self.r


def klein_pair(a) -> KleinPair:
    check_supported(a)
    return KleinPair(complex(a), klein_radius(a))


# -- membership ---------------------------------------------------------------------

def cov_margin(z: complex) -> float:
    """Signed slack of the hyperbola inequality, positive inside Delta_Cov."""
    x, y = z.real, z.imag
    if x <= 1:
        return min(x - 1.0, 3.0 * (x * x - 1.0) - y * y)
    return 3.0 * (x * x - 1.0) - y * y


def in_delta_cov(z, tol: float = MEMBER_TOL) -> bool:
    z = point(z)
    if z.is_inf:
        return False
    x = z.value.real
    scale = max(1.0, abs(z.value) ** 2)
    return x > 1.0 and cov_margin(z.value) > tol * scale


def _radius(ctx: CorrContext) -> float:
    if ctx.klein_radius is None:
        raise ParameterError(f"Klein circle needs Re(a) > 1, got a = {ctx.a}")
    return ctx.klein_radius


def j_margin(ctx: CorrContext, z) -> float:
    """|z - (1+r)| - r; +inf at infinity.  Positive exactly on Delta_J."""
    z = point(z)
    if z.is_inf:
        return math.inf
    r = _radius(ctx)
    return abs(z.value - (1.0 + r)) - r


def j_margin_array(ctx: CorrContext, values, at_inf) -> np.ndarray:
    r = _radius(ctx)
    s = np.abs(np.asarray(values) - (1.0 + r)) - r
    return np.where(at_inf, np.inf, s)


def in_delta_j(ctx: CorrContext, z, tol: float = MEMBER_TOL) -> bool:
    z = point(z)
    if z.is_inf:
        return True
    r = _radius(ctx)
    return j_margin(ctx, z) > tol * max(1.0, r)


def has_critical_point(a) -> bool:
    """f_a has a critical point iff r > 1/2, i.e. a is off the closed disk B(3/2, 1/2)."""
    r = _klein_radius(complex(a))
    return r is not None and r > 0.5


# -- Monte-Carlo validation -----------------------------------------------------------

@dataclass
class KleinReport:
    a: complex
    n_samples: int
    disjoint_fail: list = field(default_factory=list)
    cover_fail: list = field(default_factory=list)
    involution_fail: list = field(default_factory=list)
    skipped: int = 0

    @property
    def disjoint_ok(self) -> bool:
        return not self.disjoint_fail

    @property
    def cover_ok(self) -> bool:
        return not self.cover_fail

    @property
    def involution_ok(self) -> bool:
        return not self.involution_fail

    @property
    def ok(self) -> bool:
        return self.disjoint_ok and self.cover_ok and self.involution_ok

    def text(self) -> str:
        lines = []
        for name, fails in (("disjoint", self.disjoint_fail), ("cover", self.cover_fail),
                            ("involution", self.involution_fail)):
            if not fails:
                lines.append(f"{name} PASS")
            else:
                lines.append(f"{name} FAIL count={len(fails)}")
                lines.extend(f"  {p}" for p in fails[:10])
        return "\n".join(lines)


def sample_sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    """n points uniform on the sphere, returned in the finite chart."""
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    # stereographic projection from the north pole; the pole itself has probability 0
    return (v[:, 0] + 1j * v[:, 1]) / (1.0 - v[:, 2])


def _cov_margin_array(z: np.ndarray) -> np.ndarray:
    x, y = z.real, z.imag
    m = 3.0 * (x * x - 1.0) - y * y
    return np.where(x > 1.0, m, np.minimum(x - 1.0, m)) / np.maximum(1.0, np.abs(z) ** 2)


def validate_klein(ctx: CorrContext, n_samples: int = 10_000, seed: int = 0) -> KleinReport:
    """Monte-Carlo check of the Klein-pair properties on random sphere points."""
    check_supported(ctx.a)
    r = _radius(ctx)
    rng = np.random.default_rng(seed)
    z = sample_sphere(n_samples, rng)
    inf = np.zeros(n_samples, dtype=bool)
    far_from_one = chordal_dist_array(z, inf, 1.0 + 0j, False) > NEAR_ONE
    cm = _cov_margin_array(z)
    jm = j_margin_array(ctx, z, inf) / max(1.0, r)
    report = KleinReport(ctx.a, n_samples)
    report.skipped = int(np.sum(~far_from_one))

    # (i) no Cov-image of a point of Delta_Cov lies in Delta_Cov
    inside = far_from_one & (z.real > 1 + SAMPLE_BAND) & (cm > SAMPLE_BAND)
    wp, wm, _, _ = cov_roots_array(z[inside], inf[inside])
    bad = (_cov_margin_array(wp) > SAMPLE_BAND) | (_cov_margin_array(wm) > SAMPLE_BAND)
    report.disjoint_fail = [SpherePoint(v) for v in z[inside][bad]]

    # (ii) J swaps Delta_J and its complement
    in_j = far_from_one & (jm > SAMPLE_BAND)
    jz, jinf = ctx.j_map.apply_array(z[in_j], inf[in_j])
    bad = j_margin_array(ctx, jz, jinf) / max(1.0, r) > SAMPLE_BAND
    report.involution_fail = [SpherePoint(v) for v in z[in_j][bad]]

    # (iii) the two closed domains cover the sphere
    bad = far_from_one & (cm < -SAMPLE_BAND) & (jm < -SAMPLE_BAND)
    report.cover_fail = [SpherePoint(v) for v in z[bad]]
    return report


# -- the restricted map f_a -----------------------------------------------------------

class Escaped:
    """Marker returned by :func:`f_restricted` when no image lies in closure(Delta_J)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Escaped"


ESCAPED = Escaped()


def _select(ctx: CorrContext, z: SpherePoint):
    """Index of the f_a image among the forward images, or None if escaped."""
    img = fa_forward(ctx, z)
    pts = img.points
    s = [j_margin(ctx, p) for p in pts]
    strict = [i for i, v in enumerate(s) if v > ESCAPE_BAND]
    if len(strict) == 2:
        raise InconsistencyError(f"both images of {z} lie strictly inside Delta_J: {pts}")
    if len(strict) == 1:
        return pts, strict[0]
    best = int(np.argmax(s))
    if s[best] >= -ESCAPE_BAND:
        return pts, best
    return pts, None


def f_restricted(ctx: CorrContext, z):
    z = point(z)
    if not z.is_inf and z.value == 1:
        return SpherePoint(1)
    pts, i = _select(ctx, z)
    return ESCAPED if i is None else pts[i]


def f_tilde(ctx: CorrContext, z) -> SpherePoint:
    z = point(z)
    img = fa_forward(ctx, z)
    if len(img) == 1:
        if not z.is_inf and z.value == 1:
            return img.points[0]
        if f_restricted(ctx, z) is ESCAPED:
            raise DomainError(f"{z} escapes under f_a")
        return img.points[0]
    if not z.is_inf and z.value == 1:
        one = SpherePoint(1)
        d = [chordal_dist(p, one) for p in img.points]
        return img.points[int(np.argmax(d))]
    pts, i = _select(ctx, z)
    if i is None:
        raise DomainError(f"{z} escapes under f_a")
    return pts[1 - i]


# -- limit sets --------------------------------------------------------------------------

MINUS, PLUS = "minus", "plus"
SLOW_TOL = 1e-6


@dataclass(frozen=True)
class EscapeResult:
    status: str  # "inside" or "escaped"
    step: int | None
    last_point: SpherePoint
    slow: bool = False

    @property
    def inside(self) -> bool:
        return self.status == "inside"


def limit_membership(ctx: CorrContext, z, side: str = MINUS, n_max: int = 500) -> EscapeResult:
    """Escape-time test for the backward (minus) or forward (plus) limit set.

    The plus side uses J_a(Lambda_plus) = Lambda_minus.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    z = point(z)
    if side == PLUS:
        z = mobius_apply(ctx.j_map, z)
    elif side != MINUS:
        raise ValueError(f"side must be 'minus' or 'plus', got {side!r}")
    prev = z
    for k in range(1, n_max + 1):
        nxt = f_restricted(ctx, z)
        if nxt is ESCAPED:
            return EscapeResult("escaped", k, z)
        prev, z = z, nxt
    return EscapeResult("inside", None, z, slow=chordal_dist(prev, z) < SLOW_TOL)
