"""Branches of the deleted covering correspondence and of F_a = J_a o Cov.

Cov relates z to the two other solutions w of Q(w) = Q(z), Q = z^3 - 3z, i.e.
the roots of w^2 + z w + z^2 - 3 = 0.  J_a is the involution fixing 1 and a,
F_a = J_a o Cov and F_a^{-1} = Cov o J_a.  Every evaluation returns two
images counted with multiplicity.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .atoms import AtomicMeasure, coalesce
from .errors import ParameterError, SizeLimitError
from .sphere import INF, MobiusMap, SpherePoint, mobius_apply, point

# |disc| below this (relative to max(1, |z|^2)) is a double root
DOUBLE_ROOT_TOL = 1e-12
EXCEPTIONAL_TOL = 1e-12
ORBIT_CAP = 22

FORWARD, BACKWARD = "forward", "backward"


def j_involution(a) -> MobiusMap:
    a = complex(a)
    return MobiusMap(a + 1, -2 * a, 2, -(a + 1))


def phi_map(a) -> MobiusMap:
    a = complex(a)
    return MobiusMap(a, 1, 1, 1)


def _klein_radius(a: complex) -> float | None:
    """Radius of the circle through 1 and a centred on the real axis, or None."""
    d = a - 1
    if d.real <= 0:
        return None
    return abs(d) ** 2 / (2.0 * d.real)


@dataclass(frozen=True)
class CorrContext:
    a: complex
    j_map: MobiusMap
    phi_map: MobiusMap
    klein_radius: float | None
    exceptional: tuple[SpherePoint, ...]
    has_critical_point: bool

    @property
    def klein_center(self) -> float | None:
        return None if self.klein_radius is None else 1.0 + self.klein_radius


def make_context(a) -> CorrContext:
    a = complex(a)
    if a == 1:
        raise ParameterError("a = 1 gives a degenerate involution")
    r = _klein_radius(a)
    exceptional = (SpherePoint(-1), SpherePoint(2)) if abs(a - 5) < EXCEPTIONAL_TOL else ()
    # f_a has a critical point iff 2 lies strictly inside the J-circle, i.e. r > 1/2
    return CorrContext(
        a=a,
        j_map=j_involution(a),
        phi_map=phi_map(a),
        klein_radius=r,
        exceptional=exceptional,
        has_critical_point=bool(r is not None and r > 0.5),
    )


@dataclass(frozen=True)
class WeightedImage:
    points: tuple[SpherePoint, ...]
    multiplicities: tuple[int, ...]

    def __post_init__(self):
        if sum(self.multiplicities) != 2 or len(self.points) != len(self.multiplicities):
            raise AssertionError(f"image must have total multiplicity 2: {self}")

    def __iter__(self):
        return iter(zip(self.points, self.multiplicities))

    def __len__(self):
        return len(self.points)

    @property
    def total(self) -> int:
        return sum(self.multiplicities)

    def map(self, mobius: MobiusMap) -> "WeightedImage":
        return WeightedImage(tuple(mobius_apply(mobius, p) for p in self.points), self.multiplicities)


# -- quadratic solve ------------------------------------------------------------

def _principal(s: complex) -> complex:
    if s.real < 0 or (s.real == 0 and s.imag < 0):
        return -s
    return s


def cov_roots(u: complex) -> tuple[complex, complex, bool]:
    """Roots (w_plus, w_minus, is_double) of w^2 + u w + u^2 - 3 for finite u.

    w_plus = (-u + s)/2, w_minus = (-u - s)/2 with s the principal root of the
    discriminant 12 - 3u^2.  The larger-magnitude root comes from the formula,
    the other from the product of roots u^2 - 3.
    """
    if abs(u) > 1.0:
        t = 12.0 / (u * u) - 3.0
        double = abs(t) < DOUBLE_ROOT_TOL
        s = _principal(u * cmath.sqrt(t))
    else:
        disc = 12.0 - 3.0 * u * u
        double = abs(disc) < DOUBLE_ROOT_TOL
        s = cmath.sqrt(disc)
    if double:
        w = -0.5 * u
        return w, w, True
    if (u.conjugate() * s).real >= 0:
        wm = -0.5 * (u + s)
        wp = u * (u / wm) - 3.0 / wm
    else:
        wp = 0.5 * (s - u)
        wm = u * (u / wp) - 3.0 / wp
    return wp, wm, False


def cov_roots_array(u: np.ndarray, u_inf: np.ndarray):
    """Vectorised :func:`cov_roots`; infinity maps to a double infinity."""
    u = np.asarray(u, dtype=complex)
    u_inf = np.asarray(u_inf, dtype=bool)
    big = np.abs(u) > 1.0
    ub = np.where(big, u, 1.0)
    us = np.where(big, 0.0, u)
    t = 12.0 / (ub * ub) - 3.0
    disc = 12.0 - 3.0 * us * us
    s = np.where(big, ub * np.sqrt(t), np.sqrt(disc))
    flip = (s.real < 0) | ((s.real == 0) & (s.imag < 0))
    s = np.where(flip, -s, s)
    double = np.where(big, np.abs(t), np.abs(disc)) < DOUBLE_ROOT_TOL
    double |= u_inf
    use_minus = (np.conj(u) * s).real >= 0
    big_root = np.where(use_minus, -0.5 * (u + s), 0.5 * (s - u))
    safe = np.where(big_root == 0, 1.0, big_root)
    small_root = u * (u / safe) - 3.0 / safe
    wp = np.where(use_minus, small_root, big_root)
    wm = np.where(use_minus, big_root, small_root)
    half = -0.5 * u
    wp = np.where(double, half, wp)
    wm = np.where(double, half, wm)
    wp = np.where(u_inf, 0j, wp)
    wm = np.where(u_inf, 0j, wm)
    return wp, wm, u_inf.copy(), double


# -- single-point images --------------------------------------------------------

def cov_images(z) -> WeightedImage:
    z = point(z)
    if z.is_inf:
        return WeightedImage((INF,), (2,))
    wp, wm, double = cov_roots(z.value)
    if double:
        return WeightedImage((SpherePoint(wp),), (2,))
    return WeightedImage((SpherePoint(wp), SpherePoint(wm)), (1, 1))


def fa_forward(ctx: CorrContext, z) -> WeightedImage:
    return cov_images(z).map(ctx.j_map)


def fa_backward(ctx: CorrContext, z) -> WeightedImage:
    return cov_images(mobius_apply(ctx.j_map, z))


def images(ctx: CorrContext, z, direction: str) -> WeightedImage:
    if direction == FORWARD:
        return fa_forward(ctx, z)
    if direction == BACKWARD:
        return fa_backward(ctx, z)
    raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")


def branch_images_array(ctx: CorrContext, values, at_inf, direction: str):
    """Both branch images of every point of a tagged array.

    Returns ``(v_plus, inf_plus, v_minus, inf_minus, double)``.
    """
    if direction == BACKWARD:
        u, uinf = ctx.j_map.apply_array(values, at_inf)
        wp, wm, winf, dbl = cov_roots_array(u, uinf)
        return wp, winf, wm, winf.copy(), dbl
    if direction == FORWARD:
        wp, wm, winf, dbl = cov_roots_array(values, at_inf)
        vp, fp = ctx.j_map.apply_array(wp, winf)
        vm, fm = ctx.j_map.apply_array(wm, winf)
        return vp, fp, vm, fm, dbl
    raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")


# -- critical data --------------------------------------------------------------

@dataclass(frozen=True)
class CriticalData:
    A1: tuple[tuple[SpherePoint, SpherePoint], ...]
    A2: tuple[tuple[SpherePoint, SpherePoint], ...]
    B1: tuple[SpherePoint, ...]
    B2: tuple[SpherePoint, ...]


def _ratio(num: complex, den: complex) -> SpherePoint:
    return INF if den == 0 else SpherePoint(num / den)


def critical_data(ctx: CorrContext) -> CriticalData:
    a = ctx.a
    half = SpherePoint((a + 1) / 2)
    one = SpherePoint(1)
    crit_m2 = _ratio(4 * a + 2, a + 5)      # J_a(-2)
    crit_p2 = _ratio(2, 3 - a)              # J_a(2)
    a1 = ((INF, half), (SpherePoint(-2), one), (SpherePoint(2), _ratio(3 * a + 1, 3 + a)))
    a2 = ((INF, half), (one, crit_m2), (SpherePoint(-1), crit_p2))
    return CriticalData(A1=a1, A2=a2, B1=(INF, SpherePoint(-2), SpherePoint(2)), B2=(half, crit_m2, crit_p2))


# -- orbit trees ------------------------------------------------------------------

def step_measure(ctx: CorrContext, mu: AtomicMeasure, direction: str) -> AtomicMeasure:
    """One push-forward (or pull-back) of ``mu`` normalised by the degree 2.

    Children of atom i sit at slots 2i ('+' branch) and 2i+1 ('-' branch), so
    the atom order is the depth-first order of the branch tree.
    """
    vp, fp, vm, fm, dbl = branch_images_array(ctx, mu.values, mu.at_inf, direction)
    n = len(mu)
    vals = np.empty(2 * n, dtype=complex)
    infs = np.empty(2 * n, dtype=bool)
    vals[0::2], vals[1::2] = vp, vm
    infs[0::2], infs[1::2] = fp, fm
    if mu.is_dyadic:
        num = np.empty(2 * n, dtype=np.int64)
        num[0::2] = np.where(dbl, 2 * mu.numerators, mu.numerators)
        num[1::2] = np.where(dbl, 0, mu.numerators)
        child = AtomicMeasure.dyadic(vals, infs, num, mu.exponent + 1)
    else:
        w = np.empty(2 * n)
        w[0::2] = np.where(dbl, mu.weights, 0.5 * mu.weights)
        w[1::2] = np.where(dbl, 0.0, 0.5 * mu.weights)
        child = AtomicMeasure(vals, infs, w)
    return child.compact()


def orbit_tree(ctx: CorrContext, z0, n: int, direction: str = FORWARD,
               cap: int = ORBIT_CAP, coalesce_eps: float = 0.0) -> AtomicMeasure:
    """The normalised image measure 2^-n (F_a^{+-n})_* delta_{z0}."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > cap:
        raise SizeLimitError(
            f"n={n} exceeds the orbit-tree cap {cap}: the tree would hold up to 2^{n} = {2**n} atoms"
        )
    mu = AtomicMeasure.dirac(z0)
    for _ in range(n):
        mu = step_measure(ctx, mu, direction)
        if coalesce_eps > 0:
            mu = coalesce(mu, coalesce_eps)
    return mu


# -- coordinate form and ramification search ----------------------------------------

def eq1_residual(a, z, w) -> tuple[float, float]:
    """Residual of X^2 + XY + Y^2 = 3, X = (az+1)/(z+1), Y = (aw-1)/(w-1), and its term scale."""
    a = complex(a)
    x = (a * z + 1) / (z + 1)
    y = (a * w - 1) / (w - 1)
    terms = (x * x, x * y, y * y)
    return abs(sum(terms) - 3), max(1.0, *(abs(t) for t in terms))


def ramification_search(ctx: CorrContext, seeds: int = 24, max_iter: int = 60) -> list[SpherePoint]:
    """Critical values of F_a located numerically: points w whose two backward images merge.

    Newton on g(w) = (2w - (a+1))^2 (12 - 3 J_a(w)^2), the squared branch gap of
    Cov o J_a cleared of its pole, from seeds on a circle, plus the pole of J_a
    (backward images both at infinity).
    """
    a = ctx.a
    J = ctx.j_map

    def g(w):
        num = J.m11 * w + J.m12
        den = J.m21 * w + J.m22
        return 12.0 * den * den - 3.0 * num * num

    found: list[complex] = []
    ang = 2 * np.pi * (np.arange(seeds) + 0.37) / seeds
    radii = (2.0 + abs(a)) * np.array([1.0, 30.0, 1e3, 3e4])
    for w in (radii[:, None] * np.exp(1j * ang)[None, :]).ravel():
        for _ in range(max_iter):
            h = 1e-7 * (1 + abs(w))
            d = (g(w + h) - g(w - h)) / (2 * h)
            if d == 0:
                break
            step = g(w) / d
            w = w - step
            if abs(step) < 1e-15 * (1 + abs(w)):
                break
        if abs(g(w)) < 1e-9 * max(1.0, abs(w) ** 2) and all(abs(w - f) > 1e-8 * (1 + abs(w)) for f in found):
            found.append(complex(w))
    out = [SpherePoint(v) for v in found]
    # g drops degree when a critical value sits at infinity (a = 3 or a = -5)
    lead = 12.0 * J.m21 ** 2 - 3.0 * J.m11 ** 2
    if abs(lead) < 1e-12 * max(1.0, abs(J.m11) ** 2) and len(found) < 2:
        out.append(INF)
    # the pole of J_a: its backward images are {inf x2}
    out.append(SpherePoint(-J.m22 / J.m21))
    return out
