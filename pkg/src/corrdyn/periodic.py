"""Periodic points of F_a with multiplicities, parabolic data at 1, superstable parameters.

The n-step graph is Gamma^(n)(z, w) = Res_x(Gamma^(n-1)(z, x), Gamma(x, w)).  By
the product form of the resultant,

    Gamma^(n)(z, w) = lam_{n-1}(z)^2 * prod_{x in F^{n-1}(z)} Gamma(x, w),

where lam_k is the leading w-coefficient of Gamma^(k).  The diagonal
p_n(z) = Gamma^(n)(z, z) is evaluated this way at interpolation nodes and
near candidate roots, since the diagonal of the coefficient array suffers
heavy cancellation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .corr import CorrContext, cov_roots_array
from .errors import CompositionError, CrossValidationError
from .klein import ESCAPED, f_restricted, has_critical_point, j_margin
from .polyalg import (
    BiPoly, aberth_function, circle_nodes, cluster_multiplicities, interpolate_grid, resultant_x,
    roots_simultaneous,
)
from .sphere import SpherePoint, chordal_dist, mobius_apply, point

VERIFY_TOL = 1e-6
DEDUPE_TOL = 1e-6
MAX_RESULTANT_N = 5
CONTOUR_POINTS = 256


# -- graph polynomials ------------------------------------------------------------------

def _lm(a):
    L = np.array([-(a + 1), 2], dtype=complex)          # 2w - (a+1)
    M = np.array([-2 * a, a + 1], dtype=complex)         # (a+1)w - 2a
    return L, M


def graph_polynomial(ctx: CorrContext) -> BiPoly:
    """Gamma_a(z, w) = P_Q(z, J_a(w)) cleared of denominators, bidegree (2, 2)."""
    L, M = _lm(ctx.a)
    LL = np.convolve(L, L)
    rows = [np.convolve(M, M) - 3 * LL, np.convolve(L, M), LL]
    return BiPoly(np.array(rows))


def _lambda1(a, x):
    """Leading w-coefficient of Gamma_a(x, w)."""
    return 4 * x * x + 2 * (a + 1) * x + (a + 1) ** 2 - 12


def _gamma(a, z, w):
    L = 2 * w - (a + 1)
    M = (a + 1) * w - 2 * a
    return z * z * L * L + z * L * M + M * M - 3 * L * L


def forward_levels(ctx: CorrContext, z, k: int) -> list[np.ndarray]:
    """Images of z under F^0..F^k, level j of shape z.shape + (2^j,).

    Double images appear twice.  Infinity shows up as nan.
    """
    z = np.asarray(z, dtype=complex)
    levels = [z[..., None]]
    cur = levels[0]
    for _ in range(k):
        flat = cur.ravel()
        inf = ~np.isfinite(flat)
        wp, wm, winf, _ = cov_roots_array(np.where(inf, 0, flat), inf)
        vp, fp = ctx.j_map.apply_array(wp, winf)
        vm, fm = ctx.j_map.apply_array(wm, winf)
        vp = np.where(fp, np.nan, vp)
        vm = np.where(fm, np.nan, vm)
        nxt = np.stack([vp.reshape(cur.shape), vm.reshape(cur.shape)], axis=-1)
        cur = nxt.reshape(cur.shape[:-1] + (2 * cur.shape[-1],))
        levels.append(cur)
    return levels


def diagonal_log(ctx: CorrContext, n: int, z) -> np.ndarray:
    """log p_n(z) (sum of principal logs of the product factors)."""
    a = ctx.a
    z = np.asarray(z, dtype=complex)
    levels = forward_levels(ctx, z, n - 1)
    out = np.zeros(z.shape, dtype=complex)
    for k in range(n - 1):
        out += 2 ** (n - 1 - k) * np.sum(np.log(_lambda1(a, levels[k])), axis=-1)
    out += np.sum(np.log(_gamma(a, levels[n - 1], z[..., None])), axis=-1)
    return out


def diagonal_polynomial(ctx: CorrContext, n: int, radii=None) -> np.ndarray:
    """Ascending coefficients of p_n, degree 2^(n+1), scaled to max |c| = 1.

    Values are interpolated on several node circles; coefficient k is taken
    from the circle where its estimated error max|p| / R^k relative to
    |c_k| is smallest, so every coefficient keeps near full relative accuracy
    even though the magnitudes span many decades.
    """
    N = 2 ** (n + 1) + 1
    if radii is None:
        radii = 2.0 ** (np.arange(-12, 5) / 2)
    shifts, coefs = [], []
    for R in radii:
        lv = diagonal_log(ctx, n, circle_nodes(N, R))
        s = float(np.max(lv.real))
        shifts.append(s)
        coefs.append(interpolate_grid(np.exp(lv - s)[:, None], R)[:, 0])
    shifts = np.array(shifts)
    S = shifts.max()
    k = np.arange(N)
    # err[R, k] ~ max|p| on the circle / R^k, in common units
    log_err = (shifts - S)[:, None] - np.log(np.asarray(radii))[:, None] * k[None, :]
    best = np.argmin(log_err, axis=0)
    c = np.array([coefs[b][i] * np.exp(shifts[b] - S) for i, b in enumerate(best)])
    return c / np.max(np.abs(c))


def graph_iterate(ctx: CorrContext, n: int, samples: int = 50, seed: int = 0,
                  tol: float = 1e-6) -> BiPoly:
    """Gamma_a^(n) by repeated Sylvester resultants, validated on branch orbits."""
    if not 1 <= n <= MAX_RESULTANT_N:
        raise ValueError(f"resultant path supports 1 <= n <= {MAX_RESULTANT_N}")
    G = graph_polynomial(ctx)
    P = G
    for _ in range(n - 1):
        P = resultant_x(P, G, keep_shape=True).normalized(keep_shape=True)
    rng = np.random.default_rng(seed)
    z = rng.uniform(-3, 3, samples) + 1j * rng.uniform(-3, 3, samples)
    w = forward_levels(ctx, z, n)[-1]
    i = np.arange(P.coeffs.shape[0])[:, None]
    j = np.arange(P.coeffs.shape[1])[None, :]
    worst = 0.0
    for zk, wk in zip(z, w):
        for x in wk[np.isfinite(wk)]:
            scale = np.sum(np.abs(P.coeffs) * abs(zk) ** i * abs(x) ** j)
            worst = max(worst, abs(P(zk, x)) / scale)
    if worst > tol:
        raise CompositionError(f"Gamma^({n}) fails on branch orbits: residual {worst:.3g}", worst)
    return P


# -- contour refinement -----------------------------------------------------------------

def contour_refine(logf, centre: complex, rho: float, K: int = CONTOUR_POINTS):
    """Winding number m and root centroid of f inside |z - centre| = rho.

    ``logf`` returns log f (any branch per point) on an array.  With
    log f(c + rho e^it) = m i t + sum_j a_j e^{ijt}, the power sum of the
    enclosed roots about c is -rho a_{-1}.
    """
    t = 2 * np.pi * np.arange(K) / K
    L = logf(centre + rho * np.exp(1j * t))
    ph = np.unwrap(np.append(L.imag, L.imag[0]))
    m = int(round((ph[-1] - ph[0]) / (2 * np.pi)))
    g = L.real + 1j * (ph[:-1] - m * t)
    a_m1 = np.fft.fft(g)[-1] / K
    if m <= 0:
        return m, centre
    return m, centre - rho * a_m1 / m


# -- branch words (Newton path) -------------------------------------------------------------

def _cov_pair(u):
    wp, wm, _, _ = cov_roots_array(u, np.zeros(np.shape(u), dtype=bool))
    return wp, wm


def _jv(ctx, u):
    a = ctx.a
    with np.errstate(divide="ignore", invalid="ignore"):
        return ((a + 1) * u - 2 * a) / (2 * u - (a + 1))


def _branch_pair(ctx, cur, direction):
    if direction == "forward":
        wp, wm = _cov_pair(cur)
        return _jv(ctx, wp), _jv(ctx, wm)
    return _cov_pair(_jv(ctx, cur))


def word_eval(ctx: CorrContext, z, labels=None, reference=None, direction: str = "forward"):
    """Evaluate a branch word of F_a (or of F_a^{-1}) from z; returns the orbit (..., n+1).

    Step k picks the image by ``labels[..., k]`` (0 = '+', 1 = '-') or, when
    ``reference`` (an orbit) is given, the image nearest to reference[..., k+1].
    """
    z = np.asarray(z, dtype=complex)
    n = labels.shape[-1] if labels is not None else reference.shape[-1] - 1
    orbit = np.empty(z.shape + (n + 1,), dtype=complex)
    orbit[..., 0] = z
    cur = z
    with np.errstate(invalid="ignore", over="ignore"):
        for k in range(n):
            fp, fm = _branch_pair(ctx, np.where(np.isfinite(cur), cur, 0), direction)
            if reference is not None:
                ref = reference[..., k + 1]
                pick_minus = np.abs(fm - ref) < np.abs(fp - ref)
            else:
                pick_minus = labels[..., k] == 1
            cur = np.where(pick_minus, fm, fp)
            cur = np.where(np.isfinite(orbit[..., k]), cur, np.nan)
            orbit[..., k + 1] = cur
    return orbit


def _newton_word(ctx, seeds, labels, direction="forward", max_iter=80, max_halvings=40):
    """Damped Newton on g(z) - z along tracked branch words; vectorised over seeds.

    Returns (z, orbit, residual, derivative of g(z) - z).
    """
    orb = word_eval(ctx, seeds, labels=labels, direction=direction)
    z = np.array(seeds, dtype=complex)
    h = orb[:, -1] - z
    dh = np.full(z.shape, np.nan + 0j)
    idx = np.flatnonzero(np.isfinite(h))
    for _ in range(max_iter):
        if idx.size == 0:
            break
        zi, oi, hi = z[idx], orb[idx], h[idx]
        dz = 1e-6 * (1 + np.abs(zi))
        op = word_eval(ctx, zi + dz, reference=oi, direction=direction)
        om = word_eval(ctx, zi - dz, reference=oi, direction=direction)
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            di = (op[:, -1] - om[:, -1]) / (2 * dz) - 1.0
            step = hi / di
        dh[idx] = di
        ok_step = np.isfinite(step) & (step != 0)
        lam = np.ones(len(idx))
        accepted = np.zeros(len(idx), dtype=bool)
        pending = ok_step.copy()
        for _ in range(max_halvings):
            if not pending.any():
                break
            pi = np.flatnonzero(pending)
            trial = zi[pi] - lam[pi] * step[pi]
            tor = word_eval(ctx, trial, reference=oi[pi], direction=direction)
            th = tor[:, -1] - trial
            ok = np.isfinite(th) & (np.abs(th) <= np.abs(hi[pi]))
            good = pi[ok]
            zi[good], hi[good], oi[good] = trial[ok], th[ok], tor[ok]
            accepted[good] = True
            pending[good] = False
            lam[pi[~ok]] /= 2
        moved = np.where(accepted, np.abs(lam * step), 0.0)
        z[idx], orb[idx], h[idx] = zi, oi, hi
        keep = accepted & (moved > 1e-15 * (1 + np.abs(zi))) & (np.abs(hi) > 1e-15 * (1 + np.abs(zi)))
        idx = idx[keep]
    return z, orb, h, dh


@dataclass
class NewtonOrbit:
    orbit: np.ndarray   # z_0, ..., z_n with z_n ~ z_0
    residual: float
    derivative: complex  # d/dz (g(z) - z) at the solution


def newton_candidates(ctx: CorrContext, n: int, grid: int = 30,
                      box=(-4.0, 6.0, -5.0, 5.0), resid_tol: float = 1e-9) -> list[NewtonOrbit]:
    """Distinct period-n orbits found by branch-word Newton from a seed grid."""
    xs = np.linspace(box[0], box[1], grid)
    ys = np.linspace(box[2], box[3], grid)
    seeds = (xs[None, :] + 1j * ys[:, None]).ravel()
    words = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int8)
    S = np.repeat(seeds, len(words))
    W = np.tile(words, (len(seeds), 1))
    # words of F^n and of F^-n share their fixed points; the inverse words
    # contract near repelling cycles, which widens the Newton basins
    zf, of, hf, df = _newton_word(ctx, S, W, "forward")
    zb, ob, hb, db = _newton_word(ctx, S, W, "backward")
    # express backward orbits forward: reversed order, same fixed point
    ob = ob[:, ::-1]
    z, orb = np.concatenate([zf, zb]), np.concatenate([of, ob])
    h = np.concatenate([hf, hb])
    # F-word derivative at a backward solution: g' = 1 / (g^-1)'
    with np.errstate(divide="ignore", invalid="ignore"):
        dh = np.concatenate([df, 1.0 / (db + 1.0) - 1.0])
    good = np.isfinite(h) & (np.abs(h) < resid_tol * (1 + np.abs(z))) & np.all(np.isfinite(orb), axis=-1)
    orb, h, dh = orb[good], np.abs(h[good]), dh[good]
    # one representative (smallest residual) per orbit
    labels = _components(np.concatenate([orb.real, orb.imag], axis=1), 1e-9 * (1 + np.max(np.abs(orb), initial=0)))
    found: list[NewtonOrbit] = []
    for lab in np.unique(labels):
        members = np.flatnonzero(labels == lab)
        b = members[np.argmin(h[members])]
        found.append(NewtonOrbit(orb[b].copy(), float(h[b]), complex(dh[b])))
    found.sort(key=lambda o: (o.orbit[0].real, o.orbit[0].imag))
    return found


def _components(X: np.ndarray, eps: float) -> np.ndarray:
    """Single-linkage cluster labels of the rows of X at Euclidean radius eps."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components
    from scipy.spatial import cKDTree

    if len(X) == 0:
        return np.zeros(0, dtype=int)
    pairs = cKDTree(X).query_pairs(eps, output_type="ndarray")
    g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(X), len(X)))
    return connected_components(g, directed=False)[1]


# -- reports ----------------------------------------------------------------------------------

FIXED1, MINUS, PLUS, NONE = "fixed1", "minus", "plus", "none"


@dataclass(frozen=True)
class PeriodicPoint:
    point: SpherePoint
    multiplicity: int
    side: str
    verified: bool


@dataclass
class PeriodicReport:
    a: complex
    n: int
    points: list[PeriodicPoint]
    method: str = "resultant"
    notes: list[str] = field(default_factory=list)

    @property
    def total_multiplicity(self) -> int:
        return sum(p.multiplicity for p in self.points if p.verified)

    @property
    def count_distinct(self) -> int:
        return sum(1 for p in self.points if p.verified)

    @property
    def all_verified(self) -> bool:
        return all(p.verified for p in self.points)

    def values(self) -> np.ndarray:
        return np.array([p.point.value for p in self.points if p.verified])

    def to_csv(self, comments=()) -> str:
        lines = [f"# {c}" for c in comments]
        lines.append("re,im,at_infinity,multiplicity,side,verified")
        for p in self.points:
            v = p.point.value
            lines.append(f"{v.real:.17g},{v.imag:.17g},{int(p.point.is_inf)},{p.multiplicity},"
                         f"{p.side},{int(p.verified)}")
        return "\n".join(lines) + "\n"


def verify_periodic(ctx: CorrContext, z, n: int, tol: float = VERIFY_TOL) -> bool:
    """z in F^n(z), by orbit-tree search to chordal tolerance."""
    z = point(z)
    if z.is_inf:
        return False
    leaves = forward_levels(ctx, np.array([z.value]), n)[-1][0]
    leaves = leaves[np.isfinite(leaves)]
    d = 2 * np.abs(leaves - z.value) / (np.hypot(1, np.abs(leaves)) * math.hypot(1, abs(z.value)))
    return bool(d.size and np.min(d) < tol)


def _fa_return(ctx, z: SpherePoint, n: int, tol: float) -> bool:
    if j_margin(ctx, z) < -1e-9:
        return False
    cur = z
    for _ in range(n):
        cur = f_restricted(ctx, cur)
        if cur is ESCAPED:
            return False
    return chordal_dist(cur, z) < tol


def classify_side(ctx: CorrContext, z, n: int, tol: float = 1e-6) -> str:
    """fixed1 for z = 1, minus on Per_n(f_a), plus when J_a(z) is there."""
    z = point(z)
    if chordal_dist(z, 1) < tol:
        return FIXED1
    if ctx.klein_radius is None:
        return NONE
    if _fa_return(ctx, z, n, tol):
        return MINUS
    if _fa_return(ctx, mobius_apply(ctx.j_map, z), n, tol):
        return PLUS
    return NONE


def _sort_key(p: PeriodicPoint):
    v = p.point.value
    return (round(v.real, 9), round(v.imag, 9))


def _contour_radius(c, others, cap):
    d = [abs(c - o) for o in others]
    gap = min(d) if d else 1.0
    return min(cap * (1 + abs(c)), 0.4 * gap)


def diagonal_logderiv(ctx: CorrContext, n: int, z, rel_step: float = 1e-7) -> np.ndarray:
    """d/dz log p_n by a central difference of the product form."""
    z = np.asarray(z, dtype=complex)
    h = rel_step * (1 + np.abs(z))
    d = diagonal_log(ctx, n, z + h) - diagonal_log(ctx, n, z - h)
    d = d.real + 1j * (np.mod(d.imag + np.pi, 2 * np.pi) - np.pi)
    return d / (2 * h)


def inclusion_radii(logf, z) -> np.ndarray:
    """Weierstrass inclusion radii deg |f(z_i) / (lc prod_{j != i} (z_i - z_j))|.

    f is a polynomial of degree len(z) given through log f; its leading
    coefficient is estimated on a circle well outside the approximations.
    """
    z = np.asarray(z, dtype=complex)
    n = len(z)
    R = 4.0 * (1.0 + np.max(np.abs(z)))
    far = R * np.exp(2j * np.pi * (np.arange(8) + 0.5) / 8)
    log_lc = np.mean(logf(far).real - np.sum(np.log(np.abs(far[:, None] - z[None, :])), axis=1))
    diff = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(diff, 1.0)
    with np.errstate(divide="ignore"):
        logw = logf(z).real - log_lc - np.sum(np.log(diff), axis=1)
    r = n * np.exp(np.minimum(logw, 50.0))
    return np.where(np.isfinite(r), r, 0.0)


def _resultant_points(ctx: CorrContext, n: int, cluster_tol: float = 1e-7):
    """Roots of p_n: coefficient Aberth, then polishing on the product form.

    Clusters (multiple roots) are resolved by the argument principle, whose
    winding number is the multiplicity.
    """
    c = diagonal_polynomial(ctx, n)
    rs = roots_simultaneous(c, tol=cluster_tol)
    init = rs.raw
    if rs.n_infinite:
        # the degree is known to be 2^(n+1); seed the dropped roots far out
        R = 2.0 * (1.0 + np.max(np.abs(init)))
        init = np.append(init, R * np.exp(2j * np.pi * (np.arange(rs.n_infinite) + 0.25) / rs.n_infinite))
    z, _ = aberth_function(lambda x: diagonal_logderiv(ctx, n, x), init, max_sweeps=100)
    radii = inclusion_radii(lambda x: diagonal_log(ctx, n, x), z)
    cl = cluster_multiplicities(z, tol=cluster_tol, radii=radii)
    cents = list(cl.roots)
    out = []
    for i, ci in enumerate(cents):
        others = cents[:i] + cents[i + 1:]
        rho = _contour_radius(ci, others, 0.05)
        m, centre = contour_refine(lambda x: diagonal_log(ctx, n, x), ci, rho)
        out.append((centre, m, int(cl.multiplicities[i])))
    return out, rs


def periodic_points(ctx: CorrContext, n: int, method: str = "resultant",
                    agree_tol: float = 1e-5) -> PeriodicReport:
    if n < 1:
        raise ValueError("n must be >= 1")
    if method == "both":
        r = periodic_points(ctx, n, "resultant")
        nw = periodic_points(ctx, n, "newton")
        diffs = _set_mismatch(r, nw, agree_tol)
        if diffs:
            raise CrossValidationError(f"resultant and newton point sets differ at {len(diffs)} points", diffs)
        r.method = "both"
        return r
    notes = []
    if method == "resultant":
        if n > MAX_RESULTANT_N:
            raise ValueError(f"resultant path supports n <= {MAX_RESULTANT_N}")
        raw, rs = _resultant_points(ctx, n)
        cand = []
        for centre, m, size in raw:
            if m != size:
                notes.append(f"cluster near {centre:.6g}: size {size}, winding {m}")
            if m > 0:
                cand.append((centre, m))
        if rs.n_infinite:
            notes.append(f"{rs.n_infinite} roots at infinity")
    elif method == "newton":
        cand = _newton_points(ctx, n)
    else:
        raise ValueError(f"unknown method {method!r}")
    pts = []
    for z, m in cand:
        p = SpherePoint(z)
        ok = verify_periodic(ctx, p, n)
        pts.append(PeriodicPoint(p, m, classify_side(ctx, p, n), ok))
    pts.sort(key=_sort_key)
    return PeriodicReport(ctx.a, n, pts, method, notes)


ILL_CONDITIONED = 1e-3
GROUP_TOL = 1e-3


def _newton_points(ctx: CorrContext, n: int):
    """Newton orbits grouped into periodic points with multiplicities.

    Well-conditioned solutions (|g' - 1| not small) are simple roots.  Solutions
    near a multiple root scatter at the noise level; they are grouped and
    replaced by the argument-principle centroid, whose winding number is the
    local multiplicity.
    """
    orbits = newton_candidates(ctx, n)
    well = [o for o in orbits if abs(o.derivative) > ILL_CONDITIONED]
    ill = [o for o in orbits if abs(o.derivative) <= ILL_CONDITIONED]
    groups: list[list[NewtonOrbit]] = []
    for o in sorted(ill, key=lambda o: o.residual):
        for g in groups:
            if abs(g[0].orbit[0] - o.orbit[0]) < GROUP_TOL * (1 + abs(o.orbit[0])):
                g.append(o)
                break
        else:
            groups.append([o])
    entries = [(o.orbit[0], 1) for o in well]
    heads = [g[0].orbit[0] for g in groups]
    for i, g in enumerate(groups):
        ref = g[0].orbit
        c = ref[0]
        spread = max(abs(o.orbit[0] - c) for o in g)
        others = [e[0] for e in entries if abs(e[0] - c) > 1e-12] + heads[:i] + heads[i + 1:]
        rho = max(_contour_radius(c, others, 1e-2), 3 * spread)

        def logh(z, ref=ref):
            orb = word_eval(ctx, z, reference=np.broadcast_to(ref, z.shape + ref.shape))
            with np.errstate(divide="ignore"):
                return np.log(orb[..., -1] - z)

        m, centre = contour_refine(logh, c, rho)
        if m >= 1:
            entries.append((centre, m))
    # distinct orbits through the same point add their multiplicities
    merged: list[list] = []
    for z, m in entries:
        for e in merged:
            if abs(e[0] - z) < DEDUPE_TOL * (1 + abs(z)):
                e[1] += m
                break
        else:
            merged.append([z, m])
    return [(z, m) for z, m in merged]


def _set_mismatch(r1: PeriodicReport, r2: PeriodicReport, tol: float):
    a = [p.point for p in r1.points if p.verified]
    b = [p.point for p in r2.points if p.verified]
    out = []
    for x in a:
        if not b or min(chordal_dist(x, y) for y in b) > tol:
            out.append(("resultant-only", str(x)))
    for y in b:
        if not a or min(chordal_dist(x, y) for x in a) > tol:
            out.append(("newton-only", str(y)))
    return out


def j_symmetric(ctx: CorrContext, report: PeriodicReport, tol: float = 1e-6) -> bool:
    pts = [p.point for p in report.points if p.verified]
    for p in pts:
        q = mobius_apply(ctx.j_map, p)
        if min(chordal_dist(q, r) for r in pts) > tol:
            return False
    return True


# -- parabolic data at 1 --------------------------------------------------------------------

@dataclass(frozen=True)
class ParabolicReport:
    coefficient: complex            # (a-7)/(3(a-1))
    multiplier_estimate: complex
    coefficient_estimate: complex
    deviation: float
    flagged: bool


def _parabolic_branch(ctx, z):
    """The image of z under F_a nearest to 1 (the branch fixing 1), vectorised."""
    wp, wm = _cov_pair(z)
    fp, fm = _jv(ctx, wp), _jv(ctx, wm)
    return np.where(np.abs(fp - 1) <= np.abs(fm - 1), fp, fm)


def parabolic_coefficient(ctx: CorrContext, h: float = 1e-2, levels: int = 4,
                          flag_tol: float = 1e-5) -> ParabolicReport:
    a = ctx.a
    exact = (a - 7) / (3 * (a - 1))

    def d1(s):
        return (_parabolic_branch(ctx, 1 + s) - _parabolic_branch(ctx, 1 - s)) / (2 * s)

    def c2(s):
        return (_parabolic_branch(ctx, 1 + s) - 2 + _parabolic_branch(ctx, 1 - s)) / (2 * s * s)

    mult = _richardson(d1, h, levels)
    coef = _richardson(c2, h, levels)
    dev = abs(coef - exact)
    return ParabolicReport(exact, mult, coef, dev, dev > flag_tol)


def _richardson(f, h, levels):
    """Richardson table for an even-error central difference."""
    T = [[complex(f(h / 2**i))] for i in range(levels)]
    for i in range(1, levels):
        for k in range(1, i + 1):
            T[i].append(T[i][k - 1] + (T[i][k - 1] - T[i - 1][k - 1]) / (4**k - 1))
    return T[-1][-1]


def diagonal_multiplicity_at_one(ctx: CorrContext, n: int = 1, rho: float = 0.05) -> int:
    m, _ = contour_refine(lambda z: diagonal_log(ctx, n, z), 1.0 + 0j, rho)
    return m


# -- superstable parameters ------------------------------------------------------------------

@dataclass(frozen=True)
class SuperstableParam:
    a: complex
    residual: float
    verified_critical: bool


def _fa_orbit_minus1(a_arr, n):
    """f_a^n(-1) for an array of parameters, nan once the orbit escapes."""
    a = np.asarray(a_arr, dtype=complex)
    d = a - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.abs(d) ** 2 / (2 * d.real)
    r = np.where(d.real > 0, r, np.nan)
    z = np.full(a.shape, -1.0 + 0j)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(n):
            wp, wm = _cov_pair(np.where(np.isfinite(z), z, 0))
            fp = ((a + 1) * wp - 2 * a) / (2 * wp - (a + 1))
            fm = ((a + 1) * wm - 2 * a) / (2 * wm - (a + 1))
            sp = np.where(np.isfinite(fp), np.abs(fp - (1 + r)) - r, np.inf)
            sm = np.where(np.isfinite(fm), np.abs(fm - (1 + r)) - r, np.inf)
            nz = np.where(sp >= sm, fp, fm)
            best = np.maximum(sp, sm)
            nz = np.where(best >= -1e-9, nz, np.nan)
            z = np.where(np.isfinite(z), nz, np.nan)
    return z


def superstable_parameters(n: int, seed_grid: int = 80, region=(4.0, 2.95),
                           max_iter: int = 60, dedupe: float = 1e-8) -> list[SuperstableParam]:
    """Parameters a with f_a^n(-1) = -1 (critical point periodic, period dividing n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    c0, rad = region
    if abs(c0 - 4) + rad > 2.95 + 1e-12:
        raise ValueError("region must lie in |a - 4| <= 2.95")
    xs = np.linspace(c0 - rad, c0 + rad, seed_grid)
    A = (xs[None, :] + 1j * (xs[:, None] - c0)).ravel()
    A = A[(np.abs(A - c0) <= rad) & (A.real > 1)]
    psi = lambda a: _fa_orbit_minus1(a, n) + 1
    val = psi(A)
    A, val = A[np.isfinite(val)], val[np.isfinite(val)]
    alive = np.ones(len(A), dtype=bool)
    for _ in range(max_iter):
        h = 1e-7 * (1 + np.abs(A))
        with np.errstate(invalid="ignore", divide="ignore"):
            d = (psi(A + h) - psi(A - h)) / (2 * h)
            step = val / d
        step = np.where(alive & np.isfinite(step), step, 0)
        lam = np.ones(len(A))
        new_A, new_val = A.copy(), val.copy()
        pending = step != 0
        for _ in range(30):
            if not pending.any():
                break
            trial = A - lam * step
            tv = psi(trial)
            ok = pending & np.isfinite(tv) & (np.abs(tv) < np.abs(val)) & (np.abs(trial - c0) <= rad + 1e-9)
            new_A = np.where(ok, trial, new_A)
            new_val = np.where(ok, tv, new_val)
            pending &= ~ok
            lam = np.where(pending, lam / 2, lam)
        moved = np.abs(new_A - A)
        A, val = new_A, new_val
        alive &= moved > 1e-16 * (1 + np.abs(A))
        if not alive.any():
            break
    good = np.isfinite(val) & (np.abs(val) < 1e-10) & (np.abs(A - c0) <= rad) & (A.real > 1)
    found: list[SuperstableParam] = []
    for a, v in sorted(zip(A[good], np.abs(val[good])), key=lambda t: (round(t[0].real, 9), round(t[0].imag, 9))):
        if any(abs(a - f.a) < dedupe * (1 + abs(a)) for f in found):
            continue
        found.append(SuperstableParam(complex(a), float(v), has_critical_point(a)))
    return found
