"""Bivariate polynomials, resultants by evaluation/interpolation, simultaneous roots.

Univariate polynomials are coefficient arrays in ascending order, c[k] z^k.
A BiPoly holds c[i, j] for z^i w^j.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConditioningError, DegenerateResultantError, RootFinderError

TRIM_TOL = 1e-12
NODE_RADIUS = 2.0
NODE_OFFSET = 0.3137  # fraction of a grid step; keeps nodes off the real axis
CHECK_TOL = 1e-6


def _trim(c: np.ndarray, tol: float = TRIM_TOL) -> np.ndarray:
    c = np.atleast_2d(np.asarray(c, dtype=complex))
    big = np.max(np.abs(c)) if c.size else 0.0
    if big == 0.0:
        return np.zeros((1, 1), dtype=complex)
    live = np.abs(c) > tol * big
    rows = np.flatnonzero(live.any(axis=1))
    cols = np.flatnonzero(live.any(axis=0))
    return c[: rows[-1] + 1, : cols[-1] + 1].copy()


def horner(c, x):
    """Evaluate an ascending coefficient array at x (broadcasts over x)."""
    x = np.asarray(x, dtype=complex)
    out = np.zeros_like(x)
    for ck in np.asarray(c)[::-1]:
        out = out * x + ck
    return out


@dataclass(frozen=True, eq=False)
class BiPoly:
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trim(self.coeffs))

    @classmethod
    def raw(cls, coeffs) -> "BiPoly":
        """Keep the given shape as the declared bidegree (no trimming)."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "coeffs", np.atleast_2d(np.asarray(coeffs, dtype=complex)).copy())
        return obj

    @property
    def bidegree(self) -> tuple[int, int]:
        return self.coeffs.shape[0] - 1, self.coeffs.shape[1] - 1

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def __call__(self, z, w):
        return bipoly_eval(self, z, w)

    def in_w(self, z) -> np.ndarray:
        """Coefficients (ascending in w) of w -> P(z, w)."""
        return horner(self.coeffs, z) if np.ndim(z) == 0 else np.array([horner(self.coeffs, zi) for zi in z])

    def in_z(self, w) -> np.ndarray:
        """Coefficients (ascending in z) of z -> P(z, w)."""
        return horner(self.coeffs.T, w)

    def eval_grid(self, zs, ws) -> np.ndarray:
        zs, ws = np.asarray(zs, complex), np.asarray(ws, complex)
        dz, dw = self.bidegree
        return np.vander(zs, dz + 1, increasing=True) @ self.coeffs @ np.vander(ws, dw + 1, increasing=True).T

    def transpose(self) -> "BiPoly":
        return BiPoly(self.coeffs.T)

    def normalized(self, keep_shape: bool = False) -> "BiPoly":
        c = self.coeffs / self.scale
        return BiPoly.raw(c) if keep_shape else BiPoly(c)

    def diagonal(self) -> np.ndarray:
        """Ascending coefficients of z -> P(z, z)."""
        dz, dw = self.bidegree
        out = np.zeros(dz + dw + 1, dtype=complex)
        for i in range(dz + 1):
            out[i : i + dw + 1] += self.coeffs[i]
        return out

    # text form: "dz dw" then "i j re im" rows, row-major
    def to_text(self) -> str:
        dz, dw = self.bidegree
        lines = [f"{dz} {dw}"]
        for i in range(dz + 1):
            for j in range(dw + 1):
                c = self.coeffs[i, j]
                lines.append(f"{i} {j} {c.real:.17g} {c.imag:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BiPoly":
        lines = [ln.split() for ln in text.splitlines() if ln.strip()]
        dz, dw = int(lines[0][0]), int(lines[0][1])
        c = np.zeros((dz + 1, dw + 1), dtype=complex)
        for i, j, re, im in lines[1:]:
            c[int(i), int(j)] = complex(float(re), float(im))
        return cls(c)

    def dump(self, path) -> None:
        Path(path).write_text(self.to_text())


def bipoly_eval(P: BiPoly, z, w):
    """Horner in z over w-Horner rows; scalar or broadcasting arrays."""
    c = P.coeffs
    w = np.asarray(w, dtype=complex)
    z = np.asarray(z, dtype=complex)
    out = np.zeros(np.broadcast(z, w).shape, dtype=complex)
    for row in c[::-1]:
        out = out * z + horner(row, w)
    return out[()] if out.ndim == 0 else out


# -- resultants ----------------------------------------------------------------------

def sylvester(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Sylvester matrices of ascending coefficient batches p[..., m+1], q[..., k+1]."""
    m, k = p.shape[-1] - 1, q.shape[-1] - 1
    n = m + k
    batch = np.broadcast_shapes(p.shape[:-1], q.shape[:-1])
    S = np.zeros(batch + (n, n), dtype=complex)
    pd, qd = p[..., ::-1], q[..., ::-1]
    for r in range(k):
        S[..., r, r : r + m + 1] = pd
    for r in range(m):
        S[..., k + r, r : r + k + 1] = qd
    return S


def circle_nodes(n: int, radius: float = NODE_RADIUS, offset: float = NODE_OFFSET) -> np.ndarray:
    return radius * np.exp(2j * np.pi * (np.arange(n) + offset) / n)


def interpolate_grid(values: np.ndarray, radius: float = NODE_RADIUS, offset: float = NODE_OFFSET) -> np.ndarray:
    """Coefficients c[a, b] from values at circle_nodes x circle_nodes.

    On these nodes the Vandermonde matrix is a scaled DFT matrix, so each 1-D
    solve is an FFT.
    """
    nz, nw = values.shape
    c = np.fft.fft(values, axis=0) / nz
    c = np.fft.fft(c, axis=1) / nw
    dz = radius ** np.arange(nz) * np.exp(2j * np.pi * np.arange(nz) * offset / nz)
    dw = radius ** np.arange(nw) * np.exp(2j * np.pi * np.arange(nw) * offset / nw)
    return c / dz[:, None] / dw[None, :]


def _det_with_scale(p, q):
    S = sylvester(p, q)
    k, m = q.shape[-1] - 1, p.shape[-1] - 1
    # Hadamard-type bound, used as the yardstick for "numerically zero"
    bound = np.linalg.norm(p, axis=-1) ** k * np.linalg.norm(q, axis=-1) ** m
    return np.linalg.det(S), bound


def resultant_x(P: BiPoly, Q: BiPoly, check_points: int = 3, seed: int = 7,
                keep_shape: bool = False) -> BiPoly:
    """Res_x(P(z, x), Q(x, w)) as a BiPoly in (z, w).

    P is stored with rows z, columns x; Q with rows x, columns w.  Degrees in x
    are taken formally (from the stored arrays), so nodes where a leading
    coefficient vanishes need no special treatment.  With ``keep_shape`` the
    result keeps the declared bidegree (deg_z P * deg_x Q, deg_w Q * deg_x P).
    """
    m = P.bidegree[1]
    k = Q.bidegree[0]
    if m < 1 or k < 1:
        raise DegenerateResultantError("both polynomials need positive degree in x")
    bz = P.bidegree[0] * k
    bw = Q.bidegree[1] * m
    zs = circle_nodes(bz + 1)
    ws = circle_nodes(bw + 1)
    pz = np.array([horner(P.coeffs, z) for z in zs])         # (nz, m+1)
    qw = np.array([horner(Q.coeffs.T, w) for w in ws])       # (nw, k+1)
    det, bound = _det_with_scale(pz[:, None, :], qw[None, :, :])
    if np.max(np.abs(det)) <= 1e-12 * np.max(bound):
        raise DegenerateResultantError("resultant vanishes on the whole grid (common component?)")
    coeffs = interpolate_grid(det)
    R = BiPoly.raw(coeffs) if keep_shape else BiPoly(coeffs)
    # off-grid check
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.5, 1.5, (check_points, 2)) * np.exp(2j * np.pi * rng.uniform(size=(check_points, 2)))
    pc = np.array([horner(P.coeffs, z) for z in r[:, 0]])
    qc = np.array([horner(Q.coeffs.T, w) for w in r[:, 1]])
    direct, _ = _det_with_scale(pc, qc)
    got = bipoly_eval(R, r[:, 0], r[:, 1])
    ref = np.max(np.abs(det))
    resid = float(np.max(np.abs(got - direct)) / ref)
    if resid > CHECK_TOL:
        raise ConditioningError(f"interpolation residual {resid:.3g} exceeds {CHECK_TOL}", resid)
    return R


# -- univariate roots --------------------------------------------------------------------

@dataclass
class RootSet:
    roots: np.ndarray                 # cluster centres
    multiplicities: np.ndarray
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    raw: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    n_infinite: int = 0
    sweeps: int = 0

    def __iter__(self):
        return iter(zip(self.roots.tolist(), self.multiplicities.tolist()))

    def __len__(self):
        return len(self.roots)

    @property
    def total(self) -> int:
        return int(np.sum(self.multiplicities))


def trim_leading(c, tol: float = TRIM_TOL) -> tuple[np.ndarray, int]:
    """Drop negligible leading coefficients; returns (coeffs, number dropped)."""
    c = np.asarray(c, dtype=complex)
    big = np.max(np.abs(c))
    n = len(c)
    while n > 1 and abs(c[n - 1]) < tol * big:
        n -= 1
    return c[:n], len(c) - n


def _weierstrass_radii(c: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Inclusion radii deg * |p(z_i) / (c_n prod_{j != i} (z_i - z_j))|."""
    n = len(z)
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        w = horner(c, z) / (c[-1] * np.prod(diff, axis=1))
    return np.where(np.isfinite(w), n * np.abs(w), np.inf)


def aberth(c, max_sweeps: int = 200, tol: float = 1e-12) -> tuple[np.ndarray, int]:
    """All roots of the ascending coefficient array c (leading coefficient nonzero)."""
    c = np.asarray(c, dtype=complex)
    n = len(c) - 1
    if n == 1:
        return np.array([-c[0] / c[1]]), 0
    dc = c[1:] * np.arange(1, n + 1)
    absc = np.abs(c)
    R = 1.0 + np.max(np.abs(c[:-1] / c[-1]))
    # start on a circle sized by the geometric mean of the root moduli, capped by Cauchy
    rho = min(R, max(abs(c[0] / c[-1]) ** (1.0 / n), 1e-3))
    k = np.arange(n)
    z = rho * np.exp(1j * (2 * np.pi * k / n + 0.4)) * (1 + 0.01 * np.cos(3 * k))
    active = np.ones(n, dtype=bool)
    eps = np.finfo(float).eps
    for sweep in range(1, max_sweeps + 1):
        pz = horner(c, z)
        noise = 4 * n * eps * horner(absc, np.abs(z))
        active &= np.abs(pz) > noise
        if not active.any():
            return z, sweep
        dp = horner(dc, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pz / dp
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, np.inf)
            s = np.sum(1.0 / diff, axis=1)
            step = ratio / (1.0 - ratio * s)
        step = np.where(np.isfinite(step) & active, step, 0.0)
        z = z - step
        if np.max(np.abs(step) / (1.0 + np.abs(z))) < tol:
            return z, sweep
    worst = float(np.max(np.abs(horner(c, z)) / np.abs(horner(absc, np.maximum(1.0, np.abs(z))))))
    raise RootFinderError(f"Aberth iteration did not converge in {max_sweeps} sweeps", worst)


def aberth_function(logderiv, init, max_sweeps: int = 200, tol: float = 1e-12):
    """Aberth-Ehrlich sweeps driven by a log-derivative oracle f'/f.

    For functions evaluated more accurately than their monomial coefficients
    allow.  Returns (roots, converged).  Multiple roots converge only
    linearly, so a capped run is not an error here.
    """
    z = np.array(init, dtype=complex)
    for _ in range(max_sweeps):
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = 1.0 / logderiv(z)
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, np.inf)
            s = np.sum(1.0 / diff, axis=1)
            step = ratio / (1.0 - ratio * s)
        step = np.where(np.isfinite(step), step, 0.0)
        z = z - step
        if np.max(np.abs(step) / (1.0 + np.abs(z))) < tol:
            return z, True
    return z, False


def cluster_multiplicities(roots, tol: float = 1e-6, radii=None) -> RootSet:
    """Single-linkage clusters: link when |r_i - r_j| <= max(tol (1+|r|), rad_i + rad_j)."""
    roots = np.asarray(roots, dtype=complex)
    n = len(roots)
    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    rad = np.zeros(n) if radii is None else np.asarray(radii, dtype=float)
    for i in range(n):
        for j in range(i + 1, n):
            d = abs(roots[i] - roots[j])
            lim = max(tol * (1.0 + max(abs(roots[i]), abs(roots[j]))), rad[i] + rad[j])
            if d <= lim:
                a, b = find(i), find(j)
                if a != b:
                    parent[max(a, b)] = min(a, b)
    labels = np.array([find(i) for i in range(n)])
    heads = sorted(set(labels.tolist()))
    centres = np.array([roots[labels == h].mean() for h in heads], dtype=complex)
    mult = np.array([int(np.sum(labels == h)) for h in heads], dtype=int)
    return RootSet(centres, mult, raw=roots)


def roots_simultaneous(coeffs, tol: float = 1e-6, max_sweeps: int = 200) -> RootSet:
    c, dropped = trim_leading(coeffs)
    if len(c) < 2:
        raise ValueError("polynomial must have degree >= 1")
    z, sweeps = aberth(c, max_sweeps=max_sweeps)
    radii = _weierstrass_radii(c, z)
    rs = cluster_multiplicities(z, tol=tol, radii=np.where(np.isfinite(radii), radii, 0.0))
    rs.residuals = np.abs(horner(c, rs.roots)) / horner(np.abs(c), np.maximum(1.0, np.abs(rs.roots)))
    rs.n_infinite = dropped
    rs.sweeps = sweeps
    return rs
