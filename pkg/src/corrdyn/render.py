"""Escape-time pictures of the limit sets and heatmaps of atomic measures.

Pixels are independent, so the kernel runs row-parallel under numba; every
pixel writes only its own cell, which keeps the output independent of the
thread count.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numba
import numpy as np

from .atoms import AtomicMeasure
from .corr import CorrContext
from .errors import ParameterError
from .klein import ESCAPE_BAND, MINUS, PLUS, SLOW_TOL
from .sphere import to_xyz

# TBB in this image is too old for numba; skip straight to the portable layers
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

N_MAX = 500
# payload codes besides escape steps
INSIDE = 0
INCONSISTENT = -1


@dataclass(frozen=True)
class Viewport:
    center: complex
    width: float
    pixels_x: int
    pixels_y: int

    def __post_init__(self):
        if self.width <= 0 or self.pixels_x < 1 or self.pixels_y < 1:
            raise ValueError(f"bad viewport {self}")

    @property
    def height(self) -> float:
        return self.width * self.pixels_y / self.pixels_x

    @property
    def step(self) -> float:
        return self.width / self.pixels_x

    def points(self) -> np.ndarray:
        """Pixel-centre points, shape (pixels_y, pixels_x); row 0 is the top."""
        dx = self.step
        xs = (np.arange(self.pixels_x) - (self.pixels_x - 1) / 2.0) * dx
        ys = ((self.pixels_y - 1) / 2.0 - np.arange(self.pixels_y)) * dx
        return complex(self.center) + xs[None, :] + 1j * ys[:, None]

    def pixel_of(self, z) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(row, col, inside-viewport mask) of the pixels containing the points z."""
        z = np.asarray(z, dtype=complex) - complex(self.center)
        dx = self.step
        col = np.floor(z.real / dx + self.pixels_x / 2.0).astype(np.int64)
        row = np.floor(self.pixels_y / 2.0 - z.imag / dx).astype(np.int64)
        ok = (col >= 0) & (col < self.pixels_x) & (row >= 0) & (row < self.pixels_y)
        return row, col, ok


def default_viewport(a, pixels: int = 1024) -> Viewport:
    """A square window holding both limit sets for the parameter a."""
    a = complex(a)
    c = 0.5 * (1.0 + a.real)
    return Viewport(complex(c, 0.0), max(8.0, 2.0 * abs(a - 1) + 4.0), pixels, pixels)


@dataclass
class ImageGrid:
    viewport: Viewport
    payload: np.ndarray
    kind: str                      # "escape" or "weight"
    slow: np.ndarray | None = None
    distance: np.ndarray | None = None   # distance estimate to the limit set, 0 inside
    overflow: float = 0.0
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.payload.shape != (self.viewport.pixels_y, self.viewport.pixels_x):
            raise ValueError("payload shape does not match the viewport")

    @property
    def inside(self) -> np.ndarray:
        return self.payload == INSIDE

    @property
    def mass(self) -> float:
        return float(self.payload.sum()) + self.overflow


# -- numba kernels -------------------------------------------------------------------

@numba.njit(cache=True)
def _principal(s):
    if s.real < 0 or (s.real == 0 and s.imag < 0):
        return -s
    return s


@numba.njit(cache=True)
def _cov(u):
    """Roots of w^2 + u w + u^2 - 3, the same branch conventions as corr.cov_roots."""
    if abs(u) > 1.0:
        t = 12.0 / (u * u) - 3.0
        double = abs(t) < 1e-12
        s = _principal(u * np.sqrt(t))
    else:
        disc = 12.0 - 3.0 * u * u
        double = abs(disc) < 1e-12
        s = np.sqrt(disc)
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


@numba.njit(cache=True)
def _j(a, w):
    """J_a(w) as (value, is_inf)."""
    den = 2.0 * w - (a + 1.0)
    if den == 0:
        return 0j, True
    return ((a + 1.0) * w - 2.0 * a) / den, False


@numba.njit(cache=True)
def _margin(z, zinf, c, r):
    if zinf:
        return np.inf
    return abs(z - c) - r


@numba.njit(cache=True)
def _chordal(p, pinf, q, qinf):
    if pinf and qinf:
        return 0.0
    if pinf:
        return 2.0 / np.sqrt(1.0 + abs(q) ** 2)
    if qinf:
        return 2.0 / np.sqrt(1.0 + abs(p) ** 2)
    return 2.0 * abs(p - q) / np.sqrt((1.0 + abs(p) ** 2) * (1.0 + abs(q) ** 2))


@numba.njit(cache=True)
def _dfa(a, z, w, jw_den):
    """Derivative of J_a(w(z)) along the branch w of Cov at z."""
    dwdz = -(w + 2.0 * z) / (2.0 * w + z)
    return -((a - 1.0) ** 2) / (jw_den * jw_den) * dwdz


@numba.njit(cache=True)
def _escape_time(z, a, c, r, plus, n_max):
    """(step, slow, de).

    step 0 = inside after n_max steps, -1 = inconsistent images, else the
    escape step.  de = 1 / |(f^k)'| at the escape step (inf when undefined);
    times a fixed scale it estimates the distance to the limit set.
    """
    zinf = False
    d = 1.0 + 0j
    if plus:
        den = 2.0 * z - (a + 1.0)
        if den != 0:
            d = -((a - 1.0) ** 2) / (den * den)
        z, zinf = _j(a, z)
    pz, pinf = z, zinf
    for k in range(1, n_max + 1):
        if not zinf and z == 1.0:
            pz, pinf = z, zinf
            continue
        if zinf:
            # Cov(inf) = inf twice and J_a(inf) = (a+1)/2
            v0, f0 = 0.5 * (a + 1.0), False
            m0 = _margin(v0, f0, c, r)
            if m0 >= -ESCAPE_BAND:
                pz, pinf = z, zinf
                z, zinf = v0, f0
                d = np.inf + 0j
                continue
            return k, False, np.inf
        wp, wm, dbl = _cov(z)
        v0, f0 = _j(a, wp)
        m0 = _margin(v0, f0, c, r)
        if dbl:
            v1, f1, m1 = v0, f0, -np.inf
        else:
            v1, f1 = _j(a, wm)
            m1 = _margin(v1, f1, c, r)
        s0 = m0 > ESCAPE_BAND
        s1 = m1 > ESCAPE_BAND
        if s0 and s1:
            return INCONSISTENT, False, np.inf
        if s0 or (not s1 and m0 >= m1 and m0 >= -ESCAPE_BAND):
            nz, nf, w = v0, f0, wp
        elif s1 or m1 >= -ESCAPE_BAND:
            nz, nf, w = v1, f1, wm
        else:
            w = wp if m0 >= m1 else wm
            dd = abs(d * _dfa(a, z, w, 2.0 * w - (a + 1.0)))
            return k, False, 1.0 / dd if dd > 0 else np.inf
        if not nf:
            d = d * _dfa(a, z, w, 2.0 * w - (a + 1.0))
        pz, pinf = z, zinf
        z, zinf = nz, nf
    return INSIDE, _chordal(pz, pinf, z, zinf) < SLOW_TOL, 0.0


@numba.njit(parallel=True, cache=True)
def _render(pts, a, c, r, plus, n_max, sub, dx):
    ny, nx = pts.shape
    out = np.empty((ny, nx), dtype=np.int32)
    slow = np.zeros((ny, nx), dtype=np.bool_)
    dist = np.empty((ny, nx))
    for i in numba.prange(ny):
        for j in range(nx):
            if sub == 1:
                s, sl, de = _escape_time(pts[i, j], a, c, r, plus, n_max)
                out[i, j] = s
                slow[i, j] = sl
                dist[i, j] = de
            else:
                # 2x2 supersampling: inside if any subsample is inside, else the smallest step
                best = n_max + 1
                n_inside = 0
                n_bad = 0
                any_slow = False
                dmin = np.inf
                for si in range(2):
                    for sj in range(2):
                        z = pts[i, j] + dx * ((sj - 0.5) * 0.5 + 1j * (0.5 - si) * 0.5)
                        s, sl, de = _escape_time(z, a, c, r, plus, n_max)
                        dmin = min(dmin, de)
                        if s == INSIDE:
                            n_inside += 1
                            any_slow = any_slow or sl
                        elif s == INCONSISTENT:
                            n_bad += 1
                        elif s < best:
                            best = s
                if n_bad > 0:
                    best = INCONSISTENT
                elif n_inside > 0:
                    best = INSIDE
                out[i, j] = best
                slow[i, j] = any_slow
                dist[i, j] = dmin
    return out, slow, dist


# -- public operations --------------------------------------------------------------

def set_threads(n: int | None):
    """Cap numba parallelism; values above the launch-time pool are clipped."""
    if n is None:
        return
    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def render_limit_set(ctx: CorrContext, side: str, viewport: Viewport, n_max: int = N_MAX,
                     supersample: bool = False) -> ImageGrid:
    """Payload 0 for pixels still inside after n_max steps, else the escape step."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if side not in (MINUS, PLUS):
        raise ValueError(f"side must be 'minus' or 'plus', got {side!r}")
    if ctx.klein_radius is None:
        raise ParameterError(f"limit sets need Re(a) > 1, got a = {ctx.a}")
    r = float(ctx.klein_radius)
    out, slow, dist = _render(viewport.points(), complex(ctx.a), complex(1.0 + r), r, side == PLUS,
                              int(n_max), 2 if supersample else 1, viewport.step)
    grid = ImageGrid(viewport, out, "escape", slow=slow, distance=dist)
    grid.notes["inconsistent"] = int(np.sum(out == INCONSISTENT))
    grid.notes["slow"] = int(slow.sum())
    return grid


def escape_points(ctx: CorrContext, side: str, z, n_max: int = N_MAX):
    """Escape steps of arbitrary points (same kernel as the renderer)."""
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    r = float(ctx.klein_radius)
    out, slow, dist = _render(z, complex(ctx.a), complex(1.0 + r), r, side == PLUS, int(n_max), 1, 0.0)
    return out, slow, dist


BOUNDARY_DE = 0.5   # in pixel widths


def boundary_mask(grid: ImageGrid, de_pixels: float = BOUNDARY_DE) -> np.ndarray:
    """Pixels on the boundary of the limit set.

    Inside pixels with an escaped 4-neighbour (the frame counts as escaped),
    plus escaped pixels whose distance estimate is below ``de_pixels`` pixel
    widths, which catches limit sets with empty interior.
    """
    inside = grid.payload == INSIDE
    pad = np.pad(inside, 1, constant_values=False)
    all_in = pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
    mask = inside & ~all_in
    if grid.distance is not None:
        mask |= ~inside & (grid.distance <= de_pixels * grid.viewport.step)
    return mask


def distance_to_mask(mask: np.ndarray) -> np.ndarray:
    """Euclidean pixel distance to the nearest True pixel."""
    from scipy.ndimage import distance_transform_edt
    if not mask.any():
        return np.full(mask.shape, np.inf)
    return distance_transform_edt(~mask)


def render_measure(mu: AtomicMeasure, viewport: Viewport) -> ImageGrid:
    """Bin atom weights into pixels; atoms off the viewport (and infinity) go to overflow."""
    payload = np.zeros((viewport.pixels_y, viewport.pixels_x))
    finite = ~mu.at_inf
    row, col, ok = viewport.pixel_of(mu.values[finite])
    w = mu.weights[finite]
    np.add.at(payload, (row[ok], col[ok]), w[ok])
    overflow = float(w[~ok].sum() + mu.weights[mu.at_inf].sum())
    return ImageGrid(viewport, payload, "weight", overflow=overflow)


def mass_near_boundary(mu: AtomicMeasure, grid: ImageGrid, pixels: float = 3.0) -> float:
    """Fraction of the mass of mu lying within ``pixels`` of a boundary pixel of grid."""
    dist = distance_to_mask(boundary_mask(grid))
    heat = render_measure(mu, grid.viewport)
    near = float(heat.payload[dist <= pixels].sum())
    return near / mu.mass if mu.mass else 1.0


def support_distance(mu: AtomicMeasure, grid: ImageGrid) -> np.ndarray:
    """Chordal distance from each atom of mu to the nearest boundary pixel centre."""
    from scipy.spatial import cKDTree
    mask = boundary_mask(grid)
    if not mask.any():
        return np.full(len(mu), np.inf)
    tree = cKDTree(to_xyz(grid.viewport.points()[mask]))
    d, _ = tree.query(to_xyz(mu.values, mu.at_inf))
    return d


# -- palettes and files -------------------------------------------------------------------

def default_palette(step: np.ndarray) -> np.ndarray:
    """Inside (0) is black, inconsistent pixels are red, escape steps cycle a gradient."""
    step = np.asarray(step)
    t = (step % 32) / 32.0
    rgb = np.stack([
        0.5 + 0.5 * np.cos(2 * np.pi * (t + 0.00)),
        0.5 + 0.5 * np.cos(2 * np.pi * (t + 0.33)),
        0.5 + 0.5 * np.cos(2 * np.pi * (t + 0.67)),
    ], axis=-1)
    out = np.round(40 + 215 * rgb).astype(np.uint8)
    out[step == INSIDE] = 0
    out[step == INCONSISTENT] = (255, 0, 0)
    return out


def weight_palette(w: np.ndarray) -> np.ndarray:
    """Grey levels by log weight; empty pixels black."""
    w = np.asarray(w, dtype=float)
    g = np.zeros(w.shape)
    pos = w > 0
    if pos.any():
        lw = np.log(w[pos])
        lo, hi = lw.min(), lw.max()
        g[pos] = 0.25 + 0.75 * ((lw - lo) / (hi - lo) if hi > lo else 1.0)
    v = np.round(255 * g).astype(np.uint8)
    return np.stack([v, v, v], axis=-1)


def to_rgb(grid: ImageGrid, palette=None) -> np.ndarray:
    if palette is None:
        palette = default_palette if grid.kind == "escape" else weight_palette
    rgb = np.asarray(palette(grid.payload), dtype=np.uint8)
    if rgb.shape != grid.payload.shape + (3,):
        raise ValueError("palette must return one RGB triple per pixel")
    return rgb


def _write(path, header: bytes, body: bytes):
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(body)
    except OSError as exc:
        raise OSError(f"cannot write image to {os.fspath(path)!r}: {exc}") from exc


def write_ppm(grid: ImageGrid, path, palette=None):
    """Binary P6: 'P6\\n<w> <h>\\n255\\n' then RGB triples row-major from the top-left."""
    rgb = to_rgb(grid, palette)
    h, w = grid.payload.shape
    _write(path, f"P6\n{w} {h}\n255\n".encode("ascii"), np.ascontiguousarray(rgb).tobytes())


def write_pgm(grid: ImageGrid, path, palette=None):
    """Binary P5 with the same header layout; grey = the first channel of the palette."""
    rgb = to_rgb(grid, palette)
    h, w = grid.payload.shape
    _write(path, f"P5\n{w} {h}\n255\n".encode("ascii"), np.ascontiguousarray(rgb[..., 0]).tobytes())


def read_pnm(path) -> tuple[str, np.ndarray]:
    """Minimal reader for the files written above; returns (magic, pixels)."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, dims, maxval, body = data.split(b"\n", 3)
    w, h = (int(v) for v in dims.split())
    if int(maxval) != 255 or magic not in (b"P5", b"P6"):
        raise ValueError(f"unsupported pixmap header in {path}")
    ch = 3 if magic == b"P6" else 1
    px = np.frombuffer(body, dtype=np.uint8)
    if px.size != w * h * ch:
        raise ValueError(f"pixel data size mismatch in {path}")
    return magic.decode(), px.reshape((h, w, ch) if ch == 3 else (h, w))
