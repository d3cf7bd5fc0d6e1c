import re
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from corrdyn import measure, render
from corrdyn.atoms import AtomicMeasure
from corrdyn.corr import make_context
from corrdyn.errors import ParameterError
from corrdyn.klein import limit_membership
from corrdyn.sphere import chordal_dist, mobius_apply


def _decode(data: bytes):
    """Independent netpbm decoder: whitespace-separated header tokens, comments allowed."""
    tokens, pos = [], 0
    while len(tokens) < 4:
        m = re.compile(rb"\s*(#[^\n]*\n\s*)*(\S+)").match(data, pos)
        tokens.append(m.group(2))
        pos = m.end()
    magic, w, h, maxval = tokens[0].decode(), int(tokens[1]), int(tokens[2]), int(tokens[3])
    body = data[pos + 1:]
    ch = 3 if magic == "P6" else 1
    assert maxval == 255 and len(body) == w * h * ch
    return magic, w, h, np.frombuffer(body, np.uint8).reshape(h, w, ch)


# -- viewport -------------------------------------------------------------------------------------

@given(st.integers(1, 40), st.integers(1, 40), st.floats(0.1, 10))
def test_viewport_mapping(nx, ny, width):
    vp = render.Viewport(0.5 - 0.25j, width, nx, ny)
    assert vp.height == pytest.approx(width * ny / nx)
    pts = vp.points()
    assert pts.shape == (ny, nx)
    row, col, ok = vp.pixel_of(pts.ravel())
    assert ok.all()
    assert np.array_equal(row.reshape(ny, nx), np.repeat(np.arange(ny)[:, None], nx, 1))
    assert np.array_equal(col.reshape(ny, nx), np.repeat(np.arange(nx)[None, :], ny, 0))
    # top-left pixel is up and to the left
    assert pts[0, 0].real <= pts[-1, -1].real and pts[0, 0].imag >= pts[-1, -1].imag


def test_viewport_rejects():
    with pytest.raises(ValueError):
        render.Viewport(0, 0, 10, 10)
    with pytest.raises(ValueError):
        render.Viewport(0, 1, 0, 10)


def test_centre_pixel_exact():
    vp = render.Viewport(1 + 0j, 4.0, 5, 5)
    assert vp.points()[2, 2] == 1


# -- escape-time rendering ---------------------------------------------------------------------------

@pytest.mark.parametrize("a", [4, 7, 3 + 2j])
def test_one_inside_both_sides(a):
    ctx = make_context(a)
    vp = render.Viewport(1 + 0j, 1.0, 3, 3)
    for side in ("minus", "plus"):
        g = render.render_limit_set(ctx, side, vp)
        assert g.payload[1, 1] == render.INSIDE


@pytest.mark.parametrize("a", [4, 7, 3 + 2j])
def test_j_infinity_escapes(a):
    ctx = make_context(a)
    step, _, _ = render.escape_points(ctx, "minus", [(a + 1) / 2])
    assert step[0, 0] > 0


@pytest.mark.parametrize("a", [4, 7, 3 + 2j])
def test_plus_is_j_of_minus(a):
    ctx = make_context(a)
    rng = np.random.default_rng(5)
    vp = render.default_viewport(a, 64)
    pts = vp.points().ravel()[rng.choice(64 * 64, 100, replace=False)]
    pts = np.array([p for p in pts if chordal_dist(p, 1) > 1e-6])
    jp = np.array([mobius_apply(ctx.j_map, p).value for p in pts])
    plus, _, _ = render.escape_points(ctx, "plus", pts[None, :])
    minus, _, _ = render.escape_points(ctx, "minus", jp[None, :])
    assert np.array_equal(plus, minus)


def test_agrees_with_limit_membership(ctx7):
    vp = render.default_viewport(7, 24)
    g = render.render_limit_set(ctx7, "minus", vp, n_max=60)
    for z, s in zip(vp.points().ravel()[::7], g.payload.ravel()[::7]):
        r = limit_membership(ctx7, z, "minus", n_max=60)
        assert (s == render.INSIDE) == (r.status == "inside")
        if s > 0:
            assert s == r.step


def test_render_errors(ctx4):
    vp = render.Viewport(0, 1, 2, 2)
    with pytest.raises(ValueError):
        render.render_limit_set(ctx4, "minus", vp, n_max=0)
    with pytest.raises(ValueError):
        render.render_limit_set(ctx4, "left", vp)
    with pytest.raises(ParameterError):
        render.render_limit_set(make_context(0.5), "minus", vp)


def test_supersample_keeps_inside(ctx7):
    vp = render.default_viewport(7, 48)
    plain = render.render_limit_set(ctx7, "minus", vp)
    sup = render.render_limit_set(ctx7, "minus", vp, supersample=True)
    assert np.all(sup.inside[plain.inside])


# -- measure heatmaps ------------------------------------------------------------------------------

def test_render_measure_single_pixel():
    vp = render.Viewport(0, 2.0, 4, 4)
    c = vp.points()[1, 2]
    g = render.render_measure(AtomicMeasure.dirac(c), vp)
    assert g.payload[1, 2] == 1 and np.count_nonzero(g.payload) == 1 and g.overflow == 0


def test_render_measure_mass(ctx4):
    mu = measure.transport(ctx4, AtomicMeasure.dirac(2 + 1j), 10, measure.FORWARD)
    vp = render.Viewport(0, 2.0, 50, 30)
    g = render.render_measure(mu, vp)
    assert g.overflow > 0
    assert abs(g.mass - mu.mass) < 1e-12


def test_mass_near_boundary(ctx4, thresholds):
    grid = render.render_limit_set(ctx4, "minus", render.default_viewport(4, 1024))
    mu = measure.transport(ctx4, AtomicMeasure.dirac(3), 14)
    assert render.mass_near_boundary(mu, grid, 3) >= thresholds["gates"]["mass_near_boundary"]
    assert render.support_distance(mu, grid).max() < thresholds["gates"]["support_chordal"]


def test_boundary_mask_disk():
    # synthetic grid: inside a disk of radius 5 pixels
    vp = render.Viewport(0, 21.0, 21, 21)
    z = vp.points()
    payload = np.where(np.abs(z) < 5, render.INSIDE, 3)
    mask = render.boundary_mask(render.ImageGrid(vp, payload, "escape"))
    assert mask.any()
    assert np.all(np.abs(np.abs(z[mask]) - 5) < 1.5)
    assert np.all(render.distance_to_mask(mask)[mask] == 0)


# -- files ---------------------------------------------------------------------------------------------

def test_ppm_one_pixel(tmp_path):
    vp = render.Viewport(0, 1, 1, 1)
    g = render.ImageGrid(vp, np.zeros((1, 1), int), "escape")
    render.write_ppm(g, tmp_path / "a.ppm")
    data = (tmp_path / "a.ppm").read_bytes()
    assert data == b"P6\n1 1\n255\n\x00\x00\x00"
    assert len(data) == 14          # 11 header bytes + one RGB triple


def test_ppm_two_pixels(tmp_path):
    vp = render.Viewport(0, 2, 2, 1)
    g = render.ImageGrid(vp, np.array([[render.INSIDE, 1]]), "escape")
    render.write_ppm(g, tmp_path / "b.ppm")
    data = (tmp_path / "b.ppm").read_bytes()
    assert data[:11] == b"P6\n2 1\n255\n"
    assert data[11:14] == b"\x00\x00\x00"
    assert data[14:] == render.default_palette(np.array([1]))[0].tobytes()


def test_round_trip(ctx7, tmp_path):
    g = render.render_limit_set(ctx7, "minus", render.default_viewport(7, 37))
    render.write_ppm(g, tmp_path / "c.ppm")
    magic, w, h, px = _decode((tmp_path / "c.ppm").read_bytes())
    assert (magic, w, h) == ("P6", 37, 37)
    assert np.array_equal(px, render.to_rgb(g))
    m2, px2 = render.read_pnm(tmp_path / "c.ppm")
    assert m2 == "P6" and np.array_equal(px2, px)
    render.write_pgm(g, tmp_path / "c.pgm")
    magic, w, h, px = _decode((tmp_path / "c.pgm").read_bytes())
    assert magic == "P5" and px[..., 0].shape == (37, 37)
    assert np.array_equal(px[..., 0], render.to_rgb(g)[..., 0])


def test_weight_palette():
    vp = render.Viewport(0, 2, 3, 1)
    g = render.ImageGrid(vp, np.array([[0.0, 0.25, 1.0]]), "weight")
    rgb = render.to_rgb(g)
    assert rgb[0, 0].tolist() == [0, 0, 0]
    assert 0 < rgb[0, 1, 0] < rgb[0, 2, 0] == 255


def test_write_error_names_path(tmp_path):
    g = render.ImageGrid(render.Viewport(0, 1, 1, 1), np.zeros((1, 1), int), "escape")
    bad = tmp_path / "missing" / "x.ppm"
    with pytest.raises(OSError, match="missing"):
        render.write_ppm(g, bad)


@pytest.mark.slow
def test_thread_count_invariance(tmp_path):
    outs = []
    for t in (1, 4):
        out = tmp_path / f"t{t}.ppm"
        subprocess.run([sys.executable, "-m", "corrdyn", "limitset", "--a", "7", "--pixels", "256",
                        "--threads", str(t), "--out", str(out)], check=True, capture_output=True)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
