import numpy as np
import pytest
from hypothesis import given, strategies as st

from corrdyn.corr import fa_forward
from corrdyn.errors import DegenerateResultantError, RootFinderError
from corrdyn.periodic import graph_polynomial
from corrdyn.polyalg import (
    BiPoly, aberth, bipoly_eval, circle_nodes, cluster_multiplicities, horner, interpolate_grid,
    resultant_x, roots_simultaneous,
)

PQ = BiPoly(np.array([[-3, 0, 1], [0, 1, 0], [1, 0, 0]]))   # z^2 + zw + w^2 - 3


def test_eval_examples():
    assert bipoly_eval(BiPoly([[1]]), 3 + 1j, -2) == 1
    assert bipoly_eval(PQ, 1, -2) == 0
    assert bipoly_eval(PQ, 1, 1) == 0
    assert bipoly_eval(PQ, 0, 0) == -3


def test_trim_and_text_roundtrip():
    P = BiPoly(np.pad(PQ.coeffs, ((0, 2), (0, 1))))
    assert P.bidegree == (2, 2)
    Q = BiPoly.from_text(P.to_text())
    np.testing.assert_array_equal(Q.coeffs, P.coeffs)
    assert P.to_text().splitlines()[0] == "2 2"
    assert len(P.to_text().splitlines()) == 1 + 9


@given(st.integers(0, 8), st.integers(0, 8), st.integers(0, 2**31))
def test_interpolation_roundtrip(dz, dw, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((dz + 1, dw + 1)) + 1j * rng.standard_normal((dz + 1, dw + 1))
    P = BiPoly.raw(c)
    vals = P.eval_grid(circle_nodes(dz + 1), circle_nodes(dw + 1))
    back = interpolate_grid(vals)
    assert np.max(np.abs(back - c)) < 1e-9 * np.max(np.abs(c))


def test_resultant_linear():
    P = BiPoly(np.array([[0, 1], [-1, 0]]))     # x - z, rows z, cols x
    Q = BiPoly(np.array([[0, -1], [1, 0]]))     # x - w, rows x, cols w
    R = resultant_x(P, Q)
    ref = BiPoly(np.array([[0, 1], [-1, 0]]))   # w - z
    s = R.coeffs[0, 1] / ref.coeffs[0, 1]
    assert abs(abs(s) - 1) < 1e-12
    np.testing.assert_allclose(R.coeffs, s * ref.coeffs, atol=1e-12)


def test_resultant_squares():
    P = BiPoly(np.array([[0, 0, 1], [-1, 0, 0]]))   # x^2 - z
    Q = BiPoly(np.array([[0, -1], [0, 0], [1, 0]]))  # x^2 - w
    R = resultant_x(P, Q)
    ref = np.array([[0, 0, 1], [0, -2, 0], [1, 0, 0]])   # (z - w)^2
    np.testing.assert_allclose(R.coeffs, ref, atol=1e-11)


def test_resultant_degenerate():
    # P = x - 1 and Q = x - 1 share the factor x - 1 for every (z, w)
    P = BiPoly(np.array([[-1, 1]]))
    Q = BiPoly(np.array([[-1], [1]]))
    with pytest.raises(DegenerateResultantError):
        resultant_x(P, Q)


def test_resultant_on_two_step_orbits(ctx4):
    G = graph_polynomial(ctx4)
    R = resultant_x(G, G)
    assert R.bidegree == (4, 4)
    rng = np.random.default_rng(0)
    for z in rng.standard_normal(50) + 1j * rng.standard_normal(50):
        for x in fa_forward(ctx4, z).points:
            for w in fa_forward(ctx4, x).points:
                assert abs(R(z, w.value)) < 1e-6 * R.scale


def test_resultant_specialization(ctx4):
    G = graph_polynomial(ctx4)
    R = resultant_x(G, G)
    rng = np.random.default_rng(1)
    for z0 in rng.standard_normal(20) + 1j * rng.standard_normal(20):
        w0 = complex(rng.standard_normal(), rng.standard_normal())
        p = G.in_w(z0)                  # coefficients in x of G(z0, x)
        q = G.in_z(w0)                  # coefficients in x of G(x, w0)
        from corrdyn.polyalg import sylvester
        direct = np.linalg.det(sylvester(p, q))
        assert abs(R(z0, w0) - direct) < 1e-8 * max(1, abs(direct), R.scale)


def test_roots_examples():
    rs = roots_simultaneous([-2, 1, 1])
    assert sorted(np.round(rs.roots.real, 12)) == [-2, 1] and rs.total == 2
    rs = roots_simultaneous([-1, 3, -3, 1])
    assert len(rs) == 1 and rs.multiplicities[0] == 3 and abs(rs.roots[0] - 1) < 1e-4
    rs = roots_simultaneous([-1, 0, 0, 0, 1])
    assert rs.total == 4
    for r in (1, -1, 1j, -1j):
        assert np.min(np.abs(rs.roots - r)) < 1e-12


def test_leading_trim_counts_infinity():
    rs = roots_simultaneous([-2, 1, 1, 1e-20])
    assert rs.total == 2 and rs.n_infinite == 1


@given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=10))
def test_root_residuals(roots):
    c = np.poly(roots)[::-1]
    try:
        rs = roots_simultaneous(c)
    except RootFinderError:
        return
    for r in rs.roots:
        bound = 1e-8 * np.sum(np.abs(c)) * max(1, abs(r)) ** (len(c) - 1)
        assert abs(horner(c, r)) <= bound
    assert rs.total <= len(c) - 1


def test_cluster_examples():
    rs = cluster_multiplicities([1.0, 1.0 + 1e-9])
    assert len(rs) == 1 and rs.multiplicities[0] == 2
    rs = cluster_multiplicities([1, -2])
    assert list(rs.multiplicities) == [1, 1]


def test_cluster_diagonal_p1(ctx4):
    from corrdyn.periodic import diagonal_polynomial
    rs = roots_simultaneous(diagonal_polynomial(ctx4, 1), tol=1e-6)
    assert rs.total == 4


def test_aberth_nonconvergence_reports_residual():
    with pytest.raises(RootFinderError) as err:
        aberth(np.poly(np.arange(1, 20))[::-1].astype(complex), max_sweeps=2)
    assert err.value.residual is not None
