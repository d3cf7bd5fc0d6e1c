import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import complexes
from corrdyn import measure, periodic
from corrdyn.atoms import AtomicMeasure, mix
from corrdyn.corr import make_context
from corrdyn.errors import ComparisonError, RefusalError, SizeLimitError
from corrdyn.sphere import INF, mobius_apply, nearest, to_xyz


def _as_set(mu):
    return sorted((round(v.real, 9), round(v.imag, 9), w) for v, w in zip(mu.values, mu.weights))


# -- transport --------------------------------------------------------------------------------

def test_zero_steps(ctx4):
    mu = AtomicMeasure.dirac(0.3 + 0.1j)
    assert measure.transport(ctx4, mu, 0) is mu


def test_backward_one(ctx4):
    mu = measure.transport(ctx4, AtomicMeasure.dirac(1), 1)
    assert _as_set(mu) == [(-2.0, 0.0, 0.5), (1.0, 0.0, 0.5)]


def test_exceptional_stays(ctx5):
    for k in (1, 4, 9):
        mu = measure.transport(ctx5, AtomicMeasure.dirac(-1), k)
        assert len(mu) == 1 and mu.weights[0] == 1.0
        assert abs(mu.values[0] + 1) < 1e-10
        nu = measure.transport(ctx5, AtomicMeasure.dirac(2), k, measure.FORWARD)
        assert len(nu) == 1 and abs(nu.values[0] - 2) < 1e-10


@given(complexes, st.integers(0, 8), st.sampled_from([measure.FORWARD, measure.BACKWARD]))
def test_mass_exact(z, k, direction):
    mu = measure.transport(make_context(4), AtomicMeasure.dirac(z), k, direction)
    assert mu.exact_mass == 1


def test_mass_coalesced(ctx4):
    mu = measure.transport(ctx4, AtomicMeasure.dirac(3), 10, coalesce_eps=1e-3)
    assert abs(mu.mass - 1) < 1e-12
    assert len(mu) < 2**10


def test_cap(ctx4):
    with pytest.raises(SizeLimitError, match="coalesc"):
        measure.transport(ctx4, AtomicMeasure.dirac(3), 5, cap=16)


def test_negative_steps(ctx4):
    with pytest.raises(ValueError):
        measure.transport(ctx4, AtomicMeasure.dirac(3), -1)


def test_j_conjugacy(ctx4):
    z0 = 0.7 + 0.4j
    jz = mobius_apply(ctx4.j_map, z0)
    for n in (1, 5, 9):
        back = measure.transport(ctx4, AtomicMeasure.dirac(jz), n).map_points(ctx4.j_map)
        fwd = measure.transport(ctx4, AtomicMeasure.dirac(z0), n, measure.FORWARD)
        assert len(back) == len(fwd)
        for p, w in back.atoms():
            i = nearest(p, fwd.points())
            assert i[1] < 1e-8
        assert back.exact_mass == fwd.exact_mass


# -- kernel features ---------------------------------------------------------------------------

def test_fibonacci_centers():
    c = measure.fibonacci_centers(256)
    assert len(c) == 256 and c.name == "fibonacci-256"
    assert np.allclose(np.linalg.norm(c.xyz, axis=1), 1)
    assert np.all(np.isfinite(c.values))
    # well spread: nearest-neighbour distances are of one size
    d = np.linalg.norm(c.xyz[:, None] - c.xyz[None], axis=-1) + 3 * np.eye(256)
    nn = d.min(axis=1)
    assert nn.max() < 2 * nn.min()


def test_feature_at_center():
    c = measure.default_centers()
    f = measure.kernel_features(AtomicMeasure.dirac(c.values[17], weight=3))
    assert abs(f.values[17] - 3) < 1e-12
    assert len(f) == 256 and f.descriptor == (c.name, measure.DEFAULT_BANDWIDTH)


def test_feature_zero_mass():
    mu = AtomicMeasure([1, 2j], [False, False], [0.0, 0.0])
    assert np.all(measure.kernel_features(mu).values == 0)


def test_far_atom_invisible():
    c = measure.centers_from_points([0, 0.1, 0.1j])
    mu = AtomicMeasure.dirac(0.05)
    nu = mix([mu, AtomicMeasure.dirac(INF)], [1, 1])
    f, g = measure.kernel_features(mu, c, 0.05), measure.kernel_features(nu, c, 0.05)
    assert np.array_equal(f.values, g.values)


def test_feature_errors():
    with pytest.raises(ValueError):
        measure.kernel_features(AtomicMeasure.dirac(0), bandwidth=0)


def test_feature_csv():
    f = measure.kernel_features(AtomicMeasure.dirac(0), measure.fibonacci_centers(4))
    lines = f.to_csv().splitlines()
    assert lines[0] == "center_index,value" and len(lines) == 5
    assert [int(r.split(",")[0]) for r in lines[1:]] == [0, 1, 2, 3]


def test_features_chunk_independent(ctx4):
    mu = measure.transport(ctx4, AtomicMeasure.dirac(3), 14)
    f = measure.kernel_features(mu).values
    xyz = to_xyz(mu.values, mu.at_inf)
    d2 = np.maximum(0, 2 - 2 * xyz @ measure.default_centers().xyz.T)
    direct = (mu.weights[:, None] * np.exp(-d2 / 0.15**2)).sum(axis=0)
    assert np.allclose(f, direct, rtol=1e-12, atol=1e-15)


# -- discrepancy -------------------------------------------------------------------------------

@given(complexes, complexes)
def test_discrepancy_symmetric(z, w):
    mu, nu = AtomicMeasure.dirac(z), AtomicMeasure.dirac(w)
    assert measure.discrepancy(mu, mu) == 0
    assert measure.discrepancy(mu, nu) == measure.discrepancy(nu, mu)
    assert 0 <= measure.discrepancy(mu, nu) <= 1


def test_descriptor_mismatch():
    mu = AtomicMeasure.dirac(0)
    f = measure.kernel_features(mu)
    g = measure.kernel_features(mu, bandwidth=0.2)
    with pytest.raises(ComparisonError):
        measure.feature_discrepancy(f, g, 1, 1)
    h = measure.kernel_features(mu, measure.fibonacci_centers(64))
    with pytest.raises(ComparisonError):
        measure.feature_discrepancy(f, h, 1, 1)


def test_invariance_exceptional(ctx5):
    assert measure.invariance_residual(ctx5, AtomicMeasure.dirac(-1)) == 0.0


def test_invariance_fixed_point_split(ctx4):
    # 1 is kept by one branch, the other half goes to -2: the residual is the -2 bump
    r = measure.invariance_residual(ctx4, AtomicMeasure.dirac(1))
    f1 = measure.kernel_features(AtomicMeasure.dirac(1)).values
    f2 = measure.kernel_features(AtomicMeasure.dirac(-2)).values
    assert r > 0.1
    assert abs(r - np.max(np.abs(0.5 * (f2 - f1)))) < 1e-12


def test_start_independence(ctx4, thresholds):
    gate = thresholds["gates"]["start_independence"]
    mus = [measure.transport(ctx4, AtomicMeasure.dirac(z), 14) for z in (3, 2 + 2j, -0.5)]
    for i in range(3):
        for j in range(i + 1, 3):
            assert measure.discrepancy(mus[i], mus[j]) < gate


def test_invariance_empirical(ctx4, thresholds):
    mu = measure.transport(ctx4, AtomicMeasure.dirac(3), 14)
    assert measure.invariance_residual(ctx4, mu) < thresholds["gates"]["invariance"]


def test_monotone_proxy(ctx4, thresholds):
    d = {}
    for n in (8, 10, 12):
        lo = measure.transport(ctx4, AtomicMeasure.dirac(3), n)
        d[n] = measure.discrepancy(lo, measure.transport(ctx4, lo, 2))
    assert d[10] < thresholds["gates"]["proxy_n10"]
    assert d[8] > d[10] > d[12]


# -- periodic measures -------------------------------------------------------------------------

def test_periodic_measure_modes(ctx4):
    rep = periodic.periodic_points(ctx4, 1)
    cnt = measure.periodic_measure(rep, measure.COUNTING)
    assert len(cnt) % 2 == 1
    assert abs(cnt.mass - 1) < 1e-15
    mul = measure.periodic_measure(rep, measure.MULTIPLICITY)
    assert mul.exact_mass == 1
    ones = [w for p, w in mul.atoms() if p.value == pytest.approx(1, abs=1e-6)]
    assert ones == [0.5]              # the parabolic point carries multiplicity 2 of 4
    with pytest.raises(ValueError):
        measure.periodic_measure(rep, "uniform")


def test_periodic_measure_refusal(ctx4):
    rep = periodic.periodic_points(ctx4, 1)
    p = rep.points[0]
    rep.points[0] = periodic.PeriodicPoint(p.point, p.multiplicity, p.side, False)
    with pytest.raises(RefusalError):
        measure.periodic_measure(rep)


def test_periodic_measure_converges(ctx4):
    mu_minus = measure.transport(ctx4, AtomicMeasure.dirac(3), 14)
    mu_plus = measure.transport(ctx4, AtomicMeasure.dirac(3), 14, measure.FORWARD)
    target = measure.symmetric_average(mu_minus, mu_plus)
    assert abs(target.mass - 1) < 1e-12
    d = [measure.discrepancy(measure.periodic_measure(periodic.periodic_points(ctx4, n)), target)
         for n in (2, 3, 4)]
    assert d[0] > d[1] > d[2]
