import numpy as np
from hypothesis import given, strategies as st

from conftest import complexes
from corrdyn.atoms import AtomicMeasure, coalesce, mix
from corrdyn.sphere import INF


def test_dirac_and_empty():
    mu = AtomicMeasure.dirac(2 - 1j)
    assert mu.mass == 1 and mu.is_dyadic
    assert AtomicMeasure.empty().mass == 0


def test_compaction_drops_zero_atoms():
    mu = AtomicMeasure.from_atoms([(1, 0.5), (2, 0.0), (INF, 0.5)]).compact()
    assert len(mu) == 2 and mu.at_inf[-1]


def test_csv_roundtrip(tmp_path):
    mu = AtomicMeasure.from_atoms([(1 / 3, 0.25), (INF, 0.5), (-2 + 1e-17j, 0.25)])
    path = tmp_path / "mu.csv"
    text = mu.to_csv(path, comments=["a=4"])
    assert text.startswith("# a=4\nre,im,at_infinity,weight\n")
    back = AtomicMeasure.from_csv(path)
    np.testing.assert_array_equal(back.values, mu.values)
    np.testing.assert_array_equal(back.weights, mu.weights)
    np.testing.assert_array_equal(back.at_inf, mu.at_inf)


@given(st.lists(complexes, min_size=1, max_size=40), st.floats(1e-9, 1.0))
def test_coalesce_conserves_mass(zs, eps):
    n = len(zs)
    mu = AtomicMeasure.dyadic(np.array(zs), np.zeros(n, bool), np.ones(n, np.int64), 6)
    out = coalesce(mu, eps)
    assert out.exact_mass == mu.exact_mass
    assert len(out) <= n


def test_coalesce_infinity_separate():
    mu = AtomicMeasure.from_atoms([(1e12, 0.5), (INF, 0.25), (0, 0.25)])
    out = coalesce(mu, 1e-3)
    # 1e12 is chordally next to infinity but stays a separate atom
    assert out.at_inf.sum() == 1 and len(out) == 3
    assert abs(out.mass - 1) < 1e-15


def test_coalesce_centroid():
    mu = AtomicMeasure.from_atoms([(1.0, 0.75), (1.0 + 1e-8, 0.25)])
    out = coalesce(mu, 1e-6)
    assert len(out) == 1 and abs(out.values[0] - (1 + 0.25e-8)) < 1e-15


def test_mix():
    m = mix([AtomicMeasure.dirac(0), AtomicMeasure.dirac(1)], [0.5, 0.5])
    assert m.mass == 1 and len(m) == 2
