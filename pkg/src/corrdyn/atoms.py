"""Finite atomic measures on the sphere and their CSV form.

Weights are either plain floats or exact dyadic rationals (an int64
numerator per atom over a shared power-of-two denominator); transport keeps
the dyadic form so mass bookkeeping stays exact.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .sphere import INF, SpherePoint, point, to_xyz

CSV_HEADER = "re,im,at_infinity,weight"


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    values: np.ndarray
    at_inf: np.ndarray
    weights: np.ndarray
    numerators: np.ndarray | None = None
    exponent: int = 0

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=complex).ravel()
        at_inf = np.ascontiguousarray(self.at_inf, dtype=bool).ravel()
        weights = np.ascontiguousarray(self.weights, dtype=float).ravel()
        if not (len(values) == len(at_inf) == len(weights)):
            raise ValueError("values, at_inf and weights must have equal length")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite and nonnegative")
        values = np.where(at_inf, 0j, values)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "at_inf", at_inf)
        object.__setattr__(self, "weights", weights)
        if self.numerators is not None:
            num = np.ascontiguousarray(self.numerators, dtype=np.int64).ravel()
            object.__setattr__(self, "numerators", num)

    # -- constructors -------------------------------------------------------------
    @classmethod
    def dirac(cls, z, weight: int = 1) -> "AtomicMeasure":
        p = point(z)
        return cls.dyadic([p.value], [p.is_inf], [weight], 0)

    @classmethod
    def dyadic(cls, values, at_inf, numerators, exponent: int) -> "AtomicMeasure":
        num = np.asarray(numerators, dtype=np.int64)
        return cls(values, at_inf, num / float(2**exponent), num, int(exponent))

    @classmethod
    def from_atoms(cls, atoms) -> "AtomicMeasure":
        pts, ws = [], []
        for p, w in atoms:
            pts.append(point(p))
            ws.append(float(w))
        return cls(
            np.array([p.value for p in pts], dtype=complex),
            np.array([p.is_inf for p in pts], dtype=bool),
            np.array(ws, dtype=float),
        )

    @classmethod
    def empty(cls) -> "AtomicMeasure":
        return cls(np.zeros(0, complex), np.zeros(0, bool), np.zeros(0))

    # -- basic queries ---------------------------------------------------------------
    def __len__(self):
        return len(self.weights)

    @property
    def is_dyadic(self) -> bool:
        return self.numerators is not None

    @property
    def mass(self) -> float:
        if self.is_dyadic:
            return float(self.exact_mass)
        return float(np.sum(self.weights))

    @property
    def exact_mass(self) -> Fraction:
        if not self.is_dyadic:
            return Fraction(self.mass)
        return Fraction(int(np.sum(self.numerators)), 2**self.exponent)

    def points(self) -> list[SpherePoint]:
        return [INF if f else SpherePoint(v) for v, f in zip(self.values, self.at_inf)]

    def atoms(self):
        return list(zip(self.points(), self.weights.tolist()))

    def compact(self) -> "AtomicMeasure":
        keep = self.weights > 0
        if np.all(keep):
            return self
        return self.subset(keep)

    def subset(self, mask) -> "AtomicMeasure":
        num = None if self.numerators is None else self.numerators[mask]
        return AtomicMeasure(self.values[mask], self.at_inf[mask], self.weights[mask], num, self.exponent)

    def scaled(self, factor: float) -> "AtomicMeasure":
        return AtomicMeasure(self.values, self.at_inf, self.weights * factor)

    def normalized(self) -> "AtomicMeasure":
        return self.scaled(1.0 / self.mass)

    def map_points(self, mobius) -> "AtomicMeasure":
        v, f = mobius.apply_array(self.values, self.at_inf)
        return AtomicMeasure(v, f, self.weights, self.numerators, self.exponent)

    # -- CSV --------------------------------------------------------------------------
    def to_csv(self, target=None, comments=()) -> str:
        buf = io.StringIO()
        for line in comments:
            buf.write(f"# {line}\n")
        buf.write(CSV_HEADER + "\n")
        for v, f, w in zip(self.values, self.at_inf, self.weights):
            re, im = (0.0, 0.0) if f else (v.real, v.imag)
            buf.write(f"{re:.17g},{im:.17g},{int(f)},{w:.17g}\n")
        text = buf.getvalue()
        if target is not None:
            Path(target).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "AtomicMeasure":
        if isinstance(source, (str, Path)) and Path(source).exists():
            text = Path(source).read_text()
        else:
            text = str(source)
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines or lines[0].strip() != CSV_HEADER:
            raise ValueError(f"expected header {CSV_HEADER!r}")
        rows = [ln.split(",") for ln in lines[1:]]
        vals = np.array([complex(float(r[0]), float(r[1])) for r in rows], dtype=complex)
        inf = np.array([r[2].strip() == "1" for r in rows], dtype=bool)
        ws = np.array([float(r[3]) for r in rows], dtype=float)
        return cls(vals, inf, ws)


def mix(measures, coeffs) -> AtomicMeasure:
    """Linear combination sum_k c_k mu_k as one (non-dyadic) atom list."""
    vals = np.concatenate([m.values for m in measures])
    inf = np.concatenate([m.at_inf for m in measures])
    ws = np.concatenate([c * m.weights for m, c in zip(measures, coeffs)])
    return AtomicMeasure(vals, inf, ws)


def coalesce(mu: AtomicMeasure, eps: float) -> AtomicMeasure:
    """Merge atoms within chordal distance ``eps`` (single linkage).

    Weights add (exactly for dyadic measures); merged finite atoms sit at the
    weighted centroid in the finite chart.  Infinity merges only with infinity.
    Clusters keep the order of their first member.
    """
    if eps <= 0 or len(mu) < 2:
        return mu
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components
    from scipy.spatial import cKDTree

    n = len(mu)
    fin = np.flatnonzero(~mu.at_inf)
    labels = np.empty(n, dtype=np.int64)
    n_fin = 0
    if len(fin):
        pairs = cKDTree(to_xyz(mu.values[fin])).query_pairs(eps, output_type="ndarray")
        graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(fin), len(fin)))
        n_fin, lab = connected_components(graph, directed=False)
        labels[fin] = lab
    labels[mu.at_inf] = n_fin
    # renumber clusters by first appearance
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    labels = rank[labels]
    k = len(order)
    w = np.bincount(labels, weights=mu.weights, minlength=k)
    wv = mu.weights * mu.values
    cen = np.bincount(labels, weights=wv.real, minlength=k) + 1j * np.bincount(labels, weights=wv.imag, minlength=k)
    # zero-weight clusters cannot occur after compaction; guard anyway
    with np.errstate(invalid="ignore", divide="ignore"):
        cen = np.where(w > 0, cen / np.where(w > 0, w, 1.0), mu.values[first[order]])
    inf = np.zeros(k, dtype=bool)
    inf[labels[mu.at_inf]] = True
    if mu.is_dyadic:
        num = np.zeros(k, dtype=np.int64)
        np.add.at(num, labels, mu.numerators)
        return AtomicMeasure.dyadic(cen, inf, num, mu.exponent)
    return AtomicMeasure(cen, inf, w)
