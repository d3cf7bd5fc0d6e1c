"""Measure transport under F_a and kernel-feature comparison of atomic measures.

Weak convergence is probed with Gaussian bumps in the chordal metric centred
on a Fibonacci lattice of the sphere.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .atoms import AtomicMeasure, coalesce, mix
from .corr import BACKWARD, FORWARD, CorrContext, step_measure
from .errors import ComparisonError, RefusalError, SizeLimitError
from .sphere import to_xyz

ATOM_CAP = 2**22
AUTO_COALESCE_ATOMS = 2**16
AUTO_COALESCE_EPS = 1e-10
DEFAULT_CENTERS = 256
DEFAULT_BANDWIDTH = 0.15
_CHUNK = 8192


def transport(ctx: CorrContext, mu: AtomicMeasure, steps: int, direction: str = BACKWARD,
              coalesce_eps: float | None = None, cap: int = ATOM_CAP) -> AtomicMeasure:
    """Push mu forward (or pull it back) ``steps`` times with weights halved per branch.

    ``coalesce_eps=None`` means automatic: off below 2^16 atoms, 1e-10 above.
    ``0`` turns merging off entirely.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    for _ in range(steps):
        if 2 * len(mu) > cap:
            raise SizeLimitError(
                f"the next step could reach {2 * len(mu)} atoms, above the cap {cap}; "
                "pass coalesce_eps > 0 to merge nearby atoms"
            )
        mu = step_measure(ctx, mu, direction)
        eps = coalesce_eps
        if eps is None:
            eps = AUTO_COALESCE_EPS if len(mu) > AUTO_COALESCE_ATOMS else 0.0
        if eps > 0:
            mu = coalesce(mu, eps)
    return mu


# -- kernel features -------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Centers:
    xyz: np.ndarray          # unit vectors, one row per centre
    name: str

    def __len__(self):
        return len(self.xyz)

    @property
    def values(self) -> np.ndarray:
        """Centres in the finite chart (none of them is the north pole)."""
        x, y, z = self.xyz.T
        return (x + 1j * y) / (1.0 - z)


def fibonacci_centers(k: int = DEFAULT_CENTERS) -> Centers:
    i = np.arange(k)
    z = 1.0 - (2 * i + 1) / k
    phi = i * np.pi * (3.0 - np.sqrt(5.0))
    rho = np.sqrt(1.0 - z * z)
    xyz = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    return Centers(xyz, f"fibonacci-{k}")


def centers_from_points(values) -> Centers:
    xyz = to_xyz(np.asarray(values, dtype=complex))
    tag = hashlib.sha1(xyz.tobytes()).hexdigest()[:12]
    return Centers(xyz, f"custom-{tag}")


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    descriptor: tuple

    def __len__(self):
        return len(self.values)

    def to_csv(self) -> str:
        rows = ["center_index,value"] + [f"{i},{v:.17g}" for i, v in enumerate(self.values)]
        return "\n".join(rows) + "\n"


_default = None


def default_centers() -> Centers:
    global _default
    if _default is None:
        _default = fibonacci_centers()
    return _default


def kernel_features(mu: AtomicMeasure, centers: Centers | None = None,
                    bandwidth: float = DEFAULT_BANDWIDTH) -> FeatureVector:
    """values[j] = sum_i w_i exp(-(d(p_i, c_j) / bandwidth)^2), d chordal."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    centers = centers or default_centers()
    if len(centers) == 0:
        raise ValueError("need at least one centre")
    out = np.zeros(len(centers))
    pts = to_xyz(mu.values, mu.at_inf)
    # fixed chunk order keeps the sum independent of any threading
    for s in range(0, len(mu), _CHUNK):
        p = pts[s:s + _CHUNK]
        d2 = np.maximum(0.0, 2.0 - 2.0 * p @ centers.xyz.T)   # |p - c|^2 on the unit sphere
        out += np.sum(mu.weights[s:s + _CHUNK, None] * np.exp(-d2 / bandwidth**2), axis=0)
    return FeatureVector(out, (centers.name, float(bandwidth)))


def feature_discrepancy(f: FeatureVector, g: FeatureVector, mass_f: float, mass_g: float) -> float:
    if f.descriptor != g.descriptor:
        raise ComparisonError(f"feature descriptors differ: {f.descriptor} vs {g.descriptor}")
    scale = max(mass_f, mass_g)
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(f.values - g.values)) / scale)


def discrepancy(mu: AtomicMeasure, nu: AtomicMeasure, centers: Centers | None = None,
                bandwidth: float = DEFAULT_BANDWIDTH) -> float:
    """Max-norm gap of kernel features, relative to the larger mass."""
    return feature_discrepancy(kernel_features(mu, centers, bandwidth),
                               kernel_features(nu, centers, bandwidth), mu.mass, nu.mass)


def invariance_residual(ctx: CorrContext, mu: AtomicMeasure, direction: str = BACKWARD,
                        centers: Centers | None = None, bandwidth: float = DEFAULT_BANDWIDTH) -> float:
    return discrepancy(transport(ctx, mu, 1, direction, coalesce_eps=0.0), mu, centers, bandwidth)


def symmetric_average(mu_minus: AtomicMeasure, mu_plus: AtomicMeasure) -> AtomicMeasure:
    """(mu_- + mu_+) / 2."""
    return mix([mu_minus, mu_plus], [0.5, 0.5])


# -- periodic-point measures -----------------------------------------------------------------

COUNTING, MULTIPLICITY = "counting", "multiplicity"


def periodic_measure(report, weighting: str = MULTIPLICITY) -> AtomicMeasure:
    """Normalised measure on Per_n: equal weights, or nu / 2^(n+1)."""
    if not report.all_verified:
        raise RefusalError("report contains unverified points")
    pts = report.points
    vals = np.array([p.point.value for p in pts], dtype=complex)
    inf = np.array([p.point.is_inf for p in pts], dtype=bool)
    if weighting == COUNTING:
        return AtomicMeasure(vals, inf, np.full(len(pts), 1.0 / len(pts)))
    if weighting == MULTIPLICITY:
        nu = np.array([p.multiplicity for p in pts], dtype=np.int64)
        total = 2 ** (report.n + 1)
        if int(nu.sum()) != total:
            raise RefusalError(f"multiplicities sum to {int(nu.sum())}, expected {total}")
        return AtomicMeasure.dyadic(vals, inf, nu, report.n + 1)
    raise ValueError(f"weighting must be 'counting' or 'multiplicity', got {weighting!r}")


__all__ = [
    "BACKWARD", "FORWARD", "Centers", "FeatureVector", "transport", "fibonacci_centers",
    "centers_from_points", "default_centers", "kernel_features", "discrepancy",
    "feature_discrepancy", "invariance_residual", "symmetric_average", "periodic_measure",
]
