"""The consolidated invariant suite behind ``corrdyn check``.

Each group returns a :class:`CheckResult`; the samples are seeded, so a run is
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import klein, periodic
from .corr import (
    CorrContext, critical_data, cov_images, eq1_residual, fa_backward, fa_forward, make_context,
    ramification_search,
)
from .errors import InconsistencyError
from .sphere import (
    MobiusMap, SpherePoint, chordal_dist, mobius_apply, mobius_compose, mobius_inverse, nearest,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool | None          # None = skipped
    detail: str = ""

    def line(self) -> str:
        status = "SKIP" if self.passed is None else ("PASS" if self.passed else "FAIL")
        return f"{self.name} {status}" + (f" {self.detail}" if self.detail else "")


def random_points(n: int, seed: int) -> np.ndarray:
    """Uniform points on the sphere in the finite chart."""
    return klein.sample_sphere(n, np.random.default_rng(seed))


def random_parameters(n: int, seed: int) -> np.ndarray:
    """Parameters uniform in the disk |a - 4| <= 3 (avoiding a = 1 by construction)."""
    rng = np.random.default_rng(seed)
    rad = 3.0 * np.sqrt(rng.random(n))
    return 4.0 + rad * np.exp(2j * np.pi * rng.random(n))


def _contains(pts, z, tol):
    return nearest(z, pts)[1] < tol


# -- groups -------------------------------------------------------------------------------

def check_sphere(n: int = 1000, seed: int = 1) -> CheckResult:
    z = random_points(3 * n, seed).reshape(3, n)
    worst_tri = 0.0
    for p, q, r in zip(*z):
        d = chordal_dist(p, q), chordal_dist(q, r), chordal_dist(p, r)
        worst_tri = max(worst_tri, d[2] - d[0] - d[1])
        if not 0 <= d[0] <= 2 or d[0] != chordal_dist(q, p):
            return CheckResult("sphere", False, f"metric axiom fails at {p}, {q}")
    rng = np.random.default_rng(seed)
    m = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    M = MobiusMap(*m)
    Mi = mobius_inverse(M)
    worst_inv = max(chordal_dist(mobius_apply(Mi, mobius_apply(M, p)), p) for p in z[0])
    ok = worst_tri <= 1e-12 and worst_inv < 1e-10
    return CheckResult("sphere", ok, f"triangle={worst_tri:.2e} inverse={worst_inv:.2e}")


def check_branches(n: int = 10_000, seed: int = 2) -> CheckResult:
    worst = 0.0
    for z in random_points(n, seed):
        img = cov_images(z)
        if img.total != 2:
            return CheckResult("branches", False, f"multiplicity {img.total} at {z}")
        for p in img.points:
            w = p.value
            worst = max(worst, abs(z * z + z * w + w * w - 3) / max(1.0, abs(z) ** 2))
    return CheckResult("branches", worst < 1e-9, f"residual={worst:.2e}")


def check_cov_symmetry(n: int = 1000, seed: int = 3) -> CheckResult:
    worst = 0.0
    for z in random_points(n, seed):
        for p in cov_images(z).points:
            worst = max(worst, nearest(SpherePoint(z), cov_images(p).points)[1])
    return CheckResult("cov-symmetry", worst < 1e-8, f"worst={worst:.2e}")


def check_involution(ctx: CorrContext, n: int = 1000, seed: int = 4) -> CheckResult:
    JJ = mobius_compose(ctx.j_map, ctx.j_map)
    worst = max(chordal_dist(mobius_apply(JJ, z), z) for z in random_points(n, seed))
    fix = max(chordal_dist(mobius_apply(ctx.j_map, p), p) for p in (1, ctx.a))
    return CheckResult("involution", worst < 1e-10 and fix < 1e-12, f"worst={worst:.2e} fixed={fix:.2e}")


def check_adjointness(n: int = 1000, seed: int = 5, ctx: CorrContext | None = None) -> CheckResult:
    """w in F(z) iff z in F^-1(w); parameters random in the disk unless ctx is given."""
    z = random_points(n, seed)
    a = random_parameters(n, seed) if ctx is None else np.full(n, ctx.a)
    worst = 0.0
    for zi, ai in zip(z, a):
        c = ctx or make_context(ai)
        for w in fa_forward(c, zi).points:
            worst = max(worst, nearest(SpherePoint(zi), fa_backward(c, w).points)[1])
        for w in fa_backward(c, zi).points:
            worst = max(worst, nearest(SpherePoint(zi), fa_forward(c, w).points)[1])
    return CheckResult("adjointness", worst < 1e-8, f"worst={worst:.2e}")


def check_eq1(ctx: CorrContext, n: int = 1000, seed: int = 6) -> CheckResult:
    worst = 0.0
    Pi = mobius_inverse(ctx.phi_map)
    for z in random_points(n, seed):
        if abs(z + 1) < 1e-6:
            continue
        for p in fa_forward(ctx, mobius_apply(ctx.phi_map, z)).points:
            w = mobius_apply(Pi, p)
            if w.is_inf or abs(w.value - 1) < 1e-6:
                continue
            res, scale = eq1_residual(ctx.a, z, w.value)
            worst = max(worst, res / scale)
    return CheckResult("eq1", worst < 1e-7, f"worst={worst:.2e}")


def check_fixed_exceptional(n_params: int = 20, seed: int = 7) -> CheckResult:
    worst = 0.0
    for a in random_parameters(n_params, seed):
        img = fa_backward(make_context(a), 1).points
        for target in (1, -2):
            worst = max(worst, nearest(SpherePoint(target), img)[1])
    c5 = make_context(5)
    ok5 = True
    f = fa_forward(c5, -1)
    ok5 &= len(f) == 2 and _contains(f.points, -1, 1e-10) and _contains(f.points, 2, 1e-10)
    f = fa_forward(c5, 2)
    ok5 &= len(f) == 1 and f.multiplicities == (2,) and chordal_dist(f.points[0], 2) < 1e-10
    b = fa_backward(c5, -1)
    ok5 &= len(b) == 1 and chordal_dist(b.points[0], -1) < 1e-10
    ok5 &= tuple(c5.exceptional) == (SpherePoint(-1), SpherePoint(2))
    return CheckResult("fixed-exceptional", worst < 1e-10 and ok5, f"worst={worst:.2e} a5_cycle={ok5}")


def check_critical(n_params: int = 20, seed: int = 8) -> CheckResult:
    worst = 0.0
    for a in random_parameters(n_params, seed):
        ctx = make_context(a)
        closed = critical_data(ctx).B2
        found = ramification_search(ctx)
        if len(found) != len(closed):
            return CheckResult("critical", False, f"found {len(found)} values at a={a}")
        for p in closed:
            worst = max(worst, nearest(p, found)[1])
    return CheckResult("critical", worst < 1e-8, f"worst={worst:.2e}")


def check_klein(ctx: CorrContext, n_samples: int = 10_000, seed: int = 0) -> CheckResult:
    if abs(ctx.a - klein.DISK_CENTER) > klein.DISK_RADIUS:
        return CheckResult("klein", None, "a outside |a-4| <= 3")
    rep = klein.validate_klein(ctx, n_samples, seed)
    detail = (f"disjoint={len(rep.disjoint_fail)} cover={len(rep.cover_fail)} "
              f"involution={len(rep.involution_fail)}")
    return CheckResult("klein", rep.ok, detail)


def check_two_sided(ctx: CorrContext, n: int = 1000, seed: int = 9) -> CheckResult:
    """f_a(z) in Delta_J and f~_a(z) outside, away from the boundary band and from 1."""
    if abs(ctx.a - klein.DISK_CENTER) > klein.DISK_RADIUS:
        return CheckResult("two-sided", None, "a outside |a-4| <= 3")
    band = 1e-6
    bad = tested = 0
    for z in random_points(n, seed):
        if chordal_dist(z, 1) < klein.NEAR_ONE:
            continue
        try:
            f = klein.f_restricted(ctx, z)
        except InconsistencyError:
            bad += 1
            continue
        if f is klein.ESCAPED:
            continue
        g = klein.f_tilde(ctx, z)
        mf, mg = klein.j_margin(ctx, f), klein.j_margin(ctx, g)
        if abs(mf) < band or abs(mg) < band:
            continue
        tested += 1
        bad += not (mf > 0 and mg < 0)
    return CheckResult("two-sided", bad == 0, f"tested={tested} failures={bad}")


def check_periodic(ctx: CorrContext, n_max: int = 3) -> CheckResult:
    parts = []
    ok = True
    for n in range(1, n_max + 1):
        rep = periodic.periodic_points(ctx, n)
        good = (rep.all_verified and rep.total_multiplicity == 2 ** (n + 1)
                and rep.count_distinct % 2 == 1 and periodic.j_symmetric(ctx, rep))
        ok &= good
        parts.append(f"n{n}={rep.total_multiplicity}/{rep.count_distinct}")
    return CheckResult("periodic", ok, " ".join(parts))


def check_parabolic(ctx: CorrContext) -> CheckResult:
    rep = periodic.parabolic_coefficient(ctx)
    ok = abs(rep.multiplier_estimate - 1) < 1e-6 and not rep.flagged
    return CheckResult("parabolic", ok, f"multiplier={abs(rep.multiplier_estimate - 1):.1e} "
                                        f"deviation={rep.deviation:.1e}")


def run_all(ctx: CorrContext) -> list[CheckResult]:
    return [
        check_sphere(),
        check_branches(),
        check_cov_symmetry(),
        check_involution(ctx),
        check_adjointness(ctx=ctx),
        check_eq1(ctx),
        check_fixed_exceptional(),
        check_critical(),
        check_klein(ctx),
        check_two_sided(ctx),
        check_periodic(ctx),
        check_parabolic(ctx),
    ]
