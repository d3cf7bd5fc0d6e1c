"""Print how the backward transports and the periodic-point measures settle down.

    python scripts/equidistribution_demo.py [--a 4] [--n-max 16]
"""

import argparse

from corrdyn import measure, periodic
from corrdyn.atoms import AtomicMeasure
from corrdyn.corr import make_context

STARTS = [3, 2 + 2j, -0.5]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--a", type=complex, default=4)
    ap.add_argument("--n-max", type=int, default=16)
    ap.add_argument("--period-max", type=int, default=5)
    args = ap.parse_args()
    ctx = make_context(args.a)

    print("n  spread(starts)  step(n,n+2)  invariance")
    prev = None
    for n in range(2, args.n_max + 1, 2):
        mus = [measure.transport(ctx, AtomicMeasure.dirac(z), n) for z in STARTS]
        spread = max(measure.discrepancy(mus[i], mus[j]) for i in range(3) for j in range(i + 1, 3))
        step = measure.discrepancy(prev, mus[0]) if prev is not None else float("nan")
        print(f"{n:<3}{spread:<16.3e}{step:<13.3e}{measure.invariance_residual(ctx, mus[0]):.3e}")
        prev = mus[0]

    target = measure.symmetric_average(prev, measure.transport(ctx, AtomicMeasure.dirac(3), args.n_max,
                                                               measure.FORWARD))
    print("\nperiod  points  counting   multiplicity")
    for n in range(1, args.period_max + 1):
        rep = periodic.periodic_points(ctx, n)
        d = [measure.discrepancy(measure.periodic_measure(rep, w), target)
             for w in (measure.COUNTING, measure.MULTIPLICITY)]
        print(f"{n:<8}{rep.count_distinct:<8}{d[0]:<11.4f}{d[1]:.4f}")


if __name__ == "__main__":
    main()
