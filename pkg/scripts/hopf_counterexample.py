"""Hopf fibration: minimal fibers, non-integrable normal plane field, and a Killing field that is not foliation-preserving."""

import argparse
import math

import numpy as np

from foliation_lab import checks as C
from foliation_lab.foliation import frobenius_residual
from foliation_lab.geometry import VectorFieldSpec
from foliation_lab.scenarios import builtin

# D^⊥ of the fibers: ∂η and sin²η ∂a − cos²η ∂b
NORMAL_PLANE = [VectorFieldSpec.of("1", "0", "0"), VectorFieldSpec.of("0", "sin(eta)^2", "-cos(eta)^2")]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--margin", type=float, default=0.3, help="keep eta in (margin, pi/2 - margin)")
    args = ap.parse_args()
    scn = builtin("S4")
    box = ((args.margin, math.pi / 2 - args.margin), (0.0, 2 * math.pi), (0.0, 2 * math.pi))
    plan = C.SamplingPlan(samples=args.samples, seed=args.seed, box=box)

    print("eta profile at a = b = 0")
    print(f"{'eta':>8}{'Frobenius D^⊥':>16}{'|[K1, fiber]^⊥|':>18}")
    for eta in np.linspace(box[0][0], box[0][1], 7):
        p = np.array([eta, 0.0, 0.0])
        fro = frobenius_residual(scn.chart, NORMAL_PLANE, p)
        pres = C.check_foliation_preserving(scn, "K1", C.SamplingPlan(samples=1, box=tuple((x, x) for x in p)))
        print(f"{eta:>8.4f}{fro:>16.12f}{pres.max_residual:>18.12f}")

    print()
    reports = [
        C.check_minimal(scn, plan),
        C.check_integrable(scn, plan),
        C.check_killing(scn, "K0", plan),
        C.check_foliation_preserving(scn, "K0", plan),
        C.check_killing(scn, "K1", plan),
        C.check_foliation_preserving(scn, "K1", plan),
    ]
    for r in reports:
        print(r.to_text())


if __name__ == "__main__":
    main()
