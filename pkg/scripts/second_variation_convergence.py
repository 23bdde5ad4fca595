"""Direct second variation of leaf volume against I_f as the time step shrinks."""

import argparse

from foliation_lab.leaf import second_variation_direct
from foliation_lab.scenarios import builtin


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenarios", nargs="+", default=["S1", "S5", "S5b"])
    ap.add_argument("--steps", type=float, nargs="+", default=[4e-3, 2e-3, 1e-3, 5e-4, 2.5e-4])
    ap.add_argument("--grid", type=int, default=64)
    args = ap.parse_args()
    print(f"{'scenario':<9}{'t_step':>10}{'d2vol':>18}{'I_f':>18}{'abs error':>12}{'ratio':>8}")
    for name in args.scenarios:
        scn = builtin(name)
        lp = scn.leaves[0].with_resolution(args.grid)
        V = scn.tagged("variation")[0].variation()
        prev = None
        for t in args.steps:
            sv = second_variation_direct(scn.chart, scn.foliation, lp, V, t)
            err = abs(sv.d2vol - sv.I_f)
            ratio = f"{prev / err:8.2f}" if prev else " " * 8
            print(f"{name:<9}{t:>10.1e}{sv.d2vol:>18.12f}{sv.I_f:>18.12f}{err:>12.2e}{ratio}")
            prev = err


if __name__ == "__main__":
    main()
