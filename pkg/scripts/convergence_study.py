#!/usr/bin/env python3
"""Print measured convergence orders of every residual on the isothermal catalog."""

import argparse

from willmore_umbilic.chart import CATALOG
from willmore_umbilic.residual import convergence_order

OPS = ("cr_residual", "codazzi_residual", "willmore_residual", "holomorphy_check")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", default="64,128,256", help="comma-separated resolutions")
    ap.add_argument("--order", type=int, choices=(2, 4), default=2)
    args = ap.parse_args()
    ns = [int(v) for v in args.n.split(",")]
    print(f"{'chart':<20}{'operation':<20}{'n':>10}{'sup_norm':>12}{'order':>8}")
    for name, entry in sorted(CATALOG.items()):
        if not entry["isothermal"]:
            continue
        for op in OPS:
            if op == "holomorphy_check" and "euclidean" not in entry["minimal_in"]:
                continue
            if op == "willmore_residual" and not entry["willmore"]:
                continue
            for est in convergence_order(op, name, ns, args.order):
                order = "floor" if est.order is None else f"{est.order:.2f}"
                print(f"{name:<20}{op:<20}{f'{est.n_coarse}->{est.n_fine}':>10}{est.sup_fine:>12.2e}{order:>8}")


if __name__ == "__main__":
    main()
