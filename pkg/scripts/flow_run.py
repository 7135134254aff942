#!/usr/bin/env python3
"""Run the gradient flow at several resolutions and report the residual reduction."""

import argparse
import time

from willmore_umbilic.flow import FlowConfig, run_flow


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--chart", default="perturbed_sphere")
    ap.add_argument("--n", default="24,32,40")
    ap.add_argument("--steps", type=int, default=200)
    args = ap.parse_args()
    for n in (int(v) for v in args.n.split(",")):
        t0 = time.perf_counter()
        trace, _ = run_flow(args.chart, FlowConfig(max_steps=args.steps), n=n)
        r = trace.residuals
        print(
            f"n={n:<4} status={trace.status:<9} steps={len(trace.records) - 1:<4} "
            f"energy {trace.energies[0]:.6f} -> {trace.energies[-1]:.6f}  "
            f"residual ratio {r[0] / r[-1]:.2f}  monotone={trace.is_monotone()}  "
            f"{time.perf_counter() - t0:.1f}s"
        )


if __name__ == "__main__":
    main()
