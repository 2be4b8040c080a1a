"""Pressure of x -> x/2, x/2 + 1/2 under exp(beta x) against ln((1 + e^beta) / 2), over grid sizes."""
import argparse
import math
import time

from ifsm import systems, thermo


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--betas", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--grids", type=int, nargs="+", default=[64, 256, 1024, 2048])
    args = ap.parse_args()

    print(f"{'beta':>6} {'m':>6} {'pressure':>20} {'error':>10} {'defect':>10} {'seconds':>8}")
    for beta in args.betas:
        exact = math.log((1 + math.exp(beta)) / 2)
        for m in args.grids:
            t0 = time.perf_counter()
            rep = thermo.pressure(systems.e2(beta), m, run_optimizer=False)
            dt = time.perf_counter() - t0
            print(f"{beta:6.2f} {m:6d} {rep.pressure:20.15f} {abs(rep.pressure - exact):10.2e} "
                  f"{rep.equilibrium_defect:10.2e} {dt:8.3f}")


if __name__ == "__main__":
    main()
