"""Gelfand estimates (1/N) ln B^N(1): the spread between extreme nodes decays like 1/N."""
import argparse

from ifsm import systems
from ifsm.operators import assemble_transfer
from ifsm.spectral import power_iteration, spectral_radius_gelfand


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--grid", type=int, default=2048)
    ap.add_argument("--n-max", type=int, default=200)
    args = ap.parse_args()

    B = assemble_transfer(systems.e2(args.beta), args.grid)
    log_rho = power_iteration(B).log_rho
    print(f"ln rho (power iteration) = {log_rho:.15f}")
    print(f"{'N':>5} {'estimate':>18} {'spread':>12} {'N*spread':>10} {'error':>10}")
    for step in spectral_radius_gelfand(B, args.n_max):
        if step.N in (1, 2, 5) or step.N % 10 == 0:
            print(f"{step.N:5d} {step.estimate:18.12f} {step.spread:12.3e} {step.N * step.spread:10.6f} "
                  f"{abs(step.estimate - log_rho):10.2e}")


if __name__ == "__main__":
    main()
