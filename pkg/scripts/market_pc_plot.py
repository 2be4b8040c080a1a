"""Render the four-band market system as a PC plot and compare cells with the product oracle."""
import argparse

import numpy as np

from ifsm import chaos, systems
from ifsm.ingest import write_pgm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--level", type=int, default=4)
    ap.add_argument("--block", type=int, default=8)
    ap.add_argument("--out", default="market.pgm")
    args = ap.parse_args()

    spec = systems.market()
    orbit = chaos.sample_orbit(spec, (0.5, 0.5), args.steps, seed=args.seed)
    hist = chaos.empirical_measure(orbit, args.level, spec=spec)
    write_pgm(chaos.pc_plot(hist, block=args.block), args.out)
    oracle = chaos.product_cell_masses(systems.MARKET_FREQUENCIES, hist.codes, args.level, 2)
    sigma = np.sqrt(oracle * (1 - oracle) / hist.count)
    print(f"wrote {args.out}; max deviation {np.max(np.abs(hist.weights - oracle) / sigma):.2f} sigma")
    coarse = chaos.empirical_measure(orbit, 2, spec=spec)
    for a in systems.MARKET_LABELS:
        print("  ".join(f"{a}{b}: {coarse.weight(a + b):.4f}" for b in systems.MARKET_LABELS))


if __name__ == "__main__":
    main()
