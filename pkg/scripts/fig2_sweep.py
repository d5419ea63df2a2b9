"""Barrier gap and tunnel splitting against total spin, written as CSV.

    python3 scripts/fig2_sweep.py [--smin 100] [--smax 2000] [--step 10] [--out fig2.csv] [--plot fig2.png]

The plot needs matplotlib, which is not a package dependency.
"""

import argparse

from yigcat.core import CONSTANTS
from yigcat.materials import get_material
from yigcat.report import write_csv
from yigcat.spinmodel import FIG2_COLUMNS, sweep_fig2


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--material", default="yig")
    parser.add_argument("--smin", type=int, default=100)
    parser.add_argument("--smax", type=int, default=2000)
    parser.add_argument("--step", type=int, default=10)
    parser.add_argument("--out", default="fig2.csv")
    parser.add_argument("--plot")
    args = parser.parse_args()

    rows = sweep_fig2(get_material(args.material), range(args.smin, args.smax + 1, args.step))
    write_csv(args.out, FIG2_COLUMNS, [r.as_row() for r in rows])
    print(f"{len(rows)} rows -> {args.out}")
    for r in rows:
        if r.S in (args.smin, 500, args.smax):
            print(f"S = {r.S:5d}  dU/kB = {r.dU_kelvin:9.4g} K  dE/h = {r.dE_ghz:9.4g} GHz")

    if args.plot:
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots()
        spins = [r.S for r in rows]
        ax.semilogy(spins, [r.dU_kelvin for r in rows], label="barrier gap / k_B (K)")
        ax.semilogy(spins, [r.dE_joule / CONSTANTS.k_B for r in rows], label="tunnel splitting / k_B (K)")
        ax.set_xlabel("total spin S")
        ax.legend()
        fig.savefig(args.plot, dpi=150)
        print(f"plot -> {args.plot}")


if __name__ == "__main__":
    main()
