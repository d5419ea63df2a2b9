"""Print the headline numbers of the default experiment next to their reference values.

    python3 scripts/reproduce_headline.py [--config run.ini] [--out results]
"""

import argparse
import sys

from yigcat.cli import REFERENCE_ANCHORS, run_all
from yigcat.config import load_config


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config")
    parser.add_argument("--out", default="results/headline")
    args = parser.parse_args()

    summary, code = run_all(load_config(args.config), args.out)
    print(f"{'quantity':16s} {'value':>12s} {'reference':>10s}  status")
    for name, anchor in summary["anchors"].items():
        value = anchor["value"]
        shown = "-" if value is None else f"{value:.4g}"
        print(f"{name:16s} {shown:>12s} {REFERENCE_ANCHORS[name].target:>10.3g}  {anchor['status']}")
    counts = summary.get("spin_count")
    if counts:
        print(f"\nspin count for the configured radius: lattice {counts['lattice']}, anchored {counts['anchored']}")
    print(f"outputs written to {args.out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
