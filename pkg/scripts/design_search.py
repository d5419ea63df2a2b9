"""Grid search for feasible designs, with and without a silica shell.

    python3 scripts/design_search.py [--objective delta_z|macroscopicity] [--top 10]
"""

import argparse
from yigcat.feasibility import SearchSpec, optimize
from yigcat.materials import get_material, get_shell


def show(label, result, top):
    print(f"\n{label}: {result.n_evaluated} designs evaluated, {len(result.ranked)} feasible kept")
    print(f"binding constraints among infeasible: {result.binding_histogram}")
    print(f"{'rank':>4} {'S':>6} {'R_core (m)':>11} {'R_out (m)':>11} {'t0 (s)':>9} {'gradB':>9} {'score':>11}")
    for i, c in enumerate(result.ranked[:top], start=1):
        p = c.particle
        print(
            f"{i:4d} {c.S:6d} {p.core_radius:11.4g} {p.shell_outer_radius:11.4g} "
            f"{c.t0:9.3g} {c.grad_B:9.3g} {c.score:11.5g}"
        )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--objective", default="macroscopicity", choices=("delta_z", "macroscopicity"))
    parser.add_argument("--top", type=int, default=10)
    args = parser.parse_args()

    yig = get_material("yig")
    show("bare core", optimize(yig, objective=args.objective), args.top)
    shelled = SearchSpec(shell=get_shell("silica"), shell_outer_range=(1e-7, 2e-6), stage2_steps=4)
    show("silica shell up to 2 um", optimize(yig, objective=args.objective, search=shelled), args.top)


if __name__ == "__main__":
    main()
