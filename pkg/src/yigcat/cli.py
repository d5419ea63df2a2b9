"""Command-line entry point: ``yigcat <command>``.

Exit codes: 0 ok, 1 infeasible design or failed budget, 2 bad input,
3 numerical failure. ``run`` executes every report section against one
config and writes all outputs plus a summary into the ``--out`` directory.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import SCHEMA_VERSION, __version__
from .config import ConfigError, RunConfig, format_config, load_config
from .core import CONSTANTS, DimensionError, parse_quantity
from .decoherence import ADLER, GRW, assemble_budget, gilbert_coherence_time, macroscopicity
from .feasibility import DESIGN_COLUMNS, evaluate, DesignCandidate, gravity_test_check, optimize
from .materials import default_database, total_spin
from .protocol import TRAJECTORY_COLUMNS, IntegrationError, fringe_scan, run_protocol, sample_fringe
from .report import dumps_json, write_csv, write_json
from .spinmodel import FIG2_COLUMNS, barrier_gap, rotation_parameter, sweep_fig2, wkb_splitting

__all__ = ["main", "run_all", "build_parser", "REFERENCE_ANCHORS", "SECTIONS", "EXIT_CODES"]

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
EXIT_CODES = {"ok": EXIT_OK, "fail": EXIT_FAIL, "input": EXIT_INPUT, "numeric": EXIT_NUMERIC}
SECTIONS = ("splitting", "protocol", "budget", "design", "gravity")
SCAN_COLUMNS = ("parameter", "beta_g_rad", "beta_g_mod_2pi_rad", "p_plus", "error")


@dataclass(frozen=True)
class Anchor:
    target: float
    low: float | None = None
    high: float | None = None

    def judge(self, value: float | None) -> str:
        if value is None:
            return "not_run"
        if self.low is None:
            return "reported"
        return "match" if self.low <= value <= self.high else "mismatch"


# headline numbers of the proposed experiment and the windows accepted as agreement
REFERENCE_ANCHORS = {
    "delta_z_m": Anchor(5e-6, 4e-6, 6e-6),
    "dU_kelvin": Anchor(50.0, 33.0, 100.0),
    "dE_ghz": Anchor(10.0, 3.0, 15.0),
    "dE_millikelvin": Anchor(500.0),
    "rotation_alpha": Anchor(5e-4, 2.5e-4, 1.5e-3),
    "mu_m": Anchor(16.0, 15.5, 16.5),
    "gas_rate_hz": Anchor(200.0, 140.0, 260.0),
}


def classify_error(exc: BaseException) -> int:
    if isinstance(exc, (IntegrationError, ArithmeticError, np.linalg.LinAlgError)):
        return EXIT_NUMERIC
    if isinstance(exc, (ConfigError, DimensionError, ValueError, KeyError, OSError)):
        return EXIT_INPUT
    return EXIT_NUMERIC


def _error_text(exc: BaseException) -> str:
    return str(exc.args[0]) if isinstance(exc, KeyError) and exc.args else str(exc)


# ---------------------------------------------------------------------------
# Report sections (pure: config in, payload out)
# ---------------------------------------------------------------------------


def splitting_point(config: RunConfig) -> dict:
    particle = config.particle()
    model = config.model()
    kT = CONSTANTS.k_B * config["constraints.T_exp"]
    dU = barrier_gap(model, model.S)
    dE = wkb_splitting(model)
    core = particle.bare_core()
    return {
        "S": model.S,
        "core_radius_m": particle.core_radius,
        "mass_kg": particle.mass,
        "inertia_kg_m2": particle.inertia,
        "anisotropy_D_joule": model.D,
        "dU_joule": dU,
        "dU_kelvin": dU / CONSTANTS.k_B,
        "dE_joule": dE,
        "dE_ghz": dE / CONSTANTS.h / 1e9,
        "dE_millikelvin": dE / CONSTANTS.k_B * 1e3,
        "dE_over_kT": dE / kT,
        "dU_over_kT": dU / kT,
        "rotation_alpha": rotation_parameter(model, particle.inertia),
        "spin_count": {
            "lattice": total_spin(core, "lattice"),
            "anchored": total_spin(core, "anchored"),
        },
    }


def fig2_rows(config: RunConfig):
    return sweep_fig2(config.material(), config.fig2_spins(), config["particle.spin_counting"])


def protocol_payload(config: RunConfig, result) -> dict:
    shots = config["run.n_shots"]
    plus, minus = sample_fringe(result.p_plus, shots, config.seed)
    proto = config.protocol()
    return {
        "inputs": {
            "S_z": proto.S_z,
            "grad_B_Tpm": proto.grad_B,
            "t0_s": proto.t0,
            "theta_rad": proto.theta,
            "p0_kgms": proto.p0,
            "ramp_fraction": proto.ramp_fraction,
            "mass_kg": proto.mass,
        },
        "result": result.summary(),
        "fringe_sample": {"seed": config.seed, "n_shots": shots, "plus": plus, "minus": minus},
    }


def run_config_protocol(config: RunConfig):
    return run_protocol(config.protocol(), method=config["protocol.method"], n_samples=config["protocol.n_samples"])


def budget_for(config: RunConfig, protocol_result, collapse: bool | None = None):
    include = config["decoherence.include_collapse"] if collapse is None else collapse
    return assemble_budget(
        config.environment(),
        config.particle(),
        config.model(),
        protocol_result,
        visibility_fraction=config["decoherence.visibility_fraction"],
        magnetic_margin=config["decoherence.magnetic_margin"],
        magnon_margin=config["decoherence.magnon_margin"],
        collapse=(GRW, ADLER) if include else (),
        csl_mode=config["decoherence.csl_mode"],
    )


def budget_payload(config: RunConfig, budget) -> dict:
    payload = budget.to_dict()
    t0 = budget.t0
    gilbert = gilbert_coherence_time(config.material(), config["environment.bias_field"])
    payload["gilbert_t0_s"] = gilbert
    payload["t0_exceeds_gilbert"] = bool(t0 > gilbert)
    payload["macroscopicity"] = macroscopicity(config.particle().mass, t0)
    return payload


def design_result(config: RunConfig, objective: str | None = None, material=None):
    return optimize(
        material or config.material(),
        config.constraints(),
        config.environment(),
        objective or config["design.objective"],
        config.search(),
    )


def configured_design(config: RunConfig) -> DesignCandidate:
    """The config's own particle and protocol, scored as a design."""
    cand = DesignCandidate(
        config.particle(), config.spin(), config["protocol.t0"], config["protocol.gradB"], config["design.objective"]
    )
    return evaluate(cand, config.constraints(), config.environment())


def gravity_payload(config: RunConfig, d: float | None = None) -> dict:
    spec = config.gravity_particle()
    S = config.spin()
    check = gravity_test_check(spec, spec, config["gravity.d"] if d is None else d, spins=(S, S))
    return {**check.to_dict(), "shell_outer_radius_m": spec.outer_radius, "core_radius_m": spec.core_radius}


# ---------------------------------------------------------------------------
# run_all
# ---------------------------------------------------------------------------


def _anchor_table(values: dict) -> dict:
    table = {}
    for name, anchor in REFERENCE_ANCHORS.items():
        value = values.get(name)
        table[name] = {
            "value": value,
            "reference": anchor.target,
            "window": None if anchor.low is None else [anchor.low, anchor.high],
            "status": anchor.judge(value),
        }
    return table


def run_all(config: RunConfig, out_dir: str | Path, sections=None, echo=None) -> tuple[dict, int]:
    """Run the selected report sections, writing each output under ``out_dir``.

    A failing section records its error and exit code without stopping the
    others; the returned code is the worst one.
    """
    sections = tuple(SECTIONS if not sections else sections)
    unknown = sorted(set(sections) - set(SECTIONS))
    if unknown:
        raise ValueError(f"unknown section(s) {', '.join(unknown)}; known: {', '.join(SECTIONS)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    status: dict[str, dict] = {}
    headline: dict[str, float] = {}
    cache: dict[str, object] = {}
    files: list[str] = []

    def protocol_result():
        if "protocol" not in cache:
            cache["protocol"] = run_config_protocol(config)
        return cache["protocol"]

    def section_splitting():
        point = splitting_point(config)
        rows = fig2_rows(config)
        files.append(write_csv(out / "fig2.csv", FIG2_COLUMNS, [r.as_row() for r in rows]).name)
        files.append(write_json(out / "splitting.json", point).name)
        headline.update({k: point[k] for k in ("dU_kelvin", "dE_ghz", "dE_millikelvin", "rotation_alpha")})
        headline["spin_count"] = point["spin_count"]
        failed = [r.S for r in rows if r.error]
        return (EXIT_NUMERIC if failed else EXIT_OK), {"fig2_failed_S": failed}

    def section_protocol():
        result = protocol_result()
        files.append(write_json(out / "protocol.json", protocol_payload(config, result)).name)
        files.append(write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, result.trajectory.rows()).name)
        headline["delta_z_m"] = result.delta_z_max
        headline["mu_m"] = macroscopicity(config.particle().mass, config["protocol.t0"])
        return EXIT_OK, {}

    def section_budget():
        budget = budget_for(config, protocol_result())
        files.append(write_json(out / "budget.json", budget_payload(config, budget)).name)
        headline["gas_rate_hz"] = budget.channel("gas").rate_hz
        return (EXIT_OK if budget.overall == "pass" else EXIT_FAIL), {"overall": budget.overall}

    def section_design():
        result = design_result(config)
        rows = [c.row(i + 1) for i, c in enumerate(result.ranked)]
        files.append(write_csv(out / "designs.csv", DESIGN_COLUMNS, rows).name)
        mine = configured_design(config)
        extra = {
            "n_evaluated": result.n_evaluated,
            "n_feasible_reported": len(result.ranked),
            "configured_design_feasible": mine.feasible,
            "configured_design_binding": mine.binding_constraint,
        }
        return (EXIT_OK if result.ranked else EXIT_FAIL), extra

    def section_gravity():
        payload = gravity_payload(config)
        files.append(write_json(out / "gravity.json", payload).name)
        return EXIT_OK, {"ratio": payload["ratio"]}

    runners = {
        "splitting": section_splitting,
        "protocol": section_protocol,
        "budget": section_budget,
        "design": section_design,
        "gravity": section_gravity,
    }
    for name in SECTIONS:
        if name not in sections:
            continue
        try:
            code, extra = runners[name]()
            status[name] = {"exit_code": code, **extra}
        except Exception as exc:  # isolate per section
            status[name] = {"exit_code": classify_error(exc), "error": _error_text(exc)}

    spin_count = headline.pop("spin_count", None)
    summary = {
        "sections": status,
        "anchors": _anchor_table(headline),
        "seed": config.seed,
        "versions": {"artifact": __version__, "material_db": config.database().version},
    }
    if spin_count is not None:
        summary["spin_count"] = {
            **spin_count,
            "configured_S": config.spin(),
            "counting_modes_disagree": spin_count["lattice"] != spin_count["anchored"],
        }
    (out / "config_echo.ini").write_text(
        f"# schema_version={SCHEMA_VERSION}\n" + (echo if echo is not None else format_config(config)),
        encoding="utf-8",
        newline="\n",
    )
    files.append("config_echo.ini")
    summary["files"] = sorted(files + ["summary.json"])
    write_json(out / "summary.json", summary)
    worst = max((s["exit_code"] for s in status.values()), default=EXIT_OK)
    return summary, worst


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="run configuration file")
    parser.add_argument("--out", default=default, help="output file (directory for 'run')")
    parser.add_argument("--seed", type=int, default=default, help="override run.seed")
    parser.add_argument(
        "--quiet", action="store_true", default=argparse.SUPPRESS if suppress else False, help="no stdout report"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="yigcat", description="Nanomagnet Stern-Gerlach feasibility calculator")
    parser.add_argument("--version", action="store_true", help="print artifact and material-database versions")
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command")

    def leaf(subparsers, name, **kw):
        p = subparsers.add_parser(name, **kw)
        _common(p, suppress=True)
        return p

    materials = sub.add_parser("materials", help="inspect the material database")
    msub = materials.add_subparsers(dest="action", required=True)
    leaf(msub, "list")
    show = leaf(msub, "show")
    show.add_argument("name")

    splitting = leaf(sub, "splitting", help="barrier and tunnel splitting; sweep written to --out as CSV")
    splitting.add_argument("--report", help="also write the single-point report as JSON")

    protocol = sub.add_parser("protocol", help="Stern-Gerlach interferometer")
    psub = protocol.add_subparsers(dest="action", required=True)
    prun = leaf(psub, "run")
    prun.add_argument("--method", choices=("auto", "analytic", "numeric"))
    prun.add_argument("--trajectory", help="write branch trajectories to this CSV")
    scan = leaf(psub, "scan")
    scan.add_argument("--vary", choices=("theta", "t0"), required=True)
    scan.add_argument("--from", dest="start", required=True, help="first value, unit optional (rad or s)")
    scan.add_argument("--to", dest="stop", required=True, help="last value, unit optional")
    scan.add_argument("--steps", type=int, required=True, help="number of values")

    budget = leaf(sub, "budget", help="decoherence budget")
    budget.add_argument("--collapse", action="store_true", help="include GRW and Adler collapse channels")

    design = sub.add_parser("design", help="design-space search")
    dsub = design.add_subparsers(dest="action", required=True)
    dopt = leaf(dsub, "optimize")
    dopt.add_argument("--material")
    dopt.add_argument("--objective", choices=("delta_z", "macroscopicity"))

    gravity = leaf(sub, "gravity-test", help="gravitational versus magnetic force between two particles")
    gravity.add_argument("--d", help="separation, unit optional (m)")

    run = leaf(sub, "run", help="every section plus a summary against reference values")
    run.add_argument("--section", action="append", choices=SECTIONS, help="restrict to a section (repeatable)")
    return parser


# ---------------------------------------------------------------------------
# Command handlers
# ---------------------------------------------------------------------------


def _emit(args, text: str) -> None:
    if not args.quiet:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _emit_json(args, payload: dict) -> None:
    if args.out:
        write_json(args.out, payload)
    else:
        sys.stdout.write(dumps_json(payload))


def _si(text: str, unit: str) -> float:
    return parse_quantity(text, unit).require(unit)


def cmd_materials(args, config: RunConfig) -> int:
    db = config.database()
    if args.action == "list":
        payload = {"database_version": db.version, "materials": db.material_names, "shells": db.shell_names}
    else:
        try:
            payload = {"kind": "material", **asdict(db.material(args.name))}
        except KeyError:
            payload = {"kind": "shell", **asdict(db.shell(args.name))}
    _emit_json(args, payload)
    return EXIT_OK


def cmd_splitting(args, config: RunConfig) -> int:
    point = splitting_point(config)
    rows = fig2_rows(config)
    if args.out:
        write_csv(args.out, FIG2_COLUMNS, [r.as_row() for r in rows])
    if args.report:
        write_json(args.report, point)
    _emit(
        args,
        f"S = {point['S']}  dU/kB = {point['dU_kelvin']:.4g} K  dE/h = {point['dE_ghz']:.4g} GHz  "
        f"dE/kB = {point['dE_millikelvin']:.4g} mK  alpha = {point['rotation_alpha']:.3g}",
    )
    return EXIT_NUMERIC if any(r.error for r in rows) else EXIT_OK


def cmd_protocol(args, config: RunConfig) -> int:
    if args.action == "run":
        if args.method:
            config = config.replace(protocol__method=args.method)
        result = run_config_protocol(config)
        payload = protocol_payload(config, result)
        if args.out:
            write_json(args.out, payload)
        if args.trajectory:
            write_csv(args.trajectory, TRAJECTORY_COLUMNS, result.trajectory.rows())
        _emit(
            args,
            f"delta_z = {result.delta_z_max:.6g} m at t = {result.t_at_max:.6g} s  "
            f"beta_g = {result.beta_g:.6g} rad  p_plus = {result.p_plus:.6g}",
        )
        return EXIT_OK
    if args.steps < 1:
        raise ValueError("--steps must be at least 1")
    unit = "rad" if args.vary == "theta" else "s"
    values = np.linspace(_si(args.start, unit), _si(args.stop, unit), args.steps)
    rows = fringe_scan(config.protocol(), args.vary, values)
    if args.out:
        write_csv(args.out, SCAN_COLUMNS, rows)
    bad = sum(1 for r in rows if "error" in r)
    _emit(args, f"{len(rows)} scan rows ({bad} rejected)")
    return EXIT_INPUT if bad == len(rows) else EXIT_OK


def cmd_budget(args, config: RunConfig) -> int:
    result = run_config_protocol(config)
    budget = budget_for(config, result, collapse=True if args.collapse else None)
    payload = budget_payload(config, budget)
    if args.out:
        write_json(args.out, payload)
    for ch in budget.channels:
        _emit(args, f"{ch.name:20s} rate = {ch.rate_hz:.4g} Hz  {ch.verdict}")
    _emit(args, f"overall: {budget.overall}")
    return EXIT_OK if budget.overall == "pass" else EXIT_FAIL


def cmd_design(args, config: RunConfig) -> int:
    material = config.database().material(args.material) if args.material else None
    result = design_result(config, args.objective, material)
    if args.out:
        write_csv(args.out, DESIGN_COLUMNS, [c.row(i + 1) for i, c in enumerate(result.ranked)])
    best = result.best
    if best is None:
        _emit(args, f"no feasible design among {result.n_evaluated} evaluated; binding: {result.binding_histogram}")
        return EXIT_FAIL
    _emit(
        args,
        f"best of {result.n_evaluated}: S = {best.S}  R = {best.particle.core_radius:.4g} m  "
        f"t0 = {best.t0:.4g} s  gradB = {best.grad_B:.4g} T/m  score = {best.score:.6g}",
    )
    return EXIT_OK


def cmd_gravity(args, config: RunConfig) -> int:
    d = _si(args.d, "m") if args.d else None
    payload = gravity_payload(config, d)
    if args.out:
        write_json(args.out, payload)
    _emit(args, f"F_grav / F_mag = {payload['ratio']:.4g} at d = {payload['d_m']:.4g} m")
    return EXIT_OK


def cmd_run(args, config: RunConfig) -> int:
    summary, code = run_all(config, args.out or "results", args.section)
    for name, anchor in summary["anchors"].items():
        value = anchor["value"]
        shown = "-" if value is None else f"{value:.4g}"
        _emit(args, f"{name:16s} {shown:>12s}  ref {anchor['reference']:.3g}  {anchor['status']}")
    for name, info in summary["sections"].items():
        if "error" in info:
            _emit(args, f"section {name} failed: {info['error']}")
    return code


HANDLERS = {
    "materials": cmd_materials,
    "splitting": cmd_splitting,
    "protocol": cmd_protocol,
    "budget": cmd_budget,
    "design": cmd_design,
    "gravity-test": cmd_gravity,
    "run": cmd_run,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.version:
        sys.stdout.write(f"yigcat {__version__} (material database {default_database().version})\n")
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_INPUT
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = config.replace(run__seed=args.seed)
        return HANDLERS[args.command](args, config)
    except Exception as exc:
        code = classify_error(exc)
        kind = "input error" if code == EXIT_INPUT else "numeric error"
        sys.stderr.write(f"yigcat: {kind}: {_error_text(exc)}\n")
        return code


if __name__ == "__main__":
    sys.exit(main())
