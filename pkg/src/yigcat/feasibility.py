"""Design-space search for a feasible superposition experiment.

A design is a particle (spin S, optional shell), a protocol time t0 and a
gradient. ``evaluate`` scores one design and checks it against spectral,
rotational and decoherence constraints; ``optimize`` runs a deterministic
two-stage grid over S, t0, gradient and (optionally) shell radius.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field, replace

from .core import CONSTANTS
from .decoherence import EnvironmentConfig, assemble_budget, gilbert_coherence_time, macroscopicity
from .materials import (
    MaterialParams,
    ParticleSpec,
    ShellMaterial,
    mass_and_inertia,
    radius_for_spin,
    total_spin,
)
from .protocol import ProtocolConfig, separation_closed_form
from .spinmodel import DoubleWellModel, barrier_gap, rotation_parameter, wkb_splitting

__all__ = [
    "DesignConstraints",
    "ConstraintCheck",
    "DesignCandidate",
    "SearchSpec",
    "OptimizeResult",
    "GravityCheck",
    "OBJECTIVES",
    "evaluate",
    "optimize",
    "rank_candidates",
    "gravity_test_check",
    "DESIGN_COLUMNS",
]

OBJECTIVES = ("delta_z", "macroscopicity")
DESIGN_COLUMNS = (
    "rank",
    "S",
    "R_m",
    "t0_s",
    "gradB_Tpm",
    "delta_z_m",
    "mu_m",
    "feasible",
    "binding_constraint",
    "R_out_m",
)


@dataclass(frozen=True)
class DesignConstraints:
    T_exp: float = 0.3
    min_dE_over_kT: float = 1.0
    min_dU_over_kT: float = 100.0
    max_rotation_alpha: float = 1e-2
    max_grad_B: float = 1e6
    max_t0: float = 1e-5
    visibility_fraction: float = 1e-2
    require_T_below_blocking: bool = True

    def __post_init__(self):
        for name in ("T_exp", "min_dE_over_kT", "min_dU_over_kT", "max_rotation_alpha", "max_t0", "visibility_fraction"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_grad_B < 0:
            raise ValueError("max_grad_B must be non-negative")


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    value: float
    bound: float
    sense: str  # "min": value >= bound, "max": value <= bound
    satisfied: bool

    @property
    def margin(self) -> float:
        """>= 1 when satisfied; the smallest margin marks the binding constraint."""
        if self.sense == "min":
            if self.bound == 0:
                return math.inf
            return self.value / self.bound
        if self.value == 0:
            return math.inf
        return self.bound / self.value


@dataclass(frozen=True)
class DesignCandidate:
    particle: ParticleSpec
    S: int
    t0: float
    grad_B: float
    objective: str = "delta_z"
    score: float | None = None
    constraint_report: tuple[ConstraintCheck, ...] = ()
    metrics: dict = field(default_factory=dict, compare=False)

    @property
    def feasible(self) -> bool:
        return bool(self.constraint_report) and all(c.satisfied for c in self.constraint_report)

    @property
    def binding_constraint(self) -> str | None:
        if not self.constraint_report:
            return None
        return min(self.constraint_report, key=lambda c: (c.margin, c.name)).name

    @property
    def key(self) -> tuple:
        return (self.S, self.t0, self.grad_B, self.particle.shell_outer_radius)

    def row(self, rank: int) -> tuple:
        return (
            rank,
            self.S,
            self.particle.core_radius,
            self.t0,
            self.grad_B,
            self.metrics.get("delta_z_m", math.nan),
            self.metrics.get("mu_m", math.nan),
            self.feasible,
            self.binding_constraint or "",
            self.particle.shell_outer_radius,
        )


def evaluate(
    candidate: DesignCandidate,
    constraints: DesignConstraints = DesignConstraints(),
    env: EnvironmentConfig = EnvironmentConfig(),
    constants=CONSTANTS,
) -> DesignCandidate:
    """Fill in metrics, constraint checks and the score of one design."""
    if candidate.objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    particle, S, t0 = candidate.particle, candidate.S, candidate.t0
    material = particle.core_material
    mass, inertia = mass_and_inertia(particle)
    kT = constants.k_B * constraints.T_exp

    metrics = {"mass_kg": mass, "R_out_m": particle.shell_outer_radius}
    checks = []
    try:
        model = DoubleWellModel.from_material(material, S, particle.core_volume, transverse_E=0.0)
        dU = barrier_gap(model, S)
        dE = wkb_splitting(model, constants)
        alpha = rotation_parameter(model, inertia, constants)
    except ValueError as exc:
        return replace(
            candidate,
            score=-math.inf,
            constraint_report=(ConstraintCheck("model_valid", 0.0, 1.0, "min", False),),
            metrics={**metrics, "error": str(exc)},
        )

    if t0 > 0:
        proto = ProtocolConfig(particle, S_z=S, grad_B=candidate.grad_B, t0=t0, g_L=material.g_L)
        delta_z = separation_closed_form(proto, constants)
        mu_m = macroscopicity(mass, t0, constants)
        budget = assemble_budget(
            env, particle, model, t0=t0, delta_z=delta_z,
            visibility_fraction=constraints.visibility_fraction, constants=constants,
        )
        n_significant = len(budget.significant) + (budget.overall == "indeterminate")
    else:
        delta_z, mu_m, n_significant = 0.0, -math.inf, 0

    gilbert_t0 = gilbert_coherence_time(material, env.bias_field)
    metrics.update(
        dU_joule=dU,
        dE_joule=dE,
        rotation_alpha=alpha,
        delta_z_m=delta_z,
        mu_m=mu_m,
        gilbert_t0_s=gilbert_t0,
        t0_exceeds_gilbert=bool(t0 > gilbert_t0),
    )

    checks.append(ConstraintCheck("dE_over_kT", dE / kT, constraints.min_dE_over_kT, "min", dE / kT >= constraints.min_dE_over_kT))
    checks.append(ConstraintCheck("dU_over_kT", dU / kT, constraints.min_dU_over_kT, "min", dU / kT >= constraints.min_dU_over_kT))
    checks.append(
        ConstraintCheck("rotation_alpha", alpha, constraints.max_rotation_alpha, "max", alpha <= constraints.max_rotation_alpha)
    )
    checks.append(ConstraintCheck("grad_B", candidate.grad_B, constraints.max_grad_B, "max", candidate.grad_B <= constraints.max_grad_B))
    checks.append(ConstraintCheck("t0", t0, constraints.max_t0, "max", t0 <= constraints.max_t0))
    checks.append(ConstraintCheck("decoherence", float(n_significant), 0.0, "max", n_significant == 0))
    if constraints.require_T_below_blocking:
        checks.append(
            ConstraintCheck("T_blocking", material.T_blocking, constraints.T_exp, "min", constraints.T_exp < material.T_blocking)
        )

    score = delta_z if candidate.objective == "delta_z" else mu_m
    return replace(candidate, score=score, constraint_report=tuple(checks), metrics=metrics)


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchSpec:
    S_range: tuple[int, int] = (10, 5000)
    t0_range: tuple[float, float] = (1e-7, 1e-5)
    grad_B_range: tuple[float, float] = (1e3, 1e6)
    shell: ShellMaterial | None = None
    shell_outer_range: tuple[float, float] | None = None
    counting: str = "anchored"
    stage2_steps: int = 10
    top: int = 50


@dataclass(frozen=True)
class OptimizeResult:
    ranked: tuple[DesignCandidate, ...]
    n_evaluated: int
    binding_histogram: dict
    max_score_any: float | None = None  # best score over all evaluated, feasible or not

    @property
    def best(self) -> DesignCandidate | None:
        return self.ranked[0] if self.ranked else None


def _decade_grid(lo: float, hi: float) -> list[float]:
    if lo <= 0:
        raise ValueError("search ranges must be positive")
    points, x = [], lo
    while x < hi * (1 - 1e-12):
        points.append(x)
        x *= 10.0
    points.append(hi)
    return points


def _refined_grid(center: float, lo: float, hi: float, steps: int) -> list[float]:
    points = {min(hi, max(lo, center * 1.25**j)) for j in range(-steps, steps + 1)}
    return sorted(points)


def _even_unique(values) -> list[int]:
    return sorted({max(2, 2 * int(round(v / 2.0))) for v in values})


def rank_candidates(candidates) -> list[DesignCandidate]:
    """Feasible candidates by descending score; ties go to smaller S, then smaller t0."""
    feasible = [c for c in candidates if c.feasible]
    return sorted(feasible, key=lambda c: (-c.score, c.S, c.t0, c.grad_B, c.particle.shell_outer_radius))


def optimize(
    material: MaterialParams,
    constraints: DesignConstraints = DesignConstraints(),
    env: EnvironmentConfig = EnvironmentConfig(),
    objective: str = "delta_z",
    search: SearchSpec = SearchSpec(),
) -> OptimizeResult:
    """Two-stage grid: decade spacing, then factor-1.25 spacing around the best point."""
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    with_shell = search.shell is not None and search.shell_outer_range is not None
    radius_cache: dict[int, float] = {}
    evaluated: dict[tuple, DesignCandidate] = {}

    def core_radius(S):
        if S not in radius_cache:
            radius_cache[S] = radius_for_spin(S, material, search.counting)
        return radius_cache[S]

    def run(S_values, t0_values, grad_values, shell_values):
        for S, t0, grad, r_out in itertools.product(S_values, t0_values, grad_values, shell_values):
            r_core = core_radius(S)
            if r_out is not None and r_out > r_core:
                particle = ParticleSpec(material, r_core, search.shell, r_out)
            else:
                particle = ParticleSpec(material, r_core)
            cand = DesignCandidate(particle, S, t0, grad, objective)
            if cand.key not in evaluated:
                evaluated[cand.key] = evaluate(cand, constraints, env)

    S_lo, S_hi = search.S_range
    t_lo, t_hi = search.t0_range
    g_lo, g_hi = search.grad_B_range
    g_hi = min(g_hi, constraints.max_grad_B) if constraints.max_grad_B > 0 else g_hi
    shell_stage1 = _decade_grid(*search.shell_outer_range) if with_shell else [None]

    # a zero gradient cap leaves a single admissible gradient
    no_gradient = constraints.max_grad_B == 0
    grad_stage1 = [0.0] if no_gradient else _decade_grid(g_lo, g_hi)

    run(_even_unique(_decade_grid(S_lo, S_hi)), _decade_grid(t_lo, t_hi), grad_stage1, shell_stage1)
    ranked = rank_candidates(evaluated.values())
    if ranked:
        best = ranked[0]
        n = search.stage2_steps
        run(
            _even_unique(_refined_grid(best.S, S_lo, S_hi, n)),
            _refined_grid(best.t0, t_lo, t_hi, n),
            [0.0] if no_gradient else _refined_grid(best.grad_B, g_lo, g_hi, n),
            _refined_grid(best.particle.shell_outer_radius, *search.shell_outer_range, n) if with_shell else [None],
        )
        ranked = rank_candidates(evaluated.values())

    histogram = Counter(c.binding_constraint for c in evaluated.values() if not c.feasible)
    max_score = max((c.score for c in evaluated.values()), default=None)
    return OptimizeResult(
        tuple(ranked[: search.top]), len(evaluated), dict(sorted(histogram.items())), max_score
    )


# ---------------------------------------------------------------------------
# Gravity-mediated entanglement precondition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GravityCheck:
    F_grav: float
    F_mag: float
    ratio: float
    d: float
    spins: tuple[int, int]
    masses: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "F_grav_N": self.F_grav,
            "F_mag_N": self.F_mag,
            "ratio": self.ratio,
            "d_m": self.d,
            "spins": list(self.spins),
            "masses_kg": list(self.masses),
        }


def gravity_test_check(
    spec1: ParticleSpec,
    spec2: ParticleSpec,
    d: float,
    spins: tuple[int, int] | None = None,
    counting: str = "anchored",
    constants=CONSTANTS,
) -> GravityCheck:
    """Newtonian attraction versus worst-case dipole force between two particles.

    The moments are g_L mu_B S of each core, S from ``total_spin`` unless
    given. ``ratio`` is ``inf`` when both moments vanish.
    """
    if not d > 0:
        raise ValueError("separation d must be positive")
    if spins is None:
        spins = (total_spin(spec1, counting), total_spin(spec2, counting))
    m1, m2 = mass_and_inertia(spec1)[0], mass_and_inertia(spec2)[0]
    mu1 = spec1.core_material.g_L * constants.mu_B * spins[0]
    mu2 = spec2.core_material.g_L * constants.mu_B * spins[1]
    F_grav = constants.G * m1 * m2 / d**2
    F_mag = 6.0 * constants.mu_0 * mu1 * mu2 / (4.0 * math.pi * d**4)
    ratio = math.inf if F_mag == 0 else F_grav / F_mag
    return GravityCheck(F_grav, F_mag, ratio, d, tuple(spins), (m1, m2))
