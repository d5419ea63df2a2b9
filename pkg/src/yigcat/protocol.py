"""Release, split and recombine: the Stern-Gerlach style interferometer.

Both spin branches are point masses along the gradient axis driven by
``a(t) = +-g_L mu_B S_z schedule(t) / m``. The gradient is +G on [0, t0/4),
-G on [t0/4, 3t0/4), +G on [3t0/4, t0) and off afterwards, so the branches
separate, turn around, and meet again at rest at t0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import simpson

from .core import CONSTANTS
from .materials import ParticleSpec, mass_and_inertia

__all__ = [
    "ProtocolConfig",
    "ProtocolResult",
    "Trajectory",
    "IntegrationError",
    "gradient_schedule",
    "branch_acceleration",
    "separation_closed_form",
    "beta_g_closed_form",
    "rk4_forced",
    "run_protocol",
    "sample_fringe",
    "fringe_scan",
    "TRAJECTORY_COLUMNS",
]

STEPS_PER_T0 = 100_000
TRAJECTORY_COLUMNS = ("t_s", "z_up_m", "v_up_ms", "z_down_m", "v_down_ms")


class IntegrationError(RuntimeError):
    """The numerical integrator produced non-finite values."""


@dataclass(frozen=True)
class ProtocolConfig:
    particle: ParticleSpec
    S_z: float
    grad_B: float
    t0: float
    theta: float = 0.0
    g_L: float = 2.0
    p0: float = 0.0
    ramp_fraction: float = 0.0

    def __post_init__(self):
        if not self.t0 > 0:
            raise ValueError("t0 must be positive")
        if self.grad_B < 0:
            raise ValueError("grad_B must be non-negative")
        if not 0 <= self.theta <= math.pi / 2:
            raise ValueError("theta must lie in [0, pi/2]")
        if not 0 <= self.ramp_fraction < 0.2:
            raise ValueError("ramp_fraction must lie in [0, 0.2)")
        if self.S_z < 0:
            raise ValueError("S_z must be non-negative")

    @property
    def mass(self) -> float:
        return mass_and_inertia(self.particle)[0]

    @property
    def ramp_width(self) -> float:
        # each quarter-length segment spends ramp_fraction of itself ramping
        return self.ramp_fraction * self.t0 / 2.0


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    z_up: np.ndarray
    v_up: np.ndarray
    z_down: np.ndarray
    v_down: np.ndarray

    def rows(self):
        return zip(self.t, self.z_up, self.v_up, self.z_down, self.v_down)


@dataclass(frozen=True)
class ProtocolResult:
    trajectory: Trajectory
    delta_z_max: float
    t_at_max: float
    closure_error_pos: float
    closure_error_vel: float
    beta_g: float
    beta_g_path: float
    p_plus: float
    p_minus: float
    common_mode_fall: float
    method: str

    @property
    def beta_g_mod_2pi(self) -> float:
        return math.fmod(self.beta_g, 2.0 * math.pi)

    @property
    def trajectory_up(self):
        return self.trajectory.t, self.trajectory.z_up, self.trajectory.v_up

    @property
    def trajectory_down(self):
        return self.trajectory.t, self.trajectory.z_down, self.trajectory.v_down

    def summary(self) -> dict:
        return {
            "delta_z_max_m": self.delta_z_max,
            "t_at_max_s": self.t_at_max,
            "closure_error_pos_m": self.closure_error_pos,
            "closure_error_vel_ms": self.closure_error_vel,
            "beta_g_rad": self.beta_g,
            "beta_g_path_rad": self.beta_g_path,
            "beta_g_mod_2pi_rad": self.beta_g_mod_2pi,
            "p_plus": self.p_plus,
            "p_minus": self.p_minus,
            "common_mode_fall_m": self.common_mode_fall,
            "method": self.method,
        }


# ---------------------------------------------------------------------------
# Schedule and closed forms
# ---------------------------------------------------------------------------


def _switch_times(config: ProtocolConfig) -> tuple[float, float]:
    return config.t0 / 4.0, 3.0 * config.t0 / 4.0


def gradient_schedule(t, config: ProtocolConfig):
    """Signed gradient (T/m) at time(s) ``t``.

    With ``ramp_fraction > 0`` each polarity reversal becomes a half-cosine
    of width ``ramp_fraction * t0 / 2`` centred on the switching time. The
    ramp is odd about its centre, so every segment keeps its ideal impulse.
    Switch-on at 0 and switch-off at t0 stay sharp.
    """
    t_arr = np.asarray(t, dtype=float)
    t0, G = config.t0, config.grad_B
    t1, t3 = _switch_times(config)
    out = np.where(
        t_arr < 0,
        0.0,
        np.where(t_arr < t1, G, np.where(t_arr < t3, -G, np.where(t_arr < t0, G, 0.0))),
    )
    w = config.ramp_width
    if w > 0:
        for tc, sign in ((t1, 1.0), (t3, -1.0)):
            u = (t_arr - tc + w / 2.0) / w
            inside = (u >= 0) & (u < 1)
            # +G -> -G at t1, -G -> +G at t3
            out = np.where(inside, sign * G * np.cos(np.pi * u), out)
    return float(out) if np.ndim(t) == 0 else out


def branch_acceleration(config: ProtocolConfig, constants=CONSTANTS) -> float:
    """Magnitude of the spin-dependent acceleration at full gradient."""
    return config.g_L * constants.mu_B * config.S_z * config.grad_B / config.mass


def separation_closed_form(config: ProtocolConfig, constants=CONSTANTS) -> float:
    return (
        config.g_L * constants.mu_B * config.S_z * config.t0**2 * config.grad_B / (8.0 * config.mass)
    )


def beta_g_closed_form(config: ProtocolConfig, constants=CONSTANTS) -> float:
    return (
        constants.g_acc
        * config.t0**3
        * config.g_L
        * config.S_z
        * constants.mu_B
        * config.grad_B
        * math.cos(config.theta)
        / (16.0 * constants.hbar)
    )


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------


def _segment_grid(breakpoints, step: float) -> np.ndarray:
    """Time grid hitting every breakpoint, with steps no longer than ``step``."""
    pieces = []
    for a, b in zip(breakpoints, breakpoints[1:]):
        n = max(1, math.ceil((b - a) / step - 1e-9))
        pieces.append(np.linspace(a, b, n + 1)[:-1])
    pieces.append(np.array([breakpoints[-1]]))
    return np.concatenate(pieces)


def rk4_forced(accel, t: np.ndarray, z0: float, v0: float) -> tuple[np.ndarray, np.ndarray]:
    """Classical RK4 for z'' = accel(t) on the grid ``t``.

    The right-hand side does not depend on the state, so the four stages
    reduce to a(t_k), a(t_k + h/2) (twice) and a(t_k + h); the stepping is
    then a pair of cumulative sums. Results equal the textbook step loop.

    The last stage is taken as the left limit at t_{k+1}, so a step ending on
    a discontinuity of ``accel`` never sees the next segment's value.
    """
    h = np.diff(t)
    a0 = accel(t[:-1])
    a_mid = accel(t[:-1] + 0.5 * h)
    a1 = accel(np.nextafter(t[1:], -np.inf))
    dv = h / 6.0 * (a0 + 4.0 * a_mid + a1)
    v = np.concatenate([[v0], v0 + np.cumsum(dv)])
    dz = h * v[:-1] + h**2 / 6.0 * (a0 + 2.0 * a_mid)
    z = np.concatenate([[z0], z0 + np.cumsum(dz)])
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(v))):
        raise IntegrationError("non-finite state in RK4 integration")
    return z, v


def _analytic_branch(config: ProtocolConfig, sign: float, t: np.ndarray, a: float):
    """Piecewise-quadratic branch motion for the ideal (unramped) schedule."""
    t0 = config.t0
    v_drift = config.p0 / config.mass
    edges = [0.0, t0 / 4.0, 3.0 * t0 / 4.0, t0]
    accs = [sign * a, -sign * a, sign * a]
    # state at the start of each piece
    starts = [(0.0, v_drift)]
    for (lo, hi), acc in zip(zip(edges, edges[1:]), accs):
        z, v = starts[-1]
        tau = hi - lo
        starts.append((z + v * tau + 0.5 * acc * tau**2, v + acc * tau))

    z_out = np.empty_like(t)
    v_out = np.empty_like(t)
    piece = np.clip(np.searchsorted(edges, t, side="right") - 1, 0, 3)
    for k in range(4):
        mask = piece == k
        if not np.any(mask):
            continue
        acc = accs[k] if k < 3 else 0.0
        z_k, v_k = starts[k]
        tau = t[mask] - edges[k]
        z_out[mask] = z_k + v_k * tau + 0.5 * acc * tau**2
        v_out[mask] = v_k + acc * tau
    # exact integral of z over [0, t0]
    integral = 0.0
    for k in range(3):
        z_k, v_k = starts[k]
        tau = edges[k + 1] - edges[k]
        integral += z_k * tau + 0.5 * v_k * tau**2 + accs[k] * tau**3 / 6.0
    return z_out, v_out, integral, starts[3]


def run_protocol(
    config: ProtocolConfig,
    method: str = "auto",
    n_samples: int = 1001,
    steps: int = STEPS_PER_T0,
    constants=CONSTANTS,
) -> ProtocolResult:
    """Integrate both branches and collect separation, closure and phase.

    ``method`` is ``"analytic"`` (ideal schedule only), ``"numeric"``
    (segment-aligned RK4, step t0/steps) or ``"auto"`` (analytic when the
    schedule has no ramps).
    """
    if method == "auto":
        method = "analytic" if config.ramp_fraction == 0 else "numeric"
    if method == "analytic" and config.ramp_fraction != 0:
        raise ValueError("the analytic path only covers the unramped schedule")
    if method not in ("analytic", "numeric"):
        raise ValueError(f"unknown method {method!r}")

    m, t0 = config.mass, config.t0
    a = branch_acceleration(config, constants)
    v_drift = config.p0 / m
    phase_factor = m * constants.g_acc * math.cos(config.theta) / constants.hbar

    if method == "analytic":
        # t0/2 is where the separation peaks; keep it on the grid
        t = np.union1d(np.linspace(0.0, t0, n_samples), [t0 / 2.0])
        z_up, v_up, int_up, end_up = _analytic_branch(config, +1.0, t, a)
        z_dn, v_dn, int_dn, end_dn = _analytic_branch(config, -1.0, t, a)
        sep = np.abs(z_up - z_dn)
        i = int(np.argmax(sep))
        delta_z_max, t_at_max = float(sep[i]), float(t[i])
        drift_end = v_drift * t0
        closure_pos = max(abs(end_up[0] - drift_end), abs(end_dn[0] - drift_end))
        closure_vel = max(abs(end_up[1] - v_drift), abs(end_dn[1] - v_drift))
        beta_path = phase_factor * (int_up - int_dn)
        traj = Trajectory(t, z_up, v_up, z_dn, v_dn)
    else:
        t1, t3 = _switch_times(config)
        w = config.ramp_width
        if w > 0:
            breaks = [0.0, t1 - w / 2, t1 + w / 2, t3 - w / 2, t3 + w / 2, t0]
        else:
            breaks = [0.0, t1, t3, t0]
        grid = _segment_grid(breaks, t0 / steps)
        unit = a / config.grad_B if config.grad_B > 0 else 0.0

        def accel(tt):
            return unit * gradient_schedule(tt, config)

        z_up, v_up = rk4_forced(accel, grid, 0.0, v_drift)
        z_dn, v_dn = rk4_forced(lambda tt: -accel(tt), grid, 0.0, v_drift)
        sep = np.abs(z_up - z_dn)
        i = int(np.argmax(sep))
        delta_z_max, t_at_max = float(sep[i]), float(grid[i])
        drift_end = v_drift * t0
        closure_pos = max(abs(z_up[-1] - drift_end), abs(z_dn[-1] - drift_end))
        closure_vel = max(abs(v_up[-1] - v_drift), abs(v_dn[-1] - v_drift))
        # Simpson per smooth piece; the separation is quadratic between breaks when unramped
        integral = 0.0
        for lo, hi in zip(breaks, breaks[1:]):
            sel = (grid >= lo - 1e-18) & (grid <= hi + 1e-18)
            integral += simpson(z_up[sel] - z_dn[sel], x=grid[sel])
        beta_path = phase_factor * integral
        stride = max(1, (len(grid) - 1) // max(1, n_samples - 1))
        idx = np.unique(np.concatenate([np.arange(0, len(grid), stride), [len(grid) - 1]]))
        traj = Trajectory(grid[idx], z_up[idx], v_up[idx], z_dn[idx], v_dn[idx])

    beta = beta_g_closed_form(config, constants)
    p_plus = 0.5 * (1.0 + math.cos(beta))
    return ProtocolResult(
        trajectory=traj,
        delta_z_max=delta_z_max,
        t_at_max=t_at_max,
        closure_error_pos=float(closure_pos),
        closure_error_vel=float(closure_vel),
        beta_g=beta,
        beta_g_path=float(beta_path),
        p_plus=p_plus,
        p_minus=1.0 - p_plus,
        common_mode_fall=0.5 * constants.g_acc * t0**2,
        method=method,
    )


# ---------------------------------------------------------------------------
# Fringe statistics
# ---------------------------------------------------------------------------


def sample_fringe(p_plus: float, n_shots: int, seed: int) -> tuple[int, int]:
    """Binomial outcome counts for ``n_shots`` x-basis measurements.

    Uses a Philox counter-based generator keyed by ``seed``; no global state.
    """
    if not 0.0 <= p_plus <= 1.0:
        raise ValueError("p_plus must lie in [0, 1]")
    if n_shots < 0:
        raise ValueError("n_shots must be non-negative")
    rng = np.random.Generator(np.random.Philox(seed))
    plus = int(rng.binomial(n_shots, p_plus)) if n_shots else 0
    return plus, n_shots - plus


def fringe_scan(config: ProtocolConfig, vary: str, values) -> list[dict]:
    """Interference phase and p_plus while varying ``theta`` or ``t0``."""
    if vary not in ("theta", "t0"):
        raise ValueError("vary must be 'theta' or 't0'")
    values = list(values)
    if not values:
        raise ValueError("need at least one parameter value")
    rows = []
    for value in values:
        try:
            cfg = replace(config, **{vary: float(value)})
        except ValueError as exc:
            nan = math.nan
            rows.append(
                {"parameter": float(value), "beta_g_rad": nan, "beta_g_mod_2pi_rad": nan, "p_plus": nan, "error": str(exc)}
            )
            continue
        beta = beta_g_closed_form(cfg)
        rows.append(
            {
                "parameter": float(value),
                "beta_g_rad": beta,
                "beta_g_mod_2pi_rad": math.fmod(beta, 2.0 * math.pi),
                "p_plus": 0.5 * (1.0 + math.cos(beta)),
            }
        )
    return rows
