"""Giant-spin double-well model.

The particle's exchange-locked spins are treated as a single spin S in a
uniaxial well ``-D Sz^2``. Two routes to the ground-doublet splitting:

* ``wkb_splitting``: the closed-form tunnelling law ``hbar*omega0*exp(-S*ratio)``;
* ``ed_spectrum``: exact diagonalisation of the (2S+1)-dimensional
  Hamiltonian ``-D Sz^2 - E Sx^2 + g_L mu_B (B_long Sz + B_trans Sx)``.

The second one is an oracle for the *structure* of the first (exponential
decay in S, symmetric ground state, field dependence), not for its prefactor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import brentq

from .core import CONSTANTS
from .materials import GeometryError, MaterialParams, radius_for_spin

__all__ = [
    "DoubleWellModel",
    "Level",
    "WellSpectrum",
    "Fig2Row",
    "S_MAX_ED",
    "CALIBRATION_S",
    "spin_matrices",
    "hamiltonian",
    "barrier_gap",
    "wkb_splitting",
    "ed_spectrum",
    "calibrate_transverse",
    "rotation_parameter",
    "sweep_fig2",
    "FIG2_COLUMNS",
]

S_MAX_ED = 60
CALIBRATION_S = 20
PARITY_THRESHOLD = 0.5


@dataclass(frozen=True)
class DoubleWellModel:
    S: int
    D: float
    ratio: float
    omega0: float
    V_phys: float
    transverse_E: float = 0.0
    B_long: float = 0.0
    B_trans: float = 0.0
    g_L: float = 2.0

    def __post_init__(self):
        if int(self.S) != self.S:
            raise ValueError(f"S must be an integer (half-integer spins are not supported), got {self.S}")
        object.__setattr__(self, "S", int(self.S))
        if self.S < 0:
            raise ValueError("S must be non-negative")
        if not self.D > 0:
            raise ValueError("D must be positive: without a barrier there is no double well")
        if self.transverse_E < 0:
            raise ValueError("transverse_E must be non-negative")

    @classmethod
    def from_material(
        cls,
        material: MaterialParams,
        S: int,
        V_phys: float,
        *,
        transverse_E: float | None = None,
        B_long: float = 0.0,
        B_trans: float = 0.0,
    ) -> DoubleWellModel:
        """Model for a core of physical volume ``V_phys`` holding spin ``S``.

        D = K_x V / S^2 uses the full core volume, dead layers included.
        ``transverse_E`` defaults to the calibrated value for the material's
        anisotropy ratio (see ``calibrate_transverse``).
        """
        if S < 1:
            raise ValueError("S must be at least 1")
        D = material.K_x * V_phys / S**2
        if transverse_E is None:
            transverse_E = calibrate_transverse(material.anisotropy_ratio) * D
        return cls(
            S=S,
            D=D,
            ratio=material.anisotropy_ratio,
            omega0=material.omega0,
            V_phys=V_phys,
            transverse_E=transverse_E,
            B_long=B_long,
            B_trans=B_trans,
            g_L=material.g_L,
        )

    def with_fields(self, B_long: float | None = None, B_trans: float | None = None) -> DoubleWellModel:
        return replace(
            self,
            B_long=self.B_long if B_long is None else B_long,
            B_trans=self.B_trans if B_trans is None else B_trans,
        )

    @property
    def barrier(self) -> float:
        """Total barrier height D S^2 (= K_x V)."""
        return self.D * self.S**2


@dataclass(frozen=True)
class Level:
    n: int
    energy: float
    parity: str | None  # "symmetric", "antisymmetric", or None when mixed


@dataclass(frozen=True)
class WellSpectrum:
    levels: tuple[Level, ...]
    delta_E: float
    delta_U: float
    orthonormality_residual: float

    @property
    def energies(self) -> np.ndarray:
        return np.array([lvl.energy for lvl in self.levels])

    @property
    def ground(self) -> Level:
        return self.levels[0]


# ---------------------------------------------------------------------------
# Closed-form quantities
# ---------------------------------------------------------------------------


def barrier_gap(model: DoubleWellModel, m: int) -> float:
    """Energy between neighbouring levels m and m-1 of one isolated well, D(2m-1)."""
    if not 1 <= m <= model.S:
        raise ValueError(f"level index m must lie in [1, {model.S}], got {m}")
    return model.D * (2 * m - 1)


def wkb_splitting(model: DoubleWellModel, constants=CONSTANTS) -> float:
    if model.B_long != 0:
        raise ValueError("the tunnelling law only holds at zero longitudinal field")
    return constants.hbar * model.omega0 * math.exp(-model.S * model.ratio)


def rotation_parameter(model: DoubleWellModel, inertia: float, constants=CONSTANTS) -> float:
    """(hbar S)^2 / (Delta_E I): rotational energy cost relative to the splitting.

    Returns ``math.inf`` when the splitting vanishes.
    """
    if not inertia > 0:
        raise ValueError("inertia must be positive")
    delta_E = wkb_splitting(model, constants)
    if delta_E == 0:
        return math.inf
    return (constants.hbar * model.S) ** 2 / (delta_E * inertia)


# ---------------------------------------------------------------------------
# Exact diagonalisation
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def spin_matrices(S: int) -> tuple[np.ndarray, np.ndarray]:
    """Sz and Sx in the basis |S>, |S-1>, ..., |-S>."""
    m = np.arange(S, -S - 1, -1, dtype=float)
    sz = np.diag(m)
    # <m+1|S+|m> = sqrt(S(S+1) - m(m+1))
    lower = m[1:]
    s_plus = np.diag(np.sqrt(S * (S + 1) - lower * (lower + 1)), 1)
    sx = 0.5 * (s_plus + s_plus.T)
    sz.setflags(write=False)
    sx.setflags(write=False)
    return sz, sx


def hamiltonian(model: DoubleWellModel, scale: float | None = None, constants=CONSTANTS) -> np.ndarray:
    """Dense Hamiltonian, divided by ``scale`` (defaults to D)."""
    scale = model.D if scale is None else scale
    sz, sx = spin_matrices(model.S)
    zeeman = model.g_L * constants.mu_B
    H = (
        -model.D * (sz @ sz)
        - model.transverse_E * (sx @ sx)
        + zeeman * (model.B_long * sz + model.B_trans * sx)
    ) / scale
    if not np.array_equal(H, H.T):
        raise AssertionError("Hamiltonian assembly produced a non-symmetric matrix")
    return H


def _parity_bases(S: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases of the even/odd subspaces under m -> -m."""
    dim = 2 * S + 1
    sym = np.zeros((dim, S + 1))
    anti = np.zeros((dim, S))
    sym[S, 0] = 1.0  # |0>
    r = 1.0 / math.sqrt(2.0)
    for k in range(S):
        # index of |m> is S - m; m = S - k, partner -m at index 2S - k
        sym[k, k + 1] = r
        sym[2 * S - k, k + 1] = r
        anti[k, k] = r
        anti[2 * S - k, k] = -r
    return sym, anti


def _reflection(S: int) -> np.ndarray:
    return np.fliplr(np.eye(2 * S + 1))


def ed_spectrum(model: DoubleWellModel, s_max: int = S_MAX_ED, constants=CONSTANTS) -> WellSpectrum:
    """Full spectrum of the giant-spin Hamiltonian with parity labels.

    At zero longitudinal field the Hamiltonian commutes with m -> -m, so the
    two parity sectors are diagonalised separately and labels are exact.
    Otherwise the full matrix is solved and a level is labelled by the sign
    of its reflection overlap when that exceeds 0.5 in magnitude.
    """
    if model.S > s_max:
        raise ValueError(
            f"S = {model.S} exceeds the exact-diagonalisation cap {s_max}; use wkb_splitting instead"
        )
    if model.S < 1:
        raise ValueError("S must be at least 1 for a double well")
    H = hamiltonian(model, constants=constants)
    S = model.S

    if model.B_long == 0:
        sym, anti = _parity_bases(S)
        e_sym, v_sym = eigh(sym.T @ H @ sym)
        e_anti, v_anti = eigh(anti.T @ H @ anti)
        energies = np.concatenate([e_sym, e_anti])
        vectors = np.hstack([sym @ v_sym, anti @ v_anti])
        labels = ["symmetric"] * len(e_sym) + ["antisymmetric"] * len(e_anti)
        order = np.argsort(energies, kind="stable")
        energies, vectors = energies[order], vectors[:, order]
        labels = [labels[i] for i in order]
    else:
        energies, vectors = eigh(H)
        overlaps = np.einsum("ij,ij->j", vectors, _reflection(S) @ vectors)
        labels = [
            "symmetric" if o > PARITY_THRESHOLD else "antisymmetric" if o < -PARITY_THRESHOLD else None
            for o in overlaps
        ]

    residual = float(np.max(np.abs(vectors.T @ vectors - np.eye(len(energies)))))
    energies = energies * model.D
    levels = tuple(Level(n, float(e), p) for n, (e, p) in enumerate(zip(energies, labels)))
    delta_E = float(energies[1] - energies[0])
    ground_mean = 0.5 * (energies[0] + energies[1])
    excited = energies[2:4]
    delta_U = float(np.mean(excited) - ground_mean) if len(excited) else math.nan
    return WellSpectrum(levels, delta_E, delta_U, residual)


def _ed_splitting_reduced(S: int, e_over_d: float) -> float:
    model = DoubleWellModel(S=S, D=1.0, ratio=0.5, omega0=1.0, V_phys=1.0, transverse_E=e_over_d)
    return ed_spectrum(model, s_max=max(S, S_MAX_ED)).delta_E


def ed_decay_constant(e_over_d: float, S: int = CALIBRATION_S) -> float:
    """-d ln(Delta_E)/dS at fixed E/D, by a centred difference over S +- 1."""
    upper = _ed_splitting_reduced(S + 1, e_over_d)
    lower = _ed_splitting_reduced(S - 1, e_over_d)
    return -0.5 * (math.log(upper) - math.log(lower))


@lru_cache(maxsize=32)
def calibrate_transverse(ratio: float, S: int = CALIBRATION_S) -> float:
    """E/D for which the exact spectrum decays as exp(-ratio*S) around S.

    The decay constant falls monotonically to zero as E/D -> 1 (the barrier
    between the easy and medium axes closes); the bracket starts at 0.9,
    below which float64 can no longer resolve the splitting near S = 20.
    """
    lo, hi = 0.9, 1.0 - 1e-9
    k_lo = ed_decay_constant(lo, S)
    if not 0 < ratio < k_lo:
        raise ValueError(f"cannot calibrate a decay constant of {ratio}; reachable range is (0, {k_lo:.3f})")
    return brentq(lambda e: ed_decay_constant(e, S) - ratio, lo, hi, xtol=1e-14, rtol=1e-12)


# ---------------------------------------------------------------------------
# Barrier and splitting sweep over S
# ---------------------------------------------------------------------------

FIG2_COLUMNS = ("S", "dU_joule", "dU_kelvin", "dE_joule", "dE_ghz", "radius_m")


@dataclass(frozen=True)
class Fig2Row:
    S: int
    dU_joule: float
    dU_kelvin: float
    dE_joule: float
    dE_ghz: float
    radius_m: float
    error: str | None = None

    def as_row(self) -> tuple:
        return tuple(getattr(self, c) for c in FIG2_COLUMNS)


def sweep_fig2(
    material: MaterialParams, S_values, counting: str = "anchored", constants=CONSTANTS
) -> list[Fig2Row]:
    """Barrier gap and tunnel splitting versus S.

    For each S the core radius is found by inverting the spin count, and the
    anisotropy energy uses that radius's full volume. Rows whose geometry
    fails are kept, flagged, and filled with NaN.
    """
    S_values = [int(s) for s in S_values]
    if any(b <= a for a, b in zip(S_values, S_values[1:])):
        raise ValueError("S values must be strictly ascending")
    rows = []
    for S in S_values:
        try:
            radius = radius_for_spin(S, material, counting)
            volume = 4.0 / 3.0 * math.pi * radius**3
            # the sweep only needs closed forms, skip the ED calibration
            model = DoubleWellModel.from_material(material, S, volume, transverse_E=0.0)
            dU = barrier_gap(model, S)
            dE = wkb_splitting(model, constants)
        except (GeometryError, ValueError) as exc:
            nan = math.nan
            rows.append(Fig2Row(S, nan, nan, nan, nan, nan, error=str(exc)))
            continue
        rows.append(Fig2Row(S, dU, dU / constants.k_B, dE, dE / constants.h / 1e9, radius))
    return rows
