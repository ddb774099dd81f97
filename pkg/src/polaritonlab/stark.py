"""Quantum-confined Stark effect of a single GaAs quantum well.

Electron and heavy-hole ground states come from a three-point finite
difference discretization of the 1D effective-mass Schroedinger equation
with hard walls at the grid ends. Eigenpairs of the symmetric tridiagonal
matrix are found by LAPACK bisection + inverse iteration. Exciton binding
is ignored: the Stark shift is the sum of the two single-particle shifts.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .core import CONSTANTS, DeviceConfig
from .errors import DomainError, NumericalError

GAP_OFFSET_PER_X = 1360.0  # meV per unit Al fraction
CONDUCTION_SHARE = 0.65
DEFAULT_STEP = 0.05e-3  # um (0.05 nm)
DEFAULT_BARRIER = 0.040  # um on each side of the well
FIELD_LIMIT = 10.0  # V/um


@dataclass(frozen=True)
class QwPotential:
    grid_z: np.ndarray = field(repr=False)  # um, uniform
    potential_e: np.ndarray = field(repr=False)  # meV
    potential_h: np.ndarray = field(repr=False)  # meV
    mass_e: float = 0.067
    mass_h: float = 0.35
    field_F: float = 0.0  # V/um
    well_center: float = 0.0
    well_width: float = 0.0

    @property
    def step(self):
        return self.grid_z[1] - self.grid_z[0]


def band_offsets(al_fraction):
    """(conduction, valence) barrier heights in meV for Al_xGa_(1-x)As on GaAs."""
    total = GAP_OFFSET_PER_X * al_fraction
    return CONDUCTION_SHARE * total, (1 - CONDUCTION_SHARE) * total


def well_potential(width, field_F=0.0, al_fraction=0.4, barrier=DEFAULT_BARRIER,
                   step=DEFAULT_STEP, mass_e=0.067, mass_h=0.35):
    """Square well of ``width`` um centred at z = 0 with a uniform field.

    The field pushes electrons to -z and holes to +z, so the dipole
    length <z>_h - <z>_e is non-negative for F >= 0.
    """
    if not width > 0 or not step > 0:
        raise DomainError("well width and grid step must be > 0")
    if barrier < 2 * width:
        raise DomainError("barriers must extend at least twice the well width on each side")
    half = width / 2 + barrier
    n = int(round(2 * half / step)) + 1
    z = np.linspace(-half, half, n)
    v_c, v_v = band_offsets(al_fraction)
    # cell-averaged well indicator keeps the discretization error O(h^2) at the interfaces
    lo = np.clip(z - step / 2, -width / 2, width / 2)
    hi = np.clip(z + step / 2, -width / 2, width / 2)
    inside = (hi - lo) / step
    tilt = 1e3 * field_F * z  # meV
    pot_e = (1 - inside) * v_c + tilt
    pot_h = (1 - inside) * v_v - tilt
    return QwPotential(z, pot_e, pot_h, mass_e, mass_h, field_F, 0.0, width)


def solve_on_grid(z, potential, mass, n_states=1):
    """Lowest ``n_states`` eigenpairs of -(hbar^2/2m) d2/dz2 + V on a uniform grid.

    Wavefunctions are the columns of the returned array, normalized so that
    sum |psi|^2 h = 1.
    """
    h = z[1] - z[0]
    t = CONSTANTS.hbar2_over_2m0 / mass / h ** 2
    diag = 2 * t + np.asarray(potential, dtype=float)
    off = np.full(len(z) - 1, -t)
    try:
        w, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, n_states - 1))
    except LinAlgError as exc:
        raise NumericalError("tridiagonal eigen-solve did not converge",
                             {"points": len(z), "step_um": h}) from exc
    v = v / np.sqrt(np.sum(v ** 2, axis=0) * h)
    flip = v[np.argmax(np.abs(v), axis=0), np.arange(v.shape[1])] < 0
    v[:, flip] *= -1
    return w, v


def solve_ground_state(pot: QwPotential, species="electron"):
    """Ground-state energy (meV) and normalized wavefunction for one carrier."""
    z, v_of_z, mass = _species(pot, species)
    w, v = solve_on_grid(z, v_of_z, mass)
    return float(w[0]), v[:, 0]


def solve_confined_state(pot: QwPotential, species="electron", search=24):
    """Lowest state with most of its probability inside the well.

    Under strong fields the hard wall at the end of the barrier hosts
    triangular-well states below the quasi-bound well state; those are
    skipped.
    """
    z, v_of_z, mass = _species(pot, species)
    w, v = solve_on_grid(z, v_of_z, mass, n_states=search)
    inside = np.abs(z - pot.well_center) <= pot.well_width / 2
    weight = np.sum(v[inside] ** 2, axis=0) * pot.step
    hits = np.nonzero(weight > 0.5)[0]
    if len(hits) == 0:
        raise NumericalError("no well-confined state among the lowest eigenpairs",
                             {"species": species, "field_V_per_um": pot.field_F, "searched": search})
    k = hits[0]
    return float(w[k]), v[:, k]


def _species(pot, species):
    if species == "electron":
        return pot.grid_z, pot.potential_e, pot.mass_e
    if species in ("heavy_hole", "hole"):
        return pot.grid_z, pot.potential_h, pot.mass_h
    raise DomainError(f"unknown species {species!r}")


def mean_position(z, psi):
    h = z[1] - z[0]
    return float(np.sum(z * psi ** 2) * h)


@dataclass(frozen=True)
class StarkResult:
    field_F: float  # V/um
    shift_deltaE: float  # meV, negative = red shift
    dipole_length_d: float  # nm
    wavefunction_overlap: float
    voltage: float = float("nan")


ENERGY_TOL = 1e-3  # meV change allowed when the grid step is halved
MAX_REFINE = 4


def _pair(width, F, al_fraction, barrier, step, mass_e, mass_h, refine=True):
    """Electron + hole energy, dipole length (um) and overlap at one field.

    With ``refine`` the grid step is halved until each carrier energy moves
    by less than ENERGY_TOL.
    """
    def solve(h):
        pot = well_potential(width, F, al_fraction, barrier, h, mass_e, mass_h)
        return pot, solve_confined_state(pot, "electron"), solve_confined_state(pot, "heavy_hole")

    pot, (e_e, psi_e), (e_h, psi_h) = solve(step)
    if refine:
        for _ in range(MAX_REFINE):
            step /= 2
            pot2, (e_e2, psi_e2), (e_h2, psi_h2) = solve(step)
            converged = abs(e_e2 - e_e) < ENERGY_TOL and abs(e_h2 - e_h) < ENERGY_TOL
            pot, e_e, psi_e, e_h, psi_h = pot2, e_e2, psi_e2, e_h2, psi_h2
            if converged:
                break
        else:
            raise NumericalError("grid refinement did not converge",
                                 {"field_V_per_um": F, "final_step_um": step})
    z = pot.grid_z
    d = mean_position(z, psi_h) - mean_position(z, psi_e)
    overlap = float(np.sum(psi_e * psi_h) * pot.step) ** 2
    return e_e + e_h, d, overlap


def stark_scan(cfg: DeviceConfig, fields, step=DEFAULT_STEP, barrier=DEFAULT_BARRIER):
    """Stark shift and induced electron-hole separation for each field (V/um)."""
    fields = [float(f) for f in fields]
    for f in fields:
        if not 0 <= f <= FIELD_LIMIT:
            raise DomainError(f"field {f} V/um outside [0, {FIELD_LIMIT}]")
    rest = (cfg.barrier_al_fraction, barrier, step, cfg.mass_e, cfg.mass_hh)
    e0, _, _ = _pair(cfg.qw_thickness, 0.0, *rest)
    out = []
    for f in fields:
        e, d, ov = _pair(cfg.qw_thickness, f, *rest)
        out.append(StarkResult(f, e - e0, d * 1e3, ov, f * cfg.structure_thickness))
    return out


def check_convergence(cfg: DeviceConfig, field_F, step=DEFAULT_STEP, barrier=DEFAULT_BARRIER):
    """Pair-energy change (meV) and relative dipole change when the fixed step is halved."""
    args = (cfg.qw_thickness, field_F, cfg.barrier_al_fraction, barrier)
    base = _pair(*args, step, cfg.mass_e, cfg.mass_hh, refine=False)
    fine = _pair(*args, step / 2, cfg.mass_e, cfg.mass_hh, refine=False)
    diff = abs(fine[1] - base[1])
    d_rel = diff / abs(fine[1]) if abs(fine[1]) > 1e-9 else diff
    return abs(fine[0] - base[0]), d_rel
