"""Three-oscillator waveguide polariton model (TE photon + HH and LH excitons).

Branch energies are the eigenvalues of

    | E_TE(beta)   Omega_hh/2   Omega_lh/2 |
    | Omega_hh/2   E_hh         0          |
    | Omega_lh/2   0            E_lh       |

so a resonant two-level crossing is split by exactly Omega. Hopfield
weights are the squared eigenvector components.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import CONSTANTS, HBAR, nm_to_mev
from .errors import DomainError

BRANCHES = ("LP", "MP", "UP")
DEGENERACY_TOL = 1e-9  # meV
DEFAULT_N_EFF = 3.6


@dataclass(frozen=True)
class CouplingParams:
    E_hh: float  # meV
    E_lh: float  # meV
    Omega_hh: float  # meV
    Omega_lh: float  # meV
    n_eff: float = DEFAULT_N_EFF
    voltage_tag: float = 0.0

    def __post_init__(self):
        if self.Omega_hh < 0 or self.Omega_lh < 0:
            raise DomainError("Rabi splittings must be non-negative")
        if not self.n_eff > 0:
            raise DomainError("n_eff must be > 0")

    @classmethod
    def from_wavelengths(cls, hh_nm, lh_nm, omega_hh, omega_lh, n_eff=DEFAULT_N_EFF, voltage=0.0):
        return cls(nm_to_mev(hh_nm), nm_to_mev(lh_nm), omega_hh, omega_lh, n_eff, voltage)

    def photon_energy(self, beta):
        return CONSTANTS.hbar_c * np.asarray(beta) / self.n_eff

    @property
    def photon_velocity(self):
        return CONSTANTS.c / self.n_eff


def params_for_voltage(voltage, n_eff=DEFAULT_N_EFF):
    """Exciton and coupling parameters fitted to the measured reflection maps.

    Only the two measured operating voltages (0 V and 2.5 V) are tabulated.
    """
    table = {
        0.0: (812.0, 809.3, 6.4, 4.5),
        2.5: (817.8, 811.7, 5.4, 3.7),
    }
    key = float(voltage)
    if key not in table:
        raise DomainError(f"no coupling parameters tabulated for {voltage} V (have 0 and 2.5)")
    return CouplingParams.from_wavelengths(*table[key], n_eff=n_eff, voltage=key)


@dataclass(frozen=True)
class PolaritonBranch:
    branch_id: str
    beta: np.ndarray = field(repr=False)  # 1/um
    energy: np.ndarray = field(repr=False)  # meV
    chi_te2: np.ndarray = field(repr=False)
    chi_hh2: np.ndarray = field(repr=False)
    chi_lh2: np.ndarray = field(repr=False)
    v_g: np.ndarray = field(repr=False)  # um/ps
    flagged: np.ndarray = field(repr=False)  # near-degenerate samples

    @property
    def exciton_fraction(self):
        return self.chi_hh2 + self.chi_lh2

    def rows(self):
        return zip(self.beta, self.energy, self.chi_te2, self.chi_hh2, self.chi_lh2, self.v_g)


def coupling_matrices(params: CouplingParams, beta):
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    m = np.zeros((len(beta), 3, 3))
    m[:, 0, 0] = params.photon_energy(beta)
    m[:, 1, 1] = params.E_hh
    m[:, 2, 2] = params.E_lh
    m[:, 0, 1] = m[:, 1, 0] = params.Omega_hh / 2
    m[:, 0, 2] = m[:, 2, 0] = params.Omega_lh / 2
    return m


def diagonalize(params: CouplingParams, beta):
    """Eigenvalues (n, 3) ascending and eigenvectors (n, 3, 3) per wave vector."""
    return np.linalg.eigh(coupling_matrices(params, beta))


def dispersion(params: CouplingParams, beta_grid):
    """LP, MP and UP branches sampled on an ascending beta grid (1/um)."""
    beta = np.asarray(beta_grid, dtype=float)
    if beta.ndim != 1 or len(beta) < 2:
        raise DomainError("beta_grid must be a 1D sequence of at least two points")
    if np.any(beta <= 0) or np.any(np.diff(beta) <= 0):
        raise DomainError("beta_grid must be positive and strictly ascending")
    energies, vectors = diagonalize(params, beta)
    gaps = np.diff(energies, axis=1)
    near = np.zeros_like(energies, dtype=bool)
    near[:, :-1] |= gaps < DEGENERACY_TOL
    near[:, 1:] |= gaps < DEGENERACY_TOL
    out = []
    for i, name in enumerate(BRANCHES):
        weights = vectors[:, :, i] ** 2
        e = energies[:, i]
        v_g = np.gradient(e, beta) / HBAR
        out.append(PolaritonBranch(name, beta, e, weights[:, 0], weights[:, 1], weights[:, 2],
                                   v_g, near[:, i]))
    return tuple(out)


def hellmann_feynman_velocity(params: CouplingParams, beta, branch=0):
    """Exact group velocity c/n_eff * |chi_TE|^2 (photon is the only beta-dependent term)."""
    _, vectors = diagonalize(params, beta)
    return params.photon_velocity * vectors[:, 0, branch] ** 2


@dataclass(frozen=True)
class VelocityFit:
    exciton_fraction: np.ndarray = field(repr=False)
    v_g: np.ndarray = field(repr=False)
    v_p: float  # um/ps, fitted photon velocity
    r_squared: float

    @property
    def pairs(self):
        return list(zip(self.exciton_fraction, self.v_g))


def group_velocity_vs_fraction(branch: PolaritonBranch, window=(0.0, 1.0)):
    """Group velocity against exciton fraction with a fit v_g = v_p (1 - X).

    Only samples whose exciton fraction lies inside ``window`` enter the fit
    and the returned pairs.
    """
    if len(branch.beta) < 3:
        raise DomainError("need at least three samples")
    x = branch.exciton_fraction
    sel = (x >= window[0]) & (x <= window[1])
    if sel.sum() < 3:
        raise DomainError("fewer than three samples inside the exciton-fraction window")
    order = np.argsort(x[sel])
    x, v = x[sel][order], branch.v_g[sel][order]
    photon = 1 - x
    v_p = float(np.dot(photon, v) / np.dot(photon, photon))
    ss_res = float(np.sum((v - v_p * photon) ** 2))
    ss_tot = float(np.sum((v - v.mean()) ** 2))
    r2 = 1 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return VelocityFit(x, v, v_p, r2)


def lp_exciton_fraction(params: CouplingParams, beta):
    _, vectors = diagonalize(params, beta)
    return 1 - vectors[:, 0, 0] ** 2


def beta_at_fraction(params: CouplingParams, fraction, bracket=(1.0, 200.0)):
    """Wave vector where the LP exciton fraction equals ``fraction``.

    The LP exciton fraction grows monotonically with beta, so a single root
    exists in any bracket spanning the anticrossing.
    """
    if not 0 < fraction < 1:
        raise DomainError("fraction must lie in (0, 1)")
    f = lambda b: lp_exciton_fraction(params, b)[0] - fraction
    lo, hi = bracket
    if f(lo) * f(hi) > 0:
        raise DomainError(f"exciton fraction {fraction} not reached for beta in {bracket}")
    return brentq(f, lo, hi, xtol=1e-12)


def velocity_at_fraction(params: CouplingParams, fraction):
    """LP group velocity (um/ps) and wave vector at a given exciton fraction."""
    beta = beta_at_fraction(params, fraction)
    return float(hellmann_feynman_velocity(params, beta)[0]), beta


def velocity_from_delays(delays, channel_length, v_ref):
    """Group velocities from arrival delays relative to a reference point.

    ``delays`` holds ``(voltage, dt)`` pairs; ``dt`` is the extra transit
    time (ps) across ``channel_length`` compared with the reference whose
    velocity is ``v_ref``: 1/v = dt/x + 1/v_ref.
    """
    if not channel_length > 0 or not v_ref > 0:
        raise DomainError("channel_length and v_ref must be > 0")
    out = []
    for _, dt in delays:
        inv = dt / channel_length + 1.0 / v_ref
        if not inv > 0:
            raise DomainError(f"delay {dt} ps implies a non-positive velocity")
        out.append(1.0 / inv)
    return out


def delay_from_velocity(velocities, channel_length, v_ref):
    """Arrival delays (ps) relative to the reference: dt = x (1/v - 1/v_ref)."""
    if not channel_length > 0 or not v_ref > 0:
        raise DomainError("channel_length and v_ref must be > 0")
    if any(not v > 0 for v in velocities):
        raise DomainError("velocities must be > 0")
    return [channel_length * (1.0 / v - 1.0 / v_ref) for v in velocities]
