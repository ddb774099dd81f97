"""Detuning sweeps, blockade-dip search and the kappa/b calibration fit."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from ..errors import DomainError, NumericalError
from .model import BlockadeParams, gaussian_pulse, simulate_g2

DIP_SEARCH = (0.5, 4.0)  # |delta| / gamma bracket for the blockade dip
DIP_XTOL = 2e-3  # in units of gamma


def g2_at(params: BlockadeParams):
    return simulate_g2(params)[0]


def _map(fn, items, jobs):
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


@dataclass
class SweepCurve:
    deltas: np.ndarray  # meV, E_L - E_1P
    g2: np.ndarray
    stderr: np.ndarray

    @property
    def argmin(self):
        return int(np.argmin(self.g2))

    @property
    def argmax(self):
        return int(np.argmax(self.g2))

    @property
    def g2_min(self):
        return float(self.g2[self.argmin])

    @property
    def g2_max(self):
        return float(self.g2[self.argmax])

    @property
    def delta_at_min(self):
        return float(self.deltas[self.argmin])

    @property
    def delta_at_max(self):
        return float(self.deltas[self.argmax])

    def rows(self):
        return list(zip(self.deltas.tolist(), self.g2.tolist(), self.stderr.tolist()))


def detuning_sweep(base: BlockadeParams, deltas, jobs=1):
    """Pulse-integrated g2 at each detuning (results in input order)."""
    deltas = np.asarray(deltas, dtype=float)
    if np.any(np.diff(deltas) < 0):
        raise DomainError("deltas must be sorted ascending")
    g2 = np.array(_map(g2_at, [base.with_detuning(d) for d in deltas], jobs))
    # simulated values carry no sampling error
    return SweepCurve(deltas, g2, np.zeros_like(g2))


def find_dip(base: BlockadeParams, bracket=DIP_SEARCH, xtol=DIP_XTOL):
    """Minimum of g2 over detuning on the blockade side (delta < 0 for U > 0).

    Returns ``(delta_min, g2_min)``.
    """
    gamma = base.gamma_p
    side = -1.0 if base.U_dd >= 0 else 1.0
    lo, hi = sorted((side * bracket[0] * gamma, side * bracket[1] * gamma))
    res = minimize_scalar(lambda d: g2_at(base.with_detuning(d)), bounds=(lo, hi),
                          method="bounded", options={"xatol": xtol * gamma})
    if not res.success:
        raise NumericalError("dip search failed", {"message": res.message})
    return float(res.x), float(res.fun)


def _dip_task(args):
    gamma, ratio, fock_cutoff, coarse_points = args
    base = BlockadeParams(0.0, ratio * gamma, gamma, gaussian_pulse(gamma),
                          fock_cutoff=fock_cutoff, coarse_points=coarse_points)
    return find_dip(base)


@dataclass
class KappaCalibration:
    kappa: float
    b: float
    per_gamma: dict  # gamma -> (kappa, b)
    points: list = field(default_factory=list)  # (gamma, U/gamma, delta_min, 1 - g2_min)
    residual_rms: float = 0.0
    condition_number: float = 0.0

    def depth(self, u_over_gamma):
        x = np.asarray(u_over_gamma)
        return self.kappa * x + self.b * x ** 2

    @property
    def kappa_spread(self):
        """Largest relative deviation of a per-gamma kappa from the joint fit."""
        return max(abs(k - self.kappa) / self.kappa for k, _ in self.per_gamma.values())


def fit_kappa_b(u_over_gamma, depth):
    """Least-squares fit depth = kappa x + b x^2 (no constant term)."""
    x = np.asarray(u_over_gamma, dtype=float)
    y = np.asarray(depth, dtype=float)
    if len(np.unique(x)) < 2:
        raise NumericalError("need at least two distinct U/gamma values", {"points": len(x)})
    design = np.column_stack([x, x ** 2])
    cond = float(np.linalg.cond(design))
    if cond > 1e8:
        raise NumericalError("kappa/b fit is ill-conditioned", {"condition_number": cond})
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid ** 2))), cond


def calibrate_kappa(gamma_list, u_over_gamma_grid, jobs=1, fock_cutoff=6, coarse_points=201):
    """Blockade depth 1 - g2_min versus U/gamma and its quadratic fit.

    Every (gamma, U/gamma) point uses a Fourier-limited Gaussian pulse with
    tau_p = hbar/gamma and the dip is located by a bounded Brent search.
    """
    grid = [float(x) for x in u_over_gamma_grid]
    if any(not 0.01 <= x <= 0.5 for x in grid):
        raise DomainError("U/gamma values must lie in [0.01, 0.5]")
    gammas = [float(g) for g in gamma_list]
    if any(not g > 0 for g in gammas):
        raise DomainError("gamma values must be > 0")
    tasks = [(g, x, fock_cutoff, coarse_points) for g in gammas for x in grid]
    dips = _map(_dip_task, tasks, jobs)
    points = [(g, x, d, 1.0 - v) for (g, x, _, _), (d, v) in zip(tasks, dips)]
    xs = [p[1] for p in points]
    ys = [p[3] for p in points]
    kappa, b, rms, cond = fit_kappa_b(xs, ys)
    per_gamma = {}
    for g in gammas:
        sel = [p for p in points if p[0] == g]
        k_g, b_g, _, _ = fit_kappa_b([p[1] for p in sel], [p[3] for p in sel])
        per_gamma[g] = (k_g, b_g)
    return KappaCalibration(kappa, b, per_gamma, points, rms, cond)


def default_params(gamma, U_dd, detuning=0.0, fock_cutoff=6, **pulse):
    return BlockadeParams(detuning, U_dd, gamma, gaussian_pulse(gamma, **pulse), fock_cutoff=fock_cutoff)


def with_cutoff(params: BlockadeParams, cutoff):
    return replace(params, fock_cutoff=cutoff)
