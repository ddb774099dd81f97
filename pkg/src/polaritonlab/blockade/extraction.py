"""From a measured blockade dip to interaction constants and design limits."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from scipy.optimize import brentq

from ..core import HBAR, ModeArea
from ..errors import DomainError, NoBlockadeSignal

DEFAULT_KAPPA = 0.61
DEFAULT_B = -0.56


def extract_interaction(g2_min, gamma, area: ModeArea, kappa=DEFAULT_KAPPA):
    """Interaction energy U (meV) and constant g_dd (meV um^2) from the dip depth.

    Uses the linear relation kappa U / gamma = 1 - g2_min; the two-polariton
    density in the pulse mode is 2/A so g_dd = U A / 2.
    """
    if not kappa > 0:
        raise DomainError("kappa must be > 0")
    if not gamma > 0:
        raise DomainError("gamma must be > 0")
    if g2_min >= 1:
        raise NoBlockadeSignal(f"g2_min = {g2_min} shows no antibunching")
    if not g2_min > 0:
        raise DomainError("g2_min must be > 0")
    U = (1.0 - g2_min) * gamma / kappa
    return U, U * area.area_A / 2.0


def invert_depth(depth, kappa=DEFAULT_KAPPA, b=DEFAULT_B):
    """Smallest positive x = U/gamma with kappa x + b x^2 = depth.

    Returns None when the quadratic never reaches ``depth``.
    """
    if b == 0:
        return depth / kappa
    disc = kappa ** 2 + 4 * b * depth
    if disc < 0:
        return None
    roots = [(-kappa + s * math.sqrt(disc)) / (2 * b) for s in (1, -1)]
    pos = [r for r in roots if r >= 0]
    return min(pos) if pos else None


def blockade_radius(g_dd, gamma):
    """Radius (um) of the disc holding one polariton at which U = gamma."""
    if not g_dd > 0 or not gamma > 0:
        raise DomainError("g_dd and gamma must be > 0")
    return math.sqrt(2.0 * g_dd / (math.pi * gamma))


def blockade_density(g_dd, gamma):
    """n_b = gamma / g_dd: density where the mean-field shift equals the linewidth."""
    if not g_dd > 0 or not gamma > 0:
        raise DomainError("g_dd and gamma must be > 0")
    return gamma / g_dd


def blockade_lhs(w, d_nm, chi2):
    """w (1 - chi^2) / (d chi^4) with w and d in um."""
    return w * (1.0 - chi2) / (d_nm * 1e-3 * chi2 ** 2)


def full_blockade_condition(w, d_nm, chi2, C_ex):
    """Check w (1 - chi^2) / (d chi^4) < C_ex for a full single-photon blockade.

    Returns ``(lhs, verdict, chi2_threshold)``. The left side falls
    monotonically with the exciton fraction so the threshold is the unique
    root of lhs = C_ex, found by bisection.
    """
    if not 0 < chi2 <= 1:
        raise DomainError("chi2 must lie in (0, 1]")
    if not w > 0 or not d_nm > 0:
        raise DomainError("w and d must be > 0")
    lhs = blockade_lhs(w, d_nm, chi2)
    f = lambda x: blockade_lhs(w, d_nm, x) - C_ex
    threshold = brentq(f, 1e-9, 1.0, xtol=1e-14, rtol=1e-14) if C_ex > 0 else 1.0
    return lhs, bool(lhs < C_ex), threshold


def exciton_constant(g_dd, chi2, v_g, d_nm):
    """C_ex = 2 g_dd (1 - chi^2) / (hbar v_g d chi^4) at a measured operating point.

    Equivalent to requiring U = gamma for a pulse confined to a width w.
    """
    if not 0 < chi2 < 1:
        raise DomainError("chi2 must lie in (0, 1)")
    return 2.0 * g_dd * (1.0 - chi2) / (HBAR * v_g * d_nm * 1e-3 * chi2 ** 2)


@dataclass
class ExtractionReport:
    g2_curve: list = field(default_factory=list)  # (delta meV, g2_0, stderr)
    g2_min: float = float("nan")
    delta_at_min: float = float("nan")
    g2_max: float = float("nan")
    delta_at_max: float = float("nan")
    kappa: float = DEFAULT_KAPPA
    b: float = DEFAULT_B
    gamma: float = float("nan")
    U_dd_extracted: float = float("nan")
    g_dd: float = float("nan")
    R_b: float = float("nan")
    area_A: float = float("nan")
    n: float = float("nan")
    n_b: float = float("nan")
    blockade_verdict: bool = False
    blockade_margin: float = float("nan")

    def to_dict(self):
        return asdict(self)


def build_report(g2_min, gamma, area: ModeArea, kappa=DEFAULT_KAPPA, b=DEFAULT_B,
                 curve=None, w_design=None, d_nm=None, chi2=None, C_ex=None):
    """Fill an ExtractionReport from a dip value (and optionally a full curve).

    The verdict compares n / n_b with one; when the design inputs are given
    it is the full-blockade condition instead and the margin is C_ex - lhs.
    """
    U, g_dd = extract_interaction(g2_min, gamma, area, kappa)
    rep = ExtractionReport(kappa=kappa, b=b, gamma=gamma, g2_min=g2_min,
                           U_dd_extracted=U, g_dd=g_dd, area_A=area.area_A, n=area.density_n)
    rep.R_b = blockade_radius(g_dd, gamma)
    rep.n_b = blockade_density(g_dd, gamma)
    if curve is not None:
        rep.g2_curve = [tuple(float(v) for v in row) for row in curve.rows()]
        rep.g2_min, rep.delta_at_min = curve.g2_min, curve.delta_at_min
        rep.g2_max, rep.delta_at_max = curve.g2_max, curve.delta_at_max
    if None not in (w_design, d_nm, chi2, C_ex):
        lhs, ok, _ = full_blockade_condition(w_design, d_nm, chi2, C_ex)
        rep.blockade_verdict, rep.blockade_margin = ok, C_ex - lhs
    else:
        ratio = rep.n / rep.n_b
        rep.blockade_verdict, rep.blockade_margin = ratio >= 1.0, ratio - 1.0
    return rep
