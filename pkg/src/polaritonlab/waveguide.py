"""Guided TE modes of planar slabs and the effective-index strip model.

A slab is solved with the real 2x2 characteristic-matrix method: the field
and its derivative are carried from the bottom semi-infinite layer (where
the field decays as exp(q z)) through every finite layer, and the mode
condition is that the field also decays in the top semi-infinite layer.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from .core import DeviceConfig, Layer
from .errors import DomainError, ModeCutoffError, NumericalError

N_AIR = 1.0
SCAN_POINTS = 2000


@dataclass(frozen=True)
class SlabStack:
    """Refractive-index profile along the confinement axis.

    ``indices`` and ``thicknesses`` run bottom to top. The first and last
    entries are the semi-infinite outer media; their thickness entries are
    ignored (conventionally 0) and only used to decide how much of the
    evanescent tail to sample.
    """

    indices: tuple
    thicknesses: tuple
    wavelength: float  # um, vacuum
    polarization: str = "TE"

    def __post_init__(self):
        n = tuple(float(x) for x in self.indices)
        t = tuple(float(x) for x in self.thicknesses)
        object.__setattr__(self, "indices", n)
        object.__setattr__(self, "thicknesses", t)
        if len(n) < 3 or len(n) != len(t):
            raise DomainError("a slab needs >= 3 layers with matching thicknesses")
        if self.polarization != "TE":
            raise DomainError("only TE polarization is supported")
        if not self.wavelength > 0:
            raise DomainError("wavelength must be > 0")
        if any(x <= 0 for x in t[1:-1]):
            raise DomainError("inner layer thicknesses must be > 0")
        if any(x <= 0 for x in n):
            raise DomainError("refractive indices must be > 0")

    @property
    def k0(self):
        return 2 * np.pi / self.wavelength

    @property
    def n_outer_max(self):
        return max(self.indices[0], self.indices[-1])

    @property
    def n_core_max(self):
        return max(self.indices[1:-1])

    @property
    def guides(self):
        return self.n_core_max > self.n_outer_max

    @property
    def interfaces(self):
        """z positions of the layer boundaries, bottom interface at z = 0."""
        return np.concatenate([[0.0], np.cumsum(self.thicknesses[1:-1])])

    @classmethod
    def symmetric(cls, n_clad, n_core, thickness, wavelength):
        return cls((n_clad, n_core, n_clad), (0.0, thickness, 0.0), wavelength)


@dataclass(frozen=True)
class GuidedMode:
    beta: float  # 1/um
    n_eff: float
    coordinate: np.ndarray = field(repr=False)  # um
    profile: np.ndarray = field(repr=False)  # field E, unit L2 norm
    fwhm_width: float  # um, FWHM of |E|^2
    order: int = 0

    @property
    def intensity(self):
        return self.profile ** 2


def _transfer(kz2, t):
    """Characteristic matrix of one homogeneous layer for (E, dE/dz)."""
    if kz2 > 0:
        k = np.sqrt(kz2)
        c, s = np.cos(k * t), np.sin(k * t)
        return np.array([[c, s / k], [-k * s, c]])
    if kz2 < 0:
        q = np.sqrt(-kz2)
        c, s = np.cosh(q * t), np.sinh(q * t)
        return np.array([[c, s / q], [q * s, c]])
    return np.array([[1.0, t], [0.0, 1.0]])


def dispersion_function(stack, n_eff):
    """Mode-condition residual; zero exactly at guided-mode effective indices.

    Valid for n_outer_max < n_eff. The residual is scaled by the field growth
    so its magnitude stays O(1) across the scan.
    """
    k0 = stack.k0
    beta2 = (k0 * n_eff) ** 2
    q_bot = np.sqrt(beta2 - (k0 * stack.indices[0]) ** 2)
    q_top = np.sqrt(beta2 - (k0 * stack.indices[-1]) ** 2)
    v = np.array([1.0, q_bot])
    for n, t in zip(stack.indices[1:-1], stack.thicknesses[1:-1]):
        v = _transfer((k0 * n) ** 2 - beta2, t) @ v
        v /= max(1.0, abs(v[0]))
    return (v[1] + q_top * v[0]) / k0


def find_mode_indices(stack, scan_points=SCAN_POINTS, tol=1e-12):
    """All guided-mode effective indices, sorted descending."""
    if not stack.guides:
        raise ModeCutoffError("core index does not exceed the outer indices: no guidance")
    lo, hi = stack.n_outer_max, stack.n_core_max
    span = hi - lo
    grid = np.linspace(lo + 1e-9 * span, hi - 1e-12 * span, scan_points)
    vals = np.array([dispersion_function(stack, x) for x in grid])
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]:
        a, b = grid[i], grid[i + 1]
        if vals[i] == 0:
            roots.append(a)
            continue
        try:
            r = brentq(lambda x: dispersion_function(stack, x), a, b, xtol=tol, rtol=1e-15)
        except ValueError as exc:
            raise NumericalError("root bracketing failed", {"bracket": (a, b)}) from exc
        roots.append(r)
    roots = sorted(set(roots), reverse=True)
    return roots


def _profile(stack, n_eff, z):
    """Unnormalized field sampled at positions z (bottom interface at 0)."""
    k0 = stack.k0
    beta2 = (k0 * n_eff) ** 2
    bounds = stack.interfaces
    q_bot = np.sqrt(beta2 - (k0 * stack.indices[0]) ** 2)
    q_top = np.sqrt(beta2 - (k0 * stack.indices[-1]) ** 2)
    out = np.empty_like(z)
    below = z < 0
    out[below] = np.exp(q_bot * z[below])
    v = np.array([1.0, q_bot])
    for j, (n, t) in enumerate(zip(stack.indices[1:-1], stack.thicknesses[1:-1])):
        z0 = bounds[j]
        kz2 = (k0 * n) ** 2 - beta2
        sel = (z >= z0) & (z < z0 + t) if j < len(bounds) - 2 else (z >= z0) & (z <= z0 + t)
        dz = z[sel] - z0
        if kz2 > 0:
            k = np.sqrt(kz2)
            out[sel] = v[0] * np.cos(k * dz) + v[1] * np.sin(k * dz) / k
        elif kz2 < 0:
            q = np.sqrt(-kz2)
            out[sel] = v[0] * np.cosh(q * dz) + v[1] * np.sinh(q * dz) / q
        else:
            out[sel] = v[0] + v[1] * dz
        v = _transfer(kz2, t) @ v
    top = bounds[-1]
    above = z > top
    out[above] = v[0] * np.exp(-q_top * (z[above] - top))
    return out


def _fwhm(x, y):
    """Full width at half maximum of a single-peaked sampled curve."""
    y = np.asarray(y)
    half = y.max() / 2
    above = np.nonzero(y >= half)[0]
    i0, i1 = above[0], above[-1]
    if i0 == 0 or i1 == len(y) - 1:
        raise NumericalError("profile window too narrow to resolve the FWHM")
    left = x[i0 - 1] + (half - y[i0 - 1]) * (x[i0] - x[i0 - 1]) / (y[i0] - y[i0 - 1])
    right = x[i1] + (half - y[i1]) * (x[i1 + 1] - x[i1]) / (y[i1 + 1] - y[i1])
    return right - left


def solve_slab_te(stack, mode_order=0, samples=4001, tail=None):
    """Solve the ``mode_order``-th TE mode (0 = highest n_eff) of a slab.

    The profile is sampled on ``samples`` points covering the finite layers
    plus ``tail`` um of each evanescent region (default: six decay lengths).
    """
    if mode_order < 0:
        raise DomainError("mode_order must be >= 0")
    roots = find_mode_indices(stack)
    if mode_order >= len(roots):
        raise ModeCutoffError(
            f"mode order {mode_order} is cut off; structure guides {len(roots)} TE mode(s)"
        )
    n_eff = roots[mode_order]
    k0 = stack.k0
    total = stack.interfaces[-1]
    if tail is None:
        q_min = k0 * np.sqrt(n_eff ** 2 - stack.n_outer_max ** 2)
        tail = max(6.0 / q_min, 0.5 * total)
    z = np.linspace(-tail, total + tail, samples)
    e = _profile(stack, n_eff, z)
    e /= np.sqrt(trapezoid(e ** 2, z))
    if e[np.argmax(np.abs(e))] < 0:
        e = -e
    return GuidedMode(k0 * n_eff, n_eff, z, e, _fwhm(z, e ** 2), mode_order)


def mode_equation_residual(stack, mode, points_per_um=20000):
    """Relative residual of E'' + (k0^2 n^2 - beta^2) E = 0 on a fine grid.

    Stencils that straddle a layer boundary are skipped since E'' jumps there.
    """
    k0 = stack.k0
    lo, hi = mode.coordinate[0], mode.coordinate[-1]
    n_pts = int((hi - lo) * points_per_um) + 1
    z = np.linspace(lo, hi, n_pts)
    h = z[1] - z[0]
    e = _profile(stack, mode.n_eff, z)
    e /= np.max(np.abs(e))
    bounds = stack.interfaces
    layer = np.searchsorted(bounds, z, side="right")
    n_of_z = np.array(stack.indices)[layer]
    d2 = (e[2:] - 2 * e[1:-1] + e[:-2]) / h ** 2
    res = d2 + (k0 ** 2 * n_of_z[1:-1] ** 2 - mode.beta ** 2) * e[1:-1]
    same = (layer[:-2] == layer[1:-1]) & (layer[2:] == layer[1:-1])
    scale = k0 ** 2 * max(stack.indices) ** 2
    return float(np.max(np.abs(res[same])) / scale)


def effective_index_strip(stack_under_strip, stack_outside, strip_width, samples=4001):
    """Lateral mode of a strip waveguide by the effective-index method.

    ``stack_outside`` is either the slab found beside the strip or a bare
    refractive index (e.g. 1.0 for air beside an etched ridge).
    """
    if not strip_width > 0:
        raise DomainError("strip_width must be > 0")
    n_in = solve_slab_te(stack_under_strip, 0).n_eff
    if isinstance(stack_outside, SlabStack):
        n_out = solve_slab_te(stack_outside, 0).n_eff
    else:
        n_out = float(stack_outside)
    if not n_in > n_out:
        raise ModeCutoffError(
            f"lateral guidance fails: n_eff under strip {n_in:.6f} <= outside {n_out:.6f}"
        )
    lateral = SlabStack((n_out, n_in, n_out), (0.0, strip_width, 0.0), stack_under_strip.wavelength)
    mode = solve_slab_te(lateral, 0, samples=samples)
    # centre the lateral coordinate on the strip axis
    return GuidedMode(mode.beta, mode.n_eff, mode.coordinate - strip_width / 2, mode.profile,
                      mode.fwhm_width, 0)


def device_stacks(cfg: DeviceConfig, etched=False):
    """Vertical slabs under and beside the strip for a device configuration.

    Returns ``(under, outside)`` where ``outside`` is a SlabStack, or the air
    index when ``etched`` (sidewalls removed beside the strip).
    """
    clad, *core = cfg.layer_stack
    n_core = [l.index for l in core]
    t_core = [l.thickness for l in core]
    under = SlabStack(
        (clad.index, *n_core, cfg.ito_index, N_AIR),
        (0.0, *t_core, cfg.ito_thickness, 0.0),
        cfg.wavelength,
    )
    if etched:
        return under, N_AIR
    outside = SlabStack((clad.index, *n_core, N_AIR), (0.0, *t_core, 0.0), cfg.wavelength)
    return under, outside


def device_mode(cfg: DeviceConfig, strip_width=None, etched=None):
    """Lateral mode for the device; narrow (< 1 um) strips default to etched ridges."""
    width = cfg.strip_width if strip_width is None else strip_width
    if etched is None:
        etched = width < 1.0
    under, outside = device_stacks(cfg, etched=etched)
    return effective_index_strip(under, outside, width)


def stack_from_layers(layers, wavelength, cover=N_AIR):
    """SlabStack from a Layer sequence whose first entry is the semi-infinite clad."""
    layers = list(layers)
    if not layers or not all(isinstance(l, Layer) for l in layers):
        raise DomainError("expected a sequence of Layer records")
    return SlabStack(
        (layers[0].index, *(l.index for l in layers[1:]), cover),
        (0.0, *(l.thickness for l in layers[1:]), 0.0),
        wavelength,
    )
