"""Unit conventions, physical constants and device configuration records.

Every quantity in the package is expressed in meV, ps and um unless a name
says otherwise (``_nm``, ``_V`` ...).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 0.6582119569  # meV ps
    c: float = 299.792458  # um / ps
    e_charge: float = 1.0  # unit charge; potential energy in meV = 1e3 * F[V/um] * z[um]
    hbar2_over_2m0: float = 38.09982122e-6  # meV um^2, free-electron kinetic prefactor
    hc_meV_nm: float = 1239841.984  # meV nm

    @property
    def hbar_c(self):
        """hbar*c in meV um."""
        return self.hbar * self.c


CONSTANTS = PhysicalConstants()
HBAR = CONSTANTS.hbar
C_LIGHT = CONSTANTS.c


def nm_to_mev(wavelength_nm):
    """Photon energy in meV for a vacuum wavelength in nm."""
    if wavelength_nm <= 0:
        raise DomainError(f"wavelength must be positive, got {wavelength_nm}")
    return 1e6 * 1239.8419 / wavelength_nm / 1000.0


def mev_to_nm(energy_mev):
    if energy_mev <= 0:
        raise DomainError(f"energy must be positive, got {energy_mev}")
    return 1e6 * 1239.8419 / energy_mev / 1000.0


@dataclass(frozen=True)
class Layer:
    material: str
    thickness: float  # um
    index: float

    def __post_init__(self):
        if not self.thickness > 0:
            raise ConfigError(f"layer {self.material!r}: thickness must be > 0", "layer_stack")
        if not self.index > 1:
            raise ConfigError(f"layer {self.material!r}: refractive index must be > 1", "layer_stack")


# Default indices at ~810 nm; the published work does not list them.
N_AL04 = 3.30
N_GAAS = 3.65
N_AL08 = 3.10
N_ITO = 1.7  # lower end of reported ITO values near 800 nm


def qw_core_layers(qw_count=12, qw_thickness=0.020, core_thickness=0.510, cap=0.010,
                   n_well=N_GAAS, n_barrier=N_AL04):
    """Per-layer description of the multi-QW core, bottom to top.

    Wells are spread with equal barrier spacing inside ``core_thickness - cap``
    and a GaAs cap of thickness ``cap`` closes the core.
    """
    body = core_thickness - cap
    barrier = (body - qw_count * qw_thickness) / (qw_count + 1)
    if barrier <= 0:
        raise ConfigError("quantum wells do not fit inside the core", "qw_count")
    layers = [Layer("Al0.4Ga0.6As", barrier, n_barrier)]
    for _ in range(qw_count):
        layers.append(Layer("GaAs QW", qw_thickness, n_well))
        layers.append(Layer("Al0.4Ga0.6As", barrier, n_barrier))
    if cap > 0:
        layers.append(Layer("GaAs cap", cap, n_well))
    return layers


def average_index(layers):
    """Thickness-weighted mean refractive index of a group of layers."""
    total = sum(layer.thickness for layer in layers)
    return sum(layer.thickness * layer.index for layer in layers) / total


def _default_stack():
    core = qw_core_layers()
    return (
        Layer("Al0.8Ga0.2As clad", 0.500, N_AL08),
        Layer("MQW core (averaged)", 0.510, round(average_index(core), 6)),
    )


@dataclass(frozen=True)
class DeviceConfig:
    """Device geometry and operating point.

    ``layer_stack`` runs from the bottom cladding to the top of the core; the
    first layer is treated as semi-infinite by the mode solver and air covers
    the top. The ITO strip is described separately because it only exists
    under the strip.
    """

    layer_stack: tuple = field(default_factory=_default_stack)
    qw_count: int = 12
    qw_thickness: float = 0.020  # um
    strip_width: float = 5.0  # um
    channel_length: float = 200.0  # um
    voltage: float = 2.5  # V
    structure_thickness: float = 1.06  # um, electrode to electrode
    wavelength: float = 0.81  # um
    ito_thickness: float = 0.050  # um
    ito_index: float = N_ITO
    barrier_al_fraction: float = 0.4
    mass_e: float = 0.067
    mass_hh: float = 0.35

    def __post_init__(self):
        stack = tuple(
            layer if isinstance(layer, Layer) else _layer_from_obj(layer)
            for layer in self.layer_stack
        )
        object.__setattr__(self, "layer_stack", stack)
        if len(stack) < 2:
            raise ConfigError("layer_stack needs a cladding and at least one core layer", "layer_stack")
        for name in ("qw_thickness", "strip_width", "channel_length", "structure_thickness",
                     "wavelength", "ito_thickness", "mass_e", "mass_hh"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0", name)
        if not isinstance(self.qw_count, int) or self.qw_count < 1:
            raise ConfigError("qw_count must be a positive integer", "qw_count")
        if not self.ito_index > 1:
            raise ConfigError("ito_index must be > 1", "ito_index")
        if not 0 < self.barrier_al_fraction <= 1:
            raise ConfigError("barrier_al_fraction must lie in (0, 1]", "barrier_al_fraction")

    @property
    def field(self):
        """Applied field in V/um for the configured voltage."""
        return self.voltage / self.structure_thickness

    def field_for(self, voltage):
        return voltage / self.structure_thickness

    def to_dict(self):
        d = asdict(self)
        d["layer_stack"] = [
            {"material": l.material, "thickness": l.thickness, "index": l.index}
            for l in self.layer_stack
        ]
        return d

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("device config must be a JSON object", "device")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            key = sorted(unknown)[0]
            raise ConfigError(f"unknown device key {key!r}", key)
        kwargs = dict(data)
        if "layer_stack" in kwargs:
            if not isinstance(kwargs["layer_stack"], list):
                raise ConfigError("layer_stack must be a list", "layer_stack")
            kwargs["layer_stack"] = tuple(_layer_from_obj(o) for o in kwargs["layer_stack"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc), "device") from exc

    @classmethod
    def from_json(cls, path):
        with open(Path(path), encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _layer_from_obj(obj):
    if isinstance(obj, dict):
        missing = [k for k in ("material", "thickness", "index") if k not in obj]
        if missing:
            raise ConfigError(f"layer is missing key {missing[0]!r}", f"layer_stack.{missing[0]}")
        return Layer(str(obj["material"]), float(obj["thickness"]), float(obj["index"]))
    if isinstance(obj, (list, tuple)) and len(obj) == 3:
        return Layer(str(obj[0]), float(obj[1]), float(obj[2]))
    raise ConfigError(f"cannot interpret layer {obj!r}", "layer_stack")


@dataclass(frozen=True)
class ModeArea:
    width_w: float  # um
    pulse_duration_tau_p: float  # ps
    group_velocity_vg: float  # um/ps
    area_A: float  # um^2
    density_n: float  # um^-2


def mode_area(w, gamma, v_g):
    """Pulse mode area A = w * tau_p * v_g with the Fourier-limited tau_p = hbar/gamma.

    Parameters
    ----------
    w : float
        Lateral mode width (um).
    gamma : float
        Polariton linewidth (meV).
    v_g : float
        Group velocity (um/ps).
    """
    for name, val in (("w", w), ("gamma", gamma), ("v_g", v_g)):
        if not val > 0:
            raise DomainError(f"{name} must be > 0, got {val}")
    tau_p = HBAR / gamma
    area = w * tau_p * v_g
    return ModeArea(w, tau_p, v_g, area, 2.0 / area)


def effective_pulse_width(tau_p, spot_size_delta, v_g):
    """Temporal width after convolving the pulse with the spatial laser spot.

    Both profiles are taken as Gaussians so widths add in quadrature; the
    spot contributes its transit time delta/v_g.
    """
    if tau_p < 0 or spot_size_delta < 0 or not v_g > 0:
        raise DomainError("tau_p and spot size must be >= 0 and v_g > 0")
    return math.hypot(tau_p, spot_size_delta / v_g)

