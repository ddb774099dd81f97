import json
import math

import pytest

from polaritonlab.core import (CONSTANTS, DeviceConfig, Layer, effective_pulse_width, mev_to_nm,
                               mode_area, nm_to_mev)
from polaritonlab.errors import ConfigError, DomainError


def test_wavelength_energy_roundtrip():
    assert nm_to_mev(812.0) == pytest.approx(1526.89889, rel=1e-8)
    assert mev_to_nm(nm_to_mev(817.8)) == pytest.approx(817.8, rel=1e-14)
    with pytest.raises(DomainError):
        nm_to_mev(0)


def test_hbar_c():
    assert CONSTANTS.hbar_c == pytest.approx(197.3269804, rel=1e-9)


def test_mode_area_operating_points():
    a = mode_area(5.0, 0.215, 25.6)
    assert a.pulse_duration_tau_p == pytest.approx(3.0614, abs=1e-4)
    assert a.area_A == pytest.approx(391.87, abs=0.01)
    assert a.density_n == pytest.approx(5.1e-3, rel=0.01)
    # second operating point; quoted 1465 is rounded from the same formula
    b = mode_area(5.0, 0.115, 52.1)
    assert b.pulse_duration_tau_p == pytest.approx(5.72, abs=0.01)
    assert b.area_A == pytest.approx(1490.9, abs=0.5)


@pytest.mark.parametrize("args", [(0, 0.2, 25), (5, -1, 25), (5, 0.2, 0)])
def test_mode_area_rejects_non_positive(args):
    with pytest.raises(DomainError):
        mode_area(*args)


def test_effective_pulse_width_limits():
    assert effective_pulse_width(3.06, 0.0, 25.6) == 3.06
    assert effective_pulse_width(0.0, 25.6, 25.6) == pytest.approx(1.0)
    assert effective_pulse_width(3.0, 4.0 * 25.6, 25.6) == pytest.approx(5.0)


def test_device_defaults_and_field():
    cfg = DeviceConfig()
    assert cfg.field == pytest.approx(2.5 / 1.06)
    assert cfg.layer_stack[0].index == pytest.approx(3.10)
    assert 3.4 < cfg.layer_stack[1].index < 3.5


def test_device_roundtrip_json(tmp_path):
    cfg = DeviceConfig(voltage=0.0, strip_width=0.5)
    path = tmp_path / "dev.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert DeviceConfig.from_json(path) == cfg


@pytest.mark.parametrize("key,value", [("qw_thickness", 0.0), ("ito_index", 0.9),
                                       ("barrier_al_fraction", 1.5), ("qw_count", 0)])
def test_device_validation_names_key(key, value):
    with pytest.raises(ConfigError) as err:
        DeviceConfig(**{key: value})
    assert err.value.key == key


def test_device_unknown_key():
    with pytest.raises(ConfigError) as err:
        DeviceConfig.from_dict({"strip_widht": 5})
    assert err.value.key == "strip_widht"


def test_layer_validation():
    with pytest.raises(ConfigError):
        Layer("x", -1.0, 3.0)
    with pytest.raises(ConfigError):
        Layer("x", 1.0, 0.5)
    assert math.isclose(Layer("x", 1.0, 3.0).index, 3.0)
