"""Configuration schema and the built-in operating-point presets."""
from __future__ import annotations

import copy

import jsonschema

from .errors import ConfigError

NUM = {"type": "number"}
POS = {"type": "number", "exclusiveMinimum": 0}
INT = {"type": "integer", "minimum": 1}
NUM_LIST = {"type": "array", "items": NUM, "minItems": 1}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


DELTAS = {
    "oneOf": [
        NUM_LIST,
        _obj({"start": NUM, "stop": NUM, "num": {"type": "integer", "minimum": 2},
              "unit": {"enum": ["meV", "gamma"]}}, ("start", "stop", "num")),
    ]
}

PULSE = _obj({
    "kind": {"enum": ["gaussian", "flat_top"]},
    "width_factor": POS,  # pulse FWHM (or flat-top length) in units of hbar/gamma
    "window_factor": POS,
    "amplitude": POS,  # 1/ps; omitted -> auto-scaled to the target occupation
})

SECTIONS = {
    # DeviceConfig validates its own keys
    "device": {"type": "object"},
    "stark": _obj({"fields": NUM_LIST, "step_nm": POS}),
    "waveguide": _obj({"strip_widths": {"type": "array", "items": POS, "minItems": 1},
                       "etched": {"type": ["boolean", "null"]}, "samples": INT}),
    "dispersion": _obj({"voltage": NUM, "n_eff": POS, "beta_min": POS, "beta_max": POS,
                        "points": {"type": "integer", "minimum": 3},
                        "fractions": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0,
                                                                 "exclusiveMaximum": 1}}}),
    "blockade": _obj({"gamma": POS, "U_over_gamma": NUM, "U_dd": NUM, "deltas": DELTAS,
                      "fock_cutoff": {"type": "integer", "minimum": 4},
                      "coarse_points": {"type": "integer", "minimum": 11}, "pulse": PULSE,
                      "find_dip": {"type": "boolean"}}),
    "calibration": _obj({"gammas": {"type": "array", "items": POS, "minItems": 1},
                         "u_over_gamma": {"type": "array", "items": NUM, "minItems": 2},
                         "fock_cutoff": {"type": "integer", "minimum": 4}}),
    "extraction": _obj({"g2_min": NUM, "gamma": POS, "w": POS, "v_g": POS, "kappa": POS, "b": NUM,
                        "area": POS, "design": _obj({"w": POS, "d_nm": POS, "chi2": NUM, "C_ex": POS},
                                                    ("w", "d_nm", "chi2", "C_ex"))}),
    "hbt": _obj({"n_pulses": INT, "p_click": POS, "g2_target": NUM, "jitter_sigma": NUM,
                 "crosstalk": {"type": "array", "items": {"type": "array", "items": NUM,
                                                          "minItems": 2, "maxItems": 2}},
                 "rep_period": POS, "bin_width": POS, "max_order": INT, "window_width": POS,
                 "mask": {"oneOf": [{"const": "auto"}, {"type": "null"},
                                    {"type": "array", "items": {"type": "integer"}}]},
                 "timetags": {"type": "string"}, "bootstrap": {"type": "integer", "minimum": 0},
                 "targets": NUM_LIST}),
}

# keys each subcommand cannot run without
REQUIRED = {
    "stark-scan": {"stark": ["fields"]},
    "wg-mode": {"waveguide": ["strip_widths"]},
    "dispersion": {"dispersion": ["voltage", "beta_min", "beta_max", "points"]},
    "g2-sweep": {"blockade": ["gamma", "deltas"]},
    "calibrate": {"calibration": ["gammas", "u_over_gamma"]},
    "extract": {"extraction": ["g2_min", "gamma", "w", "v_g"]},
    "hbt-generate": {"hbt": ["n_pulses", "p_click", "g2_target"]},
    "hbt-analyze": {"hbt": ["timetags"]},
    "reproduce-paper": {},
}


def schema_for(subcommand):
    props = copy.deepcopy(SECTIONS)
    need = REQUIRED.get(subcommand, {})
    for section, keys in need.items():
        props[section]["required"] = list(keys)
    return {"type": "object", "properties": props, "required": sorted(need),
            "additionalProperties": False}


def validate(config, subcommand):
    """Raise ConfigError naming the offending dotted key."""
    validator = jsonschema.Draft202012Validator(schema_for(subcommand))
    # a misspelt key also triggers "required" for the intended one; report the typo first
    errors = sorted(validator.iter_errors(config),
                    key=lambda e: (e.validator != "additionalProperties", [str(p) for p in e.absolute_path]))
    if not errors:
        return
    err = errors[0]
    path = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = [k for k in err.validator_value if k not in err.instance]
        key = ".".join(path + missing[:1])
        raise ConfigError(f"missing required config key {key!r}", key)
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        key = ".".join(path + extra[:1])
        raise ConfigError(f"unknown config key {key!r}", key)
    key = ".".join(path) or "<root>"
    raise ConfigError(f"invalid value for {key!r}: {err.message}", key)


PAPER = {
    "device": {},
    "stark": {"fields": [0.0, 0.5, 1.0, 1.5, 2.0, 2.358490566, 3.0, 4.0, 5.0]},
    "waveguide": {"strip_widths": [5.0, 0.5]},
    "dispersion": {"voltage": 2.5, "n_eff": 3.6, "beta_min": 20.0, "beta_max": 40.0, "points": 801,
                   "fractions": [0.68, 0.31]},
    "blockade": {"gamma": 0.215, "U_over_gamma": 0.1,
                 "deltas": {"start": -4.0, "stop": 4.0, "num": 17, "unit": "gamma"},
                 "fock_cutoff": 6, "coarse_points": 201, "find_dip": True},
    "calibration": {"gammas": [0.12, 0.22], "u_over_gamma": [0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5]},
    "extraction": {"g2_min": 0.94, "gamma": 0.215, "w": 5.0, "v_g": 25.6, "kappa": 0.61, "b": -0.56,
                   "design": {"w": 0.28, "d_nm": 8.0, "chi2": 0.6, "C_ex": 50.0}},
    "hbt": {"n_pulses": 10_000_000, "p_click": 0.0158, "g2_target": 0.94, "jitter_sigma": 300.0,
            "crosstalk": [[9500.0, 0.005], [114000.0, 0.005]], "bin_width": 87.0, "max_order": 12,
            "mask": "auto", "bootstrap": 400, "targets": [0.94, 1.0, 1.03]},
}


def set_dotted(config, key, value):
    parts = key.split(".")
    node = config
    for p in parts[:-1]:
        nxt = node.setdefault(p, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"cannot set {key!r}: {p!r} is not a section", key)
        node = nxt
    node[parts[-1]] = value


def merge(base, extra):
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out
