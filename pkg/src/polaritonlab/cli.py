"""Command-line entry point: ``polaritonlab <subcommand> [options]``.

Every subcommand reads a JSON config (``--config``), applies ``--set
section.key=value`` overrides and writes CSV/JSON files into ``--out-dir``.
Each file carries the sha256 of the resolved inputs so results can be
traced back to the run that produced them.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, configs, dispersion, hbt, stark, waveguide
from .blockade import extraction, model, sweep
from .core import DeviceConfig, mode_area
from .errors import ConfigError, PolaritonLabError

SIG_DIGITS = 9


# ---------------------------------------------------------------- output helpers

def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.{SIG_DIGITS}g}"
    return str(x)


def _clean(obj):
    """JSON-ready copy with floats rounded to SIG_DIGITS significant digits."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return None
        return float(f"{v:.{SIG_DIGITS}g}")
    return obj


def atomic_write(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    config_path: str = None
    overrides: list = field(default_factory=list)
    out_dir: str = "."
    seed: int = 0
    jobs: int = 1
    tool_version: str = __version__
    input_files: dict = field(default_factory=dict)  # name -> sha256

    @property
    def input_hash(self):
        """sha256 over everything that determines the numbers (not paths or --jobs)."""
        payload = {"subcommand": self.subcommand, "config": _clean(self.config), "seed": self.seed,
                   "tool_version": self.tool_version, "input_files": self.input_files}
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def record(self):
        d = asdict(self)
        d["input_hash"] = self.input_hash
        return d


class Writer:
    def __init__(self, manifest: RunManifest):
        self.manifest = manifest
        self.dir = Path(manifest.out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written = []

    @property
    def tag(self):
        return f"manifest sha256={self.manifest.input_hash}"

    def csv(self, name, header, rows):
        lines = [f"# {self.tag}", ",".join(header)]
        lines += [",".join(fmt(v) for v in row) for row in rows]
        atomic_write(self.dir / name, "\n".join(lines) + "\n")
        self.written.append(name)

    def json(self, name, obj):
        obj = dict(obj)
        obj["manifest_sha256"] = self.manifest.input_hash
        atomic_write(self.dir / name, dump_json(obj))
        self.written.append(name)

    def finish(self):
        rec = self.manifest.record()
        rec["outputs"] = sorted(set(self.written))
        atomic_write(self.dir / "manifest.json", dump_json(rec))


# ---------------------------------------------------------------- pipelines

def _device(cfg):
    return DeviceConfig.from_dict(cfg.get("device", {}))


def run_stark(cfg, out: Writer, ctx):
    sec = cfg["stark"]
    step = sec.get("step_nm", stark.DEFAULT_STEP * 1e3) * 1e-3
    res = stark.stark_scan(_device(cfg), sec["fields"], step=step)
    out.csv("stark.csv", ["field_V_per_um", "voltage_V", "shift_meV", "dipole_nm", "overlap"],
            [(r.field_F, r.voltage, r.shift_deltaE, r.dipole_length_d, r.wavefunction_overlap) for r in res])
    return {"stark": [asdict(r) for r in res]}


def run_wg_mode(cfg, out: Writer, ctx):
    sec = cfg["waveguide"]
    dev = _device(cfg)
    modes = {}
    rows = []
    for w in sec["strip_widths"]:
        mode = waveguide.device_mode(dev, strip_width=w, etched=sec.get("etched"))
        modes[fmt(w)] = {"strip_width_um": w, "n_eff": mode.n_eff, "fwhm_um": mode.fwhm_width,
                         "etched": sec.get("etched") if sec.get("etched") is not None else w < 1}
        rows += [(w, x, y) for x, y in zip(mode.coordinate, mode.intensity)]
    out.csv("wg_mode.csv", ["strip_width_um", "x_um", "intensity"], rows)
    out.json("wg_mode.json", {"modes": modes})
    return {"wg_mode": modes}


def run_dispersion(cfg, out: Writer, ctx):
    sec = cfg["dispersion"]
    params = dispersion.params_for_voltage(sec["voltage"], n_eff=sec.get("n_eff", dispersion.DEFAULT_N_EFF))
    beta = np.linspace(sec["beta_min"], sec["beta_max"], sec["points"])
    branches = dispersion.dispersion(params, beta)
    rows = []
    for br in branches:
        rows += [(br.branch_id,) + tuple(r) for r in br.rows()]
    out.csv("dispersion.csv", ["branch", "beta_per_um", "energy_meV", "chi_te2", "chi_hh2", "chi_lh2",
                               "v_g_um_per_ps"], rows)
    fit = dispersion.group_velocity_vs_fraction(branches[0], window=(0.2, 0.8))
    ops = {}
    for f in sec.get("fractions", []):
        v, b = dispersion.velocity_at_fraction(params, f)
        ops[fmt(f)] = {"exciton_fraction": f, "beta_per_um": b, "v_g_um_per_ps": v}
    summary = {"voltage_V": sec["voltage"], "n_eff": params.n_eff, "fit_v_p": fit.v_p,
               "fit_r_squared": fit.r_squared, "operating_points": ops,
               "flagged_samples": int(sum(int(br.flagged.sum()) for br in branches))}
    out.json("dispersion.json", summary)
    return {"dispersion": summary}


def _blockade_params(sec):
    gamma = sec["gamma"]
    if "U_dd" in sec:
        U = sec["U_dd"]
    elif "U_over_gamma" in sec:
        U = sec["U_over_gamma"] * gamma
    else:
        raise ConfigError("missing required config key 'blockade.U_dd' (or blockade.U_over_gamma)",
                          "blockade.U_dd")
    p = sec.get("pulse", {})
    amp = p.get("amplitude")
    if p.get("kind", "gaussian") == "gaussian":
        pulse = model.gaussian_pulse(gamma, amp, p.get("width_factor", 1.0), p.get("window_factor", 10.0))
    else:
        pulse = model.flat_top_pulse(gamma, p.get("width_factor", 50.0), amp)
    return model.BlockadeParams(0.0, U, gamma, pulse, fock_cutoff=sec.get("fock_cutoff", 6),
                                coarse_points=sec.get("coarse_points", model.COARSE_POINTS))


def _deltas(sec):
    spec = sec["deltas"]
    if isinstance(spec, list):
        return sorted(float(d) for d in spec)
    scale = sec["gamma"] if spec.get("unit", "meV") == "gamma" else 1.0
    return (np.linspace(spec["start"], spec["stop"], spec["num"]) * scale).tolist()


def run_g2_sweep(cfg, out: Writer, ctx):
    sec = cfg["blockade"]
    base = _blockade_params(sec)
    curve = sweep.detuning_sweep(base, _deltas(sec), jobs=ctx["jobs"])
    out.csv("g2_sweep.csv", ["delta_meV", "g2_0"], zip(curve.deltas, curve.g2))
    rep = {"g2_curve": curve.rows(), "g2_min": curve.g2_min, "delta_at_min": curve.delta_at_min,
           "g2_max": curve.g2_max, "delta_at_max": curve.delta_at_max,
           "gamma": base.gamma_p, "U_dd": base.U_dd, "fock_cutoff": base.fock_cutoff}
    if base.U_dd != 0:
        rep["shape_ok"] = bool(np.sign(curve.delta_at_min) == -np.sign(base.U_dd)
                               and np.sign(curve.delta_at_max) == np.sign(base.U_dd))
        if sec.get("find_dip", False):
            d, g = sweep.find_dip(base)
            rep["dip_delta_meV"], rep["dip_g2_0"] = d, g
    out.json("g2_sweep.json", rep)
    return {"g2_sweep": rep}


def run_calibrate(cfg, out: Writer, ctx):
    sec = cfg["calibration"]
    cal = sweep.calibrate_kappa(sec["gammas"], sec["u_over_gamma"], jobs=ctx["jobs"],
                                fock_cutoff=sec.get("fock_cutoff", 6))
    out.csv("calibration.csv", ["gamma_meV", "u_over_gamma", "delta_min_meV", "depth"], cal.points)
    rep = {"kappa": cal.kappa, "b": cal.b, "residual_rms": cal.residual_rms,
           "condition_number": cal.condition_number, "kappa_spread": cal.kappa_spread,
           "per_gamma": {fmt(g): {"kappa": k, "b": b} for g, (k, b) in cal.per_gamma.items()}}
    out.json("calibration.json", rep)
    return {"calibration": rep}


def run_extract(cfg, out: Writer, ctx):
    sec = cfg["extraction"]
    area = mode_area(sec["w"], sec["gamma"], sec["v_g"])
    if "area" in sec:
        area = type(area)(area.width_w, area.pulse_duration_tau_p, area.group_velocity_vg,
                          sec["area"], 2.0 / sec["area"])
    kappa = sec.get("kappa", extraction.DEFAULT_KAPPA)
    b = sec.get("b", extraction.DEFAULT_B)
    design = sec.get("design", {})
    rep = extraction.build_report(sec["g2_min"], sec["gamma"], area, kappa, b,
                                  w_design=design.get("w"), d_nm=design.get("d_nm"),
                                  chi2=design.get("chi2"), C_ex=design.get("C_ex"))
    d = rep.to_dict()
    d["n_over_n_b"] = rep.n / rep.n_b
    if design:
        _, _, thr = extraction.full_blockade_condition(design["w"], design["d_nm"], design["chi2"],
                                                       design["C_ex"])
        d["chi2_threshold"] = thr
    out.json("extraction.json", d)
    return {"extraction": d}


def _hbt_stream(sec, seed, g2_target=None):
    return hbt.generate_stream(sec["n_pulses"], sec["p_click"],
                               sec["g2_target"] if g2_target is None else g2_target,
                               sec.get("jitter_sigma", 300.0),
                               [tuple(x) for x in sec.get("crosstalk", hbt.CROSSTALK)], seed,
                               sec.get("rep_period", hbt.REP_PERIOD))


def run_hbt_generate(cfg, out: Writer, ctx):
    sec = cfg["hbt"]
    stream = _hbt_stream(sec, ctx["seed"])
    rows = zip(np.array(["A", "B"])[stream.channels].tolist(), stream.times.tolist())
    out.csv("timetags.csv", ["channel", "time_ps"], rows)
    meta = dict(stream.metadata, duration_ps=stream.duration, rep_period_ps=stream.rep_period_T,
                events=len(stream))
    out.json("timetags.json", meta)
    return {"hbt_generate": meta}


def analyze_stream(stream, sec, seed):
    hist = hbt.build_histogram(stream, sec.get("bin_width", hbt.BIN_WIDTH), sec.get("max_order", hbt.MAX_ORDER),
                               sec.get("window_width"))
    est = hbt.estimate_g2(hist, sec.get("mask", "auto"))
    rep = {"C": est.C, "S": est.S, "sigma_S": est.sigma_S, "N_side": est.N_side, "g2_0": est.g2_0,
           "uncertainty": est.uncertainty, "masked_m": {str(k): v for k, v in sorted(est.masked_m.items())},
           "side_integrals": {str(k): v for k, v in sorted(est.side_integrals.items())}}
    n_boot = sec.get("bootstrap", 0)
    if n_boot:
        rep["bootstrap_sigma"] = hbt.bootstrap_uncertainty(
            stream, est, n_boot=n_boot, bin_width=hist.bin_width, max_order=hist.max_order,
            window_width=hist.window_width, seed=seed)
    return hist, rep


def run_hbt_analyze(cfg, out: Writer, ctx):
    sec = cfg["hbt"]
    meta = {"crosstalk": [tuple(x) for x in sec.get("crosstalk", hbt.CROSSTALK)]}
    stream = hbt.read_timetags(sec["timetags"], sec.get("rep_period", hbt.REP_PERIOD), metadata=meta)
    hist, rep = analyze_stream(stream, sec, ctx["seed"])
    out.csv("histogram.csv", ["delay_ps", "counts"], hist.rows())
    out.json("g2_estimate.json", rep)
    return {"hbt_analyze": rep}


def run_reproduce(cfg, out: Writer, ctx):
    """Full chain from device physics to the HBT round trip, with a summary table."""
    rows = []

    def add(name, paper, computed, unit, note=""):
        rows.append((name, paper, computed, unit, note))

    dev = _device(cfg)
    res = run_stark(cfg, out, ctx)["stark"]
    op = min(res, key=lambda r: abs(r["field_F"] - dev.field))
    add("dipole length d", 8.0, op["dipole_length_d"], "nm", f"F={op['field_F']:.3f} V/um")
    add("Stark shift", float("nan"), op["shift_deltaE"], "meV", "")

    wg = run_wg_mode(cfg, out, ctx)["wg_mode"]
    for key, paper in (("5", 4.9), ("0.5", 0.28)):
        if key in wg:
            add(f"mode FWHM ({key} um strip)", paper, wg[key]["fwhm_um"], "um", "")

    disp = run_dispersion(cfg, out, ctx)["dispersion"]
    for f, paper in (("0.68", 25.6), ("0.31", 52.1)):
        if f in disp["operating_points"]:
            add(f"v_g at exciton fraction {f}", paper, disp["operating_points"][f]["v_g_um_per_ps"],
                "um/ps", "")

    cal = run_calibrate(cfg, out, ctx)["calibration"]
    add("kappa", 0.61, cal["kappa"], "", "")
    add("b", -0.56, cal["b"], "", "")

    g2 = run_g2_sweep(cfg, out, ctx)["g2_sweep"]
    dip = g2.get("dip_g2_0", g2["g2_min"])
    add("simulated dip depth 1-g2_min", 0.06, 1 - dip, "", "U/gamma from blockade section")

    ext = run_extract(cfg, out, ctx)["extraction"]
    add("g_dd", 4.0, ext["g_dd"], "meV um^2", "")
    add("R_b", 3.4, ext["R_b"], "um", "")
    add("n", 5e-3, ext["n"], "um^-2", "")
    add("n_b", 0.05, ext["n_b"], "um^-2", "")
    add("n/n_b", 0.1, ext["n_over_n_b"], "", "")
    if "chi2_threshold" in ext:
        add("full-blockade exciton fraction", 0.56, ext["chi2_threshold"], "", "")
    g_dd = ext["g_dd"]
    chi2 = 0.68
    v_op = disp["operating_points"].get("0.68", {}).get("v_g_um_per_ps", 25.6)
    add("C_ex", 50.0, extraction.exciton_constant(g_dd, chi2, v_op, op["dipole_length_d"]), "",
        "from extracted g_dd, computed v_g and d")

    sec = cfg["hbt"]
    hbt_rows = []
    for i, target in enumerate(sec.get("targets", [sec["g2_target"]])):
        stream = _hbt_stream(sec, ctx["seed"] + i, target)
        _, rep = analyze_stream(stream, sec, ctx["seed"] + i)
        hbt_rows.append((target, rep["g2_0"], rep["uncertainty"], rep.get("bootstrap_sigma", float("nan")),
                         len(rep["masked_m"])))
        add(f"HBT round trip g2 (target {fmt(target)})", target, rep["g2_0"], "",
            f"+- {fmt(rep['uncertainty'])}")
    out.csv("hbt_roundtrip.csv", ["g2_target", "g2_0", "uncertainty", "bootstrap_sigma", "masked_peaks"],
            hbt_rows)

    out.csv("summary.csv", ["quantity", "paper", "computed", "unit", "note"], rows)
    out.json("summary.json", {"rows": [dict(zip(("quantity", "paper", "computed", "unit", "note"), r))
                                       for r in rows]})
    return {"summary": rows}


COMMANDS = {
    "stark-scan": (run_stark, "Quantum-well Stark shift and dipole length versus field"),
    "wg-mode": (run_wg_mode, "Lateral waveguide mode profile and FWHM per strip width"),
    "dispersion": (run_dispersion, "Three-branch polariton dispersion, Hopfield weights and v_g"),
    "g2-sweep": (run_g2_sweep, "Pulse-integrated g2(0) versus laser detuning"),
    "calibrate": (run_calibrate, "Fit 1 - g2_min = kappa U/gamma + b (U/gamma)^2"),
    "extract": (run_extract, "Interaction constant, blockade radius and densities from g2_min"),
    "hbt-generate": (run_hbt_generate, "Write a synthetic two-detector timetag stream"),
    "hbt-analyze": (run_hbt_analyze, "Coincidence histogram and side-peak-normalized g2(0)"),
    "reproduce-paper": (run_reproduce, "Run every stage with the built-in operating point and tabulate"),
}


def parse_override(text):
    if "=" not in text:
        raise ConfigError(f"--set expects key=value, got {text!r}", text)
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError("--set with empty key", text)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def build_parser():
    parser = argparse.ArgumentParser(prog="polaritonlab",
                                     description="Polariton blockade modelling and HBT analysis tools.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out-dir", default=".", help="directory for outputs (created if needed)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps (default 1)")
        p.add_argument("--seed", type=int, default=0, help="random seed for synthetic data")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value by dotted path, e.g. blockade.gamma=0.22")
    return parser


def load_config(args):
    base = configs.PAPER if args.command == "reproduce-paper" else {}
    cfg = configs.merge(base, {})
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", "--config") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}", "--config") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config must be a JSON object", "<root>")
        cfg = configs.merge(cfg, loaded)
    for text in args.overrides:
        key, value = parse_override(text)
        configs.set_dotted(cfg, key, value)
    configs.validate(cfg, args.command)
    _device(cfg)  # device keys are checked by DeviceConfig itself
    return cfg


def _file_hashes(cfg):
    out = {}
    path = cfg.get("hbt", {}).get("timetags")
    if path:
        try:
            out[Path(path).name] = hashlib.sha256(Path(path).read_bytes()).hexdigest()
        except OSError as exc:
            raise ConfigError(f"cannot read timetags: {exc}", "hbt.timetags") from exc
    return out


def _error_record(exc, code):
    rec = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, ConfigError) and exc.key:
        rec["key"] = exc.key
    if getattr(exc, "diagnostics", None):
        rec["diagnostics"] = exc.diagnostics
    return rec


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        cfg = load_config(args)
        manifest = RunManifest(args.command, cfg, args.config, list(args.overrides), args.out_dir,
                               args.seed, args.jobs, input_files=_file_hashes(cfg))
    except ConfigError as exc:
        print(json.dumps(_error_record(exc, 2), sort_keys=True), file=sys.stderr)
        return 2
    out = Writer(manifest)
    try:
        COMMANDS[args.command][0](cfg, out, {"jobs": args.jobs, "seed": args.seed})
    except ConfigError as exc:
        print(json.dumps(_error_record(exc, 2), sort_keys=True), file=sys.stderr)
        return 2
    except (PolaritonLabError, ValueError, ArithmeticError, RuntimeError) as exc:
        rec = _error_record(exc, 1)
        atomic_write(Path(args.out_dir) / "error.json", dump_json(rec))
        print(json.dumps(_clean(rec), sort_keys=True), file=sys.stderr)
        return 1
    out.finish()
    return 0


if __name__ == "__main__":
    sys.exit(main())
