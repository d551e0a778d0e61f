"""Command-line front end.

Every subcommand reads an optional JSON config (flags override it), writes
its data files into ``--out`` and finishes with ``manifest.json`` listing
the resolved inputs, library versions, seed and a sha256 digest of every
output. Exit codes: 0 success, 1 usage, 2 config validation, 3 numerical
failure. Failures print one ``trapdamp-error code=... message=...`` line on
stderr.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import platform
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__, acceptance, circuit, inference, io, particle, quantum, spectra
from ._kernels import BACKEND
from .constants import TWO_PI
from .errors import ConfigError, TrapdampError

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

DEFAULTS = {
    "seed": 1,
    "temperature_k": 4.2,
    "circuit": {
        "c_trap_f": 8.2e-12,
        "l1_h": 55e-9,
        "l2_h": 15e-9,
        "r_loss_ohm": circuit.R_LOSS_DEFAULT,
        "c_amp_f": 0.0,
        "c_tuning_f": 22e-12,
        "hemt": {"r_off_ohm": 65e3, "r_on_ohm": 9.6, "c_ds_f": 1.8e-12},
    },
    "trap": {"z0_m": 3.5e-3, "kappa": 0.8},
    "particles": {"n": 1, "charge_c": particle.E_CHARGE, "mass_kg": particle.M_ELECTRON},
    "grid": {"f_start_hz": 150e6, "f_stop_hz": 270e6, "n": 4001},
    "switch": None,
    "dip": {"r_ohm": [36e3, 19e3, 7.6e3], "n_particles": [1], "span_widths": 8.0, "n_points": 4001},
    "s21": {"c_couple_f": 0.2e-12, "c_shunt_f": 100e-12, "z_line_ohm": 50.0},
    "lineshape": {
        "nbar": 10.0,
        "delta_c_hz": 4.0,
        "gamma_hz": [1.0, 0.01],
        "t_total_s": None,
        "n_traj": 2000,
    },
    "fit": {"n_restarts": 3, "synthetic_noise": 0.01, "synthetic_points": 200},
    "scan": {
        "c_min_f": 1e-12,
        "c_max_f": 200e-12,
        "n": 60,
        "r_min_ohm": 60e3,
        "eta_min": 100.0,
        "saturation_fraction": 0.8,
    },
    "selftest": {"n_traj": 10000, "criteria": None},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _report("USAGE", message)
        raise SystemExit(EXIT_USAGE)


def _report(code: str, message: str) -> None:
    print(f"trapdamp-error code={code} message={json.dumps(str(message))}", file=sys.stderr)


# configuration ---------------------------------------------------------------


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config field {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config field {where!r} must be an object")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def load_config(path: str | None) -> dict:
    if path is None:
        return copy.deepcopy(DEFAULTS)
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {p}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {p} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return _merge(DEFAULTS, doc)


def _parse_grid(text: str) -> dict:
    try:
        a, b, n = text.split(",")
        return {"f_start_hz": float(a), "f_stop_hz": float(b), "n": int(n)}
    except ValueError:
        raise ConfigError(f"--grid expects f_start,f_stop,n; got {text!r}") from None


def resolve_config(args) -> dict:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.grid is not None:
        cfg["grid"] = _parse_grid(args.grid)
    if args.switch is not None:
        cfg["switch"] = args.switch
    return cfg


class Model:
    """Typed objects built from a resolved config; building validates every field."""

    def __init__(self, cfg: dict):
        try:
            c = cfg["circuit"]
            h = c["hemt"]
            self.circuit = circuit.CircuitParams(
                c_trap=float(c["c_trap_f"]), l1=float(c["l1_h"]), l2=float(c["l2_h"]),
                r_loss=float(c["r_loss_ohm"]), c_amp=float(c["c_amp_f"]),
                c_tuning=float(c["c_tuning_f"]),
                hemt=circuit.HemtModel(float(h["r_off_ohm"]), float(h["r_on_ohm"]), float(h["c_ds_f"])),
            )
            self.geom = particle.TrapGeometry(float(cfg["trap"]["z0_m"]), float(cfg["trap"]["kappa"]))
            pcfg = cfg["particles"]
            self.ensemble = particle.ParticleEnsemble(
                int(pcfg["n"]), float(pcfg["charge_c"]), float(pcfg["mass_kg"])
            )
            self.temperature = float(cfg["temperature_k"])
            if not self.temperature > 0:
                raise ConfigError("temperature_k must be > 0")
            g = cfg["grid"]
            self.f_start, self.f_stop, self.n_grid = float(g["f_start_hz"]), float(g["f_stop_hz"]), int(g["n"])
            if not (0 < self.f_start < self.f_stop and self.n_grid >= 2):
                raise ConfigError("grid needs 0 < f_start < f_stop and n >= 2")
            self.switch = None if cfg["switch"] is None else circuit.SwitchState.parse(cfg["switch"])
            self.seed = int(cfg["seed"])
            if self.seed < 0:
                raise ConfigError("seed must be >= 0")
            ls = cfg["lineshape"]
            if not (float(ls["nbar"]) >= 0 and float(ls["delta_c_hz"]) > 0 and int(ls["n_traj"]) >= 1):
                raise ConfigError("lineshape needs nbar >= 0, delta_c_hz > 0, n_traj >= 1")
            if any(float(x) < 0 for x in ls["gamma_hz"]):
                raise ConfigError("lineshape gamma_hz values must be >= 0")
            sc = cfg["scan"]
            self.constraints = inference.DesignConstraints(
                float(sc["r_min_ohm"]), float(sc["eta_min"]), float(sc["saturation_fraction"])
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, TrapdampError):
                raise ConfigError(str(exc)) from None
            raise ConfigError(f"invalid config: {exc}") from None

    def freq(self) -> np.ndarray:
        return np.linspace(self.f_start, self.f_stop, self.n_grid)


# commands ------------------------------------------------------------------------


def _states(model: Model):
    return [model.switch] if model.switch is not None else [circuit.SwitchState.OFF, circuit.SwitchState.ON]


def cmd_impedance(args, cfg, model, out: Path) -> list[Path]:
    files = []
    f = model.freq()
    for state in _states(model):
        trace = circuit.ImpedanceTrace(f, circuit.impedance(model.circuit, state, f))
        files.append(io.write_impedance(out / f"impedance_{state.value}.csv", trace))
        if state is circuit.SwitchState.OFF:
            summary = circuit.characterize_resonance(trace, l_total=None)
            files.append(io.write_json(out / "resonance_off.json", summary.to_json()))
    return files


def _tag(x: float) -> str:
    return f"{x:g}".replace(".", "p").replace("+", "")


def cmd_dip(args, cfg, model, out: Path) -> list[Path]:
    d = cfg["dip"]
    f_z = circuit.operating_frequency(model.circuit)
    loads = [("r" + _tag(float(r)), float(r)) for r in d["r_ohm"]]
    if not loads:
        loads = [("tank", circuit.impedance_func(model.circuit, "off"))]
    files, summary = [], []
    for n in d["n_particles"]:
        ens = replace(model.ensemble, n=int(n))
        for tag, z in loads:
            r_fz = complex(z(f_z)).real if callable(z) else z
            gamma = particle.damping_rate(model.geom, replace(ens, n=1), r_fz)
            width = int(n) * gamma / TWO_PI
            span = float(d["span_widths"]) * width
            f = np.linspace(f_z - span, f_z + span, int(d["n_points"]))
            spec = spectra.dip_spectrum(z, model.geom, ens, f_z, model.temperature, f)
            files.append(io.write_spectrum(out / f"dip_n{int(n)}_{tag}.csv", spec))
            summary.append({"n": int(n), "load": tag, "r_ohm": r_fz, "f_z_hz": f_z,
                            "gamma_z_per_s": gamma, "expected_fwhm_hz": width,
                            "fwhm_hz": spectra.dip_fwhm(spec)})
    files.append(io.write_json(out / "dip_summary.json", summary))
    return files


def _source(cfg) -> spectra.SourceImpedance:
    s = cfg["s21"]
    return spectra.divider_source_impedance(float(s["c_couple_f"]), float(s["c_shunt_f"]), float(s["z_line_ohm"]))


def cmd_s21(args, cfg, model, out: Path) -> list[Path]:
    if args.input:
        trace = io.read_impedance(args.input)
    else:
        state = model.switch or circuit.SwitchState.OFF
        f = model.freq()
        trace = circuit.ImpedanceTrace(f, circuit.impedance(model.circuit, state, f))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        s21 = spectra.shunt_through_s21(trace, _source(cfg))
    for w in caught:
        print(f"trapdamp-warning {w.message}", file=sys.stderr)
    return [io.write_transmission(out / "s21.csv", s21)]


def cmd_invert(args, cfg, model, out: Path) -> list[Path]:
    if not args.input:
        raise ConfigError("invert needs --input pointing at a transmission CSV")
    trace = io.read_transmission(args.input)
    z = spectra.impedance_from_s21(trace, _source(cfg))
    return [io.write_impedance(out / "impedance_inverted.csv", z)]


def cmd_lineshape(args, cfg, model, out: Path) -> list[Path]:
    ls = cfg["lineshape"]
    nbar, dc, n_traj = float(ls["nbar"]), float(ls["delta_c_hz"]), int(ls["n_traj"])
    files, summary = [], []
    for k, g_hz in enumerate(ls["gamma_hz"]):
        gamma = TWO_PI * float(g_hz)
        dispersive = quantum.is_dispersive(nbar, gamma, dc)
        t_total = ls["t_total_s"] or (32.0 if dispersive else 8.0)
        mc = quantum.lineshape_monte_carlo(nbar, dc, gamma, float(t_total), n_traj, model.seed + k)
        tag = _tag(float(g_hz))
        files.append(io.write_lineshape(out / f"lineshape_mc_gamma{tag}hz.csv", mc))
        entry = {"gamma_hz": float(g_hz), "t_total_s": float(t_total), "n_traj": n_traj,
                 "seed": model.seed + k, "dispersive": dispersive,
                 "dispersive_ratio": quantum.dispersive_ratio(nbar, gamma, dc),
                 "mean_offset_hz": mc.mean_offset()}
        if dispersive:
            disc = quantum.lineshape_discrete(nbar, dc, gamma, mc.offset)
            files.append(io.write_lineshape(out / f"lineshape_discrete_gamma{tag}hz.csv", disc))
            entry["l1_mc_vs_discrete"] = mc.l1_distance(disc)
        summary.append(entry)
    files.append(io.write_json(out / "lineshape_summary.json", summary))
    return files


def cmd_fit_hemt(args, cfg, model, out: Path) -> list[Path]:
    fc = cfg["fit"]
    files = []
    if args.input:
        data = io.read_measurements(args.input)
    else:
        grid = np.geomspace(1e-12, 200e-12, int(fc["synthetic_points"]))
        data = inference.synthetic_measurements(model.circuit, grid, float(fc["synthetic_noise"]), model.seed)
        files.append(io.write_measurements(out / "measurements_synthetic.csv", data))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fit = inference.fit_hemt_model(data, model.circuit, n_restarts=int(fc["n_restarts"]), seed=model.seed)
    files.append(io.write_json(out / "fit_hemt.json", fit.to_json()))
    return files


def cmd_scan(args, cfg, model, out: Path) -> list[Path]:
    sc = cfg["scan"]
    grid = np.geomspace(float(sc["c_min_f"]), float(sc["c_max_f"]), int(sc["n"]))
    scan = inference.scan_ctuning(model.circuit, grid, model.constraints)
    summary = {"recommended_c_tuning_f": scan.recommended, "satisfiable": scan.satisfiable,
               "pareto_best_c_tuning_f": scan.pareto_best,
               "constraints": {"r_min_ohm": model.constraints.r_min, "eta_min": model.constraints.eta_min,
                               "saturation_fraction": model.constraints.saturation_fraction}}
    return [io.write_scan(out / "scan.csv", scan), io.write_json(out / "scan_summary.json", summary)]


def cmd_selftest(args, cfg, model, out: Path) -> list[Path]:
    st = cfg["selftest"]
    n_traj = int(args.n_traj or st["n_traj"])
    select = st["criteria"]
    results = []
    numbers = sorted(acceptance.CHECKS) if select is None else [int(x) for x in select]
    for number in numbers:
        kwargs = {"seed": model.seed, "n_traj": n_traj} if number == 10 else {}
        res = acceptance.run_criterion(number, **kwargs)
        print(res.line(), flush=True)
        results.append(res)
    report = {"seed": model.seed, "n_traj": n_traj, "all_passed": all(r.passed for r in results),
              "criteria": [r.to_json() for r in results]}
    args._selftest_failed = not report["all_passed"]
    return [io.write_json(out / "selftest_report.json", report)]


COMMANDS = {
    "impedance": (cmd_impedance, "off/on tank impedance traces and the off-state resonance summary"),
    "dip": (cmd_dip, "particle dip noise spectra for a list of loads and particle numbers"),
    "s21": (cmd_s21, "shunt-through transmission of the tank (or of --input impedance CSV)"),
    "invert": (cmd_invert, "impedance from a shunt-through transmission CSV (--input)"),
    "lineshape": (cmd_lineshape, "cyclotron lineshapes (Monte Carlo and resolved-line model)"),
    "fit-hemt": (cmd_fit_hemt, "fit the switch model to (c_tuning, R, eta) data (--input or synthetic)"),
    "scan-ctuning": (cmd_scan, "tabulate R and eta over c_tuning and recommend a value"),
    "selftest": (cmd_selftest, "run the acceptance suite"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config document; flags override its fields")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument("--grid", help="frequency grid f_start,f_stop,n in Hz")
    common.add_argument("--switch", choices=["on", "off"], help="restrict to one switch state")
    common.add_argument("--input", help="input data file for s21, invert and fit-hemt")
    parser = _Parser(prog="trapdamp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"trapdamp {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name == "selftest":
            p.add_argument("--n-traj", type=int, help="Monte Carlo trajectories for the lineshape check")
    return parser


def _manifest(command: str, cfg: dict, out: Path, files: list[Path]) -> dict:
    return {
        "command": command,
        "inputs": cfg,
        "seed": cfg["seed"],
        "versions": {
            "trapdamp": __version__,
            "kernel_backend": BACKEND,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "outputs": [
            {"file": p.relative_to(out).as_posix(), "sha256": io.sha256_file(p), "bytes": p.stat().st_size}
            for p in files
        ],
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ConfigError("config values must be finite")
    return obj


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    func, _ = COMMANDS[args.command]
    try:
        cfg = _jsonable(resolve_config(args))
        model = Model(cfg)
        if args.input and not Path(args.input).is_file():
            raise ConfigError(f"input file not found: {args.input}")
        out = Path(args.out)
        files = func(args, cfg, model, out)
        files.append(io.write_json(out / "manifest.json", _manifest(args.command, cfg, out, files)))
    except ConfigError as exc:
        _report(exc.code, exc)
        return EXIT_CONFIG
    except TrapdampError as exc:
        _report(exc.code, exc)
        return EXIT_NUMERICAL
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        _report("NUMERICAL", exc)
        return EXIT_NUMERICAL
    if getattr(args, "_selftest_failed", False):
        _report("SELFTEST_FAILED", "one or more acceptance criteria failed; see selftest_report.json")
        return EXIT_NUMERICAL
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
