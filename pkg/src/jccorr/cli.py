"""Command-line front end: presets, configs, artifacts and static plots.

Every artifact is written with a JSON sidecar carrying the resolved
configuration (parameters, seed, dt, code version) so the run can be
repeated bit-exactly.  Exit codes: 0 success, 2 configuration error,
3 numerical failure, 4 statistical-precondition failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import (DegenerateSteadyState, IntegrationFault,
                         NormalizationUndefined, ZeroStarts)
from .hilbert import build_operators, quadrature_operator
from .liouville import (LiouvillePropagator, correlation_g2, correlation_h,
                        partial_trace_atom)
from .params import SystemParams
from .presets import PRESET_NAMES, preset as load_preset
from .series import symmetric_tau_grid
from .trajectories import (APD, DetuningScan, FixedDetuning, run_ensemble,
                           run_trajectory)
from .two_state import classical_bounds_report
from .wigner import count_local_maxima, wigner
from .correlator import accumulate_starts

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_STATISTICAL = 4

MODES = ("steady", "correlate", "g2", "trajectory", "ensemble", "scan",
         "wigner", "bounds")

_CONFIG_KEYS = {"mode", "params", "protocol", "tau_max", "dtau", "dt", "seed",
                "n_traj", "decimation", "theta", "delta_omega", "window",
                "burn_in", "grid"}


class ConfigError(Exception):
    pass


def _parse_angle(text: str) -> float:
    """Angles like '0.5', 'pi/2', '3pi/4'."""
    s = text.strip().lower().replace(" ", "")
    if "pi" in s:
        head, _, tail = s.partition("pi")
        num = float(head) if head not in ("", "+", "-") else float(head + "1")
        den = float(tail[1:]) if tail.startswith("/") else 1.0
        return num * math.pi / den
    return float(s)


def _load_config(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return data


def _resolve(args) -> dict:
    """Merge preset < config file < command-line flags into one run config."""
    cfg: dict = {}
    if args.preset:
        try:
            pre = load_preset(args.preset)
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
        cfg["params"] = pre.params.to_dict()
        cfg["tau_max"] = pre.tau_max
        cfg["dt"] = pre.dt
        if pre.protocol is not None:
            cfg["protocol"] = pre.protocol.to_dict()
    if args.config:
        file_cfg = _load_config(args.config)
        params = dict(cfg.get("params", {}))
        params.update(file_cfg.pop("params", {}))
        cfg.update(file_cfg)
        if params:
            cfg["params"] = params
    for key in ("seed", "dt", "n_traj", "tau_max"):
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            cfg[key] = val
    params = dict(cfg.get("params", {}))
    if args.theta is not None:
        params["theta"] = _parse_angle(args.theta)
    if args.delta_omega is not None:
        g_val = params.get("g", 1.0)
        text = args.delta_omega.strip().lower()
        params["delta_omega"] = g_val * float(text[:-1] or "1") if text.endswith("g") \
            else float(text)
    if "g" not in params:
        raise ConfigError("no parameters given: use --preset or a config file "
                          "with a 'params' block including 'g'")
    try:
        cfg["params"] = SystemParams.from_dict(params).to_dict()
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid parameters: {exc}") from exc
    cfg.setdefault("seed", 0)
    cfg.setdefault("dt", 1e-4)
    cfg.setdefault("tau_max", 4.0)
    cfg.setdefault("n_traj", 1)
    cfg.setdefault("decimation", 10)
    return cfg


def _sidecar(cfg: dict, mode: str, extra: dict | None = None) -> dict:
    doc = {"version": __version__, "mode": mode, "config": cfg}
    if extra:
        doc.update(extra)
    return doc


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default))


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _plot_series(series, path: Path) -> None:
    import matplotlib
    matplotlib.use("svg")
    matplotlib.rcParams["svg.hashsalt"] = "jccorr"
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(6, 4))
    if series.kind == "h":
        i0 = int(np.argmin(np.abs(series.tau_grid)))
        c = min(abs(float(series.values[i0]) - 1.0), 1.0)
        ax.axhspan(1.0 - c, 1.0 + c, color="0.85", zorder=0,
                   label="classically allowed")
        ax.axvline(0.0, color="0.6", lw=0.8)
    ax.plot(series.tau_grid, series.values, lw=1.0)
    ax.set_xlabel(r"$\kappa\tau$")
    label = r"$h_\theta(\tau)$" if series.kind == "h" else r"$g^{(2)}(\tau)$"
    ax.set_ylabel(label)
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


def _plot_record(record, path: Path) -> None:
    import matplotlib
    matplotlib.use("svg")
    matplotlib.rcParams["svg.hashsalt"] = "jccorr"
    import matplotlib.pyplot as plt
    fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    axes[0].plot(record.times, record.n_cond, lw=0.6)
    axes[0].set_ylabel(r"$\langle a^\dagger a\rangle_{\rm REC}$")
    axes[1].plot(record.times, record.a_cond, lw=0.6)
    axes[1].set_ylabel(r"$\langle A_\theta\rangle_{\rm REC}$")
    axes[1].set_xlabel(r"$\kappa t$")
    top = axes[0].get_ylim()[1]
    for ev in record.events:
        if ev.kind == APD:
            axes[0].plot([ev.time, ev.time], [0.92 * top, top], color="g", lw=0.8)
        else:
            axes[0].plot(ev.time, 0.96 * top, marker="D", color="r", ms=3,
                         ls="none")
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


def _plot_wigner(grid, path: Path) -> None:
    import matplotlib
    matplotlib.use("svg")
    matplotlib.rcParams["svg.hashsalt"] = "jccorr"
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(5, 4.2))
    cs = ax.contourf(grid.x, grid.y, grid.values, levels=30, cmap="viridis")
    fig.colorbar(cs, ax=ax, label=r"$W(x+iy)$")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


def _protocol_from_cfg(cfg: dict, params: SystemParams):
    proto = cfg.get("protocol")
    if proto is None:
        return FixedDetuning(delta_omega=params.delta_omega,
                             duration=cfg.get("window", 20.0))
    if proto.get("type") == "scan":
        return DetuningScan(proto["start"], proto["stop"], proto["duration"])
    return FixedDetuning(proto["delta_omega"], proto["duration"])


def run(cfg: dict, mode: str, out_dir: Path, fmt: str, plot: bool) -> int:
    params = SystemParams.from_dict(cfg["params"])
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = out_dir / mode

    if mode == "steady":
        prop = LiouvillePropagator(params)
        rho = prop.steady_state(check_unique=True)
        ops = build_operators(params)
        a_ss = complex(np.trace(ops["a"] @ rho))
        n_ss = float(np.trace(ops["a_dagger"] @ ops["a"] @ rho).real)
        amp = float(np.trace(quadrature_operator(params.theta, params) @ rho).real)
        doc = _sidecar(cfg, mode, {"n_ss": n_ss, "a_ss": a_ss,
                                   "A_theta_ss": amp})
        _write_json(stem.with_suffix(".json"), doc)
        print(f"<a^dag a>_ss = {n_ss:.6f}  <A_theta>_ss = {amp:.6f}")
        return EXIT_OK

    if mode in ("correlate", "g2", "bounds"):
        tau = symmetric_tau_grid(cfg["tau_max"], cfg.get("dtau", 0.005))
        prop = LiouvillePropagator(params)
        if mode == "g2":
            series = correlation_g2(tau, params, propagator=prop)
        else:
            series = correlation_h(params.theta, tau, params, propagator=prop)
        if mode == "bounds":
            report = classical_bounds_report(series)
            _write_json(stem.with_suffix(".json"),
                        _sidecar(cfg, mode, {"report": json.loads(report.to_json())}))
            print(f"h(0) = {report.h0:.4f}  zero-delay bound violated: "
                  f"{report.bound_a_violated}  excursion bound violated: "
                  f"{report.bound_b_violated}")
            return EXIT_OK
        if fmt == "csv":
            series.to_csv(stem.with_suffix(".csv"))
        else:
            series.to_json(stem.with_suffix(".series.json"))
        _write_json(out_dir / f"{mode}_sidecar.json", _sidecar(cfg, mode))
        if plot:
            _plot_series(series, stem.with_suffix(".svg"))
        print(f"{mode}: {tau.size} delays written to {stem}.{fmt}")
        return EXIT_OK

    if mode in ("trajectory", "scan"):
        protocol = _protocol_from_cfg(cfg, params)
        if mode == "scan" and not isinstance(protocol, DetuningScan):
            raise ConfigError("scan mode requires a protocol of type 'scan'")
        record = run_trajectory(params, protocol, cfg["dt"], cfg["seed"],
                                decimation=cfg["decimation"])
        record.save(stem)
        _write_json(out_dir / f"{mode}_sidecar.json", _sidecar(
            cfg, mode, {"n_events": len(record.events)}))
        if plot:
            _plot_record(record, stem.with_suffix(".svg"))
        print(f"{mode}: {record.times.size} samples, {len(record.events)} "
              f"collapses -> {stem}.npz")
        return EXIT_OK

    if mode == "ensemble":
        protocol = _protocol_from_cfg(cfg, params)
        if not isinstance(protocol, FixedDetuning):
            raise ConfigError("ensemble start accumulation requires a fixed "
                              "detuning")
        result = run_ensemble(params, protocol, cfg["dt"], cfg["n_traj"],
                              cfg["seed"], decimation=cfg["decimation"],
                              record=("photocurrent", "a"))
        prop = LiouvillePropagator(params)
        rho = prop.steady_state()
        ops = build_operators(params)
        amp_ss = float((np.trace(ops["a"] @ rho)
                        * np.exp(-1j * params.theta)).real)
        series = accumulate_starts(result, params, cfg["tau_max"], amp_ss,
                                   burn_in=cfg.get("burn_in", 10.0))
        if fmt == "csv":
            series.to_csv(stem.with_suffix(".csv"))
        else:
            series.to_json(stem.with_suffix(".series.json"))
        _write_json(out_dir / "ensemble_sidecar.json", _sidecar(
            cfg, mode, {"n_starts": series.meta["n_starts"],
                        "noise_floor": series.meta["noise_floor"]}))
        if plot:
            _plot_series(series, stem.with_suffix(".svg"))
        print(f"ensemble: N_s = {series.meta['n_starts']}, noise floor "
              f"{series.meta['noise_floor']:.3f}")
        return EXIT_OK

    if mode == "wigner":
        prop = LiouvillePropagator(params)
        rho = prop.steady_state()
        lim = cfg.get("grid", 2.0)
        x = np.linspace(-lim, lim, 61)
        grid = wigner(partial_trace_atom(rho, params), x, x)
        grid.meta["local_maxima"] = count_local_maxima(grid)
        if fmt == "csv":
            grid.to_csv(stem.with_suffix(".csv"))
        else:
            grid.to_json(stem.with_suffix(".grid.json"))
        _write_json(out_dir / "wigner_sidecar.json", _sidecar(
            cfg, mode, {"captured_mass": grid.captured_mass,
                        "local_maxima": grid.meta["local_maxima"]}))
        if plot:
            _plot_wigner(grid, stem.with_suffix(".svg"))
        print(f"wigner: mass {grid.captured_mass:.4f}, "
              f"{grid.meta['local_maxima']} local maxima")
        return EXIT_OK

    raise ConfigError(f"unknown mode {mode!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jccorr",
        description="Driven dissipative Jaynes-Cummings oscillator: "
                    "correlations by quantum regression and by wave-particle "
                    "correlator trajectories.")
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--preset", choices=PRESET_NAMES)
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--theta", help="LO phase, e.g. 'pi/2' or 0.785")
    parser.add_argument("--delta-omega", dest="delta_omega",
                        help="drive detuning; append 'g' for units of g")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--dt", type=float)
    parser.add_argument("--tau-max", dest="tau_max", type=float)
    parser.add_argument("--n-traj", dest="n_traj", type=int)
    parser.add_argument("--out-dir", default=".")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--plot", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        return run(cfg, args.mode, Path(args.out_dir), args.format, args.plot)
    except (ConfigError, KeyError) as exc:
        print(json.dumps({"error": "config", "detail": str(exc)}),
              file=sys.stderr)
        return EXIT_CONFIG
    except (NormalizationUndefined, DegenerateSteadyState,
            IntegrationFault) as exc:
        print(json.dumps({"error": "numerical", "detail": str(exc)}),
              file=sys.stderr)
        return EXIT_NUMERICAL
    except ZeroStarts as exc:
        print(json.dumps({"error": "statistical", "detail": str(exc)}),
              file=sys.stderr)
        return EXIT_STATISTICAL


if __name__ == "__main__":
    sys.exit(main())
