"""Command-line scenario runner.

Four subcommands mirror the toolkit's four concerns: ``run`` executes one
scenario, ``sweep`` repeats it over a parameter grid, ``compare-pid``
checks the clamp-mode controller against the classical PID oracle on the
same error signal, and ``tune`` runs with precision learning enabled and
reports the gain trajectory.

Every invocation writes a normalised-config.json echoing all effective
values, plus a manifest.json with a sha256 checksum per emitted file.  All
numbers are serialised with 17 significant digits, so outputs are
bit-reproducible given (config, seed, build).

Exit codes: 0 success, 1 tolerance exceeded (compare-pid), 2 bad
configuration or usage, 3 simulation divergence.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import ConfigError, dump_config, parse_config
from .controller import (IntegrationDivergedError, PidState,
                         gains_from_precisions, pid_step)
from .plant import PlantDivergedError
from .simloop import (Metrics, ScenarioConfig, Trajectory, UnknownParameterError,
                      compute_metrics, run_closed_loop, set_param, sweep)

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


@dataclass
class RunManifest:
    """What was run and what it produced."""

    config_path: str
    out_dir: str
    overrides: list[str]
    seed_override: int | None
    emitted: list[tuple[str, str, str]]     # (name, kind, sha256)

    def write(self, out_dir: Path):
        doc = {
            "config": self.config_path,
            "out_dir": self.out_dir,
            "overrides": self.overrides,
            "seed_override": self.seed_override,
            "files": [{"name": n, "kind": k, "sha256": c} for n, k, c in self.emitted],
        }
        (out_dir / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _emit(manifest: RunManifest, out_dir: Path, name: str, kind: str, text: str):
    path = out_dir / name
    path.write_text(text)
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    manifest.emitted.append((name, kind, digest))


def _json_value(x):
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


def metrics_to_json(m: Metrics) -> str:
    doc = {k: _json_value(v) for k, v in m.as_dict().items()}
    return json.dumps(doc, indent=2) + "\n"


def trace_csv(traj: Trajectory) -> str:
    """Serialise a trajectory with the stable column schema."""
    p = traj.p
    header = (["t", "y", "x_plant", "u", "v", "d"]
              + [f"mu_x{i}" for i in range(p)]
              + [f"eps_z{i}" for i in range(p)]
              + [f"eps_w{i}" for i in range(p - 1)]
              + [f"pi_z{i}" for i in range(p)]
              + [f"pi_w{i}" for i in range(p - 1)]
              + ["F_total", "F_obs", "F_dyn", "F_hyper"])
    lines = [",".join(header)]
    f_hyper = traj.f_hyper_z + traj.f_hyper_w
    for k in range(traj.rows):
        cells = [traj.t[k], traj.y[k], traj.x_plant[k], traj.u[k], traj.v[k], traj.d[k]]
        cells += list(traj.mu_x[k]) + list(traj.eps_z[k]) + list(traj.eps_w[k])
        cells += list(traj.pi_z[k]) + list(traj.pi_w[k])
        cells += [traj.f_total[k], traj.f_obs[k], traj.f_dyn[k], f_hyper[k]]
        lines.append(",".join(_fmt(c) for c in cells))
    return "\n".join(lines) + "\n"


def _load_config(args) -> ScenarioConfig:
    text = Path(args.config).read_text()
    cfg = parse_config(text)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    for override in args.set or []:
        if "=" not in override:
            raise ConfigError(f"--set expects path=value, got '{override}'")
        path, _, raw = override.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            raise ConfigError(f"--set {path}: cannot parse value '{raw}'") from None
        cfg = set_param(cfg, path, value)
    return cfg


def _prepare_out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args) -> RunManifest:
    return RunManifest(config_path=str(args.config), out_dir=str(args.out),
                       overrides=list(args.set or []), seed_override=args.seed, emitted=[])


def cmd_run(args) -> int:
    cfg = _load_config(args)
    out = _prepare_out(args)
    manifest = _manifest(args)
    _emit(manifest, out, "normalised-config.json", "config", dump_config(cfg) + "\n")
    traj = run_closed_loop(cfg)
    metrics = compute_metrics(traj)
    _emit(manifest, out, "trace.csv", "trace", trace_csv(traj))
    _emit(manifest, out, "metrics.json", "metrics", metrics_to_json(metrics))
    manifest.write(out)
    print(f"run complete: {traj.rows} rows, iae={metrics.iae:.6g}, ie={metrics.ie:.6g}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = _prepare_out(args)
    manifest = _manifest(args)
    _emit(manifest, out, "normalised-config.json", "config", dump_config(cfg) + "\n")
    values = [float(v) for v in args.values.split(",") if v != ""]
    results = sweep(cfg, args.param, values)
    fields = ["iae", "ie", "overshoot_pct", "rise_time_10_90",
              "settling_time_2pct", "steady_state_error", "peak_u"]
    lines = [",".join(["value"] + fields)]
    for value, metrics in results:
        md = metrics.as_dict()
        lines.append(",".join([_fmt(value)] + [_fmt(md[f]) for f in fields]))
    _emit(manifest, out, "sweep.csv", "sweep", "\n".join(lines) + "\n")
    manifest.write(out)
    print(f"sweep complete: {len(results)} runs over {args.param}")
    return EXIT_OK


def cmd_compare_pid(args) -> int:
    cfg = _load_config(args)
    cfg = replace(cfg, record_stride=1)     # the oracle consumes every tick
    if not cfg.controller.clamp_expectations:
        cfg = replace(cfg, controller=replace(cfg.controller, clamp_expectations=True))
    out = _prepare_out(args)
    manifest = _manifest(args)
    _emit(manifest, out, "normalised-config.json", "config", dump_config(cfg) + "\n")
    traj = run_closed_loop(cfg)
    u_pid = pid_twin_actions(cfg, traj)
    deviation = float(np.max(np.abs(traj.u - u_pid)))

    lines = ["t,u_ai,u_pid"]
    for k in range(traj.rows):
        lines.append(f"{_fmt(traj.t[k])},{_fmt(traj.u[k])},{_fmt(u_pid[k])}")
    _emit(manifest, out, "compare.csv", "trace", "\n".join(lines) + "\n")
    report = {"max_abs_deviation": deviation, "tolerance": args.tolerance,
              "passed": deviation <= args.tolerance}
    _emit(manifest, out, "compare.json", "report", json.dumps(report, indent=2) + "\n")
    manifest.write(out)
    print(f"max |u_ai - u_pid| = {deviation:.6g} (tolerance {args.tolerance:g})")
    return EXIT_OK if deviation <= args.tolerance else EXIT_TOLERANCE


def pid_twin_actions(cfg: ScenarioConfig, traj: Trajectory,
                     n_filt: float | None = 10.0) -> np.ndarray:
    """Classical PID run on the error signal of a recorded trajectory."""
    ki, kp, kd = gains_from_precisions(cfg.precisions, cfg.controller.kappa_a)
    ps = PidState(kp=kp, ki=ki, kd=kd, n_filt=n_filt, u_max=cfg.controller.u_max)
    dt = cfg.dt * cfg.record_stride
    out = np.empty(traj.rows)
    for k in range(traj.rows):
        error = traj.v[k] - traj.y[k]
        ps, out[k] = pid_step(ps, error, dt)
    return out


def cmd_tune(args) -> int:
    cfg = _load_config(args)
    if not cfg.controller.learn_precisions:
        cfg = replace(cfg, controller=replace(cfg.controller, learn_precisions=True))
    out = _prepare_out(args)
    manifest = _manifest(args)
    _emit(manifest, out, "normalised-config.json", "config", dump_config(cfg) + "\n")
    traj = run_closed_loop(cfg)
    kappa_a = cfg.controller.kappa_a
    p = traj.p
    header = ["t", "ki", "kp", "kd"] + [f"pi_w{i}" for i in range(p - 1)]
    lines = [",".join(header)]
    for k in range(traj.rows):
        pi_z = traj.pi_z[k]
        gains = [kappa_a * pi_z[i] if i < p else 0.0 for i in range(3)]
        cells = [traj.t[k]] + gains + list(traj.pi_w[k])
        lines.append(",".join(_fmt(c) for c in cells))
    _emit(manifest, out, "gains.csv", "gains", "\n".join(lines) + "\n")

    t_end = traj.t[-1]
    first = compute_metrics(traj, window=(traj.t[0], traj.t[0] + 0.2 * t_end))
    last = compute_metrics(traj, window=(0.8 * t_end, t_end))
    report = {
        "iae_first_20pct": first.iae,
        "iae_last_20pct": last.iae,
        "final_gains": {"ki": kappa_a * traj.pi_z[-1][0],
                        "kp": kappa_a * traj.pi_z[-1][1] if p > 1 else 0.0,
                        "kd": kappa_a * traj.pi_z[-1][2] if p > 2 else 0.0},
        "final_pi_w": list(traj.pi_w[-1]),
    }
    _emit(manifest, out, "tune-report.json", "report", json.dumps(report, indent=2) + "\n")
    manifest.write(out)
    print(f"tune complete: iae {first.iae:.6g} -> {last.iae:.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fepid",
        description="Closed-loop control scenarios driven by free-energy descent.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="scenario JSON document")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override sim.seed")
        sp.add_argument("--set", action="append", metavar="PATH=VALUE",
                        help="override one config field (repeatable)")

    sp = sub.add_parser("run", help="run one scenario, write trace and metrics")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="run a scenario over a parameter grid")
    common(sp)
    sp.add_argument("--param", required=True, help="parameter path, e.g. precisions.pi_w.0")
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("compare-pid",
                        help="clamp-mode controller vs classical PID on one error signal")
    common(sp)
    sp.add_argument("--tolerance", type=float, default=1e-2,
                    help="max allowed action deviation (default 1e-2)")
    sp.set_defaults(func=cmd_compare_pid)

    sp = sub.add_parser("tune", help="run with precision learning, report gain trajectory")
    common(sp)
    sp.set_defaults(func=cmd_tune)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UnknownParameterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationDivergedError, PlantDivergedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
