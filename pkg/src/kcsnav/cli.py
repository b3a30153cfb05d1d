"""Command line entry point: ``kcsnav {train,evaluate,compare,simulate,plot}``.

Exit status
    0  success
    1  runtime failure (numerical blow-up, I/O error)
    2  usage error (unknown subcommand, bad flags)
    3  invalid config or coefficient file
    4  missing or unreadable checkpoint
    5  training diverged (logs are kept; the final checkpoint only if finite)
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import ConfigError, RunConfig, config_from_dict, load_config
from .ddpg import DdpgAgent, TrainingDiverged, train
from .dynamics import ControlInput, IntegrationError, VesselState, rk4_step
from .env import WaypointEnv
from .plotting import plot_learning_curves, plot_time_series, plot_trajectories
from .records import (
    TrainingLogWriter, metrics_row, metrics_summary, read_trajectory, read_training_log,
    read_waypoints, write_manifest, write_table, write_trace_rows, write_trajectory,
    write_waypoints,
)
from .scenarios import (
    DdpgController, PdIlosController, compare, format_comparison,
    run_scenario, scenarios_by_name,
)
from .ship import CoefficientFileError, load_ship_model
from .wind import WindDisturbance, load_wind_coeffs

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_CHECKPOINT = 4
EXIT_DIVERGED = 5

log = logging.getLogger("kcsnav")


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _config(args) -> RunConfig:
    try:
        cfg = load_config(args.config) if args.config else config_from_dict({})
    except ConfigError as exc:
        raise _Fail(EXIT_CONFIG, str(exc)) from None
    return cfg


def _out_dir(args, cfg: RunConfig) -> Path:
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _environment(cfg: RunConfig) -> WaypointEnv:
    try:
        ship = load_ship_model(cfg.ship)
        coeffs = load_wind_coeffs(cfg.wind_coeffs) if cfg.wind.enabled else None
    except (OSError, CoefficientFileError, ValueError) as exc:
        raise _Fail(EXIT_CONFIG, f"cannot load coefficients: {exc}") from None
    return WaypointEnv(cfg.episode, ship, cfg.wind.wind_field(), coeffs)


def _load_agent(path) -> DdpgAgent:
    if not path:
        raise _Fail(EXIT_CHECKPOINT, "a DDPG controller needs a checkpoint (controller.checkpoint or --checkpoint)")
    if not Path(path).is_file():
        raise _Fail(EXIT_CHECKPOINT, f"checkpoint not found: {path}")
    try:
        agent, _ = load_checkpoint(path)
    except CheckpointError as exc:
        raise _Fail(EXIT_CHECKPOINT, str(exc)) from None
    return agent


def _controller(kind: str, cfg: RunConfig, checkpoint):
    if kind == "ddpg":
        return DdpgController(_load_agent(checkpoint or cfg.controller.checkpoint))
    c = cfg.controller
    return PdIlosController(c.gains, c.Delta, c.k)


def _run_all(cfg: RunConfig, env: WaypointEnv, controllers: list, out: Path):
    """Run every configured scenario with every controller; returns (records, metric rows)."""
    traj_dir = out / "trajectories"
    traj_dir.mkdir(exist_ok=True)
    wind = env.wind
    results = []
    outputs = []
    for sc in scenarios_by_name(cfg.scenarios):
        sc = sc.with_wind(wind)
        wp_path = write_waypoints(sc.path.waypoints, traj_dir / f"{sc.name}_waypoints.csv")
        outputs.append(str(wp_path.relative_to(out)))
        for ctrl in controllers:
            rec, m = run_scenario(sc, ctrl, env.ship, env.config, cfg.seed)
            p = write_trajectory(rec, traj_dir / f"{sc.name}_{ctrl.kind}.csv")
            outputs.append(str(p.relative_to(out)))
            results.append((sc, rec, m))
            log.info("%s/%s: %s, %d/%d waypoints, RMS d_c %.4f L", sc.name, ctrl.kind,
                     rec.outcome, m.waypoints_reached, m.waypoints_total, m.rms_cross_track)
    return results, outputs


# -- subcommands ----------------------------------------------------------

def cmd_train(args) -> int:
    cfg = _config(args)
    out = _out_dir(args, cfg)
    env = _environment(cfg)
    tcfg = cfg.training
    if args.steps is not None:
        tcfg = replace(tcfg, total_steps=args.steps)
    ckpt_dir = out / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)

    def on_checkpoint(agent, step, rng_state):
        save_checkpoint(agent, ckpt_dir / f"step_{step:08d}.json", rng_state)

    outputs = ["episodes.csv", "updates.csv", "checkpoint.json"]
    code = EXIT_OK
    with TrainingLogWriter(out) as writer:
        def on_episode(rec):
            writer.episode(rec)
            if args.verbose and rec["episode"] % 100 == 0:
                log.info("episode %d return %.1f (%s)", rec["episode"], rec["return"], rec["outcome"])

        try:
            agent, _ = train(env, tcfg, cfg.seed, on_episode=on_episode, on_update=writer.update,
                             on_checkpoint=on_checkpoint, checkpoint_every=cfg.checkpoint_every)
        except TrainingDiverged as exc:
            agent = exc.agent
            code = EXIT_DIVERGED
            print(f"training diverged: {exc}", file=sys.stderr)
    if agent.is_finite():
        save_checkpoint(agent, out / "checkpoint.json")
    else:
        outputs.remove("checkpoint.json")
        print("parameters are not finite; no final checkpoint written", file=sys.stderr)
    outputs += [str(p.relative_to(out)) for p in sorted(ckpt_dir.glob("*.json"))]
    write_manifest(out, "train", cfg.to_dict(), cfg.digest(), cfg.seed, outputs,
                   {"total_steps": tcfg.total_steps, "diverged": code == EXIT_DIVERGED})
    if "checkpoint.json" in outputs:
        print(f"checkpoint written to {out / 'checkpoint.json'}")
    return code


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    kind = args.controller or cfg.controller.kind
    ctrl = _controller(kind, cfg, args.checkpoint)
    out = _out_dir(args, cfg)
    env = _environment(cfg)
    results, outputs = _run_all(cfg, env, [ctrl], out)
    rows = [metrics_row(sc.name, rec.controller, m) for sc, rec, m in results]
    write_table(rows, out / "metrics.csv")
    text = metrics_summary(rows)
    (out / "metrics.txt").write_text(text + "\n")
    print(text)
    write_manifest(out, "evaluate", cfg.to_dict(), cfg.digest(), cfg.seed,
                   outputs + ["metrics.csv", "metrics.txt"], {"controller": kind})
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _config(args)
    ddpg = _controller("ddpg", cfg, args.checkpoint)
    pd = _controller("pd-ilos", cfg, None)
    out = _out_dir(args, cfg)
    env = _environment(cfg)
    results, outputs = _run_all(cfg, env, [ddpg, pd], out)
    by_name: dict[str, dict] = {}
    for sc, rec, m in results:
        by_name.setdefault(sc.name, {})[rec.controller] = m
    windy = env.wind is not None and env.wind.speed > 0
    table = [compare(ms["ddpg"], ms["pd-ilos"], name, windy) for name, ms in by_name.items()]
    write_table(table, out / "comparison.csv")
    metric_rows = [metrics_row(sc.name, rec.controller, m) for sc, rec, m in results]
    write_table(metric_rows, out / "metrics.csv")
    text = format_comparison(table) + "\n\n" + metrics_summary(metric_rows)
    (out / "comparison.txt").write_text(text + "\n")
    print(text)
    write_manifest(out, "compare", cfg.to_dict(), cfg.digest(), cfg.seed,
                   outputs + ["comparison.csv", "comparison.txt", "metrics.csv"])
    return EXIT_OK


def cmd_simulate(args) -> int:
    """Fixed-rudder run; d_c, chi_e and reward are not defined and written as nan."""
    cfg = _config(args)
    out = _out_dir(args, cfg)
    env = _environment(cfg)
    ship = env.ship
    delta_c = math.radians(args.rudder)
    h = args.step
    n = int(round(args.duration / h))
    external = WindDisturbance(env.wind, env.wind_coeffs) if env.wind is not None else None
    ctrl = ControlInput(delta_c, ship.n_self_propulsion)
    s = VesselState(delta=math.radians(args.initial_rudder))
    rows = [(0.0, *s, delta_c, math.nan, math.nan, math.nan)]
    try:
        for k in range(1, n + 1):
            s = rk4_step(ship, s, ctrl, h, external)
            rows.append((k * h, *s, delta_c, math.nan, math.nan, math.nan))
    except IntegrationError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    path = write_trace_rows(rows, out / f"simulate_{args.rudder:g}deg.csv")
    write_manifest(out, "simulate", cfg.to_dict(), cfg.digest(), cfg.seed, [path.name],
                   {"rudder_deg": args.rudder, "duration": args.duration, "step": h})
    print(f"{len(rows)} samples written to {path}")
    return EXIT_OK


def cmd_plot(args) -> int:
    cfg = _config(args)
    out = _out_dir(args, cfg)
    written = []
    if args.traces:
        traces = {}
        for p in args.traces:
            try:
                traces[Path(p).stem] = read_trajectory(p)
            except (OSError, ValueError) as exc:
                print(f"cannot read trace {p}: {exc}", file=sys.stderr)
                return EXIT_RUNTIME
        wps = read_waypoints(args.waypoints) if args.waypoints else None
        stem = args.name or "trajectory"
        written.append(plot_trajectories(traces, out / f"{stem}.png", wps, stem))
        written.append(plot_time_series(traces, out / f"{stem}_series.png"))
    if args.log:
        try:
            tlog = read_training_log(args.log)
        except OSError as exc:
            print(f"cannot read training log in {args.log}: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        written.append(plot_learning_curves(tlog, out / "learning_curves.png"))
    if not written:
        print("nothing to plot: pass --traces and/or --log", file=sys.stderr)
        return EXIT_USAGE
    write_manifest(out, "plot", cfg.to_dict(), cfg.digest(), cfg.seed, [p.name for p in written])
    for p in written:
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kcsnav", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("-c", "--config", help="run config YAML (defaults if omitted)")
        sp.add_argument("-o", "--out", help="output directory (overrides output_dir)")
        return sp

    t = common(sub.add_parser("train", help="train a DDPG agent"))
    t.add_argument("--steps", type=int, help="override training.total_steps")
    t.set_defaults(func=cmd_train)

    e = common(sub.add_parser("evaluate", help="run the configured scenarios"))
    e.add_argument("--controller", choices=("ddpg", "pd-ilos"))
    e.add_argument("--checkpoint")
    e.set_defaults(func=cmd_evaluate)

    c = common(sub.add_parser("compare", help="DDPG against PD+ILOS on the same scenarios"))
    c.add_argument("--checkpoint")
    c.set_defaults(func=cmd_compare)

    s = common(sub.add_parser("simulate", help="fixed-rudder open-loop run"))
    s.add_argument("--rudder", type=float, default=35.0, help="rudder command [deg]")
    s.add_argument("--initial-rudder", type=float, default=0.0, help="initial rudder angle [deg]")
    s.add_argument("--duration", type=float, default=20.0, help="nondimensional time")
    s.add_argument("--step", type=float, default=0.1, help="RK4 step")
    s.set_defaults(func=cmd_simulate)

    pl = common(sub.add_parser("plot", help="PNG figures from CSV traces and logs"))
    pl.add_argument("--traces", nargs="*", default=[])
    pl.add_argument("--waypoints")
    pl.add_argument("--log", help="training output directory holding episodes.csv")
    pl.add_argument("--name", help="file stem for trajectory figures")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits with 2 on usage errors
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (IntegrationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
