"""Command-line front end.

Exit codes: 0 success, 2 configuration/usage error, 3 numerical error,
4 transport/protocol error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .admittance import design_crane, design_robot, to_second_order
from .config import PRESET_NAMES, CliConfig, OutputConfig, dumps_config, load_config, load_preset
from .errors import ConfigError, DomainError, NumericalError, ProtocolError, TransportError
from .gnuplot import write_trace_script
from .netloop import parse_endpoint, run_controller, run_plant_server
from .plant import TENSION_MODELS, PendulumEnv, estimate_ke, ke_table, write_ke_csv
from .sim import SimTrace, compare, simulate
from .stability import (
    coupled_coeffs,
    crane_char_poly,
    robot_char_poly,
    root_locus_robot,
    routh_general,
    routh_hurwitz_quartic,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_TRANSPORT = 4

log = logging.getLogger("robocrane")


def _scenario_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--preset", choices=PRESET_NAMES, help="bundled scenario (default fig7)")
    g.add_argument("--config", type=Path, help="TOML scenario file")
    p.add_argument("--out", type=Path, help="output directory (overrides the config file)")


def _resolve(args) -> CliConfig:
    if args.config is not None:
        cc = load_config(args.config)
    else:
        name = args.preset or "fig7"
        cc = CliConfig(load_preset(name), OutputConfig(), name)
    if getattr(args, "out", None) is not None:
        cc = CliConfig(cc.scenario, OutputConfig(args.out, cc.output.prefix), cc.preset)
    return cc


def _out_path(cc: CliConfig, name: str) -> Path:
    cc.output.dir.mkdir(parents=True, exist_ok=True)
    return cc.output.dir / f"{cc.output.prefix}{name}"


def _label(cc: CliConfig) -> str:
    return cc.preset or "scenario"


def cmd_design(args) -> int:
    robot = design_robot(args.Mr, args.Ke, args.Kr)
    crane = design_crane(robot.params, args.Mc, args.Kc)
    for name, d in (("robot", robot), ("crane", crane)):
        p = d.params
        so = to_second_order(p)
        print(f"{name}: M={p.M:g} B={p.B:.6g} K={p.K:g}  omega_n={so.omega_n:.6g} rad/s zeta={so.zeta:.6g}")
        for w in d.warnings:
            print(f"  warning: {w}")
    rep = routh_hurwitz_quartic(coupled_coeffs(robot.params, crane.params, args.Ke))
    print("coupled scheme:")
    print(rep.format())
    if args.tau_r is not None:
        print(f"robot loop (tau_r={args.tau_r:g}):")
        print(routh_general(robot_char_poly(robot.params, args.tau_r, args.Ke)).format())
    if args.tau_c is not None:
        print(f"crane cascade (tau_c={args.tau_c:g}):")
        print(routh_general(crane_char_poly(crane.params, args.tau_c)).format())
    return EXIT_OK


def cmd_stability(args) -> int:
    cc = _resolve(args)
    cfg = cc.scenario
    c = coupled_coeffs(cfg.robot_adm, cfg.crane_adm, cfg.K_e)
    print(f"scenario: {_label(cc)}")
    print(f"robot {cfg.robot_adm}  crane {cfg.crane_adm}  K_e={cfg.K_e:g}")
    print(f"coupled coefficients: a1={c.a1:.6g} a2={c.a2:.6g} a3={c.a3:.6g} a4={c.a4:.6g}")
    print("coupled scheme (Routh-Hurwitz, quartic):")
    print(routh_hurwitz_quartic(c).format())
    print(f"robot loop (tau_r={cfg.tau_r:g}):")
    print(routh_general(robot_char_poly(cfg.robot_adm, cfg.tau_r, cfg.K_e)).format())
    print(f"crane cascade (tau_c={cfg.tau_c:g}):")
    print(routh_general(crane_char_poly(cfg.crane_adm, cfg.tau_c)).format())
    return EXIT_OK


def cmd_rootlocus(args) -> int:
    grid = np.arange(args.Kmin, args.Kmax + 0.5 * args.Kstep, args.Kstep)
    res = root_locus_robot(args.Mr, args.tau_r, args.Ke, grid)
    print(f"root locus: M_r={args.Mr:g} tau_r={args.tau_r:g} K_e={args.Ke:g}, {len(grid)} points")
    if res.critical_stability_gain is None:
        print("critical stability gain: not bracketed by the grid")
    else:
        print(f"critical stability gain K_r = {res.critical_stability_gain:.6g}")
    if res.critical_oscillation_gain is None:
        print("critical oscillation gain: not bracketed by the grid")
    else:
        print(f"critical oscillation gain K_r = {res.critical_oscillation_gain:.6g}")
    if args.csv is not None:
        args.csv.parent.mkdir(parents=True, exist_ok=True)
        res.write_csv(args.csv)
        print(f"wrote {args.csv}")
    return EXIT_OK


def _summary(tr: SimTrace) -> str:
    i = int(np.argmax(np.abs(tr.F)))
    return (
        f"peak |F| = {abs(tr.F[i]):.4g} N at t={tr.t[i]:.3f} s, peak v_c = {tr.v_c.max():.4g} m/s, "
        f"final x_r = {tr.x_r[-1]:.4g} m, final x_c = {tr.x_c[-1]:.4g} m"
    )


def cmd_simulate(args) -> int:
    cc = _resolve(args)
    tr = simulate(cc.scenario)
    csv_path = tr.to_csv(_out_path(cc, f"{_label(cc)}_trace.csv"))
    gp = write_trace_script(_out_path(cc, f"{_label(cc)}_trace.gp"), [csv_path], [f"{_label(cc)} ({cc.scenario.mode})"])
    print(_summary(tr))
    print(f"wrote {csv_path} and {gp}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cc = _resolve(args)
    collab, vel = compare(cc.scenario)
    label = _label(cc)
    p1 = collab.to_csv(_out_path(cc, f"{label}_collaborative.csv"))
    p2 = vel.to_csv(_out_path(cc, f"{label}_velocity_only.csv"))
    gp = write_trace_script(_out_path(cc, f"{label}_compare.gp"), [p1, p2], ["collaborative", "velocity only"])
    print("collaborative: " + _summary(collab))
    print("velocity-only: " + _summary(vel))
    print(f"wrote {p1}, {p2} and {gp}")
    return EXIT_OK


def cmd_estimate_ke(args) -> int:
    env = PendulumEnv(args.m, args.R, args.g)
    L_max = args.Lmax if args.Lmax is not None else 0.5 * args.R
    contact = estimate_ke(env, (args.Lmin, L_max), args.n, args.model)
    print(f"K_e = {contact.K_e:.6g} N/m ({args.model}, L in [{args.Lmin:g}, {L_max:g}] m, m*g/R = {env.m * env.g / env.R:.6g})")
    if args.csv is not None:
        L, F = ke_table(env, (args.Lmin, L_max), args.n, args.model)
        args.csv.parent.mkdir(parents=True, exist_ok=True)
        write_ke_csv(args.csv, L, F)
        print(f"wrote {args.csv}")
    return EXIT_OK


def cmd_serve_plant(args) -> int:
    cc = _resolve(args)
    endpoint = parse_endpoint(args.listen)
    print(f"plant listening on {endpoint[0]}:{endpoint[1]} ({'lock-step' if args.lockstep else 'free-running'})")
    tr = run_plant_server(
        cc.scenario, endpoint, lockstep=args.lockstep, startup_timeout=args.startup_timeout
    )
    path = tr.to_csv(_out_path(cc, f"{_label(cc)}_plant.csv"))
    print(_summary(tr))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_run_controller(args) -> int:
    cc = _resolve(args)
    endpoint = parse_endpoint(args.plant)
    tr = run_controller(cc.scenario, endpoint, startup_timeout=args.startup_timeout)
    path = tr.to_csv(_out_path(cc, f"{_label(cc)}_controller.csv"))
    print(f"controller processed {len(tr)} ticks; wrote {path}")
    return EXIT_OK


def cmd_dump_preset(args) -> int:
    print(dumps_config(load_preset(args.name)), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="robocrane", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="critically damped robot and crane admittances")
    p.add_argument("--Mr", type=float, required=True, help="robot virtual mass [kg]")
    p.add_argument("--Kr", type=float, required=True, help="robot virtual stiffness [N/m]")
    p.add_argument("--Mc", type=float, required=True, help="crane virtual mass [kg]")
    p.add_argument("--Kc", type=float, required=True, help="crane virtual stiffness [N/m]")
    p.add_argument("--Ke", type=float, required=True, help="environment stiffness [N/m]")
    p.add_argument("--tau-r", type=float, help="robot velocity-loop time constant [s]")
    p.add_argument("--tau-c", type=float, help="crane velocity-loop time constant [s]")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("stability", help="Routh-Hurwitz checks for a scenario")
    _scenario_args(p)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("rootlocus", help="robot-loop root locus over K_r")
    p.add_argument("--Mr", type=float, required=True)
    p.add_argument("--tau-r", type=float, required=True)
    p.add_argument("--Ke", type=float, required=True)
    p.add_argument("--Kmin", type=float, default=1.0)
    p.add_argument("--Kmax", type=float, default=100000.0)
    p.add_argument("--Kstep", type=float, default=1.0)
    p.add_argument("--csv", type=Path, help="write the sweep table here")
    p.set_defaults(func=cmd_rootlocus)

    p = sub.add_parser("simulate", help="time-domain simulation, CSV + gnuplot script")
    _scenario_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="collaborative scheme vs pure velocity control")
    _scenario_args(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("estimate-ke", help="environment stiffness of a pendulum payload")
    p.add_argument("--m", type=float, required=True, help="payload mass [kg]")
    p.add_argument("--R", type=float, required=True, help="rope length [m]")
    p.add_argument("--g", type=float, default=9.81)
    p.add_argument("--Lmin", type=float, default=0.0)
    p.add_argument("--Lmax", type=float, help="default R/2")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--model", choices=TENSION_MODELS, default="small-angle")
    p.add_argument("--csv", type=Path)
    p.set_defaults(func=cmd_estimate_ke)

    p = sub.add_parser("serve-plant", help="simulated plant on a UDP endpoint")
    _scenario_args(p)
    p.add_argument("--listen", default="127.0.0.1:47000", help="HOST:PORT to bind")
    p.add_argument("--lockstep", action="store_true", help="block on every tick until commands arrive")
    p.add_argument("--startup-timeout", type=float, default=10.0, help="wait this long for a controller")
    p.set_defaults(func=cmd_serve_plant)

    p = sub.add_parser("run-controller", help="admittance controller talking to a plant")
    _scenario_args(p)
    p.add_argument("--plant", default="127.0.0.1:47000", help="plant HOST:PORT")
    p.add_argument("--startup-timeout", type=float, default=10.0)
    p.set_defaults(func=cmd_run_controller)

    p = sub.add_parser("dump-preset", help="print a bundled preset as a TOML scenario file")
    p.add_argument("name", choices=PRESET_NAMES)
    p.set_defaults(func=cmd_dump_preset)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (TransportError, ProtocolError, OSError) as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT


if __name__ == "__main__":
    sys.exit(main())
