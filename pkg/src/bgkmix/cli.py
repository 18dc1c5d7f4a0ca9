"""Command line front-end: ``bgkmix {relax,transport,mhd,limits,verify}``.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 property
violation. Every run that writes files also writes ``manifest.json`` with
the config hash, code version, tolerances and output names. The manifest
has no timestamps, so repeated runs produce identical directories.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfg
from . import grid as vgrid
from . import limits, mhd, relax, transport, verify
from .params import ParameterError, SpeciesMoments

log = logging.getLogger("bgkmix")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VIOLATION = 4

NUMERICAL_ERRORS = (vgrid.NonResolvableMaxwellian, vgrid.DegenerateDensityError,
                    transport.CFLError, mhd.MhdStepError, limits.StencilError,
                    FloatingPointError, ArithmeticError)

TOLERANCES = {
    "newton_tol": vgrid.NEWTON_TOL,
    "newton_accept": vgrid.NEWTON_ACCEPT,
    "positivity_tol": relax.POSITIVITY_TOL,
    "equilibrium_entropy_production": relax.EQUILIBRIUM_S,
    "h_increase_tol": transport.H_INCREASE_TOL,
    "mhd_cfl_max": mhd.CFL_MAX,
}


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(v) for v in r) + "\n")


def write_manifest(out: Path, command: str, config_text: str | None, seed: int | None,
                   extra: dict | None = None) -> Path:
    outputs = sorted(p.name for p in out.iterdir() if p.is_file() and p.name != "manifest.json")
    data = {
        "command": command,
        "version": __version__,
        "config_sha256": (hashlib.sha256(config_text.encode()).hexdigest()
                          if config_text is not None else None),
        "seed": seed,
        "tolerances": TOLERANCES,
        "outputs": outputs,
    }
    if extra:
        data.update(extra)
    path = out / "manifest.json"
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def _out_dir(args, conf: cfg.ScenarioConfig) -> Path:
    out = Path(args.out if args.out is not None else conf.get("output", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _species(init: dict):
    a = SpeciesMoments(init["n1"], np.array(init["u1"]), init["T1"])
    b = SpeciesMoments(init["n2"], np.array(init["u2"]), init["T2"])
    return a, b


# -- subcommands -------------------------------------------------------------

def cmd_relax(args, conf: cfg.ScenarioConfig, text: str) -> int:
    p = conf.params
    a, b = _species(conf.section("initial"))
    g_sec = conf.section("grid")
    if "lower" in g_sec:
        grid = vgrid.VelocityGrid((g_sec["nodes"],) * 3, g_sec["lower"], g_sec["upper"])
    else:
        grid = relax.relaxation_grid(a, b, p, g_sec["nodes"], g_sec["radius"])
    sol = conf.section("solver")
    state = relax.maxwellian_state(a, b, grid, p)
    series = relax.run(state, dt=sol.get("dt"), steps=sol["steps"], scheme=sol["scheme"],
                       order=sol["order"], stop_at_equilibrium=sol["stop_at_equilibrium"])
    out = _out_dir(args, conf)
    series.write_csv(out / "series.csv", every=conf.get("output", "cadence"))
    fin = series.final_state
    if conf.get("output", "binary"):
        vgrid.save_distribution(out / "f1_final.bin", fin.f1, grid)
        vgrid.save_distribution(out / "f2_final.bin", fin.f2, grid)
    for w in series.warnings:
        log.warning(w)
    write_manifest(out, "relax", text, conf.seed,
                   {"equilibrium_step": series.equilibrium_step, "steps": len(series) - 1})
    print(f"relax: {len(series) - 1} steps, t = {fin.time:.6g}, "
          f"S_final = {series.column('S_prod')[-1]:.3e}, output in {out}")
    return EXIT_OK


def initial_profiles(init: dict):
    """Cell-wise ``(n1, u1, T1, n2, u2, T2)`` for the transport scenario."""
    N, L, A = init["cells"], init["length"], init["amplitude"]
    x = (np.arange(N) + 0.5) * L / N
    ph = 2 * np.pi * x / L
    if init["profile"] == "uniform":
        s = c = np.zeros(N)
    elif init["profile"] == "sine":
        s, c = np.sin(ph), np.cos(ph)
    else:
        s = np.tanh(10.0 * np.sin(ph))
        c = np.zeros(N)
    one = np.ones(N)
    n1 = init["n1"] * (1 + A * s)
    n2 = init["n2"] * (1 - A * s) if init["profile"] == "layered" else init["n2"] * (1 + A * s)
    T1 = init["T1"] * (1 + A * c)
    T2 = init["T2"] * (1 + A * c)
    u1 = np.outer(one, init["u1"])
    u2 = np.outer(one, init["u2"])
    return n1, u1, T1, n2, u2, T2


def cmd_transport(args, conf: cfg.ScenarioConfig, text: str) -> int:
    p = conf.params
    init = conf.section("initial")
    g_sec = conf.section("grid")
    sol = conf.section("solver")
    n1, u1, T1, n2, u2, T2 = initial_profiles(init)
    if "lower" in g_sec:
        grid = vgrid.VelocityGrid((g_sec["nodes"],) * 3, g_sec["lower"], g_sec["upper"])
    else:
        hot = 1 + init["amplitude"]
        a = SpeciesMoments(1.0, np.array(init["u1"]), init["T1"] * hot)
        b = SpeciesMoments(1.0, np.array(init["u2"]), init["T2"] * hot)
        grid = relax.relaxation_grid(a, b, p, g_sec["nodes"], g_sec["radius"])
    field = transport.maxwellian_field(n1, u1, T1, n2, u2, T2, grid, p, init["length"],
                                       sol["bc"])
    dt = sol.get("dt") or 0.9 * field.dx / float(np.max(np.abs(grid.axes[0])))
    out = _out_dir(args, conf)
    cadence = conf.get("output", "cadence")

    def snapshot(k, f):
        transport.write_moments_csv(out / f"moments_{k:06d}.csv", f)

    tr = transport.run_transport(field, dt, sol["steps"], splitting=sol["splitting"],
                                 order=sol["order"], threads=args.threads,
                                 snapshot_every=cadence, on_snapshot=snapshot)
    tr.write_budget_csv(out / "budget.csv")
    if sol["steps"] % cadence:
        snapshot(sol["steps"], tr.final)
    if conf.get("output", "binary"):
        np.save(out / "field_final_f1.npy", tr.final.F1)
        np.save(out / "field_final_f2.npy", tr.final.F2)
    b = tr.budget()
    if b.flagged and b.asserted:
        log.warning("H increased at steps %s", b.flagged[:10])
    write_manifest(out, "transport", text, conf.seed,
                   {"dt": dt, "steps": sol["steps"], "min_f": float(tr.min_value)})
    print(f"transport: {sol['steps']} steps of dt = {dt:.6g}, max dH = {b.max_increase:.3e}, "
          f"min f = {tr.min_value:.3e}, output in {out}")
    return EXIT_OK


def cmd_mhd(args, conf: cfg.ScenarioConfig, text: str) -> int:
    m = conf.section("mhd")
    side = {s: {"n": m[f"{s}_n"], "p": m[f"{s}_p"], "u": m[f"{s}_u"], "By": m[f"{s}_By"],
                "Bz": m[f"{s}_Bz"]} for s in ("left", "right")}
    st = mhd.riemann_state(m["cells"], side["left"], side["right"], m["Bx"], m["length"],
                           m["bc"])
    out = _out_dir(args, conf)
    cadence = conf.get("output", "cadence")
    rows = [[0, st.time, *st.totals()]]
    mhd.write_snapshot_csv(out / f"mhd_{0:06d}.csv", st)
    for k in range(1, m["steps"] + 1):
        st = mhd.mhd_step(st, mhd.stable_dt(st, m["cfl"]))
        rows.append([k, st.time, *st.totals()])
        if k % cadence == 0 or k == m["steps"]:
            mhd.write_snapshot_csv(out / f"mhd_{k:06d}.csv", st)
    _write_rows(out / "totals.csv", ["step", "t", "n", "mx", "my", "mz", "E", "By", "Bz"], rows)
    write_manifest(out, "mhd", text, conf.seed, {"steps": m["steps"]})
    print(f"mhd: {m['steps']} steps, t = {st.time:.6g}, output in {out}")
    return EXIT_OK


def cmd_limits(args) -> int:
    if args.refine < 2:
        raise cfg.ConfigError("--refine needs at least 2 levels")
    rows = []
    for k in range(args.refine):
        N = args.base * 2**k
        res = limits.limit_residual(args.system, limits.alfven_wave(N))
        rows.append((N, max(res.values()), res))
    errs = [r[1] for r in rows]
    orders = limits.convergence_orders([1.0 / r[0] for r in rows], errs)
    print(f"{args.system} residual on the Alfven-wave manufactured solution")
    if args.system != "thm43":
        print("(the wave solves the ideal MHD system only; residuals here measure the "
              "distance to it, not a truncation error)")
    print(f"{'N':>6s} {'max residual':>14s} {'order':>7s}")
    for k, (N, e, _) in enumerate(rows):
        o = f"{orders[k - 1]:7.3f}" if k else "      -"
        print(f"{N:6d} {e:14.6e} {o}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        keys = sorted(rows[0][2])
        with open(out / f"limits_{args.system}.csv", "w") as fh:
            fh.write(",".join(["N", "max"] + keys) + "\n")
            for N, e, res in rows:
                fh.write(",".join([str(N), _fmt(e)] + [_fmt(res[k]) for k in keys]) + "\n")
        write_manifest(out, "limits", None, None,
                       {"system": args.system, "base": args.base, "refine": args.refine})
    return EXIT_OK


def cmd_verify(args) -> int:
    report = verify.verify(args.suite, seed=args.seed)
    text = report.text()
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "verify_report.txt").write_text(text)
        write_manifest(out, "verify", None, args.seed, {"suite": args.suite})
    return EXIT_OK if report.ok else EXIT_VIOLATION


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bgkmix", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"bgkmix {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                    help="worker threads for cell-parallel relaxation (default: all cores)")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (("relax", "space-homogeneous relaxation"),
                       ("transport", "1D transport with relaxation"),
                       ("mhd", "ideal MHD Riemann problem")):
        s = sub.add_parser(name, help=text)
        s.add_argument("config", nargs="?", help="scenario file or bundled scenario name")
        s.add_argument("--config", dest="config_opt", metavar="FILE",
                       help="same as the positional argument")
        s.add_argument("--out", help="output directory (overrides [output] out)")
    s = sub.add_parser("limits", help="limit-system residuals under grid refinement")
    s.add_argument("--system", choices=limits.SYSTEMS, default="thm43")
    s.add_argument("--refine", type=int, default=4, help="number of grid levels")
    s.add_argument("--base", type=int, default=32, help="points on the coarsest grid")
    s.add_argument("--out", default="limits_out", help="directory for the CSV table")
    s = sub.add_parser("verify", help="run property suites")
    s.add_argument("suite", choices=verify.SUITES + ("all",))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="also write the report and a manifest here")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "limits":
            return cmd_limits(args)
        if args.command == "verify":
            return cmd_verify(args)
        path = args.config_opt or args.config
        if path is None or (args.config_opt and args.config):
            raise cfg.ConfigError("give the scenario either positionally or with --config")
        conf, text = cfg.load_config(path)
        handler = {"relax": cmd_relax, "transport": cmd_transport, "mhd": cmd_mhd}
        with np.errstate(divide="raise", invalid="raise", over="raise"):
            return handler[args.command](args, conf, text)
    except (cfg.ConfigError, ParameterError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
