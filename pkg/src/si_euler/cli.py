"""Command-line entry point:

    si-euler <command> --config <path> [--out <dir>] [--override key=value ...] [--figures]

Exit codes: 0 ok, 1 configuration error, 2 numerical failure, 3 resolution exhausted.
SI_EULER_THREADS caps the thread count of the numerical libraries.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from .config import COMMANDS, RunConfig, load_config
from .errors import ConfigError, SIEulerError

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")


def _limit_threads() -> None:
    n = os.environ.get("SI_EULER_THREADS")
    if not n:
        return
    if not n.isdigit() or int(n) < 1:
        raise ConfigError(f"SI_EULER_THREADS must be a positive integer, got {n!r}")
    for var in _THREAD_VARS:
        os.environ[var] = n


def _initial_data(cfg: RunConfig):
    from .contour import JumpProfile
    from .flow import InitialData
    from .kernel import symmetry_constants

    fold = symmetry_constants(cfg.m)
    if cfg.data == "fourier":
        return InitialData.fourier(fold, cfg.fourier)
    prof = JumpProfile.on_fundamental_domain(fold, cfg.breakpoints, cfg.levels)
    return InitialData.piecewise(prof, cfg.mollify_cells)


def _signed_dt(cfg: RunConfig) -> float:
    return math.copysign(abs(cfg.dt), cfg.T) if cfg.T != 0 else abs(cfg.dt)


# --------------------------------------------------------------------------
# commands; each writes into `d` and returns (status, exit code)
# --------------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, d: Path, figures: bool):
    from .diagnostics import classify_run, expanding_set_estimate, extract_profile
    from .flow import run
    from .kernel import symmetry_constants
    from .output import write_csv, write_json

    fold = symmetry_constants(cfg.m)
    traj = run(_initial_data(cfg), fold, cfg.M, cfg.N, _signed_dt(cfg), cfg.T, cfg.cadence or None,
               cfg.cfl, cfg.max_gap)
    write_csv(d / "diagnostics.csv", traj.trace.rows())

    def snap_rows():
        for s in traj.snapshots:
            g, G = s.g_grid, s.G_grid
            for th, gv, Gv in zip(g.nodes, g.values, G.values):
                yield (s.t, th, gv, Gv)

    def marker_rows():
        for s in traj.snapshots:
            for row in zip(s.labels, s.chi, s.dchi, s.F, s.y):
                yield (s.t, *row)

    write_csv(d / "snapshots.csv", snap_rows())
    write_csv(d / "markers.csv", marker_rows())
    prof = extract_profile(traj.final, cfg.profile_tol, traj.trace)
    cls = classify_run(traj.trace)
    est = expanding_set_estimate(traj.trace)
    write_json(d / "profile.json", {
        "kind": prof.kind,
        "value": prof.value,
        "profile": prof.profile.to_dict() if prof.profile is not None else None,
        "residual": prof.residual,
        "message": prof.message,
        "classification": cls.outcome,
        "proxy_ratio": cls.proxy_ratio,
        "expanding_set": {"horizon": est.horizon, "measure": est.measure,
                          "components": est.components, "degenerate": est.degenerate},
        "run_status": traj.status,
        "run_message": traj.message,
        "final_time": traj.final.t,
    })
    if figures:
        from .plotting import plot_simulation

        (d / "figures").mkdir()
        plot_simulation(traj, d / "figures")
    if traj.status != "ok":
        return traj.status, 3
    return "ok", 0


def cmd_contour(cfg: RunConfig, d: Path, figures: bool):
    import numpy as np

    from .contour import G_of_profile, JumpProfile, _jump_velocities, contour_run
    from .kernel import grid_nodes, symmetry_constants
    from .output import write_csv, write_json

    fold = symmetry_constants(cfg.m)
    prof = JumpProfile.on_fundamental_domain(fold, cfg.breakpoints, cfg.levels)
    ct = contour_run(prof, _signed_dt(cfg), cfg.T, cfg.cadence or max(1, int(round(abs(cfg.T / cfg.dt)))))

    def jump_rows():
        for t, a in zip(ct.times, ct.jumps):
            v = _jump_velocities(fold, a, prof.levels) if not prof.degenerate else [0.5 * prof.levels[0]]
            for j, (x, u) in enumerate(zip(a, v)):
                yield (t, j + 1, x, u)

    nodes = grid_nodes(fold, cfg.N)

    def snap_rows():
        for k, t in enumerate(ct.times):
            p = ct.profile_at(k)
            for th, gv, Gv in zip(nodes, p(nodes), G_of_profile(p, nodes)):
                yield (t, th, gv, Gv)

    write_csv(d / "jumps.csv", jump_rows())
    write_csv(d / "snapshots.csv", snap_rows())
    final = ct.final
    write_json(d / "profile.json", {
        "initial": prof.to_dict(), "final": final.to_dict(),
        "final_widths": np.diff(final.breakpoints), "status": ct.status, "message": ct.message,
        "final_time": ct.times[-1],
    })
    if figures:
        from .plotting import plot_contour

        (d / "figures").mkdir()
        plot_contour(ct, d / "figures")
    return ct.status, (0 if ct.status == "ok" else 2)


def cmd_steady(cfg: RunConfig, d: Path, figures: bool):
    from .contour import G_of_profile, dG_of_profile
    from .kernel import grid_nodes, symmetry_constants
    from .output import write_csv, write_json
    from .steady import verify_steady, solve_rotating

    fold = symmetry_constants(cfg.m)
    cand = solve_rotating(cfg.levels, fold, cfg.rotation)
    rep = verify_steady(cand, cfg.steady_tol)
    nodes = grid_nodes(fold, cfg.N)
    p = cand.profile
    g, G, dG = p(nodes), G_of_profile(p, nodes), dG_of_profile(p, nodes)
    write_csv(d / "snapshots.csv", ((0.0, th, a, b) for th, a, b in zip(nodes, g, G)))
    out = cand.to_dict()
    out.update(iterations=cand.iterations, tangent_residual=cand.tangent_residual(),
               checks={k: {"passed": ok, "defect": v} for k, (ok, v) in rep.checks.items()},
               passed=rep.passed, degenerate=rep.degenerate)
    write_json(d / "profile.json", out)
    if figures:
        from .plotting import plot_profile

        (d / "figures").mkdir()
        plot_profile(nodes, g, G, dG, d / "figures")
    ok = cand.status == "ok" and rep.passed
    return ("ok" if ok else "verification failed"), (0 if ok else 2)


def _forcing(cfg: RunConfig):
    p = cfg.forcing_params
    try:
        if cfg.forcing == "constant":
            (a,) = p
            f, sup = (lambda t: a), a
        elif cfg.forcing == "power":
            a, q = p
            f, sup = (lambda t: a / (1.0 + t) ** q), a
        else:
            a, b, g = p
            f, sup = (lambda t: a + b * math.exp(-g * t)), a + max(b, 0.0)
    except ValueError:
        raise ConfigError(f"forcing_params: wrong number of parameters for {cfg.forcing!r}") from None
    if sup <= 0 or (cfg.forcing == "exponential" and a <= 0):
        raise ConfigError("forcing_params: c(t) must stay positive")
    return f, sup


def cmd_ode(cfg: RunConfig, d: Path, figures: bool):
    from .odeoracle import classify, integrate_y, riccati_equiv, shoot_decaying
    from .output import write_csv, write_json

    if cfg.T <= 0 or cfg.dt <= 0:
        raise ConfigError("T and dt must be positive for the ode command")
    c, sup = _forcing(cfg)
    dy0 = cfg.dy0
    if math.isnan(dy0):
        dy0 = cfg.y0 * shoot_decaying(c, cfg.T, cfg.dt, sup_c=sup)
    path = integrate_y(c, cfg.y0, dy0, cfg.T, cfg.dt, record_every=max(1, cfg.cadence))
    res = classify(c, cfg.y0, dy0, cfg.T, cfg.ode_tol, cfg.dt)
    F = riccati_equiv(path) if path.crossed_zero is None else [math.nan] * len(path.t)
    write_csv(d / "ode.csv", zip(path.t, path.y, path.dy, F, path.W))
    write_json(d / "profile.json", {
        "dy0": dy0, "scenario": res.scenario, "limit_estimate": res.limit_estimate,
        "weighted_integral": res.weighted_integral, "weighted_convergent": res.weighted_convergent,
        "monotone_after": res.monotone_after, "tail_constant": res.tail_constant,
        "crossed_zero": path.crossed_zero,
    })
    if figures:
        from .plotting import plot_ode

        (d / "figures").mkdir()
        if path.crossed_zero is None:
            plot_ode(path, F, d / "figures")
    return res.scenario, 0


def cmd_selfcheck(cfg: RunConfig, d: Path, figures: bool):
    from .output import write_csv
    from .selfcheck import run_selfcheck

    rows = run_selfcheck()
    write_csv(d / "selfcheck.csv", rows)
    failed = [r[0] for r in rows if not r[1]]
    for name, ok, defect, tol in rows:
        print(f"{'PASS' if ok else 'FAIL'} {name}: defect {defect:.3e} (tol {tol:.0e})", file=sys.stderr)
    if failed:
        return "failed: " + ", ".join(failed), 2
    return "ok", 0


DISPATCH = {
    "simulate": cmd_simulate,
    "contour": cmd_contour,
    "steady": cmd_steady,
    "ode": cmd_ode,
    "selfcheck": cmd_selfcheck,
}


def dispatch(cfg: RunConfig, out: Path, figures: bool = False) -> tuple[str, int]:
    """Run the configured command and place its bundle atomically at `out`."""
    from .output import atomic_bundle, write_manifest

    with atomic_bundle(out) as tmp:
        status, code = DISPATCH[cfg.command](cfg, tmp, figures)
        write_manifest(tmp, cfg.to_dict(), status)
    return status, code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="si-euler", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="TOML run configuration (optional for selfcheck)")
    ap.add_argument("--out", default=None, help="output directory (default: out/<command>)")
    ap.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config key; may be repeated")
    ap.add_argument("--figures", action="store_true", help="also render PNG figures into <out>/figures")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _limit_threads()
        overrides = [f'command="{args.command}"', *args.override]
        if args.config is None:
            if args.command != "selfcheck":
                raise ConfigError("--config is required for this command")
            from .config import parse_config

            cfg = parse_config("", overrides)
        else:
            cfg = load_config(args.config, overrides)
        out = Path(args.out) if args.out else Path("out") / cfg.command
        status, code = dispatch(cfg, out, args.figures)
    except SIEulerError as exc:
        print(f"si-euler: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, ArithmeticError) as exc:
        # invalid inputs caught deep inside a module, e.g. a malformed profile
        print(f"si-euler: {exc}", file=sys.stderr)
        return 1 if isinstance(exc, ValueError) else 2
    print(f"si-euler {cfg.command}: {status} -> {out}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
