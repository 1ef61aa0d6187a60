"""Command-line front end.

Subcommands build example systems, run the verification suites, and write
CSV/JSON artifacts (plus PNG figures) under --out.  Exit codes: 0 all
checks passed, 2 usage/config error, 3 a tolerance check failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import figures
from .acceptance import run_criteria
from .elliptic import (EllipticParams, build_theta_system, pole_dynamics,
                       tau_periodic, theta_product)
from .errors import ConfigError, TausysError
from .fredholm import fredholm_det, hankel_operator, make_grid, system_symbol, truncation_length
from .linsys import LinearSystem, diagonal_system, tau
from .scattering import gl_kernel, gl_residual
from .solitons import (evolve, hirota_residual, kdv5_residual, kdv_field,
                       kdv_residual, kp_tau, soliton_expansion)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3


def _parse_range(spec: str) -> np.ndarray:
    """'a:b:h' -> inclusive uniform grid."""
    try:
        a, b, h = (float(p) for p in spec.split(":"))
    except ValueError as exc:
        raise ConfigError(f"bad range {spec!r}, expected start:stop:step") from exc
    if h <= 0 or b < a:
        raise ConfigError(f"bad range {spec!r}")
    n = int(round((b - a) / h))
    return a + h * np.arange(n + 1)


def _parse_floats(spec: str) -> list[float]:
    try:
        return [float(p) for p in spec.split(",") if p.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad float list {spec!r}") from exc


def _header(args, extra=None) -> str:
    """Config-echo header block for CSV files ('#'-prefixed lines)."""
    lines = [f"# tausys {args.command}", f"# seed={args.seed}",
             f"# tol_scale={args.tol_scale}"]
    for k, v in sorted((extra or {}).items()):
        lines.append(f"# {k}={v}")
    if args.stamp:
        lines.append(f"# generated={time.strftime('%Y-%m-%dT%H:%M:%S')}")
    return "\n".join(lines) + "\n"


def _write(path: str, text: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)
    print(f"wrote {path}")


def _out(args, name: str) -> str:
    return os.path.join(args.out, name)


def _maybe_figure(args, fn, *fargs):
    if not args.no_figures:
        print(f"wrote {fn(*fargs)}")


# ---------------------------------------------------------------------------

def cmd_soliton(args) -> int:
    lams = _parse_floats(args.lambdas)
    if not lams:
        raise ConfigError("need at least one eigenvalue in --lambdas")
    if min(lams) <= 0:
        raise ConfigError("eigenvalues must be positive")
    if len(set(lams)) != len(lams):
        raise ConfigError("eigenvalues must be distinct")
    x = _parse_range(args.x)
    t = _parse_range(args.t3)
    sys_ = diagonal_system(lams, np.ones(len(lams)), np.ones(len(lams)))
    es = evolve(sys_)
    flow = "t5" if args.t5 else "t3"
    grid = kdv_field(es, x, t, flow=flow)
    hdr = _header(args, {"lambdas": args.lambdas, "x": args.x, "t3": args.t3,
                         "flow": flow})
    _write(_out(args, "soliton_field.csv"), hdr + grid.to_csv())

    rep = kdv5_residual(grid) if flow == "t5" else kdv_residual(grid)
    _write(_out(args, "soliton_residual.json"), rep.to_json())

    # determinant vs subset expansion at a few abscissae
    rows = ["x,det_re,det_im,expansion_re,expansion_im,rel_gap"]
    worst_exp = 0.0
    for xx in np.linspace(float(x[0]), float(x[-1]), 9):
        d = tau(sys_, xx)
        e = soliton_expansion(sys_, xx, check=False)
        gap = abs(d - e) / max(1.0, abs(d))
        worst_exp = max(worst_exp, gap)
        rows.append(f"{xx:.12e},{d.real:.12e},{d.imag:.12e},"
                    f"{e.real:.12e},{e.imag:.12e},{gap:.3e}")
    _write(_out(args, "soliton_expansion.csv"), hdr + "\n".join(rows) + "\n")
    _maybe_figure(args, figures.soliton_field, grid.x, grid.t, grid.values,
                  _out(args, "soliton_field.png"))

    tol = args.tol * args.tol_scale
    if rep.max > tol or worst_exp > 1e-10 * args.tol_scale:
        print(f"FAIL: residual {rep.max:.3e} vs tol {tol:.1e}, "
              f"expansion gap {worst_exp:.3e}")
        return EXIT_TOLERANCE
    print(f"ok: residual {rep.max:.3e} (order ~ {rep.order_estimate}), "
          f"expansion gap {worst_exp:.3e}")
    return EXIT_OK


def cmd_tw(args) -> int:
    from .airy import f2_determinant, f2_painleve, painleve2_solve
    xs = np.linspace(args.xmin, args.xmax, args.points)
    sol = painleve2_solve(min(args.xmin, 0.0) - 0.5)
    det_vals = np.array([f2_determinant(x, args.nodes) for x in xs])
    pain_vals = np.array([f2_painleve(x, sol) for x in xs])
    diff = np.abs(det_vals - pain_vals)
    rows = ["x,F2_det,F2_painleve,diff"]
    for i, x in enumerate(xs):
        rows.append(f"{x:.12e},{det_vals[i]:.12e},{pain_vals[i]:.12e},{diff[i]:.3e}")
    hdr = _header(args, {"xmin": args.xmin, "xmax": args.xmax,
                         "points": args.points, "nodes": args.nodes})
    _write(_out(args, "tracy_widom.csv"), hdr + "\n".join(rows) + "\n")
    _write(_out(args, "painleve_solution.csv"),
           hdr + sol.to_csv(np.linspace(min(args.xmin, 0.0), 7.5, 24)))
    _maybe_figure(args, figures.tracy_widom, xs, det_vals, pain_vals,
                  _out(args, "tracy_widom.png"))
    tol = 1e-5 * args.tol_scale
    if float(diff.max()) > tol:
        print(f"FAIL: max route gap {diff.max():.3e} > {tol:.1e}")
        return EXIT_TOLERANCE
    if np.any(np.diff(det_vals) < -1e-12):
        print("FAIL: determinant route not monotone")
        return EXIT_TOLERANCE
    print(f"ok: max route gap {diff.max():.3e}")
    return EXIT_OK


def cmd_theta(args) -> int:
    if not 0 < args.q < 1:
        raise ConfigError("nome q must be in (0, 1)")
    sys_ = build_theta_system(args.q, args.N)
    xs = np.linspace(0.15, np.pi - 0.15, args.points)
    det_vals = np.array([tau_periodic(sys_, x, full=False) for x in xs])
    prod_vals = np.array([theta_product(args.q, x) for x in xs])
    diff = np.abs(det_vals - prod_vals)
    rows = ["x,tau_re,tau_im,theta_product_re,theta_product_im,diff"]
    for i, x in enumerate(xs):
        rows.append(f"{x:.12e},{det_vals[i].real:.12e},{det_vals[i].imag:.12e},"
                    f"{prod_vals[i].real:.12e},{prod_vals[i].imag:.12e},{diff[i]:.3e}")
    hdr = _header(args, {"q": args.q, "N": args.N})
    _write(_out(args, "theta_tau.csv"), hdr + "\n".join(rows) + "\n")
    _maybe_figure(args, figures.theta_comparison, xs, np.imag(det_vals),
                  np.imag(prod_vals), _out(args, "theta_tau.png"))
    tol = 1e-9 * args.tol_scale
    if float(diff.max()) > tol:
        print(f"FAIL: det vs product gap {diff.max():.3e} > {tol:.1e}")
        return EXIT_TOLERANCE
    print(f"ok: det vs product gap {diff.max():.3e}")
    return EXIT_OK


def cmd_poles(args) -> int:
    if args.m < 1:
        raise ConfigError("need m >= 1 poles")
    params = EllipticParams(2.0 * np.pi, 2.4j * np.pi)
    start = 0.11
    poles = [start + 2.0 * k * params.omega1 / args.m for k in range(args.m)]
    traj, rep = pole_dynamics(poles, params, t_max=args.tmax, dt=args.dt)
    times = np.asarray(rep.grid, dtype=float)
    kdv_steps = rep.meta.get("kdv_residual_steps", [0.0] * times.size)
    cols = ["t"] + sum([[f"x{j+1}_re", f"x{j+1}_im"] for j in range(args.m)], [])
    rows = [",".join(cols + ["constraint_residual", "kdv_residual"])]
    for i, tv in enumerate(times):
        vals = [f"{tv:.12e}"]
        for j in range(args.m):
            vals += [f"{traj[i, j].real:.12e}", f"{traj[i, j].imag:.12e}"]
        vals.append(f"{rep.residuals[i]:.3e}")
        vals.append(f"{kdv_steps[i]:.3e}")
        rows.append(",".join(vals))
    hdr = _header(args, {"m": args.m, "tmax": args.tmax, "dt": args.dt})
    _write(_out(args, "pole_trajectories.csv"), hdr + "\n".join(rows) + "\n")
    _write(_out(args, "pole_report.json"), rep.to_json())
    _maybe_figure(args, figures.pole_trajectories, times, traj,
                  _out(args, "pole_trajectories.png"))
    tol = 1e-6 * args.tol_scale
    if rep.max > tol or rep.meta["kdv_residual"] > 1e-4 * args.tol_scale:
        print(f"FAIL: constraint drift {rep.max:.3e}, "
              f"kdv residual {rep.meta['kdv_residual']:.3e}")
        return EXIT_TOLERANCE
    print(f"ok: drift {rep.max:.3e}, kdv residual {rep.meta['kdv_residual']:.3e}")
    return EXIT_OK


def cmd_gl(args) -> int:
    if args.system:
        with open(args.system) as fh:
            sys_ = LinearSystem.from_json(fh.read())
    else:
        sys_ = diagonal_system([0.6, 1.1, 1.7], [1.0, 0.8, 1.2], [0.9, 1.1, 0.7])
    T = gl_kernel(sys_, mu=args.mu)
    xs = np.linspace(0.5, 1.3, args.points)
    dys = np.linspace(0.1, 1.1, args.points)
    res = np.empty((xs.size, dys.size))
    rows = ["x,y,residual"]
    for i, x in enumerate(xs):
        for j, dy in enumerate(dys):
            res[i, j] = gl_residual(T, x, x + dy)
            rows.append(f"{x:.12e},{x + dy:.12e},{res[i, j]:.3e}")
    hdr = _header(args, {"mu": args.mu, "system": args.system or "builtin-3soliton"})
    _write(_out(args, "gl_residuals.csv"), hdr + "\n".join(rows) + "\n")
    _maybe_figure(args, figures.residual_heatmap, xs, dys, res,
                  _out(args, "gl_residuals.png"), "Gelfand-Levitan residual")
    tol = 1e-7 * args.tol_scale
    if float(res.max()) > tol:
        print(f"FAIL: GL residual {res.max():.3e} > {tol:.1e}")
        return EXIT_TOLERANCE
    print(f"ok: GL residual {res.max():.3e}")
    return EXIT_OK


def cmd_kp(args) -> int:
    rng = np.random.default_rng(args.seed)
    lam = np.sort(rng.uniform(0.3, 0.8, max(args.n, 3)))
    sys_ = diagonal_system(lam, rng.uniform(0.8, 1.2, lam.size),
                           rng.uniform(0.8, 1.2, lam.size))
    tval, u, tau_fn = kp_tau(sys_, args.n, 0.4, 0.1, 0.05)
    pts = [(0.4, 0.1, 0.05), (0.8, -0.1, 0.02), (1.2, 0.2, -0.04)]
    rep = hirota_residual(tau_fn, pts, h=0.02)
    _write(_out(args, "kp_hirota.json"), rep.to_json())
    xs = np.linspace(0.0, 2.0, 41)
    rows = ["x,tau_re,tau_im"]
    vals = [tau_fn(x, 0.1, 0.05) for x in xs]
    for x, v in zip(xs, vals):
        rows.append(f"{x:.12e},{v.real:.12e},{v.imag:.12e}")
    hdr = _header(args, {"n": args.n})
    _write(_out(args, "kp_tau.csv"), hdr + "\n".join(rows) + "\n")
    _maybe_figure(args, figures.curve, xs, np.real(vals), _out(args, "kp_tau.png"),
                  "x", "tau", f"KP Wronskian tau (n={args.n})")
    tol = 1e-4 * args.tol_scale
    if rep.max > tol:
        print(f"FAIL: Hirota residual {rep.max:.3e} > {tol:.1e}")
        return EXIT_TOLERANCE
    print(f"ok: Hirota residual {rep.max:.3e} (order ~ {rep.order_estimate:.2f})")
    return EXIT_OK


def cmd_report(args) -> int:
    only = [s.strip() for s in args.only.split(",")] if args.only else None
    results = run_criteria(only=only, seed=args.seed, tol_scale=args.tol_scale)
    if not results:
        raise ConfigError(f"--only {args.only!r} matched no criteria")
    payload = {
        "seed": args.seed,
        "tol_scale": args.tol_scale,
        "all_passed": all(r.passed for r in results),
        "criteria": [
            {
                "index": r.index,
                "name": r.name,
                "passed": r.passed,
                "measured": r.measured,
                "tolerances": r.tolerances,
                "seconds": round(r.seconds, 3),
                "notes": r.notes,
            }
            for r in results
        ],
    }
    if args.stamp:
        payload["generated"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    _write(_out(args, "report.json"), json.dumps(payload, indent=2) + "\n")
    for r in results:
        print(r.line())
    if not args.no_figures:
        import matplotlib.pyplot as plt
        fig, ax = plt.subplots(figsize=(7, 0.35 * len(results) + 1.2))
        names = [f"{r.index}. {r.name.split(':')[0][:38]}" for r in results]
        ratios = []
        for r in results:
            worst = 0.0
            for k, v in r.measured.items():
                t = r.tolerances.get(k, 1.0)
                if t > 0 and not k.endswith("order") and "monotone" not in k:
                    worst = max(worst, v / t)
            ratios.append(max(worst, 1e-12))
        colors = ["tab:green" if r.passed else "tab:red" for r in results]
        ax.barh(range(len(results)), ratios, color=colors)
        ax.set_yticks(range(len(results)), names, fontsize=7)
        ax.set_xscale("log")
        ax.axvline(1.0, color="k", lw=1)
        ax.set_xlabel("worst measured / tolerance")
        ax.invert_yaxis()
        fig.tight_layout()
        path = _out(args, "report.png")
        fig.savefig(path, dpi=150)
        plt.close(fig)
        print(f"wrote {path}")
    if not payload["all_passed"]:
        return EXIT_TOLERANCE
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tausys",
                                description="tau functions and Fredholm determinants "
                                            "from linear systems: verification suites")
    p.add_argument("--config", help="JSON file with default option values")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized suites")
    p.add_argument("--tol-scale", dest="tol_scale", type=float, default=1.0,
                   help="multiply every tolerance by this factor")
    p.add_argument("--stamp", action="store_true",
                   help="include a timestamp line in output headers")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("soliton", help="KdV soliton fields and residuals")
    ps.add_argument("--lambdas", default="0.35", help="comma-separated eigenvalues")
    ps.add_argument("--x", default="-6:6:0.01", help="x grid start:stop:step")
    ps.add_argument("--t3", default="0:0.17:0.01", help="time grid start:stop:step")
    ps.add_argument("--t5", action="store_true", help="use the fifth-order flow")
    ps.add_argument("--tol", type=float, default=1e-4, help="residual tolerance")
    ps.set_defaults(fn=cmd_soliton)

    pt = sub.add_parser("tw", help="Tracy-Widom F2 by two routes")
    pt.add_argument("--xmin", type=float, default=-6.0)
    pt.add_argument("--xmax", type=float, default=4.0)
    pt.add_argument("--points", type=int, default=21)
    pt.add_argument("--nodes", type=int, default=160)
    pt.set_defaults(fn=cmd_tw)

    pth = sub.add_parser("theta", help="theta-function tau realization")
    pth.add_argument("--q", type=float, default=0.3)
    pth.add_argument("--N", type=int, default=40)
    pth.add_argument("--points", type=int, default=20)
    pth.set_defaults(fn=cmd_theta)

    pp = sub.add_parser("poles", help="elliptic pole dynamics under KdV")
    pp.add_argument("--m", type=int, default=3)
    pp.add_argument("--tmax", type=float, default=0.01)
    pp.add_argument("--dt", type=float, default=5e-4)
    pp.set_defaults(fn=cmd_poles)

    pg = sub.add_parser("gl", help="Gelfand-Levitan residual grid")
    pg.add_argument("--system", help="JSON file with a LinearSystem")
    pg.add_argument("--mu", type=float, default=1.0)
    pg.add_argument("--points", type=int, default=5)
    pg.set_defaults(fn=cmd_gl)

    pk = sub.add_parser("kp", help="KP Wronskian tau and Hirota residual")
    pk.add_argument("--n", type=int, default=2)
    pk.set_defaults(fn=cmd_kp)

    pr = sub.add_parser("report", help="run the acceptance suite")
    pr.add_argument("--only", help="comma-separated substring filter on criteria")
    pr.set_defaults(fn=cmd_report)
    return p


def _apply_config_file(parser, argv):
    """flags > config file > defaults."""
    pre, _ = parser.parse_known_args(argv)
    if getattr(pre, "config", None):
        with open(pre.config) as fh:
            try:
                overrides = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"bad config file: {exc}") from exc
        if not isinstance(overrides, dict):
            raise ConfigError("config file must hold a JSON object")
        parser.set_defaults(**overrides)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        if args.tol_scale <= 0:
            raise ConfigError("--tol-scale must be positive")
        if getattr(args, "tol", 1.0) <= 0:
            raise ConfigError("--tol must be positive")
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TausysError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
