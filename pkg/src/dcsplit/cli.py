"""Command-line front end: runs the benchmark experiments at configurable
scale and writes CSV artifacts plus a reproducibility manifest.

Subcommands
-----------
run             adaptive integration over the problem window; wave profiles
                and per-step controller reports.
converge-local  dyadic step sweep of one-step errors per sweep count, with
                fitted log-log slopes.
converge-global fixed-step marching over the window; end-time errors per
                sweep count, with fitted slopes.
error-control   adaptive runs over a tolerance grid for the three step rules.
space-study     nested-grid spatial orders, combined time+space error curve,
                and the hybrid-vs-full high-order gap per sweep.

A config file of ``key = value`` lines (keys are the long flag names)
overrides command-line flags.  Exit status is nonzero if any cell of a sweep
failed.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import __version__
from .artifacts import (
    fit_loglog_slope,
    load_state_binary,
    load_state_csv,
    save_state_binary,
    save_state_csv,
    write_csv,
    write_manifest,
)
from .controller import ControllerConfig, ErrorNorm, StepReport, adaptive_integrate, default_k_max
from .dcs import DcsSweeper
from .problems import bz_problem, dahlquist_problem, linear2x2_problem
from .reference import ReferenceConfig, reference_solve
from .splitting import SplittingScheme
from .subsolvers import SubsolverConfig
from .tableau import radau_iia_3

_DESK = {"grid_n": 201, "window": (0.5, 0.6)}
_PAPER = {"grid_n": 1001, "window": (0.0, 1.0)}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dcsplit", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"dcsplit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--problem", choices=["bz", "linear2x2", "dahlquist"], default="bz")
        sp.add_argument("--scheme", choices=["lie", "strang"], default="lie")
        sp.add_argument("--ordering", choices=["reaction-last", "diffusion-last"],
                        default="reaction-last")
        sp.add_argument("--eta", type=float, default=1e-7, help="accuracy tolerance")
        sp.add_argument("--kmax", type=int, default=None,
                        help="iteration cap (default min(p - p_hat, q - p_hat + 1))")
        sp.add_argument("--dt0", type=float, default=None, help="initial/base step")
        sp.add_argument("--grid-n", type=int, default=None)
        sp.add_argument("--spatial-order", type=int, choices=[2, 4], default=2)
        sp.add_argument("--hybrid", action="store_true",
                        help="low-order splitting flows, high-order quadrature")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--paper-scale", action="store_true",
                        help="full-scale defaults (n=1001, window [0,1])")
        sp.add_argument("--window", default=None, help="t0,t1 override")
        sp.add_argument("--subsolver-tol", type=float, default=1e-5)
        sp.add_argument("--ref-rtol", type=float, default=None,
                        help="reference solver rtol (default 1e-12, 1e-10 for start states)")
        sp.add_argument("--start-state", default=None,
                        help="CSV or binary state file to start from (skips the spin-up march)")
        sp.add_argument("--save-state", default=None,
                        help="write the window-start state to this .csv/.bin file")
        sp.add_argument("--config", default=None, help="key=value file overriding flags")
        sp.add_argument("--backend", choices=["auto", "compiled", "python"], default="auto")

    sp_run = sub.add_parser("run", help="adaptive integration over the window")
    common(sp_run)
    sp_run.add_argument("--checkpoints", type=int, default=5)

    sp_cl = sub.add_parser("converge-local", help="one-step error sweep")
    common(sp_cl)
    sp_cl.add_argument("--num-dts", type=int, default=5)

    sp_cg = sub.add_parser("converge-global", help="fixed-step window errors")
    common(sp_cg)
    sp_cg.add_argument("--num-dts", type=int, default=4)

    sp_ec = sub.add_parser("error-control", help="adaptive runs over a tolerance grid")
    common(sp_ec)
    sp_ec.add_argument("--etas", default="1e-5,1e-7")
    sp_ec.add_argument("--rules", default="k,kmax,split")
    sp_ec.add_argument("--probe-frac", type=float, default=0.5,
                       help="where in the window to sample the accepted step size")

    sp_ss = sub.add_parser("space-study", help="spatial resolution and hybrid studies")
    common(sp_ss)
    sp_ss.add_argument("--grid-list", default="101,201,401")
    sp_ss.add_argument("--num-dts", type=int, default=4)

    return p


def _apply_config_file(args: argparse.Namespace) -> None:
    if not args.config:
        return
    with open(args.config) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            dest = key.strip().replace("-", "_")
            if not hasattr(args, dest):
                raise SystemExit(f"config: unknown key {key.strip()!r}")
            current = getattr(args, dest)
            value = value.strip()
            if isinstance(current, bool):
                parsed = value.lower() in ("1", "true", "yes", "on")
            elif isinstance(current, int):
                parsed = int(value)
            elif isinstance(current, float):
                parsed = float(value)
            else:
                parsed = value
            setattr(args, dest, parsed)


def _resolve(args: argparse.Namespace) -> dict:
    scale = _PAPER if args.paper_scale else _DESK
    if args.grid_n is None:
        args.grid_n = scale["grid_n"]
    window = scale["window"]
    if args.window:
        t0, t1 = (float(v) for v in args.window.split(","))
        window = (t0, t1)
    if args.problem != "bz":
        window = (0.0, 1.0) if not args.window else window
    args.window = window
    tab = radau_iia_3()
    scheme = SplittingScheme(args.scheme, args.ordering)
    if args.kmax is None:
        args.kmax = default_k_max(scheme, tab)
    if args.dt0 is None:
        args.dt0 = 1e-4 if args.problem == "bz" else 0.1
    manifest = {
        "version": __version__,
        "command": args.command,
        "options": {
            k: (list(v) if isinstance(v, tuple) else v)
            for k, v in sorted(vars(args).items())
            if k not in ("config",)
        },
    }
    return {"scheme": scheme, "tab": tab, "manifest": manifest}


def _make_problem(args, order=None, n=None):
    order = order if order is not None else args.spatial_order
    n = n if n is not None else args.grid_n
    if args.problem == "bz":
        return bz_problem(n, order, args.window)
    if args.problem == "linear2x2":
        return linear2x2_problem(window=args.window)
    return dahlquist_problem(window=args.window)


def _start_state(args, problem):
    """State at the window start: loaded, or marched there by the reference solver."""
    if args.start_state:
        if args.start_state.endswith(".bin"):
            state, m, t = load_state_binary(args.start_state)
        else:
            _, state, t = load_state_csv(args.start_state)
        if state.size != problem.size:
            raise SystemExit(f"start state has {state.size} values, problem needs {problem.size}")
        return state
    t0 = args.window[0]
    if t0 <= 0.0:
        return problem.initial_state.copy()
    rtol = args.ref_rtol if args.ref_rtol is not None else 1e-10
    cfg = ReferenceConfig(rtol=rtol, atol=rtol * 1e-2)
    return reference_solve(problem, cfg, 0.0, t0, problem.initial_state).states[-1]


def _maybe_save_state(args, problem, state):
    if not args.save_state:
        return
    if args.save_state.endswith(".bin"):
        save_state_binary(args.save_state, state, problem.m, args.window[0])
    else:
        x = problem.grid.x if problem.grid is not None else np.zeros(1)
        save_state_csv(args.save_state, x, state, problem.m, args.window[0])


def _sweeper(args, ctx, problem):
    sub = SubsolverConfig(rtol=args.subsolver_tol, atol=args.subsolver_tol)
    if args.hybrid:
        if args.problem != "bz":
            raise SystemExit("--hybrid applies to the gridded problem only")
        high = bz_problem(args.grid_n, 4, args.window)
        low = bz_problem(args.grid_n, 2, args.window)
        return DcsSweeper.hybrid(high, low, ctx["scheme"], sub, backend=args.backend)
    return DcsSweeper.for_problem(problem, ctx["scheme"], sub, backend=args.backend)


def _ref_rtol(args):
    return args.ref_rtol if args.ref_rtol is not None else 1e-12


def _norm_for(problem):
    return ErrorNorm("scaled-l2", m=problem.m)


# -- subcommands ---------------------------------------------------------------


def cmd_run(args, ctx) -> int:
    if args.hybrid:
        raise SystemExit(
            "run: error-controlled stepping is undefined in hybrid spatial mode "
            "(time and space errors no longer decompose); use converge-local/"
            "space-study for fixed-step hybrid sweeps"
        )
    problem = _make_problem(args)
    u0 = _start_state(args, problem)
    _maybe_save_state(args, problem, u0)
    t0, t1 = args.window
    marks = list(np.linspace(t0, t1, args.checkpoints + 1)[1:])
    cfg = ControllerConfig(eta=args.eta, k_max=args.kmax, dt_max_abs=max(args.dt0 * 100, 1e-2))
    trajectory, reports = adaptive_integrate(
        problem, ctx["scheme"], cfg, t0, t1, u0, args.dt0,
        subsolver_cfg=SubsolverConfig(rtol=args.subsolver_tol, atol=args.subsolver_tol),
        backend=args.backend, checkpoints=marks)

    x = problem.grid.x if problem.grid is not None else np.zeros(problem.n_points)
    rows = []
    want = {round(t, 12) for t in [t0] + marks}
    for t, state in trajectory:
        if round(t, 12) not in want:
            continue
        U = state.reshape(-1, problem.m)
        for i in range(U.shape[0]):
            rows.append([f"{t:.17g}", f"{x[i]:.17g}"] + [f"{v:.17g}" for v in U[i]])
        want.discard(round(t, 12))
    write_csv(os.path.join(args.out, "profiles.csv"), "profiles",
              ["t", "x"] + [f"u{sp}" for sp in range(problem.m)], rows,
              meta={"scheme": args.scheme, "problem": args.problem})
    write_csv(os.path.join(args.out, "steps.csv"), "steps",
              StepReport.csv_columns(args.kmax), [r.csv_cells(args.kmax) for r in reports],
              meta={"scheme": args.scheme, "problem": args.problem, "eta": f"{args.eta:.6g}"})
    write_manifest(os.path.join(args.out, "manifest.json"), ctx["manifest"])
    return 0


def _sweep_errors(args, ctx, problem, u0, dts, mode: str):
    """(dt, k) error cells against the reference solver; local or global."""
    t0 = args.window[0]
    norm = _norm_for(problem)
    ref_cfg = ReferenceConfig(rtol=_ref_rtol(args), atol=_ref_rtol(args) * 1e-2)
    rows, failures = [], 0
    if mode == "local":
        marks = sorted({t0 + dt for dt in dts})
        ref = reference_solve(problem.with_initial_state(u0), ref_cfg, t0, max(marks), u0,
                              checkpoints=marks)
        targets = {round(t0 + dt, 15): ref.state_at(t0 + dt) for dt in dts}
    else:
        t_end = args.window[1]
        ref_end = reference_solve(problem.with_initial_state(u0), ref_cfg, t0, t_end, u0)
        targets = {"end": ref_end.states[-1]}

    errs = {k: [] for k in range(args.kmax + 1)}
    for dt in dts:
        try:
            sweeper = _sweeper(args, ctx, problem)
            if mode == "local":
                states = _sweep_states(sweeper, u0, t0, dt, args.kmax)
                exact = targets[round(t0 + dt, 15)]
                cell = [norm(s - exact, u0) for s in states]
            else:
                cell = _march_errors(sweeper, u0, t0, args.window[1], dt, args.kmax,
                                     targets["end"], norm)
            for k in range(args.kmax + 1):
                errs[k].append(cell[k])
                rows.append(["cell", f"{dt:.17g}", k, f"{cell[k]:.17g}", None, "ok"])
        except Exception as exc:  # noqa: BLE001 - per-cell failures recorded, run continues
            failures += 1
            for k in range(args.kmax + 1):
                errs[k].append(np.nan)
                rows.append(["cell", f"{dt:.17g}", k, None, None, f"failed: {type(exc).__name__}"])
    floor = 50.0 * _ref_rtol(args)
    for k in range(args.kmax + 1):
        slope = fit_loglog_slope(dts, errs[k], floor=floor) if len(dts) > 1 else None
        rows.append(["fit", None, k, None, None if slope is None else f"{slope:.6g}", "ok"])
    return rows, failures


def _sweep_states(sweeper, u0, t0, dt, kmax):
    state = sweeper.initial_sweep(u0, t0, dt)
    out = [state.end_value.copy()]
    for _ in range(kmax):
        state = sweeper.correction_sweep(state)
        out.append(state.end_value.copy())
    return out


def _march_errors(sweeper, u0, t0, t1, dt, kmax, exact, norm):
    errs = []
    for k in range(kmax + 1):
        u = u0.copy()
        t = t0
        while t < t1 - 1e-14:
            step = min(dt, t1 - t)
            state = sweeper.initial_sweep(u, t, step)
            for _ in range(k):
                state = sweeper.correction_sweep(state)
            u = state.end_value.copy()
            t += step
        errs.append(norm(u - exact, u0))
    return errs


def cmd_converge(args, ctx, mode: str) -> int:
    problem = _make_problem(args)
    if args.window[1] <= args.window[0]:
        raise SystemExit("empty window")
    u0 = _start_state(args, problem)
    _maybe_save_state(args, problem, u0)
    dts = [args.dt0 * 0.5**i for i in range(args.num_dts)]
    rows, failures = _sweep_errors(args, ctx, problem, u0, dts, mode)
    name = f"converge_{mode}.csv"
    write_csv(os.path.join(args.out, name), f"converge-{mode}",
              ["record", "dt", "k", "error", "slope", "status"], rows,
              meta={"scheme": args.scheme, "problem": args.problem})
    write_manifest(os.path.join(args.out, "manifest.json"), ctx["manifest"])
    return 1 if failures else 0


def cmd_error_control(args, ctx) -> int:
    if args.hybrid:
        raise SystemExit(
            "error-control: the step controller refuses hybrid spatial mode "
            "(its error decomposition does not apply there)"
        )
    problem = _make_problem(args)
    u0 = _start_state(args, problem)
    _maybe_save_state(args, problem, u0)
    t0, t1 = args.window
    etas = [float(v) for v in args.etas.split(",")]
    rules = [r.strip() for r in args.rules.split(",")]
    summary, failures = [], 0
    for eta in etas:
        for rule in rules:
            cfg = ControllerConfig(eta=eta, k_max=args.kmax, rule=rule,
                                   dt_max_abs=max(100 * args.dt0, 1e-2))
            try:
                t_run0 = time.perf_counter()
                _, reports = adaptive_integrate(
                    problem, ctx["scheme"], cfg, t0, t1, u0, args.dt0,
                    subsolver_cfg=SubsolverConfig(rtol=args.subsolver_tol, atol=args.subsolver_tol),
                    backend=args.backend)
                elapsed = time.perf_counter() - t_run0
            except Exception as exc:  # noqa: BLE001
                failures += 1
                summary.append([f"{eta:.6g}", rule, None, None, None, None, None,
                                f"failed: {type(exc).__name__}"])
                continue
            acc = [r for r in reports if r.accepted]
            probe_t = t0 + args.probe_frac * (t1 - t0)
            dt_probe = next((r.dt for r in acc if r.t <= probe_t <= r.t + r.dt), acc[-1].dt)
            tag = f"eta{eta:.0e}_rule-{rule}"
            write_csv(os.path.join(args.out, f"steps_{tag}.csv"), "steps",
                      StepReport.csv_columns(args.kmax),
                      [r.csv_cells(args.kmax) for r in reports],
                      meta={"scheme": args.scheme, "problem": args.problem,
                            "eta": f"{eta:.6g}", "rule": rule})
            summary.append([
                f"{eta:.6g}", rule, f"{dt_probe:.17g}",
                f"{np.mean([r.dt for r in acc]):.17g}",
                f"{np.mean([r.k_used for r in acc]):.6g}",
                len(acc), len(reports) - len(acc), "ok",
            ])
    write_csv(os.path.join(args.out, "dt_eta.csv"), "dt-eta",
              ["eta", "rule", "dt_at_probe", "mean_dt", "mean_k", "accepted", "rejected", "status"],
              summary, meta={"scheme": args.scheme, "problem": args.problem})
    write_manifest(os.path.join(args.out, "manifest.json"), ctx["manifest"])
    return 1 if failures else 0


def cmd_space_study(args, ctx) -> int:
    if args.problem != "bz":
        raise SystemExit("space-study applies to the gridded problem only")
    grids = sorted(int(v) for v in args.grid_list.split(","))
    base = grids[0] - 1
    for n in grids:
        if (n - 1) % base or ((n - 1) // base) & (((n - 1) // base) - 1):
            raise SystemExit("grids must be nested: n = base * 2^j + 1")
    n_fine = grids[-1]
    failures = 0
    norm3 = ErrorNorm("scaled-l2", m=3)
    dt_one = args.dt0

    fine_high = bz_problem(n_fine, 4, args.window)
    u_fine = _start_state(args, fine_high)

    def restrict(state, n_coarse):
        stride = (n_fine - 1) // (n_coarse - 1)
        return state.reshape(n_fine, 3)[::stride].ravel()

    # (a) pure spatial orders: same one-step integration on every grid, error
    #     against the finest-grid result restricted to the coarse grid.
    rows_orders = []
    sub = SubsolverConfig(rtol=args.subsolver_tol, atol=args.subsolver_tol)
    fine_result = {}
    for order in (2, 4):
        prob_f = bz_problem(n_fine, order, args.window)
        sw = DcsSweeper.for_problem(prob_f, ctx["scheme"], sub, backend=args.backend)
        states = _sweep_states(sw, u_fine, args.window[0], dt_one, args.kmax)
        fine_result[order] = states[-1]
    for order in (2, 4):
        errs, used = [], []
        for n in grids[:-1]:
            try:
                prob = bz_problem(n, order, args.window)
                sw = DcsSweeper.for_problem(prob, ctx["scheme"], sub, backend=args.backend)
                states = _sweep_states(sw, restrict(u_fine, n), args.window[0], dt_one, args.kmax)
                err = norm3(states[-1] - restrict(fine_result[order], n), restrict(u_fine, n))
                errs.append(err)
                used.append(n)
                rows_orders.append(["cell", order, n, f"{err:.17g}", None, "ok"])
            except Exception as exc:  # noqa: BLE001
                failures += 1
                rows_orders.append(["cell", order, n, None, None, f"failed: {type(exc).__name__}"])
        dxs = [1.0 / (n - 1) for n in used]
        slope = fit_loglog_slope(dxs, errs) if len(errs) > 1 else None
        rows_orders.append(["fit", order, None, None,
                            None if slope is None else f"{slope:.6g}", "ok"])
    write_csv(os.path.join(args.out, "space_orders.csv"), "space-study",
              ["record", "spatial_order", "n", "error", "slope", "status"], rows_orders)

    # (b) combined time+space error on the working grid against the finest
    #     high-order reference: flattens at the spatial floor for small dt.
    n_work = args.grid_n if args.grid_n in grids else grids[len(grids) // 2]
    ref_cfg = ReferenceConfig(rtol=_ref_rtol(args), atol=_ref_rtol(args) * 1e-2)
    dts = [dt_one * 2.0**i for i in range(args.num_dts)][::-1]
    marks = sorted({args.window[0] + dt for dt in dts})
    ref_fine = reference_solve(fine_high.with_initial_state(u_fine), ref_cfg,
                               args.window[0], max(marks), u_fine, checkpoints=marks)
    rows_comb = []
    for order in (2, 4):
        prob = bz_problem(n_work, order, args.window)
        sw = DcsSweeper.for_problem(prob, ctx["scheme"], sub, backend=args.backend)
        for dt in dts:
            try:
                states = _sweep_states(sw, restrict(u_fine, n_work), args.window[0], dt, args.kmax)
                exact = restrict(ref_fine.state_at(args.window[0] + dt), n_work)
                err = norm3(states[-1] - exact, exact)
                rows_comb.append(["cell", order, f"{dt:.17g}", f"{err:.17g}", "ok"])
            except Exception as exc:  # noqa: BLE001
                failures += 1
                rows_comb.append(["cell", order, f"{dt:.17g}", None, f"failed: {type(exc).__name__}"])
    write_csv(os.path.join(args.out, "space_combined.csv"), "space-study",
              ["record", "spatial_order", "dt", "error", "status"], rows_comb)

    # (c) hybrid vs full high-order gap per sweep on the working grid.
    rows_hyb = []
    try:
        high = bz_problem(n_work, 4, args.window)
        low = bz_problem(n_work, 2, args.window)
        u_w = restrict(u_fine, n_work)
        sw_hi = DcsSweeper.for_problem(high, ctx["scheme"], sub, backend=args.backend)
        sw_hy = DcsSweeper.hybrid(high, low, ctx["scheme"], sub, backend=args.backend)
        hi = _sweep_states(sw_hi, u_w, args.window[0], dt_one, args.kmax)
        hy = _sweep_states(sw_hy, u_w, args.window[0], dt_one, args.kmax)
        for k in range(args.kmax + 1):
            rows_hyb.append(["cell", k, f"{norm3(hy[k] - hi[k], u_w):.17g}", "ok"])
    except Exception as exc:  # noqa: BLE001
        failures += 1
        rows_hyb.append(["cell", None, None, f"failed: {type(exc).__name__}"])
    write_csv(os.path.join(args.out, "space_hybrid.csv"), "space-study",
              ["record", "k", "gap", "status"], rows_hyb)
    write_manifest(os.path.join(args.out, "manifest.json"), ctx["manifest"])
    return 1 if failures else 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    _apply_config_file(args)
    ctx = _resolve(args)
    os.makedirs(args.out, exist_ok=True)
    if args.command == "run":
        return cmd_run(args, ctx)
    if args.command == "converge-local":
        return cmd_converge(args, ctx, "local")
    if args.command == "converge-global":
        return cmd_converge(args, ctx, "global")
    if args.command == "error-control":
        return cmd_error_control(args, ctx)
    if args.command == "space-study":
        return cmd_space_study(args, ctx)
    raise SystemExit(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
