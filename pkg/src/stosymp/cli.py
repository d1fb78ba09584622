"""Command-line front end: trajectories, convergence orders, timing tables,
invariant tracking, the Schrodinger lattice simulator, and model self-checks.

Flags take precedence over a ``--config`` file of ``key = value`` lines
(``#`` comments allowed).  All outputs are CSV with 17 significant digits;
identical invocation and seed give byte-identical files.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

import numpy as np

from . import harness, nls as nlsmod
from .core import PhaseState, build_noise_grid
from .modelzoo import get_example
from .project import NoConvergence, ProjectionConfig, simulate
from .splitflow import strang_recipe, symplectic_residual_phase

DEFAULT_DT_LIST = "0.03125,0.015625,0.0078125,0.00390625"  # 2^-5 .. 2^-8


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def write_csv(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _parse_gamma(text: str):
    parts = [float(p) for p in text.split(",")]
    return parts[0] if len(parts) == 1 else parts


def _scheme_list(text: str):
    schemes = [s.strip() for s in text.split(",") if s.strip()]
    for s in schemes:
        if s not in harness.SCHEMES:
            raise argparse.ArgumentTypeError(
                f"unknown scheme {s!r}; choose from {harness.SCHEMES}")
    return schemes


def _positive(text: str) -> float:
    v = float(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive value, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stosymp",
        description="Semi-explicit symplectic integrators for stochastic "
                    "Hamiltonian systems, with convergence and invariant harnesses.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scheme=True):
        p.add_argument("--config", help="file of 'key = value' lines merged with "
                                        "flags (flags win)")
        p.add_argument("--example", default="ex1", choices=["ex1", "ex2", "ex3", "ex4"])
        if scheme:
            p.add_argument("--scheme", default="ses-sp-1", choices=harness.SCHEMES)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--gamma", type=_parse_gamma, default=0.0,
                       help="restraint constant; scalar applied to all channels "
                            "or a comma list per channel (default 0)")
        p.add_argument("--c", type=float, default=0.5, help="noise Hamiltonian scale")
        p.add_argument("--tol", type=_positive, default=1e-12)
        p.add_argument("--max-iter", type=int, default=50)
        p.add_argument("--threads", type=int, default=1,
                       help="worker count; 1 guarantees bit-reproducibility")
        p.add_argument("--out", default=None, help="output CSV path")

    p_run = sub.add_parser("run", help="simulate a single path and dump the trajectory")
    common(p_run)
    p_run.add_argument("--dt", type=_positive, required=True)
    p_run.add_argument("--t-end", type=_positive, required=True)

    p_order = sub.add_parser("order", help="mean-square convergence order")
    common(p_order, scheme=False)
    p_order.add_argument("--schemes", type=_scheme_list,
                         default=["ses-sp-1", "ses-sp-2", "midpoint"])
    p_order.add_argument("--dt-list", default=DEFAULT_DT_LIST)
    p_order.add_argument("--ref-dt", type=_positive, default=None,
                         help="reference step (default min(dt_list)/16)")
    p_order.add_argument("--t-end", type=_positive, default=1.0)
    p_order.add_argument("--paths", type=int, default=200)

    p_timing = sub.add_parser("timing", help="CPU time comparison on identical noise")
    common(p_timing, scheme=False)
    p_timing.add_argument("--schemes", type=_scheme_list,
                          default=["ses-sp-1", "ses-sp-2", "midpoint"])
    p_timing.add_argument("--dt-list", default=DEFAULT_DT_LIST)
    p_timing.add_argument("--ref-dt", type=_positive, default=None)
    p_timing.add_argument("--t-end", type=_positive, default=1.0)
    p_timing.add_argument("--paths", type=int, default=1)

    p_track = sub.add_parser("track", help="invariant / defect series along one path")
    common(p_track)
    p_track.add_argument("--dt", type=_positive, required=True)
    p_track.add_argument("--t-end", type=_positive, required=True)
    p_track.add_argument("--invariants", default="hamiltonian",
                         help="comma list of registered invariant names")

    p_nls = sub.add_parser("nls", help="stochastic cubic Schrodinger lattice run")
    p_nls.add_argument("--config")
    p_nls.add_argument("--dt", type=_positive, required=True)
    p_nls.add_argument("--t-end", type=_positive, required=True)
    p_nls.add_argument("--h", type=_positive, default=1.0)
    p_nls.add_argument("--x-left", type=float, default=-5.0)
    p_nls.add_argument("--x-right", type=float, default=5.0)
    p_nls.add_argument("--modes", type=int, default=10)
    p_nls.add_argument("--recipe", default="strang-ab", choices=sorted(nlsmod.RECIPES))
    p_nls.add_argument("--seed", type=int, default=0)
    p_nls.add_argument("--tol", type=_positive, default=1e-13)
    p_nls.add_argument("--max-iter", type=int, default=50)
    p_nls.add_argument("--out", default=None)

    p_check = sub.add_parser("check", help="gradient and symplecticity self-checks")
    common(p_check)

    return parser


def _load_config(path: str) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = val
    return values


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            values = _load_config(args.config)
        except (OSError, ValueError) as err:
            parser.error(str(err))
        unknown = set(values) - set(vars(args))
        if unknown:
            parser.error(f"unknown config keys: {sorted(unknown)}")
        # flags given on the command line take precedence over the config file
        given = {tok.split("=", 1)[0] for tok in argv if tok.startswith("--")}
        sub = parser._subparsers._group_actions[0].choices[args.command]
        for action in sub._actions:
            if action.dest in values and not (set(action.option_strings) & given):
                raw = values[action.dest]
                try:
                    val = action.type(raw) if action.type is not None else raw
                except (ValueError, argparse.ArgumentTypeError) as err:
                    parser.error(f"config key {action.dest}: {err}")
                setattr(args, action.dest, val)
    return args


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _out_path(args, default: str) -> str:
    return args.out if args.out else default


def cmd_run(args) -> int:
    example = get_example(args.example, c=args.c)
    n_steps = int(round(args.t_end / args.dt))
    grid = build_noise_grid(args.seed, 0, example.model.m, 0.0, n_steps * args.dt,
                            n_steps * 2)
    stepper = harness.make_stepper(args.scheme, example, grid, 2, args.gamma,
                                   args.tol, args.max_iter)
    traj = simulate(stepper, example.z0, n_steps, args.dt)
    d = example.model.d
    header = ["t"] + [f"x{i+1}" for i in range(d)] + [f"y{i+1}" for i in range(d)]
    rows = [[t] + list(z.x) + list(z.y) for t, z in zip(traj.times, traj.states)]
    out = _out_path(args, f"run_{args.example}_{args.scheme}.csv")
    write_csv(out, header, rows)
    zf = traj.final
    print(f"run {args.example} {args.scheme}: {n_steps} steps, "
          f"final x={zf.x} y={zf.y} -> {out}")
    return 0


def _dt_list(args):
    return tuple(float(p) for p in str(args.dt_list).split(","))


def cmd_order(args) -> int:
    example = get_example(args.example, c=args.c)
    dts = _dt_list(args)
    ref_dt = args.ref_dt if args.ref_dt else min(dts) / 16.0
    rows = []
    summary = []
    for scheme in args.schemes:
        spec = harness.ConvergenceSpec(example, scheme, args.t_end, dts, ref_dt,
                                       args.paths, args.seed, args.gamma, args.tol,
                                       args.max_iter)
        rep = harness.ms_error(spec)
        for i, dt in enumerate(rep.dts):
            rows.append([scheme, dt, rep.err_x[i], rep.err_y[i], rep.err_norm[i],
                         rep.se_x[i], rep.se_y[i], rep.wall[i],
                         rep.slope_x, rep.slope_y])
        summary.append(f"{scheme}: slope_x={rep.slope_x:.3f} slope_y={rep.slope_y:.3f}")
    out = _out_path(args, f"order_{args.example}.csv")
    write_csv(out, ["scheme", "dt", "err_x", "err_y", "err_norm", "se_x", "se_y",
                    "wall_s", "slope_x", "slope_y"], rows)
    print(f"order {args.example} ({args.paths} paths): " + "; ".join(summary)
          + f" -> {out}")
    return 0


def cmd_timing(args) -> int:
    example = get_example(args.example, c=args.c)
    dts = _dt_list(args)
    rows = harness.cpu_compare(example, args.schemes, dts, args.paths, args.t_end,
                               args.seed, args.gamma, args.ref_dt, args.tol)
    out = _out_path(args, f"timing_{args.example}.csv")
    write_csv(out, ["scheme", "dt", "err", "wall_s"],
              [[r.scheme, r.dt, r.err_norm, r.wall] for r in rows])
    fastest = min(rows, key=lambda r: r.wall)
    print(f"timing {args.example}: fastest {fastest.scheme} at dt={fastest.dt:g} "
          f"({fastest.wall:.3f}s) -> {out}")
    return 0


def cmd_track(args) -> int:
    example = get_example(args.example, c=args.c)
    names = [s.strip() for s in args.invariants.split(",") if s.strip()]
    traj, series = harness.track(example, args.scheme, args.t_end, args.dt, names,
                                 args.seed, args.gamma, args.tol)
    stem = _out_path(args, f"track_{args.example}_{args.scheme}.csv")
    stem = stem[:-4] if stem.endswith(".csv") else stem
    outs = []
    for name in names:
        path = f"{stem}_{name}.csv"
        write_csv(path, ["t", "value"], zip(traj.times, series[name]))
        outs.append(path)
    if args.scheme in ("ses-sp-1", "ses-sp-2"):
        path = f"{stem}_defect.csv"
        write_csv(path, ["t", "value"], zip(traj.times[1:], traj.defect_series()))
        outs.append(path)
    peaks = {name: float(np.max(np.abs(series[name]))) for name in names}
    print(f"track {args.example} {args.scheme}: max |relative deviation| "
          + " ".join(f"{k}={v:.3e}" for k, v in peaks.items())
          + " -> " + ", ".join(outs))
    return 0


def cmd_nls(args) -> int:
    span = args.x_right - args.x_left
    n_cells = span / args.h
    if abs(round(n_cells) - n_cells) > 1e-9 or round(n_cells) < 2:
        print(f"error: h={args.h} does not tile [{args.x_left}, {args.x_right}]",
              file=sys.stderr)
        return 2
    lattice = nlsmod.build_lattice(args.x_left, args.x_right, int(round(n_cells)) - 1,
                                   args.modes)
    n_steps = int(round(args.t_end / args.dt))
    grid = build_noise_grid(args.seed, 0, args.modes, 0.0, n_steps * args.dt,
                            n_steps * 2)
    cfg = ProjectionConfig(tol=args.tol, max_iter=args.max_iter)
    state = nlsmod.nls_initial(lattice)
    charge0 = nlsmod.charge(state)
    stem = args.out if args.out else f"nls_{args.recipe}"
    stem = stem[:-4] if stem.endswith(".csv") else stem
    field_rows = []
    summary_rows = [[0.0, charge0, 0.0, 0]]

    def dump_field(t, s):
        for xi, pi, qi in zip(lattice.nodes, s.p, s.q):
            field_rows.append([t, xi, pi, qi])

    dump_field(0.0, state)
    try:
        for n in range(n_steps):
            state, rep = nlsmod.nls_step(lattice, args.recipe, state, grid, n, cfg, 2)
            t = (n + 1) * args.dt
            summary_rows.append([t, nlsmod.charge(state), rep.defect_pre, rep.iterations])
            dump_field(t, state)
    except NoConvergence as err:
        print(f"error: projection failed at step {err.step}: {err}", file=sys.stderr)
        return 1
    write_csv(f"{stem}_field.csv", ["t", "x", "p", "q"], field_rows)
    write_csv(f"{stem}_summary.csv", ["t", "charge", "defect", "newton_iters"],
              summary_rows)
    drift = max(abs(r[1] - charge0) for r in summary_rows) / abs(charge0)
    print(f"nls {args.recipe}: {n_steps} steps, max relative charge drift "
          f"{drift:.3e} -> {stem}_summary.csv")
    return 0


def cmd_check(args) -> int:
    from .core import verify_gradients

    example = get_example(args.example, c=args.c)
    radius = 0.3 if args.example in ("ex2", "ex4") else 1.0
    rep = verify_gradients(example.model, samples=100, fd_step=1e-5, tol=1e-6,
                           seed=args.seed, center=example.z0, radius=radius)
    ok = rep.passed
    print(f"gradients: {'pass' if rep.passed else 'FAIL'} "
          f"(worst deviation {rep.worst:.3e})")

    # spot-check symplecticity of one projected Strang step at fixed noise
    model = example.model
    grid = build_noise_grid(args.seed, 0, model.m, 0.0, 1e-2, 2)
    recipe = strang_recipe(np.full(model.m + 1,
                                   args.gamma if np.ndim(args.gamma) == 0 else 0.0))
    cfg = ProjectionConfig(tol=1e-13)

    def one_step(z):
        from .project import projection_step
        return projection_step(model, recipe, z, grid, 0, cfg, 2)[0]

    res = symplectic_residual_phase(one_step, example.z0, 1e-5)
    sym_ok = res <= 1e-5
    ok = ok and sym_ok
    print(f"symplecticity: {'pass' if sym_ok else 'FAIL'} (residual {res:.3e})")

    if example.forward is not None:
        w = example.forward(example.z0)
        z_back = example.inverse(w)
        rt = max(float(np.max(np.abs(z_back.x - example.z0.x))),
                 float(np.max(np.abs(z_back.y - example.z0.y))))
        rt_ok = rt <= 1e-12
        ok = ok and rt_ok
        print(f"transform round-trip: {'pass' if rt_ok else 'FAIL'} ({rt:.3e})")
    return 0 if ok else 1


def dispatch(args) -> int:
    try:
        return {
            "run": cmd_run,
            "order": cmd_order,
            "timing": cmd_timing,
            "track": cmd_track,
            "nls": cmd_nls,
            "check": cmd_check,
        }[args.command](args)
    except NoConvergence as err:
        print(f"error: numerical failure: {err}"
              + (f" (step {err.step})" if err.step is not None else ""),
              file=sys.stderr)
        return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(sys.argv[1:] if argv is None else list(argv))
    return dispatch(args)


if __name__ == "__main__":
    sys.exit(main())
