"""Command-line entry point.

Subcommands:

* ``run --config problem.yaml [--out DIR]`` — solve an arbitrary configured
  problem and write result frames (CSV and/or legacy VTK).
* ``bench --name lighthouse [--resolution N] [--out DIR]`` — run a built-in
  verification problem and write its report (text + JSON) plus final-state
  frames.
* ``validate --config problem.yaml`` — parse and validate only; writes
  nothing.
* ``perf [--side N] [--repeats R]`` — time the compiled kernels against the
  pure-numpy fallback on a synthetic block.

The default output directory is ``./peripore-results``, overridable with the
``PERIPORE_OUT`` environment variable or ``--out``. ``PERIPORE_BACKEND``
(``numba`` or ``numpy``) selects the kernel backend. All file output is
deterministic: rerunning a command with equal inputs reproduces every file
byte for byte (timings are printed to stdout only, never written).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .backend import ENV_BACKEND, default_backend, get_kernels
from .benchmarks import (BENCHMARK_NAMES, BenchmarkSpec, report_to_text,
                         report_to_tree, run_benchmark)
from .config import build_problem, parse_config
from .errors import PeriporeError
from .material import peridynamic_pressure
from .output import make_frame, write_results
from .solver import solve_quasistatic

ENV_OUT = "PERIPORE_OUT"


def _default_out(flag_value: str | None) -> str:
    if flag_value:
        return flag_value
    return os.environ.get(ENV_OUT) or "peripore-results"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="peripore",
        description="meshfree bond-based poroelastic solid solver")
    parser.add_argument("--version", action="version", version=f"peripore {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve a configured problem")
    p_run.add_argument("--config", required=True, help="path to a YAML problem config")
    p_run.add_argument("--out", default=None,
                       help=f"output directory (default $" + ENV_OUT + " or ./peripore-results)")
    p_run.add_argument("--backend", default=None, choices=("numba", "numpy"),
                       help="kernel backend (default $" + ENV_BACKEND + " or numba)")

    p_bench = sub.add_parser("bench", help="run a built-in verification problem")
    p_bench.add_argument("--name", required=True, choices=BENCHMARK_NAMES)
    p_bench.add_argument("--resolution", type=int, default=1,
                         help="lattice refinement multiplier (default 1)")
    p_bench.add_argument("--out", default=None)
    p_bench.add_argument("--backend", default=None, choices=("numba", "numpy"))

    p_val = sub.add_parser("validate", help="parse and validate a config, writing nothing")
    p_val.add_argument("--config", required=True)

    p_perf = sub.add_parser("perf", help="compare kernel backends on a synthetic block")
    p_perf.add_argument("--side", type=int, default=14,
                        help="particles per cube edge (default 14)")
    p_perf.add_argument("--repeats", type=int, default=5,
                        help="timed repetitions, best taken (default 5)")
    return parser


def _cmd_run(args) -> int:
    with open(args.config, "r", encoding="utf-8") as handle:
        text = handle.read()
    spec = parse_config(text)
    built = build_problem(spec, backend=args.backend)
    frames = []
    keep_all = spec.output_frames == "all"

    def on_step(step, t, u, theta, pf):
        pressure = peridynamic_pressure(theta, spec.material, pf,
                                        spec.effective_stress.gamma)
        frames.append(make_frame(built.particles, t, u, theta, pressure, pf))

    scale = None if spec.load_scale is None else np.asarray(spec.load_scale)
    result = solve_quasistatic(
        built.system, built.bc, body_force=spec.body_force,
        pore_field=spec.pressure_field, times=spec.times, load_scale=scale,
        geometric=(spec.linearization == "fixed_point_M"),
        tol=spec.tolerance, max_iter=spec.max_iterations,
        on_step=on_step if keep_all else None)
    if not keep_all:
        final_t = spec.times[-1] if spec.times else 0.0
        frames.append(make_frame(built.particles, final_t, result.u, result.theta,
                                 result.pressure, result.pore_pressure))
    out_dir = _default_out(args.out)
    paths = write_results(frames, out_dir, spec.name, tuple(spec.output_formats))
    total_cg = sum(s.cg_iterations for s in result.steps)
    worst = max(s.residual for s in result.steps)
    print(f"{spec.name}: {built.particles.n} particles, "
          f"{built.system.neighbors.n_bonds} bonds, {len(result.steps)} step(s), "
          f"{total_cg} CG iterations, max residual {worst:.3e}")
    for path in paths:
        print(f"wrote {path}")
    return 0


def _cmd_bench(args) -> int:
    spec = BenchmarkSpec(name=args.name, resolution=args.resolution)
    started = time.perf_counter()
    report = run_benchmark(spec, backend=args.backend)
    elapsed = time.perf_counter() - started
    out_dir = _default_out(args.out)
    os.makedirs(out_dir, exist_ok=True)
    text_path = os.path.join(out_dir, f"{args.name}_report.txt")
    json_path = os.path.join(out_dir, f"{args.name}_report.json")
    with open(text_path, "w", encoding="ascii") as handle:
        handle.write(report_to_text(report))
    with open(json_path, "w", encoding="ascii") as handle:
        json.dump(report_to_tree(report), handle, indent=2)
        handle.write("\n")
    for label, frame in report.frames:
        write_results([frame], out_dir, label, ("csv",))
    sys.stdout.write(report_to_text(report))
    print(f"wrote {text_path}")
    print(f"wrote {json_path}")
    print(f"elapsed: {elapsed:.2f} s (stdout only; reports carry no timings)")
    if report.failure is not None:
        print(f"benchmark failed: {report.failure}", file=sys.stderr)
        return 1
    return 0


def _cmd_validate(args) -> int:
    with open(args.config, "r", encoding="utf-8") as handle:
        text = handle.read()
    spec = parse_config(text)
    print(f"ok: {args.config} is a valid problem config (name: {spec.name})")
    return 0


def _cmd_perf(args) -> int:
    from .discretization import build_lattice, build_neighbors
    from .material import Material
    from .solver import build_bond_system

    side = max(args.side, 4)
    particles = build_lattice([[0.0, side], [0.0, side], [0.0, side]], [1.0, 1.0, 1.0])
    horizon = 3.5
    rng = np.random.default_rng(2024)
    u = 1e-3 * rng.standard_normal((particles.n, 3))
    print(f"perf block: {particles.n} particles, horizon {horizon}")
    results = {}
    for name in ("numba", "numpy"):
        try:
            get_kernels(name)
        except PeriporeError as exc:
            print(f"{name}: unavailable ({exc})")
            continue
        neighbors = build_neighbors(particles, horizon, backend=name)
        system = build_bond_system(particles, neighbors,
                                   Material(bulk_modulus=9e9, shear_modulus=15e9),
                                   backend=name)
        out = system.matvec(u)  # warm-up (includes jit compilation)
        best = min(_timed(system.matvec, u, repeats=args.repeats))
        best_force = min(_timed(system.force, u, repeats=args.repeats))
        results[name] = (best, best_force, out)
        print(f"{name:>6}: matvec {best * 1e3:8.2f} ms   "
              f"nonlinear force {best_force * 1e3:8.2f} ms   "
              f"({neighbors.n_bonds} bonds)")
    if len(results) == 2:
        diff = float(np.abs(results["numba"][2] - results["numpy"][2]).max())
        speedup = results["numpy"][0] / results["numba"][0]
        print(f"backend agreement: max |numba - numpy| = {diff:.3e}")
        print(f"speedup (matvec): {speedup:.1f}x")
    return 0


def _timed(fn, *args, repeats: int = 5):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return times


def cli_main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": _cmd_run, "bench": _cmd_bench,
                "validate": _cmd_validate, "perf": _cmd_perf}
    try:
        return handlers[args.command](args)
    except PeriporeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(cli_main())
