"""Command-line interface: ``torlog {solve,forward,discretize,validate,bench}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .entropy import gamma_star
from .errors import InvalidInput, MaxIterations, TorlogError
from .geometry import (
    DiscreteSphericalMeasure,
    box,
    inscribed_regular_polygon,
    regular_polygon,
    support_function,
    transform,
    validate_directions,
    wulff_shape,
)
from .measures import (
    GeneralMeasure,
    approximate_solve,
    atomic_measure,
    discretize,
    parse_density_spec,
    subspace_mass_check,
    tabulated_density,
)
from .mesh import build_mesh
from .solver import SolveOptions, forward_values, solve_discrete
from .torsion import evaluate_level, identity_gap, refine_and_extrapolate

log = logging.getLogger("torlog")

COMMANDS = ("solve", "forward", "discretize", "validate", "bench")
DEFAULT_SCHEDULE = (4, 8, 16)


@dataclass
class RunConfig:
    command: str
    input: Path | None
    out: Path
    options: SolveOptions
    schedule: list | None
    plot: bool
    level: int
    extrapolate: bool | None


def build_parser():
    p = argparse.ArgumentParser(prog="torlog", description=__doc__)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--input", help="measure/polygon JSON, or a density spec such as 'cosine:1,0.5'")
    p.add_argument("--out", default="torlog_out", help="output directory (default: %(default)s)")
    p.add_argument("--level", type=int, default=None, help="mesh refinement level")
    p.add_argument("--extrapolate", action=argparse.BooleanOptionalAction, default=None,
                   help="Richardson extrapolation over mesh levels")
    p.add_argument("--tol", type=float, default=1e-2, help="residual tolerance (default: %(default)s)")
    p.add_argument("--max-outer", type=int, default=500, help="outer iteration cap (default: %(default)s)")
    p.add_argument("--target", choices=("cone", "l0"), default="cone")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--schedule", default=None, help="comma-separated partition indices, e.g. 4,8,16")
    p.add_argument("--plot", action="store_true", help="write SVG figures")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def _parse_schedule(text):
    if text is None:
        return None
    try:
        sched = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InvalidInput(f"cannot parse schedule {text!r}") from exc
    if not sched:
        raise InvalidInput("empty schedule")
    return sched


def config_from_args(args) -> RunConfig:
    threads = os.environ.get("TORLOG_THREADS")
    if threads is not None:
        # accepted for interface compatibility; every path runs sequentially
        if not threads.isdigit() or int(threads) < 1:
            raise InvalidInput("TORLOG_THREADS must be a positive integer")
    level = args.level if args.level is not None else (4 if args.command == "forward" else 3)
    extrapolate = args.extrapolate
    opts = SolveOptions(
        mesh_level=level,
        extrapolate=True if extrapolate is None else extrapolate,
        max_outer=args.max_outer,
        residual_tol=args.tol,
        target=args.target,
        seed=args.seed,
    )
    inp = Path(args.input) if args.input else None
    if args.command in ("solve", "forward", "discretize") and inp is None:
        raise InvalidInput(f"{args.command} needs --input")
    return RunConfig(args.command, inp, Path(args.out), opts, _parse_schedule(args.schedule), args.plot, level, extrapolate)


def _load_measure_input(path: Path, force_general: bool):
    """Discrete measure JSON, tabulated density JSON, or a density spec."""
    if path.is_file():
        data = io._load_json(path)
        if isinstance(data, dict) and "samples" in data:
            samples = np.asarray(data["samples"], dtype=float).reshape(-1, 2)
            return tabulated_density(samples[:, 0], samples[:, 1])
        mu = io.measure_from_dict(data)
        if force_general:
            from .geometry import angles_of

            return atomic_measure(angles_of(mu.directions), mu.weights)
        return mu
    return parse_density_spec(str(path))


def _trace_rows(report):
    return [(i, j, r) for i, (j, r) in enumerate(zip(report.objective_trace, report.residual_trace))]


def _write_solution(cfg, report, mu, stem=""):
    out = cfg.out
    io.write_json(out / f"polygon{stem}.json", io.polygon_to_dict(report.polygon))
    io.write_json(out / f"report{stem}.json", report.to_dict())
    io.write_csv(out / f"trace{stem}.csv", ["iteration", "objective", "residual"], _trace_rows(report))
    if cfg.plot:
        from .plotting import plot_polygon

        fw = forward_values(report.polygon, cfg.options.mesh_level, cfg.options.extrapolate, cfg.options.measure)
        g = report.polygon.supports * fw.mu / 4.0
        plot_polygon(report.polygon, g, out / f"polygon{stem}.svg",
                     title=f"residual {report.residual:.2e}, T = {report.T_final:.4g}")


def cmd_solve(cfg: RunConfig) -> int:
    mu = _load_measure_input(cfg.input, force_general=cfg.schedule is not None)
    if isinstance(mu, DiscreteSphericalMeasure):
        try:
            report = solve_discrete(mu, cfg.options)
            status = 0
        except MaxIterations as exc:
            report, status = exc.report, 3
        _write_solution(cfg, report, mu)
        print(json.dumps({"converged": report.converged, "residual": report.residual,
                          "iterations": report.iterations, "T": report.T_final}))
        return status
    assert isinstance(mu, GeneralMeasure)
    schedule = cfg.schedule or list(DEFAULT_SCHEDULE)
    reports, diag = approximate_solve(mu, schedule, cfg.options)
    for j, rep in zip(schedule, reports):
        if rep is not None:
            _write_solution(cfg, rep, None, stem=f"_j{j}")
    cols = ["j", "n_atoms", "residual", "converged", "outer_radius", "iterations", "hausdorff_to_previous", "error"]
    io.write_csv(cfg.out / "diagnostics.csv", cols, [[row[c] for c in cols] for row in diag.rows()])
    io.write_json(cfg.out / "diagnostics.json",
                  {"smi_passed": diag.smi_passed, "smi_worst_ratio": diag.smi_worst_ratio, "stages": diag.rows()})
    print(json.dumps({"stages": [{"j": s.j, "residual": s.residual, "converged": s.converged} for s in diag.stages]}))
    return 0 if all(s.converged for s in diag.stages) else 3


def cmd_forward(cfg: RunConfig) -> int:
    P = io.read_polygon(cfg.input)
    level = cfg.level
    if cfg.extrapolate:
        levels = [lv for lv in (level - 2, level - 1, level) if lv >= 0]
        ex = refine_and_extrapolate(P, levels)
        T, mu = ex.T, ex.mu_tor
        rows = [(r.level, r.nodes, r.T, r.energy, r.sum_mu, r.identity_gap) for r in ex.table]
    else:
        sol, fm = evaluate_level(P, level)
        T, mu = sol.T, fm.mu_tor
        rows = [(level, sol.mesh.n_nodes, sol.T, sol.energy, float(mu.sum()), identity_gap(sol.T, mu, P.supports))]
    g = P.supports * mu / 4.0
    io.write_csv(cfg.out / "convergence.csv", ["level", "nodes", "T", "energy", "sum_mu", "identity_gap"], rows)
    io.write_csv(
        cfg.out / "facets.csv",
        ["facet", "normal_x", "normal_y", "support", "present", "mu_tor", "g_tor"],
        [(k, *P.normals[k], P.supports[k], P.present[k], mu[k], g[k]) for k in range(P.n_facets)],
    )
    result = {"T": T, "mu_tor": mu.tolist(), "g_tor": g.tolist(), "level": level, "extrapolated": bool(cfg.extrapolate)}
    io.write_json(cfg.out / "forward.json", result)
    if cfg.plot:
        from .plotting import plot_polygon

        plot_polygon(P, g, cfg.out / "forward.svg", title=f"T = {T:.6g}")
    print(json.dumps({"T": T, "mu_tor": mu.tolist()}))
    return 0


def cmd_discretize(cfg: RunConfig) -> int:
    mu = _load_measure_input(cfg.input, force_general=True)
    schedule = cfg.schedule or list(DEFAULT_SCHEDULE)
    smi = subspace_mass_check(mu)
    for j in schedule:
        res = discretize(mu, j, cfg.options.seed)
        io.write_json(cfg.out / f"discretization_j{j}.json", res.to_dict())
        io.write_json(cfg.out / f"measure_j{j}.json", io.measure_to_dict(res.normalized))
    print(json.dumps({"schedule": schedule, "total": mu.total, "smi_passed": smi.passed,
                      "smi_worst_ratio": smi.worst_ratio}))
    return 0


def _validation_checks():
    """Invariant spot checks on built-in fixtures: ``(name, passed, detail)``."""
    fixtures = {
        "disk": inscribed_regular_polygon(256, 1.0),
        "square": box(-1.0, 1.0, -1.0, 1.0),
        "pentagon": regular_polygon(5, 1.0, 0.3),
    }
    checks = []
    for name, P in fixtures.items():
        sols = {lv: evaluate_level(P, lv) for lv in (2, 3, 4)}
        sol, fm = sols[4]
        gal = abs(sol.energy - sol.T) / sol.T
        checks.append((f"{name}: Galerkin identity", gal <= 1e-8, f"{gal:.2e}"))
        gaps = [identity_gap(s.T, f.mu_tor, P.supports) for s, f in sols.values()]
        ok = gaps[2] <= 1e-2 and gaps[0] > gaps[1] > gaps[2]
        checks.append((f"{name}: boundary identity", ok, " > ".join(f"{x:.2e}" for x in gaps)))
        gmax = float(np.hypot(*sol.element_gradients().T).max())
        checks.append((f"{name}: gradient bound", gmax <= 1.05 * P.diameter, f"{gmax:.4f} <= {1.05 * P.diameter:.4f}"))
        umin = float(sol.u.min())
        checks.append((f"{name}: u >= 0", umin >= -1e-10 * sol.u.max(), f"{umin:.2e}"))
        Ts, _ = evaluate_level(transform(P, 2.0, (0.3, -0.2)), 3)
        T3 = sols[3][0].T
        hom = abs(Ts.T / (16.0 * T3) - 1.0)
        checks.append((f"{name}: scaling and translation", hom <= 1e-12, f"{hom:.2e}"))
        present = P.present
        h_back = support_function(P, P.normals[present])
        checks.append((f"{name}: support numbers", np.allclose(h_back, P.supports[present], atol=1e-12), ""))
    sq = box(-1.0, 1.0, -1.0, 1.0)
    mu = DiscreteSphericalMeasure(sq.normals, [2.0, 1.0, 1.0, 1.0])
    g, _, _ = gamma_star(sq, mu)
    err = float(np.abs(g - [-1.0 / 3.0, 0.0]).max())
    checks.append(("entropy maximizer", err <= 1e-8, f"{err:.2e}"))
    rep = validate_directions(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]]))
    checks.append(("hemisphere detection", not rep.spans, ""))
    return checks


def cmd_validate(cfg: RunConfig) -> int:
    checks = _validation_checks()
    width = max(len(c[0]) for c in checks)
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
    io.write_csv(cfg.out / "validate.csv", ["check", "passed", "detail"], checks)
    return 0 if all(c[1] for c in checks) else 4


def cmd_bench(cfg: RunConfig) -> int:
    P = regular_polygon(5, 1.0, 0.3)
    rows = []
    for lv in (2, 3, 4, 5):
        t0 = time.perf_counter()
        mesh = build_mesh(P, lv)
        t1 = time.perf_counter()
        sol, fm = evaluate_level(P, lv)
        t2 = time.perf_counter()
        rows.append((lv, mesh.n_nodes, len(mesh.triangles), sol.iterations, t1 - t0, t2 - t1, sol.T))
        print(f"level {lv}: {mesh.n_nodes:7d} nodes  {sol.iterations:5d} CG its  mesh {t1 - t0:.4f}s  solve {t2 - t1:.4f}s")
    io.write_csv(cfg.out / "bench.csv",
                 ["level", "nodes", "triangles", "cg_iterations", "mesh_seconds", "solve_seconds", "T"], rows)
    return 0


HANDLERS = {
    "solve": cmd_solve,
    "forward": cmd_forward,
    "discretize": cmd_discretize,
    "validate": cmd_validate,
    "bench": cmd_bench,
}


def _emit_error(exc, code, out: Path | None):
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    text = json.dumps(payload)
    print(text, file=sys.stderr)
    if out is not None and out.is_dir():
        (out / "error.json").write_text(text + "\n")


def run(cfg: RunConfig) -> int:
    cfg.out.mkdir(parents=True, exist_ok=True)
    return HANDLERS[cfg.command](cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    try:
        cfg = config_from_args(args)
        return run(cfg)
    except TorlogError as exc:
        _emit_error(exc, exc.exit_code, out)
        return exc.exit_code
    except Exception as exc:  # anything unexpected is an internal error
        log.debug("internal error", exc_info=True)
        _emit_error(exc, 4, out)
        return 4


if __name__ == "__main__":
    sys.exit(main())
