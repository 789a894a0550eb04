"""Command-line entry point.

Exit codes: 0 success, 1 infeasible model, 2 usage or input error,
3 internal or numerical failure.  Every file is written atomically.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from padplan import __version__
from padplan.chargeflow import (
    ChargeFlowError,
    check_feasibility,
    evaluate_charge_flow,
    evaluate_cost,
    unreachable_levels,
)
from padplan.formulation import FormulationOptions, apply_capacity, build_model
from padplan.model import ModelError
from padplan.modelio import export_model
from padplan.network import InstanceError, atomic_write, load_instance, topology_report
from padplan.render import render_network
from padplan.scenario import (
    MA_GRID,
    SOLAR_GRID,
    SOLAR_MA,
    GeneratorSpec,
    bundled_instance_path,
    default_capacities,
    sweep_ma,
    sweep_solar,
)
from padplan.solution import SolutionError, SolutionRecord, load_solution, save_solution
from padplan.solver import SolverConfig, SolverError, solve_milp

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
OUTPUT_DIR_ENV = "PADPLAN_OUTPUT_DIR"

log = logging.getLogger("padplan")


class UsageError(Exception):
    pass


def _resolve_instance(arg: str) -> Path:
    path = Path(arg)
    if path.is_file():
        return path
    if path.is_dir() and (path / "instance.toml").is_file():
        return path / "instance.toml"
    # "paper_table3" or "examples/paper_table3" name the bundled example
    if path.name in ("paper_table3", "paper_table3.toml") and not path.exists():
        return Path(str(bundled_instance_path("paper_table3")))
    raise UsageError(f"instance not found: {arg}")


def _output_path(args, default_name: str) -> Path | None:
    """Explicit --output wins; otherwise $PADPLAN_OUTPUT_DIR/default_name,
    or None meaning standard output."""
    if args.output == "-":
        return None
    if args.output:
        out = Path(args.output)
        base = os.environ.get(OUTPUT_DIR_ENV)
        if base and not out.is_absolute():
            out = Path(base) / out
        return out
    base = os.environ.get(OUTPUT_DIR_ENV)
    return Path(base) / default_name if base else None


def _emit(args, text: str, default_name: str) -> None:
    path = _output_path(args, default_name)
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        atomic_write(path, text)
        print(f"wrote {path}", file=sys.stderr)


def _config(args) -> SolverConfig:
    return SolverConfig(
        gap=args.gap,
        time_limit=args.time_limit,
        node_limit=args.node_limit,
        backend=args.backend,
        branching=args.branching,
        seed=args.seed if args.seed is not None else 0,
    )


def _load(args):
    path = _resolve_instance(args.instance)
    inst = load_instance(path, horizon=args.horizon)
    if getattr(args, "ma", None) is not None:
        inst = inst.with_params(ma=args.ma)
    if getattr(args, "budget", None) is not None:
        inst = inst.with_params(budget=args.budget)
    return path, inst


def _capacity(args, inst):
    if args.solar_fraction is None and args.grid_cap is None and args.solar_cap is None:
        return inst, None
    d_grid, d_solar = default_capacities(inst)
    grid = d_grid if args.grid_cap is None else args.grid_cap
    solar = d_solar if args.solar_cap is None else args.solar_cap
    frac = 0.0 if args.solar_fraction is None else args.solar_fraction
    return apply_capacity(inst, grid, solar, frac), {
        "grid_cap": float(grid),
        "solar_cap": float(solar),
        "solar_fraction": float(frac),
    }


def _infeasible_message(inst) -> str:
    rows = unreachable_levels(inst)
    if not rows:
        return "infeasible: no single requirement is unreachable on its own; the conflict is joint"
    routes = sorted({v.route for v in rows}, key=lambda k: inst.route_index(k))
    r0 = rows[0]
    return (
        f"infeasible: minimum charge {inst.params.ma:g} is out of reach on route(s) "
        f"{', '.join(routes)} even with every site built at full length "
        f"(e.g. minchg({inst.route_index(r0.route) + 1},{r0.period}): best level {r0.value:.4f})"
    )


# -- verbs -------------------------------------------------------------------


def cmd_validate(args) -> int:
    path, inst = _load(args)
    topo = topology_report(inst)
    print(f"instance {inst.name or path}: {len(inst.nodes)} nodes, {inst.num_routes} routes, "
          f"{inst.sites_per_route} sites x {inst.lengths} lengths, {inst.horizon} periods")
    print(f"route graph: {'acyclic' if topo.acyclic else 'cyclic'}; seed {inst.seed}")
    if args.solution:
        rec = load_solution(args.solution, inst)
        if rec.assignment is None:
            print(f"solution status {rec.status}: no assignment to check")
            return EXIT_OK if rec.status != "infeasible" else EXIT_INFEASIBLE
        profile = evaluate_charge_flow(inst, rec.assignment)
        verdict = check_feasibility(inst, rec.assignment, profile)
        cost = evaluate_cost(inst, rec.assignment)
        print(f"solution cost {cost:.6f}; {len(verdict.violations)} violation(s)")
        for v in verdict.violations[:20]:
            print(f"  {v.kind} on {v.route} period {v.period}: {v.value:.6f} vs {v.limit:.6f}")
        return EXIT_OK if verdict.feasible else EXIT_INFEASIBLE
    return EXIT_OK


def cmd_solve(args) -> int:
    path, inst = _load(args)
    inst, caps = _capacity(args, inst)
    config = _config(args)
    options = FormulationOptions(use_budget=args.budget is not None, coverage_rows=not args.plain)
    model, vmap = build_model(inst, options)
    result = solve_milp(model, config)
    provenance = {
        "instance_file": str(path),
        "ma": inst.params.ma,
        "config_hash": config.digest(),
        "solver": {k: v for k, v in config.to_dict().items() if v is not None},
        "backend": result.stats.backend,
        "coverage_rows": options.coverage_rows,
    }
    if args.budget is not None:
        provenance["budget"] = float(args.budget)
    if caps:
        provenance["capacity"] = caps
    assignment = vmap.decode(result.values).assignment() if result.values is not None else None
    record = SolutionRecord(result.status, result.objective, assignment, provenance)
    stem = (inst.name or "instance") + f"-ma{inst.params.ma:g}"
    out = _output_path(args, stem + ".solution.toml") or Path(stem + ".solution.toml")
    out.parent.mkdir(parents=True, exist_ok=True)
    save_solution(out, inst, record)
    if result.status == "infeasible":
        print(_infeasible_message(inst), file=sys.stderr)
        print(f"wrote {out}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if result.status == "unbounded":
        print("model is unbounded", file=sys.stderr)
        return EXIT_INTERNAL
    if result.values is None:
        print(f"{result.status}: no feasible plan found within the limits", file=sys.stderr)
        return EXIT_INTERNAL
    sol = vmap.decode(result.values)
    pads = " ".join(f"{k}" for k in sol.pads_by_length())
    print(f"status {result.status}")
    print(f"cost {result.objective:.6f}")
    print(f"pads by length {pads}; sites {int(sol.x.sum())}")
    print(f"wrote {out}", file=sys.stderr)
    return EXIT_OK


def _report_text(report, fmt: str) -> str:
    if fmt == "csv":
        return report.to_csv()
    if fmt == "text":
        return report.to_text()
    raise UsageError(f"sweeps write csv or text, not {fmt}")


def cmd_sweep_ma(args) -> int:
    _, inst = _load(args)
    values = args.values or list(MA_GRID)
    report = sweep_ma(inst, sorted(values), _config(args), workers=args.workers)
    _emit(args, _report_text(report, args.format or "csv"), f"{inst.name or 'instance'}-ma-sweep.{'csv' if (args.format or 'csv') == 'csv' else 'txt'}")
    return EXIT_OK


def cmd_sweep_solar(args) -> int:
    _, inst = _load(args)
    fracs = args.fractions or list(SOLAR_GRID)
    report = sweep_solar(
        inst,
        fracs,
        args.grid_cap,
        args.solar_cap,
        _config(args),
        ma=SOLAR_MA if args.ma is None else args.ma,
        workers=args.workers,
    )
    fmt = args.format or "csv"
    _emit(args, _report_text(report, fmt), f"{inst.name or 'instance'}-solar-sweep.{'csv' if fmt == 'csv' else 'txt'}")
    return EXIT_OK


def cmd_export(args) -> int:
    _, inst = _load(args)
    inst, _ = _capacity(args, inst)
    model, _ = build_model(inst, FormulationOptions(use_budget=args.budget is not None))
    fmt = args.format or "mps"
    if fmt not in ("mps", "lp"):
        raise UsageError("export writes mps or lp")
    kind = "fixed-mps" if (fmt == "mps" and args.fixed) else fmt
    text = export_model(model, kind)
    _emit(args, text, f"{inst.name or 'model'}.{fmt}")
    return EXIT_OK


def cmd_render(args) -> int:
    _, inst = _load(args)
    x = None
    if args.solution:
        rec = load_solution(args.solution, inst)
        x = rec.assignment.x if rec.assignment is not None else None
    fmt = args.format or "dot"
    if fmt not in ("dot", "svg"):
        raise UsageError("render writes dot or svg")
    _emit(args, render_network(inst, x, fmt), f"{inst.name or 'network'}.{fmt}")
    return EXIT_OK


def cmd_generate(args) -> int:
    import tomli_w

    spec = GeneratorSpec() if args.seed is None else GeneratorSpec(seed=args.seed)
    if args.ma is not None:
        spec = GeneratorSpec(**{**spec.__dict__, "ma": args.ma})
    doc = spec.to_document(args.horizon or 24)
    text = "# generated instance\n" + tomli_w.dumps(doc)
    _emit(args, text, f"{spec.name}-seed{spec.seed}.toml")
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="padplan",
        description="Plan in-road wireless charging pads on a road network.",
        epilog=(
            f"Outputs go to --output, else to ${OUTPUT_DIR_ENV} when set, else to standard "
            "output (solve always writes a solution file, to the current directory by default). "
            "Exit codes: 0 ok, 1 infeasible, 2 usage/input error, 3 internal/numerical error."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="verb", metavar="VERB", required=True)

    def common(p, instance=True):
        if instance:
            p.add_argument("instance", help="instance TOML (or 'paper_table3' for the bundled example)")
        p.add_argument("--horizon", type=int, help="override the number of periods")
        p.add_argument("-o", "--output", help="output file ('-' for standard output)")

    def solver_flags(p):
        p.add_argument("--gap", type=float, default=1e-6, help="relative optimality gap (default 1e-6)")
        p.add_argument("--time-limit", type=float, help="seconds per solve")
        p.add_argument("--node-limit", type=int, help="branch-and-bound nodes per solve")
        p.add_argument("--backend", choices=("auto", "native", "highs"), default="auto",
                       help="MILP engine (auto: native for small models, HiGHS otherwise)")
        p.add_argument("--branching", choices=("most-fractional", "pseudo-cost"), default="most-fractional")
        p.add_argument("--seed", type=int, help="recorded seed for deterministic runs")

    def capacity_flags(p):
        p.add_argument("--grid-cap", type=float, help="grid power available per site (charge units)")
        p.add_argument("--solar-cap", type=float, help="solar power available per site at full contribution")
        p.add_argument("--solar-fraction", type=float, help="solar contribution in [0, 1]")

    p = sub.add_parser("validate", help="check an instance, and optionally a solution against it")
    common(p)
    p.add_argument("solution", nargs="?", help="solution file to check")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="solve one instance and write a solution file")
    common(p)
    p.add_argument("--ma", type=float, help="minimum acceptable average charge")
    p.add_argument("--budget", type=float, help="construction budget (adds the budget row)")
    p.add_argument("--plain", action="store_true",
                   help="omit the implied coverage rows (same optimum, usually slower)")
    solver_flags(p)
    capacity_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep-ma", help="cost and pads across minimum charge levels")
    common(p)
    p.add_argument("--values", type=float, nargs="+", help=f"MA grid (default {list(MA_GRID)})")
    p.add_argument("--format", choices=("csv", "text"))
    p.add_argument("--workers", type=int, default=1, help="parallel solver processes")
    p.set_defaults(ma=None, budget=None)
    solver_flags(p)
    p.set_defaults(func=cmd_sweep_ma)

    p = sub.add_parser("sweep-solar", help="cost and pads across solar contributions")
    common(p)
    p.add_argument("--fractions", type=float, nargs="+", help=f"solar grid (default {list(SOLAR_GRID)})")
    p.add_argument("--ma", type=float, help=f"minimum charge for the sweep (default {SOLAR_MA})")
    p.add_argument("--format", choices=("csv", "text"))
    p.add_argument("--workers", type=int, default=1, help="parallel solver processes")
    p.add_argument("--grid-cap", type=float, help="grid power per site (default 0.9 x largest pad)")
    p.add_argument("--solar-cap", type=float, help="solar power per site (default 0.1 x largest pad)")
    p.set_defaults(budget=None)
    solver_flags(p)
    p.set_defaults(func=cmd_sweep_solar)

    p = sub.add_parser("export", help="write the MILP as MPS or LP text")
    common(p)
    p.add_argument("--ma", type=float)
    p.add_argument("--budget", type=float)
    p.add_argument("--format", choices=("mps", "lp"))
    p.add_argument("--fixed", action="store_true", help="fixed-column MPS with positional names")
    capacity_flags(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("render", help="draw the network, optionally with a solution")
    common(p)
    p.add_argument("solution", nargs="?", help="solution file whose built sites are filled")
    p.add_argument("--format", choices=("dot", "svg"))
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("generate", help="write a seeded instance of the eight-intersection example")
    common(p, instance=False)
    p.add_argument("--seed", type=int, help="random seed (default 2022)")
    p.add_argument("--ma", type=float)
    p.set_defaults(func=cmd_generate)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        # a solution path given after options lands in ``extra``
        if len(extra) == 1 and not extra[0].startswith("-") and getattr(args, "solution", "") is None:
            args.solution = extra[0]
        elif extra:
            parser.error(f"unrecognized arguments: {' '.join(extra)}")
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, InstanceError, SolutionError) as exc:
        print(f"padplan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ModelError, ChargeFlowError) as exc:
        print(f"padplan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"padplan: I/O error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except SolverError as exc:
        print(f"padplan: numerical failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit 3
        log.debug("internal error", exc_info=True)
        print(f"padplan: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
