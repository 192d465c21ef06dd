"""Command-line interface: solve, ccp, check, oracle, export-sdpa."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analysis, ccp as ccp_mod, conic, cuts as cuts_mod, model, shor

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_GUARD = 4


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hydrosdp",
        description="Semidefinite relaxations and stationary-point recovery "
        "for hydro-thermal coordination.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("case", help="case JSON file")
        sp.add_argument("--out", type=Path, default=None, help="output directory")
        sp.add_argument("--feas-tol", type=float, default=1e-8)
        sp.add_argument("--gap-tol", type=float, default=1e-8)

    sp = sub.add_parser("solve", help="solve a relaxation and report the bound")
    common(sp)
    sp.add_argument("--mode", choices=("shor", "shor+rlt"), default="shor+rlt")

    sp = sub.add_parser("ccp", help="run the convex-concave procedure")
    common(sp)
    sp.add_argument("--eps", type=float, default=1e-2)
    sp.add_argument("--max-iter", type=int, default=50)
    sp.add_argument("--cuts-in-ccp", action="store_true")
    sp.add_argument("--plot", action="store_true", help="write objective plot (SVG)")

    sp = sub.add_parser("check", help="exactness diagnostics")
    sp.add_argument("which", choices=("exactness", "maxgen", "signs"))
    common(sp)

    sp = sub.add_parser("oracle", help="brute-force grid oracle on small cases")
    common(sp)
    sp.add_argument("--grid", type=int, default=101)

    sp = sub.add_parser("export-sdpa", help="write the relaxation in sparse form")
    common(sp)
    sp.add_argument("--mode", choices=("shor", "shor+rlt"), default="shor+rlt")
    return p


def _load(args) -> model.CaseStudy:
    return model.load_case(args.case)


def _options(args) -> conic.SolveOptions:
    return conic.SolveOptions(feas_tol=args.feas_tol, gap_tol=args.gap_tol)


def _outdir(args) -> Path | None:
    if args.out is None:
        return None
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def _build(case: model.CaseStudy, mode: str):
    problem, layout = shor.build_relaxation(case)
    if mode == "shor+rlt":
        cuts_mod.apply_cuts(problem, layout, cuts_mod.build_cutset(case))
    return problem, layout


def _cmd_solve(args) -> int:
    case = _load(args)
    problem, layout = _build(case, args.mode)
    sol = conic.solve(problem, _options(args))
    if sol.status != conic.Status.OPTIMAL:
        print(f"solver returned {sol.status}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"lower bound ({args.mode}): {sol.objective_value:.6f}")
    out = _outdir(args)
    if out is not None:
        (out / "objective.txt").write_text(f"{sol.objective_value!r}\n")
        report = shor.rank1_gap(sol, layout)
        with (out / "rank1.csv").open("w") as fh:
            fh.write("period,plant,ratio\n")
            for (t, pid), ratio in sorted(report.ratios.items()):
                fh.write(f"{t},{pid},{ratio:.6g}\n")
        try:
            schedule = shor.extract_schedule(sol, layout, case)
        except shor.ExtractionError as exc:
            (out / "schedule.txt").write_text(f"extraction failed: {exc}\n")
        else:
            (out / "generation.csv").write_text(
                shor.schedule_generation_csv(schedule)
            )
            (out / "trajectory.csv").write_text(
                shor.schedule_trajectory_csv(schedule)
            )
    return EXIT_OK


def _cmd_ccp(args) -> int:
    case = _load(args)
    try:
        schedule, trace = ccp_mod.ccp_solve(
            case,
            eps=args.eps,
            max_iter=args.max_iter,
            cuts_in_subproblems=args.cuts_in_ccp,
            options=_options(args),
        )
    except ccp_mod.CCPError as exc:
        print(f"CCP failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"CCP final objective: {schedule.objective:.6f}")
    print(
        f"iterations: {trace.iterations}  converged: {trace.converged} "
        f"(eps={trace.eps:g})"
    )
    out = _outdir(args)
    if out is not None:
        (out / "trace.csv").write_text(ccp_mod.trace_csv(trace))
        (out / "generation.csv").write_text(shor.schedule_generation_csv(schedule))
        (out / "trajectory.csv").write_text(shor.schedule_trajectory_csv(schedule))
        if len(case.thermal) == 1:
            est = analysis.stationarity_check(case, schedule)
            (out / "stationarity.txt").write_text(
                f"max directional improvement rate: {est!r}\n"
            )
        if args.plot:
            ccp_mod.plot_trace(trace, str(out / "trace.svg"))
    return EXIT_OK


def _cmd_check(args) -> int:
    case = _load(args)
    mats = shor.StructureMatrices.for_case(case)
    lines: list[str] = []
    if args.which in ("signs", "exactness"):
        flagged = analysis.sign_condition_check(mats)
        lines.append(f"off-diagonal nonnegativity of V, Q, P: {flagged}")
        if flagged:
            lines.append(
                "the cited sufficient conditions for relaxation exactness "
                "do not apply to this structure"
            )
        for h in case.hydro:
            lines.append(
                f"definiteness[{h.id}]: "
                f"{model.classify_definiteness(h.production)}"
            )
    if args.which in ("maxgen", "exactness"):
        pairs = analysis.maxgen_check(case, _options(args))
        for t, (g, ok) in enumerate(pairs):
            lines.append(f"period {t}: max hydro generation {g:.4f} MW, verdict {ok}")
        if all(ok for _, ok in pairs):
            lines.append(
                "demand exceeds maximal hydro generation in every period; "
                "inequality power balance is tight at the optimum"
            )
    if args.which == "exactness":
        problem, layout = _build(case, "shor")
        sol = conic.solve(problem, _options(args))
        if sol.status != conic.Status.OPTIMAL:
            print(f"solver returned {sol.status}", file=sys.stderr)
            return EXIT_SOLVER
        report = shor.rank1_gap(sol, layout)
        lines.append(f"max rank-1 ratio (plain relaxation): {report.max_ratio:.6g}")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    out = _outdir(args)
    if out is not None:
        (out / f"check_{args.which}.txt").write_text(text)
    return EXIT_OK


def _cmd_oracle(args) -> int:
    case = _load(args)
    try:
        obj, schedule = analysis.brute_force_oracle(case, args.grid)
    except analysis.OracleError as exc:
        print(f"oracle refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    print(f"oracle objective (grid {args.grid}): {obj:.6f}")
    bounds = {}
    for mode in ("shor", "shor+rlt"):
        problem, _ = _build(case, mode)
        sol = conic.solve(problem, _options(args))
        if sol.status != conic.Status.OPTIMAL:
            print(f"solver returned {sol.status}", file=sys.stderr)
            return EXIT_SOLVER
        bounds[mode] = sol.objective_value
        print(f"bound ({mode}): {sol.objective_value:.6f}")
    sandwich = bounds["shor"] <= bounds["shor+rlt"] <= obj + 1e-6 * (1 + abs(obj))
    print(f"sandwich bound(shor) <= bound(shor+rlt) <= oracle: {sandwich}")
    out = _outdir(args)
    if out is not None:
        (out / "oracle.csv").write_text(shor.schedule_generation_csv(schedule))
    return EXIT_OK


def _cmd_export(args) -> int:
    case = _load(args)
    problem, _ = _build(case, args.mode)
    out = _outdir(args) or Path(".")
    path = out / (Path(args.case).stem + ".dat-s")
    conic.export_sdpa(problem, path)
    print(f"wrote {path}")
    return EXIT_OK


_COMMANDS = {
    "solve": _cmd_solve,
    "ccp": _cmd_ccp,
    "check": _cmd_check,
    "oracle": _cmd_oracle,
    "export-sdpa": _cmd_export,
}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (model.CaseValidationError, model.InvalidPlantError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except analysis.OracleError as exc:
        print(f"analysis guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except RuntimeError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
