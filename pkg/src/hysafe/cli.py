"""Command-line front end: ``hysafe validate|fmea|fta|simulate|report``.

Reports go to stdout, diagnostics to stderr. Exit codes: 0 success,
1 the model has ERROR diagnostics, 2 usage or parse failure, 3 an internal
limit was exceeded.
"""

from __future__ import annotations

import argparse
import enum
import os
import sys
from pathlib import Path

from . import fmea as fmea_engine
from . import fta as fta_engine
from . import reporting
from .model import DomainError, HazardProject, has_errors, validate_project
from .parser import merge, parse
from .sim import run_simulation


class ExitCode(enum.IntEnum):
    OK = 0
    ANALYSIS_ERRORS = 1
    USAGE = 2
    LIMIT = 3


class CliError(Exception):
    def __init__(self, message: str, code: ExitCode = ExitCode.USAGE):
        super().__init__(message)
        self.code = code


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def load_project(paths) -> HazardProject:
    """Parse every path (range checks deferred to validation) and merge them."""
    projects = []
    failed = False
    for path in paths:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise CliError(f"{path}: cannot read file: {exc.strerror or exc}") from None
        except UnicodeDecodeError:
            raise CliError(f"{path}: file is not valid UTF-8") from None
        result = parse(text, str(path), check_ranges=False)
        if isinstance(result, list):
            for e in result:
                _err(str(e))
            failed = True
        else:
            projects.append(result)
    if failed:
        raise CliError("parse failed")
    return merge(projects)


def load_valid(paths) -> HazardProject:
    project = load_project(paths)
    diags = validate_project(project)
    for d in diags:
        _err(str(d))
    if has_errors(diags):
        raise CliError("validation failed", ExitCode.ANALYSIS_ERRORS)
    return project


def event_limit() -> int:
    raw = os.environ.get("HYSAFE_EVENT_LIMIT")
    if raw is None:
        return fta_engine.DEFAULT_EVENT_LIMIT
    try:
        value = int(raw)
    except ValueError:
        raise CliError(f"HYSAFE_EVENT_LIMIT must be an integer, got {raw!r}") from None
    if value < 1:
        raise CliError("HYSAFE_EVENT_LIMIT must be >= 1")
    return value


def mitigation_ids(project: HazardProject, arg: str | None) -> list[str]:
    if arg is None:
        return []
    if arg == "all":
        return [m.id for m in project.mitigations]
    ids = [s.strip() for s in arg.split(",") if s.strip()]
    unknown = [i for i in ids if project.mitigation(i) is None]
    if unknown:
        raise CliError(f"unknown mitigation id(s): {', '.join(unknown)}")
    return ids


def pick_tree(project: HazardProject, tree_id: str | None):
    if not project.trees:
        raise CliError("project declares no fault tree")
    if tree_id is None:
        return project.trees[0]
    tree = project.tree(tree_id)
    if tree is None:
        raise CliError(f"unknown fault tree '{tree_id}' (declared: {', '.join(t.id for t in project.trees)})")
    return tree


# --- commands ----------------------------------------------------------------


def cmd_validate(args) -> ExitCode:
    project = load_project(args.paths)
    diags = validate_project(project)
    for d in diags:
        _err(str(d))
    if has_errors(diags):
        return ExitCode.ANALYSIS_ERRORS
    n_err = sum(d.severity == "ERROR" for d in diags)
    print(f"{', '.join(args.paths)}: {n_err} errors, {len(diags) - n_err} warnings")
    return ExitCode.OK


def cmd_fmea(args) -> ExitCode:
    project = load_valid(args.paths)
    ids = mitigation_ids(project, args.mitigate)
    ranked = fmea_engine.rank_fmea(project)
    delta = None
    if args.mitigate is not None:
        delta, _ = fmea_engine.apply_fmea_mitigations(project, ids)
    if args.format == "json":
        doc = {"fmea": reporting.fmea_json(ranked)}
        if delta is not None:
            doc["fmea_delta"] = reporting.delta_json(delta)
        sys.stdout.write(reporting.dumps(doc))
    elif delta is None:
        sys.stdout.write(reporting.render_fmea(ranked, project))
    else:
        sys.stdout.write(reporting.render_fmea_delta(delta, project))
    return ExitCode.OK


def _print_cuts(label: str, report) -> None:
    print(f"{label}minimal cut sets ({len(report.cut_sets)}):")
    for cs in report.cut_sets:
        print("  {" + ", ".join(sorted(cs)) + "}")
    print(f"{label}single points: " + (", ".join(report.single_points) or "(none)"))


def _print_prob(label: str, prob) -> None:
    print(f"{label}top event probability: exact={prob.exact:.12g} rare_event_upper={prob.rare_event_upper:.12g}")


def cmd_fta(args) -> ExitCode:
    project = load_valid(args.paths)
    limit = event_limit()
    tree = pick_tree(project, args.tree)
    show_cuts = args.cutsets or not args.prob
    ids = mitigation_ids(project, args.mitigate)

    before = fta_engine.minimal_cut_sets(tree, limit)
    after_tree = after = None
    if args.mitigate is not None:
        chosen = [project.mitigation(i) for i in ids]
        after_tree = fta_engine.apply_fta_mitigations(tree, chosen, strict=False)
        after = fta_engine.minimal_cut_sets(after_tree, limit)

    prob_before = prob_after = None
    if args.prob:
        prob_before = fta_engine.top_event_probability(tree, limit, before)
        if after is not None:
            prob_after = fta_engine.top_event_probability(after_tree, limit, after)

    print(f"tree: {tree.id}")
    prefix = "before: " if after is not None else ""
    if show_cuts:
        _print_cuts(prefix, before)
    if prob_before is not None:
        _print_prob(prefix, prob_before)
    code = ExitCode.OK
    if after is not None:
        if show_cuts:
            _print_cuts("after: ", after)
        if prob_after is not None:
            _print_prob("after: ", prob_after)
        guarded = sorted(e for e in before.single_points if f"{e}__mitigated" in after_tree.nodes)
        mitigated = sorted(nid[: -len("__mitigated")] for nid in after_tree.nodes if nid.endswith("__mitigated"))
        print("mitigated events: " + (", ".join(mitigated) or "(none)"))
        still_single = sorted(set(mitigated) & set(after.single_points))
        if still_single:
            print("mitigated events still single points: " + ", ".join(still_single))
            code = ExitCode.ANALYSIS_ERRORS
        else:
            print(f"single points removed by mitigation: {len(guarded)}; "
                  "no mitigated event remains a single point")
    if args.dot:
        dot_path = Path(args.dot)
        dot_path.write_text(reporting.render_fta_dot(tree, before), encoding="utf-8")
        _err(f"wrote {args.dot}")
        if after_tree is not None:
            after_path = dot_path.with_name(dot_path.stem + "_mitigated" + dot_path.suffix)
            after_path.write_text(reporting.render_fta_dot(after_tree, after), encoding="utf-8")
            _err(f"wrote {after_path}")
    return code


def cmd_simulate(args) -> ExitCode:
    project = load_valid(args.paths)
    if project.sim_config is None and (args.trials is None or args.seed is None):
        raise CliError("no simulation block in the project; pass both --trials and --seed")
    sim = run_simulation(project, args.mitigated, trials=args.trials, seed=args.seed, workers=args.workers)
    sys.stdout.write(reporting.render_simulation_table(sim))
    print()
    sys.stdout.write(reporting.dumps({"simulation": reporting.simulation_json(sim)}))
    return ExitCode.OK


def cmd_report(args) -> ExitCode:
    project = load_valid(args.paths)
    limit = event_limit()
    ids = mitigation_ids(project, args.mitigate)
    ranked = fmea_engine.rank_fmea(project)
    delta, _ = fmea_engine.apply_fmea_mitigations(project, ids)
    cuts = prob = None
    before_dot = after_dot = ""
    if project.trees:
        tree = pick_tree(project, args.tree)
        cuts = fta_engine.minimal_cut_sets(tree, limit)
        try:
            prob = fta_engine.top_event_probability(tree, limit, cuts)
        except DomainError:
            prob = None  # events without probabilities: structure-only report
        before_dot = reporting.render_fta_dot(tree, cuts)
        after_tree = fta_engine.apply_fta_mitigations(tree, [project.mitigation(i) for i in ids], strict=False)
        after_dot = reporting.render_fta_dot(after_tree, fta_engine.minimal_cut_sets(after_tree, limit))
    sim = run_simulation(project, args.mitigated) if args.simulate else None
    bundle = reporting.ReportBundle(
        fmea_markdown=reporting.render_fmea(ranked, project),
        fmea_delta_markdown=reporting.render_fmea_delta(delta, project),
        fta_dot_before=before_dot,
        fta_dot_after=after_dot if ids else None,
        architecture_dot=reporting.render_architecture_dot(project),
        summary_json=reporting.render_summary_json(project, ranked, cuts, prob, sim),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in bundle.files().items():
        (out / name).write_text(text, encoding="utf-8")
        print(f"wrote {out / name}")
    return ExitCode.OK


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hysafe", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and check a project")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("fmea", help="ranked FMEA, or post-mitigation deltas")
    p.add_argument("paths", nargs="+")
    p.add_argument("--mitigate", metavar="IDS|all", help="comma-separated mitigation ids, or 'all'")
    p.add_argument("--format", choices=("md", "json"), default="md")
    p.set_defaults(func=cmd_fmea)

    p = sub.add_parser("fta", help="cut sets, single points and top-event probability")
    p.add_argument("paths", nargs="+")
    p.add_argument("--tree", help="fault tree id (default: first declared)")
    p.add_argument("--mitigate", metavar="IDS|all")
    p.add_argument("--cutsets", action="store_true", help="print minimal cut sets (default unless --prob)")
    p.add_argument("--prob", action="store_true", help="print exact and rare-event probabilities")
    p.add_argument("--dot", metavar="FILE", help="write the tree as DOT (plus FILE_mitigated with --mitigate)")
    p.set_defaults(func=cmd_fta)

    p = sub.add_parser("simulate", help="Monte Carlo fault injection")
    p.add_argument("paths", nargs="+")
    p.add_argument("--trials", type=_positive_int)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--mitigated", action="store_true")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="write the full report bundle to a directory")
    p.add_argument("paths", nargs="+")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--tree")
    p.add_argument("--mitigate", metavar="IDS|all", default="all")
    p.add_argument("--simulate", action="store_true", help="include a simulation run in summary.json")
    p.add_argument("--mitigated", action="store_true", help="simulate the mitigated stack")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return ExitCode.OK if exc.code == 0 else ExitCode.USAGE
    try:
        return int(args.func(args))
    except CliError as exc:
        _err(f"hysafe: {exc}")
        return int(exc.code)
    except fta_engine.ResourceLimitError as exc:
        _err(f"hysafe: {exc}")
        return int(ExitCode.LIMIT)
    except DomainError as exc:
        _err(f"hysafe: {exc}")
        return int(ExitCode.USAGE)


def run() -> None:
    sys.exit(main())
