"""Command line entry point: ``tabudistrict {generate,solve,experiment,validate,moves}``."""

from __future__ import annotations

import argparse
import io
import json
import os
import sys

from .contiguity import analyze_district
from .instance import InstanceError, dump_instance, generate_grid, read_instance, write_instance
from .harness import ExperimentConfig, run_experiment, validate_plan
from .moves import enumerate_candidates, count_valid_switches
from .plan import Plan, PlanError, plan_summary, plan_to_csv, read_plan_csv
from .search import SearchConfig, multi_restart


def _on_off(text: str) -> bool:
    t = text.strip().lower()
    if t in ("on", "true", "1", "yes"):
        return True
    if t in ("off", "false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {text!r}")


def _non_negative(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError("value must be non-negative")
    return v


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="base random seed (default 0)")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output file or directory")
    p.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS,
                   help="output format (default json)")
    return p


def _objective_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--districts", "-r", type=int, required=True)
    p.add_argument("--w-pop", type=_non_negative, default=1.0)
    p.add_argument("--w-comp", type=_non_negative, default=0.0)
    p.add_argument("--tabu-factor", type=float, default=0.08)
    p.add_argument("--nim-factor", type=float, default=3.0)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="tabudistrict", parents=[common],
                                     description="Contiguous districting with composite-move tabu search.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a synthetic grid instance")
    g.add_argument("--rows", type=int, required=True)
    g.add_argument("--cols", type=int, required=True)
    g.add_argument("--population", default="uniform:1",
                   help='"uniform:C" or "lognormal:MU,SIGMA" (default uniform:1)')
    g.add_argument("--total", type=int, default=None, help="rescale sampled populations to this total")

    s = sub.add_parser("solve", parents=[common], help="optimize a plan")
    s.add_argument("--instance", required=True)
    _objective_args(s)
    s.add_argument("--method", choices=("greedy", "kl", "tabu"), default="tabu")
    s.add_argument("--composite", type=_on_off, default=True)
    s.add_argument("--restarts", type=int, default=1)
    s.add_argument("--jobs", type=int, default=1)

    e = sub.add_parser("experiment", parents=[common], help="multi-restart comparison of presets")
    e.add_argument("--instance", required=True)
    _objective_args(e)
    e.add_argument("--presets", default="greedy,kl,tabu,greedy*,kl*,tabu*",
                   help="comma separated presets; a trailing * enables composite moves")
    e.add_argument("--restarts", type=int, default=100)
    e.add_argument("--jobs", type=int, default=1)

    v = sub.add_parser("validate", parents=[common], help="report metrics of a plan CSV")
    v.add_argument("--instance", required=True)
    v.add_argument("--plan", required=True)

    m = sub.add_parser("moves", parents=[common], help="dump cut points and candidate moves")
    m.add_argument("--instance", required=True)
    m.add_argument("--plan", required=True)
    m.add_argument("--composite", type=_on_off, default=True)
    grp = m.add_mutually_exclusive_group(required=True)
    grp.add_argument("--district", type=int)
    grp.add_argument("--pair", type=int, nargs=2, metavar=("A", "B"))
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_generate(args) -> int:
    inst = generate_grid(args.rows, args.cols, args.population, seed=args.seed, target_total=args.total)
    if args.format == "csv":
        if not args.out:
            raise SystemExit("generate --format csv needs --out DIRECTORY")
        write_instance(inst, args.out, "csv-pair")
        return 0
    buf = io.StringIO()
    dump_instance(inst, buf, "json")
    _emit(buf.getvalue() + "\n", args.out)
    return 0


def _search_config(args, method: str, composite: bool) -> SearchConfig:
    return SearchConfig(
        r=args.districts, method=method, composite_enabled=composite, seed=args.seed,
        weight_popdev=args.w_pop, weight_compactness=args.w_comp,
        tabu_factor=args.tabu_factor, nim_factor=args.nim_factor,
    )


def _cmd_solve(args) -> int:
    inst = read_instance(args.instance)
    config = _search_config(args, args.method, args.composite)
    runs = multi_restart(inst, config, args.restarts, args.jobs)
    best = min(range(len(runs)), key=lambda i: (runs[i].value.combined, i))
    res = runs[best]
    plan = Plan(inst, list(res.assignment), config.r)
    summary = {
        "method": config.preset,
        "restart": best,
        "seed": res.seed,
        "objective": res.value.as_dict(),
        "iterations": res.iterations,
        "seconds": res.elapsed,
        "stop_reason": res.stop_reason,
        "districts": plan_summary(plan),
    }
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "plan.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write(plan_to_csv(plan))
        with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    elif args.format == "csv":
        sys.stdout.write(plan_to_csv(plan))
    else:
        summary["assignment"] = plan.labels()
        sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return 0


def _cmd_experiment(args) -> int:
    if not args.out:
        raise SystemExit("experiment needs --out DIRECTORY")
    config = ExperimentConfig(
        instance_path=args.instance,
        presets=[p.strip() for p in args.presets.split(",") if p.strip()],
        restarts=args.restarts, r=args.districts, seed=args.seed,
        weight_popdev=args.w_pop, weight_compactness=args.w_comp,
        out_dir=args.out, parallelism=args.jobs,
        search_options={"tabu_factor": args.tabu_factor, "nim_factor": args.nim_factor},
    )
    result = run_experiment(config)
    for preset, st in result.stats.items():
        print(f"{preset:8s} median={st.median:g} iqr={st.iqr:g} min={st.min:g} "
              f"time={st.mean_time_per_run:.3f}s/run")
    return 0


def _cmd_validate(args) -> int:
    inst = read_instance(args.instance)
    report = validate_plan(inst, args.plan)
    if args.format == "csv":
        lines = ["district,population,contiguous,ppi"]
        for d in sorted(report.populations, key=int):
            lines.append(f"{d},{report.populations[d]},{int(report.contiguous[d])},{report.ppi[d]}")
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps(report.as_dict(), indent=2) + "\n"
    _emit(text, args.out)
    return 0 if report.ok else 1


def _cmd_moves(args) -> int:
    inst = read_instance(args.instance)
    with open(args.plan, "rb") as fh:
        plan = read_plan_csv(inst, fh)
    ids = inst.ids
    pool = enumerate_candidates(inst, plan, composite=args.composite)

    def move_rec(m):
        return {"anchor": ids[m.anchor], "members": sorted(ids[i] for i in m.members),
                "population": m.pop}

    if args.district is not None:
        d = args.district
        tree = analyze_district(inst, plan.members[d])
        doc = {
            "district": d,
            "cut_points": sorted(ids[c] for c in tree.cut_points),
            "bccs": [sorted(ids[i] for i in b) for b in tree.bccs],
            "moves": {str(b): [move_rec(m) for m in pool.moves(d, b)]
                      for b in range(plan.r) if pool.moves(d, b)},
        }
    else:
        a, b = args.pair
        ab, ba = pool.moves(a, b), pool.moves(b, a)
        doc = {
            "pair": [a, b],
            "forward": [move_rec(m) for m in ab],
            "backward": [move_rec(m) for m in ba],
            "valid_switches": count_valid_switches(ab, ba),
        }
    if args.format == "csv":
        rows = ["direction,anchor,population,members"]
        for key in ("forward", "backward") if "pair" in doc else sorted(doc["moves"]):
            lst = doc[key] if "pair" in doc else doc["moves"][key]
            for rec in lst:
                rows.append(f"{key},{rec['anchor']},{rec['population']},"
                            f"{' '.join(map(str, rec['members']))}")
        text = "\n".join(rows) + "\n"
    else:
        text = json.dumps(doc, indent=2) + "\n"
    _emit(text, args.out)
    return 0


COMMANDS = {
    "generate": _cmd_generate,
    "solve": _cmd_solve,
    "experiment": _cmd_experiment,
    "validate": _cmd_validate,
    "moves": _cmd_moves,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.seed = getattr(args, "seed", 0)
    args.out = getattr(args, "out", None)
    args.format = getattr(args, "format", "json")
    try:
        return COMMANDS[args.command](args)
    except (InstanceError, PlanError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
