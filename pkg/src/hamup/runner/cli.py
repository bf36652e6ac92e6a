"""Command-line entry point: ``hamup run | compare | theory | preset list``.

Exit code 0 on success.  On failure a JSON object
``{"ok": false, "error": <type>, "message": <text>}`` is printed to stdout and
the exit code is nonzero (2 for configuration errors, 1 otherwise).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from ..errors import ConfigurationError, HamupError
from .config import load_config
from .experiment import (
    build_run_config,
    format_table,
    make_target,
    oracle_compare,
    repetition_seed,
    run_experiment,
    theory_table,
)
from .presets import preset, preset_description, preset_names


def _model(args):
    if bool(args.config) == bool(args.preset):
        raise ConfigurationError("give exactly one of a config path or --preset")
    if args.preset:
        model = preset(args.preset, n=args.n)
    else:
        model = load_config(args.config)
        if args.n is not None:
            raise ConfigurationError("--n applies to presets only; edit the config instead")
    updates = {}
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if getattr(args, "repetitions", None) is not None:
        updates["repetitions"] = args.repetitions
    if getattr(args, "out", None):
        updates["output_dir"] = args.out
    return model.model_copy(update=updates) if updates else model


def _cmd_run(args) -> int:
    model = _model(args)

    def progress(name, rep, trace):
        if not args.quiet:
            d = trace.final.get("trace_distance")
            print(f"{name} rep {rep}: bases={trace.bases_consumed} updates={trace.updates} distance={d:.4g} {trace.stop_reason}", file=sys.stderr)

    report = run_experiment(model, progress=progress)
    out = {
        "ok": True,
        "output_dir": str(Path(model.output_dir)),
        "variants": {
            name: {
                "median_final_trace_distance": v.median("trace_distance"),
                "median_bases_consumed": v.median("bases_consumed"),
            }
            for name, v in report.variants.items()
        },
    }
    print(json.dumps(out, indent=2))
    return 0


def _cmd_compare(args) -> int:
    model = _model(args)
    results = {}
    ok = True
    for name, target_spec, run_model in model.resolved_variants():
        cfg = build_run_config(name, run_model, model.master_seed)
        if args.max_bases is not None:
            cfg = replace(cfg, max_bases=args.max_bases)
        seed = repetition_seed(model.master_seed, 0)
        rep = oracle_compare(cfg, make_target(target_spec, run_model, seed), seed)
        results[name] = rep.to_dict()
        ok &= rep.passed
    print(json.dumps({"ok": ok, "variants": results}, indent=2))
    return 0 if ok else 1


def _cmd_theory(args) -> int:
    model = _model(args)
    measured = {}
    report_path = Path(args.report) if args.report else Path(model.output_dir) / "report.json"
    if report_path.exists():
        data = json.loads(report_path.read_text())
        for name, v in data.get("variants", {}).items():
            if v.get("runs"):
                measured[name] = v["runs"][-1]
    rows = []
    for name, _, run_model in model.resolved_variants():
        row = {"variant": name}
        row.update(theory_table(build_run_config(name, run_model, model.master_seed), measured.get(name)))
        rows.append(row)
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print(format_table(rows))
    return 0


def _cmd_preset(args) -> int:
    if args.action == "list":
        for name in preset_names():
            print(f"{name}\t{preset_description(name)}")
        return 0
    from .config import dump_config

    print(dump_config(preset(args.name, n=args.n)), end="")
    return 0


def _add_common(p):
    p.add_argument("config", nargs="?", help="YAML experiment config")
    p.add_argument("--preset", choices=preset_names(), help="use a built-in scenario instead of a config file")
    p.add_argument("--seed", type=int, help="master seed override")
    p.add_argument("--n", type=int, help="system size for presets")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hamup", description="State reconstruction from random basis measurements.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment and write traces, plot data and report.json")
    _add_common(p)
    p.add_argument("--out", help="output directory override")
    p.add_argument("--repetitions", type=int, help="repetition count override")
    p.add_argument("--quiet", action="store_true", help="no per-run progress on stderr")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="diff the streaming path against the dense path on a shared seed")
    _add_common(p)
    p.add_argument("--max-bases", type=int, help="stop both runs after this many bases (the streaming path slows down as terms accumulate)")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("theory", help="predicted resources next to the latest measured ones")
    _add_common(p)
    p.add_argument("--out", help="directory whose report.json supplies measured values")
    p.add_argument("--report", help="explicit report.json path")
    p.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    p.set_defaults(func=_cmd_theory)

    p = sub.add_parser("preset", help="list or show built-in scenarios")
    p.add_argument("action", choices=["list", "show"])
    p.add_argument("name", nargs="?", choices=preset_names())
    p.add_argument("--n", type=int, help="system size")
    p.set_defaults(func=_cmd_preset)
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"ok": False, "error": kind, "message": message}))
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "preset" and args.action == "show" and not args.name:
        return _fail("ConfigurationError", "preset show needs a preset name", 2)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        return _fail(type(exc).__name__, str(exc), 2)
    except HamupError as exc:
        return _fail(type(exc).__name__, str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
