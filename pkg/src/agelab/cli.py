"""Command-line entry point: run, validate, and list named experiments.

Configs are flat ``key = value`` text files ('#' starts a comment); the
``experiment`` key selects the schema, and ``--set key=value`` overrides any
entry.  ``run`` writes one CSV per result table, a text report, and a
provenance manifest, then exits 0 if the experiment's internal checks pass,
1 if they fail, 2 on configuration errors, and 3 when the up-front budget
estimate refuses the launch.

CSV files are UTF-8 with a header row, comma delimiter, '.' decimal
separator, and shortest round-trip float formatting, so repeat runs (and
runs with different worker counts) produce byte-identical artifacts.
"""

import argparse
import multiprocessing
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, experiments


class ConfigError(ValueError):
    """Malformed config file or invalid parameter set."""


def parse_config_text(text):
    """Parse flat key=value lines into a string-to-string dict."""
    cfg = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"line {ln}: empty key")
        if key in cfg:
            raise ConfigError(f"line {ln}: duplicate key {key!r}")
        cfg[key] = value
    return cfg


def load_config(path, overrides=()):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = parse_config_text(text)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        cfg[key.strip()] = value.strip()
    if "experiment" not in cfg:
        raise ConfigError("config must name an 'experiment'")
    experiment = cfg.pop("experiment")
    return experiment, cfg


def format_cell(value):
    """One CSV cell; floats use shortest round-trip decimal form."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    text = str(value)
    if "," in text or "\n" in text or '"' in text:
        raise ValueError(f"cell {text!r} needs quoting; not supported")
    return text


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row width {len(row)} != header {len(header)}")
        lines.append(",".join(format_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_manifest(path, experiment, params, wall_seconds, artifacts):
    lines = [f"experiment = {experiment}",
             f"agelab_version = {__version__}"]
    for key in sorted(params):
        val = params[key]
        if isinstance(val, tuple):
            rendered = ",".join(format_cell(v) for v in val)
        else:
            rendered = format_cell(val)
        lines.append(f"{key} = {rendered}")
    lines.append(f"wall_seconds = {wall_seconds:.3f}")
    for name in artifacts:
        lines.append(f"artifact = {name}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _cmd_list(_args):
    for name in sorted(experiments.SCHEMAS):
        print(name)
        schema = experiments.SCHEMAS[name]
        for key, spec in schema.items():
            if spec.default is None:
                default = "(required)"
            elif isinstance(spec.default, tuple):
                default = "default " + ",".join(format_cell(v)
                                                for v in spec.default)
            else:
                default = f"default {format_cell(spec.default)}"
            print(f"  {key} <{spec.kind}> {default} — {spec.doc}")
    return 0


def _cmd_validate(args):
    try:
        experiment, cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    violations = experiments.validate_params(experiment, cfg)
    if violations:
        print(f"{args.config}: {len(violations)} violation(s)")
        for v in violations:
            print(f"  - {v}")
        return 2
    print(f"{args.config}: ok ({experiment})")
    return 0


def _cmd_run(args):
    try:
        experiment, cfg = load_config(args.config, args.set or ())
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    violations = experiments.validate_params(experiment, cfg)
    if violations:
        print(f"config error in {args.config}:", file=sys.stderr)
        for v in violations:
            print(f"  - {v}", file=sys.stderr)
        return 2
    params = experiments.resolve_params(experiment, cfg)
    try:
        estimate = experiments.check_budget(experiment, params)
    except experiments.BudgetError as exc:
        print(f"budget refusal: {exc}", file=sys.stderr)
        return 3

    out_dir = Path(args.out) if args.out else Path("agelab_out") / experiment
    out_dir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    if args.workers > 1:
        with multiprocessing.Pool(args.workers) as pool:
            result = experiments.RUNNERS[experiment](params, pool.map)
    else:
        result = experiments.RUNNERS[experiment](params, None)
    wall = time.perf_counter() - t0

    artifacts = []
    for stem in sorted(result.tables):
        header, rows = result.tables[stem]
        name = f"{experiment}_{stem}.csv"
        write_csv(out_dir / name, header, rows)
        artifacts.append(name)
    report_name = f"{experiment}_report.txt"
    (out_dir / report_name).write_text(result.report + "\n",
                                       encoding="utf-8", newline="\n")
    artifacts.append(report_name)
    write_manifest(out_dir / "manifest.txt", experiment, params, wall,
                   artifacts)

    print(result.report)
    print(f"estimated events: {estimate:.3g}; wall time {wall:.1f}s; "
          f"wrote {len(artifacts)} artifact(s) to {out_dir}")
    return 0 if result.passed else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="agelab",
        description="run numerical aging experiments from flat config files")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment")
    p_run.add_argument("config", help="path to a key=value config file")
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config entry (repeatable)")
    p_run.add_argument("--workers", type=int, default=1,
                       help="process count for ensemble tasks (default 1)")
    p_run.add_argument("--out", default=None,
                       help="output directory (default agelab_out/<experiment>)")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="check a config without running")
    p_val.add_argument("config", help="path to a key=value config file")
    p_val.set_defaults(func=_cmd_validate)

    p_list = sub.add_parser("list-experiments",
                            help="show experiments and their parameter schemas")
    p_list.set_defaults(func=_cmd_list)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", 1) is not None and getattr(args, "workers", 1) < 1:
        print("config error: --workers must be >= 1", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
