"""Command line front end: ``noisyqc run | list | emit-schema``.

Exit status: 0 success, 3 finished but tolerance-flagged, 2 usage error,
1 runtime error. The thread count for trajectory loops comes from the
``NOISYQC_THREADS`` environment variable (default 1).
"""

import argparse
import json
import sys

import yaml

from . import runner

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_FLAGGED = 0, 1, 2, 3


def _parse_set(items):
    params = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise runner.ConfigError(f"--set expects key=value, got {item!r}")
        value = yaml.safe_load(raw)
        if isinstance(value, str):
            # YAML 1.1 reads forms like 1e-3 as strings
            try:
                value = float(value)
            except ValueError:
                pass
        params[key] = value
    return params


def _load_config(args):
    cfg = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = yaml.safe_load(fh) or {}
        if not isinstance(cfg, dict):
            raise runner.ConfigError("config file must hold a mapping")
    if args.scenario:
        cfg["scenario"] = args.scenario
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.set:
        cfg["params"] = {**(cfg.get("params") or {}), **_parse_set(args.set)}
    output = cfg.pop("output", None)
    fmt = cfg.pop("format", None)
    return cfg, args.output or output, args.format or fmt or "json"


def _cmd_run(args):
    cfg, output, fmt = _load_config(args)
    if fmt not in ("json", "csv"):
        raise runner.ConfigError(f"unknown format {fmt!r}")
    record = runner.run_scenario(cfg)
    text = runner.emit(record, output, fmt)
    if output is None:
        sys.stdout.write(text)
    else:
        print(f"{record['config']['scenario']}: {record['status']} -> {output}", file=sys.stderr)
    return EXIT_FLAGGED if record["status"] == "flagged" else EXIT_OK


def _cmd_list(args):
    catalog = runner.list_scenarios()
    if args.format == "json":
        print(json.dumps(catalog, indent=2))
        return EXIT_OK
    for entry in catalog:
        print(f"{entry['name']}: {entry['summary']}")
        print(f"    anchor: {entry['anchor']}")
        for k, v in entry["defaults"].items():
            print(f"    {k} = {v!r}")
    return EXIT_OK


def _cmd_emit_schema(args):
    if args.scenario:
        if args.scenario not in runner.CATALOG:
            raise runner.ConfigError(f"unknown scenario {args.scenario!r}")
        schema = runner.CATALOG[args.scenario].param_schema()
    else:
        schema = runner.run_record_schema()
    text = json.dumps(schema, indent=2) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="noisyqc", description="Seeded scenario runner for noisy quantum evolution.")
    sub = p.add_subparsers(dest="verb", required=True)

    r = sub.add_parser("run", help="run one scenario and emit its record")
    r.add_argument("--config", help="YAML config file (scenario, seed, params)")
    r.add_argument("--scenario", help="scenario name; overrides the config file")
    r.add_argument("--seed", type=int, help="master seed override")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="parameter override (repeatable)")
    r.add_argument("--output", help="write the record here instead of stdout")
    r.add_argument("--format", choices=["json", "csv"])
    r.set_defaults(func=_cmd_run)

    ls = sub.add_parser("list", help="show the scenario catalog")
    ls.add_argument("--format", choices=["text", "json"], default="text")
    ls.set_defaults(func=_cmd_list)

    es = sub.add_parser("emit-schema", help="print the run-record schema or a scenario's parameter schema")
    es.add_argument("--scenario")
    es.add_argument("--output")
    es.set_defaults(func=_cmd_emit_schema)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except runner.ConfigError as exc:
        print(f"noisyqc: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        print(f"noisyqc: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
