"""Command line: ``radinfo run <experiment> [--flag value | key=value ...]``.

Flags are generated from the experiment's config dataclass; list-valued
fields take comma-separated values. ``--config file.json`` supplies defaults
that explicit flags override. Exit status: 0 all pass flags true, 1 some flag
false or the experiment raised, 2 usage or config error (nothing written).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .experiments import EXPERIMENTS


class UsageError(Exception):
    pass


def _elem_type(default):
    if isinstance(default, bool):
        return _parse_bool
    if isinstance(default, int):
        return int
    if isinstance(default, float):
        return float
    return str


def _parse_bool(s):
    if isinstance(s, bool):
        return s
    if str(s).lower() in ("1", "true", "yes"):
        return True
    if str(s).lower() in ("0", "false", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _field_default(f):
    if f.default is not dataclasses.MISSING:
        return f.default
    return f.default_factory()


def _list_elem(default):
    if not default:
        return float
    if all(isinstance(v, int) and not isinstance(v, bool) for v in default):
        # a user may still pass floats where ints are the default, e.g. p = 1.5
        return _int_or_float
    if all(isinstance(v, (int, float)) for v in default):
        return float
    return str


def _int_or_float(s):
    v = float(s)
    return int(v) if v.is_integer() and "." not in str(s) and "e" not in str(s).lower() else v


def _converter(f):
    default = _field_default(f)
    if isinstance(default, list):
        elem = _list_elem(default)

        def conv(v):
            items = v if isinstance(v, list) else [s for s in str(v).split(",") if s.strip() != ""]
            return [elem(x.strip() if isinstance(x, str) else x) for x in items]
        return conv
    base = _elem_type(default)
    if base is float:
        return lambda v: float(v)
    if base is int:
        def conv_int(v):
            fv = float(v)
            if not fv.is_integer():
                raise ValueError(f"expected an integer, got {v!r}")
            return int(fv)
        return conv_int
    return base


def build_config(name: str, file_values: dict, flag_values: dict):
    cls, _ = EXPERIMENTS[name]
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(file_values) - set(fields))
    if unknown:
        raise UsageError(f"unknown config keys for {name}: {', '.join(unknown)}")
    merged = {**file_values, **{k: v for k, v in flag_values.items() if v is not None}}
    kwargs = {}
    for k, v in merged.items():
        try:
            kwargs[k] = _converter(fields[k])(v)
        except (TypeError, ValueError) as e:
            raise UsageError(f"bad value for {k}: {e}") from None
    return cls(**kwargs)


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radinfo", allow_abbrev=False,
                                     description="Radius-of-information experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list experiments")
    run = sub.add_parser("run", help="run one experiment")
    exps = run.add_subparsers(dest="experiment", required=True)
    for name, (cls, _) in EXPERIMENTS.items():
        p = exps.add_parser(name, allow_abbrev=False)
        p.add_argument("--config", help="JSON file with config values (flags override)")
        p.add_argument("--out", help="output directory (default results/<experiment>)")
        p.add_argument("--workers", type=int, default=1, help="parallel workers (results do not depend on it)")
        for f in dataclasses.fields(cls):
            d = _field_default(f)
            shown = ",".join(map(str, d)) if isinstance(d, list) else d
            p.add_argument(f"--{f.name}", dest=f.name, default=None, help=f"default: {shown}")
    return parser


def _jsonable(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    if dataclasses.is_dataclass(o):
        return dataclasses.asdict(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def dump_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, default=_jsonable) + "\n"


def write_csv(path: Path, rows: list[dict]):
    if not rows:
        return
    header = []
    for r in rows:
        for k in r:
            if k not in header:
                header.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (json.dumps(v, default=_jsonable) if isinstance(v, (list, dict)) else v)
                        for k, v in r.items()})


def run_experiment(name: str, cfg, out: Path, workers: int = 1) -> int:
    _, runner = EXPERIMENTS[name]
    echo = dataclasses.asdict(cfg)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        results, flags, tables = runner(cfg, workers=workers)
    except Exception as e:  # experiment failure: diagnostic document, status 1
        doc = {"experiment": name, "config_echo": echo, "results": None, "pass_flags": {},
               "error": {"type": type(e).__name__, "message": str(e)},
               "wall_time": time.perf_counter() - t0}
        (out / "result.json").write_text(dump_json(doc))
        print(f"{name}: FAILED ({type(e).__name__}: {e})", file=sys.stderr)
        return 1
    flags = {k: bool(v) for k, v in flags.items()}
    doc = {"experiment": name, "config_echo": echo, "results": results, "pass_flags": flags,
           "wall_time": time.perf_counter() - t0}
    (out / "result.json").write_text(dump_json(doc))
    for tname, rows in tables.items():
        write_csv(out / f"{tname}.csv", rows)
    for k, v in flags.items():
        print(f"{'PASS' if v else 'FAIL'} {k}")
    return 0 if all(flags.values()) else 1


def _expand_pairs(argv):
    # bare key=value tokens are shorthand for --key value
    out = []
    for tok in argv:
        if not tok.startswith("-") and "=" in tok and tok.split("=", 1)[0].isidentifier():
            key, val = tok.split("=", 1)
            out += [f"--{key}", val]
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = _make_parser()
    argv = _expand_pairs(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.command == "list":
        for name in EXPERIMENTS:
            print(name)
        return 0
    name = args.experiment
    cls, _ = EXPERIMENTS[name]
    try:
        file_values = {}
        if args.config:
            try:
                file_values = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as e:
                raise UsageError(f"cannot read config: {e}") from None
            if not isinstance(file_values, dict):
                raise UsageError("config file must hold a JSON object")
        flag_values = {f.name: getattr(args, f.name) for f in dataclasses.fields(cls)}
        cfg = build_config(name, file_values, flag_values)
        if args.workers < 1:
            raise UsageError("workers must be >= 1")
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    out = Path(args.out) if args.out else Path("results") / name
    return run_experiment(name, cfg, out, args.workers)


if __name__ == "__main__":
    sys.exit(main())
