"""Command-line front end.

Exit codes: 0 success; 2 invalid flags or config; 3 high-SNR condition
violated under ``--strict``; 4 some probe had no non-outage trial; 5 the
simulated cost fell below the converse bound (an implementation bug).
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path

import jsonschema

from . import __version__
from .errors import AllOutage, WeakNoiseError
from .harness import ExperimentConfig, converse_check, run_experiment, snr_sweep
from .scan import diagonal_scan
from .theory import (
    ChannelSpec,
    ErrorCostSpec,
    awgn_capacity,
    check_assumption_a1,
    optimal_rates,
    supmin_oracle,
    weak_noise_exponent,
)

EXIT_OK, EXIT_USAGE, EXIT_A1, EXIT_ALL_OUTAGE, EXIT_CONVERSE = 0, 2, 3, 4, 5

SUMMARY_COLUMNS = ("n", "sup_cost", "delta_n", "exponent_theory", "exponent_fit", "converse_bound")
SWEEP_COLUMNS = ("gamma", "sup_cost", "delta_n", "exponent_theory", "converse_bound")
SCAN_COLUMNS = ("k", "i", "j", "u", "v", "is_rollover")
CONVERSE_COLUMNS = ("n", "bound", "measured_sup_cost", "delta_n", "locus_length", "satisfied")

_number = {"type": "number"}
CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "weaknoise experiment config",
    "type": "object",
    "required": ["ecf", "channel", "block_lengths", "trials_per_probe"],
    "additionalProperties": False,
    "properties": {
        "ecf": {
            "type": "object", "required": ["q", "a"], "additionalProperties": False,
            "properties": {"q": {"type": "number", "minimum": 1},
                           "a": {"type": "array", "items": _number, "minItems": 1}},
        },
        "channel": {
            "type": "object", "additionalProperties": False,
            "properties": {"P": {"type": "number", "exclusiveMinimum": 0},
                           "sigma2": {"type": "number", "exclusiveMinimum": 0},
                           "gamma": {"type": "number", "exclusiveMinimum": 0}},
            "oneOf": [{"required": ["P", "sigma2"], "not": {"required": ["gamma"]}},
                      {"required": ["gamma"], "not": {"required": ["sigma2"]}}],
        },
        "modulator": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["quantize_and_code", "linear", "spiral2d"]},
                "levels": {"type": ["array", "null"], "items": {"type": "integer", "minimum": 1}},
                "rate_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "codebook_seed": {"type": ["integer", "null"]},
                "turns": {"type": "number", "exclusiveMinimum": 0},
                "outage_radius": {"type": "number", "exclusiveMinimum": 0},
                "estimator_grid": {"type": "integer", "minimum": 2},
            },
        },
        "block_lengths": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "trials_per_probe": {"type": "integer", "minimum": 1},
        "probes": {
            "type": "object", "additionalProperties": False,
            "properties": {"points": {"type": "array", "items": {"type": "array", "items": _number}},
                           "random": {"type": "integer", "minimum": 0},
                           "corner": {"type": "integer", "minimum": 0}},
        },
        "master_seed": {"type": "integer", "minimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "converse": {
            "type": "object", "additionalProperties": False,
            "properties": {"scan_levels": {"type": "array", "items": {"type": "integer", "minimum": 1},
                                           "minItems": 2, "maxItems": 2},
                           "delta": {"type": ["number", "null"], "minimum": 0, "maximum": 1}},
        },
        "sweep": {
            "type": "object", "additionalProperties": False,
            "properties": {"gammas": {"type": "array", "items": {"type": "number", "minimum": 0},
                                      "minItems": 1}},
        },
    },
}


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """Floats with 17 significant digits; None as an empty field."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return "%.17g" % x


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_digest(raw: dict) -> str:
    """sha256 of the canonical config; ``workers`` is excluded since it cannot change results."""
    body = {k: v for k, v in raw.items() if k != "workers"}
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()


def load_config(path, seed=None, workers=None) -> tuple[dict, ExperimentConfig]:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise UsageError(f"invalid config: {exc.message}") from exc
    if seed is not None:
        raw["master_seed"] = seed
    if workers is not None:
        raw["workers"] = workers
    return raw, config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    ch = raw["channel"]
    if "gamma" in ch:
        channel = ChannelSpec.from_gamma(ch["gamma"], ch.get("P", 1.0))
    else:
        channel = ChannelSpec(ch["P"], ch["sigma2"])
    mod = raw.get("modulator", {})
    probes = raw.get("probes", {})
    conv = raw.get("converse", {})
    try:
        return ExperimentConfig(
            ecf=ErrorCostSpec(raw["ecf"]["q"], tuple(raw["ecf"]["a"])),
            channel=channel,
            kind=mod.get("kind", "quantize_and_code"),
            block_lengths=tuple(raw["block_lengths"]),
            trials_per_probe=raw["trials_per_probe"],
            levels=tuple(mod["levels"]) if mod.get("levels") else None,
            rate_fraction=mod.get("rate_fraction", 1.0),
            probes=tuple(tuple(p) for p in probes.get("points", ())),
            random_probes=probes.get("random", 32),
            corner=probes.get("corner", 2),
            master_seed=raw.get("master_seed", 0),
            codebook_seed=mod.get("codebook_seed"),
            workers=raw.get("workers", 1),
            outage_radius=mod.get("outage_radius", 0.1),
            turns=mod.get("turns", 1.0),
            estimator_grid=mod.get("estimator_grid", 2049),
            scan_levels=tuple(conv["scan_levels"]) if conv.get("scan_levels") else None,
            converse_delta=conv.get("delta"),
        )
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid config: {exc}") from exc


def write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    Path(path).write_text(buf.getvalue())


def ndjson_lines(table):
    """One JSON object per trial with fixed field order."""
    for r in table.records():
        yield ('{"n":%d,"probe":%d,"u":[%s],"u_hat":[%s],"outage":%s,"cost":%s,"trial":%d}\n' % (
            r.n, r.probe, ",".join(fmt(x) for x in r.u), ",".join(fmt(x) for x in r.u_hat),
            "true" if r.outage else "false", fmt(r.cost), r.trial))


def write_ndjson(path, table) -> None:
    with open(path, "w") as fh:
        fh.writelines(ndjson_lines(table))


def summary_rows(summary):
    fit = summary.exponent_fit.slope if summary.exponent_fit else None
    for b in summary.blocks:
        yield (b.n, b.sup_cost, b.delta_n, summary.exponent_theory, fit, b.converse_bound)


def write_manifest(out: Path, raw: dict, command: str, outputs) -> Path:
    manifest = {
        "command": command,
        "config_digest": config_digest(raw),
        "config": raw,
        "tool_version": __version__,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "outputs": sorted(str(Path(o).name) for o in outputs),
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _parse_a(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def cmd_theory(args) -> int:
    a = args.a
    if args.d is not None:
        if len(a) == 1:
            a = a * args.d
        elif len(a) != args.d:
            raise UsageError(f"--a has {len(a)} entries but --d is {args.d}")
    if args.gamma is not None:
        if args.gamma < 0:
            raise UsageError("--gamma must be nonnegative")
        gamma = args.gamma
    elif args.P is not None and args.sigma2 is not None:
        gamma = ChannelSpec(args.P, args.sigma2).gamma
    else:
        raise UsageError("give --gamma, or both --P and --sigma2")
    try:
        ecf = ErrorCostSpec(args.q, a)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    C = awgn_capacity(gamma)
    ok = check_assumption_a1(ecf, gamma)
    result = {"gamma": gamma, "capacity": C, "d": ecf.d, "q": ecf.q, "a": list(ecf.a), "a1_holds": ok,
              "exponent": weak_noise_exponent(ecf, gamma) if ok else None,
              "rates": list(optimal_rates(ecf, gamma).rates) if ok else None}
    if args.oracle:
        if ecf.d > 4:
            raise UsageError("--oracle supports d <= 4")
        result["oracle"] = supmin_oracle(ecf, gamma, args.oracle)
        result["oracle_grid_steps"] = args.oracle
    if args.json:
        print(json.dumps(result, sort_keys=True))
    else:
        unit = "bits" if args.bits else "nats"
        scale = 1 / math.log(2) if args.bits else 1.0

        def show(x):
            return f"{x * scale:.12g}"
        print(f"C(gamma)     {show(C)} {unit}/use")
        print(f"A.1          {'holds' if ok else 'VIOLATED'}")
        if ok:
            print(f"E(gamma)     {show(result['exponent'])} {unit}/use")
            print(f"R*           [{', '.join(show(r) for r in result['rates'])}] {unit}/use")
        else:
            print("E(gamma)     n/a (closed form requires A.1)")
        if args.oracle:
            print(f"oracle       {show(result['oracle'])} {unit}/use (grid_steps={args.oracle})")
    if not ok and args.strict:
        return EXIT_A1
    return EXIT_OK


def cmd_scan(args) -> int:
    if args.Mu < 1 or args.Mv < 1:
        raise UsageError("--Mu and --Mv must be >= 1")
    scan = diagonal_scan(args.Mu, args.Mv)
    if args.csv:
        write_csv(args.csv, SCAN_COLUMNS, scan.to_rows())
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SCAN_COLUMNS)
        w.writerows([fmt(x) for x in row] for row in scan.to_rows())
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    raw, config = load_config(args.config, args.seed, args.workers)
    out = _out_dir(args)
    code = EXIT_OK
    try:
        summary, table = run_experiment(config)
    except AllOutage as exc:
        print(f"error: {exc}", file=sys.stderr)
        summary, table, code = exc.summary, exc.table, EXIT_ALL_OUTAGE
    files = [out / "trials.ndjson", out / "summary.csv"]
    write_ndjson(files[0], table)
    write_csv(files[1], SUMMARY_COLUMNS, summary_rows(summary))
    write_manifest(out, raw, "simulate", files)
    if args.json:
        print(json.dumps([dict(zip(SUMMARY_COLUMNS, r)) for r in summary_rows(summary)]))
    return code


def cmd_sweep(args) -> int:
    raw, config = load_config(args.config, args.seed, args.workers)
    gammas = args.gammas or raw.get("sweep", {}).get("gammas")
    if not gammas:
        raise UsageError("no SNR list: pass --gammas or set sweep.gammas in the config")
    out = _out_dir(args)
    try:
        result = snr_sweep(config, gammas)
    except AllOutage as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALL_OUTAGE
    path = out / "sweep.csv"
    write_csv(path, SWEEP_COLUMNS, ((r.gamma, r.sup_cost, r.delta_n, r.exponent_theory, r.converse_bound)
                                    for r in result.rows))
    write_manifest(out, raw, "sweep", [path])
    print(f"n={result.n}: cost rises with gamma at {result.cost_inversions} step(s), "
          f"outage rises at {result.outage_inversions} step(s)", file=sys.stderr)
    return EXIT_OK


def cmd_converse(args) -> int:
    raw, config = load_config(args.config, args.seed, args.workers)
    out = _out_dir(args)
    try:
        checks = converse_check(config)
    except AllOutage as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALL_OUTAGE
    except WeakNoiseError as exc:
        raise UsageError(str(exc)) from exc
    path = out / "converse.csv"
    write_csv(path, CONVERSE_COLUMNS, ((c.n, c.bound, c.measured_sup_cost, c.delta_n, c.locus_length,
                                        c.satisfied) for c in checks))
    write_manifest(out, raw, "converse", [path])
    if args.json:
        print(json.dumps([{"n": c.n, "bound": c.bound, "measured_sup_cost": c.measured_sup_cost,
                           "satisfied": c.satisfied} for c in checks]))
    return EXIT_OK if all(c.satisfied for c in checks) else EXIT_CONVERSE


def _common_flags(suppress: bool) -> argparse.ArgumentParser:
    # subcommand copies use SUPPRESS so they never overwrite a flag given before the subcommand
    env_workers = os.environ.get("WEAKNOISE_WORKERS")
    dflt = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=dflt(None), help="master seed (overrides the config)")
    common.add_argument("--workers", type=int,
                        default=dflt(int(env_workers) if env_workers else None),
                        help="worker threads (default: $WEAKNOISE_WORKERS, else the config)")
    common.add_argument("--json", action="store_true", default=dflt(False),
                        help="also print machine-readable JSON")
    return common


def build_parser() -> argparse.ArgumentParser:
    top, common = _common_flags(False), _common_flags(True)
    p = argparse.ArgumentParser(prog="weaknoise", description=__doc__.splitlines()[0], parents=[top],
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    raw = argparse.RawDescriptionHelpFormatter

    t = sub.add_parser("theory", parents=[common], formatter_class=raw,
                       help="capacity, exponent, optimal rates (nats)",
                       epilog="All quantities are in nats per channel use unless --bits is given.")
    t.add_argument("--q", type=float, required=True, help="cost power q >= 1")
    t.add_argument("--a", type=_parse_a, required=True, help="comma-separated exponents a_1,...,a_d")
    t.add_argument("--d", type=int, help="dimension (broadcasts a single --a value)")
    t.add_argument("--gamma", type=float, help="SNR P/sigma2 (linear)")
    t.add_argument("--P", type=float, help="signal power")
    t.add_argument("--sigma2", type=float, help="noise variance")
    t.add_argument("--oracle", type=int, metavar="STEPS", help="also run the brute-force sup-min oracle")
    t.add_argument("--strict", action="store_true", help="exit 3 when A.1 fails")
    t.add_argument("--bits", action="store_true", help="display in bits (computation stays in nats)")
    t.set_defaults(func=cmd_theory)

    s = sub.add_parser("scan", parents=[common], formatter_class=raw, help="dump a diagonal scan",
                       epilog="CSV columns: k (scan position), i, j (grid indices), u = i/Mu, v = j/Mv,\n"
                              "is_rollover (true when the step k -> k+1 jumps to the next diagonal).")
    s.add_argument("--Mu", type=int, required=True)
    s.add_argument("--Mv", type=int, required=True)
    s.add_argument("--csv", help="output path (default: stdout)")
    s.set_defaults(func=cmd_scan)

    files_help = ("Outputs in --out: manifest.json (config digest, version, time, files),\n"
                  "trials.ndjson (fields n, probe, u, u_hat, outage, cost, trial),\n"
                  "summary.csv columns: n, sup_cost (max over probes of the mean non-outage cost),\n"
                  "delta_n (max over probes of the outage fraction), exponent_theory (closed-form\n"
                  "exponent, nan when A.1 fails), exponent_fit (slope of -ln sup_cost vs n),\n"
                  "converse_bound (finite-n converse bound, 2-D coded systems only).")
    for name, func, extra in (
        ("simulate", cmd_simulate, files_help),
        ("sweep", cmd_sweep, "sweep.csv columns: gamma, sup_cost, delta_n, exponent_theory, converse_bound,\n"
                             "evaluated at the largest block length of the config."),
        ("converse", cmd_converse, "converse.csv columns: n, bound, measured_sup_cost, delta_n (value fed to\n"
                                   "the bound), locus_length, satisfied. Exit 5 if any row is unsatisfied."),
    ):
        c = sub.add_parser(name, parents=[common], formatter_class=raw, epilog=extra,
                           help=f"{name} from a JSON config")
        c.add_argument("config", help="JSON config file")
        c.add_argument("--out", required=True, help="output directory")
        if name == "sweep":
            c.add_argument("--gammas", type=_parse_a, help="comma-separated SNR list (overrides the config)")
        c.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers is not None and args.workers < 1:
        parser.error("--workers must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
