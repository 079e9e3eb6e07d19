"""Command-line entry point: ``thirdscat <pipeline> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import harness as hs
from .direct import DependencyError
from .geometry import DomainError

log = logging.getLogger("thirdscat")


def _parse_tolerance(items):
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep:
            raise hs.ConfigError(f"--tolerance expects KEY=VAL, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise hs.ConfigError(f"tolerance {key!r} is not a number: {val!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--preset", metavar="NAME", help="potential preset")
    common.add_argument("--param", action="append", metavar="KEY=VAL",
                        help="preset parameter (JSON value), repeatable")
    common.add_argument("--tolerance", action="append", metavar="KEY=VAL", help="override a tolerance, repeatable")
    common.add_argument("--threads", type=int, metavar="N", help="worker threads for x-sweeps")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="thirdscat", description=__doc__)
    sub = p.add_subparsers(dest="pipeline", required=True)
    for name in hs.PIPELINES:
        sp = sub.add_parser(name, parents=[common])
        if name == "roundtrip":
            sp.add_argument("--mode", choices=("marchenko", "reflectionless"))
        if name in ("marchenko", "forward"):
            sp.add_argument("--dataset", metavar="PATH", help="scattering dataset JSON (marchenko input)")
        if name in ("rh-solitons", "roundtrip"):
            sp.add_argument("--poles", metavar="PATH", help="pole list JSON")
        if name == "emit-plots":
            sp.add_argument("kind", choices=hs.EMIT_KINDS)
            sp.add_argument("input", help="dataset JSON, potential CSV or Marchenko CSV")
            sp.add_argument("--x", type=float, help="slice position for marchenko-slice")
    return p


def _overrides(args) -> dict:
    o = {"pipeline": args.pipeline}
    if args.out:
        o["out"] = args.out
    if args.preset:
        o["preset"] = args.preset
    if args.param:
        params = {}
        for item in args.param:
            key, sep, val = item.partition("=")
            if not sep:
                raise hs.ConfigError(f"--param expects KEY=VAL, got {item!r}")
            try:
                params[key] = json.loads(val)
            except json.JSONDecodeError:
                params[key] = val
        o["params"] = params
    if args.tolerance:
        o["tolerances"] = _parse_tolerance(args.tolerance)
    if args.threads is not None:
        o["threads"] = args.threads
    if getattr(args, "mode", None):
        o["roundtrip"] = {"mode": args.mode}
    for key in ("dataset", "poles"):
        if getattr(args, key, None):
            o[key] = getattr(args, key)
    return o


def _run(cfg: hs.RunConfig):
    name = cfg["pipeline"]
    if name == "forward":
        return hs.run_forward(cfg)[1]
    if name == "bound-states":
        return hs.run_bound_states(cfg)[1]
    if name == "rh-solitons":
        return hs.run_rh_solitons(cfg)[1]
    if name == "marchenko":
        return hs.run_marchenko(cfg)[3]
    if name == "roundtrip":
        return hs.run_roundtrip(cfg)
    return hs.run_selftest(cfg)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and hs.EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = hs.RunConfig.build(args.config, _overrides(args))
        if args.pipeline == "emit-plots":
            cfg.out.mkdir(parents=True, exist_ok=True)
            for f in hs.emit_plots(args.kind, args.input, cfg.out, args.x):
                print(cfg.out / f)
            return hs.EXIT_PASS
        cfg.out.mkdir(parents=True, exist_ok=True)
        report = _run(cfg)
    except hs.ConfigError as exc:
        print(f"thirdscat: error: {exc}", file=sys.stderr)
        return hs.EXIT_USAGE
    except (DomainError, DependencyError, ValueError, RuntimeError) as exc:
        print(f"thirdscat: {args.pipeline} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return hs.EXIT_FAIL
    hs.io.write_json(cfg.data, cfg.out / "config.json")
    report.write(cfg.out)
    print(report.summary())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
