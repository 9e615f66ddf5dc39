"""Command line front end.

    oamlink pattern-cut     --scenario S --out DIR [--mode L] [--theta-deg T]
    oamlink capacity-sweep  --scenario S --out DIR
    oamlink condition-table --scenario S --out DIR
    oamlink ber-sweep       --scenario S --out DIR
    oamlink rerun           --manifest DIR/manifest.json --out DIR2

Every run writes ``<command>.csv``, a PNG rendering (unless ``--no-plots``)
and ``manifest.json``.  Exit codes: 0 success, 2 usage, 3 parse error,
4 validation error, 5 model error, 1 anything else.
"""

import argparse
import datetime
import hashlib
import json
import logging
import math
import os
import sys

from . import __version__
from . import experiments
from ._io import atomic_write_text, fmt_float
from .errors import OamLinkError, ParseError
from .link import FEC_THRESHOLD
from .scenario import parse_scenario, scenario_from_dict, scenario_to_dict, with_seed

MANIFEST_SCHEMA = "oamlink.manifest/1"
EXIT_CODES = {"parse": 3, "validation": 4, "model": 5}
COMMANDS = ("pattern-cut", "capacity-sweep", "condition-table", "ber-sweep")

log = logging.getLogger("oamlink")


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def run_command(command, sc, out_dir, options=None, plots=True):
    """Execute one sweep and write its files. Returns the manifest dict."""
    options = dict(options or {})
    os.makedirs(out_dir, exist_ok=True)
    stem = command.replace("-", "_")
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    png_path = os.path.join(out_dir, f"{stem}.png")
    summary = {}

    if command == "pattern-cut":
        from .beam import write_pattern_csv
        cut, slope = experiments.pattern_cut(sc, options.get("mode"), options.get("theta_deg"))
        write_pattern_csv(cut, csv_path)
        summary = {"recovered_mode": slope, "polar_deg": math.degrees(cut.polar_angle)}
        print(f"recovered equivalent mode: {fmt_float(round(slope, 6))} "
              f"(cut at polar angle {math.degrees(cut.polar_angle):.3f} deg)")
        if plots:
            from .plotting import plot_pattern_cut
            plot_pattern_cut(cut, png_path, f"mode {options.get('mode') or 'scenario'}")
    else:
        driver = {"capacity-sweep": experiments.capacity_sweep,
                  "condition-table": experiments.condition_table,
                  "ber-sweep": experiments.ber_sweep}[command]
        table = driver(sc)
        atomic_write_text(csv_path, table.to_csv())
        if plots:
            from . import plotting
            {"capacity-sweep": plotting.plot_capacity,
             "condition-table": plotting.plot_condition,
             "ber-sweep": plotting.plot_ber}[command](table, png_path)
        if command == "ber-sweep":
            top = table.rows[-1]
            summary = {"max_snr_ber": [top[1], top[2]]}
            print(f"BER at {fmt_float(top[0])} dB: {fmt_float(top[1])}, {fmt_float(top[2])} "
                  f"(FEC threshold {FEC_THRESHOLD:g})")
        else:
            sys.stdout.write(table.to_csv())

    outputs = [csv_path] + ([png_path] if plots else [])
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "command": command,
        "options": options,
        "plots": plots,
        "scenario": scenario_to_dict(sc),
        "seed": sc.seed,
        "fec_threshold": FEC_THRESHOLD,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        "version": __version__,
        "summary": summary,
        "outputs": [{"file": os.path.basename(p), "sha256": _sha256(p)} for p in outputs],
    }
    atomic_write_text(os.path.join(out_dir, "manifest.json"), json.dumps(manifest, indent=2) + "\n")
    return manifest


def rerun(manifest_path, out_dir, plots=None):
    with open(manifest_path) as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno) from None
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise ParseError(f"unsupported manifest schema {manifest.get('schema')!r}", field="schema")
    if manifest.get("command") not in COMMANDS:
        raise ParseError("unknown command", field="command")
    sc = scenario_from_dict(manifest["scenario"])
    return run_command(manifest["command"], sc, out_dir, manifest.get("options"),
                       manifest.get("plots", True) if plots is None else plots)


def build_parser():
    parser = argparse.ArgumentParser(prog="oamlink", description="OAM LoS-MIMO link simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, help="scenario YAML file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--no-plots", action="store_true", help="skip PNG rendering")
        if name == "pattern-cut":
            p.add_argument("--mode", type=int, default=None, help="equivalent mode (0 for a horn)")
            p.add_argument("--theta-deg", type=float, default=None, help="polar angle of the cut")
    p = sub.add_parser("rerun")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-plots", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "rerun":
            rerun(args.manifest, args.out, False if args.no_plots else None)
        else:
            sc = with_seed(parse_scenario(args.scenario), args.seed)
            options = {}
            if args.command == "pattern-cut":
                options = {"mode": args.mode, "theta_deg": args.theta_deg}
            run_command(args.command, sc, args.out, options, not args.no_plots)
    except OamLinkError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.category, 1)
    except FileNotFoundError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # last-resort diagnostic
        log.debug("unhandled", exc_info=True)
        print(f"error[internal]: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
