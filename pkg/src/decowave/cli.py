"""Command line front end: ``decowave <command> ...``.

Exit codes: 0 success, 2 validation failure, 3 convergence or precision
failure, 4 impossible measurement outcome.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from pathlib import Path

from . import __version__
from .basis import ChainSpec
from .eigensolve import LanczosConfig, lanczos_ground_state
from .errors import DecowaveError
from .observables import TimeSeriesRecord, fourier_spectrum
from .propagate import PropagatorConfig, evolve
from .scenario import (
    expand_members,
    load_document,
    preset_names,
    preset_text,
    run_document,
    scenario_from_dict,
    validate_scenario,
)
from .statefile import load_state, save_state
from .tables import export_spectrum, import_table

log = logging.getLogger("decowave")

_SIZE = re.compile(r"^\s*([0-9.]+)\s*([kKmMgGtT]?)i?[bB]?\s*$")


def parse_size(text: str) -> float:
    """'4G', '512M', '1e9' -> bytes."""
    m = _SIZE.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"not a memory size: {text!r}")
    scale = {"": 1, "k": 2**10, "m": 2**20, "g": 2**30, "t": 2**40}[m.group(2).lower()]
    return float(m.group(1)) * scale


def _on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == "on"


def _common(p: argparse.ArgumentParser, run_flags: bool = True):
    p.add_argument("--sector", type=_on_off, default=None, metavar="on|off", help="restrict to the S^z sector")
    p.add_argument("--seed", type=int, default=None, help="Lanczos start-vector seed")
    if run_flags:
        p.add_argument("--dt", type=float, default=None, help="sampling step")
        p.add_argument("--cutoff", type=float, default=None, help="Chebyshev coefficient cutoff")
        p.add_argument("--out-dir", type=Path, default=None)
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--max-memory", type=parse_size, default=None, help="memory cap, e.g. 4G")


def _chain_args(p):
    p.add_argument("-N", "--n-sites", type=int, required=True)
    p.add_argument("-J", "--exchange", type=float, default=1.0)
    p.add_argument("-D", "--delta", type=float, default=0.0, help="anisotropy")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decowave", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gs = sub.add_parser("gs", help="ground state and energy report")
    _chain_args(gs)
    _common(gs, run_flags=False)
    gs.add_argument("--krylov-dim", type=int, default=300)
    gs.add_argument("--save", type=Path, default=None, help="write the state (.npz or .json)")

    ev = sub.add_parser("evolve", help="propagate a state file")
    ev.add_argument("input", type=Path)
    ev.add_argument("output", type=Path)
    ev.add_argument("-t", "--time", type=float, required=True)
    ev.add_argument("--cutoff", type=float, default=1e-16)

    sc = sub.add_parser("scenario", help="run or validate a scenario file or preset")
    sc_sub = sc.add_subparsers(dest="action", required=True)
    run = sc_sub.add_parser("run")
    run.add_argument("source", help="scenario YAML file or preset name")
    run.add_argument("--resume", action="store_true", help="continue from the last checkpoint")
    _common(run)
    val = sc_sub.add_parser("validate")
    val.add_argument("source")
    _common(val)

    sp = sub.add_parser("spectrum", help="Fourier magnitudes of one series")
    sp.add_argument("series", type=Path)
    sp.add_argument("--site", type=int, default=1)
    sp.add_argument("--axis", default="z")
    sp.add_argument("--window", choices=("rectangular", "hann"), default="rectangular")
    sp.add_argument("--no-detrend", action="store_true")
    sp.add_argument("--t-from", type=float, default=None, help="drop samples before this time")
    sp.add_argument("--out", type=Path, default=None, help="write omega,magnitude (.csv or .json)")

    pr = sub.add_parser("presets", help="bundled scenarios")
    pr_sub = pr.add_subparsers(dest="action", required=True)
    pr_sub.add_parser("list")
    show = pr_sub.add_parser("show")
    show.add_argument("name")
    return parser


def _overrides(args) -> dict:
    out = {}
    if args.sector is not None:
        out["sector"] = args.sector
    if args.seed is not None:
        out["seed"] = args.seed
    if getattr(args, "dt", None) is not None:
        out["sampling"] = {"dt": args.dt}
    if getattr(args, "cutoff", None) is not None:
        out["propagator"] = {"cutoff": args.cutoff}
    if getattr(args, "format", None) is not None:
        out["outputs"] = {"format": args.format}
    if getattr(args, "max_memory", None) is not None:
        out["max_memory"] = args.max_memory
    return out


def cmd_gs(args) -> int:
    chain = ChainSpec(args.n_sites, args.exchange, args.delta)
    cfg = LanczosConfig(max_krylov_dim=args.krylov_dim, seed=1234 if args.seed is None else args.seed)
    use_sector = True if args.sector is None else args.sector
    result = lanczos_ground_state(chain, cfg, "auto" if use_sector else None)
    report = {
        "n_sites": chain.n_sites,
        "exchange_j": chain.exchange_j,
        "anisotropy_delta": chain.anisotropy_delta,
        "energy": result.energy,
        "energy_per_site": result.energy / chain.n_sites,
        "residual": result.residual,
        "iterations": result.iterations,
        "sector_total_sz": None if result.sector_used is None else result.sector_used.total_sz,
    }
    if args.save is not None:
        save_state(args.save, result.state, energy=result.energy)
        report["state_file"] = str(args.save)
    print(json.dumps(report, indent=2))
    return 0


def cmd_evolve(args) -> int:
    state, header = load_state(args.input)
    out = evolve(state, state.chain, args.time, PropagatorConfig(coefficient_cutoff=args.cutoff))
    elapsed = float(header.get("time", 0.0)) + args.time
    save_state(args.output, out, time=elapsed)
    print(json.dumps({"output": str(args.output), "time": elapsed, "norm": out.norm()}))
    return 0


def cmd_scenario(args) -> int:
    doc = load_document(args.source)
    overrides = _overrides(args)
    if args.action == "validate":
        status = 0
        for member in expand_members(doc):
            s = scenario_from_dict(member, overrides)
            report = validate_scenario(s)
            print(
                json.dumps(
                    {
                        "member": s.name,
                        "ok": report.ok,
                        "violations": report.violations,
                        "warnings": report.warnings,
                        "memory_estimate_bytes": report.memory_estimate,
                        "dimension": report.dimension,
                    }
                )
            )
            if not report.ok:
                status = 2
        return status
    out_dir = args.out_dir or Path("runs") / str(doc.get("name", "scenario"))
    summary = run_document(doc, out_dir, overrides, resume=args.resume)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_spectrum(args) -> int:
    records = import_table(args.series)
    try:
        rec = next(r for r in records if r.key == (args.site, args.axis))
    except StopIteration:
        print(f"no series for site {args.site} axis {args.axis} in {args.series}", file=sys.stderr)
        return 2
    if args.t_from is not None:
        keep = rec.times >= args.t_from
        rec = TimeSeriesRecord(rec.site, rec.axis, rec.times[keep], rec.values[keep])
    spectrum = fourier_spectrum(rec, args.window, not args.no_detrend)
    if args.out is not None:
        export_spectrum(spectrum, args.out, meta={"site": args.site, "axis": args.axis})
    print(json.dumps({"dominant_frequency": spectrum.dominant_frequency(), "n_samples": spectrum.n_samples,
                      "dt": spectrum.dt, "window": spectrum.window, "detrend": spectrum.detrend}))
    return 0


def cmd_presets(args) -> int:
    if args.action == "list":
        for name in preset_names():
            first = preset_text(name).splitlines()[0].lstrip("# ")
            print(f"{name:8s} {first}")
    else:
        print(preset_text(args.name), end="")
    return 0


COMMANDS = {"gs": cmd_gs, "evolve": cmd_evolve, "scenario": cmd_scenario, "spectrum": cmd_spectrum,
            "presets": cmd_presets}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except DecowaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for v in getattr(exc, "violations", None) or []:
            print(f"  - {v}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
