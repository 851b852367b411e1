"""Declarative experiment runner.

A scenario document (YAML) describes one chain, an initial state, a list of
timed measurement events and a sampling plan. An optional ``sweep`` list
turns one document into several members, each a shallow override of the
base. Typical document::

    name: fig3
    chain: {n_sites: 20, exchange_j: 1.0, anisotropy_delta: 0.0}
    initial_state: {kind: ground_state}
    events:
      - {time: 5.0, site: 1, axis: z, sign: "+"}
    sampling:
      t_start: 0.0
      t_end: 50.0
      dt: 0.1
      observables:
        - {kind: magnetization, axis: z, sites: all}
    sweep:
      - {chain: {n_sites: 10}}
      - {chain: {n_sites: 20}}

Events snap to the sampling grid. At an event time the table holds the
post-projection value and the pre-projection value is kept separately.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .basis import MAX_SITES, MIN_SITES, ChainSpec, enumerate_sector, product_state_code
from .eigensolve import LanczosConfig, lanczos_ground_state
from .errors import DecowaveError, DomainError, ValidationError
from .measurement import ProjectorSpec, measure_nonselective, project
from .observables import (
    TimeSeriesRecord,
    correlation,
    energy,
    fourier_spectrum,
    magnetization,
    magnetization_profile,
    staggered_magnetization,
)
from .operators import StateVector, product_state
from .propagate import BLOCK_MEMORY, CHUNK_MEMORY, PropagatorConfig, TimeGrid, evolve_samples
from .statefile import load_state, save_state
from .tables import FORMATS, export_spectrum, export_table, import_table

log = logging.getLogger(__name__)

OBSERVABLE_KINDS = ("magnetization", "correlation", "energy", "staggered")
DEFAULT_MAX_MEMORY = 4 * 2**30


class ScenarioError(DecowaveError):
    """A module error raised while running, tagged with where it happened."""

    def __init__(self, cause: DecowaveError, event_index, t):
        super().__init__(f"event {event_index} at t={t}: {cause}")
        self.cause = cause
        self.event_index = event_index
        self.time = t
        self.exit_code = cause.exit_code


@dataclass(frozen=True)
class Event:
    time: float
    projector: ProjectorSpec
    mode: str = "selective"


@dataclass(frozen=True)
class ObservableSpec:
    kind: str
    axis: str = "z"
    sites: tuple = ()
    anchor: int = 1


@dataclass
class Scenario:
    name: str
    n_sites: int
    exchange_j: float
    anisotropy_delta: float
    initial_state: dict
    events: list
    t_start: float
    t_end: float
    dt: float
    observables: list
    spectrum: dict | None = None
    use_sector: bool = True
    seed: int = 1234
    cutoff: float = 1e-16
    chunk_span: float = 2.5
    krylov_dim: int = 300
    reorthogonalize: str = "full"
    out_format: str = "csv"
    checkpoints: bool = True
    max_memory: float = DEFAULT_MAX_MEMORY
    source: dict = field(default_factory=dict, repr=False)

    @property
    def chain(self) -> ChainSpec:
        return ChainSpec(self.n_sites, self.exchange_j, self.anisotropy_delta)

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.t_start, self.t_end, self.dt)

    def lanczos_config(self) -> LanczosConfig:
        return LanczosConfig(max_krylov_dim=self.krylov_dim, seed=self.seed, reorthogonalize=self.reorthogonalize)

    def propagator_config(self) -> PropagatorConfig:
        return PropagatorConfig(coefficient_cutoff=self.cutoff, chunk_span=self.chunk_span)


# ---------------------------------------------------------------- documents


def preset_names() -> list[str]:
    files = resources.files("decowave").joinpath("presets").iterdir()
    return sorted(p.name[:-5] for p in files if p.name.endswith(".yaml"))


def preset_text(name: str) -> str:
    path = resources.files("decowave").joinpath("presets", f"{name}.yaml")
    if not path.is_file():
        raise ValidationError([f"unknown preset {name!r}; available: {', '.join(preset_names())}"])
    return path.read_text()


def load_document(source) -> dict:
    """Parse a scenario file, or a preset when ``source`` names one."""
    path = Path(source)
    if path.is_file():
        text = path.read_text()
    elif str(source) in preset_names():
        text = preset_text(str(source))
    else:
        raise ValidationError([f"no scenario file or preset named {source!r}"])
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError([f"{source}: {exc}"]) from exc
    if not isinstance(doc, dict):
        raise ValidationError([f"{source}: scenario must be a mapping"])
    return doc


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def expand_members(doc: dict) -> list[dict]:
    """One document per sweep entry (or the document itself without a sweep)."""
    base = {k: v for k, v in doc.items() if k != "sweep"}
    sweep = doc.get("sweep") or [{}]
    members = []
    for override in sweep:
        member = _merge(base, override)
        if "label" not in override:
            member["label"] = member_label(member)
        members.append(member)
    return members


def member_label(doc: dict) -> str:
    chain = doc.get("chain", {})
    delta = float(chain.get("anisotropy_delta", 0.0))
    return f"N{chain.get('n_sites')}_D{delta:+g}"


def _site_selection(spec, n):
    if spec in (None, "all"):
        return tuple(range(1, n + 1))
    if spec == "odd":
        return tuple(range(1, n + 1, 2))
    if spec == "even":
        return tuple(range(2, n + 1, 2))
    if isinstance(spec, int):
        return (spec,)
    return tuple(int(s) for s in spec)


def scenario_from_dict(doc: dict, overrides: dict | None = None) -> Scenario:
    """Build a Scenario; structural problems raise ValidationError."""
    doc = _merge(doc, {k: v for k, v in (overrides or {}).items() if v is not None and not k.startswith("_")})
    try:
        chain = doc.get("chain", {})
        n = int(chain["n_sites"])
        sampling = doc.get("sampling", {})
        events = []
        for ev in doc.get("events") or []:
            events.append(
                Event(
                    float(ev["time"]),
                    ProjectorSpec(int(ev.get("site", 1)), ev.get("axis", "z"), ev.get("sign", "+")),
                    ev.get("mode", "selective"),
                )
            )
        observables = []
        for ob in sampling.get("observables") or []:
            kind = ob.get("kind", "magnetization")
            sites = _site_selection(ob.get("sites"), n) if kind in ("magnetization", "correlation") else ()
            observables.append(ObservableSpec(kind, ob.get("axis", "z"), sites, int(ob.get("anchor", 1))))
        solver = doc.get("solver", {})
        prop = doc.get("propagator", {})
        outputs = doc.get("outputs", {})
        return Scenario(
            name=str(doc.get("label") or doc.get("name", "scenario")),
            n_sites=n,
            exchange_j=float(chain.get("exchange_j", 1.0)),
            anisotropy_delta=float(chain.get("anisotropy_delta", 0.0)),
            initial_state=dict(doc.get("initial_state") or {"kind": "ground_state"}),
            events=events,
            t_start=float(sampling.get("t_start", 0.0)),
            t_end=float(sampling.get("t_end", 0.0)),
            dt=float(sampling.get("dt", 0.1)),
            observables=observables,
            spectrum=doc.get("spectrum"),
            use_sector=bool(doc.get("sector", True)),
            seed=int(doc.get("seed", 1234)),
            cutoff=float(prop.get("cutoff", 1e-16)),
            chunk_span=float(prop.get("chunk_span", 2.5)),
            krylov_dim=int(solver.get("max_krylov_dim", 300)),
            reorthogonalize=solver.get("reorthogonalize", "full"),
            out_format=outputs.get("format", "csv"),
            checkpoints=bool(outputs.get("checkpoints", True)),
            max_memory=float(doc.get("max_memory", DEFAULT_MAX_MEMORY)),
            source=doc,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DecowaveError):
            raise ValidationError([str(exc)]) from exc
        raise ValidationError([f"malformed scenario: {exc!r}"]) from exc


# ---------------------------------------------------------------- validation


@dataclass
class ValidationReport:
    violations: list
    warnings: list
    memory_estimate: int
    dimension: int

    @property
    def ok(self) -> bool:
        return not self.violations


def working_dimension(s: Scenario) -> int:
    """Vector length used by the run: the S^z = 0 sector unless something leaves it."""
    n = s.n_sites
    in_sector = (
        s.use_sector
        and s.initial_state.get("kind", "ground_state") == "ground_state"
        and all(e.projector.axis == "z" for e in s.events)
    )
    return math.comb(n, n // 2) if in_sector else 2**n


def memory_estimate(s: Scenario) -> int:
    """Bytes of the largest simultaneously live arrays (complex128 = 16 bytes)."""
    dim = working_dimension(s)
    branches = 2 ** sum(e.mode == "nonselective" for e in s.events)
    vectors = 4 + 2 * branches
    est = vectors * dim * 16
    est += min(BLOCK_MEMORY, 64 * dim * 16) + min(CHUNK_MEMORY, 2 * dim * 16)
    if s.initial_state.get("kind", "ground_state") == "ground_state" and s.reorthogonalize == "full":
        lanczos_dim = math.comb(s.n_sites, s.n_sites // 2) if s.use_sector else 2**s.n_sites
        est = max(est, min(s.krylov_dim, lanczos_dim) * lanczos_dim * 8 + 4 * lanczos_dim * 8)
    return est


def _human(n_bytes: float) -> str:
    for unit in ("B", "KiB", "MiB", "GiB"):
        if n_bytes < 1024 or unit == "GiB":
            return f"{n_bytes:.2f} {unit}" if unit != "B" else f"{int(n_bytes)} B"
        n_bytes /= 1024


def validate_scenario(s: Scenario) -> ValidationReport:
    violations, warnings = [], []
    n = s.n_sites
    if n % 2:
        violations.append(f"n_sites={n} is odd; the ring must hold an even number of spins")
    if not MIN_SITES <= n <= MAX_SITES:
        violations.append(f"n_sites={n} outside [{MIN_SITES}, {MAX_SITES}]")
    if not s.exchange_j > 0:
        violations.append("exchange_j must be > 0")
    grid = None
    if not s.dt > 0:
        violations.append("dt must be positive")
    elif s.t_end < s.t_start:
        violations.append("t_end precedes t_start")
    else:
        grid = TimeGrid(s.t_start, s.t_end, s.dt)
    times = [e.time for e in s.events]
    if any(b <= a for a, b in zip(times, times[1:])):
        violations.append("event times must be strictly increasing")
    for i, e in enumerate(s.events):
        if not 1 <= e.projector.site <= n:
            violations.append(f"event {i}: site {e.projector.site} outside the chain")
        if e.mode not in ("selective", "nonselective"):
            violations.append(f"event {i}: mode must be selective or nonselective")
        if grid is not None:
            if not s.t_start <= e.time <= s.t_end:
                violations.append(f"event {i}: t={e.time} outside the sampling span [{s.t_start}, {s.t_end}]")
            else:
                try:
                    grid.index_of(e.time)
                except DomainError:
                    violations.append(f"event {i}: t={e.time} is more than dt/100 from a grid point")
    if not s.observables:
        violations.append("observable list is empty")
    for ob in s.observables:
        if ob.kind not in OBSERVABLE_KINDS:
            violations.append(f"unknown observable kind {ob.kind!r}")
        if ob.axis not in ("x", "y", "z"):
            violations.append(f"observable axis must be x, y or z, got {ob.axis!r}")
        if any(not 1 <= m <= n for m in ob.sites) or not 1 <= ob.anchor <= n:
            violations.append(f"observable {ob.kind}: site outside the chain")
    kind = s.initial_state.get("kind", "ground_state")
    if kind == "product":
        pattern = str(s.initial_state.get("pattern", ""))
        if len(pattern) != n:
            violations.append(f"product pattern has {len(pattern)} sites, chain has {n}")
    elif kind == "state_file":
        if not Path(str(s.initial_state.get("path", ""))).is_file():
            violations.append(f"state file {s.initial_state.get('path')!r} not found")
    elif kind != "ground_state":
        violations.append(f"unknown initial_state kind {kind!r}")
    if s.out_format not in FORMATS:
        violations.append(f"output format must be one of {FORMATS}")
    if s.spectrum is not None and grid is not None and len(grid) < 2:
        violations.append("spectrum needs at least two samples")
    if s.reorthogonalize not in ("full", "selective"):
        violations.append("solver.reorthogonalize must be full or selective")
    if violations and (n % 2 or not MIN_SITES <= n <= MAX_SITES):
        return ValidationReport(violations, warnings, 0, 0)
    est = memory_estimate(s)
    if est > s.max_memory:
        warnings.append(f"memory estimate {_human(est)} exceeds cap {_human(s.max_memory)}")
    return ValidationReport(violations, warnings, est, working_dimension(s))


# ---------------------------------------------------------------- execution


def _record_keys(s: Scenario) -> list[tuple]:
    keys = []
    for ob in s.observables:
        if ob.kind == "magnetization":
            keys += [(m, ob.axis) for m in ob.sites]
        elif ob.kind == "correlation":
            keys += [(m, f"{ob.axis}{ob.axis}@{ob.anchor}") for m in ob.sites]
        elif ob.kind == "energy":
            keys.append((0, "energy"))
        else:
            keys.append((0, "staggered"))
    return keys


def _measure(state: StateVector, chain: ChainSpec, s: Scenario) -> list[float]:
    values = []
    profiles = {}
    for ob in s.observables:
        if ob.kind == "magnetization":
            if ob.axis == "z":
                if "z" not in profiles:
                    profiles["z"] = magnetization_profile(state, "z")
                values += [float(profiles["z"][m - 1]) for m in ob.sites]
            else:
                values += [magnetization(state, m, ob.axis) for m in ob.sites]
        elif ob.kind == "correlation":
            values += [correlation(state, ob.anchor, m, ob.axis) for m in ob.sites]
        elif ob.kind == "energy":
            values.append(energy(state, chain))
        else:
            values.append(staggered_magnetization(state))
    return values


def _weighted(branches, chain, s):
    total = None
    for w, state in branches:
        vals = np.array(_measure(state, chain, s))
        total = w * vals if total is None else total + w * vals
    return total.tolist()


def prepare_initial_state(s: Scenario) -> tuple[StateVector, dict]:
    chain = s.chain
    kind = s.initial_state.get("kind", "ground_state")
    if kind == "ground_state":
        gs = lanczos_ground_state(chain, s.lanczos_config(), "auto" if s.use_sector else None)
        info = {"kind": kind, "energy": gs.energy, "residual": gs.residual, "iterations": gs.iterations}
        return gs.state, info
    if kind == "product":
        code = product_state_code(str(s.initial_state["pattern"]))
        sector = enumerate_sector(chain, bin(code).count("1") - chain.n_sites / 2) if s.use_sector else None
        return product_state(chain, code, sector), {"kind": kind, "pattern": s.initial_state["pattern"]}
    state, header = load_state(s.initial_state["path"])
    return state.with_chain(chain), {"kind": kind, "path": str(s.initial_state["path"])}


@dataclass
class RunManifest:
    scenario: dict
    label: str
    code_version: str
    configs: dict
    initial_state: dict
    events: list = field(default_factory=list)
    outputs: dict = field(default_factory=dict)
    wall_clock_seconds: float = 0.0
    memory_estimate: int = 0
    status: str = "ok"
    spectrum: dict | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=float)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _checkpoint_dir(out_dir: Path) -> Path:
    return out_dir / "checkpoints"


def _latest_checkpoint(out_dir: Path):
    ckdir = _checkpoint_dir(out_dir)
    if not ckdir.is_dir():
        return None
    found = sorted(ckdir.glob("event_*.npz"), key=lambda p: int(p.stem.split("_")[1]))
    return found[-1] if found else None


def run_scenario(s: Scenario, out_dir, resume: bool = False) -> RunManifest:
    """Execute one scenario member and write its outputs into ``out_dir``."""
    report = validate_scenario(s)
    if not report.ok:
        raise ValidationError(report.violations)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    chain = s.chain
    grid = s.grid
    times = grid.sample_times
    lanczos_cfg = s.lanczos_config()
    prop_cfg = s.propagator_config()
    keys = _record_keys(s)
    event_idx = [grid.index_of(e.time) for e in s.events]

    samples: list[list[float]] = []
    pre_event: dict[int, list[float]] = {}
    events_log = []
    first_event = 0
    checkpoint = _latest_checkpoint(out_dir) if resume else None
    if checkpoint is not None:
        state, header = load_state(checkpoint)
        state = state.with_chain(chain)
        partial = json.loads((checkpoint.with_suffix(".json")).read_text())
        samples = partial["samples"]
        pre_event = {int(k): v for k, v in partial["pre_event"].items()}
        events_log = partial["events"]
        init_info = partial["initial_state"]
        first_event = header["event_index"] + 1
        branches = [(1.0, state)]
        t_cur = header["time"]
        log.info("resuming %s after event %d at t=%g", s.name, header["event_index"], t_cur)
    else:
        try:
            psi0, init_info = prepare_initial_state(s)
        except DecowaveError as exc:
            raise ScenarioError(exc, None, s.t_start) from exc
        branches = [(1.0, psi0)]
        t_cur = s.t_start
        samples.append(_weighted(branches, chain, s))

    boundaries = event_idx[first_event:] + [len(times) - 1]
    start_idx = len(samples)
    for seg, stop in enumerate(boundaries):
        k = first_event + seg
        seg_times = times[start_idx : stop + 1]
        try:
            if seg_times.size:
                per_branch = []
                new_branches = []
                for w, state in branches:
                    vals, last = [], state
                    for _, st in evolve_samples(state, chain, seg_times, prop_cfg, t0=t_cur):
                        vals.append(_measure(st, chain, s))
                        last = st
                    per_branch.append(w * np.array(vals))
                    new_branches.append((w, last))
                branches = new_branches
                samples += np.sum(per_branch, axis=0).tolist()
                t_cur = float(times[stop])
            if k >= len(s.events):
                break
            ev = s.events[k]
            pre_event[stop] = samples[stop]
            if ev.mode == "selective":
                projected = []
                probs = []
                for w, state in branches:
                    outcome = project(state, ev.projector)
                    probs.append(outcome.probability)
                    projected.append((w, outcome.state))
                branches = projected
                entry = {"index": k, "time": float(times[stop]), "projector": ev.projector.label,
                         "mode": ev.mode, "probability": probs[0] if len(probs) == 1 else probs}
            else:
                split = []
                for w, state in branches:
                    for o in measure_nonselective(state, ev.projector.site, ev.projector.axis):
                        if not o.impossible:
                            split.append((w * o.probability, o.state))
                branches = split
                entry = {"index": k, "time": float(times[stop]), "projector": ev.projector.label,
                         "mode": ev.mode, "branch_weights": [w for w, _ in branches]}
            events_log.append(entry)
            samples[stop] = _weighted(branches, chain, s)
            start_idx = stop + 1
            if s.checkpoints and len(branches) == 1:
                ck = _checkpoint_dir(out_dir) / f"event_{k}.npz"
                save_state(ck, branches[0][1], time=t_cur, event_index=k, label=s.name)
                ck.with_suffix(".json").write_text(
                    json.dumps({"samples": samples, "pre_event": pre_event, "events": events_log,
                                "initial_state": init_info})
                )
        except DecowaveError as exc:
            raise ScenarioError(exc, k if k < len(s.events) else None, t_cur) from exc

    data = np.array(samples)
    records = [
        TimeSeriesRecord(site, axis, times, data[:, j], {float(times[i]): v[j] for i, v in pre_event.items()})
        for j, (site, axis) in enumerate(keys)
    ]
    fmt = s.out_format
    written = export_table(records, out_dir / f"series.{fmt}", fmt)
    spectrum_info = None
    if s.spectrum:
        spectrum_info = _write_spectrum(s, records, out_dir, fmt)
        written.append(out_dir / spectrum_info["file"])
    manifest = RunManifest(
        scenario=s.source,
        label=s.name,
        code_version=__version__,
        configs={
            "lanczos": asdict(lanczos_cfg),
            "propagator": {k: v for k, v in asdict(prop_cfg).items()},
            "use_sector": s.use_sector,
            "grid": {"t_start": s.t_start, "t_end": s.t_end, "dt": s.dt},
            "spectrum_defaults": {"window": "rectangular", "detrend": True},
            "format": fmt,
        },
        initial_state=init_info,
        events=events_log,
        outputs={p.name: _sha256(p) for p in written},
        wall_clock_seconds=time.perf_counter() - started,
        memory_estimate=report.memory_estimate,
        spectrum=spectrum_info,
    )
    (out_dir / "manifest.json").write_text(manifest.to_json())
    return manifest


def _write_spectrum(s: Scenario, records, out_dir: Path, fmt: str) -> dict:
    spec = s.spectrum
    site = int(spec.get("site", 1))
    axis = spec.get("axis", "z")
    window = spec.get("window", "rectangular")
    detrend = bool(spec.get("detrend", True))
    rec = next(r for r in records if r.key == (site, axis))
    t_from = float(spec.get("t_from", s.events[-1].time if s.events else s.t_start))
    keep = rec.times >= t_from - s.dt / 100
    series = TimeSeriesRecord(site, axis, rec.times[keep], rec.values[keep])
    spectrum = fourier_spectrum(series, window, detrend)
    path = export_spectrum(spectrum, out_dir / f"spectrum.{fmt}", fmt,
                           meta={"site": site, "axis": axis, "t_from": t_from})
    return {"file": path.name, "site": site, "axis": axis, "window": window, "detrend": detrend,
            "t_from": t_from, "dominant_frequency": spectrum.dominant_frequency()}


def run_document(doc: dict, out_dir, overrides: dict | None = None, resume: bool = False) -> dict:
    """Run every sweep member into ``out_dir/<label>``.

    Members whose memory estimate exceeds the cap are skipped and reported.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    members = expand_members(doc)
    results = {}
    for member in members:
        s = scenario_from_dict(member, overrides)
        report = validate_scenario(s)
        if not report.ok:
            raise ValidationError([f"{s.name}: {v}" for v in report.violations])
        if report.memory_estimate > s.max_memory:
            log.warning("skipping %s: %s", s.name, "; ".join(report.warnings))
            results[s.name] = {"status": "skipped", "reason": report.warnings}
            continue
        manifest = run_scenario(s, out_dir / s.name, resume=resume)
        results[s.name] = {"status": manifest.status, "manifest": str(out_dir / s.name / "manifest.json")}
    summary = {"name": doc.get("name"), "code_version": __version__, "members": results}
    (out_dir / "sweep.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return summary


def load_records(out_dir, fmt: str = "csv"):
    return import_table(Path(out_dir) / f"series.{fmt}")
