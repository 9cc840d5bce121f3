"""Scenario files: parsing, request-schedule generation and the run loop.

A scenario is a small INI-like text file with sections for the topology, the
traffic classes, the constraint config, optional runtime reconfigurations,
the offered demand and the run parameters.  Demand is expressed as per
source/class totals spread over fixed-length cycles; arrival offsets inside a
cycle are drawn from a seeded RNG, so a scenario plus a seed is fully
deterministic.

The simulation itself is a plain discrete-event loop over a heap.  Ties at
one timestamp resolve as departures first, then timed reconfigurations, then
new requests; equal-time departures go in LSP id order.
"""

from __future__ import annotations

import heapq
import os
import random
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Dict, List, Optional, Tuple

from . import bam
from .controller import Classifier, Controller, LspRequest
from .core import (
    BcConfig,
    InvalidBc,
    LspState,
    Model,
    NetworkState,
    Topology,
    TrafficClass,
    kbps,
)
from .fabric import Fabric, FlowMatch
from .metrics import MetricsLog, MetricsRecord


class ScenarioError(Exception):
    """Malformed or inconsistent scenario text."""


class ParseError(ScenarioError):
    """Syntax error; message carries source and line number."""


class ValidationError(ScenarioError):
    """Well-formed text violating a scenario invariant."""


@dataclass
class ClassSpec:
    index: int
    rate_mbps: float
    port_lo: int
    port_hi: int


@dataclass
class DemandEntry:
    src: str
    dst: str
    class_index: int
    count: int
    start_cycle: int = 0


@dataclass
class ReconfigSpec:
    mode: str                      # "hard" | "soft"
    bc_mbps: List[float]
    percent: bool = False
    after_request: Optional[int] = None
    at_time: Optional[float] = None


@dataclass
class RunParams:
    cycles: int = 10
    cycle_length: float = 300.0
    lsp_lifetime: float = 300.0
    seed: int = 1
    stop: Optional[int] = None


@dataclass
class Scenario:
    source: str = "<memory>"
    nodes: List[Tuple[str, str]] = field(default_factory=list)   # (name, kind)
    links: List[Tuple[str, str, str, float]] = field(default_factory=list)
    bottleneck: Optional[str] = None
    classes: List[ClassSpec] = field(default_factory=list)
    model: str = "MAM"
    bc_mbps: List[float] = field(default_factory=list)
    bc_percent: bool = False
    bc_links: Optional[List[str]] = None
    reconfigs: List[ReconfigSpec] = field(default_factory=list)
    demands: List[DemandEntry] = field(default_factory=list)
    run: RunParams = field(default_factory=RunParams)

    @property
    def n_classes(self) -> int:
        return len(self.classes)


@dataclass(frozen=True)
class Request:
    lsp_id: int          # 1-based stream position
    time: float
    class_index: int
    src: str
    dst: str
    demand_kbps: int
    src_port: int
    dst_port: int


def parse_file(path: str) -> Scenario:
    with open(path) as fh:
        return parse_text(fh.read(), source=path)


def parse_text(text: str, source: str = "<string>") -> Scenario:
    scn = Scenario(source=source)
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("topology", "classes", "bc", "reconfig", "demand", "run"):
                raise ParseError("%s:%d: unknown section [%s]" % (source, lineno, section))
            continue
        if section is None:
            raise ParseError("%s:%d: content before any section" % (source, lineno))
        try:
            _parse_line(scn, section, line.split())
        except (ScenarioError, ValueError, IndexError) as exc:
            raise ParseError("%s:%d: %s" % (source, lineno, exc)) from None
    _validate(scn)
    return scn


def _parse_line(scn: Scenario, section: str, tok: List[str]) -> None:
    key = tok[0]
    if section == "topology":
        if key == "node":
            if tok[2] not in ("host", "switch"):
                raise ScenarioError("node kind must be host or switch")
            scn.nodes.append((tok[1], tok[2]))
        elif key == "link":
            scn.links.append((tok[1], tok[2], tok[3], float(tok[4])))
        elif key == "bottleneck":
            scn.bottleneck = tok[1]
        else:
            raise ScenarioError("unknown topology directive %r" % key)
    elif section == "classes":
        if key != "class":
            raise ScenarioError("unknown classes directive %r" % key)
        if tok[2] != "rate" or tok[4] != "ports":
            raise ScenarioError("expected: class <i> rate <mbps> ports <lo>-<hi>")
        lo, hi = tok[5].split("-", 1)
        scn.classes.append(ClassSpec(int(tok[1]), float(tok[3]), int(lo), int(hi)))
    elif section == "bc":
        if key == "model":
            if tok[1] not in ("MAM", "RDM"):
                raise ScenarioError("model must be MAM or RDM")
            scn.model = tok[1]
        elif key in ("bc", "bc%"):
            scn.bc_mbps = [float(v) for v in tok[1:]]
            scn.bc_percent = key == "bc%"
        elif key == "links":
            scn.bc_links = tok[1:]
        else:
            raise ScenarioError("unknown bc directive %r" % key)
    elif section == "reconfig":
        if key != "event":
            raise ScenarioError("unknown reconfig directive %r" % key)
        if tok[1] not in ("hard", "soft"):
            raise ScenarioError("reconfig mode must be hard or soft")
        spec = ReconfigSpec(mode=tok[1], bc_mbps=[])
        i = 2
        while i < len(tok):
            if tok[i] == "after_request":
                spec.after_request = int(tok[i + 1])
                i += 2
            elif tok[i] == "at_time":
                spec.at_time = float(tok[i + 1])
                i += 2
            elif tok[i] in ("bc", "bc%"):
                spec.bc_mbps = [float(v) for v in tok[i + 1 :]]
                spec.percent = tok[i] == "bc%"
                i = len(tok)
            else:
                raise ScenarioError("unknown reconfig token %r" % tok[i])
        if (spec.after_request is None) == (spec.at_time is None):
            raise ScenarioError("event needs exactly one of after_request/at_time")
        if not spec.bc_mbps:
            raise ScenarioError("event needs a bc vector")
        scn.reconfigs.append(spec)
    elif section == "demand":
        if key != "flows":
            raise ScenarioError("unknown demand directive %r" % key)
        if tok[3] != "class" or tok[5] != "count":
            raise ScenarioError("expected: flows <src> <dst> class <c> count <n> [start_cycle <k>]")
        entry = DemandEntry(tok[1], tok[2], int(tok[4]), int(tok[6]))
        if len(tok) > 7:
            if tok[7] != "start_cycle":
                raise ScenarioError("expected start_cycle, got %r" % tok[7])
            entry.start_cycle = int(tok[8])
        scn.demands.append(entry)
    elif section == "run":
        if key == "cycles":
            scn.run.cycles = int(tok[1])
        elif key == "cycle_length":
            scn.run.cycle_length = float(tok[1])
        elif key == "lsp_lifetime":
            scn.run.lsp_lifetime = float(tok[1])
        elif key == "seed":
            scn.run.seed = int(tok[1])
        elif key == "stop":
            scn.run.stop = int(tok[1])
        else:
            raise ScenarioError("unknown run directive %r" % key)


def _validate(scn: Scenario) -> None:
    src = scn.source
    if not scn.links:
        raise ValidationError("%s: no links defined" % src)
    if not scn.classes:
        raise ValidationError("%s: no traffic classes defined" % src)
    names = [n for n, _k in scn.nodes]
    if len(set(names)) != len(names):
        raise ValidationError("%s: duplicate node names" % src)
    hosts = {n for n, k in scn.nodes if k == "host"}
    scn.classes.sort(key=lambda c: c.index)
    if [c.index for c in scn.classes] != list(range(len(scn.classes))):
        raise ValidationError("%s: class indices must be 0..n-1" % src)
    for c in scn.classes:
        if c.rate_mbps <= 0:
            raise ValidationError("%s: class %d rate must be positive" % (src, c.index))
        if c.port_lo > c.port_hi:
            raise ValidationError("%s: class %d has an empty port range" % (src, c.index))
    link_ids = {lid for lid, _a, _b, _cap in scn.links}
    if scn.bottleneck is not None and scn.bottleneck not in link_ids:
        raise ValidationError("%s: bottleneck %s is not a link" % (src, scn.bottleneck))
    if scn.bc_links:
        for lid in scn.bc_links:
            if lid not in link_ids:
                raise ValidationError("%s: bc links reference unknown link %s" % (src, lid))
    if len(scn.bc_mbps) != scn.n_classes:
        raise ValidationError("%s: bc vector length must equal class count" % src)
    for spec in scn.reconfigs:
        if len(spec.bc_mbps) != scn.n_classes:
            raise ValidationError("%s: reconfig bc vector length must equal class count" % src)
    for d in scn.demands:
        if d.src not in hosts or d.dst not in hosts:
            raise ValidationError("%s: demand endpoints must be hosts" % src)
        if not 0 <= d.class_index < scn.n_classes:
            raise ValidationError("%s: demand references unknown class %d" % (src, d.class_index))
        if d.count < 0:
            raise ValidationError("%s: demand count must be >= 0" % src)
        if not 0 <= d.start_cycle < scn.run.cycles:
            raise ValidationError("%s: start_cycle %d outside run" % (src, d.start_cycle))
    if scn.run.cycles < 1 or scn.run.cycle_length <= 0 or scn.run.lsp_lifetime <= 0:
        raise ValidationError("%s: run parameters out of range" % src)
    total = sum(d.count for d in scn.demands)
    if scn.run.stop is not None and scn.run.stop != total:
        raise ValidationError(
            "%s: stop (%d) must equal the demand total (%d)" % (src, scn.run.stop, total)
        )


def _bc_config(scn: Scenario, mbps_values: List[float], percent: bool) -> BcConfig:
    governed = frozenset(scn.bc_links) if scn.bc_links else None
    if percent:
        return BcConfig(Model[scn.model], percents=tuple(mbps_values), applies_to=governed)
    return BcConfig(
        Model[scn.model], values_kbps=tuple(kbps(v) for v in mbps_values), applies_to=governed
    )


def build(scn: Scenario) -> Tuple[NetworkState, Fabric, List[bam.ReconfigEvent]]:
    """Instantiate the network state, fabric and reconfig events."""
    topo = Topology()
    for name, kind in scn.nodes:
        if kind == "host":
            topo.add_host(name)
        else:
            topo.add_switch(name)
    for lid, a, b, cap in scn.links:
        topo.add_link(lid, a, b, kbps(cap))
    topo.freeze(scn.n_classes)
    classes = [TrafficClass(c.index, kbps(c.rate_mbps)) for c in scn.classes]
    try:
        config = _bc_config(scn, scn.bc_mbps, scn.bc_percent)
        config.validate_for(topo)
        state = NetworkState(topo, classes, config)
        events = [
            bam.ReconfigEvent(
                mode=bam.ReconfigMode(spec.mode),
                config=_bc_config(scn, spec.bc_mbps, spec.percent),
                after_request=spec.after_request,
                at_time=spec.at_time,
            )
            for spec in scn.reconfigs
        ]
        for event in events:
            event.config.validate_for(topo)
    except InvalidBc as exc:
        raise ValidationError("%s: %s" % (scn.source, exc)) from None
    return state, Fabric(topo), events


def generate_schedule(scn: Scenario) -> List[Request]:
    """Expand demand totals into a timed, id-ordered request stream.

    Each demand entry's count is split as evenly as possible over its active
    cycles (earlier cycles take the remainder); every request gets a uniform
    offset inside its cycle from the scenario RNG.  Draw order is file order,
    then cycle, then index, so the stream is reproducible for a seed.
    """
    rng = random.Random(scn.run.seed)
    rates = {c.index: kbps(c.rate_mbps) for c in scn.classes}
    ports = {c.index: (c.port_lo, c.port_hi) for c in scn.classes}
    raw: List[Tuple[float, int, DemandEntry]] = []
    gen_id = 0
    for entry in scn.demands:
        n_cycles = scn.run.cycles - entry.start_cycle
        base, rem = divmod(entry.count, n_cycles)
        for cycle in range(entry.start_cycle, scn.run.cycles):
            per_cycle = base + (1 if cycle - entry.start_cycle < rem else 0)
            for _ in range(per_cycle):
                offset = rng.uniform(0.0, scn.run.cycle_length)
                raw.append((cycle * scn.run.cycle_length + offset, gen_id, entry))
                gen_id += 1
    raw.sort(key=lambda item: (item[0], item[1]))
    schedule: List[Request] = []
    for position, (time, _gid, entry) in enumerate(raw, start=1):
        lo, hi = ports[entry.class_index]
        schedule.append(
            Request(
                lsp_id=position,
                time=time,
                class_index=entry.class_index,
                src=entry.src,
                dst=entry.dst,
                demand_kbps=rates[entry.class_index],
                src_port=20000 + position,
                dst_port=lo + position % (hi - lo + 1),
            )
        )
    return schedule


@dataclass
class RunResult:
    scenario: Scenario
    state: NetworkState
    fabric: Fabric
    controller: Controller
    schedule: List[Request]
    metrics: MetricsLog

    @property
    def journal(self) -> List[Dict]:
        return self.controller.journal


# Heap event kinds; lower sorts first at one timestamp.
_EXPIRY, _TIMED_RECONFIG, _REQUEST = 0, 1, 2


def simulate(
    scn: Scenario,
    on_event: Optional[Callable[[str, NetworkState, Fabric], None]] = None,
) -> RunResult:
    """Run a scenario to completion (or to its stop count).

    ``on_event`` is called after every handled event with the event kind, the
    live state and the fabric; tests use it to assert invariants continuously.
    """
    state, fabric, events = build(scn)
    classifier = Classifier.for_state(
        state, [(c.port_lo, c.port_hi, c.index) for c in scn.classes]
    )
    controller = Controller(state, fabric, classifier)
    schedule = generate_schedule(scn)
    metrics = MetricsLog(scn.n_classes)
    watched = scn.bottleneck or min(state.topology.links)
    watched_link = state.topology.links[watched]

    by_count: Dict[int, List[bam.ReconfigEvent]] = {}
    heap: List[Tuple[float, int, int]] = []
    for idx, event in enumerate(events):
        if event.at_time is not None:
            heapq.heappush(heap, (event.at_time, _TIMED_RECONFIG, idx))
        else:
            by_count.setdefault(event.after_request, []).append(event)
    for request in schedule:
        heapq.heappush(heap, (request.time, _REQUEST, request.lsp_id))

    def notify(kind: str) -> None:
        if on_event is not None:
            on_event(kind, state, fabric)

    handled = 0
    while heap:
        now, kind, seq = heapq.heappop(heap)
        if kind == _EXPIRY:
            # Timers of preempted LSPs are left in the heap; skip them here.
            if seq in state.active_lsps:
                controller.handle_expiry(seq, now)
                notify("expire")
        elif kind == _TIMED_RECONFIG:
            controller.apply_reconfig(events[seq], now)
            notify("reconfig")
        else:
            if scn.run.stop is not None and handled >= scn.run.stop:
                continue  # stop criterion reached; drain departures only
            request = schedule[seq - 1]
            req = LspRequest(
                id=request.lsp_id,
                match=FlowMatch(
                    src_ip=state.topology.hosts[request.src],
                    dst_ip=state.topology.hosts[request.dst],
                    src_port=request.src_port,
                    dst_port=request.dst_port,
                ),
                arrival_time=now,
                lifetime=scn.run.lsp_lifetime,
            )
            outcome = controller.handle_request(req)
            if outcome.lsp.state is LspState.ACTIVE:
                heapq.heappush(heap, (now + scn.run.lsp_lifetime, _EXPIRY, req.id))
            metrics.append(
                MetricsRecord(
                    request_index=request.lsp_id,
                    sim_time=now,
                    util_kbps=tuple(watched_link.alloc),
                    blocked=tuple(state.counters.blocked),
                    preempted=tuple(state.counters.preempted),
                    admitted=tuple(state.counters.admitted),
                )
            )
            notify("request")
            handled += 1
            for event in by_count.get(handled, ()):
                controller.apply_reconfig(event, now)
                notify("reconfig")
    return RunResult(scn, state, fabric, controller, schedule, metrics)


def bundled_names() -> List[str]:
    root = resources.files(__package__) / "scenarios"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".scn"))


def load_bundled(name: str) -> Scenario:
    if name.endswith(".scn"):
        name = name[:-4]
    path = resources.files(__package__) / "scenarios" / (name + ".scn")
    try:
        text = path.read_text()
    except (FileNotFoundError, OSError):
        raise ScenarioError("no bundled scenario named %r" % name) from None
    return parse_text(text, source="bundled:%s" % name)


def load(path_or_name: str) -> Scenario:
    """A filesystem path, or the name of a bundled scenario."""
    if os.path.exists(path_or_name):
        return parse_file(path_or_name)
    return load_bundled(path_or_name)
