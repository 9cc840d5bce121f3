"""Centralized admission controller.

Every request flows through the same pipeline: classify the match tuple to a
traffic class and a precomputed route, consult the decision engine under the
active constraint config, then either program the fabric (grant), evict the
chosen victims first (grant with preemption), or log a drop at the ingress
(deny).  Expiries and runtime reconfigurations pass through the same object,
so the journal is a single ordered record of everything that happened.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from . import bam
from .core import (
    Lsp,
    LspState,
    NetworkState,
    NoRoute,
    UnknownLsp,
    commit,
    mbps,
    path_for,
    release,
)
from .fabric import Fabric, FlowMatch


class ClassificationFailure(Exception):
    """Match tuple does not resolve to a class and a route."""


@dataclass(frozen=True)
class LspRequest:
    """One emulated flow request as the controller sees it."""

    id: int
    match: FlowMatch
    arrival_time: float
    lifetime: float

    def __post_init__(self) -> None:
        if self.lifetime <= 0:
            raise ValueError("lifetime must be positive")


class Classifier:
    """Destination-port rules mapping flows to classes (first match wins)
    plus the static ip-pair route table, both fixed at scenario load."""

    def __init__(self) -> None:
        self._port_rules: List[Tuple[int, int, int]] = []  # (lo, hi, class)
        self._routes: Dict[Tuple[str, str], Tuple[Tuple[str, ...], str, str]] = {}

    def add_port_rule(self, lo: int, hi: int, class_index: int) -> None:
        self._port_rules.append((lo, hi, class_index))

    def add_route(self, src_ip: str, dst_ip: str, path: Tuple[str, ...], src_host: str, dst_host: str) -> None:
        self._routes[(src_ip, dst_ip)] = (path, src_host, dst_host)

    @classmethod
    def for_state(cls, state: NetworkState, port_rules: List[Tuple[int, int, int]]) -> "Classifier":
        """Port rules in table order; routes precomputed for every connected
        host pair (static routing)."""
        table = cls()
        for lo, hi, class_index in port_rules:
            table.add_port_rule(lo, hi, class_index)
        hosts = state.topology.hosts
        for src, src_ip in hosts.items():
            for dst, dst_ip in hosts.items():
                if src == dst:
                    continue
                try:
                    table.add_route(src_ip, dst_ip, path_for(state, src, dst), src, dst)
                except NoRoute:
                    continue
        return table

    def classify(self, match: FlowMatch) -> Tuple[int, Tuple[str, ...], str, str]:
        """(class_index, path, src_host, dst_host) for a match tuple."""
        for lo, hi, class_index in self._port_rules:
            if lo <= match.dst_port <= hi:
                break
        else:
            raise ClassificationFailure("no class rule matches port %d" % match.dst_port)
        route = self._routes.get((match.src_ip, match.dst_ip))
        if route is None:
            raise ClassificationFailure(
                "no route for %s -> %s" % (match.src_ip, match.dst_ip)
            )
        path, src_host, dst_host = route
        return class_index, path, src_host, dst_host


@dataclass
class RequestOutcome:
    lsp: Lsp
    verdict: bam.Verdict
    preempted: List[Lsp] = field(default_factory=list)

    @property
    def established(self) -> bool:
        return self.verdict is not bam.Verdict.DENY


class Controller:
    def __init__(self, state: NetworkState, fabric: Fabric, classifier: Classifier) -> None:
        self.state = state
        self.fabric = fabric
        self.classifier = classifier
        self.journal: List[Dict] = []

    def _log(self, **event) -> None:
        self.journal.append(event)

    def handle_request(self, req: LspRequest) -> RequestOutcome:
        """Admit, admit-with-preemption, or block one request."""
        state = self.state
        now = req.arrival_time
        class_index, path, src_host, dst_host = self.classifier.classify(req.match)
        lsp = Lsp(
            id=req.id,
            class_index=class_index,
            demand_kbps=state.classes[class_index].max_lsp_kbps,
            path=path,
            src_host=src_host,
            dst_host=dst_host,
            lifetime=req.lifetime,
        )
        state.counters.requested[class_index] += 1
        self._log(
            kind="request", time=now, lsp=lsp.id, ct=class_index,
            demand_mbps=mbps(lsp.demand_kbps), src=src_host, dst=dst_host,
        )
        decision = bam.decide(state, path, class_index, lsp.demand_kbps)
        if decision.verdict is bam.Verdict.DENY:
            state.counters.blocked[class_index] += 1
            lsp.state = LspState.BLOCKED
            self.fabric.record_drop(lsp.id, req.match, now)
            self._log(kind="block", time=now, lsp=lsp.id, ct=class_index)
            return RequestOutcome(lsp, decision.verdict)
        preempted: List[Lsp] = []
        for victim_id in decision.victims:
            victim = release(state, victim_id, LspState.PREEMPTED, now=now)
            self.fabric.remove_by_owner(victim_id)
            self._log(kind="preempt", time=now, lsp=victim_id, ct=victim.class_index, by=lsp.id)
            preempted.append(victim)
        lsp.admit_time = now
        commit(state, lsp)
        self.fabric.install_path(lsp, req.match)
        self._log(kind="admit", time=now, lsp=lsp.id, ct=class_index, path=list(path))
        if preempted and bam.promote_pending_if_clear(state):
            self._log_promote(now)
        return RequestOutcome(lsp, decision.verdict, preempted)

    def handle_expiry(self, lsp_id: int, now: float) -> Lsp:
        """Natural completion at end of lifetime."""
        if lsp_id not in self.state.active_lsps:
            raise UnknownLsp(str(lsp_id))
        lsp = release(self.state, lsp_id, LspState.COMPLETED, now=now)
        self.fabric.remove_by_owner(lsp_id)
        self._log(kind="expire", time=now, lsp=lsp_id, ct=lsp.class_index)
        if bam.promote_pending_if_clear(self.state):
            self._log_promote(now)
        return lsp

    def apply_reconfig(self, event: bam.ReconfigEvent, now: float) -> List[Lsp]:
        """Runtime constraint change; hard mode may evict LSPs."""
        preempted = bam.reconfigure(self.state, event.config, event.mode, now=now)
        for victim in preempted:
            self.fabric.remove_by_owner(victim.id)
            self._log(kind="preempt", time=now, lsp=victim.id, ct=victim.class_index, by=None)
        self._log(
            kind="reconfig", time=now, mode=event.mode.value,
            bc_mbps=[mbps(v) for v in event.config.values_kbps or ()],
            preempted=[v.id for v in preempted],
        )
        if event.mode is bam.ReconfigMode.SOFT and self.state.pending_soft_bc is None:
            self._log_promote(now)
        return preempted

    def _log_promote(self, now: float) -> None:
        bc = self.state.bc_config.values_kbps or ()
        self._log(kind="promote", time=now, bc_mbps=[mbps(v) for v in bc])
