"""Emulated switch fabric: the flow-rule tables the controller programs.

Admitting an LSP installs exactly one forwarding rule on every switch along
its path, keyed by the flow's match tuple and rate-limited to the LSP's
demand.  Tearing an LSP down (completion or preemption) removes its rules by
owner.  A blocked request never lands in a table; it is recorded as an
ephemeral drop event so the deny history stays inspectable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .core import Lsp, Topology, mbps


class UnknownSwitch(Exception):
    """Rule operation references a switch the fabric does not have."""


class RuleConflict(Exception):
    """A different rule already occupies this (switch, match) slot."""


@dataclass(frozen=True)
class FlowMatch:
    src_ip: str
    dst_ip: str
    src_port: int
    dst_port: int
    protocol: str = "tcp"

    def key(self) -> str:
        return "%s/%s:%d->%s:%d" % (
            self.protocol, self.src_ip, self.src_port, self.dst_ip, self.dst_port,
        )


@dataclass(frozen=True)
class FlowRule:
    """out_port None means a drop rule; forward rules carry their owner LSP
    and a rate limit equal to its demand."""

    switch_id: str
    match: FlowMatch
    out_port: Optional[int]
    rate_kbps: int
    owner: Optional[int]

    def __post_init__(self) -> None:
        if self.out_port is not None and self.owner is None:
            raise ValueError("forward rules must carry an owner LSP")

    @property
    def action(self) -> str:
        return "drop" if self.out_port is None else "fwd:%d" % self.out_port


class Fabric:
    def __init__(self, topology: Topology) -> None:
        self.topology = topology
        self._rules: Dict[Tuple[str, str], FlowRule] = {}
        self.drops: List[Tuple[float, str, int]] = []  # (time, match key, lsp id)

    def _check_switch(self, switch: str) -> None:
        if switch not in self.topology.switches:
            raise UnknownSwitch(switch)

    def rule_count(self) -> int:
        return len(self._rules)

    def install(self, rule: FlowRule) -> None:
        self._check_switch(rule.switch_id)
        slot = (rule.switch_id, rule.match.key())
        if slot in self._rules:
            raise RuleConflict("%s already has a rule for %s" % slot)
        self._rules[slot] = rule

    def lookup(self, switch: str, match: FlowMatch) -> Optional[FlowRule]:
        """Pure read; None signals a table miss."""
        self._check_switch(switch)
        return self._rules.get((switch, match.key()))

    def rules_on(self, switch: str) -> List[FlowRule]:
        self._check_switch(switch)
        return [r for (sw, _m), r in sorted(self._rules.items()) if sw == switch]

    def owner_rules(self, owner: int) -> List[FlowRule]:
        return [r for _k, r in sorted(self._rules.items()) if r.owner == owner]

    def install_path(self, lsp: Lsp, match: FlowMatch) -> List[FlowRule]:
        """One forwarding rule per switch on the LSP's path, all or nothing.

        Each switch forwards toward the next link of the path; the out port
        is the switch's port on that link.  Conflicts are detected before any
        rule is written.
        """
        topo = self.topology
        nodes = topo.nodes_on(lsp.path, lsp.src_host)
        rules: List[FlowRule] = []
        for i, node in enumerate(nodes[1:-1], start=1):
            self._check_switch(node)
            out_port = topo.port_of(node, lsp.path[i])
            rules.append(FlowRule(node, match, out_port, lsp.demand_kbps, lsp.id))
        for rule in rules:
            if (rule.switch_id, match.key()) in self._rules:
                raise RuleConflict("%s already has a rule for %s" % (rule.switch_id, match.key()))
        for rule in rules:
            self.install(rule)
        return rules

    def remove_by_owner(self, lsp_id: int) -> int:
        """Drop every rule owned by an LSP; returns how many were removed
        (the number of switches the LSP occupied)."""
        slots = [slot for slot, r in self._rules.items() if r.owner == lsp_id]
        for slot in slots:
            del self._rules[slot]
        return len(slots)

    def record_drop(self, lsp_id: int, match: FlowMatch, now: float) -> None:
        """Log a deny: blocked flows get no persistent rule, only an
        ephemeral drop record at the ingress."""
        self.drops.append((now, match.key(), lsp_id))

    def dump(self) -> str:
        """Stable textual table: switch, match, action, rate (Mbps), owner."""
        lines = []
        for (switch, key), rule in sorted(self._rules.items()):
            lines.append(
                "%s\t%s\t%s\t%g\t%s"
                % (switch, key, rule.action, mbps(rule.rate_kbps), rule.owner)
            )
        return "\n".join(lines)
