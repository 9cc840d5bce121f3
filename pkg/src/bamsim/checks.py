"""Consistency checks over a live NetworkState (and optionally its fabric).

These are meant to run after every simulation event in tests, so they stay
cheap: one pass over the active registry and one over the links.  During a
soft-reconfiguration drain the effective cap on each constraint is the larger
of the current and the pending value; allocations between the two are legal
until attrition clears them.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from .core import Model, NetworkState
from .fabric import Fabric


class InvariantViolation(AssertionError):
    pass


def _fail(message: str) -> None:
    raise InvariantViolation(message)


def check_state(state: NetworkState) -> None:
    """Ledger, registry, constraint and counter invariants."""
    n = state.n_classes
    recount: Dict[str, List[int]] = {lid: [0] * n for lid in state.topology.links}
    active_per_class = [0] * n
    for lsp in state.active_lsps.values():
        active_per_class[lsp.class_index] += 1
        for lid in lsp.path:
            recount[lid][lsp.class_index] += lsp.demand_kbps
    for lid, link in state.topology.links.items():
        if link.alloc != recount[lid]:
            _fail("link %s ledger %r != registry recount %r" % (lid, link.alloc, recount[lid]))
        if any(v < 0 for v in link.alloc):
            _fail("link %s has a negative allocation" % lid)
        if link.total_alloc > link.capacity_kbps:
            _fail("link %s over capacity: %d > %d" % (lid, link.total_alloc, link.capacity_kbps))
        current = state.bc_config.bc_for(link)
        pending = state.pending_soft_bc.bc_for(link) if state.pending_soft_bc else None
        cap = _effective_cap(current, pending)
        if cap is None:
            continue
        if state.bc_config.model is Model.MAM:
            for c in range(n):
                if link.alloc[c] > cap[c]:
                    _fail("link %s class %d over constraint: %d > %d" % (lid, c, link.alloc[c], cap[c]))
        else:
            suffix = 0
            for b in range(n - 1, -1, -1):
                suffix += link.alloc[b]
                if suffix > cap[b]:
                    _fail("link %s nested sum from %d over constraint: %d > %d" % (lid, b, suffix, cap[b]))
    counters = state.counters
    for c in range(n):
        if counters.requested[c] != counters.admitted[c] + counters.blocked[c]:
            _fail("class %d: requested != admitted + blocked" % c)
        retired = counters.completed[c] + counters.preempted[c]
        if counters.admitted[c] != active_per_class[c] + retired:
            _fail("class %d: admitted != active + completed + preempted" % c)
        if any(row[c] < 0 for row in counters.snapshot()):
            _fail("class %d: negative counter" % c)


def _effective_cap(
    current: Optional[Tuple[int, ...]], pending: Optional[Tuple[int, ...]]
) -> Optional[Tuple[int, ...]]:
    if current is None:
        return pending
    if pending is None:
        return current
    return tuple(max(a, b) for a, b in zip(current, pending))


def check_fabric(state: NetworkState, fabric: Fabric) -> None:
    """Every active LSP holds exactly one rule per on-path switch; no rule
    belongs to a retired LSP."""
    per_owner: Dict[int, int] = {}
    for switch in state.topology.switches:
        for rule in fabric.rules_on(switch):
            per_owner[rule.owner] = per_owner.get(rule.owner, 0) + 1
    for owner in per_owner:
        if owner not in state.active_lsps:
            _fail("rule owner %d is not an active LSP" % owner)
    for lsp in state.active_lsps.values():
        expected = len(state.topology.switches_on(lsp.path, lsp.src_host))
        if per_owner.get(lsp.id, 0) != expected:
            _fail(
                "LSP %d holds %d rules, path has %d switches"
                % (lsp.id, per_owner.get(lsp.id, 0), expected)
            )


def check_all(state: NetworkState, fabric: Optional[Fabric] = None) -> None:
    check_state(state)
    if fabric is not None:
        check_fabric(state, fabric)
