"""Admission control under per-class bandwidth constraints.

Two allocation models are implemented.  MAM gives every class a private
partition: a request fits or it is denied, nothing is ever preempted.  RDM
nests the partitions, constraint b capping the combined allocation of classes
b and above, so a high-class request that does not fit may still be granted
by evicting lower-class LSPs that are borrowing from its slice.

Decisions are pure: ``check_mam``, ``check_rdm`` and ``select_victims`` never
touch the allocation ledger.  ``reconfigure`` is the one mutating entry point
and applies a new constraint vector either immediately (hard, evicting
whatever no longer fits) or lazily (soft, draining by attrition).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .core import (
    BcConfig,
    InvalidBc,
    Link,
    Lsp,
    LspState,
    Model,
    NetworkState,
    release,
)


class Verdict(enum.Enum):
    GRANT = "Grant"
    GRANT_WITH_PREEMPTION = "GrantWithPreemption"
    DENY = "Deny"


class ReconfigMode(enum.Enum):
    HARD = "hard"
    SOFT = "soft"


class Infeasible(Exception):
    """No victim set drawn from eligible LSPs can clear the deficits."""


@dataclass(frozen=True)
class AdmissionDecision:
    verdict: Verdict
    victims: Tuple[int, ...] = ()


@dataclass(frozen=True)
class ReconfigEvent:
    """A scheduled constraint change: fires either after the Nth request or
    at an absolute simulation time."""

    mode: ReconfigMode
    config: BcConfig
    after_request: Optional[int] = None
    at_time: Optional[float] = None

    def __post_init__(self) -> None:
        if (self.after_request is None) == (self.at_time is None):
            raise ValueError("exactly one of after_request/at_time is required")


# A deficit row: (link_id, lo, hi, deficit_kbps).  Classes k with
# lo <= k < hi are eligible to be evicted in service of the row; a victim
# counts toward it only if its path traverses the row's link.  An empty
# class range makes the row unsatisfiable.
Row = Tuple[str, int, int, int]


def _mam_fits(link: Link, bc: Optional[Tuple[int, ...]], class_index: int, demand_kbps: int) -> bool:
    if link.total_alloc + demand_kbps > link.capacity_kbps:
        return False
    if bc is None:
        return True
    return link.alloc[class_index] + demand_kbps <= bc[class_index]


def _rdm_fits(link: Link, bc: Optional[Tuple[int, ...]], class_index: int, demand_kbps: int) -> bool:
    # Constraint b caps classes b..n-1 combined; only b <= class is affected
    # by this request, higher constraints cannot gain allocation from it.
    if link.total_alloc + demand_kbps > link.capacity_kbps:
        return False
    if bc is None:
        return True
    suffix = 0
    for k in range(len(bc) - 1, -1, -1):
        suffix += link.alloc[k]
        if k <= class_index and suffix + demand_kbps > bc[k]:
            return False
    return True


def _admission_rows(
    state: NetworkState, path: Tuple[str, ...], class_index: int, demand_kbps: int
) -> List[Row]:
    """Deficits a request would leave on its path under the admission config.
    Victims must be strictly lower classes, hence hi = class_index."""
    rows: List[Row] = []
    model = state.bc_config.model
    for link_id in path:
        link = state.topology.links[link_id]
        bc = state.admission_bc(link)
        if model is Model.MAM:
            if not _mam_fits(link, bc, class_index, demand_kbps):
                # MAM never preempts: emit a row no victim set can satisfy.
                rows.append((link_id, class_index, class_index, 1))
            continue
        over_cap = link.total_alloc + demand_kbps - link.capacity_kbps
        if over_cap > 0 and (bc is None or bc[0] > link.capacity_kbps):
            rows.append((link_id, 0, class_index, over_cap))
        if bc is None:
            continue
        suffix = 0
        for b in range(len(bc) - 1, -1, -1):
            suffix += link.alloc[b]
            if b > class_index:
                continue
            deficit = suffix + demand_kbps - bc[b]
            if deficit > 0:
                rows.append((link_id, b, class_index, deficit))
    return rows


def _reconfig_rows(state: NetworkState, config: BcConfig) -> List[Row]:
    """Deficits of the current ledger against a candidate constraint vector.
    Only classes over their new entitlement are eligible for eviction."""
    rows: List[Row] = []
    n = state.n_classes
    for link in state.topology.links.values():
        bc = config.bc_for(link)
        if bc is None:
            continue
        if config.model is Model.MAM:
            for c in range(n):
                deficit = link.alloc[c] - bc[c]
                if deficit > 0:
                    rows.append((link.id, c, c + 1, deficit))
        else:
            suffix = 0
            for b in range(n - 1, -1, -1):
                suffix += link.alloc[b]
                deficit = suffix - bc[b]
                if deficit > 0:
                    rows.append((link.id, b, n, deficit))
    return rows


def _choose_victims(state: NetworkState, rows: List[Row]) -> List[Lsp]:
    """Smallest sufficient victim set under the eviction ordering.

    Candidates are scanned lowest class first, then newest first (admit time
    descending, id descending as the tie-break).  A candidate joins the set
    only while some row it serves still has a deficit.  A reverse pruning
    pass then drops members made redundant by later picks, so no member of
    the result can be removed without reopening a deficit.
    """
    if not rows:
        return []
    if any(lo >= hi for _lid, lo, hi, _d in rows):
        raise Infeasible("deficit with no eligible class")
    remaining = [list(r) for r in rows]
    candidates = sorted(
        state.active_lsps.values(),
        key=lambda l: (l.class_index, -(l.admit_time or 0.0), -l.id),
    )

    def serves(lsp: Lsp, row: List) -> bool:
        lid, lo, hi = row[0], row[1], row[2]
        return lo <= lsp.class_index < hi and lid in lsp.path

    chosen: List[Lsp] = []
    for lsp in candidates:
        if not any(row[3] > 0 and serves(lsp, row) for row in remaining):
            continue
        chosen.append(lsp)
        for row in remaining:
            if serves(lsp, row):
                row[3] -= lsp.demand_kbps
    if any(row[3] > 0 for row in remaining):
        raise Infeasible("eligible LSPs cannot cover the deficit")
    # Prune in reverse pick order: later picks may have made earlier ones
    # redundant when rows overlap.
    for i in range(len(chosen) - 1, -1, -1):
        trial = chosen[:i] + chosen[i + 1 :]
        deficits = [list(r) for r in rows]
        for lsp in trial:
            for row in deficits:
                if serves(lsp, row):
                    row[3] -= lsp.demand_kbps
        if all(row[3] <= 0 for row in deficits):
            del chosen[i]
    return chosen


def select_victims(state: NetworkState, rows: List[Row]) -> Tuple[int, ...]:
    """Victim ids for a set of deficit rows; raises Infeasible if no eligible
    combination suffices.  Pure."""
    return tuple(l.id for l in _choose_victims(state, rows))


def check_mam(
    state: NetworkState, path: Tuple[str, ...], class_index: int, demand_kbps: int
) -> AdmissionDecision:
    """MAM verdict for a request across its whole path.  Grant iff on every
    link the class partition and the physical capacity both fit; there is no
    sharing, so the alternative is always Deny.  Pure."""
    for link_id in path:
        link = state.topology.links[link_id]
        if not _mam_fits(link, state.admission_bc(link), class_index, demand_kbps):
            return AdmissionDecision(Verdict.DENY)
    return AdmissionDecision(Verdict.GRANT)


def check_rdm(
    state: NetworkState, path: Tuple[str, ...], class_index: int, demand_kbps: int
) -> AdmissionDecision:
    """RDM verdict for a request across its whole path.

    Grant when every constraint b <= class covers the summed allocation of
    classes b and above plus the demand, on every link.  When the only
    violations come from lower classes borrowing headroom this class is
    entitled to, the verdict is GrantWithPreemption with a minimal victim
    set; otherwise Deny.  Pure.
    """
    fits = all(
        _rdm_fits(state.topology.links[lid], state.admission_bc(state.topology.links[lid]),
                  class_index, demand_kbps)
        for lid in path
    )
    if fits:
        return AdmissionDecision(Verdict.GRANT)
    rows = _admission_rows(state, path, class_index, demand_kbps)
    try:
        victims = select_victims(state, rows)
    except Infeasible:
        return AdmissionDecision(Verdict.DENY)
    return AdmissionDecision(Verdict.GRANT_WITH_PREEMPTION, victims)


def decide(
    state: NetworkState, path: Tuple[str, ...], class_index: int, demand_kbps: int
) -> AdmissionDecision:
    """Model dispatch for the controller."""
    if state.bc_config.model is Model.MAM:
        return check_mam(state, path, class_index, demand_kbps)
    return check_rdm(state, path, class_index, demand_kbps)


def reconfigure(
    state: NetworkState,
    new_config: BcConfig,
    mode: ReconfigMode,
    now: Optional[float] = None,
) -> List[Lsp]:
    """Apply a new constraint vector at runtime.

    Hard: the vector takes effect immediately and any LSPs that no longer fit
    are preempted (newest first within the lowest over-quota class).  Returns
    the preempted LSPs.

    Soft: no LSP is ever touched.  While the change is pending, admission
    uses the tighter of the old and new value for each constraint, so
    lowered limits start denying at once while raised ones are withheld.
    The new vector becomes current once natural departures bring every link
    within its limits.  Returns [].
    """
    if new_config.model is not state.bc_config.model:
        raise InvalidBc("reconfiguration cannot change the allocation model")
    if new_config.n_classes != state.n_classes:
        raise InvalidBc("constraint vector length must match class count")
    new_config.validate_for(state.topology)
    if mode is ReconfigMode.SOFT:
        state.pending_soft_bc = new_config
        promote_pending_if_clear(state)
        return []
    state.bc_config = new_config
    state.pending_soft_bc = None
    rows = _reconfig_rows(state, new_config)
    victims = _choose_victims(state, rows)
    out: List[Lsp] = []
    for lsp in victims:
        out.append(release(state, lsp.id, LspState.PREEMPTED, now=now))
    return out


def promote_pending_if_clear(state: NetworkState) -> bool:
    """Make a pending soft config current once nothing violates it."""
    pending = state.pending_soft_bc
    if pending is None:
        return False
    if _reconfig_rows(state, pending):
        return False
    state.bc_config = pending
    state.pending_soft_bc = None
    return True
