"""Shared builders and brute-force oracles for the test suite.

The oracles here recompute verdicts, victim sets and routes by direct
enumeration, independently of the package's decision logic, so the tests
compare two implementations that share nothing but the data model.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Sequence, Tuple

from bamsim import (
    BcConfig,
    Lsp,
    LspState,
    Model,
    NetworkState,
    Topology,
    TrafficClass,
    commit,
)


def single_link_state(
    model: Model,
    bc: Sequence[int],
    capacity: int,
    demands: Sequence[int],
) -> NetworkState:
    """Two hosts joined by one link; bandwidth figures in raw kbps."""
    topo = Topology()
    topo.add_host("A")
    topo.add_host("B")
    topo.add_link("L1", "A", "B", capacity)
    topo.freeze(len(demands))
    classes = [TrafficClass(i, d) for i, d in enumerate(demands)]
    config = BcConfig(model, values_kbps=tuple(bc))
    return NetworkState(topo, classes, config)


def admit(
    state: NetworkState,
    lsp_id: int,
    class_index: int,
    when: float,
    path: Tuple[str, ...] = ("L1",),
) -> Lsp:
    """Force-commit one LSP (bypasses admission control on purpose)."""
    lsp = Lsp(
        id=lsp_id,
        class_index=class_index,
        demand_kbps=state.classes[class_index].max_lsp_kbps,
        path=path,
        src_host="A",
        dst_host="B",
        admit_time=when,
        lifetime=1.0,
    )
    state.counters.requested[class_index] += 1
    commit(state, lsp)
    return lsp


def fill(state: NetworkState, class_index: int, count: int, first_id: int, t0: float = 0.0) -> List[Lsp]:
    """Admit `count` LSPs of one class with increasing ids and admit times."""
    return [
        admit(state, first_id + i, class_index, t0 + i)
        for i in range(count)
    ]


# ---------------------------------------------------------------------------
# Admission oracles (single link).


def mam_fits_direct(alloc: Sequence[int], bc: Sequence[int], cap: int, c: int, d: int) -> bool:
    if sum(alloc) + d > cap:
        return False
    return alloc[c] + d <= bc[c]


def rdm_fits_direct(alloc: Sequence[int], bc: Sequence[int], cap: int, c: int, d: int) -> bool:
    """Every constraint from 0 up to the request's class must absorb the
    demand over the classes it governs (constraint b governs b..n-1)."""
    if sum(alloc) + d > cap:
        return False
    for b in range(c + 1):
        if sum(alloc[b:]) + d > bc[b]:
            return False
    return True


def _alloc_of(state: NetworkState, link_id: str = "L1") -> List[int]:
    return list(state.topology.links[link_id].alloc)


def victim_count_range(state: NetworkState, c: int) -> List[int]:
    """Per-class count of active LSPs below class c (single-link states)."""
    n = [0] * c
    for lsp in state.active_lsps.values():
        if lsp.class_index < c:
            n[lsp.class_index] += 1
    return n


def _combos_with_sum(avail: Sequence[int], total: int):
    """Per-class victim counts bounded by avail summing to exactly total."""
    if not avail:
        if total == 0:
            yield ()
        return
    head = avail[0]
    for s in range(min(head, total), -1, -1):
        for rest in _combos_with_sum(avail[1:], total - s):
            yield (s,) + rest


def oracle_rdm_verdict(
    state: NetworkState, c: int, d: int, link_id: str = "L1"
) -> Tuple[str, Optional[int]]:
    """(verdict, minimal victim count) by enumerating per-class evictions.

    Victims within one class are interchangeable on a single link, so the
    search space is the grid of per-class victim counts, not subsets.  Only
    strictly lower classes may be evicted.  Eviction is monotone (removing
    more can only help), so evicting everything is a feasibility pre-check
    and the count scan stops at the first feasible total.
    """
    link = state.topology.links[link_id]
    bc = state.admission_bc(link)
    cap = link.capacity_kbps
    alloc = _alloc_of(state, link_id)
    assert bc is not None
    if rdm_fits_direct(alloc, bc, cap, c, d):
        return "Grant", None
    avail = victim_count_range(state, c)
    demands = [state.classes[k].max_lsp_kbps for k in range(c)]

    def fits_after(combo: Sequence[int]) -> bool:
        trial = list(alloc)
        for k, s in enumerate(combo):
            trial[k] -= s * demands[k]
        return rdm_fits_direct(trial, bc, cap, c, d)

    if not fits_after(avail):
        return "Deny", None
    for total in range(1, sum(avail) + 1):
        if any(fits_after(combo) for combo in _combos_with_sum(avail, total)):
            return "GrantWithPreemption", total
    return "Deny", None  # unreachable given the pre-check


def eviction_clears(state: NetworkState, victim_ids: Sequence[int], c: int, d: int, link_id: str = "L1") -> bool:
    """Would removing exactly these LSPs let the request fit?  Re-evaluates
    the constraints directly on a scratch allocation vector."""
    link = state.topology.links[link_id]
    bc = state.admission_bc(link)
    trial = _alloc_of(state, link_id)
    for vid in victim_ids:
        lsp = state.active_lsps[vid]
        trial[lsp.class_index] -= lsp.demand_kbps
    if state.bc_config.model is Model.MAM:
        return mam_fits_direct(trial, bc, link.capacity_kbps, c, d)
    return rdm_fits_direct(trial, bc, link.capacity_kbps, c, d)


# ---------------------------------------------------------------------------
# Routing oracle.


def oracle_route(topo: Topology, src: str, dst: str) -> Optional[Tuple[str, ...]]:
    """Minimum-hop, lexicographically smallest link-id path by exhaustive
    DFS over simple paths; None when disconnected."""
    adjacency: Dict[str, List[Tuple[str, str]]] = {}
    for link in topo.links.values():
        adjacency.setdefault(link.a, []).append((link.id, link.b))
        adjacency.setdefault(link.b, []).append((link.id, link.a))
    best: Optional[Tuple[str, ...]] = None

    def walk(node: str, seen: frozenset, trail: Tuple[str, ...]) -> None:
        nonlocal best
        if best is not None and len(trail) > len(best):
            return
        if node == dst:
            if best is None or (len(trail), trail) < (len(best), best):
                best = trail
            return
        for link_id, peer in adjacency.get(node, []):
            if peer not in seen:
                walk(peer, seen | {peer}, trail + (link_id,))

    if src == dst:
        return ()
    walk(src, frozenset([src]), ())
    return best


def drain(state: NetworkState) -> None:
    """Release every active LSP as completed (test teardown helper)."""
    from bamsim import release

    for lsp_id in list(state.active_lsps):
        release(state, lsp_id, LspState.COMPLETED)
