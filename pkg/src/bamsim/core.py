"""Domain model for an emulated MPLS network: traffic classes, links, LSPs,
and the per-link per-class bandwidth ledger.

Bandwidth is tracked internally as integral kilobits per second so that the
allocation arithmetic stays exact; user-facing figures are in Mbps.  Paths are
ordered link-id sequences; routing is minimum-hop with a lexicographic
tie-break on the link-id sequence, so it is deterministic for a fixed
topology.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple


def kbps(mbps: float) -> int:
    """Convert an Mbps figure to the internal integral kbps unit."""
    return int(round(mbps * 1000))


def mbps(value_kbps: int) -> float:
    return value_kbps / 1000.0


class NoRoute(Exception):
    """Source and destination are not connected."""


class CapacityViolation(Exception):
    """Committing a reservation would overrun a link's physical capacity."""


class UnknownLsp(Exception):
    """LSP id is not present in the active registry."""


class NotActive(Exception):
    """Operation requires an Active LSP."""


class InvalidBc(Exception):
    """Bandwidth-constraint vector is malformed for the model in use."""


class Model(enum.Enum):
    MAM = "MAM"
    RDM = "RDM"


class LspState(enum.Enum):
    REQUESTED = "Requested"
    ACTIVE = "Active"
    BLOCKED = "Blocked"
    PREEMPTED = "Preempted"
    COMPLETED = "Completed"


@dataclass(frozen=True)
class TrafficClass:
    """A class type (CT): an index plus the fixed per-LSP bandwidth demand."""

    index: int
    max_lsp_kbps: int

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError("class index must be >= 0")
        if self.max_lsp_kbps <= 0:
            raise ValueError("max LSP bandwidth must be positive")


@dataclass(frozen=True)
class BcConfig:
    """A bandwidth-constraint vector plus the model that interprets it.

    Values are either absolute (kbps, one per constraint index) or percentages
    of each governed link's capacity; exactly one of the two must be given.
    ``applies_to`` limits which links the config governs (None means all).

    Under MAM constraint c caps the allocation of class c alone.  Under RDM
    constraint b caps the summed allocation of classes b..n-1, so the vector
    must be non-increasing.
    """

    model: Model
    values_kbps: Optional[Tuple[int, ...]] = None
    percents: Optional[Tuple[float, ...]] = None
    applies_to: Optional[frozenset] = None

    def __post_init__(self) -> None:
        if (self.values_kbps is None) == (self.percents is None):
            raise InvalidBc("exactly one of values_kbps/percents is required")
        raw: Sequence[float] = (
            self.values_kbps if self.values_kbps is not None else self.percents
        )
        if len(raw) == 0:
            raise InvalidBc("empty constraint vector")
        if any(v < 0 for v in raw):
            raise InvalidBc("constraints must be non-negative")
        if self.percents is not None and any(v > 100 for v in self.percents):
            raise InvalidBc("percentages must be <= 100")
        if self.model is Model.RDM:
            if any(a < b for a, b in zip(raw, raw[1:])):
                raise InvalidBc("RDM constraints must be non-increasing")

    @property
    def n_classes(self) -> int:
        raw = self.values_kbps if self.values_kbps is not None else self.percents
        return len(raw)

    def governs(self, link_id: str) -> bool:
        return self.applies_to is None or link_id in self.applies_to

    def bc_for(self, link: "Link") -> Optional[Tuple[int, ...]]:
        """The effective kbps constraint vector on one link, or None if the
        link is outside this config's scope."""
        if not self.governs(link.id):
            return None
        if self.values_kbps is not None:
            return self.values_kbps
        return tuple(int(round(link.capacity_kbps * p / 100.0)) for p in self.percents)

    def validate_for(self, topology: "Topology") -> None:
        """Reject constraints that exceed the capacity of a governed link."""
        for link in topology.links.values():
            bc = self.bc_for(link)
            if bc is None:
                continue
            for b, value in enumerate(bc):
                if value > link.capacity_kbps:
                    raise InvalidBc(
                        "constraint %d (%d kbps) exceeds capacity of link %s"
                        % (b, value, link.id)
                    )


@dataclass
class Link:
    """An undirected link with one allocation counter per traffic class."""

    id: str
    a: str
    b: str
    capacity_kbps: int
    alloc: List[int] = field(default_factory=list)

    def init_alloc(self, n_classes: int) -> None:
        self.alloc = [0] * n_classes

    def other_end(self, node: str) -> str:
        if node == self.a:
            return self.b
        if node == self.b:
            return self.a
        raise ValueError("node %r is not an endpoint of link %s" % (node, self.id))

    @property
    def total_alloc(self) -> int:
        return sum(self.alloc)


@dataclass
class Lsp:
    """A label-switched path instance and its lifecycle bookkeeping."""

    id: int
    class_index: int
    demand_kbps: int
    path: Tuple[str, ...]
    src_host: str
    dst_host: str
    state: LspState = LspState.REQUESTED
    admit_time: Optional[float] = None
    end_time: Optional[float] = None
    lifetime: Optional[float] = None


class Topology:
    """Nodes, links, deterministic port numbering and min-hop routing."""

    def __init__(self) -> None:
        self.hosts: Dict[str, str] = {}  # name -> synthetic ip
        self.switches: List[str] = []
        self.links: Dict[str, Link] = {}
        self._adjacency: Dict[str, List[Tuple[str, str]]] = {}
        self._ports: Dict[Tuple[str, str], int] = {}

    def add_host(self, name: str) -> None:
        if name in self.hosts or name in self.switches:
            raise ValueError("duplicate node %r" % name)
        self.hosts[name] = "10.0.0.%d" % (len(self.hosts) + 1)

    def add_switch(self, name: str) -> None:
        if name in self.hosts or name in self.switches:
            raise ValueError("duplicate node %r" % name)
        self.switches.append(name)

    def add_link(self, link_id: str, a: str, b: str, capacity_kbps: int) -> None:
        for node in (a, b):
            if node not in self.hosts and node not in self.switches:
                raise ValueError("link %s references unknown node %r" % (link_id, node))
        if link_id in self.links:
            raise ValueError("duplicate link %r" % link_id)
        self.links[link_id] = Link(link_id, a, b, capacity_kbps)

    def freeze(self, n_classes: int) -> None:
        """Finalize adjacency, allocation vectors and switch port numbers."""
        self._adjacency = {name: [] for name in list(self.hosts) + self.switches}
        for link in self.links.values():
            link.init_alloc(n_classes)
            self._adjacency[link.a].append((link.id, link.b))
            self._adjacency[link.b].append((link.id, link.a))
        for entries in self._adjacency.values():
            entries.sort()
        # Ports are synthetic: on each switch, attached links sorted by id
        # get ports 1..n.  Deterministic for a fixed topology.
        for switch in self.switches:
            for port, (link_id, _peer) in enumerate(self._adjacency[switch], start=1):
                self._ports[(switch, link_id)] = port

    def port_of(self, switch: str, link_id: str) -> int:
        try:
            return self._ports[(switch, link_id)]
        except KeyError:
            raise ValueError("no port for link %s on switch %s" % (link_id, switch))

    def nodes_on(self, path: Sequence[str], src: str) -> List[str]:
        """The node sequence visited by a path starting at src."""
        nodes = [src]
        for link_id in path:
            nodes.append(self.links[link_id].other_end(nodes[-1]))
        return nodes

    def switches_on(self, path: Sequence[str], src: str) -> List[str]:
        """Interior switches traversed by a path (endpoints excluded)."""
        interior = self.nodes_on(path, src)[1:-1]
        return [n for n in interior if n in self._adjacency and n in set(self.switches)]

    def shortest_path(self, src: str, dst: str) -> Tuple[str, ...]:
        if src == dst:
            return ()
        dist_from_src = self._bfs(src)
        dist_to_dst = self._bfs(dst)
        if dst not in dist_from_src:
            raise NoRoute("%s -> %s" % (src, dst))
        total = dist_from_src[dst]
        # Greedy reconstruction: at each node take the smallest link id that
        # still lies on some minimum-hop path.  This yields the
        # lexicographically smallest link-id sequence among min-hop paths.
        path: List[str] = []
        node = src
        hops = 0
        while node != dst:
            for link_id, peer in self._adjacency[node]:
                if dist_to_dst.get(peer) == total - hops - 1:
                    path.append(link_id)
                    node = peer
                    hops += 1
                    break
            else:
                raise NoRoute("%s -> %s" % (src, dst))
        return tuple(path)

    def _bfs(self, start: str) -> Dict[str, int]:
        dist = {start: 0}
        frontier = [start]
        while frontier:
            nxt: List[str] = []
            for node in frontier:
                for _link_id, peer in self._adjacency[node]:
                    if peer not in dist:
                        dist[peer] = dist[node] + 1
                        nxt.append(peer)
            frontier = nxt
        return dist


@dataclass
class Counters:
    """Monotone per-class event counters."""

    requested: List[int]
    admitted: List[int]
    blocked: List[int]
    preempted: List[int]
    completed: List[int]

    @classmethod
    def zero(cls, n_classes: int) -> "Counters":
        return cls(*([0] * n_classes for _ in range(5)))

    def snapshot(self) -> Tuple[Tuple[int, ...], ...]:
        return (
            tuple(self.requested),
            tuple(self.admitted),
            tuple(self.blocked),
            tuple(self.preempted),
            tuple(self.completed),
        )


@dataclass
class NetworkState:
    """The controller's authoritative view: topology, allocation ledger,
    active-LSP registry, constraint configuration and counters."""

    topology: Topology
    classes: List[TrafficClass]
    bc_config: BcConfig
    pending_soft_bc: Optional[BcConfig] = None
    active_lsps: Dict[int, Lsp] = field(default_factory=dict)
    counters: Counters = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.counters is None:
            self.counters = Counters.zero(len(self.classes))
        if self.bc_config.n_classes != len(self.classes):
            raise InvalidBc("constraint vector length must match class count")

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def admission_bc(self, link: Link) -> Optional[Tuple[int, ...]]:
        """Constraint vector used for admission on one link.

        While a soft reconfiguration is pending, each constraint is the
        tighter of the current and the pending value: cuts start denying new
        requests at once (never preempting), raises wait until attrition
        clears every violation and the pending config is promoted.
        """
        current = self.bc_config.bc_for(link)
        if self.pending_soft_bc is None:
            return current
        pending = self.pending_soft_bc.bc_for(link)
        if current is None or pending is None:
            return pending if current is None else current
        return tuple(min(a, b) for a, b in zip(current, pending))


def path_for(state: NetworkState, src: str, dst: str) -> Tuple[str, ...]:
    """Deterministic minimum-hop route between two nodes as link ids.

    Ties are broken by the lexicographically smallest link-id sequence.
    Raises NoRoute when the nodes are disconnected; src == dst yields ().
    """
    return state.topology.shortest_path(src, dst)


def commit(state: NetworkState, lsp: Lsp) -> None:
    """Reserve an LSP's demand on every link of its path and activate it.

    The LSP must be in Requested state.  Validation runs before any link is
    touched, so a CapacityViolation leaves the ledger unchanged.
    """
    if lsp.state is not LspState.REQUESTED:
        raise NotActive("commit requires a Requested LSP, got %s" % lsp.state.value)
    if lsp.id in state.active_lsps:
        raise ValueError("LSP id %d already active" % lsp.id)
    links = [state.topology.links[lid] for lid in lsp.path]
    for link in links:
        if link.total_alloc + lsp.demand_kbps > link.capacity_kbps:
            raise CapacityViolation(
                "link %s: %d + %d exceeds capacity %d"
                % (link.id, link.total_alloc, lsp.demand_kbps, link.capacity_kbps)
            )
    for link in links:
        link.alloc[lsp.class_index] += lsp.demand_kbps
    lsp.state = LspState.ACTIVE
    state.active_lsps[lsp.id] = lsp
    state.counters.admitted[lsp.class_index] += 1


def release(
    state: NetworkState,
    lsp_id: int,
    reason: LspState,
    now: Optional[float] = None,
) -> Lsp:
    """Return an active LSP's bandwidth on every path link and retire it.

    ``reason`` must be Completed or Preempted; the per-class preempted counter
    is bumped only for preemptions.  Exact inverse of commit with respect to
    the allocation ledger.
    """
    if reason not in (LspState.COMPLETED, LspState.PREEMPTED):
        raise ValueError("release reason must be Completed or Preempted")
    if lsp_id not in state.active_lsps:
        raise UnknownLsp(str(lsp_id))
    lsp = state.active_lsps[lsp_id]
    if lsp.state is not LspState.ACTIVE:
        raise NotActive("LSP %d is %s" % (lsp_id, lsp.state.value))
    for link_id in lsp.path:
        link = state.topology.links[link_id]
        link.alloc[lsp.class_index] -= lsp.demand_kbps
        assert link.alloc[lsp.class_index] >= 0, "negative allocation on %s" % link_id
    del state.active_lsps[lsp_id]
    lsp.state = reason
    lsp.end_time = now
    if reason is LspState.PREEMPTED:
        state.counters.preempted[lsp.class_index] += 1
    else:
        state.counters.completed[lsp.class_index] += 1
    return lsp
