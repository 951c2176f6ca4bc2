"""Network, schedule, and per-flight timeline model.

The network is a directed graph of vertiports (nodes with landing-spot
capacities) and flight corridors (links with uncertain travel times given as
closed intervals).  Flights follow fixed routes and block a landing spot for
the ground service time at every node they visit.  All quantities derived
here are interval hulls over the admissible travel-time realizations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .timeunits import format_time


class _UnboundedType:
    """Sentinel for nodes without a landing-spot capacity constraint."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNBOUNDED"


UNBOUNDED = _UnboundedType()

# Occupancy interval boundary behavior.  Under "right-open" a flight departing
# at time t frees its spot for a flight arriving at exactly t; under "closed"
# both still count at t.
RIGHT_OPEN = "right-open"
CLOSED = "closed"
SEMANTICS = (RIGHT_OPEN, CLOSED)
DEFAULT_SEMANTICS = RIGHT_OPEN


class InvalidNetwork(ValueError):
    """A network description violates a structural invariant."""


class InvalidSchedule(ValueError):
    """A schedule references unknown routes or carries bad departure times."""


@dataclass(frozen=True)
class Link:
    id: str
    tail: str
    head: str
    t_min: int  # ticks, > 0
    t_max: int  # ticks, >= t_min


@dataclass(frozen=True)
class Route:
    """A connected link sequence; node i+1 is the head of link i."""

    id: str
    links: tuple[str, ...]
    nodes: tuple[str, ...]

    def position_of(self, node: str) -> Optional[int]:
        """Index of *node* along the route (0 = origin), or None."""
        try:
            return self.nodes.index(node)
        except ValueError:
            return None


@dataclass(frozen=True)
class Flight:
    id: str
    route: str
    depart: int  # ticks, >= 0


@dataclass(frozen=True)
class FlightSchedule:
    flights: tuple[Flight, ...]

    def __iter__(self):
        return iter(self.flights)

    def __len__(self) -> int:
        return len(self.flights)

    def by_id(self, flight_id: str) -> Flight:
        for f in self.flights:
            if f.id == flight_id:
                return f
        raise KeyError(flight_id)


class UamNetwork:
    """Immutable vertiport network: graph, capacities, routes, backup sets."""

    def __init__(
        self,
        node_order: Sequence[str],
        capacities: Mapping[str, object],
        links: Sequence[Link],
        routes: Sequence[Route],
        backup_sets: Mapping[str, frozenset[str]],
        ground_time: int,
    ):
        self.node_order: tuple[str, ...] = tuple(node_order)
        self.capacities: dict[str, object] = dict(capacities)
        self.links: dict[str, Link] = {l.id: l for l in links}
        self.link_order: tuple[str, ...] = tuple(l.id for l in links)
        self.routes: dict[str, Route] = {r.id: r for r in routes}
        self.route_order: tuple[str, ...] = tuple(r.id for r in routes)
        self.backup_sets: dict[str, frozenset[str]] = dict(backup_sets)
        self.ground_time = ground_time

        heads = {l.head for l in links}
        tails = {l.tail for l in links}
        self.sources: frozenset[str] = frozenset(n for n in node_order if n not in heads)
        self.sinks: frozenset[str] = frozenset(n for n in node_order if n not in tails)
        self.links_into: dict[str, tuple[str, ...]] = {
            n: tuple(l.id for l in links if l.head == n) for n in node_order
        }

    def capacity(self, node: str):
        return self.capacities[node]

    def is_unbounded(self, node: str) -> bool:
        return self.capacities[node] is UNBOUNDED

    def reroute_targets(self, link_id: str, closed_node: str) -> tuple[str, ...]:
        """Nodes a flight on *link_id* may land at when *closed_node* is shut.

        The head node itself when it is open; otherwise the link's backup set
        minus the closed node.  Order follows the network's node order.
        """
        link = self.links[link_id]
        if link.head != closed_node:
            return (link.head,)
        allowed = self.backup_sets[link_id] - {closed_node}
        return tuple(n for n in self.node_order if n in allowed)

    def inbound_reroute_links(self, node: str, closed_node: str) -> tuple[str, ...]:
        """Links whose flights may end up landing at *node* under the closure."""
        out = []
        for lid in self.link_order:
            link = self.links[lid]
            if link.head == node and link.head != closed_node:
                out.append(lid)
            elif link.head == closed_node and node in self.backup_sets[lid] - {closed_node}:
                out.append(lid)
        return tuple(out)


def build_network(raw: Mapping) -> UamNetwork:
    """Validate a parsed network description and freeze it.

    Raises InvalidNetwork with a human-readable reason for any violated
    invariant: missing backup tail/head, non-positive or inverted travel
    bounds, overlapping source/sink sets, disconnected or revisiting routes.
    """
    from .timeunits import parse_time

    if not isinstance(raw, Mapping):
        raise InvalidNetwork("network description must be a mapping")

    try:
        ground_time = parse_time(raw.get("w", 0))
    except ValueError as exc:
        raise InvalidNetwork(f"bad ground service time: {exc}") from exc
    if ground_time < 0:
        raise InvalidNetwork("ground service time must be non-negative")

    node_order: list[str] = []
    capacities: dict[str, object] = {}
    for entry in raw.get("nodes", []):
        nid = entry.get("id")
        if not nid or not isinstance(nid, str):
            raise InvalidNetwork(f"node with missing or non-string id: {entry!r}")
        if nid in capacities:
            raise InvalidNetwork(f"duplicate node id {nid!r}")
        cap = entry.get("capacity", "unbounded")
        if cap == "unbounded":
            capacities[nid] = UNBOUNDED
        elif isinstance(cap, int) and not isinstance(cap, bool) and cap >= 0:
            capacities[nid] = cap
        else:
            raise InvalidNetwork(
                f"node {nid!r}: capacity must be a non-negative integer or \"unbounded\""
            )
        node_order.append(nid)
    if not node_order:
        raise InvalidNetwork("network has no nodes")

    links: list[Link] = []
    seen_links: set[str] = set()
    for entry in raw.get("links", []):
        lid = entry.get("id")
        if not lid or not isinstance(lid, str):
            raise InvalidNetwork(f"link with missing or non-string id: {entry!r}")
        if lid in seen_links:
            raise InvalidNetwork(f"duplicate link id {lid!r}")
        seen_links.add(lid)
        tail, head = entry.get("tail"), entry.get("head")
        for node in (tail, head):
            if node not in capacities:
                raise InvalidNetwork(f"link {lid!r}: unknown endpoint {node!r}")
        try:
            t_min = parse_time(entry["tmin"])
            t_max = parse_time(entry["tmax"])
        except (KeyError, ValueError) as exc:
            raise InvalidNetwork(f"link {lid!r}: bad travel-time bounds ({exc})") from exc
        if not 0 < t_min <= t_max:
            raise InvalidNetwork(
                f"link {lid!r}: travel-time bounds must satisfy 0 < min <= max"
            )
        links.append(Link(lid, tail, head, t_min, t_max))

    backup_sets: dict[str, frozenset[str]] = {}
    raw_backups = {entry["id"]: entry.get("backups", []) for entry in raw.get("links", [])}
    for link in links:
        backups = raw_backups.get(link.id) or []
        unknown = [b for b in backups if b not in capacities]
        if unknown:
            raise InvalidNetwork(f"link {link.id!r}: unknown backup nodes {unknown}")
        bset = frozenset(backups)
        if link.tail not in bset or link.head not in bset:
            raise InvalidNetwork(
                f"link {link.id!r}: backup set must include its tail {link.tail!r} "
                f"and head {link.head!r}"
            )
        backup_sets[link.id] = bset

    heads = {l.head for l in links}
    tails = {l.tail for l in links}
    source_set = {n for n in node_order if n not in heads}
    sink_set = {n for n in node_order if n not in tails}
    overlap = sorted(source_set & sink_set)
    if overlap:
        raise InvalidNetwork(f"nodes {overlap} are both source and sink")

    link_by_id = {l.id: l for l in links}
    routes: list[Route] = []
    seen_routes: set[str] = set()
    for entry in raw.get("routes", []):
        rid = entry.get("id")
        if not rid or not isinstance(rid, str):
            raise InvalidNetwork(f"route with missing or non-string id: {entry!r}")
        if rid in seen_routes:
            raise InvalidNetwork(f"duplicate route id {rid!r}")
        seen_routes.add(rid)
        link_ids = entry.get("links", [])
        if not link_ids:
            raise InvalidNetwork(f"route {rid!r}: empty link sequence")
        unknown = [lid for lid in link_ids if lid not in link_by_id]
        if unknown:
            raise InvalidNetwork(f"route {rid!r}: unknown links {unknown}")
        nodes = [link_by_id[link_ids[0]].tail]
        for prev, nxt in zip(link_ids, link_ids[1:]):
            if link_by_id[prev].head != link_by_id[nxt].tail:
                raise InvalidNetwork(
                    f"route {rid!r}: link {nxt!r} does not start where {prev!r} ends"
                )
        for lid in link_ids:
            nodes.append(link_by_id[lid].head)
        if len(set(nodes)) != len(nodes):
            raise InvalidNetwork(f"route {rid!r}: visits a node more than once")
        if nodes[0] not in source_set:
            raise InvalidNetwork(f"route {rid!r}: origin {nodes[0]!r} is not a source node")
        if nodes[-1] not in sink_set:
            raise InvalidNetwork(f"route {rid!r}: destination {nodes[-1]!r} is not a sink node")
        routes.append(Route(rid, tuple(link_ids), tuple(nodes)))

    return UamNetwork(node_order, capacities, links, routes, backup_sets, ground_time)


def build_schedule(raw: Mapping, network: UamNetwork) -> FlightSchedule:
    """Validate a parsed schedule against the network."""
    from .timeunits import parse_time

    flights: list[Flight] = []
    seen: set[str] = set()
    for entry in raw.get("flights", []):
        fid = entry.get("id")
        if not fid or not isinstance(fid, str):
            raise InvalidSchedule(f"flight with missing or non-string id: {entry!r}")
        if fid in seen:
            raise InvalidSchedule(f"duplicate flight id {fid!r}")
        seen.add(fid)
        route = entry.get("route")
        if route not in network.routes:
            raise InvalidSchedule(f"flight {fid!r}: unknown route {route!r}")
        try:
            depart = parse_time(entry["depart"])
        except (KeyError, ValueError) as exc:
            raise InvalidSchedule(f"flight {fid!r}: bad departure time ({exc})") from exc
        if depart < 0:
            raise InvalidSchedule(f"flight {fid!r}: departure time must be >= 0")
        flights.append(Flight(fid, route, depart))
    return FlightSchedule(tuple(flights))


@dataclass(frozen=True)
class FlightTimeline:
    """Interval-hull arrival and occupancy data for one flight.

    Position 0 is the origin; positions 1..k index the heads of the route's
    links.  `arrivals[i]`, `occ_lo[i]`, `occ_hi[i]` describe position i+1:
    the latest possible arrival there, and the hull of the landing-spot
    occupancy window (left-closed, right-open by convention; the `semantics`
    flag of the consuming operation decides how the right endpoint counts).
    """

    flight_id: str
    route_id: str
    depart: int
    nodes: tuple[str, ...]
    links: tuple[str, ...]
    arrivals: tuple[int, ...]
    occ_lo: tuple[int, ...]
    occ_hi: tuple[int, ...]
    window_lo: tuple[int, ...]  # earliest time the flight can be on link i+1

    def position_of(self, node: str) -> Optional[int]:
        try:
            return self.nodes.index(node)
        except ValueError:
            return None

    def occupancy(self, position: int) -> tuple[int, int]:
        """Occupancy hull [lo, hi) at route position >= 1."""
        if position < 1:
            raise ValueError("the origin holds no landing spot")
        return self.occ_lo[position - 1], self.occ_hi[position - 1]

    def latest_presence(self, position: int) -> int:
        """Latest time the flight may still hold a spot at the position.

        For the origin this is the departure time: the flight is gone once
        it has taken off and never blocks a spot there.
        """
        if position == 0:
            return self.depart
        return self.occ_hi[position - 1]

    def earliest_presence(self, position: int) -> int:
        if position == 0:
            return self.depart
        return self.occ_lo[position - 1]

    def window_worst(self, position: int, closed_node: str) -> tuple[int, int]:
        """Closed interval of times the flight may be in link segment i.

        The segment covers being on the link or parked at its head.  When the
        head is the closed node the upper end shrinks to the latest arrival
        there, since a flight that already landed is past the closure.
        """
        lo = self.window_lo[position - 1]
        head = self.nodes[position]
        hi = self.occ_hi[position - 1]
        if head == closed_node:
            hi = self.arrivals[position - 1]
        return lo, hi

    def window_best(self, position: int, closed_node: str) -> tuple[int, int]:
        """Like window_worst, but the into-closure upper end is the earliest
        arrival: past that time some realization has already landed."""
        lo = self.window_lo[position - 1]
        head = self.nodes[position]
        hi = self.occ_hi[position - 1]
        if head == closed_node:
            hi = self.occ_lo[position - 1]
        return lo, hi


def compute_timeline(network: UamNetwork, flight: Flight) -> FlightTimeline:
    """Arrival bounds, occupancy hulls, and link windows for one flight."""
    route = network.routes.get(flight.route)
    if route is None:
        raise InvalidSchedule(f"flight {flight.id!r}: unknown route {flight.route!r}")
    if flight.depart < 0:
        raise InvalidSchedule(f"flight {flight.id!r}: departure time must be >= 0")
    w = network.ground_time
    arrivals: list[int] = []
    occ_lo: list[int] = []
    occ_hi: list[int] = []
    window_lo: list[int] = []
    sum_min = 0
    sum_max = 0
    for i, lid in enumerate(route.links):
        link = network.links[lid]
        sum_min += link.t_min
        sum_max += link.t_max
        ground = i * w  # (position - 1) stops before this arrival
        arrive = flight.depart + sum_max + ground
        arrivals.append(arrive)
        occ_lo.append(flight.depart + sum_min + ground)
        occ_hi.append(arrive + w)
        if i == 0:
            window_lo.append(flight.depart)
        else:
            window_lo.append(occ_lo[i - 1] + w)
    return FlightTimeline(
        flight_id=flight.id,
        route_id=route.id,
        depart=flight.depart,
        nodes=route.nodes,
        links=route.links,
        arrivals=tuple(arrivals),
        occ_lo=tuple(occ_lo),
        occ_hi=tuple(occ_hi),
        window_lo=tuple(window_lo),
    )


def compute_timelines(network: UamNetwork, schedule: FlightSchedule) -> dict[str, FlightTimeline]:
    return {f.id: compute_timeline(network, f) for f in schedule}


@dataclass(frozen=True)
class CapacityViolation:
    node: str
    time: int
    flights: tuple[str, ...]
    occupancy: int
    capacity: int

    def describe(self) -> str:
        return (
            f"node {self.node}: {self.occupancy} flights ({', '.join(self.flights)}) "
            f"at t={format_time(self.time)} exceed capacity {self.capacity}"
        )


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violation: Optional[CapacityViolation] = None


def check_feasible(
    network: UamNetwork,
    schedule: FlightSchedule,
    timelines: Optional[Mapping[str, FlightTimeline]] = None,
    semantics: str = DEFAULT_SEMANTICS,
) -> FeasibilityReport:
    """Decide whether worst-case occupancy ever exceeds any node capacity.

    Sweeps the endpoints of every occupancy hull per node; the first node (in
    input order) with an over-capacity instant yields the witness.
    """
    if semantics not in SEMANTICS:
        raise ValueError(f"unknown semantics {semantics!r}")
    if timelines is None:
        timelines = compute_timelines(network, schedule)
    per_node: dict[str, list[tuple[int, int, str]]] = {}
    for flight in schedule:
        tl = timelines[flight.id]
        for pos in range(1, len(tl.nodes)):
            node = tl.nodes[pos]
            if network.is_unbounded(node):
                continue
            lo, hi = tl.occupancy(pos)
            per_node.setdefault(node, []).append((lo, hi, flight.id))
    for node in network.node_order:
        intervals = per_node.get(node)
        if not intervals:
            continue
        cap = network.capacity(node)
        overflow = max_overlap_time(intervals, cap, semantics)
        if overflow is not None:
            time, occupants = overflow
            return FeasibilityReport(
                False,
                CapacityViolation(node, time, tuple(occupants), len(occupants), cap),
            )
    return FeasibilityReport(True)


def max_overlap_time(
    intervals: Sequence[tuple[int, int, str]],
    capacity: int,
    semantics: str = DEFAULT_SEMANTICS,
) -> Optional[tuple[int, list[str]]]:
    """First time the number of overlapping intervals exceeds *capacity*.

    Returns (time, ids of intervals containing it) or None.  Under right-open
    semantics an interval [lo, hi) no longer counts at hi; under closed
    semantics it still does.
    """
    events: list[tuple[int, int, int]] = []
    for idx, (lo, hi, _id) in enumerate(intervals):
        if hi < lo or (hi == lo and semantics == RIGHT_OPEN):
            continue
        # Order key: under right-open, departures at t precede arrivals at t.
        start_rank = 1 if semantics == RIGHT_OPEN else 0
        end_rank = 0 if semantics == RIGHT_OPEN else 1
        events.append((lo, start_rank, idx))
        events.append((hi, end_rank, ~idx))
    events.sort(key=lambda e: (e[0], e[1]))
    active: set[int] = set()
    for time, _rank, token in events:
        if token >= 0:
            active.add(token)
            if len(active) > capacity:
                ids = [intervals[i][2] for i in sorted(active)]
                return time, ids
        else:
            active.discard(~token)
    return None
