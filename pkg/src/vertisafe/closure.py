"""Closure-scenario analysis.

For a closure scenario (closed node, closure time) this module derives the
flight index sets that drive safety checking, enumerates the finitely many
critical times at which any of those sets can change, and assembles the two
constraint systems:

* the worst-case system, which must reserve a landing spot for every flight
  that might still be headed for the closed node in some travel-time
  realization, and
* the best-case system, which only has to place the flights that are still
  inbound under every realization.

Both reduce to integral transportation feasibility over link/flight rows and
candidate landing-node columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .model import (
    DEFAULT_SEMANTICS,
    RIGHT_OPEN,
    SEMANTICS,
    UNBOUNDED,
    FlightSchedule,
    FlightTimeline,
    UamNetwork,
)
from .timeunits import TICKS_PER_UNIT
from .transport import TransportInstance


@dataclass(frozen=True)
class ClosureScenario:
    """All index sets derived from closing `closed_node` at `closure_time`.

    Flights in `rerouting` might still be short of the closed node and have
    departed, so a landing spot must be found for them somewhere; the subset
    `definitely_affected` cannot have passed it in any realization.  The
    per-flight `covered_positions` lists earlier route positions whose head
    doubles as a reroute candidate for the link into the closed node: a spot
    reserved there serves the flight wherever it actually is.
    """

    closed_node: str
    closure_time: int
    affected_links: tuple[str, ...]
    reroute_targets: dict[str, tuple[str, ...]]
    inbound_reroute_links: dict[str, tuple[str, ...]]
    flights_through: tuple[str, ...]
    possibly_affected: tuple[str, ...]
    canceled: tuple[str, ...]
    rerouting: tuple[str, ...]
    definitely_affected: tuple[str, ...]
    covered_positions: dict[str, tuple[int, ...]]
    unaffected_at: dict[str, tuple[str, ...]]


def derive_scenario(
    network: UamNetwork,
    schedule: FlightSchedule,
    timelines: Mapping[str, FlightTimeline],
    closed_node: str,
    closure_time: int,
) -> ClosureScenario:
    """Compute every scenario-defining set for (closed_node, closure_time)."""
    if closed_node not in network.capacities:
        raise ValueError(f"unknown node {closed_node!r}")
    if closure_time < 0:
        raise ValueError("closure time must be >= 0")

    affected_links = tuple(network.links_into.get(closed_node, ()))
    reroute_targets = {
        lid: network.reroute_targets(lid, closed_node) for lid in network.link_order
    }
    inbound = {
        node: network.inbound_reroute_links(node, closed_node)
        for node in network.node_order
    }

    flights_through: list[str] = []
    possibly: list[str] = []
    canceled: list[str] = []
    rerouting: list[str] = []
    definite: list[str] = []
    covered: dict[str, tuple[int, ...]] = {}
    for flight in schedule:
        tl = timelines[flight.id]
        pos = tl.position_of(closed_node)
        if pos is None:
            continue
        flights_through.append(flight.id)
        if tl.latest_presence(pos) <= closure_time:
            continue  # surely past the closed node already
        possibly.append(flight.id)
        if flight.depart > closure_time:
            canceled.append(flight.id)
            continue
        rerouting.append(flight.id)
        if pos >= 1 and tl.earliest_presence(pos) >= closure_time:
            definite.append(flight.id)
        covered[flight.id] = _covered_positions(network, tl, pos, closed_node)

    unaffected_at: dict[str, tuple[str, ...]] = {}
    possibly_set = set(possibly)
    for node in network.node_order:
        here: list[str] = []
        for flight in schedule:
            tl = timelines[flight.id]
            p = tl.position_of(node)
            if p is None or p == 0:
                continue
            if flight.id in possibly_set:
                continue
            here.append(flight.id)
        unaffected_at[node] = tuple(here)

    return ClosureScenario(
        closed_node=closed_node,
        closure_time=closure_time,
        affected_links=affected_links,
        reroute_targets=reroute_targets,
        inbound_reroute_links=inbound,
        flights_through=tuple(flights_through),
        possibly_affected=tuple(possibly),
        canceled=tuple(canceled),
        rerouting=tuple(rerouting),
        definitely_affected=tuple(definite),
        covered_positions=covered,
        unaffected_at=unaffected_at,
    )


def _covered_positions(
    network: UamNetwork,
    tl: FlightTimeline,
    closed_pos: int,
    closed_node: str,
) -> tuple[int, ...]:
    """Earlier route positions whose head is a reroute candidate of the link
    into the closed node."""
    if closed_pos < 1:
        return ()
    final_link = tl.links[closed_pos - 1]
    targets = set(network.reroute_targets(final_link, closed_node))
    return tuple(p for p in range(1, closed_pos) if tl.nodes[p] in targets)


def _peak_unaffected(
    timelines_in_order: Iterable[FlightTimeline],
    node: str,
    closure_time: int,
    closed_node: str,
    semantics: str,
) -> int:
    intervals: list[tuple[int, int]] = []
    for tl in timelines_in_order:
        p = tl.position_of(node)
        if p is None or p == 0:
            continue
        cpos = tl.position_of(closed_node)
        if cpos is not None and tl.latest_presence(cpos) > closure_time:
            continue  # possibly affected (or canceled): not counted here
        intervals.append(tl.occupancy(p))
    return _peak_from(intervals, closure_time, semantics)


def peak_unaffected_occupancy(
    network: UamNetwork,
    schedule: FlightSchedule,
    timelines: Mapping[str, FlightTimeline],
    node: str,
    closure_time: int,
    closed_node: str,
    semantics: str = DEFAULT_SEMANTICS,
) -> int:
    """Greatest number of closure-unaffected flights ever parked at `node`
    at one instant from the closure time onward.

    A flight counts as unaffected here when its route misses the closed node
    or it can no longer be short of it at the closure time; canceled flights
    never occupy anything and are excluded the same way.  Computed by an
    endpoint sweep over the occupancy hulls clipped to [closure_time, oo).
    """
    if semantics not in SEMANTICS:
        raise ValueError(f"unknown semantics {semantics!r}")
    if node not in network.capacities:
        raise ValueError(f"unknown node {node!r}")
    return _peak_unaffected(
        (timelines[f.id] for f in schedule), node, closure_time, closed_node, semantics
    )


def _peak_from(intervals: Sequence[tuple[int, int]], start: int, semantics: str) -> int:
    """Max overlap of the intervals over [start, oo)."""
    events: list[tuple[int, int]] = []
    right_open = semantics == RIGHT_OPEN
    for lo, hi in intervals:
        if right_open:
            if hi <= start or hi <= lo:
                continue
        else:
            if hi < start or hi < lo:
                continue
        lo = max(lo, start)
        events.append((lo, 1))
        events.append((hi, -1))
    if not events:
        return 0
    # Under right-open semantics a departure at t precedes an arrival at t.
    if right_open:
        events.sort(key=lambda e: (e[0], e[1]))
    else:
        events.sort(key=lambda e: (e[0], -e[1]))
    peak = 0
    active = 0
    for _, delta in events:
        active += delta
        if active > peak:
            peak = active
    return peak


def critical_times(
    network: UamNetwork,
    schedule: FlightSchedule,
    timelines: Mapping[str, FlightTimeline],
    closed_node: str,
) -> list[int]:
    """Times at which any scenario quantity for `closed_node` can change.

    Union of all occupancy-hull endpoints, departure times, and worst/best
    rerouting-window endpoints, augmented with the midpoint of every
    consecutive pair and one point past the maximum so behavior strictly
    between and beyond events is sampled too.
    """
    base: set[int] = set()
    for flight in schedule:
        tl = timelines[flight.id]
        base.add(tl.depart)
        for pos in range(1, len(tl.nodes)):
            lo, hi = tl.occupancy(pos)
            base.add(lo)
            base.add(hi)
            wl, wu = tl.window_worst(pos, closed_node)
            base.add(wl)
            base.add(wu)
            bl, bu = tl.window_best(pos, closed_node)
            base.add(bl)
            base.add(bu)
    if not base:
        return []
    ordered = sorted(base)
    out: list[int] = []
    for a, b in zip(ordered, ordered[1:]):
        out.append(a)
        mid = (a + b) // 2
        if mid != a:
            out.append(mid)
    out.append(ordered[-1])
    out.append(ordered[-1] + TICKS_PER_UNIT)
    return out


@dataclass(frozen=True)
class WorstCaseSystem:
    """Worst-case reservation system for one closure scenario.

    Variable rows are the links into the closed node; each row's supply is
    the number of rerouting flights that can only be accounted for on that
    link at the closure time.  Flights possibly in an earlier segment hold a
    spot at that segment's head (fixed counts).  Column residuals fold node
    capacity, the unaffected-occupancy peak, and fixed holds together.
    """

    closed_node: str
    closure_time: int
    supplies: dict[str, int]
    supply_flights: dict[str, tuple[str, ...]]
    covered_flights: dict[str, str]  # flight -> node already holding its spot
    fixed_counts: dict[str, int]  # link -> held-flight count at its head
    fixed_flights: dict[str, tuple[str, ...]]
    columns: dict[str, tuple[str, ...]]  # link -> candidate landing nodes
    unaffected_peak: dict[str, int]
    residuals: dict[str, object]  # node -> residual capacity or UNBOUNDED
    negative_residual_nodes: tuple[str, ...]

    def to_transport_instance(self) -> TransportInstance:
        rows = [(lid, self.supplies[lid]) for lid in self.supplies]
        col_ids: list[str] = []
        for lid in self.supplies:
            for node in self.columns[lid]:
                if node not in col_ids:
                    col_ids.append(node)
        cols = [(node, self.residuals[node]) for node in col_ids]
        cells = [(lid, node) for lid in self.supplies for node in self.columns[lid]]
        return TransportInstance(rows, cols, cells)


@dataclass(frozen=True)
class BestCaseSystem:
    """Best-case placement system: one unit row per definitely-affected
    flight, binary cells at its reachable candidate nodes."""

    closed_node: str
    closure_time: int
    flights: tuple[str, ...]
    allowed_nodes: dict[str, tuple[str, ...]]
    unaffected_peak: dict[str, int]
    residuals: dict[str, object]
    isolated_flights: tuple[str, ...]
    negative_residual_nodes: tuple[str, ...]

    def to_transport_instance(self) -> TransportInstance:
        rows = [(fid, 1) for fid in self.flights]
        col_ids: list[str] = []
        for fid in self.flights:
            for node in self.allowed_nodes[fid]:
                if node not in col_ids:
                    col_ids.append(node)
        cols = [(node, self.residuals[node]) for node in col_ids]
        cells = [
            (fid, node, 1) for fid in self.flights for node in self.allowed_nodes[fid]
        ]
        return TransportInstance(rows, cols, cells)


def _window_contains(window: tuple[int, int], t: int) -> bool:
    return window[0] <= t <= window[1]


def build_worst_case_system(
    scenario: ClosureScenario,
    timelines: Mapping[str, FlightTimeline],
    network: UamNetwork,
    semantics: str = DEFAULT_SEMANTICS,
) -> WorstCaseSystem:
    """Assemble supplies, fixed holds, and node residuals for the scenario.

    A rerouting flight contributes to the supply of its link into the closed
    node when the closure time lies in that link's window and in none of the
    windows of earlier covered positions; it contributes a fixed hold at the
    head of every earlier segment whose window contains the closure time.
    Only segments short of the closed node count: a flight beyond it is
    unaffected in that realization and already accounted for nominally.
    """
    v_c = scenario.closed_node
    t_c = scenario.closure_time
    supplies: dict[str, int] = {lid: 0 for lid in scenario.affected_links}
    supply_flights: dict[str, list[str]] = {lid: [] for lid in scenario.affected_links}
    covered_flights: dict[str, str] = {}
    fixed_counts: dict[str, int] = {}
    fixed_flights: dict[str, list[str]] = {}

    for fid in scenario.rerouting:
        tl = timelines[fid]
        cpos = tl.position_of(v_c)
        if cpos is None or cpos == 0:
            continue
        for pos in range(1, cpos):
            if _window_contains(tl.window_worst(pos, v_c), t_c):
                lid = tl.links[pos - 1]
                fixed_counts[lid] = fixed_counts.get(lid, 0) + 1
                fixed_flights.setdefault(lid, []).append(fid)
        final_link = tl.links[cpos - 1]
        if _window_contains(tl.window_worst(cpos, v_c), t_c):
            cover = None
            for pos in scenario.covered_positions.get(fid, ()):
                if _window_contains(tl.window_worst(pos, v_c), t_c):
                    cover = tl.nodes[pos]
                    break
            if cover is None:
                supplies[final_link] += 1
                supply_flights[final_link].append(fid)
            else:
                covered_flights[fid] = cover

    ordered_timelines = list(timelines.values())
    unaffected_peak: dict[str, int] = {}
    residuals: dict[str, object] = {}
    negative: list[str] = []
    fixed_at_node: dict[str, int] = {}
    for lid, count in fixed_counts.items():
        head = network.links[lid].head
        fixed_at_node[head] = fixed_at_node.get(head, 0) + count
    for node in network.node_order:
        peak = _peak_unaffected(ordered_timelines, node, t_c, v_c, semantics)
        unaffected_peak[node] = peak
        cap = network.capacity(node)
        if cap is UNBOUNDED:
            residuals[node] = UNBOUNDED
            continue
        residual = cap - peak - fixed_at_node.get(node, 0)
        residuals[node] = residual
        if residual < 0:
            negative.append(node)

    columns = {lid: scenario.reroute_targets[lid] for lid in scenario.affected_links}
    return WorstCaseSystem(
        closed_node=v_c,
        closure_time=t_c,
        supplies=supplies,
        supply_flights={k: tuple(v) for k, v in supply_flights.items()},
        covered_flights=covered_flights,
        fixed_counts=fixed_counts,
        fixed_flights={k: tuple(v) for k, v in fixed_flights.items()},
        columns=columns,
        unaffected_peak=unaffected_peak,
        residuals=residuals,
        negative_residual_nodes=tuple(negative),
    )


def build_best_case_system(
    scenario: ClosureScenario,
    timelines: Mapping[str, FlightTimeline],
    network: UamNetwork,
    semantics: str = DEFAULT_SEMANTICS,
) -> BestCaseSystem:
    """Assemble the unit-demand placement system for the definitely-affected
    flights.  A candidate node is allowed for a flight when some route
    segment's best-case window contains the closure time and the node is a
    landing option of that segment under the closure."""
    v_c = scenario.closed_node
    t_c = scenario.closure_time
    allowed: dict[str, tuple[str, ...]] = {}
    isolated: list[str] = []
    for fid in scenario.definitely_affected:
        tl = timelines[fid]
        nodes: list[str] = []
        for pos in range(1, len(tl.nodes)):
            if _window_contains(tl.window_best(pos, v_c), t_c):
                lid = tl.links[pos - 1]
                for node in scenario.reroute_targets[lid]:
                    if node not in nodes:
                        nodes.append(node)
        allowed[fid] = tuple(nodes)
        if not nodes:
            isolated.append(fid)

    ordered_timelines = list(timelines.values())
    unaffected_peak: dict[str, int] = {}
    residuals: dict[str, object] = {}
    negative: list[str] = []
    for node in network.node_order:
        peak = _peak_unaffected(ordered_timelines, node, t_c, v_c, semantics)
        unaffected_peak[node] = peak
        cap = network.capacity(node)
        if cap is UNBOUNDED:
            residuals[node] = UNBOUNDED
            continue
        residuals[node] = cap - peak
        if cap - peak < 0:
            negative.append(node)

    return BestCaseSystem(
        closed_node=v_c,
        closure_time=t_c,
        flights=tuple(scenario.definitely_affected),
        allowed_nodes=allowed,
        unaffected_peak=unaffected_peak,
        residuals=residuals,
        isolated_flights=tuple(isolated),
        negative_residual_nodes=tuple(negative),
    )
