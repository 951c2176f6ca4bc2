"""Integral transportation-feasibility solver.

Instances pair row supplies (each must be placed exactly) with column
capacities (upper bounds) over a set of allowed cells, optionally with
per-cell upper bounds and pre-fixed cells that are folded into the supplies
and capacities up front.  The constraint matrix of this family is totally
unimodular, so a max-flow saturation test decides feasibility exactly and
always yields an all-integer witness; an infeasible instance yields a
Hall-style certificate that can be checked by simple arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .model import UNBOUNDED

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"


class MalformedInstance(ValueError):
    """An instance references unknown rows/columns or breaks an invariant."""


@dataclass(frozen=True)
class Certificate:
    """Rows whose joint supply exceeds the capacity reachable from them.

    `columns` lists every column any certificate row is allowed to use;
    `supply > capacity` is checkable without re-running the solver.
    """

    rows: tuple[str, ...]
    columns: tuple[str, ...]
    supply: int
    capacity: int


@dataclass(frozen=True)
class SolveOutcome:
    verdict: str
    witness: Optional[dict[tuple[str, str], int]] = None
    certificate: Optional[Certificate] = None

    @property
    def feasible(self) -> bool:
        return self.verdict == FEASIBLE


class TransportInstance:
    """A folded, validated transportation-feasibility instance.

    rows:    sequence of (row id, supply >= 0)
    columns: sequence of (column id, capacity >= 0 or UNBOUNDED)
    cells:   allowed (row, column) pairs, optionally (row, column, bound)
    fixed:   (row, column, value) cells whose value is forced; they are
             subtracted from their row's supply and column's capacity here.

    If folding drives any supply or capacity negative the instance is marked
    infeasible up front; solve() then reports the offending row/column as the
    certificate instead of running the flow.
    """

    def __init__(
        self,
        rows: Sequence[tuple[str, int]],
        columns: Sequence[tuple[str, object]],
        cells: Sequence[tuple],
        fixed: Sequence[tuple[str, str, int]] = (),
    ):
        self.row_ids = [r for r, _ in rows]
        self.col_ids = [c for c, _ in columns]
        if len(set(self.row_ids)) != len(self.row_ids):
            raise MalformedInstance("duplicate row ids")
        if len(set(self.col_ids)) != len(self.col_ids):
            raise MalformedInstance("duplicate column ids")
        row_index = {r: i for i, r in enumerate(self.row_ids)}
        col_index = {c: i for i, c in enumerate(self.col_ids)}

        self.supplies = []
        for r, supply in rows:
            if not isinstance(supply, int) or supply < 0:
                raise MalformedInstance(f"row {r!r}: supply must be a non-negative integer")
            self.supplies.append(supply)
        self.capacities: list[object] = []
        for c, cap in columns:
            if cap is not UNBOUNDED and (not isinstance(cap, int) or cap < 0):
                raise MalformedInstance(
                    f"column {c!r}: capacity must be a non-negative integer or UNBOUNDED"
                )
            self.capacities.append(cap)

        self.cells: list[tuple[int, int, Optional[int]]] = []
        seen_cells: set[tuple[int, int]] = set()
        for cell in cells:
            if len(cell) == 2:
                r, c = cell
                bound: Optional[int] = None
            else:
                r, c, bound = cell
                if bound is not None and (not isinstance(bound, int) or bound < 0):
                    raise MalformedInstance(f"cell ({r!r}, {c!r}): bad bound {bound!r}")
            if r not in row_index or c not in col_index:
                raise MalformedInstance(f"cell ({r!r}, {c!r}) references unknown row or column")
            key = (row_index[r], col_index[c])
            if key in seen_cells:
                raise MalformedInstance(f"duplicate cell ({r!r}, {c!r})")
            seen_cells.add(key)
            self.cells.append((key[0], key[1], bound))

        self.fixed_cells: list[tuple[str, str, int]] = []
        self.predeclared: Optional[Certificate] = None
        for r, c, value in fixed:
            if r not in row_index or c not in col_index:
                raise MalformedInstance(f"fixed cell ({r!r}, {c!r}) references unknown row or column")
            if not isinstance(value, int) or value < 0:
                raise MalformedInstance(f"fixed cell ({r!r}, {c!r}): bad value {value!r}")
            self.fixed_cells.append((r, c, value))
            ri, ci = row_index[r], col_index[c]
            self.supplies[ri] -= value
            cap = self.capacities[ci]
            if cap is not UNBOUNDED:
                self.capacities[ci] = cap - value
        for ri, supply in enumerate(self.supplies):
            if supply < 0:
                r = self.row_ids[ri]
                self.predeclared = Certificate((r,), (), 0, supply)
                break
        if self.predeclared is None:
            for ci, cap in enumerate(self.capacities):
                if cap is not UNBOUNDED and cap < 0:
                    c = self.col_ids[ci]
                    fixed_into = tuple(fr for fr, fc, _ in self.fixed_cells if fc == c)
                    folded = sum(v for _, fc, v in self.fixed_cells if fc == c)
                    self.predeclared = Certificate(fixed_into, (c,), folded, folded + cap)
                    break


def solve(instance: TransportInstance) -> SolveOutcome:
    """Decide feasibility; return an integer witness or a certificate.

    Augmenting paths are explored in (row index, column index) order so equal
    instances always produce identical witnesses.
    """
    if instance.predeclared is not None:
        return SolveOutcome(INFEASIBLE, certificate=instance.predeclared)

    n_rows = len(instance.row_ids)
    n_cols = len(instance.col_ids)
    total_supply = sum(instance.supplies)

    flow, saturated = _max_flow(
        instance.supplies,
        [c if c is not UNBOUNDED else total_supply for c in instance.capacities],
        instance.cells,
        total_supply,
    )
    if saturated:
        witness = {}
        for (ri, ci), value in sorted(flow.items()):
            if value:
                witness[(instance.row_ids[ri], instance.col_ids[ci])] = value
        # Rows with zero supply still satisfy their (empty) equality.
        return SolveOutcome(FEASIBLE, witness=witness)

    # Residual reachability from the source marks the violating rows.
    reachable_rows, _reachable_cols = _residual_reachable(
        instance.supplies,
        [c if c is not UNBOUNDED else total_supply for c in instance.capacities],
        instance.cells,
        flow,
    )
    cert_rows = [instance.row_ids[ri] for ri in sorted(reachable_rows)]
    joint_cols: list[int] = sorted(
        {ci for ri, ci, _ in instance.cells if ri in reachable_rows}
    )
    supply = sum(instance.supplies[ri] for ri in reachable_rows)
    capacity = 0
    for ci in joint_cols:
        cap = instance.capacities[ci]
        capacity += total_supply if cap is UNBOUNDED else cap
    return SolveOutcome(
        INFEASIBLE,
        certificate=Certificate(
            tuple(cert_rows),
            tuple(instance.col_ids[ci] for ci in joint_cols),
            supply,
            capacity,
        ),
    )


def _max_flow(supplies, capacities, cells, total_supply):
    """Deterministic DFS max-flow on the source/rows/columns/sink graph.

    Returns (cell flows, whether every supply was placed).
    """
    n_rows = len(supplies)
    n_cols = len(capacities)
    cell_flow: dict[tuple[int, int], int] = {}
    col_used = [0] * n_cols
    row_placed = [0] * n_rows
    adj: list[list[tuple[int, Optional[int]]]] = [[] for _ in range(n_rows)]
    for ri, ci, bound in cells:
        adj[ri].append((ci, bound))

    def augment(ri: int, want: int, visited_cols: set[int]) -> int:
        for ci, bound in adj[ri]:
            if ci in visited_cols:
                continue
            current = cell_flow.get((ri, ci), 0)
            room = want if bound is None else min(want, bound - current)
            if room <= 0:
                continue
            spare = capacities[ci] - col_used[ci]
            if spare > 0:
                push = min(room, spare)
                cell_flow[(ri, ci)] = current + push
                col_used[ci] += push
                return push
            # Column full: try to displace another row's unit elsewhere.
            visited_cols.add(ci)
            for rj in range(n_rows):
                back = cell_flow.get((rj, ci), 0)
                if rj == ri or back <= 0:
                    continue
                moved = augment(rj, min(room, back), visited_cols)
                if moved > 0:
                    cell_flow[(ri, ci)] = current + moved
                    cell_flow[(rj, ci)] = back - moved
                    return moved
        return 0

    progress = True
    while progress:
        progress = False
        for ri in range(n_rows):
            while row_placed[ri] < supplies[ri]:
                pushed = augment(ri, supplies[ri] - row_placed[ri], set())
                if pushed == 0:
                    break
                row_placed[ri] += pushed
                progress = True
    saturated = all(row_placed[ri] == supplies[ri] for ri in range(n_rows))
    return cell_flow, saturated


def _residual_reachable(supplies, capacities, cells, cell_flow):
    """Rows/columns reachable from the source in the residual graph."""
    n_rows = len(supplies)
    placed = [0] * n_rows
    col_used: dict[int, int] = {}
    for (ri, ci), value in cell_flow.items():
        placed[ri] += value
        col_used[ci] = col_used.get(ci, 0) + value
    by_row: dict[int, list[tuple[int, Optional[int]]]] = {}
    by_col: dict[int, list[int]] = {}
    for ri, ci, bound in cells:
        by_row.setdefault(ri, []).append((ci, bound))
        by_col.setdefault(ci, []).append(ri)

    rows = {ri for ri in range(n_rows) if placed[ri] < supplies[ri]}
    cols: set[int] = set()
    frontier_rows = list(rows)
    while frontier_rows:
        next_rows: list[int] = []
        for ri in frontier_rows:
            for ci, bound in by_row.get(ri, ()):
                flow_here = cell_flow.get((ri, ci), 0)
                if bound is not None and flow_here >= bound:
                    continue
                if ci in cols:
                    continue
                cols.add(ci)
                for rj in by_col.get(ci, ()):
                    if rj not in rows and cell_flow.get((rj, ci), 0) > 0:
                        rows.add(rj)
                        next_rows.append(rj)
        frontier_rows = next_rows
    return rows, cols


def validate_witness(
    instance: TransportInstance,
    witness: Mapping[tuple[str, str], int],
) -> bool:
    """Check a witness against the folded instance: exact row sums, column
    sums within capacity, integral non-negative values on allowed cells."""
    row_index = {r: i for i, r in enumerate(instance.row_ids)}
    col_index = {c: i for i, c in enumerate(instance.col_ids)}
    allowed: dict[tuple[int, int], Optional[int]] = {
        (ri, ci): bound for ri, ci, bound in instance.cells
    }
    row_sum = [0] * len(instance.row_ids)
    col_sum = [0] * len(instance.col_ids)
    for (r, c), value in witness.items():
        if r not in row_index or c not in col_index:
            return False
        key = (row_index[r], col_index[c])
        if key not in allowed:
            return False
        if not isinstance(value, int) or value < 0:
            return False
        bound = allowed[key]
        if bound is not None and value > bound:
            return False
        row_sum[key[0]] += value
        col_sum[key[1]] += value
    for ri, supply in enumerate(instance.supplies):
        if row_sum[ri] != supply:
            return False
    for ci, cap in enumerate(instance.capacities):
        if cap is not UNBOUNDED and col_sum[ci] > cap:
            return False
    return True


def validate_certificate(instance: TransportInstance, cert: Certificate) -> bool:
    """Arithmetic re-check of an infeasibility certificate."""
    if cert.supply <= cert.capacity and not (cert.capacity < 0):
        return False
    row_index = {r: i for i, r in enumerate(instance.row_ids)}
    col_index = {c: i for i, c in enumerate(instance.col_ids)}
    if cert.capacity < 0:
        # Folding alone overfilled a column (or overdrew a row).
        return True
    rows = set(cert.rows)
    cols = {ci for ri, ci, _ in instance.cells if instance.row_ids[ri] in rows}
    if {instance.col_ids[ci] for ci in cols} - set(cert.columns):
        return False
    supply = sum(instance.supplies[row_index[r]] for r in rows)
    capacity = 0
    total = sum(instance.supplies)
    for c in cert.columns:
        cap = instance.capacities[col_index[c]]
        capacity += total if cap is UNBOUNDED else cap
    return supply == cert.supply and capacity == cert.capacity and supply > capacity
