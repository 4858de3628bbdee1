"""Per-supplier finite-capacity scheduler.

A shop holds machines with busy timelines, material inventory, and the
booked orders that must never move.  Quoting walks the tasks of an
instantiated plan in topological order, scanning each capable machine's
timeline for gaps; an exhaustive search over machine assignments (bounded by
a branch budget, with a greedy earliest-finish fallback) picks the
minimum-lead-time schedule.  Every confirmed booking is also mirrored into a
simple temporal network so schedule consistency stays checkable after any
sequence of operations.

Task durations and costs are nominal per part; a machine scales them by its
coefficients, and a lot of m parts scales part-level stages by m.  Batch
capacity caps how many parts one lot may carry.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .stn import STN

HOURS_PER_DAY = 24.0
DEFAULT_HORIZON_HOURS = 180 * HOURS_PER_DAY
DEFAULT_BRANCH_BUDGET = 100_000


class BookingError(RuntimeError):
    """No capable machine or no feasible schedule for a booking."""


@dataclass(frozen=True)
class Task:
    """One manufacturing step of a process plan."""

    name: str
    capability: str
    duration_hours: float          # nominal, per part ("part") or per lot ("lot")
    cost: float                    # nominal, scales like the duration
    material_kg: float = 0.0       # per part
    scale: str = "part"            # "part" | "lot"

    def __post_init__(self):
        if self.duration_hours < 0:
            raise ValueError("task durations must be non-negative")
        if self.scale not in ("part", "lot"):
            raise ValueError(f"unknown task scale {self.scale!r}")


@dataclass(frozen=True)
class ProcessPlan:
    """Ordered tasks plus the stock material they consume."""

    name: str
    material: str
    tasks: tuple[Task, ...]

    def __post_init__(self):
        if not self.tasks:
            raise ValueError("process plans must contain at least one task")

    def material_per_part(self) -> float:
        return sum(t.material_kg for t in self.tasks)


@dataclass(frozen=True)
class Machine:
    id: str
    capabilities: frozenset[str]
    duration_coeff: float = 1.0
    cost_coeff: float = 1.0
    batch_capacity: int = 1
    downtime: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.duration_coeff <= 0 or self.cost_coeff <= 0:
            raise ValueError("machine coefficients must be positive")
        windows = sorted(self.downtime)
        for (s1, e1), (s2, e2) in zip(windows, windows[1:]):
            if e1 > s2:
                raise ValueError("downtime windows must not overlap")
        object.__setattr__(self, "capabilities", frozenset(self.capabilities))
        object.__setattr__(self, "downtime", tuple(windows))


@dataclass
class MaterialInventory:
    material: str
    on_hand_kg: float
    unit_cost: float               # currency/kg
    resupply_lead_hours: float = 0.0
    resupply_lot_kg: float = 0.0

    def __post_init__(self):
        if self.on_hand_kg < 0 or self.unit_cost < 0:
            raise ValueError("inventory quantities must be non-negative")


@dataclass
class ScheduledTask:
    task: Task
    lot: int
    lot_parts: int
    machine_id: str
    start: float
    end: float
    cost: float                    # coefficient-scaled lot cost


@dataclass
class Bid:
    """A supplier's scheduled answer to a manufacturing request."""

    supplier_id: str
    option_id: str
    cost: float
    lead_time_hours: float
    quantity: int
    schedule: list[ScheduledTask] = field(default_factory=list)
    suboptimal: bool = False       # branch budget exhausted, greedy completion
    reason: str = "ok"
    # wire-parsed bids keep the supplier's schedule summary verbatim
    schedule_summary: list[dict] | None = None

    @property
    def lead_time_days(self) -> float:
        return self.lead_time_hours / HOURS_PER_DAY


@dataclass
class NoBid:
    supplier_id: str
    option_id: str
    reason: str


def instantiate_plan(plan: ProcessPlan, quantity: int,
                     machines: list[Machine]) -> list[int]:
    """Split an order into lots sized by machine batch capacity.

    The lot size is the tightest per-task bound: for each task, the largest
    batch capacity among capable machines; a lot must fit every machine class
    it passes through.  Returns the per-lot part counts.
    """
    if quantity < 1:
        raise ValueError("quantity must be at least 1")
    lot_size = None
    for task in plan.tasks:
        caps = [m.batch_capacity for m in machines if task.capability in m.capabilities]
        if not caps:
            raise BookingError(f"no machine offers capability {task.capability!r}")
        task_cap = max(caps)
        lot_size = task_cap if lot_size is None else min(lot_size, task_cap)
    lot_size = max(int(lot_size), 1)
    full, rem = divmod(quantity, lot_size)
    lots = [lot_size] * full
    if rem:
        lots.append(rem)
    return lots


class ShopState:
    """Mutable supplier state: timelines, inventory, bookings, and the STN."""

    def __init__(self, supplier_id: str, machines: list[Machine],
                 inventory: list[MaterialInventory],
                 horizon_hours: float = DEFAULT_HORIZON_HOURS,
                 branch_budget: int = DEFAULT_BRANCH_BUDGET):
        self.supplier_id = supplier_id
        self.machines = {m.id: m for m in machines}
        if len(self.machines) != len(machines):
            raise ValueError("machine ids must be unique")
        self.inventory = {inv.material: inv for inv in inventory}
        self.horizon_hours = horizon_hours
        self.branch_budget = branch_budget
        self.timelines: dict[str, list[tuple[float, float]]] = \
            {m.id: list(m.downtime) for m in machines}
        self.booked: list[Bid] = []
        self.stn = STN()

    # -- timeline helpers ---------------------------------------------------

    def _occupy(self, machine_id: str, start: float, end: float) -> None:
        self.timelines[machine_id].append((start, end))
        self.timelines[machine_id].sort()

    # -- material -----------------------------------------------------------

    def material_ready_time(self, material: str, needed_kg: float,
                            request_time: float) -> tuple[float, float]:
        """(production ready time, material cost) for a requested quantity.

        A shortfall orders one resupply lot at request time and defers
        production until it arrives.
        """
        inv = self.inventory.get(material)
        if inv is None:
            raise BookingError(f"supplier stocks no material {material!r}")
        cost = needed_kg * inv.unit_cost
        if needed_kg <= inv.on_hand_kg + 1e-12:
            return request_time, cost
        if inv.resupply_lot_kg <= 0:
            raise BookingError(f"material {material!r} cannot be resupplied")
        return request_time + inv.resupply_lead_hours, cost

    # -- quoting ------------------------------------------------------------

    def _lot_tasks(self, plan: ProcessPlan, lots: list[int]):
        """Flatten lots into (lot index, lot parts, task) triples.

        Tasks interleave across lots round-robin per plan stage so lots can
        run in parallel on distinct machines; within a lot the plan order is
        a precedence chain.
        """
        out = []
        for stage, task in enumerate(plan.tasks):
            for lot_idx, parts in enumerate(lots):
                out.append((stage, lot_idx, parts, task))
        return out

    def _scaled(self, task: Task, machine: Machine, parts: int) -> tuple[float, float]:
        factor = parts if task.scale == "part" else 1
        return (task.duration_hours * factor * machine.duration_coeff,
                task.cost * factor * machine.cost_coeff)

    def quote_min_leadtime(self, plan: ProcessPlan, quantity: int,
                           request_time: float = 0.0,
                           option_id: str = "option-0") -> Bid | NoBid:
        """Minimum-lead-time bid; booked orders are never disturbed."""
        try:
            lots = instantiate_plan(plan, quantity, list(self.machines.values()))
        except BookingError as exc:
            return NoBid(self.supplier_id, option_id, reason=f"no-machine: {exc}")
        needed = plan.material_per_part() * quantity
        try:
            ready, material_cost = self.material_ready_time(
                plan.material, needed, request_time)
        except BookingError as exc:
            return NoBid(self.supplier_id, option_id, reason=f"no-material: {exc}")

        entries = self._lot_tasks(plan, lots)
        candidates: list[list[Machine]] = []
        for _, _, _, task in entries:
            capable = sorted((m for m in self.machines.values()
                              if task.capability in m.capabilities),
                             key=lambda m: m.id)
            if not capable:
                return NoBid(self.supplier_id, option_id,
                             reason=f"no-machine: {task.capability}")
            candidates.append(capable)

        best = self._assignment_search(entries, candidates, ready, request_time)
        if best is None:
            return NoBid(self.supplier_id, option_id,
                         reason="no-gap: horizon exhausted")
        schedule, suboptimal = best
        total_cost = sum(st.cost for st in schedule) + material_cost
        lead = max(st.end for st in schedule) - request_time
        return Bid(self.supplier_id, option_id, cost=total_cost,
                   lead_time_hours=lead, quantity=quantity, schedule=schedule,
                   suboptimal=suboptimal)

    def _assignment_search(self, entries, candidates, ready, request_time):
        """Bounded exhaustive search over machine assignments.

        Placement per assignment is greedy in topological order, which is
        optimal for chain-structured lots on fixed machines; the search
        explores machine alternatives and prunes on the running makespan.
        """
        n = len(entries)
        # deep instantiated networks (large lot counts) go straight to the
        # greedy fallback; exhaustive search would blow the budget anyway
        if n > 60:
            greedy = self._greedy_schedule(entries, candidates, ready,
                                           request_time)
            return None if greedy is None else (greedy, True)
        best_end = float("inf")
        best_schedule = None
        budget = self.branch_budget
        nodes = 0
        base_timelines = {mid: list(iv) for mid, iv in self.timelines.items()}

        def place(level, timelines, lot_end, schedule, current_end):
            nonlocal best_end, best_schedule, nodes
            if level == n:
                if current_end < best_end - 1e-12:
                    best_end = current_end
                    best_schedule = list(schedule)
                return
            stage, lot_idx, parts, task = entries[level]
            for machine in candidates[level]:
                nodes += 1
                if nodes > budget:
                    return
                duration, cost = self._scaled(task, machine, parts)
                earliest = max(lot_end.get(lot_idx, request_time), ready)
                start = self._fit_in(timelines[machine.id], earliest, duration)
                if start is None:
                    continue
                end = start + duration
                if max(current_end, end) >= best_end - 1e-12:
                    continue
                timelines[machine.id].append((start, end))
                timelines[machine.id].sort()
                prev = lot_end.get(lot_idx)
                lot_end[lot_idx] = end
                schedule.append(ScheduledTask(task, lot_idx, parts, machine.id,
                                              start, end, cost))
                place(level + 1, timelines, lot_end, schedule,
                      max(current_end, end))
                schedule.pop()
                if prev is None:
                    del lot_end[lot_idx]
                else:
                    lot_end[lot_idx] = prev
                timelines[machine.id].remove((start, end))

        place(0, base_timelines, {}, [], request_time)
        exhausted = nodes > budget
        if best_schedule is not None and not exhausted:
            return best_schedule, False
        greedy = self._greedy_schedule(entries, candidates, ready, request_time)
        if best_schedule is not None and greedy is not None:
            greedy_end = max(st.end for st in greedy)
            if greedy_end < best_end:
                return greedy, True
            return best_schedule, True
        if best_schedule is not None:
            return best_schedule, exhausted
        if greedy is not None:
            return greedy, exhausted
        return None

    def _greedy_schedule(self, entries, candidates, ready, request_time):
        timelines = {mid: list(iv) for mid, iv in self.timelines.items()}
        lot_end: dict[int, float] = {}
        schedule = []
        for (stage, lot_idx, parts, task), machines in zip(entries, candidates):
            best = None
            for machine in machines:
                duration, cost = self._scaled(task, machine, parts)
                earliest = max(lot_end.get(lot_idx, request_time), ready)
                start = self._fit_in(timelines[machine.id], earliest, duration)
                if start is None:
                    continue
                if best is None or start + duration < best[1] - 1e-12:
                    best = (start, start + duration, machine, duration, cost)
            if best is None:
                return None
            start, end, machine, duration, cost = best
            timelines[machine.id].append((start, end))
            timelines[machine.id].sort()
            lot_end[lot_idx] = end
            schedule.append(ScheduledTask(task, lot_idx, parts, machine.id,
                                          start, end, cost))
        return schedule

    def _fit_in(self, busy: list[tuple[float, float]], earliest: float,
                duration: float) -> float | None:
        candidate = max(earliest, 0.0)
        for busy_start, busy_end in sorted(busy):
            if candidate + duration <= busy_start + 1e-12:
                break
            candidate = max(candidate, busy_end)
        if candidate + duration > self.horizon_hours + 1e-9:
            return None
        return candidate

    def quote_partial(self, plan: ProcessPlan, quantity: int,
                      needed_by_hours: float, request_time: float = 0.0,
                      option_id: str = "option-0") -> Bid:
        """Largest quantity finishable by a hard due date.

        Lead time grows with quantity, so a bisection over part counts finds
        the boundary; quantity 0 is the explicit floor when nothing fits.
        """
        def fits(q: int) -> Bid | None:
            bid = self.quote_min_leadtime(plan, q, request_time, option_id)
            if isinstance(bid, NoBid):
                return None
            if request_time + bid.lead_time_hours <= needed_by_hours + 1e-9:
                return bid
            return None

        full = fits(quantity)
        if full is not None:
            return full
        lo, hi = 0, quantity           # lo feasible (trivially), hi infeasible
        best = None
        while hi - lo > 1:
            mid = (lo + hi) // 2
            bid = fits(mid)
            if bid is not None:
                lo, best = mid, bid
            else:
                hi = mid
        if best is None:
            return Bid(self.supplier_id, option_id, cost=0.0,
                       lead_time_hours=0.0, quantity=0,
                       reason="deadline-too-tight")
        return best

    # -- booking ------------------------------------------------------------

    def book_order(self, plan: ProcessPlan, quantity: int,
                   request_time: float = 0.0, option_id: str = "order") -> Bid:
        """Commit a minimum-lead-time schedule; existing bookings never move."""
        snapshot = {mid: tuple(iv) for mid, iv in self.timelines.items()}
        bid = self.quote_min_leadtime(plan, quantity, request_time, option_id)
        if isinstance(bid, NoBid):
            raise BookingError(bid.reason)
        for st in bid.schedule:
            self._occupy(st.machine_id, st.start, st.end)
        self._consume_material(plan, quantity, request_time)
        self._extend_stn(bid, request_time)
        self.booked.append(bid)
        # priority invariant: previously booked intervals are untouched
        for mid, old in snapshot.items():
            assert all(iv in self.timelines[mid] for iv in old)
        return bid

    def _consume_material(self, plan: ProcessPlan, quantity: int,
                          request_time: float) -> None:
        needed = plan.material_per_part() * quantity
        if needed <= 0:
            return
        inv = self.inventory[plan.material]
        if needed > inv.on_hand_kg + 1e-12:
            inv.on_hand_kg += inv.resupply_lot_kg
        inv.on_hand_kg = max(inv.on_hand_kg - needed, 0.0)

    def _extend_stn(self, bid: Bid, request_time: float) -> None:
        lot_prev: dict[int, int] = {}
        for st in bid.schedule:
            start = self.stn.add_point(f"{bid.option_id}/{st.task.name}/l{st.lot}/s")
            end = self.stn.add_point(f"{bid.option_id}/{st.task.name}/l{st.lot}/e")
            self.stn.add_interval(start, end, st.end - st.start, st.end - st.start)
            self.stn.add_interval(0, start, st.start, st.start)
            prev = lot_prev.get(st.lot)
            if prev is not None:
                # precedence within the lot: t_prev_end - t_start <= 0
                self.stn.add_edge(start, prev, 0.0)
            lot_prev[st.lot] = end
