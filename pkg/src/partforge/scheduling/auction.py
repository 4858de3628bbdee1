"""Combinatorial assembly of partial supplier bids into demand-covering bids.

Each supplier may contribute at most one of its partial bids to a cover (its
alternatives share the same machine capacity).  A branch-and-bound search
over supplier choices enumerates covers and ranks them under the requested
criterion; exhaustive at the scale suppliers operate here, pruned for larger
pools.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .shop import Bid

CRITERIA = ("min-cost", "min-suppliers-then-cost")


@dataclass
class CompleteBid:
    """A demand-covering combination of partial bids."""

    parts: list[Bid]
    total_cost: float
    total_quantity: int
    lead_time_hours: float           # slowest participating supplier

    @property
    def suppliers(self) -> tuple[str, ...]:
        return tuple(sorted(b.supplier_id for b in self.parts))


@dataclass
class AuctionResult:
    covered: bool
    complete_bids: list[CompleteBid] = field(default_factory=list)

    @property
    def best(self) -> CompleteBid | None:
        return self.complete_bids[0] if self.complete_bids else None


def _score(bid: CompleteBid, criterion: str):
    if criterion == "min-cost":
        return (bid.total_cost, len(bid.parts), bid.lead_time_hours)
    return (len(bid.parts), bid.total_cost, bid.lead_time_hours)


def combinatorial_auction(partial_bids: list[Bid], demand: int,
                          criterion: str = "min-cost",
                          top_k: int = 10) -> AuctionResult:
    """Assemble partial bids into ranked complete multi-supplier bids."""
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}")
    if demand < 0:
        raise ValueError("demand must be non-negative")
    if demand == 0:
        return AuctionResult(covered=True,
                             complete_bids=[CompleteBid([], 0.0, 0, 0.0)])

    by_supplier: dict[str, list[Bid]] = {}
    for bid in partial_bids:
        if bid.quantity > 0:
            by_supplier.setdefault(bid.supplier_id, []).append(bid)
    suppliers = sorted(by_supplier)
    max_remaining = [0] * (len(suppliers) + 1)
    for i in range(len(suppliers) - 1, -1, -1):
        best_q = max(b.quantity for b in by_supplier[suppliers[i]])
        max_remaining[i] = max_remaining[i + 1] + best_q
    if max_remaining[0] < demand:
        return AuctionResult(covered=False)

    found: list[CompleteBid] = []

    def admit(parts: list[Bid]) -> None:
        quantity = sum(b.quantity for b in parts)
        cover = CompleteBid(parts=list(parts),
                            total_cost=sum(b.cost for b in parts),
                            total_quantity=quantity,
                            lead_time_hours=max(b.lead_time_hours for b in parts))
        found.append(cover)
        found.sort(key=lambda c: _score(c, criterion))
        del found[top_k:]

    def bound_beats_worst(count: int, cost: float) -> bool:
        if len(found) < top_k:
            return True
        worst = _score(found[-1], criterion)
        probe = (cost, count, 0.0) if criterion == "min-cost" \
            else (count, cost, 0.0)
        return probe <= worst

    def search(idx: int, picked: list[Bid], quantity: int, cost: float) -> None:
        if quantity >= demand:
            admit(picked)
            return                    # adding suppliers only worsens both criteria
        if idx == len(suppliers):
            return
        if quantity + max_remaining[idx] < demand:
            return
        if not bound_beats_worst(len(picked) + 1, cost):
            return
        search(idx + 1, picked, quantity, cost)
        for bid in sorted(by_supplier[suppliers[idx]],
                          key=lambda b: (b.cost, -b.quantity)):
            picked.append(bid)
            search(idx + 1, picked, quantity + bid.quantity, cost + bid.cost)
            picked.pop()

    search(0, [], 0, 0.0)
    return AuctionResult(covered=bool(found), complete_bids=found)
