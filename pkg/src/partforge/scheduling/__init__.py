"""Finite-capacity supplier scheduling: STN, shop timelines, bid auction."""

from .auction import AuctionResult, CompleteBid, combinatorial_auction
from .shop import (Bid, BookingError, Machine, MaterialInventory, NoBid,
                   ProcessPlan, ScheduledTask, ShopState, Task,
                   instantiate_plan, HOURS_PER_DAY)
from .stn import STN, PropagationResult

__all__ = [
    "AuctionResult", "CompleteBid", "combinatorial_auction",
    "Bid", "BookingError", "Machine", "MaterialInventory", "NoBid",
    "ProcessPlan", "ScheduledTask", "ShopState", "Task", "instantiate_plan",
    "HOURS_PER_DAY", "STN", "PropagationResult",
]
