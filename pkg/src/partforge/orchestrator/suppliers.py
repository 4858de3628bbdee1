"""Supplier clients and shop configuration.

The manufacturer side only ever sees bid documents; supplier internals
(machines, coefficients, inventories, booked orders) stay behind the client
boundary.  Two transports: in-process (a ShopState behind a lock) and HTTP
(a scheduler service at the supplier's site).
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

import httpx

from ..scheduling import (HOURS_PER_DAY, Bid, BookingError, Machine,
                          MaterialInventory, NoBid, ProcessPlan, ShopState,
                          Task)

QUOTE_MODE_MIN_LEAD = "min-leadtime"
QUOTE_MODE_PARTIAL = "partial"


# -- wire documents ----------------------------------------------------------

def task_to_document(task: Task) -> dict:
    return {"name": task.name, "capability": task.capability,
            "duration_hours": task.duration_hours,
            "cost_cents": int(round(task.cost * 100)),
            "material_kg": task.material_kg, "scale": task.scale}


def task_from_document(doc: dict) -> Task:
    return Task(name=doc["name"], capability=doc["capability"],
                duration_hours=doc["duration_hours"],
                cost=doc["cost_cents"] / 100.0,
                material_kg=doc.get("material_kg", 0.0),
                scale=doc.get("scale", "part"))


def plan_to_document(plan: ProcessPlan) -> dict:
    return {"name": plan.name, "material": plan.material,
            "tasks": [task_to_document(t) for t in plan.tasks]}


def plan_from_document(doc: dict) -> ProcessPlan:
    return ProcessPlan(name=doc["name"], material=doc["material"],
                       tasks=tuple(task_from_document(t)
                                   for t in doc["tasks"]))


def bid_to_document(bid: Bid | NoBid) -> dict:
    if isinstance(bid, NoBid):
        return {"no_bid": True, "supplier_id": bid.supplier_id,
                "option_id": bid.option_id, "reason": bid.reason}
    if bid.schedule:
        schedule = [{"task": st.task.name, "lot": st.lot,
                     "lot_parts": st.lot_parts, "machine": st.machine_id,
                     "start_hours": st.start, "end_hours": st.end}
                    for st in bid.schedule]
    else:
        schedule = bid.schedule_summary or []
    return {
        "no_bid": False,
        "supplier_id": bid.supplier_id,
        "option_id": bid.option_id,
        "cost_cents": int(round(bid.cost * 100)),
        "lead_time_hours": bid.lead_time_hours,
        "quantity": bid.quantity,
        "suboptimal": bid.suboptimal,
        "reason": bid.reason,
        "schedule": schedule,
    }


def bid_from_document(doc: dict) -> Bid | NoBid:
    if doc.get("no_bid"):
        return NoBid(doc["supplier_id"], doc.get("option_id", ""),
                     doc.get("reason", "no-bid"))
    return Bid(supplier_id=doc["supplier_id"], option_id=doc["option_id"],
               cost=doc["cost_cents"] / 100.0,
               lead_time_hours=doc["lead_time_hours"],
               quantity=doc["quantity"], suboptimal=doc.get("suboptimal", False),
               reason=doc.get("reason", "ok"),
               schedule_summary=doc.get("schedule") or None)


# -- shop configuration --------------------------------------------------------

def shop_from_config(doc: dict) -> ShopState:
    machines = [Machine(id=m["id"], capabilities=frozenset(m["capabilities"]),
                        duration_coeff=m.get("duration_coeff", 1.0),
                        cost_coeff=m.get("cost_coeff", 1.0),
                        batch_capacity=m.get("batch_capacity", 1),
                        downtime=tuple(tuple(w) for w in m.get("downtime", [])))
                for m in doc["machines"]]
    inventory = [MaterialInventory(material=i["material"],
                                   on_hand_kg=i["on_hand_kg"],
                                   unit_cost=i["unit_cost_cents_per_kg"] / 100.0,
                                   resupply_lead_hours=i.get("resupply_lead_hours", 0.0),
                                   resupply_lot_kg=i.get("resupply_lot_kg", 0.0))
                 for i in doc.get("inventory", [])]
    shop = ShopState(doc["id"], machines, inventory,
                     horizon_hours=doc.get("horizon_hours",
                                           180 * HOURS_PER_DAY),
                     branch_budget=doc.get("branch_budget", 100_000))
    for order in doc.get("booked_orders", []):
        plan = plan_from_document(order["plan"])
        shop.book_order(plan, order.get("quantity", 1),
                        request_time=order.get("request_time_hours", 0.0),
                        option_id=order.get("id", "pre-booked"))
    return shop


# -- clients -------------------------------------------------------------------

class InProcessSupplier:
    """Shop embedded in this process; mutations serialized by a lock."""

    def __init__(self, shop: ShopState):
        self.shop = shop
        self.id = shop.supplier_id
        self._lock = threading.Lock()

    def quote(self, plans: list[ProcessPlan], quantity: int,
              needed_by_hours: float | None = None,
              mode: str = QUOTE_MODE_MIN_LEAD) -> list[Bid | NoBid]:
        with self._lock:
            out = []
            for idx, plan in enumerate(plans):
                option = f"{plan.name}#{idx}"
                if mode == QUOTE_MODE_PARTIAL and needed_by_hours is not None:
                    out.append(self.shop.quote_partial(plan, quantity,
                                                       needed_by_hours,
                                                       option_id=option))
                else:
                    out.append(self.shop.quote_min_leadtime(plan, quantity,
                                                            option_id=option))
            return out

    def book(self, plan: ProcessPlan, quantity: int) -> Bid:
        with self._lock:
            return self.shop.book_order(plan, quantity)


class HttpSupplier:
    """Client for a scheduler service running at the supplier site."""

    def __init__(self, supplier_id: str, url: str, timeout: float = 30.0):
        self.id = supplier_id
        self.url = url.rstrip("/")
        self.timeout = timeout

    def quote(self, plans, quantity, needed_by_hours=None,
              mode=QUOTE_MODE_MIN_LEAD):
        body = {"plans": [plan_to_document(p) for p in plans],
                "quantity": quantity, "needed_by_hours": needed_by_hours,
                "mode": mode}
        try:
            resp = httpx.post(f"{self.url}/request-bids", json=body,
                              timeout=self.timeout)
            resp.raise_for_status()
        except httpx.HTTPError as exc:
            return [NoBid(self.id, p.name, f"transport-error: {exc}")
                    for p in plans]
        return [bid_from_document(d) for d in resp.json()["bids"]]

    def book(self, plan, quantity):
        body = {"plan": plan_to_document(plan), "quantity": quantity}
        resp = httpx.post(f"{self.url}/book-order", json=body,
                          timeout=self.timeout)
        resp.raise_for_status()
        doc = resp.json()["bid"]
        result = bid_from_document(doc)
        if isinstance(result, NoBid):
            raise BookingError(result.reason)
        return result


def make_supplier(ref, base_dir: Path | None = None):
    """Build a client from a supplier reference in a problem spec."""
    if ref.url:
        return HttpSupplier(ref.id, ref.url)
    if ref.inline is not None:
        doc = dict(ref.inline)
        doc.setdefault("id", ref.id)
        return InProcessSupplier(shop_from_config(doc))
    if ref.config:
        path = Path(ref.config)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        doc = json.loads(path.read_text())
        doc.setdefault("id", ref.id)
        return InProcessSupplier(shop_from_config(doc))
    raise ValueError(f"supplier {ref.id} needs a url, config path, or inline "
                     f"configuration")
