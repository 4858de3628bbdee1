"""HTTP surfaces: one app per supplier scheduler, one for the manufacturer.

The supplier app wraps a single shop; the manufacturer app exposes the
iteration pipeline.  Bodies are the same JSON documents the CLI reads and
the store persists; errors carry structured reason codes.
"""

from __future__ import annotations

import threading

from fastapi import Body, FastAPI, HTTPException, Response

from ..scheduling import BookingError, ShopState

from .pipeline import Orchestrator
from .specs import SpecError
from .suppliers import (QUOTE_MODE_MIN_LEAD, QUOTE_MODE_PARTIAL,
                        bid_to_document, plan_from_document)

def make_supplier_app(shop: ShopState) -> FastAPI:
    app = FastAPI(title=f"partforge supplier {shop.supplier_id}")
    lock = threading.Lock()

    @app.get("/health")
    def health():
        return {"supplier_id": shop.supplier_id, "status": "ok"}

    @app.post("/request-bids")
    def request_bids(body: dict = Body(...)):
        try:
            plans = [plan_from_document(p) for p in body["plans"]]
            quantity = int(body.get("quantity", 1))
            needed_by = body.get("needed_by_hours")
            mode = body.get("mode", QUOTE_MODE_MIN_LEAD)
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(400, detail={"reason": "malformed-request",
                                             "message": str(exc)})
        bids = []
        with lock:
            for idx, plan in enumerate(plans):
                option = f"{plan.name}#{idx}"
                if mode == QUOTE_MODE_PARTIAL and needed_by is not None:
                    bids.append(shop.quote_partial(plan, quantity, needed_by,
                                                   option_id=option))
                else:
                    bids.append(shop.quote_min_leadtime(plan, quantity,
                                                        option_id=option))
        return {"bids": [bid_to_document(b) for b in bids]}

    @app.post("/book-order")
    def book_order(body: dict = Body(...)):
        try:
            plan = plan_from_document(body["plan"])
            quantity = int(body.get("quantity", 1))
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(400, detail={"reason": "malformed-request",
                                             "message": str(exc)})
        with lock:
            try:
                bid = shop.book_order(plan, quantity)
            except BookingError as exc:
                raise HTTPException(409, detail={"reason": "booking-failed",
                                                 "message": str(exc)})
        return {"bid": bid_to_document(bid)}

    return app

def make_manufacturer_app(orchestrator: Orchestrator) -> FastAPI:
    app = FastAPI(title="partforge manufacturer")
    store = orchestrator.store
    iteration_locks: dict[int, threading.Lock] = {}
    locks_guard = threading.Lock()

    def lock_for(iteration_id: int) -> threading.Lock:
        with locks_guard:
            return iteration_locks.setdefault(iteration_id, threading.Lock())

    def known(iteration_id: int) -> None:
        if iteration_id not in store.list_iterations():
            raise HTTPException(404, detail={"reason": "unknown-iteration",
                                             "message": str(iteration_id)})

    @app.post("/iterations")
    def create_iteration(body: dict = Body(...)):
        try:
            iteration_id = orchestrator.create_iteration(body)
        except SpecError as exc:
            raise HTTPException(400, detail={"reason": "invalid-spec",
                                             "message": str(exc)})
        return {"iteration_id": iteration_id}

    @app.get("/iterations")
    def list_iterations():
        return {"iterations": store.list_iterations()}

    @app.post("/iterations/{iteration_id}/probe")
    def run_probe(iteration_id: int):
        known(iteration_id)
        with lock_for(iteration_id):
            return orchestrator.run_probe(iteration_id)

    @app.post("/iterations/{iteration_id}/generate")
    def run_generation(iteration_id: int, per_supplier: bool = False):
        known(iteration_id)
        with lock_for(iteration_id):
            records = orchestrator.run_generation(iteration_id, per_supplier)
        return {"records": records}

    @app.get("/iterations/{iteration_id}/matrix")
    def get_matrix(iteration_id: int):
        known(iteration_id)
        if not store.has_matrix(iteration_id):
            raise HTTPException(404, detail={"reason": "no-matrix",
                                             "message": "probe first"})
        return store.read_matrix(iteration_id)

    @app.get("/iterations/{iteration_id}/records")
    def list_records(iteration_id: int):
        known(iteration_id)
        return {"records": store.read_records(iteration_id)}

    @app.get("/iterations/{iteration_id}/records/{record_id}")
    def get_record(iteration_id: int, record_id: str):
        known(iteration_id)
        try:
            return store.read_record(iteration_id, record_id)
        except FileNotFoundError:
            raise HTTPException(404, detail={"reason": "unknown-record",
                                             "message": record_id})

    @app.get("/iterations/{iteration_id}/records/{record_id}/mesh")
    def get_mesh(iteration_id: int, record_id: str):
        known(iteration_id)
        try:
            doc = store.read_record(iteration_id, record_id)
        except FileNotFoundError:
            raise HTTPException(404, detail={"reason": "unknown-record",
                                             "message": record_id})
        ref = doc.get("mesh_ref")
        if not ref:
            raise HTTPException(404, detail={"reason": "no-mesh",
                                             "message": record_id})
        data = store.resolve(ref).read_bytes()
        return Response(content=data, media_type="model/stl")

    @app.post("/explain")
    def run_explain(body: dict = Body(...)):
        iteration_ids = body.get("iteration_ids") or store.list_iterations()
        target = body.get("target", "cost")
        for it in iteration_ids:
            known(it)
        try:
            return orchestrator.run_explain(iteration_ids, target)
        except ValueError as exc:
            raise HTTPException(400, detail={"reason": "invalid-target",
                                             "message": str(exc)})

    return app
