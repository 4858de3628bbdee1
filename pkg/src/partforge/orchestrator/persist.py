"""Append-only iteration ledger: one directory per iteration.

Layout under the store root:

    iteration-0001/
      spec.json              problem spec snapshot
      matrix.json            feasibility matrix with per-supplier surrogates
      records/record-000.json
      grids/record-000.bin   density grid (header + float32 body, x-fastest)
      meshes/record-000.stl
      trees/tree-cost.json

Closed iterations are never rewritten; re-running appends a new iteration.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..designgen import DesignRecord
from ..probe import ConstraintSet

GRID_MAGIC = b"PFGD"
SCHEMA_VERSION = 1


def write_density_grid(path: Path, rho: np.ndarray,
                       voxel_size: tuple[float, float, float]) -> None:
    rho = np.asarray(rho)
    with open(path, "wb") as fh:
        fh.write(GRID_MAGIC)
        fh.write(struct.pack("<III", *rho.shape))
        fh.write(struct.pack("<ddd", *voxel_size))
        fh.write(rho.astype(np.float32).ravel(order="F").tobytes())


def read_density_grid(path: Path) -> tuple[np.ndarray, tuple[float, float, float]]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != GRID_MAGIC:
            raise ValueError(f"not a density grid file: {path}")
        nx, ny, nz = struct.unpack("<III", fh.read(12))
        voxel = struct.unpack("<ddd", fh.read(24))
        body = np.frombuffer(fh.read(nx * ny * nz * 4), dtype=np.float32)
    return body.astype(np.float64).reshape((nx, ny, nz), order="F"), voxel


def _cents(value: float | None) -> int | None:
    return None if value is None else int(round(value * 100))


def _dollars(value: int | None) -> float | None:
    return None if value is None else value / 100.0


def record_to_document(record: DesignRecord) -> dict:
    c = record.constraints
    return {
        "schema_version": SCHEMA_VERSION,
        "method": record.method,
        "material": record.material,
        "supplier_id": record.supplier_id,
        "orientations": list(record.orientations),
        "compliance": record.compliance,
        "mass_kg": record.mass_kg,
        "nominal_cost_cents": _cents(record.nominal_cost),
        "nominal_time_hours": record.nominal_time_hours,
        "quoted_cost_cents": _cents(record.quoted_cost),
        "quoted_lead_hours": None if record.quoted_lead_days is None
        else record.quoted_lead_days * 24.0,
        "constraints": {
            "masscon_kg": c.masscon_kg,
            "costcon_cents": _cents(c.costcon),
            "timecon_days": c.timecon_days,
        },
        "feasible": record.feasible,
        "feasibility": record.feasibility,
        "final_loss": record.final_loss,
        "milling_loss": record.milling_loss,
        "minvf": record.minvf,
        "seed": record.seed,
        "iteration_id": record.iteration_id,
        "grid_ref": record.grid_ref,
        "mesh_ref": record.mesh_ref,
    }


def record_from_document(doc: dict) -> DesignRecord:
    c = doc["constraints"]
    return DesignRecord(
        method=doc["method"], material=doc["material"],
        supplier_id=doc.get("supplier_id"),
        orientations=tuple(doc.get("orientations", ())),
        compliance=doc["compliance"], mass_kg=doc["mass_kg"],
        nominal_cost=_dollars(doc["nominal_cost_cents"]),
        nominal_time_hours=doc["nominal_time_hours"],
        quoted_cost=_dollars(doc.get("quoted_cost_cents")),
        quoted_lead_days=None if doc.get("quoted_lead_hours") is None
        else doc["quoted_lead_hours"] / 24.0,
        constraints=ConstraintSet(
            masscon_kg=c.get("masscon_kg"),
            costcon=_dollars(c.get("costcon_cents")),
            timecon_days=c.get("timecon_days")),
        feasible=doc["feasible"], feasibility=dict(doc.get("feasibility", {})),
        final_loss=doc["final_loss"], milling_loss=doc.get("milling_loss", 0.0),
        minvf=doc.get("minvf", 0.0), seed=doc.get("seed", 0),
        iteration_id=doc.get("iteration_id", 0),
        grid_ref=doc.get("grid_ref"), mesh_ref=doc.get("mesh_ref"))


class IterationStore:
    """Directory-backed store for iterations, records, grids, and trees."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    # -- iterations -----------------------------------------------------------

    def list_iterations(self) -> list[int]:
        out = []
        for path in self.root.glob("iteration-*"):
            try:
                out.append(int(path.name.split("-")[1]))
            except (IndexError, ValueError):
                continue
        return sorted(out)

    def iteration_dir(self, iteration_id: int) -> Path:
        return self.root / f"iteration-{iteration_id:04d}"

    def create_iteration(self, spec_doc: dict) -> int:
        existing = self.list_iterations()
        iteration_id = (existing[-1] + 1) if existing else 1
        path = self.iteration_dir(iteration_id)
        path.mkdir(parents=True)
        (path / "records").mkdir()
        (path / "grids").mkdir()
        (path / "meshes").mkdir()
        (path / "trees").mkdir()
        (path / "bids").mkdir()
        self._write_json(path / "spec.json", spec_doc)
        return iteration_id

    def read_spec(self, iteration_id: int) -> dict:
        return self._read_json(self.iteration_dir(iteration_id) / "spec.json")

    # -- matrix ---------------------------------------------------------------

    def write_matrix(self, iteration_id: int, matrix_doc: dict) -> None:
        self._write_json(self.iteration_dir(iteration_id) / "matrix.json",
                         matrix_doc)

    def read_matrix(self, iteration_id: int) -> dict:
        return self._read_json(self.iteration_dir(iteration_id) / "matrix.json")

    def has_matrix(self, iteration_id: int) -> bool:
        return (self.iteration_dir(iteration_id) / "matrix.json").exists()

    # -- records ----------------------------------------------------------------

    def next_record_id(self, iteration_id: int) -> str:
        existing = list((self.iteration_dir(iteration_id) / "records").glob("*.json"))
        return f"record-{len(existing):03d}"

    def write_record(self, iteration_id: int, record_doc: dict,
                     density: np.ndarray | None = None,
                     voxel_size: tuple[float, float, float] | None = None,
                     mesh_bytes: bytes | None = None,
                     bid_doc: dict | None = None) -> str:
        rid = self.next_record_id(iteration_id)
        base = self.iteration_dir(iteration_id)
        if density is not None:
            grid_path = base / "grids" / f"{rid}.bin"
            write_density_grid(grid_path, density, voxel_size)
            record_doc["grid_ref"] = str(grid_path.relative_to(self.root))
        if mesh_bytes is not None:
            mesh_path = base / "meshes" / f"{rid}.stl"
            mesh_path.write_bytes(mesh_bytes)
            record_doc["mesh_ref"] = str(mesh_path.relative_to(self.root))
        if bid_doc is not None:
            bid_path = base / "bids" / f"{rid}.json"
            self._write_json(bid_path, bid_doc)
            record_doc["bid_ref"] = str(bid_path.relative_to(self.root))
        record_doc["record_id"] = rid
        self._write_json(base / "records" / f"{rid}.json", record_doc)
        return rid

    def read_records(self, iteration_id: int) -> list[dict]:
        rec_dir = self.iteration_dir(iteration_id) / "records"
        return [self._read_json(p) for p in sorted(rec_dir.glob("*.json"))]

    def read_record(self, iteration_id: int, record_id: str) -> dict:
        return self._read_json(self.iteration_dir(iteration_id) / "records"
                               / f"{record_id}.json")

    def resolve(self, ref: str) -> Path:
        return self.root / ref

    # -- trees ------------------------------------------------------------------

    def write_tree(self, iteration_id: int, target: str, doc: dict) -> None:
        self._write_json(self.iteration_dir(iteration_id) / "trees"
                         / f"tree-{target}.json", doc)

    def read_tree(self, iteration_id: int, target: str) -> dict:
        return self._read_json(self.iteration_dir(iteration_id) / "trees"
                               / f"tree-{target}.json")

    # -- helpers ------------------------------------------------------------------

    @staticmethod
    def _write_json(path: Path, doc: dict) -> None:
        path.write_text(json.dumps(doc, indent=2, sort_keys=True))

    @staticmethod
    def _read_json(path: Path) -> dict:
        return json.loads(path.read_text())
