"""Iso-surface extraction and STL export for optimized density grids."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from skimage import measure

Array = np.ndarray


class EmptyMeshError(ValueError):
    """Density field never crosses the iso level."""


@dataclass
class TriangleMesh:
    vertices: Array     # (n, 3) meters
    faces: Array        # (m, 3) vertex indices

    @property
    def surface_area(self) -> float:
        a = self.vertices[self.faces[:, 0]]
        b = self.vertices[self.faces[:, 1]]
        c = self.vertices[self.faces[:, 2]]
        return float(0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1).sum())

    def bounding_box(self) -> tuple[Array, Array]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def export_mesh(rho: Array, voxel_size: tuple[float, float, float],
                iso_level: float = 0.5) -> TriangleMesh:
    """Marching-cubes surface of a density grid at the iso level.

    The grid is padded with a void shell so the surface closes watertight at
    the domain boundary; vertex coordinates are physical (meters) with the
    domain corner at the origin.
    """
    rho = np.asarray(rho, dtype=np.float64)
    if rho.max() <= iso_level:
        raise EmptyMeshError(f"field max {rho.max():.3g} never reaches iso "
                             f"level {iso_level}")
    padded = np.pad(rho, 1, constant_values=0.0)
    verts, faces, _, _ = measure.marching_cubes(padded, level=iso_level,
                                                spacing=voxel_size)
    # undo the one-voxel pad and move from cell indices to cell centers
    verts = verts - 0.5 * np.asarray(voxel_size)
    return TriangleMesh(vertices=verts, faces=faces.astype(np.int64))


def stl_bytes(mesh: TriangleMesh) -> bytes:
    """Binary STL encoding."""
    tri = mesh.vertices[mesh.faces]                       # (m, 3, 3)
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    lengths = np.linalg.norm(normals, axis=1, keepdims=True)
    normals = np.divide(normals, lengths, out=np.zeros_like(normals),
                        where=lengths > 0)
    header = b"partforge binary stl".ljust(80, b" ")
    count = struct.pack("<I", len(mesh.faces))
    block = np.empty((len(mesh.faces), 12), dtype=np.float32)
    block[:, 0:3] = normals
    block[:, 3:6] = tri[:, 0]
    block[:, 6:9] = tri[:, 1]
    block[:, 9:12] = tri[:, 2]
    raw = block.view(np.uint8).reshape(len(mesh.faces), 48)
    padded = np.zeros((len(mesh.faces), 50), dtype=np.uint8)
    padded[:, :48] = raw
    return header + count + padded.tobytes()


def write_stl(mesh: TriangleMesh, path) -> None:
    with open(path, "wb") as fh:
        fh.write(stl_bytes(mesh))


def read_stl(path) -> TriangleMesh:
    """Binary STL reader (for round-trip checks and the export CLI)."""
    with open(path, "rb") as fh:
        fh.seek(80)
        (count,) = struct.unpack("<I", fh.read(4))
        data = np.frombuffer(fh.read(count * 50), dtype=np.uint8)
    block = data.reshape(count, 50)[:, :48].copy().view(np.float32)
    tri = block.reshape(count, 12)[:, 3:].reshape(count, 3, 3)
    vertices = tri.reshape(-1, 3).astype(np.float64)
    faces = np.arange(len(vertices), dtype=np.int64).reshape(-1, 3)
    return TriangleMesh(vertices=vertices, faces=faces)
