"""Voxel-hexahedral SIMP finite element analysis.

Structured grid of 8-node hexahedral elements, one density value per voxel.
Elementwise modulus follows the SIMP interpolation E = Emin + rho^p (E0 - Emin);
the assembled system is solved with Jacobi-preconditioned conjugate gradients.
Compliance c = f.u and its sensitivity dc/drho_e = -p rho^(p-1) (E0-Emin)
u_e' k0 u_e feed the structural term of every design loss.

Node ids run x-fastest over the (nx+1)(ny+1)(nz+1) grid with 3 dofs per node;
voxel arrays are (nx, ny, nz) and flatten x-fastest (Fortran order) to match
the density field batches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.ndimage
import scipy.sparse as sp
import scipy.sparse.linalg as spla

Array = np.ndarray

# local node order: corner offsets (dx, dy, dz) of the trilinear hexahedron
_CORNERS = np.array([
    (0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
    (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1),
], dtype=np.int64)


class FemConvergenceError(RuntimeError):
    """Solver failed to reach the residual tolerance."""

    def __init__(self, iterations: int, residual: float):
        super().__init__(f"PCG did not converge after {iterations} iterations "
                         f"(relative residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class VoxelDomain:
    """Structured voxel grid with physical edge lengths and a design mask."""

    resolution: tuple[int, int, int]
    voxel_size: tuple[float, float, float]      # edge lengths, meters
    design_mask: Array | None = None            # (nx, ny, nz) bool, True = designable

    def __post_init__(self):
        nx, ny, nz = self.resolution
        if min(nx, ny, nz) < 1:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if min(self.voxel_size) <= 0:
            raise ValueError(f"voxel edges must be positive, got {self.voxel_size}")
        if self.design_mask is not None:
            mask = np.asarray(self.design_mask, dtype=bool)
            if mask.shape != (nx, ny, nz):
                raise ValueError("design mask shape must match resolution")
            object.__setattr__(self, "design_mask", mask)

    @property
    def num_elements(self) -> int:
        nx, ny, nz = self.resolution
        return nx * ny * nz

    @property
    def voxel_volume(self) -> float:
        hx, hy, hz = self.voxel_size
        return hx * hy * hz

    @property
    def lengths(self) -> tuple[float, float, float]:
        nx, ny, nz = self.resolution
        hx, hy, hz = self.voxel_size
        return (nx * hx, ny * hy, nz * hz)

    @property
    def num_nodes(self) -> int:
        nx, ny, nz = self.resolution
        return (nx + 1) * (ny + 1) * (nz + 1)

    @property
    def num_dofs(self) -> int:
        return 3 * self.num_nodes

    def node_id(self, ix, iy, iz):
        nx, ny, nz = self.resolution
        return ix + (nx + 1) * (iy + (ny + 1) * iz)

    def apply_mask(self, rho: Array) -> Array:
        """Force densities to zero on no-design voxels (hard mask)."""
        if self.design_mask is None:
            return rho
        return np.where(self.design_mask, rho, 0.0)


@dataclass(frozen=True)
class BoundaryConditions:
    """Fixed dofs and a dense nodal force vector (newtons)."""

    fixed_dofs: Array
    force: Array

    def __post_init__(self):
        fixed = np.unique(np.asarray(self.fixed_dofs, dtype=np.int64))
        if fixed.size == 0:
            raise ValueError("fixed dof set must be non-empty")
        f = np.asarray(self.force, dtype=np.float64)
        if not np.all(np.isfinite(f)):
            raise ValueError("loads must be finite")
        loaded = np.flatnonzero(f)
        if loaded.size and np.all(np.isin(loaded, fixed)):
            raise ValueError("all loaded dofs are fixed; load set must not "
                             "coincide with the support set")
        object.__setattr__(self, "fixed_dofs", fixed)
        object.__setattr__(self, "force", f)


@dataclass
class FemSolution:
    """Displacements, compliance and elementwise compliance sensitivity."""

    displacement: Array         # (ndof,)
    compliance: float           # N*m
    sensitivity: Array          # (n_elements,) dc/drho_e, x-fastest
    iterations: int
    degenerate: bool = False    # loads not connected to supports through material


def hex_stiffness(voxel_size: tuple[float, float, float], nu: float) -> Array:
    """Analytic 24x24 stiffness of a rectangular 8-node hexahedron at E = 1.

    2x2x2 Gauss quadrature is exact for the trilinear element with a constant
    (diagonal) Jacobian.
    """
    hx, hy, hz = voxel_size
    lam = nu / ((1 + nu) * (1 - 2 * nu))
    mu = 1.0 / (2 * (1 + nu))
    d_mat = np.zeros((6, 6))
    d_mat[:3, :3] = lam
    d_mat[np.arange(3), np.arange(3)] += 2 * mu
    d_mat[3:, 3:] = np.eye(3) * mu

    gp = np.array([-1.0, 1.0]) / np.sqrt(3.0)
    jac = np.array([hx / 2, hy / 2, hz / 2])
    det_j = jac.prod()
    signs = 2.0 * _CORNERS - 1.0     # corner signs in (xi, eta, zeta)

    ke = np.zeros((24, 24))
    for xi in gp:
        for eta in gp:
            for zeta in gp:
                local = np.array([xi, eta, zeta])
                # dN_i/dxi_j for the trilinear shape functions
                dn = np.empty((8, 3))
                for i, s in enumerate(signs):
                    terms = 1.0 + s * local
                    for j in range(3):
                        others = [k for k in range(3) if k != j]
                        dn[i, j] = 0.125 * s[j] * terms[others[0]] * terms[others[1]]
                dn_xyz = dn / jac      # chain rule through the diagonal Jacobian
                b_mat = np.zeros((6, 24))
                for i in range(8):
                    bx, by, bz = dn_xyz[i]
                    c = 3 * i
                    b_mat[0, c] = bx
                    b_mat[1, c + 1] = by
                    b_mat[2, c + 2] = bz
                    b_mat[3, c] = by
                    b_mat[3, c + 1] = bx
                    b_mat[4, c + 1] = bz
                    b_mat[4, c + 2] = by
                    b_mat[5, c] = bz
                    b_mat[5, c + 2] = bx
                ke += b_mat.T @ d_mat @ b_mat * det_j
    return 0.5 * (ke + ke.T)


class FemProblem:
    """Reusable assembler/solver for one (domain, boundary conditions) pair."""

    def __init__(self, domain: VoxelDomain, bc: BoundaryConditions,
                 e0: float = 1.0, emin_ratio: float = 1e-9, nu: float = 0.3,
                 penal: float = 3.0):
        if domain.num_dofs != bc.force.shape[0]:
            raise ValueError("force vector length must equal number of dofs")
        self.domain = domain
        self.bc = bc
        self.e0 = float(e0)
        self.emin = float(emin_ratio) * float(e0)
        self.nu = float(nu)
        self.penal = float(penal)
        self.k0 = hex_stiffness(domain.voxel_size, nu)
        self.edof = self._element_dofs()
        self._ik = np.repeat(self.edof, 24, axis=1).ravel()
        self._jk = np.tile(self.edof, (1, 24)).ravel()
        free = np.setdiff1d(np.arange(domain.num_dofs), bc.fixed_dofs)
        self.free_dofs = free
        self._f_free = bc.force[free]
        self._last_u: Array | None = None
        self._build_assembly_map()

    def _build_assembly_map(self) -> None:
        """Precompute the reduced CSR structure so each solve only scatters
        element data into fixed slots (assembly dominates otherwise)."""
        ndof = self.domain.num_dofs
        nfree = len(self.free_dofs)
        free_mask = np.zeros(ndof, dtype=bool)
        free_mask[self.free_dofs] = True
        renumber = np.full(ndof, -1, dtype=np.int64)
        renumber[self.free_dofs] = np.arange(nfree)
        keep = free_mask[self._ik] & free_mask[self._jk]
        rik = renumber[self._ik[keep]]
        rjk = renumber[self._jk[keep]]
        order = np.lexsort((rjk, rik))
        self._gather = np.flatnonzero(keep)[order]
        rik, rjk = rik[order], rjk[order]
        change = np.empty(len(rik), dtype=bool)
        change[0] = True
        np.logical_or(np.diff(rik) != 0, np.diff(rjk) != 0, out=change[1:])
        self._slot_starts = np.flatnonzero(change)
        rows = rik[self._slot_starts]
        self._csr_indices = rjk[self._slot_starts]
        self._csr_indptr = np.searchsorted(rows, np.arange(nfree + 1))

    def _element_dofs(self) -> Array:
        nx, ny, nz = self.domain.resolution
        ex, ey, ez = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz),
                                 indexing="ij")
        ex = ex.ravel(order="F")
        ey = ey.ravel(order="F")
        ez = ez.ravel(order="F")
        edof = np.empty((self.domain.num_elements, 24), dtype=np.int64)
        for i, (dx, dy, dz) in enumerate(_CORNERS):
            node = self.domain.node_id(ex + dx, ey + dy, ez + dz)
            edof[:, 3 * i] = 3 * node
            edof[:, 3 * i + 1] = 3 * node + 1
            edof[:, 3 * i + 2] = 3 * node + 2
        return edof

    def modulus(self, rho: Array, penal: float | None = None) -> Array:
        p = self.penal if penal is None else penal
        return self.emin + np.clip(rho, 0.0, 1.0) ** p * (self.e0 - self.emin)

    def solve(self, rho: Array, rtol: float = 1e-6, maxiter: int = 10_000,
              warm_start: bool = True,
              penal: float | None = None) -> FemSolution:
        """Solve K(rho) u = f and return compliance plus sensitivities."""
        rho = np.asarray(rho, dtype=np.float64).ravel(order="F")
        if rho.shape[0] != self.domain.num_elements:
            raise ValueError("density vector length must equal element count")
        if np.any(rho < -1e-12) or np.any(rho > 1 + 1e-12):
            raise ValueError("densities must lie in [0, 1]")
        rho = self.domain.apply_mask(rho.reshape(self.domain.resolution,
                                                 order="F")).ravel(order="F")
        ndof = self.domain.num_dofs
        u = np.zeros(ndof)

        if not np.any(self.bc.force):
            sens = np.zeros(self.domain.num_elements)
            return FemSolution(u, 0.0, sens, iterations=0)

        p = self.penal if penal is None else penal
        e_mod = self.modulus(rho, p)
        data = (e_mod[:, None, None] * self.k0[None, :, :]).ravel()
        free = self.free_dofs
        csr_data = np.add.reduceat(data[self._gather], self._slot_starts)
        k_free = sp.csr_matrix((csr_data, self._csr_indices, self._csr_indptr),
                               shape=(len(free), len(free)))

        diag = k_free.diagonal()
        diag[diag <= 0] = 1.0
        precond = spla.LinearOperator(k_free.shape,
                                      matvec=lambda x: x / diag)
        x0 = None
        if warm_start and self._last_u is not None:
            x0 = self._last_u[free]

        iters = 0

        def count(_):
            nonlocal iters
            iters += 1

        u_free, info = spla.cg(k_free, self._f_free, x0=x0, rtol=rtol,
                               maxiter=maxiter, M=precond, callback=count)
        if info > 0:
            res = np.linalg.norm(k_free @ u_free - self._f_free)
            raise FemConvergenceError(info, res / np.linalg.norm(self._f_free))
        u[free] = u_free
        self._last_u = u.copy()

        compliance = float(self.bc.force @ u)
        ue = u[self.edof]
        strain_energy = np.einsum("ei,ij,ej->e", ue, self.k0, ue)
        sens = -p * np.clip(rho, 0.0, 1.0) ** (p - 1) \
            * (self.e0 - self.emin) * strain_energy
        return FemSolution(u, compliance, sens, iterations=iters,
                           degenerate=not self._connected(rho))

    def _connected(self, rho: Array, threshold: float = 1e-2) -> bool:
        """Check the load path: solid voxels must connect loads to supports."""
        solid = rho.reshape(self.domain.resolution, order="F") > threshold
        if not solid.any():
            return False
        labels, _ = scipy.ndimage.label(solid)
        load_labels = self._incident_labels(np.flatnonzero(self.bc.force) // 3, labels)
        fixed_labels = self._incident_labels(np.unique(self.bc.fixed_dofs // 3), labels)
        return bool(load_labels & fixed_labels)

    def _incident_labels(self, nodes: Array, labels: Array) -> set[int]:
        nx, ny, nz = self.domain.resolution
        out: set[int] = set()
        stride = nx + 1
        plane = (nx + 1) * (ny + 1)
        for node in np.asarray(nodes):
            iz, rem = divmod(int(node), plane)
            iy, ix = divmod(rem, stride)
            for dx, dy, dz in _CORNERS:
                ex, ey, ez = ix - dx, iy - dy, iz - dz
                if 0 <= ex < nx and 0 <= ey < ny and 0 <= ez < nz:
                    lab = labels[ex, ey, ez]
                    if lab:
                        out.add(int(lab))
        return out


def solve(domain: VoxelDomain, bc: BoundaryConditions, rho: Array,
          penal: float = 3.0, e0: float = 1.0, emin_ratio: float = 1e-9,
          nu: float = 0.3, rtol: float = 1e-6) -> FemSolution:
    """One-shot solve without keeping the assembled problem around."""
    problem = FemProblem(domain, bc, e0=e0, emin_ratio=emin_ratio, nu=nu,
                         penal=penal)
    return problem.solve(rho, rtol=rtol, warm_start=False)


def compliance_normalizer(problem: FemProblem, vf: float,
                          rtol: float = 1e-6) -> float:
    """Compliance of the uniform-density topology at volume fraction vf."""
    if not 0.0 < vf <= 1.0:
        raise ValueError(f"volume fraction must be in (0, 1], got {vf}")
    rho = np.full(problem.domain.num_elements, float(vf))
    sol = problem.solve(rho, rtol=rtol, warm_start=False)
    return sol.compliance
