"""Classic optimality-criteria SIMP optimizer.

Reference density-based compliance minimizer: sensitivity filtering plus the
standard OC multiplicative update with a bisected volume multiplier.  Serves
as the independent quality baseline the neural-field optimizer is compared
against at matched volume fraction.
"""

from __future__ import annotations

import numpy as np
import scipy.ndimage

from .fem import FemProblem

Array = np.ndarray


def _filter_kernel(radius: float) -> Array:
    r = int(np.ceil(radius)) - 1
    size = 2 * r + 1
    kernel = np.zeros((size, size, size))
    for i in range(size):
        for j in range(size):
            for k in range(size):
                dist = np.sqrt((i - r) ** 2 + (j - r) ** 2 + (k - r) ** 2)
                kernel[i, j, k] = max(radius - dist, 0.0)
    return kernel


def sensitivity_filter(x: Array, dc: Array, kernel: Array) -> Array:
    """Mesh-independency filter: weighted density-scaled sensitivity average."""
    weighted = scipy.ndimage.convolve(x * dc, kernel, mode="constant")
    norm = scipy.ndimage.convolve(np.ones_like(x), kernel, mode="constant")
    return weighted / (norm * np.maximum(x, 1e-3))


def oc_update(x: Array, dc: Array, volfrac: float, move: float = 0.2,
              x_min: float = 1e-3) -> Array:
    """Optimality-criteria update with bisection on the volume multiplier."""
    l1, l2 = 0.0, 1e9
    while (l2 - l1) / (l1 + l2 + 1e-30) > 1e-6:
        lmid = 0.5 * (l1 + l2)
        scale = np.sqrt(np.maximum(-dc, 0.0) / lmid)
        xnew = np.clip(np.clip(x * scale, x - move, x + move), x_min, 1.0)
        if xnew.mean() > volfrac:
            l1 = lmid
        else:
            l2 = lmid
    return xnew


def optimality_criteria_simp(problem: FemProblem, volfrac: float,
                             iterations: int = 60, move: float = 0.2,
                             filter_radius: float = 1.5,
                             rtol: float = 1e-8) -> tuple[Array, float]:
    """Run the OC loop; returns the final density grid and its compliance."""
    shape = problem.domain.resolution
    x = np.full(shape, volfrac)
    kernel = _filter_kernel(filter_radius)
    compliance = np.inf
    for _ in range(iterations):
        sol = problem.solve(x.ravel(order="F"), rtol=rtol)
        compliance = sol.compliance
        dc = sol.sensitivity.reshape(shape, order="F")
        dc = sensitivity_filter(x, dc, kernel)
        x = oc_update(x, dc, volfrac, move)
    sol = problem.solve(x.ravel(order="F"), rtol=rtol)
    return x, sol.compliance
