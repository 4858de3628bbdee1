"""Implicit density field over the design domain.

The field maps normalized domain coordinates to densities in (0, 1) through a
single Fourier-feature layer:

    rho = sigmoid((cos(X @ K + b1) + b2) @ W + o1)

``K`` is a fixed frequency kernel built from a 3-D grid; ``b1``, ``b2`` and
``W`` are trainable; the scalar offset ``o1`` fixes the initial uniform
density.  Forward evaluation, analytic spatial gradients, and analytic
parameter gradients (including the second-order path needed when a loss
depends on the spatial gradient) are implemented directly in numpy so that
optimization is deterministic and fully in float64.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

Array = np.ndarray


class FieldShapeError(ValueError):
    """Raised when parameter/batch shapes are inconsistent."""


@dataclass(frozen=True)
class DensityFieldParams:
    """Fixed kernel plus trainable weights of the density field."""

    kernel: Array        # (3, S), immutable frequency kernel
    b1: Array            # (S,), trainable phase bias
    b2: Array            # (S,), trainable feature bias
    weights: Array       # (S,), trainable output weights
    offset: float        # fixed scalar offset before the sigmoid

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=np.float64)
        if k.ndim != 2 or k.shape[0] != 3:
            raise FieldShapeError(f"kernel must be (3, S), got {k.shape}")
        size = k.shape[1]
        for name in ("b1", "b2", "weights"):
            vec = np.asarray(getattr(self, name), dtype=np.float64)
            if vec.shape != (size,):
                raise FieldShapeError(f"{name} must have shape ({size},), got {vec.shape}")
            object.__setattr__(self, name, vec)
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def kernel_size(self) -> int:
        return self.kernel.shape[1]

    def trainable_vector(self) -> Array:
        """Concatenated (b1, b2, W) vector, the quantity Adam updates."""
        return np.concatenate([self.b1, self.b2, self.weights])

    def with_trainable_vector(self, vec: Array) -> "DensityFieldParams":
        s = self.kernel_size
        if vec.shape != (3 * s,):
            raise FieldShapeError(f"trainable vector must have shape ({3 * s},)")
        return replace(self, b1=vec[:s].copy(), b2=vec[s:2 * s].copy(),
                       weights=vec[2 * s:].copy())


@dataclass
class FieldGradients:
    """Gradients of a scalar loss with respect to the trainable parameters."""

    b1: Array
    b2: Array
    weights: Array

    def as_vector(self) -> Array:
        return np.concatenate([self.b1, self.b2, self.weights])


@dataclass
class FieldCache:
    """Intermediate quantities from a forward pass, reused by the backward pass."""

    coords: Array        # (B, 3)
    phase: Array         # (B, S), X @ K + b1
    features: Array      # (B, S), cos(phase) + b2
    preact: Array        # (B,), features @ W + o1
    density: Array       # (B,), sigmoid(preact)


def build_kernel(grid_sizes: tuple[int, int, int],
                 value_range: tuple[float, float]) -> Array:
    """Enumerate a 3-D grid of frequency coordinates into a (3, S) kernel.

    Each axis takes ``grid_sizes[i]`` equally spaced values spanning
    ``value_range`` (endpoints inclusive); columns enumerate the full grid.
    """
    lo, hi = float(value_range[0]), float(value_range[1])
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError("kernel value range must be finite")
    sizes = tuple(int(g) for g in grid_sizes)
    if len(sizes) != 3 or any(g < 1 for g in sizes):
        raise ValueError(f"grid sizes must be three positive ints, got {grid_sizes}")
    axes = [np.linspace(lo, hi, g) if g > 1 else np.array([(lo + hi) / 2.0])
            for g in sizes]
    mesh = np.meshgrid(*axes, indexing="ij")
    kernel = np.stack([m.ravel() for m in mesh], axis=0)
    return np.ascontiguousarray(kernel, dtype=np.float64)


def init_params(kernel: Array, offset: float, rng: np.random.Generator,
                weight_scale: float = 1e-4) -> DensityFieldParams:
    """Near-zero init: uniform small W, zero biases, so the field starts flat."""
    size = kernel.shape[1]
    weights = rng.uniform(-weight_scale, weight_scale, size=size)
    return DensityFieldParams(kernel=kernel, b1=np.zeros(size), b2=np.zeros(size),
                              weights=weights, offset=offset)


def grid_coordinates(resolution: tuple[int, int, int],
                     lengths: tuple[float, float, float]) -> Array:
    """Normalized voxel-center coordinates, x-fastest flattening.

    The origin sits at the domain center and the longest physical dimension
    spans [-0.5, 0.5]; the other axes scale by their length ratio.
    """
    nx, ny, nz = resolution
    lx, ly, lz = (float(v) for v in lengths)
    longest = max(lx, ly, lz)
    axes = []
    for n, length in ((nx, lx), (ny, ly), (nz, lz)):
        centers = (np.arange(n) + 0.5) / n - 0.5
        axes.append(centers * (length / longest))
    xs, ys, zs = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([xs.ravel(order="F"), ys.ravel(order="F"),
                       zs.ravel(order="F")], axis=1)
    return coords


def _check_batch(params: DensityFieldParams, coords: Array) -> Array:
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 3:
        raise FieldShapeError(f"coordinate batch must be (B, 3), got {coords.shape}")
    return coords


def forward(params: DensityFieldParams, coords: Array,
            cache: bool = False) -> Array | tuple[Array, FieldCache]:
    """Evaluate densities for a coordinate batch; optionally keep intermediates."""
    coords = _check_batch(params, coords)
    phase = coords @ params.kernel + params.b1
    features = np.cos(phase) + params.b2
    preact = features @ params.weights + params.offset
    density = _sigmoid(preact)
    if cache:
        return density, FieldCache(coords, phase, features, preact, density)
    return density


def _sigmoid(x: Array) -> Array:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def spatial_gradient(params: DensityFieldParams, coords: Array,
                     cache: FieldCache | None = None) -> Array:
    """Analytic d(rho)/dX, shape (B, 3)."""
    if cache is None:
        _, cache = forward(params, coords, cache=True)
    s = cache.density
    dsig = s * (1.0 - s)
    # d(preact)/dX_j = sum_k W_k * (-sin(phase_k)) * K_jk
    inner = (-np.sin(cache.phase)) * params.weights
    return dsig[:, None] * (inner @ params.kernel.T)


def parameter_gradient(params: DensityFieldParams, coords: Array,
                       d_density: Array,
                       d_spatial: Array | None = None,
                       cache: FieldCache | None = None) -> FieldGradients:
    """Backpropagate upstream gradients to (b1, b2, W).

    ``d_density`` is dL/d(rho) per coordinate.  ``d_spatial``, when given, is
    dL/d(spatial gradient) with shape (B, 3); this second-order path is needed
    by losses built on the density gradient (overhang and cut-area terms).
    """
    if cache is None:
        _, cache = forward(params, coords, cache=True)
    d_density = np.asarray(d_density, dtype=np.float64)
    if d_density.shape != cache.density.shape:
        raise FieldShapeError("upstream gradient length must equal batch size")

    s = cache.density
    dsig = s * (1.0 - s)
    ddsig = dsig * (1.0 - 2.0 * s)          # sigma''(preact)
    sin_phase = np.sin(cache.phase)
    w = params.weights

    dz = d_density * dsig
    if d_spatial is not None:
        d_spatial = np.asarray(d_spatial, dtype=np.float64)
        if d_spatial.shape != (len(s), 3):
            raise FieldShapeError("d_spatial must have shape (B, 3)")
        # g = sigma'(z) * M with M = (-sin(phase) * W) @ K.T
        m = (-sin_phase * w) @ params.kernel.T
        dz = dz + (d_spatial * m).sum(axis=1) * ddsig
        d_m = d_spatial * dsig[:, None]
        v = d_m @ params.kernel               # (B, S)
        grad_w_m = (-sin_phase * v).sum(axis=0)
        grad_b1_m = ((-np.cos(cache.phase)) * v).sum(axis=0) * w
    else:
        grad_w_m = 0.0
        grad_b1_m = 0.0

    grad_w = cache.features.T @ dz + grad_w_m
    grad_b2 = w * dz.sum()
    grad_b1 = (-sin_phase.T @ dz) * w + grad_b1_m
    return FieldGradients(b1=grad_b1, b2=grad_b2, weights=grad_w)


@dataclass
class AdamState:
    """First/second moment accumulators for one optimization job."""

    m: Array
    v: Array
    step: int = 0
    learning_rate: float = 2.0e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: DensityFieldParams,
                   learning_rate: float = 2.0e-3) -> "AdamState":
        n = 3 * params.kernel_size
        return cls(m=np.zeros(n), v=np.zeros(n), learning_rate=learning_rate)


def adam_step(state: AdamState, params: DensityFieldParams,
              grads: FieldGradients) -> DensityFieldParams:
    """One Adam update on the trainable vector; mutates ``state`` in place."""
    g = grads.as_vector()
    if g.shape != state.m.shape:
        raise FieldShapeError("gradient shape does not match Adam state")
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    theta = params.trainable_vector()
    theta = theta - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
    return params.with_trainable_vector(theta)
