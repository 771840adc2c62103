"""Uniform node-centered grids on a square domain and the discrete calculus
shared by every other module.

The domain is an axis-aligned square (unit square by default) sampled at the
nodes of a uniform lattice, spacing h = 1/(nx-1).  Fields live on the nodes.
Derivatives are second order: central differences in the interior, one-sided
second-order stencils on the boundary.  All L2 pairings use the trapezoidal
rule, whose boundary weights (1/2 on edges, 1/4 at corners) are what make the
discrete elliptic operators self-adjoint in later modules.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

Bounds = tuple[tuple[float, float], tuple[float, float]]

UNIT_SQUARE: Bounds = ((0.0, 1.0), (0.0, 1.0))


@dataclass(frozen=True)
class GridSpec:
    """Node-centered discretization of an axis-aligned rectangle.

    Nodes sit on the domain corners, so the spacing along x is
    (xmax - xmin)/(nx - 1).  Both axes must share the same spacing; shipped
    experiments use square grids on the unit square.
    """

    nx: int
    ny: int
    domain: Bounds = UNIT_SQUARE

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError(f"need >= 3 nodes per axis, got {self.nx}x{self.ny}")
        (x0, x1), (y0, y1) = self.domain
        hx = (x1 - x0) / (self.nx - 1)
        hy = (y1 - y0) / (self.ny - 1)
        if hx <= 0.0 or hy <= 0.0:
            raise ValueError("domain bounds must be strictly increasing")
        if abs(hx - hy) > 1e-12 * max(hx, hy):
            raise ValueError(f"anisotropic spacing unsupported: hx={hx!r}, hy={hy!r}")

    @property
    def h(self) -> float:
        (x0, x1), _ = self.domain
        return (x1 - x0) / (self.nx - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def xs(self) -> np.ndarray:
        (x0, x1), _ = self.domain
        return np.linspace(x0, x1, self.nx)

    def ys(self) -> np.ndarray:
        _, (y0, y1) = self.domain
        return np.linspace(y0, y1, self.ny)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates as (X, Y) arrays of shape (nx, ny)."""
        return np.meshgrid(self.xs(), self.ys(), indexing="ij")

    def trapezoid_weights(self) -> np.ndarray:
        """Quadrature weight per node: h^2 interior, halved per boundary axis."""
        wx = np.full(self.nx, self.h)
        wx[[0, -1]] *= 0.5
        wy = np.full(self.ny, self.h)
        wy[[0, -1]] *= 0.5
        return np.outer(wx, wy)


class ScalarField:
    """A real-valued function sampled at the grid nodes.

    Values are stored as an (nx, ny) float array indexed [i, j] with
    x = xs[i], y = ys[j].  Instances are immutable: the value buffer is
    frozen so fields can be shared freely across threads and caches.
    """

    __slots__ = ("spec", "values")

    def __init__(self, spec: GridSpec, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != spec.shape:
            raise ValueError(f"values shape {values.shape} != grid shape {spec.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite entries")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("ScalarField is immutable")

    @classmethod
    def from_function(cls, spec: GridSpec, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "ScalarField":
        xx, yy = spec.meshgrid()
        return cls(spec, np.broadcast_to(np.asarray(fn(xx, yy), dtype=float), spec.shape))

    @classmethod
    def constant(cls, spec: GridSpec, value: float) -> "ScalarField":
        return cls(spec, np.full(spec.shape, value))

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.spec, values)

    def __repr__(self) -> str:
        v = self.values
        return f"ScalarField({self.spec.nx}x{self.spec.ny}, min={v.min():.3g}, max={v.max():.3g})"


def check_same_spec(*fields: ScalarField) -> GridSpec:
    spec = fields[0].spec
    for f in fields[1:]:
        if f.spec != spec:
            raise ValueError(f"grid mismatch: {f.spec} != {spec}")
    return spec


def gradient(f: ScalarField) -> tuple[ScalarField, ScalarField]:
    """Nodewise (df/dx, df/dy): central interior, one-sided second order at
    the boundary.  Exact on affine fields."""
    fx, fy = np.gradient(f.values, f.spec.h, edge_order=2)
    return f.with_values(fx), f.with_values(fy)


def grad_norm(f: ScalarField, floor: float = 1e-6) -> ScalarField:
    """Pointwise max(|grad f|, floor).

    The floor keeps later divisions total where the gradient degenerates
    (critical points); resolved gradients pass through untouched.
    """
    if floor <= 0.0:
        raise ValueError("floor must be positive")
    fx, fy = np.gradient(f.values, f.spec.h, edge_order=2)
    return f.with_values(np.maximum(np.hypot(fx, fy), floor))


def inner_product(f: ScalarField, g: ScalarField) -> float:
    """Trapezoidal approximation of the L2 pairing ∫ f·g over the domain."""
    spec = check_same_spec(f, g)
    return float(np.sum(f.values * g.values * spec.trapezoid_weights()))


def norm_l2(f: ScalarField) -> float:
    """Trapezoidal L2 norm, sqrt(∫ f^2)."""
    return float(np.sqrt(max(inner_product(f, f), 0.0)))


def bilinear_sample(f: ScalarField, points: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of a field at arbitrary points.

    points: (..., 2) array of (x, y) locations inside the closed domain.
    Points are clamped to the domain, so boundary vertices emitted by the
    contour extractor evaluate cleanly.
    """
    spec = f.spec
    (x0, _), (y0, _) = spec.domain
    pts = np.asarray(points, dtype=float)
    sx = np.clip((pts[..., 0] - x0) / spec.h, 0.0, spec.nx - 1.0)
    sy = np.clip((pts[..., 1] - y0) / spec.h, 0.0, spec.ny - 1.0)
    i0 = np.minimum(sx.astype(int), spec.nx - 2)
    j0 = np.minimum(sy.astype(int), spec.ny - 2)
    tx = sx - i0
    ty = sy - j0
    v = f.values
    return ((1 - tx) * (1 - ty) * v[i0, j0]
            + tx * (1 - ty) * v[i0 + 1, j0]
            + (1 - tx) * ty * v[i0, j0 + 1]
            + tx * ty * v[i0 + 1, j0 + 1])
