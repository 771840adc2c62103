"""The two elliptic solves the method needs.

* ``solve_dirichlet`` inverts the 5-point Laplacian with homogeneous
  Dirichlet data; ``forward`` is the same map under its role as the
  forward operator F = inverse-Laplacian of the inverse potential problem.
* ``solve_neumann_helmholtz`` inverts (I - Laplacian) with homogeneous
  Neumann data imposed through mirrored ghost nodes; it acts as the
  smoothing preconditioner of the evolution.

Both operators are assembled once per grid and the sparse LU factorization
is cached, since an evolution performs two to four solves per time step.
The 5-point stencil keeps the discrete forward map exactly self-adjoint
under the trapezoidal pairing, so the adjoint needs no separate code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError
from .grid import GridSpec, ScalarField, check_same_spec

_DIRECT = "direct-sparse"
_CG = "conjugate-gradient"


@dataclass(frozen=True)
class SolverConfig:
    """How to run the linear solves.

    direct-sparse (default) factorizes once per grid and back-substitutes;
    conjugate-gradient is offered for large grids.  Solves are deterministic
    for a fixed config.
    """

    method: str = _DIRECT
    tol: float = 1e-10
    max_iter: int = 20000

    def __post_init__(self):
        if self.method not in (_DIRECT, _CG):
            raise ValueError(f"unknown solver method {self.method!r}")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


# ---------------------------------------------------------------------------
# operator assembly


def _dirichlet_matrix(spec: GridSpec) -> sp.csc_matrix:
    """Negative 5-point Laplacian on interior nodes (SPD)."""
    h2 = spec.h * spec.h
    mx, my = spec.nx - 2, spec.ny - 2

    def lap1d(n):
        return sp.diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1])

    a = sp.kron(lap1d(mx), sp.identity(my)) + sp.kron(sp.identity(mx), lap1d(my))
    return (a / h2).tocsc()


def _stiffness_1d(n: int, h: float) -> sp.dia_matrix:
    main = np.full(n, 2.0 / h)
    main[[0, -1]] = 1.0 / h
    off = np.full(n - 1, -1.0 / h)
    return sp.diags([off, main, off], [-1, 0, 1])


def _mass_1d(n: int, h: float) -> sp.dia_matrix:
    m = np.full(n, h)
    m[[0, -1]] = 0.5 * h
    return sp.diags(m)


def _neumann_helmholtz_matrix(spec: GridSpec) -> sp.csc_matrix:
    """Trapezoid-weighted (I - Laplacian) with mirrored-ghost Neumann rows.

    Row-scaling by the quadrature weights turns the ghost-node stencil into
    the symmetric positive definite form  W + Kx(x)My + Mx(x)Ky, which is what
    the cache stores; the right hand side must be weighted accordingly.
    """
    kx = _stiffness_1d(spec.nx, spec.h)
    ky = _stiffness_1d(spec.ny, spec.h)
    mx = _mass_1d(spec.nx, spec.h)
    my = _mass_1d(spec.ny, spec.h)
    w = sp.kron(mx, my)
    return (w + sp.kron(kx, my) + sp.kron(mx, ky)).tocsc()


_FACTOR_CACHE: dict[tuple, object] = {}
_MATRIX_CACHE: dict[tuple, sp.csc_matrix] = {}


def _cache_key(kind: str, spec: GridSpec) -> tuple:
    return (kind, spec.nx, spec.ny, spec.domain)


def _matrix(kind: str, spec: GridSpec) -> sp.csc_matrix:
    key = _cache_key(kind, spec)
    if key not in _MATRIX_CACHE:
        builder = _dirichlet_matrix if kind == "dirichlet" else _neumann_helmholtz_matrix
        _MATRIX_CACHE[key] = builder(spec)
    return _MATRIX_CACHE[key]


def clear_cache() -> None:
    """Drop cached matrices and factorizations (mainly for tests)."""
    _FACTOR_CACHE.clear()
    _MATRIX_CACHE.clear()


def _solve_system(kind: str, spec: GridSpec, b: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    a = _matrix(kind, spec)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b)
    if cfg.method == _DIRECT:
        key = _cache_key(kind, spec)
        if key not in _FACTOR_CACHE:
            _FACTOR_CACHE[key] = spla.factorized(a)
        x = _FACTOR_CACHE[key](b)
    else:
        x, info = spla.cg(a, b, rtol=cfg.tol, atol=0.0, maxiter=cfg.max_iter)
        if info > 0:
            achieved = float(np.linalg.norm(b - a @ x) / bnorm)
            raise SolverError(
                f"CG did not converge in {cfg.max_iter} iterations "
                f"(relative residual {achieved:.3e}, tol {cfg.tol:.1e})",
                achieved_residual=achieved,
            )
    residual = float(np.linalg.norm(b - a @ x) / bnorm)
    if residual > max(cfg.tol, 1e-9):
        raise SolverError(f"linear solve residual {residual:.3e} above tolerance", residual)
    return x


# ---------------------------------------------------------------------------
# public operations


def solve_dirichlet(
    f: ScalarField,
    cfg: SolverConfig = SolverConfig(),
    boundary_values: np.ndarray | None = None,
) -> ScalarField:
    """Solve Laplacian(v) = f with v = 0 on the boundary.

    ``boundary_values`` (an (nx, ny) array whose interior is ignored) swaps
    the homogeneous condition for v = g on the boundary; the harmonic
    correction of the shape-derivative module uses that variant with f = 0.
    """
    spec = f.spec
    h2 = spec.h * spec.h
    rhs = -f.values[1:-1, 1:-1].copy()
    v = np.zeros(spec.shape)
    if boundary_values is not None:
        g = np.asarray(boundary_values, dtype=float)
        if g.shape != spec.shape:
            raise ValueError("boundary_values shape mismatch")
        v[0, :], v[-1, :], v[:, 0], v[:, -1] = g[0, :], g[-1, :], g[:, 0], g[:, -1]
        rhs[0, :] += v[0, 1:-1] / h2
        rhs[-1, :] += v[-1, 1:-1] / h2
        rhs[:, 0] += v[1:-1, 0] / h2
        rhs[:, -1] += v[1:-1, -1] / h2
    x = _solve_system("dirichlet", spec, rhs.ravel(), cfg)
    v[1:-1, 1:-1] = x.reshape(spec.nx - 2, spec.ny - 2)
    return ScalarField(spec, v)


def forward(u: ScalarField, cfg: SolverConfig = SolverConfig()) -> ScalarField:
    """The forward operator F: u -> inverse-Laplacian(u), Dirichlet data 0."""
    return solve_dirichlet(u, cfg)


def adjoint_residual(u: ScalarField, y: ScalarField, cfg: SolverConfig = SolverConfig()) -> ScalarField:
    """F applied to the data misfit, F(F(u) - y).

    The discrete forward map is symmetric under the trapezoidal pairing, so
    this is the gradient of the squared-misfit functional with respect to u.
    """
    check_same_spec(u, y)
    fu = forward(u, cfg)
    return forward(fu.with_values(fu.values - y.values), cfg)


def solve_neumann_helmholtz(g: ScalarField, cfg: SolverConfig = SolverConfig()) -> ScalarField:
    """Solve (I - Laplacian) v = g with zero normal derivative on the boundary."""
    spec = g.spec
    w = spec.trapezoid_weights().ravel()
    x = _solve_system("neumann", spec, w * g.values.ravel(), cfg)
    return ScalarField(spec, x.reshape(spec.shape))


def apply_helmholtz_neumann(v: ScalarField) -> ScalarField:
    """Apply (I - Laplacian) with mirrored ghost nodes; inverse of
    ``solve_neumann_helmholtz`` up to solver tolerance."""
    padded = np.pad(v.values, 1, mode="reflect")
    lap = (padded[2:, 1:-1] + padded[:-2, 1:-1] + padded[1:-1, 2:] + padded[1:-1, :-2]
           - 4.0 * v.values) / (v.spec.h * v.spec.h)
    return v.with_values(v.values - lap)
