"""Time evolution of the level set function.

Two velocities are provided.  The preconditioned inverse scale-space
velocity smooths the misfit gradient, restricted to the interface band,
through (I - Laplacian)^-1 with Neumann conditions; the "santosa" baseline
multiplies the raw misfit gradient by an upwind |grad phi|.  Both are
stepped with explicit Euler.  A per-step backtracking controller halves the
trial step until the data discrepancy does not increase; it restarts from
the configured dt every step, which keeps an evolution resumable: running N
steps and then M steps from the result is bitwise identical to N+M steps.

Convention: phi >= 0 inside the inclusion.  The sign of each velocity is
fixed so that the step is a descent direction for the squared data misfit
under this convention (verified by finite differences in the test suite).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .elliptic import (SolverConfig, adjoint_residual, apply_helmholtz_neumann,
                       forward, solve_neumann_helmholtz)
from .errors import EmptyLevelSetError, SolverError
from .geometry import CurveSet, curve_length, extract_zero_level, region_area
from .grid import ScalarField, check_same_spec, norm_l2
from .projection import SmoothingParam, apply_P_eps, deriv_P_eps

logger = logging.getLogger(__name__)

_METHOD_ALIASES = {
    "iss": "iss",
    "inverse-scale-space": "iss",
    "santosa": "santosa",
}

DEFAULT_DT = {"iss": 2000.0, "santosa": 50.0}


@dataclass(frozen=True)
class EvolutionConfig:
    """Parameters of one evolution run.

    eps = None resolves to 1.5 * grid spacing when the run starts.  The
    backtracking controller guarantees a non-increasing discrepancy trace;
    turning it off steps with the raw dt unconditionally.
    """

    method: str = "iss"
    dt: float = DEFAULT_DT["iss"]
    max_steps: int = 200
    eps: SmoothingParam | None = None
    reinit_every: int = 0
    stop_discrepancy: float = 0.0
    solver: SolverConfig = field(default_factory=SolverConfig)
    grad_floor: float = 1e-6
    backtrack: bool = True
    max_halvings: int = 10
    snapshot_every: int = 0

    def __post_init__(self):
        if self.method not in _METHOD_ALIASES:
            raise ValueError(f"unknown method {self.method!r}")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.stop_discrepancy < 0.0:
            raise ValueError("stop_discrepancy must be >= 0")
        if not self.grad_floor > 0.0:
            raise ValueError("grad_floor must be positive")

    @property
    def method_key(self) -> str:
        return _METHOD_ALIASES[self.method]

    @classmethod
    def for_method(cls, method: str, **overrides) -> "EvolutionConfig":
        """Per-method defaults: the santosa velocity degrades |grad phi| and
        gets periodic reinitialization; the preconditioned velocity is gentle
        and never needs it."""
        key = _METHOD_ALIASES[method]
        base = dict(method=key, dt=DEFAULT_DT[key],
                    reinit_every=20 if key == "santosa" else 0)
        base.update(overrides)
        return cls(**base)

    def resolve_eps(self, phi: ScalarField) -> SmoothingParam:
        eps = self.eps if self.eps is not None else SmoothingParam.from_grid(phi.spec, 1.5)
        if eps.eps < phi.spec.h:
            raise ValueError(f"eps {eps.eps} under-resolves the grid (h={phi.spec.h})")
        return eps


@dataclass(frozen=True)
class TraceRecord:
    step: int
    t: float
    residual: float
    area: float
    perimeter: float
    snapshot: Optional[ScalarField] = None


@dataclass
class EvolutionTrace:
    """One record for the initial state (step 0) plus one per completed step."""

    records: list[TraceRecord] = field(default_factory=list)

    def residuals(self) -> np.ndarray:
        return np.array([r.residual for r in self.records])

    def __len__(self) -> int:
        return len(self.records)

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]

    @property
    def steps_completed(self) -> int:
        return self.records[-1].step if self.records else 0


def data_residual(phi: ScalarField, y: ScalarField, eps: SmoothingParam,
                  solver: SolverConfig) -> float:
    """L2 norm of F(P_eps(phi)) - y, the quantity the stopping rule watches."""
    fu = forward(apply_P_eps(phi, eps), solver)
    return norm_l2(fu.with_values(fu.values - y.values))


# ---------------------------------------------------------------------------
# velocities


def velocity_iss(phi: ScalarField, y: ScalarField, cfg: EvolutionConfig) -> ScalarField:
    """Preconditioned inverse scale-space velocity.

    The misfit gradient restricted to the interface band (which carries the
    1/|grad phi| delta weighting) is smoothed by (I - Laplacian)^-1 with
    homogeneous Neumann data, and negated for descent.
    """
    check_same_spec(phi, y)
    eps = cfg.resolve_eps(phi)
    source = deriv_P_eps(phi, eps).values * adjoint_residual(apply_P_eps(phi, eps), y, cfg.solver).values
    v = solve_neumann_helmholtz(phi.with_values(source), cfg.solver)
    return v.with_values(-v.values)


def _upwind_grad_norm(values: np.ndarray, h: float, speed: np.ndarray) -> np.ndarray:
    """Godunov upwind |grad phi| for phi_t = speed * |grad phi|.

    One-sided differences are mirrored at the domain boundary, which keeps
    the norm exact on affine fields everywhere.
    """

    def one_sided(v, axis):
        d = np.diff(v, axis=axis) / h
        first = np.take(d, [0], axis=axis)
        last = np.take(d, [-1], axis=axis)
        minus = np.concatenate([first, d], axis=axis)
        plus = np.concatenate([d, last], axis=axis)
        return minus, plus

    total = np.zeros_like(values)
    for axis in (0, 1):
        minus, plus = one_sided(values, axis)
        expand = np.maximum(minus, 0.0) ** 2 + np.minimum(plus, 0.0) ** 2
        shrink = np.minimum(minus, 0.0) ** 2 + np.maximum(plus, 0.0) ** 2
        total += np.where(speed > 0.0, expand, shrink)
    return np.sqrt(total)


def velocity_santosa(phi: ScalarField, y: ScalarField, cfg: EvolutionConfig) -> ScalarField:
    """Misfit-gradient velocity scaled by the upwind gradient norm.

    Sign chosen so a small explicit step decreases the squared misfit with
    the inside-positive convention for phi.
    """
    check_same_spec(phi, y)
    eps = cfg.resolve_eps(phi)
    r = adjoint_residual(apply_P_eps(phi, eps), y, cfg.solver).values
    speed = -r
    return phi.with_values(speed * _upwind_grad_norm(phi.values, phi.spec.h, speed))


_VELOCITIES = {"iss": velocity_iss, "santosa": velocity_santosa}


def step(phi: ScalarField, vel: ScalarField, dt: float) -> ScalarField:
    """Explicit Euler update phi + dt * vel."""
    check_same_spec(phi, vel)
    return phi.with_values(phi.values + dt * vel.values)


# ---------------------------------------------------------------------------
# reinitialization


def reinitialize(phi: ScalarField) -> ScalarField:
    """Replace phi by the signed distance to its current zero level set.

    The zero contour is extracted once and the exact distance to the
    polylines is computed at every node; the sign pattern of the input is
    kept verbatim, so the zero set moves by at most the extraction error.
    """
    from .geometry import distance_to_curves  # local import keeps module load light

    curves = extract_zero_level(phi)
    if curves.is_empty():
        raise EmptyLevelSetError("cannot reinitialize: zero level set is empty")
    xx, yy = phi.spec.meshgrid()
    pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
    dist = distance_to_curves(curves, pts).reshape(phi.spec.shape)
    return phi.with_values(np.where(phi.values >= 0.0, dist, -dist))


# ---------------------------------------------------------------------------
# the evolution loop


def _band_floor_engaged(phi: ScalarField, eps: SmoothingParam, floor: float) -> bool:
    """True when the gradient degenerates inside the ramp band, where the
    delta approximation relies on a nonvanishing gradient."""
    fx, fy = np.gradient(phi.values, phi.spec.h, edge_order=2)
    raw = np.hypot(fx, fy)
    band = (phi.values > -eps.eps) & (phi.values <= 0.0)
    return bool(np.any(band & (raw < floor)))


def run(phi0: ScalarField, y: ScalarField, cfg: EvolutionConfig) -> tuple[ScalarField, EvolutionTrace]:
    """Iterate velocity -> step -> (optional reinitialization) until
    max_steps or the discrepancy target is reached.

    Raises SolverError / EmptyLevelSetError with the partial trace attached
    as ``exc.trace`` when a step cannot be completed.
    """
    check_same_spec(phi0, y)
    eps = cfg.resolve_eps(phi0)
    velocity = _VELOCITIES[cfg.method_key]

    curves = extract_zero_level(phi0)
    if curves.is_empty():
        raise EmptyLevelSetError("initial level set function has empty zero level set")

    records: list[TraceRecord] = []

    def record(k: int, t: float, res: float, phi: ScalarField, curves: CurveSet):
        snap = phi if cfg.snapshot_every and k % cfg.snapshot_every == 0 else None
        records.append(TraceRecord(step=k, t=t, residual=res, area=region_area(phi),
                                   perimeter=curve_length(curves), snapshot=snap))

    phi = phi0
    t = 0.0
    try:
        res = data_residual(phi, y, eps, cfg.solver)
        record(0, t, res, phi, curves)
        n_curves = len(curves)

        for k in range(1, cfg.max_steps + 1):
            if res <= cfg.stop_discrepancy:
                break
            vel = velocity(phi, y, cfg)
            if cfg.backtrack:
                dt_k = cfg.dt
                cand, res_cand = phi, res
                for _ in range(cfg.max_halvings + 1):
                    trial = step(phi, vel, dt_k)
                    res_trial = data_residual(trial, y, eps, cfg.solver)
                    if res_trial <= res:
                        cand, res_cand = trial, res_trial
                        break
                    dt_k *= 0.5
                else:
                    dt_k = 0.0
                    logger.debug("step %d: backtracking stalled, state kept", k)
                phi, res = cand, res_cand
            else:
                dt_k = cfg.dt
                phi = step(phi, vel, dt_k)
                res = data_residual(phi, y, eps, cfg.solver)

            if cfg.reinit_every and k % cfg.reinit_every == 0:
                phi = reinitialize(phi)
                res = data_residual(phi, y, eps, cfg.solver)

            t += dt_k
            curves = extract_zero_level(phi)
            if curves.is_empty():
                raise EmptyLevelSetError(f"zero level set vanished at step {k}")
            if len(curves) != n_curves:
                logger.warning("topology change at step %d: %d -> %d contours; continuing",
                               k, n_curves, len(curves))
                n_curves = len(curves)
            if _band_floor_engaged(phi, eps, cfg.grad_floor):
                logger.warning("gradient floor engaged inside the ramp band at step %d", k)
            record(k, t, res, phi, curves)
    except (SolverError, EmptyLevelSetError) as exc:
        exc.trace = EvolutionTrace(records)
        raise

    return phi, EvolutionTrace(records)


# ---------------------------------------------------------------------------
# stationarity


def optimality_residual(phi: ScalarField, phi_star: ScalarField, y: ScalarField,
                        alpha: float, cfg: EvolutionConfig) -> float:
    """L2 norm of the stationarity defect

        deriv_P_eps(phi) * F(F(P_eps(phi)) - y) + alpha (I - Laplacian)(phi - phi_*)

    with the Helmholtz operator applied through mirrored Neumann ghosts.
    Zero exactly at a fixed point of the implicit regularized step.
    """
    if not alpha > 0.0:
        raise ValueError("alpha must be positive")
    check_same_spec(phi, phi_star, y)
    eps = cfg.resolve_eps(phi)
    misfit = deriv_P_eps(phi, eps).values * adjoint_residual(apply_P_eps(phi, eps), y, cfg.solver).values
    penalty = apply_helmholtz_neumann(phi.with_values(phi.values - phi_star.values)).values
    return norm_l2(phi.with_values(misfit + alpha * penalty))
