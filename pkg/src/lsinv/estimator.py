"""Scikit-learn style front end for the inversion.

``LevelSetInversion`` wraps the evolution loop in the familiar estimator
protocol: hyperparameters in ``__init__`` (so ``get_params`` / ``set_params``
/ ``clone`` work), ``fit(X)`` on the observed field, fitted state in
trailing-underscore attributes, ``predict`` returning the recovered binary
inclusion.  X is a single 2D field sampled on the square grid, not a sample
matrix, so the class composes with sklearn tooling at the parameter level
rather than inside cross-validation pipelines.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .elliptic import SolverConfig, forward
from .grid import GridSpec, ScalarField, norm_l2
from .harness import ShapeDescriptor
from .levelset import EvolutionConfig, run
from .projection import SmoothingParam, apply_P


def validate_observation(X) -> np.ndarray:
    """Check an observed data field: 2D, square, >= 3 nodes per axis, finite."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2D field, got shape {arr.shape}")
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square field, got shape {arr.shape}")
    if arr.shape[0] < 3:
        raise ValueError("need at least 3 nodes per axis")
    if not np.all(np.isfinite(arr)):
        raise ValueError("observation contains non-finite entries")
    return arr


class LevelSetInversion(BaseEstimator):
    """Recover a binary inclusion from Poisson-equation data.

    Parameters
    ----------
    method : "iss" or "santosa"
        Evolution velocity; "iss" is the preconditioned inverse scale-space
        flow, "santosa" the classical misfit-times-|grad| baseline.
    dt : float or None
        Time step; None picks the per-method default.
    max_steps : int
        Step budget.
    eps_multiple : float
        Projection ramp width as a multiple of the grid spacing.
    reinit_every : int or None
        Reinitialize the level set function every k steps (None = per-method
        default: never for iss, every 20 for santosa).
    stop_discrepancy : float
        Stop once the data residual drops below this value.
    initial_center, initial_radius : floats
        Disk used as the initial guess.
    backtrack : bool
        Per-step halving controller enforcing a non-increasing discrepancy.
    solver_tol : float
        Relative residual tolerance of the linear solves.

    Attributes (after fit)
    ----------------------
    grid_ : GridSpec          geometry inferred from the observation
    phi_ : ndarray            final level set function
    indicator_ : ndarray      recovered binary inclusion, values in {0, 1}
    trace_ : EvolutionTrace   per-step residual / area / perimeter records
    n_steps_ : int            completed steps
    residual_ : float         final data residual
    """

    def __init__(self, method="iss", dt=None, max_steps=200, eps_multiple=1.5,
                 reinit_every=None, stop_discrepancy=0.0,
                 initial_center=(0.5, 0.5), initial_radius=0.25,
                 backtrack=True, solver_tol=1e-10):
        self.method = method
        self.dt = dt
        self.max_steps = max_steps
        self.eps_multiple = eps_multiple
        self.reinit_every = reinit_every
        self.stop_discrepancy = stop_discrepancy
        self.initial_center = initial_center
        self.initial_radius = initial_radius
        self.backtrack = backtrack
        self.solver_tol = solver_tol

    def _evolution_config(self, spec: GridSpec) -> EvolutionConfig:
        overrides = dict(
            max_steps=self.max_steps,
            eps=SmoothingParam.from_grid(spec, self.eps_multiple),
            stop_discrepancy=self.stop_discrepancy,
            backtrack=self.backtrack,
            solver=SolverConfig(tol=self.solver_tol),
        )
        if self.dt is not None:
            overrides["dt"] = self.dt
        if self.reinit_every is not None:
            overrides["reinit_every"] = self.reinit_every
        return EvolutionConfig.for_method(self.method, **overrides)

    def fit(self, X, y=None, phi0=None):
        """Run the inversion on one observed field X of shape (n, n).

        phi0 optionally overrides the initial level set function (array of
        the same shape); otherwise the configured initial disk is used.
        """
        arr = validate_observation(X)
        spec = GridSpec(arr.shape[0], arr.shape[1])
        data = ScalarField(spec, arr)
        if phi0 is None:
            init = ShapeDescriptor.disk(self.initial_center, self.initial_radius)
            start = init.signed_distance(spec)
        else:
            start = ScalarField(spec, validate_observation(phi0))
        phi, trace = run(start, data, self._evolution_config(spec))

        self.grid_ = spec
        self.phi_ = np.asarray(phi.values)
        self.indicator_ = np.asarray(apply_P(phi).values)
        self.trace_ = trace
        self.n_steps_ = trace.steps_completed
        self.residual_ = trace.records[-1].residual
        return self

    def _check_fitted(self):
        if not hasattr(self, "phi_"):
            raise NotFittedError("call fit before predict/score")

    def predict(self, X=None):
        """The recovered inclusion indicator ({0,1} array on the fit grid)."""
        self._check_fitted()
        if X is not None:
            arr = validate_observation(X)
            if arr.shape != self.grid_.shape:
                raise ValueError("X shape differs from the fitted grid")
        return self.indicator_.copy()

    def score(self, X, y=None):
        """Negative relative data misfit of the fitted inclusion against X
        (higher is better, 0 is perfect)."""
        self._check_fitted()
        data = ScalarField(self.grid_, validate_observation(X))
        fu = forward(ScalarField(self.grid_, self.indicator_),
                     SolverConfig(tol=self.solver_tol))
        misfit = norm_l2(fu.with_values(fu.values - data.values))
        denom = norm_l2(data)
        return -misfit / denom if denom > 0 else -misfit
