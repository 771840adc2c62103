"""Projection of level set functions onto binary indicators.

The sharp projection P maps a level set function to the {0,1} indicator of
its nonnegative region.  P_eps is the piecewise-linear smoothing whose ramp
occupies the band [-eps, 0]; its derivative (1/eps on the open-below band)
is the grid stand-in for the interface delta measure weighted by 1/|grad|.
Q_eps is a symmetric ramp kept only to demonstrate why it is the *wrong*
smoothing: its pointwise limit takes the value 1/2 on the zero set and so
leaves the class of binary indicators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, ScalarField


@dataclass(frozen=True)
class SmoothingParam:
    """Ramp width eps for the smoothed projection, in the same length units
    as the level set function.  grid_multiple records eps as a multiple of
    the grid spacing when it was derived from one (None otherwise)."""

    eps: float
    grid_multiple: float | None = None

    def __post_init__(self):
        if not self.eps > 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")

    @classmethod
    def from_grid(cls, spec: GridSpec, multiple: float = 1.5) -> "SmoothingParam":
        """Tie eps to the grid as eps = multiple * h.

        The default 1.5h keeps the ramp band resolved by at least one node
        layer while staying geometrically tight.
        """
        return cls(eps=multiple * spec.h, grid_multiple=multiple)


def apply_P(phi: ScalarField) -> ScalarField:
    """Sharp projection: 1 where phi >= 0, else 0."""
    return phi.with_values((phi.values >= 0.0).astype(float))


def apply_P_eps(phi: ScalarField, s: SmoothingParam) -> ScalarField:
    """Piecewise-linear smoothing of P: 0 below -eps, the ramp 1 + t/eps on
    [-eps, 0], and 1 above 0.  Values lie in [0, 1]."""
    return phi.with_values(np.clip(1.0 + phi.values / s.eps, 0.0, 1.0))


def deriv_P_eps(phi: ScalarField, s: SmoothingParam) -> ScalarField:
    """Derivative of the smoothed projection: 1/eps on the band
    -eps < phi <= 0, else 0.

    The band is half-open at -eps so its support matches the ramp exactly;
    integrated against the trapezoidal rule this field approximates the
    line-delta of the zero level set weighted by 1/|grad phi|.
    """
    t = phi.values
    band = (t > -s.eps) & (t <= 0.0)
    return phi.with_values(np.where(band, 1.0 / s.eps, 0.0))


def apply_Q_eps(phi: ScalarField, s: SmoothingParam) -> ScalarField:
    """Symmetric ramp smoothing: 0 below -eps, (t+eps)/(2 eps) on [-eps, eps],
    1 above eps.  Its pointwise limit is 1/2 on the zero set, so it does not
    converge into the admissible indicator class; provided for that negative
    check only."""
    return phi.with_values(np.clip((phi.values + s.eps) / (2.0 * s.eps), 0.0, 1.0))
