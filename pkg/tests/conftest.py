import numpy as np
import pytest

from lsinv.grid import GridSpec, ScalarField

# Circle test cases deliberately use an off-lattice center: a node-aligned
# center resonates with the grid and inflates band-quadrature noise without
# converging under refinement.
CENTER = (0.503, 0.497)
RADIUS = 0.3


def circle_field(n: int, center=CENTER, radius=RADIUS, positive_inside=True) -> ScalarField:
    """Signed distance to a circle on an n x n unit-square grid."""
    spec = GridSpec(n, n)
    xx, yy = spec.meshgrid()
    r = np.hypot(xx - center[0], yy - center[1])
    return ScalarField(spec, radius - r if positive_inside else r - radius)


@pytest.fixture(scope="session")
def spec65():
    return GridSpec(65, 65)


@pytest.fixture(scope="session")
def spec129():
    return GridSpec(129, 129)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
