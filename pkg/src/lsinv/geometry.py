"""Zero level set extraction and curve measures.

Contours are extracted by marching squares with linear interpolation along
cell edges.  Node values that are exactly zero are nudged by +1e-12 first so
every cell has a definite sign pattern; the two ambiguous (saddle) cell
configurations are resolved by the sign of the cell average.  Extracted
polylines carry per-vertex unit normals pointing along -grad(phi), i.e.
outward when the level set function is positive inside the enclosed region.

Curve integrals use the midpoint rule per segment, which also keeps later
boundary-integral code away from evaluating singular kernels at vertices.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec, ScalarField, bilinear_sample, check_same_spec, gradient, grad_norm, inner_product
from .projection import apply_P

_ZERO_NUDGE = 1e-12


@dataclass(frozen=True)
class Polyline:
    """Ordered vertices of one contour piece with per-vertex unit normals.

    Closed polylines do not repeat the first vertex; the wrap segment is
    implied.  Normals satisfy n = -grad(phi)/|grad(phi)| at extraction time.
    """

    vertices: np.ndarray  # (m, 2)
    normals: np.ndarray   # (m, 2), unit
    closed: bool

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Segment endpoint arrays (starts, ends), including the wrap segment
        of a closed polyline."""
        v = self.vertices
        if self.closed:
            return v, np.roll(v, -1, axis=0)
        return v[:-1], v[1:]


@dataclass(frozen=True)
class CurveSet:
    """The extracted zero level set: a list of disjoint polylines."""

    curves: list[Polyline] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.curves)

    def is_empty(self) -> bool:
        return not self.curves

    def all_segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Concatenated (starts, ends) over every polyline; empty (0,2) arrays
        when there are no curves."""
        if self.is_empty():
            z = np.zeros((0, 2))
            return z, z
        starts, ends = zip(*(c.segments() for c in self.curves))
        return np.concatenate(starts), np.concatenate(ends)


# ---------------------------------------------------------------------------
# marching squares

# Segment table indexed by the 4-bit corner code (bit0=SW, bit1=SE, bit2=NE,
# bit3=NW, bit set when the corner is inside).  Entries pair the local edges
# "S", "E", "N", "W" that one contour segment connects.  Codes 5 and 10 are
# the saddles and handled separately.
_SEGMENT_TABLE: dict[int, list[tuple[str, str]]] = {
    0: [], 15: [],
    1: [("S", "W")], 14: [("S", "W")],
    2: [("S", "E")], 13: [("S", "E")],
    4: [("E", "N")], 11: [("E", "N")],
    8: [("N", "W")], 7: [("N", "W")],
    3: [("W", "E")], 12: [("W", "E")],
    6: [("S", "N")], 9: [("S", "N")],
}


def _edge_key(axis: str, i: int, j: int) -> tuple:
    return (axis, i, j)


def _cell_edges(i: int, j: int) -> dict[str, tuple]:
    return {
        "S": _edge_key("h", i, j),
        "N": _edge_key("h", i, j + 1),
        "W": _edge_key("v", i, j),
        "E": _edge_key("v", i + 1, j),
    }


def extract_zero_level(phi: ScalarField) -> CurveSet:
    """Marching-squares contour of the zero isoline.

    Returns an empty CurveSet when the field has uniform sign.  Vertices are
    linearly interpolated along sign-change edges; normals come from the
    bilinearly sampled gradient of phi.
    """
    spec = phi.spec
    vals = phi.values.copy()
    vals[vals == 0.0] = _ZERO_NUDGE
    inside = vals > 0.0

    sw = inside[:-1, :-1]
    se = inside[1:, :-1]
    ne = inside[1:, 1:]
    nw = inside[:-1, 1:]
    code = sw * 1 + se * 2 + ne * 4 + nw * 8
    mixed = np.argwhere((code != 0) & (code != 15))
    if mixed.size == 0:
        return CurveSet([])

    xs, ys = spec.xs(), spec.ys()

    def interp(axis: str, i: int, j: int) -> tuple[float, float]:
        if axis == "h":
            fa, fb = vals[i, j], vals[i + 1, j]
            t = fa / (fa - fb)
            return (xs[i] + t * spec.h, ys[j])
        fa, fb = vals[i, j], vals[i, j + 1]
        t = fa / (fa - fb)
        return (xs[i], ys[j] + t * spec.h)

    points: dict[tuple, tuple[float, float]] = {}
    adjacency: dict[tuple, list[tuple]] = {}

    def connect(ka: tuple, kb: tuple):
        adjacency.setdefault(ka, []).append(kb)
        adjacency.setdefault(kb, []).append(ka)

    for i, j in mixed:
        c = int(code[i, j])
        edges = _cell_edges(i, j)
        if c in (5, 10):
            # Saddle: the cell-average sign decides whether the two inside
            # corners are joined through the cell center.
            avg = vals[i, j] + vals[i + 1, j] + vals[i + 1, j + 1] + vals[i, j + 1]
            center_inside = avg > 0.0
            if (c == 5) == center_inside:
                pairs = [("S", "E"), ("N", "W")]
            else:
                pairs = [("S", "W"), ("E", "N")]
        else:
            pairs = _SEGMENT_TABLE[c]
        for ea, eb in pairs:
            ka, kb = edges[ea], edges[eb]
            for k in (ka, kb):
                if k not in points:
                    points[k] = interp(*k)
            connect(ka, kb)

    polylines = _chain(points, adjacency)
    gx, gy = gradient(phi)
    curves = []
    for verts, closed in polylines:
        v = np.asarray(verts)
        nx_ = bilinear_sample(gx, v)
        ny_ = bilinear_sample(gy, v)
        mag = np.hypot(nx_, ny_)
        mag = np.where(mag > 0.0, mag, 1.0)
        normals = np.stack([-nx_ / mag, -ny_ / mag], axis=1)
        curves.append(Polyline(vertices=v, normals=normals, closed=closed))
    return CurveSet(curves)


def _chain(points: dict, adjacency: dict) -> list[tuple[list, bool]]:
    """Walk the edge-crossing graph into open and closed polylines."""
    visited: set[tuple] = set()
    out: list[tuple[list, bool]] = []

    def walk(start: tuple) -> tuple[list, bool]:
        path = [start]
        visited.add(start)
        prev = None
        cur = start
        while True:
            nxt = [k for k in adjacency[cur] if k != prev and k not in visited]
            if not nxt:
                # Either an open end, or we are back adjacent to the start.
                closed = len(path) > 2 and start in adjacency[cur] and prev != start
                return path, closed
            prev, cur = cur, nxt[0]
            path.append(cur)
            visited.add(cur)

    # Open curves first (degree-1 endpoints), then the remaining loops.
    for key in sorted(k for k, nb in adjacency.items() if len(nb) == 1):
        if key not in visited:
            out.append(walk(key))
    for key in sorted(adjacency):
        if key not in visited:
            out.append(walk(key))
    return [([points[k] for k in path], closed) for path, closed in out]


# ---------------------------------------------------------------------------
# curve measures


def curve_length(c: CurveSet) -> float:
    """Total polyline length (the discrete 1-d Hausdorff measure)."""
    starts, ends = c.all_segments()
    if starts.shape[0] == 0:
        return 0.0
    return float(np.linalg.norm(ends - starts, axis=1).sum())


def curve_integral(c: CurveSet, v: ScalarField) -> float:
    """Midpoint-rule line integral of a grid field over the curve set."""
    starts, ends = c.all_segments()
    if starts.shape[0] == 0:
        return 0.0
    lengths = np.linalg.norm(ends - starts, axis=1)
    mids = 0.5 * (starts + ends)
    return float(np.sum(bilinear_sample(v, mids) * lengths))


def coarea_check(phi: ScalarField, a: float, b: float, floor: float = 1e-6,
                 n_levels: int = 21) -> tuple[float, float]:
    """Both sides of the coarea identity on the level band a < phi < b.

    Left: volume integral of |grad phi| over the band.  Right: trapezoidal
    quadrature over ``n_levels`` uniformly spaced levels of the length of the
    corresponding isolines.  Agreement is the caller's assertion.
    """
    if not a < b:
        raise ValueError("need a < b")
    band = (phi.values > a) & (phi.values < b)
    gn = grad_norm(phi, floor)
    left = inner_product(phi.with_values(np.where(band, gn.values, 0.0)),
                         ScalarField.constant(phi.spec, 1.0))
    levels = np.linspace(a, b, n_levels)
    lengths = [curve_length(extract_zero_level(phi.with_values(phi.values - rho)))
               for rho in levels]
    right = float(np.trapezoid(lengths, levels))
    return left, right


def region_area(phi: ScalarField) -> float:
    """Area of the nonnegative region, integral of the sharp indicator."""
    return inner_product(apply_P(phi), ScalarField.constant(phi.spec, 1.0))


def symmetric_difference_area(phi_a: ScalarField, phi_b: ScalarField) -> float:
    """Area where exactly one of the two indicator regions covers the point."""
    check_same_spec(phi_a, phi_b)
    xor = np.abs(apply_P(phi_a).values - apply_P(phi_b).values)
    return inner_product(phi_a.with_values(xor), ScalarField.constant(phi_a.spec, 1.0))


# ---------------------------------------------------------------------------
# distances and serialization


def distance_to_curves(c: CurveSet, points: np.ndarray, chunk: int = 1024) -> np.ndarray:
    """Euclidean distance from each point to the nearest curve segment."""
    starts, ends = c.all_segments()
    if starts.shape[0] == 0:
        raise ValueError("cannot measure distance to an empty curve set")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    seg = ends - starts
    seg_len2 = np.maximum(np.einsum("ij,ij->i", seg, seg), 1e-300)
    out = np.empty(pts.shape[0])
    for lo in range(0, pts.shape[0], chunk):
        p = pts[lo:lo + chunk]
        d = p[:, None, :] - starts[None, :, :]
        t = np.clip(np.einsum("pse,se->ps", d, seg) / seg_len2, 0.0, 1.0)
        closest = d - t[:, :, None] * seg[None, :, :]
        out[lo:lo + chunk] = np.sqrt(np.einsum("pse,pse->ps", closest, closest).min(axis=1))
    return out.reshape(np.asarray(points).shape[:-1])


def hausdorff_distance(a: CurveSet, b: CurveSet, samples_per_segment: int = 4) -> float:
    """Symmetric Hausdorff distance between two curve sets, measured on
    densified vertex samples against the other set's segments."""

    def sample(c: CurveSet) -> np.ndarray:
        starts, ends = c.all_segments()
        ts = np.linspace(0.0, 1.0, samples_per_segment, endpoint=False)
        return (starts[:, None, :] + ts[None, :, None] * (ends - starts)[:, None, :]).reshape(-1, 2)

    d_ab = distance_to_curves(b, sample(a)).max()
    d_ba = distance_to_curves(a, sample(b)).max()
    return float(max(d_ab, d_ba))


def write_curves_csv(c: CurveSet, path) -> None:
    """One row per vertex: curve_id, x, y, nx, ny."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["curve_id", "x", "y", "nx", "ny"])
        for cid, curve in enumerate(c.curves):
            for (x, y), (nx_, ny_) in zip(curve.vertices, curve.normals):
                writer.writerow([cid, repr(x), repr(y), repr(nx_), repr(ny_)])


def read_curves_csv(path) -> list[np.ndarray]:
    """Vertex arrays per curve_id from a file written by write_curves_csv."""
    rows: dict[int, list] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.setdefault(int(row["curve_id"]), []).append(
                [float(row["x"]), float(row["y"]), float(row["nx"]), float(row["ny"])])
    return [np.asarray(rows[k]) for k in sorted(rows)]
