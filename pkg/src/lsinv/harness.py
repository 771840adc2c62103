"""Experiment orchestration: synthetic phantoms, noise, and artifact output.

An experiment is described by a single JSON document (unknown keys are
rejected, so typos fail loudly).  Running one writes

* ``trace.csv``          step, t, residual, area, perimeter
* ``phi_####.pgm``       level set snapshots (P5, min/max in the header)
* ``u_####.pgm``         sharp indicator snapshots
* ``final_metrics.json`` residuals, reconstruction quality, timing

Everything is deterministic for a fixed config and seed, including the
bytes of trace.csv.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .elliptic import SolverConfig, forward
from .errors import ConfigError, EmptyLevelSetError, SolverError
from .grid import GridSpec, ScalarField, norm_l2
from .levelset import EvolutionConfig, EvolutionTrace, run
from .projection import SmoothingParam, apply_P
from .geometry import region_area, symmetric_difference_area

logger = logging.getLogger(__name__)

MARGIN_CELLS = 4  # inclusion must keep this many cells of clearance to the boundary


# ---------------------------------------------------------------------------
# shape descriptors


@dataclass(frozen=True)
class ShapeDescriptor:
    """Disk or ellipse placed strictly inside the domain.

    radii = (a, b); a disk has a == b.  rotation_deg rotates the ellipse
    axes counterclockwise.
    """

    kind: str
    center: tuple[float, float]
    radii: tuple[float, float]
    rotation_deg: float = 0.0

    def __post_init__(self):
        if self.kind not in ("disk", "ellipse"):
            raise ConfigError(f"unknown shape kind {self.kind!r}")
        if min(self.radii) <= 0.0:
            raise ConfigError("shape radii must be positive")

    @classmethod
    def disk(cls, center, radius) -> "ShapeDescriptor":
        return cls("disk", (float(center[0]), float(center[1])), (float(radius), float(radius)))

    def signed_distance(self, spec: GridSpec) -> ScalarField:
        """Level set function positive inside the shape (exact for disks,
        a normalized algebraic distance for ellipses)."""
        xx, yy = spec.meshgrid()
        cx, cy = self.center
        a, b = self.radii
        th = math.radians(self.rotation_deg)
        xr = (xx - cx) * math.cos(th) + (yy - cy) * math.sin(th)
        yr = -(xx - cx) * math.sin(th) + (yy - cy) * math.cos(th)
        if a == b:
            vals = a - np.hypot(xr, yr)
        else:
            rho = np.sqrt((xr / a) ** 2 + (yr / b) ** 2)
            vals = min(a, b) * (1.0 - rho)
        return ScalarField(spec, vals)

    def validate_margin(self, spec: GridSpec) -> None:
        (x0, x1), (y0, y1) = spec.domain
        margin = MARGIN_CELLS * spec.h
        reach = max(self.radii)
        cx, cy = self.center
        if not (x0 + margin <= cx - reach and cx + reach <= x1 - margin
                and y0 + margin <= cy - reach and cy + reach <= y1 - margin):
            raise ConfigError(
                f"shape {self.kind} at {self.center} with reach {reach} "
                f"violates the {MARGIN_CELLS}-cell boundary margin")


# ---------------------------------------------------------------------------
# experiment configuration


DEFAULT_CONFIG = {
    "grid": {"n": 129},
    "true_shape": {"kind": "disk", "center": [0.5, 0.5], "radius": 0.3},
    "initial_shape": {"kind": "disk", "center": [0.4, 0.4], "radius": 0.2},
    "noise": 0.0,
    "seed": 0,
    "evolution": {"method": "iss", "max_steps": 200, "eps_multiple": 1.5,
                  "snapshot_every": 25},
}


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    true_shape: ShapeDescriptor
    initial_shape: ShapeDescriptor
    noise: float
    seed: int
    evolution: EvolutionConfig
    eps_multiple: float = 1.5

    def grid(self) -> GridSpec:
        return GridSpec(self.n, self.n)


def _take(doc: dict, allowed: dict, where: str) -> dict:
    unknown = set(doc) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")
    merged = dict(allowed)
    merged.update(doc)
    return merged


def _parse_shape(doc: dict, where: str) -> ShapeDescriptor:
    d = _take(doc, {"kind": "disk", "center": [0.5, 0.5], "radius": None,
                    "radii": None, "rotation_deg": 0.0}, where)
    if d["kind"] == "disk":
        if d["radius"] is None:
            raise ConfigError(f"{where}: disk needs 'radius'")
        return ShapeDescriptor.disk(d["center"], d["radius"])
    if d["radii"] is None:
        raise ConfigError(f"{where}: ellipse needs 'radii'")
    return ShapeDescriptor("ellipse", tuple(map(float, d["center"])),
                           tuple(map(float, d["radii"])), float(d["rotation_deg"]))


def parse_config(doc: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from a JSON document, rejecting unknown keys."""
    top = _take(doc, {"grid": {}, "true_shape": DEFAULT_CONFIG["true_shape"],
                      "initial_shape": DEFAULT_CONFIG["initial_shape"],
                      "noise": 0.0, "seed": 0, "evolution": {}}, "config")
    grid = _take(top["grid"], {"n": 129}, "grid")
    n = int(grid["n"])

    evo_defaults = {"method": "iss", "dt": None, "max_steps": 200,
                    "eps_multiple": 1.5, "reinit_every": None,
                    "stop_discrepancy": None, "grad_floor": 1e-6,
                    "backtrack": True, "max_halvings": 10, "snapshot_every": 0,
                    "solver": {}}
    evo = _take(top["evolution"], evo_defaults, "evolution")
    solver_doc = _take(evo["solver"], {"method": "direct-sparse", "tol": 1e-10,
                                       "max_iter": 20000}, "solver")
    solver = SolverConfig(method=solver_doc["method"], tol=float(solver_doc["tol"]),
                          max_iter=int(solver_doc["max_iter"]))

    overrides: dict = {"max_steps": int(evo["max_steps"]), "solver": solver,
                       "grad_floor": float(evo["grad_floor"]),
                       "backtrack": bool(evo["backtrack"]),
                       "max_halvings": int(evo["max_halvings"]),
                       "snapshot_every": int(evo["snapshot_every"])}
    if evo["dt"] is not None:
        overrides["dt"] = float(evo["dt"])
    if evo["reinit_every"] is not None:
        overrides["reinit_every"] = int(evo["reinit_every"])
    if evo["stop_discrepancy"] is not None:
        overrides["stop_discrepancy"] = float(evo["stop_discrepancy"])
    evolution = EvolutionConfig.for_method(evo["method"], **overrides)

    cfg = ExperimentConfig(
        n=n,
        true_shape=_parse_shape(top["true_shape"], "true_shape"),
        initial_shape=_parse_shape(top["initial_shape"], "initial_shape"),
        noise=float(top["noise"]),
        seed=int(top["seed"]),
        evolution=evolution,
        eps_multiple=float(evo["eps_multiple"]),
    )
    if cfg.noise < 0.0:
        raise ConfigError("noise must be >= 0")
    spec = cfg.grid()
    cfg.true_shape.validate_margin(spec)
    cfg.initial_shape.validate_margin(spec)
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(json.load(fh))


# ---------------------------------------------------------------------------
# phantom and noise


def make_phantom(cfg: ExperimentConfig) -> tuple[ScalarField, ScalarField]:
    """True indicator and its clean forward data on the configured grid."""
    spec = cfg.grid()
    cfg.true_shape.validate_margin(spec)
    u_true = apply_P(cfg.true_shape.signed_distance(spec))
    return u_true, forward(u_true, cfg.evolution.solver)


def add_noise(y: ScalarField, delta: float, seed: int) -> ScalarField:
    """Additive Gaussian noise scaled to a relative L2 level of exactly delta."""
    if delta < 0.0:
        raise ConfigError("noise level must be >= 0")
    if delta == 0.0:
        return y
    g = np.random.default_rng(seed).standard_normal(y.spec.shape)
    gf = y.with_values(g)
    scale = delta * norm_l2(y) / norm_l2(gf)
    return y.with_values(y.values + scale * g)


# ---------------------------------------------------------------------------
# artifact writers


def write_pgm(f: ScalarField, path) -> None:
    """P5 snapshot: field min/max mapped linearly onto 0..255 and recorded in
    a header comment.  Rows run top-to-bottom in decreasing y."""
    lo, hi = float(f.values.min()), float(f.values.max())
    if hi > lo:
        scaled = np.round((f.values - lo) / (hi - lo) * 255.0)
    else:
        scaled = np.zeros(f.spec.shape)
    img = scaled.astype(np.uint8).T[::-1, :]  # rows = y descending
    header = f"P5\n# min={lo!r} max={hi!r}\n{f.spec.nx} {f.spec.ny}\n255\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(img.tobytes())


def write_trace_csv(trace: EvolutionTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("step,t,residual,area,perimeter\n")
        for r in trace.records:
            fh.write(f"{r.step},{r.t!r},{r.residual!r},{r.area!r},{r.perimeter!r}\n")


# ---------------------------------------------------------------------------
# experiment driver


def run_experiment(cfg: ExperimentConfig, out_dir) -> int:
    """Run one inversion and write its artifacts; returns a process exit code
    (0 on success, 1 when the evolution aborted)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = cfg.grid()

    u_true, y_clean = make_phantom(cfg)
    y = add_noise(y_clean, cfg.noise, cfg.seed)
    phi0 = cfg.initial_shape.signed_distance(spec)

    evolution = cfg.evolution
    if evolution.eps is None:
        evolution = replace(evolution, eps=SmoothingParam.from_grid(spec, cfg.eps_multiple))
    if cfg.noise > 0.0 and evolution.stop_discrepancy == 0.0:
        # Discrepancy principle: stop slightly above the injected noise norm.
        evolution = replace(evolution, stop_discrepancy=1.1 * cfg.noise * norm_l2(y_clean))

    aborted = None
    t_start = time.perf_counter()
    try:
        phi_final, trace = run(phi0, y, evolution)
    except (SolverError, EmptyLevelSetError) as exc:
        trace = exc.trace
        phi_final = trace.records[-1].snapshot if trace.records and trace.records[-1].snapshot else phi0
        aborted = {"type": type(exc).__name__, "message": str(exc)}
        logger.error("evolution aborted: %s", exc)
    elapsed = time.perf_counter() - t_start

    write_trace_csv(trace, out / "trace.csv")
    for r in trace.records:
        if r.snapshot is not None:
            write_pgm(r.snapshot, out / f"phi_{r.step:04d}.pgm")
            write_pgm(apply_P(r.snapshot), out / f"u_{r.step:04d}.pgm")
    if aborted is None:
        write_pgm(phi_final, out / f"phi_{trace.steps_completed:04d}.pgm")
        write_pgm(apply_P(phi_final), out / f"u_{trace.steps_completed:04d}.pgm")

    phi_true = cfg.true_shape.signed_distance(spec)
    steps = max(trace.steps_completed, 1)
    metrics = {
        "initial_residual": trace.records[0].residual if trace.records else None,
        "final_residual": trace.records[-1].residual if trace.records else None,
        "steps_completed": trace.steps_completed,
        "true_area": region_area(phi_true),
        "final_area": trace.records[-1].area if trace.records else None,
        "symmetric_difference_area": symmetric_difference_area(phi_final, phi_true),
        "seconds_per_step": elapsed / steps,
        "aborted": aborted,
    }
    with open(out / "final_metrics.json", "w") as fh:
        json.dump(metrics, fh, indent=2)
        fh.write("\n")
    return 0 if aborted is None else 1


def run_forward(cfg: ExperimentConfig, out_dir) -> int:
    """Phantom generation only: write the true indicator and (noisy) data."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    u_true, y_clean = make_phantom(cfg)
    y = add_noise(y_clean, cfg.noise, cfg.seed)
    write_pgm(u_true, out / "u_true.pgm")
    write_pgm(y, out / "y.pgm")
    np.save(out / "y.npy", y.values)
    np.save(out / "u_true.npy", u_true.values)
    info = {
        "grid_n": cfg.n,
        "true_area": region_area(cfg.true_shape.signed_distance(cfg.grid())),
        "noise": cfg.noise,
        "seed": cfg.seed,
        "data_norm": norm_l2(y),
        "clean_data_norm": norm_l2(y_clean),
    }
    with open(out / "forward_info.json", "w") as fh:
        json.dump(info, fh, indent=2)
        fh.write("\n")
    return 0
