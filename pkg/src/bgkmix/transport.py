"""1D-in-space transport with BGK relaxation by operator splitting.

The field stores one row per spatial cell: ``F1`` and ``F2`` have shape
``(Nx, Nv)``. Transport is first-order upwind in x for each velocity node,
relaxation is the exponential scheme of :mod:`bgkmix.relax` applied to all
cells as one batch.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .grid import (
    VelocityGrid,
    batch_conserved,
    batch_h,
    batch_moments,
    psum,
)
from .params import MixtureParams
from .relax import batch_exponential

log = logging.getLogger(__name__)

BOUNDARIES = ("periodic", "outflow")
# Cells per relaxation chunk. Fixed so that results do not depend on the
# number of worker threads.
CHUNK = 16
H_INCREASE_TOL = 1e-10


class CFLError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SpatialField:
    F1: np.ndarray
    F2: np.ndarray
    grid: VelocityGrid
    params: MixtureParams
    length: float = 1.0
    bc: str = "periodic"
    time: float = 0.0

    def __post_init__(self):
        F1 = np.ascontiguousarray(self.F1, dtype=float)
        F2 = np.ascontiguousarray(self.F2, dtype=float)
        if F1.ndim != 2 or F1.shape != F2.shape or F1.shape[1] != self.grid.size:
            raise ValueError("F1, F2 must both have shape (cells, velocity nodes)")
        if self.bc not in BOUNDARIES:
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        object.__setattr__(self, "F1", F1)
        object.__setattr__(self, "F2", F2)

    @property
    def cells(self) -> int:
        return self.F1.shape[0]

    @property
    def dx(self) -> float:
        return self.length / self.cells

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) * self.dx

    def evolve(self, F1, F2, dt) -> "SpatialField":
        return SpatialField(F1, F2, self.grid, self.params, self.length, self.bc, self.time + dt)

    def is_nonnegative(self) -> bool:
        return bool(self.F1.min() >= 0.0 and self.F2.min() >= 0.0)


def maxwellian_field(n1, u1, T1, n2, u2, T2, grid: VelocityGrid, params: MixtureParams,
                     length: float = 1.0, bc: str = "periodic") -> SpatialField:
    """Field of cell-wise moment-matched Maxwellians; profiles are per-cell arrays."""
    from .grid import batch_maxwellian_discrete

    F1 = batch_maxwellian_discrete(n1, u1, T1, params.m1, grid).values
    F2 = batch_maxwellian_discrete(n2, u2, T2, params.m2, grid).values
    return SpatialField(F1, F2, grid, params, length, bc)


def max_cfl(field: SpatialField, dt: float) -> float:
    return dt * float(np.max(np.abs(field.grid.axes[0]))) / field.dx


def _upwind(F: np.ndarray, c: np.ndarray, bc: str) -> np.ndarray:
    """``f_i + |c| (f_up - f_i)`` with ``c = dt * v_x / dx`` per velocity node."""
    if bc == "periodic":
        left = np.roll(F, 1, axis=0)
        right = np.roll(F, -1, axis=0)
    else:
        left = np.concatenate([F[:1], F[:-1]], axis=0)
        right = np.concatenate([F[1:], F[-1:]], axis=0)
    up = np.where(c > 0, left, right)
    return F + np.abs(c) * (up - F)


def transport_step(field: SpatialField, dt: float) -> SpatialField:
    """Upwind step of ``df/dt + v_x df/dx = 0`` for both species."""
    cfl = max_cfl(field, dt)
    if cfl > 1.0:
        raise CFLError(f"CFL number {cfl:.4f} exceeds 1 (dt={dt}, dx={field.dx})")
    c = dt * field.grid.v[0] / field.dx
    return field.evolve(_upwind(field.F1, c, field.bc), _upwind(field.F2, c, field.bc), dt)


def relax_cells(field: SpatialField, dt: float, order: int = 1, threads: int = 1):
    """Exponential relaxation of every cell; returns new ``(F1, F2)`` arrays."""
    n = field.cells
    chunks = [slice(s, min(s + CHUNK, n)) for s in range(0, n, CHUNK)]

    def work(sl):
        a, b, _ = batch_exponential(field.F1[sl], field.F2[sl], field.grid, field.params,
                                    dt, order=order)
        return a, b

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(sl) for sl in chunks]
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def relax_step(field: SpatialField, dt: float, order: int = 1, threads: int = 1) -> SpatialField:
    F1, F2 = relax_cells(field, dt, order=order, threads=threads)
    return field.evolve(F1, F2, dt)


def strang_step(field: SpatialField, dt: float, order: int = 1, threads: int = 1) -> SpatialField:
    """transport(dt/2), relaxation(dt), transport(dt/2)."""
    half = transport_step(field, 0.5 * dt)
    F1, F2 = relax_cells(half, dt, order=order, threads=threads)
    mid = SpatialField(F1, F2, field.grid, field.params, field.length, field.bc, half.time)
    out = transport_step(mid, 0.5 * dt)
    return SpatialField(out.F1, out.F2, field.grid, field.params, field.length, field.bc,
                        field.time + dt)


def lie_step(field: SpatialField, dt: float, order: int = 1, threads: int = 1) -> SpatialField:
    """transport(dt) then relaxation(dt); first order, kept for debugging."""
    moved = transport_step(field, dt)
    F1, F2 = relax_cells(moved, dt, order=order, threads=threads)
    return moved.evolve(F1, F2, 0.0)


# -- diagnostics -------------------------------------------------------------

@dataclass
class Totals:
    """Spatial integrals of the conserved quantities and of H."""

    mass1: float
    mass2: float
    momentum: np.ndarray
    energy: float
    H: float


def totals(field: SpatialField) -> Totals:
    g, p, dx = field.grid, field.params, field.dx
    n1, P1, E1 = batch_conserved(field.F1, p.m1, g)
    n2, P2, E2 = batch_conserved(field.F2, p.m2, g)
    H = batch_h(field.F1, g) + batch_h(field.F2, g)
    return Totals(
        mass1=float(psum(n1) * dx),
        mass2=float(psum(n2) * dx),
        momentum=np.array([psum(P1[:, k] + P2[:, k]) for k in range(3)]) * dx,
        energy=float(psum(E1 + E2) * dx),
        H=float(psum(H) * dx),
    )


def cell_moments(field: SpatialField) -> dict[str, np.ndarray]:
    n1, u1, T1 = batch_moments(field.F1, field.params.m1, field.grid)
    n2, u2, T2 = batch_moments(field.F2, field.params.m2, field.grid)
    return {
        "x": field.x, "n1": n1, "u1x": u1[:, 0], "u1y": u1[:, 1], "u1z": u1[:, 2], "T1": T1,
        "n2": n2, "u2x": u2[:, 0], "u2y": u2[:, 1], "u2z": u2[:, 2], "T2": T2,
    }


def write_moments_csv(path, field: SpatialField) -> None:
    cols = cell_moments(field)
    names = list(cols)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(field.cells):
            w.writerow([f"{cols[k][i]:.17g}" for k in names])


@dataclass
class EntropyBudget:
    """Per-step change of the total H; ``flagged`` lists steps where it grew."""

    times: np.ndarray
    H: np.ndarray
    dH: np.ndarray
    flagged: list[int]
    asserted: bool

    @property
    def max_increase(self) -> float:
        return float(self.dH.max()) if self.dH.size else 0.0


def entropy_budget(series: list[Totals] | list[SpatialField], times=None,
                   tol: float = H_INCREASE_TOL, bc: str = "periodic") -> EntropyBudget:
    """Report ``H(t_{n+1}) - H(t_n)`` and flag increases above ``tol``.

    The decrease of H is only asserted for periodic boundaries; with outflow
    the boundary flux enters the budget and the result is informational.
    """
    if series and isinstance(series[0], SpatialField):
        times = np.array([f.time for f in series])
        bc = series[0].bc
        series = [totals(f) for f in series]
    H = np.array([s.H for s in series])
    times = np.arange(len(H), dtype=float) if times is None else np.asarray(times, dtype=float)
    dH = np.diff(H)
    flagged = [int(k) + 1 for k in np.nonzero(dH > tol)[0]]
    return EntropyBudget(times, H, dH, flagged, asserted=(bc == "periodic"))


BUDGET_COLUMNS = ("step", "t", "mass1", "mass2", "P_total_x", "P_total_y", "P_total_z",
                  "E_total", "H", "dH", "H_increase_flag")


@dataclass
class TransportRun:
    final: SpatialField
    totals: list[Totals] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    min_value: float = np.inf

    def budget(self) -> EntropyBudget:
        return entropy_budget(self.totals, self.times, bc=self.final.bc)

    def write_budget_csv(self, path) -> None:
        b = self.budget()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(BUDGET_COLUMNS)
            for k, (t, tot) in enumerate(zip(self.times, self.totals)):
                dH = b.dH[k - 1] if k > 0 else 0.0
                row = [t, tot.mass1, tot.mass2, *tot.momentum, tot.energy, tot.H, dH]
                w.writerow([k] + [f"{x:.17g}" for x in row] + [int(k in b.flagged)])


def run_transport(field: SpatialField, dt: float, steps: int, splitting: str = "strang",
                  order: int = 1, threads: int = 1, snapshot_every: int = 0,
                  on_snapshot=None) -> TransportRun:
    """Advance ``steps`` split steps, recording totals after every step."""
    stepper = {"strang": strang_step, "lie": lie_step}.get(splitting)
    if stepper is None:
        raise ValueError(f"unknown splitting {splitting!r}")
    out = TransportRun(field)
    out.totals.append(totals(field))
    out.times.append(field.time)
    out.min_value = min(field.F1.min(), field.F2.min())
    if on_snapshot is not None and snapshot_every:
        on_snapshot(0, field)
    for k in range(1, steps + 1):
        field = stepper(field, dt, order=order, threads=threads)
        out.totals.append(totals(field))
        out.times.append(field.time)
        out.min_value = min(out.min_value, field.F1.min(), field.F2.min())
        if on_snapshot is not None and snapshot_every and k % snapshot_every == 0:
            on_snapshot(k, field)
    out.final = field
    return out
