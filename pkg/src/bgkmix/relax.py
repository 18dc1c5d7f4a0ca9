"""Space-homogeneous relaxation of the two-species BGK system.

The exponential scheme freezes the collision rates and the four attractors at
the start of a step and integrates ``df/dt = -lam f + lam G`` exactly. A single
rate ``lam = max(lam_1, lam_2)`` is used for both species, with the surplus
``(lam - lam_k) f_k`` folded into ``G_k``. Then every update is
``f + phi * rhs(f)`` with the same ``phi`` for both species, so the discrete
exchange terms cancel and momentum and energy are conserved to roundoff, while
``G_k`` stays a nonnegative combination and positivity holds for any dt.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import (
    Attractors,
    Distribution,
    VelocityGrid,
    batch_attractors,
    batch_conserved,
    batch_entropy_production,
    batch_h,
    batch_maxwellian_discrete,
    batch_moments,
    build_grid,
    psum,
)
from .params import MixtureParams, SpeciesMoments

log = logging.getLogger(__name__)

POSITIVITY_TOL = 1e-12
RK4_STABILITY = 2.7
EQUILIBRIUM_S = 1e-12
EQUILIBRIUM_STEPS = 10


class PositivityLossWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class KineticState:
    f1: Distribution
    f2: Distribution
    grid: VelocityGrid
    params: MixtureParams
    time: float = 0.0

    def __post_init__(self):
        n = self.grid.size
        if self.f1.values.size != n or self.f2.values.size != n:
            raise ValueError("distributions do not match the velocity grid")

    @classmethod
    def from_arrays(cls, F1, F2, grid, params, time=0.0) -> "KineticState":
        return cls(Distribution(F1, params.m1), Distribution(F2, params.m2), grid, params, time)

    def moments(self) -> tuple[SpeciesMoments, SpeciesMoments]:
        out = []
        for f, m in ((self.f1, self.params.m1), (self.f2, self.params.m2)):
            n, u, T = batch_moments(f.values, m, self.grid)
            out.append(SpeciesMoments(float(n[0]), u[0], float(T[0])))
        return out[0], out[1]


def maxwellian_state(mom1: SpeciesMoments, mom2: SpeciesMoments, grid: VelocityGrid,
                     params: MixtureParams) -> KineticState:
    """Both species initialised as moment-matched Maxwellians."""
    F1 = batch_maxwellian_discrete(mom1.n, mom1.u, mom1.T, params.m1, grid).values[0]
    F2 = batch_maxwellian_discrete(mom2.n, mom2.u, mom2.T, params.m2, grid).values[0]
    return KineticState.from_arrays(F1, F2, grid, params)


# -- batched kernels ---------------------------------------------------------

def relaxation_rates(att: Attractors, params: MixtureParams):
    """Total relaxation rates ``lam_1 = nu11 n1 + nu12 n2`` and ``lam_2 = nu22 n2 + nu21 n1``."""
    lam1 = params.nu11 * att.n1 + params.nu12 * att.n2
    lam2 = params.nu22 * att.n2 + params.nu21 * att.n1
    return lam1, lam2


def batch_rhs(F1, F2, grid: VelocityGrid, params: MixtureParams, att: Attractors | None = None):
    """BGK right-hand sides for a batch of cells; returns ``(R1, R2, att)``."""
    if att is None:
        att = batch_attractors(F1, F2, grid, params)
    p = params
    n1 = att.n1[:, None]
    n2 = att.n2[:, None]
    R1 = p.nu11 * n1 * (att.M1 - F1) + p.nu12 * n2 * (att.M12 - F1)
    R2 = p.nu22 * n2 * (att.M2 - F2) + p.nu21 * n1 * (att.M21 - F2)
    return R1, R2, att


def _targets(F1, F2, att: Attractors, params: MixtureParams, lam):
    """Frozen attractors ``G_k``, nonnegative combinations of M_k, M_kl and f_k."""
    p = params
    lam1, lam2 = relaxation_rates(att, p)
    safe = np.where(lam > 0, lam, 1.0)[:, None]
    n1 = att.n1[:, None]
    n2 = att.n2[:, None]
    G1 = (p.nu11 * n1 * att.M1 + p.nu12 * n2 * att.M12 + (lam - lam1)[:, None] * F1) / safe
    G2 = (p.nu22 * n2 * att.M2 + p.nu21 * n1 * att.M21 + (lam - lam2)[:, None] * F2) / safe
    return G1, G2


def batch_exponential(F1, F2, grid: VelocityGrid, params: MixtureParams, dt: float,
                      order: int = 1, att: Attractors | None = None):
    """One exponential relaxation step for every cell; returns ``(F1, F2, att)``.

    ``order=2`` adds an exponential predictor-corrector stage whose weights
    are both nonnegative, so positivity and conservation carry over.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    F1 = np.atleast_2d(F1)
    F2 = np.atleast_2d(F2)
    if att is None:
        att = batch_attractors(F1, F2, grid, params)
    lam = np.maximum(*relaxation_rates(att, params))
    x = lam * dt
    e = np.exp(-x)[:, None]
    G1, G2 = _targets(F1, F2, att, params, lam)
    P1 = e * F1 + (1.0 - e) * G1
    P2 = e * F2 + (1.0 - e) * G2
    if order == 1:
        return P1, P2, att
    if order != 2:
        raise ValueError("order must be 1 or 2")
    # G interpolated linearly over the step; phi = (1 - e^-x) / x.
    phi = np.where(x > 1e-8, -np.expm1(-x) / np.where(x > 0, x, 1.0), 1.0 - 0.5 * x)[:, None]
    w0 = np.maximum(phi - e, 0.0)
    w1 = 1.0 - phi
    att2 = batch_attractors(P1, P2, grid, params)
    H1, H2 = _targets(P1, P2, att2, params, lam)
    return e * F1 + w0 * G1 + w1 * H1, e * F2 + w0 * G2 + w1 * H2, att


# -- single-state operations -------------------------------------------------

def rhs(state: KineticState):
    """``(df1/dt, df2/dt)`` of the space-homogeneous system."""
    R1, R2, _ = batch_rhs(state.f1.values[None], state.f2.values[None], state.grid, state.params)
    return R1[0], R2[0]


def step_exponential(state: KineticState, dt: float, order: int = 1) -> KineticState:
    F1, F2, _ = batch_exponential(state.f1.values[None], state.f2.values[None], state.grid,
                                  state.params, dt, order=order)
    return KineticState.from_arrays(F1[0], F2[0], state.grid, state.params, state.time + dt)


def max_rate(state: KineticState) -> float:
    p = state.params
    n1 = float(psum(state.f1.values * state.grid.weights))
    n2 = float(psum(state.f2.values * state.grid.weights))
    return max(p.nu11 * n1 + p.nu12 * n2, p.nu22 * n2 + p.nu21 * n1)


def step_rk4(state: KineticState, dt: float) -> KineticState:
    """Classical Runge-Kutta step, used as a reference integrator.

    Warns when a node drops below ``-1e-12``. Negative values are kept as
    they are; the next attractor fit may then fail.
    """
    lam = max_rate(state)
    if lam > 0 and dt > RK4_STABILITY / lam:
        raise ValueError(f"dt={dt} exceeds the RK4 stability bound {RK4_STABILITY / lam:.3e}")
    g, p = state.grid, state.params
    F1 = state.f1.values[None]
    F2 = state.f2.values[None]
    k1 = batch_rhs(F1, F2, g, p)
    k2 = batch_rhs(F1 + 0.5 * dt * k1[0], F2 + 0.5 * dt * k1[1], g, p)
    k3 = batch_rhs(F1 + 0.5 * dt * k2[0], F2 + 0.5 * dt * k2[1], g, p)
    k4 = batch_rhs(F1 + dt * k3[0], F2 + dt * k3[1], g, p)
    G1 = F1 + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    G2 = F2 + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    low = min(G1.min(), G2.min())
    if low < -POSITIVITY_TOL:
        warnings.warn(f"RK4 step produced f = {low:.3e} < 0 at t = {state.time + dt:.6g}",
                      PositivityLossWarning, stacklevel=2)
    return KineticState(Distribution(G1[0], p.m1), Distribution(G2[0], p.m2), g, p,
                        state.time + dt)


def equilibrium_moments(initial: tuple[SpeciesMoments, SpeciesMoments],
                        params: MixtureParams):
    """Common velocity and temperature fixed by the conserved totals."""
    a, b = initial
    m1, m2 = params.m1, params.m2
    rho = m1 * a.n + m2 * b.n
    ntot = a.n + b.n
    if ntot <= 0:
        raise ValueError("total density must be positive")
    u = (m1 * a.n * np.asarray(a.u) + m2 * b.n * np.asarray(b.u)) / rho
    energy = sum(1.5 * s.n * s.T + 0.5 * m * s.n * float(np.dot(s.u, s.u))
                 for s, m in ((a, m1), (b, m2)))
    T = (energy - 0.5 * rho * float(np.dot(u, u))) / (1.5 * ntot)
    assert T > 0, "equilibrium temperature must be positive for admissible inputs"
    return u, T


def default_dt(state: KineticState) -> float:
    lam = max_rate(state)
    if lam <= 0:
        raise ValueError("all collision rates vanish; give dt explicitly")
    return 0.1 / lam


def relaxation_grid(mom1: SpeciesMoments, mom2: SpeciesMoments, params: MixtureParams,
                    nodes=24, radius: float = 6.0) -> VelocityGrid:
    """Box covering both initial states and the common equilibrium of either species."""
    u, T = equilibrium_moments((mom1, mom2), params)
    eq = SpeciesMoments(1.0, u, T)
    return build_grid([mom1, mom2, eq, eq], [params.m1, params.m2, params.m1, params.m2],
                      nodes=nodes, radius=radius)


# -- time series -------------------------------------------------------------

SERIES_COLUMNS = (
    "t", "n1", "u1x", "u1y", "u1z", "T1", "n2", "u2x", "u2y", "u2z", "T2",
    "P_total_x", "P_total_y", "P_total_z", "E_total", "H", "S_prod", "dist1", "dist2",
)


@dataclass
class TimeSeries:
    rows: list[list[float]] = field(default_factory=list)
    final_state: KineticState | None = None
    equilibrium_step: int | None = None
    warnings: list[str] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        k = SERIES_COLUMNS.index(name)
        return np.array([r[k] for r in self.rows])

    def __len__(self) -> int:
        return len(self.rows)

    def write_csv(self, path, every: int = 1) -> None:
        """Write every ``every``-th row; the last row is always included."""
        last = len(self.rows) - 1
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SERIES_COLUMNS)
            for k, r in enumerate(self.rows):
                if k % every == 0 or k == last:
                    w.writerow([f"{x:.17g}" for x in r])


def momentum_scale(F1, F2, grid: VelocityGrid, params: MixtureParams) -> float:
    """``sum_k m_k n_k (|u_k| + sqrt(T_k/m_k))``, a size for momentum drifts."""
    total = 0.0
    for F, m in ((F1, params.m1), (F2, params.m2)):
        n, u, T = batch_moments(np.atleast_2d(F), m, grid)
        total += float(np.sum(m * n * (np.linalg.norm(u, axis=-1) + np.sqrt(T / m))))
    return total


def _row(t, F1, F2, grid, params, att, eq1, eq2, S) -> list[float]:
    _, P1, E1 = batch_conserved(F1, params.m1, grid)
    _, P2, E2 = batch_conserved(F2, params.m2, grid)
    H = float(np.sum(batch_h(F1, grid)) + np.sum(batch_h(F2, grid)))
    d1 = float(psum(np.abs(F1[0] - eq1) * grid.weights))
    d2 = float(psum(np.abs(F2[0] - eq2) * grid.weights))
    return [t, float(att.n1[0]), *att.u1[0], float(att.T1[0]),
            float(att.n2[0]), *att.u2[0], float(att.T2[0]),
            *(P1[0] + P2[0]), float(E1[0] + E2[0]), H, S, d1, d2]


def run(state: KineticState, dt: float | None = None, steps: int = 100,
        scheme: str = "exponential", order: int = 1, stop_at_equilibrium: bool = False,
        callback: Callable[[int, KineticState], None] | None = None) -> TimeSeries:
    """Advance ``steps`` steps and record one row per state (including the initial one).

    The reference Maxwellians for ``dist1``/``dist2`` are the moment-matched
    Maxwellians at the predicted common equilibrium. With
    ``stop_at_equilibrium`` the run ends once ``|S| < 1e-12`` for ten
    consecutive states.
    """
    grid, params = state.grid, state.params
    if dt is None:
        dt = default_dt(state)
    mom1, mom2 = state.moments()
    u_inf, T_inf = equilibrium_moments((mom1, mom2), params)
    eq1 = batch_maxwellian_discrete(mom1.n, u_inf, T_inf, params.m1, grid).values[0]
    eq2 = batch_maxwellian_discrete(mom2.n, u_inf, T_inf, params.m2, grid).values[0]

    series = TimeSeries()
    F1 = state.f1.values[None].copy()
    F2 = state.f2.values[None].copy()
    t = state.time
    quiet = 0
    for k in range(steps + 1):
        att = batch_attractors(F1, F2, grid, params)
        S = float(batch_entropy_production(F1, F2, grid, params, att=att)[0])
        series.rows.append(_row(t, F1, F2, grid, params, att, eq1, eq2, S))
        quiet = quiet + 1 if abs(S) < EQUILIBRIUM_S else 0
        if quiet >= EQUILIBRIUM_STEPS and series.equilibrium_step is None:
            series.equilibrium_step = k
            if stop_at_equilibrium:
                break
        if k == steps:
            break
        if scheme == "exponential":
            F1, F2, _ = batch_exponential(F1, F2, grid, params, dt, order=order, att=att)
        elif scheme == "rk4":
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", PositivityLossWarning)
                nxt = step_rk4(KineticState.from_arrays(F1[0], F2[0], grid, params, t), dt)
            series.warnings.extend(str(w.message) for w in caught)
            F1, F2 = nxt.f1.values[None], nxt.f2.values[None]
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
        t = state.time + (k + 1) * dt
        if callback is not None:
            callback(k + 1, KineticState.from_arrays(F1[0], F2[0], grid, params, t))
    series.final_state = KineticState.from_arrays(F1[0], F2[0], grid, params, t)
    return series
