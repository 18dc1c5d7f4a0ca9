"""Minimal 1D ideal-MHD finite-volume solver (Rusanov flux).

Conservative variables per cell: ``n``, momentum ``n u`` (3), total energy
``E = n|u|^2/2 + p/(gamma-1) + |B|^2/2`` and the transverse field
``(B_y, B_z)``. ``B_x`` is a single constant, so ``div B = 0`` holds exactly.
Units are those of the ideal MHD limit (C1 = 1, C2 C5 = 1): no 4 pi or mu0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

GAMMA = 5.0 / 3.0
CFL_MAX = 0.45


class MhdStepError(ArithmeticError):
    def __init__(self, message: str, cell: int):
        super().__init__(f"{message} in cell {cell}")
        self.cell = cell


@dataclass(frozen=True, eq=False)
class MhdState:
    """Conservative state; ``U`` has shape ``(7, N)`` ordered n, mx, my, mz, E, By, Bz."""

    U: np.ndarray
    Bx: float
    dx: float
    bc: str = "periodic"
    time: float = 0.0
    gamma: float = GAMMA

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        if U.ndim != 2 or U.shape[0] != 7:
            raise ValueError("U must have shape (7, N)")
        if self.bc not in ("periodic", "outflow"):
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        object.__setattr__(self, "U", U)

    @classmethod
    def from_primitive(cls, n, u, p, B, dx, bc="periodic", gamma=GAMMA) -> "MhdState":
        """Build from density, velocity ``(3, N)``, pressure and field ``(3, N)``."""
        n = np.asarray(n, dtype=float)
        u = np.asarray(u, dtype=float)
        B = np.asarray(B, dtype=float)
        if not np.all(B[0] == B[0].flat[0]):
            raise ValueError("B_x must be spatially constant")
        E = 0.5 * n * np.sum(u * u, axis=0) + np.asarray(p) / (gamma - 1.0) \
            + 0.5 * np.sum(B * B, axis=0)
        U = np.vstack([n, n * u, E, B[1], B[2]])
        return cls(U, float(B[0].flat[0]), dx, bc, 0.0, gamma)

    @property
    def cells(self) -> int:
        return self.U.shape[1]

    def primitive(self):
        """``(n, u, p, B)`` with ``u`` and ``B`` of shape ``(3, N)``."""
        return _primitive(self.U, self.Bx, self.gamma)

    def totals(self) -> np.ndarray:
        return np.sum(self.U, axis=1) * self.dx


def _primitive(U, Bx, gamma):
    n = U[0]
    u = U[1:4] / n
    B = np.vstack([np.full(U.shape[1], Bx), U[5], U[6]])
    p = (gamma - 1.0) * (U[4] - 0.5 * n * np.sum(u * u, axis=0) - 0.5 * np.sum(B * B, axis=0))
    return n, u, p, B


def fast_speed(n, p, B, gamma=GAMMA):
    """Fast magnetosonic speed along x."""
    a2 = gamma * p / n
    b2 = np.sum(B * B, axis=0) / n
    bx2 = B[0] ** 2 / n
    disc = np.sqrt(np.maximum((a2 + b2) ** 2 - 4.0 * a2 * bx2, 0.0))
    return np.sqrt(0.5 * (a2 + b2 + disc))


def physical_flux(U, Bx, gamma):
    n, u, p, B = _primitive(U, Bx, gamma)
    ux = u[0]
    ptot = p + 0.5 * np.sum(B * B, axis=0)
    uB = np.sum(u * B, axis=0)
    F = np.empty_like(U)
    F[0] = n * ux
    F[1:4] = n * u * ux - Bx * B
    F[1] += ptot
    F[4] = (U[4] + ptot) * ux - Bx * uB
    F[5] = B[1] * ux - u[1] * Bx
    F[6] = B[2] * ux - u[2] * Bx
    return F


def max_speed(state: MhdState) -> float:
    n, u, p, B = state.primitive()
    return float(np.max(np.abs(u[0]) + fast_speed(n, p, B, state.gamma)))


def stable_dt(state: MhdState, cfl: float = CFL_MAX) -> float:
    return cfl * state.dx / max_speed(state)


def _check(U, Bx, gamma, what):
    n, _, p, _ = _primitive(U, Bx, gamma)
    bad = np.nonzero(~(n > 0))[0]
    if bad.size:
        raise MhdStepError(f"non-positive density {what}", int(bad[0]))
    bad = np.nonzero(~(p > 0))[0]
    if bad.size:
        raise MhdStepError(f"non-positive pressure {what}", int(bad[0]))


def mhd_step(state: MhdState, dt: float) -> MhdState:
    """One forward-Euler Rusanov step."""
    U, Bx, g = state.U, state.Bx, state.gamma
    _check(U, Bx, g, "before step")
    n, u, p, B = _primitive(U, Bx, g)
    s = np.abs(u[0]) + fast_speed(n, p, B, g)
    cfl = dt * float(np.max(s)) / state.dx
    if cfl > CFL_MAX + 1e-12:
        raise ValueError(f"CFL number {cfl:.4f} exceeds {CFL_MAX}")
    if state.bc == "periodic":
        UL, UR = U, np.roll(U, -1, axis=1)
        sL, sR = s, np.roll(s, -1)
    else:
        Ug = np.concatenate([U[:, :1], U, U[:, -1:]], axis=1)
        sg = np.concatenate([s[:1], s, s[-1:]])
        UL, UR = Ug[:, :-1], Ug[:, 1:]
        sL, sR = sg[:-1], sg[1:]
    # Interface k sits between UL[:, k] and UR[:, k].
    smax = np.maximum(sL, sR)
    F = 0.5 * (physical_flux(UL, Bx, g) + physical_flux(UR, Bx, g)) - 0.5 * smax * (UR - UL)
    if state.bc == "periodic":
        dF = F - np.roll(F, 1, axis=1)
    else:
        dF = F[:, 1:] - F[:, :-1]
    Unew = U - dt / state.dx * dF
    _check(Unew, Bx, g, "after step")
    return MhdState(Unew, Bx, state.dx, state.bc, state.time + dt, g)


def mirror(state: MhdState) -> MhdState:
    """Reflection ``x -> -x``: reverses cells and flips ``u_x``, ``B_y``, ``B_z``."""
    U = state.U[:, ::-1].copy()
    U[1] = -U[1]
    U[5] = -U[5]
    U[6] = -U[6]
    return MhdState(U, state.Bx, state.dx, state.bc, state.time, state.gamma)


def riemann_state(N: int, left: dict, right: dict, Bx: float, length: float = 1.0,
                  bc: str = "outflow", gamma: float = GAMMA) -> MhdState:
    """Piecewise constant data with the jump at ``x = length / 2``.

    ``left``/``right`` hold ``n, p`` and optionally ``u`` (3-vector), ``By``, ``Bz``.
    """
    dx = length / N
    x = (np.arange(N) + 0.5) * dx
    lhs = x < 0.5 * length

    def pick(key, default):
        a = np.asarray(left.get(key, default), dtype=float)
        b = np.asarray(right.get(key, default), dtype=float)
        if a.ndim:
            return np.where(lhs[None, :], a[:, None], b[:, None])
        return np.where(lhs, a, b)

    n = pick("n", 1.0)
    p = pick("p", 1.0)
    u = pick("u", [0.0, 0.0, 0.0])
    B = np.vstack([np.full(N, Bx), pick("By", 0.0), pick("Bz", 0.0)])
    return MhdState.from_primitive(n, u, p, B, dx, bc, gamma)


def write_snapshot_csv(path, state: MhdState) -> None:
    n, u, p, B = state.primitive()
    x = (np.arange(state.cells) + 0.5) * state.dx
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "n", "ux", "uy", "uz", "p", "Bx", "By", "Bz", "E_total"])
        for i in range(state.cells):
            row = [x[i], n[i], u[0, i], u[1, i], u[2, i], p[i], B[0, i], B[1, i], B[2, i],
                   state.U[4, i]]
            w.writerow([f"{v:.17g}" for v in row])
