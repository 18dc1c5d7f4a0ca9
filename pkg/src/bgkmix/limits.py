"""Residual checks of the two-fluid -> MHD limit systems on 1D manufactured fields.

Fields depend on x only (plus time), so with the derivative ``D = d/dx``:

* gradient of a scalar ``s`` is ``(D s, 0, 0)``;
* curl of a vector ``F`` is ``(0, -D F_z, D F_y)``;
* divergence of a tensor is taken over its second index,
  ``(div T)_i = D T_ix``, which turns ``div(B u - u B)`` into
  ``D(B_i u_x - u_i B_x)``.

Spatial derivatives use 4th-order central differences, periodic or on the
interior only. Time derivatives are supplied analytically with the fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .twofluid import DimensionlessConstants

SYSTEMS = ("thm41", "thm42", "thm43")
STENCIL_MIN = 5


class StencilError(ValueError):
    pass


def d4(f: np.ndarray, h: float, periodic: bool = True) -> np.ndarray:
    """4th-order central first derivative along the last axis.

    Without periodicity the two points at each end are NaN and are left out
    of residual norms.
    """
    if f.shape[-1] < STENCIL_MIN:
        raise StencilError(f"need at least {STENCIL_MIN} points, got {f.shape[-1]}")
    if periodic:
        r = lambda s: np.roll(f, -s, axis=-1)  # noqa: E731
        return (-r(2) + 8.0 * r(1) - 8.0 * r(-1) + r(-2)) / (12.0 * h)
    out = np.full(f.shape, np.nan)
    out[..., 2:-2] = (-f[..., 4:] + 8.0 * f[..., 3:-1] - 8.0 * f[..., 1:-3] + f[..., :-4]) / (12.0 * h)
    return out


def d2(f: np.ndarray, h: float, periodic: bool = True) -> np.ndarray:
    """2nd-order central first derivative along the last axis."""
    if periodic:
        return (np.roll(f, -1, axis=-1) - np.roll(f, 1, axis=-1)) / (2.0 * h)
    out = np.full(f.shape, np.nan)
    out[..., 1:-1] = (f[..., 2:] - f[..., :-2]) / (2.0 * h)
    return out


@dataclass
class FieldSet:
    """Fields on a 1D grid; vectors have shape ``(3, N)``.

    ``T`` is the total temperature ``T_i + T_e``; ``Te`` the electron part.
    Time derivatives ``dn, du, dT, dTe, dB`` are analytic.
    """

    x: np.ndarray
    n: np.ndarray
    u: np.ndarray
    T: np.ndarray
    Te: np.ndarray
    E: np.ndarray
    B: np.ndarray
    j: np.ndarray
    dn: np.ndarray
    du: np.ndarray
    dT: np.ndarray
    dTe: np.ndarray
    dB: np.ndarray
    nu_ei: float = 1.0
    ue: np.ndarray | None = None
    periodic: bool = True

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def Ti(self) -> np.ndarray:
        return self.T - self.Te

    @property
    def p(self) -> np.ndarray:
        return self.n * self.T


def _norm(r) -> float:
    r = np.asarray(r, dtype=float)
    return float(np.nanmax(np.abs(r))) if r.size else 0.0


def _cross(a, b):
    return np.cross(a, b, axis=0)


def _dot(a, b):
    return np.sum(a * b, axis=0)


def _curl(F, h, periodic):
    out = np.zeros_like(F)
    out[1] = -d4(F[2], h, periodic)
    out[2] = d4(F[1], h, periodic)
    return out


def _grad(s, h, periodic):
    out = np.zeros((3,) + s.shape)
    out[0] = d4(s, h, periodic)
    return out


def _common(f: FieldSet, c: DimensionlessConstants):
    """Pieces shared by the two intermediate systems."""
    h, per = f.h, f.periodic
    n, u = f.n, f.u
    dnu = f.dn * u + n * f.du
    dkin = 0.5 * f.dn * _dot(u, u) + n * _dot(u, f.du)
    dnT = f.dn * f.T + n * f.dT
    out = {}
    out["mass"] = f.dn + d4(n * u[0], h, per)
    mom = (dnu + c.C1 * _grad(n * f.T, h, per) + d4(n * u * u[0], h, per)
           - c.C2 * c.C5 * _cross(f.j, f.B))
    for k, a in enumerate("xyz"):
        out[f"momentum_{a}"] = mom[k]
    out["faraday"] = f.dB + _curl(f.E, h, per)
    out["div_B"] = d4(f.B[0], h, per)
    amp = _curl(f.B, h, per) - f.j
    out["ampere"] = amp
    return out, dnu, dkin, dnT


def _residual_thm41(f: FieldSet, c: DimensionlessConstants) -> dict:
    h, per = f.h, f.periodic
    n, u, j, B, E = f.n, f.u, f.j, f.B, f.E
    out, dnu, dkin, dnT = _common(f, c)
    out["energy"] = (c.C1 * 1.5 * dnT + dkin
                     + c.C1 * d4(2.5 * n * u[0] * (f.Te - f.Ti), h, per)
                     - c.C1 * c.C5 * d4(2.5 * f.T * j[0], h, per)
                     + d4(0.5 * n * _dot(u, u) * u[0], h, per)
                     - c.C2 * c.C5 * _dot(E, j))
    r = c.C3 / c.C2
    ohm = (r * c.C1 * _grad(n * f.Te, h, per) + c.C3 * n * (E + _cross(u, B))
           - c.C3 * c.C5 * _cross(j, B) - c.C3**2 / c.C2 * c.C5 * f.nu_ei * n * j)
    out["ohm"] = ohm
    dnTe = f.dn * f.Te + n * f.dTe
    out["electron_energy"] = (
        r * c.C1 * 1.5 * dnTe + r * c.C1 * d4(2.5 * n * f.Te * u[0], h, per)
        - r * c.C1 * c.C5 * d4(2.5 * f.Te * j[0], h, per)
        + c.C3 * _dot(E, n * u - c.C5 * j)
        - c.C3**2 / c.C2 * c.C5 * f.nu_ei * n * _dot(j, u)
        + c.C3**2 / c.C2 * c.C5**2 * 0.5 * f.nu_ei * _dot(j, j)
        - r * c.C3 * c.C1 * f.nu_ei * 1.5 * n * n * (f.Ti - f.Te))
    if f.ue is not None:
        out["current"] = c.C5 * j - n * (u - f.ue)
    return out


def _residual_thm42(f: FieldSet, c: DimensionlessConstants) -> dict:
    h, per = f.h, f.periodic
    n, u, j, B, E = f.n, f.u, f.j, f.B, f.E
    out, dnu, dkin, dnT = _common(f, c)
    out["energy"] = (c.C1 * 1.5 * dnT + dkin + c.C1 * d4(2.5 * n * f.T * u[0], h, per)
                     + d4(0.5 * n * _dot(u, u) * u[0], h, per) - c.C2 * c.C5 * _dot(E, j))
    out["ohm"] = E + _cross(u, B) - c.C3 * c.C5 / c.C2 * f.nu_ei * j
    # Scalar form of the E.u relation, checked on its own.
    out["ohm_work"] = _dot(E, u) - c.C3**2 * c.C5 / c.C2 * f.nu_ei * _dot(j, u)
    return out


def _residual_thm43(f: FieldSet) -> dict:
    h, per = f.h, f.periodic
    n, u, B = f.n, f.u, f.B
    p = f.p
    dp = f.dn * f.T + n * f.dT
    B2 = _dot(B, B)
    out = {"mass": f.dn + d4(n * u[0], h, per)}
    dnu = f.dn * u + n * f.du
    flux = n * u * u[0] - B * B[0]
    flux[0] += p + 0.5 * B2
    mom = dnu + d4(flux, h, per)
    for k, a in enumerate("xyz"):
        out[f"momentum_{a}"] = mom[k]
    dE = 0.5 * f.dn * _dot(u, u) + n * _dot(u, f.du) + 1.5 * dp + _dot(B, f.dB)
    eflux = (0.5 * n * _dot(u, u) * u[0] + 2.5 * p * u[0] + B2 * u[0] - B[0] * _dot(B, u))
    out["energy"] = dE + d4(eflux, h, per)
    ind = f.dB + d4(B * u[0] - u * B[0], h, per)
    for k, a in enumerate("xyz"):
        out[f"induction_{a}"] = ind[k]
    out["div_B"] = d4(B[0], h, per)
    return out


def limit_residual(system_id: str, fields: FieldSet,
                   constants: DimensionlessConstants | None = None) -> dict[str, float]:
    """Max-norm residual of every equation of a limit system.

    thm43 ignores ``constants`` (it is stated for C1 = 1, C2 C5 = 1); the
    other two default to all constants equal to one.
    """
    if system_id not in SYSTEMS:
        raise ValueError(f"unknown system {system_id!r}; expected one of {SYSTEMS}")
    if fields.n.shape[-1] < STENCIL_MIN:
        raise StencilError(f"grid too coarse for the 5-point stencil ({fields.n.shape[-1]} points)")
    if constants is None:
        constants = DimensionlessConstants(1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    if system_id == "thm43":
        raw = _residual_thm43(fields)
    elif system_id == "thm42":
        raw = _residual_thm42(fields, constants)
    else:
        raw = _residual_thm41(fields, constants)
    return {k: _norm(v) for k, v in raw.items()}


# -- manufactured fields -----------------------------------------------------

def periodic_grid(N: int, length: float = 1.0) -> np.ndarray:
    return np.arange(N) * (length / N)


def constant_fields(N: int, n: float = 1.0, u=(0.0, 0.0, 0.0), T: float = 1.0,
                    Te: float = 0.5, B=(1.0, 0.0, 0.0), length: float = 1.0) -> FieldSet:
    """Uniform state with ``j = 0``, ``E = -u x B`` and zero time derivatives."""
    x = periodic_grid(N, length)
    one = np.ones(N)
    uu = np.outer(u, one)
    BB = np.outer(B, one)
    zero3 = np.zeros((3, N))
    return FieldSet(x, n * one, uu, T * one, Te * one, -np.cross(uu, BB, axis=0), BB, zero3,
                    np.zeros(N), zero3, np.zeros(N), np.zeros(N), zero3.copy())


def alfven_wave(N: int, t: float = 0.0, n0: float = 1.3, B0: float = 0.8, amp: float = 0.4,
                p0: float = 0.9, mode: int = 1, length: float = 1.0) -> FieldSet:
    """Circularly polarised Alfven wave, an exact solution of the ideal MHD system.

    ``n``, ``p``, ``B_x`` are constant, ``u_x = 0``, the transverse field
    rotates as ``amp * (cos phi, sin phi)`` with ``phi = k (x - v_A t)`` and
    ``u_perp = -B_perp / sqrt(n0)``, ``v_A = B0 / sqrt(n0)``. ``E = -u x B``.
    """
    x = periodic_grid(N, length)
    k = 2.0 * np.pi * mode / length
    vA = B0 / np.sqrt(n0)
    phi = k * (x - vA * t)
    B = np.stack([np.full(N, B0), amp * np.cos(phi), amp * np.sin(phi)])
    dB = np.stack([np.zeros(N), amp * k * vA * np.sin(phi), -amp * k * vA * np.cos(phi)])
    u = np.zeros((3, N))
    u[1:] = -B[1:] / np.sqrt(n0)
    du = np.zeros((3, N))
    du[1:] = -dB[1:] / np.sqrt(n0)
    # j = curl B, exact
    j = np.stack([np.zeros(N), -amp * k * np.cos(phi), -amp * k * np.sin(phi)])
    T = np.full(N, p0 / n0)
    return FieldSet(x, np.full(N, n0), u, T, 0.5 * T, -np.cross(u, B, axis=0), B, j,
                    np.zeros(N), du, np.zeros(N), np.zeros(N), dB)


def random_trig_fields(N: int, seed: int = 0, modes: int = 3, length: float = 1.0,
                       div_amplitude: float = 0.0):
    """Random smooth periodic ``u`` and ``B`` on ``N`` points.

    ``B_x`` is constant (divergence free in 1D) unless ``div_amplitude`` adds
    a varying part to it.
    """
    rng = np.random.default_rng(seed)
    x = periodic_grid(N, length)
    kx = 2.0 * np.pi / length

    def series():
        a = rng.normal(size=(modes, 2)) / np.arange(1, modes + 1)[:, None]
        return sum(a[m, 0] * np.cos((m + 1) * kx * x) + a[m, 1] * np.sin((m + 1) * kx * x)
                   for m in range(modes))

    u = np.stack([series() for _ in range(3)])
    B = np.stack([np.full(N, rng.normal()), series(), series()])
    if div_amplitude:
        B[0] += div_amplitude * np.sin(kx * x)
    return x, u, B


@dataclass
class IdentityReport:
    induction: float
    lorentz: float
    div_B: float

    @property
    def max_deviation(self) -> float:
        return max(self.induction, self.lorentz)


def induction_identity_check(u: np.ndarray, B: np.ndarray, h: float,
                             periodic: bool = True) -> IdentityReport:
    """Compare both vector identities used to reach conservation form.

    * ``-curl(u x B)`` in expanded form ``B div u - (B.grad) u + (u.grad) B``
      against the conservative ``div(B u - u B)``;
    * ``(curl B) x B`` against ``-div(|B|^2/2 I - B B)``.

    Both sides use 2nd-order central differences. The deviations are
    truncation errors when ``div B = 0``; otherwise they carry the extra
    terms ``u div B`` and ``B div B``.
    """
    D = lambda f: d2(f, h, periodic)  # noqa: E731
    lhs = B * D(u[0]) - B[0] * D(u) + u[0] * D(B)
    rhs = D(B * u[0] - u * B[0])
    curlB = np.zeros_like(B)
    curlB[1] = -D(B[2])
    curlB[2] = D(B[1])
    lor_l = np.cross(curlB, B, axis=0)
    T = -B * B[0]
    T[0] += 0.5 * np.sum(B * B, axis=0)
    lor_r = -D(T)
    return IdentityReport(_norm(lhs - rhs), _norm(lor_l - lor_r), _norm(D(B[0])))


def convergence_orders(hs, errors) -> np.ndarray:
    """Observed orders ``log(e_k / e_{k+1}) / log(h_k / h_{k+1})``."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    return np.log(errors[:-1] / errors[1:]) / np.log(hs[:-1] / hs[1:])


def thm43_refinement(levels: int = 4, base: int = 32, **wave) -> list[tuple[int, float, dict]]:
    """Residual table of the Alfven-wave solution under grid doubling."""
    rows = []
    for k in range(levels):
        N = base * 2**k
        res = limit_residual("thm43", alfven_wave(N, **wave))
        rows.append((N, max(res.values()), res))
    return rows
