"""Exchange fluxes, dimensionless constants and two-fluid source terms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import batch_attractors, psum
from .params import (
    MixtureParams,
    SpeciesMoments,
    mixture_velocity_u21,
    t21_velocity_coefficient,
)


@dataclass(frozen=True)
class ExchangeFluxes:
    """Momentum and energy gained by each species through interspecies collisions."""

    momentum_1: np.ndarray
    momentum_2: np.ndarray
    energy_1: float
    energy_2: float

    def momentum_imbalance(self) -> np.ndarray:
        return self.momentum_1 + self.momentum_2

    def energy_imbalance(self) -> float:
        return self.energy_1 + self.energy_2


def exchange_fluxes(mom1: SpeciesMoments, mom2: SpeciesMoments,
                    params: MixtureParams) -> ExchangeFluxes:
    """Closed-form exchange terms, with the energy terms in their expanded form."""
    p = params
    u1 = np.asarray(mom1.u, dtype=float)
    u2 = np.asarray(mom2.u, dtype=float)
    n1, n2 = mom1.n, mom2.n
    T1, T2 = mom1.T, mom2.T
    eps, d, a = p.epsilon, p.delta, p.alpha
    k = p.m1 / p.m2 * eps
    nn = n1 * n2
    u21 = mixture_velocity_u21(u1, u2, p)
    P1 = p.m1 * p.nu12 * nn * (1.0 - d) * (u2 - u1)
    P2 = p.m2 * p.nu21 * nn * (u21 - u2)

    uu1 = float(np.dot(u1, u1))
    uu2 = float(np.dot(u2, u2))
    u12 = float(np.dot(u1, u2))
    du = u1 - u2
    dd = float(np.dot(du, du))
    E1 = (eps * p.nu21 * 0.5 * nn * p.m1
          * ((d * d - 1.0) * uu1 + (1.0 - d) ** 2 * uu2 + 2.0 * d * (1.0 - d) * u12)
          + 1.5 * eps * p.nu21 * nn * ((1.0 - a) * (T2 - T1) + p.gamma * dd))
    s = 1.0 - k * (1.0 - d)
    E2 = (0.5 * p.nu21 * p.m2 * nn
          * ((s * s - 1.0) * uu2 + (k * (d - 1.0)) ** 2 * uu1 + 2.0 * s * k * (1.0 - d) * u12)
          + 1.5 * p.nu21 * nn * (eps * (1.0 - a) * (T1 - T2)
                                  + t21_velocity_coefficient(p) * dd))
    return ExchangeFluxes(P1, P2, float(E1), float(E2))


def flux_scales(mom1: SpeciesMoments, mom2: SpeciesMoments, params: MixtureParams):
    """Magnitudes used to turn flux deviations into relative numbers.

    ``nu n1 n2 (m |u| + sqrt(m T))`` for momentum and ``nu n1 n2 (m |u|^2 + T)``
    for energy, summed over both species, so the ratio stays meaningful when
    the fluxes themselves vanish.
    """
    p = params
    nu = max(p.nu12, p.nu21, 1e-300)
    nn = mom1.n * mom2.n
    mom = sum(m * float(np.linalg.norm(s.u)) + math.sqrt(m * s.T)
              for s, m in ((mom1, p.m1), (mom2, p.m2)))
    en = sum(m * float(np.dot(s.u, s.u)) + s.T for s, m in ((mom1, p.m1), (mom2, p.m2)))
    return nu * nn * mom, nu * nn * en


@dataclass
class FluxConsistency:
    quadrature: ExchangeFluxes
    closed_form: ExchangeFluxes
    momentum_deviation: float
    energy_deviation: float

    @property
    def max_deviation(self) -> float:
        return max(self.momentum_deviation, self.energy_deviation)


def kinetic_flux_consistency(state, kind: str = "discrete") -> FluxConsistency:
    """Quadrature of ``m v`` and ``m |v|^2 / 2`` against the BGK operators vs closed forms.

    Deviations are relative to :func:`flux_scales`. ``kind="continuous"``
    samples the attractors pointwise instead of matching their moments.
    """
    g, p = state.grid, state.params
    F1 = state.f1.values[None]
    F2 = state.f2.values[None]
    att = batch_attractors(F1, F2, g, p, kind=kind)
    n1 = att.n1[:, None]
    n2 = att.n2[:, None]
    Q1 = p.nu11 * n1 * (att.M1 - F1) + p.nu12 * n2 * (att.M12 - F1)
    Q2 = p.nu22 * n2 * (att.M2 - F2) + p.nu21 * n1 * (att.M21 - F2)
    w = g.weights

    def moments_of(Q, m):
        mom = np.array([m * float(psum(Q[0] * g.v[k] * w)) for k in range(3)])
        en = 0.5 * m * float(psum(Q[0] * g.v2 * w))
        return mom, en

    P1, E1 = moments_of(Q1, p.m1)
    P2, E2 = moments_of(Q2, p.m2)
    quad = ExchangeFluxes(P1, P2, E1, E2)
    mom1 = SpeciesMoments(float(att.n1[0]), att.u1[0], float(att.T1[0]))
    mom2 = SpeciesMoments(float(att.n2[0]), att.u2[0], float(att.T2[0]))
    closed = exchange_fluxes(mom1, mom2, p)
    sm, se = flux_scales(mom1, mom2, p)
    dm = max(float(np.max(np.abs(quad.momentum_1 - closed.momentum_1))),
             float(np.max(np.abs(quad.momentum_2 - closed.momentum_2))))
    de = max(abs(quad.energy_1 - closed.energy_1), abs(quad.energy_2 - closed.energy_2))
    return FluxConsistency(quad, closed, dm / sm, de / se)


# -- nondimensionalisation ---------------------------------------------------

@dataclass(frozen=True)
class DimensionlessConstants:
    C1: float
    C2: float
    C3: float
    C4: float
    C5: float
    M: float
    warnings: tuple[str, ...] = field(default=(), compare=False)


SCALE_KEYS = ("n", "T", "u", "x", "t", "B", "j", "nu_ie", "m_i", "m_e", "e", "c")
SCALE_TOL = 1e-9


def dimensionless_constants(scales: dict) -> DimensionlessConstants:
    """C1..C5 and M from typical scales.

    Required keys: ``n, T, u, x, t, B, j, nu_ie, m_i, m_e, e, c``. Optional
    ``E`` and ``mu0`` enable the checks ``E = B u`` and ``B = mu0 x j``; the
    check ``u = x / t`` always runs. Failed checks end up in ``warnings``.
    """
    missing = [k for k in SCALE_KEYS if k not in scales]
    if missing:
        raise KeyError(f"missing scales: {', '.join(missing)}")
    s = {k: float(v) for k, v in scales.items()}
    bad = [k for k, v in s.items() if not v > 0]
    if bad:
        raise ValueError(f"scales must be positive: {', '.join(bad)}")
    notes = []

    def check(name, got, want):
        if abs(got - want) > SCALE_TOL * max(abs(got), abs(want)):
            notes.append(f"{name}: {got:.6g} != {want:.6g}")

    check("u = x/t", s["u"], s["x"] / s["t"])
    if "E" in s:
        check("E = B u", s["E"], s["B"] * s["u"])
    if "mu0" in s:
        check("B = mu0 x j", s["B"], s["mu0"] * s["x"] * s["j"])
    return DimensionlessConstants(
        C1=s["n"] * s["T"] / (s["m_i"] * s["n"] * s["u"] ** 2),
        C2=s["e"] * s["B"] * s["t"] / s["m_i"],
        C3=s["nu_ie"] * s["n"] * s["t"],
        C4=s["m_e"] / s["m_i"],
        C5=s["j"] / (s["e"] * s["n"] * s["u"]),
        M=s["u"] ** 2 / s["c"] ** 2,
        warnings=tuple(notes),
    )


@dataclass
class SourceTerms:
    """Right-hand sides of the nondimensional two-fluid moment equations.

    Each quantity is split into the field part (Lorentz force / electric
    work) and the collisional exchange part.
    """

    mass_i: float
    mass_e: float
    momentum_i: np.ndarray
    momentum_e: np.ndarray
    energy_i: float
    energy_e: float
    exchange_momentum_i: np.ndarray
    exchange_momentum_e: np.ndarray
    exchange_energy_i: float
    exchange_energy_e: float

    def as_vector(self) -> np.ndarray:
        return np.concatenate([[self.mass_i, self.mass_e], self.momentum_i, self.momentum_e,
                               [self.energy_i, self.energy_e]])


def twofluid_source_terms(mom_i: SpeciesMoments, mom_e: SpeciesMoments, E, B,
                          constants: DimensionlessConstants, nu_ie: float = 1.0,
                          nu_ei: float | None = None) -> SourceTerms:
    """Source terms of the six moment equations, coefficients as in the nondimensional system.

    ``nu_ie`` and ``nu_ei`` are the nondimensional collision frequencies;
    with the usual scaling of the two frequencies they coincide, which is
    the default.
    """
    c = constants
    nu_ei = nu_ie if nu_ei is None else nu_ei
    E = np.asarray(E, dtype=float)
    B = np.asarray(B, dtype=float)
    ui = np.asarray(mom_i.u, dtype=float)
    ue = np.asarray(mom_e.u, dtype=float)
    ni, ne = mom_i.n, mom_e.n
    nn = ni * ne
    thermal = 1.0 / (1.0 + c.C4) * c.C3 * c.C1 * 1.5 * nn
    xm_i = c.C3 * nu_ie * nn * (ue - ui)
    xm_e = c.C3 * nu_ie * nn * (ui - ue)
    xe_i = (c.C3 * 0.5 * nu_ie * nn * (np.dot(ue, ue) - np.dot(ui, ui))
            + thermal * nu_ie * (mom_e.T - mom_i.T))
    xe_e = (c.C3 * 0.5 * nu_ei * nn * (np.dot(ui, ui) - np.dot(ue, ue))
            + thermal * nu_ie * (mom_i.T - mom_e.T))
    return SourceTerms(
        mass_i=0.0,
        mass_e=0.0,
        momentum_i=c.C2 * ni * (E + np.cross(ui, B)) + xm_i,
        momentum_e=-c.C2 * ne * (E + np.cross(ue, B)) + xm_e,
        energy_i=float(c.C2 * ni * np.dot(E, ui) + xe_i),
        energy_e=float(-c.C2 * ne * np.dot(E, ue) + xe_e),
        exchange_momentum_i=xm_i,
        exchange_momentum_e=xm_e,
        exchange_energy_i=float(xe_i),
        exchange_energy_e=float(xe_e),
    )
