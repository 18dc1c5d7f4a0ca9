"""Mixture parameters and the closed-form interspecies algebra.

Everything here is nondimensional. Temperatures are energies (the Boltzmann
constant is absorbed), so the pressure of a species is simply ``n * T``.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

# alpha, delta <= 1 - STRICT_MARGIN when the H-theorem mode is on.
STRICT_MARGIN = 1e-12

PRESETS = ("gross-krook", "hamel", "plasma", "aap")


class ParameterError(ValueError):
    """Raised for malformed input (non-finite fields, unknown presets)."""


@dataclass(frozen=True)
class MixtureParams:
    m1: float
    m2: float
    nu11: float = 1.0
    nu21: float = 1.0
    nu22: float = 1.0
    epsilon: float = 1.0
    delta: float = 0.5
    alpha: float = 0.5
    gamma: float = 0.0
    # H-theorem mode: alpha and delta must stay strictly below one.
    strict: bool = True
    preset: str | None = None

    @property
    def nu12(self) -> float:
        # Stored implicitly so that nu12 = epsilon * nu21 holds exactly.
        return self.epsilon * self.nu21

    @property
    def mass_ratio(self) -> float:
        return self.m1 / self.m2

    def replace(self, **changes) -> "MixtureParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "m1": self.m1, "m2": self.m2, "nu11": self.nu11, "nu12": self.nu12,
            "nu21": self.nu21, "nu22": self.nu22, "epsilon": self.epsilon,
            "delta": self.delta, "alpha": self.alpha, "gamma": self.gamma,
        }


@dataclass(frozen=True)
class SpeciesMoments:
    """Number density, bulk velocity and temperature of one species.

    Scalars for a single state; ``n`` and ``T`` may also be arrays of shape
    ``(B,)`` with ``u`` of shape ``(B, 3)`` for a batch of cells.
    """

    n: float
    u: np.ndarray
    T: float

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.shape[-1:] != (3,):
            raise ValueError(f"velocity must have a trailing axis of length 3, got {u.shape}")
        object.__setattr__(self, "u", u)

    @property
    def p(self) -> float:
        return self.n * self.T


@dataclass(frozen=True)
class Violation:
    constraint: str
    value: float
    bound: float
    message: str = ""


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid

    def summary(self) -> str:
        if self.valid:
            return "valid"
        return "; ".join(
            f"{v.constraint}: {v.value:.17g} vs {v.bound:.17g}"
            + (f" ({v.message})" if v.message else "")
            for v in self.violations
        )


def delta_lower_bound(params: MixtureParams) -> float:
    k = params.m1 * params.epsilon / params.m2
    return (k - 1.0) / (1.0 + k)


def gamma_upper_bound(params: MixtureParams) -> float:
    """Largest gamma that keeps T21 nonnegative for all states.

    A negative value means delta lies outside the admissible range, in which
    case no nonnegative gamma works.
    """
    k = params.m1 * params.epsilon / params.m2
    d = params.delta
    return params.m1 / 3.0 * (1.0 - d) * ((1.0 + k) * d + 1.0 - k)


def validate(params: MixtureParams) -> ValidationReport:
    """Check every admissibility inequality; both sides are reported.

    Non-finite fields raise :class:`ParameterError` instead of being listed,
    since they are input errors rather than constraint violations.
    """
    for name in ("m1", "m2", "nu11", "nu21", "nu22", "epsilon", "delta", "alpha", "gamma"):
        value = getattr(params, name)
        if not math.isfinite(value):
            raise ParameterError(f"{name} is not finite: {value!r}")

    out: list[Violation] = []
    p = params
    if p.m1 <= 0:
        out.append(Violation("m1>0", p.m1, 0.0))
    if p.m2 <= 0:
        out.append(Violation("m2>0", p.m2, 0.0))
    for name in ("nu11", "nu21", "nu22"):
        if getattr(p, name) < 0:
            out.append(Violation(f"{name}>=0", getattr(p, name), 0.0))
    if p.epsilon <= 0:
        out.append(Violation("epsilon>0", p.epsilon, 0.0))
    if p.epsilon > 1:
        out.append(Violation(
            "epsilon<=1", p.epsilon, 1.0,
            "exchange the labels of species 1 and 2 and use 1/epsilon",
        ))
    if p.alpha < 0:
        out.append(Violation("alpha>=0", p.alpha, 0.0))
    if p.alpha > 1:
        out.append(Violation("alpha<=1", p.alpha, 1.0))
    if p.gamma < 0:
        out.append(Violation("gamma>=0", p.gamma, 0.0))
    if p.delta > 1:
        out.append(Violation("delta<=1", p.delta, 1.0))
    if p.m1 > 0 and p.m2 > 0:
        lo = delta_lower_bound(p)
        if p.delta < lo:
            out.append(Violation("delta>=delta_min", p.delta, lo))
        bound = gamma_upper_bound(p)
        if p.gamma > bound:
            out.append(Violation(
                "gamma<=gamma_max", p.gamma, bound,
                "T21 can become negative (temperature-positivity bound)",
            ))
    if p.strict:
        top = 1.0 - STRICT_MARGIN
        if p.alpha > top and p.alpha <= 1:
            out.append(Violation("alpha<1 (strict)", p.alpha, top))
        if p.delta > top and p.delta <= 1:
            out.append(Violation("delta<1 (strict)", p.delta, top))
    return ValidationReport(out)


def mixture_velocity_u12(u1, u2, delta: float) -> np.ndarray:
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    return delta * u1 + (1.0 - delta) * u2


def mixture_velocity_u21(u1, u2, params: MixtureParams) -> np.ndarray:
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    k = params.m1 / params.m2 * params.epsilon * (1.0 - params.delta)
    return u2 - k * (u2 - u1)


def _du2(mom1: SpeciesMoments, mom2: SpeciesMoments):
    d = np.asarray(mom1.u, dtype=float) - np.asarray(mom2.u, dtype=float)
    return np.sum(d * d, axis=-1)


def mixture_temperature_T12(mom1: SpeciesMoments, mom2: SpeciesMoments, params: MixtureParams):
    a = params.alpha
    return a * mom1.T + (1.0 - a) * mom2.T + params.gamma * _du2(mom1, mom2)


def t21_velocity_coefficient(params: MixtureParams) -> float:
    """Coefficient of |u1 - u2|^2 in T21."""
    p = params
    k = p.m1 / p.m2 * p.epsilon
    return (p.epsilon * p.m1 * (1.0 - p.delta) * (k * (p.delta - 1.0) + p.delta + 1.0) / 3.0
            - p.epsilon * p.gamma)


def mixture_temperature_T21(mom1: SpeciesMoments, mom2: SpeciesMoments, params: MixtureParams):
    w = params.epsilon * (1.0 - params.alpha)
    return (t21_velocity_coefficient(params) * _du2(mom1, mom2)
            + w * mom1.T + (1.0 - w) * mom2.T)


def interspecies_moments(mom1: SpeciesMoments, mom2: SpeciesMoments, params: MixtureParams):
    """Moments of the two interspecies attractors, ``(M12, M21)``.

    Densities follow mass conservation: M12 carries n1 and M21 carries n2.
    Works on batched moments too (``n``, ``T`` of shape ``(B,)``, ``u`` of
    shape ``(B, 3)``).
    """
    u12 = mixture_velocity_u12(mom1.u, mom2.u, params.delta)
    u21 = mixture_velocity_u21(mom1.u, mom2.u, params)
    T12 = mixture_temperature_T12(mom1, mom2, params)
    T21 = mixture_temperature_T21(mom1, mom2, params)
    return SpeciesMoments(mom1.n, u12, T12), SpeciesMoments(mom2.n, u21, T21)


# -- presets -----------------------------------------------------------------

def preset(name: str, m1: float, m2: float, aux: dict | None = None) -> MixtureParams:
    """Build a named parameter set.

    ``aux`` supplies the free parameters of a preset:

    * gross-krook: ``alpha``, ``gamma`` (default 0.5, 0), optional ``delta``
    * hamel: collision frequencies only
    * plasma: ``nu22`` sets the scale of the ion/electron ordering
    * aap: ``chi_over_nu`` and the densities ``n1``, ``n2`` entering gamma

    Collision frequencies ``nu11``, ``nu21``, ``nu22`` may be passed through
    ``aux`` for every preset except plasma, which derives them.
    """
    aux = dict(aux or {})
    nus = {k: float(aux.pop(k)) for k in ("nu11", "nu21", "nu22") if k in aux}
    mt = m1 + m2
    if name == "gross-krook":
        return MixtureParams(
            m1, m2, epsilon=1.0,
            delta=float(aux.pop("delta", m1 / mt)),
            alpha=float(aux.pop("alpha", 0.5)),
            gamma=float(aux.pop("gamma", 0.0)),
            preset=name, **nus,
        )
    if name == "hamel":
        return MixtureParams(
            m1, m2, epsilon=1.0,
            delta=m1 / mt,
            alpha=(m1 * m1 + m2 * m2) / mt**2,
            gamma=m1 * m2 / mt**2 * m2 / 3.0,
            preset=name, **nus,
        )
    if name == "plasma":
        # Species 1 are the ions, species 2 the electrons.
        nu22 = float(aux.pop("nu22", nus.get("nu22", 1.0)))
        return MixtureParams(
            m1, m2,
            nu11=math.sqrt(m2 / m1) * nu22,
            nu21=nu22,
            nu22=nu22,
            epsilon=m2 / m1,
            delta=float(aux.pop("delta", 0.0)),
            alpha=float(aux.pop("alpha", m2 / mt)),
            gamma=float(aux.pop("gamma", 0.0)),
            preset=name,
        )
    if name == "aap":
        chi = float(aux.pop("chi_over_nu", 0.5))
        n1 = float(aux.pop("n1", 1.0))
        n2 = float(aux.pop("n2", 1.0))
        delta, alpha, gamma = aap_parameter_map(chi, m1, m2, n1, n2)
        return MixtureParams(m1, m2, epsilon=1.0, delta=delta, alpha=alpha,
                             gamma=gamma, preset=name, **nus)
    raise ParameterError(f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}")


class NegativeGammaWarning(UserWarning):
    pass


def aap_parameter_map(chi_over_nu: float, m1: float, m2: float, n1: float, n2: float):
    """(delta, alpha, gamma) reproducing the single-term AAP exchange fluxes.

    gamma keeps the ``n1 * n2`` factor of the published mapping, so it is
    density dependent and only a constant parameter at fixed densities.
    """
    x = chi_over_nu
    mt = m1 + m2
    if x > 1:
        warnings.warn(
            f"chi/nu = {x} > 1 gives a negative gamma", NegativeGammaWarning, stacklevel=2
        )
    delta = 1.0 - 2.0 * m2 / mt * x
    alpha = 1.0 - 4.0 * m1 * m2 / mt**2 * x
    gamma = 4.0 / 3.0 * m1 * m2 * m2 / mt**2 * x * n1 * n2 * (1.0 - x)
    return delta, alpha, gamma


def aap_momentum_flux(chi12: float, m1: float, m2: float, n1: float, n2: float, u1, u2):
    """Momentum transferred to species 1 in the AAP model."""
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    return 2.0 * m1 * m2 / (m1 + m2) * chi12 * (u2 - u1) * n1 * n2


def aap_energy_flux(chi12: float, m1: float, m2: float, n1: float, n2: float,
                    u1, u2, T1: float, T2: float) -> float:
    """Energy transferred to species 1 in the AAP model."""
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    mt = m1 + m2
    bracket = (-m1 / mt * np.dot(u1, u1) + m2 / mt * np.dot(u2, u2)
               + (m1 - m2) / mt * np.dot(u1, u2) + 2.0 / mt * 1.5 * (T2 - T1))
    return n1 * n2 * 2.0 * m2 * m1 * chi12 / mt * bracket


# -- mass-ratio limits -------------------------------------------------------

@dataclass
class LimitPoint:
    ratio: float
    delta: float
    alpha: float
    gamma: float
    target: str
    deviation: float


@dataclass
class LimitReport:
    points: list[LimitPoint]

    def deviation(self, ratio_label: str) -> float:
        for pt in self.points:
            if pt.target == ratio_label:
                return pt.deviation
        raise KeyError(ratio_label)


def hamel_params_fn(m1: float, m2: float):
    p = preset("hamel", m1, m2)
    return p.delta, p.alpha, p.gamma


def limit_behavior(
    params_fn: Callable[[float, float], Sequence[float]],
    mass_ratios: Sequence[float] = (1e-9, 0.5, 1.0 - 1e-9),
    epsilon: float = 1.0,
    probe: tuple[SpeciesMoments, SpeciesMoments] | None = None,
) -> LimitReport:
    """Probe the attractor behaviour as m1/(m1+m2) approaches 0, 1/2 and 1.

    At each ratio ``r`` the masses are ``(r, 1 - r)`` and ``params_fn`` maps
    them to ``(delta, alpha, gamma)``. The deviation measured is

    * r -> 0:   |u12 - u2| + |T12 - T2|   (light species follows the heavy one)
    * r -> 1/2: |u12 - u21| + |T12 - T21| (indistinguishable masses)
    * r -> 1:   |u12 - u1| + |T12 - T1|   (heavy species does not notice)

    on a fixed probe state.
    """
    if probe is None:
        probe = (SpeciesMoments(1.0, [0.3, -0.2, 0.1], 1.3),
                 SpeciesMoments(0.8, [-0.4, 0.5, 0.0], 0.7))
    m_a, m_b = probe
    labels = ("light", "equal", "heavy")
    points = []
    for r, label in zip(mass_ratios, labels):
        m1, m2 = r, 1.0 - r
        delta, alpha, gamma = params_fn(m1, m2)
        p = MixtureParams(m1, m2, epsilon=epsilon, delta=delta, alpha=alpha,
                          gamma=gamma, strict=False)
        u12 = mixture_velocity_u12(m_a.u, m_b.u, delta)
        T12 = float(mixture_temperature_T12(m_a, m_b, p))
        if label == "light":
            dev = np.linalg.norm(u12 - m_b.u) + abs(T12 - m_b.T)
        elif label == "heavy":
            dev = np.linalg.norm(u12 - m_a.u) + abs(T12 - m_a.T)
        else:
            u21 = mixture_velocity_u21(m_a.u, m_b.u, p)
            T21 = float(mixture_temperature_T21(m_a, m_b, p))
            dev = np.linalg.norm(u12 - u21) + abs(T12 - T21)
        points.append(LimitPoint(r, delta, alpha, gamma, label, float(dev)))
    return LimitReport(points)
