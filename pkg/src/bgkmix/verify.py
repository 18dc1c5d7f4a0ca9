"""Property suites behind ``bgkmix verify``.

Each suite draws its random inputs from ``default_rng([seed, suite_index])``
so that the result of a suite does not depend on which other suites run.
Reports contain measured extremal values and tolerances only (no timings),
which makes them byte-identical across runs with the same seed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import grid as vgrid
from . import limits, mhd, params as mp, relax, transport, twofluid

log = logging.getLogger(__name__)

SUITES = ("conservation", "htheorem", "positivity", "lemma21", "fluxes",
          "aap-equivalence", "mhd-limits")


@dataclass
class PropertyResult:
    suite: str
    name: str
    measured: float
    tolerance: float
    passed: bool
    detail: str = ""
    asserted: bool = True

    def line(self) -> str:
        status = ("PASS" if self.passed else "FAIL") if self.asserted else "INFO"
        extra = f"  {self.detail}" if self.detail else ""
        return (f"  {status}  {self.name:<40s} measured={self.measured:.6e} "
                f"tol={self.tolerance:.1e}{extra}")


@dataclass
class VerifyReport:
    seed: int
    results: list[PropertyResult]

    @property
    def violations(self) -> list[PropertyResult]:
        return [r for r in self.results if r.asserted and not r.passed]

    @property
    def ok(self) -> bool:
        return not self.violations

    def text(self) -> str:
        out = [f"bgkmix verify seed={self.seed}"]
        suite = None
        for r in self.results:
            if r.suite != suite:
                suite = r.suite
                out.append(f"suite {suite}")
            out.append(r.line())
        n_assert = sum(r.asserted for r in self.results)
        out.append(f"summary: {n_assert} properties checked, {len(self.violations)} violations")
        return "\n".join(out) + "\n"


def _le(suite, name, measured, tol, detail="") -> PropertyResult:
    measured = float(measured)
    return PropertyResult(suite, name, measured, tol, bool(measured <= tol), detail)


def _ge(suite, name, measured, tol, detail="") -> PropertyResult:
    measured = float(measured)
    return PropertyResult(suite, name, measured, tol, bool(measured >= tol), detail)


# -- random inputs -----------------------------------------------------------

def random_params(rng: np.random.Generator, mass_range=(0.1, 10.0), eps_one: float = 0.1,
                  strict: bool = True) -> mp.MixtureParams:
    """A parameter set drawn uniformly inside the admissible region.

    With probability ``eps_one`` epsilon is exactly 1 (the boundary case).
    """
    lo, hi = np.log(mass_range[0]), np.log(mass_range[1])
    m1, m2 = np.exp(rng.uniform(lo, hi, 2))
    eps = 1.0 if rng.random() < eps_one else float(rng.uniform(1e-3, 1.0))
    nus = rng.uniform(0.2, 2.0, 3)
    p = mp.MixtureParams(float(m1), float(m2), nu11=nus[0], nu21=nus[1], nu22=nus[2],
                         epsilon=eps, strict=strict)
    top = 1.0 - 2 * mp.STRICT_MARGIN
    delta = float(rng.uniform(max(mp.delta_lower_bound(p), -5.0), top))
    p = p.replace(delta=delta)
    gmax = max(mp.gamma_upper_bound(p), 0.0)
    return p.replace(alpha=float(rng.uniform(0.0, top)), gamma=float(rng.uniform(0.0, gmax)))


def random_moments(rng: np.random.Generator, u_scale=1.0, T_range=(0.1, 10.0)):
    n = float(rng.uniform(0.1, 2.0))
    u = rng.normal(scale=u_scale, size=3)
    T = float(np.exp(rng.uniform(np.log(T_range[0]), np.log(T_range[1]))))
    return mp.SpeciesMoments(n, u, T)


# Kinetic suites use a fixed grid and moderate masses/temperatures so every
# state is resolvable on it.
KINETIC_GRID = vgrid.VelocityGrid.box(0.0, 8.0, 20)


def _kinetic_params(rng):
    return random_params(rng, mass_range=(0.5, 2.0), eps_one=0.2)


def _bimodal(rng, mass, batch, grid):
    """Random positive, non-Maxwellian distributions: two displaced Maxwellians."""
    out = np.zeros((batch, grid.size))
    for _ in range(2):
        n = rng.uniform(0.2, 1.0, batch)
        u = rng.uniform(-0.6, 0.6, (batch, 3))
        T = rng.uniform(0.6, 1.6, batch)
        out += vgrid.batch_maxwellian_continuous(n, u, T, mass, grid)
    return out


# -- suites ------------------------------------------------------------------

def _relax_run(rng, steps=200, nodes=16):
    p = mp.preset("hamel", 2.0, 1.0)
    a = mp.SpeciesMoments(1.0, rng.uniform(-0.5, 0.5, 3), float(rng.uniform(1.0, 1.6)))
    b = mp.SpeciesMoments(0.8, rng.uniform(-0.5, 0.5, 3), float(rng.uniform(0.5, 0.9)))
    u_inf, T_inf = relax.equilibrium_moments((a, b), p)
    g = vgrid.build_grid([a, b, mp.SpeciesMoments(1.0, u_inf, T_inf)], [p.m1, p.m2, p.m1],
                         nodes=nodes)
    st = relax.maxwellian_state(a, b, g, p)
    return st, relax.run(st, steps=steps)


def suite_conservation(rng) -> list[PropertyResult]:
    s = "conservation"
    st, ts = _relax_run(rng)
    out = []
    for k in (1, 2):
        n = ts.column(f"n{k}")
        out.append(_le(s, f"relax mass drift species {k}", np.max(np.abs(n / n[0] - 1)), 1e-13))
    P = np.stack([ts.column(f"P_total_{c}") for c in "xyz"], axis=1)
    scale = relax.momentum_scale(st.f1.values, st.f2.values, st.grid, st.params)
    out.append(_le(s, "relax momentum drift", np.max(np.abs(P - P[0])) / scale, 1e-11))
    E = ts.column("E_total")
    out.append(_le(s, "relax energy drift", np.max(np.abs(E / E[0] - 1)), 1e-11))

    p = mp.preset("hamel", 2.0, 1.0)
    g = vgrid.VelocityGrid.box(0.0, 7.0, 12)
    N = 16
    x = (np.arange(N) + 0.5) / N
    ph = rng.uniform(0, 2 * np.pi, 3)
    n1 = 1.0 + 0.3 * np.sin(2 * np.pi * x + ph[0])
    n2 = 0.8 + 0.2 * np.cos(2 * np.pi * x + ph[1])
    u1 = np.stack([0.3 * np.cos(2 * np.pi * x + ph[2]), 0 * x, 0 * x], axis=1)
    T1 = 1.2 + 0.2 * np.sin(2 * np.pi * x)
    T2 = 0.8 + 0.1 * np.cos(2 * np.pi * x)
    f = transport.maxwellian_field(n1, u1, T1, n2, -u1, T2, g, p)
    dt = 0.8 * f.dx / np.max(np.abs(g.axes[0]))
    tr = transport.run_transport(f, dt, 40)
    t0, t1 = tr.totals[0], tr.totals[-1]
    out.append(_le(s, "transport mass drift", max(abs(t1.mass1 / t0.mass1 - 1),
                                                  abs(t1.mass2 / t0.mass2 - 1)), 1e-10))
    pscale = t0.mass1 * p.m1 + t0.mass2 * p.m2
    out.append(_le(s, "transport momentum drift",
                   np.max(np.abs(t1.momentum - t0.momentum)) / pscale, 1e-10))
    out.append(_le(s, "transport energy drift", abs(t1.energy / t0.energy - 1), 1e-10))
    out.append(_ge(s, "transport min f", tr.min_value, 0.0))
    return out


def suite_htheorem(rng, states: int = 1000, per_param: int = 20) -> list[PropertyResult]:
    s = "htheorem"
    g = KINETIC_GRID
    worst = -np.inf
    worst_detail = ""
    failures = 0
    for _ in range(states // per_param):
        p = _kinetic_params(rng)
        F1 = _bimodal(rng, p.m1, per_param, g)
        F2 = _bimodal(rng, p.m2, per_param, g)
        try:
            S = vgrid.batch_entropy_production(F1, F2, g, p)
        except (vgrid.NonResolvableMaxwellian, ValueError) as exc:
            failures += per_param
            worst_detail = f"attractor construction failed: {exc}"
            continue
        k = int(np.argmax(S))
        if S[k] > worst:
            worst = float(S[k])
            if worst > 1e-12:
                worst_detail = (f"S={worst:.3e} at m=({p.m1:.4g},{p.m2:.4g}) "
                                f"eps={p.epsilon:.4g} delta={p.delta:.4g}")
    out = [_le(s, f"max entropy production ({states} states)", worst, 1e-12, worst_detail)]
    out.append(_le(s, "states without valid attractors", failures, 0))

    st, ts = _relax_run(rng, steps=150)
    H = ts.column("H")
    out.append(_le(s, "H increase per step (relax run)", np.max(np.diff(H)), 1e-12))
    out.append(_le(s, "entropy production along run", np.max(ts.column("S_prod")), 1e-12))

    p = mp.preset("hamel", 2.0, 1.0)
    u, T = np.array([0.1, -0.2, 0.0]), 1.1
    M1 = vgrid.maxwellian_discrete(0.9, u, T, p.m1, g)
    M2 = vgrid.maxwellian_discrete(0.6, u, T, p.m2, g)
    out.append(_le(s, "entropy production at common equilibrium",
                   abs(vgrid.entropy_production(M1, M2, g, p)), 1e-10))
    return out


def suite_positivity(rng, sets: int = 10_000) -> list[PropertyResult]:
    s = "positivity"
    bad = 0
    low = np.inf
    for _ in range(sets):
        p = random_params(rng)
        a = random_moments(rng, u_scale=2.0)
        b = random_moments(rng, u_scale=2.0)
        m12, m21 = mp.interspecies_moments(a, b, p)
        t = min(float(m12.T), float(m21.T))
        low = min(low, t)
        bad += t < 0
    out = [_le(s, f"negative T12/T21 ({sets} parameter sets)", bad, 0, f"min T={low:.3e}")]

    g = vgrid.VelocityGrid.box(0.0, 7.0, 16)
    worst = np.inf
    for _ in range(5):
        p = random_params(rng, mass_range=(0.7, 1.5), eps_one=0.2)
        a = random_moments(rng, u_scale=0.3, T_range=(0.7, 1.5))
        b = random_moments(rng, u_scale=0.3, T_range=(0.7, 1.5))
        st = relax.maxwellian_state(a, b, g, p)
        lam = relax.max_rate(st)
        for c in (0.1, 1.0, 10.0):
            nxt = relax.step_exponential(st, c / lam)
            worst = min(worst, nxt.f1.values.min(), nxt.f2.values.min())
    out.append(_ge(s, "min f after exponential steps", worst, 0.0))
    return out


def lemma21_margins(rng, states: int):
    """Margins ``eps ln T12 + ln T21 - eps ln T1 - ln T2`` and the epsilon used."""
    margins = np.empty(states)
    eps = np.empty(states)
    for k in range(states):
        p = random_params(rng, eps_one=0.1)
        a = random_moments(rng)
        b = random_moments(rng)
        m12, m21 = mp.interspecies_moments(a, b, p)
        e = p.epsilon
        margins[k] = (e * math.log(m12.T) + math.log(m21.T) - e * math.log(a.T) - math.log(b.T))
        eps[k] = e
    return margins, eps


def suite_lemma21(rng, states: int = 10_000) -> list[PropertyResult]:
    s = "lemma21"
    margins, eps = lemma21_margins(rng, states)
    inner = eps < 1.0
    out = [_le(s, f"violations, epsilon < 1 ({int(inner.sum())} states)",
               int(np.sum(margins[inner] < -1e-12)), 0,
               f"min margin={margins[inner].min():.3e}")]
    edge = ~inner
    r = PropertyResult(s, f"violations, epsilon = 1 ({int(edge.sum())} states)",
                       float(np.sum(margins[edge] < -1e-12)), 0.0,
                       bool(np.all(margins[edge] >= -1e-12)),
                       f"min margin={margins[edge].min():.3e}" if edge.any() else "",
                       asserted=False)
    out.append(r)
    return out


def suite_fluxes(rng, states: int = 1000) -> list[PropertyResult]:
    s = "fluxes"
    worst_m = worst_e = 0.0
    for _ in range(states):
        p = random_params(rng)
        a = random_moments(rng)
        b = random_moments(rng)
        fx = twofluid.exchange_fluxes(a, b, p)
        sm, se = twofluid.flux_scales(a, b, p)
        worst_m = max(worst_m, float(np.max(np.abs(fx.momentum_imbalance()))) / sm)
        worst_e = max(worst_e, abs(fx.energy_imbalance()) / se)
    out = [_le(s, "momentum flux antisymmetry", worst_m, 1e-13),
           _le(s, "energy flux antisymmetry", worst_e, 1e-13)]
    g = vgrid.VelocityGrid.box(0.0, 8.0, 16)
    worst = 0.0
    for _ in range(8):
        p = _kinetic_params(rng)
        F1 = _bimodal(rng, p.m1, 1, g)[0]
        F2 = _bimodal(rng, p.m2, 1, g)[0]
        st = relax.KineticState.from_arrays(F1, F2, g, p)
        worst = max(worst, twofluid.kinetic_flux_consistency(st).max_deviation)
    out.append(_le(s, "quadrature vs closed-form exchange", worst, 1e-11))
    return out


def suite_aap(rng, states: int = 1000, mass_pairs: int = 50) -> list[PropertyResult]:
    s = "aap-equivalence"
    wm = we = 0.0
    for _ in range(states):
        m1, m2 = np.exp(rng.uniform(np.log(0.1), np.log(10.0), 2))
        x = float(rng.uniform(0.01, 1.0))
        nu = float(rng.uniform(0.2, 2.0))
        a = random_moments(rng)
        b = random_moments(rng)
        # The published gamma carries a factor n1 n2 that the fluxes do not,
        # so the equivalence is exact at unit densities only.
        a = mp.SpeciesMoments(1.0, a.u, a.T)
        b = mp.SpeciesMoments(1.0, b.u, b.T)
        d, al, ga = mp.aap_parameter_map(x, m1, m2, a.n, b.n)
        p = mp.MixtureParams(m1, m2, nu21=nu, epsilon=1.0, delta=d, alpha=al, gamma=ga,
                             strict=False)
        fx = twofluid.exchange_fluxes(a, b, p)
        chi = x * p.nu12
        ref_m = mp.aap_momentum_flux(chi, m1, m2, a.n, b.n, a.u, b.u)
        ref_e = mp.aap_energy_flux(chi, m1, m2, a.n, b.n, a.u, b.u, a.T, b.T)
        sm, se = twofluid.flux_scales(a, b, p)
        wm = max(wm, float(np.max(np.abs(fx.momentum_1 - ref_m))) / sm)
        we = max(we, abs(fx.energy_1 - ref_e) / se)
    out = [_le(s, f"momentum flux vs AAP ({states} states)", wm, 1e-12),
           _le(s, f"energy flux vs AAP ({states} states)", we, 1e-12)]
    invalid = 0
    for _ in range(mass_pairs):
        m1, m2 = np.exp(rng.uniform(np.log(0.01), np.log(100.0), 2))
        invalid += not mp.validate(mp.preset("hamel", float(m1), float(m2))).valid
    out.append(_le(s, f"Hamel presets failing validation ({mass_pairs} mass pairs)", invalid, 0))
    return out


def suite_mhd_limits(rng) -> list[PropertyResult]:
    s = "mhd-limits"
    Ns = (32, 64, 128, 256)
    seed = int(rng.integers(0, 2**31))
    errs = []
    for N in Ns:
        x, u, B = limits.random_trig_fields(N, seed=seed)
        errs.append(limits.induction_identity_check(u, B, x[1] - x[0]).max_deviation)
    order = limits.convergence_orders([1.0 / N for N in Ns], errs)
    out = [_ge(s, "induction identity convergence order", order.min(), 1.8)]
    rows = limits.thm43_refinement(len(Ns), base=Ns[0])
    order43 = limits.convergence_orders([1.0 / r[0] for r in rows], [r[1] for r in rows])
    out.append(_ge(s, "thm43 residual convergence order", order43.min(), 3.8))

    N = 64
    x = (np.arange(N) + 0.5) / N
    ph = rng.uniform(0, 2 * np.pi, 4)
    n = 1.0 + 0.3 * np.sin(2 * np.pi * x + ph[0])
    u = np.stack([0.2 * np.cos(2 * np.pi * x + ph[1]), 0.1 + 0 * x, 0 * x])
    pr = 1.0 + 0.2 * np.cos(2 * np.pi * x + ph[2])
    Bf = np.stack([np.full(N, 0.75), np.sin(2 * np.pi * x + ph[3]), 0.3 + 0 * x])
    st = mhd.MhdState.from_primitive(n, u, pr, Bf, 1.0 / N)
    tot0 = st.totals()
    scale = np.sum(np.abs(st.U)) * st.dx
    for _ in range(1000):
        st = mhd.mhd_step(st, mhd.stable_dt(st))
    out.append(_le(s, "MHD conserved sums drift (1000 steps)",
                   np.max(np.abs(st.totals() - tot0) / scale), 1e-12))
    c = mhd.MhdState.from_primitive(np.full(N, 1.2), np.outer([0.3, -0.1, 0.2], np.ones(N)),
                                    np.full(N, 0.8), np.outer([0.7, 0.4, -0.2], np.ones(N)),
                                    1.0 / N)
    c0 = c.U.copy()
    dt = mhd.stable_dt(c)
    for _ in range(1000):
        c = mhd.mhd_step(c, dt)
    out.append(_le(s, "MHD constant state change (1000 steps)", np.max(np.abs(c.U - c0)), 0.0))
    return out


SUITE_FUNCS: dict[str, Callable] = {
    "conservation": suite_conservation,
    "htheorem": suite_htheorem,
    "positivity": suite_positivity,
    "lemma21": suite_lemma21,
    "fluxes": suite_fluxes,
    "aap-equivalence": suite_aap,
    "mhd-limits": suite_mhd_limits,
}


def verify(suite_id: str, seed: int = 0) -> VerifyReport:
    if suite_id == "all":
        names = list(SUITES)
    elif suite_id in SUITE_FUNCS:
        names = [suite_id]
    else:
        raise ValueError(f"unknown suite {suite_id!r}; expected one of {SUITES + ('all',)}")
    results = []
    for name in names:
        rng = np.random.default_rng([seed, SUITES.index(name)])
        log.info("running suite %s", name)
        results.extend(SUITE_FUNCS[name](rng))
    return VerifyReport(seed, results)
