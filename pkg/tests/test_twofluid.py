import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bgkmix import grid as vgrid
from bgkmix import params as mp
from bgkmix import relax
from bgkmix import twofluid as tf
from bgkmix.verify import random_moments, random_params


def mom(n, u, T):
    return mp.SpeciesMoments(n, np.asarray(u, dtype=float), T)


A = mom(1.0, [0.4, 0.0, 0.0], 1.3)
B = mom(0.7, [-0.5, 0.2, 0.0], 0.7)

UNIT_SCALES = {k: 1.0 for k in tf.SCALE_KEYS}


# -- closed-form exchange fluxes ---------------------------------------------

def test_spot_value():
    p = mp.MixtureParams(2.0, 1.0, nu21=1.0, epsilon=0.5, delta=0.5)
    fx = tf.exchange_fluxes(mom(1.0, [0, 0, 0], 1.0), mom(1.0, [1, 0, 0], 1.0), p)
    np.testing.assert_allclose(fx.momentum_1, [0.5, 0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(fx.momentum_2, [-0.5, 0.0, 0.0], atol=1e-15)
    # eps nu21 n1 n2 m1/2 (1-delta)^2 |u2|^2 with equal temperatures and gamma = 0
    assert fx.energy_1 == pytest.approx(0.125, rel=1e-14)
    assert fx.energy_2 == pytest.approx(-0.125, rel=1e-14)


def test_zero_at_equilibrium(hamel):
    fx = tf.exchange_fluxes(mom(1.0, [0.3, -0.2, 0.1], 1.1), mom(2.5, [0.3, -0.2, 0.1], 1.1),
                            hamel)
    for v in (fx.momentum_1, fx.momentum_2, fx.energy_1, fx.energy_2):
        assert np.all(np.abs(v) < 1e-15)


def test_temperature_relaxation_direction(hamel):
    fx = tf.exchange_fluxes(mom(1.0, [0, 0, 0], 2.0), mom(1.0, [0, 0, 0], 1.0), hamel)
    assert fx.energy_1 < 0 < fx.energy_2


@given(seed=st.integers(0, 2**32 - 1))
def test_antisymmetry(seed):
    rng = np.random.default_rng(seed)
    p = random_params(rng)
    a, b = random_moments(rng), random_moments(rng)
    fx = tf.exchange_fluxes(a, b, p)
    sm, se = tf.flux_scales(a, b, p)
    assert np.max(np.abs(fx.momentum_imbalance())) <= 1e-13 * sm
    assert abs(fx.energy_imbalance()) <= 1e-13 * se


# -- kinetic quadrature ------------------------------------------------------

@pytest.fixture(scope="module")
def hamel_state():
    p = mp.preset("hamel", 2.0, 1.0)
    return relax.maxwellian_state(A, B, vgrid.VelocityGrid.box(0.0, 7.0, 16), p)


def test_discrete_attractors_match_closed_form(hamel_state):
    assert tf.kinetic_flux_consistency(hamel_state).max_deviation < 1e-11


def test_non_maxwellian_state_matches_closed_form():
    g = vgrid.VelocityGrid.box(0.0, 7.0, 16)
    p = mp.preset("plasma", 1.0, 0.5)
    F1 = (vgrid.batch_maxwellian_continuous([0.6], [[0.5, 0, 0]], [0.8], p.m1, g)
          + vgrid.batch_maxwellian_continuous([0.4], [[-0.4, 0.2, 0]], [1.2], p.m1, g))[0]
    F2 = vgrid.batch_maxwellian_continuous([0.9], [[0.1, 0.1, 0.1]], [1.0], p.m2, g)[0]
    st_ = relax.KineticState.from_arrays(F1, F2, g, p)
    assert tf.kinetic_flux_consistency(st_).max_deviation < 1e-11


def test_continuous_attractors_converge_with_resolution():
    p = mp.preset("hamel", 2.0, 1.0)
    dev = []
    for N in (12, 16, 20):
        st_ = relax.maxwellian_state(A, B, vgrid.VelocityGrid.box(0.0, 7.0, N), p)
        dev.append(tf.kinetic_flux_consistency(st_, "continuous").max_deviation)
    assert dev[0] > dev[1] > dev[2]
    assert dev[0] > 1e-4 and dev[2] < 1e-6


def test_no_interspecies_collisions_gives_zero_exchange(hamel_state):
    p = hamel_state.params.replace(nu21=0.0)
    st_ = relax.KineticState.from_arrays(hamel_state.f1.values, hamel_state.f2.values,
                                         hamel_state.grid, p)
    c = tf.kinetic_flux_consistency(st_)
    for fx in (c.quadrature, c.closed_form):
        assert np.max(np.abs(fx.momentum_1)) < 1e-13
        assert np.max(np.abs(fx.momentum_2)) < 1e-13
        assert abs(fx.energy_1) < 1e-13 and abs(fx.energy_2) < 1e-13


# -- dimensionless constants -------------------------------------------------

def test_unit_scales_give_unit_constants():
    c = tf.dimensionless_constants(UNIT_SCALES)
    assert (c.C1, c.C2, c.C3, c.C4, c.C5, c.M) == (1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    assert c.warnings == ()


def test_mass_ratio_and_mach():
    s = dict(UNIT_SCALES, m_i=1836.0, u=0.01, x=0.01)
    c = tf.dimensionless_constants(s)
    assert c.C4 == pytest.approx(5.4466e-4, rel=1e-4)
    assert c.M == pytest.approx(1e-4, rel=1e-12)
    assert c.warnings == ()


def test_missing_scale_raises():
    s = dict(UNIT_SCALES)
    del s["nu_ie"]
    with pytest.raises(KeyError, match="nu_ie"):
        tf.dimensionless_constants(s)


@pytest.mark.parametrize("value", [0.0, -1.0])
def test_nonpositive_scale_raises(value):
    with pytest.raises(ValueError, match="positive"):
        tf.dimensionless_constants(dict(UNIT_SCALES, T=value))


def test_inconsistent_scales_are_reported():
    c = tf.dimensionless_constants(dict(UNIT_SCALES, u=2.0))
    assert any("u = x/t" in w for w in c.warnings)
    c = tf.dimensionless_constants(dict(UNIT_SCALES, E=3.0, mu0=2.0))
    assert len(c.warnings) == 2


# -- two-fluid source terms --------------------------------------------------

def test_sources_vanish_without_fields_at_equilibrium():
    c = tf.dimensionless_constants(UNIT_SCALES)
    s = tf.twofluid_source_terms(mom(1.0, [0.2, 0.1, 0], 1.0), mom(1.0, [0.2, 0.1, 0], 1.0),
                                 np.zeros(3), np.zeros(3), c)
    assert np.all(s.as_vector() == 0.0)


def test_exchange_sums_to_zero(rng):
    c = tf.dimensionless_constants(dict(UNIT_SCALES, m_e=1.0 / 1836.0, nu_ie=3.0))
    for _ in range(50):
        a, b = random_moments(rng), random_moments(rng)
        s = tf.twofluid_source_terms(a, b, rng.normal(size=3), rng.normal(size=3), c, nu_ie=0.7)
        assert s.mass_i == 0.0 and s.mass_e == 0.0
        scale = a.n * b.n * (np.linalg.norm(a.u) + np.linalg.norm(b.u))
        assert np.max(np.abs(s.exchange_momentum_i + s.exchange_momentum_e)) <= 1e-14 * scale
        escale = a.n * b.n * (np.dot(a.u, a.u) + np.dot(b.u, b.u) + a.T + b.T)
        assert abs(s.exchange_energy_i + s.exchange_energy_e) <= 1e-13 * escale


def test_lorentz_force_on_opposite_charges():
    c = tf.dimensionless_constants(UNIT_SCALES)
    same = mom(1.0, [0, 0, 0], 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        s = tf.twofluid_source_terms(same, same, [1.0, 0, 0], [0, 0, 1.0], c)
    np.testing.assert_array_equal(s.momentum_i, [1.0, 0, 0])
    np.testing.assert_array_equal(s.momentum_e, [-1.0, 0, 0])
