import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bgkmix import params as mp
from bgkmix.verify import random_moments, random_params


def mom(n, u, T):
    return mp.SpeciesMoments(n, np.asarray(u, dtype=float), T)


# -- validation --------------------------------------------------------------

def test_hamel_preset_is_valid(hamel):
    assert mp.validate(hamel).valid


def test_epsilon_zero_rejected():
    r = mp.validate(mp.MixtureParams(1.0, 1.0, epsilon=0.0))
    assert not r.valid
    assert any(v.constraint == "epsilon>0" for v in r.violations)


def test_gamma_above_bound_reported_with_both_sides():
    p = mp.MixtureParams(2.0, 1.0, epsilon=0.5, delta=0.5, gamma=0.4)
    r = mp.validate(p)
    (v,) = [v for v in r.violations if v.constraint == "gamma<=gamma_max"]
    assert v.value == 0.4
    assert v.bound == pytest.approx(1.0 / 3.0, rel=1e-15)
    assert "0.4" in r.summary()


def test_non_finite_raises():
    with pytest.raises(mp.ParameterError):
        mp.validate(mp.MixtureParams(1.0, 1.0, delta=float("nan")))


def test_epsilon_above_one_suggests_relabel():
    r = mp.validate(mp.MixtureParams(1.0, 1.0, epsilon=2.0))
    assert "exchange the labels" in r.summary()


def test_strict_mode_excludes_alpha_one():
    p = mp.MixtureParams(1.0, 1.0, alpha=1.0)
    assert not mp.validate(p).valid
    assert mp.validate(p.replace(strict=False)).valid


def test_gamma_upper_bound_examples():
    assert mp.gamma_upper_bound(mp.MixtureParams(2.0, 1.0, epsilon=0.5, delta=0.5)) \
        == pytest.approx(1.0 / 3.0, rel=1e-15)
    assert mp.gamma_upper_bound(mp.MixtureParams(2.0, 1.0, epsilon=0.5, delta=1.0)) == 0.0


@given(ma=st.floats(0.01, 100), mb=st.floats(0.01, 100), delta=st.floats(0.0, 0.999))
def test_gamma_bound_nonnegative_for_plasma_epsilon(ma, mb, delta):
    m1, m2 = max(ma, mb), min(ma, mb)
    p = mp.MixtureParams(m1, m2, epsilon=m2 / m1, delta=delta)
    bound = mp.gamma_upper_bound(p)
    # bound = 2 m1 / 3 * delta (1 - delta): zero at delta = 0, positive inside
    # (k = m1 epsilon / m2 is 1 only up to roundoff)
    assert bound == pytest.approx(2 * m1 / 3 * delta * (1 - delta), rel=1e-12, abs=1e-13 * m1)
    if delta > 1e-9:
        assert bound > 0


def test_nu12_tied_to_epsilon():
    p = mp.MixtureParams(1.0, 1.0, nu21=3.0, epsilon=0.25)
    assert p.nu12 == 0.75


# -- interspecies quantities -------------------------------------------------

def test_u12_examples():
    u1, u2 = [1.0, 0.0, 0.0], [0.0, 2.0, 0.0]
    np.testing.assert_array_equal(mp.mixture_velocity_u12(u1, u2, 1.0), u1)
    np.testing.assert_array_equal(mp.mixture_velocity_u12(u1, u2, 0.0), u2)
    np.testing.assert_allclose(mp.mixture_velocity_u12(u1, u2, 0.25), [0.25, 1.5, 0.0],
                               rtol=0, atol=1e-15)


def test_u21_examples():
    p = mp.MixtureParams(2.0, 1.0, epsilon=0.5, delta=0.5)
    np.testing.assert_allclose(mp.mixture_velocity_u21([0, 0, 0], [1, 0, 0], p),
                               [0.5, 0, 0], atol=1e-15)
    u = np.array([0.3, -1.0, 2.0])
    np.testing.assert_array_equal(mp.mixture_velocity_u21(u, u, p), u)


def test_T12_examples():
    p = mp.MixtureParams(1.0, 1.0, alpha=0.5, gamma=0.0)
    assert mp.mixture_temperature_T12(mom(1, [0, 0, 0], 1.0), mom(1, [0, 0, 0], 3.0), p) == 2.0
    p = mp.MixtureParams(1.0, 1.0, alpha=1.0, gamma=0.1, strict=False)
    T = mp.mixture_temperature_T12(mom(1, [2, 0, 0], 1.0), mom(1, [0, 0, 0], 5.0), p)
    assert T == pytest.approx(1.4, rel=1e-15)


def test_T21_example():
    p = mp.MixtureParams(2.0, 1.0, epsilon=0.5, delta=0.5, alpha=0.5, gamma=0.0)
    T = mp.mixture_temperature_T21(mom(1, [1, 0, 0], 1.0), mom(1, [0, 0, 0], 1.0), p)
    assert T == pytest.approx(7.0 / 6.0, rel=1e-15)


def test_equal_states_fixed_point(hamel):
    a = mom(1.0, [0.2, 0.1, 0.0], 0.9)
    m12, m21 = mp.interspecies_moments(a, a, hamel)
    assert m12.T == pytest.approx(0.9, rel=1e-15)
    assert m21.T == pytest.approx(0.9, rel=1e-15)
    np.testing.assert_allclose(m12.u, a.u, rtol=1e-15)
    np.testing.assert_allclose(m21.u, a.u, rtol=1e-15)


@given(seed=st.integers(0, 2**32 - 1))
def test_momentum_exchange_cancels(seed):
    rng = np.random.default_rng(seed)
    p = random_params(rng)
    a, b = random_moments(rng), random_moments(rng)
    m12, m21 = mp.interspecies_moments(a, b, p)
    s = (p.m1 * p.nu12 * a.n * b.n * (m12.u - a.u) + p.m2 * p.nu21 * a.n * b.n * (m21.u - b.u))
    scale = p.nu21 * a.n * b.n * (p.m1 + p.m2) * (np.abs(a.u) + np.abs(b.u)).max()
    assert np.max(np.abs(s)) <= 1e-13 * scale


@given(seed=st.integers(0, 2**32 - 1))
def test_temperatures_positive_for_valid_params(seed):
    rng = np.random.default_rng(seed)
    p = random_params(rng)
    assert mp.validate(p).valid
    a, b = random_moments(rng, u_scale=3.0), random_moments(rng, u_scale=3.0)
    m12, m21 = mp.interspecies_moments(a, b, p)
    assert m12.T > 0 and m21.T > 0


@given(seed=st.integers(0, 2**32 - 1))
def test_lemma_inequality(seed):
    rng = np.random.default_rng(seed)
    p = random_params(rng, eps_one=0.0)
    a, b = random_moments(rng), random_moments(rng)
    m12, m21 = mp.interspecies_moments(a, b, p)
    e = p.epsilon
    lhs = e * math.log(m12.T) + math.log(m21.T)
    assert lhs >= e * math.log(a.T) + math.log(b.T) - 1e-12


def test_batched_interspecies_matches_scalar(hamel):
    rng = np.random.default_rng(3)
    n, u, T = rng.uniform(0.5, 2, 4), rng.normal(size=(4, 3)), rng.uniform(0.5, 2, 4)
    b = mom(0.8, [0.1, 0.2, -0.3], 1.1)
    m12, m21 = mp.interspecies_moments(mp.SpeciesMoments(n, u, T),
                                       mp.SpeciesMoments(np.full(4, 0.8),
                                                         np.tile(b.u, (4, 1)),
                                                         np.full(4, 1.1)), hamel)
    for k in range(4):
        s12, s21 = mp.interspecies_moments(mom(n[k], u[k], T[k]), b, hamel)
        assert m12.T[k] == pytest.approx(float(s12.T), rel=1e-15)
        assert m21.T[k] == pytest.approx(float(s21.T), rel=1e-15)


# -- presets -----------------------------------------------------------------

def test_hamel_values(hamel):
    assert hamel.delta == pytest.approx(2 / 3, rel=1e-15)
    assert hamel.alpha == pytest.approx(5 / 9, rel=1e-15)
    assert hamel.gamma == pytest.approx(2 / 27, rel=1e-15)
    assert hamel.epsilon == 1.0


@pytest.mark.parametrize("m1,m2", [(1.0, 3.0), (7.0, 0.2)])
def test_gross_krook_epsilon_one(m1, m2):
    assert mp.preset("gross-krook", m1, m2).epsilon == 1.0


def test_plasma_equal_masses_all_nu_equal():
    p = mp.preset("plasma", 1.0, 1.0, {"nu22": 2.5})
    assert p.nu11 == p.nu12 == p.nu21 == p.nu22 == 2.5


def test_unknown_preset():
    with pytest.raises(mp.ParameterError):
        mp.preset("nope", 1.0, 1.0)


def test_aap_map_examples():
    assert mp.aap_parameter_map(0.0, 2.0, 1.0, 1.0, 1.0) == (1.0, 1.0, 0.0)
    d, a, g = mp.aap_parameter_map(1.0, 1.0, 1.0, 1.0, 1.0)
    assert (d, a, g) == (0.0, 0.0, 0.0)
    d, a, g = mp.aap_parameter_map(0.5, 2.0, 1.0, 1.0, 1.0)
    assert d == pytest.approx(2 / 3, rel=1e-15)
    assert a == pytest.approx(5 / 9, rel=1e-15)
    assert g == pytest.approx(2 / 27, rel=1e-15)


def test_aap_negative_gamma_warns():
    with pytest.warns(mp.NegativeGammaWarning):
        _, _, g = mp.aap_parameter_map(1.5, 1.0, 1.0, 1.0, 1.0)
    assert g < 0


def test_aap_preset_uses_chi():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        p = mp.preset("aap", 2.0, 1.0, {"chi_over_nu": 0.5})
    assert p.gamma == pytest.approx(2 / 27, rel=1e-15)


# -- mass-ratio limits -------------------------------------------------------

def test_hamel_limits():
    rep = mp.limit_behavior(mp.hamel_params_fn)
    light, equal, heavy = rep.points
    # Hamel alpha is (m1^2 + m2^2)/(m1 + m2)^2, which tends to 1 at both ends
    assert light.delta < 1e-8
    assert light.alpha == pytest.approx(1.0, abs=1e-8)
    assert heavy.delta == pytest.approx(1.0, abs=1e-8)
    assert heavy.alpha == pytest.approx(1.0, abs=1e-8)
    assert abs(heavy.gamma) < 1e-8
    assert abs(light.gamma) < 1e-8
    assert rep.deviation("heavy") < 1e-7
    # alpha -> 1 at the light end, so T12 follows T1 rather than T2
    assert rep.deviation("light") == pytest.approx(abs(1.3 - 0.7), rel=1e-6)


def test_constant_delta_deviates_at_both_ends():
    rep = mp.limit_behavior(lambda m1, m2: (0.5, 0.5, 0.0))
    assert rep.deviation("light") > 0.1
    assert rep.deviation("heavy") > 0.1
