import numpy as np
import pytest

from bgkmix import limits as L


def test_d4_and_d2_orders():
    errs4, errs2 = [], []
    for N in (16, 32, 64):
        x = L.periodic_grid(N)
        f = np.sin(2 * np.pi * x) + 0.3 * np.cos(4 * np.pi * x)
        exact = 2 * np.pi * np.cos(2 * np.pi * x) - 1.2 * np.pi * np.sin(4 * np.pi * x)
        errs4.append(np.max(np.abs(L.d4(f, 1.0 / N) - exact)))
        errs2.append(np.max(np.abs(L.d2(f, 1.0 / N) - exact)))
    assert np.all(np.abs(L.convergence_orders([1 / 16, 1 / 32, 1 / 64], errs4) - 4) < 0.15)
    assert np.all(np.abs(L.convergence_orders([1 / 16, 1 / 32, 1 / 64], errs2) - 2) < 0.15)


@pytest.mark.parametrize("system", L.SYSTEMS)
def test_constant_fields_have_zero_residual(system):
    # Te = T / 2 means Ti = Te, so no thermal exchange either.
    f = L.constant_fields(16, n=1.4, u=(0.3, -0.1, 0.2), T=0.8, Te=0.4, B=(1.0, 0.5, -0.2))
    res = L.limit_residual(system, f)
    assert max(res.values()) < 1e-14


def test_uniform_state_with_unequal_temperatures_exchanges_heat():
    f = L.constant_fields(16, n=1.4, T=0.8, Te=0.6)
    res = L.limit_residual("thm41", f)
    # 1.5 n^2 (Ti - Te) with Ti = T - Te
    assert res["electron_energy"] == pytest.approx(1.5 * 1.4**2 * 0.4, rel=1e-13)
    assert res["mass"] < 1e-14 and res["energy"] < 1e-14


def test_alfven_wave_converges_at_fourth_order():
    rows = L.thm43_refinement(levels=4, base=16)
    orders = L.convergence_orders([1.0 / r[0] for r in rows], [r[1] for r in rows])
    assert np.all(np.abs(orders - 4.0) < 0.1)
    assert rows[-1][1] < 1e-6
    assert set(rows[0][2]) >= {"mass", "energy", "div_B", "induction_y"}


def test_alfven_wave_is_not_a_hall_solution():
    res = L.limit_residual("thm41", L.alfven_wave(64))
    assert res["mass"] < 1e-14
    assert res["ohm"] > 1e-2


def test_coarse_grid_rejected():
    with pytest.raises(L.StencilError):
        L.limit_residual("thm43", L.constant_fields(4))
    with pytest.raises(L.StencilError):
        L.d4(np.zeros(4), 0.25)


def test_unknown_system():
    with pytest.raises(ValueError, match="unknown system"):
        L.limit_residual("thm44", L.constant_fields(8))


def test_identity_deviation_is_second_order():
    errs = []
    for N in (32, 64, 128):
        _, u, B = L.random_trig_fields(N, seed=3)
        rep = L.induction_identity_check(u, B, 1.0 / N)
        assert rep.div_B == 0.0
        errs.append(rep.max_deviation)
    orders = L.convergence_orders([1 / 32, 1 / 64, 1 / 128], errs)
    assert np.all(np.abs(orders - 2.0) < 0.1)


def test_identity_exact_for_constant_fields():
    N = 16
    u = np.outer([0.3, -0.2, 0.5], np.ones(N))
    B = np.outer([1.0, 0.4, -0.7], np.ones(N))
    rep = L.induction_identity_check(u, B, 1.0 / N)
    assert rep.max_deviation == 0.0


def test_divergence_breaks_identity():
    devs = []
    for a in (0.0, 0.1, 0.5):
        _, u, B = L.random_trig_fields(64, seed=3, div_amplitude=a)
        devs.append(L.induction_identity_check(u, B, 1.0 / 64))
    assert devs[0].div_B == 0.0 < devs[1].div_B < devs[2].div_B
    assert devs[0].induction < devs[1].induction < devs[2].induction
