import numpy as np
import pytest

from vdeeponet.errors import ArgumentError, NumericalError
from vdeeponet.phasefield import (CrackSegment, EnergyDensity, HistoryField,
                                  MaterialParams, clamp_counter, crack_density,
                                  degradation, elastic_density, fracture_density,
                                  initial_history, segment_distance,
                                  strain_from_gradients, strain_split,
                                  total_energy, update_history)

MAT = MaterialParams(nu_lame=121.15, mu_lame=80.77, g_c=2.7e-3, l_0=0.0625)


def test_degradation_plugin_values():
    assert degradation(0.0) == 1.0
    assert degradation(1.0) == 0.0
    assert degradation(0.5) == 0.25


def test_degradation_clamps_and_counts():
    clamp_counter.reset()
    assert degradation(1.5) == 0.0
    assert degradation(-0.25) == 1.0
    assert clamp_counter.events == 2


def test_crack_density_plugin_values():
    assert crack_density(0.0, [0.0, 0.0], 0.0625) == 0.0
    assert np.isclose(crack_density(1.0, [0.0, 0.0], 0.0625), 8.0)
    with pytest.raises(ArgumentError):
        crack_density(0.5, [0.0, 0.0], 0.0)


def test_crack_density_nonnegative_and_zero_only_at_origin():
    rng = np.random.default_rng(0)
    phi = rng.uniform(0, 1, 1000)
    grads = rng.normal(size=(1000, 2))
    vals = crack_density(phi, grads, MAT.l_0)
    assert np.all(vals >= 0.0)
    assert np.all(vals[(phi > 0) | (np.abs(grads).sum(axis=1) > 0)] > 0.0)


def test_analytic_1d_crack_energy_equals_gc():
    # trapezoid oracle: 1e5 points across [a - 20 l0, a + 20 l0]
    a, l0 = 0.0, MAT.l_0
    x = np.linspace(a - 20 * l0, a + 20 * l0, 100_000)
    phi = np.exp(-np.abs(x - a) / l0)
    dphi = np.sign(a - x) * phi / l0
    theta = (phi ** 2 + l0 ** 2 * dphi ** 2) / (2 * l0)
    integral = np.trapezoid(theta, x)
    assert abs(integral - 1.0) < 0.01
    assert abs(MAT.g_c * integral - MAT.g_c) < 0.01 * MAT.g_c


def test_initial_history_plugin_values():
    crack = CrackSegment(0.0, 0.5, 0.5, 0.5)
    # d = 0 at a point on the segment
    val = initial_history(np.array([[0.25, 0.5]]), crack, MAT, b_scalar=1000.0)
    assert np.isclose(val[0], 21.6)
    # d = l0 / 4 -> half the peak
    val = initial_history(np.array([[0.25, 0.5 + MAT.l_0 / 4]]), crack, MAT, 1000.0)
    assert np.isclose(val[0], 10.8)
    # beyond the support
    val = initial_history(np.array([[0.25, 0.5 + 0.6 * MAT.l_0]]), crack, MAT, 1000.0)
    assert val[0] == 0.0


def test_initial_history_continuity_across_support_edge():
    crack = CrackSegment(0.0, 0.5, 0.5, 0.5)
    d_edge = MAT.l_0 / 2
    ys = 0.5 + np.array([d_edge - 1e-6, d_edge + 1e-6])
    pts = np.column_stack([np.full(2, 0.25), ys])
    vals = initial_history(pts, crack, MAT, 1000.0)
    peak = 1000.0 * MAT.g_c / (2 * MAT.l_0)
    assert abs(vals[0] - vals[1]) < 1e-3 * peak


def test_initial_history_argument_errors():
    crack = CrackSegment(0.0, 0.5, 0.5, 0.5)
    with pytest.raises(ArgumentError):
        initial_history(np.array([[0.1, 0.5]]), crack, MAT, b_scalar=0.0)
    with pytest.raises(ArgumentError):
        CrackSegment(0.2, 0.2, 0.2, 0.2)


def test_segment_distance_endpoint_caps():
    crack = CrackSegment(0.25, 0.5, 0.75, 0.5)
    assert np.isclose(segment_distance(np.array([0.5, 0.7]), crack), 0.2)
    # beyond the right endpoint: distance to the cap, not the infinite line
    assert np.isclose(segment_distance(np.array([0.85, 0.5]), crack), 0.1)
    assert np.isclose(segment_distance(np.array([0.85, 0.6]), crack),
                      np.hypot(0.1, 0.1))


def test_strain_from_gradients_cases():
    s = strain_from_gradients(0.0, 0.0, 0.0, 0.0)
    assert s.lam1 == 0.0 and s.lam2 == 0.0
    e = 1e-3
    s = strain_from_gradients(e, 0.0, 0.0, 0.0)
    assert np.isclose(s.lam1, e) and np.isclose(s.lam2, 0.0)
    gamma = 2e-3
    s = strain_from_gradients(0.0, gamma, gamma, 0.0)
    assert np.isclose(s.lam1, gamma) and np.isclose(s.lam2, -gamma)
    with pytest.raises(NumericalError):
        strain_from_gradients(np.nan, 0.0, 0.0, 0.0)


def test_strain_trace_identity():
    rng = np.random.default_rng(1)
    g = rng.normal(scale=1e-3, size=(500, 4))
    s = strain_from_gradients(g[:, 0], g[:, 1], g[:, 2], g[:, 3])
    assert np.max(np.abs(s.lam_s - (s.eps_xx + s.eps_yy))) < 1e-12


def test_strain_split_compression_has_no_tensile_part():
    e = 1e-3
    s = strain_from_gradients(-e, 0.0, 0.0, -e)
    psi_plus, psi_minus = strain_split(s, MAT)
    assert psi_plus == 0.0
    assert psi_minus > 0.0


def test_strain_split_uniaxial_plugin():
    e = 1e-3
    s = strain_from_gradients(e, 0.0, 0.0, 0.0)
    psi_plus, psi_minus = strain_split(s, MAT)
    assert np.isclose(psi_plus, 1.41345e-4, rtol=1e-6)
    assert psi_minus == 0.0


def test_strain_split_reconstruction_identity():
    # oracle: direct evaluation of (nu/2) lam_s^2 + mu sum(lam_i^2)
    rng = np.random.default_rng(2)
    g = rng.normal(scale=1e-2, size=(10_000, 4))
    s = strain_from_gradients(g[:, 0], g[:, 1], g[:, 2], g[:, 3])
    psi_plus, psi_minus = strain_split(s, MAT)
    direct = MAT.nu_lame / 2 * s.lam_s ** 2 + MAT.mu_lame * (s.lam1 ** 2 + s.lam2 ** 2)
    rel = np.abs((psi_plus + psi_minus) - direct) / np.abs(direct)
    assert np.max(rel) < 1e-12
    assert np.all(psi_plus >= 0.0) and np.all(psi_minus >= 0.0)


def test_strain_split_sign_cases():
    rng = np.random.default_rng(3)
    g = np.abs(rng.normal(scale=1e-3, size=(200, 2)))
    tension = strain_from_gradients(g[:, 0], 0.0 * g[:, 0], 0.0 * g[:, 0], g[:, 1])
    _, psi_minus = strain_split(tension, MAT)
    assert np.all(psi_minus == 0.0)
    compression = strain_from_gradients(-g[:, 0], 0.0 * g[:, 0], 0.0 * g[:, 0],
                                        -g[:, 1])
    psi_plus, _ = strain_split(compression, MAT)
    assert np.all(psi_plus == 0.0)


def test_elastic_density_cases():
    assert elastic_density(4.0, 1.0, 1.0) == 1.0
    assert elastic_density(4.0, 1.0, 0.0) == 5.0
    assert elastic_density(4.0, 1.0, 0.5) == 2.0


def test_fracture_density_cases():
    assert fracture_density(0.0, [0.0, 0.0], 0.0, MAT) == 0.0
    # degradation kills the history term at phi = 1
    assert np.isclose(fracture_density(1.0, [0.0, 0.0], 123.0, MAT), 0.0216)
    # seeded ridge: history drives the energy through g(phi) * H
    assert np.isclose(fracture_density(0.0, [0.0, 0.0], 21.6, MAT), 21.6)
    with pytest.raises(ArgumentError):
        fracture_density(0.0, [0.0, 0.0], -1.0, MAT)


def test_fracture_density_prefers_damage_on_seeded_ridge():
    # pointwise optimum of the density sits near phi = B/(1+B) when H is the
    # seeded peak, matching the B accounting of the initial ridge
    h_peak = 21.6
    phis = np.linspace(0.0, 1.0, 2001)
    f = fracture_density(phis, np.zeros((2001, 2)), h_peak, MAT)
    best = phis[np.argmin(f)]
    assert abs(best - 1000.0 / 1001.0) < 1e-3


def test_total_energy_cases():
    zero = EnergyDensity(np.zeros(10), np.zeros(10), np.zeros(10), np.zeros(10))
    assert total_energy(zero, 1.0) == 0.0
    const = EnergyDensity(np.full(10, 0.3), np.full(10, 0.4), np.zeros(10),
                          np.zeros(10))
    assert np.isclose(total_energy(const, 1.0), 0.7)
    with pytest.raises(ArgumentError):
        total_energy([], 1.0)
    with pytest.raises(ArgumentError):
        total_energy(zero, 0.0)


def test_total_energy_monte_carlo_matches_trapezoid():
    # 1-D crack profile embedded in 2-D with zero elastic field
    a, l0 = 0.5, MAT.l_0
    ys = np.linspace(0.0, 1.0, 200_001)
    phi_line = np.exp(-np.abs(ys - a) / l0)
    dphi_line = np.sign(a - ys) * phi_line / l0
    f_line = MAT.g_c * (phi_line ** 2 + l0 ** 2 * dphi_line ** 2) / (2 * l0)
    oracle = np.trapezoid(f_line, ys)

    rng = np.random.default_rng(4)
    pts = rng.uniform(0.0, 1.0, size=(100_000, 2))
    phi = np.exp(-np.abs(pts[:, 1] - a) / l0)
    dphi = np.column_stack([np.zeros(len(pts)),
                            np.sign(a - pts[:, 1]) * phi / l0])
    f_c = MAT.g_c * crack_density(phi, dphi, l0)
    mc = total_energy(EnergyDensity(np.zeros(len(pts)), f_c,
                                    np.zeros(len(pts)), np.zeros(len(pts))), 1.0)
    assert abs(mc - oracle) < 0.02 * oracle


def test_update_history_rules():
    pts = np.array([[0.1, 0.1], [0.2, 0.2], [0.3, 0.3]])
    h0 = HistoryField(pts, np.array([1.0, 2.0, 3.0]), step=0)
    unchanged = update_history(h0, np.zeros(3))
    assert np.array_equal(unchanged.values, h0.values)
    assert unchanged.step == 1
    fresh = update_history(HistoryField(pts, np.zeros(3)), np.array([4.0, 5.0, 6.0]))
    assert np.array_equal(fresh.values, [4.0, 5.0, 6.0])
    with pytest.raises(ArgumentError):
        update_history(h0, np.zeros(4))


def test_update_history_matches_bruteforce_scan():
    rng = np.random.default_rng(5)
    pts = rng.uniform(size=(20, 2))
    seq = rng.uniform(0.0, 10.0, size=(15, 20))
    h = HistoryField(pts, np.zeros(20), step=0)
    for psi in seq:
        h = update_history(h, psi)
    assert np.array_equal(h.values, seq.max(axis=0))
    assert h.step == 15
    # idempotent when reapplied with the same field
    again = update_history(h, seq[-1])
    assert np.array_equal(again.values, h.values)


def test_material_params_validation():
    with pytest.raises(ArgumentError):
        MaterialParams(1.0, 0.0, 1.0, 1.0)
    with pytest.raises(ArgumentError):
        MaterialParams(1.0, 1.0, -1.0, 1.0)
    with pytest.raises(ArgumentError):
        MaterialParams(1.0, 1.0, 1.0, 0.0)
