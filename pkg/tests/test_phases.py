import numpy as np
import pytest

from ptigp import twolevel as tl
from ptigp.errors import AdiabaticityBreakdown, ImaginaryLeak
from ptigp.gaugemap import raw_map_along
from ptigp.paths import latitude_loop, polyline
from ptigp.phases import (berry_w_formula, evolve_oracle, evolve_report, loop_phases, mod_2pi,
                          parallel_transport_residual, theta1_loop, theta1_open, theta2_details,
                          theta2_loop, wrap_angle)
from ptigp.ptsystem import spectrum_along

from conftest import angle_diff


def test_wrap_helpers():
    assert mod_2pi(-0.5) == pytest.approx(2 * np.pi - 0.5)
    assert wrap_angle(3 * np.pi / 2) == pytest.approx(-np.pi / 2)


@pytest.mark.parametrize("theta", [0.3, 1.0, 2.5])
def test_theta1_matches_exact_loop_integral(loops, theta):
    d = loops(theta)
    got = theta1_loop(d.system, d.path, 1, spectra=d.spectra)
    exact = tl.analytic_theta1(tl.TwoLevelParams(theta=theta), include_offset=False)[0]
    assert angle_diff(got.real, exact.real) < 1e-8
    assert got.imag == pytest.approx(exact.imag, abs=1e-8)


def test_theta1_levels_are_conjugate_images(loops):
    d = loops(1.0)
    t = theta1_loop(d.system, d.path, spectra=d.spectra)
    assert t[0].imag == pytest.approx(-t[1].imag, abs=1e-9)


def test_theta1_without_richardson_is_close(loops):
    d = loops(1.0)
    a = theta1_loop(d.system, d.path, 1, spectra=d.spectra)
    b = theta1_loop(d.system, d.path, 1, spectra=d.spectra, richardson=False)
    assert 1e-9 < abs(a - b) < 1e-5


def test_theta1_requires_closed_path(pt_system):
    with pytest.raises(ValueError):
        theta1_loop(pt_system, latitude_loop(1.0, 100).prefix(50))


def test_theta2_agrees_with_berry_and_exact(loops):
    d = loops(2.5)
    t2 = theta2_loop(d.system, d.path, proper=d.proper, spectra=d.spectra)
    tb = berry_w_formula(d.system, d.path, spectra=d.spectra)
    plus, minus = tl.analytic_theta2(tl.TwoLevelParams(theta=2.5), include_offset=False)
    exact = np.array([minus, plus])
    assert angle_diff(t2, tb).max() < 1e-8
    assert angle_diff(t2, exact).max() < 1e-8


def test_raw_map_leaks_real_part(loops):
    d = loops(1.0)
    raw = raw_map_along(d.system, d.path)
    with pytest.raises(ImaginaryLeak):
        theta2_details(d.system, d.path, raw, d.spectra)
    leak = theta2_details(d.system, d.path, raw, d.spectra, check_leak=False).leak
    assert np.abs(leak).max() > 1e-2


def test_loop_phase_report_consistency(loops):
    d = loops(1.0)
    reps = loop_phases(d.system, d.path, proper=d.proper, spectra=d.spectra)
    for r in reps:
        assert r.residual_berry < 1e-8
        assert r.residual_split < 1e-7
        assert abs(r.correction.real) < 1e-7
        assert 0 <= r.theta1.real < 2 * np.pi


def test_hermitian_limit_is_half_solid_angle(spin_system):
    path = latitude_loop(1.0, 2000)
    t1 = theta1_loop(spin_system, path)
    om = tl.solid_angle(1.0)
    # spin-1/2 Berry phases: ground level -Omega/2 ... here with the pole-enclosing gauge
    assert angle_diff(t1[1].real, np.pi - om / 2) < 1e-8 or angle_diff(t1[1].real, -om / 2) < 1e-8
    assert angle_diff(t1[0].real + t1[1].real, 0.0) < 1e-8
    assert np.abs(t1.imag).max() < 1e-8


def test_open_path_phase_closes_to_loop_phase(loops):
    d = loops(1.0, 400)
    op = theta1_open(d.system, d.path, d.spectra)
    assert op.shape == (401, 2)
    assert np.abs(op[0]).max() == 0
    closed = op[-1] - 1j * np.log(d.spectra.closure())
    raw = theta1_loop(d.system, d.path, spectra=d.spectra, richardson=False)
    assert angle_diff(closed.real, raw.real).max() < 1e-12
    np.testing.assert_allclose(closed.imag, raw.imag, atol=1e-12)


def test_transport_residual_and_negative_control(loops):
    d = loops(1.0)
    assert parallel_transport_residual(d.system, d.path, d.spectra) < 1e-8
    assert parallel_transport_residual(d.system, d.path, d.spectra, with_prefactor=False) > 0.1


def test_oracle_converges_with_ramp(pt_system):
    path = latitude_loop(1.0, 256)
    sp = spectrum_along(pt_system, path)
    errs = [evolve_report(pt_system, path, 1, r, spectra=sp).error for r in (10, 50)]
    assert errs[1] < errs[0] < 0.1


def test_oracle_breakdown_when_fast(pt_system):
    path = latitude_loop(1.0, 256)
    with pytest.raises(AdiabaticityBreakdown) as info:
        evolve_oracle(pt_system, path, 1, 1.0)
    assert info.value.leaked_population > 0.01


def test_non_latitude_loop_berry_agreement(pt_system):
    tri = [[0.6, 0.0], [1.8, 1.0], [1.0, 3.0], [0.6, 0.0]]
    path = polyline(tri, samples=4000)
    reps = loop_phases(pt_system, path)
    assert max(r.residual_berry for r in reps) < 1e-5
