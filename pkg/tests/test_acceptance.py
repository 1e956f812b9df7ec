"""Acceptance gate, one test per criterion.

Each test prints one ``[PASS]`` or ``[FAIL]`` line per sub-check and then
asserts that all of them passed.  Tolerances are pinned below.

Several criteria compare against closed forms that carry a constant
``+-(pi/4)(1 - r)`` term (``include_offset=True`` in :mod:`ptigp.twolevel`).
The loop integrals themselves do not contain it, so those sub-checks fail by
``pi/8`` while the matching comparisons against the offset-free closed forms
pass.  The README works through the derivation.
"""

import hashlib
import io
import time

import numpy as np
import pytest

from ptigp import twolevel as tl
from ptigp.cli import main
from ptigp.paths import latitude_loop
from ptigp.phases import (berry_w_formula, evolve_report, parallel_transport_residual, theta1_loop,
                          theta2_loop)
from ptigp.ptsystem import spectrum_along
from ptigp.thermal import critical_scan, igp_loop, scan_grid

from conftest import ACCEPTANCE_THETAS, angle_diff, record

PHASE_TOL = 1e-4
LOOP_RUNTIME_S = 1.0
BERRY_TOL = 1e-5
U_TOL = 1e-6
PROPER_TOL = 1e-4
COLD_TOL = 1e-6
HOT_TOL = 1e-4
CRIT_COS_TOL = 1e-3
CRIT_BETA_TOL = 1e-3
POINT_A_BETA = 1.6
POINT_A_TOL = 0.01
SCAN_RUNTIME_S = 60.0
JUMP_TOL = np.radians(2.0)
SPLIT_TOL = 1e-3
TRANSPORT_TOL = 1e-4
CONTROL_MIN = 0.1
ORACLE_TOL = 1e-2
PROPERTY_TOL = 1e-10
HERMITIAN_TOL = 1e-8
SCAN_CELL_TOL = 1e-6
REFERENCE_CRITICAL_COS = (5 / 12, -1 / 4, -11 / 12)


def _params(theta):
    return tl.TwoLevelParams(theta=theta)


def test_acceptance_01_two_level_loop_phases(pt_system):
    ok = True
    for theta in ACCEPTANCE_THETAS:
        start = time.perf_counter()
        path = latitude_loop(theta, 4000)
        got = theta1_loop(pt_system, path, 1)
        elapsed = time.perf_counter() - start
        printed = tl.analytic_theta1(_params(theta))[0]
        exact = tl.analytic_theta1(_params(theta), include_offset=False)[0]
        d_re = angle_diff(got.real, printed.real)
        d_im = abs(got.imag - printed.imag)
        ok &= record(f"1 theta={theta:.4f} Re theta1_+ vs reference form", d_re <= PHASE_TOL, f"|d|={d_re:.3e}")
        ok &= record(f"1 theta={theta:.4f} Im theta1_+ vs reference form", d_im <= PHASE_TOL, f"|d|={d_im:.3e}")
        d_exact = abs(complex(angle_diff(got.real, exact.real), got.imag - exact.imag))
        ok &= record(f"1 theta={theta:.4f} theta1_+ vs offset-free form", d_exact <= PHASE_TOL, f"|d|={d_exact:.3e}")
        ok &= record(f"1 theta={theta:.4f} runtime", elapsed < LOOP_RUNTIME_S, f"{elapsed:.3f} s")
    assert ok


def test_acceptance_02_theta2_equals_berry(loops):
    ok = True
    for theta in ACCEPTANCE_THETAS:
        d = loops(theta)
        t2 = theta2_loop(d.system, d.path, proper=d.proper, spectra=d.spectra)
        tb = berry_w_formula(d.system, d.path, spectra=d.spectra)
        diff = angle_diff(t2, tb).max()
        ok &= record(f"2 theta={theta:.4f} |theta2 - theta_B|", diff <= BERRY_TOL, f"{diff:.3e}")
        plus, minus = tl.analytic_theta2(_params(theta))
        printed = np.array([minus, plus])
        plus0, minus0 = tl.analytic_theta2(_params(theta), include_offset=False)
        exact = np.array([minus0, plus0])
        for name, val in (("theta2", t2), ("theta_B", tb)):
            dp = angle_diff(val, printed).max()
            de = angle_diff(val, exact).max()
            ok &= record(f"2 theta={theta:.4f} {name} vs reference form", dp <= PHASE_TOL, f"{dp:.3e}")
            ok &= record(f"2 theta={theta:.4f} {name} vs offset-free form", de <= PHASE_TOL, f"{de:.3e}")
    assert ok


def test_acceptance_03_proper_map_closed_form(loops):
    from ptigp.gaugemap import properness_residual

    d = loops(1.0)
    u = d.proper.u_samples
    err = np.abs(u - tl.analytic_proper_u(d.path.points[:, 1])).max()
    res = properness_residual(d.proper)
    ok = record("3 u(phi) vs diag(e^{i phi/4}, e^{-i phi/4})", err <= U_TOL, f"max entry error {err:.3e}")
    ok &= record("3 properness residual", res <= PROPER_TOL, f"{res:.3e}")
    assert ok


def test_acceptance_04_igp_limits(loops):
    d = loops(np.pi / 2)
    cold = igp_loop(d.system, d.path, 50.0, spectra=d.spectra).theta_g
    hot = igp_loop(d.system, d.path, 1e-3, spectra=d.spectra).theta_g
    dc = angle_diff(cold, 9 * np.pi / 8)
    dh = angle_diff(hot, 7 * np.pi / 8)
    ok = record("4 theta_G(beta=50) = 9pi/8", dc <= COLD_TOL, f"theta_G={cold:.9f}, |d|={dc:.3e}")
    ok &= record("4 theta_G(beta=0.001) = 7pi/8", dh <= HOT_TOL, f"theta_G={hot:.9f}, |d|={dh:.3e}")
    p = _params(np.pi / 2)
    for beta, got in ((50.0, cold), (1e-3, hot)):
        ref = tl.analytic_igp(p, beta, include_offset=False)
        de = angle_diff(got, ref)
        ok &= record(f"4 theta_G(beta={beta:g}) vs offset-free form (pi)", de <= HOT_TOL, f"|d|={de:.3e}")
    assert ok


@pytest.fixture(scope="module")
def critical_run(pt_system):
    thetas = np.linspace(0.0, np.pi, 200)
    betas = np.linspace(0.1, 5.0, 200)
    family = lambda t: latitude_loop(t, 1000)  # noqa: E731
    start = time.perf_counter()
    grid = scan_grid(pt_system, family, betas, thetas, threads=8)
    points = critical_scan(pt_system, family, betas, thetas, threads=8, grid=grid)
    elapsed = time.perf_counter() - start
    return grid, points, elapsed


def test_acceptance_05_critical_points(critical_run):
    _, points, elapsed = critical_run
    cos = np.array(sorted(np.cos([p.param for p in points])))
    ok = record("5 number of critical points", len(points) == 3, f"found {len(points)} at cos theta={np.round(cos, 6)}")
    for target in REFERENCE_CRITICAL_COS:
        dist = np.abs(cos - target).min() if len(cos) else np.inf
        ok &= record(f"5 point at cos theta={target:+.4f}", dist <= CRIT_COS_TOL, f"nearest |d|={dist:.3e}")
    for p in points:
        db = abs(p.beta - tl.critical_beta(p.param))
        ok &= record(f"5 cos theta={np.cos(p.param):+.6f} on critical arc", db <= CRIT_BETA_TOL, f"|d beta|={db:.3e}")
    exact = sorted(np.cos([t for t, _ in tl.analytic_critical_points(include_offset=False)]))
    ok &= record("5 points match offset-free prediction cos theta = -+1/3",
                 len(cos) == len(exact) and np.allclose(cos, exact, atol=CRIT_COS_TOL, rtol=0),
                 f"expected {np.round(exact, 6)}")
    a = max(points, key=lambda p: np.cos(p.param)) if points else None
    if a is None:
        ok &= record("5 point A beta", False, "no points")
    else:
        ok &= record("5 point A beta ~ 1.6", abs(a.beta - POINT_A_BETA) <= POINT_A_TOL,
                     f"beta={a.beta:.6f} at cos theta={np.cos(a.param):+.6f}")
    ok &= record("5 runtime", elapsed < SCAN_RUNTIME_S, f"{elapsed:.2f} s")
    assert ok


def test_acceptance_06_pi_jump_quantization(critical_run, pt_system):
    _, points, _ = critical_run
    ok = record("6 critical points available", len(points) > 0, f"{len(points)} points")
    for p in points:
        dj = abs(abs(p.jump) - np.pi)
        ok &= record(f"6 cos theta={np.cos(p.param):+.6f} theta_G jump = pi", dj <= JUMP_TOL,
                     f"jump={p.jump:+.6f}, |d|={np.degrees(dj):.3e} deg")
        path = latitude_loop(p.param, 4000)
        t2 = theta2_loop(pt_system, path)
        split = t2[0] - t2[1]
        ds = angle_diff(split, np.pi)
        ok &= record(f"6 cos theta={np.cos(p.param):+.6f} theta2_- - theta2_+ = pi mod 2pi", ds <= SPLIT_TOL,
                     f"|d|={ds:.3e}")
    assert ok


def test_acceptance_07_parallel_transport(loops):
    ok = True
    for theta in ACCEPTANCE_THETAS:
        d = loops(theta)
        res = parallel_transport_residual(d.system, d.path, d.spectra)
        ctrl = parallel_transport_residual(d.system, d.path, d.spectra, with_prefactor=False)
        ok &= record(f"7 theta={theta:.4f} transport residual", res <= TRANSPORT_TOL, f"{res:.3e}")
        ok &= record(f"7 theta={theta:.4f} control without prefactor", ctrl > CONTROL_MIN, f"{ctrl:.3e}")
    assert ok


def test_acceptance_08_adiabatic_oracle(pt_system):
    path = latitude_loop(1.0, 256)
    sp = spectrum_along(pt_system, path)
    errs = []
    for ramp in (10, 50, 200):
        rep = evolve_report(pt_system, path, 1, ramp, spectra=sp, strict=False)
        errs.append(rep.error)
        record(f"8 ramp={ramp} error", True, f"{rep.error:.4e} (leaked {rep.leaked_population:.2e})")
    ok = record("8 monotone decrease", errs[0] > errs[1] > errs[2], str([f"{e:.3e}" for e in errs]))
    ok &= record("8 error at ramp 200", errs[2] <= ORACLE_TOL, f"{errs[2]:.3e}")
    assert ok


def test_acceptance_09_property_suite():
    from ptigp import numkernel as nk
    from ptigp.ptsystem import SpectrumPath, check_pseudo_hermiticity, spectrum_at
    from ptigp.phases import theta1_raw

    rng = np.random.default_rng(20261016)
    worst = np.zeros(3)
    for _ in range(500):
        a = rng.uniform(0.5, 5.0)
        b = rng.uniform(-0.9, 0.9) * a
        system = tl.system(a, b, rng.uniform(-2, 2))
        pt = rng.uniform([0.01, 0.0], [np.pi - 0.01, 2 * np.pi])
        sp = spectrum_at(system, pt)
        worst = np.maximum(worst, [sp.biorthonormality_residual(), sp.completeness_residual(),
                                   check_pseudo_hermiticity(system, pt)])
    ok = True
    for name, v in zip(("biorthonormality", "completeness", "pseudo-Hermiticity"), worst):
        ok &= record(f"9 {name} over 500 random points", v <= PROPERTY_TOL, f"{v:.3e}")

    gauge = 0.0
    for _ in range(10):
        path = latitude_loop(rng.uniform(0.2, 2.9), 400)
        sp = spectrum_along(tl.system(), path)
        lam = rng.uniform(0.2, 5, (len(path), 2)) * np.exp(1j * rng.uniform(-np.pi, np.pi, (len(path), 2)))
        g = SpectrumPath(path, sp.energies, sp.right * lam[..., None], sp.left / np.conj(lam)[..., None])
        x, y = theta1_raw(sp), theta1_raw(g)
        gauge = max(gauge, angle_diff(x.real, y.real).max(), np.abs(x.imag - y.imag).max())
    ok &= record("9 Wilson loop gauge invariance", gauge <= PROPERTY_TOL, f"{gauge:.3e}")

    herm = 0.0
    for _ in range(10):
        theta, beta, a = rng.uniform(0.1, 3.0), rng.uniform(1e-3, 20), rng.uniform(0.5, 3.0)
        rep = igp_loop(tl.system(a, 0.0), latitude_loop(theta, 2000), beta)
        om = tl.solid_angle(theta)
        w = np.exp(-beta * np.array([-a, a]) - np.logaddexp(-beta * a, beta * a))
        ref = np.angle(w[0] * np.exp(0.5j * om) + w[1] * np.exp(-0.5j * om))
        herm = max(herm, angle_diff(rep.theta_g, ref))
    ok &= record("9 Hermitian reduction vs mixed-state IGP", herm <= HERMITIAN_TOL, f"{herm:.3e}")
    assert ok


# SHA-256 of the default igp-scan CSV produced on the reference machine
SCAN_SHA256 = "ba348d0710f0ef693d2ce6ae344c72eddc1f50d61b9f0ded17c6a687dbb912a7"

PINNED_CELLS = [
    (0.3, 0.1), (0.6, 0.5), (0.9, 1.0), (1.2, 1.5), (np.pi / 2, 0.1),
    (np.pi / 2, 5.0), (1.9, 2.0), (2.2, 0.8), (2.5, 3.0), (2.8, 0.3),
]


def test_acceptance_10_scan_regression(tmp_path, pt_system):
    outs = []
    for threads in ("1", "2"):
        target = tmp_path / f"scan{threads}.csv"
        code = main(["igp-scan", "--threads", threads, f"--output.path={target}"], stdout=io.StringIO())
        assert code == 0
        outs.append(target.read_bytes())
    ok = record("10 igp-scan output byte-identical across runs", outs[0] == outs[1],
                f"{len(outs[0])} bytes")
    digest = hashlib.sha256(outs[0]).hexdigest()
    ok &= record("10 igp-scan output matches pinned digest", digest == SCAN_SHA256, digest[:16])

    worst_p = worst_e = 0.0
    for th, b in PINNED_CELLS:
        rep = igp_loop(pt_system, latitude_loop(th, 1000), b)
        worst_p = max(worst_p, angle_diff(rep.theta_g, tl.analytic_igp(_params(th), b)))
        worst_e = max(worst_e, angle_diff(rep.theta_g, tl.analytic_igp(_params(th), b, include_offset=False)))
    ok &= record("10 pinned cells vs reference IGP form", worst_p <= SCAN_CELL_TOL, f"max |d|={worst_p:.3e}")
    ok &= record("10 pinned cells vs offset-free IGP form", worst_e <= SCAN_CELL_TOL, f"max |d|={worst_e:.3e}")
    assert ok
