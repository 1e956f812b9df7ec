"""Pure-state loop phases of pseudo-Hermitian systems.

Loop phases are evaluated as discrete Wilson products of biorthogonal
overlaps, which makes them independent of the eigenvector section.  Levels
are indexed in ascending energy order (level 0 is the ground state).

Notation: ``theta1`` is the complex phase ``i oint <Phi|d Psi>``, ``theta2``
the real phase ``i oint <Psi0|d Psi0>`` of the Hermitian partner states
``Psi0 = S^-1 Psi`` under a proper map ``S``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.integrate

from . import numkernel as nk
from .errors import AdiabaticityBreakdown, ImaginaryLeak, ZeroOverlap
from .gaugemap import proper_map_along
from .ptsystem import SpectrumPath, ZERO_OVERLAP, spectrum_along

TWO_PI = 2 * np.pi
LEAK_TOL = 1e-6
LEAKED_POPULATION_MAX = 0.01
FD_STEP = 1e-5


def mod_2pi(x):
    """Map angles into ``[0, 2 pi)``."""
    r = np.mod(x, TWO_PI)
    return np.where(r >= TWO_PI, 0.0, r)


def wrap_angle(x):
    """Map angles into ``(-pi, pi]``."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), TWO_PI)


def _complex_mod(z):
    z = np.asarray(z, dtype=complex)
    return mod_2pi(z.real) + 1j * z.imag


def _subsample(sp, step):
    return SpectrumPath(sp.path.every(step), sp.energies[::step], sp.right[::step], sp.left[::step])


def _can_extrapolate(sp):
    intervals = len(sp) - 1
    return intervals % 2 == 0 and intervals >= 8


def segment_increments(sp):
    """Gauge-covariant log-increments of the Wilson product, shape (M-1, N).

    Each increment is ``log z_k - (1/2) log(z_k z'_k)`` with the forward and
    backward overlaps ``z_k = <Phi(t_k)|Psi(t_k+1)>`` and
    ``z'_k = <Phi(t_k+1)|Psi(t_k)>``.  The symmetric correction removes the
    first-order error of the plain product in the amplitude while leaving the
    gauge covariance intact, since ``z_k z'_k`` is gauge invariant.
    """
    z = sp.forward_overlaps()
    zb = sp.backward_overlaps()
    small = np.abs(z) < ZERO_OVERLAP
    if np.any(small):
        k = int(np.argmax(small.any(axis=-1)))
        raise ZeroOverlap(f"overlap below {ZERO_OVERLAP:g} between samples {k} and {k + 1}")
    return np.log(z) - 0.5 * np.log(z * zb)


def partial_logs(sp):
    """Cumulative increments ``L_k``, with ``L_0 = 0``; shape (M, N).

    ``i L_k`` is the open-path phase up to sample `k` in the section carried
    by `sp`.  It is gauge dependent until the path closes.
    """
    inc = segment_increments(sp)
    return np.concatenate([np.zeros((1, sp.dim), dtype=complex), np.cumsum(inc, axis=0)])


def _extrapolated_log(sp, richardson):
    """Total log-increment with optional Richardson extrapolation."""
    full = partial_logs(sp)[-1]
    if not (richardson and _can_extrapolate(sp)):
        return full
    half = partial_logs(_subsample(sp, 2))[-1]
    half = half + 2j * np.pi * np.round((full - half).imag / TWO_PI)
    return (4 * full - half) / 3


def theta1_raw(sp, richardson=True):
    """Unreduced complex ``theta1`` for every level of a closed spectrum path.

    The closing link uses ``<Phi(t_last)|Psi(t_0)> = 1 / <Phi(t_0)|Psi(t_last)>``.
    """
    total = _extrapolated_log(sp, richardson) - np.log(sp.closure())
    return 1j * total


def theta1_from_spectra(sp, richardson=True):
    """``theta1`` per level with the real part reduced to ``[0, 2 pi)``."""
    return _complex_mod(theta1_raw(sp, richardson))


def _require_closed(path):
    if not path.closed:
        raise ValueError("a closed path is required")


def _levels(result, n):
    return result if n is None else result[n]


def theta1_loop(system, path, n=None, richardson=True, spectra=None):
    """Complex geometric phase ``i oint <Phi_n|d Psi_n>`` of a closed loop.

    Parameters
    ----------
    system : PTSystem
    path : LoopPath
        Closed loop.
    n : int, optional
        Level index (ascending energy).  All levels when omitted.
    richardson : bool
        Combine with the every-other-sample loop to cancel the leading
        discretization error.  Needs an even interval count.
    spectra : SpectrumPath, optional
        Precomputed spectra along `path`.

    Returns
    -------
    complex or ndarray
        Real part in ``[0, 2 pi)``; the imaginary part is a log-amplitude and
        is not reduced.
    """
    _require_closed(path)
    sp = spectra if spectra is not None else spectrum_along(system, path)
    return _levels(theta1_from_spectra(sp, richardson), n)


def theta1_open(system, path, spectra=None):
    """Open-path phases ``i L_k`` at every sample, shape (M, N).

    The section is the phase-smoothed one of :func:`spectrum_along`.  The
    values depend on that section; only the closed combination
    ``i L_last + i log <Phi_n(0)|Psi_n(tau)>`` is gauge invariant.
    """
    sp = spectra if spectra is not None else spectrum_along(system, path)
    return 1j * partial_logs(sp)


def partner_states(sp, proper):
    """``Psi0_n(t_k) = S_p^-1(t_k) Psi_n(t_k)``, normalized; shape (M, N, N).

    For closed paths the last sample is first brought back to the section at
    ``t_0`` (``Psi(t_last) / <Phi(t_0)|Psi(t_last)>``), so that only the
    non-periodicity of the proper map is left at the end.
    """
    right = sp.right.copy()
    if sp.path.closed:
        right[-1] = right[-1] / sp.closure()[:, None]
    psi0 = np.einsum("kij,knj->kni", proper.s_proper_inv, right)
    return psi0 / np.linalg.norm(psi0, axis=-1, keepdims=True)


def _hermitian_line(psi0):
    ov = np.sum(np.conj(psi0[:-1]) * psi0[1:], axis=-1)
    return -np.sum(np.angle(ov), axis=0), np.sum(np.log(np.abs(ov)), axis=0)


@dataclass(frozen=True)
class Theta2Result:
    value: np.ndarray
    imag_residual: np.ndarray
    leak: np.ndarray


def theta2_details(system, path, proper=None, spectra=None, richardson=True, check_leak=True):
    """``theta2`` for all levels, with diagnostics.

    `leak` is ``wrap(Re theta1 - theta2)``: the real part of the
    ``theta1 - theta2`` correction, which vanishes for a proper map.
    `imag_residual` is the log-norm drift of the discrete line.

    Raises
    ------
    ImaginaryLeak
        If ``check_leak`` and ``|leak| > 1e-6`` for some level.
    """
    _require_closed(path)
    sp = spectra if spectra is not None else spectrum_along(system, path)
    proper = proper if proper is not None else proper_map_along(system, path)
    psi0 = partner_states(sp, proper)
    full, imag = _hermitian_line(psi0)
    value = full
    if richardson and _can_extrapolate(sp):
        half, _ = _hermitian_line(psi0[::2])
        half = half + TWO_PI * np.round((full - half) / TWO_PI)
        value = (4 * full - half) / 3
    value = mod_2pi(value)
    leak = wrap_angle(theta1_from_spectra(sp, richardson).real - value)
    if check_leak and np.any(np.abs(leak) > LEAK_TOL):
        raise ImaginaryLeak(f"theta1 and theta2 differ by a real part {np.max(np.abs(leak)):.3e}; "
                            "the similarity map is not proper")
    return Theta2Result(value, imag, leak)


def theta2_loop(system, path, n=None, proper=None, spectra=None, richardson=True, check_leak=True):
    """Real geometric phase ``i oint <Psi0_n|d Psi0_n>`` in ``[0, 2 pi)``.

    `proper` defaults to :func:`proper_map_along` on `path`.
    """
    return _levels(theta2_details(system, path, proper, spectra, richardson, check_leak).value, n)


def _periodic_derivative(f, times):
    """d f / dt of periodic samples (last sample dropped) along axis 0."""
    m = len(f)
    dt = np.diff(times)
    if np.allclose(dt, dt[0], rtol=1e-12, atol=0):
        k = TWO_PI * np.fft.fftfreq(m, d=dt[0])
        if m % 2 == 0:
            k[m // 2] = 0.0
        shape = (m,) + (1,) * (f.ndim - 1)
        return np.fft.ifft(1j * k.reshape(shape) * np.fft.fft(f, axis=0), axis=0)
    ahead = np.roll(f, -1, axis=0)
    behind = np.roll(f, 1, axis=0)
    span = (np.roll(times[:-1], -1) - np.roll(times[:-1], 1)) % (times[-1] - times[0])
    return (ahead - behind) / span.reshape((m,) + (1,) * (f.ndim - 1))


def berry_w_formula(system, path, n=None, spectra=None):
    """``i oint dt [<Psi|W dPsi/dt> + (1/2) <Psi|dW/dt|Psi>]`` in ``[0, 2 pi)``.

    The section is made single valued with a linear phase ramp, derivatives
    are spectral for uniform time grids (central differences otherwise) and
    the periodic trapezoid rule integrates.
    """
    _require_closed(path)
    sp = spectra if spectra is not None else spectrum_along(system, path)
    t = path.times
    tau = path.tau
    gamma = np.angle(sp.closure())
    ramp = np.exp(-1j * np.outer(t - t[0], gamma) / tau)
    psi = (sp.right * ramp[..., None])[:-1]
    w = system.metric_at(path.points)[:-1]
    dpsi = _periodic_derivative(psi, t)
    dw = _periodic_derivative(w, t)
    term1 = np.einsum("kni,kij,knj->kn", np.conj(psi), w, dpsi)
    term2 = 0.5 * np.einsum("kni,kij,knj->kn", np.conj(psi), dw, psi)
    weights = 0.5 * (np.diff(t) + np.roll(np.diff(t), 1))
    value = 1j * np.sum((term1 + term2) * weights[:, None], axis=0)
    return _levels(mod_2pi(value.real), n)


def dynamic_phases(system, path, n=None, proper=None, spectra=None):
    """Dynamic phases of a path.

    Returns
    -------
    theta_dyn_tilde : complex
        ``theta_D - i C`` with ``C = int <Psi0|S^-1 dS/dt|Psi0> dt``.
    theta_dyn_0 : float
        ``theta_D = -int E_n dt``.

    The difference ``i C`` is the correction between ``theta1`` and
    ``theta2``; it is purely imaginary for a proper map.
    """
    sp = spectra if spectra is not None else spectrum_along(system, path)
    proper = proper if proper is not None else proper_map_along(system, path)
    t = path.times
    theta_d = -scipy.integrate.trapezoid(sp.energies.real, t, axis=0)
    c = split_integral(sp, proper)
    return _levels(theta_d - 1j * c, n), _levels(theta_d, n)


def _split_rule(t, s, s_inv, right):
    ds = np.gradient(s, t, axis=0, edge_order=2)
    psi0 = np.einsum("kij,knj->kni", s_inv, right)
    psi0 = psi0 / np.linalg.norm(psi0, axis=-1, keepdims=True)
    integrand = np.einsum("kni,kij,kjl,knl->kn", np.conj(psi0), s_inv, ds, psi0)
    return scipy.integrate.trapezoid(integrand, t, axis=0)


def split_integral(sp, proper, richardson=True):
    """``C_n = int <Psi0_n|S^-1 dS/dt|Psi0_n> dt`` per level.

    Second-order differences and the trapezoid rule, Richardson-extrapolated
    against the every-other-sample grid when the interval count allows.
    """
    t = sp.path.times
    full = _split_rule(t, proper.s_proper, proper.s_proper_inv, sp.right)
    if not (richardson and _can_extrapolate(sp)):
        return full
    half = _split_rule(t[::2], proper.s_proper[::2], proper.s_proper_inv[::2], sp.right[::2])
    return (4 * full - half) / 3


def correction_term(system, path, n=None, proper=None, spectra=None):
    """``i oint <Psi0|S^-1 dS/dt|Psi0> dt``, the gap between ``theta1`` and ``theta2``."""
    sp = spectra if spectra is not None else spectrum_along(system, path)
    proper = proper if proper is not None else proper_map_along(system, path)
    return _levels(1j * split_integral(sp, proper), n)


def _metric_rate(system, points, velocities, step=FD_STEP):
    w = system.metric_at(points)
    speed = np.linalg.norm(velocities, axis=-1)
    rate = np.zeros_like(w)
    moving = speed > 0
    if np.any(moving):
        scale = np.maximum(1.0, np.abs(points[moving]).max(axis=-1))
        delta = (step * scale)[:, None]
        direction = velocities[moving] / speed[moving, None]
        plus = system.metric_at(points[moving] + delta * direction)
        minus = system.metric_at(points[moving] - delta * direction)
        rate[moving] = (plus - minus) / (2 * delta[..., None]) * speed[moving, None, None]
    return w, rate


def _product(mats):
    """Ordered product ``M_{n-1} ... M_1 M_0`` of a stack, by pairwise reduction."""
    while len(mats) > 1:
        if len(mats) % 2:
            tail = mats[-1:]
            mats = mats[:-1]
        else:
            tail = None
        mats = mats[1::2] @ mats[0::2]
        if tail is not None:
            mats = np.concatenate([mats, tail])
    return mats[0]


def _rk4_propagators(system, path, ramp_factor, substeps):
    """One-step RK4 propagators of the slowed-down evolution.

    In the original path time ``s`` the state obeys
    ``dPsi/ds = -i r H Psi - (1/2) W^-1 (dW/ds) Psi`` with ``r`` the ramp
    factor; for a proper map ``(1/2) W^-1 dW/ds = S dS^-1/ds`` so this is
    the evolution generated by ``H - i S dS^-1/dt`` in real time ``r s``.
    """
    t = path.times
    nodes = np.concatenate([
        np.linspace(t[k], t[k + 1], 2 * substeps + 1)[:-1] for k in range(len(t) - 1)
    ] + [t[-1:]])
    pts = np.asarray(path.position(nodes))
    vel = np.asarray(path.velocity(nodes))
    h = system.hamiltonian_at(pts)
    w, dw = _metric_rate(system, pts, vel)
    gen = -1j * ramp_factor * h - 0.5 * np.linalg.solve(w, dw)
    a1, a2, a3 = gen[0:-1:2], gen[1::2], gen[2::2]
    step = np.diff(nodes[0::2])[:, None, None]
    eye = np.eye(system.dim)
    k1 = a1
    k2 = a2 @ (eye + 0.5 * step * k1)
    k3 = a2 @ (eye + 0.5 * step * k2)
    k4 = a3 @ (eye + step * k3)
    return eye + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def evolve_states(system, path, psi_start, ramp_factor=1.0, substeps=None):
    """Integrate the slowed-down evolution and return the state at each path sample.

    Parameters
    ----------
    psi_start : array_like, shape (N,)
    ramp_factor : float
        Total duration is ``ramp_factor * tau``.
    substeps : int, optional
        RK4 steps per path interval; defaults to ``ceil(ramp_factor)`` so the
        real-time step stays at the path spacing.
    """
    if ramp_factor < 1:
        raise ValueError("ramp_factor must be at least 1")
    substeps = int(np.ceil(ramp_factor)) if substeps is None else int(substeps)
    props = _rk4_propagators(system, path, ramp_factor, substeps)
    per_interval = props.reshape(len(path) - 1, substeps, system.dim, system.dim)
    states = np.empty((len(path), system.dim), dtype=complex)
    states[0] = nk.as_vector(psi_start)
    for k in range(len(path) - 1):
        states[k + 1] = _product(per_interval[k]) @ states[k]
    return states


@dataclass(frozen=True)
class OracleResult:
    total_phase: complex
    leaked_population: float
    reference: complex

    @property
    def error(self):
        d = self.total_phase - self.reference
        return float(abs(complex(wrap_angle(d.real), d.imag)))


def evolve_oracle(system, path, n, ramp_factor, substeps=None, spectra=None, strict=True):
    """Total phase of level `n` after a slow traversal of a closed loop.

    Returns ``-i log <Phi_n(0)|Psi(tau)>`` from direct RK4 integration, which
    should approach ``theta1_D + theta1 = theta_D + theta2`` as the ramp
    factor grows.

    Raises
    ------
    AdiabaticityBreakdown
        If ``strict`` and more than 1 % of the population leaves level `n`.
    """
    return evolve_report(system, path, n, ramp_factor, substeps, spectra, strict).total_phase


def evolve_report(system, path, n, ramp_factor, substeps=None, spectra=None, strict=True):
    """Like :func:`evolve_oracle` but also returns leakage and the adiabatic reference."""
    _require_closed(path)
    sp = spectra if spectra is not None else spectrum_along(system, path)
    states = evolve_states(system, path, sp.right[0, n], ramp_factor, substeps)
    final = states[-1]
    amps = np.conj(sp.left[-1]) @ final
    leaked = float(np.sum(np.abs(np.delete(amps, n)) ** 2))
    total = complex(-1j * np.log(np.vdot(sp.left[0, n], final)))
    theta_d = -ramp_factor * scipy.integrate.trapezoid(sp.energies[:, n].real, path.times)
    reference = complex(theta_d + theta1_raw(sp)[n].real)
    if strict and leaked > LEAKED_POPULATION_MAX:
        raise AdiabaticityBreakdown(f"leaked population {leaked:.3g} above {LEAKED_POPULATION_MAX}",
                                    leaked_population=leaked, total_phase=total)
    return OracleResult(total, leaked, reference)


def transport_operators(sp, with_prefactor=True):
    """``U(t_k) = sum_n e^{i theta1_n(t_k)} |Psi_n(t_k)><Phi_n(0)|``, shape (M, N, N)."""
    factor = np.exp(-partial_logs(sp)) if with_prefactor else np.ones((len(sp), sp.dim))
    return np.einsum("kn,kni,nj->kij", factor, sp.right, np.conj(sp.left[0]))


def parallel_transport_residual(system, path, spectra=None, with_prefactor=True):
    """Largest ``|<Phi_n|dU/dt U^-1|Psi_n>|`` over levels and interior samples.

    ``dU/dt`` is a central difference; with ``with_prefactor=False`` the phase
    factors are dropped (a negative control).
    """
    sp = spectra if spectra is not None else spectrum_along(system, path)
    u = transport_operators(sp, with_prefactor)
    t = path.times
    du = (u[2:] - u[:-2]) / (t[2:] - t[:-2])[:, None, None]
    u_inv = np.linalg.inv(u[1:-1])
    gen = du @ u_inv
    res = np.einsum("kni,kij,knj->kn", np.conj(sp.left[1:-1]), gen, sp.right[1:-1])
    return float(np.abs(res).max())


@dataclass(frozen=True)
class PhaseReport:
    """Loop phases of one level.

    ``theta1`` has its real part in ``[0, 2 pi)``; ``branch`` is the integer
    with ``Re theta1_raw = Re theta1 + 2 pi branch``.
    """

    level: int
    theta1: complex
    theta2: float
    theta_berry: float
    theta_dyn_tilde: complex
    theta_dyn_0: float
    correction: complex
    branch: int

    @property
    def residual_berry(self):
        """``|theta2 - theta_berry|`` modulo 2 pi."""
        return float(abs(wrap_angle(self.theta2 - self.theta_berry)))

    @property
    def residual_split(self):
        """``|theta1 - theta2 - correction|`` (real part modulo 2 pi)."""
        d = self.theta1 - self.theta2 - self.correction
        return float(abs(complex(wrap_angle(d.real), d.imag)))


def loop_phases(system, path, levels=None, proper=None, spectra=None, check_leak=True):
    """All loop phases of a closed path as a list of :class:`PhaseReport`."""
    _require_closed(path)
    sp = spectra if spectra is not None else spectrum_along(system, path)
    proper = proper if proper is not None else proper_map_along(system, path)
    raw = theta1_raw(sp)
    th1 = _complex_mod(raw)
    th2 = theta2_details(system, path, proper, sp, check_leak=check_leak).value
    berry = berry_w_formula(system, path, spectra=sp)
    tilde, zero = dynamic_phases(system, path, proper=proper, spectra=sp)
    corr = 1j * split_integral(sp, proper)
    levels = range(sp.dim) if levels is None else levels
    out = []
    for n in levels:
        branch = int(np.round((raw[n].real - th1[n].real) / TWO_PI))
        out.append(PhaseReport(n, complex(th1[n]), float(th2[n]), float(berry[n]), complex(tilde[n]),
                               float(zero[n]), complex(corr[n]), branch))
    return out
