"""Thermal states and the interferometric geometric phase (IGP).

The IGP of a loop is ``arg sum_n w_n exp(i theta1_n)`` with Boltzmann weights
``w_n = exp(-beta E_n) / Z``.  Because ``theta1`` is complex, each term
carries an extra factor ``exp(-Im theta1_n)``: the *effective* weights
``exp(-beta E_n - Im theta1_n)`` decide which level dominates, and the
returning amplitude can vanish at finite temperature.
"""

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import NotTwoLevel
from .phases import mod_2pi, partial_logs, theta1_raw, wrap_angle, _can_extrapolate, _subsample
from .ptsystem import _spectra, spectrum_along

BETA_MAX = 1e4
CRITICAL_RTOL = 1e-6
RATIO_TOL = 1e-9
JUMP_DELTA = 1e-3
DIP_RATIO = 1e-3


class Regime(str, enum.Enum):
    POSITIVE = "effective-positive-T"
    NEGATIVE = "effective-negative-T"
    CRITICAL = "critical"


def default_threads():
    env = os.environ.get("PTIGP_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _check_beta(beta):
    b = np.asarray(beta, dtype=float)
    if np.any(~np.isfinite(b)) or np.any(b <= 0) or np.any(b > BETA_MAX):
        raise ValueError(f"beta must lie in (0, {BETA_MAX:g}]")
    return b


def boltzmann_weights(energies, beta):
    """Normalized ``exp(-beta E_n) / Z``, computed with a max shift."""
    beta = _check_beta(beta)
    e = np.asarray(energies, dtype=float)
    logw = -np.multiply.outer(beta, e) if np.ndim(beta) else -beta * e
    return np.exp(logw - logsumexp(logw, axis=-1, keepdims=True))


@dataclass(frozen=True, eq=False)
class ThermalState:
    """``rho = sum_n w_n |Psi_n><Phi_n|`` at one parameter point."""

    beta: float
    spectrum: object
    weights: np.ndarray

    def density_matrix(self):
        return np.einsum("n,ni,nj->ij", self.weights, self.spectrum.right_states,
                         np.conj(self.spectrum.left_states))

    def biorthogonal_trace(self, op=None):
        """``sum_n <Phi_n| op |Psi_n>``, with ``op`` defaulting to ``rho``."""
        op = self.density_matrix() if op is None else op
        sp = self.spectrum
        return complex(np.einsum("ni,ij,nj->", np.conj(sp.left_states), op, sp.right_states))


def thermal_state(system, point, beta):
    """Thermal state of ``H(point)`` at inverse temperature `beta`.

    Raises
    ------
    BrokenPTPhase
        If the spectrum at `point` is not real.
    """
    from .ptsystem import spectrum_at

    sp = spectrum_at(system, point)
    beta = float(_check_beta(beta))
    return ThermalState(beta, sp, boltzmann_weights(sp.energies.real, beta))


def density_along(sp, beta):
    """``rho(t_k) = sum_n w_n |Psi_n(t_k)><Phi_n(t_k)|`` with the weights fixed at ``t_0``."""
    w = boltzmann_weights(sp.energies[0].real, beta)
    return np.einsum("n,kni,knj->kij", w, sp.right, np.conj(sp.left))


@dataclass(frozen=True)
class IGPReport:
    """Interferometric phase of a thermal state.

    Attributes
    ----------
    theta_g : float
        ``arg(amplitude)`` in ``[0, 2 pi)``.
    amplitude : complex
        ``sum_n w_n exp(i theta1_n)``.
    effective_weights : ndarray
        ``exp(-beta E_n - Im theta1_n)``, normalized to sum to one.
    log_weights : ndarray
        The unnormalized exponents ``-beta E_n - Im theta1_n``.
    regime : Regime
        ``CRITICAL`` exactly when ``|amplitude|`` is below ``1e-6`` of
        ``scale``; otherwise set by which effective weight is larger.
    weight_regime : Regime
        The classification of :func:`regime_classify`: ``CRITICAL`` whenever
        the excited-to-ground effective weight ratio is within ``1e-9`` of
        one, even if the phases keep the amplitude away from zero.
    scale : float
        ``sum_n |w_n exp(i theta1_n)|``.
    """

    theta_g: float
    amplitude: complex
    effective_weights: np.ndarray
    log_weights: np.ndarray
    regime: Regime
    weight_regime: Regime
    scale: float

    @property
    def critical(self):
        return self.regime is Regime.CRITICAL

    @property
    def eff_weight_ratio(self):
        """Effective weight of the top level over that of the ground level."""
        return float(np.exp(self.log_weights[-1] - self.log_weights[0]))


def _weight_regime(log_weights, tol=RATIO_TOL):
    d = log_weights[..., -1] - log_weights[..., 0]
    ratio = np.exp(np.clip(d, -700, 700))
    return np.where(np.abs(ratio - 1) <= tol, 2, np.where(ratio < 1, 0, 1))


_REGIMES = (Regime.POSITIVE, Regime.NEGATIVE, Regime.CRITICAL)


def igp_arrays(energies, theta1, beta):
    """Vectorized IGP from start-point energies and raw ``theta1``.

    Parameters
    ----------
    energies : array_like, shape (..., N)
    theta1 : array_like, shape (..., N)
    beta : array_like
        Broadcast against the leading shape of `energies`.

    Returns
    -------
    amplitude, scale, log_weights
        ``scale`` is ``sum_n |w_n exp(i theta1_n)|``.
    """
    e = np.asarray(energies, dtype=float)
    t1 = np.asarray(theta1, dtype=complex)
    beta = _check_beta(beta)[..., None]
    logb = -beta * e
    logz = logsumexp(logb, axis=-1, keepdims=True)
    loge = logb - t1.imag
    terms = np.exp(loge - logz)
    amp = np.sum(terms * np.exp(1j * t1.real), axis=-1)
    return amp, np.sum(terms, axis=-1), loge


def _report(amp, scale, loge):
    le = loge - logsumexp(loge)
    weight_regime = _REGIMES[int(_weight_regime(loge))] if len(loge) > 1 else Regime.POSITIVE
    if abs(amp) < CRITICAL_RTOL * scale:
        regime = Regime.CRITICAL
    elif len(loge) > 1 and loge[-1] >= loge[0]:
        regime = Regime.NEGATIVE
    else:
        regime = Regime.POSITIVE
    return IGPReport(float(mod_2pi(np.angle(amp))), complex(amp), np.exp(le), loge, regime,
                     weight_regime, float(scale))


def igp_loop(system, path, beta, spectra=None):
    """IGP of a closed loop at inverse temperature `beta`."""
    if not path.closed:
        raise ValueError("a closed path is required")
    sp = spectra if spectra is not None else spectrum_along(system, path)
    t1 = theta1_raw(sp)
    amp, scale, loge = igp_arrays(sp.energies[0].real, t1, beta)
    return _report(amp, scale, loge)


def igp_open_series(system, path, beta, spectra=None):
    """IGP at every sample of an open path, without extrapolation.

    Returns ``(theta_g, amplitude)`` arrays of length M.  Each term is
    ``w_n nu_n(t) exp(-L_n(t))`` with ``nu_n(t) = <Phi_n(0)|Psi_n(t)>``; the
    product is independent of the eigenvector section.
    """
    sp = spectra if spectra is not None else spectrum_along(system, path)
    w = boltzmann_weights(sp.energies[0].real, beta)
    nu = np.sum(np.conj(sp.left[0])[None] * sp.right, axis=-1)
    amp = np.sum(w * nu * np.exp(-partial_logs(sp)), axis=-1)
    return mod_2pi(np.angle(amp)), amp


def igp_open(system, path, beta, spectra=None, richardson=True):
    """IGP accumulated along an open path, reported at its end point.

    At closure ``nu_n`` supplies the closing link, so the result coincides
    with :func:`igp_loop`.
    """
    if len(path) < 3:
        e, right, left = _spectra(system, path.points[:1])
        w = boltzmann_weights(e[0].real, beta)
        loge = np.log(w)
        return _report(complex(np.sum(w)), float(np.sum(w)), loge)
    sp = spectra if spectra is not None else spectrum_along(system, path)
    total = partial_logs(sp)[-1]
    if richardson and _can_extrapolate(sp):
        half = partial_logs(_subsample(sp, 2))[-1]
        half = half + 2j * np.pi * np.round((total - half).imag / (2 * np.pi))
        total = (4 * total - half) / 3
    nu = np.sum(np.conj(sp.left[0]) * sp.right[-1], axis=-1)
    theta1 = 1j * (total - np.log(nu))
    amp, scale, loge = igp_arrays(sp.energies[0].real, theta1, beta)
    return _report(amp, scale, loge)


def regime_classify(system, path, beta, spectra=None, tol=RATIO_TOL):
    """Compare the effective weights of the excited and ground levels.

    Raises
    ------
    NotTwoLevel
        If the system is not two dimensional.
    """
    if system.dim != 2:
        raise NotTwoLevel(f"regime classification needs N=2, got N={system.dim}")
    sp = spectra if spectra is not None else spectrum_along(system, path)
    _, _, loge = igp_arrays(sp.energies[0].real, theta1_raw(sp), beta)
    return _REGIMES[int(_weight_regime(loge, tol))]


@dataclass(frozen=True)
class CriticalPoint:
    """A zero of the returning amplitude.

    `jump` is the wrapped change of ``theta_g`` across the point along beta;
    `dip` is ``|A|`` at the point relative to the surrounding grid cell.
    """

    param: float
    beta: float
    jump: float
    dip: float
    theta1: tuple


class _LoopCache:
    """``theta1`` and start energies per family parameter, computed on demand."""

    def __init__(self, system, family):
        self.system = system
        self.family = family
        self.store = {}

    def __call__(self, param):
        key = float(param)
        if key not in self.store:
            sp = spectrum_along(self.system, self.family(key))
            self.store[key] = (sp.energies[0].real.copy(), theta1_raw(sp))
        return self.store[key]

    def fill(self, params, threads):
        todo = [float(p) for p in params if float(p) not in self.store]
        if threads > 1 and len(todo) > 1:
            with ThreadPoolExecutor(threads) as pool:
                for p, v in zip(todo, pool.map(self._compute, todo)):
                    self.store[p] = v
        else:
            for p in todo:
                self(p)

    def _compute(self, p):
        sp = spectrum_along(self.system, self.family(p))
        return sp.energies[0].real.copy(), theta1_raw(sp)

    def normalized_amplitude(self, param, beta):
        e, t1 = self(param)
        amp, scale, _ = igp_arrays(e, t1, beta)
        return amp / scale


def _winding(values):
    """Winding number of a closed sequence of complex values."""
    ang = np.angle(values)
    d = wrap_angle(np.diff(np.concatenate([ang, ang[:1]])))
    return int(np.round(np.sum(d) / (2 * np.pi)))


def _boundary(p0, p1, b0, b1):
    """Eight boundary points of a cell, counter-clockwise."""
    pm, bm = 0.5 * (p0 + p1), 0.5 * (b0 + b1)
    return [(p0, b0), (pm, b0), (p1, b0), (p1, bm), (p1, b1), (pm, b1), (p0, b1), (p0, bm)]


def _refine(cache, cell, tol):
    p0, p1, b0, b1 = cell
    while (p1 - p0) > tol or (b1 - b0) > tol:
        pm, bm = 0.5 * (p0 + p1), 0.5 * (b0 + b1)
        subs = [(p0, pm, b0, bm), (pm, p1, b0, bm), (pm, p1, bm, b1), (p0, pm, bm, b1)]
        best = None
        for sub in subs:
            vals = np.array([cache.normalized_amplitude(p, b) for p, b in _boundary(*sub)])
            if _winding(vals) != 0:
                best = sub
                break
            score = np.min(np.abs(vals))
            if best is None or score < best[0]:
                best = (score, sub)
        p0, p1, b0, b1 = best if len(best) == 4 else best[1]
    return 0.5 * (p0 + p1), 0.5 * (b0 + b1)


def _polish(cache, param, beta, width, iterations=4):
    """Newton steps on the complex amplitude, accepted only while it shrinks."""
    h = 1e-6
    best = (abs(cache.normalized_amplitude(param, beta)), param, beta)
    for _ in range(iterations):
        _, p, b = best
        f = cache.normalized_amplitude(p, b)
        fp = (cache.normalized_amplitude(p + h, b) - f) / h
        fb = (cache.normalized_amplitude(p, b + h) - f) / h
        jac = np.array([[fp.real, fb.real], [fp.imag, fb.imag]])
        try:
            step = np.linalg.solve(jac, -np.array([f.real, f.imag]))
        except np.linalg.LinAlgError:
            break
        if np.max(np.abs(step)) > width:
            break
        cand = (abs(cache.normalized_amplitude(p + step[0], b + step[1])), p + step[0], b + step[1])
        if cand[0] >= best[0]:
            break
        best = cand
    return best[1], best[2]


@dataclass(eq=False)
class ScanGrid:
    """IGP over a (param, beta) grid of loops.

    ``amplitude[i, j]`` belongs to ``params[i]`` and ``betas[j]``.
    """

    params: np.ndarray
    betas: np.ndarray
    energies: np.ndarray
    theta1: np.ndarray
    amplitude: np.ndarray
    scale: np.ndarray
    log_weights: np.ndarray
    cache: object

    @property
    def theta_g(self):
        return mod_2pi(np.angle(self.amplitude))

    @property
    def eff_weight_ratio(self):
        return np.exp(self.log_weights[..., -1] - self.log_weights[..., 0])

    def regimes(self):
        """Per-cell regime with the same rule as :attr:`IGPReport.regime`."""
        out = np.where(self.log_weights[..., -1] >= self.log_weights[..., 0], 1, 0)
        out = np.where(np.abs(self.amplitude) < CRITICAL_RTOL * self.scale, 2, out)
        return np.array(_REGIMES, dtype=object)[out]


def scan_grid(system, path_family, beta_grid, param_grid, threads=None):
    """Evaluate the IGP for every loop ``path_family(param)`` and every beta."""
    betas = _check_beta(np.asarray(beta_grid, dtype=float))
    params = np.asarray(param_grid, dtype=float)
    threads = default_threads() if threads is None else max(1, int(threads))
    cache = _LoopCache(system, path_family)
    cache.fill(params, threads)
    e = np.array([cache(p)[0] for p in params])
    t1 = np.array([cache(p)[1] for p in params])
    amp, scale, loge = igp_arrays(e[:, None, :], t1[:, None, :], betas[None, :])
    return ScanGrid(params, betas, e, t1, amp, scale, loge, cache)


def critical_scan(system, path_family, beta_grid, param_grid, threads=None, tol=1e-4,
                  min_points=100, jump_delta=JUMP_DELTA, grid=None):
    """Locate zeros of the returning amplitude over a (param, beta) grid.

    Grid cells around which ``arg A`` winds are refined by winding-number
    quadrisection to ``tol / 100`` and then polished with Newton steps.  A
    point is reported when ``|A|`` at the refined point is below ``1e-3`` of
    its mean over the cell corners.

    Parameters
    ----------
    path_family : callable
        ``param -> LoopPath``.
    beta_grid, param_grid : array_like
        Increasing grids with at least `min_points` entries each.
    threads : int, optional
        Worker count for the per-parameter loop computations.
    grid : ScanGrid, optional
        A previous :func:`scan_grid` result on the same grids.

    Returns
    -------
    list of CriticalPoint
        Sorted by parameter.
    """
    betas = np.asarray(beta_grid, dtype=float)
    params = np.asarray(param_grid, dtype=float)
    if len(betas) < min_points or len(params) < min_points:
        raise ValueError(f"grids need at least {min_points} points per axis")
    if np.any(np.diff(betas) <= 0) or np.any(np.diff(params) <= 0):
        raise ValueError("grids must be strictly increasing")
    grid = grid if grid is not None else scan_grid(system, path_family, betas, params, threads)
    cache = grid.cache
    a = grid.amplitude / grid.scale

    ang = np.angle(a)
    d_param = wrap_angle(np.diff(ang, axis=0))
    d_beta = wrap_angle(np.diff(ang, axis=1))
    wind = d_beta[:-1, :] + d_param[:, 1:] - d_beta[1:, :] - d_param[:, :-1]
    cells = np.argwhere(np.abs(np.round(wind / (2 * np.pi))) > 0)

    def handle(ij):
        i, j = ij
        cell = (params[i], params[i + 1], betas[j], betas[j + 1])
        p, b = _refine(cache, cell, tol / 100)
        p, b = _polish(cache, p, b, tol)
        corners = np.abs(a[i:i + 2, j:j + 2])
        dip = abs(cache.normalized_amplitude(p, b)) / corners.mean()
        if dip >= DIP_RATIO:
            return None
        lo = cache.normalized_amplitude(p, max(b - jump_delta, b / 2))
        hi = cache.normalized_amplitude(p, b + jump_delta)
        jump = float(wrap_angle(np.angle(hi) - np.angle(lo)))
        return CriticalPoint(float(p), float(b), jump, float(dip), tuple(cache(p)[1]))

    found = [handle(c) for c in cells]
    return sorted((f for f in found if f is not None), key=lambda c: (c.param, c.beta))
