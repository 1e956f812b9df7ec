"""Closed-form two-level PT-symmetric model on the unit sphere.

``H = eps 1 + (a n_r + i b n_theta) . sigma`` with metric
``W = 1 - (b/a) n_phi . sigma``.  Coordinates are ``(theta, phi)``.

The analytic phase functions take an ``include_offset`` switch.  With the
default ``True`` they return the reference closed forms, which carry a
constant ``+-(pi/4)(1 - r)`` term, ``r = a / sqrt(a^2 - b^2)``.  With
``include_offset=False`` they return the values of the loop integrals
themselves, which is what the numerical engines reproduce.  The two differ by
``pi/8`` for ``a = 3, b = sqrt(5)``; see the README for the derivation.
"""

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedParameters
from .ptsystem import PTSystem

SIGMA = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)
DEFAULT_A = 3.0
DEFAULT_B = np.sqrt(5.0)


@dataclass(frozen=True)
class TwoLevelParams:
    """Couplings and sphere coordinates of the two-level model."""

    a: float = DEFAULT_A
    b: float = DEFAULT_B
    epsilon: float = 0.0
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive")

    @property
    def unbroken(self):
        return self.a ** 2 > self.b ** 2

    @property
    def gap(self):
        """``sqrt(a^2 - b^2)``, half the level splitting."""
        self._require_unbroken()
        return float(np.sqrt(self.a ** 2 - self.b ** 2))

    @property
    def ratio(self):
        """``a / sqrt(a^2 - b^2)``."""
        return self.a / self.gap

    @property
    def alpha(self):
        return self.b / (self.a + self.gap)

    def at(self, theta, phi=0.0):
        return TwoLevelParams(self.a, self.b, self.epsilon, theta, phi)

    def _require_unbroken(self):
        if not self.unbroken:
            raise ValueError(f"a^2 <= b^2 (a={self.a}, b={self.b}): broken PT phase")


def _frames(theta, phi):
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    zero = np.zeros_like(st * sp)
    n_r = np.stack([st * cp, st * sp, ct + zero], axis=-1)
    n_theta = np.stack([ct * cp, ct * sp, -st + zero], axis=-1)
    n_phi = np.stack([-sp + zero, cp + zero, zero], axis=-1)
    return n_r, n_theta, n_phi


def _dot_sigma(v):
    return np.einsum("...i,ijk->...jk", v, SIGMA)


def hamiltonian_matrix(a, b, epsilon, theta, phi):
    """Vectorized ``H(theta, phi)``; broadcasts over `theta` and `phi`."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    n_r, n_theta, _ = _frames(theta, phi)
    return epsilon * np.eye(2) + _dot_sigma(a * n_r + 1j * b * n_theta)


def metric_matrix(a, b, theta, phi):
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    _, _, n_phi = _frames(theta, phi)
    return np.eye(2) - (b / a) * _dot_sigma(n_phi)


def hamiltonian(p):
    return hamiltonian_matrix(p.a, p.b, p.epsilon, p.theta, p.phi)


def metric(p):
    return metric_matrix(p.a, p.b, p.theta, p.phi)


def system(a=DEFAULT_A, b=DEFAULT_B, epsilon=0.0):
    """The model as a :class:`PTSystem` over coordinates ``(theta, phi)``."""

    def h(points):
        pts = np.asarray(points, dtype=float)
        return hamiltonian_matrix(a, b, epsilon, pts[..., 0], pts[..., 1])

    def w(points):
        pts = np.asarray(points, dtype=float)
        return metric_matrix(a, b, pts[..., 0], pts[..., 1])

    name = "hermitian-spin-half" if b == 0 else "two-level-pt"
    return PTSystem(2, h, w, name=name, coords=("theta", "phi"))


def analytic_eigenvectors(p):
    """Right eigenvectors ``(|Psi_+>, |Psi_->)`` in the closed-form gauge.

    Both are normalized to ``<Psi|W|Psi> = 1``.
    """
    p._require_unbroken()
    al = p.alpha
    c, s = np.cos(p.theta / 2), np.sin(p.theta / 2)
    e = np.exp(-1j * p.phi)
    norm = np.exp(-0.5j * p.theta) * np.sqrt((p.a ** 2 + p.a * p.gap) / (2 * (p.a ** 2 - p.b ** 2)))
    plus = norm * np.array([(c - 1j * al * s) * e, 1j * al * c + s])
    minus = norm * np.array([-(1j * al * c + s) * e, c - 1j * al * s])
    return plus, minus


def solid_angle(theta):
    """Solid angle ``2 pi (1 - cos theta)`` of the cap bounded by a latitude."""
    return 2 * np.pi * (1 - np.cos(theta))


def _offset(p, include_offset):
    return (np.pi / 4) * (1 - p.ratio) if include_offset else 0.0


def analytic_theta2(p, pole_enclosed=True, include_offset=True, omega=None):
    """Real geometric phases ``(theta2_+, theta2_-)`` of a loop.

    Parameters
    ----------
    p : TwoLevelParams
    pole_enclosed : bool
        Whether the loop winds around the north pole.  Latitude circles do.
    include_offset : bool
        Include the constant ``+-(pi/4)(1 - r)`` term of the reference form.
    omega : float, optional
        Solid angle of the loop; defaults to the latitude cap at ``p.theta``.
    """
    r = p.ratio
    om = solid_angle(p.theta) if omega is None else omega
    off = _offset(p, include_offset)
    plus = -0.5 * r * om + off
    minus = 0.5 * r * om - off
    if pole_enclosed:
        plus += (1 + r) * np.pi
        minus += (1 - r) * np.pi
    return plus, minus


def _require_default_couplings(p):
    if not (np.isclose(p.a, DEFAULT_A, rtol=0, atol=1e-12) and np.isclose(p.b, DEFAULT_B, rtol=0, atol=1e-12)):
        raise UnsupportedParameters(f"closed form only derived for a=3, b=sqrt(5); got a={p.a}, b={p.b}")


def analytic_theta1(p, include_offset=True):
    """Complex phases ``(theta1_+, theta1_-)`` on a latitude loop, a=3, b=sqrt(5).

    The real parts are not reduced modulo 2 pi.
    """
    _require_default_couplings(p)
    gain = 0.5 * np.pi * np.sqrt(5.0) * np.sin(p.theta)
    if include_offset:
        re_plus = -1.5 * np.pi * (1 - np.cos(p.theta)) + 3 * np.pi / 8
    else:
        re_plus = analytic_theta2(p, include_offset=False)[0]
    re_minus = -re_plus if include_offset else analytic_theta2(p, include_offset=False)[1]
    return re_plus - 1j * gain, re_minus + 1j * gain


def analytic_igp(p, beta, include_offset=True):
    """Thermal interferometric phase on a latitude loop, in ``[0, 2 pi)``.

    `beta` may be an array.  ``epsilon`` drops out.
    """
    plus, minus = analytic_theta1(p, include_offset)
    beta = np.asarray(beta, dtype=float)
    # log-space with a shared shift: the two exponents are -+(2 beta + Im theta1)
    lp = -2 * beta - plus.imag
    lm = 2 * beta - minus.imag
    top = np.maximum(lp, lm)
    amp = np.exp(lp - top) * np.exp(1j * plus.real) + np.exp(lm - top) * np.exp(1j * minus.real)
    return np.mod(np.angle(amp), 2 * np.pi)


def critical_beta(theta, a=DEFAULT_A, b=DEFAULT_B):
    """Inverse temperature at which the two effective weights coincide.

    Setting ``(E_+ - E_-) beta = -(Im theta1_+ - Im theta1_-)`` on a latitude
    loop gives ``beta = sqrt(5) pi sin(theta) / 4`` for a=3, b=sqrt(5), written
    here as ``pi b sin(theta) / (2 sqrt(a^2 - b^2))``.
    """
    return np.pi * b * np.sin(theta) / (2 * np.sqrt(a ** 2 - b ** 2))


def analytic_critical_points(p=None, include_offset=True):
    """Latitudes ``(theta, beta)`` where the returning amplitude vanishes.

    The amplitude vanishes on the critical arc where the real phases differ by
    an odd multiple of pi.  Poles (sin theta = 0) are excluded.
    """
    p = p or TwoLevelParams()
    r = p.ratio
    off = _offset(p, include_offset)
    # theta2_- - theta2_+ = -2 pi r cos(theta) - 2 off, set equal to (2k+1) pi
    out = []
    kmax = int(np.ceil(r)) + 2
    for k in range(-kmax - 1, kmax + 1):
        c = -((2 * k + 1) * np.pi + 2 * off) / (2 * np.pi * r)
        if abs(c) < 1 - 1e-12:
            th = float(np.arccos(c))
            out.append((th, float(critical_beta(th, p.a, p.b))))
    return sorted(out)


def sqrt_metric_inverse(p):
    """``S^-1 = sqrt(W)``: principal root of the metric, closed form."""
    p._require_unbroken()
    g = p.gap
    e = np.exp(1j * p.phi)
    return np.array([[g + p.a, 1j * p.b / e], [-1j * p.b * e, g + p.a]]) / np.sqrt(2 * p.a * (g + p.a))


def similarity(p):
    """``S``, the inverse of :func:`sqrt_metric_inverse`."""
    p._require_unbroken()
    g = p.gap
    e = np.exp(1j * p.phi)
    return np.array([[g + p.a, -1j * p.b / e], [1j * p.b * e, g + p.a]]) / np.sqrt(2 * p.a * (g + p.a)) * (p.a / g)


def analytic_proper_u(phi):
    """Unitary ``diag(e^{i phi/4}, e^{-i phi/4})`` making ``S u`` proper on a latitude.

    Valid for a=3, b=sqrt(5); note the period is 8 pi, not 2 pi.
    """
    phi = np.asarray(phi, dtype=float)
    out = np.zeros(phi.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(0.25j * phi)
    out[..., 1, 1] = np.exp(-0.25j * phi)
    return out


def proper_similarity(p):
    """``S_proper = S u(phi)`` on a latitude loop (a=3, b=sqrt(5))."""
    _require_default_couplings(p)
    return similarity(p) @ analytic_proper_u(p.phi)


def proper_partner(p):
    """``H0 = S_proper^-1 H S_proper`` in closed form."""
    _require_default_couplings(p)
    off = 2 * np.sin(p.theta) * np.exp(-1.5j * p.phi)
    c = 2 * np.cos(p.theta)
    return np.array([[p.epsilon + c, off], [np.conj(off), p.epsilon - c]])


def proper_partner_state_plus(p):
    """Unit eigenvector of :func:`proper_partner` for the upper level ``eps + 2``."""
    _require_default_couplings(p)
    return np.array([np.cos(p.theta / 2) * np.exp(-1.5j * p.phi), np.sin(p.theta / 2)])
