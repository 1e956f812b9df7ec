"""Similarity maps ``H = S H0 S^-1`` and their proper (Hermitian-generator) gauge."""

from dataclasses import dataclass

import numpy as np

from . import numkernel as nk
from .errors import StepTooCoarse

PROPER_TOL = 1e-4
MAX_STEP_CHANGE = 0.1
REUNITARIZE_EVERY = 100
FD_STEP = 1e-5


@dataclass(frozen=True, eq=False)
class SimilarityMap:
    """``S`` and ``S^-1`` at one point, with ``W = (S^-1)^dagger S^-1``."""

    point: np.ndarray
    s: np.ndarray
    s_inv: np.ndarray

    def metric(self):
        return nk.adjoint(self.s_inv) @ self.s_inv

    def partner(self, h):
        """The Hermitian partner ``S^-1 H S``."""
        return self.s_inv @ h @ self.s


def sqrt_metric_inverse(system, points):
    """``S^-1 = sqrt(W)`` (principal root) for a stack of points."""
    return nk.hermitian_sqrt(system.metric_at(points))


def sqrt_metric_map(system, point):
    """Similarity map with ``S^-1`` the principal square root of ``W(point)``."""
    p = np.asarray(point, dtype=float)
    s_inv = sqrt_metric_inverse(system, p)
    return SimilarityMap(p, nk.inverse(s_inv), s_inv)


def hermitian_partner(system, point, smap=None):
    """``H0 = S^-1 H S`` at `point`; Hermitian when `smap` matches the metric."""
    smap = smap if smap is not None else sqrt_metric_map(system, point)
    return smap.partner(system.hamiltonian_at(point))


@dataclass(frozen=True, eq=False)
class ProperMapPath:
    """Similarity maps sampled along a path.

    ``s_proper[k] = S(t_k) u_k`` where ``S^-1 = sqrt(W)`` and `u` solves the
    properness ODE from ``u_0 = 1``.  For a raw (uncorrected) map ``u`` is the
    identity throughout.
    """

    path: object
    u_samples: np.ndarray
    s_proper: np.ndarray
    s_proper_inv: np.ndarray

    def __len__(self):
        return len(self.u_samples)

    def with_gauge(self, v):
        """Same map composed with a constant unitary: ``S -> S v``."""
        v = nk.as_matrix(v)
        return ProperMapPath(self.path, self.u_samples @ v, self.s_proper @ v,
                             nk.adjoint(v) @ self.s_proper_inv)

    def unitarity_residual(self):
        eye = np.eye(self.u_samples.shape[-1])
        return float(np.abs(nk.adjoint(self.u_samples) @ self.u_samples - eye).max())

    def partners(self, system):
        """``H0(t_k) = S_p^-1 H S_p`` at every sample."""
        return self.s_proper_inv @ system.hamiltonian_at(self.path.points) @ self.s_proper


def properness_residual(smap_path):
    """Largest ``||(dS^-1/dt) S - h.c.|| / ||S||^2`` over interior samples.

    The time derivative uses central differences of the sampled ``S^-1``.
    """
    if len(smap_path) < 3:
        raise ValueError("need at least 3 samples")
    t = smap_path.path.times
    s = smap_path.s_proper
    s_inv = smap_path.s_proper_inv
    d = (s_inv[2:] - s_inv[:-2]) / (t[2:] - t[:-2])[:, None, None]
    a = d @ s[1:-1]
    res = nk.frobenius_norm(a - nk.adjoint(a)) / nk.frobenius_norm(s[1:-1]) ** 2
    return float(res.max())


def _sqrt_w_rate(system, points, velocities, step=FD_STEP):
    """``S^-1`` and its time derivative along the path velocity."""
    s_inv = sqrt_metric_inverse(system, points)
    speed = np.linalg.norm(velocities, axis=-1)
    moving = speed > 0
    rate = np.zeros_like(s_inv)
    if np.any(moving):
        scale = np.maximum(1.0, np.abs(points[moving]).max(axis=-1))
        delta = (step * scale)[:, None]
        direction = velocities[moving] / speed[moving, None]
        plus = sqrt_metric_inverse(system, points[moving] + delta * direction)
        minus = sqrt_metric_inverse(system, points[moving] - delta * direction)
        rate[moving] = (plus - minus) / (2 * delta[..., None]) * speed[moving, None, None]
    return s_inv, rate


def _polar(u):
    x, _, yh = np.linalg.svd(u)
    return x @ yh


def _raw_maps(system, path):
    s_inv = sqrt_metric_inverse(system, path.points)
    return s_inv, nk.inverse(s_inv)


def raw_map_along(system, path):
    """Sqrt-metric maps along `path` without the properness correction."""
    s_inv, s = _raw_maps(system, path)
    eye = np.broadcast_to(np.eye(system.dim, dtype=complex), s.shape).copy()
    return ProperMapPath(path, eye, s, s_inv)


def proper_map_along(system, path, tol=PROPER_TOL, reunitarize_every=REUNITARIZE_EVERY):
    """Integrate ``du/dt = (1/2)[A - A^dagger] u`` with ``A = (dS^-1/dt) S``.

    Classical RK4 with one step per path interval; midpoint stages are taken
    on the spline interpolant of the path.

    Raises
    ------
    StepTooCoarse
        If ``S`` changes by more than 10 % of its norm between samples or the
        properness residual of the result exceeds `tol`.
    """
    t = path.times
    m = len(path)
    mid_t = 0.5 * (t[1:] + t[:-1])
    stage_t = np.concatenate([t, mid_t])
    pts = np.asarray(path.position(stage_t)) if m > 1 else path.points
    pts[:m] = path.points
    vel = np.asarray(path.velocity(stage_t))
    s_inv_all, rate = _sqrt_w_rate(system, pts, vel)
    s_all = nk.inverse(s_inv_all)
    a = rate @ s_all
    gen = 0.5 * (a - nk.adjoint(a))

    s_inv, s = s_inv_all[:m], s_all[:m]
    jump = nk.frobenius_norm(s[1:] - s[:-1]) / nk.frobenius_norm(s[:-1])
    if np.any(jump > MAX_STEP_CHANGE):
        raise StepTooCoarse(f"similarity map changes by {jump.max():.3f} of its norm between samples; refine the path")

    g_node, g_mid = gen[:m], gen[m:]
    u = np.empty_like(s)
    u[0] = np.eye(system.dim)
    h = np.diff(t)
    for k in range(m - 1):
        uk = u[k]
        k1 = g_node[k] @ uk
        k2 = g_mid[k] @ (uk + 0.5 * h[k] * k1)
        k3 = g_mid[k] @ (uk + 0.5 * h[k] * k2)
        k4 = g_node[k + 1] @ (uk + h[k] * k3)
        nxt = uk + h[k] / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if (k + 1) % reunitarize_every == 0:
            nxt = _polar(nxt)
        u[k + 1] = nxt

    result = ProperMapPath(path, u, s @ u, nk.adjoint(u) @ s_inv)
    if m >= 3:
        res = properness_residual(result)
        if res > tol:
            raise StepTooCoarse(f"properness residual {res:.3e} above {tol:.1e}; refine the path")
    return result
