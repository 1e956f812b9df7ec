"""Parameterized pseudo-Hermitian systems and their biorthogonal spectra."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import numkernel as nk
from .errors import (
    BrokenPTPhase,
    DegenerateSpectrum,
    LevelOrderSwap,
    MetricNotPositive,
    ZeroOverlap,
)

DEGENERACY_RTOL = 1e-8
REALITY_RTOL = 1e-8
ZERO_OVERLAP = 1e-6
MATCH_DOMINANCE = 0.5


@dataclass(frozen=True)
class PTSystem:
    """A family ``H(R)`` with metric ``W(R)`` satisfying ``W H = H^dagger W``.

    `hamiltonian` and `metric` take coordinates of shape ``(..., k)`` and
    return matrices of shape ``(..., dim, dim)``; they must broadcast over the
    leading axes.  Use :meth:`from_pointwise` for functions of a single point.
    """

    dim: int
    hamiltonian: Callable
    metric: Callable
    name: str = "custom"
    coords: tuple = ()

    @classmethod
    def from_pointwise(cls, dim, hamiltonian, metric, **kwargs):
        def lift(f):
            def batched(points):
                pts = np.asarray(points, dtype=float)
                flat = pts.reshape(-1, pts.shape[-1])
                out = np.array([f(p) for p in flat], dtype=complex)
                return out.reshape(pts.shape[:-1] + (dim, dim))
            return batched
        return cls(dim, lift(hamiltonian), lift(metric), **kwargs)

    def hamiltonian_at(self, points):
        return self._evaluate(self.hamiltonian, points)

    def metric_at(self, points):
        return self._evaluate(self.metric, points)

    def _evaluate(self, f, points):
        pts = np.asarray(points, dtype=float)
        if not np.all(np.isfinite(pts)):
            raise ValueError("non-finite parameter point")
        m = nk.as_matrix(f(pts))
        if m.shape != pts.shape[:-1] + (self.dim, self.dim):
            raise ValueError(f"{self.name}: expected matrices of shape {pts.shape[:-1] + (self.dim, self.dim)}, "
                             f"got {m.shape}")
        return m


def check_pseudo_hermiticity(system, point):
    """Relative residual ``||W H - H^dagger W||_F / ||H||_F`` at `point`."""
    h = system.hamiltonian_at(point)
    w = system.metric_at(point)
    _require_positive_metric(w)
    res = nk.frobenius_norm(w @ h - nk.adjoint(h) @ w)
    scale = nk.frobenius_norm(h)
    return float(np.max(res / np.where(scale > 0, scale, 1.0)))


def _require_positive_metric(w):
    skew = nk.frobenius_norm(w - nk.adjoint(w))
    if np.any(skew > nk.HERMITIAN_RTOL * 10 * nk.frobenius_norm(w)):
        raise MetricNotPositive("metric is not Hermitian")
    lam = np.linalg.eigvalsh(0.5 * (w + nk.adjoint(w)))
    if np.any(lam[..., 0] <= nk.POSITIVE_RTOL * np.abs(lam[..., -1])):
        raise MetricNotPositive(f"metric eigenvalue {np.min(lam[..., 0]):.3e} is not positive")


@dataclass(frozen=True, eq=False)
class BiorthogonalSpectrum:
    """Eigen-data at one parameter point.

    ``right_states[n]`` is the right eigenvector of level `n` and
    ``left_states[n]`` its biorthogonal partner ``W |Psi_n>``.
    Levels are ordered by ascending energy.
    """

    point: np.ndarray
    energies: np.ndarray
    right_states: np.ndarray
    left_states: np.ndarray

    @property
    def dim(self):
        return len(self.energies)

    def biorthonormality_residual(self):
        g = np.conj(self.left_states) @ self.right_states.T
        return float(np.abs(g - np.eye(self.dim)).max())

    def completeness_residual(self):
        p = np.einsum("ni,nj->ij", self.right_states, np.conj(self.left_states))
        return float(np.abs(p - np.eye(self.dim)).max())

    def metric_residual(self, w):
        return float(np.abs(self.left_states - self.right_states @ w.T).max())


def _spectra(system, points):
    """Gauge-fixed eigen-data for a stack of points.

    Returns energies (M, N), right (M, N, N) and left (M, N, N) with
    ``right[k, n]`` the level-`n` vector at point `k`.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    h = system.hamiltonian_at(pts)
    w = system.metric_at(pts)
    scale = nk.frobenius_norm(h)
    e, v = nk.eig_general(h)

    tol = REALITY_RTOL * scale
    imag = np.abs(e.imag).max(axis=-1)
    if np.any(imag > tol):
        k = int(np.argmax(imag > tol))
        raise BrokenPTPhase(f"complex eigenvalues {e[k]} at {pts[k]} (broken PT phase)")
    if system.dim > 1:
        gap = np.diff(e.real, axis=-1).min(axis=-1)
        if np.any(gap <= DEGENERACY_RTOL * scale):
            k = int(np.argmax(gap <= DEGENERACY_RTOL * scale))
            raise DegenerateSpectrum(f"level gap {gap[k]:.3e} at {pts[k]}")
    _require_positive_metric(w)

    right = np.swapaxes(v, -1, -2).copy()
    # fix the phase: largest-magnitude component real and positive
    idx = np.argmax(np.abs(right), axis=-1)
    pivot = np.take_along_axis(right, idx[..., None], axis=-1)
    right *= np.conj(pivot) / np.abs(pivot)
    left = np.einsum("kij,knj->kni", w, right)
    norm = np.sum(np.conj(left) * right, axis=-1).real
    right /= np.sqrt(norm)[..., None]
    left /= np.sqrt(norm)[..., None]
    return e, right, left


def spectrum_at(system, point):
    """Biorthonormal eigen-data of ``H(point)``.

    Raises
    ------
    BrokenPTPhase
        If an eigenvalue has imaginary part above ``1e-8 ||H||``.
    DegenerateSpectrum
        If two levels are closer than ``1e-8 ||H||``.
    """
    p = np.asarray(point, dtype=float)
    e, right, left = _spectra(system, p[None, :])
    return BiorthogonalSpectrum(p, e[0], right[0], left[0])


class SpectrumPath:
    """Phase-smoothed eigen-data along a path.

    Consecutive right/left pairs are rotated by unimodular factors so that
    ``<Phi_n(t_k)|Psi_n(t_k+1)>`` is real and positive.  The last sample of a
    closed path is *not* re-identified with the first: the mismatch between
    the two is the holonomy.
    """

    def __init__(self, path, energies, right, left):
        self.path = path
        self.energies = energies
        self.right = right
        self.left = left

    def __len__(self):
        return len(self.energies)

    def __getitem__(self, k):
        return BiorthogonalSpectrum(self.path.points[k], self.energies[k], self.right[k], self.left[k])

    @property
    def dim(self):
        return self.energies.shape[1]

    def forward_overlaps(self):
        """``<Phi_n(t_k)|Psi_n(t_k+1)>``, shape (M-1, N)."""
        return np.sum(np.conj(self.left[:-1]) * self.right[1:], axis=-1)

    def backward_overlaps(self):
        """``<Phi_n(t_k+1)|Psi_n(t_k)>``, shape (M-1, N)."""
        return np.sum(np.conj(self.left[1:]) * self.right[:-1], axis=-1)

    def closure(self):
        """``<Phi_n(0)|Psi_n(tau)>`` per level: the phase mismatch at the end."""
        return np.sum(np.conj(self.left[0]) * self.right[-1], axis=-1)


def spectrum_along(system, path, dominance=MATCH_DOMINANCE):
    """Gauge-continuous spectra at every sample of `path`.

    Raises
    ------
    LevelOrderSwap
        If the largest overlap between consecutive samples is not on the
        diagonal, or an off-diagonal overlap exceeds `dominance` times it.
    ZeroOverlap
        If a diagonal overlap is below ``1e-6`` in magnitude.
    """
    if len(path) < 3:
        raise ValueError("path needs at least 3 samples")
    e, right, left = _spectra(system, path.points)

    o = np.abs(np.einsum("kmi,kni->kmn", np.conj(left[:-1]), right[1:]))
    diag = np.diagonal(o, axis1=1, axis2=2)
    off = o - diag[..., None] * np.eye(system.dim)
    if np.any(off.max(axis=-1) > dominance * diag):
        k = int(np.argmax(np.any(off.max(axis=-1) > dominance * diag, axis=-1)))
        raise LevelOrderSwap(f"ambiguous level matching between samples {k} and {k + 1}")
    if np.any(diag < ZERO_OVERLAP):
        k = int(np.argmax(np.any(diag < ZERO_OVERLAP, axis=-1)))
        raise ZeroOverlap(f"vanishing overlap between samples {k} and {k + 1}; refine the grid")

    z = np.sum(np.conj(left[:-1]) * right[1:], axis=-1)
    turn = np.concatenate([np.zeros((1, system.dim)), np.cumsum(np.angle(z), axis=0)])
    lam = np.exp(-1j * turn)[..., None]
    return SpectrumPath(path, e, right * lam, left * lam)
