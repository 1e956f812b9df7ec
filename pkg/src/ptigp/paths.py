"""Discretized curves in parameter space."""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

CLOSURE_ATOL = 1e-14


@dataclass(frozen=True, eq=False)
class LoopPath:
    """Sampled curve ``R(t)`` with strictly increasing times.

    Parameters
    ----------
    points : array_like, shape (M, k)
        Parameter coordinates at each sample.
    times : array_like, shape (M,)
    closed : bool
        Whether the last sample is the first point again.  Coordinates listed
        in `periods` are compared modulo their period.
    periods : tuple of float or None
        Period of each coordinate (``None`` for non-periodic ones).
    """

    points: np.ndarray
    times: np.ndarray
    closed: bool = False
    periods: tuple = field(default=None)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        t = np.asarray(self.times, dtype=float)
        if pts.ndim != 2 or len(t) != len(pts):
            raise ValueError("points must be (M, k) with one time per point")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(t))):
            raise ValueError("non-finite path data")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        periods = self.periods if self.periods is not None else (None,) * pts.shape[1]
        if len(periods) != pts.shape[1]:
            raise ValueError("one period entry per coordinate")
        pts.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "periods", tuple(periods))
        if self.closed and not self._ends_meet():
            raise ValueError("closed path must end where it starts")

    def _ends_meet(self):
        gap = self.points[-1] - self.points[0]
        for i, p in enumerate(self.periods):
            if p:
                gap[i] = gap[i] - p * np.round(gap[i] / p)
        return bool(np.all(np.abs(gap) <= CLOSURE_ATOL * np.maximum(1.0, np.abs(self.points[0]))))

    def __len__(self):
        return len(self.times)

    @property
    def tau(self):
        return float(self.times[-1] - self.times[0])

    @cached_property
    def _spline(self):
        if len(self) < 4:
            return CubicSpline(self.times, self.points, axis=0, bc_type="natural")
        return CubicSpline(self.times, self.points, axis=0)

    def position(self, t):
        """Interpolated coordinates at time(s) `t`."""
        return self._spline(t)

    def velocity(self, t):
        return self._spline(t, 1)

    def prefix(self, stop):
        """Open path made of the first `stop` samples."""
        return LoopPath(self.points[:stop], self.times[:stop], closed=False, periods=self.periods)

    def rescaled(self, factor):
        """Same curve traversed `factor` times slower."""
        return LoopPath(self.points, self.times[0] + factor * (self.times - self.times[0]),
                        closed=self.closed, periods=self.periods)

    def reparameterized(self, times):
        return LoopPath(self.points, times, closed=self.closed, periods=self.periods)

    def every(self, step):
        """Sub-path keeping every `step`-th sample (endpoints preserved)."""
        if (len(self) - 1) % step:
            raise ValueError("interval count not divisible by step")
        return LoopPath(self.points[::step], self.times[::step], closed=self.closed, periods=self.periods)


def latitude_loop(theta, samples=4000, tau=2 * np.pi, phi0=0.0):
    """Circle of constant polar angle, coordinates ``(theta, phi)``.

    `samples` is the number of intervals; the returned path holds
    ``samples + 1`` points with the last one equal to the first modulo 2 pi.
    """
    if samples < 3:
        raise ValueError("need at least 3 intervals")
    phi = phi0 + np.linspace(0.0, 2 * np.pi, samples + 1)
    pts = np.column_stack([np.full_like(phi, theta), phi])
    times = np.linspace(0.0, tau, samples + 1)
    return LoopPath(pts, times, closed=True, periods=(None, 2 * np.pi))


def polyline(vertices, samples=1000, tau=2 * np.pi, closed=None, periods=None):
    """Piecewise-linear path through `vertices`, resampled uniformly in arc length."""
    v = np.atleast_2d(np.asarray(vertices, dtype=float))
    seg = np.linalg.norm(np.diff(v, axis=0), axis=1)
    if np.any(seg == 0):
        raise ValueError("repeated consecutive vertices")
    s = np.concatenate([[0.0], np.cumsum(seg)])
    u = np.linspace(0.0, s[-1], samples + 1)
    pts = np.column_stack([np.interp(u, s, v[:, i]) for i in range(v.shape[1])])
    times = np.linspace(0.0, tau, samples + 1)
    if closed is None:
        closed = bool(np.allclose(v[0], v[-1], atol=CLOSURE_ATOL, rtol=0))
    return LoopPath(pts, times, closed=closed, periods=periods)
