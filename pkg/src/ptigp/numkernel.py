"""Dense complex linear algebra for small matrices.

All routines accept a single ``(N, N)`` matrix or a stack ``(..., N, N)`` and
broadcast over the leading axes.  Inputs are never modified.
"""

import numpy as np

from .errors import NonConvergence, NotHermitian, NotPositiveDefinite, SingularMatrix

EIG_RTOL = 1e-10
HERMITIAN_RTOL = 1e-12
POSITIVE_RTOL = 1e-12
MAX_CONDITION = 1e12


def as_matrix(m):
    """Return `m` as a finite complex128 array of square matrices."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2] or a.shape[-1] < 1:
        raise ValueError(f"expected square matrices, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def as_vector(v):
    a = np.asarray(v, dtype=np.complex128)
    if a.ndim < 1 or a.shape[-1] < 1:
        raise ValueError(f"expected vectors, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector has non-finite entries")
    return a


def adjoint(m):
    return np.conj(np.swapaxes(m, -1, -2))


def frobenius_norm(m):
    return np.linalg.norm(m, axis=(-2, -1))


def matmul(a, b):
    return np.matmul(a, b)


def matvec(m, v):
    return np.einsum("...ij,...j->...i", m, v)


def inner(u, v):
    """Inner product conjugate-linear in `u`."""
    return np.sum(np.conj(u) * v, axis=-1)


def inverse(m, max_condition=MAX_CONDITION):
    a = as_matrix(m)
    cond = np.linalg.cond(a)
    if np.any(~np.isfinite(cond)) or np.any(cond > max_condition):
        raise SingularMatrix(f"condition number {np.max(cond):.3g} exceeds {max_condition:.1e}")
    return np.linalg.inv(a)


def _eig2(a):
    """Closed-form eigenpairs of a stack of 2x2 matrices."""
    p, q = a[..., 0, 0], a[..., 0, 1]
    r, s = a[..., 1, 0], a[..., 1, 1]
    half_trace = 0.5 * (p + s)
    disc = np.sqrt((0.5 * (p - s)) ** 2 + q * r)
    w = np.stack([half_trace - disc, half_trace + disc], axis=-1)

    scale = np.maximum(frobenius_norm(a), np.finfo(float).tiny)[..., None]
    # two candidate null vectors of (a - lam) per eigenvalue; keep the better conditioned
    c1 = np.stack([np.broadcast_to(q[..., None], w.shape), w - p[..., None]], axis=-2)
    c2 = np.stack([w - s[..., None], np.broadcast_to(r[..., None], w.shape)], axis=-2)
    n1 = np.linalg.norm(c1, axis=-2)
    n2 = np.linalg.norm(c2, axis=-2)
    v = np.where((n1 >= n2)[..., None, :], c1, c2)
    nv = np.maximum(n1, n2)
    # a multiple of the identity: any basis works
    flat = nv <= 1e-14 * scale
    if np.any(flat):
        eye = np.broadcast_to(np.eye(2, dtype=complex), v.shape)
        v = np.where(flat[..., None, :], eye, v)
        nv = np.where(flat, 1.0, nv)
    return w, v / nv[..., None, :]


def eig_residual(m, w, v):
    """Largest ``||m v - w v|| / ||m||`` over the eigenpairs (per matrix)."""
    res = np.linalg.norm(m @ v - v * w[..., None, :], axis=-2).max(axis=-1)
    scale = frobenius_norm(m)
    return np.where(scale > 0, res / np.where(scale > 0, scale, 1.0), res)


def eig_general(m, rtol=EIG_RTOL):
    """Eigen-decomposition of general complex matrices.

    Parameters
    ----------
    m : array_like, shape (..., N, N)
    rtol : float
        Accepted residual ``||m v - lam v||`` relative to ``||m||_F``.

    Returns
    -------
    w : ndarray, shape (..., N)
        Eigenvalues sorted by real part, then imaginary part.
    v : ndarray, shape (..., N, N)
        Unit-norm right eigenvectors; ``v[..., :, k]`` belongs to ``w[..., k]``.
    """
    a = as_matrix(m)
    n = a.shape[-1]
    if n == 1:
        return a[..., 0].copy(), np.ones_like(a)
    if n == 2:
        w, v = _eig2(a)
        bad = eig_residual(a, w, v) > rtol
        if np.any(bad):
            # near-degenerate input loses digits in the closed form; hand those to LAPACK
            wb, vb = _lapack_eig(a[bad])
            w[bad], v[bad] = wb, vb
    else:
        w, v = _lapack_eig(a)

    order = np.lexsort((w.imag, w.real), axis=-1)
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[..., None, :], axis=-1)

    res = eig_residual(a, w, v)
    if np.any(res > rtol):
        raise NonConvergence(f"eigen-residual {np.max(res):.3e} above {rtol:.1e}", residual=float(np.max(res)))
    return w, v


def _lapack_eig(a):
    try:
        w, v = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(str(exc)) from exc
    return w, v / np.linalg.norm(v, axis=-2, keepdims=True)


def hermitian_sqrt(m, hermitian_rtol=HERMITIAN_RTOL, positive_rtol=POSITIVE_RTOL):
    """Principal square root of Hermitian positive-definite matrices.

    Raises
    ------
    NotHermitian
        If ``||m - m^dagger|| > hermitian_rtol * ||m||``.
    NotPositiveDefinite
        If the smallest eigenvalue is below ``positive_rtol`` times the largest.
    """
    a = as_matrix(m)
    scale = frobenius_norm(a)
    skew = frobenius_norm(a - adjoint(a))
    if np.any(skew > hermitian_rtol * scale):
        raise NotHermitian(f"hermiticity residual {np.max(skew / np.maximum(scale, 1e-300)):.3e}")
    lam, u = np.linalg.eigh(0.5 * (a + adjoint(a)))
    top = np.abs(lam).max(axis=-1, keepdims=True)
    if np.any(lam <= positive_rtol * top):
        raise NotPositiveDefinite(f"smallest eigenvalue {np.min(lam):.3e}")
    return (u * np.sqrt(lam)[..., None, :]) @ adjoint(u)
