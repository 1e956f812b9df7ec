"""Registry of named model families and configuration-defined custom models."""

import numpy as np

from . import twolevel
from .expressions import evaluate_matrix, matrix_template
from .ptsystem import PTSystem


def _two_level_pt(a=twolevel.DEFAULT_A, b=twolevel.DEFAULT_B, epsilon=0.0):
    return twolevel.system(float(a), float(b), float(epsilon))


def _spin_half(a=1.0, epsilon=0.0):
    return twolevel.system(float(a), 0.0, float(epsilon))


def custom_model(hamiltonian, metric=None, coords=("theta", "phi"), params=None, name="custom"):
    """A :class:`PTSystem` from matrix expressions.

    Parameters
    ----------
    hamiltonian, metric : str
        Nested list displays such as ``"[[cos(theta), 1j*g], [1j*g, -cos(theta)]]"``.
        The metric defaults to the identity.
    coords : sequence of str
        Names bound to the coordinates of each parameter point.
    params : dict, optional
        Extra numeric names available to the expressions.
    """
    h_rows = matrix_template(hamiltonian)
    dim = len(h_rows)
    w_rows = matrix_template(metric) if metric else None
    if w_rows is not None and len(w_rows) != dim:
        raise ValueError("hamiltonian and metric dimensions differ")
    params = dict(params or {})
    coords = tuple(coords)

    def bind(points):
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != len(coords):
            raise ValueError(f"expected {len(coords)} coordinates per point")
        names = dict(params)
        names.update({c: pts[..., i] for i, c in enumerate(coords)})
        return names, pts.shape[:-1]

    def h(points):
        names, shape = bind(points)
        return evaluate_matrix(h_rows, names, shape)

    def w(points):
        names, shape = bind(points)
        if w_rows is None:
            return np.broadcast_to(np.eye(dim, dtype=complex), shape + (dim, dim)).copy()
        return evaluate_matrix(w_rows, names, shape)

    return PTSystem(dim, h, w, name=name, coords=coords)


REGISTRY = {
    "two-level-pt": _two_level_pt,
    "hermitian-spin-half": _spin_half,
}


def available_models():
    return sorted(REGISTRY) + ["custom"]


def get_model(name, **params):
    """Build a registered model, e.g. ``get_model("two-level-pt", a=3, b=5**0.5)``."""
    if name == "custom":
        return custom_model(**params)
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; choose from {available_models()}") from None
    return factory(**params)
