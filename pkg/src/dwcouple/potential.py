"""Relaxed double-well energy density.

All functions accept a single gradient of shape ``(2,)`` or a stack of
gradients of shape ``(..., 2)`` and broadcast over the leading axes.

The nonconvex density is ``W(F) = |F - F1|^2 |F - F2|^2``.  With
``A = (F2 - F1)/2`` and ``B = (F1 + F2)/2`` its convex envelope reads::

    W**(F) = Q(F)^2 + 4|A|^2 |F - B|^2 - 4 (A.(F - B))^2,
    Q(F)   = max(0, |F - B|^2 - |A|^2).

``Q(F) == 0`` marks gradients inside the relaxed well, where minimizing
sequences of the unrelaxed energy develop microstructure.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TOL_NUMERIC = 1e-10


@dataclass(frozen=True)
class WellParams:
    """The two wells and the derived quantities ``a``, ``b``, ``|a|^2``."""

    f1: np.ndarray
    f2: np.ndarray
    a: np.ndarray = field(init=False, repr=False)
    b: np.ndarray = field(init=False, repr=False)
    a_norm2: float = field(init=False, repr=False)

    def __post_init__(self):
        f1 = np.asarray(self.f1, dtype=float).reshape(2)
        f2 = np.asarray(self.f2, dtype=float).reshape(2)
        if np.array_equal(f1, f2):
            raise ValueError("wells must be distinct (F1 == F2)")
        a = 0.5 * (f2 - f1)
        b = 0.5 * (f1 + f2)
        object.__setattr__(self, "f1", f1)
        object.__setattr__(self, "f2", f2)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a_norm2", float(a @ a))

    @property
    def a_norm(self) -> float:
        return float(np.sqrt(self.a_norm2))

    @property
    def a_perp(self) -> np.ndarray:
        """Unit vector orthogonal to ``a``."""
        return np.array([-self.a[1], self.a[0]]) / self.a_norm


def _as_grad(f):
    return np.asarray(f, dtype=float)


def eval_w(p: WellParams, f) -> np.ndarray:
    """Unrelaxed double-well density ``|f - F1|^2 |f - F2|^2``."""
    f = _as_grad(f)
    d1 = f - p.f1
    d2 = f - p.f2
    return np.sum(d1 * d1, axis=-1) * np.sum(d2 * d2, axis=-1)


def eval_q(p: WellParams, f) -> np.ndarray:
    """Microstructure indicator ``max(0, |f - B|^2 - |A|^2)``."""
    x = _as_grad(f) - p.b
    return np.maximum(0.0, np.sum(x * x, axis=-1) - p.a_norm2)


def eval_wss(p: WellParams, f) -> np.ndarray:
    """Convex envelope ``W**``.

    Evaluated without cancellation: where ``Q > 0`` the envelope coincides
    with ``W``, inside the ball it equals ``4|A|^2 |P(f - B)|^2``.
    """
    f = _as_grad(f)
    x = f - p.b
    q = np.sum(x * x, axis=-1) - p.a_norm2
    px = project_perp(p, x)
    inside = 4.0 * p.a_norm2 * np.sum(px * px, axis=-1)
    return np.where(q > 0.0, eval_w(p, f), inside)


def grad_wss(p: WellParams, f) -> np.ndarray:
    """Gradient of ``W**``.

    ``4 Q(f)(f - B) + 8|A|^2 (f - B) - 8 (A.(f - B)) A``; the first term
    vanishes continuously on the kink set ``Q = 0``.
    """
    x = _as_grad(f) - p.b
    q = np.maximum(0.0, np.sum(x * x, axis=-1) - p.a_norm2)
    ax = x @ p.a
    return (4.0 * q + 8.0 * p.a_norm2)[..., None] * x - 8.0 * ax[..., None] * p.a


def hess_wss(p: WellParams, f) -> np.ndarray:
    """Generalized Hessian of ``W**``, shape ``(..., 2, 2)``.

    Uses the quartic branch where ``Q > 0`` and the quadratic branch
    ``8|A|^2 P`` otherwise; ``W**`` is only C^1 across ``Q = 0``.
    """
    x = _as_grad(f) - p.b
    q = np.maximum(0.0, np.sum(x * x, axis=-1) - p.a_norm2)
    eye = np.eye(2)
    quad = 8.0 * (p.a_norm2 * eye - np.outer(p.a, p.a))
    outer_x = x[..., :, None] * x[..., None, :]
    active = (q > 0.0)[..., None, None]
    return quad + np.where(active, 4.0 * q[..., None, None] * eye + 8.0 * outer_x, 0.0)


def project_perp(p: WellParams, f) -> np.ndarray:
    """Orthogonal projection onto the complement of ``span(A)``."""
    f = _as_grad(f)
    return f - ((f @ p.a) / p.a_norm2)[..., None] * p.a


def w4_gap(p: WellParams, f, e) -> np.ndarray:
    """Slack in the strong monotonicity inequality of ``DW**``.

    Returns ``(DW**(f) - DW**(e)).(f - e)`` minus::

        8|A|^2 |P f - P e|^2
        + 2 (Q(f) + Q(e)) (A.(f - e))^2 / |A|^2
        + 2 (Q(f) - Q(e))^2

    which is nonnegative up to rounding.
    """
    f = _as_grad(f)
    e = _as_grad(e)
    d = f - e
    lhs = np.sum((grad_wss(p, f) - grad_wss(p, e)) * d, axis=-1)
    pd = project_perp(p, d)
    qf = eval_q(p, f)
    qe = eval_q(p, e)
    ad = d @ p.a
    rhs = (
        8.0 * p.a_norm2 * np.sum(pd * pd, axis=-1)
        + 2.0 * (qf + qe) * ad * ad / p.a_norm2
        + 2.0 * (qf - qe) ** 2
    )
    return lhs - rhs
