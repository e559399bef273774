"""Pointwise Randers algebra on a single tangent space.

A Randers structure on R^d is an inner product ``a`` together with a covector
``beta`` whose dual vector has a-norm strictly below one; the norm is
F(y) = sqrt(a(y,y)) + beta(y).  This module provides the fundamental tensor
g_y, the Cartan torsion, the distortion, and the normal data (n, nu, c, chat)
attached to a hyperplane, plus the induced leaf metric and its index raising.

Conventions.  d = m + 1 is the ambient dimension, so exponents written as
(m + 2)/2 appear here as (d + 1)/2.  For a hyperplane W with a-unit normal N,
``beta_sharp_top`` denotes the tangential (W-) part of the dual vector
beta_sharp, c = sqrt(1 - |beta_sharp_top|^2) and chat = c + beta(N); the
F-normal with unit a-norm is n = chat N - beta_sharp and the F-unit normal is
nu = n / (c chat).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "RandersPoint",
    "NormalData",
    "randers_norm",
    "fundamental_tensor",
    "fundamental_tensor_printed",
    "cartan_torsion",
    "mean_cartan_torsion",
    "angular_form",
    "distortion",
    "distortion_closed",
    "f_normal",
    "leaf_metric",
    "g_raise",
    "perp_beta_project",
]

_BETA_NORM_LIMIT = 1.0 - 1e-9


@dataclass(frozen=True)
class RandersPoint:
    """One tangent space: SPD inner product ``a`` and covector ``beta``."""

    a: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"a must be a square matrix, got shape {a.shape}")
        if beta.shape != (a.shape[0],):
            raise ValueError("beta must be a covector matching the dimension of a")
        if not np.allclose(a, a.T, atol=1e-12):
            raise ValueError("a must be symmetric")
        try:
            np.linalg.cholesky(a)
        except np.linalg.LinAlgError as exc:
            raise ValueError("a must be positive definite") from exc
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "beta", beta)
        if self.beta_norm >= _BETA_NORM_LIMIT:
            raise ValueError(
                f"a-norm of beta is {self.beta_norm:.12f}; strong convexity requires < 1"
            )

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    @cached_property
    def a_inv(self) -> np.ndarray:
        return np.linalg.inv(self.a)

    @cached_property
    def beta_sharp(self) -> np.ndarray:
        """a-dual vector of beta."""
        return self.a_inv @ self.beta

    @cached_property
    def beta_norm(self) -> float:
        return float(np.sqrt(self.beta @ self.a_inv @ self.beta))

    def inner(self, u, v) -> float:
        return float(np.asarray(u) @ self.a @ np.asarray(v))

    def alpha(self, y) -> float:
        return float(np.sqrt(max(self.inner(y, y), 0.0)))


@dataclass(frozen=True)
class NormalData:
    """Normal quintuple (N, n, nu, c, chat) of a hyperplane W."""

    N: np.ndarray
    n: np.ndarray
    nu: np.ndarray
    c: float
    chat: float
    beta_sharp_top: np.ndarray


def randers_norm(p: RandersPoint, y) -> float:
    """F(y) = sqrt(a(y,y)) + beta(y); zero only at y = 0."""
    y = np.asarray(y, dtype=float)
    return p.alpha(y) + float(p.beta @ y)


def _require_nonzero(p: RandersPoint, y) -> tuple[np.ndarray, float]:
    y = np.asarray(y, dtype=float)
    al = p.alpha(y)
    if al == 0.0:
        raise ValueError("base vector y must be nonzero")
    return y, al


def fundamental_tensor(p: RandersPoint, y) -> np.ndarray:
    """Hessian form g_y of F^2/2, as a matrix.

    Uses the 0-homogeneous closed form
        g_y = (F/alpha) (a - y_flat y_flat^T / alpha^2)
              + (y_flat/alpha + beta) (y_flat/alpha + beta)^T
    which agrees with the central-difference Hessian of F^2/2 for every y and
    with the commonly printed alpha(y) = 1 display on the unit sphere.
    """
    y, al = _require_nonzero(p, y)
    F = randers_norm(p, y)
    yf = p.a @ y
    ell = yf / al + p.beta
    return (F / al) * (p.a - np.outer(yf, yf) / al**2) + np.outer(ell, ell)


def fundamental_tensor_printed(p: RandersPoint, y) -> np.ndarray:
    """The textbook display of g_y; valid as written only when alpha(y) = 1."""
    y, al = _require_nonzero(p, y)
    yf = p.a @ y
    b = p.beta
    by = float(b @ y)
    return (
        (1.0 + by) / al**2 * p.a
        + np.outer(b, b)
        - by / al**3 * np.outer(yf, yf)
        + (np.outer(b, yf) + np.outer(yf, b)) / al
    )


def mean_cartan_torsion(p: RandersPoint, y, u) -> float:
    """I_y(u) = g^{jk} C_y(e_j, e_k, u); vertical derivative of the distortion."""
    y, al = _require_nonzero(p, y)
    u = np.asarray(u, dtype=float)
    F = randers_norm(p, y)
    d = p.dim
    return (d + 1) / (2.0 * F) * float(p.beta @ u - (p.beta @ y) * p.inner(y, u) / al**2)


def angular_form(p: RandersPoint, y, u, v) -> float:
    """h_y(u,v) = g_y(u,v) - F^-2 g_y(y,u) g_y(y,v)."""
    y, _ = _require_nonzero(p, y)
    g = fundamental_tensor(p, y)
    F2 = randers_norm(p, y) ** 2
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(u @ g @ v - (y @ g @ u) * (y @ g @ v) / F2)


def cartan_torsion(p: RandersPoint, y, u, v, w) -> float:
    """Cartan torsion C_y(u,v,w) of the Randers norm.

    Randers norms are C-reducible:
        C_y = (I_y h_y + cyclic) / (d + 1),
    with I_y the mean Cartan torsion and h_y the angular form.  Symmetric in
    (u, v, w), kills the base vector, and scales as C_{t y} = C_y / t.
    """
    y, _ = _require_nonzero(p, y)
    s = (
        mean_cartan_torsion(p, y, u) * angular_form(p, y, v, w)
        + mean_cartan_torsion(p, y, v) * angular_form(p, y, u, w)
        + mean_cartan_torsion(p, y, w) * angular_form(p, y, u, v)
    )
    return s / (p.dim + 1)


def distortion(p: RandersPoint, y) -> float:
    """tau(y) = log(sqrt(det g_y) / sigma_F) with the Busemann-Hausdorff density.

    For Randers norms sigma_F = (1 - |beta_sharp|^2)^{(d+1)/2} sqrt(det a).
    """
    y, _ = _require_nonzero(p, y)
    g = fundamental_tensor(p, y)
    sigma_f = (1.0 - p.beta_norm**2) ** ((p.dim + 1) / 2.0) * np.sqrt(np.linalg.det(p.a))
    return float(0.5 * np.log(np.linalg.det(g)) - np.log(sigma_f))


def distortion_closed(p: RandersPoint, y) -> float:
    """Closed form tau(y) = ((d+1)/2) log[(F/alpha) / (1 - |beta_sharp|^2)]."""
    y, al = _require_nonzero(p, y)
    F = randers_norm(p, y)
    return float((p.dim + 1) / 2.0 * np.log((F / al) / (1.0 - p.beta_norm**2)))


def f_normal(p: RandersPoint, N, tol: float = 1e-10) -> NormalData:
    """Normal data of the hyperplane W = {w : a(N, w) = 0}.

    Requires ``N`` to be a-unit.  Returns the unique F-normal n with unit
    a-norm on the N side of W, the F-unit normal nu = n/(c chat), and the
    scalars c, chat.
    """
    N = np.asarray(N, dtype=float)
    nrm = p.alpha(N)
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"N must be a-unit, got |N|_a = {nrm:.12e}")
    bN = float(p.beta @ N)
    bst = p.beta_sharp - bN * N
    c = float(np.sqrt(max(1.0 - p.inner(bst, bst), 0.0)))
    chat = c + bN
    n = chat * N - p.beta_sharp
    nu = n / (c * chat)
    return NormalData(N=N, n=n, nu=nu, c=c, chat=chat, beta_sharp_top=bst)


def leaf_metric(p: RandersPoint, nd: NormalData, u, v, tol: float = 1e-9) -> float:
    """g_n(u, v) = c chat (a(u,v) - beta(u) beta(v)) for u, v tangent to W."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    for w in (u, v):
        if abs(p.inner(nd.N, w)) > tol * max(1.0, p.alpha(w)):
            raise ValueError("leaf_metric arguments must be a-orthogonal to N")
    return float(nd.c * nd.chat * (p.inner(u, v) - (p.beta @ u) * (p.beta @ v)))


def g_raise(p: RandersPoint, nd: NormalData, U) -> np.ndarray:
    """Solve g_n(u, .) = a(U, .) on W: (c chat) u = U + c^-2 beta(U) beta_sharp_top."""
    U = np.asarray(U, dtype=float)
    bU = p.inner(nd.beta_sharp_top, U)
    return (U + bU / nd.c**2 * nd.beta_sharp_top) / (nd.c * nd.chat)


def perp_beta_project(p: RandersPoint, nd: NormalData, X) -> np.ndarray:
    """Component of a tangent vector a-orthogonal to beta_sharp_top.

    When beta_sharp_top vanishes the decomposition degenerates and X is
    returned unchanged.
    """
    X = np.asarray(X, dtype=float)
    b2 = p.inner(nd.beta_sharp_top, nd.beta_sharp_top)
    if b2 < 1e-16:
        return X.copy()
    return X - p.inner(X, nd.beta_sharp_top) / b2 * nd.beta_sharp_top
