"""Isotropic elasticity tensors, the reduced plate tensor, and thin-film rescalings.

Everything in this module is a pure function of small dense matrices
(n <= 3), so no sparsity or caching is attempted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LameParams:
    """Lame coefficients of an isotropic material in spatial dimension n."""

    lam: float
    mu: float
    n: int = 2

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ValueError(f"spatial dimension must be 2 or 3, got {self.n}")


def validate_lame(p: LameParams) -> bool:
    """True iff the elasticity tensor C is positive definite on symmetric matrices."""
    return p.mu > 0.0 and 2.0 * p.mu + p.n * p.lam > 0.0


def _check_sym(E: np.ndarray, dim: int) -> np.ndarray:
    E = np.asarray(E, dtype=float)
    if E.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix, got shape {E.shape}")
    if not np.array_equal(E, E.T):
        raise ValueError("matrix is not exactly symmetric")
    return E


def apply_C(p: LameParams, E: np.ndarray) -> np.ndarray:
    """C E = lam * tr(E) * I + 2 mu * E."""
    E = _check_sym(E, p.n)
    return p.lam * np.trace(E) * np.eye(p.n) + 2.0 * p.mu * E


def quadratic_form_C(p: LameParams, E: np.ndarray) -> float:
    """C E . E = lam * tr(E)^2 + 2 mu * |E|^2."""
    E = _check_sym(E, p.n)
    return p.lam * np.trace(E) ** 2 + 2.0 * p.mu * float(np.sum(E * E))


def quadratic_form_C0(p: LameParams, E: np.ndarray) -> float:
    """Reduced tensor form: C0 E . E = 2 lam mu / (lam + 2 mu) tr(E)^2 + 2 mu |E|^2.

    E is an (n-1) x (n-1) symmetric matrix (in-plane strain).
    """
    E = _check_sym(E, p.n - 1)
    coeff = 2.0 * p.lam * p.mu / (p.lam + 2.0 * p.mu)
    return coeff * np.trace(E) ** 2 + 2.0 * p.mu * float(np.sum(E * E))


def _embed(E: np.ndarray, xi: np.ndarray, n: int) -> np.ndarray:
    """Full n x n symmetric matrix with in-plane block E and last row/column xi."""
    M = np.zeros((n, n))
    M[: n - 1, : n - 1] = E
    M[-1, : n - 1] = xi[: n - 1]
    M[: n - 1, -1] = xi[: n - 1]
    M[-1, -1] = xi[-1]
    return M


def reduced_min_oracle(p: LameParams, E: np.ndarray) -> tuple[float, np.ndarray]:
    """Minimize C E_xi . E_xi over the transverse entries xi in R^n.

    The objective is a strictly convex quadratic in xi (C is positive
    definite), so the minimizer solves the stationarity linear system
    exactly.  Returns (minimum value, minimizing xi).
    """
    if not validate_lame(p):
        raise ValueError("invalid Lame parameters")
    n = p.n
    E = _check_sym(E, n - 1)

    def f(xi):
        return quadratic_form_C(p, _embed(E, xi, n))

    # Assemble the quadratic f(xi) = c + b.xi + xi.A xi by evaluation
    # (exact for a quadratic).
    c = f(np.zeros(n))
    basis = np.eye(n)
    A = np.empty((n, n))
    b = np.empty(n)
    for i in range(n):
        fi = f(basis[i])
        fmi = f(-basis[i])
        A[i, i] = 0.5 * (fi + fmi) - c
        b[i] = 0.5 * (fi - fmi)
    for i in range(n):
        for j in range(i + 1, n):
            fij = f(basis[i] + basis[j])
            A[i, j] = A[j, i] = 0.5 * (fij - c - b[i] - b[j] - A[i, i] - A[j, j])
    try:
        xi_star = np.linalg.solve(2.0 * A, -b)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular stationarity system: invalid Lame parameters") from exc
    return f(xi_star), xi_star


def phi_rho(rho: float, nu: np.ndarray) -> float:
    """Anisotropic surface weight |(nu_1, ..., nu_{n-1}, nu_n / rho)|."""
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    nu = np.asarray(nu, dtype=float)
    w = nu.copy()
    w[-1] /= rho
    return float(np.linalg.norm(w))


def rescale_strain(E: np.ndarray, rho: float) -> np.ndarray:
    """Map the strain of the rescaled field to e^rho.

    In-plane entries unchanged, (alpha, n) entries divided by rho and the
    (n, n) entry by rho^2.
    """
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    E = np.asarray(E, dtype=float)
    out = E.copy()
    out[:-1, -1] /= rho
    out[-1, :-1] /= rho
    out[-1, -1] /= rho ** 2
    return out


def rescale_displacement(u, rho: float):
    """Rescale a displacement field from the thin domain to the unit-thickness one.

    ``u`` is a callable accepting points of the thin domain; the result is a
    callable on the rescaled domain:
    v(x) = (u_1(psi(x)), ..., u_{n-1}(psi(x)), rho * u_n(psi(x)))
    with psi(x) = (x', rho * x_n).
    """
    if rho <= 0.0:
        raise ValueError("rho must be positive")

    def v(x):
        x = np.asarray(x, dtype=float)
        y = x.copy()
        y[..., -1] *= rho
        val = np.asarray(u(y), dtype=float)
        out = val.copy()
        out[..., -1] *= rho
        return out

    return v


def rescale_displacement_inverse(v, rho: float):
    """Inverse of :func:`rescale_displacement`: recover u on the thin domain."""
    if rho <= 0.0:
        raise ValueError("rho must be positive")

    def u(x):
        x = np.asarray(x, dtype=float)
        y = x.copy()
        y[..., -1] /= rho
        val = np.asarray(v(y), dtype=float)
        out = val.copy()
        out[..., -1] /= rho
        return out

    return u
