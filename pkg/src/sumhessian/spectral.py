"""Symmetric-matrix spectral machinery and the matrix operator calculus.

For a symmetric H the operator acts through the complement matrix
U[H] = trace(H) I - H, whose eigenvalues are eta(lam(H)). This module
evaluates

    value(H)   = S_k(eta(lam(H)))               (operator_value)
    gradient   = d value / dH                    (operator_grad)
    hessian    = quadratic form A -> d2 value    (operator_hess_quad)

The second derivative of a spectral function combines the eigenvalue-space
Hessian with a divided-difference term over eigenvalue pairs; the divided
difference is removable for symmetric functions, and near-degenerate pairs
are replaced by the analytic limit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cones import eta
from .errors import ConeViolationError, JacobiConvergenceError
from .symfun import SumHessianParams, sum_hessian, sum_hessian_grad, sum_hessian_hess

MIN_DIM = 2
MAX_DIM = 8
SYMMETRY_ATOL = 1e-14
JACOBI_SWEEPS = 50
JACOBI_OFF_TOL = 1e-13
DEGENERATE_GAP = 1e-8


def as_sym_matrix(entries) -> np.ndarray:
    """Validate and return a dense symmetric matrix (dim 2..8).

    Entries must be symmetric to 1e-14 absolute; the result is exactly
    symmetrized.
    """
    a = np.asarray(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    dim = a.shape[0]
    if not MIN_DIM <= dim <= MAX_DIM:
        raise ValueError(f"matrix dim must be in [{MIN_DIM}, {MAX_DIM}], got {dim}")
    if np.max(np.abs(a - a.T)) > SYMMETRY_ATOL:
        raise ValueError("matrix entries are not symmetric to 1e-14")
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues sorted descending with matching orthonormal frame columns."""

    values: np.ndarray  # (dim,)
    frame: np.ndarray   # (dim, dim), columns are eigenvectors


def eigen_sym(matrix) -> EigenDecomposition:
    """Cyclic Jacobi diagonalization of a symmetric matrix.

    Rotates until the off-diagonal Frobenius norm drops below
    1e-13 * ||M||_F; raises JacobiConvergenceError after 50 sweeps
    (unreachable in practice for dim <= 8).
    """
    a = as_sym_matrix(matrix).copy()
    dim = a.shape[0]
    frame = np.eye(dim)
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return EigenDecomposition(values=np.zeros(dim), frame=frame)
    tol = JACOBI_OFF_TOL * norm

    def offnorm():
        off = a - np.diag(np.diag(a))
        return np.linalg.norm(off)

    for _ in range(JACOBI_SWEEPS):
        if offnorm() <= tol:
            break
        for p in range(dim - 1):
            for q in range(p + 1, dim):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(1.0, theta)) if theta != 0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                rot = np.eye(dim)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                frame = frame @ rot
    if offnorm() > tol:
        raise JacobiConvergenceError(f"Jacobi did not converge in {JACOBI_SWEEPS} sweeps")
    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")[::-1]
    return EigenDecomposition(values=values[order], frame=frame[:, order])


def u_operator(matrix) -> np.ndarray:
    """Complement matrix trace(H) I - H; its eigenvalues are eta(lam(H))."""
    h = as_sym_matrix(matrix)
    return np.trace(h) * np.eye(h.shape[0]) - h


def operator_value(matrix, params: SumHessianParams, normalized: bool = False) -> float:
    """S_k(eta(lam(H))), or its k-th root in normalized mode.

    Normalized mode requires a positive value and raises ConeViolationError
    otherwise.
    """
    dec = eigen_sym(matrix)
    val = sum_hessian(eta(dec.values), params.k, params.alpha)
    if not normalized:
        return float(val)
    if val <= 0:
        raise ConeViolationError("normalized operator value requires S_k(eta) > 0")
    return float(val) ** (1.0 / params.k)


def grad_coefficients(values, params: SumHessianParams) -> np.ndarray:
    """Per-eigenvalue derivative coefficients of lam -> S_k(eta(lam)).

    Coefficient i equals the sum of the eta-side partials over all
    coordinates other than i (the trace-minus-own combination produced by
    the complement transform).
    """
    lam = np.asarray(values, dtype=float)
    g_eta = sum_hessian_grad(eta(lam), params.k, params.alpha)
    return g_eta.sum(axis=-1, keepdims=True) - g_eta


def operator_grad(matrix, params: SumHessianParams) -> np.ndarray:
    """Matrix derivative of H -> S_k(eta(lam(H))): diagonal in the eigenframe."""
    dec = eigen_sym(matrix)
    t = grad_coefficients(dec.values, params)
    return dec.frame @ np.diag(t) @ dec.frame.T


def lambda_space_hessian(values, params: SumHessianParams) -> np.ndarray:
    """Hessian of lam -> S_k(eta(lam)) (chain rule through the eta transform)."""
    lam = np.asarray(values, dtype=float)
    n = lam.shape[-1]
    d2_eta = sum_hessian_hess(eta(lam), params.k, params.alpha)
    mix = np.ones((n, n)) - np.eye(n)  # d eta_p / d lam_i
    return mix @ d2_eta @ mix


def operator_hess_quad(matrix, direction, params: SumHessianParams) -> float:
    """Second derivative quadratic form of H -> S_k(eta(lam(H))) along a
    symmetric direction A.

    In the eigenframe of H the form splits into the eigenvalue-space Hessian
    contracted with the diagonal of A, plus divided differences of the
    gradient against the off-diagonal entries. Pairs with
    |lam_p - lam_q| < 1e-8 * max(1, ||H||_F) use the analytic limit
    hess[p, p] - hess[p, q].
    """
    dec = eigen_sym(matrix)
    a = as_sym_matrix(direction)
    if a.shape != dec.frame.shape:
        raise ValueError("direction must have the same dim as the matrix")
    at = dec.frame.T @ a @ dec.frame
    lam = dec.values
    n = lam.shape[0]
    hess = lambda_space_hessian(lam, params)
    grad = grad_coefficients(lam, params)
    diag = np.diag(at)
    total = float(diag @ hess @ diag)
    gap_tol = DEGENERATE_GAP * max(1.0, np.linalg.norm(matrix))
    for p in range(n - 1):
        for q in range(p + 1, n):
            gap = lam[p] - lam[q]
            if abs(gap) < gap_tol:
                w = hess[p, p] - hess[p, q]
            else:
                w = (grad[p] - grad[q]) / gap
            total += 2.0 * w * at[p, q] ** 2
    return total
