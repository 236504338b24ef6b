"""Finite-difference damped-Newton solver for the Dirichlet problem

    S_k(eta(lam(D^2 u))) = f(x, u, Du)  in Omega,   u = g  on the boundary,

on uniform box grids in 2D/3D, with an admissibility-preserving line search.

The bulk path never eigendecomposes: sigma_m of eta(lam(H)) and the
coefficient matrices of the linearization are evaluated from
characteristic-polynomial invariants of the complement matrix
U = trace(H) I - H (Newton transformations), which is exact and fully
vectorized over grid points. Assembly is data-parallel over interior
points; the Newton loop is sequential and single-threaded runs produce
bitwise-identical traces for identical configurations.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import expr
from .errors import (
    ConeViolationError,
    InstanceError,
    LinearSolveError,
    NonConvergenceError,
)
from .grid import GridDomain, ScalarField, gradient_field, hessian_field
from .symfun import SumHessianParams, sum_hessian

FD_STEP = 1e-6          # step for df/du, df/dp central differences
GUESS_SCALE_START = 2.0 ** -16
GUESS_SCALE_CAP = 2.0 ** 40


@dataclass(frozen=True)
class RhsSpec:
    """Right-hand side f(x, u, Du) as an expression tree."""

    expression: expr.Node
    require_positive: bool = True

    @staticmethod
    def parse(source: str, require_positive: bool = True) -> "RhsSpec":
        return RhsSpec(expr.parse(source), require_positive)


@dataclass(frozen=True)
class SolveConfig:
    tol: float = 1e-10
    max_iter: int = 50
    homotopy: tuple[float, ...] = (1.0,)
    min_step: float = 2.0 ** -20
    linear_rtol: float = 1e-8     # required achieved relative linear residual
    krylov_rtol: float = 1e-10    # target handed to BiCGSTAB
    krylov_maxiter: int = 4000
    dense_limit: int = 2500       # unknown count below which the dense direct path is used


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    residual: float
    step: float
    admissible: bool


@dataclass
class SolveResult:
    field: ScalarField
    iterations: int
    residual: float
    admissible: bool
    trace: list[TraceEntry] = field(default_factory=list)

    def converged(self, tol: float) -> bool:
        return self.residual <= tol


# ---------------------------------------------------------------------------
# invariants of the complement matrix (vectorized over interior points)

def _complement(hb: np.ndarray) -> np.ndarray:
    """U = trace(H) I - H for a stack of symmetric matrices (N, d, d)."""
    d = hb.shape[-1]
    tr = np.trace(hb, axis1=-2, axis2=-1)
    return tr[:, None, None] * np.eye(d) - hb


def _eta_sigmas(hb: np.ndarray, m_max: int) -> np.ndarray:
    """sigma_m(eta(lam(H))) for m = 0..m_max, from invariants of U."""
    n_pts, d, _ = hb.shape
    u = _complement(hb)
    out = np.empty((n_pts, m_max + 1))
    out[:, 0] = 1.0
    if m_max >= 1:
        out[:, 1] = np.trace(u, axis1=-2, axis2=-1)
    if m_max >= 2:
        tr_u2 = np.einsum("nij,nji->n", u, u)
        out[:, 2] = 0.5 * (out[:, 1] ** 2 - tr_u2)
    if m_max >= 3:
        out[:, 3] = np.linalg.det(u)
    if m_max > 3:
        raise ValueError("grid dimension above 3 is not supported")
    return out


def _grad_coeff_matrices(hb: np.ndarray, params: SumHessianParams) -> np.ndarray:
    """Coefficient matrices dF(H) of the linearized operator, (N, d, d).

    dF = (trace G) I - G with G the Newton-transformation combination
    T_{k-1}(U) + alpha T_{k-2}(U); the eigenvalues of dF are the
    per-eigenvalue derivative coefficients of the spectral module.
    """
    n_pts, d, _ = hb.shape
    u = _complement(hb)
    eye = np.broadcast_to(np.eye(d), (n_pts, d, d))
    sig = _eta_sigmas(hb, min(params.k, d))

    def newton_transform(m: int) -> np.ndarray:
        if m < 0:
            return np.zeros((n_pts, d, d))
        if m == 0:
            return eye.copy()
        if m == 1:
            return sig[:, 1, None, None] * eye - u
        if m == 2:
            return sig[:, 2, None, None] * eye - sig[:, 1, None, None] * u + u @ u
        raise ValueError("grid dimension above 3 is not supported")

    g = newton_transform(params.k - 1) + params.alpha * newton_transform(params.k - 2)
    tr_g = np.trace(g, axis1=-2, axis2=-1)
    return tr_g[:, None, None] * np.eye(d) - g


def _admissible_from_hessians(hb: np.ndarray, params: SumHessianParams) -> np.ndarray:
    sig = _eta_sigmas(hb, params.k)
    ok = np.all(sig[:, 1:params.k] > 0, axis=1)
    s_k = sig[:, params.k] + params.alpha * sig[:, params.k - 1]
    return ok & (s_k > 0)


def admissible_mask(fld: ScalarField, params: SumHessianParams) -> np.ndarray:
    """Per-interior-point admissibility: eta(lam(H)) has sigma_1..sigma_{k-1}
    positive and S_k positive (the tilde-prime cone test)."""
    return _admissible_from_hessians(hessian_field(fld), params)


def first_violation(fld: ScalarField, params: SumHessianParams):
    """Multi-index of the first inadmissible interior point, or None."""
    mask = admissible_mask(fld, params)
    if mask.all():
        return None
    bad = fld.domain.interior_idx[np.flatnonzero(~mask)[0]]
    return tuple(int(v) for v in np.unravel_index(bad, fld.domain.shape))


def ellipticity_margins(fld: ScalarField, params: SumHessianParams):
    """(min eigenvalue, eigenvalue sum) of the coefficient matrix per interior
    point; positive minima witness ellipticity on admissible fields."""
    coeff = _grad_coeff_matrices(hessian_field(fld), params)
    eigs = np.linalg.eigvalsh(coeff)
    return eigs[:, 0], eigs.sum(axis=1)


# ---------------------------------------------------------------------------
# right-hand side evaluation

def _interior_env(fld: ScalarField) -> dict:
    dom = fld.domain
    pts = dom.points[dom.interior_idx]
    grad = gradient_field(fld)
    env = {"u": fld.flat[dom.interior_idx]}
    for a in range(dom.dim):
        env[f"x{a + 1}"] = pts[:, a]
        env[f"p{a + 1}"] = grad[:, a]
    return env


def _eval_rhs(rhs: RhsSpec, env: dict, n_pts: int, blend=None) -> np.ndarray:
    try:
        vals = expr.evaluate(rhs.expression, env)
    except expr.EvalError as exc:
        raise InstanceError(f"right-hand side failed to evaluate: {exc}") from exc
    vals = np.broadcast_to(np.asarray(vals, dtype=float), (n_pts,)).copy()
    if blend is not None:
        t, const = blend
        vals = (1.0 - t) * const + t * vals
    if rhs.require_positive and np.min(vals) <= 0:
        raise InstanceError(f"right-hand side must stay positive, min {np.min(vals)!r}")
    if not np.all(np.isfinite(vals)):
        raise InstanceError("right-hand side evaluated non-finite")
    return vals


def residual(fld: ScalarField, params: SumHessianParams, rhs: RhsSpec, blend=None) -> np.ndarray:
    """S_k(eta(lam(H))) - f at interior points, zeros on the boundary layer
    (grid-shaped array)."""
    dom = fld.domain
    if params.n != dom.dim:
        raise ValueError(f"params.n={params.n} must equal grid dim {dom.dim}")
    hb = hessian_field(fld)
    sig = _eta_sigmas(hb, params.k)
    s_k = sig[:, params.k] + params.alpha * sig[:, params.k - 1]
    f_vals = _eval_rhs(rhs, _interior_env(fld), dom.interior_idx.size, blend)
    out = np.zeros(dom.n_points)
    out[dom.interior_idx] = s_k - f_vals
    return out.reshape(dom.shape)


def _rhs_derivatives(fld: ScalarField, rhs: RhsSpec, blend=None):
    """df/du and df/dp by central differences of the evaluator (step 1e-6)."""
    dom = fld.domain
    n_int = dom.interior_idx.size
    env = _interior_env(fld)
    t_factor = 1.0 if blend is None else blend[0]

    def f_at(**over):
        probe = dict(env)
        probe.update(over)
        try:
            vals = expr.evaluate(rhs.expression, probe)
        except expr.EvalError as exc:
            raise InstanceError(f"right-hand side failed to evaluate: {exc}") from exc
        return np.broadcast_to(np.asarray(vals, dtype=float), (n_int,))

    f_u = (f_at(u=env["u"] + FD_STEP) - f_at(u=env["u"] - FD_STEP)) / (2 * FD_STEP)
    f_p = np.empty((n_int, dom.dim))
    for a in range(dom.dim):
        key = f"p{a + 1}"
        f_p[:, a] = (f_at(**{key: env[key] + FD_STEP})
                     - f_at(**{key: env[key] - FD_STEP})) / (2 * FD_STEP)
    return t_factor * f_u, t_factor * f_p


def _assemble(dom: GridDomain, coeff: np.ndarray, f_u: np.ndarray, f_p: np.ndarray) -> sp.csr_matrix:
    """Sparse operator: second-order term with per-point coefficient matrices
    contracted against the Hessian stencil, minus first/zeroth-order blocks.
    Boundary rows are identity."""
    n_tot = dom.n_points
    idx = dom.interior_idx
    s = dom.strides
    h2 = dom.h * dom.h
    rows, cols, vals = [], [], []

    bdry = np.flatnonzero(~dom.interior_flat)
    rows.append(bdry)
    cols.append(bdry)
    vals.append(np.ones(bdry.size))

    center = -f_u.copy()
    for a in range(dom.dim):
        center -= 2.0 * coeff[:, a, a] / h2
    rows.append(idx)
    cols.append(idx)
    vals.append(center)

    for a in range(dom.dim):
        for sign in (+1, -1):
            rows.append(idx)
            cols.append(idx + sign * s[a])
            vals.append(coeff[:, a, a] / h2 - sign * f_p[:, a] / (2.0 * dom.h))

    for a in range(dom.dim):
        for b in range(a + 1, dom.dim):
            w = coeff[:, a, b] / (2.0 * h2)
            for sa, sb, sgn in ((1, 1, +1.0), (-1, -1, +1.0), (1, -1, -1.0), (-1, 1, -1.0)):
                rows.append(idx)
                cols.append(idx + sa * s[a] + sb * s[b])
                vals.append(sgn * w)

    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_tot, n_tot),
    )
    return mat.tocsr()


def linearize(fld: ScalarField, params: SumHessianParams, rhs: RhsSpec, blend=None) -> sp.csr_matrix:
    """Discrete linearized operator at an admissible field.

    Raises ConeViolationError naming the first inadmissible interior point.
    """
    offender = first_violation(fld, params)
    if offender is not None:
        raise ConeViolationError(f"field is not admissible at grid point {offender}")
    coeff = _grad_coeff_matrices(hessian_field(fld), params)
    f_u, f_p = _rhs_derivatives(fld, rhs, blend)
    return _assemble(fld.domain, coeff, f_u, f_p)


def _solve_linear(mat: sp.csr_matrix, rhs_vec: np.ndarray, config: SolveConfig) -> np.ndarray:
    rhs_norm = float(np.linalg.norm(rhs_vec))
    if rhs_norm == 0.0:
        return np.zeros_like(rhs_vec)
    n = mat.shape[0]
    if n < config.dense_limit:
        delta = np.linalg.solve(mat.toarray(), rhs_vec)
    else:
        diag = mat.diagonal()
        diag = np.where(np.abs(diag) > 1e-300, diag, 1.0)
        precond = spla.LinearOperator(mat.shape, matvec=lambda x: x / diag, dtype=np.float64)
        # unit-norm right-hand side keeps BiCGSTAB clear of its breakdown
        # thresholds on late Newton steps; the Jacobi start (not zero) avoids
        # a breakdown when b is supported only on the identity boundary rows
        b_unit = rhs_vec / rhs_norm
        delta, _ = spla.bicgstab(
            mat, b_unit, x0=b_unit / diag, rtol=config.krylov_rtol, atol=0.0,
            maxiter=config.krylov_maxiter, M=precond,
        )
        delta = delta * rhs_norm
    achieved = float(np.linalg.norm(mat @ delta - rhs_vec))
    if achieved > config.linear_rtol * rhs_norm:
        raise LinearSolveError(
            f"linear solve reached relative residual {achieved / rhs_norm:.2e} "
            f"(required {config.linear_rtol:.0e})"
        )
    return delta


# ---------------------------------------------------------------------------
# initial guess

def quadratic_scale(params: SumHessianParams, f_sup: float) -> float:
    """Smallest power of two c with S_k(eta(c I)) >= f_sup."""
    def value(c: float) -> float:
        return float(sum_hessian(np.full(params.n, (params.n - 1) * c), params.k, params.alpha))

    c = GUESS_SCALE_START
    while value(c) < f_sup:
        c *= 2.0
        if c > GUESS_SCALE_CAP:
            raise InstanceError(f"no admissible quadratic scale below 2^40 for f_sup={f_sup}")
    return c


def boundary_values(dom: GridDomain, boundary: expr.Node) -> np.ndarray:
    """Dirichlet data evaluated at every grid point (used on the boundary layer)."""
    names = expr.variables(boundary)
    allowed = {f"x{a + 1}" for a in range(dom.dim)}
    if not names <= allowed:
        raise InstanceError(
            f"boundary data may only reference {sorted(allowed)}, got {sorted(names)}"
        )
    env = {f"x{a + 1}": dom.points[:, a] for a in range(dom.dim)}
    vals = expr.evaluate(boundary, env)
    return np.broadcast_to(np.asarray(vals, dtype=float), (dom.n_points,)).copy()


REPAIR_SWEEPS = 200


def _repair_admissibility(fld: ScalarField, params: SumHessianParams,
                          scale: float) -> ScalarField:
    """Lower interior values at inadmissible points until the field is
    admissible with a uniform margin on the complement eigenvalues.

    Lowering u at a grid point adds an isotropic positive matrix to its
    discrete Hessian, which always pushes the point back into the cone;
    staircase boundaries inject trace-free noise into any smooth extension,
    and this sweep absorbs it locally. Boundary values are never modified.
    """
    dom = fld.domain
    d = dom.dim
    margin = 0.1 * max(1.0, scale)
    shift = (margin / (d - 1)) * np.eye(d)
    delta = 0.25 * dom.h * dom.h * max(1.0, scale)
    values = fld.values
    for _ in range(REPAIR_SWEEPS):
        trial = ScalarField(dom, values)
        ok = _admissible_from_hessians(hessian_field(trial) - shift, params)
        if ok.all():
            return trial
        bad = dom.interior_idx[~ok]
        values = values.copy()
        values.reshape(-1)[bad] -= delta
    trial = ScalarField(dom, values)
    if _admissible_from_hessians(hessian_field(trial), params).all():
        return trial
    raise ConeViolationError(
        f"initial guess could not be repaired to admissibility in {REPAIR_SWEEPS} sweeps"
    )


def _axis_blend(values: np.ndarray, axis: int) -> np.ndarray:
    """Linear blend of the two opposite faces along one axis."""
    n = values.shape[axis] - 1
    weight_shape = [1] * values.ndim
    weight_shape[axis] = n + 1
    w = (np.arange(n + 1) / n).reshape(weight_shape)
    lo = np.take(values, [0], axis=axis)
    hi = np.take(values, [n], axis=axis)
    return (1.0 - w) * lo + w * hi


def transfinite_blend(values: np.ndarray) -> np.ndarray:
    """Boolean-sum (transfinite) interpolation of the box-face values.

    Matches the input on every face of the box; smooth in the interior
    with no corner singularities, and exact on additively separable
    functions.
    """
    if values.ndim == 2:
        p1 = _axis_blend(values, 0)
        p2 = _axis_blend(values, 1)
        return p1 + p2 - _axis_blend(p2, 0)
    if values.ndim == 3:
        p1 = _axis_blend(values, 0)
        p2 = _axis_blend(values, 1)
        p3 = _axis_blend(values, 2)
        p12 = _axis_blend(p2, 0)
        p13 = _axis_blend(p3, 0)
        p23 = _axis_blend(p3, 1)
        p123 = _axis_blend(p23, 0)
        return p1 + p2 + p3 - p12 - p13 - p23 + p123
    raise ValueError("transfinite blend supports 2-D and 3-D grids")


def initial_guess(dom: GridDomain, params: SumHessianParams, rhs: RhsSpec,
                  boundary: expr.Node, config: SolveConfig | None = None) -> ScalarField:
    """Starting field c (|x - x_c|^2 - r^2)/2 plus an interpolation of the
    boundary mismatch.

    The scale c is the smallest power of two making the constant-Hessian
    value dominate sup f (evaluated at u = 0, Du = 0). On plain boxes the
    mismatch is interpolated by the transfinite face blend (no corner
    singularities; exact on the quadratic, so the guess coincides with the
    blended boundary data). On masked domains the mismatch lives on the
    staircase ring and is small, and the discrete harmonic extension is
    used instead, which keeps the trace of the Hessian exact. Boundary
    values equal the Dirichlet data exactly in both cases.
    """
    config = config or SolveConfig()
    pts = dom.points
    center = dom.center
    radius = dom.inscribed_radius
    quad = 0.5 * (np.sum((pts - center) ** 2, axis=1) - radius * radius)

    env = {"u": np.zeros(dom.interior_idx.size)}
    for a in range(dom.dim):
        env[f"x{a + 1}"] = pts[dom.interior_idx, a]
        env[f"p{a + 1}"] = np.zeros(dom.interior_idx.size)
    f_ref = _eval_rhs(rhs, env, dom.interior_idx.size)
    c = quadratic_scale(params, float(np.max(f_ref)))

    bvals = boundary_values(dom, boundary)
    bdry = ~dom.interior_flat
    scale = max(1.0, c, float(np.max(np.abs(bvals))))

    def with_extension(use_blend: bool) -> ScalarField:
        flat = c * quad
        mismatch = np.zeros(dom.n_points)
        mismatch[bdry] = bvals[bdry] - flat[bdry]
        if np.max(np.abs(mismatch)) > 1e-14 * scale:
            if use_blend:
                flat = flat + transfinite_blend((bvals - flat).reshape(dom.shape)).ravel()
            else:
                d = dom.dim
                eye = np.broadcast_to(np.eye(d), (dom.interior_idx.size, d, d))
                lap = _assemble(dom, eye, np.zeros(dom.interior_idx.size),
                                np.zeros((dom.interior_idx.size, d)))
                flat = flat + _solve_linear(lap, mismatch, config)
        flat[bdry] = bvals[bdry]
        return ScalarField(dom, flat.reshape(dom.shape))

    if dom.mask is None:
        fld = with_extension(use_blend=True)
        if _admissible_from_hessians(hessian_field(fld), params).all():
            return fld
        fld = with_extension(use_blend=False)
    else:
        fld = with_extension(use_blend=False)
    return _repair_admissibility(fld, params, c)


# ---------------------------------------------------------------------------
# damped Newton

def newton_solve(dom: GridDomain, params: SumHessianParams, rhs: RhsSpec,
                 boundary: expr.Node, config: SolveConfig | None = None) -> SolveResult:
    """Damped Newton with admissibility-preserving backtracking.

    Each step solves the linearized system, then halves the step until the
    trial iterate is admissible at every interior point and strictly
    decreases the sup-norm residual (or lands below the tolerance). Stops at
    residual <= tol or after max_iter accepted steps; raises
    NonConvergenceError when the line search stalls below the minimum step.
    """
    config = config or SolveConfig()
    if params.n != dom.dim:
        raise ValueError(f"params.n={params.n} must equal grid dim {dom.dim}")
    fld = initial_guess(dom, params, rhs, boundary, config)
    bdry = ~dom.interior_flat

    # homotopy target at t=0: the operator value of the guess-scale quadratic
    f_ref_env = {"u": np.zeros(dom.interior_idx.size)}
    for a in range(dom.dim):
        f_ref_env[f"x{a + 1}"] = dom.points[dom.interior_idx, a]
        f_ref_env[f"p{a + 1}"] = np.zeros(dom.interior_idx.size)
    f_ref = _eval_rhs(rhs, f_ref_env, dom.interior_idx.size)
    c0 = quadratic_scale(params, float(np.max(f_ref)))
    blend_const = float(sum_hessian(np.full(params.n, (params.n - 1) * c0), params.k, params.alpha))

    trace: list[TraceEntry] = []
    iterations = 0

    if not admissible_mask(fld, params).all():
        raise ConeViolationError(
            f"initial guess is not admissible at grid point {first_violation(fld, params)}"
        )

    for t in config.homotopy:
        blend = None if t == 1.0 else (t, blend_const)
        res = residual(fld, params, rhs, blend)
        res_norm = float(np.max(np.abs(res)))
        trace.append(TraceEntry(iterations, res_norm, 0.0, True))

        while res_norm > config.tol and iterations < config.max_iter:
            mat = linearize(fld, params, rhs, blend)
            delta = _solve_linear(mat, -res.ravel(), config)
            delta[bdry] = 0.0
            step = 1.0
            accepted = None
            while step >= config.min_step:
                trial = ScalarField(dom, fld.values + step * delta.reshape(dom.shape))
                if admissible_mask(trial, params).all():
                    try:
                        res_try = residual(trial, params, rhs, blend)
                    except InstanceError:
                        res_try = None
                    if res_try is not None:
                        norm_try = float(np.max(np.abs(res_try)))
                        if norm_try < res_norm or norm_try <= config.tol:
                            accepted = (trial, res_try, norm_try)
                            break
                step *= 0.5
            if accepted is None:
                raise NonConvergenceError(
                    f"line search stalled below step 2^-20 at residual {res_norm:.3e}",
                    trace=trace,
                )
            fld, res, res_norm = accepted
            iterations += 1
            trace.append(TraceEntry(iterations, res_norm, step, True))

    final_res = residual(fld, params, rhs)
    final_norm = float(np.max(np.abs(final_res)))
    return SolveResult(
        field=fld,
        iterations=iterations,
        residual=final_norm,
        admissible=bool(admissible_mask(fld, params).all()),
        trace=trace,
    )
