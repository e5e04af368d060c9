"""Damped least squares (Levenberg-Marquardt) on real residual vectors."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from ..errors import InputError, NumericalError


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 200
    cost_tolerance: float = 1e-10
    gradient_tolerance: float = 1e-12
    initial_damping: float = 1e-3
    damping_up_factor: float = 10.0
    damping_down_factor: float = 0.1
    finite_difference_step: float = 1e-6
    step_tolerance: float = 1e-15
    max_damping: float = 1e16
    geodesic_acceleration: bool = True
    acceleration_ratio: float = 0.75
    acceleration_step: float = 0.1

    def __post_init__(self):
        for name, value in asdict(self).items():
            if name != "geodesic_acceleration" and not value > 0:
                raise InputError(f"FitOptions.{name} must be positive, got {value!r}")
        if not self.damping_up_factor > 1 > self.damping_down_factor:
            raise InputError("need damping_up_factor > 1 > damping_down_factor")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class FitResult:
    """Outcome of :func:`lm_minimize`.

    ``cost`` is 0.5*||r||^2.  ``covariance`` is s^2 (J^T J)^+ with
    s^2 = ||r||^2 / (m - n), zero when there are no spare degrees of freedom.
    """

    x: np.ndarray
    standard_errors: np.ndarray
    covariance: np.ndarray
    residual_norm: float
    cost: float
    iterations: int
    converged: bool
    stop_reason: str
    n_residuals: int
    n_evaluations: int
    cost_history: list = field(default_factory=list)
    options: FitOptions = field(default_factory=FitOptions)
    jacobian: np.ndarray | None = None


def _evaluate(fn, x, what="residual"):
    r = np.asarray(fn(x), dtype=float).ravel()
    if not np.all(np.isfinite(r)):
        raise NumericalError(f"non-finite {what} at parameters {x.tolist()}")
    return r


def jacobian_fd(residual_fn, at, step: float = 1e-6, lower=None) -> np.ndarray:
    """Central-difference Jacobian; parameter j moves by step*max(|x_j|, 1).

    Where ``lower`` is given and the backward probe would cross it, a forward
    difference is used instead.
    """
    x = np.asarray(at, dtype=float)
    r0 = _evaluate(residual_fn, x)
    jac = np.empty((r0.size, x.size))
    for j in range(x.size):
        h = step * max(abs(x[j]), 1.0)
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        rp = _evaluate(residual_fn, xp, "jacobian probe")
        if lower is not None and xm[j] <= lower[j]:
            jac[:, j] = (rp - r0) / (xp[j] - x[j])
        else:
            jac[:, j] = (rp - _evaluate(residual_fn, xm, "jacobian probe")) / (xp[j] - xm[j])
    return jac


def covariance_from_jacobian(jac, residual_sq, dof, rcond=1e-13):
    """s^2 (J^T J)^+ via SVD of J, dropping directions below rcond*s_max."""
    n = jac.shape[1]
    if n == 0:
        return np.zeros((0, 0))
    s2 = residual_sq / dof if dof > 0 else 0.0
    _, sv, vt = np.linalg.svd(jac, full_matrices=False)
    keep = sv > rcond * (sv[0] if sv.size else 0.0)
    inv = np.zeros_like(sv)
    inv[keep] = 1.0 / sv[keep] ** 2
    cov = (vt.T * inv) @ vt * s2
    return 0.5 * (cov + cov.T)


def _damped_step(jac, r, damping):
    """Solve (J^T J + damping * D) step = -J^T r with D = diag(J^T J).

    Posed as the augmented least-squares problem [J; sqrt(damping D)] step
    = [-r; 0], which is conditioned like J rather than J^T J.
    """
    col_sq = np.einsum("ij,ij->j", jac, jac)
    floor = col_sq.max() * 1e-12 if col_sq.max() > 0 else 1.0
    scale = np.sqrt(damping * np.maximum(col_sq, floor))
    aug = np.vstack([jac, np.diag(scale)])
    rhs = np.concatenate([-r, np.zeros(jac.shape[1])])
    return np.linalg.lstsq(aug, rhs, rcond=None)[0]


def lm_minimize(residual_fn, init, opts: FitOptions | None = None, jacobian=None) -> FitResult:
    """Minimise 0.5*||residual_fn(x)||^2 from ``init``.

    With ``opts.geodesic_acceleration`` each damped step v is corrected by
    half the acceleration a solving the same damped system with the second
    directional derivative of r along v, used only when 2|a| <= ratio*|v|.
    This keeps progress along curved narrow valleys.
    ``jacobian(x)`` may be supplied; otherwise central differences are used.
    Running out of iterations is reported through ``converged=False``.
    """
    opts = opts or FitOptions()
    x = np.array(init, dtype=float).ravel()
    n = x.size
    evals = 0

    def jac_at(point):
        nonlocal evals
        if jacobian is not None:
            evals += 1
            jm = np.asarray(jacobian(point), dtype=float)
            if not np.all(np.isfinite(jm)):
                raise NumericalError("non-finite analytic Jacobian")
            return jm
        evals += 2 * n
        return jacobian_fd(residual_fn, point, opts.finite_difference_step)

    r = _evaluate(residual_fn, x)
    evals += 1
    m = r.size
    cost = 0.5 * float(r @ r)
    history = [cost]

    def finish(reason, converged, iterations, jac):
        cov = covariance_from_jacobian(jac, 2.0 * cost, m - n) if n else np.zeros((0, 0))
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
        return FitResult(x=x, standard_errors=se, covariance=cov, residual_norm=float(np.sqrt(2 * cost)),
                         cost=cost, iterations=iterations, converged=converged, stop_reason=reason,
                         n_residuals=m, n_evaluations=evals, cost_history=history, options=opts,
                         jacobian=jac)

    if n == 0:
        return finish("no_parameters", True, 0, np.zeros((m, 0)))

    jac = jac_at(x)
    damping = opts.initial_damping
    # set when the last accepted step behaved exactly as the linear model
    # predicted; the next step is then tried undamped (Gauss-Newton)
    model_exact = False
    for iteration in range(1, opts.max_iterations + 1):
        grad = jac.T @ r
        if cost == 0.0:
            return finish("zero_residual", True, iteration - 1, jac)
        if np.max(np.abs(grad)) <= opts.gradient_tolerance:
            return finish("gradient_tolerance", True, iteration - 1, jac)

        if model_exact:
            step = np.linalg.lstsq(jac, -r, rcond=None)[0]
        else:
            step = _damped_step(jac, r, damping)
        if opts.geodesic_acceleration and not model_exact:
            # second directional derivative of r along the step
            h = opts.acceleration_step
            r_probe = np.asarray(residual_fn(x + h * step), dtype=float).ravel()
            evals += 1
            if np.all(np.isfinite(r_probe)):
                curvature = 2.0 / h * ((r_probe - r) / h - jac @ step)
                accel = _damped_step(jac, curvature, damping)
                if 2.0 * np.linalg.norm(accel) <= opts.acceleration_ratio * np.linalg.norm(step):
                    step = step + 0.5 * accel

        predicted = cost - 0.5 * float(np.sum((r + jac @ step) ** 2))
        trial = x + step
        r_trial = np.asarray(residual_fn(trial), dtype=float).ravel()
        evals += 1
        if not np.all(np.isfinite(r_trial)):
            model_exact = False
            damping *= opts.damping_up_factor
            if damping > opts.max_damping:
                raise NumericalError("residuals stayed non-finite along every trial step")
            continue
        with np.errstate(over="ignore"):
            cost_trial = 0.5 * float(r_trial @ r_trial)  # inf is simply rejected

        if cost_trial < cost:
            reduction = (cost - cost_trial) / cost
            model_exact = predicted > 0 and abs((cost - cost_trial) / predicted - 1.0) < 1e-6
            x, r, cost = trial, r_trial, cost_trial
            history.append(cost)
            damping = max(damping * opts.damping_down_factor, 1e-300)
            jac = jac_at(x)
            if reduction < opts.cost_tolerance:
                return finish("cost_tolerance", True, iteration, jac)
            if np.linalg.norm(step) <= opts.step_tolerance * (np.linalg.norm(x) + opts.step_tolerance):
                return finish("step_tolerance", True, iteration, jac)
        else:
            model_exact = False
            damping *= opts.damping_up_factor
            if damping > opts.max_damping:
                # no descent direction left at working precision
                return finish("no_further_descent", True, iteration, jac)

    return finish("max_iterations", False, opts.max_iterations, jac)
