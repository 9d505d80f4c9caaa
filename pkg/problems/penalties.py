"""
Penalty functions and the proximal primitives built on them.

The log penalty ``r0(x) = log(1 + theta|x|) / log(1 + theta)`` is split as
``eta(theta)|x| - r0_minus(x)``: a scaled l1 norm minus a convex function
with Lipschitz derivative. Every function acts element-wise.
"""
import logging

import numpy as np

from .exceptions import SolverFailure

logger = logging.getLogger(__name__)

PENALTY_LOG = 'log'
PENALTY_L1 = 'l1'

PENALTY_CHOICES = (
    (PENALTY_LOG, 'log penalty, difference of convex'),
    (PENALTY_L1, 'l1 norm'),
)

MIN_THETA = 1e-8


def _check_theta(theta):
    if theta < MIN_THETA:
        raise ValueError(f'theta must be at least {MIN_THETA}')


def eta(theta):
    _check_theta(theta)
    return theta / np.log1p(theta)


def r0(x, theta):
    _check_theta(theta)
    return np.log1p(theta * np.abs(x)) / np.log1p(theta)


def r0_minus(x, theta):
    return eta(theta) * np.abs(x) - r0(x, theta)


def r0_minus_derivative(x, theta):
    _check_theta(theta)
    ax = np.abs(x)
    return np.sign(x) * theta ** 2 * ax / (np.log1p(theta) * (1.0 + theta * ax))


def r0_subgradient(x, theta):
    """Derivative of ``r0`` away from 0, and 0 at 0."""
    _check_theta(theta)
    return np.sign(x) * theta / (np.log1p(theta) * (1.0 + theta * np.abs(x)))


def soft_threshold(v, kappa):
    if kappa < 0:
        raise ValueError('threshold must be nonnegative')
    return np.sign(v) * np.maximum(np.abs(v) - kappa, 0.0)


def box_project(v, k_lower, k_upper):
    if k_lower > k_upper:
        raise ValueError('box lower bound exceeds upper bound')
    return np.clip(v, k_lower, k_upper)


def oracle_prox_solve(q, x_c, tau, lambda_eta, box=(-np.inf, np.inf), tol=1e-12, max_iter=100_000):
    """
    Minimize ``q'(x - x_c) + tau||x - x_c||^2 + lambda_eta||x||_1`` over a box.

    Projected proximal gradient with step ``1/(4 tau)``, stopped once the
    step falls below ``tol`` relative to the iterate. Used as an independent
    check of the closed-form block minimizer.
    """
    if tau <= 0:
        raise ValueError('tau must be positive')
    q = np.asarray(q, dtype=float)
    x_c = np.asarray(x_c, dtype=float)
    k_lower, k_upper = box
    step = 1.0 / (4.0 * tau)
    x = box_project(x_c, k_lower, k_upper)
    change = np.inf
    for iteration in range(1, max_iter + 1):
        smooth = q + 2.0 * tau * (x - x_c)
        x_new = box_project(soft_threshold(x - step * smooth, step * lambda_eta), k_lower, k_upper)
        change = float(np.max(np.abs(x_new - x), initial=0.0))
        x = x_new
        if change <= tol * (1.0 + float(np.max(np.abs(x), initial=0.0))):
            logger.debug('prox oracle converged in %d iterations', iteration)
            return x
    raise SolverFailure(max_iter, change)
