"""Stationarity measures of the network-wide problem."""
import numpy as np

from .penalties import soft_threshold


def merit_J(s_bar, problem):
    """
    Infinity-norm distance between ``s_bar`` and one thresholded projected
    gradient step from it. Zero exactly at stationary points.
    """
    direction = problem.total_gradient(s_bar) - problem.concave_gradient(s_bar)
    target = problem.project(soft_threshold(s_bar - direction, problem.threshold))
    return float(np.max(np.abs(s_bar - target)))


def best_response_map_xhat(w, problem, spec, agent=0):
    """
    Block-wise best response at ``w`` when every agent knows the exact
    average gradient; ``spec`` supplies the surrogate kind and modulus.
    """
    total = problem.total_gradient(w)
    x_hat = np.empty(problem.dimension)
    modulus = spec.modulus(agent)
    for idx in problem.partition.index_sets:
        coefficient = spec.coefficient(total[idx], problem.concave_gradient(w[idx]))
        x_hat[idx] = problem.block_minimizer(w[idx], coefficient, modulus)
    return x_hat


def stationarity_residual(w, problem, spec, agent=0):
    return float(np.max(np.abs(best_response_map_xhat(w, problem, spec, agent) - w)))
