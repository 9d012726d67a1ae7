"""Effective conductivity matrix, its scaled small-inclusion coefficient, and
the sweep harness that extrapolates the coefficient to eps = 0.

The conductivity is assembled in boundary-reduced form

    lam_eff[k, j] = lam_minus * delta_kj
                    + sum_w (lam_plus * u+_j - lam_minus * u-_j) * nu_k,

which follows from the volume definition by the divergence theorem together
with quasi-periodicity (the cell-boundary flux of the matrix phase
contributes exactly delta_kj).  A brute-force volume quadrature guards this
reduction in the extended test suite.
"""

import concurrent.futures
from dataclasses import dataclass

import numpy as np

from .geometry import PlacedInclusion, discretize, shape_measure
from .greens import PeriodicGreenConfig
from .transmission import (
    solve_cell_directions,
    solve_exterior_neumann,
    solve_limit_directions,
)

_DIM = 2


@dataclass(eq=False)
class EffectiveResult:
    """Effective matrix at one inclusion size, with the scaled coefficient
    (lam_eff - lam_minus I) / eps^n and solver diagnostics."""

    eps: float
    n_nodes: int
    lam_eff: np.ndarray
    lambda_hat: np.ndarray
    bc_residual: float
    residuals: tuple


@dataclass(eq=False)
class SweepResult:
    """Scaled coefficients over a decreasing eps list with their
    extrapolated limit and the reference value from the limit solver."""

    results: list
    lambda_extrapolated: np.ndarray
    lambda_reference: np.ndarray
    relative_deviation: float
    observed_orders: list
    r_star: float
    n_nodes: int


def _boundary_moments(solutions, lam_plus, lam_minus):
    """Matrix of boundary moments sum_w (lam+ u+_j - lam- u-_j) nu_k."""
    disc = solutions[0].disc
    w = disc.weights
    nu = disc.normals
    lam = np.zeros((_DIM, _DIM))
    for sol in solutions:
        for k in range(_DIM):
            lam[k, sol.direction] += np.sum(
                w * (lam_plus * sol.boundary_u_plus - lam_minus * sol.boundary_u_minus)
                * nu[:, k])
    return lam


def effective_matrix(solutions):
    """Effective conductivity from one periodic-cell solution per direction."""
    solutions = sorted(solutions, key=lambda s: s.direction)
    if [s.direction for s in solutions] != list(range(_DIM)):
        raise ValueError("need exactly one cell solution per gradient direction")
    first = solutions[0]
    for sol in solutions:
        if sol.problem != "periodic-cell":
            raise ValueError("effective conductivity is defined from cell solutions")
        if (sol.eps != first.eps or sol.phases != first.phases
                or sol.disc.shape != first.disc.shape
                or sol.disc.center != first.disc.center
                or sol.disc.n_nodes != first.disc.n_nodes):
            raise ValueError("cell solutions mix different geometries or phases")
    phases = first.phases
    moments = _boundary_moments(solutions, phases.lambda_plus, phases.lambda_minus)
    lam = phases.lambda_minus * np.eye(_DIM) + moments
    lam_hat = moments / first.eps**_DIM
    residuals = tuple(sol.residuals for sol in solutions)
    bc = max(max(r.get("flux", 0.0), r.get("jump", 0.0)) for r in residuals)
    return EffectiveResult(eps=first.eps, n_nodes=first.disc.n_nodes,
                           lam_eff=lam, lambda_hat=lam_hat,
                           bc_residual=float(bc), residuals=residuals)


def limit_lambda(shape, phases, r_star, n_nodes):
    """Limit coefficient matrix from the limiting transmission problem:
    lam+ * tr(u+) - lam- * tr(u-) boundary moments plus the area term."""
    sols = solve_limit_directions(shape, phases, r_star, n_nodes)
    area = shape_measure(discretize(shape, n_nodes))
    return _boundary_moments(sols, phases.lambda_plus, phases.lambda_minus) \
        + (phases.lambda_plus - phases.lambda_minus) * area * np.eye(_DIM)


def limit_lambda_r0(shape, phases, n_nodes):
    """Fully resistive limit coefficient from the exterior Neumann field:
    -lam- (boundary moment of v-) - lam- |shape| I."""
    area = shape_measure(discretize(shape, n_nodes))
    lam = np.zeros((_DIM, _DIM))
    for j in range(_DIM):
        sol = solve_exterior_neumann(shape, j, n_nodes)
        w = sol.disc.weights
        for k in range(_DIM):
            lam[k, j] = -phases.lambda_minus * np.sum(
                w * sol.boundary_u_minus * sol.disc.normals[:, k])
    return lam - phases.lambda_minus * area * np.eye(_DIM)


def richardson_extrapolate(eps_values, samples):
    """Polynomial extrapolation to eps = 0 of samples given at eps_values.

    The first Neville column removes the leading first-order term; further
    columns remove the higher powers that an analytic coefficient admits.
    """
    eps_values = np.asarray(eps_values, float)
    table = np.asarray(samples, float).copy()
    if len(eps_values) != len(table) or len(table) < 2:
        raise ValueError("extrapolation needs matching lists of at least two samples")
    for m in range(1, len(table)):
        for i in range(len(table) - m):
            e0, em = eps_values[i], eps_values[i + m]
            table[i] = (e0 * table[i + 1] - em * table[i]) / (e0 - em)
    return table[0]


def observed_orders(eps_values, samples):
    """Empirical convergence order from consecutive triples; exact for
    geometric eps sequences."""
    orders = []
    for i in range(len(samples) - 2):
        d0 = abs(samples[i] - samples[i + 1])
        d1 = abs(samples[i + 1] - samples[i + 2])
        if d0 == 0 or d1 == 0:
            orders.append(float("nan"))
        else:
            orders.append(float(np.log(d0 / d1) / np.log(eps_values[i] / eps_values[i + 1])))
    return orders


def sweep_and_extrapolate(shape, center, phases, eps_values, n_nodes=256,
                          cfg=None, threads=1):
    """Solve the cell problem along a strictly decreasing eps list and
    extrapolate the scaled coefficient to its limit.

    The reference value is the limit coefficient at the phase model's own
    r*; for the constant and power resistivity models that is r* = 0.
    """
    eps_values = [float(e) for e in eps_values]
    if len(eps_values) < 3:
        raise ValueError("sweep requires >= 3 epsilons")
    if any(b >= a for a, b in zip(eps_values, eps_values[1:])):
        raise ValueError("eps list must be strictly decreasing")
    cfg = cfg or PeriodicGreenConfig()
    inclusions = [PlacedInclusion(shape, tuple(center), e) for e in eps_values]

    def run(inc):
        sols = solve_cell_directions(inc, phases, n_nodes, cfg)
        return effective_matrix(sols)

    if threads and threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, inclusions))
    else:
        results = [run(inc) for inc in inclusions]

    hats = np.stack([r.lambda_hat for r in results])
    extrapolated = np.empty((_DIM, _DIM))
    for k in range(_DIM):
        for j in range(_DIM):
            extrapolated[k, j] = richardson_extrapolate(eps_values, hats[:, k, j])
    reference = limit_lambda(shape, phases, phases.r_star, n_nodes)
    deviation = float(np.abs(extrapolated - reference).max()
                      / max(np.abs(reference).max(), 1e-300))
    orders = observed_orders(eps_values, hats[:, 0, 0])
    return SweepResult(results=results, lambda_extrapolated=extrapolated,
                       lambda_reference=reference, relative_deviation=deviation,
                       observed_orders=orders, r_star=phases.r_star,
                       n_nodes=n_nodes)
