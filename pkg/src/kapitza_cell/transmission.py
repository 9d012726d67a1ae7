"""Solvers for the periodic cell problem, its small-inclusion limit, and the
exterior Neumann problem of the fully resistive limit.

All three use single-layer representations with additive constants:

    periodic cell   u+ = x_j + S_per[mu+] + c+,  u- = x_j + S_per[mu-] + c-
    limit problem   u+ = S[mu+] + c+,            u- = S[mu-] + c-
    ext. Neumann    u- = S[mu-] + c-

Mean-zero side constraints on the densities keep the periodic potentials
harmonic (the lattice sum carries a neutralizing background) and pin the
finite limit at infinity of the free-space exterior representation.  Each
collocation block carries one scalar compatibility multiplier so the
bordered system is square; the multipliers converge to zero spectrally and
are reported with the solution.

Collocation is at the nodes; residuals are measured at shifted off-node
checkpoints, which is an honest error estimate rather than a tautology.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import get_lapack_funcs, lu_factor, lu_solve

from .geometry import PlacedInclusion, discretize, place
from .greens import PeriodicGreenConfig
from .potentials import (
    _greg_pair,
    _kprime_matrix,
    _log_split_matrix,
    evaluate_potential,
    trig_interpolation_matrix,
)

_RCOND_FLOOR = 1e-12
_CELL_TOL_BASE = 1e-6
_LIMIT_TOL = 1e-8
_NORM_TOL = 1e-10
_RHO_MODELS = ("linear", "constant", "power")


class SolverError(RuntimeError):
    """Raised when a discrete solve fails or misses its residual targets."""


@dataclass(frozen=True)
class PhaseParameters:
    """Phase conductivities and the interface resistivity model rho(eps).

    rho_parameter is the model's main constant: the limit ratio r* for the
    linear model rho = eps/r*, the constant value rho0, or the prefactor of
    the power model rho = c * eps**beta with beta < 1.  The derived limit
    r* = lim eps/rho(eps) is r* for the linear model and 0 otherwise.
    """

    lambda_plus: float
    lambda_minus: float
    rho_model: str = "linear"
    rho_parameter: float = 1.0
    exponent: float = 0.0

    def __post_init__(self):
        if not (self.lambda_plus > 0 and self.lambda_minus > 0):
            raise ValueError("conductivity must be positive")
        if self.rho_model not in _RHO_MODELS:
            raise ValueError(f"resistivity model must be one of {_RHO_MODELS}")
        if not self.rho_parameter > 0:
            raise ValueError("resistivity model parameter must be positive")
        if self.rho_model == "power" and not self.exponent < 1:
            raise ValueError("power model exponent must be < 1 so that eps/rho -> 0")

    @classmethod
    def linear(cls, lambda_plus, lambda_minus, r_star):
        return cls(lambda_plus, lambda_minus, "linear", r_star)

    @classmethod
    def constant(cls, lambda_plus, lambda_minus, rho0=1.0):
        return cls(lambda_plus, lambda_minus, "constant", rho0)

    @classmethod
    def power(cls, lambda_plus, lambda_minus, coefficient, exponent):
        return cls(lambda_plus, lambda_minus, "power", coefficient, exponent)

    @property
    def r_star(self):
        return self.rho_parameter if self.rho_model == "linear" else 0.0

    def rho(self, eps):
        if not eps > 0:
            raise ValueError("rho(eps) requires eps > 0")
        if self.rho_model == "linear":
            return eps / self.rho_parameter
        if self.rho_model == "constant":
            return self.rho_parameter
        return self.rho_parameter * eps**self.exponent


@dataclass(eq=False)
class TransmissionSolution:
    """Layer densities, additive constants, and boundary traces of one solve."""

    problem: str  # periodic-cell | limit | exterior-neumann
    direction: int
    disc: object
    mu_plus: np.ndarray
    mu_minus: np.ndarray
    c_plus: float
    c_minus: float
    multipliers: tuple
    boundary_u_plus: np.ndarray
    boundary_u_minus: np.ndarray
    residuals: dict
    phases: PhaseParameters = None
    eps: float = None
    rho_value: float = None
    r_star: float = None
    green_cfg: PeriodicGreenConfig = None


def _operator_set(disc, kernel, cfg, target_disc=None):
    """S and one-sided normal-derivative matrices sharing kernel evaluations."""
    tgt = target_disc if target_disc is not None else disc
    self_grid = target_disc is None
    s = _log_split_matrix(disc, tgt, self_grid=self_grid)
    kp = _kprime_matrix(disc, tgt, "free", None, self_grid=self_grid)
    if kernel == "periodic":
        gv, gg = _greg_pair(disc, tgt, cfg)
        s = s + gv * disc.weights[None, :]
        kp = kp + (gg[..., 0] * tgt.normals[:, None, 0]
                   + gg[..., 1] * tgt.normals[:, None, 1]) * disc.weights[None, :]
    if self_grid:
        half = 0.5 * np.eye(disc.n_nodes)
    else:
        half = 0.5 * trig_interpolation_matrix(
            disc.n_nodes, (tgt.offset - disc.offset) * disc.spacing)
    return s, kp - half, kp + half  # S, interior, exterior


def _solve_square(a, b):
    anorm = np.linalg.norm(a, 1)
    lu, piv = lu_factor(a)
    gecon = get_lapack_funcs("gecon", (a,))
    rcond, info = gecon(lu, anorm)
    if info != 0 or not np.isfinite(rcond) or rcond < _RCOND_FLOOR:
        raise SolverError(
            f"collocation system is numerically singular (rcond={rcond:.2e})")
    return lu_solve((lu, piv), b)


def _direction_list(directions):
    ds = tuple(int(d) for d in (directions if np.iterable(directions) else (directions,)))
    if any(d not in (0, 1) for d in ds):
        raise ValueError("direction index must be 0 or 1")
    return ds


def solve_cell_directions(inclusion, phases, n_nodes, cfg=None, directions=(0, 1)):
    """Periodic cell solves for several gradient directions at shared cost."""
    if not isinstance(inclusion, PlacedInclusion):
        raise TypeError("inclusion must be a PlacedInclusion")
    directions = _direction_list(directions)
    cfg = cfg or PeriodicGreenConfig()
    eps = inclusion.scale
    rho = phases.rho(eps)
    disc = place(discretize(inclusion.shape, n_nodes), inclusion.center, eps)
    mid = place(discretize(inclusion.shape, n_nodes, offset=0.5),
                inclusion.center, eps)
    s, dint, dext = _operator_set(disc, "periodic", cfg)
    s_off, dint_off, dext_off = _operator_set(disc, "periodic", cfg, target_disc=mid)

    n = disc.n_nodes
    w = disc.weights
    length = w.sum()
    lp, lm = phases.lambda_plus, phases.lambda_minus
    scale_jump = rho / (1 + rho)
    scale_pot = 1.0 / (1 + rho)

    a = np.zeros((2 * n + 3, 2 * n + 3))
    a[0:n, 0:n] = -lp * dint
    a[0:n, n:2 * n] = lm * dext
    a[0:n, 2 * n + 2] = 1.0
    a[n:2 * n, 0:n] = scale_jump * lp * dint + scale_pot * s
    a[n:2 * n, n:2 * n] = -scale_pot * s
    a[n:2 * n, 2 * n] = scale_pot
    a[n:2 * n, 2 * n + 1] = -scale_pot
    a[2 * n, 0:n] = w / length
    a[2 * n + 1, n:2 * n] = w / length
    a[2 * n + 2, 0:n] = (w @ s) / length
    a[2 * n + 2, 2 * n] = 1.0

    b = np.zeros((2 * n + 3, len(directions)))
    for col, j in enumerate(directions):
        nu_j = disc.normals[:, j]
        b[0:n, col] = (lp - lm) * nu_j
        b[n:2 * n, col] = -scale_jump * lp * nu_j
        b[2 * n + 2, col] = -(w @ disc.nodes[:, j]) / length

    x = _solve_square(a, b)
    tol_bc = _CELL_TOL_BASE * max(1.0, 1.0 / rho)
    out = []
    for col, j in enumerate(directions):
        mup, mum = x[0:n, col], x[n:2 * n, col]
        cp, cm, omega = x[2 * n, col], x[2 * n + 1, col], x[2 * n + 2, col]
        tj = disc.nodes[:, j]
        up = tj + s @ mup + cp
        um = tj + s @ mum + cm
        res = _cell_residuals(mid, j, phases, rho, mup, mum, cp, cm,
                              s_off, dint_off, dext_off)
        res["normalization"] = abs(float(w @ up))
        res["tol_bc"] = tol_bc
        if max(res["flux"], res["jump"]) > tol_bc:
            raise SolverError(
                f"cell solve missed the interface tolerance {tol_bc:.2e}: "
                f"flux {res['flux']:.2e}, jump {res['jump']:.2e}")
        if res["normalization"] > _NORM_TOL:
            raise SolverError("cell solve missed the mean-temperature normalization")
        out.append(TransmissionSolution(
            problem="periodic-cell", direction=j, disc=disc,
            mu_plus=mup, mu_minus=mum, c_plus=float(cp), c_minus=float(cm),
            multipliers=(float(omega),), boundary_u_plus=up, boundary_u_minus=um,
            residuals=res, phases=phases, eps=eps, rho_value=rho,
            r_star=phases.r_star, green_cfg=cfg))
    return out


def _cell_residuals(mid, j, phases, rho, mup, mum, cp, cm, s_off, dint_off, dext_off):
    lp, lm = phases.lambda_plus, phases.lambda_minus
    nu_j = mid.normals[:, j]
    dnu_plus = nu_j + dint_off @ mup
    dnu_minus = nu_j + dext_off @ mum
    gap = (s_off @ mum + cm) - (s_off @ mup + cp)
    flux = np.abs(lm * dnu_minus - lp * dnu_plus).max()
    jump = np.abs(lp * dnu_plus - gap / rho).max()
    return {"flux": float(flux), "jump": float(jump)}


def solve_cell_problem(inclusion, phases, direction, n_nodes, cfg=None):
    """Periodic two-phase cell solve for one unit-gradient direction.

    The inclusion scale is the geometric parameter eps; rho(eps) comes from
    the phase model.  The returned solution satisfies the interface
    conditions at off-node checkpoints within 1e-6 * max(1, 1/rho).
    """
    return solve_cell_directions(inclusion, phases, n_nodes, cfg, (direction,))[0]


def solve_limit_directions(shape, phases, r_star, n_nodes, directions=(0, 1)):
    """Limiting free-space transmission solves on the unscaled shape."""
    if not (np.isfinite(r_star) and r_star >= 0):
        raise ValueError("contact ratio r* must be finite and nonnegative")
    directions = _direction_list(directions)
    disc = discretize(shape, n_nodes)
    mid = discretize(shape, n_nodes, offset=0.5)
    s, dint, dext = _operator_set(disc, "free", None)
    s_off, dint_off, dext_off = _operator_set(disc, "free", None, target_disc=mid)

    n = disc.n_nodes
    w = disc.weights
    length = w.sum()
    lp, lm = phases.lambda_plus, phases.lambda_minus

    a = np.zeros((2 * n + 4, 2 * n + 4))
    a[0:n, 0:n] = -lp * dint
    a[0:n, n:2 * n] = lm * dext
    a[0:n, 2 * n + 2] = 1.0
    a[n:2 * n, 0:n] = lp * dint + r_star * s
    a[n:2 * n, n:2 * n] = -r_star * s
    a[n:2 * n, 2 * n] = r_star
    a[n:2 * n, 2 * n + 1] = -r_star
    a[n:2 * n, 2 * n + 3] = 1.0
    a[2 * n, 0:n] = w / length
    a[2 * n + 1, n:2 * n] = w / length
    a[2 * n + 2, 0:n] = (w @ s) / length
    a[2 * n + 2, 2 * n] = 1.0
    a[2 * n + 3, n:2 * n] = (w @ s) / length
    a[2 * n + 3, 2 * n + 1] = 1.0

    b = np.zeros((2 * n + 4, len(directions)))
    for col, j in enumerate(directions):
        nu_j = disc.normals[:, j]
        b[0:n, col] = (lp - lm) * nu_j
        b[n:2 * n, col] = -lp * nu_j

    x = _solve_square(a, b)
    out = []
    for col, j in enumerate(directions):
        mup, mum = x[0:n, col], x[n:2 * n, col]
        cp, cm = x[2 * n, col], x[2 * n + 1, col]
        mults = (float(x[2 * n + 2, col]), float(x[2 * n + 3, col]))
        up = s @ mup + cp
        um = s @ mum + cm
        nu_j = mid.normals[:, j]
        dnu_plus = dint_off @ mup
        dnu_minus = dext_off @ mum
        gap = (s_off @ mum + cm) - (s_off @ mup + cp)
        res = {
            "flux": float(np.abs(lm * dnu_minus - lp * dnu_plus - (lp - lm) * nu_j).max()),
            "jump": float(np.abs(lp * dnu_plus - r_star * gap + lp * nu_j).max()),
            "normalization": float(max(abs(w @ up), abs(w @ um))),
        }
        if max(res["flux"], res["jump"]) > _LIMIT_TOL:
            raise SolverError(
                f"limit solve missed the boundary-condition tolerance {_LIMIT_TOL:.1e}")
        if res["normalization"] > _NORM_TOL:
            raise SolverError("limit solve missed a zero-mean normalization")
        out.append(TransmissionSolution(
            problem="limit", direction=j, disc=disc,
            mu_plus=mup, mu_minus=mum, c_plus=float(cp), c_minus=float(cm),
            multipliers=mults, boundary_u_plus=up, boundary_u_minus=um,
            residuals=res, phases=phases, r_star=float(r_star)))
    return out


def solve_limit_problem(shape, phases, r_star, direction, n_nodes):
    """Limiting transmission solve; at r* = 0 the system decouples but both
    field pieces are still produced."""
    return solve_limit_directions(shape, phases, r_star, n_nodes, (direction,))[0]


def solve_exterior_neumann(shape, direction, n_nodes):
    """Exterior harmonic field with normal derivative -nu_j, zero boundary
    mean, and a finite limit at infinity."""
    (direction,) = _direction_list((direction,))
    disc = discretize(shape, n_nodes)
    mid = discretize(shape, n_nodes, offset=0.5)
    s, _, dext = _operator_set(disc, "free", None)
    s_off, _, dext_off = _operator_set(disc, "free", None, target_disc=mid)

    n = disc.n_nodes
    w = disc.weights
    length = w.sum()
    a = np.zeros((n + 2, n + 2))
    a[0:n, 0:n] = dext
    a[0:n, n + 1] = 1.0
    a[n, 0:n] = w / length
    a[n + 1, 0:n] = (w @ s) / length
    a[n + 1, n] = 1.0
    b = np.zeros(n + 2)
    b[0:n] = -disc.normals[:, direction]

    x = _solve_square(a, b)
    mu, c, mult = x[0:n], float(x[n]), float(x[n + 1])
    um = s @ mu + c
    res = {
        "neumann": float(np.abs(dext_off @ mu + mid.normals[:, direction]).max()),
        "normalization": float(abs(w @ um)),
    }
    if res["neumann"] > _LIMIT_TOL:
        raise SolverError("exterior Neumann solve missed its residual tolerance")
    if res["normalization"] > _NORM_TOL:
        raise SolverError("exterior Neumann solve missed the zero-mean normalization")
    return TransmissionSolution(
        problem="exterior-neumann", direction=direction, disc=disc,
        mu_plus=np.zeros(n), mu_minus=mu, c_plus=0.0, c_minus=c,
        multipliers=(mult,), boundary_u_plus=np.zeros(n), boundary_u_minus=um,
        residuals=res)


def trivial_cell_solution(inclusion, phases, direction, n_nodes):
    """Zero-density cell solution whose fields are exactly x_j; a hook for
    quadrature-only checks of the effective-conductivity assembly."""
    (direction,) = _direction_list((direction,))
    disc = place(discretize(inclusion.shape, n_nodes), inclusion.center, inclusion.scale)
    tj = disc.nodes[:, direction]
    n = disc.n_nodes
    zero = {"flux": 0.0, "jump": 0.0, "normalization": 0.0}
    return TransmissionSolution(
        problem="periodic-cell", direction=direction, disc=disc,
        mu_plus=np.zeros(n), mu_minus=np.zeros(n), c_plus=0.0, c_minus=0.0,
        multipliers=(0.0,), boundary_u_plus=tj.copy(), boundary_u_minus=tj.copy(),
        residuals=zero, phases=phases, eps=inclusion.scale,
        rho_value=None, r_star=phases.r_star, green_cfg=PeriodicGreenConfig())


def boundary_residuals(sol, offset=0.25):
    """Re-measure the boundary-condition residuals on a fresh checkpoint grid.

    Any non-node offset in (0, 1) gives an independent dense collocation
    check of the returned densities.
    """
    if offset % 1.0 == 0.0:
        raise ValueError("offset must not reproduce the collocation grid")
    disc = sol.disc
    base = discretize(disc.shape, disc.n_nodes, offset=offset)
    if sol.problem == "periodic-cell":
        mid = place(base, disc.center, disc.scale)
        s_off, dint_off, dext_off = _operator_set(disc, "periodic", sol.green_cfg,
                                                  target_disc=mid)
        return _cell_residuals(mid, sol.direction, sol.phases, sol.rho_value,
                               sol.mu_plus, sol.mu_minus, sol.c_plus, sol.c_minus,
                               s_off, dint_off, dext_off)
    mid = base
    s_off, dint_off, dext_off = _operator_set(disc, "free", None, target_disc=mid)
    nu_j = mid.normals[:, sol.direction]
    if sol.problem == "exterior-neumann":
        return {"neumann": float(np.abs(dext_off @ sol.mu_minus + nu_j).max())}
    lp, lm = sol.phases.lambda_plus, sol.phases.lambda_minus
    dnu_plus = dint_off @ sol.mu_plus
    dnu_minus = dext_off @ sol.mu_minus
    gap = (s_off @ sol.mu_minus + sol.c_minus) - (s_off @ sol.mu_plus + sol.c_plus)
    return {
        "flux": float(np.abs(lm * dnu_minus - lp * dnu_plus - (lp - lm) * nu_j).max()),
        "jump": float(np.abs(lp * dnu_plus - sol.r_star * gap + lp * nu_j).max()),
    }


def _relative_frame(sol, pts):
    """Map points to the reference-shape frame, reducing by the lattice for
    the periodic cell problem."""
    disc = sol.disc
    y = pts - np.asarray(disc.center)
    if sol.problem == "periodic-cell":
        y = y - np.round(y)
    return y / disc.scale


def evaluate_solution(sol, points, side, cfg=None):
    """Temperature and gradient of one solution piece at off-boundary points.

    side is 'inclusion' or 'matrix'; points must lie on that side (for the
    cell problem, membership is judged modulo the lattice).  The cell
    problem includes the linear carrier x_j in its field.  cfg overrides
    the evaluation-time Ewald split, which the values do not depend on.
    """
    if side not in ("inclusion", "matrix"):
        raise ValueError("side must be 'inclusion' or 'matrix'")
    if side == "inclusion" and sol.problem == "exterior-neumann":
        raise ValueError("exterior Neumann solutions only have a matrix-side field")
    points = np.asarray(points, float)
    pts = np.atleast_2d(points)
    y = _relative_frame(sol, pts.reshape(-1, 2))
    radial = np.hypot(y[:, 0], y[:, 1])
    inside = radial < sol.disc.shape.polar_radius(np.arctan2(y[:, 1], y[:, 0]))
    if side == "inclusion" and not inside.all():
        raise ValueError("a point lies outside the inclusion")
    if side == "matrix" and inside.any():
        raise ValueError("a point lies inside the inclusion")

    mu = sol.mu_plus if side == "inclusion" else sol.mu_minus
    const = sol.c_plus if side == "inclusion" else sol.c_minus
    kernel = "periodic" if sol.problem == "periodic-cell" else "free"
    vals, grads = evaluate_potential(mu, sol.disc, pts, kernel=kernel,
                                     cfg=cfg or sol.green_cfg)
    vals = vals + const
    if sol.problem == "periodic-cell":
        vals = vals + pts[..., sol.direction]
        grads = grads.copy()
        grads[..., sol.direction] += 1.0
    if points.ndim == 1:
        return float(vals[0]), grads[0]
    return vals.reshape(points.shape[:-1]), grads.reshape(points.shape)
