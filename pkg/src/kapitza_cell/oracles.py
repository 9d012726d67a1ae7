"""Closed-form reference values for the unit ball.

These are the ground truths the numerical solvers are measured against:
the limit coefficient of a vanishing ball inclusion with fully resistive
contact, the matching exterior Neumann field, and the general-contact disk
solution obtained from the linear ansatz u_in = A*x_j, u_out = B*x_j/|x|^n.
"""

import math
from dataclasses import dataclass

import numpy as np


def unit_ball_volume(n):
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def unit_sphere_area(n):
    """(n-1)-dimensional measure of the unit sphere boundary, s_2 = 2*pi."""
    return n * unit_ball_volume(n)


def ball_limit_lambda(n, lam_minus):
    """Scaled-coefficient diagonal for a ball with r* = 0: -lam_minus * s_n/(n-1)."""
    if n < 2:
        raise ValueError("dimension must be at least 2")
    if not lam_minus > 0:
        raise ValueError("matrix conductivity must be positive")
    return -lam_minus * unit_sphere_area(n) / (n - 1)


def exterior_neumann_ball_field(x, j, n=2):
    """Exterior field x_j / ((n-1)|x|^n) solving du/dnu = -nu_j on the unit sphere."""
    x = np.asarray(x, float)
    if x.shape[-1] != n:
        raise ValueError("point dimension does not match n")
    r = np.sqrt((x**2).sum(axis=-1))
    if np.any(r < 1):
        raise ValueError("field is defined outside the unit ball, |x| >= 1")
    return x[..., j] / ((n - 1) * r**n)


@dataclass(frozen=True)
class DiskLimitCoefficients:
    """Linear-ansatz solution of the limiting interface conditions on the ball.

    interior_coefficient multiplies x_j inside, exterior_coefficient
    multiplies x_j/|x|^n outside, and lambda_scalar is the diagonal value of
    the limit coefficient matrix for the unit ball.
    """

    lambda_plus: float
    lambda_minus: float
    r_star: float
    n: int
    interior_coefficient: float
    exterior_coefficient: float
    lambda_scalar: float

    def interface_residuals(self):
        """Residuals of the two interface conditions; zero to rounding."""
        lp, lm, rs, n = self.lambda_plus, self.lambda_minus, self.r_star, self.n
        a, b = self.interior_coefficient, self.exterior_coefficient
        flux = lm * (1 - n) * b - (lp * a + (lp - lm))
        contact = lp * a - (rs * (b - a) - lp)
        return flux, contact


def disk_limit_lambda_general(lambda_plus, lambda_minus, r_star, n=2):
    """Limit coefficients for the unit ball at any finite contact ratio r* >= 0.

    Solves the 2x2 system obtained by inserting the ansatz into the two
    interface conditions; lambda_scalar uses the boundary identity
    integral of t_j nu_k over the sphere = |B_n| delta_kj.
    """
    if not (lambda_plus > 0 and lambda_minus > 0):
        raise ValueError("conductivities must be positive")
    if not r_star >= 0:
        raise ValueError("contact ratio r* must be nonnegative and finite")
    if n < 2:
        raise ValueError("dimension must be at least 2")
    mat = np.array([[lambda_plus + r_star, -r_star],
                    [lambda_plus, lambda_minus * (n - 1)]])
    rhs = np.array([-lambda_plus, lambda_minus - lambda_plus])
    det = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
    if abs(det) < 1e-14 * max(1.0, abs(mat).max() ** 2):
        raise ValueError("degenerate interface system")
    a, b = np.linalg.solve(mat, rhs)
    lam = (lambda_plus * a - lambda_minus * b + lambda_plus - lambda_minus) * unit_ball_volume(n)
    return DiskLimitCoefficients(lambda_plus, lambda_minus, float(r_star), n,
                                 float(a), float(b), float(lam))
