"""Nystrom discretization of single-layer potentials on closed analytic curves.

The on-boundary single layer splits the kernel into the periodic-log weight
ln(4 sin^2((t-s)/2)), integrated by the spectrally accurate trigonometric
product quadrature, plus a smooth remainder handled by the trapezoid rule.
For the unit-cell periodic kernel the remainder additionally contains the
regularized periodic Green's function.

One-sided normal derivatives follow the recorded jump convention for
G = log|x|/(2*pi):

    interior limit  dS[mu]/dnu = -mu/2 + K'[mu]
    exterior limit  dS[mu]/dnu = +mu/2 + K'[mu]

so the exterior-minus-interior jump equals +mu.  On the unit circle with
mu = 1 this gives exterior limit 1 and interior limit 0.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import exp1

from .geometry import BoundaryDiscretization
from .greens import _UMAX, PeriodicGreenConfig, _tables, regularized_periodic_green

_KERNELS = ("free", "periodic")


@dataclass(frozen=True, eq=False)
class NystromOperator:
    """Dense collocation matrix acting on density values at the nodes."""

    matrix: np.ndarray
    kernel: str  # S_free | S_per | K'_free | K'_per
    disc: BoundaryDiscretization
    side: str = None


def _check_kernel(kernel):
    if kernel not in _KERNELS:
        raise ValueError(f"kernel must be one of {_KERNELS}")


def _check_density(disc, density):
    density = np.asarray(density, float)
    if density.shape != (disc.n_nodes,):
        raise ValueError("density length must equal the discretization node count")
    if not np.all(np.isfinite(density)):
        raise ValueError("density values must be finite")
    return density


def log_quadrature_weights(n_nodes, tdiff):
    """Product-quadrature weights R_j(t) for the weight ln(4 sin^2((t-tj)/2)).

    Exact for trigonometric polynomials of degree n_nodes/2; tdiff is the
    array of parameter differences t - t_j.
    """
    n = n_nodes // 2
    m = np.arange(1, n)
    out = -(2 * np.pi / n) * (np.cos(tdiff[..., None] * m) / m).sum(axis=-1)
    out -= (np.pi / n**2) * np.cos(n * tdiff)
    return out


def _pairwise(disc, target_disc):
    d = target_disc.nodes[:, None, :] - disc.nodes[None, :, :]
    r = np.hypot(d[..., 0], d[..., 1])
    td = target_disc.t[:, None] - disc.t[None, :]
    return d, r, td


def _log_split_matrix(disc, target_disc, self_grid):
    """On-curve single layer for the free log kernel, rows at target_disc."""
    n = disc.n_nodes
    d, r, td = _pairwise(disc, target_disc)
    s2 = 2.0 * np.abs(np.sin(0.5 * td))
    if self_grid:
        np.fill_diagonal(r, 1.0)
        np.fill_diagonal(s2, 1.0)
    smooth = np.log(r / s2)
    if self_grid:
        np.fill_diagonal(smooth, np.log(disc.speed))
    # both grids are equispaced with a common spacing, so the product
    # quadrature weights form a circulant: one row suffices
    shift = (target_disc.offset - disc.offset) * disc.spacing
    row = log_quadrature_weights(n, np.arange(n) * disc.spacing + shift)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    rw = row[idx]
    return (rw / (4 * np.pi) + disc.spacing * smooth / (2 * np.pi)) * disc.speed[None, :]


def _greg_pair(disc, target_disc, cfg):
    d = target_disc.nodes[:, None, :] - disc.nodes[None, :, :]
    r = np.hypot(d[..., 0], d[..., 1])
    if r.max() >= 1.0:
        raise ValueError("periodic kernel requires an inclusion of diameter < 1")
    return regularized_periodic_green(d, cfg)


def single_layer_matrix(disc, kernel="free", cfg=None):
    """Single-layer Nystrom matrix, rows and columns on the same grid."""
    _check_kernel(kernel)
    a = _log_split_matrix(disc, disc, self_grid=True)
    if kernel == "periodic":
        cfg = cfg or PeriodicGreenConfig()
        gv, _ = _greg_pair(disc, disc, cfg)
        a = a + gv * disc.weights[None, :]
    return NystromOperator(a, "S_per" if kernel == "periodic" else "S_free", disc)


def _kprime_matrix(disc, target_disc, kernel, cfg, self_grid):
    d, r, _ = _pairwise(disc, target_disc)
    r2 = r**2
    if self_grid:
        np.fill_diagonal(r2, 1.0)
    nu = target_disc.normals
    k = (d[..., 0] * nu[:, None, 0] + d[..., 1] * nu[:, None, 1]) / (2 * np.pi * r2)
    if self_grid:
        # removable singularity: the diagonal limit is curvature/(4*pi)
        np.fill_diagonal(k, disc.curvature / (4 * np.pi))
    if kernel == "periodic":
        _, gg = _greg_pair(disc, target_disc, cfg)
        k = k + gg[..., 0] * nu[:, None, 0] + gg[..., 1] * nu[:, None, 1]
    return k * disc.weights[None, :]


def normal_derivative_matrix(disc, kernel="free", side="exterior", cfg=None):
    """One-sided normal derivative of the single layer, including the jump.

    side selects the limit: 'interior' gives -I/2 + K', 'exterior' +I/2 + K'.
    """
    _check_kernel(kernel)
    if side not in ("interior", "exterior"):
        raise ValueError("side must be 'interior' or 'exterior'")
    if kernel == "periodic":
        cfg = cfg or PeriodicGreenConfig()
    a = _kprime_matrix(disc, disc, kernel, cfg, self_grid=True)
    jump = 0.5 if side == "exterior" else -0.5
    a = a + jump * np.eye(disc.n_nodes)
    return NystromOperator(a, "K'_per" if kernel == "periodic" else "K'_free", disc, side)


def trig_interpolation_matrix(n_nodes, delta):
    """Circulant matrix evaluating the trigonometric interpolant at t + delta."""
    freqs = np.fft.fftfreq(n_nodes, d=1.0 / n_nodes)
    phase = np.exp(1j * freqs * delta)
    return np.fft.ifft(phase[:, None] * np.fft.fft(np.eye(n_nodes), axis=0), axis=0).real


def offgrid_single_layer_matrix(disc, target_disc, kernel="free", cfg=None):
    """Single layer evaluated on a shifted grid of the same curve."""
    _check_offgrid(disc, target_disc)
    _check_kernel(kernel)
    a = _log_split_matrix(disc, target_disc, self_grid=False)
    if kernel == "periodic":
        cfg = cfg or PeriodicGreenConfig()
        gv, _ = _greg_pair(disc, target_disc, cfg)
        a = a + gv * disc.weights[None, :]
    return a


def offgrid_normal_derivative_matrix(disc, target_disc, kernel="free", side="exterior", cfg=None):
    """One-sided normal derivative evaluated on a shifted grid of the curve."""
    _check_offgrid(disc, target_disc)
    _check_kernel(kernel)
    if side not in ("interior", "exterior"):
        raise ValueError("side must be 'interior' or 'exterior'")
    if kernel == "periodic":
        cfg = cfg or PeriodicGreenConfig()
    a = _kprime_matrix(disc, target_disc, kernel, cfg, self_grid=False)
    jump = 0.5 if side == "exterior" else -0.5
    shift = trig_interpolation_matrix(disc.n_nodes, (target_disc.offset - disc.offset) * disc.spacing)
    return a + jump * shift


def _check_offgrid(disc, target_disc):
    if (target_disc.shape != disc.shape or target_disc.n_nodes != disc.n_nodes
            or target_disc.center != disc.center or target_disc.scale != disc.scale):
        raise ValueError("target grid must discretize the same placed curve")
    if (target_disc.offset - disc.offset) % 1.0 == 0.0:
        raise ValueError("target grid coincides with the source collocation nodes")


def evaluate_potential(density, disc, targets, kernel="free", cfg=None):
    """Layer potential and gradient at off-boundary target points.

    Plain trapezoid evaluation; targets must keep a distance of more than
    three node spacings from the boundary (periodic copies included for the
    periodic kernel), where the rule has lost its accuracy anyway.  The
    reciprocal part of the periodic kernel is applied in separated form, so
    large target batches stay affordable.
    """
    _check_kernel(kernel)
    density = _check_density(disc, density)
    targets = np.asarray(targets, float)
    pts = np.atleast_2d(targets)
    if pts.shape[-1] != 2:
        raise ValueError("targets must have trailing dimension 2")
    flat = pts.reshape(-1, 2)
    mw = density * disc.weights
    limit = 3.0 * disc.weights.max()

    if kernel == "periodic":
        cfg = cfg or PeriodicGreenConfig()
        images, kv, kcoef = _tables(cfg)
        eta2 = cfg.eta**2
        ucut = min(_UMAX, eta2 * cfg.real_cutoff**2)
        # reduced differences live in [-1/2, 1/2]^2, so only images within
        # the live radius plus half a cell diagonal can contribute
        reach = np.sqrt(ucut) / cfg.eta + 0.7072
        images = images[np.hypot(images[:, 0], images[:, 1]) <= reach]
        # rank-separated reciprocal sum: source moments on the mode grid
        rho = np.exp(-2j * np.pi * (kv @ disc.nodes.T)) @ mw
        kc = cfg.fourier_cutoff
        axis = np.arange(-kc, kc + 1)
        cgrid = np.zeros((2 * kc + 1, 2 * kc + 1), complex)
        i1 = kv[:, 0].astype(int) + kc
        i2 = kv[:, 1].astype(int) + kc
        cgrid[i1, i2] = kcoef * rho
        cgrid_x = cgrid * (2 * np.pi * axis)[:, None]
        cgrid_y = cgrid * (2 * np.pi * axis)[None, :]

    vals = np.empty(len(flat))
    grads = np.empty((len(flat), 2))
    chunk = max(8, int(2.0e6 / max(disc.n_nodes, 1)))
    for lo in range(0, len(flat), chunk):
        sl = slice(lo, min(lo + chunk, len(flat)))
        d = flat[sl, None, :] - disc.nodes[None, :, :]
        if kernel == "periodic":
            d = d - np.round(d)
        r2 = d[..., 0] ** 2 + d[..., 1] ** 2
        if r2.min() <= limit**2:
            raise ValueError(
                "target closer than three node spacings to the boundary; "
                "trapezoid evaluation is unreliable there")
        if kernel == "free":
            vals[sl] = (0.5 * np.log(r2) / (2 * np.pi)) @ mw
            grads[sl] = np.einsum("tsc,s->tc", d / (2 * np.pi * r2[..., None]), mw)
            continue
        av = np.zeros(r2.shape)
        ag = np.zeros(d.shape)
        for z in images:
            dz = d - z
            u = eta2 * (dz[..., 0] ** 2 + dz[..., 1] ** 2)
            live = u < ucut
            if not live.any():
                continue
            e1 = np.zeros_like(u)
            e1[live] = exp1(u[live])
            av -= e1 / (4 * np.pi)
            ex = np.zeros_like(u)
            ex[live] = np.exp(-u[live])
            ag += dz * (ex / (2 * np.pi * (u / eta2)))[..., None]
        vals[sl] = av @ mw + mw.sum() / (4 * cfg.eta**2)
        grads[sl] = np.einsum("tsc,s->tc", ag, mw)
        e1p = np.exp(2j * np.pi * np.outer(flat[sl, 0], axis))
        e2p = np.exp(2j * np.pi * np.outer(flat[sl, 1], axis))
        vals[sl] -= np.einsum("ta,ta->t", e1p, e2p @ cgrid.T).real
        grads[sl, 0] += np.einsum("ta,ta->t", e1p, e2p @ cgrid_x.T).imag
        grads[sl, 1] += np.einsum("ta,ta->t", e1p, e2p @ cgrid_y.T).imag
    if targets.ndim == 1:
        return vals[0], grads[0]
    return vals.reshape(pts.shape[:-1]), grads.reshape(pts.shape)
