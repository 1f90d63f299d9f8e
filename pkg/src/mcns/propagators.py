"""Exact linear propagators: heat semigroup, wave multipliers, and their composition.

The (rho, a) block of the linearized system

    d/dt rho = nu Lap rho - a
    d/dt a   = -c^2 Lap rho + nu Lap a

factors per wavenumber into the scalar heat factor exp(-nu t |xi|^2) times the
2x2 wave matrix

    G_W(t) = [[ w_t, -w ], [ -w_tt, w_t ]],   w(xi, t) = sin(c t |xi|) / (c |xi|)

with the removable value w = t at xi = 0.  The vorticity block is the plain
heat semigroup with diffusivity epsilon.  A physical-space Kirchhoff
(spherical-means) quadrature provides an independent oracle for the wave
factor in d = 3.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import (SPECTRAL, ScalarField, VectorField3, multiply_spectrum,
                   to_spectral)


@dataclass(frozen=True)
class PhysicalParams:
    """Viscosities and sound speed; nu is derived as (epsilon + eta)/2."""

    epsilon: float
    eta: float
    c: float
    nu: float = field(init=False)

    def __post_init__(self):
        for name in ("epsilon", "eta", "c"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        object.__setattr__(self, "nu", 0.5 * (self.epsilon + self.eta))


def heat_multiplier(k2, nu, t):
    """exp(-nu t |xi|^2); k2 = |xi|^2 (scalar or array)."""
    if t < 0:
        raise ValueError(f"heat multiplier needs t >= 0, got t={t}")
    return np.exp(-nu * t * np.asarray(k2))


def wave_multipliers(kmag, c, t):
    """(w, w_t, w_tt) at |xi| = kmag, with the removable value w=t at xi=0."""
    if t < 0:
        raise ValueError(f"wave multipliers need t >= 0, got t={t}")
    if c <= 0:
        raise ValueError("wave multipliers need c > 0")
    k = np.asarray(kmag, dtype=float)
    ck = c * k
    phase = ck * t
    safe = np.where(k > 0, ck, 1.0)
    w = np.where(k > 0, np.sin(phase) / safe, t)
    w_t = np.cos(phase)
    w_tt = -ck * np.sin(phase)
    return w, w_t, w_tt


def apply_heat(omega: VectorField3, params: PhysicalParams, t) -> VectorField3:
    """Heat-evolve a vector field: each component times exp(-epsilon t |xi|^2)."""
    om = to_spectral(omega)
    mult = heat_multiplier(om.grid.k2, params.epsilon, t)
    return VectorField3(tuple(multiply_spectrum(c, mult) for c in om.components))


def apply_heat_scalar(f: ScalarField, nu, t) -> ScalarField:
    """Heat-evolve a scalar field with diffusivity nu."""
    g = to_spectral(f)
    return multiply_spectrum(g, heat_multiplier(g.grid.k2, nu, t))


def apply_heat_wave(rho: ScalarField, a: ScalarField, params: PhysicalParams, t):
    """Evolve (rho, a) by the composed heat-wave Green's matrix.

    Returns (rho_L, a_L) with spectral coefficients

        (rho_L, a_L)^ = exp(-nu t |xi|^2) [[w_t, -w], [-w_tt, w_t]] (rho0, a0)^
    """
    r = to_spectral(rho)
    av = to_spectral(a)
    g = r.grid
    heat = heat_multiplier(g.k2, params.nu, t)
    w, w_t, w_tt = wave_multipliers(g.kmag, params.c, t)
    rho_vals = heat * (w_t * r.values - w * av.values)
    a_vals = heat * (-w_tt * r.values + w_t * av.values)
    return (ScalarField(g, rho_vals, SPECTRAL), ScalarField(g, a_vals, SPECTRAL))


_SPHERE_RULE_CACHE = {}


def sphere_rule(order):
    """Product Gauss-Legendre (polar) x trapezoid (azimuth) rule on the unit sphere.

    Returns (nodes, weights) with nodes of shape (2*order**2, 3); weights sum
    to 1 so that sum(w * f(z)) approximates the spherical MEAN of f.
    """
    if order < 4:
        raise ValueError(f"sphere quadrature order must be >= 4, got {order}")
    if order in _SPHERE_RULE_CACHE:
        return _SPHERE_RULE_CACHE[order]
    mu, wmu = np.polynomial.legendre.leggauss(order)
    nphi = 2 * order
    phi = 2.0 * np.pi * np.arange(nphi) / nphi
    sin_theta = np.sqrt(1.0 - mu**2)
    z1 = np.outer(sin_theta, np.cos(phi)).ravel()
    z2 = np.outer(sin_theta, np.sin(phi)).ravel()
    z3 = np.repeat(mu, nphi)
    nodes = np.stack([z1, z2, z3], axis=-1)
    weights = np.repeat(wmu / 2.0, nphi) / nphi
    _SPHERE_RULE_CACHE[order] = (nodes, weights)
    return nodes, weights


def _fd_gradient(h, pts, step):
    grads = np.empty(pts.shape)
    for i in range(3):
        e = np.zeros(3)
        e[i] = step
        grads[:, i] = (h(pts + e) - h(pts - e)) / (2 * step)
    return grads


def _fd_hessian_quad(h, pts, z, step):
    # directional second derivative z^T H z via central differences along z
    dz = step * z
    return (h(pts + dz) - 2.0 * h(pts) + h(pts - dz)) / step**2


def kirchhoff_eval(h, x, c, t, quad_order=32):
    """Spherical-means evaluation of (w*h, d_t w*h, d_t^2 w*h) at point(s) x.

    In d = 3 the wave multipliers act by

        (w*h)(x)        = t <h(x + c t z)>_{|z|=1}
        (d_t w*h)(x)    = <h> + c t <z . grad h>
        (d_t^2 w*h)(x)  = 2 c <z . grad h> + c^2 t <z^T Hess(h) z>

    where <.> is the mean over the unit sphere, computed with a product
    Gauss-Legendre rule of the given polar order (2*order azimuthal nodes).

    ``h`` is a sampler: callable on an (m, 3) array of points; if it exposes
    ``gradient`` / ``hessian_quad`` those are used, otherwise central finite
    differences are taken.
    """
    if t <= 0:
        raise ValueError(f"kirchhoff_eval needs t > 0, got t={t}")
    single_point = np.asarray(x).ndim == 1
    x = np.atleast_2d(np.asarray(x, dtype=float))
    nodes, weights = sphere_rule(quad_order)
    pts = x[:, None, :] + c * t * nodes[None, :, :]  # (npts, nnodes, 3)
    flat = pts.reshape(-1, 3)

    hv = np.asarray(h(flat)).reshape(x.shape[0], -1)
    mean_h = hv @ weights

    if hasattr(h, "gradient"):
        grad = np.asarray(h.gradient(flat))
    else:
        grad = _fd_gradient(h, flat, 1e-5)
    zdotgrad = np.einsum("pnk,nk->pn", grad.reshape(x.shape[0], -1, 3),
                         nodes)
    mean_zg = zdotgrad @ weights

    if hasattr(h, "hessian_quad"):
        hq = np.asarray(h.hessian_quad(flat, np.repeat(nodes[None], x.shape[0],
                                                       axis=0).reshape(-1, 3)))
    else:
        ztile = np.broadcast_to(nodes, (x.shape[0],) + nodes.shape).reshape(-1, 3)
        hq = _fd_hessian_quad(h, flat, ztile, 1e-4)
    mean_zhz = hq.reshape(x.shape[0], -1) @ weights

    w_h = t * mean_h
    wt_h = mean_h + c * t * mean_zg
    wtt_h = 2.0 * c * mean_zg + c**2 * t * mean_zhz
    if single_point:
        return float(w_h[0]), float(wt_h[0]), float(wtt_h[0])
    return w_h, wt_h, wtt_h


class GaussianBlob:
    """Analytic sampler amp * exp(-|y - center|^2 / (4 s2)) with derivatives.

    Closed under the heat flow: K_nu(t) * blob has s2 -> s2 + nu t and
    amplitude scaled to preserve mass.
    """

    def __init__(self, amp=1.0, center=(0.0, 0.0, 0.0), s2=1.0):
        self.amp = float(amp)
        self.center = np.asarray(center, dtype=float)
        self.s2 = float(s2)

    def heat_evolved(self, nu, t):
        s2_new = self.s2 + nu * t
        amp_new = self.amp * (self.s2 / s2_new) ** 1.5
        return GaussianBlob(amp_new, self.center, s2_new)

    def __call__(self, pts):
        d = np.asarray(pts) - self.center
        return self.amp * np.exp(-np.sum(d * d, axis=-1) / (4.0 * self.s2))

    def gradient(self, pts):
        d = np.asarray(pts) - self.center
        return -d / (2.0 * self.s2) * self(pts)[..., None]

    def hessian_quad(self, pts, z):
        """z^T Hess z at pts for unit vectors z (same leading shape)."""
        d = np.asarray(pts) - self.center
        zd = np.sum(np.asarray(z) * d, axis=-1)
        return (zd**2 / (4.0 * self.s2**2) - 1.0 / (2.0 * self.s2)) * self(pts)
