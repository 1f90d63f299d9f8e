"""Hermite polynomials, moment projections, and the three expansion engines.

A heat-type evolution of localized data splits into moment-weighted
derivatives of the Gaussian

    phi0(x) = (4 pi)^(-3/2) exp(-|x|^2 / 4)

plus a remainder that decays one half-power faster per captured moment.  The
dual basis is the Hermite family

    H_alpha(x) = (2^|alpha| / alpha!) exp(|x|^2/4) d^alpha exp(-|x|^2/4)

with <H_alpha, d^beta phi0> = delta_{alpha beta}.  Three expansions are
provided: scalar (heat), hyperbolic-parabolic (heat-wave, profiles rho_i/a_i),
and divergence-free (vorticity, tabulated pair profiles p/f).  Profile fields
are realized as Fourier multipliers applied to the grid-sampled phi0, so they
live on exactly the same discrete footing as the evolutions they approximate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import TruncationDomainError, UnsupportedOrderError
from .grid import (SPECTRAL, ScalarField, VectorField3, forward_transform,
                   multiply_spectrum, to_physical, to_spectral)
from .propagators import apply_heat, apply_heat_wave, heat_multiplier, wave_multipliers

MAX_ORDER = 3
BOUNDARY_DECAY_TOL = 1e-12


def phi0(x):
    """(4 pi)^(-3/2) exp(-|x|^2/4) for points of shape (..., 3)."""
    x = np.asarray(x, dtype=float)
    return (4.0 * np.pi) ** -1.5 * np.exp(-np.sum(x * x, axis=-1) / 4.0)


def phi0_field(grid) -> ScalarField:
    X, Y, Z = grid.meshgrid()
    vals = (4.0 * np.pi) ** -1.5 * np.exp(-(X**2 + Y**2 + Z**2) / 4.0)
    return ScalarField(grid, vals.astype(complex), "physical")


_PHI0_SPEC_CACHE = {}


def phi0_spectrum(grid) -> np.ndarray:
    """Spectral coefficients of the grid-sampled phi0 (cached per grid)."""
    key = (grid.n, grid.length)
    if key not in _PHI0_SPEC_CACHE:
        _PHI0_SPEC_CACHE[key] = forward_transform(phi0_field(grid)).values
    return _PHI0_SPEC_CACHE[key]


def order(alpha) -> int:
    return int(sum(alpha))


def multi_indices(max_order):
    """All 3D multi-indices with order <= max_order, sorted by (order, index)."""
    out = []
    for total in range(max_order + 1):
        for a1 in range(total, -1, -1):
            for a2 in range(total - a1, -1, -1):
                out.append((a1, a2, total - a1 - a2))
    return out


# 1D factors h_k(x) = exp(x^2/4) d^k/dx^k exp(-x^2/4), k <= 3.
_H1D = (
    lambda x: np.ones_like(x),
    lambda x: -x / 2.0,
    lambda x: x**2 / 4.0 - 0.5,
    lambda x: -(x**3) / 8.0 + 0.75 * x,
)

_FACTORIAL = (1, 1, 2, 6)


def hermite_poly(alpha, x):
    """H_alpha at points of shape (..., 3); supports |alpha| <= 3."""
    if order(alpha) > MAX_ORDER:
        raise UnsupportedOrderError(f"|alpha| = {order(alpha)} exceeds {MAX_ORDER}")
    x = np.asarray(x, dtype=float)
    out = np.ones(x.shape[:-1])
    norm = 1.0
    for i, ai in enumerate(alpha):
        out = out * _H1D[ai](x[..., i])
        norm *= 2**ai / _FACTORIAL[ai]
    return norm * out


def phi0_derivative(alpha, x):
    """d^alpha phi0 = (alpha!/2^|alpha|) H_alpha phi0, analytically."""
    if order(alpha) > MAX_ORDER:
        raise UnsupportedOrderError(f"|alpha| = {order(alpha)} exceeds {MAX_ORDER}")
    fac = 1.0
    for ai in alpha:
        fac *= _FACTORIAL[ai] / 2**ai
    return fac * hermite_poly(alpha, x) * phi0(x)


def _hermite_on_grid(grid, alpha):
    X, Y, Z = grid.meshgrid()
    out = np.ones((grid.n,) * 3)
    norm = 1.0
    for ai, C in zip(alpha, (X, Y, Z)):
        out = out * _H1D[ai](C)
        norm *= 2**ai / _FACTORIAL[ai]
    return norm * out


def _boundary_decay_check(weighted, what):
    """Reject quadrature when the integrand has not decayed at the box faces.

    Fields produced through FFTs carry a roundoff floor of order 1e4 * eps
    relative to their peak; the threshold allows for it so that only genuine
    domain truncation (orders of magnitude larger) is rejected.
    """
    scale = np.max(np.abs(weighted))
    if scale == 0.0:
        return
    faces = max(np.max(np.abs(weighted[0, :, :])), np.max(np.abs(weighted[:, 0, :])),
                np.max(np.abs(weighted[:, :, 0])))
    threshold = (BOUNDARY_DECAY_TOL + 1e4 * np.finfo(float).eps) * scale
    if faces > threshold:
        raise TruncationDomainError(
            f"{what}: integrand at box boundary is {faces:.2e} "
            f"(> {BOUNDARY_DECAY_TOL:.0e} relative to peak {scale:.2e})")


def moment_coeff(f: ScalarField, alpha) -> float:
    """<H_alpha, f> by h^3-weighted grid quadrature; |alpha| <= 3."""
    if order(alpha) > MAX_ORDER:
        raise UnsupportedOrderError(f"|alpha| = {order(alpha)} exceeds {MAX_ORDER}")
    fp = to_physical(f)
    weighted = _hermite_on_grid(fp.grid, alpha) * fp.values
    _boundary_decay_check(weighted, f"moment_coeff alpha={tuple(alpha)}")
    return float(np.real(np.sum(weighted)) * fp.grid.cell_volume)


@dataclass
class HermiteCoefficientSet:
    """Moment coefficients of (rho0, a0) and of omega0 keyed by multi-index."""

    rho: dict = dc_field(default_factory=dict)
    a: dict = dc_field(default_factory=dict)
    divfree: dict = dc_field(default_factory=dict)

    def to_json(self) -> str:
        def keyed(d):
            return {"({},{},{})".format(*k): v for k, v in d.items()}

        payload = {
            "scalar": {"rho": keyed(self.rho), "a": keyed(self.a)},
            "divfree": {"({},{},{})|{}".format(*k[0], k[1]): v
                        for k, v in self.divfree.items()},
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str):
        payload = json.loads(text)

        def unkey(s):
            return tuple(int(v) for v in s.strip("()").split(","))

        out = cls()
        out.rho = {unkey(k): v for k, v in payload["scalar"]["rho"].items()}
        out.a = {unkey(k): v for k, v in payload["scalar"]["a"].items()}
        for k, v in payload["divfree"].items():
            amark, j = k.split("|")
            out.divfree[(unkey(amark), int(j))] = v
        return out


def _ixi_power(grid, alpha):
    out = np.ones((1, 1, 1), dtype=complex)
    for ai, k in zip(alpha, (grid.kx, grid.ky, grid.kz)):
        if ai:
            out = out * (1j * k) ** ai
    return out


def scalar_hermite_approx(u0: ScalarField, n: float, nu: float, t: float,
                          coeffs=None):
    """Order-floor(n) Hermite approximation of the heat evolution of u0.

    Returns (approx, remainder), both physical, with
    approx = sum_{|alpha| <= floor(n)} <H_alpha, u0> d^alpha K_nu(t) * phi0 and
    remainder = K_nu(t) * u0 - approx.  ``coeffs`` (multi-index -> value)
    overrides the grid moment quadrature, e.g. with moments computed on a
    finer auxiliary grid when the evolution box undersamples the data.
    """
    if not 0 <= n <= 2:
        raise ValueError(f"weight n must lie in [0, 2], got {n}")
    grid = u0.grid
    u0p = to_physical(u0)
    base = ScalarField(grid, phi0_spectrum(grid), SPECTRAL)
    mult = np.zeros((grid.n,) * 3, dtype=complex)
    for alpha in multi_indices(int(np.floor(n))):
        c = coeffs[alpha] if coeffs is not None else moment_coeff(u0p, alpha)
        mult = mult + c * _ixi_power(grid, alpha)
    mult *= heat_multiplier(grid.k2, nu, t)
    approx = to_physical(multiply_spectrum(base, mult))
    evolved = to_physical(multiply_spectrum(to_spectral(u0p),
                                            heat_multiplier(grid.k2, nu, t)))
    return approx, evolved - approx


def hyp_para_hermite_approx(rho0: ScalarField, a0: ScalarField, n: float,
                            params, t: float, coeffs=None):
    """Hermite expansion of the heat-wave evolution of (rho0, a0).

    The order-i profiles are (rho_1, a_1) = (d_t w * K_nu * phi0,
    -d_t^2 w * K_nu * phi0) and (rho_2, a_2) = (-w * K_nu * phi0,
    d_t w * K_nu * phi0); the rho0 moments weight profile 1 and the a0 moments
    profile 2.  Returns (rho_H, a_H, rho_LR, a_LR), physical.
    """
    if not 0 <= n <= 2:
        raise ValueError(f"weight n must lie in [0, 2], got {n}")
    grid = rho0.grid
    base = phi0_spectrum(grid)
    heat = heat_multiplier(grid.k2, params.nu, t)
    w, w_t, w_tt = wave_multipliers(grid.kmag, params.c, t)
    rho_mult = np.zeros((grid.n,) * 3, dtype=complex)
    a_mult = np.zeros((grid.n,) * 3, dtype=complex)
    rho0p, a0p = to_physical(rho0), to_physical(a0)
    for alpha in multi_indices(int(np.floor(n))):
        if coeffs is not None:
            c_rho = coeffs.rho.get(alpha, 0.0)
            c_a = coeffs.a.get(alpha, 0.0)
        else:
            c_rho = moment_coeff(rho0p, alpha)
            c_a = moment_coeff(a0p, alpha)
        ixi = _ixi_power(grid, alpha)
        rho_mult = rho_mult + ixi * (c_rho * w_t - c_a * w)
        a_mult = a_mult + ixi * (-c_rho * w_tt + c_a * w_t)
    rho_H = ScalarField(grid, base * rho_mult * heat, SPECTRAL)
    a_H = ScalarField(grid, base * a_mult * heat, SPECTRAL)
    rho_L, a_L = apply_heat_wave(rho0p, a0p, params, t)
    rho_H, a_H = to_physical(rho_H), to_physical(a_H)
    return (rho_H, a_H, to_physical(rho_L) - rho_H, to_physical(a_L) - a_H)


# Divergence-free profile table: (alpha_tilde, j) -> (gamma, axis) meaning
# f = curl(d^gamma phi0 e_axis); the dual polynomials p are listed alongside.
_TABLE1 = {
    ((1, 1, 0), 1): ((0, 0, 0), 2),
    ((1, 0, 1), 1): ((0, 0, 0), 1),
    ((0, 1, 1), 1): ((0, 0, 0), 0),
    ((2, 1, 0), 1): ((1, 0, 0), 2),
    ((1, 2, 0), 1): ((0, 1, 0), 2),
    ((2, 0, 1), 1): ((1, 0, 0), 1),
    ((1, 0, 2), 1): ((0, 0, 1), 1),
    ((0, 2, 1), 1): ((0, 1, 0), 0),
    ((0, 1, 2), 1): ((0, 0, 1), 0),
    ((1, 1, 1), 1): ((0, 0, 1), 2),
    ((1, 1, 1), 2): ((1, 0, 0), 0),
}

_TABLE1_P = {
    ((1, 1, 0), 1): lambda x: np.stack([-x[..., 1] / 2, x[..., 0] / 2,
                                        np.zeros(x.shape[:-1])], axis=-1),
    ((1, 0, 1), 1): lambda x: np.stack([x[..., 2] / 2, np.zeros(x.shape[:-1]),
                                        -x[..., 0] / 2], axis=-1),
    ((0, 1, 1), 1): lambda x: np.stack([np.zeros(x.shape[:-1]), -x[..., 2] / 2,
                                        x[..., 1] / 2], axis=-1),
    ((2, 1, 0), 1): lambda x: np.stack([x[..., 0] * x[..., 1] / 2,
                                        -x[..., 0] ** 2 / 4,
                                        np.zeros(x.shape[:-1])], axis=-1),
    ((1, 2, 0), 1): lambda x: np.stack([x[..., 1] ** 2 / 4,
                                        -x[..., 0] * x[..., 1] / 2,
                                        np.zeros(x.shape[:-1])], axis=-1),
    ((2, 0, 1), 1): lambda x: np.stack([-x[..., 0] * x[..., 2] / 2,
                                        np.zeros(x.shape[:-1]),
                                        x[..., 0] ** 2 / 4], axis=-1),
    ((1, 0, 2), 1): lambda x: np.stack([-x[..., 2] ** 2 / 4,
                                        np.zeros(x.shape[:-1]),
                                        x[..., 0] * x[..., 2] / 2], axis=-1),
    ((0, 2, 1), 1): lambda x: np.stack([np.zeros(x.shape[:-1]),
                                        x[..., 1] * x[..., 2] / 2,
                                        -x[..., 1] ** 2 / 4], axis=-1),
    ((0, 1, 2), 1): lambda x: np.stack([np.zeros(x.shape[:-1]),
                                        x[..., 2] ** 2 / 4,
                                        -x[..., 1] * x[..., 2] / 2], axis=-1),
    ((1, 1, 1), 1): lambda x: np.stack([x[..., 1] * x[..., 2],
                                        np.zeros(x.shape[:-1]),
                                        np.zeros(x.shape[:-1])], axis=-1),
    ((1, 1, 1), 2): lambda x: np.stack([np.zeros(x.shape[:-1]),
                                        np.zeros(x.shape[:-1]),
                                        -x[..., 0] * x[..., 1]], axis=-1),
}

TABLE1_KEYS = tuple(_TABLE1.keys())


def _curl_of_scalar_times_e(gfun, axis):
    """Analytic curl(g e_axis) given gfun(alpha_extra, x) = d^(alpha_extra) g."""
    def f(x):
        zeros = np.zeros(np.asarray(x).shape[:-1])
        if axis == 0:
            return np.stack([zeros, gfun((0, 0, 1), x), -gfun((0, 1, 0), x)], axis=-1)
        if axis == 1:
            return np.stack([-gfun((0, 0, 1), x), zeros, gfun((1, 0, 0), x)], axis=-1)
        return np.stack([gfun((0, 1, 0), x), -gfun((1, 0, 0), x), zeros], axis=-1)
    return f


def table1_profiles(alpha_tilde, j):
    """(p, f) samplers for one table row; unlisted (alpha_tilde, j) give zero pairs.

    p is the dual polynomial (vector-valued, shape (..., 3)); f samples the
    divergence-free profile curl(d^gamma phi0 e_i) analytically.
    """
    key = (tuple(alpha_tilde), int(j))
    if key not in _TABLE1:
        if order(alpha_tilde) > MAX_ORDER:
            raise UnsupportedOrderError(f"|alpha~| = {order(alpha_tilde)} exceeds 3")
        zero = lambda x: np.zeros(np.asarray(x).shape[:-1] + (3,))
        return zero, zero
    gamma, axis = _TABLE1[key]

    def gfun(extra, x):
        full = tuple(g + e for g, e in zip(gamma, extra))
        return phi0_derivative(full, x)

    return _TABLE1_P[key], _curl_of_scalar_times_e(gfun, axis)


_F_SPEC_CACHE = {}


def table1_f_spectrum(grid, alpha_tilde, j):
    """Spectral coefficients of f_{alpha~,j} built from the sampled phi0."""
    key = (tuple(alpha_tilde), int(j))
    cache_key = (grid.n, grid.length, key)
    if cache_key in _F_SPEC_CACHE:
        return _F_SPEC_CACHE[cache_key]
    base = phi0_spectrum(grid)
    if key not in _TABLE1:
        zero = np.zeros((grid.n,) * 3, dtype=complex)
        return [zero, zero, zero]
    gamma, axis = _TABLE1[key]
    ghat = base * _ixi_power(grid, gamma)
    ks = (grid.kx, grid.ky, grid.kz)
    comps = [np.zeros((grid.n,) * 3, dtype=complex) for _ in range(3)]
    # curl(g e_axis): component eps_{i k axis} i xi_k g^
    for i in range(3):
        for k in range(3):
            eps = _levi_civita(i, k, axis)
            if eps:
                comps[i] = comps[i] + eps * 1j * ks[k] * ghat
    _F_SPEC_CACHE[cache_key] = comps
    return comps


def _levi_civita(i, j, k):
    if (i, j, k) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        return 1
    if (i, j, k) in ((0, 2, 1), (2, 1, 0), (1, 0, 2)):
        return -1
    return 0


def divfree_moment_coeff(omega0: VectorField3, alpha_tilde, j) -> float:
    """<p_{alpha~,j}, omega0> by grid quadrature, with boundary-decay check."""
    om = to_physical(omega0)
    grid = om.grid
    p_fun, _ = table1_profiles(alpha_tilde, j)
    pts = grid.points()
    pvals = p_fun(pts).reshape((grid.n,) * 3 + (3,))
    weighted = sum(pvals[..., i] * om[i].values for i in range(3))
    _boundary_decay_check(weighted, f"divfree_moment_coeff {alpha_tilde}|{j}")
    return float(np.real(np.sum(weighted)) * grid.cell_volume)


def divfree_hermite_approx(omega0: VectorField3, n: float, params, t: float,
                           coeffs=None):
    """Divergence-free Hermite approximation of the heat evolution of omega0.

    Sums the tabulated rows with |alpha~| <= floor(n) + 1; returns
    (omega_H, omega_LR), physical, with omega_H divergence-free by construction.
    """
    if not 0 <= n <= 2:
        raise ValueError(f"weight n must lie in [0, 2], got {n}")
    grid = omega0.grid
    max_row_order = int(np.floor(n)) + 1
    heat = heat_multiplier(grid.k2, params.epsilon, t)
    acc = [np.zeros((grid.n,) * 3, dtype=complex) for _ in range(3)]
    for key in TABLE1_KEYS:
        alpha_tilde, j = key
        if order(alpha_tilde) > max_row_order:
            continue
        if coeffs is not None:
            coeff = coeffs.divfree.get(key, 0.0)
        else:
            coeff = divfree_moment_coeff(omega0, alpha_tilde, j)
        fhat = table1_f_spectrum(grid, alpha_tilde, j)
        for i in range(3):
            acc[i] = acc[i] + coeff * fhat[i] * heat
    omega_H = VectorField3(tuple(
        ScalarField(grid, acc[i], SPECTRAL) for i in range(3)))
    omega_H = to_physical(omega_H)
    omega_L = to_physical(apply_heat(omega0, params, t))
    return omega_H, omega_L - omega_H


def hermite_profile_state(coeffs: HermiteCoefficientSet, grid, params, t: float):
    """Spectral (rho_H, a_H, omega_H) profile fields at time t from stored moments.

    The zero mode of a_H is dropped: on the torus the inverse Laplacian is
    only defined modulo the monopole mode, which never enters the momentum
    reconstruction (Pi discards it).
    """
    base = phi0_spectrum(grid)
    heat_nu = heat_multiplier(grid.k2, params.nu, t)
    heat_eps = heat_multiplier(grid.k2, params.epsilon, t)
    w, w_t, w_tt = wave_multipliers(grid.kmag, params.c, t)
    rho_mult = np.zeros((grid.n,) * 3, dtype=complex)
    a_mult = np.zeros((grid.n,) * 3, dtype=complex)
    for alpha in set(coeffs.rho) | set(coeffs.a):
        c_rho = coeffs.rho.get(alpha, 0.0)
        c_a = coeffs.a.get(alpha, 0.0)
        ixi = _ixi_power(grid, alpha)
        rho_mult = rho_mult + ixi * (c_rho * w_t - c_a * w)
        a_mult = a_mult + ixi * (-c_rho * w_tt + c_a * w_t)
    rho_H = ScalarField(grid, base * rho_mult * heat_nu, SPECTRAL)
    a_vals = base * a_mult * heat_nu
    a_vals[0, 0, 0] = 0.0
    a_H = ScalarField(grid, a_vals, SPECTRAL)
    om_acc = [np.zeros((grid.n,) * 3, dtype=complex) for _ in range(3)]
    for key, coeff in coeffs.divfree.items():
        fhat = table1_f_spectrum(grid, *key)
        for i in range(3):
            om_acc[i] = om_acc[i] + coeff * fhat[i] * heat_eps
    omega_H = VectorField3(tuple(
        ScalarField(grid, om_acc[i], SPECTRAL) for i in range(3)))
    return rho_H, a_H, omega_H


def expansion_coefficients(rho0, a0, omega0, n: float) -> HermiteCoefficientSet:
    """All moment coefficients used by the order-n expansions of a state."""
    out = HermiteCoefficientSet()
    if rho0 is not None:
        rp = to_physical(rho0)
        for alpha in multi_indices(int(np.floor(n))):
            out.rho[alpha] = moment_coeff(rp, alpha)
    if a0 is not None:
        ap = to_physical(a0)
        for alpha in multi_indices(int(np.floor(n))):
            out.a[alpha] = moment_coeff(ap, alpha)
    if omega0 is not None:
        for key in TABLE1_KEYS:
            if order(key[0]) <= int(np.floor(n)) + 1:
                out.divfree[key] = divfree_moment_coeff(omega0, *key)
    return out
