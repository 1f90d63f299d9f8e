"""Closed-form asymptotic profiles of the heat-wave and vorticity evolutions.

Explicit formulas for the leading profiles

    rho_1 = d_t w * K_nu * phi0      a_1 = -d_t^2 w * K_nu * phi0
    rho_2 = -w * K_nu * phi0         a_2 = d_t w * K_nu * phi0

their irrotational momenta Pi a_1, Pi a_2, and the Biot-Savart field B g_i of
the heat-evolved curl profiles.  These serve as oracles for the spectral
machinery and as the explicitly computable approximants of the long-time
theory.

Convention note: this module uses the error-function normalization

    Erf(z) = 2 * integral_0^z exp(-u^2) du = sqrt(pi) * erf_standard(z)

WITHOUT the usual 1/sqrt(pi) prefactor; the closed forms are only correct
under this convention (erf_unnormalized below).

Each profile is radially structured with apparent 1/r or x/r^3 singularities
whose numerators vanish to matching order.  Near the origin (r below
1e-4 * sqrt(1 + nu t)) evaluation switches to series forms accurate to fourth
order; elsewhere the displayed formulas are used verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf as _erf_std

SQRT_PI = np.sqrt(np.pi)


@dataclass(frozen=True)
class ProfileParams:
    """Diffusivities, sound speed and evaluation time for the closed forms."""

    nu: float
    c: float
    epsilon: float
    t: float

    def __post_init__(self):
        if min(self.nu, self.c, self.epsilon) <= 0:
            raise ValueError("nu, c, epsilon must be strictly positive")
        if self.t < 0:
            raise ValueError("t must be nonnegative")


def erf_unnormalized(zeta):
    """Erf(z) = 2 int_0^z exp(-u^2) du; limits +-sqrt(pi) at +-infinity."""
    return SQRT_PI * _erf_std(zeta)


def _radius(x):
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.sum(x * x, axis=-1))


def _sinhc(y):
    """sinh(y)/y with the removable value 1 at y = 0."""
    y = np.asarray(y, dtype=float)
    safe = np.where(y == 0.0, 1.0, y)
    return np.where(y == 0.0, 1.0, np.sinh(safe) / safe)


def _wave_pieces(r, pp: ProfileParams):
    """Shared quantities: s2 = 1 + nu t, u/v shifts, stable P, beta."""
    s2 = 1.0 + pp.nu * pp.t
    ct = pp.c * pp.t
    u = r - ct
    v = r + ct
    Eu = np.exp(-u * u / (4.0 * s2))
    Ev = np.exp(-v * v / (4.0 * s2))
    P = np.exp(-(r * r + ct * ct) / (4.0 * s2))
    beta = ct / (2.0 * s2)
    return s2, ct, u, v, Eu, Ev, P, beta


def _origin_mask(r, s2):
    return r < 1e-4 * np.sqrt(s2)


def profile_rho1(x, pp: ProfileParams):
    """rho_1 = [(r-ct)E(r-ct) + (r+ct)E(r+ct)] / (2 r (4 pi (1+nu t))^{3/2})."""
    r = _radius(x)
    s2, ct, u, v, Eu, Ev, P, beta = _wave_pieces(r, pp)
    norm = (4.0 * np.pi * s2) ** 1.5
    r_safe = np.maximum(r, 1e-30)
    direct = (u * Eu + v * Ev) / (2.0 * r_safe * norm)
    # regular form: P [cosh(beta r) - ct beta sinhc(beta r)] / norm
    br = beta * np.minimum(r, 1e-4 * np.sqrt(s2))
    series = P * (np.cosh(br) - ct * beta * _sinhc(br)) / norm
    return np.where(_origin_mask(r, s2), series, direct)


def profile_a2(x, pp: ProfileParams):
    """a_2 = d_t w * K_nu * phi0; identical closed form to rho_1."""
    return profile_rho1(x, pp)


def profile_rho2(x, pp: ProfileParams):
    """rho_2 = [E(r+ct) - E(r-ct)] / ((4 pi)^{3/2} (1+nu t)^{1/2} c r)."""
    r = _radius(x)
    s2, ct, u, v, Eu, Ev, P, beta = _wave_pieces(r, pp)
    norm = (4.0 * np.pi) ** 1.5 * np.sqrt(s2)
    r_safe = np.maximum(r, 1e-30)
    direct = (Ev - Eu) / (norm * pp.c * r_safe)
    br = beta * np.minimum(r, 1e-4 * np.sqrt(s2))
    series = -P * pp.t * _sinhc(br) / ((4.0 * np.pi) ** 1.5 * s2**1.5)
    return np.where(_origin_mask(r, s2), series, direct)


def profile_a1(x, pp: ProfileParams):
    """a_1 = -d_t^2 w * K_nu * phi0 (Gaussian-bracket closed form)."""
    r = _radius(x)
    s2, ct, u, v, Eu, Ev, P, beta = _wave_pieces(r, pp)
    norm = (4.0 * np.pi * s2) ** 1.5
    r_safe = np.maximum(r, 1e-30)
    direct = pp.c / (2.0 * r_safe * norm) * (
        (v * v / (2.0 * s2) - 1.0) * Ev - (u * u / (2.0 * s2) - 1.0) * Eu)
    br = beta * np.minimum(r, 1e-4 * np.sqrt(s2))
    rr = np.minimum(r, 1e-4 * np.sqrt(s2))
    series = pp.c * P / (2.0 * norm) * (
        (2.0 - (rr * rr + ct * ct) / s2) * beta * _sinhc(br)
        + (2.0 * ct / s2) * np.cosh(br))
    return np.where(_origin_mask(r, s2), series, direct)


def profile_pi_a1(x, pp: ProfileParams):
    """Pi a_1 = grad(Lap^-1 a_1) as an explicit radial-gradient field."""
    x = np.asarray(x, dtype=float)
    r = _radius(x)
    s2, ct, u, v, Eu, Ev, P, beta = _wave_pieces(r, pp)
    sig = np.sqrt(s2)
    norm = (4.0 * np.pi) ** 1.5 * sig
    r_safe = np.maximum(r, 1e-30)
    bracket = (Eu * (r * u / (2.0 * s2) + 1.0) - Ev * (r * v / (2.0 * s2) + 1.0))
    direct_scale = pp.c * bracket / (norm * r_safe**3)
    # V/r^3 -> P [ (beta/s2 - 2 beta^3/3) + (beta^3/(6 s2) - beta^5/15) r^2 ]
    rr = np.minimum(r, 1e-4 * sig)
    series_scale = pp.c * P / norm * (
        (beta / s2 - 2.0 * beta**3 / 3.0)
        + (beta**3 / (6.0 * s2) - beta**5 / 15.0) * rr * rr)
    scale = np.where(_origin_mask(r, s2), series_scale, direct_scale)
    return x * scale[..., None]


def profile_pi_a2(x, pp: ProfileParams):
    """Pi a_2: radial-gradient field with unnormalized-Erf far terms."""
    x = np.asarray(x, dtype=float)
    r = _radius(x)
    s2, ct, u, v, Eu, Ev, P, beta = _wave_pieces(r, pp)
    sig = np.sqrt(s2)
    norm = (4.0 * np.pi) ** 1.5
    r_safe = np.maximum(r, 1e-30)
    W = (-r * (Ev + Eu) / sig + erf_unnormalized(u / (2.0 * sig))
         + erf_unnormalized(v / (2.0 * sig)))
    direct_scale = W / (norm * r_safe**3)
    rr = np.minimum(r, 1e-4 * sig)
    series_scale = P / norm * (
        (1.0 / (3.0 * sig**3) - 2.0 * beta**2 / (3.0 * sig))
        + (-1.0 / (20.0 * sig**5) + beta**2 / (5.0 * sig**3)
           - beta**4 / (15.0 * sig)) * rr * rr)
    scale = np.where(_origin_mask(r, s2), series_scale, direct_scale)
    return x * scale[..., None]


def profile_b_g(i, x, pp: ProfileParams):
    """B g_i for g_i = K_eps(t) * curl(phi0 e_i), with the d_x_i carried out.

    (B g_i)_j = (4 pi)^{-3/2} [ delta_ij (E0/s^3 - F/r^3)
                                - x_i x_j (F' r - 3 F)/r^5 ]
    where s^2 = 1 + eps t, E0 = exp(-r^2/(4 s^2)),
    F(r) = -2 r E0 / s + 2 Erf(r/(2s)) and F'(r) = r^2 E0 / s^3.
    """
    if i not in (1, 2, 3):
        raise ValueError(f"axis i must be 1, 2 or 3, got {i}")
    x = np.asarray(x, dtype=float)
    r = _radius(x)
    s2 = 1.0 + pp.epsilon * pp.t
    sig = np.sqrt(s2)
    E0 = np.exp(-r * r / (4.0 * s2))
    F = -2.0 * r * E0 / sig + 2.0 * erf_unnormalized(r / (2.0 * sig))
    r_safe = np.maximum(r, 1e-30)
    F_over_r3 = F / r_safe**3
    G_over_r5 = (r**3 * E0 / sig**3 - 3.0 * F) / r_safe**5
    near = _origin_mask(r, s2)
    # series: F/r^3 = 1/(3 s^3) - r^2/(20 s^5); (F'r-3F)/r^5 = -1/(10 s^5) + r^2/(56 s^7)
    rr2 = np.minimum(r, 1e-4 * sig) ** 2
    F_series = 1.0 / (3.0 * sig**3) - rr2 / (20.0 * sig**5)
    G_series = -1.0 / (10.0 * sig**5) + rr2 / (56.0 * sig**7)
    F_over_r3 = np.where(near, F_series, F_over_r3)
    G_over_r5 = np.where(near, G_series, G_over_r5)
    norm = (4.0 * np.pi) ** -1.5
    iax = i - 1
    out = np.empty(x.shape)
    for j in range(3):
        term = -x[..., iax] * x[..., j] * G_over_r5
        if j == iax:
            term = term + E0 / sig**3 - F_over_r3
        out[..., j] = norm * term
    return out


def bg_potential_term(i, x, pp: ProfileParams):
    """The vector x F(r)/r^3 whose d_x_i enters profile_b_g (for FD validation)."""
    x = np.asarray(x, dtype=float)
    r = _radius(x)
    s2 = 1.0 + pp.epsilon * pp.t
    sig = np.sqrt(s2)
    E0 = np.exp(-r * r / (4.0 * s2))
    F = -2.0 * r * E0 / sig + 2.0 * erf_unnormalized(r / (2.0 * sig))
    r_safe = np.maximum(r, 1e-30)
    return x * (F / r_safe**3)[..., None]


def radial_wave_first(u0_radial, x, c, t):
    """d'Alembert-type radial wave solution for data (u0(r), 0).

    u(x, t) = [ (r-ct) u0(|r-ct|) + (r+ct) u0(r+ct) ] / (2 r).
    """
    r = _radius(x)
    r_safe = np.maximum(r, 1e-30)
    um = r - c * t
    up = r + c * t
    return (um * u0_radial(np.abs(um)) + up * u0_radial(up)) / (2.0 * r_safe)
