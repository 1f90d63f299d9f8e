"""Curl/divergence calculus, the inverse operators, and the quadratic term.

The momentum field is reconstructed from its divergence a and curl omega via

    m = Pi a + B omega,   Pi a = grad(Lap^-1 a),   B omega = -curl(Lap^-1 omega)

(per-wavenumber: (Pi a)_j = -i xi_j a^ / |xi|^2 and (B omega)^ = i xi x omega^
/ |xi|^2, zero mode 0).  Both require zero total mass, which holds
automatically for divergences and curls.  The quadratic term of the evolution
is Q(u, u) = (0, div N, curl N) with N = sum_j d_j(m_j m); products are formed
in physical space on 2/3-dealiased factors.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .errors import ZeroMassError
from .grid import (SPECTRAL, ScalarField, VectorField3, dealias,
                   forward_transform, inverse_transform, to_spectral)
from .propagators import PhysicalParams

logger = logging.getLogger("mcns")

SOLENOIDAL_TOL = 1e-10


def divergence(m: VectorField3) -> ScalarField:
    """sum_j i xi_j m_j^ on spectral input."""
    ms = to_spectral(m)
    g = ms.grid
    vals = (1j * g.kx * ms[0].values + 1j * g.ky * ms[1].values
            + 1j * g.kz * ms[2].values)
    return ScalarField(g, vals, SPECTRAL)


def curl(m: VectorField3) -> VectorField3:
    """i xi x m^ on spectral input."""
    ms = to_spectral(m)
    g = ms.grid
    mx, my, mz = (c.values for c in ms.components)
    cx = 1j * (g.ky * mz - g.kz * my)
    cy = 1j * (g.kz * mx - g.kx * mz)
    cz = 1j * (g.kx * my - g.ky * mx)
    return VectorField3(tuple(ScalarField(g, v, SPECTRAL) for v in (cx, cy, cz)))


def gradient(f: ScalarField) -> VectorField3:
    fs = to_spectral(f)
    g = fs.grid
    return VectorField3(tuple(
        ScalarField(g, 1j * k * fs.values, SPECTRAL) for k in (g.kx, g.ky, g.kz)))


def _check_zero_mass(f: ScalarField, what: str):
    norm = np.sqrt(np.sum(np.abs(f.values) ** 2))
    if norm > 0 and abs(f.values[0, 0, 0]) > 1e-10 * norm:
        raise ZeroMassError(
            f"{what}: zero mode {f.values[0, 0, 0]:.3e} violates the "
            f"zero-total-mass requirement (field norm {norm:.3e})")


def _inv_k2(grid):
    inv = np.zeros_like(grid.k2)
    np.divide(1.0, grid.k2, out=inv, where=grid.k2 > 0)
    return inv


def pi_op(a: ScalarField) -> VectorField3:
    """Irrotational part generator: (Pi a)_j^ = -i xi_j a^ / |xi|^2, zero mode 0."""
    af = to_spectral(a)
    _check_zero_mass(af, "pi_op")
    g = af.grid
    base = af.values * _inv_k2(g)
    return VectorField3(tuple(
        ScalarField(g, -1j * k * base, SPECTRAL) for k in (g.kx, g.ky, g.kz)))


def solenoidal_defect(omega: VectorField3) -> float:
    """Relative size of xi . omega^ over the spectrum."""
    om = to_spectral(omega)
    g = om.grid
    div_vals = (g.kx * om[0].values + g.ky * om[1].values + g.kz * om[2].values)
    scale = np.sqrt(sum(np.sum(np.abs(c.values) ** 2) for c in om.components))
    if scale == 0:
        return 0.0
    return float(np.sqrt(np.sum((np.abs(div_vals) / np.maximum(g.kmag, 1e-300)) ** 2))
                 / scale)


def project_solenoidal(omega: VectorField3) -> VectorField3:
    """Remove the gradient part: omega^ - xi (xi . omega^)/|xi|^2."""
    om = to_spectral(omega)
    g = om.grid
    dot = (g.kx * om[0].values + g.ky * om[1].values + g.kz * om[2].values)
    dot *= _inv_k2(g)
    comps = []
    for c, k in zip(om.components, (g.kx, g.ky, g.kz)):
        comps.append(ScalarField(g, c.values - k * dot, SPECTRAL))
    return VectorField3(tuple(comps))


def biot_savart(omega: VectorField3) -> VectorField3:
    """Incompressible part generator: (B omega)^ = i xi x omega^ / |xi|^2."""
    om = to_spectral(omega)
    for c in om.components:
        _check_zero_mass(c, "biot_savart")
    defect = solenoidal_defect(om)
    if defect > SOLENOIDAL_TOL:
        logger.warning("biot_savart: solenoidal defect %.2e exceeds %.0e; "
                       "re-projecting input", defect, SOLENOIDAL_TOL)
        om = project_solenoidal(om)
    g = om.grid
    inv = _inv_k2(g)
    ox, oy, oz = (c.values * inv for c in om.components)
    bx = 1j * (g.ky * oz - g.kz * oy)
    by = 1j * (g.kz * ox - g.kx * oz)
    bz = 1j * (g.kx * oy - g.ky * ox)
    return VectorField3(tuple(ScalarField(g, v, SPECTRAL) for v in (bx, by, bz)))


def momentum(a: ScalarField, omega: VectorField3) -> VectorField3:
    """m = Pi a + B omega (Helmholtz reconstruction)."""
    return pi_op(a) + biot_savart(omega)


def nonlinearity_N(a: ScalarField, omega: VectorField3,
                   with_dealias=True) -> VectorField3:
    """N(a, omega) = sum_j d_j((Pi a + B omega)_j (Pi a + B omega)).

    The nine products m_j m_i are computed in physical space on dealiased
    factors; the result is dealiased again before differentiation.
    """
    m = momentum(a, omega)
    if with_dealias:
        m = VectorField3(tuple(dealias(c) for c in m.components))
    m_phys = [inverse_transform(c) for c in m.components]
    g = m.grid
    kvecs = (g.kx, g.ky, g.kz)
    # products are symmetric: transform the six distinct ones
    prod_hat = {}
    for i in range(3):
        for j in range(i, 3):
            p = ScalarField(g, m_phys[i].values * m_phys[j].values, "physical")
            ph = forward_transform(p)
            if with_dealias:
                ph = dealias(ph)
            prod_hat[(i, j)] = ph.values
    comps = []
    for i in range(3):
        acc = np.zeros((g.n,) * 3, dtype=complex)
        for j in range(3):
            key = (min(i, j), max(i, j))
            acc += 1j * kvecs[j] * prod_hat[key]
        comps.append(ScalarField(g, acc, SPECTRAL))
    return VectorField3(tuple(comps))


@dataclass(frozen=True)
class CurlDivState:
    """State (rho, a, omega) of the curl-divergence system, spectral by convention.

    a and omega must have zero total mass (their zero modes vanish), and omega
    must be solenoidal: xi . omega^ = 0.
    """

    rho: ScalarField
    a: ScalarField
    omega: VectorField3
    params: PhysicalParams

    def validate(self, project=True):
        """Check zero-mass and solenoidal invariants; optionally re-project omega."""
        _check_zero_mass(to_spectral(self.a), "CurlDivState.a")
        om = to_spectral(self.omega)
        for c in om.components:
            _check_zero_mass(c, "CurlDivState.omega")
        defect = solenoidal_defect(om)
        if defect > SOLENOIDAL_TOL:
            if not project:
                raise ZeroMassError(f"solenoidal defect {defect:.2e} too large")
            logger.warning("CurlDivState: re-projecting omega (defect %.2e)", defect)
            return replace(self, omega=project_solenoidal(om))
        return self

    def spectral(self):
        return replace(self, rho=to_spectral(self.rho), a=to_spectral(self.a),
                       omega=to_spectral(self.omega))

    def __add__(self, other):
        return CurlDivState(self.rho + other.rho, self.a + other.a,
                            self.omega + other.omega, self.params)

    def __sub__(self, other):
        return CurlDivState(self.rho - other.rho, self.a - other.a,
                            self.omega - other.omega, self.params)

    def __mul__(self, scalar):
        return CurlDivState(self.rho * scalar, self.a * scalar,
                            self.omega * scalar, self.params)

    __rmul__ = __mul__


def q_term(state: CurlDivState, with_dealias=True):
    """Q(u, u) = (0, div N, curl N); the a/omega outputs are zero-mean exactly."""
    N = nonlinearity_N(state.a, state.omega, with_dealias=with_dealias)
    zero = ScalarField.zeros(state.rho.grid, SPECTRAL)
    return zero, divergence(N), curl(N)
