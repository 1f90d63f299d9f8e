"""Closed-form asymptotic profiles against the spectral machinery.

The four scalar profiles (rho_1, a_1, rho_2, a_2) have explicit Gaussian
closed forms; the momentum profiles Pi a_1, Pi a_2 and the Biot-Savart field
B g_i involve the unnormalized error function Erf(z) = 2 int_0^z
exp(-u^2) du.  Each is compared with the pseudo-spectral evolution of the
same data.

Fields with a nonzero far-field monopole (Pi a_2, B g_i) cannot be compared
directly on a periodic box, so the localized differences profile(t) -
profile(0) are used; their t = 0 baselines are pinned separately by a radial
shell-theorem quadrature.
"""

import numpy as np

from mcns import (GridSpec, PhysicalParams, ProfileParams, ScalarField,
                  VectorField3, apply_heat, apply_heat_wave, biot_savart,
                  curl, pi_op, profile_a1, profile_a2, profile_b_g,
                  profile_pi_a1, profile_pi_a2, profile_rho1, profile_rho2)
from mcns.grid import forward_transform, to_physical
from mcns.hermite import phi0_field

params = PhysicalParams(epsilon=1.0, eta=1.0, c=1.0)
grid = GridSpec(96, 48.0)
p0 = forward_transform(phi0_field(grid))
zero = ScalarField.zeros(grid, "spectral")
pts = grid.points()
shape = (grid.n,) * 3


def rel_err(spectral_vals, closed_vals):
    return (np.linalg.norm(spectral_vals - closed_vals)
            / np.linalg.norm(closed_vals))


print(f"{'profile':<10}{'t':>6}{'rel L2 err':>14}")
for t in (0.5, 1.0, 2.0, 5.0):
    pp = ProfileParams(nu=params.nu, c=params.c, epsilon=params.epsilon, t=t)
    pp0 = ProfileParams(nu=params.nu, c=params.c, epsilon=params.epsilon, t=0.0)

    rho1s, a1s = apply_heat_wave(p0, zero, params, t)
    rho2s, a2s = apply_heat_wave(zero, p0, params, t)
    for name, fld, closed in [("rho1", rho1s, profile_rho1),
                              ("a1", a1s, profile_a1),
                              ("rho2", rho2s, profile_rho2),
                              ("a2", a2s, profile_a2)]:
        err = rel_err(np.real(to_physical(fld).values),
                      closed(pts, pp).reshape(shape))
        print(f"{name:<10}{t:>6.1f}{err:>14.2e}")

    pia1 = pi_op(a1s)
    closed = profile_pi_a1(pts, pp).reshape(shape + (3,))
    err = max(rel_err(np.real(to_physical(pia1[i]).values), closed[..., i])
              for i in range(3))
    print(f"{'pi_a1':<10}{t:>6.1f}{err:>14.2e}")

    pia2 = pi_op(a2s - p0)  # localized difference, see module docstring
    closed = (profile_pi_a2(pts, pp) - profile_pi_a2(pts, pp0)).reshape(shape + (3,))
    num = np.sqrt(sum(np.sum((np.real(to_physical(pia2[i]).values)
                              - closed[..., i]) ** 2) for i in range(3)))
    print(f"{'pi_a2(d)':<10}{t:>6.1f}{num / np.sqrt(np.sum(closed**2)):>14.2e}")

    e3 = VectorField3((zero, zero, p0))
    g0 = curl(e3)
    bg = biot_savart(apply_heat(g0, params, t) - g0)
    closed = (profile_b_g(3, pts, pp) - profile_b_g(3, pts, pp0)).reshape(shape + (3,))
    num = np.sqrt(sum(np.sum((np.real(to_physical(bg[i]).values)
                              - closed[..., i]) ** 2) for i in range(3)))
    print(f"{'b_g3(d)':<10}{t:>6.1f}{num / np.sqrt(np.sum(closed**2)):>14.2e}")
