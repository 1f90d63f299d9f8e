"""Diffusion waves: the linear heat-wave evolution and its decay exponents.

A Gaussian density bump launches an expanding spherical acoustic front whose
amplitude decays both from spherical spreading and from viscous smoothing.
This script evolves (rho0, a0) = (phi0, 0) with the exact per-mode heat-wave
propagator, prints the radial profile of rho at a few times, and fits the
L^2 decay exponents against the predicted (1 + t) powers:

    ||rho_L(t)||_L2 ~ (1+t)^{-3/4}        (wave-convected Gaussian)
    ||a_L(t)||_L2   ~ (1+t)^{-5/4}
"""

import numpy as np

from mcns import GridSpec, PhysicalParams, ScalarField, apply_heat_wave, l2_norm
from mcns.analysis import fit_decay, log_times
from mcns.grid import forward_transform, to_physical
from mcns.hermite import phi0_field

params = PhysicalParams(epsilon=1.0, eta=1.0, c=2.0)
grid = GridSpec(96, 200.0)
rho0 = forward_transform(phi0_field(grid))
a0 = ScalarField.zeros(grid, "spectral")

print("radial profile of rho_L along the x axis")
mid = grid.n // 2
for t in (0.0, 5.0, 15.0):
    rho_t, _ = apply_heat_wave(rho0, a0, params, t)
    vals = np.real(to_physical(rho_t).values[:, mid, mid])
    peak_i = int(np.argmax(np.abs(vals[mid:]))) + mid
    print(f"  t={t:5.1f}: front near |x| = {abs(grid.x1[peak_i]):5.1f} "
          f"(c t = {params.c * t:5.1f}), peak {vals[peak_i]:+.3e}")

rho_series, a_series = [], []
for t in log_times(5.0, 40.0, 20):
    rho_t, a_t = apply_heat_wave(rho0, a0, params, t)
    rho_series.append((t, l2_norm(rho_t)))
    a_series.append((t, l2_norm(a_t)))

for name, series, predicted in [("rho", rho_series, -0.75), ("a", a_series, -1.25)]:
    fit = fit_decay(series, (5.0, 40.0), time_shift=1.0)
    print(f"||{name}_L||_L2 slope: fitted {fit.slope:+.3f}, "
          f"predicted {predicted:+.3f}")
