"""Pseudo-spectral toolkit for a modified compressible Navier-Stokes system.

The system is evolved in curl-divergence variables (rho, a, omega) with
a = div m and omega = curl m.  The package provides:

* ``grid``         periodic 3D FFT substrate, multipliers, dealiasing, snapshots
* ``propagators``  exact heat / wave / heat-wave flows and a Kirchhoff oracle
* ``operators``    Pi and Biot-Savart inversion, curl/div, the quadratic term
* ``hermite``      moment projections and the three Hermite expansion engines
* ``profiles``     closed-form asymptotic profiles (oracles and approximants)
* ``solver``       exponential time stepping and the solution decomposition
* ``analysis``     weighted norms, predicted decay exponents, slope fitting
* ``runner``/``cli``   batch experiments: validate | evolve | rates | profiles
"""

from .grid import (GridSpec, ScalarField, VectorField3, dealias,
                   forward_transform, inverse_transform, l2_norm,
                   read_snapshot, rel_l2_diff, write_snapshot)
from .propagators import (GaussianBlob, PhysicalParams, apply_heat,
                          apply_heat_scalar, apply_heat_wave, heat_multiplier,
                          kirchhoff_eval, wave_multipliers)
from .operators import (CurlDivState, biot_savart, curl, divergence, momentum,
                        nonlinearity_N, pi_op, q_term)
from .hermite import (HermiteCoefficientSet, divfree_hermite_approx,
                      hermite_poly, hyp_para_hermite_approx, moment_coeff,
                      phi0, phi0_field, scalar_hermite_approx, table1_profiles)
from .profiles import (ProfileParams, erf_unnormalized, profile_a1, profile_a2,
                       profile_b_g, profile_pi_a1, profile_pi_a2, profile_rho1,
                       profile_rho2)
from .solver import (Decomposition, SolverConfig, Trajectory, decompose,
                     evolve, linear_state, picard_map, step)
from .analysis import (DecayFit, NormSpec, fit_decay, initial_energy, rate,
                       theory_report, weighted_norm)

__version__ = "0.1.0"
