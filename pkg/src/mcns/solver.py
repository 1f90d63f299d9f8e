"""Time integration of the mild formulation and the solution decomposition.

The linear flow exp(L dt) is applied exactly per wavenumber (heat-wave block
for (rho, a), heat for omega), so stepping error comes only from the Duhamel
integral of the quadratic term.  Two quadratures are provided:

* etd-heun: predictor freezes Q at the left endpoint and propagates it,
  corrector applies trapezoidal weights to the propagated integrand
  (second order).
* picard: fixed-point iteration of the same trapezoidal Duhamel map.

The decomposition splits u = u_H + u_LR + u_HP + u_NR around the exact linear
evolution u_L = u_H + u_LR, with the Hermite-Picard term

    u_HP(t) = - int_0^t exp(L (t-s)) Q(u_H(s), u_H(s)) ds

accumulated by composite trapezoid with the propagator folded in.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DivergenceError
from .grid import ScalarField, VectorField3, l2_norm, multiply_spectrum
from .hermite import expansion_coefficients, hermite_profile_state
from .operators import CurlDivState, q_term
from .propagators import (apply_heat, apply_heat_wave, heat_multiplier,
                          wave_multipliers)


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 0.01
    t_end: float = 1.0
    dealias: bool = True
    duhamel_rule: str = "etd-heun"
    picard_iters: int = 3
    snapshot_times: tuple = ()
    blowup_factor: float = 1e6
    nonlinear: bool = True

    def __post_init__(self):
        if self.dt <= 0 or self.dt > self.t_end:
            raise ValueError(f"need 0 < dt <= t_end, got dt={self.dt}, t_end={self.t_end}")
        if self.duhamel_rule not in ("etd-heun", "picard"):
            raise ValueError(f"unknown duhamel rule {self.duhamel_rule!r}")
        if self.picard_iters < 1:
            raise ValueError("picard_iters must be >= 1")
        for ts in self.snapshot_times:
            if ts < 0 or ts > self.t_end + 1e-12:
                raise ValueError(f"snapshot time {ts} outside [0, t_end]")


@dataclass
class Trajectory:
    times: list
    states: list
    provenance: str = ""

    def __iter__(self):
        return iter(zip(self.times, self.states))

    def state_at(self, t):
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        return self.states[i]


class LinearFlow:
    """Cached exact propagator exp(L dt) for one (grid, params, dt)."""

    def __init__(self, grid, params, dt):
        self.grid = grid
        self.params = params
        self.dt = dt
        self.heat_nu = heat_multiplier(grid.k2, params.nu, dt)
        self.heat_eps = heat_multiplier(grid.k2, params.epsilon, dt)
        self.w, self.w_t, self.w_tt = wave_multipliers(grid.kmag, params.c, dt)

    def __call__(self, rho, a, omega):
        """Propagate spectral (rho, a, omega) triple by dt; returns a triple."""
        g = self.grid
        rho_vals = self.heat_nu * (self.w_t * rho.values - self.w * a.values)
        a_vals = self.heat_nu * (-self.w_tt * rho.values + self.w_t * a.values)
        om = VectorField3(tuple(multiply_spectrum(c, self.heat_eps)
                                for c in omega.components))
        return (ScalarField(g, rho_vals, "spectral"),
                ScalarField(g, a_vals, "spectral"), om)

    def state(self, s: CurlDivState) -> CurlDivState:
        rho, a, om = self(s.rho, s.a, s.omega)
        return CurlDivState(rho, a, om, s.params)


def _check_finite(state: CurlDivState, t):
    for f in (state.rho, state.a, *state.omega.components):
        if not np.all(np.isfinite(f.values)):
            raise DivergenceError(f"non-finite field values at t = {t:.6g}", time=t)


def _max_abs(state: CurlDivState):
    return max(np.max(np.abs(f.values)) for f in
               (state.rho, state.a, *state.omega.components))


def step(state: CurlDivState, dt, config: SolverConfig,
         flow: LinearFlow | None = None, t=0.0) -> CurlDivState:
    """One exponential-integrator step of the mild formulation."""
    if flow is None or flow.dt != dt:
        flow = LinearFlow(state.rho.grid, state.params, dt)
    if not config.nonlinear:
        out = flow.state(state)
        _check_finite(out, t + dt)
        return out
    qr, qa, qo = q_term(state, with_dealias=config.dealias)
    Eu = flow.state(state)
    EQr, EQa, EQo = flow(qr, qa, qo)

    def combine(weight_q1, q1):
        rho = Eu.rho - dt * weight_q1[0] * EQr - dt * weight_q1[1] * q1[0]
        a = Eu.a - dt * weight_q1[0] * EQa - dt * weight_q1[1] * q1[1]
        om = Eu.omega - dt * weight_q1[0] * EQo - dt * weight_q1[1] * q1[2]
        return CurlDivState(rho, a, om, state.params)

    if config.duhamel_rule == "etd-heun":
        predictor = combine((1.0, 0.0), (qr, qa, qo))
        q1 = q_term(predictor, with_dealias=config.dealias)
        out = combine((0.5, 0.5), q1)
    else:
        out = Eu
        for _ in range(config.picard_iters):
            q1 = q_term(out, with_dealias=config.dealias)
            out = combine((0.5, 0.5), q1)
    _check_finite(out, t + dt)
    return out


def linear_state(u0: CurlDivState, t) -> CurlDivState:
    """Exact linear evolution of u0 at time t (heat-wave + heat multipliers)."""
    rho_L, a_L = apply_heat_wave(u0.rho, u0.a, u0.params, t)
    omega_L = apply_heat(u0.omega, u0.params, t)
    return CurlDivState(rho_L, a_L, omega_L, u0.params)


def _provenance(u0, config):
    payload = json.dumps({
        "n": u0.rho.grid.n, "L": u0.rho.grid.length,
        "epsilon": u0.params.epsilon, "eta": u0.params.eta, "c": u0.params.c,
        "dt": config.dt, "t_end": config.t_end, "dealias": config.dealias,
        "rule": config.duhamel_rule, "picard_iters": config.picard_iters,
        "snapshots": list(config.snapshot_times),
    }, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def evolve(u0: CurlDivState, config: SolverConfig, observer=None,
           store_states=True, convergence_check=None) -> Trajectory:
    """March u0 to t_end, storing snapshots at the configured times.

    Snapshot times are rounded to the step grid.  ``observer(t, state)``, if
    given, is called at every snapshot time (including t = 0 when requested)
    and may be used to accumulate norms without retaining full states; pass
    store_states=False to drop the states from the returned trajectory.

    ``convergence_check``, if set, re-integrates at dt/2 and raises
    DivergenceError when the final states differ by more than the given
    relative tolerance (an under-resolved step size is as fatal as a blow-up).
    """
    if convergence_check is not None:
        finals = []
        for dt in (config.dt, config.dt / 2):
            cfg = SolverConfig(dt=dt, t_end=config.t_end, dealias=config.dealias,
                               duhamel_rule=config.duhamel_rule,
                               picard_iters=config.picard_iters,
                               snapshot_times=(config.t_end,),
                               blowup_factor=config.blowup_factor,
                               nonlinear=config.nonlinear)
            finals.append(evolve(u0, cfg).states[-1])
        diff = state_l2(finals[0] - finals[1])
        scale = max(state_l2(finals[1]), 1e-300)
        if diff / scale > convergence_check:
            raise DivergenceError(
                f"halved-dt check failed: rel diff {diff / scale:.2e} "
                f"> {convergence_check:.0e} at t = {config.t_end}",
                time=config.t_end)
        return evolve(u0, config, observer=observer, store_states=store_states)
    u0 = u0.spectral().validate()
    nsteps = int(round(config.t_end / config.dt))
    if abs(nsteps * config.dt - config.t_end) > 1e-9 * config.t_end:
        raise ValueError("t_end must be an integer multiple of dt")
    snap_steps = sorted({int(round(ts / config.dt)) for ts in config.snapshot_times})
    flow = LinearFlow(u0.rho.grid, u0.params, config.dt)
    scale0 = _max_abs(u0)
    times, states = [], []

    def record(k, state):
        t = k * config.dt
        times.append(t)
        if store_states:
            states.append(state)
        if observer is not None:
            observer(t, state)

    state = u0
    if snap_steps and snap_steps[0] == 0:
        record(0, state)
    for k in range(1, nsteps + 1):
        state = step(state, config.dt, config, flow=flow, t=(k - 1) * config.dt)
        if scale0 > 0 and _max_abs(state) > config.blowup_factor * scale0:
            raise DivergenceError(
                f"field magnitude exceeded {config.blowup_factor:.0e} x initial "
                f"at t = {k * config.dt:.6g}", time=k * config.dt)
        if k in snap_steps:
            record(k, state)
    return Trajectory(times, states, _provenance(u0, config))


def picard_map(traj: Trajectory, u0: CurlDivState, with_dealias=True) -> Trajectory:
    """One application of the Duhamel fixed-point map to a trajectory.

    F[u](t_k) = u_L(t_k) - int_0^{t_k} exp(L (t_k - s)) Q(u(s)) ds with the
    integral by composite trapezoid on the trajectory's own snapshot grid
    (the grid must be dense: spacing at most the solver step).
    """
    u0 = u0.spectral()
    params = u0.params
    grid = u0.rho.grid
    out_states = []
    acc = None  # running integral, propagated to the current snapshot time
    prev_q = None
    prev_t = None
    for t, state in traj:
        if acc is None:
            acc = (ScalarField.zeros(grid, "spectral"),
                   ScalarField.zeros(grid, "spectral"),
                   VectorField3.zeros(grid, "spectral"))
            prev_q = q_term(state, with_dealias=with_dealias)
            prev_t = t
        else:
            h = t - prev_t
            flow = LinearFlow(grid, params, h)
            q_now = q_term(state, with_dealias=with_dealias)
            acc_prop = flow(*acc)
            prev_q_prop = flow(*prev_q)
            acc = tuple(acc_prop[i] + (h / 2.0) * (prev_q_prop[i] + q_now[i])
                        for i in range(3))
            prev_q = q_now
            prev_t = t
        uL = linear_state(u0, t)
        out_states.append(CurlDivState(uL.rho - acc[0], uL.a - acc[1],
                                       uL.omega - acc[2], params))
    return Trajectory(list(traj.times), out_states, traj.provenance + ":picard")


PIECES = ("u", "u_L", "u_H", "u_LR", "u_HP", "u_NR")


@dataclass
class Decomposition:
    """Per-snapshot decomposition u = u_H + u_LR + u_HP + u_NR (+ u_L = u_H + u_LR)."""

    times: list
    pieces: dict = dc_field(default_factory=dict)

    def norm_series(self, norm_fn=l2_norm):
        """(piece, component) -> [(t, norm)] for report consumption."""
        out = {}
        for piece, states in self.pieces.items():
            for comp in ("rho", "a", "omega"):
                series = []
                for t, s in zip(self.times, states):
                    f = getattr(s, comp)
                    series.append((t, norm_fn(f)))
                out[(piece, comp)] = series
        return out


def hermite_piece(u0: CurlDivState, n, t) -> CurlDivState:
    """u_H(t) built from the order-n moments of u0."""
    coeffs = expansion_coefficients(u0.rho, u0.a, u0.omega, n)
    rho_H, a_H, om_H = hermite_profile_state(coeffs, u0.rho.grid, u0.params, t)
    return CurlDivState(rho_H, a_H, om_H, u0.params)


def decompose(traj: Trajectory, u0: CurlDivState, n, quad_step=None,
              with_dealias=True, coeffs=None) -> Decomposition:
    """Split a trajectory into u_L, u_H, u_LR, u_HP, u_NR at its snapshot times."""
    if not 0 <= n <= 2:
        raise ValueError(f"weight n must lie in [0, 2], got {n}")
    u0 = u0.spectral()
    grid = u0.rho.grid
    params = u0.params
    if coeffs is None:
        coeffs = expansion_coefficients(u0.rho, u0.a, u0.omega, n)

    def u_H_at(t):
        rho_H, a_H, om_H = hermite_profile_state(coeffs, grid, params, t)
        return CurlDivState(rho_H, a_H, om_H, params)

    out = Decomposition(list(traj.times), {p: [] for p in PIECES})
    hp = _accumulate_hermite_picard(u_H_at, grid, params, traj.times,
                                    quad_step, with_dealias)
    for (t, state), u_HP in zip(traj, hp):
        u_L = linear_state(u0, t)
        u_H = u_H_at(t)
        u_LR = u_L - u_H
        u_NR = state - u_L - u_HP
        out.pieces["u"].append(state)
        out.pieces["u_L"].append(u_L)
        out.pieces["u_H"].append(u_H)
        out.pieces["u_LR"].append(u_LR)
        out.pieces["u_HP"].append(u_HP)
        out.pieces["u_NR"].append(u_NR)
    return out


def _accumulate_hermite_picard(u_H_at, grid, params, times, quad_step,
                               with_dealias):
    """u_HP at the requested times by propagated composite trapezoid."""
    if quad_step is None:
        diffs = np.diff(times)
        quad_step = float(np.min(diffs)) if len(diffs) else times[-1] or 1.0
    out = []
    acc = (ScalarField.zeros(grid, "spectral"),
           ScalarField.zeros(grid, "spectral"),
           VectorField3.zeros(grid, "spectral"))
    s_now = 0.0
    q_now = q_term(u_H_at(0.0), with_dealias=with_dealias)
    for t in times:
        while s_now < t - 1e-12:
            h = min(quad_step, t - s_now)
            flow = LinearFlow(grid, params, h)
            q_next = q_term(u_H_at(s_now + h), with_dealias=with_dealias)
            acc_prop = flow(*acc)
            q_prop = flow(*q_now)
            acc = tuple(acc_prop[i] + (h / 2.0) * (q_prop[i] + q_next[i])
                        for i in range(3))
            q_now = q_next
            s_now += h
        out.append(CurlDivState(-1.0 * acc[0], -1.0 * acc[1], -1.0 * acc[2],
                                params))
    return out


def state_l2(state: CurlDivState) -> float:
    """Combined L^2 magnitude sqrt(|rho|^2 + |a|^2 + sum |omega_i|^2)."""
    total = l2_norm(state.rho) ** 2 + l2_norm(state.a) ** 2
    total += sum(l2_norm(c) ** 2 for c in state.omega.components)
    return float(np.sqrt(total))


class DecompositionNormObserver:
    """Streams per-snapshot decomposition norms without retaining fields.

    Use as the ``observer`` of evolve: at each snapshot it advances the
    Hermite-Picard quadrature to the snapshot time, assembles all pieces, and
    stores only their norms.  The resulting ``series`` dict maps
    (piece, component) to [(t, norm)] and feeds analysis.theory_report.
    """

    def __init__(self, u0: CurlDivState, n, quad_step, norm_fn=l2_norm,
                 with_dealias=True, coeffs=None):
        self.u0 = u0.spectral()
        self.n = n
        self.norm_fn = norm_fn
        self.with_dealias = with_dealias
        self.quad_step = quad_step
        grid = self.u0.rho.grid
        self.grid = grid
        self.params = self.u0.params
        self.coeffs = coeffs if coeffs is not None else expansion_coefficients(
            self.u0.rho, self.u0.a, self.u0.omega, n)
        self._acc = (ScalarField.zeros(grid, "spectral"),
                     ScalarField.zeros(grid, "spectral"),
                     VectorField3.zeros(grid, "spectral"))
        self._s = 0.0
        self._q = q_term(self._u_H(0.0), with_dealias=with_dealias)
        self.series = {}

    def _u_H(self, t):
        rho_H, a_H, om_H = hermite_profile_state(self.coeffs, self.grid,
                                                 self.params, t)
        return CurlDivState(rho_H, a_H, om_H, self.params)

    def _advance_hp(self, t):
        while self._s < t - 1e-12:
            h = min(self.quad_step, t - self._s)
            flow = LinearFlow(self.grid, self.params, h)
            q_next = q_term(self._u_H(self._s + h), with_dealias=self.with_dealias)
            acc_prop = flow(*self._acc)
            q_prop = flow(*self._q)
            self._acc = tuple(acc_prop[i] + (h / 2.0) * (q_prop[i] + q_next[i])
                              for i in range(3))
            self._q = q_next
            self._s += h

    def _push(self, piece, t, state):
        for comp in ("rho", "a", "omega"):
            self.series.setdefault((piece, comp), []).append(
                (t, self.norm_fn(getattr(state, comp))))

    def __call__(self, t, state):
        self._advance_hp(t)
        u_L = linear_state(self.u0, t)
        u_H = self._u_H(t)
        u_HP = CurlDivState(-1.0 * self._acc[0], -1.0 * self._acc[1],
                            -1.0 * self._acc[2], self.params)
        u_N = state - u_L
        pieces = {
            "u": state, "u_L": u_L, "u_H": u_H, "u_LR": u_L - u_H,
            "u_HP": u_HP, "u_N": u_N, "u_NR": u_N - u_HP,
        }
        for piece, s in pieces.items():
            self._push(piece, t, s)
