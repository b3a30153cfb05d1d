"""Three-DOF MMG maneuvering model with a rate-limited rudder.

All quantities are prime-II nondimensional: lengths in ship lengths,
velocities in design speed U, time in L/U, forces in 0.5 rho U^2 L T and
moments in 0.5 rho U^2 L^2 T. The body frame has x to the bow and y to
starboard with its origin at midship; the global frame is x north, y east.

Equations of motion (midship origin)::

    (m+m_x) u' - (m+m_y) v r - m x_G r^2      = X_H + X_P + X_R + X_ext
    (m+m_y) v' + (m+m_x) u r + m x_G r'       = Y_H + Y_R + Y_ext
    (I_zz+J_zz+m x_G^2) r' + m x_G (v' + u r) = N_H + N_R + N_ext
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple, Union

import numpy as np
from scipy.optimize import brentq

from .ship import ShipModel


class VesselState(NamedTuple):
    x_o: float = 0.0
    y_o: float = 0.0
    psi: float = 0.0
    u: float = 1.0
    v: float = 0.0
    r: float = 0.0
    delta: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


class ControlInput(NamedTuple):
    delta_c: float
    n_prop: float


class BodyLoads(NamedTuple):
    X: float = 0.0
    Y: float = 0.0
    N: float = 0.0


ZERO_LOADS = BodyLoads()

ExternalLoads = Union[BodyLoads, Callable[[VesselState], BodyLoads], None]


class IntegrationError(RuntimeError):
    """Non-finite derivative encountered; ``state`` is the offending state."""

    def __init__(self, message: str, state: VesselState):
        super().__init__(f"{message}: {state!r}")
        self.state = state


def rotation_matrix(psi: float) -> np.ndarray:
    """Body-to-global rotation about the vertical axis."""
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def kinematics(state: VesselState) -> tuple[float, float, float]:
    """Global-frame rates (x_o', y_o', psi') of the body velocities."""
    c, s = math.cos(state.psi), math.sin(state.psi)
    return (c * state.u - s * state.v, s * state.u + c * state.v, state.r)


def drift_angle(u: float, v: float) -> float:
    """Drift angle beta = atan(-v/u); zero at rest by convention."""
    if u == 0.0 and v == 0.0:
        return 0.0
    return math.atan2(-v, u)


def hull_forces(model: ShipModel, u: float, v: float, r: float) -> BodyLoads:
    """Cubic MMG hull polynomial, rescaled from instantaneous to design speed.

    The polynomial is defined in v' = v/U_t and r' = r/U_t with U_t the
    instantaneous speed, so each load carries a factor U_t^2. At rest the
    polynomial is undefined and zero load is returned.
    """
    h = model.hull
    U2 = u * u + v * v
    if U2 == 0.0:
        return ZERO_LOADS
    Ut = math.sqrt(U2)
    vp = v / Ut
    rp = r / Ut
    vp2 = vp * vp
    rp2 = rp * rp
    X = -h.R0 + h.X_vv * vp2 + h.X_vr * vp * rp + h.X_rr * rp2 + h.X_vvvv * vp2 * vp2
    Y = (
        h.Y_v * vp
        + h.Y_r * rp
        + h.Y_vvv * vp2 * vp
        + h.Y_vvr * vp2 * rp
        + h.Y_vrr * vp * rp2
        + h.Y_rrr * rp2 * rp
    )
    N = (
        h.N_v * vp
        + h.N_r * rp
        + h.N_vvv * vp2 * vp
        + h.N_vvr * vp2 * rp
        + h.N_vrr * vp * rp2
        + h.N_rrr * rp2 * rp
    )
    return BodyLoads(X * U2, Y * U2, N * U2)


def _propeller_inflow(model: ShipModel, u: float, v: float, r: float, n: float):
    """Returns (u_P, K_T, thrust) with thrust nondimensional."""
    p = model.propeller
    U2 = u * u + v * v
    if U2 > 0.0:
        Ut = math.sqrt(U2)
        beta_P = math.atan2(-v, u) - p.x_P * r / Ut
    else:
        beta_P = 0.0
    w_P = p.w_P0 * math.exp(-p.C_wake * beta_P * beta_P)
    u_P = (1.0 - w_P) * u
    D = model.D
    if n == 0.0:
        return u_P, 0.0, 0.0
    J = u_P / (n * D)
    K_T = p.k0 + p.k1 * J + p.k2 * J * J
    thrust = 2.0 * model.L_over_T * n * n * D**4 * K_T
    return u_P, K_T, thrust


def propeller_force(model: ShipModel, u: float, v: float, r: float, n: float) -> float:
    """Effective propeller surge force X_P = (1 - t_P) T."""
    _, _, thrust = _propeller_inflow(model, u, v, r, n)
    return (1.0 - model.propeller.t_P) * thrust


def rudder_forces(
    model: ShipModel, u: float, v: float, r: float, delta: float, n: float
) -> BodyLoads:
    """MMG rudder normal-force model with hull interaction."""
    rc = model.rudder
    u_P, K_T, _ = _propeller_inflow(model, u, v, r, n)
    # Propeller race: u_P * sqrt(1 + 8 K_T / (pi J^2)) written without J so
    # that it stays finite at zero speed.
    race2 = u_P * u_P + 8.0 * max(K_T, 0.0) * (n * model.D) ** 2 / math.pi
    inner = (1.0 - rc.kappa) * u_P + rc.kappa * math.sqrt(race2)
    u_R = rc.epsilon * math.sqrt(rc.eta * inner * inner + (1.0 - rc.eta) * u_P * u_P)
    U2 = u * u + v * v
    if U2 > 0.0:
        Ut = math.sqrt(U2)
        beta_R = math.atan2(-v, u) - rc.l_R * r / Ut
        v_R = Ut * rc.gamma_R * beta_R
    else:
        v_R = 0.0
    if u_R == 0.0 and v_R == 0.0:
        return ZERO_LOADS
    alpha_R = delta - math.atan2(v_R, u_R)
    F_N = rc.A_R * rc.f_alpha * (u_R * u_R + v_R * v_R) * math.sin(alpha_R)
    cd, sd = math.cos(delta), math.sin(delta)
    X = -(1.0 - rc.t_R) * F_N * sd
    Y = -(1.0 + rc.a_H) * F_N * cd
    N = -(rc.x_R + rc.a_H * rc.x_H) * F_N * cd
    return BodyLoads(X, Y, N)


def mmg_derivatives(
    model: ShipModel,
    state: VesselState,
    ctrl: ControlInput,
    external: BodyLoads = ZERO_LOADS,
) -> tuple[float, float, float]:
    """Body accelerations (u', v', r') for the current state and loads.

    The rudder enters at its actual angle ``state.delta``; ``ctrl`` supplies
    the propeller rate only (the command is handled by :func:`rudder_step`).
    """
    ms = model.masses
    u, v, r, delta = state.u, state.v, state.r, state.delta
    n = ctrl.n_prop
    H = hull_forces(model, u, v, r)
    X_P = propeller_force(model, u, v, r, n)
    R = rudder_forces(model, u, v, r, delta, n)
    X = H.X + X_P + R.X + external.X
    Y = H.Y + R.Y + external.Y
    N = H.N + R.N + external.N

    m, xG = ms.m, ms.x_G
    mxG = m * xG
    u_dot = (X + (m + ms.m_y) * v * r + mxG * r * r) / (m + ms.m_x)
    # 2x2 sway-yaw system
    a11 = m + ms.m_y
    a12 = mxG
    a22 = ms.I_zz + ms.J_zz + m * xG * xG
    b1 = Y - (m + ms.m_x) * u * r
    b2 = N - mxG * u * r
    det = a11 * a22 - a12 * a12
    assert det > 0.0, "singular sway-yaw mass matrix"
    v_dot = (a22 * b1 - a12 * b2) / det
    r_dot = (a11 * b2 - a12 * b1) / det
    return u_dot, v_dot, r_dot


def rudder_step(delta: float, delta_c: float, h: float, model: ShipModel) -> float:
    """Advance the rudder angle over ``h`` nondimensional time units.

    Exact solution of delta' = clamp((delta_c - delta)/T_E, +-rate_max):
    constant-rate slewing while the error exceeds rate_max*T_E, then
    exponential approach.
    """
    if not h > 0.0:
        raise ValueError(f"rudder step needs h > 0, got {h}")
    dmax = model.delta_max
    delta_c = min(max(delta_c, -dmax), dmax)
    T_E = model.rudder.T_E
    rate = model.rudder_rate_max
    err = delta_c - delta
    band = rate * T_E
    sgn = 1.0 if err >= 0.0 else -1.0
    if abs(err) > band:
        t_sat = (abs(err) - band) / rate
        if h <= t_sat:
            new = delta + sgn * rate * h
        else:
            new = delta_c - sgn * band * math.exp(-(h - t_sat) / T_E)
    else:
        new = delta_c - err * math.exp(-h / T_E)
    return min(max(new, -dmax), dmax)


def rk4(f: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray, h: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of y' = f(t, y)."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def state_derivative(
    model: ShipModel, state: VesselState, ctrl: ControlInput, external: ExternalLoads = None
) -> np.ndarray:
    """(x_o', y_o', psi', u', v', r') for a full state."""
    if external is None:
        loads = ZERO_LOADS
    elif callable(external):
        loads = external(state)
    else:
        loads = external
    xd, yd, psid = kinematics(state)
    ud, vd, rd = mmg_derivatives(model, state, ctrl, loads)
    out = np.array((xd, yd, psid, ud, vd, rd))
    if not np.all(np.isfinite(out)):
        raise IntegrationError("non-finite state derivative", state)
    return out


def rk4_step(
    model: ShipModel,
    state: VesselState,
    ctrl: ControlInput,
    h: float,
    external: ExternalLoads = None,
) -> VesselState:
    """Advance the vessel by ``h`` with RK4.

    The rudder is decoupled from the hull states, so its exact trajectory
    (see :func:`rudder_step`) is sampled at each stage time; this keeps the
    scheme fourth-order while the rudder is moving smoothly.
    ``external`` is either constant loads or a callable of the stage state
    (wind).
    """
    if not h > 0.0:
        raise ValueError(f"integration step must be positive, got {h}")
    delta0 = state.delta
    rudder_at = {
        0.0: delta0,
        0.5 * h: rudder_step(delta0, ctrl.delta_c, 0.5 * h, model),
        h: rudder_step(delta0, ctrl.delta_c, h, model),
    }

    def f(tau: float, y: np.ndarray) -> np.ndarray:
        s = VesselState(*y.tolist(), rudder_at[tau])
        return state_derivative(model, s, ctrl, external)

    y = rk4(f, 0.0, np.array(state[:6], dtype=float), h)
    new = VesselState(*y.tolist(), rudder_at[h])
    if not all(math.isfinite(x) for x in new):
        raise IntegrationError("non-finite state after step", state)
    return new


def simulate(
    model: ShipModel,
    state: VesselState,
    delta_c: float,
    duration: float,
    h: float = 0.1,
    n_prop: float | None = None,
    external: ExternalLoads = None,
) -> list[VesselState]:
    """Fixed-command run; returns the state after every substep (incl. start)."""
    n = model.n_self_propulsion if n_prop is None else n_prop
    ctrl = ControlInput(delta_c, n)
    steps = int(round(duration / h))
    out = [state]
    for _ in range(steps):
        state = rk4_step(model, state, ctrl, h, external)
        out.append(state)
    return out


def surge_force_straight(model: ShipModel, n: float, u: float = 1.0) -> float:
    """Total surge force in straight, undisturbed motion at speed ``u``."""
    return hull_forces(model, u, 0.0, 0.0).X + propeller_force(model, u, 0.0, 0.0, n)


def self_propulsion_rate(model: ShipModel, tol: float = 1e-10) -> float:
    """Propeller rate balancing resistance at design speed (u=1)."""
    f = lambda n: surge_force_straight(model, n)
    lo, hi = 1.0, 10.0
    while f(hi) < 0.0:
        hi *= 2.0
        if hi > 1e5:
            raise ValueError("no self-propulsion point: thrust never exceeds resistance")
    return brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps)
