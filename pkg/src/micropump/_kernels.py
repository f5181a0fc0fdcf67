"""Time-stepping kernel for the two-valve chamber model.

One fixed-step RK4 integrator advances both valve oscillators through whole
drive cycles. Seat and travel-stop contact is enforced by post-step
projection (position clamped, approaching velocity zeroed). The chamber
pressure follows from incompressible continuity through the two orifice
gaps, which for the shared square-root flow law has the closed-form split

    q_in  =  s * C_in  / (C_in + C_out)
    q_out = -s * C_out / (C_in + C_out)
    p     = -(rho / 2) * u * |u|,   u = s / (C_in + C_out)

with s the imposed chamber volume rate and C the conductance-area of each
valve gap (discharge coefficient times gap area plus seat leak).

This module is the hot path: sweeps and calibration call it thousands of
times. It is JIT-compiled via numba unless MICROPUMP_DISABLE_NUMBA is set.
"""

import math

import numpy as np

from ._accel import maybe_jit

# Convergence guard so a zero-flow cycle pair still registers as converged.
Q_FLOOR = 1e-15


@maybe_jit(cache=True)
def run_pump(
    m_in,
    c_in,
    k_in,
    m_out,
    c_out,
    k_out,
    width_in,
    width_out,
    face_area_in,
    face_area_out,
    orifice_in,
    orifice_out,
    leak_area,
    discharge_coeff,
    rho,
    force_amp,
    stroke_volume,
    omega,
    prescribed,
    checks_enabled,
    travel_limit,
    steps,
    max_cycles,
    conv_tol,
):
    period = 2.0 * math.pi / omega
    dt = period / steps

    y_i = 0.0
    v_i = 0.0
    y_o = 0.0
    v_o = 0.0

    t_arr = np.empty(steps + 1)
    yi_arr = np.empty(steps + 1)
    yo_arr = np.empty(steps + 1)
    p_arr = np.empty(steps + 1)
    qi_arr = np.empty(steps + 1)
    qo_arr = np.empty(steps + 1)

    def derivs(t, yi, vi, yo, vo):
        s = stroke_volume * omega * math.cos(omega * t)
        if checks_enabled:
            gap_i = min(max(yi, 0.0), travel_limit)
            gap_o = min(max(yo, 0.0), travel_limit)
        else:
            gap_i = abs(yi)
            gap_o = abs(yo)
        cond_i = discharge_coeff * (min(width_in * gap_i, orifice_in) + leak_area)
        cond_o = discharge_coeff * (min(width_out * gap_o, orifice_out) + leak_area)
        u = s / (cond_i + cond_o)
        p = -0.5 * rho * u * abs(u)
        q_i = s * cond_i / (cond_i + cond_o)
        q_o = -s * cond_o / (cond_i + cond_o)
        if prescribed:
            f_i = -force_amp * math.sin(omega * t)
            f_o = force_amp * math.sin(omega * t)
        else:
            f_i = -p * face_area_in
            f_o = p * face_area_out
        a_i = (f_i - c_in * vi - k_in * yi) / m_in
        a_o = (f_o - c_out * vo - k_out * yo) / m_out
        return vi, a_i, vo, a_o, p, q_i, q_o

    qnet = 0.0
    qnet_prev = 0.0
    have_prev = False
    converged = False
    cycles_run = 0

    for cyc in range(max_cycles):
        # The drive is exactly periodic, so every cycle uses the same local
        # phase grid; this avoids floating-point phase drift at large cycle
        # counts.
        for j in range(steps + 1):
            t = j * dt
            d1yi, d1vi, d1yo, d1vo, p, q_i, q_o = derivs(t, y_i, v_i, y_o, v_o)
            t_arr[j] = j * dt
            yi_arr[j] = y_i
            yo_arr[j] = y_o
            p_arr[j] = p
            qi_arr[j] = q_i
            qo_arr[j] = q_o
            if j == steps:
                break

            d2yi, d2vi, d2yo, d2vo, _, _, _ = derivs(
                t + 0.5 * dt,
                y_i + 0.5 * dt * d1yi,
                v_i + 0.5 * dt * d1vi,
                y_o + 0.5 * dt * d1yo,
                v_o + 0.5 * dt * d1vo,
            )
            d3yi, d3vi, d3yo, d3vo, _, _, _ = derivs(
                t + 0.5 * dt,
                y_i + 0.5 * dt * d2yi,
                v_i + 0.5 * dt * d2vi,
                y_o + 0.5 * dt * d2yo,
                v_o + 0.5 * dt * d2vo,
            )
            d4yi, d4vi, d4yo, d4vo, _, _, _ = derivs(
                t + dt,
                y_i + dt * d3yi,
                v_i + dt * d3vi,
                y_o + dt * d3yo,
                v_o + dt * d3vo,
            )
            y_i += dt / 6.0 * (d1yi + 2.0 * d2yi + 2.0 * d3yi + d4yi)
            v_i += dt / 6.0 * (d1vi + 2.0 * d2vi + 2.0 * d3vi + d4vi)
            y_o += dt / 6.0 * (d1yo + 2.0 * d2yo + 2.0 * d3yo + d4yo)
            v_o += dt / 6.0 * (d1vo + 2.0 * d2vo + 2.0 * d3vo + d4vo)

            if checks_enabled:
                if y_i < 0.0:
                    y_i = 0.0
                    if v_i < 0.0:
                        v_i = 0.0
                elif y_i > travel_limit:
                    y_i = travel_limit
                    if v_i > 0.0:
                        v_i = 0.0
                if y_o < 0.0:
                    y_o = 0.0
                    if v_o < 0.0:
                        v_o = 0.0
                elif y_o > travel_limit:
                    y_o = travel_limit
                    if v_o > 0.0:
                        v_o = 0.0

        cycles_run = cyc + 1

        acc = 0.5 * (qo_arr[0] + qo_arr[steps])
        for j in range(1, steps):
            acc += qo_arr[j]
        qnet = acc * dt / period

        if have_prev and abs(qnet - qnet_prev) < conv_tol * max(abs(qnet), Q_FLOOR):
            converged = True
            break
        qnet_prev = qnet
        have_prev = True

    return t_arr, yi_arr, yo_arr, p_arr, qi_arr, qo_arr, qnet, converged, cycles_run


@maybe_jit(cache=True)
def run_single_oscillator(m, c, k, force_amp, omega, steps, n_cycles):
    """Integrate m*y'' + c*y' + k*y = F*sin(w*t) from rest, contact-free.

    Returns the final-cycle (t, y) arrays with t relative to the cycle start.
    Shares the RK4 scheme with run_pump; used for oracle comparisons.
    """
    period = 2.0 * math.pi / omega
    dt = period / steps
    y = 0.0
    v = 0.0
    t_arr = np.empty(steps + 1)
    y_arr = np.empty(steps + 1)

    for cyc in range(n_cycles):
        for j in range(steps + 1):
            t = j * dt
            t_arr[j] = j * dt
            y_arr[j] = y
            if j == steps:
                break
            a1 = (force_amp * math.sin(omega * t) - c * v - k * y) / m
            y2 = y + 0.5 * dt * v
            v2 = v + 0.5 * dt * a1
            a2 = (force_amp * math.sin(omega * (t + 0.5 * dt)) - c * v2 - k * y2) / m
            y3 = y + 0.5 * dt * v2
            v3 = v + 0.5 * dt * a2
            a3 = (force_amp * math.sin(omega * (t + 0.5 * dt)) - c * v3 - k * y3) / m
            y4 = y + dt * v3
            v4 = v + dt * a3
            a4 = (force_amp * math.sin(omega * (t + dt)) - c * v4 - k * y4) / m
            y += dt / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4)
            v += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)

    return t_arr, y_arr
