"""Compiled RK4 loop for the full dynamics.

Mirrors :func:`beaconpursuit.dynamics.step` operation for operation on a
packed state ``(batch, 2, 4, 3)`` whose rows are ``r, x, y, z`` of each
agent. The numpy implementation stays the reference; tests compare both.
"""
import numba
import numpy as np

SINGULAR_TOL = 1e-9


@numba.njit(cache=True, inline="always")
def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@numba.njit(cache=True)
def _inputs(s, beacon, mu, mu_b, a, a_b, lam, out):
    """Write ``(u, v)`` of both agents into ``out`` (2, 2); False if singular."""
    e = np.empty(3)
    eb = np.empty(3)
    w = np.empty(3)
    rd = np.empty(3)
    for i in range(2):
        j = 1 - i
        for k in range(3):
            e[k] = s[i, 0, k] - s[j, 0, k]
            eb[k] = s[i, 0, k] - beacon[k]
            rd[k] = s[i, 1, k] - s[j, 1, k]
        rho = np.sqrt(_dot(e, e))
        rho_b = np.sqrt(_dot(eb, eb))
        if not (rho >= SINGULAR_TOL and rho_b >= SINGULAR_TOL):
            return False
        for k in range(3):
            e[k] /= rho
            eb[k] /= rho_b
        w[0] = rd[1] * e[2] - rd[2] * e[1]
        w[1] = rd[2] * e[0] - rd[0] * e[2]
        w[2] = rd[0] * e[1] - rd[1] * e[0]
        x = s[i, 1]
        y = s[i, 2]
        z = s[i, 3]
        gain = -mu[i] * (_dot(x, e) - a[i])
        u_cb = gain * _dot(y, e) - _dot(z, w) / rho
        v_cb = gain * _dot(z, e) + _dot(y, w) / rho
        gain_b = -mu_b[i] * (_dot(x, eb) - a_b[i])
        u_b = gain_b * _dot(y, eb)
        v_b = gain_b * _dot(z, eb)
        out[i, 0] = (1 - lam) * u_cb + lam * u_b
        out[i, 1] = (1 - lam) * v_cb + lam * v_b
    return True


@numba.njit(cache=True)
def _deriv(s, uv, out):
    for i in range(2):
        u = uv[i, 0]
        v = uv[i, 1]
        for k in range(3):
            out[i, 0, k] = s[i, 1, k]
            out[i, 1, k] = u * s[i, 2, k] + v * s[i, 3, k]
            out[i, 2, k] = -u * s[i, 1, k]
            out[i, 3, k] = -v * s[i, 1, k]


@numba.njit(cache=True)
def _renormalize(s):
    for i in range(2):
        x = s[i, 1]
        y = s[i, 2]
        n = np.sqrt(_dot(x, x))
        for k in range(3):
            x[k] /= n
        d = _dot(y, x)
        for k in range(3):
            y[k] -= d * x[k]
        n = np.sqrt(_dot(y, y))
        for k in range(3):
            y[k] /= n
        s[i, 3, 0] = x[1] * y[2] - x[2] * y[1]
        s[i, 3, 1] = x[2] * y[0] - x[0] * y[2]
        s[i, 3, 2] = x[0] * y[1] - x[1] * y[0]


@numba.njit(cache=True)
def _step(s, beacon, mu, mu_b, a, a_b, lam, dt, work):
    k1, k2, k3, k4, tmp, uv = work
    if not _inputs(s, beacon, mu, mu_b, a, a_b, lam, uv):
        return False
    _deriv(s, uv, k1)
    tmp[:] = s + 0.5 * dt * k1
    if not _inputs(tmp, beacon, mu, mu_b, a, a_b, lam, uv):
        return False
    _deriv(tmp, uv, k2)
    tmp[:] = s + 0.5 * dt * k2
    if not _inputs(tmp, beacon, mu, mu_b, a, a_b, lam, uv):
        return False
    _deriv(tmp, uv, k3)
    tmp[:] = s + dt * k3
    if not _inputs(tmp, beacon, mu, mu_b, a, a_b, lam, uv):
        return False
    _deriv(tmp, uv, k4)
    s += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _renormalize(s)
    return True


@numba.njit(cache=True)
def run(s0, beacon, mu, mu_b, a, a_b, lam, dt, n_steps, stride, states, inputs, steps_done):
    """Integrate a batch, recording every ``stride``-th step.

    Fills ``states`` (m, B, 2, 4, 3) and ``inputs`` (m, B, 2, 2) and returns the
    number of recorded samples; ``steps_done[0]`` receives the number of
    completed steps (short of ``n_steps`` if a member went singular).
    """
    nb = s0.shape[0]
    work = (
        np.empty((2, 4, 3)), np.empty((2, 4, 3)), np.empty((2, 4, 3)),
        np.empty((2, 4, 3)), np.empty((2, 4, 3)), np.empty((2, 2)),
    )
    uv = np.empty((2, 2))
    cur = s0.copy()
    steps_done[0] = 0
    for b in range(nb):
        if not _inputs(cur[b], beacon[b], mu, mu_b, a, a_b, lam, uv):
            return 0
        inputs[0, b] = uv
    states[0] = cur
    m = 1
    for n in range(1, n_steps + 1):
        for b in range(nb):
            if not _step(cur[b], beacon[b], mu, mu_b, a, a_b, lam, dt, work):
                return m
            if not _inputs(cur[b], beacon[b], mu, mu_b, a, a_b, lam, uv):
                return m
            if n % stride == 0:
                inputs[m, b] = uv
        steps_done[0] = n
        if n % stride == 0:
            states[m] = cur
            m += 1
    return m


# ---------------------------------------------------------------------------
# reduced (shape) dynamics


@numba.njit(cache=True)
def _shape_rates(y, mu, lam, a, a0, out):
    """Mirror of :func:`beaconpursuit.shape.shape_rates` for one 8-vector; False if singular."""
    rho, r1b, r2b, x1, x2, x1b, x2b, xt = y[0], y[1], y[2], y[3], y[4], y[5], y[6], y[7]
    if not min(min(rho, r1b), r2b) >= SINGULAR_TOL:
        return False
    lm = 1.0 - lam
    c1 = (r1b**2 + rho**2 - r2b**2) / (2 * rho * r1b)
    c2 = (r2b**2 + rho**2 - r1b**2) / (2 * rho * r2b)
    g1 = mu * (x1 - a) + (1 - xt) / rho
    g2 = mu * (x2 - a) + (1 - xt) / rho
    b1 = lam * mu * (x1b - a0)
    b2 = lam * mu * (x2b - a0)
    out[0] = x1 + x2
    out[1] = x1b
    out[2] = x2b
    out[3] = (
        lam / rho * (1 - xt - x1**2 - x1 * x2)
        - lm * mu * (x1 - a) * (1 - x1**2)
        - b1 * (c1 - x1b * x1)
    )
    out[4] = (
        lam / rho * (1 - xt - x2**2 - x1 * x2)
        - lm * mu * (x2 - a) * (1 - x2**2)
        - b2 * (c2 - x2b * x2)
    )
    out[5] = (
        -lm * g1 * (c1 - x1b * x1)
        - lm * x1 / rho * ((r2b / r1b) * x2b - (rho / r1b) * x2 - x1b * xt)
        - (b1 - 1 / r1b) * (1 - x1b**2)
    )
    out[6] = (
        -lm * g2 * (c2 - x2b * x2)
        - lm * x2 / rho * ((r1b / r2b) * x1b - (rho / r2b) * x1 - x2b * xt)
        - (b2 - 1 / r2b) * (1 - x2b**2)
    )
    out[7] = (
        -b2 * (-(rho / r2b) * x1 + (r1b / r2b) * x1b - x2b * xt)
        - b1 * ((r2b / r1b) * x2b - (rho / r1b) * x2 - x1b * xt)
        - lm * (g1 * (-x2 - xt * x1) + x1 * (1 - xt**2) / rho)
        - lm * (x2 * (1 - xt**2) / rho + g2 * (-x1 - xt * x2))
    )
    return True


@numba.njit(cache=True)
def shape_rk4(y0, mu, lam, a, a0, dt, n_steps, out):
    """RK4 on a batch ``y0`` (n, 8), writing samples to ``out`` (n_steps + 1, n, 8).

    Returns the number of completed steps; fewer than ``n_steps`` means some
    member reached a singular shape (every member stops together).
    """
    n = y0.shape[0]
    k1 = np.empty(8)
    k2 = np.empty(8)
    k3 = np.empty(8)
    k4 = np.empty(8)
    tmp = np.empty(8)
    out[0] = y0
    for step in range(1, n_steps + 1):
        for m in range(n):
            y = out[step - 1, m]
            ok = _shape_rates(y, mu, lam, a, a0, k1)
            for q in range(8):
                tmp[q] = y[q] + 0.5 * dt * k1[q]
            ok = ok and _shape_rates(tmp, mu, lam, a, a0, k2)
            for q in range(8):
                tmp[q] = y[q] + 0.5 * dt * k2[q]
            ok = ok and _shape_rates(tmp, mu, lam, a, a0, k3)
            for q in range(8):
                tmp[q] = y[q] + dt * k3[q]
            ok = ok and _shape_rates(tmp, mu, lam, a, a0, k4)
            if not ok:
                return step - 1
            for q in range(8):
                out[step, m, q] = y[q] + dt / 6.0 * (k1[q] + 2 * k2[q] + 2 * k3[q] + k4[q])
    return n_steps
