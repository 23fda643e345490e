"""Hot numeric inner loops.

Everything in this module is written so numba's nopython mode compiles it
unchanged; :func:`qhjprop.backend.maybe_jit` applies ``@njit`` when the numba
backend is active and is a no-op under ``QHJPROP_BACKEND=numpy``.  Keep the
code free of python objects: scalars, ndarrays, and integer status codes only.

Contents:

* declarative coefficient evaluation (``coeff_value``),
* a Dormand-Prince 5(4) integrator with quartic dense output for the
  Euler-Lagrange system  d/dt[a(t) x'] + b(t) x = c(t),
* dense-output evaluation,
* a Crank-Nicolson sweep with a complex tridiagonal (Thomas) solve,
* the sequential complex-Gaussian elimination for the time-sliced kernel.
"""

import math

import numpy as np

from .backend import maybe_jit

OK = 0
ERR_NONPOSITIVE_MASS = 1
ERR_TOLERANCE = 2
ERR_DEGENERATE_SLICE = 3

KIND_CONSTANT = 0
KIND_EXPONENTIAL = 1
KIND_SINUSOID = 2
KIND_POLYNOMIAL = 3

# Dormand-Prince 5(4) tableau with Shampine's quartic interpolant.
_RK_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_RK_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
        [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
        [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
    ]
)
_RK_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
_RK_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_MAX_STEPS = 1_000_000


@maybe_jit
def coeff_value(kind, params, t):
    """Value of a declarative time coefficient at time t."""
    if kind == KIND_CONSTANT:
        return params[0]
    elif kind == KIND_EXPONENTIAL:
        return params[0] * math.exp(params[1] * t)
    elif kind == KIND_SINUSOID:
        return params[0] * math.sin(params[1] * t + params[2])
    acc = 0.0
    for i in range(params.shape[0] - 1, -1, -1):
        acc = acc * t + params[i]
    return acc


@maybe_jit
def _el_rhs(t, y, f, akind, apar, bkind, bpar, ckind, cpar, drive):
    """Right-hand side of the first-order Euler-Lagrange system.

    State layout: (u, pu, v, pv) with p = a(t) x' so that a(t) never needs
    differentiating; with drive also (w, pw, Ju, Jv, Jw) where the J's
    accumulate the drive integrals  int c*u, int c*v, int c*w.
    """
    a = coeff_value(akind, apar, t)
    if a <= 0.0:
        return ERR_NONPOSITIVE_MASS
    b = coeff_value(bkind, bpar, t)
    f[0] = y[1] / a
    f[1] = -b * y[0]
    f[2] = y[3] / a
    f[3] = -b * y[2]
    if drive:
        c = coeff_value(ckind, cpar, t)
        f[4] = y[5] / a
        f[5] = -b * y[4] + c
        f[6] = c * y[0]
        f[7] = c * y[2]
        f[8] = c * y[4]
    return OK


@maybe_jit
def rk_integrate(akind, apar, bkind, bpar, ckind, cpar, t_start, t_end, rtol, atol, drive):
    """Adaptive Dormand-Prince 5(4) solve of the Euler-Lagrange system.

    Returns (status, ts, ys, qs): node times ts[0..n], node states
    ys[0..n, dim], and per-step dense-output coefficients qs[0..n-1, dim, 4]
    such that  y(ts[i] + th*h_i) = ys[i] + h_i * sum_k qs[i,:,k] * th**(k+1).
    """
    dim = 9 if drive else 4
    span = t_end - t_start

    a0 = coeff_value(akind, apar, t_start)
    if a0 <= 0.0:
        return ERR_NONPOSITIVE_MASS, np.empty(0), np.empty((0, dim)), np.empty((0, dim, 4))

    y = np.zeros(dim)
    y[0] = 1.0  # u(tA) = 1, u'(tA) = 0
    y[3] = a0   # v(tA) = 0, v'(tA) = 1  =>  pv = a(tA)

    f0 = np.empty(dim)
    st = _el_rhs(t_start, y, f0, akind, apar, bkind, bpar, ckind, cpar, drive)
    if st != OK:
        return st, np.empty(0), np.empty((0, dim)), np.empty((0, dim, 4))

    # initial step: Hairer-Norsett-Wanner heuristic, clamped to the span
    d0 = 0.0
    d1 = 0.0
    for i in range(dim):
        sc = atol + rtol * abs(y[i])
        d0 += (y[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = math.sqrt(d0 / dim)
    d1 = math.sqrt(d1 / dim)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6 * span
    else:
        h = 0.01 * d0 / d1
    if h > span:
        h = span
    ytmp = np.empty(dim)
    ftmp = np.empty(dim)
    for i in range(dim):
        ytmp[i] = y[i] + h * f0[i]
    st = _el_rhs(t_start + h, ytmp, ftmp, akind, apar, bkind, bpar, ckind, cpar, drive)
    if st != OK:
        return st, np.empty(0), np.empty((0, dim)), np.empty((0, dim, 4))
    d2 = 0.0
    for i in range(dim):
        sc = atol + rtol * abs(y[i])
        d2 += ((ftmp[i] - f0[i]) / sc) ** 2
    d2 = math.sqrt(d2 / dim) / h
    dm = max(d1, d2)
    if dm > 1e-15:
        h1 = (0.01 / dm) ** 0.2
        h = min(100.0 * h, h1)
    h = min(h, span)

    cap = 512
    ts = np.empty(cap + 1)
    ys = np.empty((cap + 1, dim))
    qs = np.empty((cap, dim, 4))
    ts[0] = t_start
    for i in range(dim):
        ys[0, i] = y[i]

    K = np.empty((7, dim))
    for i in range(dim):
        K[0, i] = f0[i]

    t = t_start
    n = 0
    attempts = 0
    while t < t_end:
        attempts += 1
        if attempts > _MAX_STEPS:
            return ERR_TOLERANCE, ts[: n + 1].copy(), ys[: n + 1].copy(), qs[:n].copy()
        if h < 1e-15 * span:
            return ERR_TOLERANCE, ts[: n + 1].copy(), ys[: n + 1].copy(), qs[:n].copy()
        if t + h > t_end:
            h = t_end - t

        failed = False
        for s in range(1, 7):
            for i in range(dim):
                acc = 0.0
                for j in range(s):
                    acc += _RK_A[s, j] * K[j, i]
                ytmp[i] = y[i] + h * acc
            st = _el_rhs(t + _RK_C[s] * h, ytmp, K[s], akind, apar, bkind, bpar, ckind, cpar, drive)
            if st != OK:
                return st, ts[: n + 1].copy(), ys[: n + 1].copy(), qs[:n].copy()
        # stage 7's state is the 5th-order solution (FSAL)
        err = 0.0
        for i in range(dim):
            e = 0.0
            for s in range(7):
                e += _RK_E[s] * K[s, i]
            e *= h
            sc = atol + rtol * max(abs(y[i]), abs(ytmp[i]))
            err += (e / sc) ** 2
        err = math.sqrt(err / dim)

        if err <= 1.0:
            if n == cap:
                cap2 = 2 * cap
                ts2 = np.empty(cap2 + 1)
                ys2 = np.empty((cap2 + 1, dim))
                qs2 = np.empty((cap2, dim, 4))
                for i in range(n + 1):
                    ts2[i] = ts[i]
                    for k in range(dim):
                        ys2[i, k] = ys[i, k]
                for i in range(n):
                    for k in range(dim):
                        for m in range(4):
                            qs2[i, k, m] = qs[i, k, m]
                ts, ys, qs, cap = ts2, ys2, qs2, cap2
            for i in range(dim):
                for m in range(4):
                    acc = 0.0
                    for s in range(7):
                        acc += K[s, i] * _RK_P[s, m]
                    qs[n, i, m] = acc
            t = t + h
            n += 1
            ts[n] = t
            for i in range(dim):
                y[i] = ytmp[i]
                ys[n, i] = y[i]
                K[0, i] = K[6, i]
            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = min(_MAX_FACTOR, _SAFETY * err ** -0.2)
            h *= factor
        else:
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)

    return OK, ts[: n + 1].copy(), ys[: n + 1].copy(), qs[:n].copy()


@maybe_jit
def dense_eval(ts, ys, qs, t):
    """Evaluate the dense output of rk_integrate at a single time."""
    n = qs.shape[0]
    dim = ys.shape[1]
    out = np.empty(dim)
    if t <= ts[0]:
        idx = 0
    elif t >= ts[n]:
        idx = n - 1
    else:
        lo = 0
        hi = n
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ts[mid] <= t:
                lo = mid
            else:
                hi = mid
        idx = lo
    h = ts[idx + 1] - ts[idx]
    th = (t - ts[idx]) / h
    p1 = th
    p2 = th * p1
    p3 = th * p2
    p4 = th * p3
    for k in range(dim):
        out[k] = ys[idx, k] + h * (
            qs[idx, k, 0] * p1 + qs[idx, k, 1] * p2 + qs[idx, k, 2] * p3 + qs[idx, k, 3] * p4
        )
    return out


@maybe_jit
def dense_eval_many(ts, ys, qs, tq):
    """Dense-output evaluation at an array of times; rows follow tq."""
    m = tq.shape[0]
    dim = ys.shape[1]
    out = np.empty((m, dim))
    for r in range(m):
        row = dense_eval(ts, ys, qs, tq[r])
        for k in range(dim):
            out[r, k] = row[k]
    return out


@maybe_jit
def cn_evolve(xgrid, psi0, t_start, dt, steps, akind, apar, bkind, bpar, ckind, cpar, hbar):
    """Crank-Nicolson evolution on a uniform grid with Dirichlet edges.

    Coefficients are sampled at the half step; each step solves a complex
    tridiagonal system by the Thomas algorithm.  Returns (psi, status).
    """
    npts = xgrid.shape[0]
    m = npts - 2
    h = xgrid[1] - xgrid[0]
    psi = psi0.copy()
    psi[0] = 0.0 + 0.0j
    psi[npts - 1] = 0.0 + 0.0j

    dg = np.empty(m, np.complex128)
    rhs = np.empty(m, np.complex128)
    cp = np.empty(m, np.complex128)

    for k in range(steps):
        th = t_start + (k + 0.5) * dt
        a = coeff_value(akind, apar, th)
        if a <= 0.0:
            return psi, ERR_NONPOSITIVE_MASS
        b = coeff_value(bkind, bpar, th)
        c = coeff_value(ckind, cpar, th)
        kin = hbar * hbar / (2.0 * a)
        lam = 0.5j * dt / hbar
        offd = lam * (-kin / (h * h))

        for i in range(m):
            x = xgrid[i + 1]
            hd = 2.0 * kin / (h * h) + 0.5 * b * x * x - c * x
            dg[i] = 1.0 + lam * hd
            # rhs = (1 - lam*H) psi on the interior
            acc = (2.0 - dg[i]) * psi[i + 1] - offd * (psi[i] + psi[i + 2])
            rhs[i] = acc

        cp[0] = offd / dg[0]
        rhs[0] = rhs[0] / dg[0]
        for i in range(1, m):
            denom = dg[i] - offd * cp[i - 1]
            cp[i] = offd / denom
            rhs[i] = (rhs[i] - offd * rhs[i - 1]) / denom
        psi[m] = rhs[m - 1]
        for i in range(m - 2, -1, -1):
            psi[i + 1] = rhs[i] - cp[i] * psi[i + 2]

    return psi, OK


RULE_ENDPOINT = 0
RULE_MIDPOINT = 1


@maybe_jit
def _slice_terms(akind, apar, bkind, bpar, ckind, cpar, t_left, eps, rule):
    """Quadratic contribution of one slice to the discrete action.

    Returns (a, al, ar, g, dl, dr, status) so the slice's exponent is
    al*x_k^2 + ar*x_{k+1}^2 + g*x_k*x_{k+1} + dl*x_k + dr*x_{k+1}.

    Endpoint rule: coefficients at t_k, potential and drive carried entirely
    by x_k; first order.  Midpoint rule: coefficients at t_k + eps/2 with the
    potential and drive split evenly between the slice ends (the symmetric
    exp(-i eps V/2) G exp(-i eps V/2) decomposition); second order.
    """
    if rule == RULE_ENDPOINT:
        t_s = t_left
    else:
        t_s = t_left + 0.5 * eps
    a = coeff_value(akind, apar, t_s)
    if a <= 0.0:
        return 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, ERR_NONPOSITIVE_MASS
    b = coeff_value(bkind, bpar, t_s)
    c = coeff_value(ckind, cpar, t_s)
    link = a / (2.0 * eps)
    if rule == RULE_ENDPOINT:
        return a, link - 0.5 * eps * b, link, -a / eps, eps * c, 0.0, OK
    return (
        a,
        link - 0.25 * eps * b,
        link - 0.25 * eps * b,
        -a / eps,
        0.5 * eps * c,
        0.5 * eps * c,
        OK,
    )


@maybe_jit
def sliced_kernel(akind, apar, bkind, bpar, ckind, cpar, t_start, t_end, n_slices, x_a, x_b, hbar, rule):
    """Time-sliced kernel by exact sequential complex-Gaussian elimination.

    The default discrete action is the left-endpoint rule,
    S_N = sum_k eps*[ a(t_k) (x_{k+1}-x_k)^2/(2 eps^2) - b(t_k) x_k^2/2 + c(t_k) x_k ],
    with prefactor prod_k sqrt(a(t_k)/(2 pi i hbar eps)); rule=RULE_MIDPOINT
    selects the second-order variant.  Interior points are integrated out
    left to right; the running exponent (i/hbar)(p x^2 + q x + r) stays real
    in (p, q, r) because the discrete action is real.  Per-slice prefactors
    are folded in each step to keep the running product O(1).
    Returns (K, status).
    """
    eps = (t_end - t_start) / n_slices
    two_pi_ih = 2j * np.pi * hbar

    a0, al, ar, g, dl, dr, st = _slice_terms(akind, apar, bkind, bpar, ckind, cpar, t_start, eps, rule)
    if st != OK:
        return 0.0j, st
    pref = np.sqrt(a0 / (two_pi_ih * eps))
    p = ar
    q = g * x_a + dr
    r = al * x_a * x_a + dl * x_a

    for j in range(1, n_slices):
        tj = t_start + eps * j
        aj, al, ar, g, dl, dr, st = _slice_terms(akind, apar, bkind, bpar, ckind, cpar, tj, eps, rule)
        if st != OK:
            return 0.0j, st
        P = p + al
        q = q + dl
        if abs(P) < 1e-12 * (abs(p) + abs(al)):
            return 0.0j, ERR_DEGENERATE_SLICE
        pref *= np.sqrt(aj / (two_pi_ih * eps)) * np.sqrt(1j * np.pi * hbar / P)
        r -= q * q / (4.0 * P)
        qn = -q * g / (2.0 * P) + dr
        p = ar - g * g / (4.0 * P)
        q = qn
    K = pref * np.exp(1j * (p * x_b * x_b + q * x_b + r) / hbar)
    return K, OK
