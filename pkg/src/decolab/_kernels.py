"""Hot numeric kernels (2x2 algebra, NTME right-hand side, RK stepper).

Everything here is written in the numba-compatible subset of numpy and is
compiled with ``@njit`` unless ``DECOLAB_DISABLE_JIT`` is set. Kernels never
raise; they report failures through integer status codes that the Python
wrappers translate into exceptions.
"""
import numpy as np

from ._jit import njit

OK = 0
RANK_DEFICIENT = 1

# integrator status codes
DONE = 0
BUFFER_FULL = 1
STEP_RANK = 2
STEP_UNDERFLOW = 3
REACHED_TARGET = 4
MAX_STEPS = 5


@njit
def mm2(a, b):
    out = np.empty((2, 2), dtype=np.complex128)
    for i in range(2):
        for j in range(2):
            out[i, j] = a[i, 0] * b[0, j] + a[i, 1] * b[1, j]
    return out


@njit
def dag2(a):
    out = np.empty((2, 2), dtype=np.complex128)
    for i in range(2):
        for j in range(2):
            out[i, j] = np.conj(a[j, i])
    return out


@njit
def comm2(a, b):
    return mm2(a, b) - mm2(b, a)


@njit
def eigh2(m):
    """Closed-form eigendecomposition of a Hermitian 2x2 matrix.

    Returns ascending eigenvalues and a unitary whose columns are the
    eigenvectors. Only the upper triangle and the real diagonal are read.
    """
    a = m[0, 0].real
    d = m[1, 1].real
    b = m[0, 1]
    mean = 0.5 * (a + d)
    half = 0.5 * (a - d)
    r = np.sqrt(half * half + b.real * b.real + b.imag * b.imag)
    w = np.empty(2)
    w[0] = mean - r
    w[1] = mean + r
    u = np.zeros((2, 2), dtype=np.complex128)
    if r == 0.0:
        u[0, 0] = 1.0
        u[1, 1] = 1.0
        return w, u
    # eigenvector of the upper eigenvalue, built from the better-conditioned row
    if half >= 0.0:
        v0 = r + half + 0j
        v1 = np.conj(b)
    else:
        v0 = b
        v1 = r - half + 0j
    n = np.sqrt(v0.real * v0.real + v0.imag * v0.imag + v1.real * v1.real + v1.imag * v1.imag)
    v0 = v0 / n
    v1 = v1 / n
    u[0, 1] = v0
    u[1, 1] = v1
    u[0, 0] = -np.conj(v1)
    u[1, 0] = np.conj(v0)
    return w, u


@njit
def kubo_weight(c, lpi, lpj, pj, series_tol):
    """int_0^1 e^{-lam c} p_i^lam p_j^(1-lam) dlam, from logs of p_i, p_j."""
    s = lpi - lpj - c
    if abs(s) < series_tol:
        return pj * (1.0 + 0.5 * s)
    return pj * np.expm1(s) / s


@njit
def lambda_integral_eig(p, u, x, c, series_tol):
    """int_0^1 e^{-lam c} rho^lam X rho^(1-lam) with rho = U diag(p) U^dag."""
    ud = dag2(u)
    xe = mm2(ud, mm2(x, u))
    lp = np.log(p)
    for i in range(2):
        for j in range(2):
            xe[i, j] = xe[i, j] * kubo_weight(c, lp[i], lp[j], p[j], series_tol)
    return mm2(u, mm2(xe, ud))


@njit
def ntme_rhs_into(rho, energies, bohr, omegas, rates, beta, floor, series_tol, out):
    """Write d rho/dt of the nonlinear thermodynamic master equation into ``out``.

    ``bohr[k]`` is the eigenoperator for Bohr frequency ``omegas[k]`` and
    ``rates[k]`` the spectral function there. Returns RANK_DEFICIENT without
    touching ``out`` when the smallest eigenvalue of rho is below ``floor``.
    """
    p, u = eigh2(rho)
    if p[0] < floor:
        return RANK_DEFICIENT
    ud = dag2(u)
    lp = np.log(p)
    # G = S(rho) - beta H_S with S(rho) = -ln rho
    g = np.zeros((2, 2), dtype=np.complex128)
    for i in range(2):
        for j in range(2):
            g[i, j] = -(u[i, 0] * lp[0] * ud[0, j] + u[i, 1] * lp[1] * ud[1, j])
        g[i, i] -= beta * energies[i]
    for i in range(2):
        for j in range(2):
            out[i, j] = -1j * (energies[i] - energies[j]) * rho[i, j]
    n = omegas.shape[0]
    for kb in range(n):
        if rates[kb] == 0.0:
            continue
        xe = mm2(ud, mm2(comm2(bohr[kb], g), u))
        for ka in range(n):
            if rates[ka] == 0.0:
                continue
            w = 0.5 * np.sqrt(rates[ka] * rates[kb])
            c = 0.5 * beta * (omegas[ka] + omegas[kb])
            ye = np.empty((2, 2), dtype=np.complex128)
            for i in range(2):
                for j in range(2):
                    ye[i, j] = xe[i, j] * kubo_weight(c, lp[i], lp[j], p[j], series_tol)
            y = mm2(u, mm2(ye, ud))
            term = comm2(dag2(bohr[ka]), y)
            for i in range(2):
                for j in range(2):
                    out[i, j] += w * term[i, j]
    return OK


@njit
def bloch_to_rho(v):
    rho = np.empty((2, 2), dtype=np.complex128)
    rho[0, 0] = 0.5 * (1.0 + v[2])
    rho[1, 1] = 0.5 * (1.0 - v[2])
    rho[0, 1] = 0.5 * (v[0] - 1j * v[1])
    rho[1, 0] = 0.5 * (v[0] + 1j * v[1])
    return rho


@njit
def bloch_rhs(v, energies, bohr, omegas, rates, beta, floor, series_tol, dv):
    out = np.empty((2, 2), dtype=np.complex128)
    status = ntme_rhs_into(bloch_to_rho(v), energies, bohr, omegas, rates, beta,
                           floor, series_tol, out)
    if status != OK:
        return status
    dv[0] = 2.0 * out[0, 1].real
    dv[1] = -2.0 * out[0, 1].imag
    dv[2] = out[0, 0].real - out[1, 1].real
    return OK


@njit
def bloch_free_energy(v, energies, beta):
    r = np.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    pp = 0.5 * (1.0 + r)
    pm = 0.5 * (1.0 - r)
    s = 0.0
    if pp > 0.0:
        s -= pp * np.log(pp)
    if pm > 0.0:
        s -= pm * np.log(pm)
    e = 0.5 * (energies[0] * (1.0 + v[2]) + energies[1] * (1.0 - v[2]))
    return e - s / beta


# Dormand-Prince 5(4) tableau
_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@njit
def dp45_step(v, h, k1, energies, bohr, omegas, rates, beta, floor, series_tol):
    """One Dormand-Prince step. Returns (status, v_new, err_vec, k_last)."""
    k = np.zeros((7, 3))
    k[0] = k1
    vs = np.empty(3)
    dv = np.empty(3)
    for s in range(1, 7):
        for i in range(3):
            acc = 0.0
            for m in range(s):
                acc += _A[s, m] * k[m, i]
            vs[i] = v[i] + h * acc
        status = bloch_rhs(vs, energies, bohr, omegas, rates, beta, floor, series_tol, dv)
        if status != OK:
            return status, vs, np.zeros(3), dv
        k[s] = dv
    vnew = vs.copy()  # stage 7 sits at the 5th-order solution (FSAL)
    err = np.zeros(3)
    for i in range(3):
        for s in range(7):
            err[i] += h * _E[s] * k[s, i]
    return OK, vnew, err, k[6].copy()


@njit
def dp45_integrate(v0, t0, t1, h0, rtol, atol, hmin, stops, stop_index, max_steps,
                   energies, bohr, omegas, rates, beta, floor, series_tol,
                   f_tol, target_v, target_dist, out_t, out_v, out_f, out_rej):
    """Adaptive DP5(4) integration of the NTME in Bloch coordinates.

    Steps are clipped to land exactly on each entry of ``stops`` (sorted,
    starting at ``stop_index``). A step is accepted only if the error test
    passes, the new state keeps both eigenvalues above ``floor`` and the
    free energy does not rise by more than ``f_tol``. Accepted states are
    appended to ``out_*`` until the buffer is full.

    Returns (n_written, status, t, v, h, stop_index, n_rejected).
    """
    v = v0.copy()
    t = t0
    h = h0
    n = 0
    n_rej = 0
    k1 = np.empty(3)
    status = bloch_rhs(v, energies, bohr, omegas, rates, beta, floor, series_tol, k1)
    if status != OK:
        return n, STEP_RANK, t, v, h, stop_index, n_rej
    f_old = bloch_free_energy(v, energies, beta)
    last_fail_rank = False
    cap = out_t.shape[0]
    steps = 0
    while t < t1:
        if n >= cap:
            return n, BUFFER_FULL, t, v, h, stop_index, n_rej
        if steps >= max_steps:
            return n, MAX_STEPS, t, v, h, stop_index, n_rej
        if h < hmin:
            if last_fail_rank:
                return n, STEP_RANK, t, v, h, stop_index, n_rej
            return n, STEP_UNDERFLOW, t, v, h, stop_index, n_rej
        t_next = t1
        if stop_index < stops.shape[0] and stops[stop_index] < t_next:
            t_next = stops[stop_index]
        hstep = h
        landing = False
        if t + hstep >= t_next:
            hstep = t_next - t
            landing = True
        steps += 1
        status, vnew, err, klast = dp45_step(v, hstep, k1, energies, bohr, omegas, rates,
                                             beta, floor, series_tol)
        if status != OK:
            n_rej += 1
            last_fail_rank = True
            h = 0.25 * hstep
            continue
        enorm = 0.0
        for i in range(3):
            sc = atol + rtol * max(abs(v[i]), abs(vnew[i]))
            e = abs(err[i]) / sc
            if e > enorm:
                enorm = e
        if enorm > 1.0:
            n_rej += 1
            last_fail_rank = False
            h = hstep * max(0.2, 0.9 * enorm ** (-0.2))
            continue
        r = np.sqrt(vnew[0] ** 2 + vnew[1] ** 2 + vnew[2] ** 2)
        if 0.5 * (1.0 - r) < floor:
            n_rej += 1
            last_fail_rank = True
            h = 0.25 * hstep
            continue
        f_new = bloch_free_energy(vnew, energies, beta)
        if f_new > f_old + f_tol:
            n_rej += 1
            last_fail_rank = False
            h = 0.5 * hstep
            continue
        # accepted
        last_fail_rank = False
        if landing:
            t = t_next
            if stop_index < stops.shape[0] and stops[stop_index] == t_next:
                stop_index += 1
        else:
            t = t + hstep
        v = vnew
        k1 = klast
        f_old = f_new
        out_t[n] = t
        out_v[n] = v
        out_f[n] = f_new
        out_rej[n] = n_rej
        n += 1
        if enorm == 0.0:
            fac = 5.0
        else:
            fac = min(5.0, max(0.2, 0.9 * enorm ** (-0.2)))
        if not landing or hstep >= h:
            h = hstep * fac
        if target_dist > 0.0:
            d = np.sqrt((v[0] - target_v[0]) ** 2 + (v[1] - target_v[1]) ** 2
                        + (v[2] - target_v[2]) ** 2)
            if d <= target_dist:
                return n, REACHED_TARGET, t, v, h, stop_index, n_rej
    return n, DONE, t, v, h, stop_index, n_rej
