# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: trigonometric feature evaluation, Matern II deletion and
the JZS Bayes-factor integral. Mirrors the signatures in ``_fallback``."""

import numpy as np

from libc.math cimport sin, cos, exp, log, log1p, fabs, sqrt, M_PI

BACKEND = "compiled"


def phase_features(const double[:, ::1] points, const double[:, ::1] freqs,
                   const double[::1] coefs):
    cdef Py_ssize_t n = points.shape[0], k = freqs.shape[0]
    cdef Py_ssize_t p, q
    cdef double ph
    out = np.empty((n, 2 * k), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for p in range(n):
            for q in range(k):
                ph = freqs[q, 0] * points[p, 0] + freqs[q, 1] * points[p, 1]
                o[p, 2 * q] = coefs[q] * sin(ph)
                o[p, 2 * q + 1] = coefs[q] * cos(ph)
    return out


def feature_moments(const double[:, ::1] points, const double[:, ::1] freqs,
                    const double[::1] coefs):
    """Column means and unbiased variances of the feature matrix without
    materialising it. Sums are shifted by the first row for stability."""
    cdef Py_ssize_t n = points.shape[0], k = freqs.shape[0]
    cdef Py_ssize_t p, q
    cdef double ph, s, c, ds, dc
    shift = np.empty(2 * k, dtype=np.float64)
    s1 = np.zeros(2 * k, dtype=np.float64)
    s2 = np.zeros(2 * k, dtype=np.float64)
    cdef double[::1] sh = shift, a1 = s1, a2 = s2
    if n == 0:
        raise ValueError("no points")
    with nogil:
        for q in range(k):
            ph = freqs[q, 0] * points[0, 0] + freqs[q, 1] * points[0, 1]
            sh[2 * q] = coefs[q] * sin(ph)
            sh[2 * q + 1] = coefs[q] * cos(ph)
        for p in range(1, n):
            for q in range(k):
                ph = freqs[q, 0] * points[p, 0] + freqs[q, 1] * points[p, 1]
                ds = coefs[q] * sin(ph) - sh[2 * q]
                dc = coefs[q] * cos(ph) - sh[2 * q + 1]
                a1[2 * q] += ds
                a2[2 * q] += ds * ds
                a1[2 * q + 1] += dc
                a2[2 * q + 1] += dc * dc
    mean = shift + s1 / n
    if n > 1:
        var = (s2 - s1 * s1 / n) / (n - 1)
        np.maximum(var, 0.0, out=var)
    else:
        var = np.full(2 * k, np.nan)
    return mean, var


def hardcore_retain(const double[:, ::1] points, const double[::1] marks, double r):
    """True where no other point within distance ``r`` carries a smaller mark."""
    cdef Py_ssize_t n = points.shape[0]
    keep = np.ones(n, dtype=bool)
    if n < 2:
        return keep
    pts = np.asarray(points)
    lo = pts.min(axis=0)
    # cells no smaller than r (so the 3x3 neighbourhood suffices) and at most ~4n of them
    h = max(r, float((pts.max(axis=0) - lo).max()) / np.ceil(np.sqrt(4.0 * n)))
    cells = np.floor((pts - lo) / h).astype(np.int64)
    cdef long nx = cells[:, 0].max() + 1
    cdef long ny = cells[:, 1].max() + 1
    cid = cells[:, 0] * ny + cells[:, 1]
    order = np.argsort(cid, kind="stable").astype(np.int64)
    start = np.searchsorted(cid[order], np.arange(nx * ny + 1)).astype(np.int64)
    cdef const long long[:, ::1] cl = np.ascontiguousarray(cells, dtype=np.int64)
    cdef const long long[::1] od = order
    cdef const long long[::1] st = start
    cdef unsigned char[::1] kp = keep.view(np.uint8)
    cdef double r2 = r * r, dx, dy
    cdef long long i, j, t, cx, cy, gx, gy, c
    with nogil:
        for i in range(n):
            cx = cl[i, 0]
            cy = cl[i, 1]
            for gx in range(cx - 1, cx + 2):
                if gx < 0 or gx >= nx or kp[i] == 0:
                    continue
                for gy in range(cy - 1, cy + 2):
                    if gy < 0 or gy >= ny:
                        continue
                    c = gx * ny + gy
                    for t in range(st[c], st[c + 1]):
                        j = od[t]
                        if j == i or marks[j] >= marks[i]:
                            continue
                        dx = points[j, 0] - points[i, 0]
                        dy = points[j, 1] - points[i, 1]
                        if dx * dx + dy * dy < r2:
                            kp[i] = 0
                            break
                    if kp[i] == 0:
                        break
    return keep


# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
cdef double XGK[8]
cdef double WGK[8]
cdef double WG[4]
XGK[:] = [0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
          0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
          0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
          0.207784955007898467600689403773245, 0.0]
WGK[:] = [0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
          0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
          0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
          0.204432940075298892414161999234649, 0.209482141084727828012999174891714]
WG[:] = [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
         0.381830050505118944950369775488975, 0.417959183673469387755102040816327]


cdef struct JzsParams:
    double t2
    double nr2
    double nu
    double shift


cdef inline double jzs_log_integrand(double u, JzsParams* p) nogil:
    cdef double a = p.nr2 * exp(u)
    return (-0.5 * log1p(a)
            - 0.5 * (p.nu + 1.0) * (log1p(p.t2 / ((1.0 + a) * p.nu)) - log1p(p.t2 / p.nu))
            - 0.5 * log(2.0 * M_PI) - 0.5 * u - 0.5 * exp(-u))


cdef inline double jzs_f(double u, JzsParams* p) nogil:
    return exp(jzs_log_integrand(u, p) - p.shift)


cdef void gk15(double a, double b, JzsParams* p, double* res, double* err) nogil:
    cdef double c = 0.5 * (a + b), h = 0.5 * (b - a)
    cdef double fc = jzs_f(c, p)
    cdef double rk = fc * WGK[7], rg = fc * WG[3]
    cdef double f1, f2
    cdef int j
    for j in range(7):
        f1 = jzs_f(c - h * XGK[j], p)
        f2 = jzs_f(c + h * XGK[j], p)
        rk += WGK[j] * (f1 + f2)
        if j % 2 == 1:
            rg += WG[j // 2] * (f1 + f2)
    res[0] = rk * h
    err[0] = fabs((rk - rg) * h)


cdef double adaptive(double a, double b, JzsParams* p, double rtol) nogil:
    cdef double whole, err
    cdef double stack_a[200]
    cdef double stack_b[200]
    cdef int top = 0
    cdef double total = 0.0, est
    gk15(a, b, p, &est, &err)
    stack_a[0] = a
    stack_b[0] = b
    top = 1
    while top > 0:
        top -= 1
        a = stack_a[top]
        b = stack_b[top]
        gk15(a, b, p, &whole, &err)
        if err <= rtol * fabs(est) * 0.1 or top >= 198 or (b - a) < 1e-9:
            total += whole
        else:
            stack_a[top] = a
            stack_b[top] = 0.5 * (a + b)
            stack_a[top + 1] = 0.5 * (a + b)
            stack_b[top + 1] = b
            top += 2
    return total


def jzs_bf10(double t, double n1, double n2, double rscale, double rtol=1e-10):
    """Two-sample JZS Bayes factor, integrated over log g on [-12, 60] with an
    analytic tail beyond the upper limit (the integrand decays as e^{-u})."""
    cdef JzsParams p
    cdef double lo = -12.0, hi = 60.0, u, best = -1e300, v, tail
    cdef int i
    p.t2 = t * t
    p.nr2 = (n1 * n2 / (n1 + n2)) * rscale * rscale
    p.nu = n1 + n2 - 2.0
    p.shift = 0.0
    for i in range(721):
        u = lo + (hi - lo) * i / 720.0
        v = jzs_log_integrand(u, &p)
        if v > best:
            best = v
    p.shift = best
    tail = jzs_f(hi, &p)
    return exp(log(adaptive(lo, hi, &p, rtol) + tail) + best)
