# cython: language_level=3
"""Compiled kernels: xoshiro256**, Polar, Box-Muller and the pool pass.

Must stay operation-for-operation identical to ``_pycore.py``.
"""
cimport cython
from libc.math cimport sqrt, log, sin, cos
from libc.stdint cimport uint64_t, int64_t

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"

cdef double TWO_PI = 6.283185307179586
cdef double INV_2_53 = 1.0 / 9007199254740992.0

WALLACE4 = 0
ROTATION = 1
STRIDE = 0
AFFINE = 1

SQRT_SHIFT = 0
WILSON_HILFERTY = 1
CUBIC_A = 2


cdef inline uint64_t rotl(uint64_t x, int k) noexcept nogil:
    return (x << k) | (x >> (64 - k))


def splitmix64(state):
    cdef uint64_t s = <uint64_t>(int(state) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t z
    s += 0x9E3779B97F4A7C15ULL
    z = s
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return s, z ^ (z >> 31)


@cython.final
cdef class Uniform:
    """xoshiro256** seeded through splitmix64."""

    cdef uint64_t s[4]
    cdef public uint64_t draws

    def __init__(self, seed=0):
        sm = int(seed) & 0xFFFFFFFFFFFFFFFF
        for k in range(4):
            sm, z = splitmix64(sm)
            self.s[k] = <uint64_t>z
        self.draws = 0

    def get_state(self):
        return (self.s[0], self.s[1], self.s[2], self.s[3])

    def set_state(self, state):
        vals = [int(v) & 0xFFFFFFFFFFFFFFFF for v in state]
        if len(vals) != 4 or not any(vals):
            raise ValueError("state must be four 64-bit words, not all zero")
        for k in range(4):
            self.s[k] = <uint64_t>vals[k]

    cdef inline uint64_t _next(self) noexcept nogil:
        cdef uint64_t result = rotl(self.s[1] * 5, 7) * 9
        cdef uint64_t t = self.s[1] << 17
        self.s[2] ^= self.s[0]
        self.s[3] ^= self.s[1]
        self.s[1] ^= self.s[2]
        self.s[0] ^= self.s[3]
        self.s[2] ^= t
        self.s[3] = rotl(self.s[3], 45)
        self.draws += 1
        return result

    cdef inline double _double(self) noexcept nogil:
        return <double>(self._next() >> 11) * INV_2_53

    def next_u64(self):
        return self._next()

    def next_double(self):
        return self._double()

    def fill(self, double[::1] out):
        cdef Py_ssize_t i, m = out.shape[0]
        for i in range(m):
            out[i] = self._double()


@cython.final
cdef class PolarCore:
    cdef public Uniform u
    cdef public bint has_cached
    cdef public double cached
    cdef public uint64_t attempts
    cdef public uint64_t pairs

    def __init__(self, Uniform u):
        self.u = u
        self.has_cached = False
        self.cached = 0.0
        self.attempts = 0
        self.pairs = 0

    cdef inline double _next(self) noexcept nogil:
        cdef double x, y, s, f
        if self.has_cached:
            self.has_cached = False
            return self.cached
        while True:
            x = 2.0 * self.u._double() - 1.0
            y = 2.0 * self.u._double() - 1.0
            s = x * x + y * y
            self.attempts += 1
            if s > 0.0 and s < 1.0:
                break
        f = sqrt(-2.0 * log(s) / s)
        self.pairs += 1
        self.cached = y * f
        self.has_cached = True
        return x * f

    def next(self):
        return self._next()

    def fill(self, double[::1] out):
        cdef Py_ssize_t i, m = out.shape[0]
        for i in range(m):
            out[i] = self._next()


@cython.final
cdef class BoxMullerCore:
    cdef public Uniform u
    cdef public bint has_cached
    cdef public double cached

    def __init__(self, Uniform u):
        self.u = u
        self.has_cached = False
        self.cached = 0.0

    cdef inline double _next(self) noexcept nogil:
        cdef double u1, u2, r, th
        if self.has_cached:
            self.has_cached = False
            return self.cached
        u1 = self.u._double()
        if u1 == 0.0:
            u1 = INV_2_53
        u2 = self.u._double()
        r = sqrt(-2.0 * log(u1))
        th = TWO_PI * u2
        self.cached = r * sin(th)
        self.has_cached = True
        return r * cos(th)

    def next(self):
        return self._next()

    def fill(self, double[::1] out):
        cdef Py_ssize_t i, m = out.shape[0]
        for i in range(m):
            out[i] = self._next()


cdef inline double chi2_eval(double x, int method, double k1, double k2, double a, double nu) noexcept nogil:
    cdef double h
    if method == 0:
        return 0.5 * (x + k1) * (x + k1)
    if method == 1:
        h = k1 * x + k2
        return nu * (h * h * h)
    return a * (x * x - 1.0) + k1 * x + nu


def chi2_kernel(double x, int method, double k1, double k2, double a, double nu):
    return chi2_eval(x, method, k1, k2, a, nu)


@cython.final
cdef class WallaceCore:
    cdef public Uniform u
    cdef public Py_ssize_t n
    cdef public Py_ssize_t rows
    cdef double[::1] _pool
    cdef double[::1] _scratch
    cdef object _pool_arr
    cdef object _scratch_arr
    cdef public double reserved
    cdef public int family
    cdef public int mixing
    cdef int64_t[:, ::1] perm_table
    cdef double[:, ::1] sign_table
    cdef public Py_ssize_t nvariants
    cdef double[::1] cos_table
    cdef double[::1] sin_table
    cdef public int64_t stride
    cdef public int64_t alpha
    cdef public int64_t beta
    cdef public int chi2_method
    cdef public double k1, k2, a_value, nu, mean, sigma
    cdef public int discard_every
    cdef public bint correction
    cdef public int renorm_every
    cdef public uint64_t pass_count
    cdef public uint64_t clamp_count
    cdef public uint64_t emitted_pools
    cdef public double last_scale
    cdef double[::1] _buf
    cdef object _buf_arr
    cdef public Py_ssize_t pos

    def __init__(self, Uniform u, pool, double reserved, int family, int mixing,
                 perm_table, sign_table, cos_table, sin_table,
                 int64_t stride, int64_t alpha, int64_t beta,
                 int chi2_method, double k1, double k2, double a_value,
                 double mean, double sigma, int discard_every, correction,
                 int renorm_every):
        self.u = u
        self._pool_arr = np.array(pool, dtype=np.float64)
        self._pool = self._pool_arr
        self.n = self._pool.shape[0]
        self.rows = self.n // 4
        self._scratch_arr = np.empty(self.n, dtype=np.float64)
        self._scratch = self._scratch_arr
        self.reserved = reserved
        self.family = family
        self.mixing = mixing
        self.perm_table = np.ascontiguousarray(np.asarray(perm_table, dtype=np.int64).reshape(-1, 4))
        self.sign_table = np.ascontiguousarray(np.asarray(sign_table, dtype=np.float64).reshape(-1, 4))
        self.nvariants = self.perm_table.shape[0]
        self.cos_table = np.ascontiguousarray(cos_table, dtype=np.float64)
        self.sin_table = np.ascontiguousarray(sin_table, dtype=np.float64)
        self.stride = stride
        self.alpha = alpha
        self.beta = beta
        self.chi2_method = chi2_method
        self.k1 = k1
        self.k2 = k2
        self.a_value = a_value
        self.nu = <double>self.n
        self.mean = mean
        self.sigma = sigma
        self.discard_every = discard_every
        self.correction = bool(correction)
        self.renorm_every = renorm_every
        self.pass_count = 0
        self.clamp_count = 0
        self.emitted_pools = 0
        self.last_scale = 1.0
        self._buf_arr = np.empty(self.n - 1, dtype=np.float64)
        self._buf = self._buf_arr
        self.pos = self.n - 1

    property pool:
        def __get__(self):
            return np.asarray(self._pool)

    cdef inline void _swap(self) noexcept nogil:
        cdef double[::1] tmp = self._pool
        self._pool = self._scratch
        self._scratch = tmp

    cdef void _pass_wallace(self, bint fixed) noexcept:
        cdef uint64_t w = self.u._next()
        cdef Py_ssize_t vidx = 0
        cdef int64_t o0 = 0, o1 = 0, o2 = 0, o3 = 0, gamma = 0
        cdef int64_t omask, rmask = self.rows - 1, nmask = self.n - 1
        cdef int64_t r0, r1, r2, r3, st = self.stride, rows = self.rows
        cdef int64_t j, alpha = self.alpha
        cdef Py_ssize_t b
        cdef double a, bb, c, d, t
        cdef double rr[4]
        cdef double[::1] x = self._pool
        cdef double[::1] y = self._scratch
        cdef int64_t p0, p1, p2, p3
        cdef double s0, s1, s2, s3
        if not fixed:
            vidx = <Py_ssize_t>((w & 0xFFFF) % <uint64_t>self.nvariants)
        p0 = self.perm_table[vidx, 0]
        p1 = self.perm_table[vidx, 1]
        p2 = self.perm_table[vidx, 2]
        p3 = self.perm_table[vidx, 3]
        s0 = self.sign_table[vidx, 0]
        s1 = self.sign_table[vidx, 1]
        s2 = self.sign_table[vidx, 2]
        s3 = self.sign_table[vidx, 3]
        if self.mixing == 0:
            if not fixed:
                omask = (rows if rows < 4096 else 4096) - 1
                o0 = <int64_t>((w >> 16) & <uint64_t>omask)
                o1 = <int64_t>((w >> 28) & <uint64_t>omask)
                o2 = <int64_t>((w >> 40) & <uint64_t>omask)
                o3 = <int64_t>((w >> 52) & <uint64_t>omask)
            # rows is a power of two, so "mod rows" is a mask
            r0 = o0 & rmask
            r1 = o1 & rmask
            r2 = o2 & rmask
            r3 = o3 & rmask
            for b in range(rows):
                a = x[r0]
                bb = x[rows + r1]
                c = x[2 * rows + r2]
                d = x[3 * rows + r3]
                t = (a + bb + c + d) * 0.5
                rr[0] = t - c
                rr[1] = t - bb
                rr[2] = a - t
                rr[3] = d - t
                y[4 * b] = s0 * rr[p0]
                y[4 * b + 1] = s1 * rr[p1]
                y[4 * b + 2] = s2 * rr[p2]
                y[4 * b + 3] = s3 * rr[p3]
                r0 = (r0 + st) & rmask
                r1 = (r1 + st) & rmask
                r2 = (r2 + st) & rmask
                r3 = (r3 + st) & rmask
        else:
            if not fixed:
                gamma = <int64_t>((w >> 16) & <uint64_t>nmask)
            # slot k of block b reads pi(k*rows + b)
            st = (alpha * rows) & nmask
            j = gamma
            for b in range(rows):
                a = x[j]
                bb = x[(j + st) & nmask]
                c = x[(j + 2 * st) & nmask]
                d = x[(j + 3 * st) & nmask]
                j = (j + alpha) & nmask
                t = (a + bb + c + d) * 0.5
                rr[0] = t - c
                rr[1] = t - bb
                rr[2] = a - t
                rr[3] = d - t
                y[4 * b] = s0 * rr[p0]
                y[4 * b + 1] = s1 * rr[p1]
                y[4 * b + 2] = s2 * rr[p2]
                y[4 * b + 3] = s3 * rr[p3]
        self._swap()

    cdef void _sweep(self, uint64_t w, int64_t mult, bint fixed) noexcept:
        cdef double c, s, x1, x2
        cdef Py_ssize_t ti, b, q
        cdef int64_t o0 = 0, o1 = 0, o2 = 0, o3 = 0, gamma = 0, omask
        cdef int64_t rows = self.rows, rmask = self.rows - 1, nmask = self.n - 1
        cdef int64_t r0, r1, r2, r3, st = self.stride, j
        cdef double[::1] x = self._pool
        cdef double[::1] y = self._scratch
        if fixed:
            c = self.cos_table[0]
            s = self.sin_table[0]
        else:
            ti = <Py_ssize_t>(w & 15)
            c = self.cos_table[ti]
            s = self.sin_table[ti]
            if (w >> 4) & 1:
                s = -s
            if (w >> 5) & 1:
                c = -c
                s = -s
        if self.mixing == 0:
            if not fixed:
                omask = (rows if rows < 4096 else 4096) - 1
                o0 = <int64_t>((w >> 16) & <uint64_t>omask)
                o1 = <int64_t>((w >> 28) & <uint64_t>omask)
                o2 = <int64_t>((w >> 40) & <uint64_t>omask)
                o3 = <int64_t>((w >> 52) & <uint64_t>omask)
            r0 = o0 & rmask
            r1 = o1 & rmask
            r2 = o2 & rmask
            r3 = o3 & rmask
            for b in range(rows):
                x1 = x[r0]
                x2 = x[rows + r1]
                y[4 * b] = c * x1 + s * x2
                y[4 * b + 1] = c * x2 - s * x1
                x1 = x[2 * rows + r2]
                x2 = x[3 * rows + r3]
                y[4 * b + 2] = c * x1 + s * x2
                y[4 * b + 3] = c * x2 - s * x1
                r0 = (r0 + st) & rmask
                r1 = (r1 + st) & rmask
                r2 = (r2 + st) & rmask
                r3 = (r3 + st) & rmask
        else:
            if not fixed:
                gamma = <int64_t>((w >> 16) & <uint64_t>nmask)
            # pair q reads pi(q) and pi(q + n/2)
            st = (mult * (self.n // 2)) & nmask
            j = gamma
            for q in range(self.n // 2):
                x1 = x[j]
                x2 = x[(j + st) & nmask]
                j = (j + mult) & nmask
                y[2 * q] = c * x1 + s * x2
                y[2 * q + 1] = c * x2 - s * x1
        self._swap()

    cdef void _pass(self, bint fixed) noexcept:
        cdef uint64_t w1, w2
        if self.family == 0:
            self._pass_wallace(fixed)
        else:
            w1 = self.u._next()
            w2 = self.u._next()
            self._sweep(w1, self.alpha, fixed)
            self._sweep(w2, self.beta, fixed)
        self.pass_count += 1
        if self.renorm_every > 0 and self.pass_count % <uint64_t>self.renorm_every == 0:
            self._renormalize()

    cdef double _sumsq(self) noexcept:
        cdef double s = 0.0
        cdef Py_ssize_t i
        for i in range(self.n):
            s += self._pool[i] * self._pool[i]
        return s

    cdef void _renormalize(self) noexcept:
        cdef double s = self._sumsq()
        cdef double f
        cdef Py_ssize_t i
        if s > 0.0:
            f = sqrt(self.nu / s)
            for i in range(self.n):
                self._pool[i] = self._pool[i] * f

    cdef void _emit(self, double[::1] out) noexcept:
        cdef double sval, scale, fac, floor, mean = self.mean
        cdef Py_ssize_t i, m = self.n - 1
        cdef double[::1] x = self._pool
        if self.correction:
            sval = chi2_eval(self.reserved, self.chi2_method, self.k1, self.k2, self.a_value, self.nu)
            floor = 1e-6 * self.nu
            if sval < floor:
                sval = floor
                self.clamp_count += 1
            scale = sqrt(sval / self.nu)
        else:
            scale = 1.0
        fac = self.sigma * scale
        for i in range(m):
            out[i] = x[i] * fac + mean
        self.reserved = x[m] * scale
        self.last_scale = scale
        self.emitted_pools += 1

    cdef void _advance(self, double[::1] out) noexcept:
        cdef int k
        for k in range(self.discard_every):
            self._pass(False)
        self._emit(out)

    def do_pass(self, fixed=False):
        self._pass(bool(fixed))

    def renormalize(self):
        self._renormalize()

    def sum_squares(self):
        return self._sumsq()

    def emit(self, double[::1] out):
        if out.shape[0] < self.n - 1:
            raise ValueError("output buffer shorter than n-1")
        self._emit(out)

    def advance(self, double[::1] out):
        if out.shape[0] < self.n - 1:
            raise ValueError("output buffer shorter than n-1")
        self._advance(out)

    def next(self):
        cdef double v
        if self.pos >= self.n - 1:
            self._advance(self._buf)
            self.pos = 0
        v = self._buf[self.pos]
        self.pos += 1
        return v

    def fill(self, double[::1] out):
        cdef Py_ssize_t count = out.shape[0], m = self.n - 1, i = 0, k, take, rest
        take = m - self.pos
        if take > count:
            take = count
        for k in range(take):
            out[k] = self._buf[self.pos + k]
        if take > 0:
            self.pos += take
            i = take
        while count - i >= m:
            self._advance(out[i:i + m])
            i += m
        if i < count:
            self._advance(self._buf)
            rest = count - i
            for k in range(rest):
                out[i + k] = self._buf[k]
            self.pos = rest

    def get_pool(self):
        return np.array(self._pool, copy=True)

    def set_pool(self, pool):
        arr = np.array(pool, dtype=np.float64)
        if arr.shape[0] != self.n:
            raise ValueError("pool length mismatch")
        self._pool_arr = arr
        self._pool = arr

    property buf:
        def __get__(self):
            return np.asarray(self._buf)
