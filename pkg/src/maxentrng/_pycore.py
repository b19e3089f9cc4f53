"""Pure-Python kernels. Mirrors ``_core.pyx`` operation for operation.

Every floating-point expression here is written in the same order as its
compiled twin so both backends produce bit-identical streams. Element-wise
numpy arithmetic is used only where it rounds exactly like the scalar C code
(+, -, *, /); logs, square roots of data and reductions go through ``math``
and sequential Python loops.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

MASK64 = (1 << 64) - 1
TWO_PI = 6.283185307179586
INV_2_53 = 1.0 / 9007199254740992.0

WALLACE4 = 0
ROTATION = 1
STRIDE = 0
AFFINE = 1

SQRT_SHIFT = 0
WILSON_HILFERTY = 1
CUBIC_A = 2


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Uniform:
    """xoshiro256** seeded through splitmix64."""

    def __init__(self, seed: int = 0):
        sm = seed & MASK64
        s = []
        for _ in range(4):
            sm, z = splitmix64(sm)
            s.append(z)
        self._s = s
        self.draws = 0

    def get_state(self) -> tuple[int, int, int, int]:
        return tuple(self._s)

    def set_state(self, state) -> None:
        state = [int(v) & MASK64 for v in state]
        if len(state) != 4 or not any(state):
            raise ValueError("state must be four 64-bit words, not all zero")
        self._s = state

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        self.draws += 1
        return result

    def next_double(self) -> float:
        return (self.next_u64() >> 11) * INV_2_53

    def fill(self, out: np.ndarray) -> None:
        nd = self.next_double
        for i in range(out.shape[0]):
            out[i] = nd()


class PolarCore:
    """Marsaglia polar method; the second value of each pair is cached."""

    def __init__(self, u: Uniform):
        self.u = u
        self.has_cached = False
        self.cached = 0.0
        self.attempts = 0
        self.pairs = 0

    def next(self) -> float:
        if self.has_cached:
            self.has_cached = False
            return self.cached
        nd = self.u.next_double
        while True:
            x = 2.0 * nd() - 1.0
            y = 2.0 * nd() - 1.0
            s = x * x + y * y
            self.attempts += 1
            if 0.0 < s < 1.0:
                break
        f = math.sqrt(-2.0 * math.log(s) / s)
        self.pairs += 1
        self.cached = y * f
        self.has_cached = True
        return x * f

    def fill(self, out: np.ndarray) -> None:
        nx = self.next
        for i in range(out.shape[0]):
            out[i] = nx()


class BoxMullerCore:
    def __init__(self, u: Uniform):
        self.u = u
        self.has_cached = False
        self.cached = 0.0

    def next(self) -> float:
        if self.has_cached:
            self.has_cached = False
            return self.cached
        u1 = self.u.next_double()
        if u1 == 0.0:
            u1 = INV_2_53
        u2 = self.u.next_double()
        r = math.sqrt(-2.0 * math.log(u1))
        th = TWO_PI * u2
        self.cached = r * math.sin(th)
        self.has_cached = True
        return r * math.cos(th)

    def fill(self, out: np.ndarray) -> None:
        nx = self.next
        for i in range(out.shape[0]):
            out[i] = nx()


def chi2_kernel(x: float, method: int, k1: float, k2: float, a: float, nu: float) -> float:
    if method == SQRT_SHIFT:
        return 0.5 * (x + k1) * (x + k1)
    if method == WILSON_HILFERTY:
        h = k1 * x + k2
        return nu * (h * h * h)
    return a * (x * x - 1.0) + k1 * x + nu


class WallaceCore:
    """Pool state machine: passes, chi-squared scaling and buffered output."""

    def __init__(
        self,
        u: Uniform,
        pool: np.ndarray,
        reserved: float,
        family: int,
        mixing: int,
        perm_table: np.ndarray,
        sign_table: np.ndarray,
        cos_table: np.ndarray,
        sin_table: np.ndarray,
        stride: int,
        alpha: int,
        beta: int,
        chi2_method: int,
        k1: float,
        k2: float,
        a_value: float,
        mean: float,
        sigma: float,
        discard_every: int,
        correction: bool,
        renorm_every: int,
    ):
        n = pool.shape[0]
        self.u = u
        self.n = n
        self.rows = n // 4
        self.pool = np.array(pool, dtype=np.float64)
        self.reserved = float(reserved)
        self.family = family
        self.mixing = mixing
        self.perm_table = np.array(perm_table, dtype=np.int64).reshape(-1, 4)
        self.sign_table = np.array(sign_table, dtype=np.float64).reshape(-1, 4)
        self.nvariants = self.perm_table.shape[0]
        self.cos_table = np.array(cos_table, dtype=np.float64)
        self.sin_table = np.array(sin_table, dtype=np.float64)
        self.stride = stride
        self.alpha = alpha
        self.beta = beta
        self.chi2_method = chi2_method
        self.k1 = k1
        self.k2 = k2
        self.a_value = a_value
        self.nu = float(n)
        self.mean = mean
        self.sigma = sigma
        self.discard_every = discard_every
        self.correction = bool(correction)
        self.renorm_every = renorm_every
        self.pass_count = 0
        self.clamp_count = 0
        self.emitted_pools = 0
        self.last_scale = 1.0
        self.buf = np.empty(n - 1, dtype=np.float64)
        self.pos = n - 1
        self._bstride = (np.arange(self.rows, dtype=np.int64) * stride) % self.rows
        self._col = np.arange(4, dtype=np.int64) * self.rows
        # affine gathers read contiguous quarters (wallace) or halves (rotation)
        # so that no block slot is tied to one residue class of the pool
        self._jq = (np.arange(self.rows, dtype=np.int64)[:, None] + self._col[None, :]).ravel()
        half = n // 2
        self._jh = (np.arange(half, dtype=np.int64)[:, None]
                    + half * np.arange(2, dtype=np.int64)[None, :]).ravel()

    # -- gather maps ---------------------------------------------------
    def _offsets(self, w: int) -> np.ndarray:
        omask = min(self.rows, 4096) - 1
        return np.array([(w >> (16 + 12 * k)) & omask for k in range(4)], dtype=np.int64)

    def _gather(self, w: int, mult: int, fixed: bool, groups: int = 4) -> np.ndarray:
        if self.mixing == STRIDE:
            off = np.zeros(4, dtype=np.int64) if fixed else self._offsets(w)
            rows_idx = (self._bstride[:, None] + off[None, :]) % self.rows
            return (rows_idx + self._col[None, :]).ravel()
        gamma = 0 if fixed else (w >> 16) & (self.n - 1)
        j = self._jq if groups == 4 else self._jh
        return (j * mult + gamma) & (self.n - 1)

    # -- passes ----------------------------------------------------------
    def do_pass(self, fixed: bool = False) -> None:
        if self.family == WALLACE4:
            self._pass_wallace(fixed)
        else:
            self._pass_rotation(fixed)
        self.pass_count += 1
        if self.renorm_every > 0 and self.pass_count % self.renorm_every == 0:
            self.renormalize()

    def _pass_wallace(self, fixed: bool) -> None:
        w = self.u.next_u64()
        vidx = 0 if fixed else (w & 0xFFFF) % self.nvariants
        v = self.pool[self._gather(w, self.alpha, fixed)].reshape(-1, 4)
        a, b, c, d = v[:, 0], v[:, 1], v[:, 2], v[:, 3]
        t = (a + b + c + d) * 0.5
        r = (t - c, t - b, a - t, d - t)
        perm = self.perm_table[vidx]
        sign = self.sign_table[vidx]
        out = np.empty((self.rows, 4), dtype=np.float64)
        for k in range(4):
            out[:, k] = sign[k] * r[perm[k]]
        self.pool = out.ravel()

    def _sweep(self, w: int, mult: int, fixed: bool) -> None:
        if fixed:
            c = float(self.cos_table[0])
            s = float(self.sin_table[0])
        else:
            ti = w & 15
            c = float(self.cos_table[ti])
            s = float(self.sin_table[ti])
            if (w >> 4) & 1:
                s = -s
            if (w >> 5) & 1:
                c = -c
                s = -s
        v = self.pool[self._gather(w, mult, fixed, groups=2)]
        x1 = v[0::2]
        x2 = v[1::2]
        out = np.empty(self.n, dtype=np.float64)
        out[0::2] = c * x1 + s * x2
        out[1::2] = c * x2 - s * x1
        self.pool = out

    def _pass_rotation(self, fixed: bool) -> None:
        w1 = self.u.next_u64()
        w2 = self.u.next_u64()
        self._sweep(w1, self.alpha, fixed)
        self._sweep(w2, self.beta, fixed)

    def renormalize(self) -> None:
        s = 0.0
        for x in self.pool.tolist():
            s += x * x
        if s > 0.0:
            self.pool *= math.sqrt(self.nu / s)

    def sum_squares(self) -> float:
        s = 0.0
        for x in self.pool.tolist():
            s += x * x
        return s

    # -- output ----------------------------------------------------------
    def emit(self, out: np.ndarray) -> None:
        """Write n-1 scaled values to ``out`` and roll the reserved value."""
        if self.correction:
            x = self.reserved
            sval = chi2_kernel(x, self.chi2_method, self.k1, self.k2, self.a_value, self.nu)
            floor = 1e-6 * self.nu
            if sval < floor:
                sval = floor
                self.clamp_count += 1
            scale = math.sqrt(sval / self.nu)
        else:
            scale = 1.0
        fac = self.sigma * scale
        m = self.n - 1
        out[:m] = self.pool[:m] * fac + self.mean
        self.reserved = float(self.pool[m]) * scale
        self.last_scale = scale
        self.emitted_pools += 1

    def advance(self, out: np.ndarray) -> None:
        for _ in range(self.discard_every):
            self.do_pass(False)
        self.emit(out)

    def next(self) -> float:
        if self.pos >= self.n - 1:
            self.advance(self.buf)
            self.pos = 0
        v = float(self.buf[self.pos])
        self.pos += 1
        return v

    def fill(self, out: np.ndarray) -> None:
        count = out.shape[0]
        m = self.n - 1
        i = 0
        take = min(m - self.pos, count)
        if take > 0:
            out[:take] = self.buf[self.pos : self.pos + take]
            self.pos += take
            i = take
        while count - i >= m:
            self.advance(out[i : i + m])
            i += m
        if i < count:
            self.advance(self.buf)
            rest = count - i
            out[i:] = self.buf[:rest]
            self.pos = rest

    def get_pool(self) -> np.ndarray:
        return self.pool.copy()

    def set_pool(self, pool: np.ndarray) -> None:
        self.pool = np.array(pool, dtype=np.float64)
