"""Truncated power series R[z]/(z^N) and matrices over them.

A series over an FdAlgebra R is stored as an (N, k) coordinate array; a
matrix of series as an (rows, cols, N, k) array.  N is the precision: the
coefficients of z^0 .. z^(N-1) are known exactly.
"""
from __future__ import annotations

import numpy as np

from . import field as fl
from .algebra import FdAlgebra
from .errors import (AlgebraMismatch, InsufficientPrecision, NoSolution,
                     NotAUnit, NotDivisible, NotSquare, ShtukaError)


class ZSeries:
    """Element of R[z]/(z^N)."""

    def __init__(self, algebra: FdAlgebra, coeffs):
        self.algebra = algebra
        c = np.asarray(coeffs, dtype=np.int64) % algebra.q
        if c.ndim != 2 or c.shape[1] != algebra.k:
            raise ShtukaError("series coefficients must have shape (N, k)")
        self.coeffs = c

    @property
    def precision(self):
        return self.coeffs.shape[0]

    @classmethod
    def zero(cls, A, N):
        return cls(A, np.zeros((N, A.k), dtype=np.int64))

    @classmethod
    def const(cls, A, c, N):
        s = np.zeros((N, A.k), dtype=np.int64)
        if N:
            s[0] = c
        return cls(A, s)

    @classmethod
    def z_power(cls, A, n, N):
        s = np.zeros((N, A.k), dtype=np.int64)
        if n < N:
            s[n, 0] = 1
        return cls(A, s)

    @classmethod
    def z_minus_zeta(cls, A, N, power=1):
        base = np.zeros((N, A.k), dtype=np.int64)
        if N > 0:
            base[0] = A.neg(A.zeta)
        if N > 1:
            base[1, 0] = 1
        out = cls.const(A, A.one(), N)
        b = cls(A, base)
        for _ in range(power):
            out = out * b
        return out

    def _check(self, other):
        if not isinstance(other, ZSeries):
            raise TypeError("expected a ZSeries")
        self.algebra.require_same(other.algebra)

    def truncate(self, N):
        if N > self.precision:
            raise InsufficientPrecision(
                f"need precision {N}, have {self.precision}")
        return ZSeries(self.algebra, self.coeffs[:N])

    def __add__(self, other):
        self._check(other)
        N = min(self.precision, other.precision)
        return ZSeries(self.algebra, self.algebra.add(self.coeffs[:N], other.coeffs[:N]))

    def __sub__(self, other):
        self._check(other)
        N = min(self.precision, other.precision)
        return ZSeries(self.algebra, self.algebra.sub(self.coeffs[:N], other.coeffs[:N]))

    def __neg__(self):
        return ZSeries(self.algebra, self.algebra.neg(self.coeffs))

    def __mul__(self, other):
        if isinstance(other, ZSeries):
            self._check(other)
            return ZSeries(self.algebra, series_mul(self.algebra, self.coeffs, other.coeffs))
        if isinstance(other, np.ndarray):  # an element of R
            return ZSeries(self.algebra, self.algebra.mul(self.coeffs, other))
        return NotImplemented

    def shift(self, n):
        """Multiply by z^n, keeping the precision."""
        c = np.zeros_like(self.coeffs)
        if n < self.precision:
            c[n:] = self.coeffs[: self.precision - n]
        return ZSeries(self.algebra, c)

    def frobenius(self, n=1):
        return series_frobenius(self, n)

    def is_zero(self):
        return not np.any(self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, ZSeries):
            return NotImplemented
        N = min(self.precision, other.precision)
        return self.algebra.same_as(other.algebra) and np.array_equal(
            self.coeffs[:N], other.coeffs[:N])

    def evaluate_at_zeta(self):
        """sum_i y_i zeta^i (exact: zeta is nilpotent and only the first nu
        coefficients contribute)."""
        A = self.algebra
        acc = A.zero()
        zp = A.one()
        for i in range(min(self.precision, A.zeta_index)):
            acc = A.add(acc, A.mul(self.coeffs[i], zp))
            zp = A.mul(zp, A.zeta)
        if self.precision < A.zeta_index and np.any(zp):
            raise InsufficientPrecision("too few coefficients to evaluate at zeta")
        return acc

    def residue_order(self):
        """Index of the first coefficient outside the nilradical, or None."""
        A = self.algebra
        rad = A.nilradical
        for i, c in enumerate(self.coeffs):
            if not np.any(c):
                continue
            if rad.shape[0] == 0 or not fl.in_span(A.field, rad, c):
                return i
        return None

    def format(self):
        A = self.algebra
        terms = []
        for i, c in enumerate(self.coeffs):
            if not np.any(c):
                continue
            cs = A.format(c)
            zs = "" if i == 0 else ("z" if i == 1 else f"z^{i}")
            if not zs:
                terms.append(cs)
            elif cs == "1":
                terms.append(zs)
            else:
                terms.append(f"({cs})*{zs}" if "+" in cs else f"{cs}*{zs}")
        return " + ".join(terms) if terms else "0"

    def __repr__(self):
        return f"{self.format()} + O(z^{self.precision})"


def series_mul(A: FdAlgebra, a, b):
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    N = min(a.shape[0], b.shape[0])
    out = np.zeros((N, A.k), dtype=np.int64)
    for i in range(N):
        if not np.any(a[i]):
            continue
        out[i:] = A.add(out[i:], A.mul(a[i], b[: N - i]))
    return out


def series_frobenius(s: ZSeries, n: int = 1) -> ZSeries:
    """Coefficientwise q^n-power; z is fixed."""
    return ZSeries(s.algebra, s.algebra.frob(s.coeffs, n))


def is_unit_series(s: ZSeries) -> bool:
    return s.precision > 0 and s.algebra.is_unit(s.coeffs[0])


def series_inverse(s: ZSeries) -> ZSeries:
    A = s.algebra
    if not is_unit_series(s):
        raise NotAUnit("constant term is not a unit", witness=s.coeffs[:1])
    N = s.precision
    u0 = A.invert(s.coeffs[0])
    x = np.zeros((N, A.k), dtype=np.int64)
    x[0] = u0
    for n in range(1, N):
        acc = A.sum(A.mul(s.coeffs[1:n + 1], x[n - 1::-1][:n]), axis=0)
        x[n] = A.neg(A.mul(u0, acc))
    return ZSeries(A, x)


def series_mulmat(A: FdAlgebra, a, N):
    """F_q-matrix of multiplication by the series a on R[z]/(z^N)."""
    a = np.asarray(a, dtype=np.int64)
    k = A.k
    M = np.zeros((N * k, N * k), dtype=np.int64)
    for d in range(min(N, a.shape[0])):
        if not np.any(a[d]):
            continue
        blk = A.mulmat(a[d])
        for m in range(N - d):
            n = m + d
            M[n * k:(n + 1) * k, m * k:(m + 1) * k] = blk
    return M


def divide_by_z_minus_zeta(y: ZSeries, times: int = 1, n_out=None) -> ZSeries:
    """Exact division of y by (z - zeta)^times.

    Each step uses x_i = sum_{j < nu} zeta^j y_{i+1+j} and costs nu
    coefficients of precision, so the input needs N_out + times * nu.
    The result is verified by multiplying back; a non-divisible input
    raises NotDivisible whose witness is (step, residual y(zeta)).
    """
    A = y.algebra
    nu = A.zeta_index
    avail = y.precision - times * nu
    if n_out is None:
        n_out = avail
    if n_out < 1 or n_out > avail:
        raise InsufficientPrecision(
            f"input precision {y.precision} is too small for output {n_out} "
            f"after {times} division(s) with nu = {nu}")
    zpows = [A.one()]
    for _ in range(nu - 1):
        zpows.append(A.mul(zpows[-1], A.zeta))
    zpows = np.array(zpows)
    cur = y
    for step in range(times):
        c = cur.coeffs
        N_in = c.shape[0]
        N_new = N_in - nu
        x = np.zeros((N_new, A.k), dtype=np.int64)
        for i in range(N_new):
            x[i] = A.sum(A.mul(zpows, c[i + 1:i + 1 + nu]), axis=0)
        xs = ZSeries(A, x)
        back = ZSeries.z_minus_zeta(A, N_new) * xs
        if not np.array_equal(back.coeffs, c[:N_new]):
            diff = A.sub(c[:N_new], back.coeffs)
            idx = int(np.argwhere(np.any(diff, axis=1))[0][0])
            raise NotDivisible(
                f"not divisible by (z - zeta) at step {step}: residual "
                f"{A.format(cur.evaluate_at_zeta())} in coefficient {idx}",
                witness={"step": step, "index": idx,
                         "residual": cur.evaluate_at_zeta()})
        cur = xs
    return cur.truncate(n_out)


class ZMatrix:
    """Matrix over R[z]/(z^N); data has shape (rows, cols, N, k)."""

    def __init__(self, algebra: FdAlgebra, data):
        self.algebra = algebra
        d = np.asarray(data, dtype=np.int64) % algebra.q
        if d.ndim != 4 or d.shape[3] != algebra.k:
            raise ShtukaError("matrix data must have shape (r, c, N, k)")
        self.data = d

    @property
    def shape(self):
        return self.data.shape[:2]

    @property
    def precision(self):
        return self.data.shape[2]

    @classmethod
    def from_entries(cls, A, rows):
        """Build from a nested list of ZSeries."""
        N = min(s.precision for row in rows for s in row)
        data = np.array([[s.coeffs[:N] for s in row] for row in rows], dtype=np.int64)
        return cls(A, data)

    @classmethod
    def identity(cls, A, r, N):
        d = np.zeros((r, r, N, A.k), dtype=np.int64)
        for i in range(r):
            d[i, i, 0, 0] = 1
        return cls(A, d)

    @classmethod
    def scalar(cls, s: ZSeries, r):
        d = np.zeros((r, r, s.precision, s.algebra.k), dtype=np.int64)
        for i in range(r):
            d[i, i] = s.coeffs
        return cls(s.algebra, d)

    @classmethod
    def constant(cls, A, M, N):
        """Series matrix with constant entries M (shape (r, c, k))."""
        M = np.asarray(M, dtype=np.int64)
        d = np.zeros(M.shape[:2] + (N, A.k), dtype=np.int64)
        d[:, :, 0, :] = M
        return cls(A, d)

    def entry(self, i, j) -> ZSeries:
        return ZSeries(self.algebra, self.data[i, j])

    def truncate(self, N):
        if N > self.precision:
            raise InsufficientPrecision(
                f"need precision {N}, have {self.precision}")
        return ZMatrix(self.algebra, self.data[:, :, :N])

    def constant_term(self):
        return self.data[:, :, 0, :].copy()

    def _check(self, other):
        self.algebra.require_same(other.algebra)

    def __add__(self, other):
        self._check(other)
        N = min(self.precision, other.precision)
        return ZMatrix(self.algebra, self.algebra.add(self.data[:, :, :N], other.data[:, :, :N]))

    def __sub__(self, other):
        self._check(other)
        N = min(self.precision, other.precision)
        return ZMatrix(self.algebra, self.algebra.sub(self.data[:, :, :N], other.data[:, :, :N]))

    def __neg__(self):
        return ZMatrix(self.algebra, self.algebra.neg(self.data))

    def __matmul__(self, other):
        self._check(other)
        A = self.algebra
        X, Y = self.data, other.data
        if X.shape[1] != Y.shape[0]:
            raise ShtukaError("matrix shapes do not match")
        N = min(X.shape[2], Y.shape[2])
        out = np.zeros((X.shape[0], Y.shape[1], N, A.k), dtype=np.int64)
        for i in range(N):
            xi = X[:, :, i, :]
            if not np.any(xi):
                continue
            term = A.mul(xi[:, :, None, None, :], Y[None, :, :, : N - i, :])
            out[:, :, i:] = A.add(out[:, :, i:], A.sum(term, axis=1))
        return ZMatrix(A, out)

    def scale(self, s: ZSeries):
        return ZMatrix.scalar(s, self.shape[0]) @ self

    def frobenius(self, n=1):
        return ZMatrix(self.algebra, self.algebra.frob(self.data, n))

    def transpose(self):
        return ZMatrix(self.algebra, np.transpose(self.data, (1, 0, 2, 3)).copy())

    def kron(self, other):
        """Kronecker product; row index (i, i') -> i * r' + i'."""
        self._check(other)
        A = self.algebra
        N = min(self.precision, other.precision)
        r1, c1 = self.shape
        r2, c2 = other.shape
        out = np.zeros((r1 * r2, c1 * c2, N, A.k), dtype=np.int64)
        for i in range(r1):
            for j in range(c1):
                a = self.data[i, j, :N]
                if not np.any(a):
                    continue
                for s in range(r2):
                    for t in range(c2):
                        out[i * r2 + s, j * c2 + t] = series_mul(A, a, other.data[s, t, :N])
        return ZMatrix(A, out)

    def is_zero(self):
        return not np.any(self.data)

    def __eq__(self, other):
        if not isinstance(other, ZMatrix):
            return NotImplemented
        N = min(self.precision, other.precision)
        return (self.algebra.same_as(other.algebra) and self.shape == other.shape
                and np.array_equal(self.data[:, :, :N], other.data[:, :, :N]))

    def flatten(self, N=None):
        """F_q-matrix of v -> M v on (R[z]/z^N)^c, layout (i, n, l)."""
        A = self.algebra
        N = self.precision if N is None else N
        r, c = self.shape
        B = N * A.k
        out = np.zeros((r * B, c * B), dtype=np.int64)
        for i in range(r):
            for j in range(c):
                if np.any(self.data[i, j, :N]):
                    out[i * B:(i + 1) * B, j * B:(j + 1) * B] = series_mulmat(A, self.data[i, j], N)
        return out

    def format(self):
        return [[self.entry(i, j).format() for j in range(self.shape[1])]
                for i in range(self.shape[0])]

    def __repr__(self):
        return f"ZMatrix({self.format()}, N={self.precision})"


def det(M: ZMatrix) -> ZSeries:
    """Determinant by expansion over column subsets; no division is used, so
    it is exact over non-reduced coefficient rings."""
    A = M.algebra
    r, c = M.shape
    if r != c:
        raise NotSquare("determinant of a non-square matrix")
    N = M.precision
    one = ZSeries.const(A, A.one(), N).coeffs
    D = {0: one}
    for row in range(r):
        nxt = {}
        for S, val in D.items():
            for col in range(r):
                if S >> col & 1:
                    continue
                if not np.any(M.data[row, col]):
                    continue
                term = series_mul(A, val, M.data[row, col])
                if bin(S >> (col + 1)).count("1") % 2:
                    term = A.neg(term)
                T = S | (1 << col)
                nxt[T] = A.add(nxt[T], term) if T in nxt else term
        D = nxt
    full = (1 << r) - 1
    return ZSeries(A, D.get(full, np.zeros((N, A.k), dtype=np.int64)))


def adjugate(M: ZMatrix) -> ZMatrix:
    A = M.algebra
    r = M.shape[0]
    N = M.precision
    out = np.zeros((r, r, N, A.k), dtype=np.int64)
    if r == 1:
        out[0, 0, 0, 0] = 1
        return ZMatrix(A, out)
    for i in range(r):
        for j in range(r):
            rows = [a for a in range(r) if a != j]
            cols = [b for b in range(r) if b != i]
            minor = ZMatrix(A, M.data[np.ix_(rows, cols)])
            d = det(minor).coeffs
            out[i, j] = A.neg(d) if (i + j) % 2 else d
    return ZMatrix(A, out)


def solve_series(M: ZMatrix, B: ZMatrix):
    """Solve M X = B over R[z]/(z^N).

    Returns (X, trusted) where every solution agrees with X modulo z^trusted,
    so X mod z^trusted is the reduction of any exact solution.  Raises
    NoSolution whose witness is the first column of B with no solution.
    """
    A = M.algebra
    N = min(M.precision, B.precision)
    flat = M.truncate(N).flatten(N)
    r, c = M.shape
    cols = B.shape[1]
    rhs = np.zeros((r * N * A.k, cols), dtype=np.int64)
    for j in range(cols):
        rhs[:, j] = B.data[:, j, :N].reshape(-1)
    X = fl.solve(A.field, flat, rhs)
    K = fl.kernel(A.field, flat)
    trusted = N
    if K.shape[0]:
        Kr = K.reshape(K.shape[0], c, N, A.k)
        nz = np.any(Kr, axis=(0, 1, 3))
        trusted = int(np.argmax(nz)) if nz.any() else N
    data = np.zeros((c, cols, N, A.k), dtype=np.int64)
    for j in range(cols):
        data[:, j] = X[:, j].reshape(c, N, A.k)
    return ZMatrix(A, data), trusted


def parse_series(A: FdAlgebra, text, N):
    """Evaluate an arithmetic expression in z, zeta, integers and the basis
    names of A (and w, the generator of F_q) to a series of precision N."""
    from .expr import evaluate
    return evaluate(text, A, N)
