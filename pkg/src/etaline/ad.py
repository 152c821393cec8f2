"""Forward-mode automatic differentiation on numpy values.

A :class:`Jet` carries a value together with its partial derivatives with
respect to a fixed set of chart coordinates.  Values may be python scalars,
numpy arrays of any (batched) shape, or nested Jets; second derivatives are
obtained by wrapping coordinates twice.  All field closures in this package
are written against the dispatch functions below (``sin``, ``matmul``, ...)
so the same closure evaluates plain values, batched grids, and jets.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Jet", "seed", "value_of", "partials_of",
    "sin", "cos", "exp", "sqrt", "log", "arctan2", "conj", "real", "imag",
    "where", "sinc", "matmul", "transpose", "inv", "reshape", "asum",
    "stack", "mat2", "blocks",
]


class Jet:
    """Value plus first partials with respect to ``nvars`` coordinates."""

    __slots__ = ("val", "jac")
    # keep numpy from broadcasting over us; binary ops fall through to __r*__
    __array_ufunc__ = None

    def __init__(self, val, jac):
        self.val = val
        self.jac = tuple(jac)

    @property
    def nvars(self):
        return len(self.jac)

    def __repr__(self):
        return f"Jet(val={self.val!r}, nvars={len(self.jac)})"

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val,
                       [a + b for a, b in zip(self.jac, other.jac)])
        return Jet(self.val + other, self.jac)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val - other.val,
                       [a - b for a, b in zip(self.jac, other.jac)])
        return Jet(self.val - other, self.jac)

    def __rsub__(self, other):
        return Jet(other - self.val, [-a for a in self.jac])

    def __neg__(self):
        return Jet(-self.val, [-a for a in self.jac])

    def __mul__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val * other.val,
                       [a * other.val + self.val * b
                        for a, b in zip(self.jac, other.jac)])
        return Jet(self.val * other, [a * other for a in self.jac])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            iv = 1.0 / other.val
            q = self.val * iv
            return Jet(q, [(a - q * b) * iv
                           for a, b in zip(self.jac, other.jac)])
        return Jet(self.val / other, [a / other for a in self.jac])

    def __rtruediv__(self, other):
        iv = 1.0 / self.val
        q = other * iv
        return Jet(q, [-q * b * iv for b in self.jac])

    def __pow__(self, k):
        if not isinstance(k, (int, np.integer)):
            raise TypeError("Jet.__pow__ supports integer exponents only")
        if k == 0:
            return Jet(self.val * 0 + 1.0, [a * 0 for a in self.jac])
        p = self.val ** (k - 1)
        return Jet(p * self.val, [k * p * a for a in self.jac])

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, idx):
        return Jet(self.val[idx], [a[idx] for a in self.jac])


def seed(values, nvars=None):
    """Wrap a coordinate tuple as jets with unit partials.

    ``seed((x, y))`` returns ``(Jet(x, (1, 0)), Jet(y, (0, 1)))``.  Incoming
    entries may themselves be jets (nesting gives second derivatives).
    """
    vals = tuple(values)
    n = len(vals) if nvars is None else nvars
    out = []
    for k, v in enumerate(vals):
        jac = [0.0] * n
        jac[k] = 1.0
        out.append(Jet(v, jac))
    return tuple(out)


def value_of(x):
    """Strip one jet layer (identity on plain values)."""
    return x.val if isinstance(x, Jet) else x


def partials_of(x, nvars):
    if isinstance(x, Jet):
        return x.jac
    return tuple(0.0 for _ in range(nvars))


# -- scalar functions --------------------------------------------------------

def sin(x):
    if isinstance(x, Jet):
        c = cos(x.val)
        return Jet(sin(x.val), [c * a for a in x.jac])
    return np.sin(x)


def cos(x):
    if isinstance(x, Jet):
        s = sin(x.val)
        return Jet(cos(x.val), [-s * a for a in x.jac])
    return np.cos(x)


def exp(x):
    if isinstance(x, Jet):
        e = exp(x.val)
        return Jet(e, [e * a for a in x.jac])
    return np.exp(x)


def sqrt(x):
    if isinstance(x, Jet):
        r = sqrt(x.val)
        h = 0.5 / r
        return Jet(r, [h * a for a in x.jac])
    return np.sqrt(x)


def log(x):
    if isinstance(x, Jet):
        return Jet(log(x.val), [a / x.val for a in x.jac])
    return np.log(x)


def arctan2(y, x):
    if isinstance(y, Jet) or isinstance(x, Jet):
        yv, xv = value_of(y), value_of(x)
        n = y.nvars if isinstance(y, Jet) else x.nvars
        r2 = xv * xv + yv * yv
        yj = partials_of(y, n)
        xj = partials_of(x, n)
        return Jet(arctan2(yv, xv),
                   [(xv * dy - yv * dx) / r2 for dy, dx in zip(yj, xj)])
    return np.arctan2(y, x)


def conj(x):
    if isinstance(x, Jet):
        return Jet(conj(x.val), [conj(a) for a in x.jac])
    return np.conjugate(x)


def real(x):
    if isinstance(x, Jet):
        return Jet(real(x.val), [real(a) for a in x.jac])
    return np.real(x)


def imag(x):
    if isinstance(x, Jet):
        return Jet(imag(x.val), [imag(a) for a in x.jac])
    return np.imag(x)


def where(cond, a, b):
    """Branch on a plain boolean condition (condition never differentiates)."""
    if isinstance(a, Jet) or isinstance(b, Jet):
        n = a.nvars if isinstance(a, Jet) else b.nvars
        aj, bj = partials_of(a, n), partials_of(b, n)
        av, bv = value_of(a), value_of(b)
        return Jet(where(cond, av, bv),
                   [where(cond, x, y) for x, y in zip(aj, bj)])
    return np.where(cond, a, b)


def sinc(x):
    """sin(x)/x, smooth through x = 0 (series branch below 1e-3)."""
    if isinstance(x, Jet):
        v = x.val
        small = np.abs(value_of_deep(v)) < 1e-3
        s = where(small, 1.0 - v * v / 6.0 + (v ** 4) / 120.0, sin(v) / _safe(v, small))
        ds = where(small, -v / 3.0 + (v ** 3) / 30.0,
                   (cos(v) - s) / _safe(v, small))
        return Jet(s, [ds * a for a in x.jac])
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 6.0 + x ** 4 / 120.0, np.sin(xs) / xs)


def _safe(v, small_mask):
    # replace entries that the series branch will use anyway
    return where(small_mask, v * 0 + 1.0, v)


def periodic_offset(u, center, period):
    """Signed offset from center on a circle of the given period, in
    [-period/2, period/2).  The jump locus is the antipode of the center;
    jets pass the derivative through unchanged."""
    if isinstance(u, Jet):
        return Jet(periodic_offset(u.val, center, period), list(u.jac))
    return np.mod(u - center + 0.5 * period, period) - 0.5 * period


def cos_sqrt(r):
    """cos(sqrt(r)) as a smooth function of r >= 0 (safe jets at r = 0)."""
    if isinstance(r, Jet):
        v = r.val
        c = cos_sqrt(v)
        d = -0.5 * sinc_sqrt(v)
        return Jet(c, [d * a for a in r.jac])
    r = np.asarray(r, dtype=float)
    return np.cos(np.sqrt(np.maximum(r, 0.0)))


def sinc_sqrt(r):
    """sin(sqrt(r))/sqrt(r) as a smooth function of r >= 0."""
    if isinstance(r, Jet):
        v = r.val
        s = sinc_sqrt(v)
        vv = value_of_deep(v)
        small = np.abs(vv) < 1e-6
        rs = where(small, v * 0 + 1.0, v)
        d_general = (cos_sqrt(v) - s) / (2.0 * rs)
        d_series = -1.0 / 6.0 + v / 60.0
        d = where(small, d_series, d_general)
        return Jet(s, [d * a for a in r.jac])
    r = np.asarray(r, dtype=float)
    small = np.abs(r) < 1e-6
    rs = np.where(small, 1.0, r)
    return np.where(small, 1.0 - r / 6.0 + r * r / 120.0,
                    np.sin(np.sqrt(np.maximum(rs, 0.0)))
                    / np.sqrt(np.maximum(rs, 1e-300)))


def value_of_deep(x):
    while isinstance(x, Jet):
        x = x.val
    return x


# -- array/matrix helpers ----------------------------------------------------

def matmul(a, b):
    # scalar operands (structural zeros in jet partials) act by scaling
    if np.ndim(value_of_deep(a)) == 0 or np.ndim(value_of_deep(b)) == 0:
        return a * b
    if isinstance(a, Jet) or isinstance(b, Jet):
        n = a.nvars if isinstance(a, Jet) else b.nvars
        av, bv = value_of(a), value_of(b)
        jac = []
        for da, db in zip(partials_of(a, n), partials_of(b, n)):
            term = 0.0
            if np.ndim(value_of_deep(da)) != 0:
                term = term + matmul(da, bv)
            if np.ndim(value_of_deep(db)) != 0:
                term = term + matmul(av, db)
            jac.append(term)
        return Jet(matmul(av, bv), jac)
    return np.matmul(a, b)


def transpose(a):
    """Swap the last two axes (matrix transpose, batch aware)."""
    if isinstance(a, Jet):
        return Jet(transpose(a.val), [transpose(x) for x in a.jac])
    return np.swapaxes(a, -1, -2)


def inv(a):
    if isinstance(a, Jet):
        iv = inv(a.val)
        return Jet(iv, [-matmul(iv, matmul(da, iv)) for da in a.jac])
    return np.linalg.inv(a)


def _broadcast_like(x, shape):
    if isinstance(x, Jet):
        return Jet(_broadcast_like(x.val, shape),
                   [_broadcast_like(j, shape) for j in x.jac])
    return np.broadcast_to(np.asarray(x), shape)


def reshape(a, shape):
    if isinstance(a, Jet):
        vshape = np.shape(value_of_deep(a.val))
        jac = []
        for x in a.jac:
            if np.shape(value_of_deep(x)) != vshape:
                x = _broadcast_like(x, vshape)
            jac.append(reshape(x, shape))
        return Jet(reshape(a.val, shape), jac)
    a = np.asarray(a)
    if a.ndim == 0:
        # constant partials broadcast across the batch before reshaping
        return np.broadcast_to(a, shape)
    return np.reshape(a, shape)


def asum(a, axis):
    if isinstance(a, Jet):
        return Jet(asum(a.val, axis), [asum(x, axis) for x in a.jac])
    return np.sum(a, axis=axis)


def _broadcast_zeros_like(entries):
    shape = np.broadcast_shapes(*[np.shape(value_of_deep(e)) for e in entries])
    return np.zeros(shape, dtype=complex)


def stack(entries, axis):
    """Jet-aware np.stack over a list of equally-shaped entries."""
    if any(isinstance(e, Jet) for e in entries):
        n = next(e.nvars for e in entries if isinstance(e, Jet))
        vals = [value_of(e) for e in entries]
        jacs = []
        for k in range(n):
            jacs.append([e.jac[k] if isinstance(e, Jet) else _zero_like(e)
                         for e in entries])
        return Jet(stack(vals, axis), [stack(j, axis) for j in jacs])
    bshape = np.broadcast_shapes(*[np.shape(e) for e in entries])
    entries = [np.broadcast_to(np.asarray(e, dtype=complex), bshape) for e in entries]
    return np.stack(entries, axis=axis)


def _zero_like(e):
    v = value_of_deep(e)
    z = np.zeros(np.shape(v), dtype=complex) if np.shape(v) else 0.0
    if isinstance(e, Jet):
        return Jet(z, [_zero_like(x) for x in e.jac])
    return z


def mat2(rows):
    """Build a (batch, r, c) matrix from a nested list of scalar entries."""
    cols = [stack(r, axis=-1) for r in rows]
    return stack(cols, axis=-2)


def blocks(tl, tr, bl, br):
    """Assemble a 2x2 block matrix from four (batch, n, m) blocks."""
    top = _concat(tl, tr, axis=-1)
    bot = _concat(bl, br, axis=-1)
    return _concat(top, bot, axis=-2)


def _concat(a, b, axis):
    if isinstance(a, Jet) or isinstance(b, Jet):
        n = a.nvars if isinstance(a, Jet) else b.nvars
        av, bv = value_of(a), value_of(b)
        aj = partials_of(a, n)
        bj = partials_of(b, n)
        aj = [x if isinstance(x, (Jet, np.ndarray)) else np.zeros_like(av) for x in aj]
        bj = [x if isinstance(x, (Jet, np.ndarray)) else np.zeros_like(bv) for x in bj]
        return Jet(_concat(av, bv, axis),
                   [_concat(x, y, axis) for x, y in zip(aj, bj)])
    return np.concatenate([a, b], axis=axis)
