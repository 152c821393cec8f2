"""Graded algebra of matrix-valued differential forms.

Values are inhomogeneous forms stored as sparse multi-index tables:
``comps[mask]`` is the coefficient of dx_I for the bit mask ``mask``, an
(n, n) complex matrix (with arbitrary leading batch axes).  The product is
the super tensor product of the exterior algebra with End(W): moving a form
past an odd endomorphism costs a sign, so for coefficients A of dx_I and B
of dx_J

    (dx_I A) ^ (dx_J B) = shuffle(I,J) * dx_{I|J} (A_even B + (-1)^{|J|} A_odd B).

With this convention the square of a superconnection t^{1/2} Qbar + d + A
comes out of plain ``wedge``/``exterior_d`` arithmetic.

Fields are closures over chart coordinates; ``exterior_d`` differentiates
them with forward-mode jets, so d is exact to machine precision and nests
(d of a field that itself used d works via nested jets).
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from . import ad
from .geom import merge_sign

__all__ = [
    "GradedEndForm", "ScalarForm", "SuperTraceResult",
    "EndFormField", "ScalarFormField",
    "wedge", "exterior_d", "supertrace", "trace_form", "graded_exp",
    "identity_form", "one_form", "zero_form",
]


def _popcount(m):
    return bin(m).count("1")


def _parity_split(comp, parity, n):
    """(even part, odd part) of a matrix coefficient w.r.t. the W grading."""
    if parity is None:
        return comp, None
    p, q = parity
    mask = np.zeros((n, n))
    mask[:p, :p] = 1.0
    mask[p:, p:] = 1.0
    even = comp * mask
    odd = comp * (1.0 - mask)
    return even, odd


def _scal_to_mat(s):
    """Append two singleton axes to a (batched) scalar coefficient."""
    shape = np.shape(ad.value_of_deep(s))
    if not shape:
        return s
    return ad.reshape(s, shape + (1, 1))


class GradedEndForm:
    """Inhomogeneous End(W)-valued form at a point (or batch of points)."""

    def __init__(self, dim, n, comps, parity=None, batch=()):
        self.dim = dim
        self.n = n
        self.comps = dict(comps)
        self.parity = parity
        self.batch = tuple(batch)
        if parity is not None and parity[0] + parity[1] != n:
            raise ValueError("parity blocks must sum to matrix size")
        if any(m >= (1 << dim) for m in self.comps):
            raise ValueError("component multi-index exceeds base dimension")

    def degrees(self):
        return {_popcount(m) for m in self.comps}

    def select_degree(self, k):
        return GradedEndForm(self.dim, self.n,
                             {m: c for m, c in self.comps.items()
                              if _popcount(m) == k},
                             parity=self.parity, batch=self.batch)

    def __add__(self, other):
        if isinstance(other, GradedEndForm):
            if (self.dim, self.n) != (other.dim, other.n):
                raise ValueError("dimension mismatch")
            out = dict(self.comps)
            for m, c in other.comps.items():
                out[m] = out[m] + c if m in out else c
            return GradedEndForm(self.dim, self.n, out,
                                 parity=self.parity or other.parity,
                                 batch=self.batch or other.batch)
        return NotImplemented

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, s):
        s = _scal_to_mat(s)
        return GradedEndForm(self.dim, self.n,
                             {m: c * s for m, c in self.comps.items()},
                             parity=self.parity, batch=self.batch)

    def values(self):
        """Plain comps (strip one jet layer if present)."""
        return {m: ad.value_of(c) for m, c in self.comps.items()}

    def max_abs(self):
        tops = [np.max(np.abs(ad.value_of_deep(c))) for c in self.comps.values()]
        return max(tops) if tops else 0.0


class ScalarForm:
    """Inhomogeneous scalar-valued form: one coefficient per multi-index."""

    def __init__(self, dim, comps, batch=()):
        self.dim = dim
        self.comps = dict(comps)
        self.batch = tuple(batch)

    def degrees(self):
        return {_popcount(m) for m in self.comps}

    def select_degree(self, k):
        return ScalarForm(self.dim, {m: c for m, c in self.comps.items()
                                     if _popcount(m) == k}, batch=self.batch)

    def __add__(self, other):
        out = dict(self.comps)
        for m, c in other.comps.items():
            out[m] = out[m] + c if m in out else c
        return ScalarForm(self.dim, out, batch=self.batch or other.batch)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, s):
        return ScalarForm(self.dim, {m: c * s for m, c in self.comps.items()},
                          batch=self.batch)

    def coefficient(self, mask):
        return self.comps.get(mask, 0.0)

    def max_abs(self):
        tops = [np.max(np.abs(ad.value_of_deep(c))) for c in self.comps.values()]
        return max(tops) if tops else 0.0


SuperTraceResult = ScalarForm


def zero_form(dim, n=None, parity=None):
    if n is None:
        return ScalarForm(dim, {})
    return GradedEndForm(dim, n, {}, parity=parity)


def identity_form(dim, n, parity=None, batch=()):
    eye = np.broadcast_to(np.eye(n, dtype=complex), batch + (n, n))
    return GradedEndForm(dim, n, {0: eye.copy()}, parity=parity, batch=batch)


def one_form(dim, n, coeff_mats, parity=None):
    """Degree-1 form from per-coordinate matrix coefficients."""
    comps = {}
    for k, mat in enumerate(coeff_mats):
        if mat is not None:
            comps[1 << k] = mat
    return GradedEndForm(dim, n, comps, parity=parity)


def wedge(a, b):
    """Graded product.  Accepts matrix and scalar forms in either slot."""
    sa, sb = isinstance(a, ScalarForm), isinstance(b, ScalarForm)
    if not sa and not sb:
        return _wedge_mm(a, b)
    if sa and sb:
        if a.dim != b.dim:
            raise ValueError("dimension mismatch")
        out = {}
        for I, A in a.comps.items():
            for J, B in b.comps.items():
                if I & J:
                    continue
                _acc(out, I | J, merge_sign(I, J) * (A * B))
        return ScalarForm(a.dim, out, batch=a.batch or b.batch)
    if sa:
        out = {}
        for I, A in a.comps.items():
            Am = _scal_to_mat(A)
            for J, B in b.comps.items():
                if I & J:
                    continue
                _acc(out, I | J, merge_sign(I, J) * (Am * B))
        return GradedEndForm(b.dim, b.n, out, parity=b.parity,
                             batch=a.batch or b.batch)
    # matrix ^ scalar: Koszul sign from the odd part of a against |J|
    out = {}
    for I, A in a.comps.items():
        Ae, Ao = _parity_split(A, a.parity, a.n)
        for J, B in b.comps.items():
            if I & J:
                continue
            s = merge_sign(I, J)
            Bm = _scal_to_mat(B)
            term = Ae * Bm
            if Ao is not None:
                term = term + ((-1) ** _popcount(J)) * (Ao * Bm)
            _acc(out, I | J, s * term)
    return GradedEndForm(a.dim, a.n, out, parity=a.parity,
                         batch=a.batch or b.batch)


def _acc(out, mask, term):
    out[mask] = out[mask] + term if mask in out else term


def _wedge_mm(a, b):
    if (a.dim, a.n) != (b.dim, b.n):
        raise ValueError("dimension mismatch")
    parity = a.parity or b.parity
    out = {}
    for I, A in a.comps.items():
        Ae, Ao = _parity_split(A, a.parity, a.n)
        for J, B in b.comps.items():
            if I & J:
                continue
            s = merge_sign(I, J)
            term = ad.matmul(Ae, B)
            if Ao is not None:
                sign_j = (-1) ** _popcount(J)
                term = term + sign_j * ad.matmul(Ao, B)
            _acc(out, I | J, s * term)
    return GradedEndForm(a.dim, a.n, out, parity=parity,
                         batch=a.batch or b.batch)


def supertrace(form):
    """Trace on the even block minus trace on the odd block, per multi-index."""
    if form.parity is None:
        raise ValueError("supertrace requires a declared parity grading")
    p, q = form.parity
    sgn = [1.0] * p + [-1.0] * q
    out = {}
    for m, c in form.comps.items():
        tot = 0.0
        for i in range(form.n):
            tot = tot + sgn[i] * c[..., i, i]
        out[m] = tot
    return ScalarForm(form.dim, out, batch=form.batch)


def trace_form(form):
    """Plain matrix trace per multi-index."""
    out = {}
    for m, c in form.comps.items():
        tot = 0.0
        for i in range(form.n):
            tot = tot + c[..., i, i]
        out[m] = tot
    return ScalarForm(form.dim, out, batch=form.batch)


def graded_exp(x, rtol=1e-12):
    """Exponential of a graded form.

    If the degree-0 part is absent or a scalar multiple of the identity, the
    result is exp(s) times the terminating series in the nilpotent part.
    Otherwise the form is exponentiated in the left-regular representation
    on Lambda(R^d) (x) C^n, a single dense matrix exponential of size n 2^d.
    """
    for c in x.comps.values():
        v = ad.value_of_deep(c)
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite entries in graded_exp input")
    a0 = x.comps.get(0)
    if a0 is not None:
        tr = 0.0
        for i in range(x.n):
            tr = tr + a0[..., i, i]
        s = tr / x.n
        dev = a0 - _scal_to_mat(s) * np.eye(x.n)
        devmag = np.max(np.abs(ad.value_of_deep(dev))) if x.n else 0.0
        smag = np.max(np.abs(ad.value_of_deep(s)))
        if devmag > rtol * (1.0 + smag):
            return _exp_regular_rep(x)
    else:
        s = None

    nil = GradedEndForm(x.dim, x.n,
                        {m: c for m, c in x.comps.items() if m != 0},
                        parity=x.parity, batch=x.batch)
    out = identity_form(x.dim, x.n, parity=x.parity, batch=x.batch)
    term = out
    for m in range(1, x.dim + 1):
        term = wedge(term, nil).scale(1.0 / m)
        if not term.comps:
            break
        out = out + term
    if s is not None:
        out = out.scale(ad.exp(s))
    return out


def _exp_regular_rep(x):
    comps = x.values()
    for c in comps.values():
        if isinstance(c, ad.Jet):
            raise NotImplementedError(
                "regular-representation exponential does not support jets")
    batch = x.batch
    if batch:
        flat = int(np.prod(batch))
        outs = []
        for idx in range(flat):
            sub = {m: c.reshape((flat,) + c.shape[len(batch):])[idx]
                   for m, c in comps.items()}
            outs.append(_exp_regular_rep(
                GradedEndForm(x.dim, x.n, sub, parity=x.parity)))
        merged = {}
        for m in range(1 << x.dim):
            stacks = [o.comps.get(m) for o in outs]
            if all(s is None for s in stacks):
                continue
            stacks = [np.zeros((x.n, x.n), complex) if s is None else s
                      for s in stacks]
            merged[m] = np.stack(stacks).reshape(batch + (x.n, x.n))
        return GradedEndForm(x.dim, x.n, merged, parity=x.parity, batch=batch)

    d, n = x.dim, x.n
    D = 1 << d
    L = np.zeros((D * n, D * n), dtype=complex)
    for I, A in comps.items():
        Ae, Ao = _parity_split(A, x.parity, n)
        for J in range(D):
            if I & J:
                continue
            K = I | J
            blk = Ae if Ao is None else Ae + ((-1) ** _popcount(J)) * Ao
            L[K * n:(K + 1) * n, J * n:(J + 1) * n] += merge_sign(I, J) * blk
    E = scipy.linalg.expm(L)
    out = {}
    for K in range(D):
        blk = E[K * n:(K + 1) * n, 0:n]
        if np.max(np.abs(blk)) > 0:
            out[K] = blk
    return GradedEndForm(d, n, out, parity=x.parity)


# -- fields -------------------------------------------------------------------

class _FieldBase:
    def __init__(self, domain, func, declared_degrees=None):
        self.domain = domain
        self.func = func
        self._degrees = (frozenset(declared_degrees)
                         if declared_degrees is not None else None)

    def degrees(self):
        return set(self._degrees) if self._degrees is not None else set()

    def eval(self, coords):
        return self.func(tuple(coords))

    def eval_at_points(self, points):
        """Evaluate at a tuple of coordinate arrays; alias of eval."""
        return self.eval(points)


class EndFormField(_FieldBase):
    def __init__(self, domain, n, func, parity=None, declared_degrees=None):
        super().__init__(domain, func, declared_degrees)
        self.n = n
        self.parity = parity

    def wedge(self, other):
        return wedge_fields(self, other)

    def __add__(self, other):
        def func(coords):
            return self.func(coords) + other.func(coords)
        return EndFormField(self.domain, self.n, func, parity=self.parity)

    def scale(self, s):
        def func(coords):
            return self.func(coords).scale(s)
        return EndFormField(self.domain, self.n, func, parity=self.parity,
                            declared_degrees=self._degrees)


class ScalarFormField(_FieldBase):
    def wedge(self, other):
        return wedge_fields(self, other)

    def __add__(self, other):
        def func(coords):
            return self.func(coords) + other.func(coords)
        return ScalarFormField(self.domain, func)

    def __sub__(self, other):
        def func(coords):
            return self.func(coords) - other.func(coords)
        return ScalarFormField(self.domain, func)

    def scale(self, s):
        def func(coords):
            return self.func(coords).scale(s)
        return ScalarFormField(self.domain, func, declared_degrees=self._degrees)

    def select_degree(self, k):
        def func(coords):
            return self.func(coords).select_degree(k)
        return ScalarFormField(self.domain, func, declared_degrees={k})


def wedge_fields(a, b):
    def func(coords):
        return wedge(a.func(coords), b.func(coords))
    if isinstance(a, ScalarFormField) and isinstance(b, ScalarFormField):
        return ScalarFormField(a.domain, func)
    n = getattr(a, "n", None) or getattr(b, "n", None)
    parity = getattr(a, "parity", None) or getattr(b, "parity", None)
    return EndFormField(a.domain, n, func, parity=parity)


def supertrace_field(field):
    return ScalarFormField(field.domain, lambda coords: supertrace(field.func(coords)))


def trace_field(field):
    return ScalarFormField(field.domain, lambda coords: trace_form(field.func(coords)))


def exterior_d(field):
    """Exterior derivative of a form field via forward-mode jets.

    Satisfies d(d(field)) = 0 to machine precision; nested applications use
    nested jets.
    """
    dim = field.domain.dim

    def dfunc(coords):
        field.domain.check_interior(coords)
        jets = ad.seed(coords)
        F = field.func(jets)
        out = {}
        for mask, comp in F.comps.items():
            if not isinstance(comp, ad.Jet):
                continue  # constant coefficient
            for k in range(dim):
                if mask & (1 << k):
                    continue
                dk = comp.jac[k]
                sgn = merge_sign(1 << k, mask)
                _acc(out, mask | (1 << k), sgn * dk)
        if isinstance(F, ScalarForm):
            return ScalarForm(dim, out, batch=F.batch)
        return GradedEndForm(dim, F.n, out, parity=F.parity, batch=F.batch)

    if isinstance(field, ScalarFormField):
        return ScalarFormField(field.domain, dfunc)
    return EndFormField(field.domain, field.n, dfunc, parity=field.parity)
