"""Chern-Weil representatives and the Chern-Simons form in a trivialization.

Normalizations: every characteristic form carries 1/(2 pi i)^k on its
degree-2k component.  The second Chern form is taken with the sign that
makes d CS = (1/2) c2 hold for

    CS(B) = (1/4) (1/(2 pi i)^2) ( tr(R ^ B) - (1/3) tr(B ^ B ^ B) ),

i.e. c2 = (1/2) (1/(2 pi i))^2 (tr(R^R) - tr R ^ tr R); for connections with
vanishing first Chern form this coincides with ch2, and the first Pontrjagin
form of a real connection is p1 = -c2 of its complexification.  Real bundles
are handled through complexification with an antihermitian check at runtime.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ad, forms
from .forms import (EndFormField, ScalarFormField, exterior_d, trace_form,
                    wedge, wedge_fields, trace_field, supertrace_field,
                    graded_exp)
from .geom import fiber_integrate

__all__ = [
    "GaugedConnection", "curvature", "chern_forms", "cs_form",
    "curvature_correction", "chern_character_field", "gauge_transform",
]

TWO_PI_I = 2j * np.pi


@dataclass
class GaugedConnection:
    """Connection one-form in a chosen trivialization of a rank-n bundle."""

    domain: object
    n: int
    A: EndFormField
    antihermitian: bool = True

    def __post_init__(self):
        val = self.A.eval(_sample_points(self.domain))
        degs = val.degrees() - {None}
        if degs and degs != {1}:
            raise ValueError(f"connection form must be pure degree 1, got {degs}")
        if self.antihermitian:
            for c in val.comps.values():
                v = ad.value_of_deep(c)
                herm = np.max(np.abs(v + np.conjugate(np.swapaxes(v, -1, -2))))
                if herm > 1e-12:
                    raise ValueError(
                        f"connection coefficients not antihermitian ({herm:.2e})")


def _sample_points(domain, count=7):
    rng = np.random.default_rng(1234)
    return domain.random_points(rng, count)


def curvature(conn):
    """R = dA + A ^ A as a degree-2 form field."""
    dA = exterior_d(conn.A)
    AA = wedge_fields(conn.A, conn.A)
    fld = dA + AA
    fld._degrees = frozenset({2})
    return fld


def gauge_transform(conn, gfield):
    """A ↦ g A g^{-1} + g d g^{-1} for a pointwise unitary gauge change."""
    dom, n = conn.domain, conn.n

    def func(coords):
        jets = ad.seed(coords)
        g = gfield(jets)
        gval = ad.value_of(g) if isinstance(g, ad.Jet) else g
        ginv = ad.conj(ad.transpose(gval))
        dg_inv = [ad.conj(ad.transpose(gj)) for gj in
                  (g.jac if isinstance(g, ad.Jet) else [0.0] * dom.dim)]
        Aval = conn.A.eval(coords)
        comps = {}
        for k in range(dom.dim):
            term = 0.0
            base = Aval.comps.get(1 << k)
            if base is not None:
                term = ad.matmul(ad.matmul(gval, base), ginv)
            if isinstance(g, ad.Jet):
                term = term + ad.matmul(gval, dg_inv[k])
            if not isinstance(term, float):
                comps[1 << k] = term
        return forms.GradedEndForm(dom.dim, n, comps)

    A = EndFormField(dom, n, func, declared_degrees={1})
    return GaugedConnection(dom, n, A, antihermitian=conn.antihermitian)


def chern_forms(conn, check_points=None):
    """Chern-Weil representatives {c1, c2, ch2, p1} as scalar form fields.

    p1 is the first Pontrjagin form of the underlying real connection,
    p1 = -c2 of the complexification; requesting it checks that the c1
    representative vanishes (sup norm <= 1e-10 at sample points).
    """
    R = curvature(conn)
    trR = trace_field(R)
    c1 = trR.scale(1.0 / TWO_PI_I)
    RR = trace_field(wedge_fields(R, R))
    trtr = trR.wedge(trR)
    c2 = (RR - trtr).scale(0.5 / TWO_PI_I ** 2)
    ch2 = RR.scale(0.5 / TWO_PI_I ** 2)

    pts = check_points if check_points is not None else _sample_points(conn.domain)
    c1_sup = c1.eval(pts).max_abs()

    def p1_func(coords):
        if c1_sup > 1e-10:
            raise ValueError(
                f"p1 requested but the c1 form does not vanish ({c1_sup:.2e})")
        return c2.func(coords).scale(-1.0)

    p1 = ScalarFormField(conn.domain, p1_func, declared_degrees={4})
    return {"c1": c1, "c2": c2, "ch2": ch2, "p1": p1}


def cs_form(conn):
    """Chern-Simons 3-form of a connection given in a trivialization:
    (1/4)(1/(2 pi i)^2) (tr R^B - (1/3) tr B^3).  Its differential is half
    of the second Chern form."""
    B = conn.A
    dom = conn.domain

    def func(coords):
        jets = ad.seed(coords)
        Bj = B.func(jets)
        Bval = forms.GradedEndForm(dom.dim, conn.n, Bj.values())
        dB = _d_from_jet(Bj, dom.dim, conn.n)
        Rval = dB + wedge(Bval, Bval)
        t1 = trace_form(wedge(Rval, Bval))
        t2 = trace_form(wedge(wedge(Bval, Bval), Bval))
        out = (t1 + t2.scale(-1.0 / 3.0)).scale(0.25 / TWO_PI_I ** 2)
        return out.select_degree(3)

    return ScalarFormField(dom, func, declared_degrees={3})


def _d_from_jet(form_jet, dim, n):
    """Assemble the exterior derivative from a jet-evaluated form."""
    out = {}
    for mask, comp in form_jet.comps.items():
        if not isinstance(comp, ad.Jet):
            continue
        for k in range(dim):
            if mask & (1 << k):
                continue
            sgn = forms.merge_sign(1 << k, mask)
            key = mask | (1 << k)
            out[key] = out.get(key, 0) + sgn * comp.jac[k]
    return forms.GradedEndForm(dim, n, out, parity=form_jet.parity)


def chern_character_field(conn_field, parity):
    """phi tr_s exp(-R) for a graded connection one-form field: the local
    index form of a zero-dimensional family.  2k-form components are scaled
    by (1/(2 pi i))^k."""
    A = conn_field if isinstance(conn_field, EndFormField) else conn_field.A
    n = A.n

    def func(coords):
        jets = ad.seed(coords)
        Aj = A.func(jets)
        Aval = forms.GradedEndForm(Aj.dim, n, Aj.values(), parity=parity)
        dA = _d_from_jet(Aj, Aj.dim, n)
        dA = forms.GradedEndForm(Aj.dim, n, dA.comps, parity=parity)
        Rval = dA + wedge(Aval, Aval)
        E = graded_exp(Rval.scale(-1.0))
        st = forms.supertrace(E)
        out = {}
        for m, c in st.comps.items():
            k = bin(m).count("1")
            if k % 2:
                continue
            out[m] = c * (1.0 / TWO_PI_I ** (k // 2))
        return forms.ScalarForm(Rval.dim, out, batch=Rval.batch)

    return ScalarFormField(A.domain, func)


def curvature_correction(R_W, hQ, E):
    """Fiber integral (1/(8 pi i)) int_{E/B} tr(R_W ^ hQ ^ hQ): the degree-2
    correction to the curvature of a Pfaffian bundle induced by a taming
    that is not covariantly constant.  ``hQ`` must be odd for the W grading.
    """
    if hQ.parity is None or R_W.parity is None:
        raise ValueError("curvature_correction requires graded inputs")
    val = hQ.eval(_sample_points(E))
    p, q = hQ.parity
    mask = np.zeros((hQ.n, hQ.n))
    mask[:p, :p] = 1.0
    mask[p:, p:] = 1.0
    for c in val.comps.values():
        diag = np.max(np.abs(ad.value_of_deep(c) * mask))
        if diag > 1e-10:
            raise ValueError(f"hQ is not odd for the grading ({diag:.2e})")
    integrand = supertrace_field(wedge_fields(R_W, wedge_fields(hQ, hQ)))
    pushed = fiber_integrate(E, integrand)
    return pushed.scale(1.0 / (8j * np.pi))
