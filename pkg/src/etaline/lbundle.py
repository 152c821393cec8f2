"""Line bundles as cover/cocycle/connection data; holonomy; the transgressed
bundle built from spin trivializations; trivialization-induced string
sections.

A bundle over a base domain is recorded by named patches (products of
coordinate intervals, periodic-aware), U(1) transition functions c_ij =
s_i / s_j on overlaps, and imaginary connection one-forms per patch.  For
the transgressed bundle of a surface bundle E = F x B with spin bundle
data (V, trivializations Q_i) the local data are

    omega_i = -pi i int_{E/B} eta^3(W_{t_{Q_i}}),
    c_ij    = exp(-pi i int_{[0,1] x E / B} eta^3(W_{t_H})),  H: Q_j -> Q_i,

with homotopies H defaulting to pointwise SU(2) geodesics composed with the
representation.  Holonomy along a loop multiplies segment transports
exp(int omega) with transition values at patch switches; a loop contained
in one patch integrates with the loop's own (spectrally accurate)
quadrature.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import ad, forms
from .cw import chern_forms
from .eta import build_taming, eta_form
from .forms import ScalarFormField, exterior_d
from .geom import (ChartedDomain, Circle, Cycle, Interval, fiber_integrate,
                   integrate, make_product)
from .modelfields import su2_geodesic, su2_adjoint

__all__ = [
    "Patch", "LineBundleCocycle", "holonomy", "build_L",
    "StringData", "string_section", "StringSectionReport",
    "homotopy_loop_values", "CoverError",
]


class CoverError(ValueError):
    """Loop or point not coverable by the bundle's patches."""


@dataclass
class Patch:
    """Named product-of-intervals region of the base.

    ``region`` maps axis index -> (lo, hi); a periodic axis interval is the
    positively-oriented arc from lo to hi (hi may exceed the period).  Axes
    not listed are unconstrained.
    """

    name: str
    region: dict

    def contains(self, base, coords, margin=0.0):
        shape = np.broadcast_shapes(*[np.shape(c) for c in coords])
        ok = np.ones(shape, dtype=bool)
        for axis, (lo, hi) in self.region.items():
            x = coords[axis]
            a = base.axes[axis]
            if a.periodic:
                rel = np.mod(x - lo, a.period)
                ok = ok & (rel >= margin) & (rel <= (hi - lo) - margin)
            else:
                ok = ok & (x >= lo + margin) & (x <= hi - margin)
        return ok


class LineBundleCocycle:
    """Cover + U(1) transitions + imaginary connection one-forms."""

    def __init__(self, base, patches, transitions, connections):
        self.base = base
        self.patches = list(patches)
        self.transitions = dict(transitions)  # (i, j) -> callable, c = s_i/s_j
        self.connections = list(connections)  # per patch ScalarFormField
        self._names = {p.name: k for k, p in enumerate(self.patches)}

    def patch_index(self, name):
        return self._names[name]

    def transition(self, i, j):
        """c_ij = s_i / s_j as a callable on base coords."""
        if i == j:
            return lambda coords: 1.0 + 0.0j
        if (i, j) in self.transitions:
            return self.transitions[(i, j)]
        if (j, i) in self.transitions:
            f = self.transitions[(j, i)]
            return lambda coords: 1.0 / f(coords)
        raise KeyError(f"no transition between patches {i} and {j}")

    # -- invariants ---------------------------------------------------------

    def verify(self, rng=None, samples=5):
        """Measure the cocycle, compatibility, and metric-connection
        defects on sampled overlap points."""
        rng = rng or np.random.default_rng(2024)
        report = {"cocycle": 0.0, "compatibility": 0.0, "imaginary": 0.0}
        pts = self.base.random_points(rng, 64)
        arrs = np.stack(pts)
        for i in range(len(self.patches)):
            ini = self.patches[i].contains(self.base, pts, margin=1e-6)
            # connection forms imaginary
            if np.any(ini):
                sub = tuple(a[ini][:samples] for a in arrs)
                val = self.connections[i].eval(sub)
                for c in val.comps.values():
                    report["imaginary"] = max(report["imaginary"],
                                              float(np.max(np.abs(np.real(c)))))
            for j in range(len(self.patches)):
                if i >= j:
                    continue
                inj = self.patches[j].contains(self.base, pts, margin=1e-6)
                both = ini & inj
                if not np.any(both):
                    continue
                sub = tuple(a[both][:samples] for a in arrs)
                cij = self.transition(i, j)
                # compatibility: omega_i - omega_j = dlog c_ij
                dlog = _dlog_field(self.base, cij)
                wi = self.connections[i].eval(sub)
                wj = self.connections[j].eval(sub)
                dl = dlog.eval(sub)
                report["compatibility"] = max(
                    report["compatibility"], (wi - wj - dl).max_abs())
                for k in range(len(self.patches)):
                    if k in (i, j):
                        continue
                    ink = self.patches[k].contains(self.base, pts, margin=1e-6)
                    triple = both & ink
                    if not np.any(triple):
                        continue
                    sub3 = tuple(a[triple][:samples] for a in arrs)
                    cik = self.transition(i, k)(sub3)
                    ckj = self.transition(k, j)(sub3)
                    cij3 = cij(sub3)
                    report["cocycle"] = max(
                        report["cocycle"],
                        float(np.max(np.abs(cik * ckj - cij3))))
        return report

    # -- serialization ------------------------------------------------------

    def to_json_dict(self, samples=8, rng=None):
        rng = rng or np.random.default_rng(7)
        pts = self.base.random_points(rng, samples)
        arrs = np.stack(pts)
        out = {"patches": [{"name": p.name,
                            "region": {str(k): list(v)
                                       for k, v in p.region.items()}}
                           for p in self.patches],
               "base_dim": self.base.dim,
               "samples": [list(map(float, arrs[:, k]))
                           for k in range(arrs.shape[1])],
               "transitions": {},
               "connection_coefficients": {}}
        for (i, j), f in self.transitions.items():
            vals = [ _c2pair(f(tuple(arrs[:, k]))) for k in range(arrs.shape[1]) ]
            out["transitions"][f"{self.patches[i].name}|{self.patches[j].name}"] = vals
        for i, w in enumerate(self.connections):
            coeffs = []
            for k in range(arrs.shape[1]):
                val = w.eval(tuple(arrs[:, k]))
                row = {}
                for m, c in val.comps.items():
                    row[str(m)] = _c2pair(complex(ad.value_of_deep(c)))
                coeffs.append(row)
            out["connection_coefficients"][self.patches[i].name] = coeffs
        return out


def _c2pair(z):
    z = complex(z)
    return [z.real, z.imag]


def _dlog_field(base, cfun):
    def func(coords):
        jets = ad.seed(coords)
        c = cfun(jets)
        if not isinstance(c, ad.Jet):
            return forms.ScalarForm(base.dim, {})
        comps = {1 << k: c.jac[k] / c.val for k in range(base.dim)}
        return forms.ScalarForm(base.dim, comps)
    return ScalarFormField(base, func, declared_degrees={1})


# -- holonomy -----------------------------------------------------------------

def _loop_velocity(loop, tvals):
    jets = ad.seed((tvals,))
    coords_j = loop.param_map(jets)
    coords = tuple(ad.value_of(c) for c in coords_j)
    vel = tuple(c.jac[0] if isinstance(c, ad.Jet) else np.zeros_like(tvals)
                for c in coords_j)
    return coords, vel


def _omega_along(omega, coords, vel):
    val = omega.eval(coords)
    out = 0.0
    for k in range(len(coords)):
        c = val.comps.get(1 << k)
        if c is not None:
            out = out + c * vel[k]
    return out


def holonomy(bundle, loop, segment_order=32, scan=512):
    """U(1) holonomy of the glued bundle along a 1-cycle in the base.

    The loop is subdivided subordinate to the cover; each segment transports
    with exp(int omega_i) (Gauss-Legendre of ``segment_order``; a loop lying
    in one patch uses the periodic trapezoid rule), and each patch switch at
    point p contributes the transition value s_new/s_old = c(new, old)(p).
    """
    base = bundle.base
    ts = np.arange(scan) / scan
    coords, _ = _loop_velocity(loop, ts)
    members = [np.asarray(p.contains(base, coords)) for p in bundle.patches]

    full = [i for i, m in enumerate(members) if np.all(m)]
    if full:
        i = full[0]
        tt = np.arange(loop.res) / loop.res
        c, v = _loop_velocity(loop, tt)
        total = np.sum(_omega_along(bundle.connections[i], c, v)) / loop.res
        return complex(np.exp(total))

    if not np.all(np.any(np.stack(members), axis=0)):
        raise CoverError("loop leaves the union of the patches")

    # greedy segmentation: stay in a patch while possible, switch at a scan
    # point lying in the overlap of the outgoing and incoming patches.
    # Run repeated wraps until the start-of-wrap patch repeats so the event
    # list closes up circularly.
    def one_wrap(cur):
        events = []
        for k in range(1, scan + 1):
            kk = k % scan
            if members[cur][kk]:
                continue
            cand = [i for i, m in enumerate(members)
                    if m[kk] and m[(k - 1) % scan]]
            if not cand:
                raise CoverError("no admissible patch switch; refine the scan")
            events.append(((k - 1) % scan, cur, cand[0]))
            cur = cand[0]
        return events, cur

    cur = int(np.argmax([m[0] for m in members]))
    seen = []
    for _ in range(len(bundle.patches) + 2):
        if cur in seen:
            break
        seen.append(cur)
        _, cur = one_wrap(cur)
    events, end = one_wrap(cur)
    if end != cur or not events:
        raise CoverError("cannot close the subdivision; refine the cover")

    total = 0.0 + 0.0j
    hol = 1.0 + 0.0j
    glx, glw = np.polynomial.legendre.leggauss(segment_order)
    bounds = [(e[0] / scan) for e in events]
    patches_seq = [e[1] for e in events]
    for idx, i in enumerate(patches_seq):
        ta = bounds[idx - 1] if idx > 0 else bounds[-1] - 1.0
        tb = bounds[idx]
        tt = 0.5 * (tb - ta) * (glx + 1.0) + ta
        ww = 0.5 * (tb - ta) * glw
        c, v = _loop_velocity(loop, np.mod(tt, 1.0))
        total += np.sum(ww * _omega_along(bundle.connections[i], c, v))
        nxt = events[idx][2]
        csw, _ = _loop_velocity(loop, np.array([bounds[idx]]))
        pt = tuple(x[0] for x in csw)
        hol *= complex(bundle.transition(nxt, i)(pt))
    return complex(np.exp(total) * hol)


# -- the transgressed bundle ----------------------------------------------------

def _pullback_insert_axis(fld, new_domain):
    """Pull a field back along the projection that forgets axis 0."""
    def func(coords):
        val = fld.func(tuple(coords[1:]))
        comps = {m << 1: c for m, c in val.comps.items()}
        if isinstance(val, forms.ScalarForm):
            return forms.ScalarForm(new_domain.dim, comps, batch=val.batch)
        return forms.GradedEndForm(new_domain.dim, val.n, comps,
                                   parity=val.parity, batch=val.batch)
    if isinstance(fld, ScalarFormField):
        return ScalarFormField(new_domain, func)
    return forms.EndFormField(new_domain, fld.n, func, parity=fld.parity)


def _homotopy_domain(E, s_res=10, periodic=False):
    factor = Circle(1.0) if periodic else Interval()
    res = [s_res] + [len(a.nodes) for a in E.axes]
    return make_product([factor] + list(E.factors), res,
                        fiber_factors=1 + _fiber_factor_count(E))


def _fiber_factor_count(E):
    count, pos = 0, 0
    for f in E.factors:
        width = 3 if f.__class__.__name__ == "Spin3" else 1
        if pos in E.fiber_axes:
            count += 1
        pos += width
    return count


def transition_integral_field(E, V, q_from, q_to, rep=su2_adjoint, s_res=10,
                              homotopy=None):
    """int_{[0,1] x E / B} eta^3 of the homotopy taming, as a function on B.

    The default homotopy is the pointwise SU(2) geodesic from ``q_from`` to
    ``q_to`` composed with ``rep``; pass ``homotopy`` (a unitary field on
    (s,) + E-coords) to override.  The transition function itself is
    exp(-pi i  x  this field).
    """
    D = _homotopy_domain(E, s_res=s_res)
    Vp = V.__class__(D, V.n, _pullback_insert_axis(V.A, D),
                     antihermitian=V.antihermitian)

    if homotopy is None:
        def homotopy(coords):
            s, rest = coords[0], coords[1:]
            return rep(su2_geodesic(q_from(rest), q_to(rest), s))
    elif q_from is not None and q_to is not None:
        hpts = D.random_points(np.random.default_rng(17), 5)
        h0 = ad.value_of_deep(homotopy((hpts[0] * 0.0,) + hpts[1:]))
        h1 = ad.value_of_deep(homotopy((hpts[0] * 0.0 + 1.0,) + hpts[1:]))
        q0 = ad.value_of_deep(rep(q_from(hpts[1:])))
        q1 = ad.value_of_deep(rep(q_to(hpts[1:])))
        err = max(np.max(np.abs(h0 - q0)), np.max(np.abs(h1 - q1)))
        if err > 1e-8:
            raise ValueError(f"homotopy endpoint mismatch ({err:.2e})")

    tam = build_taming(Vp, homotopy,
                       check_points=D.random_points(np.random.default_rng(3), 5))
    e3 = eta_form(tam, 3)
    return fiber_integrate(D, e3)


def build_L(E, V, patches, rep=su2_adjoint, homotopies=None, s_res=10,
            check_homotopy_endpoints=True):
    """The transgressed line bundle of (E = F x B, V, spin trivializations).

    ``patches`` is a list of (name, region, q_field) with q_field an SU(2)
    field on E; ``rep`` composes it into the unitary trivialization
    (default: the rank-3 vector representation).  ``homotopies`` optionally
    maps ordered pairs (i, j) to an explicit unitary homotopy field on
    (s,) + E-coords joining Q_j (s=0) to Q_i (s=1); pairs not listed use
    pointwise geodesics.
    """
    base = E.base_domain()
    names = [p[0] for p in patches]
    regions = [p[1] for p in patches]
    qs = [p[2] for p in patches]
    homotopies = homotopies or {}

    conns = []
    for name, q in zip(names, qs):
        tam = build_taming(V, lambda c, _q=q: rep(_q(c)))
        omega = fiber_integrate(E, eta_form(tam, 3)).scale(-1j * np.pi)
        omega._degrees = frozenset({1})
        conns.append(omega)

    pairs = {(i, j) for i in range(len(patches)) for j in range(len(patches))
             if i < j}
    pairs |= {p for p in homotopies if p[0] != p[1]}
    transitions = {}
    for (i, j) in sorted(pairs):
        tfield = transition_integral_field(
            E, V, qs[j], qs[i], rep=rep, s_res=s_res,
            homotopy=homotopies.get((i, j)))

        def cfun(coords, _t=tfield):
            val = _t.eval(coords).coefficient(0)
            return ad.exp(-1j * np.pi * val)

        transitions[(i, j)] = cfun

    plist = [Patch(nm, rg) for nm, rg in zip(names, regions)]
    bundle = LineBundleCocycle(base, plist, transitions, conns)
    bundle._patch_q_fields = list(qs)
    return bundle


def homotopy_loop_values(E, V, loop_field, b_points, s_res=16):
    """int_{S^1 x E / B} eta^3 for a loop of trivializations (a unitary field
    on Circle(1) x E): the obstruction integral whose values land in 2Z when
    transition functions are homotopy-independent."""
    D = _homotopy_domain(E, s_res=s_res, periodic=True)
    Vp = V.__class__(D, V.n, _pullback_insert_axis(V.A, D),
                     antihermitian=V.antihermitian)
    tam = build_taming(Vp, loop_field,
                       check_points=D.random_points(np.random.default_rng(3), 5))
    fld = fiber_integrate(D, eta_form(tam, 3))
    vals = fld.eval(b_points).coefficient(0)
    return np.real(ad.value_of_deep(vals))


# -- string sections --------------------------------------------------------------

@dataclass
class StringData:
    """Trivialization-induced string datum: the inducing SU(2) field q and
    the associated 3-form H = -(1/2) eta^3(W_{t_Q})."""

    q: Callable
    H: ScalarFormField
    rep: Callable = su2_adjoint

    @classmethod
    def from_trivialization(cls, V, q, rep=su2_adjoint):
        tam = build_taming(V, lambda c: rep(q(c)))
        H = eta_form(tam, 3).scale(-0.5)
        return cls(q=q, H=H, rep=rep)


@dataclass
class StringSectionReport:
    log_derivative: ScalarFormField
    norm_values: np.ndarray
    patch_values: dict
    unit_norm_defect: float
    log_derivative_defect: float
    patch_consistency_defect: float


def string_section(bundle, E, V, str_data, s_res=10, rng=None,
                   structural_tol=1e-6, samples=4):
    """Section of the transgressed bundle induced by a geometric string
    datum, with the correction a_i = exp(2 pi i int_{[0,1]xE/B} H-tilde)
    along the geodesic path of trivializations from each patch Q_i to the
    string datum's trivialization.

    The report certifies unit norm, the log-derivative identity
    nabla log s = 2 pi i int_{E/B} H, and independence of the patch route.
    """
    rng = rng or np.random.default_rng(31)
    base = bundle.base

    # structural identity dH = (1/2) p1
    epts = E.random_points(rng, samples)
    dH = exterior_d(str_data.H).eval(epts)
    p1h = chern_forms(V)["p1"].eval(epts).scale(0.5)
    struct = (dH - p1h).max_abs()
    if struct > structural_tol:
        raise ValueError(
            f"string 3-form violates d H = p1/2 ({struct:.2e})")

    # patch corrections: a_i = exp(2 pi i int H_tilde) = c(Q_str, Q_i)
    patch_q = {i: q for i, q in enumerate(_patch_qs(bundle))}
    tfields = {}
    for i in patch_q:
        tfields[i] = transition_integral_field(
            E, V, patch_q[i], str_data.q, rep=str_data.rep, s_res=s_res)

    def a_fun(i, coords):
        val = tfields[i].eval(coords).coefficient(0)
        return ad.exp(-1j * np.pi * val)

    # target log-derivative: 2 pi i int_{E/B} H_str
    target = fiber_integrate(E, str_data.H).scale(2j * np.pi)

    bpts = base.random_points(rng, samples)
    arrs = np.stack(bpts)

    patch_values = {}
    unit_defect = 0.0
    logd_defect = 0.0
    consist = 0.0
    logd_field = None
    for i in patch_q:
        inside = bundle.patches[i].contains(base, bpts, margin=1e-9)
        if not np.any(inside):
            continue
        sub = tuple(a[inside] for a in arrs)
        av = a_fun(i, sub)
        patch_values[bundle.patches[i].name] = av
        unit_defect = max(unit_defect, float(np.max(np.abs(np.abs(av) - 1.0))))
        # log derivative through this patch: omega_i + dlog a_i
        dlog_a = exterior_d(tfields[i]).scale(-1j * np.pi)
        ld = bundle.connections[i] + dlog_a
        if logd_field is None:
            logd_field = ld
        logd_defect = max(logd_defect,
                          (ld.eval(sub) - target.eval(sub)).max_abs())
        for j in patch_q:
            if j <= i:
                continue
            both = inside & bundle.patches[j].contains(base, bpts, margin=1e-9)
            if not np.any(both):
                continue
            sub2 = tuple(a[both] for a in arrs)
            ratio = (a_fun(i, sub2) * bundle.transition(i, j)(sub2)
                     / a_fun(j, sub2))
            consist = max(consist, float(np.max(np.abs(ratio - 1.0))))

    return StringSectionReport(
        log_derivative=logd_field,
        norm_values=np.abs(np.concatenate(
            [np.atleast_1d(v) for v in patch_values.values()])),
        patch_values=patch_values,
        unit_norm_defect=unit_defect,
        log_derivative_defect=logd_defect,
        patch_consistency_defect=consist,
    )


def _patch_qs(bundle):
    if not hasattr(bundle, "_patch_q_fields"):
        raise ValueError("bundle does not carry its trivialization fields; "
                         "build it with build_L")
    return bundle._patch_q_fields
