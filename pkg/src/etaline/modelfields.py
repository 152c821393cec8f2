"""Model field configurations: SU(2)/SO(3)-valued trivializations, random
trigonometric coefficient fields, and stock connections used by the
verification suites and the demos.

Everything here is written against the ``ad`` dispatch layer, so the same
closures evaluate on scalars, batched grids, and jets.
"""

from __future__ import annotations

import numpy as np

from . import ad, forms, geom

__all__ = [
    "PAULI", "su2_exp", "su2_log_vector", "su2_adjoint", "su2_geodesic",
    "AntipodalError", "TrigPoly", "random_trig_poly",
    "random_su2_field", "so3_field_from_su2", "constant_field",
    "random_so3_connection", "random_su2_connection", "connection_from_fields",
    "smooth_step_flat", "degree_one_loop_field",
]


def smooth_step_flat(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1, flat to all orders at
    both ends (the classic exp(-1/u) partition-of-unity profile)."""
    su = _bump_half(u)
    sv = _bump_half(1.0 - u)
    return su / (su + sv)


def _bump_half(u):
    uv = ad.value_of_deep(u)
    pos = np.asarray(uv) > 1e-12
    safe = ad.where(pos, u, 0 * u + 1.0)
    return ad.where(pos, ad.exp(-1.0 / safe), 0.0 * u)


def degree_one_loop_field(periods=(1.0, 2 * np.pi, 2 * np.pi),
                          center=None, radius_frac=0.35):
    """Degree-one smooth map from the 3-torus (s, x, y) to SU(2): a bump
    supported in a coordinate ball covers SU(2) minus a point once, the rest
    maps to the identity.  The stress input for even-integrality of the
    homotopy loop integrals."""
    center = center or tuple(0.5 * p for p in periods)
    radii = [radius_frac * p for p in periods]

    def field(coords):
        d = [ad.periodic_offset(coords[k], center[k], periods[k]) / radii[k]
             for k in range(3)]
        rho = d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
        chi = np.pi * (1.0 - smooth_step_flat(rho))
        rv = ad.value_of_deep(rho)
        small = np.asarray(rv) < 1e-12
        safe = ad.where(small, rho * 0 + 1.0, rho)
        k = ad.where(small, 0.0 * rho, ad.sin(chi) / ad.sqrt(safe))
        return _su2_from_angle(chi, k, d)

    return field


def _su2_from_angle(chi, k, d):
    # cos(chi) + i sin(chi) (v . sigma) with sin(chi) v = k * d
    c = ad.cos(chi)
    a1, a2, a3 = k * d[0], k * d[1], k * d[2]
    m11 = c + 1j * a3
    m12 = 1j * a1 + a2
    m21 = 1j * a1 - a2
    m22 = c - 1j * a3
    return ad.mat2([[m11, m12], [m21, m22]])

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class AntipodalError(ValueError):
    """Geodesic interpolation requested between antipodal SU(2) values."""


def su2_exp(a1, a2, a3):
    """exp(i (a . sigma)) via the closed form cos|a| + i sinc|a| (a . sigma);
    composed through |a|^2 so jets stay finite at a = 0."""
    r = a1 * a1 + a2 * a2 + a3 * a3 + 0.0
    c = ad.cos_sqrt(r)
    s = ad.sinc_sqrt(r)
    m11 = c + 1j * (s * a3)
    m12 = 1j * (s * a1) + (s * a2)
    m21 = 1j * (s * a1) - (s * a2)
    m22 = c - 1j * (s * a3)
    return ad.mat2([[m11, m12], [m21, m22]])


def _half_tr(sigma, u):
    tot = 0
    for i in range(2):
        for j in range(2):
            if sigma[i, j] != 0:
                tot = tot + sigma[i, j] * u[..., j, i]
    return 0.5 * tot


def su2_log_vector(u, antipodal_tol=1e-8):
    """Vector a with u = exp(i (a . sigma)), |a| < pi.

    Raises :class:`AntipodalError` near trace(u) = -2 where the geodesic is
    not unique.
    """
    c = ad.real(0.5 * (u[..., 0, 0] + u[..., 1, 1]))
    s = [ad.imag(_half_tr(sig, u)) for sig in PAULI]
    snorm = ad.sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2] + 0.0)
    cv = ad.value_of_deep(c)
    sv = ad.value_of_deep(snorm)
    if np.any((cv < -1.0 + antipodal_tol) & (sv < antipodal_tol)):
        raise AntipodalError(
            "antipodal SU(2) values: supply an explicit homotopy")
    theta = ad.arctan2(snorm, c)
    fac = 1.0 / ad.sinc(theta)
    return tuple(fac * x for x in s)


def su2_geodesic(u0, u1, s):
    """Pointwise geodesic from u0 to u1 on SU(2), evaluated at time s."""
    rel = ad.matmul(_dagger(u0), u1)
    a = su2_log_vector(rel)
    return ad.matmul(u0, su2_exp(s * a[0], s * a[1], s * a[2]))


def _dagger(u):
    return ad.conj(ad.transpose(u))


def su2_adjoint(q):
    """Vector (spin-1) representation SO(3) matrix of q in SU(2):
    R_ab = tr(sigma_a q sigma_b q*) / 2."""
    qd = _dagger(q)
    cols = []
    for b in range(3):
        qs = ad.matmul(ad.matmul(q, PAULI[b] + 0j), qd)
        col = [ _half_tr(PAULI[a], _as_matrix_like(qs)) for a in range(3) ]
        cols.append(col)
    rows = [[cols[b][a] for b in range(3)] for a in range(3)]
    return ad.mat2(rows)


def _as_matrix_like(m):
    return m


# -- random coefficient fields ------------------------------------------------

class TrigPoly:
    """Random low-degree trigonometric polynomial on a charted domain.

    Periodic coordinates use harmonics of their period; non-periodic ones
    use cos(pi k x / span).  ``integral()`` returns the exact integral over
    the full domain (the symbolic antiderivative oracle for quadrature
    tests)."""

    def __init__(self, domain, terms):
        self.domain = domain
        self.terms = terms  # list of (amp, [(axis, k, phase), ...])

    def __call__(self, coords):
        total = 0.0
        for amp, factors in self.terms:
            term = amp
            for axis, k, phase in factors:
                a = self.domain.axes[axis]
                if a.periodic:
                    freq = 2.0 * np.pi * k / a.period
                else:
                    span = (a.hi - a.lo) or 1.0
                    freq = np.pi * k / span
                term = term * ad.cos(freq * coords[axis] + phase)
            total = total + term
        return total

    def integral(self):
        """Exact integral over the domain (no volume density factors)."""
        total = 0.0
        for amp, factors in self.terms:
            val = amp
            by_axis = {axis: (k, phase) for axis, k, phase in factors}
            for i, a in enumerate(self.domain.axes):
                if a.periodic:
                    L = a.period
                    if i in by_axis:
                        k, phase = by_axis[i]
                        val = val * (0.0 if k != 0 else L * np.cos(phase))
                    else:
                        val = val * L
                else:
                    lo, hi = a.lo, a.hi
                    span = (hi - lo) or 1.0
                    if i in by_axis:
                        k, phase = by_axis[i]
                        if k == 0:
                            val = val * span * np.cos(phase)
                        else:
                            w = np.pi * k / span
                            val = val * ((np.sin(w * hi + phase)
                                          - np.sin(w * lo + phase)) / w)
                    else:
                        val = val * span
            total += val
        return total


def random_trig_poly(rng, domain, degree=2, nterms=4, scale=1.0):
    terms = []
    for _ in range(nterms):
        amp = scale * rng.normal()
        factors = []
        for axis in range(domain.dim):
            if rng.random() < 0.6:
                k = int(rng.integers(0, degree + 1))
                factors.append((axis, k, float(rng.uniform(0, 2 * np.pi))))
        terms.append((amp, factors))
    return TrigPoly(domain, terms)


def random_su2_field(rng, domain, degree=1, scale=0.6):
    """Smooth SU(2)-valued field exp(i sum_k a_k(x) sigma_k)."""
    comps = [random_trig_poly(rng, domain, degree=degree, scale=scale)
             for _ in range(3)]

    def q(coords):
        return su2_exp(comps[0](coords), comps[1](coords), comps[2](coords))

    return q


def so3_field_from_su2(qfield):
    """Compose an SU(2) field with the vector representation."""
    def field(coords):
        return su2_adjoint(qfield(coords))
    return field


def constant_field(mat):
    mat = np.asarray(mat, dtype=complex)

    def field(coords):
        shape = np.shape(ad.value_of_deep(coords[0])) if coords else ()
        return np.broadcast_to(mat, shape + mat.shape)

    return field


# -- stock connections ---------------------------------------------------------

def connection_from_fields(domain, n, coeff_fields, antihermitian=True):
    """GaugedConnection from per-coordinate matrix coefficient closures."""
    from .cw import GaugedConnection

    def func(coords):
        comps = {}
        for k, cf in enumerate(coeff_fields):
            if cf is None:
                continue
            comps[1 << k] = cf(coords)
        return forms.GradedEndForm(domain.dim, n, comps)

    A = forms.EndFormField(domain, n, func, declared_degrees={1})
    return GaugedConnection(domain, n, A, antihermitian=antihermitian)


def _scalar_times_matrix(s, mat):
    shape = np.shape(ad.value_of_deep(s))
    if shape:
        s = ad.reshape(s, shape + (1, 1))
    return s * mat


def _so3_generators():
    g = []
    for a in range(3):
        m = np.zeros((3, 3))
        b, c = (a + 1) % 3, (a + 2) % 3
        m[b, c], m[c, b] = -1.0, 1.0
        g.append(m.astype(complex))
    return g


SO3_GENERATORS = _so3_generators()


def random_so3_connection(rng, domain, degree=1, scale=0.5):
    """Real rank-3 orthogonal connection: coefficients in so(3)."""
    polys = [[random_trig_poly(rng, domain, degree=degree, scale=scale)
              for _ in range(3)] for _ in range(domain.dim)]

    def coeff(k):
        def f(coords):
            m = 0.0
            for a in range(3):
                m = m + _scalar_times_matrix(polys[k][a](coords), SO3_GENERATORS[a])
            return m
        return f

    return connection_from_fields(domain, 3, [coeff(k) for k in range(domain.dim)])


def random_su2_connection(rng, domain, degree=1, scale=0.5):
    """su(2)-valued connection one-form (antihermitian, traceless)."""
    polys = [[random_trig_poly(rng, domain, degree=degree, scale=scale)
              for _ in range(3)] for _ in range(domain.dim)]

    def coeff(k):
        def f(coords):
            m = 0.0
            for a in range(3):
                m = m + _scalar_times_matrix(1j * polys[k][a](coords), PAULI[a])
            return m
        return f

    return connection_from_fields(domain, 2, [coeff(k) for k in range(domain.dim)])
