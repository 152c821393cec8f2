"""Model manifolds with global-measure parametrizations and quadrature.

Supported factors: circles of arbitrary circumference, the unit interval,
and Spin(3) in Hopf coordinates (eta, xi1, xi2) with volume density
cos(eta) sin(eta).  Products carry tensor quadrature grids: trapezoid rule
on periodic coordinates (spectrally accurate), Gauss-Legendre on intervals
and on the Hopf polar angle.  A product may designate leading factors as
the fiber of a surface bundle E = F x B; fiber integration then pushes
forms down to the base.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import ad

__all__ = [
    "Circle", "Interval", "Spin3", "CoordAxis", "ChartedDomain",
    "make_product", "integrate", "fiber_integrate",
    "Cycle", "Chain", "cycle_integrate", "chain_integrate",
    "SingularChartError", "merge_sign", "hopf_to_su2",
]

TWO_PI = 2.0 * np.pi


class SingularChartError(ValueError):
    """Raised when differentiation is requested at a chart-singular node."""


@dataclass(frozen=True)
class Circle:
    circumference: float = TWO_PI


@dataclass(frozen=True)
class Interval:
    pass


@dataclass(frozen=True)
class Spin3:
    pass


@dataclass(frozen=True)
class CoordAxis:
    name: str
    nodes: np.ndarray
    weights: np.ndarray
    periodic: bool
    period: Optional[float] = None
    lo: float = 0.0
    hi: float = 0.0


def _gauss_legendre(n, a, b):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * (x + 1.0) + a, 0.5 * (b - a) * w


def _axes_for(factor, res, tag):
    if isinstance(factor, Circle):
        L = factor.circumference
        nodes = np.arange(res) * (L / res)
        return [CoordAxis(f"theta{tag}", nodes, np.full(res, L / res), True, L)]
    if isinstance(factor, Interval):
        nodes, w = _gauss_legendre(res, 0.0, 1.0)
        return [CoordAxis(f"s{tag}", nodes, w, False, None, 0.0, 1.0)]
    if isinstance(factor, Spin3):
        eta, weta = _gauss_legendre(res, 0.0, 0.5 * np.pi)
        xi = np.arange(res) * (TWO_PI / res)
        wxi = np.full(res, TWO_PI / res)
        return [CoordAxis(f"eta{tag}", eta, weta, False, None, 0.0, 0.5 * np.pi),
                CoordAxis(f"xi1{tag}", xi, wxi, True, TWO_PI),
                CoordAxis(f"xi2{tag}", xi, wxi, True, TWO_PI)]
    raise ValueError(f"unsupported factor type: {factor!r}")


class ChartedDomain:
    """Product manifold with a tensor quadrature grid.

    ``fiber_axes`` lists the coordinate positions belonging to the fiber
    when the domain is regarded as a bundle over the remaining coordinates.
    """

    def __init__(self, factors, axes, density_specs, fiber_axes=()):
        self.factors = tuple(factors)
        self.axes = list(axes)
        self.dim = len(axes)
        # list of (axis_index, kind); kind currently only "hopf_polar"
        self._density_specs = tuple(density_specs)
        self.fiber_axes = tuple(fiber_axes)
        self.base_axes = tuple(i for i in range(self.dim) if i not in self.fiber_axes)
        self._grid_cache = None

    # -- structure ----------------------------------------------------------

    def __repr__(self):
        names = ",".join(a.name for a in self.axes)
        return f"ChartedDomain({names}; fiber={self.fiber_axes})"

    def base_domain(self):
        """Domain spanned by the base coordinates (fiber axes removed)."""
        if not self.fiber_axes:
            raise ValueError("domain has no fiber/base split")
        axes = [self.axes[i] for i in self.base_axes]
        specs = [(self.base_axes.index(i), kind) for i, kind in self._density_specs
                 if i in self.base_axes]
        return ChartedDomain((), axes, specs)

    def fiber_dim(self):
        return len(self.fiber_axes)

    # -- quadrature ---------------------------------------------------------

    def density(self, coords):
        """Volume density at coords (product of per-factor densities)."""
        rho = 1.0
        for i, kind in self._density_specs:
            if kind == "hopf_polar":
                rho = rho * ad.cos(coords[i]) * ad.sin(coords[i])
        return rho

    def grid(self):
        """Flattened tensor grid: (coords tuple of (M,) arrays, pure
        quadrature weights (M,)).

        The volume density is NOT included: a top-degree form already
        carries it in its coordinate coefficient.  Use ``density`` (or
        ``volume``) when integrating plain functions against the volume
        form.
        """
        if self._grid_cache is None:
            mesh = np.meshgrid(*[a.nodes for a in self.axes], indexing="ij")
            coords = tuple(m.ravel() for m in mesh)
            w = np.ones_like(coords[0], dtype=float) if coords else np.ones(1)
            wmesh = np.meshgrid(*[a.weights for a in self.axes], indexing="ij")
            for wm in wmesh:
                w = w * wm.ravel()
            self._grid_cache = (coords, w)
        return self._grid_cache

    def axis_grid(self, indices):
        """Flattened grid over a subset of axes (pure quadrature weights)."""
        mesh = np.meshgrid(*[self.axes[i].nodes for i in indices], indexing="ij")
        coords = tuple(m.ravel() for m in mesh)
        w = np.ones_like(coords[0], dtype=float)
        wmesh = np.meshgrid(*[self.axes[i].weights for i in indices], indexing="ij")
        for wm in wmesh:
            w = w * wm.ravel()
        return coords, w

    def volume(self):
        coords, w = self.grid()
        return float(np.sum(w * np.real(self.density(coords))))

    def check_interior(self, coords, tol=1e-9):
        """Reject chart-singular Spin3 nodes (eta at 0 or pi/2)."""
        for i, kind in self._density_specs:
            if kind != "hopf_polar":
                continue
            eta = ad.value_of_deep(coords[i])
            if np.any(np.abs(eta) < tol) or np.any(np.abs(eta - 0.5 * np.pi) < tol):
                raise SingularChartError(
                    "derivative requested at a Hopf-chart singular node")

    def random_points(self, rng, count):
        """Interior random points, uniform per coordinate."""
        pts = []
        for i, a in enumerate(self.axes):
            lo, hi = float(np.min(a.nodes)), float(np.max(a.nodes))
            if a.periodic:
                lo, hi = 0.0, a.period
            else:
                span = hi - lo
                lo, hi = lo + 0.05 * span, hi - 0.05 * span
            pts.append(rng.uniform(lo, hi, size=count))
        return tuple(pts)


def make_product(factors, resolution, fiber_factors=0):
    """Build a product domain with tensor quadrature.

    ``resolution`` is an int (same per coordinate) or a per-coordinate list.
    ``fiber_factors`` marks that many leading factors as the bundle fiber.
    """
    factors = list(factors)
    ncoords = sum(3 if isinstance(f, Spin3) else 1 for f in factors)
    if isinstance(resolution, int):
        res = [resolution] * ncoords
    else:
        res = list(resolution)
        if len(res) != ncoords:
            raise ValueError("resolution list must match coordinate count")
    if any(r < 8 for r in res):
        raise ValueError("resolution must be >= 8 per coordinate")

    axes, specs = [], []
    pos = 0
    fiber_axes = []
    for k, f in enumerate(factors):
        sub = _axes_for(f, res[pos], tag=f"_{k}")
        if isinstance(f, Spin3):
            specs.append((pos, "hopf_polar"))
        if k < fiber_factors:
            fiber_axes.extend(range(pos, pos + len(sub)))
        axes.extend(sub)
        pos += len(sub)
    return ChartedDomain(factors, axes, specs, fiber_axes)


def merge_sign(mask_a, mask_b):
    """Sign of reordering dx_A ^ dx_B into increasing index order."""
    mask_a, b = int(mask_a), int(mask_b)
    inv = 0
    while b:
        j = (b & -b).bit_length() - 1
        inv += bin(mask_a >> (j + 1)).count("1")
        b &= b - 1
    return -1 if inv % 2 else 1


def integrate(domain, top_form):
    """Integral over the domain.

    A form field integrates its top-degree coordinate coefficient against
    the quadrature weights.  A plain callable or array is treated as a
    function and integrated against the volume form (density included).
    """
    coords, w = domain.grid()
    if callable(getattr(top_form, "eval", None)):
        degs = top_form.degrees()
        if degs and domain.dim not in degs:
            raise ValueError(
                f"form of degrees {sorted(degs)} on a "
                f"{domain.dim}-dimensional domain")
        val = top_form.eval(coords)
        comp = val.comps.get((1 << domain.dim) - 1)
        if comp is None:
            return 0.0 + 0.0j
        return complex(np.sum(w * comp))
    vals = top_form(coords) if callable(top_form) else top_form
    return complex(np.sum(w * np.real(domain.density(coords)) * vals))


def fiber_integrate(domain, form_field):
    """Push a form field on E = F x B down to B by integrating the full
    fiber-degree component over the fiber grid.

    Degrees below dim F integrate to the zero form.  The output component
    on base mask J comes from the E-component on (fiber mask | J), with the
    sign that reorders the fiber coordinates to the front.
    """
    from .forms import ScalarFormField, EndFormField, ScalarForm, GradedEndForm

    if not domain.fiber_axes:
        raise ValueError("fiber_integrate requires a fiber/base split")
    fib = domain.fiber_axes
    fmask = 0
    for i in fib:
        fmask |= (1 << i)
    base = domain.base_domain()
    fcoords, fw = domain.axis_grid(tuple(fib))
    nf = fcoords[0].size

    scalar = isinstance(form_field, ScalarFormField)

    def func(bcoords):
        bshape = np.shape(ad.value_of_deep(bcoords[0])) if bcoords else ()
        nb = len(bshape)
        full = [None] * domain.dim
        for j, i in enumerate(fib):
            full[i] = fcoords[j].reshape((1,) * nb + (nf,))
        for j, i in enumerate(domain.base_axes):
            c = bcoords[j]
            full[i] = ad.reshape(c, bshape + (1,)) if nb else c
        val = form_field.func(tuple(full))
        out = {}
        for emask, comp in val.comps.items():
            if emask & fmask != fmask:
                continue
            jmask_global = emask & ~fmask
            sign = merge_sign(fmask, jmask_global)
            # renumber the base mask into base-domain axes
            jmask = 0
            for j, i in enumerate(domain.base_axes):
                if jmask_global & (1 << i):
                    jmask |= (1 << j)
            if not scalar:
                wgt = fw.reshape(fw.shape + (1, 1))
            else:
                wgt = fw
            term = ad.asum(comp * wgt, axis=(-3 if not scalar else -1))
            out[jmask] = out.get(jmask, 0) + sign * term
        if scalar:
            return ScalarForm(base.dim, out, batch=bshape)
        return GradedEndForm(base.dim, form_field.n, out,
                             parity=form_field.parity, batch=bshape)

    if scalar:
        return ScalarFormField(base, func)
    return EndFormField(base, form_field.n, func, parity=form_field.parity)


# -- cycles and chains -------------------------------------------------------

class Cycle:
    """Smooth boundary-free cycle: a periodic parametrization of a torus
    parameter cube into a domain, or the fundamental cycle of a closed
    domain (identity parametrization)."""

    def __init__(self, domain, dim, param_map=None, res=64):
        self.domain = domain
        self.dim = dim
        self.param_map = param_map
        self.res = res
        if param_map is None and dim != domain.dim:
            raise ValueError("identity cycle must have the domain dimension")

    @classmethod
    def fundamental(cls, domain):
        return cls(domain, domain.dim, None)

    def params(self):
        ax = [np.arange(self.res) / self.res for _ in range(self.dim)]
        mesh = np.meshgrid(*ax, indexing="ij")
        w = np.full(mesh[0].size, 1.0 / mesh[0].size)
        return tuple(m.ravel() for m in mesh), w


class Chain:
    """Singular k-chain parametrized over [0,1] x T^(k-1); its boundary is
    the difference of the end cycles."""

    def __init__(self, domain, dim, param_map, res=48, res_s=None):
        self.domain = domain
        self.dim = dim
        self.param_map = param_map
        self.res = res
        self.res_s = res_s or res

    def params(self):
        s, ws = _gauss_legendre(self.res_s, 0.0, 1.0)
        ax = [s] + [np.arange(self.res) / self.res for _ in range(self.dim - 1)]
        wx = [ws] + [np.full(self.res, 1.0 / self.res) for _ in range(self.dim - 1)]
        mesh = np.meshgrid(*ax, indexing="ij")
        w = np.ones(mesh[0].size)
        for wm in np.meshgrid(*wx, indexing="ij"):
            w = w * wm.ravel()
        return tuple(m.ravel() for m in mesh), w

    def boundary(self):
        """[(+1, cycle at s=1), (-1, cycle at s=0)]."""
        out = []
        for sgn, sval in ((+1, 1.0), (-1, 0.0)):
            def pm(params, _s=sval):
                shape = np.shape(ad.value_of_deep(params[0]))
                s_const = np.full(shape, _s) if shape else _s
                return self.param_map((s_const,) + tuple(params))
            out.append((sgn, Cycle(self.domain, self.dim - 1, pm, res=self.res)))
        return out


def _det_minor(jac, rows, k):
    """Determinant of the k x k matrix jac[rows][0..k-1] with array entries."""
    if k == 1:
        return jac[rows[0]][0]
    if k == 2:
        return (jac[rows[0]][0] * jac[rows[1]][1]
                - jac[rows[0]][1] * jac[rows[1]][0])
    total = 0.0
    for pos, r in enumerate(rows):
        sub = [x for x in rows if x != r]
        sgn = -1.0 if pos % 2 else 1.0
        total = total + sgn * jac[r][0] * _det_minor_cols(jac, sub, list(range(1, k)))
    return total


def _det_minor_cols(jac, rows, cols):
    k = len(cols)
    if k == 1:
        return jac[rows[0]][cols[0]]
    total = 0.0
    for pos, r in enumerate(rows):
        sub = [x for x in rows if x != r]
        sgn = -1.0 if pos % 2 else 1.0
        total = total + sgn * jac[r][cols[0]] * _det_minor_cols(jac, sub, cols[1:])
    return total


def _pullback_integral(domain, dim, param_map, params, w, form_field):
    if param_map is None:
        return integrate(domain, form_field)
    jets = ad.seed(params)
    coords_j = param_map(jets)
    coords = tuple(ad.value_of(c) for c in coords_j)
    jac = [list(ad.partials_of(c, dim)) for c in coords_j]
    val = form_field.eval(coords)
    total = 0.0 + 0.0j
    for mask, comp in val.comps.items():
        if bin(mask).count("1") != dim:
            continue
        rows = [i for i in range(domain.dim) if mask & (1 << i)]
        minor = _det_minor_cols(jac, rows, list(range(dim))) if dim > 1 else jac[rows[0]][0]
        total += np.sum(w * comp * minor)
    return complex(total)


def cycle_integrate(cycle, form_field):
    """Pull a form back along the cycle parametrization and integrate."""
    if form_field.degrees() and cycle.dim not in form_field.degrees():
        if all(d != cycle.dim for d in form_field.degrees()):
            raise ValueError(
                f"cycle of dimension {cycle.dim} cannot integrate a form of "
                f"degrees {sorted(form_field.degrees())}")
    params, w = cycle.params() if cycle.param_map is not None else (None, None)
    if cycle.param_map is None:
        return _pullback_integral(cycle.domain, cycle.dim, None, None, None, form_field)
    return _pullback_integral(cycle.domain, cycle.dim, cycle.param_map,
                              params, w, form_field)


def chain_integrate(chain, form_field):
    params, w = chain.params()
    return _pullback_integral(chain.domain, chain.dim, chain.param_map,
                              params, w, form_field)


def hopf_to_su2(eta, xi1, xi2):
    """SU(2) element of the Hopf chart point: [[a, b], [-conj b, conj a]]
    with a = cos(eta) e^{i xi1}, b = sin(eta) e^{i xi2}."""
    ce, se = ad.cos(eta), ad.sin(eta)
    a = ce * ad.exp(1j * xi1)
    b = se * ad.exp(1j * xi2)
    return ad.mat2([[a, b], [-ad.conj(b), ad.conj(a)]])
