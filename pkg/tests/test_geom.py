import numpy as np
import pytest

from etaline import ad, forms, geom
from etaline.modelfields import random_trig_poly

TWO_PI = 2 * np.pi


def scalar_field(domain, func, degrees=None):
    return forms.ScalarFormField(domain, func, declared_degrees=degrees)


class TestVolumes:
    def test_circle_volume_exact(self):
        c = geom.make_product([geom.Circle()], 64)
        assert abs(c.volume() - TWO_PI) < 1e-12

    def test_spin3_volume(self):
        s3 = geom.make_product([geom.Spin3()], 48)
        assert abs(s3.volume() - 2 * np.pi ** 2) < 1e-6

    def test_product_volume(self):
        d = geom.make_product([geom.Circle(), geom.Circle(), geom.Circle()], 16)
        assert abs(d.volume() - TWO_PI ** 3) < 1e-10

    def test_resolution_floor(self):
        with pytest.raises(ValueError):
            geom.make_product([geom.Circle()], 4)

    def test_unsupported_factor(self):
        with pytest.raises(ValueError):
            geom.make_product(["sphere"], 16)


class TestIntegrate:
    def test_constant_against_volume_form(self):
        c = geom.make_product([geom.Circle()], 32)
        form = scalar_field(c, lambda x: forms.ScalarForm(1, {1: 1.0 + 0.0 * x[0]}))
        assert abs(geom.integrate(c, form) - TWO_PI) < 1e-12

    def test_odd_integrand_vanishes(self):
        c = geom.make_product([geom.Circle()], 32)
        form = scalar_field(c, lambda x: forms.ScalarForm(1, {1: ad.sin(x[0])}))
        assert abs(geom.integrate(c, form)) < 1e-12

    def test_trig_poly_matches_closed_form(self, rng):
        d = geom.make_product([geom.Circle(), geom.Circle(3.0)], 24)
        poly = random_trig_poly(rng, d, degree=3, nterms=6)
        got = geom.integrate(d, lambda coords: np.real(poly(coords)))
        assert abs(got - poly.integral()) < 1e-10 * (1 + abs(poly.integral()))

    def test_degree_mismatch(self):
        d = geom.make_product([geom.Circle(), geom.Circle()], 16)
        one_form = scalar_field(d, lambda x: forms.ScalarForm(2, {1: 1.0 + 0 * x[0]}),
                                degrees={1})
        with pytest.raises(ValueError):
            geom.integrate(d, one_form)


class TestFiberIntegrate:
    def _bundle(self, res=12):
        return geom.make_product([geom.Circle(), geom.Circle(), geom.Circle()],
                                 res, fiber_factors=2)

    def test_fubini_factorization(self):
        E = self._bundle()

        # (fiber volume form) ^ (pullback of beta db) -> vol(F) * beta db
        def func2(coords):
            x, y, b = coords
            return forms.ScalarForm(3, {0b111: ad.cos(b) + 0.0 * x})

        fld = forms.ScalarFormField(E, func2)
        pushed = geom.fiber_integrate(E, fld)
        val = pushed.eval((np.array([0.3, 1.4]),))
        expect = TWO_PI ** 2 * np.cos([0.3, 1.4])
        assert np.max(np.abs(val.comps[1] - expect)) < 1e-10

    def test_pullback_from_base_dies(self):
        E = self._bundle()

        def func(coords):
            x, y, b = coords
            return forms.ScalarForm(3, {0b100: ad.sin(b) + 0.0 * x})

        pushed = geom.fiber_integrate(E, forms.ScalarFormField(E, func))
        val = pushed.eval((0.7,))
        assert not val.comps  # low fiber degree integrates to the zero form

    def test_stokes_commutation(self, rng):
        E = self._bundle()
        polys = [random_trig_poly(rng, E, degree=1, nterms=3) for _ in range(3)]

        def alpha(coords):
            return forms.ScalarForm(3, {0b011: polys[0](coords),
                                        0b101: polys[1](coords),
                                        0b110: polys[2](coords)})

        fld = forms.ScalarFormField(E, alpha)
        lhs = forms.exterior_d(geom.fiber_integrate(E, fld))
        rhs = geom.fiber_integrate(E, forms.exterior_d(fld))
        pts = (np.array([0.2, 2.6, 4.4]),)
        assert (lhs.eval(pts) - rhs.eval(pts)).max_abs() < 1e-10

    def test_fubini_total_integral(self, rng):
        E = self._bundle()
        poly = random_trig_poly(rng, E, degree=1, nterms=4)

        def top(coords):
            return forms.ScalarForm(3, {0b111: poly(coords)})

        fld = forms.ScalarFormField(E, top)
        total = geom.integrate(E, fld)
        pushed = geom.fiber_integrate(E, fld)
        base_total = geom.integrate(E.base_domain(), pushed)
        assert abs(total - base_total) <= 1e-8 * (1 + abs(total))


class TestCycles:
    def test_dtheta_over_fundamental_circle(self):
        c = geom.make_product([geom.Circle()], 16)
        form = scalar_field(c, lambda x: forms.ScalarForm(1, {1: 1.0 + 0.0 * x[0]}))
        z = geom.Cycle(c, 1, lambda p: (TWO_PI * p[0],), res=32)
        assert abs(geom.cycle_integrate(z, form) - TWO_PI) < 1e-12

    def test_exact_form_integrates_to_zero(self, rng):
        d = geom.make_product([geom.Circle(), geom.Circle()], 16)
        poly = random_trig_poly(rng, d, degree=2, nterms=4)
        f = forms.ScalarFormField(d, lambda x: forms.ScalarForm(2, {0: poly(x)}))
        df = forms.exterior_d(f)
        z = geom.Cycle(d, 1,
                       lambda p: (TWO_PI * p[0],
                                  1.0 + 0.4 * ad.sin(TWO_PI * p[0])),
                       res=48)
        assert abs(geom.cycle_integrate(z, df)) < 1e-10

    def test_double_wrap_doubles(self):
        c = geom.make_product([geom.Circle()], 16)
        form = scalar_field(c, lambda x: forms.ScalarForm(1, {1: 1.0 + 0.2 * ad.cos(x[0])}))
        z1 = geom.Cycle(c, 1, lambda p: (TWO_PI * p[0],), res=48)
        z2 = geom.Cycle(c, 1, lambda p: (2 * TWO_PI * p[0],), res=48)
        v1 = geom.cycle_integrate(z1, form)
        v2 = geom.cycle_integrate(z2, form)
        assert abs(v2 - 2 * v1) < 1e-10

    def test_reparametrization_invariance(self, rng):
        d = geom.make_product([geom.Circle(), geom.Circle()], 16)
        poly = random_trig_poly(rng, d, degree=2, nterms=4)
        form = forms.ScalarFormField(
            d, lambda x: forms.ScalarForm(2, {1: poly(x), 2: poly(x) * 0.5}))

        def base(p):
            return (TWO_PI * p[0], 0.8 + 0.3 * ad.sin(TWO_PI * p[0]))

        def repar(p):
            t = p[0] + 0.07 * ad.sin(TWO_PI * p[0]) / TWO_PI
            return base((t,))

        z1 = geom.Cycle(d, 1, base, res=64)
        z2 = geom.Cycle(d, 1, repar, res=64)
        a = geom.cycle_integrate(z1, form)
        b = geom.cycle_integrate(z2, form)
        assert abs(a - b) <= 1e-8 * (1 + abs(a))

    def test_dim_mismatch(self):
        c = geom.make_product([geom.Circle()], 16)
        form = scalar_field(c, lambda x: forms.ScalarForm(1, {0: 1.0 + 0.0 * x[0]}),
                            degrees={0})
        z = geom.Cycle(c, 1, lambda p: (TWO_PI * p[0],), res=16)
        with pytest.raises(ValueError):
            geom.cycle_integrate(z, form)


class TestChainBoundary:
    def test_boundary_is_difference_of_end_cycles(self):
        d = geom.make_product([geom.Circle(), geom.Circle()], 16)
        chain = geom.Chain(
            d, 2, lambda p: (TWO_PI * p[1], np.pi * p[0] + 0.0 * p[1]), res=24)
        (s1, z1), (s0, z0) = chain.boundary()
        assert (s1, s0) == (1, -1)
        form = forms.ScalarFormField(
            d, lambda x: forms.ScalarForm(2, {1: ad.sin(x[1])}))
        v1 = geom.cycle_integrate(z1, form)
        v0 = geom.cycle_integrate(z0, form)
        # d(sin y dx) integrated over the chain equals the boundary difference
        ddf = forms.exterior_d(form)
        flux = geom.chain_integrate(chain, ddf)
        assert abs((v1 - v0) - flux) < 1e-10


def test_spin3_singular_guard():
    s3 = geom.make_product([geom.Spin3()], 16)
    with pytest.raises(geom.SingularChartError):
        s3.check_interior((0.0, 1.0, 1.0))
