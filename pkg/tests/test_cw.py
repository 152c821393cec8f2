import numpy as np
import pytest

from etaline import ad, cw, forms, geom
from etaline import modelfields as mf

TWO_PI = 2 * np.pi


class TestCurvature:
    def test_flat(self):
        d = geom.make_product([geom.Circle()] * 2, 12)
        conn = mf.connection_from_fields(d, 2, [None, None])
        R = cw.curvature(conn)
        assert R.eval((0.3, 0.4)).max_abs() < 1e-15

    def test_abelian(self):
        d = geom.make_product([geom.Circle()] * 2, 12)
        conn = mf.connection_from_fields(
            d, 1, [lambda c: ad.mat2([[1j * ad.sin(c[1])]]), None])
        val = cw.curvature(conn).eval((0.4, 1.1))
        # R = d(i sin y) ^ dx = -i cos(y) dx ^ dy
        assert abs(val.comps[0b11][0, 0] + 1j * np.cos(1.1)) < 1e-14

    def test_bianchi(self, rng):
        d = geom.make_product([geom.Circle()] * 3, 8)
        conn = mf.random_su2_connection(rng, d, degree=1, scale=0.5)
        R = cw.curvature(conn)
        dR = forms.exterior_d(R)
        AR = forms.wedge_fields(conn.A, R)
        RA = forms.wedge_fields(R, conn.A)
        pts = d.random_points(rng, 6)
        defect = (dR.eval(pts) + AR.eval(pts) + RA.eval(pts).scale(-1.0)).max_abs()
        assert defect < 1e-8

    def test_gauge_naturality(self, rng):
        d = geom.make_product([geom.Circle()] * 3, 8)
        conn = mf.random_su2_connection(rng, d, degree=1, scale=0.5)
        g = mf.random_su2_field(rng, d, degree=1, scale=0.5)
        R0 = cw.curvature(conn)
        R1 = cw.curvature(cw.gauge_transform(conn, g))
        pts = d.random_points(rng, 5)
        v0, v1 = R0.eval(pts), R1.eval(pts)
        gv = g(pts)
        gd = ad.conj(ad.transpose(gv))
        worst = 0.0
        for m in v0.comps:
            want = ad.matmul(ad.matmul(gv, v0.comps[m]), gd)
            worst = max(worst, float(np.max(np.abs(want - v1.comps[m]))))
        assert worst < 1e-8

    def test_antihermitian_enforced(self):
        d = geom.make_product([geom.Circle()] * 2, 12)
        with pytest.raises(ValueError):
            mf.connection_from_fields(
                d, 1, [lambda c: ad.mat2([[ad.sin(c[1]) + 0j]]), None])


class TestChernForms:
    def test_flat_vanishes(self, rng):
        d = geom.make_product([geom.Circle()] * 4, 8)
        conn = mf.connection_from_fields(d, 3, [None] * 4)
        out = cw.chern_forms(conn)
        pts = d.random_points(rng, 3)
        for key in ("c1", "c2", "ch2", "p1"):
            assert out[key].eval(pts).max_abs() < 1e-14

    def test_abelian_c1(self):
        d = geom.make_product([geom.Circle()] * 2, 12)
        conn = mf.connection_from_fields(
            d, 1, [lambda c: ad.mat2([[1j * ad.sin(c[1])]]), None])
        c1 = cw.chern_forms(conn)["c1"]
        F = cw.curvature(conn).eval((0.2, 0.9)).comps[0b11][0, 0]
        got = c1.eval((0.2, 0.9)).comps[0b11]
        assert abs(got - F / (2j * np.pi)) < 1e-14

    def test_c1_of_complexified_real_connection_vanishes(self, rng):
        d = geom.make_product([geom.Circle()] * 3, 8)
        conn = mf.random_so3_connection(rng, d, degree=1, scale=0.5)
        c1 = cw.chern_forms(conn)["c1"]
        assert c1.eval(d.random_points(rng, 6)).max_abs() < 1e-10

    def test_p1_refused_for_charged_connection(self, rng):
        d = geom.make_product([geom.Circle()] * 2, 12)
        conn = mf.connection_from_fields(
            d, 1, [lambda c: ad.mat2([[1j * ad.sin(c[1])]]), None])
        p1 = cw.chern_forms(conn)["p1"]
        with pytest.raises(ValueError):
            p1.eval((0.1, 0.2))

    def test_p1_total_integral_integer(self, rng):
        # every global connection form on T^4 has integral p1 = 0; the
        # integrality test measures the exactness of the quadrature against
        # a pointwise-nonvanishing density
        vals = []
        for res in (8, 10):
            d = geom.make_product([geom.Circle()] * 4, res)
            conn = mf.random_so3_connection(
                np.random.default_rng(5), d, degree=1, scale=0.6)
            p1 = cw.chern_forms(conn)["p1"]
            density = p1.eval(d.random_points(rng, 4)).max_abs()
            assert density > 1e-4  # genuinely nonzero integrand
            vals.append(geom.integrate(d, p1))
        assert abs(vals[1].real - round(vals[1].real)) < 1e-4
        assert abs(vals[1] - vals[0]) < 1e-5

    def test_tr_Rk_closed(self, rng):
        d = geom.make_product([geom.Circle()] * 3, 8)
        conn = mf.random_su2_connection(rng, d, degree=1, scale=0.5)
        R = cw.curvature(conn)
        trR = forms.trace_field(R)
        dtr = forms.exterior_d(trR)
        assert dtr.eval(d.random_points(rng, 5)).max_abs() < 1e-8


class TestChernSimons:
    def test_zero_connection(self):
        d = geom.make_product([geom.Circle()] * 3, 8)
        conn = mf.connection_from_fields(d, 2, [None] * 3)
        cs = cw.cs_form(conn)
        assert cs.eval((0.1, 0.2, 0.3)).max_abs() < 1e-15

    def test_dcs_half_c2_t3_and_t4(self, rng):
        # on T^3 both sides vanish identically; T^4 carries the content
        for ncoord in (3, 4):
            d = geom.make_product([geom.Circle()] * ncoord, 8)
            conn = mf.random_su2_connection(rng, d, degree=1, scale=0.45)
            dcs = forms.exterior_d(cw.cs_form(conn))
            c2h = cw.chern_forms(conn)["c2"].scale(0.5)
            pts = d.random_points(rng, 5)
            a, b = dcs.eval(pts), c2h.eval(pts)
            assert (a - b).max_abs() <= 1e-8 * (1 + b.max_abs())

    def test_maurer_cartan_cs_integral(self):
        # int_{Spin3} CS of the Maurer-Cartan form in the rank-2 fundamental
        # representation; two-resolution Richardson against the frozen value
        vals = []
        for res in (16, 24):
            s3 = geom.make_product([geom.Spin3()], res)

            def a_field(coords):
                jets = ad.seed(coords)
                g = geom.hopf_to_su2(*jets)
                gd = ad.conj(ad.transpose(ad.value_of(g)))
                return forms.GradedEndForm(
                    3, 2, {1 << k: ad.matmul(gd, g.jac[k]) for k in range(3)})

            conn = cw.GaugedConnection(
                s3, 2, forms.EndFormField(s3, 2, a_field, declared_degrees={1}),
                antihermitian=True)
            vals.append(geom.integrate(s3, cw.cs_form(conn)).real)
        # frozen lattice-quadrature value: one half (the unit entering the
        # evenness defect through eta^3 = 2 CS and the index-4 vector lift)
        assert abs(vals[1] - 0.5) < 1e-8
        rich = vals[1] + (vals[1] - vals[0])
        assert abs(rich - 0.5) < 1e-9


class TestCurvatureCorrection:
    def _setup(self, rng):
        E = geom.make_product([geom.Circle()] * 4, 8, fiber_factors=2)
        n = 2
        par = (n, n)
        polys = [[mf.random_trig_poly(rng, E, 1, scale=0.4) for _ in range(2)]
                 for _ in range(4)]

        def RW(coords):
            comps = {}
            pairs = [(0, 1), (0, 2), (1, 3)]
            for idx, (i, j) in enumerate(pairs):
                blk = mf._scalar_times_matrix(1j * polys[idx][0](coords),
                                              np.eye(n))
                z = blk * 0.0
                comps[(1 << i) | (1 << j)] = ad.blocks(blk, z, z, -blk)
            return forms.GradedEndForm(4, 2 * n, comps, parity=par)

        def hQ(coords):
            comps = {}
            for k in range(4):
                blk = mf._scalar_times_matrix(polys[k][1](coords), np.eye(n))
                z = blk * 0.0
                comps[1 << k] = ad.blocks(z, blk, blk, z)
            return forms.GradedEndForm(4, 2 * n, comps, parity=par)

        return (E,
                forms.EndFormField(E, 2 * n, RW, parity=par, declared_degrees={2}),
                forms.EndFormField(E, 2 * n, hQ, parity=par, declared_degrees={1}))

    def test_covariantly_constant_gives_zero(self, rng):
        E, RW, _ = self._setup(rng)

        def zero(coords):
            return forms.GradedEndForm(4, 4, {}, parity=(2, 2))

        hQ0 = forms.EndFormField(E, 4, zero, parity=(2, 2), declared_degrees={1})
        out = cw.curvature_correction(RW, hQ0, E)
        assert out.eval(E.base_domain().random_points(rng, 3)).max_abs() < 1e-10

    def test_swap_cyclicity(self, rng):
        E, RW, hQ = self._setup(rng)
        a = forms.supertrace_field(
            forms.wedge_fields(forms.wedge_fields(hQ, RW), hQ))
        b = forms.supertrace_field(
            forms.wedge_fields(RW, forms.wedge_fields(hQ, hQ)))
        pts = E.random_points(rng, 5)
        assert (a.eval(pts) - b.eval(pts)).max_abs() < 1e-10

    def test_grading_required(self, rng):
        E, RW, hQ = self._setup(rng)

        def even(coords):
            blk = mf._scalar_times_matrix(1.0 + 0 * coords[0], np.eye(2))
            z = blk * 0.0
            return forms.GradedEndForm(4, 4, {1: ad.blocks(blk, z, z, blk)},
                                       parity=(2, 2))

        bad = forms.EndFormField(E, 4, even, parity=(2, 2), declared_degrees={1})
        with pytest.raises(ValueError):
            cw.curvature_correction(RW, bad, E)
