import numpy as np
import pytest

from etaline import ad, diffchar, geom
from etaline import modelfields as mf

TWO_PI = 2 * np.pi


def flat_setup(res=8):
    d = geom.make_product([geom.Circle()] * 3, res)
    V = mf.connection_from_fields(d, 3, [None] * 3)
    return d, V


def twisted_setup(rng, ncoord=3, res=8, scale=0.4):
    d = geom.make_product([geom.Circle()] * ncoord, res)
    V = mf.random_so3_connection(rng, d, degree=1, scale=scale)
    Q = mf.so3_field_from_su2(mf.random_su2_field(rng, d, degree=1, scale=scale))
    return d, V, Q


def torus3_cycle(domain, windings=(1, 1, 1), offsets=(0, 0, 0), res=20):
    def pm(params):
        u, v, w = params
        return (TWO_PI * windings[0] * u + offsets[0],
                TWO_PI * windings[1] * v + offsets[1],
                TWO_PI * windings[2] * w + offsets[2])
    return geom.Cycle(domain, 3, pm, res=res)


class TestP1HalfCharacter:
    def test_flat_connection_gives_one(self):
        d, V = flat_setup()
        char = diffchar.p1half_character(V, mf.constant_field(np.eye(3)))
        # contractible 3-cycle: a shrunken wrapped torus
        z = geom.Cycle(
            d, 3,
            lambda p: (0.5 + 0.3 * ad.sin(TWO_PI * p[0]) * ad.cos(TWO_PI * p[1]),
                       1.0 + 0.3 * ad.sin(TWO_PI * p[1]),
                       2.0 + 0.3 * ad.cos(TWO_PI * p[2])),
            res=12)
        assert abs(char(z) - 1.0) < 1e-12

    def test_unit_modulus(self, rng):
        d, V, Q = twisted_setup(rng)
        char = diffchar.p1half_character(V, Q)
        z = torus3_cycle(d)
        assert abs(abs(char(z)) - 1.0) < 1e-12

    def test_boundary_law(self, rng):
        d = geom.make_product([geom.Circle()] * 4, 8)
        V = mf.random_so3_connection(rng, d, degree=1, scale=0.4)
        Q = mf.so3_field_from_su2(mf.random_su2_field(rng, d, degree=1,
                                                      scale=0.4))
        char = diffchar.p1half_character(V, Q)

        def pmap(params):
            s, u, v, w = params
            return (TWO_PI * u, TWO_PI * v, TWO_PI * w,
                    0.6 * np.pi * s + 0.4 + 0.0 * u)

        chain = geom.Chain(d, 4, pmap, res=16, res_s=8)
        assert diffchar.boundary_defect(char, chain) < 1e-6

    def test_trivialization_independence(self, rng):
        d, V, Q = twisted_setup(rng)
        q2 = mf.random_su2_field(rng, d, degree=1, scale=0.3)

        def Qalt(coords):
            base = mf.so3_field_from_su2(lambda c: q2(c))(coords)
            return ad.matmul(Q(coords), base)

        z = torus3_cycle(d, offsets=tuple(rng.uniform(0, TWO_PI, 3)), res=24)
        a = diffchar.p1half_character(V, Q)(z)
        b = diffchar.p1half_character(V, Qalt)(z)
        assert abs(a - b) < 1e-6

    def test_homomorphism_on_sums(self, rng):
        d, V, Q = twisted_setup(rng)
        char = diffchar.p1half_character(V, Q)
        z1 = torus3_cycle(d, res=24)
        z2 = torus3_cycle(d, windings=(1, 2, 1),
                          offsets=tuple(rng.uniform(0, TWO_PI, 3)), res=24)
        combo = char([(1, z1), (1, z2)])
        assert abs(combo - char(z1) * char(z2)) < 1e-8

    def test_spin3_fundamental_two_resolutions(self):
        vals = []
        for res in (14, 18):
            s3 = geom.make_product([geom.Spin3()], res)
            rng = np.random.default_rng(4)
            V = mf.random_so3_connection(rng, s3, degree=1, scale=0.3)

            def Q(coords):
                return mf.su2_adjoint(geom.hopf_to_su2(*coords))

            char = diffchar.p1half_character(V, Q)
            vals.append(char(geom.Cycle.fundamental(s3)))
        assert abs(vals[0] - vals[1]) < 1e-6
        assert abs(abs(vals[1]) - 1.0) < 1e-12

    def test_missing_trivialization(self, rng):
        d, V, Q = twisted_setup(rng)

        class Supply:
            def for_cycle(self, z):
                return None

        char = diffchar.p1half_character(V, Supply())
        with pytest.raises(diffchar.NoTrivializationError):
            char(torus3_cycle(d, res=10))

    def test_wrong_cycle_dimension(self, rng):
        d, V, Q = twisted_setup(rng)
        char = diffchar.p1half_character(V, Q)
        loop = geom.Cycle(d, 1, lambda p: (TWO_PI * p[0], 0.0 * p[0], 0.0 * p[0]),
                          res=8)
        with pytest.raises(ValueError):
            char(loop)


class TestTransgression:
    def test_flat_gives_constant_one(self, rng):
        E = geom.make_product([geom.Circle()] * 3, 10, fiber_factors=2)
        V = mf.connection_from_fields(E, 3, [None] * 3)
        char = diffchar.transgress_character(
            E, V, mf.constant_field(np.eye(3)))
        base = E.base_domain()
        loop = geom.Cycle(base, 1, lambda p: (TWO_PI * p[0],), res=16)
        assert abs(char(loop) - 1.0) < 1e-12

    def test_base_pullback_reduces_to_base_integral(self, rng):
        # V and Q pulled back from the base: the eta form has no fiber
        # component, so the transgressed character is constant 1
        E = geom.make_product([geom.Circle()] * 3, 10, fiber_factors=2)

        def base_poly(c):
            return 0.4 * ad.sin(c[2]) + 0.1

        def coeff(k):
            if k != 2:
                return None
            def f(coords):
                return mf._scalar_times_matrix(base_poly(coords),
                                               mf.SO3_GENERATORS[0])
            return f

        V = mf.connection_from_fields(E, 3, [coeff(k) for k in range(3)])
        qb = mf.random_su2_field(rng, E.base_domain(), degree=1, scale=0.5)

        def Q(coords):
            return mf.su2_adjoint(qb((coords[2],)))

        char = diffchar.transgress_character(E, V, Q)
        loop = geom.Cycle(E.base_domain(), 1, lambda p: (TWO_PI * p[0],), res=16)
        assert abs(char(loop) - 1.0) < 1e-10

    def test_fiber_must_be_two_dimensional(self, rng):
        E = geom.make_product([geom.Circle()] * 3, 10, fiber_factors=1)
        V = mf.connection_from_fields(E, 3, [None] * 3)
        with pytest.raises(ValueError):
            diffchar.transgress_character(E, V, mf.constant_field(np.eye(3)))
