import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from kernel_lattice.error_handling import PreconditionError, SpaceMismatchError
from kernel_lattice.measure import (
    SignedMeasure,
    absolutely_continuous,
    band_projection_ac,
    dirac,
    equivalent,
    from_density,
    hahn_sets,
    integrate,
    jordan_decomposition,
    lebesgue,
    measure_inf,
    measure_leq,
    measure_sup,
    restrict,
    sequence_sup,
    total_variation,
    tv_distance,
    uniform_probability,
    zero_measure,
)
from kernel_lattice.operator import random_measure
from kernel_lattice.state_space import BasisSet, BoundedFunction, make_space, subset_patterns


class TestSignedMeasure(unittest.TestCase):
    def setUp(self):
        self.space = make_space("discrete", n=3)
        self.mu = SignedMeasure(self.space, [1.0, -2.0, 0.5])

    def test_masses(self):
        self.assertEqual(self.mu.mass([0, 2]), 1.5)
        self.assertEqual(self.mu.mass(BasisSet(self.space, frozenset({1}))), -2.0)
        self.assertEqual(self.mu.total_mass, -0.5)
        self.assertFalse(self.mu.is_positive())

    def test_immutable(self):
        with self.assertRaises(ValueError):
            self.mu.weights[0] = 3.0

    def test_rejects_bad_weights(self):
        with self.assertRaises(PreconditionError):
            SignedMeasure(self.space, [1.0, 2.0])
        with self.assertRaises(PreconditionError):
            SignedMeasure(self.space, [1.0, np.nan, 0.0])

    def test_atoms_cannot_carry_diffuse_mass(self):
        with self.assertRaises(PreconditionError):
            SignedMeasure(self.space, [1.0, 0.0, 0.0], [1.0, 0.0, 0.0])

    def test_arithmetic(self):
        nu = SignedMeasure(self.space, [0.0, 1.0, 1.0])
        assert_allclose((self.mu + nu).weights, [1.0, -1.0, 1.5])
        assert_allclose((self.mu - nu).weights, [1.0, -3.0, -0.5])
        assert_allclose((2 * self.mu).weights, [2.0, -4.0, 1.0])
        assert_allclose((-self.mu).weights, [-1.0, 2.0, -0.5])

    def test_space_mismatch(self):
        other = zero_measure(make_space("discrete", n=2))
        with self.assertRaises(SpaceMismatchError):
            measure_sup(zero_measure(self.space), other)

    def test_integrate_and_restrict(self):
        f = BoundedFunction(self.space, [2.0, 1.0, -4.0])
        self.assertEqual(integrate(f, self.mu), -2.0)
        assert_array_equal(restrict(self.mu, [1, 2]).weights, [0.0, -2.0, 0.5])


class TestJordanHahn(unittest.TestCase):
    def setUp(self):
        self.space = make_space("discrete", n=3)

    def test_example(self):
        mu = SignedMeasure(self.space, [1.0, -2.0, 0.5])
        positive, negative = jordan_decomposition(mu)
        assert_array_equal(positive.weights, [1.0, 0.0, 0.5])
        assert_array_equal(negative.weights, [0.0, 2.0, 0.0])
        self.assertEqual(total_variation(mu), 3.5)
        self.assertTrue(np.all(positive.weights * negative.weights == 0))

    def test_zero_weights_join_the_negative_set(self):
        positive, negative = hahn_sets(SignedMeasure(self.space, [1.0, 0.0, -1.0]))
        self.assertEqual(positive, frozenset({0}))
        self.assertEqual(negative, frozenset({1, 2}))

    def test_decomposition_random(self):
        rng = np.random.default_rng(1)
        space = make_space("mixed", n=4, a=0.0, b=1.0, atoms=2)
        for _ in range(200):
            mu = random_measure(space, rng)
            positive, negative = jordan_decomposition(mu)
            self.assertTrue((positive - negative).allclose(mu))
            self.assertTrue(positive.is_positive() and negative.is_positive())
            self.assertAlmostEqual(total_variation(mu),
                                   total_variation(positive) + total_variation(negative), places=12)
            self.assertTrue((measure_inf(positive, negative)).allclose(zero_measure(space)))


class TestHahnSubsets(unittest.TestCase):
    def test_hahn_sets_against_every_subset(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            n = int(rng.integers(1, 9))
            space = make_space("discrete", n=n)
            mu = SignedMeasure(space, rng.uniform(-1.0, 1.0, n))
            positive, _ = hahn_sets(mu)
            patterns = subset_patterns(n)
            masses = patterns @ mu.weights
            in_positive = space.subset_mask(positive)
            inside_positive = ~np.any(patterns[:, ~in_positive] > 0, axis=1)
            inside_negative = ~np.any(patterns[:, in_positive] > 0, axis=1)
            self.assertTrue(np.all(masses[inside_positive] >= 0.0))
            self.assertTrue(np.all(masses[inside_negative] <= 0.0))
            self.assertAlmostEqual(mu.mass(positive), float(masses.max()), places=12)



class TestLatticeOperations(unittest.TestCase):
    def test_sup_inf_example(self):
        space = make_space("discrete", n=2)
        mu = SignedMeasure(space, [1.0, -1.0])
        nu = SignedMeasure(space, [-1.0, 2.0])
        assert_array_equal(measure_sup(mu, nu).weights, [1.0, 2.0])
        assert_array_equal(measure_inf(mu, nu).weights, [-1.0, -1.0])

    def test_lattice_axioms(self):
        rng = np.random.default_rng(2)
        for space in (make_space("discrete", n=5), make_space("mixed", n=3, a=0.0, b=1.0, atoms=2)):
            for _ in range(500):
                mu, nu, rho = (random_measure(space, rng) for _ in range(3))
                join, meet = measure_sup, measure_inf
                self.assertTrue(join(mu, mu).allclose(mu))
                self.assertTrue(meet(mu, mu).allclose(mu))
                self.assertTrue(join(mu, nu).allclose(join(nu, mu)))
                self.assertTrue(meet(mu, nu).allclose(meet(nu, mu)))
                self.assertTrue(join(join(mu, nu), rho).allclose(join(mu, join(nu, rho))))
                self.assertTrue(meet(meet(mu, nu), rho).allclose(meet(mu, meet(nu, rho))))
                self.assertTrue(join(mu, meet(mu, nu)).allclose(mu))
                self.assertTrue(meet(mu, join(mu, nu)).allclose(mu))
                self.assertTrue((join(mu, nu) + meet(mu, nu)).allclose(mu + nu))
                upper = join(mu, rho)
                self.assertTrue(join(mu, meet(nu, upper)).allclose(meet(join(mu, nu), upper)))
                self.assertTrue(measure_leq(meet(mu, nu), join(mu, nu)))

    def test_split_is_respected(self):
        space = make_space("mixed", n=2, a=0.0, b=1.0, atoms=1)
        point = dirac(space, 1)
        smooth = lebesgue(space)
        joined = measure_sup(point, smooth)
        assert_allclose(joined.weights, [0.0, 1.5, 0.5])
        assert_allclose(joined.diffuse, [0.0, 0.5, 0.5])
        self.assertEqual(total_variation(point - smooth), 2.0)


class TestSequenceSup(unittest.TestCase):
    def setUp(self):
        self.space = make_space("discrete", n=3)
        self.mu = SignedMeasure(self.space, [1.0, 2.0, 0.5])

    def test_increasing_sequence(self):
        terms = [(1.0 - 1.0 / k) * self.mu for k in range(1, 6)]
        with self.assertLogs('kernel_lattice.measure', level='WARNING'):
            result = sequence_sup(terms, self.mu)
        self.assertTrue(result.allclose(terms[-1]))
        self.assertTrue(measure_leq(result, self.mu))

    def test_constant_sequence_is_silent(self):
        result = sequence_sup([self.mu, self.mu], self.mu)
        self.assertTrue(result.allclose(self.mu))

    def test_rejects_bad_input(self):
        with self.assertRaises(PreconditionError):
            sequence_sup([], self.mu)
        with self.assertRaises(PreconditionError):
            sequence_sup([self.mu, 0.5 * self.mu], self.mu)
        with self.assertRaises(PreconditionError):
            sequence_sup([self.mu], 0.5 * self.mu)

    def test_matches_subset_maximum(self):
        rng = np.random.default_rng(35)
        for _ in range(50):
            n = int(rng.integers(1, 11))
            space = make_space("discrete", n=n)
            terms = [SignedMeasure(space, rng.uniform(-1.0, 1.0, n))]
            for _ in range(int(rng.integers(0, 10))):
                terms.append(terms[-1] + SignedMeasure(space, rng.uniform(0.0, 0.2, n)))
            bound = terms[-1] + SignedMeasure(space, rng.uniform(0.0, 1.0, n))
            result = sequence_sup(terms, bound)
            patterns = subset_patterns(n)
            expected = np.max([patterns @ term.weights for term in terms], axis=0)
            assert_allclose(patterns @ result.weights, expected, rtol=0.0, atol=1e-12)


class TestAbsoluteContinuity(unittest.TestCase):
    def test_discrete(self):
        space = make_space("discrete", n=3)
        mu = SignedMeasure(space, [1.0, 0.0, 1.0])
        nu = SignedMeasure(space, [2.0, 3.0, 0.0])
        self.assertFalse(absolutely_continuous(mu, nu))
        self.assertTrue(absolutely_continuous(SignedMeasure(space, [1.0, 0.0, 0.0]), nu))
        self.assertTrue(equivalent(nu, 3 * nu))

    def test_point_mass_in_a_cell_is_singular(self):
        space = make_space("interval", n=4, a=0.0, b=1.0)
        self.assertFalse(absolutely_continuous(dirac(space, 1), lebesgue(space)))
        self.assertTrue(absolutely_continuous(from_density(space, [1.0, 2.0, 0.0, 1.0]), lebesgue(space)))
        self.assertFalse(equivalent(dirac(space, 1), lebesgue(space)))

    def test_band_projection(self):
        space = make_space("mixed", n=2, a=0.0, b=1.0, atoms=1)
        mu = dirac(space, 0) + dirac(space, 1) + lebesgue(space)
        projected = band_projection_ac(mu)
        self.assertTrue(projected.allclose(lebesgue(space)))
        self.assertTrue(band_projection_ac(projected).allclose(projected))

    def test_tv_distance(self):
        space = make_space("discrete", n=4)
        self.assertAlmostEqual(tv_distance(dirac(space, 0), uniform_probability(space)), 1.5)
        self.assertEqual(tv_distance(dirac(space, 0), dirac(space, 0)), 0.0)


class TestNormInequalities(unittest.TestCase):
    def setUp(self):
        self.space = make_space("mixed", n=4, a=0.0, b=1.0, atoms=2)

    def test_integral_bound(self):
        rng = np.random.default_rng(32)
        for _ in range(500):
            mu = random_measure(self.space, rng)
            f = BoundedFunction(self.space, rng.uniform(-3.0, 3.0, self.space.n))
            self.assertLessEqual(abs(integrate(f, mu)), f.sup_norm * total_variation(mu) + 1e-12)

    def test_tv_distance_triangle_inequality(self):
        rng = np.random.default_rng(33)
        for _ in range(500):
            mu, nu, rho = (random_measure(self.space, rng) for _ in range(3))
            self.assertLessEqual(tv_distance(mu, rho), tv_distance(mu, nu) + tv_distance(nu, rho) + 1e-12)
            self.assertAlmostEqual(tv_distance(mu, nu), tv_distance(nu, mu), places=12)

    def test_band_projection_contracts(self):
        rng = np.random.default_rng(34)
        for _ in range(500):
            mu, nu = random_measure(self.space, rng), random_measure(self.space, rng)
            self.assertLessEqual(total_variation(band_projection_ac(mu)), total_variation(mu) + 1e-12)
            self.assertLessEqual(tv_distance(band_projection_ac(mu), band_projection_ac(nu)),
                                 tv_distance(mu, nu) + 1e-12)


if __name__ == '__main__':
    unittest.main()
