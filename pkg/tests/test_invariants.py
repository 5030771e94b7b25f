import math
import os
import sys
import unittest

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np

from phfractal.barcodes import make_diagram
from phfractal.errors import (
    ArgumentError,
    ConvergenceError,
    EstimationError,
    InapplicableError,
    UnsupportedStructureError,
)
from phfractal.families import (
    BUILTIN_NAMES,
    SIXTH,
    THIRD,
    builtin_spec,
    enumerate_family,
    exact_complexity,
    largest_lifetime,
    spec_diagram,
)
from phfractal.invariants import (
    avg_betti_closed,
    avg_betti_sequence,
    degree_summary,
    dust_inner_series,
    dust_sandwich,
    estimate_complexity,
    euler,
    lw_average_euler,
    magnitude_sum,
    s_delta,
)
from phfractal.structs import DustFamily, EssentialBar, FractalSpec, GeometricFamily

SIGMA_CANTOR = math.log(2) / math.log(3)


def _dust_family(spec: FractalSpec) -> DustFamily:
    return [f for f in spec.families if isinstance(f, DustFamily)][0]


class TestPowerSums(unittest.TestCase):
    def test_cantor_closed_form(self):
        spec = builtin_spec("cantor")
        for j in range(1, 11):
            delta = 0.5 * 3.0 ** -(j + 1)
            expected = (1 + SIXTH ** SIGMA_CANTOR * j) / SIGMA_CANTOR
            self.assertAlmostEqual(s_delta(spec, 0, SIGMA_CANTOR, delta, 1.0), expected, delta=1e-12)

    def test_zero_sigma(self):
        self.assertEqual(s_delta(builtin_spec("cantor"), 0, 0.0, 1e-3, 1.0), 0.0)

    def test_argument_checks(self):
        spec = builtin_spec("cantor")
        with self.assertRaises(ArgumentError):
            s_delta(spec, 0, SIGMA_CANTOR, 0.0, 1.0)
        with self.assertRaises(ArgumentError):
            s_delta(spec, 0, SIGMA_CANTOR, 1e-3, 0.0)
        with self.assertRaises(ArgumentError):
            s_delta(spec, 0, -1.0, 1e-3, 1.0)

    def test_diagram_agrees_with_families(self):
        for name in BUILTIN_NAMES:
            spec = builtin_spec(name)
            diagram = spec_diagram(spec, 1e-5)
            for i in spec.degrees:
                sigma = exact_complexity(spec, i) or 1.0
                for delta in (1e-2, 1e-3):
                    self.assertAlmostEqual(
                        s_delta(diagram, i, sigma, delta, spec.diameter),
                        s_delta(spec, i, sigma, delta, spec.diameter),
                        delta=1e-10,
                    )

    def test_uncapped_diagram_rejected(self):
        diagram = make_diagram(1, 1.0, [(0, 0.0, math.inf, 1)])
        with self.assertRaises(ArgumentError):
            s_delta(diagram, 0, 0.5, 0.1, 1.0)

    def test_scale_invariance(self):
        for name in BUILTIN_NAMES:
            spec = builtin_spec(name)
            for factor in (0.5, 2.0, 7.0):
                scaled = spec.scaled(factor)
                for i in spec.degrees:
                    sigma = exact_complexity(spec, i)
                    if sigma == 0:
                        continue
                    a = s_delta(spec, i, sigma, 1e-3 * math.pi, spec.diameter)
                    b = s_delta(scaled, i, sigma, factor * 1e-3 * math.pi, scaled.diameter)
                    self.assertAlmostEqual(a, b, delta=1e-10 * max(1.0, a))
                    self.assertAlmostEqual(avg_betti_closed(spec, i), avg_betti_closed(scaled, i), delta=1e-12)

    def test_non_increasing_in_threshold(self):
        rng = np.random.default_rng(5)
        deltas = np.sort(10.0 ** rng.uniform(-7, 0.3, 80))
        for name in BUILTIN_NAMES:
            spec = builtin_spec(name)
            for i in spec.degrees:
                sigma = exact_complexity(spec, i)
                if sigma == 0:
                    continue
                values = [s_delta(spec, i, sigma, float(d), spec.diameter) for d in deltas]
                for a, b in zip(values, values[1:]):
                    self.assertGreaterEqual(a, b, (name, i))

    def test_lifetime_power_sums_straddle_complexity(self):
        # increments of Σ|e|^α per scale step shrink above σ and grow below it
        for name in BUILTIN_NAMES:
            spec = builtin_spec(name)
            for i in spec.degrees:
                sigma = exact_complexity(spec, i)
                if sigma == 0:
                    continue
                families = [f for f in spec.degree_families(i) if not isinstance(f, EssentialBar)]
                top = max(largest_lifetime(f) for f in families)

                def power_sum(alpha: float, j: int) -> float:
                    delta = 0.9 * top * THIRD ** j
                    return sum(
                        m * (d - b) ** alpha for f in families for b, d, m in enumerate_family(f, delta)
                    )

                for alpha, grows in ((sigma + 0.01, False), (sigma - 0.01, True)):
                    sums = [power_sum(alpha, j) for j in range(9, 17)]
                    increments = [b - a for a, b in zip(sums, sums[1:])]
                    self.assertTrue(all(inc > 0 for inc in increments), (name, i, alpha))
                    # same parity, six steps apart
                    if grows:
                        self.assertGreater(increments[-1], increments[0], (name, i, alpha))
                    else:
                        self.assertLess(increments[-1], increments[0], (name, i, alpha))


class TestMagnitude(unittest.TestCase):
    def test_matches_power_sum_for_long_bars(self):
        rng = np.random.default_rng(7)
        for _ in range(500):
            diameter = float(rng.uniform(0.5, 3.0))
            sigma = float(rng.uniform(0.2, 2.5))
            n = int(rng.integers(1, 8))
            births = rng.uniform(0.0, 0.5 * diameter, n)
            births[rng.random(n) < 0.3] = 0.0
            lifetimes = rng.uniform(0.2 * diameter, 0.5 * diameter, n)
            rows = [(0, float(b), float(b + l), 1) for b, l in zip(births, lifetimes)]
            diagram = make_diagram(1, diameter, rows)
            expected = s_delta(diagram, 0, sigma, 0.1 * diameter, diameter)
            got = magnitude_sum(diagram.bars, sigma, diameter)
            self.assertAlmostEqual(got, expected, delta=1e-12 * abs(expected))

    def test_tuples_and_zero_birth(self):
        self.assertAlmostEqual(magnitude_sum([(0.0, 0.5)], 1.0, 1.0), 0.5)
        self.assertEqual(magnitude_sum([], 1.0, 1.0), 0.0)
        with self.assertRaises(ArgumentError):
            magnitude_sum([(0.0, 0.5)], 0.0, 1.0)


class TestAverageBetti(unittest.TestCase):
    def test_closed_values(self):
        self.assertAlmostEqual(avg_betti_closed(builtin_spec("cantor"), 0), 0.466, delta=5e-4)
        self.assertAlmostEqual(avg_betti_closed(builtin_spec("sierpinski_carpet"), 1), 0.0084, delta=5e-5)
        dust = builtin_spec("cantor_dust")
        self.assertAlmostEqual(avg_betti_closed(dust, 0), 0.1456, delta=5e-4)
        self.assertAlmostEqual(avg_betti_closed(dust, 1), 0.0438, delta=5e-4)
        menger = builtin_spec("menger")
        self.assertAlmostEqual(avg_betti_closed(menger, 1), 0.001691, delta=5e-6)
        self.assertAlmostEqual(avg_betti_closed(menger, 2), 0.001555, delta=5e-6)
        self.assertEqual(avg_betti_closed(menger, 0), 0.0)
        self.assertEqual(avg_betti_closed(menger, 3), 0.0)

    def test_cantor_closed_form_value(self):
        expected = SIXTH ** SIGMA_CANTOR / SIGMA_CANTOR / math.log(3)
        self.assertAlmostEqual(avg_betti_closed(builtin_spec("cantor"), 0), expected, delta=1e-12)

    def test_sequence_matches_closed(self):
        for name in BUILTIN_NAMES:
            spec = builtin_spec(name)
            for i in spec.degrees:
                beta, trace = avg_betti_sequence(spec, i)
                self.assertAlmostEqual(beta, avg_betti_closed(spec, i), delta=1e-6)
                self.assertIsNotNone(trace.converged_at)

    def test_sequence_trace(self):
        beta, trace = avg_betti_sequence(builtin_spec("cantor"), 0)
        self.assertEqual(trace.converged_at, 3)
        self.assertEqual(len(trace.entries), 3)
        self.assertIsNone(trace.entries[0].increment_estimate)
        deltas = [e.delta for e in trace.entries]
        self.assertEqual(deltas, sorted(deltas, reverse=True))
        # raw ratio S/|log a_j| is kept next to the faster-settling increment
        for j, entry in enumerate(trace.entries, start=1):
            a_j = SIXTH * THIRD ** (j - 1)
            self.assertAlmostEqual(entry.ratio, entry.s_value / abs(math.log(a_j)), delta=1e-12)
        last = trace.entries[-1]
        self.assertLess(abs(last.increment_estimate - beta), abs(last.ratio - beta))

    def test_sequence_zero_complexity(self):
        beta, trace = avg_betti_sequence(builtin_spec("sierpinski_carpet"), 0)
        self.assertEqual(beta, 0.0)
        self.assertEqual(trace.entries, ())

    def test_sequence_stall(self):
        spec = builtin_spec("cantor_dust")
        with self.assertRaises(ConvergenceError) as ctx:
            avg_betti_sequence(spec, 1, j_max=3, tol=1e-15)
        self.assertIsNone(ctx.exception.trace.converged_at)
        self.assertEqual(len(ctx.exception.trace.entries), 3)
        with self.assertRaises(ArgumentError):
            avg_betti_sequence(spec, 1, j_max=2)

    def test_degree_summary_keeps_partial_estimate(self):
        report = degree_summary(builtin_spec("cantor_dust"), 1, j_max=3, tol=1e-15)
        self.assertFalse(report.converged)
        self.assertIsNotNone(report.beta_sequence)
        self.assertIsNotNone(report.note)
        self.assertAlmostEqual(report.beta, report.beta_closed)

    def test_inner_index_dominated_dust(self):
        # inner exponent log 8 / log 3 exceeds the outer log 2 / log 3
        spec = FractalSpec(
            name="inner_dominated",
            ambient_dim=2,
            diameter=math.sqrt(2),
            families=(
                EssentialBar(degree=0, death=math.sqrt(2)),
                DustFamily(degree=1, birth0=SIXTH, ratio=THIRD, count0=1, count_ratio=2,
                           inner_growth=8, inner_decay=1.0 / 9.0),
            ),
        )
        with self.assertRaises(UnsupportedStructureError):
            avg_betti_closed(spec, 1)
        report = degree_summary(spec, 1, j_max=8)
        self.assertIsNone(report.beta_closed)
        self.assertIsNotNone(report.note)

    def test_mixed_ratios(self):
        spec = FractalSpec(
            name="mixed",
            ambient_dim=1,
            diameter=1.0,
            families=(
                GeometricFamily(degree=0, birth0=0.0, death0=SIXTH, ratio=THIRD, count0=1, count_ratio=3),
                GeometricFamily(degree=0, birth0=0.0, death0=0.1, ratio=0.25, count0=1, count_ratio=4),
            ),
        )
        with self.assertRaises(UnsupportedStructureError):
            avg_betti_closed(spec, 0)
        # the sequence method needs a single ratio as well, so nothing applies
        with self.assertRaises(UnsupportedStructureError):
            degree_summary(spec, 0)
        with self.assertRaises(UnsupportedStructureError):
            euler(spec)


class TestEuler(unittest.TestCase):
    def test_reference_values(self):
        self.assertAlmostEqual(euler(builtin_spec("cantor")).euler_phf, 0.466, delta=5e-4)
        self.assertAlmostEqual(euler(builtin_spec("sierpinski_carpet")).euler_phf, -0.0084, delta=5e-5)
        self.assertAlmostEqual(euler(builtin_spec("cantor_dust")).euler_phf, 0.1018, delta=5e-4)
        self.assertAlmostEqual(euler(builtin_spec("menger")).euler_phf, -0.0001353, delta=2e-6)

    def test_report_contents(self):
        report = euler(builtin_spec("menger"), stamp=False)
        self.assertIsNone(report.generated_at)
        self.assertEqual([d.i for d in report.degrees], [0, 1, 2, 3])
        self.assertAlmostEqual(report.euler_sequence, report.euler_phf, delta=1e-6)
        self.assertIn("beta_1", report.reference_values)

    def test_stall_carries_report(self):
        with self.assertRaises(ConvergenceError) as ctx:
            euler(builtin_spec("cantor_dust"), j_max=3, tol=1e-15)
        report = ctx.exception.report
        self.assertIsNotNone(report)
        self.assertFalse(report.degrees[1].converged)


class TestLlorenteWinter(unittest.TestCase):
    def test_cantor_trend(self):
        spec = builtin_spec("cantor")
        expected = {1e-2: 0.061, 1e-4: 0.029, 1e-6: 0.018, 1e-8: 0.014}
        gaps = []
        for delta, value in expected.items():
            lw = lw_average_euler(spec, delta)
            self.assertAlmostEqual(lw.discrepancy, value, delta=0.05 * value)
            self.assertAlmostEqual(lw.chi_increment, avg_betti_closed(spec, 0), delta=1e-9)
            gaps.append(lw.discrepancy)
        self.assertEqual(gaps, sorted(gaps, reverse=True))

    def test_carpet_trend(self):
        spec = builtin_spec("sierpinski_carpet")
        expected = {1e-2: 0.0031, 1e-4: 0.0016, 1e-6: 0.00116, 1e-8: 0.00082}
        gaps = []
        for delta, value in expected.items():
            lw = lw_average_euler(spec, delta)
            self.assertAlmostEqual(lw.discrepancy, value, delta=0.05 * value)
            self.assertEqual(lw.integrals[0], 0.0)
            gaps.append(lw.discrepancy)
        self.assertEqual(gaps, sorted(gaps, reverse=True))

    def test_bad_radii(self):
        with self.assertRaises(InapplicableError):
            lw_average_euler(builtin_spec("cantor_dust"), 1e-4)
        with self.assertRaises(InapplicableError):
            lw_average_euler(builtin_spec("menger"), 1e-4)

    def test_delta_range(self):
        with self.assertRaises(ArgumentError):
            lw_average_euler(builtin_spec("cantor"), 1.5)
        with self.assertRaises(ArgumentError):
            lw_average_euler(builtin_spec("cantor"), 0.0)


class TestFiniteEstimates(unittest.TestCase):
    def test_cantor_complexity(self):
        diagram = spec_diagram(builtin_spec("cantor"), 1e-5)
        fit = estimate_complexity(diagram, 0, (1e-4, 1e-1))
        self.assertAlmostEqual(fit.slope, SIGMA_CANTOR, delta=0.05)
        self.assertGreaterEqual(fit.distinct_counts, 5)

    def test_all_degrees(self):
        for name in BUILTIN_NAMES:
            spec = builtin_spec(name)
            diagram = spec_diagram(spec, 1e-9)
            for i in spec.degrees:
                sigma = exact_complexity(spec, i)
                if sigma == 0:
                    continue
                fit = estimate_complexity(diagram, i, (1e-8, 1e-1))
                self.assertAlmostEqual(fit.slope, sigma, delta=0.08)

    def test_constant_count(self):
        diagram = spec_diagram(builtin_spec("cantor"), 1e-3)
        with self.assertRaises(EstimationError):
            estimate_complexity(diagram, 0, (0.2, 0.9))
        with self.assertRaises(EstimationError):
            estimate_complexity(diagram, 1, (1e-3, 1e-1))
        with self.assertRaises(EstimationError):
            estimate_complexity(diagram, 0, (0.1, 0.01))

    def test_dust_sandwich(self):
        spec = builtin_spec("cantor_dust")
        fam = _dust_family(spec)
        sigma = exact_complexity(spec, 1)
        for j in range(1, 21):
            lower, value, upper = dust_sandwich(fam, spec.diameter, sigma, j)
            self.assertLessEqual(lower, value * (1 + 1e-12))
            self.assertLessEqual(value, upper * (1 + 1e-12))
        series = dust_inner_series(fam, spec.diameter, sigma)
        self.assertGreater(series, 0.0)


if __name__ == '__main__':
    unittest.main()
