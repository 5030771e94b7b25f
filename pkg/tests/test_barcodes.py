import math
import os
import sys
import tempfile
import unittest
from pathlib import Path

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np
from pydantic import ValidationError

from phfractal.barcodes import (
    betti_at,
    betti_curve,
    lifetime_count,
    make_diagram,
    read_diagram_csv,
    scale_diagram,
    write_diagram_csv,
)
from phfractal.errors import ArgumentError
from phfractal.families import builtin_spec, spec_diagram


class TestBettiCounts(unittest.TestCase):
    def setUp(self):
        self.diagram = make_diagram(2, 1.0, [
            (0, 0.0, 1.0, 1),
            (0, 0.0, 0.5, 2),
            (1, 0.2, 0.3, 1),
        ])

    def test_betti_at_half_open(self):
        self.assertEqual(betti_at(self.diagram, 0, 0.0), 3)
        self.assertEqual(betti_at(self.diagram, 0, 0.49), 3)
        self.assertEqual(betti_at(self.diagram, 0, 0.5), 1)
        self.assertEqual(betti_at(self.diagram, 0, 1.0), 0)
        self.assertEqual(betti_at(self.diagram, 1, 0.2), 1)
        self.assertEqual(betti_at(self.diagram, 1, 0.3), 0)
        self.assertEqual(betti_at(self.diagram, 2, 0.25), 0)

    def test_betti_at_rejects_negative(self):
        with self.assertRaises(ArgumentError):
            betti_at(self.diagram, 0, -0.1)
        with self.assertRaises(ArgumentError):
            betti_at(self.diagram, -1, 0.1)

    def test_lifetime_count_is_strict(self):
        self.assertEqual(lifetime_count(self.diagram, 0, 0.5), 1)
        self.assertEqual(lifetime_count(self.diagram, 0, 0.4), 3)
        with self.assertRaises(ArgumentError):
            lifetime_count(self.diagram, 0, 0.0)

    def test_cantor_lifetime_count(self):
        diagram = spec_diagram(builtin_spec("cantor"), 1e-4)
        # essential bar plus 1 + 2 + 4 gaps with lifetime above 0.01
        self.assertEqual(lifetime_count(diagram, 0, 0.01), 8)

    def test_betti_curve_agrees_with_betti_at(self):
        grid = [0.0, 0.1, 0.2, 0.25, 0.3, 0.5, 0.75, 1.0, 2.0]
        for i in (0, 1, 2):
            curve = betti_curve(self.diagram, i, grid)
            self.assertEqual([c for _, c in curve], [betti_at(self.diagram, i, e) for e in grid])

    def test_betti_curve_rejects_unsorted_grid(self):
        with self.assertRaises(ArgumentError):
            betti_curve(self.diagram, 0, [0.5, 0.1])

    def test_lifetime_count_non_increasing(self):
        diagram = spec_diagram(builtin_spec("cantor_dust"), 1e-4)
        rng = np.random.default_rng(11)
        eps = np.sort(rng.uniform(1e-4, 2.0, 200))
        for i in (0, 1):
            counts = [lifetime_count(diagram, i, float(e)) for e in eps]
            self.assertTrue(all(a >= b for a, b in zip(counts, counts[1:])))


class TestDiagramModel(unittest.TestCase):
    def test_duplicates_are_merged(self):
        diagram = make_diagram(1, 1.0, [(0, 0.0, 0.5, 1), (0, 0.0, 0.5, 2), (0, 0.0, 1.0, 1)])
        self.assertEqual(len(diagram.bars), 2)
        self.assertEqual(diagram.bars[0].multiplicity, 3)
        again = make_diagram(1, 1.0, [(b.dim, b.birth, b.death, b.multiplicity) for b in diagram.bars])
        self.assertEqual(again, diagram)

    def test_degenerate_bar_rejected(self):
        with self.assertRaises(ValidationError):
            make_diagram(1, 1.0, [(0, 0.5, 0.5, 1)])
        with self.assertRaises(ValidationError):
            make_diagram(1, 1.0, [(0, 0.5, 0.2, 1)])

    def test_degree_above_ambient_rejected(self):
        with self.assertRaises(ValidationError):
            make_diagram(1, 1.0, [(2, 0.0, 0.5, 1)])

    def test_scale_diagram(self):
        diagram = make_diagram(2, math.sqrt(2), [(1, 0.0, 1 / 6, 1), (0, 0.0, math.sqrt(2), 1)])
        scaled = scale_diagram(diagram, 3.0)
        self.assertAlmostEqual(scaled.diameter, 3 * math.sqrt(2))
        self.assertAlmostEqual(scaled.degree(1)[0].death, 0.5)
        for eps in (0.1, 0.3, 1.0):
            self.assertEqual(lifetime_count(scaled, 1, 3 * eps), lifetime_count(diagram, 1, eps))
        with self.assertRaises(ArgumentError):
            scale_diagram(diagram, 0.0)

    def test_betti_at_scale_invariant_at_transitions(self):
        diagram = spec_diagram(builtin_spec("sierpinski_carpet"), 1e-3)
        transitions = sorted({b.birth for b in diagram.bars} | {b.death for b in diagram.bars})
        for factor in (0.7, 3.0):
            scaled = scale_diagram(diagram, factor)
            for t in transitions:
                for i in (0, 1):
                    self.assertEqual(betti_at(scaled, i, factor * t), betti_at(diagram, i, t), (factor, t, i))


class TestDiagramCsv(unittest.TestCase):
    def test_round_trip_keeps_infinite_deaths(self):
        diagram = make_diagram(2, 5.0, [
            (0, 0.0, math.inf, 1),
            (0, 0.0, 1.0 / 3.0, 4),
            (1, 0.1, math.sqrt(2) / 6, 2),
        ])
        with tempfile.TemporaryDirectory() as tmp:
            path = write_diagram_csv(diagram, Path(tmp) / "bars.csv")
            self.assertTrue(path.read_text().startswith("dim,birth,death,multiplicity\n"))
            back = read_diagram_csv(path, 2, 5.0)
        self.assertEqual(back, diagram)

    def test_round_trip_keeps_every_digit(self):
        rng = np.random.default_rng(17)
        births = rng.uniform(0.0, 1.0, 50)
        lifetimes = rng.uniform(1e-9, 1.0, 50)
        rows = [(k % 3, float(b), float(b + l), k % 5 + 1) for k, (b, l) in enumerate(zip(births, lifetimes))]
        diagram = make_diagram(2, 3.0, rows)
        with tempfile.TemporaryDirectory() as tmp:
            back = read_diagram_csv(write_diagram_csv(diagram, Path(tmp) / "bars.csv"), 2, 3.0)
        self.assertEqual(back, diagram)

    def test_bad_header_rejected(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.csv"
            path.write_text("degree,birth,death,count\n0,0,1,1\n")
            with self.assertRaises(ArgumentError):
                read_diagram_csv(path, 1, 1.0)


if __name__ == '__main__':
    unittest.main()
