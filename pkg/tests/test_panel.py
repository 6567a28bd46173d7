import unittest

import pandas as pd

from forestmfg.errors import DomainError, ValidationError
from forestmfg.panel import Panel


RECORDS = [
    ("b", 2002, 40.0, 0.1),
    ("a", 2003, 51.0, 0.2),
    ("a", 2002, 50.0, 0.2),
    ("b", 2003, 39.5, 0.1),
    ("b", 2004, 39.0, 0.1),
]


class PanelConstructionTest(unittest.TestCase):

    def test_sorted(self):
        panel = Panel.from_records(RECORDS)
        self.assertEqual(["a", "b"], panel.units)
        self.assertEqual([2002, 2003, 2004], panel.years)
        self.assertEqual(5, len(panel))
        self.assertEqual("Panel(5 records, 2 units)", repr(panel))
        self.assertFalse(panel.has_regions)

    def test_dict_records(self):
        panel = Panel.from_records([{"unit_id": 7, "year": 2002.0, "tree_area_km2": "3.5", "atr_share": 0}])
        frame = panel.frame
        self.assertEqual("7", frame["unit_id"].iloc[0])
        self.assertEqual(2002, frame["year"].iloc[0])
        self.assertEqual(3.5, frame["tree_area_km2"].iloc[0])

    def test_frame_is_a_copy(self):
        panel = Panel.from_records(RECORDS)
        frame = panel.frame
        frame.loc[0, "tree_area_km2"] = -1.0
        self.assertEqual(50.0, panel.frame["tree_area_km2"].iloc[0])

    def test_missing_column(self):
        with self.assertRaises(ValidationError):
            Panel(pd.DataFrame({"unit_id": ["a"], "year": [2002], "tree_area_km2": [1.0]}))

    def test_unknown_column(self):
        frame = pd.DataFrame.from_records(RECORDS, columns=["unit_id", "year", "tree_area_km2", "atr_share"])
        frame["rainfall"] = 1.0
        with self.assertRaises(ValidationError):
            Panel(frame)

    def test_fractional_year(self):
        with self.assertRaises(ValidationError):
            Panel.from_records([("a", 2002.5, 1.0, 0.1)])

    def test_non_numeric_area(self):
        with self.assertRaises(ValidationError):
            Panel.from_records([("a", 2002, "lots", 0.1)])

    def test_missing_value(self):
        with self.assertRaises(ValidationError):
            Panel.from_records([("a", 2002, float("nan"), 0.1)])

    def test_nonpositive_area(self):
        with self.assertRaises(DomainError):
            Panel.from_records([("a", 2002, 0.0, 0.1)])

    def test_share_out_of_range(self):
        with self.assertRaises(DomainError):
            Panel.from_records([("a", 2002, 1.0, 1.1)])

    def test_duplicate(self):
        with self.assertRaises(ValidationError) as ctx:
            Panel.from_records(RECORDS + [("a", 2002, 49.0, 0.2)])
        self.assertIn("unit a, year 2002", str(ctx.exception))


class PanelQueryTest(unittest.TestCase):

    def setUp(self):
        self.panel = Panel.from_records([row + ("WAP" if row[0] == "a" else "SAV",) for row in RECORDS])

    def test_subset(self):
        wap = self.panel.subset("WAP")
        self.assertEqual(["a"], wap.units)
        with self.assertRaises(ValidationError):
            self.panel.subset("Sahel")
        with self.assertRaises(ValidationError):
            Panel.from_records(RECORDS).subset("WAP")

    def test_at_year(self):
        rows = self.panel.at_year(2004)
        self.assertEqual(["b"], list(rows.index))
        self.assertEqual(39.0, rows.loc["b", "tree_area_km2"])

    def test_transitions(self):
        pairs = self.panel.transitions()
        self.assertEqual(["unit_id", "year", "x0", "x1", "atr_share"], list(pairs.columns))
        self.assertEqual(3, len(pairs))
        first = pairs.iloc[0]
        self.assertEqual(("a", 2002, 50.0, 51.0), (first["unit_id"], first["year"], first["x0"], first["x1"]))

    def test_transitions_with_gap(self):
        pairs = Panel.from_records(RECORDS).transitions(step=2)
        self.assertEqual(1, len(pairs))
        self.assertEqual(39.0, pairs["x1"].iloc[0])

    def test_short_units_skipped(self):
        panel = Panel.from_records(RECORDS + [("c", 2002, 10.0, 0.0)])
        with self.assertLogs("forestmfg.panel", level="WARNING") as logs:
            pairs = panel.transitions()
        self.assertNotIn("c", set(pairs["unit_id"]))
        self.assertIn("Skipping unit c", logs.output[0])


if __name__ == "__main__":
    unittest.main()
