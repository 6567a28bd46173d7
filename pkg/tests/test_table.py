import textwrap
import unittest

import pandas as pd

from forestmfg.errors import ValidationError
from forestmfg.table import ALL, HEADER, NONE, ResultTable


class RateTableTest(unittest.TestCase):

    def setUp(self):
        self.x = ResultTable(["a", "rate"])
        self.x.add_row([0, 0.5])
        self.x.add_row([1, 0.25])


class StringTest(RateTableTest):

    def test_frame(self):
        self.assertEqual(textwrap.dedent("""\
            +---+------+
            | a | rate |
            +---+------+
            | 0 |  0.5 |
            | 1 | 0.25 |
            +---+------+"""), self.x.get_string())
        self.assertEqual(self.x.get_string(), str(self.x))

    def test_all_rules(self):
        self.assertEqual(textwrap.dedent("""\
            +---+------+
            | a | rate |
            +---+------+
            | 0 |  0.5 |
            +---+------+
            | 1 | 0.25 |
            +---+------+"""), self.x.get_string(hrules=ALL))

    def test_header_rule(self):
        self.assertEqual(textwrap.dedent("""\
            | a | rate |
            +---+------+
            | 0 |  0.5 |
            | 1 | 0.25 |"""), self.x.get_string(hrules=HEADER))

    def test_no_rules(self):
        self.assertEqual(3, len(self.x.get_string(hrules=NONE).splitlines()))

    def test_title(self):
        lines = self.x.get_string(title="Rates").splitlines()
        self.assertEqual("+----------+", lines[0])
        self.assertEqual("Rates", lines[1].strip("| "))

    def test_left_align(self):
        self.x.set_align("rate", "l")
        self.assertIn("| 0 | 0.5  |", self.x.get_string())

    def test_no_border(self):
        table = ResultTable(["a", "rate"], border=False)
        table.add_row([0, 0.5])
        self.assertEqual([" a  rate", " 0   0.5"], table.get_string().splitlines())

    def test_digits(self):
        table = ResultTable(["q"], digits=3)
        table.add_row([0.090755131])
        table.add_row([None])
        table.add_row([float("nan")])
        table.add_row([True])
        cells = [line.strip("| ") for line in table.get_string().splitlines()[3:-1]]
        self.assertEqual(["0.0908", "", "nan", "true"], cells)


class MarkdownTest(RateTableTest):

    def test_md(self):
        self.assertEqual(textwrap.dedent("""\
            |  a  | rate |
            | --: | ---: |
            |   0 |  0.5 |
            |   1 | 0.25 |"""), self.x.get_md_string())

    def test_md_title(self):
        self.x.title = "Rates"
        self.assertTrue(self.x.get_md_string().startswith("**Rates**\n\n|"))


class ConstructionTest(RateTableTest):

    def test_counts(self):
        self.assertEqual(2, self.x.rowcount)
        self.assertEqual(2, self.x.colcount)

    def test_auto_field_names(self):
        table = ResultTable()
        table.add_row([1, 2])
        self.assertEqual(["Field 1", "Field 2"], table.field_names)

    def test_from_frame(self):
        table = ResultTable.from_frame(pd.DataFrame({"a": [0, 1], "rate": [0.5, 0.25]}))
        self.assertEqual(self.x.get_string(), table.get_string())


class ValidatorTest(RateTableTest):

    def test_bad_options(self):
        for option, value in (("digits", -1), ("padding_width", 1.5), ("border", "yes"), ("hrules", "ALL"),
                              ("align", "x"), ("title", 3)):
            with self.assertRaises(ValidationError, msg=option):
                ResultTable(["a"], **{option: value})

    def test_row_length(self):
        with self.assertRaises(ValidationError):
            self.x.add_row([1, 2, 3])

    def test_unique_names(self):
        with self.assertRaises(ValidationError):
            ResultTable(["a", "a"])

    def test_rename_keeps_width(self):
        with self.assertRaises(ValidationError):
            self.x.field_names = ["a"]

    def test_unknown_align_field(self):
        with self.assertRaises(ValidationError):
            self.x.set_align("missing", "l")

    def test_bad_hrules_argument(self):
        with self.assertRaises(ValidationError):
            self.x.get_string(hrules="ALL")


if __name__ == "__main__":
    unittest.main()
