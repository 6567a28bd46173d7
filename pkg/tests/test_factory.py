from io import StringIO
import os
import tempfile
import textwrap
import unittest

from forestmfg.errors import MalformedRowError, ValidationError
from forestmfg.factory import (adherences_from_csv, density_from_csv, panel_from_csv, params_from_json,
                               prior_from_json, read_csv, transmitters_from_csv, units_from_csv)
from forestmfg.model import BeliefPrior, CALIBRATED_PARAMS


PANEL_CSV = textwrap.dedent("""\
    unit_id,year,tree_area_km2,atr_share,region
    a001,2002,50.5,0.20,WAP
    a001,2003,50.1,0.20,WAP

    a002,2002,31.0,0.00,SAV
    a002,2003,31.4,0.00,SAV
""")


class ReadCsvTest(unittest.TestCase):

    def test_line_numbers(self):
        field_names, rows = read_csv(StringIO(PANEL_CSV), delimiter=",")
        self.assertEqual(["unit_id", "year", "tree_area_km2", "atr_share", "region"], field_names)
        self.assertEqual([2, 3, 5, 6], [line for line, _ in rows])
        self.assertEqual("50.5", rows[0][1]["tree_area_km2"])

    def test_sniffed_dialect(self):
        text = "unit_id;year;tree_area_km2;atr_share\na;2002;1.5;0.1\nb;2002;2.5;0.3\n"
        field_names, rows = read_csv(StringIO(text))
        self.assertEqual(4, len(field_names))
        self.assertEqual("a", rows[0][1]["unit_id"])

    def test_explicit_field_names(self):
        field_names, rows = read_csv(StringIO("1,2\n3,4\n"), field_names=["x", "y"], delimiter=",")
        self.assertEqual([(1, {"x": "1", "y": "2"}), (2, {"x": "3", "y": "4"})], rows)

    def test_wrong_field_count(self):
        text = "x,y\n1,2\n3\n"
        with self.assertRaises(MalformedRowError) as ctx:
            read_csv(StringIO(text), delimiter=",")
        self.assertEqual(3, ctx.exception.line)
        self.assertEqual("<stream>, line 3: expected 2 fields, found 1", str(ctx.exception))

    def test_empty(self):
        with self.assertRaises(MalformedRowError):
            read_csv(StringIO(""), delimiter=",")

    def test_unknown_option(self):
        with self.assertRaises(ValidationError):
            read_csv(StringIO(PANEL_CSV), colour="red")


class PanelCsvTest(unittest.TestCase):

    def test_panel(self):
        panel = panel_from_csv(StringIO(PANEL_CSV))
        self.assertEqual(["a001", "a002"], panel.units)
        self.assertTrue(panel.has_regions)
        self.assertEqual(2, len(panel.transitions()))

    def test_bad_value_reports_line(self):
        text = PANEL_CSV.replace("a002,2003,31.4", "a002,2003,lots")
        with self.assertRaises(MalformedRowError) as ctx:
            panel_from_csv(StringIO(text))
        self.assertEqual(6, ctx.exception.line)
        self.assertIn("tree_area_km2", ctx.exception.reason)

    def test_fractional_year(self):
        with self.assertRaises(MalformedRowError) as ctx:
            panel_from_csv(StringIO(PANEL_CSV.replace("a001,2003", "a001,2003.5")))
        self.assertEqual(3, ctx.exception.line)

    def test_share_out_of_range(self):
        with self.assertRaises(MalformedRowError) as ctx:
            panel_from_csv(StringIO(PANEL_CSV.replace("0.20,WAP\na001,2003", "1.20,WAP\na001,2003")))
        self.assertEqual(2, ctx.exception.line)

    def test_missing_column(self):
        with self.assertRaises(MalformedRowError) as ctx:
            panel_from_csv(StringIO("unit_id,year,tree_area_km2\na,2002,1.0\n"))
        self.assertIn("atr_share", str(ctx.exception))

    def test_missing_file(self):
        with self.assertRaises(ValidationError) as ctx:
            panel_from_csv(os.path.join(tempfile.gettempdir(), "no-such-forestmfg-panel.csv"))
        self.assertIn("Input file not found", str(ctx.exception))

    def test_from_path(self):
        with tempfile.NamedTemporaryFile("w", suffix=".csv", delete=False) as fp:
            fp.write(PANEL_CSV)
        try:
            panel = panel_from_csv(fp.name)
        finally:
            os.remove(fp.name)
        self.assertEqual(4, len(panel))


class InstrumentCsvTest(unittest.TestCase):

    def test_units(self):
        text = textwrap.dedent("""\
            unit_id,lat,lon,language_nodes
            r001,9.3,2.6,Niger-Congo;Atlantic-Congo;Volta-Congo;North;Gur;Baatonum
            r002,6.5,2.6,Niger-Congo;Atlantic-Congo;Volta-Congo;Kwa;Left Bank;Gbe;Fon
        """)
        units = units_from_csv(StringIO(text))
        self.assertEqual(["unit_id", "lat", "lon", "language"], list(units.columns))
        self.assertEqual("Fon", units["language"][1].language_name)
        self.assertEqual(7, len(units["language"][1].nodes))

    def test_units_bad_language(self):
        text = "unit_id,lat,lon,language_nodes\nr001,9.3,2.6,Gur;Gur\n"
        with self.assertRaises(MalformedRowError) as ctx:
            units_from_csv(StringIO(text))
        self.assertEqual(2, ctx.exception.line)

    def test_transmitters(self):
        text = "name,lat,lon,freq_mhz,erp_dbm,year_active\nRM1,6.37,2.43,96.5,67,1997\n"
        transmitters = transmitters_from_csv(StringIO(text))
        self.assertEqual(1997, transmitters[0].year_active)
        with self.assertRaises(MalformedRowError):
            transmitters_from_csv(StringIO(text.replace("96.5", "0")))

    def test_density(self):
        text = "year,pentecostal_count,land_area_km2\n2002,1000,910770\n2013,2000,910770\n"
        density = density_from_csv(StringIO(text))
        self.assertEqual([2002, 2013], list(density["year"]))
        with self.assertRaises(MalformedRowError):
            density_from_csv(StringIO(text.replace("910770\n2013", "0\n2013")))

    def test_adherences(self):
        self.assertEqual([0.1, 0.25], adherences_from_csv(StringIO("atr_share\n0.1\n0.25\n")))
        with self.assertRaises(MalformedRowError):
            adherences_from_csv(StringIO("share\n0.1\n"))


class JsonInputTest(unittest.TestCase):

    def test_params(self):
        self.assertEqual(CALIBRATED_PARAMS, params_from_json(StringIO(CALIBRATED_PARAMS.to_json())))

    def test_prior(self):
        self.assertEqual(BeliefPrior(0.55, 2.55), prior_from_json(StringIO('{"alpha": 0.55, "beta": 2.55}')))

    def test_invalid_json(self):
        with self.assertRaises(ValidationError):
            params_from_json(StringIO("{not json"))


if __name__ == "__main__":
    unittest.main()
