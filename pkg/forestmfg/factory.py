"""
Input factories: panel, adherence, instrument CSVs and model JSON files
"""
import contextlib
import csv
import io
import json
import logging
import os

import pandas as pd

from .errors import MalformedRowError, ValidationError
from .instrument import LanguageClassification, TransmitterSpec
from .model import BeliefPrior, ModelParams
from .panel import COLUMNS as PANEL_COLUMNS, Panel

logger = logging.getLogger(__name__)

UNIT_COLUMNS = ("unit_id", "lat", "lon", "language_nodes")
TRANSMITTER_COLUMNS = ("name", "lat", "lon", "freq_mhz", "erp_dbm", "year_active")
DENSITY_COLUMNS = ("year", "pentecostal_count", "land_area_km2")
ADHERENCE_COLUMNS = ("adherence", "atr_share")
FMT_PARAMS = ("delimiter", "doublequote", "escapechar", "lineterminator", "quotechar", "quoting",
              "skipinitialspace", "strict")


@contextlib.contextmanager
def _source(source):
    if isinstance(source, (str, os.PathLike)):
        if not os.path.isfile(source):
            raise ValidationError("Input file not found: %s" % source)
        with open(source, newline="") as fp:
            yield fp, os.fspath(source)
    else:
        yield source, getattr(source, "name", "<stream>")


def read_csv(fp, path="<stream>", field_names=None, **kwargs):
    """Read header and rows, keeping the physical line number of every row.

    Returns (field_names, [(line, {field: text}), ...]). Without explicit
    format parameters the dialect is sniffed from the first lines."""

    fmtparams = {}
    for param in FMT_PARAMS:
        if param in kwargs:
            fmtparams[param] = kwargs.pop(param)
    if kwargs:
        raise ValidationError("Unknown CSV options: %s" % ", ".join(sorted(kwargs)))
    if fmtparams:
        reader = csv.reader(fp, **fmtparams)
    else:
        first_lines = [fp.readline() for _ in range(4)]
        try:
            dialect = csv.Sniffer().sniff("".join(first_lines))
        except csv.Error:
            dialect = csv.excel
        reader = csv.reader(io.StringIO("".join(first_lines) + fp.read()), dialect)

    if not field_names:
        try:
            field_names = [x.strip() for x in next(reader)]
        except StopIteration:
            raise MalformedRowError(path, 1, "missing header")
    rows = []
    for row in reader:
        if not row or all(not x.strip() for x in row):
            continue
        if len(row) != len(field_names):
            raise MalformedRowError(path, reader.line_num,
                                    "expected %d fields, found %d" % (len(field_names), len(row)))
        rows.append((reader.line_num, dict(zip(field_names, [x.strip() for x in row]))))
    return field_names, rows


def _require(path, field_names, required):
    missing = [name for name in required if name not in field_names]
    if missing:
        raise MalformedRowError(path, 1, "missing column(s) %s" % ", ".join(missing))


def _convert(path, line, row, name, kind):
    try:
        return kind(row[name])
    except (TypeError, ValueError):
        raise MalformedRowError(path, line, "invalid %s %r" % (name, row[name]))


def _integer(text):
    value = float(text)
    if value != int(value):
        raise ValueError(text)
    return int(value)


def panel_from_csv(source):
    """Panel from unit_id,year,tree_area_km2,atr_share[,region]."""
    with _source(source) as (fp, path):
        field_names, rows = read_csv(fp, path, delimiter=",")
    _require(path, field_names, PANEL_COLUMNS)
    records = []
    for line, row in rows:
        record = {
            "unit_id": row["unit_id"],
            "year": _convert(path, line, row, "year", _integer),
            "tree_area_km2": _convert(path, line, row, "tree_area_km2", float),
            "atr_share": _convert(path, line, row, "atr_share", float),
        }
        if not record["tree_area_km2"] > 0.0:
            raise MalformedRowError(path, line, "tree_area_km2 must be > 0")
        if not 0.0 <= record["atr_share"] <= 1.0:
            raise MalformedRowError(path, line, "atr_share must be in [0, 1]")
        if "region" in field_names:
            record["region"] = row["region"]
        records.append(record)
    logger.info("Read %d panel records from %s", len(records), path)
    columns = list(PANEL_COLUMNS) + (["region"] if "region" in field_names else [])
    return Panel(pd.DataFrame.from_records(records, columns=columns))


def adherences_from_csv(source):
    with _source(source) as (fp, path):
        field_names, rows = read_csv(fp, path, delimiter=",")
    columns = [name for name in ADHERENCE_COLUMNS if name in field_names]
    if not columns:
        raise MalformedRowError(path, 1, "missing column adherence or atr_share")
    return [_convert(path, line, row, columns[0], float) for line, row in rows]


def units_from_csv(source):
    """Units with a LanguageClassification parsed from semicolon-delimited nodes."""
    with _source(source) as (fp, path):
        field_names, rows = read_csv(fp, path, delimiter=",")
    _require(path, field_names, UNIT_COLUMNS)
    records = []
    for line, row in rows:
        try:
            language = LanguageClassification.from_string(row["language_nodes"])
        except ValidationError as exc:
            raise MalformedRowError(path, line, str(exc))
        records.append({"unit_id": row["unit_id"], "lat": _convert(path, line, row, "lat", float),
                        "lon": _convert(path, line, row, "lon", float), "language": language})
    return pd.DataFrame.from_records(records, columns=["unit_id", "lat", "lon", "language"])


def transmitters_from_csv(source):
    with _source(source) as (fp, path):
        field_names, rows = read_csv(fp, path, delimiter=",")
    _require(path, field_names, TRANSMITTER_COLUMNS)
    transmitters = []
    for line, row in rows:
        try:
            transmitters.append(TransmitterSpec(
                row["name"],
                _convert(path, line, row, "lat", float),
                _convert(path, line, row, "lon", float),
                _convert(path, line, row, "freq_mhz", float),
                _convert(path, line, row, "erp_dbm", float),
                _convert(path, line, row, "year_active", _integer),
            ))
        except MalformedRowError:
            raise
        except ValidationError as exc:
            raise MalformedRowError(path, line, str(exc))
    return transmitters


def density_from_csv(source):
    with _source(source) as (fp, path):
        field_names, rows = read_csv(fp, path, delimiter=",")
    _require(path, field_names, DENSITY_COLUMNS)
    records = []
    for line, row in rows:
        record = {"year": _convert(path, line, row, "year", _integer),
                  "pentecostal_count": _convert(path, line, row, "pentecostal_count", float),
                  "land_area_km2": _convert(path, line, row, "land_area_km2", float)}
        if not record["land_area_km2"] > 0.0 or not record["pentecostal_count"] > 0.0:
            raise MalformedRowError(path, line, "pentecostal_count and land_area_km2 must be > 0")
        records.append(record)
    return pd.DataFrame.from_records(records, columns=list(DENSITY_COLUMNS))


def _load_json(source):
    with _source(source) as (fp, path):
        try:
            return json.load(fp)
        except ValueError as exc:
            raise ValidationError("%s: invalid JSON (%s)" % (path, exc))


def params_from_json(source):
    return ModelParams.from_dict(_load_json(source))


def prior_from_json(source):
    return BeliefPrior.from_dict(_load_json(source))
