"""
Long-format forest panel: one row per (unit, year).
"""
import logging

import numpy as np
import pandas as pd

from .errors import DomainError, ValidationError

logger = logging.getLogger(__name__)

COLUMNS = ("unit_id", "year", "tree_area_km2", "atr_share")
OPTIONAL_COLUMNS = ("region",)


class Panel(object):

    def __init__(self, frame):
        """Validate and normalize a long-format panel.

        Arguments:

        frame - DataFrame with columns unit_id, year, tree_area_km2, atr_share
                and optionally region"""

        missing = [column for column in COLUMNS if column not in frame.columns]
        if missing:
            raise ValidationError("Invalid value for panel!  Missing columns: %s" % ", ".join(missing))
        extra = [column for column in frame.columns if column not in COLUMNS + OPTIONAL_COLUMNS]
        if extra:
            raise ValidationError("Invalid value for panel!  Unknown columns: %s" % ", ".join(extra))

        data = frame.copy()
        data["unit_id"] = data["unit_id"].astype(str)
        try:
            years = pd.to_numeric(data["year"])
            data["tree_area_km2"] = pd.to_numeric(data["tree_area_km2"]).astype(float)
            data["atr_share"] = pd.to_numeric(data["atr_share"]).astype(float)
        except (TypeError, ValueError) as exc:
            raise ValidationError("Invalid value for panel!  %s" % exc)
        if np.any(years != np.round(years)):
            raise ValidationError("Invalid value for year!  Must be an integer.")
        data["year"] = years.astype(int)

        if data[["tree_area_km2", "atr_share"]].isna().any().any():
            raise ValidationError("Invalid value for panel!  Missing tree area or ATR share.")
        if np.any(data["tree_area_km2"] <= 0.0):
            raise DomainError("Invalid value for tree_area_km2!  Must be > 0.")
        if np.any((data["atr_share"] < 0.0) | (data["atr_share"] > 1.0)):
            raise DomainError("Invalid value for atr_share!  Must be in [0, 1].")
        duplicated = data.duplicated(["unit_id", "year"])
        if duplicated.any():
            first = data.loc[duplicated].iloc[0]
            raise ValidationError("Duplicate panel record for unit %s, year %d" % (first["unit_id"], first["year"]))

        self._frame = data.sort_values(["unit_id", "year"]).reset_index(drop=True)

    @classmethod
    def from_records(cls, records):
        """Build a panel from (unit_id, year, tree_area_km2, atr_share[, region]) tuples or dicts."""
        records = list(records)
        if records and not isinstance(records[0], dict):
            width = len(records[0])
            records = [dict(zip(COLUMNS + OPTIONAL_COLUMNS[:width - len(COLUMNS)], row)) for row in records]
        return cls(pd.DataFrame.from_records(records, columns=None if records else COLUMNS))

    @property
    def frame(self):
        return self._frame.copy()

    @property
    def units(self):
        return list(self._frame["unit_id"].unique())

    @property
    def years(self):
        return sorted(self._frame["year"].unique())

    @property
    def has_regions(self):
        return "region" in self._frame.columns

    def __len__(self):
        return len(self._frame)

    def __repr__(self):
        return "Panel(%d records, %d units)" % (len(self), len(self.units))

    def subset(self, region):
        if not self.has_regions:
            raise ValidationError("Panel has no region column")
        selected = self._frame[self._frame["region"] == region]
        if selected.empty:
            raise ValidationError("No panel records for region %r" % region)
        return Panel(selected)

    def at_year(self, year):
        """Rows of one year indexed by unit_id."""
        return self._frame[self._frame["year"] == year].set_index("unit_id")

    def transitions(self, step=1):
        """Consecutive-year pairs (x0 at t, x1 at t + step) with the adherence at t.

        Units with fewer than two records are skipped with a warning."""

        counts = self._frame.groupby("unit_id")["year"].transform("size")
        short = sorted(self._frame.loc[counts < 2, "unit_id"].unique())
        for unit in short:
            logger.warning("Skipping unit %s: fewer than two observations", unit)
        data = self._frame[counts >= 2]
        following = data[["unit_id", "year", "tree_area_km2"]].copy()
        following["year"] = following["year"] - step
        pairs = data.merge(following, on=["unit_id", "year"], suffixes=("", "_next"))
        pairs = pairs.rename(columns={"tree_area_km2": "x0", "tree_area_km2_next": "x1"})
        return pairs[["unit_id", "year", "x0", "x1", "atr_share"]].reset_index(drop=True)
