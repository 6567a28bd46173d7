"""
Tidy CSV and JSON emission of computed results
"""
import json
import logging
import os

import pandas as pd

from .dynamics import DensityGrid, Trajectory
from .equilibrium import EquilibriumSolution, FiniteHorizonSolution
from .errors import ValidationError
from .estimation import LocalLinearFit
from .utils import SIGNIFICANT_DIGITS

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%%.%dg" % SIGNIFICANT_DIGITS


def plot_frame(obj):
    """The tidy frame emitted for a result object, columns in a fixed order."""
    if isinstance(obj, EquilibriumSolution):
        return obj.to_frame()[["a", "q_rate", "threshold"]]
    if isinstance(obj, Trajectory):
        return obj.to_frame()[["time", "value"]]
    if isinstance(obj, DensityGrid):
        return obj.to_frame()[["x", "density"]]
    if isinstance(obj, (FiniteHorizonSolution, LocalLinearFit)):
        return obj.to_frame()
    if isinstance(obj, pd.DataFrame):
        return obj
    raise ValidationError("No plot data layout for %s" % type(obj).__name__)


def _ensure_parent(path):
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)


def emit_plot_data(obj, path):
    """Write obj as a CSV with one observation per row and 12 significant digits."""
    frame = plot_frame(obj)
    try:
        _ensure_parent(path)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as exc:
        raise ValidationError("Cannot write %s: %s" % (path, exc.strerror or exc))
    logger.info("Wrote %d rows to %s", len(frame), path)
    return path


def write_json(obj, path):
    """Write obj (or obj.to_dict()) as sorted-key JSON."""
    data = obj.to_dict() if hasattr(obj, "to_dict") else obj
    try:
        _ensure_parent(path)
        with open(path, "w") as fp:
            json.dump(data, fp, sort_keys=True, indent=2)
            fp.write("\n")
    except OSError as exc:
        raise ValidationError("Cannot write %s: %s" % (path, exc.strerror or exc))
    logger.info("Wrote %s", path)
    return path
