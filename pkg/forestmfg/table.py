"""
Plain-text and markdown rendering of result tables
"""
import enum

import numpy as np

from .errors import ValidationError
from .utils import SIGNIFICANT_DIGITS, format_number


class RuleStyle(enum.Enum):
    NONE = 0
    FRAME = 1
    HEADER = 2
    ALL = 3


class ResultTable(object):
    def __init__(self, field_names=None, **kwargs):

        """Return a new ResultTable instance

        Arguments:

        field_names - list or tuple of column names
        title - optional table title
        digits - significant digits used for floating point cells
        border - print a border around the table (True or False)
        hrules - horizontal rules after rows.  Allowed values: FRAME, HEADER, ALL, NONE
        padding_width - number of spaces on either side of column data
        align - default alignment for every column ("l", "c" or "r")"""

        self._field_names = []
        self._rows = []
        self._align = {}
        self._options = ["title", "digits", "border", "hrules", "padding_width", "align"]
        for option in self._options:
            if option in kwargs:
                self._validate_option(option, kwargs[option])
        self._title = kwargs.get("title")
        self._digits = kwargs.get("digits", SIGNIFICANT_DIGITS)
        self._border = kwargs.get("border", True)
        self._hrules = kwargs.get("hrules", RuleStyle.FRAME)
        self._padding_width = kwargs.get("padding_width", 1)
        self._default_align = kwargs.get("align", "r")
        if field_names:
            self.field_names = field_names

    @property
    def rowcount(self):
        return len(self._rows)

    @property
    def colcount(self):
        return len(self._field_names)

    def __str__(self):
        return self.get_string()

    ##############################
    # ATTRIBUTE VALIDATORS       #
    ##############################

    def _validate_option(self, option, val):
        if option == "field_names":
            self._validate_field_names(val)
        elif option in ("digits", "padding_width"):
            self._validate_positive_int(option, val)
        elif option == "border":
            self._validate_true_or_false(option, val)
        elif option == "hrules":
            self._validate_hrules(option, val)
        elif option == "align":
            self._validate_align(val)
        elif option == "title":
            if val is not None and not isinstance(val, str):
                raise ValidationError("Invalid value for title!  Must be a string or None.")

    def _validate_field_names(self, val):
        if self._rows and len(val) != len(self._rows[0]):
            raise ValidationError("Field name list has incorrect number of values, (actual) %d!=%d (expected)"
                                  % (len(val), len(self._rows[0])))
        if len(val) != len(set(val)):
            raise ValidationError("Field names must be unique!")

    def _validate_positive_int(self, name, val):
        if not isinstance(val, int) or isinstance(val, bool) or val < 0:
            raise ValidationError("Invalid value for %s!  Must be an integer >= 0." % name)

    def _validate_true_or_false(self, name, val):
        if val not in (True, False):
            raise ValidationError("Invalid value for %s!  Must be True or False." % name)

    def _validate_hrules(self, name, val):
        if not isinstance(val, RuleStyle):
            raise ValidationError("Invalid value for %s!  Must be ALL, FRAME, HEADER or NONE." % name)

    def _validate_align(self, val):
        if val not in ("l", "c", "r"):
            raise ValidationError("Alignment %s is invalid, use l, c or r!" % val)

    ##############################
    # ATTRIBUTE MANAGEMENT       #
    ##############################

    @property
    def field_names(self):
        """List of column names"""
        return list(self._field_names)

    @field_names.setter
    def field_names(self, val):
        val = [str(x) for x in val]
        self._validate_option("field_names", val)
        self._field_names = val
        self._align = {name: self._align.get(name, self._default_align) for name in val}

    @property
    def title(self):
        return self._title

    @title.setter
    def title(self, val):
        self._validate_option("title", val)
        self._title = val

    @property
    def digits(self):
        return self._digits

    @digits.setter
    def digits(self, val):
        self._validate_option("digits", val)
        self._digits = val

    def set_align(self, field, val):
        self._validate_align(val)
        if field not in self._field_names:
            raise ValidationError("Invalid field name: %s!" % field)
        self._align[field] = val

    ##############################
    # DATA INPUT METHODS         #
    ##############################

    def add_row(self, row):

        """Add a row to the table

        Arguments:

        row - row of data, should be a list with as many elements as the table
        has fields"""

        if self._field_names and len(row) != len(self._field_names):
            raise ValidationError("Row has incorrect number of values, (actual) %d!=%d (expected)"
                                  % (len(row), len(self._field_names)))
        if not self._field_names:
            self.field_names = ["Field %d" % (n + 1) for n in range(len(row))]
        self._rows.append(list(row))

    @classmethod
    def from_frame(cls, frame, **kwargs):
        table = cls(list(frame.columns), **kwargs)
        for row in frame.itertuples(index=False):
            table.add_row(list(row))
        return table

    ##############################
    # MISC PRIVATE METHODS       #
    ##############################

    def _format_value(self, value):
        if isinstance(value, float) and np.isnan(value):
            return "nan"
        return format_number(value, self._digits)

    def _justify(self, text, width, align):
        excess = width - len(text)
        if align == "l":
            return text + excess * " "
        elif align == "r":
            return excess * " " + text
        return text.center(width)

    def _widths(self, rows):
        widths = [len(name) for name in self._field_names]
        for row in rows:
            widths = [max(width, len(cell)) for width, cell in zip(widths, row)]
        return widths

    def _hrule(self, widths, junction="+", horizontal="-"):
        pad = 2 * self._padding_width
        return junction + junction.join(horizontal * (width + pad) for width in widths) + junction

    def _line(self, cells, widths, aligns, vertical="|"):
        pad = " " * self._padding_width
        bits = [pad + self._justify(cell, width, align) + pad for cell, width, align in zip(cells, widths, aligns)]
        if not self._border:
            return "".join(bits).rstrip()
        return vertical + vertical.join(bits) + vertical

    ##############################
    # PLAIN TEXT STRING METHODS  #
    ##############################

    def get_string(self, **kwargs):

        """Return string representation of table in current state.

        Arguments:

        title - optional table title (overrides the table's)
        hrules - horizontal rules after rows.  Allowed values: ALL, FRAME, HEADER, NONE"""

        title = kwargs.get("title", self._title)
        hrules = kwargs.get("hrules", self._hrules)
        self._validate_hrules("hrules", hrules)
        rows = [[self._format_value(value) for value in row] for row in self._rows]
        widths = self._widths(rows)
        aligns = [self._align[name] for name in self._field_names]
        rule = self._hrule(widths)
        lines = []
        if title:
            inner = len(rule) - 2
            if self._border and hrules in (RuleStyle.FRAME, RuleStyle.ALL):
                lines.append("+" + "-" * inner + "+")
            lines.append(("|" + title.center(inner) + "|") if self._border else title)
        if self._border and hrules in (RuleStyle.FRAME, RuleStyle.ALL):
            lines.append(rule)
        lines.append(self._line(self._field_names, widths, ["c"] * len(widths)))
        if self._border and hrules != RuleStyle.NONE:
            lines.append(rule)
        for row in rows:
            lines.append(self._line(row, widths, aligns))
            if self._border and hrules == RuleStyle.ALL:
                lines.append(rule)
        if self._border and hrules == RuleStyle.FRAME and rows:
            lines.append(rule)
        return "\n".join(lines)

    ################################
    # MARKDOWN TEXT STRING METHODS #
    ################################

    def get_md_string(self):

        """Return string representation of table in markdown."""

        rows = [[self._format_value(value) for value in row] for row in self._rows]
        widths = [max(width, 3) for width in self._widths(rows)]
        aligns = [self._align[name] for name in self._field_names]
        markers = []
        for width, align in zip(widths, aligns):
            dashes = "-" * width
            if align == "r":
                dashes = dashes[:-1] + ":"
            elif align == "c":
                dashes = ":" + dashes[1:-1] + ":"
            markers.append(dashes)
        lines = [self._line(self._field_names, widths, ["c"] * len(widths)),
                 "|" + "|".join(" " * self._padding_width + marker + " " * self._padding_width
                                for marker in markers) + "|"]
        lines.extend(self._line(row, widths, aligns) for row in rows)
        if self._title:
            lines.insert(0, "**%s**\n" % self._title)
        return "\n".join(lines)


FRAME = RuleStyle.FRAME
ALL = RuleStyle.ALL
NONE = RuleStyle.NONE
HEADER = RuleStyle.HEADER
