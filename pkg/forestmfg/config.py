"""
Run configuration: built-in defaults < JSON config file < command line flags.
"""
import collections
import json
import logging
import os

from .errors import ValidationError
from .utils import DEFAULT_SEED

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "FORESTMFG_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "forestmfg-output"
GLOBAL_KEYS = ("seed", "output_dir", "threads", "verbosity")

Option = collections.namedtuple("Option", "flag type default help path positive choices nargs")


def option(flag, type=str, default=None, help=None, path=False, positive=False, choices=None, nargs=None):
    return Option(flag, type, default, help, path, positive, choices, nargs)


def dest(opt):
    return opt.flag.lstrip("-").replace("-", "_")


MODEL_OPTIONS = [
    option("--params", help="model parameter JSON (default: calibrated estimates)", path=True),
    option("--prior", help="beliefs prior JSON (default: Beta(0.553, 2.251))", path=True),
]

SUBCOMMAND_OPTIONS = {
    "equilibrium": MODEL_OPTIONS + [
        option("--grid-points", int, 101, "adherence grid size", positive=True),
        option("--horizon", float, None, "also solve the finite-horizon problem up to this time", positive=True),
        option("--time-step", float, 0.1, "finite-horizon time step", positive=True),
        option("--tol", float, 1e-10, "fixed-point tolerance", positive=True),
        option("--max-iter", int, 500, "fixed-point iteration cap", positive=True),
        option("--bequest", str, "affine", "bequest function h(a)", choices=("affine", "linear")),
    ],
    "simulate": MODEL_OPTIONS + [
        option("--x0", float, 50.0, "initial cover (km^2)", positive=True),
        option("--rate", float, None, "deforestation rate (default: equilibrium rate at --adherence)"),
        option("--adherence", float, 0.0, "adherence whose equilibrium rate is simulated"),
        option("--horizon", float, 50.0, "years simulated", positive=True),
        option("--dt", float, 1.0, "time step (years)", positive=True),
        option("--cap", float, None, "reflecting carrying capacity (km^2)", positive=True),
        option("--reflection", str, "fold", "reflection scheme", choices=("fold", "bridge")),
        option("--scheme", str, "ExactLogNormal", "unreflected scheme", choices=("ExactLogNormal", "EulerMaruyama")),
    ],
    "counterfactual": MODEL_OPTIONS + [
        option("--panel", help="panel CSV (default: synthetic model panel)", path=True),
        option("--years", int, [2002, 2013], "start and end year", nargs=2),
    ],
    "fit-beliefs": [
        option("--input", help="adherence CSV (default: synthetic calibrated sample)", path=True),
    ],
    "fit-gbm": [
        option("--panel", help="panel CSV (default: synthetic uncontrolled panel)", path=True),
        option("--region", help="restrict to one region tag"),
        option("--bootstrap", int, 3000, "cluster bootstrap resamples"),
        option("--method", str, "closed_form", "likelihood maximization", choices=("closed_form", "numerical")),
    ],
    "fit-gamma": [
        option("--panel", help="panel CSV (default: synthetic model panel)", path=True),
        option("--prior", help="beliefs prior JSON (default: Beta(0.553, 2.251))", path=True),
        option("--mu", float, 0.0482, "natural growth rate"),
        option("--sigma", float, 0.258, "diffusion", positive=True),
        option("--rho", float, 0.0487, "discount rate", positive=True),
        option("--k", float, 1.0, "exponent of g2(a) = a^k", positive=True),
        option("--moments", str, "MeanOnly", "moment conditions", choices=("MeanOnly", "MeanAndVariance")),
    ],
    "instrument": [
        option("--units", help="units CSV (default: synthetic)", path=True),
        option("--transmitters", help="transmitters CSV (default: synthetic)", path=True),
        option("--density", help="Pentecostal density CSV (default: synthetic)", path=True),
        option("--lambda", float, 0.5, "linguistic-distance exponent"),
        option("--floor-dbm", float, -90.0, "signal floor (dBm)"),
        option("--variant", str, "full", "instrument variant", choices=("full", "no-hd", "no-rp")),
    ],
    "demo": [
        option("--units", int, 546, "synthetic panel units", positive=True),
    ],
}


class RunConfig(object):

    def __init__(self, data=None, path=None):
        """Validate a config mapping.

        Arguments:

        data - dict of global keys and per-subcommand sections
        path - file the mapping was read from, used in diagnostics"""

        data = {} if data is None else data
        where = path or "config"
        if not isinstance(data, dict):
            raise ValidationError("%s: must be a JSON object" % where)
        self.path = path
        self.sections = {}
        self.globals = {}
        for key, value in data.items():
            if key in GLOBAL_KEYS:
                self.globals[key] = value
            elif key in SUBCOMMAND_OPTIONS:
                self.sections[key] = self._validate_section(where, key, value)
            else:
                raise ValidationError("%s: unknown config key %r" % (where, key))

    @staticmethod
    def _validate_section(where, command, section):
        if not isinstance(section, dict):
            raise ValidationError("%s: section %r must be a JSON object" % (where, command))
        allowed = {dest(opt) for opt in SUBCOMMAND_OPTIONS[command]}
        unknown = sorted(set(section) - allowed)
        if unknown:
            raise ValidationError("%s: unknown key(s) in %r: %s" % (where, command, ", ".join(unknown)))
        return dict(section)

    @classmethod
    def load(cls, path):
        if path is None:
            return cls()
        if not os.path.isfile(path):
            raise ValidationError("Config file not found: %s" % path)
        with open(path) as fp:
            try:
                data = json.load(fp)
            except ValueError as exc:
                raise ValidationError("%s: invalid JSON (%s)" % (path, exc))
        logger.info("Loaded config %s", path)
        return cls(data, path)

    def seed(self, flag=None):
        value = flag if flag is not None else self.globals.get("seed", DEFAULT_SEED)
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise ValidationError("Invalid value for seed!  Must be a nonnegative integer.")
        return value

    def threads(self, flag=None):
        value = flag if flag is not None else self.globals.get("threads", 1)
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise ValidationError("Invalid value for threads!  Must be an integer >= 1.")
        return value

    def verbosity(self, flag=0):
        return max(int(flag or 0), int(self.globals.get("verbosity", 0)))

    def output_dir(self, flag=None):
        if flag is not None:
            return flag
        if "output_dir" in self.globals:
            return self.globals["output_dir"]
        return os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR

    def resolve(self, command, namespace):
        """Subcommand options: flag if given, else config section, else default."""
        section = self.sections.get(command, {})
        options = {}
        for opt in SUBCOMMAND_OPTIONS[command]:
            name = dest(opt)
            value = getattr(namespace, name, None)
            if value is None:
                value = section.get(name, opt.default)
            if value is not None:
                value = self._coerce(opt, name, value)
            options[name] = value
        return options

    @staticmethod
    def _coerce(opt, name, value):
        try:
            value = [opt.type(v) for v in value] if opt.nargs else opt.type(value)
        except (TypeError, ValueError):
            raise ValidationError("Invalid value for %s: %r" % (name, value))
        if opt.choices and value not in opt.choices:
            raise ValidationError("Invalid value for %s!  Must be one of %s." % (name, ", ".join(opt.choices)))
        if opt.positive and not value > 0:
            raise ValidationError("Invalid value for %s!  Must be > 0." % name)
        if opt.path and not os.path.isfile(value):
            raise ValidationError("Input file not found: %s (%s)" % (value, opt.flag))
        return value
