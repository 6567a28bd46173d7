from __future__ import print_function
import argparse
import logging
import os
import sys

import numpy as np

from . import __version__, factory, synthetic
from .config import RunConfig, SUBCOMMAND_OPTIONS, dest
from .dynamics import (DensitySpec, Reflection, Scheme, counterfactual_panel, density_grid, simulate_path,
                       simulate_reflected)
from .equilibrium import (PUBLISHED_COUNTERFACTUAL_RATE, affine_bequest, default_grid, linear_bequest,
                          q_mfe_finite_horizon, q_mfe_stationary)
from .errors import ConvergenceError, ValidationError
from .estimation import Moments, fit_beliefs, fit_gamma, fit_gbm
from .instrument import VARIANTS, build_exposure, exposure_frame
from .model import CALIBRATED_PARAMS, CALIBRATED_PRIOR
from .plotdata import emit_plot_data, write_json
from .table import ResultTable

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONVERGENCE = 3

DESCRIPTIONS = {
    "equilibrium": "solve the stationary (and optionally finite-horizon) mean-field equilibrium",
    "simulate": "simulate forest cover under a linear policy",
    "counterfactual": "compare observed cover with the no-belief counterfactual",
    "fit-beliefs": "Beta maximum likelihood for the adherence prior",
    "fit-gbm": "maximum likelihood for mu and sigma with a cluster bootstrap",
    "fit-gamma": "two-step GMM for the CRRA curvature",
    "instrument": "build the Pentecostal-exposure instrument",
    "demo": "run the calibrated pipeline on synthetic data",
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", dest="verbose", action="count", default=None,
                        help="log INFO (-v) or DEBUG (-vv) to stderr")
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--output-dir", help="directory for result files")
    common.add_argument("--seed", type=int, help="root seed (default 42)")
    common.add_argument("--threads", type=int, help="worker threads for bootstrap and simulation")
    common.add_argument("--markdown", action="store_true", default=False, help="print tables as markdown")

    parser = argparse.ArgumentParser(prog="forestmfg", description="Mean-field-game deforestation toolkit: "
                                     "equilibria, simulation, estimation and the exposure instrument.")
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True
    for command, options in SUBCOMMAND_OPTIONS.items():
        sub = subparsers.add_parser(command, parents=[common], help=DESCRIPTIONS[command],
                                    description=DESCRIPTIONS[command])
        for opt in options:
            kwargs = {"dest": dest(opt), "default": None, "help": opt.help}
            if opt.nargs:
                kwargs["nargs"] = opt.nargs
            if opt.choices:
                kwargs["choices"] = opt.choices
            if opt.type is not str:
                kwargs["type"] = opt.type
            sub.add_argument(opt.flag, **kwargs)
    return parser


def _configure_logging(verbosity):
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("forestmfg").setLevel(level)


class Context(object):
    """Resolved options of one invocation."""

    def __init__(self, ns, config):
        self.command = ns.command
        self.options = config.resolve(ns.command, ns)
        self.seed = config.seed(ns.seed)
        self.threads = config.threads(ns.threads)
        self.output_dir = config.output_dir(ns.output_dir)
        self.markdown = ns.markdown
        self.out = sys.stdout

    def path(self, name):
        return os.path.join(self.output_dir, name)

    def show(self, table):
        print(table.get_md_string() if self.markdown else table.get_string(), file=self.out)

    def params(self):
        path = self.options.get("params")
        return CALIBRATED_PARAMS if path is None else factory.params_from_json(path)

    def prior(self):
        path = self.options.get("prior")
        return CALIBRATED_PRIOR if path is None else factory.prior_from_json(path)


##############################
# SUBCOMMANDS                #
##############################

def _equilibrium_table(solution, step=10):
    table = ResultTable(["a", "q_rate", "threshold"], title="Stationary equilibrium")
    for i in range(0, len(solution.adherence_grid), step):
        table.add_row([solution.adherence_grid[i], solution.q_rate[i], solution.threshold])
    return table


def run_equilibrium(ctx):
    options = ctx.options
    params, prior = ctx.params(), ctx.prior()
    grid = default_grid(options["grid_points"])
    solution = q_mfe_stationary(params, prior, grid)
    write_json(solution, ctx.path("equilibrium.json"))
    emit_plot_data(solution, ctx.path("equilibrium.csv"))
    ctx.show(_equilibrium_table(solution, max(1, (len(grid) - 1) // 10)))
    print("q_tilde_star: %s" % repr(solution.q_tilde_star), file=ctx.out)
    print("sustainability: %s" % solution.sustainability, file=ctx.out)

    if options["horizon"] is not None:
        bequest = affine_bequest if options["bequest"] == "affine" else linear_bequest
        finite = q_mfe_finite_horizon(params, prior, options["horizon"], adherence_grid=grid, bequest_h=bequest,
                                      tol=options["tol"], max_iter=options["max_iter"],
                                      time_step=options["time_step"])
        emit_plot_data(finite, ctx.path("finite_horizon.csv"))
        if not finite.converged:
            raise ConvergenceError("Finite-horizon fixed point did not converge in %d iterations"
                                   % finite.iterations, residual=finite.sup_norm_residual)
        gap = float(np.max(np.abs(finite.rate_path[:, 0] - solution.q_rate)))
        print("finite horizon: %d iterations, sup |rate(a, 0) - q_rate(a)| = %.3e" % (finite.iterations, gap),
              file=ctx.out)
    return EXIT_OK


def run_simulate(ctx):
    options = ctx.options
    params, prior = ctx.params(), ctx.prior()
    rate = options["rate"]
    if rate is None:
        rate = q_mfe_stationary(params, prior).rate_at(options["adherence"])
    if options["cap"] is not None:
        path = simulate_reflected(options["x0"], rate, params, options["cap"], options["horizon"], options["dt"],
                                  ctx.seed, Reflection(options["reflection"]))
    else:
        path = simulate_path(options["x0"], rate, params, options["horizon"], options["dt"], ctx.seed,
                             Scheme(options["scheme"]))
    emit_plot_data(path, ctx.path("trajectory.csv"))
    if params.sigma > 0.0:
        spec = DensitySpec.from_params(params, rate, options["x0"], options["cap"])
        emit_plot_data(density_grid(spec, float(path.times[-1])), ctx.path("density.csv"))

    table = ResultTable(["quantity", "value"], title="Simulation")
    table.set_align("quantity", "l")
    table.add_row(["rate", rate])
    table.add_row(["threshold", params.threshold])
    table.add_row(["x0", options["x0"]])
    table.add_row(["final", path.final])
    table.add_row(["steps", len(path.times) - 1])
    ctx.show(table)
    return EXIT_OK


def _summary_table(summary):
    table = ResultTable(["quantity", "value"], title="Counterfactual (no ATR beliefs)")
    table.set_align("quantity", "l")
    for key, value in summary.to_dict().items():
        if key != "missing_units":
            table.add_row([key, value])
    table.add_row(["missing_units", len(summary.missing_units)])
    return table


def run_counterfactual(ctx):
    options = ctx.options
    params, prior = ctx.params(), ctx.prior()
    if options["panel"] is None:
        panel = synthetic.model_panel(params, prior, seed=ctx.seed)
    else:
        panel = factory.panel_from_csv(options["panel"])
    frame, summary = counterfactual_panel(panel, params, prior, options["years"])
    emit_plot_data(frame, ctx.path("counterfactual.csv"))
    write_json(summary, ctx.path("counterfactual_summary.json"))
    ctx.show(_summary_table(summary))
    return EXIT_OK


def run_fit_beliefs(ctx):
    path = ctx.options["input"]
    sample = synthetic.beliefs_sample(seed=ctx.seed) if path is None else factory.adherences_from_csv(path)
    result = fit_beliefs(sample)
    write_json(result, ctx.path("fit_beliefs.json"))
    ctx.show(result.to_table())
    return EXIT_OK


def run_fit_gbm(ctx):
    options = ctx.options
    if options["panel"] is None:
        panel = synthetic.gbm_panel(seed=ctx.seed)
    else:
        panel = factory.panel_from_csv(options["panel"])
    if options["region"] is not None:
        panel = panel.subset(options["region"])
    result = fit_gbm(panel, bootstrap=options["bootstrap"], seed=ctx.seed, threads=ctx.threads,
                     method=options["method"])
    write_json(result, ctx.path("fit_gbm.json"))
    ctx.show(result.to_table())
    return EXIT_OK


def run_fit_gamma(ctx):
    options = ctx.options
    prior = ctx.prior()
    if options["panel"] is None:
        panel = synthetic.model_panel(CALIBRATED_PARAMS, prior, seed=ctx.seed)
    else:
        panel = factory.panel_from_csv(options["panel"])
    result = fit_gamma(panel, (options["mu"], options["sigma"], options["rho"]), prior, k=options["k"],
                       moments=Moments(options["moments"]))
    write_json(result, ctx.path("fit_gamma.json"))
    ctx.show(result.to_table())
    return EXIT_OK


def run_instrument(ctx):
    options = ctx.options
    units, transmitters, density = synthetic.instrument_inputs(seed=ctx.seed)
    if options["units"] is not None:
        units = factory.units_from_csv(options["units"])
    if options["transmitters"] is not None:
        transmitters = factory.transmitters_from_csv(options["transmitters"])
    if options["density"] is not None:
        density = factory.density_from_csv(options["density"])
    rows = build_exposure(units, transmitters, density, lam=options["lambda"], floor_dbm=options["floor_dbm"])
    frame = exposure_frame(rows)
    emit_plot_data(frame, ctx.path("exposure.csv"))
    column = VARIANTS[options["variant"]]
    summary = frame.groupby("year")[column].agg(["count", "mean", "min", "max"]).reset_index()
    table = ResultTable.from_frame(summary, title="Exposure index %s (%s)" % (column, options["variant"]))
    ctx.show(table)
    return EXIT_OK


def run_demo(ctx):
    params, prior = CALIBRATED_PARAMS, CALIBRATED_PRIOR
    solution = q_mfe_stationary(params, prior)
    write_json(solution, ctx.path("equilibrium.json"))
    emit_plot_data(solution, ctx.path("equilibrium.csv"))
    ctx.show(_equilibrium_table(solution))

    panel = synthetic.model_panel(params, prior, n_units=ctx.options["units"], seed=ctx.seed,
                                  equilibrium=solution)
    frame, summary = counterfactual_panel(panel, params, prior, (2002, 2013), equilibrium=solution)
    emit_plot_data(frame, ctx.path("counterfactual.csv"))
    write_json(summary, ctx.path("counterfactual_summary.json"))
    ctx.show(_summary_table(summary))
    print("counterfactual rate %.6f vs published %.4f" % (summary.counterfactual_rate,
                                                         PUBLISHED_COUNTERFACTUAL_RATE), file=ctx.out)
    print("sustainability: %s" % solution.sustainability, file=ctx.out)
    return EXIT_OK


COMMANDS = {
    "equilibrium": run_equilibrium,
    "simulate": run_simulate,
    "counterfactual": run_counterfactual,
    "fit-beliefs": run_fit_beliefs,
    "fit-gbm": run_fit_gbm,
    "fit-gamma": run_fit_gamma,
    "instrument": run_instrument,
    "demo": run_demo,
}


def run(argv=None):
    """Run one subcommand; returns 0 on success, 2 on input errors, 3 on non-convergence."""
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    try:
        config = RunConfig.load(ns.config)
        _configure_logging(config.verbosity(ns.verbose))
        ctx = Context(ns, config)
        return COMMANDS[ns.command](ctx)
    except ValidationError as exc:
        print("forestmfg %s: error: %s" % (ns.command, exc), file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as exc:
        print("forestmfg %s: did not converge: %s" % (ns.command, exc), file=sys.stderr)
        if exc.profile:
            for point in exc.profile:
                print("  %s" % (point,), file=sys.stderr)
        return EXIT_CONVERGENCE


def main(args=None):
    return run(args)


if __name__ == '__main__':  # pragma: no cover
    sys.exit(main())
