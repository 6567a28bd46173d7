"""
Mean-field equilibrium deforestation policies.

Policies are linear in the owned stock, q = rate(a) * X, and the population
interacts only through the median forest cover, whose drift is
mu - sigma^2/2 - q_tilde with q_tilde the belief-weighted median rate.
"""
import dataclasses
import enum
import json
import logging
import warnings

import numpy as np
import pandas as pd
import scipy.optimize

from .errors import FOSDViolation, ValidationError, WellPosednessError
from .model import (BeliefPrior, DEFAULT_QUADRATURE_NODES, G1Kind, ModelParams, belief_moment, elasticities,
                    quadrature_rule, _validate_adherence)

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 101
DEFAULT_TIME_STEP = 0.1
CROSSING_TOLERANCE = 1e-8
# Counterfactual no-ATR rate reported alongside the arrondissement panel estimates
PUBLISHED_COUNTERFACTUAL_RATE = 0.0451


def default_grid(points=DEFAULT_GRID_POINTS):
    return np.linspace(0.0, 1.0, int(points))


def _validate_grid(grid):
    if grid is None:
        return default_grid()
    grid = _validate_adherence(grid)
    if grid.ndim != 1 or grid.size < 2:
        raise ValidationError("Invalid value for adherence grid!  Must be a vector of at least two points.")
    if np.any(np.diff(grid) <= 0.0):
        raise ValidationError("Invalid value for adherence grid!  Must be strictly increasing.")
    return grid


def affine_bequest(a):
    return 0.5 * (1.0 + np.asarray(a, dtype=float))


def linear_bequest(a):
    return np.asarray(a, dtype=float)


##############################
# CLOSED FORMS               #
##############################

def _no_interaction_rate(el, params):
    return el.eps_q * (params.rho - params.mu * el.nu_q - 0.5 * params.sigma ** 2 * el.nu_q / el.eps_q)


def q_no_interaction(a, params):
    """Optimal rate when the median forest cover carries no utility weight."""
    rate = _no_interaction_rate(elasticities(a, params), params)
    return float(rate) if np.ndim(a) == 0 else rate


def stationary_rate(a, params, q_tilde_star):
    """Stationary rate at adherence a given the equilibrium median rate."""
    el = elasticities(a, params)
    rate = _no_interaction_rate(el, params) + el.eps_q * el.nu_xbar * (q_tilde_star - params.threshold)
    return float(rate) if np.ndim(a) == 0 else rate


def median_rate(params, prior, nodes=DEFAULT_QUADRATURE_NODES, method="jacobi"):
    """Self-consistent belief-weighted median rate q_tilde_star."""

    def moment(f):
        return belief_moment(prior, f, method=method, nodes=nodes)

    one_minus_gamma = 1.0 - params.gamma
    mean_eps = moment(lambda a: elasticities(a, params).eps_q)
    mean_one_minus_eps = moment(lambda a: 1.0 - elasticities(a, params).eps_q)
    mean_g1 = moment(params.g1_form.evaluate)
    mean_coupling = moment(lambda a: elasticities(a, params).eps_q * elasticities(a, params).nu_xbar)
    denominator = 1.0 - mean_coupling
    if abs(denominator) < 1e-14:
        raise WellPosednessError("Median rate is ill-posed: 1 - <eps_q * nu_xbar> = 0")
    numerator = (params.rho * mean_eps + params.mu * mean_one_minus_eps
                 - 0.5 * params.sigma ** 2 * one_minus_gamma * mean_g1
                 - params.threshold * mean_coupling)
    return numerator / denominator


def q_pro(a, params, prior, nodes=DEFAULT_QUADRATURE_NODES):
    """Compact rate for populations with g1 = 1 and g2(a) = a^k."""
    if params.g1_form.kind is not G1Kind.UNIT:
        raise ValidationError("q_pro requires g1_form = Unit")
    if params.g2_form.kind.value != "PowA":
        raise ValidationError("q_pro requires g2_form = PowA(k)")
    gamma = params.gamma
    k = params.g2_form.k2
    m_k = belief_moment(prior, lambda x: np.power(x, k), nodes=nodes)
    denominator = gamma - (1.0 - gamma) * m_k
    if denominator == 0.0:
        raise WellPosednessError("q_pro is ill-posed: gamma - (1-gamma)*m_k = 0 for this prior")
    q0 = q_no_interaction(0.0, params)
    threshold = params.threshold
    q_tilde = (gamma * q0 - threshold * (1.0 - gamma) * m_k) / denominator
    nu_xbar = elasticities(a, params).nu_xbar
    rate = q0 + (nu_xbar / gamma) * (q_tilde - threshold)
    return float(rate) if np.ndim(a) == 0 else rate


##############################
# SUSTAINABILITY             #
##############################

class SustainabilityKind(enum.Enum):
    SUSTAINABLE_FOR_ALL = "SustainableForAll"
    UNSUSTAINABLE_FOR_ALL = "UnsustainableForAll"
    SWITCHES_AT = "SwitchesAt"


@dataclasses.dataclass(frozen=True)
class Sustainability(object):
    kind: SustainabilityKind
    crossing: float = None

    def __str__(self):
        if self.kind is SustainabilityKind.SWITCHES_AT:
            return "%s(%.8f)" % (self.kind.value, self.crossing)
        return self.kind.value


def _locate_crossing(grid, rates, threshold, rate_fn):
    excess = rates - threshold
    exact = np.flatnonzero(excess == 0.0)
    changes = np.flatnonzero(np.sign(excess[:-1]) * np.sign(excess[1:]) < 0)
    if changes.size == 0:
        if exact.size and np.any(excess > 0.0) and np.any(excess < 0.0):
            return float(grid[exact[0]])
        return None
    if changes.size > 1:
        logger.info("Rate crosses the sustainability threshold %d times; reporting the first", changes.size)
    i = changes[0]
    return float(scipy.optimize.bisect(lambda a: rate_fn(a) - threshold, grid[i], grid[i + 1],
                                       xtol=CROSSING_TOLERANCE))


def classify_sustainability(sol):
    """Compare the equilibrium rates with mu - sigma^2/2 over the adherence grid."""
    crossing = sol.crossing
    if crossing is None:
        crossing = _locate_crossing(sol.adherence_grid, sol.q_rate, sol.threshold, sol.rate_at)
    if crossing is not None:
        return Sustainability(SustainabilityKind.SWITCHES_AT, crossing)
    if np.all(sol.q_rate > sol.threshold):
        return Sustainability(SustainabilityKind.UNSUSTAINABLE_FOR_ALL)
    return Sustainability(SustainabilityKind.SUSTAINABLE_FOR_ALL)


##############################
# STATIONARY EQUILIBRIUM     #
##############################

@dataclasses.dataclass(frozen=True, eq=False)
class EquilibriumSolution(object):
    params: ModelParams
    prior: BeliefPrior
    adherence_grid: np.ndarray
    q_rate: np.ndarray
    q_tilde_star: float
    threshold: float
    crossing: float = None
    converged: bool = True
    iterations: int = 1
    residual: float = 0.0

    def rate_at(self, a):
        """Closed-form rate at any adherence, not interpolated."""
        return stationary_rate(a, self.params, self.q_tilde_star)

    def interpolate(self, a):
        return np.interp(_validate_adherence(a), self.adherence_grid, self.q_rate)

    @property
    def sustainability(self):
        return classify_sustainability(self)

    def to_frame(self):
        return pd.DataFrame({
            "a": self.adherence_grid,
            "q_rate": self.q_rate,
            "threshold": np.full(self.adherence_grid.shape, self.threshold),
        })

    def to_dict(self):
        return {
            "params": self.params.to_dict(),
            "prior": self.prior.to_dict(),
            "adherence_grid": [float(a) for a in self.adherence_grid],
            "q_rate": [float(q) for q in self.q_rate],
            "q_tilde_star": self.q_tilde_star,
            "threshold": self.threshold,
            "crossing": self.crossing,
            "converged": self.converged,
            "iterations": self.iterations,
            "residual": self.residual,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            params=ModelParams.from_dict(data["params"]),
            prior=BeliefPrior.from_dict(data["prior"]),
            adherence_grid=np.asarray(data["adherence_grid"], dtype=float),
            q_rate=np.asarray(data["q_rate"], dtype=float),
            q_tilde_star=float(data["q_tilde_star"]),
            threshold=float(data["threshold"]),
            crossing=None if data["crossing"] is None else float(data["crossing"]),
            converged=bool(data["converged"]),
            iterations=int(data["iterations"]),
            residual=float(data["residual"]),
        )

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, EquilibriumSolution):
            return NotImplemented
        return (self.params == other.params and self.prior == other.prior
                and np.array_equal(self.adherence_grid, other.adherence_grid)
                and np.array_equal(self.q_rate, other.q_rate)
                and self.q_tilde_star == other.q_tilde_star and self.threshold == other.threshold
                and self.crossing == other.crossing and self.converged == other.converged
                and self.iterations == other.iterations and self.residual == other.residual)


def q_mfe_stationary(params, prior, adherence_grid=None, nodes=DEFAULT_QUADRATURE_NODES):
    """Solve the stationary mean-field equilibrium.

    Arguments:

    params - ModelParams
    prior - BeliefPrior over adherence
    adherence_grid - increasing points of [0, 1] (default: 101 equally spaced)
    nodes - quadrature nodes for the population averages"""

    grid = _validate_grid(adherence_grid)
    q_tilde_star = median_rate(params, prior, nodes=nodes)
    rates = stationary_rate(grid, params, q_tilde_star)
    if np.any(rates < 0.0):
        message = "Negative equilibrium rates on %d grid points (min %.6g)" % (np.sum(rates < 0.0), rates.min())
        logger.warning(message)
        warnings.warn(message, RuntimeWarning)

    points, weights = quadrature_rule(prior, nodes)
    residual = abs(float(np.dot(weights, stationary_rate(points, params, q_tilde_star))) - q_tilde_star)
    crossing = _locate_crossing(grid, rates, params.threshold,
                                lambda a: stationary_rate(a, params, q_tilde_star))
    logger.info("Stationary equilibrium: q_tilde_star=%.8g, crossing=%s", q_tilde_star, crossing)
    return EquilibriumSolution(params, prior, grid, rates, q_tilde_star, params.threshold, crossing,
                               converged=True, iterations=1, residual=residual)


##############################
# FINITE HORIZON             #
##############################

@dataclasses.dataclass(frozen=True, eq=False)
class FiniteHorizonSolution(object):
    time_grid: np.ndarray
    adherence_grid: np.ndarray
    median_rate_path: np.ndarray
    rate_path: np.ndarray
    converged: bool
    sup_norm_residual: float
    iterations: int
    residual_history: tuple
    limit_nodes: int = 0

    def to_frame(self):
        """Tidy rows (time, a, rate)."""
        times, grid = np.meshgrid(self.time_grid, self.adherence_grid)
        return pd.DataFrame({"time": times.ravel(), "a": grid.ravel(), "rate": self.rate_path.ravel()})


def _validate_time_grid(horizon, time_grid, time_step):
    if horizon <= 0.0:
        raise ValidationError("Invalid value for horizon!  Must be > 0.")
    if time_grid is None:
        steps = max(int(np.ceil(horizon / time_step)), 1)
        return np.linspace(0.0, horizon, steps + 1)
    times = np.asarray(time_grid, dtype=float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0.0):
        raise ValidationError("Invalid value for time_grid!  Must be strictly increasing with two or more points.")
    if times[0] < 0.0 or times[-1] != horizon:
        raise ValidationError("Invalid value for time_grid!  Must lie in [0, T] and end at T.")
    return times


def q_mfe_finite_horizon(params, prior, horizon, time_grid=None, adherence_grid=None, bequest_h=None,
                         tol=1e-10, max_iter=500, time_step=DEFAULT_TIME_STEP, initial="stationary",
                         nodes=DEFAULT_QUADRATURE_NODES):
    """Finite-horizon equilibrium by Picard iteration on the median-rate path.

    Writing the value function as f(t) x^nu_q xbar^nu_xbar / (1-gamma) and w = f^eps_q,
    the reduced HJB is w' = -eps_q C w - 1 with w(T) = 1/h(a) and rate = 1/w. Each
    sweep integrates it exactly on every time interval with C frozen at the interval's
    median-rate iterate; the belief average of the rates gives the next iterate.

    Arguments:

    horizon - final time T > 0
    time_grid - increasing times ending at T (default: step `time_step`)
    bequest_h - nondecreasing map [0,1] -> [0,1] (default: affine_bequest)
    tol - sup-norm change of the median path that ends the iteration
    max_iter - iteration cap; the solution is returned unconverged past it
    initial - "stationary" or "zero" starting median path"""

    if tol <= 0.0:
        raise ValidationError("Invalid value for tol!  Must be > 0.")
    times = _validate_time_grid(float(horizon), time_grid, time_step)
    grid = _validate_grid(adherence_grid)
    bequest = affine_bequest if bequest_h is None else bequest_h

    h_grid = np.asarray(bequest(grid), dtype=float)
    if np.any(h_grid < 0.0) or np.any(h_grid > 1.0) or np.any(np.diff(h_grid) < 0.0):
        raise ValidationError("Invalid value for bequest_h!  Must be a nondecreasing map of [0, 1] into [0, 1].")

    points, weights = quadrature_rule(prior, nodes)
    n_points = points.size
    adherence = np.concatenate([points, grid])
    el = elasticities(adherence, params)
    static = el.eps_q * (params.mu * el.nu_q + 0.5 * params.sigma ** 2 * el.nu_q / el.eps_q - params.rho)
    coupling = el.eps_q * el.nu_xbar
    with np.errstate(divide="ignore"):
        terminal = 1.0 / np.asarray(bequest(adherence), dtype=float)
    steps = np.diff(times)

    def sweep(median_path):
        midpoint = 0.5 * (median_path[:-1] + median_path[1:])
        scaled = (static[:, None] + coupling[:, None] * (params.threshold - midpoint[None, :])) * steps[None, :]
        limit = np.abs(scaled) < 1e-12
        growth = np.exp(scaled)
        safe = np.where(limit, 1.0, scaled)
        increment = np.where(limit, steps[None, :], np.expm1(safe) / safe * steps[None, :])
        w = np.empty((adherence.size, times.size))
        w[:, -1] = terminal
        for k in range(steps.size - 1, -1, -1):
            w[:, k] = w[:, k + 1] * growth[:, k] + increment[:, k]
        with np.errstate(divide="ignore"):
            return 1.0 / w, int(np.count_nonzero(limit))

    if initial == "stationary":
        median_path = np.full(times.size, median_rate(params, prior, nodes=nodes))
    elif initial == "zero":
        median_path = np.zeros(times.size)
    else:
        raise ValidationError("Invalid value for initial!  Must be stationary or zero.")

    history = []
    converged = False
    residual = np.inf
    iteration = 0
    for iteration in range(1, int(max_iter) + 1):
        rates, _ = sweep(median_path)
        updated = weights @ rates[:n_points]
        residual = float(np.max(np.abs(updated - median_path)))
        history.append(residual)
        median_path = updated
        logger.debug("Picard iteration %d: residual %.3e", iteration, residual)
        if residual < tol:
            converged = True
            break

    rates, limit_nodes = sweep(median_path)
    if limit_nodes:
        logger.warning("C = 0 limit taken on %d interval nodes", limit_nodes)
    if converged:
        logger.info("Finite-horizon equilibrium converged in %d iterations (residual %.3e)", iteration, residual)
    else:
        logger.warning("Finite-horizon equilibrium did not converge in %d iterations (residual %.3e)",
                       iteration, residual)
    return FiniteHorizonSolution(times, grid, median_path, rates[n_points:], converged, residual, iteration,
                                 tuple(history), limit_nodes)


##############################
# COMPARATIVE STATICS        #
##############################

def check_fosd(prior_low, prior_high, points=201, tol=1e-12):
    a = np.linspace(0.0, 1.0, points)
    violation = prior_high.cdf(a) - prior_low.cdf(a)
    if np.any(violation > tol):
        raise FOSDViolation("Prior %s does not first-order stochastically dominate %s (max CDF excess %.3g)"
                            % (prior_high.to_dict(), prior_low.to_dict(), violation.max()))


def fosd_response(params, prior_low, prior_high, adherence_grid=None, nodes=DEFAULT_QUADRATURE_NODES):
    """Rate response to a first-order dominant shift of beliefs, as a (a, delta_q) table."""
    check_fosd(prior_low, prior_high)
    grid = _validate_grid(adherence_grid)
    low = q_mfe_stationary(params, prior_low, grid, nodes=nodes)
    high = q_mfe_stationary(params, prior_high, grid, nodes=nodes)
    delta = high.q_rate - low.q_rate
    logger.info("FOSD shift moves the median rate by %.6g", high.q_tilde_star - low.q_tilde_star)
    return pd.DataFrame({"a": grid, "delta_q": delta})
