"""
Structural estimation: beliefs prior, ecological diffusion, CRRA curvature and
the nonparametric growth-adherence check.
"""
import dataclasses
import enum
import json
import logging
import warnings

import numpy as np
import pandas as pd
import scipy.optimize
import scipy.special
import scipy.stats

from .equilibrium import median_rate, stationary_rate
from .errors import ConvergenceError, DegenerateSampleError, DomainError, ValidationError
from .model import DEFAULT_QUADRATURE_NODES, G1Form, G2Form, ModelParams
from .utils import DEFAULT_SEED, chunk_sizes, derive_rng, parallel_map

logger = logging.getLogger(__name__)

ADHERENCE_CLAMP = 1e-6
MIN_BELIEF_SAMPLE = 10
MIN_SMOOTHING_SAMPLE = 30
DEFAULT_BOOTSTRAP = 3000
BOOTSTRAP_CHUNK = 250
GAMMA_BRACKET = (1.0 + 1e-6, 50.0)
GRADIENT_STEP = 1e-5
# stands in for the criterion outside the well-posed region
ILL_POSED_CRITERION = 1e12


class Moments(enum.Enum):
    MEAN_ONLY = "MeanOnly"
    MEAN_AND_VARIANCE = "MeanAndVariance"


@dataclasses.dataclass(frozen=True)
class EstimationResult(object):
    estimates: dict
    std_errors: dict
    n_obs: int
    converged: bool
    diagnostics: dict

    def __post_init__(self):
        for name, value in self.std_errors.items():
            if not value >= 0.0:
                raise ValidationError("Invalid value for std_errors[%s]!  Must be >= 0." % name)

    def to_dict(self):
        return {
            "estimates": dict(self.estimates),
            "std_errors": dict(self.std_errors),
            "n_obs": self.n_obs,
            "converged": self.converged,
            "diagnostics": dict(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - {"estimates", "std_errors", "n_obs", "converged", "diagnostics"}
        if unknown:
            raise ValidationError("Unknown EstimationResult keys: %s" % ", ".join(sorted(unknown)))
        return cls({k: float(v) for k, v in data["estimates"].items()},
                   {k: float(v) for k, v in data["std_errors"].items()},
                   int(data["n_obs"]), bool(data["converged"]), dict(data["diagnostics"]))

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_table(self):
        from .table import ResultTable
        table = ResultTable(["parameter", "estimate", "std_error"])
        table.set_align("parameter", "l")
        for name, value in self.estimates.items():
            table.add_row([name, value, self.std_errors.get(name)])
        table.add_row(["n_obs", self.n_obs, None])
        for name in sorted(self.diagnostics):
            value = self.diagnostics[name]
            if isinstance(value, (int, float, str, bool)):
                table.add_row([name, value, None])
        return table


##############################
# BELIEFS PRIOR              #
##############################

def _beta_nll(theta, n, sum_log, sum_log1m):
    alpha, beta = np.exp(theta)
    value = n * scipy.special.betaln(alpha, beta) - (alpha - 1.0) * sum_log - (beta - 1.0) * sum_log1m
    digamma_total = scipy.special.digamma(alpha + beta)
    grad_alpha = n * (scipy.special.digamma(alpha) - digamma_total) - sum_log
    grad_beta = n * (scipy.special.digamma(beta) - digamma_total) - sum_log1m
    return value, np.array([grad_alpha * alpha, grad_beta * beta])


def beta_fisher_information(alpha, beta, n):
    total = scipy.special.polygamma(1, alpha + beta)
    return n * np.array([[scipy.special.polygamma(1, alpha) - total, -total],
                         [-total, scipy.special.polygamma(1, beta) - total]])


def fit_beliefs(adherences, clamp=ADHERENCE_CLAMP):
    """Beta maximum likelihood for the adherence prior.

    Exact 0 and 1 shares are clamped to [clamp, 1 - clamp]. The optimizer starts
    from the moment-matching solution and works on log parameters."""

    x = np.asarray(adherences, dtype=float).ravel()
    if x.size < MIN_BELIEF_SAMPLE:
        raise DegenerateSampleError("fit_beliefs needs at least %d observations, got %d"
                                    % (MIN_BELIEF_SAMPLE, x.size))
    if np.any(np.isnan(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("Invalid value for adherences!  Must be in [0, 1].")
    clamped = int(np.sum((x < clamp) | (x > 1.0 - clamp)))
    x = np.clip(x, clamp, 1.0 - clamp)
    mean, variance = x.mean(), x.var()
    if variance <= 0.0:
        raise DegenerateSampleError("Adherence sample has zero variance")

    common = max(mean * (1.0 - mean) / variance - 1.0, 1e-3)
    start = np.log([mean * common, (1.0 - mean) * common])
    n, sum_log, sum_log1m = x.size, np.log(x).sum(), np.log1p(-x).sum()
    start_nll = _beta_nll(start, n, sum_log, sum_log1m)[0]

    result = scipy.optimize.minimize(_beta_nll, start, args=(n, sum_log, sum_log1m), jac=True,
                                     method="L-BFGS-B")
    if not result.success:
        raise ConvergenceError("Beta likelihood maximization failed: %s" % result.message,
                               residual=float(np.linalg.norm(result.jac)))
    theta = result.x if result.fun <= start_nll else start
    alpha, beta = np.exp(theta)
    covariance = np.linalg.inv(beta_fisher_information(alpha, beta, n))
    errors = np.sqrt(np.diag(covariance))
    logger.info("Beta MLE: alpha=%.6g (%.3g), beta=%.6g (%.3g), n=%d", alpha, errors[0], beta, errors[1], n)
    return EstimationResult(
        estimates={"alpha": float(alpha), "beta": float(beta)},
        std_errors={"alpha": float(errors[0]), "beta": float(errors[1])},
        n_obs=int(n),
        converged=True,
        diagnostics={
            "log_likelihood": float(-min(result.fun, start_nll)),
            "start_log_likelihood": float(-start_nll),
            "iterations": int(result.nit),
            "clamped": clamped,
        },
    )


##############################
# DIFFUSION                  #
##############################

def _gbm_nll(theta, returns):
    drift, log_scale = theta
    variance = np.exp(2.0 * log_scale)
    residuals = returns - drift
    squares = np.dot(residuals, residuals)
    n = returns.size
    value = n * log_scale + 0.5 * squares / variance
    gradient = np.array([-residuals.sum() / variance, n - squares / variance])
    hessian = np.array([[n / variance, 2.0 * residuals.sum() / variance],
                        [2.0 * residuals.sum() / variance, 2.0 * squares / variance]])
    return value, gradient, hessian


def _gbm_numerical(returns):
    start = np.array([np.median(returns), np.log(returns.std()) + 0.5])
    result = scipy.optimize.minimize(lambda t: _gbm_nll(t, returns)[0], start,
                                     jac=lambda t: _gbm_nll(t, returns)[1],
                                     hess=lambda t: _gbm_nll(t, returns)[2],
                                     method="trust-exact", options={"gtol": 1e-9})
    if not result.success:
        raise ConvergenceError("GBM likelihood maximization failed: %s" % result.message,
                               residual=float(np.linalg.norm(result.jac)))
    drift, log_scale = result.x
    sigma = float(np.exp(log_scale))
    return float(drift + 0.5 * sigma ** 2), sigma


def _gbm_from_sums(count, total, squares):
    drift = total / count
    variance = np.maximum(squares / count - drift ** 2, 0.0)
    return drift + 0.5 * variance, np.sqrt(variance)


def _gbm_log_likelihood(returns, x1, mu, sigma):
    drift = mu - 0.5 * sigma ** 2
    return float(np.sum(-np.log(x1) - np.log(sigma) - 0.5 * np.log(2.0 * np.pi)
                        - (returns - drift) ** 2 / (2.0 * sigma ** 2)))


def fit_gbm(panel, control=None, bootstrap=DEFAULT_BOOTSTRAP, seed=DEFAULT_SEED, threads=1,
            method="closed_form"):
    """Maximum likelihood for (mu, sigma) from one-year transitions of an uncontrolled GBM.

    Arguments:

    panel - Panel with consecutive-year records
    control - must be None (uncontrolled areas)
    bootstrap - cluster bootstrap resamples over units; 0 gives asymptotic errors
    seed - root seed of the bootstrap
    threads - worker threads for the bootstrap chunks
    method - "closed_form" or "numerical" likelihood maximization"""

    if control is not None:
        raise ValidationError("Invalid value for control!  Only None is supported.")
    if method not in ("closed_form", "numerical"):
        raise ValidationError("Invalid value for method!  Must be closed_form or numerical.")
    pairs = panel.transitions()
    if pairs.empty:
        raise DegenerateSampleError("No unit has two consecutive observations")
    returns = np.log(pairs["x1"].to_numpy() / pairs["x0"].to_numpy())
    n = returns.size
    spread = returns.std()
    if n < 2 or spread <= 1e-10 * (1.0 + abs(returns.mean())):
        raise DegenerateSampleError("Log-returns have zero variance; sigma is not identified")

    if method == "closed_form":
        drift = returns.mean()
        sigma = float(np.sqrt(np.mean((returns - drift) ** 2)))
        mu = float(drift + 0.5 * sigma ** 2)
    else:
        mu, sigma = _gbm_numerical(returns)

    if bootstrap:
        by_unit = pd.DataFrame({"unit_id": pairs["unit_id"], "r": returns, "r2": returns ** 2})
        by_unit = by_unit.groupby("unit_id").agg(count=("r", "size"), total=("r", "sum"), squares=("r2", "sum"))
        stats = by_unit.to_numpy()
        units = stats.shape[0]

        def run(task):
            index, size = task
            rng = derive_rng(seed, "gbm-bootstrap", index)
            draws = stats[rng.integers(0, units, size=(size, units))].sum(axis=1)
            logger.debug("Bootstrap chunk %d (%d resamples)", index, size)
            return np.column_stack(_gbm_from_sums(draws[:, 0], draws[:, 1], draws[:, 2]))

        tasks = list(enumerate(chunk_sizes(int(bootstrap), BOOTSTRAP_CHUNK)))
        draws = np.concatenate(parallel_map(run, tasks, threads))
        se_mu, se_sigma = draws.std(axis=0, ddof=1)
    else:
        se_sigma = sigma / np.sqrt(2.0 * n)
        se_mu = np.sqrt(sigma ** 2 / n + sigma ** 2 * se_sigma ** 2)

    skipped = len(panel.units) - pairs["unit_id"].nunique()
    logger.info("GBM MLE: mu=%.6g (%.3g), sigma=%.6g (%.3g), n=%d", mu, se_mu, sigma, se_sigma, n)
    return EstimationResult(
        estimates={"mu": mu, "sigma": sigma},
        std_errors={"mu": float(se_mu), "sigma": float(se_sigma)},
        n_obs=int(n),
        converged=True,
        diagnostics={
            "log_likelihood": _gbm_log_likelihood(returns, pairs["x1"].to_numpy(), mu, sigma),
            "method": method,
            "bootstrap": int(bootstrap),
            "units_skipped": int(skipped),
        },
    )


##############################
# CRRA CURVATURE             #
##############################

def _moment_contributions(gamma, data, params_fixed, prior, k, g1_form, moments, nodes):
    mu, sigma, rho = params_fixed
    params = ModelParams(mu, sigma, rho, gamma, g1_form, G2Form.pow_a(k))
    q_tilde = median_rate(params, prior, nodes=nodes)
    rates = stationary_rate(data["a"], params, q_tilde)
    columns = [data["growth"] - (mu - rates)]
    if moments is Moments.MEAN_AND_VARIANCE:
        columns.append((data["log_return"] - (mu - 0.5 * sigma ** 2 - rates)) ** 2 - sigma ** 2)
    return np.column_stack(columns)


def _criterion(gamma, weight, contributions):
    try:
        moments = contributions(gamma).mean(axis=0)
    except ValidationError:
        return ILL_POSED_CRITERION
    return float(moments @ weight @ moments)


def _criterion_profile(bracket, weight, contributions, points=50):
    grid = np.linspace(bracket[0], bracket[1], points)
    return [(float(g), _criterion(g, weight, contributions)) for g in grid]


def _minimize_gamma(bracket, weight, contributions):
    result = scipy.optimize.minimize_scalar(lambda g: _criterion(g, weight, contributions), bounds=bracket,
                                            method="bounded", options={"xatol": 1e-8})
    span = bracket[1] - bracket[0]
    if not result.success or min(result.x - bracket[0], bracket[1] - result.x) < 1e-4 * span:
        profile = _criterion_profile(bracket, weight, contributions)
        raise ConvergenceError("GMM criterion has no interior minimum in [%g, %g]" % bracket,
                               residual=float(result.fun), profile=profile)
    return float(result.x), int(result.nfev)


def fit_gamma(panel, params_fixed, prior, k=1.0, moments=Moments.MEAN_ONLY, bracket=GAMMA_BRACKET,
              g1_form=None, nodes=DEFAULT_QUADRATURE_NODES):
    """Two-step GMM estimate of gamma from one-year growth and adherence.

    The mean condition is dX/X - (mu - q(a; gamma)); MeanAndVariance adds
    (ln(X1/X0) - (mu - sigma^2/2 - q(a; gamma)))^2 - sigma^2 and reports
    Hansen's J statistic.

    Arguments:

    panel - Panel with consecutive-year records
    params_fixed - (mu, sigma, rho)
    prior - BeliefPrior used for the population averages
    k - exponent of g2(a) = a^k
    moments - Moments.MEAN_ONLY or Moments.MEAN_AND_VARIANCE
    bracket - search interval for gamma (must exclude 1)"""

    moments = Moments(moments)
    g1_form = G1Form.unit() if g1_form is None else g1_form
    low, high = float(bracket[0]), float(bracket[1])
    if not 0.0 < low < high or low <= 1.0 <= high:
        raise ValidationError("Invalid value for bracket!  Must be an interval of (0, 1) or (1, inf).")
    bracket = (low, high)
    pairs = panel.transitions()
    if len(pairs) < 2:
        raise DegenerateSampleError("fit_gamma needs at least two transitions")
    x0, x1 = pairs["x0"].to_numpy(), pairs["x1"].to_numpy()
    data = {"growth": (x1 - x0) / x0, "log_return": np.log(x1 / x0), "a": pairs["atr_share"].to_numpy()}
    n = len(pairs)

    def contributions(gamma):
        return _moment_contributions(gamma, data, params_fixed, prior, k, g1_form, moments, nodes)

    count = 2 if moments is Moments.MEAN_AND_VARIANCE else 1
    first, evaluations = _minimize_gamma(bracket, np.eye(count), contributions)
    residuals = contributions(first)
    covariance = np.atleast_2d(np.cov(residuals, rowvar=False, bias=True))
    weight = np.linalg.inv(covariance)
    gamma, more = _minimize_gamma(bracket, weight, contributions)
    evaluations += more

    step = GRADIENT_STEP
    jacobian = ((contributions(gamma + step).mean(axis=0) - contributions(gamma - step).mean(axis=0))
                / (2.0 * step)).reshape(count, 1)
    residuals = contributions(gamma)
    covariance = np.atleast_2d(np.cov(residuals, rowvar=False, bias=True))
    bread = np.linalg.inv(jacobian.T @ weight @ jacobian)
    meat = jacobian.T @ weight @ covariance @ weight @ jacobian
    se = float(np.sqrt((bread @ meat @ bread)[0, 0] / n))

    mean_moments = residuals.mean(axis=0)
    criterion = float(mean_moments @ weight @ mean_moments)
    diagnostics = {
        "criterion": criterion,
        "first_step_gamma": first,
        "evaluations": evaluations,
        "moments": moments.value,
    }
    if count > 1:
        j_stat = n * criterion
        diagnostics["j_statistic"] = j_stat
        diagnostics["p_value"] = float(scipy.stats.chi2.sf(j_stat, count - 1))
    logger.info("GMM: gamma=%.6g (%.3g), n=%d", gamma, se, n)
    return EstimationResult({"gamma": gamma}, {"gamma": se}, n, True, diagnostics)


##############################
# LOCAL LINEAR REGRESSION    #
##############################

def _epanechnikov(u):
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u ** 2), 0.0)


def _local_linear(points, x, y, bandwidth):
    """Intercept, slope and the determinant at each evaluation point."""
    offsets = x[None, :] - points[:, None]
    weights = _epanechnikov(offsets / bandwidth)
    s0 = weights.sum(axis=1)
    s1 = (weights * offsets).sum(axis=1)
    s2 = (weights * offsets ** 2).sum(axis=1)
    t0 = weights @ y
    t1 = (weights * offsets) @ y
    det = s0 * s2 - s1 ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        good = det > 1e-12 * np.maximum(s0 * s2, 1e-300)
        intercept = np.where(good, (s2 * t0 - s1 * t1) / det, np.nan)
        slope = np.where(good, (s0 * t1 - s1 * t0) / det, np.nan)
    return intercept, slope, s2, det


def _cv_score(x, y, bandwidth):
    fitted, _, s2, det = _local_linear(x, x, y, bandwidth)
    with np.errstate(divide="ignore", invalid="ignore"):
        leverage = 0.75 * s2 / det
        score = np.mean(((y - fitted) / (1.0 - leverage)) ** 2)
    if not np.isfinite(score) or np.any(leverage >= 1.0):
        return np.inf
    return float(score)


@dataclasses.dataclass(frozen=True, eq=False)
class LocalLinearFit(object):
    grid: np.ndarray
    fitted: np.ndarray
    slope: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    bandwidth: float
    cv_profile: pd.DataFrame
    n_obs: int

    def to_frame(self):
        return pd.DataFrame({"x": self.grid, "fitted": self.fitted, "slope": self.slope,
                             "lower": self.lower, "upper": self.upper})


def select_bandwidth(x, y, candidates=40):
    """Least-squares leave-one-out bandwidth: grid search, then bounded refinement."""
    span = x.max() - x.min()
    gaps = np.diff(np.unique(x))
    smallest = max(2.0 * (gaps.max() if gaps.size else span), 0.02 * span)
    grid = np.geomspace(smallest, 2.0 * span, candidates)
    scores = np.array([_cv_score(x, y, h) for h in grid])
    profile = pd.DataFrame({"bandwidth": grid, "cv": scores})
    if not np.any(np.isfinite(scores)):
        raise ConvergenceError("Bandwidth search failed: no finite cross-validation score",
                               profile=profile.to_dict("records"))
    best = int(np.argmin(scores))
    lower, upper = grid[max(best - 1, 0)], grid[min(best + 1, candidates - 1)]
    refined = scipy.optimize.minimize_scalar(lambda h: _cv_score(x, y, h), bounds=(lower, upper),
                                             method="bounded")
    bandwidth = float(refined.x) if refined.fun <= scores[best] else float(grid[best])
    return bandwidth, profile


def local_linear_fit(x, y, year_tags=None, grid=None, grid_points=101, n_boot=500, seed=DEFAULT_SEED,
                     threads=1, bandwidth=None, level=0.95):
    """Local-linear regression of y on x with a pairs-bootstrap band.

    Arguments:

    x, y - samples of equal length, at least 30
    year_tags - optional labels whose additive intercepts are removed first
    grid - evaluation points (default: grid_points over the range of x)
    n_boot - bootstrap resamples for the band
    bandwidth - fixed bandwidth; chosen by cross-validation when None"""

    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise ValidationError("Invalid value for y!  Must have the length of x.")
    if x.size < MIN_SMOOTHING_SAMPLE:
        raise DegenerateSampleError("local_linear_fit needs at least %d observations" % MIN_SMOOTHING_SAMPLE)
    if np.ptp(x) <= 0.0:
        raise DegenerateSampleError("x has zero range")
    if year_tags is not None:
        tags = pd.Series(np.asarray(year_tags)).astype(str)
        if tags.size != y.size:
            raise ValidationError("Invalid value for year_tags!  Must have the length of x.")
        y = y - (pd.Series(y).groupby(tags).transform("mean").to_numpy() - y.mean())

    if bandwidth is None:
        bandwidth, profile = select_bandwidth(x, y)
    else:
        profile = pd.DataFrame({"bandwidth": [bandwidth], "cv": [_cv_score(x, y, bandwidth)]})
    points = np.linspace(x.min(), x.max(), grid_points) if grid is None else np.asarray(grid, dtype=float)
    fitted, slope, _, _ = _local_linear(points, x, y, bandwidth)
    logger.info("Local linear fit: bandwidth %.6g on %d observations", bandwidth, x.size)

    def run(task):
        index, size = task
        rng = derive_rng(seed, "local-linear-bootstrap", index)
        curves = np.empty((size, points.size))
        for row in range(size):
            sample = rng.integers(0, x.size, x.size)
            curves[row] = _local_linear(points, x[sample], y[sample], bandwidth)[0]
        return curves

    if n_boot:
        curves = np.concatenate(parallel_map(run, list(enumerate(chunk_sizes(int(n_boot), 50))), threads))
        tail = 50.0 * (1.0 - level)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            lower = np.nanpercentile(curves, tail, axis=0)
            upper = np.nanpercentile(curves, 100.0 - tail, axis=0)
    else:
        lower = upper = np.full(points.shape, np.nan)
    return LocalLinearFit(points, fitted, slope, lower, upper, float(bandwidth), profile, int(x.size))
