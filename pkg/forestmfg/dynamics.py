"""
Forest-cover dynamics under linear policies q = rate * X.

Under a linear policy the controlled cover is a geometric Brownian motion with
log drift mu - sigma^2/2 - rate; reflection at a carrying capacity S is done
on the log process.
"""
import dataclasses
import enum
import logging

import numpy as np
import pandas as pd
import scipy.special
import scipy.stats

from .equilibrium import PUBLISHED_COUNTERFACTUAL_RATE, Sustainability, SustainabilityKind, q_mfe_stationary
from .errors import DomainError, ValidationError
from .utils import chunk_sizes, derive_rng, parallel_map

logger = logging.getLogger(__name__)

PATH_LABEL = "path"
PATH_CHUNK = 1000
POSITIVITY_FLOOR = np.finfo(float).tiny


class Scheme(enum.Enum):
    EXACT_LOG_NORMAL = "ExactLogNormal"
    EULER_MARUYAMA = "EulerMaruyama"


class Reflection(enum.Enum):
    FOLD = "fold"
    BRIDGE = "bridge"


def _validate_positive(name, val):
    if not np.isfinite(val) or val <= 0.0:
        raise ValidationError("Invalid value for %s!  Must be > 0." % name)


def _time_grid(horizon, dt):
    _validate_positive("horizon", horizon)
    _validate_positive("dt", dt)
    steps = max(int(np.ceil(horizon / dt - 1e-9)), 1)
    return np.arange(steps + 1) * dt


@dataclasses.dataclass(frozen=True, eq=False)
class Trajectory(object):
    times: np.ndarray
    values: np.ndarray
    seed: int = None
    scheme: Scheme = Scheme.EXACT_LOG_NORMAL

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ValidationError("Trajectory times and values differ in length")
        if np.any(self.values <= 0.0):
            raise ValidationError("Trajectory values must be > 0")

    @property
    def final(self):
        return float(self.values[-1])

    def to_frame(self):
        return pd.DataFrame({"time": self.times, "value": self.values})


##############################
# SIMULATION                 #
##############################

def _log_increments(rng, steps, rate, params, dt):
    drift = params.mu - rate - 0.5 * params.sigma ** 2
    return drift * dt + params.sigma * np.sqrt(dt) * rng.standard_normal(steps)


def _euler_path(x0, rng, steps, rate, params, dt):
    shocks = rng.standard_normal(steps)
    values = np.empty(steps + 1)
    values[0] = x0
    floors = 0
    for k in range(steps):
        step = values[k] * (1.0 + (params.mu - rate) * dt + params.sigma * np.sqrt(dt) * shocks[k])
        if step <= 0.0:
            step = POSITIVITY_FLOOR
            floors += 1
        values[k + 1] = step
    if floors:
        logger.warning("Euler-Maruyama hit the positivity floor %d times", floors)
    return values


def simulate_path(x0, rate, params, horizon, dt, seed, scheme=Scheme.EXACT_LOG_NORMAL, path_index=0):
    """Simulate X under the linear policy rate * X.

    Arguments:

    x0 - initial cover (km^2)
    rate - per-year deforestation rate
    params - ModelParams supplying mu and sigma
    horizon - years simulated
    dt - step (years)
    seed - root seed; the path draws from the generator for (seed, path_index)
    scheme - Scheme.EXACT_LOG_NORMAL or Scheme.EULER_MARUYAMA"""

    _validate_positive("x0", x0)
    scheme = Scheme(scheme)
    times = _time_grid(horizon, dt)
    rng = derive_rng(seed, PATH_LABEL, path_index)
    steps = times.size - 1
    if scheme is Scheme.EXACT_LOG_NORMAL:
        increments = _log_increments(rng, steps, rate, params, dt)
        values = np.exp(np.cumsum(np.concatenate([[np.log(x0)], increments])))
    else:
        values = _euler_path(x0, rng, steps, rate, params, dt)
    return Trajectory(times, values, seed, scheme)


def _reflect(log_x0, increments, log_cap, method, uniforms, sigma, dt):
    """Reflect log paths at log_cap, stepping along the last axis."""
    y = np.empty(increments.shape[:-1] + (increments.shape[-1] + 1,))
    y[..., 0] = log_x0
    for k in range(increments.shape[-1]):
        if method is Reflection.FOLD:
            step = y[..., k] + increments[..., k]
            y[..., k + 1] = np.where(step > log_cap, 2.0 * log_cap - step, step)
        else:
            # distance below the cap, reflected at 0 through the bridge minimum
            distance = log_cap - y[..., k]
            change = -increments[..., k]
            low = 0.5 * (change - np.sqrt(change ** 2 - 2.0 * sigma ** 2 * dt * np.log(uniforms[..., k])))
            distance = distance + change + np.maximum(0.0, -(distance + low))
            y[..., k + 1] = log_cap - distance
    return y


def _validate_cap(x0, cap):
    _validate_positive("x0", x0)
    _validate_positive("cap", cap)
    if x0 > cap:
        raise DomainError("Invalid value for x0!  Must be <= cap.")


def simulate_reflected(x0, rate, params, cap, horizon, dt, seed, reflection=Reflection.FOLD, path_index=0):
    """Simulate the exact log-normal scheme reflected at the carrying capacity `cap`.

    Reflection.FOLD folds the log value about ln(cap) after each step; with a
    nonzero drift it matches reflected_tpd and stationary_density only as
    dt -> 0, so use dt <= 0.01 when comparing against them.
    Reflection.BRIDGE applies the exact reflection using the Brownian-bridge
    extremum of each step, drawing one extra uniform per step."""

    _validate_cap(x0, cap)
    reflection = Reflection(reflection)
    times = _time_grid(horizon, dt)
    rng = derive_rng(seed, PATH_LABEL, path_index)
    steps = times.size - 1
    increments = _log_increments(rng, steps, rate, params, dt)
    uniforms = 1.0 - rng.random(steps) if reflection is Reflection.BRIDGE else None
    y = _reflect(np.log(x0), increments, np.log(cap), reflection, uniforms, params.sigma, dt)
    return Trajectory(times, np.minimum(np.exp(y), cap), seed, Scheme.EXACT_LOG_NORMAL)


def _path_chunks(n_paths):
    _validate_positive("n_paths", n_paths)
    starts = np.cumsum([0] + chunk_sizes(int(n_paths), PATH_CHUNK))
    return list(zip(starts[:-1], starts[1:]))


def simulate_paths(x0, rate, params, horizon, dt, seed, n_paths, threads=1):
    """Endpoints of n_paths exact log-normal paths; path i matches simulate_path(..., path_index=i)."""
    _validate_positive("x0", x0)
    steps = _time_grid(horizon, dt).size - 1

    def run(bounds):
        draws = np.stack([_log_increments(derive_rng(seed, PATH_LABEL, i), steps, rate, params, dt)
                          for i in range(*bounds)])
        log_paths = np.cumsum(np.concatenate([np.full((draws.shape[0], 1), np.log(x0)), draws], axis=1), axis=1)
        return np.exp(log_paths[:, -1])

    return np.concatenate(parallel_map(run, _path_chunks(n_paths), threads))


def simulate_reflected_paths(x0, rate, params, cap, horizon, dt, seed, n_paths, reflection=Reflection.FOLD,
                             threads=1):
    """Endpoints of n_paths reflected paths; path i matches simulate_reflected(..., path_index=i)."""
    _validate_cap(x0, cap)
    reflection = Reflection(reflection)
    steps = _time_grid(horizon, dt).size - 1

    def run(bounds):
        increments, uniforms = [], []
        for i in range(*bounds):
            rng = derive_rng(seed, PATH_LABEL, i)
            increments.append(_log_increments(rng, steps, rate, params, dt))
            if reflection is Reflection.BRIDGE:
                uniforms.append(1.0 - rng.random(steps))
        y = _reflect(np.log(x0), np.stack(increments), np.log(cap), reflection,
                     np.stack(uniforms) if uniforms else None, params.sigma, dt)
        return np.minimum(np.exp(y[:, -1]), cap)

    return np.concatenate(parallel_map(run, _path_chunks(n_paths), threads))


def median_cover_path(xbar0, params, prior, equilibrium=None, horizon=10.0, dt=1.0):
    """Deterministic median cover xbar0 * exp((mu - sigma^2/2 - q_tilde_star) t)."""
    _validate_positive("xbar0", xbar0)
    if equilibrium is None:
        equilibrium = q_mfe_stationary(params, prior)
    times = _time_grid(horizon, dt)
    drift = params.threshold - equilibrium.q_tilde_star
    return Trajectory(times, xbar0 * np.exp(drift * times), None, Scheme.EXACT_LOG_NORMAL)


##############################
# DENSITIES                  #
##############################

@dataclasses.dataclass(frozen=True)
class DensitySpec(object):
    mu_star: float
    sigma: float
    x0: float
    cap: float = None

    def __post_init__(self):
        _validate_positive("sigma", self.sigma)
        _validate_positive("x0", self.x0)
        if self.cap is not None:
            _validate_cap(self.x0, self.cap)

    @classmethod
    def from_params(cls, params, rate, x0, cap=None):
        return cls(params.threshold - rate, params.sigma, x0, cap)


def _validate_x(x):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr <= 0.0):
        raise DomainError("Invalid value for x!  Must be > 0.")
    return arr


def _as_output(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def lognormal_tpd(x, t, spec):
    """Transition density of X_t given X_0 = spec.x0 without a cap."""
    if spec.cap is not None:
        raise ValidationError("lognormal_tpd takes a spec without a cap; use reflected_tpd")
    _validate_positive("t", t)
    arr = _validate_x(x)
    scale = spec.sigma * np.sqrt(t)
    exponent = (np.log(arr / spec.x0) - spec.mu_star * t) ** 2 / (2.0 * scale ** 2)
    return _as_output(np.exp(-exponent) / (arr * scale * np.sqrt(2.0 * np.pi)), x)


def _reflected_terms(x, t, spec):
    _validate_positive("t", t)
    if spec.cap is None:
        raise ValidationError("reflected density requires a spec with a cap")
    arr = _validate_x(x)
    log_cap = np.log(spec.cap)
    with np.errstate(divide="ignore"):
        z = log_cap - np.log(np.minimum(arr, spec.cap))
    z0 = log_cap - np.log(spec.x0)
    scale = spec.sigma * np.sqrt(t)
    shift = spec.mu_star * t
    return arr, z, z0, scale, shift, 2.0 * spec.mu_star / spec.sigma ** 2


def reflected_tpd(x, t, spec):
    """Transition density of X_t reflected at spec.cap, zero above the cap."""
    arr, z, z0, scale, shift, k = _reflected_terms(x, t, spec)
    direct = scipy.stats.norm.logpdf((z - z0 + shift) / scale)
    image_arg = (z + z0 - shift) / scale
    image = -k * z + scipy.stats.norm.logpdf(image_arg)
    density = (np.exp(direct) + np.exp(image)) / scale
    if k != 0.0:
        # boundary correction, no 1/scale factor
        correction = np.log(abs(k)) - k * z + scipy.special.log_ndtr(-image_arg)
        density = density + np.sign(k) * np.exp(correction)
    density = np.where(arr > spec.cap, 0.0, np.maximum(density, 0.0) / arr)
    return _as_output(density, x)


def reflected_cdf(x, t, spec):
    """P(X_t <= x) for the process reflected at spec.cap."""
    arr, z, z0, scale, shift, k = _reflected_terms(x, t, spec)
    survival = scipy.special.ndtr((z - z0 + shift) / scale) - np.exp(
        -k * z + scipy.special.log_ndtr((-z - z0 + shift) / scale))
    cdf = np.clip(1.0 - survival, 0.0, 1.0)
    return _as_output(np.where(arr >= spec.cap, 1.0, cdf), x)


def _stationary_rate(params, rate):
    mu_star = params.threshold - rate
    if params.sigma <= 0.0:
        raise ValidationError("Invalid value for sigma!  Must be > 0 for a stationary density.")
    if mu_star <= 0.0:
        raise ValidationError("Stationary density is not integrable: mu - sigma^2/2 - rate = %.6g <= 0" % mu_star)
    return 2.0 * mu_star / params.sigma ** 2


def stationary_density(y, params, rate, cap):
    """Stationary density of ln X on (-inf, ln cap]."""
    _validate_positive("cap", cap)
    k = _stationary_rate(params, rate)
    arr = np.asarray(y, dtype=float)
    excess = arr - np.log(cap)
    density = np.where(excess > 0.0, 0.0, k * np.exp(k * np.minimum(excess, 0.0)))
    return _as_output(density, y)


def stationary_cdf(y, params, rate, cap):
    _validate_positive("cap", cap)
    k = _stationary_rate(params, rate)
    arr = np.asarray(y, dtype=float)
    return _as_output(np.exp(k * np.minimum(arr - np.log(cap), 0.0)), y)


@dataclasses.dataclass(frozen=True, eq=False)
class DensityGrid(object):
    x: np.ndarray
    density: np.ndarray
    cdf: np.ndarray
    t: float
    reflected: bool

    def to_frame(self):
        return pd.DataFrame({"x": self.x, "density": self.density, "cdf": self.cdf})


def density_grid(spec, t, points=201, width=4.0):
    """Evaluate the transition density on a log-spaced grid around the log mean."""
    _validate_positive("t", t)
    center = np.log(spec.x0) + spec.mu_star * t
    spread = width * spec.sigma * np.sqrt(t)
    upper = center + spread if spec.cap is None else min(center + spread, np.log(spec.cap))
    lower = min(center - spread, upper - spread)
    x = np.exp(np.linspace(lower, upper, int(points)))
    if spec.cap is None:
        density = lognormal_tpd(x, t, spec)
        cdf = scipy.stats.norm.cdf((np.log(x / spec.x0) - spec.mu_star * t) / (spec.sigma * np.sqrt(t)))
        return DensityGrid(x, density, cdf, t, False)
    return DensityGrid(x, reflected_tpd(x, t, spec), reflected_cdf(x, t, spec), t, True)


##############################
# COUNTERFACTUAL             #
##############################

@dataclasses.dataclass(frozen=True)
class CounterfactualSummary(object):
    mean_diff_km2: float
    mean_diff_pct: float
    model_gap_km2: float
    counterfactual_rate: float
    sustainability: Sustainability
    published_rate: float = PUBLISHED_COUNTERFACTUAL_RATE
    missing_units: tuple = ()

    def to_dict(self):
        return {
            "mean_diff_km2": self.mean_diff_km2,
            "mean_diff_pct": self.mean_diff_pct,
            "model_gap_km2": self.model_gap_km2,
            "counterfactual_rate": self.counterfactual_rate,
            "sustainability": str(self.sustainability),
            "published_rate": self.published_rate,
            "missing_units": list(self.missing_units),
        }


def counterfactual_panel(panel, params, prior, years, equilibrium=None):
    """Observed, model-predicted and no-belief counterfactual cover at years[1].

    Returns (table, summary); table columns are unit, observed, predicted,
    counterfactual, diff_km2 and diff_pct, the differences being counterfactual
    minus observed. Units without data at years[0] are listed in the summary."""

    t0, t1 = (int(year) for year in years)
    if t1 <= t0:
        raise ValidationError("Invalid value for years!  Must satisfy t0 < t1.")
    if equilibrium is None:
        equilibrium = q_mfe_stationary(params, prior)

    start = panel.at_year(t0)
    end = panel.at_year(t1)
    units = panel.units
    missing = sorted(set(units) - set(start.index))
    missing += sorted(set(start.index) - set(end.index))
    for unit in missing:
        logger.warning("Counterfactual: unit %s lacks data at %d or %d", unit, t0, t1)
    if start.empty:
        raise ValidationError("No panel records at year %d" % t0)

    start = start.sort_index()
    adherence = start["atr_share"].to_numpy()
    elapsed = t1 - t0
    rates = equilibrium.rate_at(adherence)
    counterfactual_rates = equilibrium.rate_at(np.zeros_like(adherence))
    x0 = start["tree_area_km2"].to_numpy()
    predicted = x0 * np.exp((params.threshold - rates) * elapsed)
    counterfactual = x0 * np.exp((params.threshold - counterfactual_rates) * elapsed)
    observed = end["tree_area_km2"].reindex(start.index).to_numpy()

    table = pd.DataFrame({
        "unit": start.index.to_numpy(),
        "observed": observed,
        "predicted": predicted,
        "counterfactual": counterfactual,
    })
    table["diff_km2"] = table["counterfactual"] - table["observed"]
    table["diff_pct"] = 100.0 * table["diff_km2"] / table["observed"]

    counterfactual_rate = float(equilibrium.rate_at(0.0))
    if counterfactual_rate > params.threshold:
        sustainability = Sustainability(SustainabilityKind.UNSUSTAINABLE_FOR_ALL)
    else:
        sustainability = Sustainability(SustainabilityKind.SUSTAINABLE_FOR_ALL)
    summary = CounterfactualSummary(
        mean_diff_km2=float(table["diff_km2"].mean()),
        mean_diff_pct=float(table["diff_pct"].mean()),
        model_gap_km2=float((table["counterfactual"] - table["predicted"]).mean()),
        counterfactual_rate=counterfactual_rate,
        sustainability=sustainability,
        missing_units=tuple(missing),
    )
    logger.info("Counterfactual rate %.6g (published %.4g); mean difference %.6g km2",
                counterfactual_rate, PUBLISHED_COUNTERFACTUAL_RATE, summary.mean_diff_km2)
    return table, summary
