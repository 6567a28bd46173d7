"""
Deterministic synthetic data drawn from the model.

Every generator takes a root seed and draws from generators derived from
(seed, generator label), so outputs are reproducible bit for bit.
"""
import logging

import numpy as np
import pandas as pd

from .equilibrium import q_mfe_stationary
from .instrument import LanguageClassification, TransmitterSpec, YORUBA
from .model import CALIBRATED_PARAMS, CALIBRATED_PRIOR
from .panel import Panel
from .utils import DEFAULT_SEED, derive_rng

logger = logging.getLogger(__name__)

CENSUS_YEARS = (1992, 2002, 2013)
PANEL_UNITS = 546


def beliefs_sample(prior=CALIBRATED_PRIOR, n=PANEL_UNITS, seed=DEFAULT_SEED):
    return prior.sample(derive_rng(seed, "synthetic-beliefs"), n)


def gbm_panel(mu=CALIBRATED_PARAMS.mu, sigma=CALIBRATED_PARAMS.sigma, n_units=600, n_years=35, start_year=1980,
              seed=DEFAULT_SEED, region="WAP"):
    """Uncontrolled GBM cover for n_units over n_years consecutive years."""
    rng = derive_rng(seed, "synthetic-gbm")
    x0 = np.exp(rng.normal(np.log(50.0), 0.5, n_units))
    shocks = rng.standard_normal((n_units, n_years - 1))
    log_paths = np.cumsum(np.column_stack([np.log(x0), (mu - 0.5 * sigma ** 2) + sigma * shocks]), axis=1)
    years = start_year + np.arange(n_years)
    frame = pd.DataFrame({
        "unit_id": np.repeat(["u%04d" % i for i in range(n_units)], n_years),
        "year": np.tile(years, n_units),
        "tree_area_km2": np.exp(log_paths).ravel(),
        "atr_share": 0.0,
        "region": region,
    })
    return Panel(frame)


def _stacked_years(census_years):
    years = set()
    for year in census_years:
        years.update((year, year + 1))
    return sorted(years)


def model_panel(params=CALIBRATED_PARAMS, prior=CALIBRATED_PRIOR, n_units=PANEL_UNITS, census_years=CENSUS_YEARS,
                seed=DEFAULT_SEED, equilibrium=None):
    """Units following their equilibrium policy, observed in each census year and the year after.

    Adherence is drawn once per unit from the prior; cover evolves by exact
    log-normal steps over the gaps between observed years."""

    if equilibrium is None:
        equilibrium = q_mfe_stationary(params, prior)
    rng = derive_rng(seed, "synthetic-model-panel")
    adherence = prior.sample(rng, n_units)
    rates = np.asarray(equilibrium.rate_at(adherence))
    years = np.asarray(_stacked_years(census_years))
    gaps = np.diff(years)
    x0 = np.exp(rng.normal(np.log(50.0), 0.5, n_units))
    shocks = rng.standard_normal((n_units, gaps.size))
    drift = (params.threshold - rates)[:, None] * gaps[None, :]
    log_paths = np.cumsum(np.column_stack([np.log(x0), drift + params.sigma * np.sqrt(gaps) * shocks]), axis=1)
    frame = pd.DataFrame({
        "unit_id": np.repeat(["a%04d" % i for i in range(n_units)], years.size),
        "year": np.tile(years, n_units),
        "tree_area_km2": np.exp(log_paths).ravel(),
        "atr_share": np.repeat(adherence, years.size),
    })
    logger.debug("Synthetic model panel: %d units, years %s", n_units, list(years))
    return Panel(frame)


LANGUAGES = (
    YORUBA,
    LanguageClassification("Baatonum", ("Niger-Congo", "Atlantic-Congo", "Volta-Congo", "North", "Gur",
                                         "Baatonum")),
    LanguageClassification("Fon", ("Niger-Congo", "Atlantic-Congo", "Volta-Congo", "Kwa", "Left Bank", "Gbe",
                                    "Fon")),
    LanguageClassification("Dendi", ("Nilo-Saharan", "Songhay", "Southern", "Dendi")),
)

TRANSMITTERS = (
    TransmitterSpec("RM1", 6.37, 2.43, 96.5, 67.0, 1997),
    TransmitterSpec("RM2", 9.34, 2.63, 99.1, 64.0, 2003),
    TransmitterSpec("RA", 6.50, 2.60, 101.3, 63.0, 2006),
)


def instrument_inputs(n_units=40, seed=DEFAULT_SEED, census_years=CENSUS_YEARS):
    """(units, transmitters, density) over Benin-like coordinates."""
    rng = derive_rng(seed, "synthetic-instrument")
    units = pd.DataFrame({
        "unit_id": ["r%03d" % i for i in range(n_units)],
        "lat": rng.uniform(6.3, 12.3, n_units),
        "lon": rng.uniform(1.0, 3.8, n_units),
        "language": [LANGUAGES[i] for i in rng.integers(0, len(LANGUAGES), n_units)],
    })
    density = pd.DataFrame({
        "year": list(census_years),
        "pentecostal_count": [2.0e6 * 1.6 ** i for i in range(len(census_years))],
        "land_area_km2": 910770.0,
    })
    return units, list(TRANSMITTERS), density


def endogenous_iv_sample(n=2000, beta=1.0, strength=0.5, endogeneity=0.8, seed=DEFAULT_SEED):
    """(y, x, z) with x correlated with the structural error and z a valid instrument."""
    rng = derive_rng(seed, "synthetic-iv")
    z = rng.standard_normal(n)
    error = rng.standard_normal(n)
    x = strength * z + endogeneity * error + rng.standard_normal(n)
    y = beta * x + error
    return y, x, z
