"""
Pentecostal-exposure instrument: exposure from Nigeria (haversine distance to
the Yoruba homeland times linguistic distance to Yoruba, over Pentecostal
density) scaled by within-Benin radio exposure.
"""
import dataclasses
import logging

import numpy as np
import pandas as pd
import statsmodels.api as sm

from .errors import DegenerateSampleError, DomainError, ValidationError, WeakInstrumentError

logger = logging.getLogger(__name__)

EARTH_RADIUS_KM = 6371.0088
DIPOLE_GAIN_DB = 2.15
DEFAULT_LAMBDA = 0.5
DEFAULT_FLOOR_DBM = -90.0
MIN_DISTANCE_KM = 1e-4
MIN_F_STAT = 10.0
# Oyo, centre of the Yoruba ethnic homeland
YORUBA_HOMELAND = (7.85, 3.93)
VARIANTS = {"full": "z", "no-hd": "z_no_hd", "no-rp": "z_no_rp"}
EXPOSURE_COLUMNS = ("unit_id", "year", "hd_km", "ld", "pent_density", "rp_c", "z", "z_no_hd", "z_no_rp")


def _validate_coordinates(lat, lon):
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    if np.any(np.isnan(lat)) or np.any(np.abs(lat) > 90.0):
        raise DomainError("Invalid value for lat!  Must be in [-90, 90].")
    if np.any(np.isnan(lon)) or np.any(np.abs(lon) > 180.0):
        raise DomainError("Invalid value for lon!  Must be in [-180, 180].")
    return lat, lon


@dataclasses.dataclass(frozen=True)
class LanguageClassification(object):
    language_name: str
    nodes: tuple

    def __post_init__(self):
        nodes = tuple(str(node).strip() for node in self.nodes)
        if not nodes or any(not node for node in nodes):
            raise ValidationError("Invalid value for nodes of %s!  Must be non-empty labels." % self.language_name)
        if any(a == b for a, b in zip(nodes, nodes[1:])):
            raise ValidationError("Invalid value for nodes of %s!  Repeated consecutive label." % self.language_name)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def from_string(cls, text, name=None, separator=";"):
        nodes = tuple(node for node in text.split(separator))
        return cls(name if name is not None else nodes[-1].strip(), nodes)


YORUBA = LanguageClassification("Yoruba", ("Niger-Congo", "Atlantic-Congo", "Volta-Congo", "Benue-Congo",
                                           "Defoid", "Yoruboid", "Yoruba"))


@dataclasses.dataclass(frozen=True)
class TransmitterSpec(object):
    name: str
    lat: float
    lon: float
    freq_mhz: float
    erp_dbm: float
    year_active: int

    def __post_init__(self):
        _validate_coordinates(self.lat, self.lon)
        if not self.freq_mhz > 0.0:
            raise ValidationError("Invalid value for freq_mhz!  Must be > 0.")


@dataclasses.dataclass(frozen=True)
class ExposureRow(object):
    unit_id: str
    year: int
    hd_km: float
    ld: float
    pent_density: float
    rp_c: float
    z: float
    z_no_hd: float
    z_no_rp: float


def linguistic_distance(l1, l2, lam=DEFAULT_LAMBDA):
    """1 - (shared / mean node count)^lam, shared being the common root-to-leaf prefix."""
    if not 0.0 <= lam <= 1.0:
        raise ValidationError("Invalid value for lambda!  Must be in [0, 1].")
    shared = 0
    for a, b in zip(l1.nodes, l2.nodes):
        if a != b:
            break
        shared += 1
    ratio = shared / (0.5 * (len(l1.nodes) + len(l2.nodes)))
    if ratio == 0.0:
        return 1.0
    return 1.0 - ratio ** lam


def haversine_km(lat1, lon1, lat2, lon2):
    lat1, lon1 = _validate_coordinates(lat1, lon1)
    lat2, lon2 = _validate_coordinates(lat2, lon2)
    phi1, phi2 = np.radians(lat1), np.radians(lat2)
    half_dphi = 0.5 * (phi2 - phi1)
    half_dlambda = 0.5 * np.radians(lon2 - lon1)
    h = np.sin(half_dphi) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(half_dlambda) ** 2
    distance = 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))
    return float(distance) if np.ndim(distance) == 0 else distance


def free_space_loss_db(freq_mhz, d_km):
    return 32.45 + 20.0 * np.log10(freq_mhz) + 20.0 * np.log10(d_km)


def free_space_signal_dbm(tx, lat, lon, dipole_gain_db=DIPOLE_GAIN_DB):
    """Received free-space signal: ERP converted to EIRP minus the free-space path loss."""
    distance = haversine_km(tx.lat, tx.lon, lat, lon)
    if np.any(np.asarray(distance) <= MIN_DISTANCE_KM):
        raise DomainError("Receiver within %g km of transmitter %s" % (MIN_DISTANCE_KM, tx.name))
    return tx.erp_dbm + dipole_gain_db - free_space_loss_db(tx.freq_mhz, distance)


def best_signal_dbm(transmitters, lat, lon, year, dipole_gain_db=DIPOLE_GAIN_DB):
    """Strongest signal over transmitters active in `year`; NaN when none is."""
    signals = [free_space_signal_dbm(tx, lat, lon, dipole_gain_db) for tx in transmitters if tx.year_active <= year]
    return float(max(signals)) if signals else float("nan")


def normalize_exposure(signals, floor_dbm=DEFAULT_FLOOR_DBM):
    """Map signals (dBm, NaN for no active transmitter) to rp_c in [0, 1].

    Signals below the floor and missing signals count as the floor. The sample
    maximum maps to 0 and the floor to 1; without variation every value is 1."""

    arr = np.asarray(signals, dtype=float)
    if arr.size == 0:
        raise ValidationError("Invalid value for signals!  Must be non-empty.")
    clipped = np.where(np.isnan(arr), floor_dbm, np.maximum(arr, floor_dbm))
    best = clipped.max()
    if best == clipped.min():
        return np.ones_like(clipped)
    return (best - clipped) / (best - floor_dbm)


def pentecostal_density(count, land_area_km2):
    if not land_area_km2 > 0.0:
        raise ValidationError("Invalid value for land_area_km2!  Must be > 0.")
    return count / land_area_km2


def z_index(unit_id, year, hd_km, ld, pent_density, rp_c):
    """ExposureRow with z = (hd_km * ld / pent_density) * rp_c and its HD- and RP-dropped variants."""
    if not pent_density > 0.0:
        raise ValidationError("Invalid value for pent_density!  Must be > 0.")
    if hd_km < 0.0:
        raise ValidationError("Invalid value for hd_km!  Must be >= 0.")
    if not 0.0 <= ld <= 1.0 or not 0.0 <= rp_c <= 1.0:
        raise ValidationError("Invalid value for ld or rp_c!  Must be in [0, 1].")
    nigeria = hd_km * ld / pent_density
    return ExposureRow(str(unit_id), int(year), hd_km, ld, pent_density, rp_c,
                       z=nigeria * rp_c, z_no_hd=ld / pent_density * rp_c, z_no_rp=nigeria)


def build_exposure(units, transmitters, density, lam=DEFAULT_LAMBDA, floor_dbm=DEFAULT_FLOOR_DBM,
                   homeland=YORUBA_HOMELAND, reference=YORUBA, dipole_gain_db=DIPOLE_GAIN_DB):
    """Assemble ExposureRows for every unit and density year.

    Arguments:

    units - DataFrame with unit_id, lat, lon and language (LanguageClassification)
    transmitters - TransmitterSpec list
    density - DataFrame with year, pentecostal_count, land_area_km2
    lam - linguistic-distance exponent
    floor_dbm - signal floor of the radio normalization
    homeland - (lat, lon) the haversine distance is measured to"""

    years = sorted(int(year) for year in density["year"])
    densities = {int(row.year): pentecostal_density(row.pentecostal_count, row.land_area_km2)
                 for row in density.itertuples(index=False)}
    keys, hd, ld, signals = [], [], [], []
    for unit in units.itertuples(index=False):
        distance = haversine_km(unit.lat, unit.lon, homeland[0], homeland[1])
        language_distance = linguistic_distance(unit.language, reference, lam)
        for year in years:
            keys.append((unit.unit_id, year))
            hd.append(distance)
            ld.append(language_distance)
            signals.append(best_signal_dbm(transmitters, unit.lat, unit.lon, year, dipole_gain_db))
    if not keys:
        raise ValidationError("No unit-years to build exposure for")
    rp = normalize_exposure(signals, floor_dbm)
    logger.info("Built %d exposure rows (lambda=%g, floor=%g dBm)", len(keys), lam, floor_dbm)
    return [z_index(unit_id, year, hd[i], ld[i], densities[year], float(rp[i]))
            for i, (unit_id, year) in enumerate(keys)]


def exposure_frame(rows):
    return pd.DataFrame([dataclasses.astuple(row) for row in rows], columns=list(EXPOSURE_COLUMNS))


##############################
# TWO-STAGE LEAST SQUARES    #
##############################

@dataclasses.dataclass(frozen=True)
class IVResult(object):
    beta_iv: float
    se_iv: float
    first_stage_coef: float
    f_stat: float
    beta_ols: float
    se_ols: float
    n_obs: int

    def to_dict(self):
        return dataclasses.asdict(self)


def _demean(values, groups):
    return values - pd.Series(values).groupby(groups).transform("mean").to_numpy()


def iv_2sls(y, x_endog, z, group_ids=None, min_f_stat=MIN_F_STAT):
    """Just-identified 2SLS of y on x_endog instrumented by z, with HC1 errors.

    Arguments:

    y, x_endog, z - equal-length vectors, more than 10 observations
    group_ids - optional labels for within-group demeaning
    min_f_stat - first-stage F below which the instrument is rejected as weak"""

    y, x, z = (np.asarray(v, dtype=float).ravel() for v in (y, x_endog, z))
    n = y.size
    if not x.size == z.size == n:
        raise ValidationError("Invalid value for iv_2sls inputs!  Must have equal lengths.")
    if n <= 10:
        raise DegenerateSampleError("iv_2sls needs more than 10 observations")
    if group_ids is not None:
        groups = pd.Series(np.asarray(group_ids)).astype(str).to_numpy()
        y, x, z = (_demean(v, groups) for v in (y, x, z))

    first = sm.OLS(x, sm.add_constant(z, has_constant="add")).fit(cov_type="HC1")
    coef, error = first.params[1], first.bse[1]
    f_stat = float("inf") if error == 0.0 else float((coef / error) ** 2)
    zc, xc, yc = z - z.mean(), x - x.mean(), y - y.mean()
    denominator = np.dot(zc, xc)
    if abs(denominator) <= 1e-12 * np.sqrt(np.dot(zc, zc) * np.dot(xc, xc)) or f_stat < min_f_stat:
        raise WeakInstrumentError("Weak instrument: first-stage F = %.3g < %g" % (f_stat, min_f_stat))

    beta = np.dot(zc, yc) / denominator
    residuals = yc - beta * xc
    se = np.sqrt(np.sum((zc * residuals) ** 2) / denominator ** 2 * n / (n - 2))
    ols = sm.OLS(y, sm.add_constant(x, has_constant="add")).fit(cov_type="HC1")
    logger.info("2SLS: beta_iv=%.6g (%.3g), OLS %.6g, first-stage F %.4g", beta, se, ols.params[1], f_stat)
    return IVResult(float(beta), float(se), float(coef), f_stat, float(ols.params[1]), float(ols.bse[1]), int(n))
