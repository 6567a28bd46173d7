"""
Model parameters, belief-interaction exponents and elasticities.

Individuals draw utility from the composite good q^g1(a) * xbar^g2(a) under CRRA
curvature gamma, where q is own deforestation, xbar the median forest cover and
a in [0, 1] the individual's adherence to traditional religion.
"""
import dataclasses
import enum
import functools
import json
import logging

import numpy as np
import scipy.integrate
import scipy.special
import scipy.stats

from .errors import DomainError, QuadratureError, ValidationError, WellPosednessError

logger = logging.getLogger(__name__)

DEFAULT_QUADRATURE_NODES = 64
WELL_POSEDNESS_TOLERANCE = 1e-12


class G1Kind(enum.Enum):
    UNIT = "Unit"
    ONE_MINUS_POW_A = "OneMinusPowA"
    ZERO = "Zero"


class G2Kind(enum.Enum):
    ZERO = "Zero"
    POW_A = "PowA"


def _validate_adherence(a):
    arr = np.asarray(a, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("Invalid value for adherence!  Must lie in [0, 1], got %s." % (a,))
    return arr


def _as_output(arr, like):
    if np.ndim(like) == 0:
        return float(arr)
    return arr


def _check_keys(name, data, allowed, required=()):
    if not isinstance(data, dict):
        raise ValidationError("Invalid value for %s!  Must be a JSON object." % name)
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ValidationError("Unknown key(s) for %s: %s" % (name, ", ".join(unknown)))
    missing = sorted(set(required) - set(data))
    if missing:
        raise ValidationError("Missing key(s) for %s: %s" % (name, ", ".join(missing)))


def _validate_real(name, val):
    try:
        val = float(val)
    except (TypeError, ValueError):
        raise ValidationError("Invalid value for %s!  Must be a real number, got %r." % (name, val))
    if not np.isfinite(val):
        raise ValidationError("Invalid value for %s!  Must be finite." % name)
    return val


##############################
# BELIEF-INTERACTION FORMS   #
##############################

@dataclasses.dataclass(frozen=True)
class G1Form(object):
    """Exponent on own deforestation ("the sacred"), nonincreasing in adherence."""

    kind: G1Kind = G1Kind.UNIT
    c: float = 1.0
    k1: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", G1Kind(self.kind))
        object.__setattr__(self, "c", _validate_real("c", self.c))
        object.__setattr__(self, "k1", _validate_real("k1", self.k1))
        if self.kind is G1Kind.ONE_MINUS_POW_A:
            if not 0.0 <= self.c <= 1.0:
                raise ValidationError("Invalid value for c!  Must lie in [0, 1].")
            if self.k1 <= 0.0:
                raise ValidationError("Invalid value for k1!  Must be > 0.")

    @classmethod
    def unit(cls):
        return cls(G1Kind.UNIT)

    @classmethod
    def one_minus_pow_a(cls, c, k1):
        return cls(G1Kind.ONE_MINUS_POW_A, c, k1)

    @classmethod
    def zero(cls):
        return cls(G1Kind.ZERO)

    def evaluate(self, a):
        a = np.asarray(a, dtype=float)
        if self.kind is G1Kind.UNIT:
            return np.ones_like(a)
        if self.kind is G1Kind.ZERO:
            return np.zeros_like(a)
        return 1.0 - self.c * np.power(a, self.k1)

    def to_dict(self):
        if self.kind is G1Kind.ONE_MINUS_POW_A:
            return {"kind": self.kind.value, "c": self.c, "k1": self.k1}
        return {"kind": self.kind.value}

    @classmethod
    def from_dict(cls, data):
        _check_keys("g1_form", data, ("kind", "c", "k1"), ("kind",))
        try:
            kind = G1Kind(data["kind"])
        except ValueError:
            raise ValidationError("Invalid value for g1_form kind!  Must be Unit, OneMinusPowA or Zero.")
        if kind is G1Kind.ONE_MINUS_POW_A:
            _check_keys("g1_form", data, ("kind", "c", "k1"), ("kind", "c", "k1"))
            return cls(kind, data["c"], data["k1"])
        _check_keys("g1_form", data, ("kind",))
        return cls(kind)


@dataclasses.dataclass(frozen=True)
class G2Form(object):
    """Exponent on the median forest cover ("the ecology"), nondecreasing with g2(0) = 0."""

    kind: G2Kind = G2Kind.POW_A
    k2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", G2Kind(self.kind))
        object.__setattr__(self, "k2", _validate_real("k2", self.k2))
        if self.kind is G2Kind.POW_A and self.k2 <= 0.0:
            raise ValidationError("Invalid value for k2!  Must be > 0.")

    @classmethod
    def zero(cls):
        return cls(G2Kind.ZERO)

    @classmethod
    def pow_a(cls, k2=1.0):
        return cls(G2Kind.POW_A, k2)

    def evaluate(self, a):
        a = np.asarray(a, dtype=float)
        if self.kind is G2Kind.ZERO:
            return np.zeros_like(a)
        return np.power(a, self.k2)

    def to_dict(self):
        if self.kind is G2Kind.POW_A:
            return {"kind": self.kind.value, "k2": self.k2}
        return {"kind": self.kind.value}

    @classmethod
    def from_dict(cls, data):
        _check_keys("g2_form", data, ("kind", "k2"), ("kind",))
        try:
            kind = G2Kind(data["kind"])
        except ValueError:
            raise ValidationError("Invalid value for g2_form kind!  Must be Zero or PowA.")
        if kind is G2Kind.POW_A:
            _check_keys("g2_form", data, ("kind", "k2"), ("kind", "k2"))
            return cls(kind, data["k2"])
        _check_keys("g2_form", data, ("kind",))
        return cls(kind)


##############################
# PARAMETERS                 #
##############################

@dataclasses.dataclass(frozen=True)
class ModelParams(object):
    """Ecological and preference parameters.

    Arguments:

    mu - per-year natural forest growth rate
    sigma - per-sqrt(year) diffusion of forest cover
    rho - per-year discount rate
    gamma - CRRA curvature, > 0 and != 1
    g1_form - exponent family on own deforestation
    g2_form - exponent family on the median forest cover"""

    mu: float
    sigma: float
    rho: float
    gamma: float
    g1_form: G1Form = G1Form()
    g2_form: G2Form = G2Form()

    _fields = ("mu", "sigma", "rho", "gamma", "g1_form", "g2_form")

    def __post_init__(self):
        for name in ("mu", "sigma", "rho", "gamma"):
            object.__setattr__(self, name, _validate_real(name, getattr(self, name)))
        if not isinstance(self.g1_form, G1Form):
            raise ValidationError("Invalid value for g1_form!  Must be a G1Form.")
        if not isinstance(self.g2_form, G2Form):
            raise ValidationError("Invalid value for g2_form!  Must be a G2Form.")
        if self.sigma < 0.0:
            raise ValidationError("Invalid value for sigma!  Must be >= 0.")
        if self.rho <= 0.0:
            raise ValidationError("Invalid value for rho!  Must be > 0.")
        if self.gamma <= 0.0 or self.gamma == 1.0:
            raise ValidationError("Invalid value for gamma!  Must be > 0 and != 1 (log utility is excluded).")
        margin = self.well_posedness_margin
        if margin < -WELL_POSEDNESS_TOLERANCE:
            raise WellPosednessError(
                "Parameters are not well posed: rho - mu*(1-gamma) - sigma^2/2*gamma*(1-gamma) = %.6g < 0" % margin)

    @property
    def threshold(self):
        """Sustainability threshold mu - sigma^2/2: rates above it deplete the forest almost surely."""
        return self.mu - 0.5 * self.sigma ** 2

    @property
    def well_posedness_margin(self):
        one_minus_gamma = 1.0 - self.gamma
        return self.rho - self.mu * one_minus_gamma - 0.5 * self.sigma ** 2 * self.gamma * one_minus_gamma

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return {
            "mu": self.mu,
            "sigma": self.sigma,
            "rho": self.rho,
            "gamma": self.gamma,
            "g1_form": self.g1_form.to_dict(),
            "g2_form": self.g2_form.to_dict(),
        }

    @classmethod
    def from_dict(cls, data):
        _check_keys("ModelParams", data, cls._fields, ("mu", "sigma", "rho", "gamma"))
        g1_form = G1Form.from_dict(data["g1_form"]) if "g1_form" in data else G1Form.unit()
        g2_form = G2Form.from_dict(data["g2_form"]) if "g2_form" in data else G2Form.pow_a(1.0)
        return cls(data["mu"], data["sigma"], data["rho"], data["gamma"], g1_form, g2_form)

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except ValueError as exc:
            raise ValidationError("ModelParams is not valid JSON: %s" % exc)
        return cls.from_dict(data)


@dataclasses.dataclass(frozen=True)
class BeliefPrior(object):
    """Beta(alpha, beta) distribution of adherence across the population."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            val = _validate_real(name, getattr(self, name))
            if val <= 0.0:
                raise ValidationError("Invalid value for %s!  Must be > 0." % name)
            object.__setattr__(self, name, val)

    @property
    def mean(self):
        return self.alpha / (self.alpha + self.beta)

    @property
    def variance(self):
        total = self.alpha + self.beta
        return self.alpha * self.beta / (total ** 2 * (total + 1.0))

    def raw_moment(self, k):
        """E[a^k] for integer k >= 0, from the product formula."""
        moment = 1.0
        for j in range(int(k)):
            moment *= (self.alpha + j) / (self.alpha + self.beta + j)
        return moment

    def pdf(self, a):
        return scipy.stats.beta.pdf(a, self.alpha, self.beta)

    def cdf(self, a):
        return scipy.stats.beta.cdf(a, self.alpha, self.beta)

    def sample(self, rng, size):
        return rng.beta(self.alpha, self.beta, size=size)

    def to_dict(self):
        return {"alpha": self.alpha, "beta": self.beta}

    @classmethod
    def from_dict(cls, data):
        _check_keys("BeliefPrior", data, ("alpha", "beta"), ("alpha", "beta"))
        return cls(data["alpha"], data["beta"])

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except ValueError as exc:
            raise ValidationError("BeliefPrior is not valid JSON: %s" % exc)
        return cls.from_dict(data)


# Estimates from the arrondissement panel
CALIBRATED_PARAMS = ModelParams(mu=0.0482, sigma=0.258, rho=0.0487, gamma=2.272)
CALIBRATED_PRIOR = BeliefPrior(alpha=0.553, beta=2.251)


@dataclasses.dataclass(frozen=True)
class Elasticities(object):
    eps_q: object
    nu_q: object
    nu_xbar: object


##############################
# OPERATIONS                 #
##############################

def g1(a, params):
    arr = _validate_adherence(a)
    return _as_output(params.g1_form.evaluate(arr), a)


def g2(a, params):
    arr = _validate_adherence(a)
    return _as_output(params.g2_form.evaluate(arr), a)


def elasticities(a, params):
    """Elasticities at adherence a (scalar or array).

    eps_q is the elasticity of intertemporal substitution for forest use,
    nu_q and nu_xbar the utility elasticities of own use and of the median cover."""

    arr = _validate_adherence(a)
    one_minus_gamma = 1.0 - params.gamma
    nu_q = params.g1_form.evaluate(arr) * one_minus_gamma
    nu_xbar = params.g2_form.evaluate(arr) * one_minus_gamma
    denominator = 1.0 - nu_q
    if np.any(denominator <= 0.0):
        raise WellPosednessError("1 - g1(a)*(1-gamma) must be > 0 for every adherence")
    eps_q = 1.0 / denominator
    return Elasticities(_as_output(eps_q, a), _as_output(nu_q, a), _as_output(nu_xbar, a))


@functools.lru_cache(maxsize=256)
def _quadrature_rule(alpha, beta, nodes, method):
    if method == "jacobi":
        x, w = scipy.special.roots_jacobi(nodes, beta - 1.0, alpha - 1.0)
        points = 0.5 * (1.0 + x)
        weights = w / w.sum()
    elif method == "legendre":
        x, w = np.polynomial.legendre.leggauss(nodes)
        points = 0.5 * (1.0 + x)
        weights = 0.5 * w * scipy.stats.beta.pdf(points, alpha, beta)
    else:
        raise ValidationError("Invalid value for quadrature method!  Must be jacobi, legendre or adaptive.")
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


def quadrature_rule(prior, nodes=DEFAULT_QUADRATURE_NODES, method="jacobi"):
    """Nodes and weights integrating against the prior's density on [0, 1]."""
    return _quadrature_rule(prior.alpha, prior.beta, int(nodes), method)


def _evaluate_vectorized(f, points):
    values = np.asarray(f(points), dtype=float)
    if values.shape != points.shape:
        values = np.array([float(f(p)) for p in points])
    return values


def belief_moment(prior, f, method="jacobi", nodes=DEFAULT_QUADRATURE_NODES, tol=1e-10):
    """Return the integral of f(a) against the Beta prior on [0, 1].

    Arguments:

    prior - BeliefPrior
    f - function of adherence, vectorized over numpy arrays if possible
    method - "jacobi" (Beta-weighted Gauss-Jacobi), "legendre" or "adaptive"
    nodes - number of quadrature nodes for the fixed-order rules
    tol - accepted absolute error estimate for the adaptive rule"""

    if method == "adaptive":
        value, error = scipy.integrate.quad(
            lambda a: float(f(a)), 0.0, 1.0, weight="alg", wvar=(prior.alpha - 1.0, prior.beta - 1.0),
            epsabs=tol, epsrel=tol, limit=200)
        if error > tol:
            raise QuadratureError("Adaptive quadrature did not reach the requested accuracy", residual=error)
        return value / scipy.special.beta(prior.alpha, prior.beta)
    points, weights = quadrature_rule(prior, nodes, method)
    return float(np.dot(weights, _evaluate_vectorized(f, points)))
