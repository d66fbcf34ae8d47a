"""Phase-difference inference for two coherent beams mixed on a 50/50 splitter.

Under the uniform phase prior every count probability reduces to an average
over the phase difference phi of Poisson factors with the output intensities

    I_c(phi, t) = (a^2 + b^2)/2 + a b cos(phi - dw t)
    I_d(phi, t) = (a^2 + b^2)/2 - a b cos(phi - dw t)

scaled by the detector constant eta.  Past detections weight phi by
prod_i I_c^m_c(i) I_d^m_d(i), which is the phase posterior; predictions
average the Poisson factors of the next package against it.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, xlogy
from scipy.stats import poisson

from .errors import FringeVisibilityError, ImpossibleConditioningError, ZeroIntegrandError
from .numerics import (
    DEFAULT_NODES,
    LOG_PATH_EXPONENT,
    MAX_NODES,
    TWO_PI,
    LogWeightedIntegrand,
    PeriodicGrid,
    converged_log_integral,
    logsumexp_weights,
    weighted_log_integral,
)


@dataclass(frozen=True)
class BeamParams:
    """Beam amplitudes, detector constant and frequency difference."""

    a: float
    b: float
    eta: float
    delta_omega: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "eta", "delta_omega"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.a <= 0 or self.b <= 0:
            raise ValueError("amplitudes a and b must be positive")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")

    @property
    def mean_intensity(self):
        return 0.5 * (self.a**2 + self.b**2)

    @property
    def cross(self):
        return self.a * self.b

    @property
    def visibility(self):
        return 2.0 * self.a * self.b / (self.a**2 + self.b**2)

    @property
    def max_rate(self):
        """Largest single-detector mean count, eta * ((a^2+b^2)/2 + ab)."""
        return self.eta * (self.mean_intensity + self.cross)

    def intensity(self, detector, phi, t=0.0):
        sign = _detector_sign(detector)
        return self.mean_intensity + sign * self.cross * np.cos(np.asarray(phi) - self.delta_omega * t)

    def log_intensity(self, detector, phi, t=0.0):
        with np.errstate(divide="ignore"):
            return np.log(np.clip(self.intensity(detector, phi, t), 0.0, None))

    def default_n_max(self):
        mu = self.max_rate
        return int(math.ceil(mu + 10.0 * math.sqrt(mu) + 20.0))

    def to_dict(self):
        return {"a": self.a, "b": self.b, "eta": self.eta, "delta_omega": self.delta_omega}


def _detector_sign(detector):
    if detector == "c":
        return 1.0
    if detector == "d":
        return -1.0
    raise ValueError(f"detector must be 'c' or 'd', got {detector!r}")


@dataclass(frozen=True)
class DetectionEvent:
    time: float
    m_c: int
    m_d: int

    def __post_init__(self):
        object.__setattr__(self, "time", float(self.time))
        for name in ("m_c", "m_d"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")
            object.__setattr__(self, name, int(v))


@dataclass(frozen=True)
class DetectionHistory:
    """Detection events in strictly increasing time order."""

    events: tuple = ()

    def __post_init__(self):
        events = tuple(e if isinstance(e, DetectionEvent) else DetectionEvent(*e) for e in self.events)
        times = [e.time for e in events]
        if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
            raise ValueError("event times must be strictly increasing")
        object.__setattr__(self, "events", events)

    @classmethod
    def single(cls, m_c, m_d, time=0.0):
        return cls((DetectionEvent(time, m_c, m_d),))

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def append(self, event):
        return DetectionHistory(self.events + (event,))

    def shifted(self, dt):
        return DetectionHistory(tuple(DetectionEvent(e.time + dt, e.m_c, e.m_d) for e in self.events))

    @property
    def total_counts(self):
        return sum(e.m_c + e.m_d for e in self.events)

    @property
    def max_count(self):
        return max((max(e.m_c, e.m_d) for e in self.events), default=0)

    def to_records(self):
        return [{"time": e.time, "m_c": e.m_c, "m_d": e.m_d} for e in self.events]


def _grouped_counts(history, params):
    """Sum counts over events that share the same beat phase dw * t."""
    groups = {}
    for e in history:
        key = params.delta_omega * e.time
        mc, md = groups.get(key, (0, 0))
        groups[key] = (mc + e.m_c, md + e.m_d)
    return groups


def history_integrand(history, params, extra_log_factor=None):
    """LogWeightedIntegrand for prod_i I_c^m_c(i) I_d^m_d(i)."""
    terms = []
    for shift, (mc, md) in _grouped_counts(history, params).items():
        terms.append((mc, _shifted_log_intensity(params, "c", shift)))
        terms.append((md, _shifted_log_intensity(params, "d", shift)))
    return LogWeightedIntegrand(terms, extra_log_factor)


def _shifted_log_intensity(params, detector, shift):
    sign = _detector_sign(detector)

    def log_base(phi):
        with np.errstate(divide="ignore"):
            value = params.mean_intensity + sign * params.cross * np.cos(phi - shift)
            return np.log(np.clip(value, 0.0, None))

    return log_base


@dataclass(frozen=True)
class PhasePosterior:
    """Normalized density over the phase difference on a periodic grid."""

    grid: PeriodicGrid
    density: np.ndarray = field(repr=False)

    @classmethod
    def uniform(cls, node_count=DEFAULT_NODES):
        grid = PeriodicGrid(node_count)
        return cls(grid, np.full(grid.node_count, 1.0 / TWO_PI))

    @classmethod
    def from_log_density(cls, grid, log_density):
        try:
            log_norm = logsumexp_weights(log_density, math.log(grid.spacing))
        except ZeroIntegrandError:
            raise ImpossibleConditioningError("history has zero probability at every phase") from None
        return cls(grid, np.exp(log_density - log_norm))

    @property
    def nodes(self):
        return self.grid.nodes

    def integrate(self, values):
        """Trapezoid integral of density * values; the last axis runs over nodes."""
        return self.grid.spacing * (np.asarray(values, dtype=float) @ self.density)

    def total_mass(self):
        return self.grid.spacing * math.fsum(self.density)

    def mass_near(self, centers, half_width):
        """Mass within ``half_width`` (circular distance) of any center."""
        phi = self.nodes
        mask = np.zeros(phi.shape, dtype=bool)
        for c in np.atleast_1d(centers):
            d = np.abs((phi - c + math.pi) % TWO_PI - math.pi)
            mask |= d <= half_width
        return self.grid.spacing * math.fsum(self.density[mask])

    def reflection_asymmetry(self):
        """max_k |density(phi_k) - density(2pi - phi_k)|."""
        return float(np.max(np.abs(self.density - self.density[self.grid.reflected_index()])))

    def update(self, event, params):
        """Posterior after one more event, using this one as the prior."""
        integrand = history_integrand(DetectionHistory((event,)), params)
        with np.errstate(divide="ignore"):
            log_prior = np.log(self.density)
        return PhasePosterior.from_log_density(self.grid, log_prior + integrand.log_values(self.grid.signed_nodes))

    def columns(self):
        return {"phi": self.nodes, "density": self.density}


def phase_posterior(history, params, node_count=DEFAULT_NODES, adaptive=True):
    """Posterior density of the phase difference after ``history``.

    The grid starts at ``node_count`` nodes and, when ``adaptive``, doubles
    until the normalizing integral agrees with its refinement to 1e-10
    relative.  An empty history gives the uniform density.
    """
    if len(history) == 0:
        return PhasePosterior.uniform(node_count)
    integrand = history_integrand(history, params)
    if adaptive:
        try:
            _, grid = converged_log_integral(integrand, node_count, max_nodes=MAX_NODES)
        except ZeroIntegrandError:
            raise ImpossibleConditioningError("history has zero probability at every phase") from None
    else:
        grid = PeriodicGrid(node_count)
    return PhasePosterior.from_log_density(grid, integrand.log_values(grid.signed_nodes))


@dataclass(frozen=True)
class CountDistribution:
    """Probabilities of 0..n_max counts and the mass beyond n_max."""

    probabilities: np.ndarray
    tail_bound: float

    @property
    def n_max(self):
        return len(self.probabilities) - 1

    def __getitem__(self, n):
        return self.probabilities[n]

    def total(self):
        return math.fsum(self.probabilities) + self.tail_bound

    def mean(self):
        return float(np.dot(np.arange(self.n_max + 1), self.probabilities))

    def columns(self):
        return {"n": np.arange(self.n_max + 1), "probability": self.probabilities}


def _poisson_logpmf(n, mu):
    n = np.asarray(n, dtype=float)
    return xlogy(n, mu) - mu - gammaln(n + 1.0)


def predict_counts(detector, at_time, history, params, n_max=None, node_count=DEFAULT_NODES):
    """Predictive distribution of counts at one detector for the next package.

    ``tail_bound`` is the predictive mass above ``n_max``, integrated from the
    Poisson survival function at each phase; it never exceeds the survival
    function at the largest rate eta((a^2+b^2)/2 + ab).
    """
    n_max = params.default_n_max() if n_max is None else int(n_max)
    post = phase_posterior(history, params, node_count)
    mu = params.eta * np.clip(params.intensity(detector, post.grid.signed_nodes, at_time), 0.0, None)
    n = np.arange(n_max + 1)
    pmf = np.exp(_poisson_logpmf(n[:, None], mu[None, :]))
    probs = post.grid.spacing * (pmf @ post.density)
    tail = post.grid.spacing * float(np.dot(poisson.sf(n_max, mu), post.density))
    return CountDistribution(probs, tail)


def predict_joint(n_c, n_d, at_time, history, params, node_count=DEFAULT_NODES):
    """Joint probability of ``n_c`` counts at c and ``n_d`` at d in the next package."""
    post = phase_posterior(history, params, node_count)
    lc = _poisson_logpmf(n_c, params.eta * np.clip(params.intensity("c", post.grid.signed_nodes, at_time), 0, None))
    ld = _poisson_logpmf(n_d, params.eta * np.clip(params.intensity("d", post.grid.signed_nodes, at_time), 0, None))
    return post.grid.spacing * float(np.dot(np.exp(lc + ld), post.density))


def predict_joint_table(n_max, at_time, history, params, node_count=DEFAULT_NODES):
    """Array P[n_c, n_d] for 0 <= n_c, n_d <= n_max."""
    post = phase_posterior(history, params, node_count)
    n = np.arange(n_max + 1)[:, None]
    pc = np.exp(_poisson_logpmf(n, params.eta * np.clip(params.intensity("c", post.grid.signed_nodes, at_time), 0, None)))
    pd = np.exp(_poisson_logpmf(n, params.eta * np.clip(params.intensity("d", post.grid.signed_nodes, at_time), 0, None)))
    return post.grid.spacing * np.einsum("ik,jk,k->ij", pc, pd, post.density)


def low_intensity_pair(params):
    """First-order P(1,0|1,0) and P(0,1|1,0) for eta (a^2+b^2)/2 << 1.

    The formulas drop the exponential factor; outside the low-intensity
    regime use :func:`predict_joint`.
    """
    s = params.mean_intensity
    k = (params.a * params.b) ** 2 / (params.a**2 + params.b**2)
    return params.eta * (s + k), params.eta * (s - k)


def asymptotic_phase(m_c, m_d, params):
    """cos(phi0) implied by the count asymmetry of a long record.

    Raises
    ------
    FringeVisibilityError
        If the asymmetry exceeds the fringe visibility, so no real phase
        reproduces it.
    """
    total = m_c + m_d
    if total <= 0:
        raise ValueError("need at least one detection")
    cos_phi0 = (params.a**2 + params.b**2) / (2.0 * params.a * params.b) * (m_c - m_d) / total
    if abs(cos_phi0) > 1.0:
        raise FringeVisibilityError(
            f"asymmetry {(m_c - m_d) / total:.6g} exceeds visibility {params.visibility:.6g}"
        )
    return cos_phi0


def log_apriori_counts(m_c, m_d, params, node_count=DEFAULT_NODES):
    integrand = history_integrand(DetectionHistory.single(m_c, m_d), params)
    if max(m_c, m_d) > LOG_PATH_EXPONENT:
        log_int, _ = converged_log_integral(integrand, node_count)
    else:
        log_int = weighted_log_integral(integrand, PeriodicGrid(node_count))
    return ((m_c + m_d) * math.log(params.eta) - math.lgamma(m_c + 1) - math.lgamma(m_d + 1)
            - params.eta * (params.a**2 + params.b**2) + log_int - math.log(TWO_PI))


def apriori_counts(m_c, m_d, params, node_count=DEFAULT_NODES):
    """Prior probability of ``m_c`` counts at c and ``m_d`` at d in one package."""
    return math.exp(log_apriori_counts(m_c, m_d, params, node_count))


def direct_count_distribution(beam, params, n_max=None):
    """Poisson counts with mean eta a^2 (or eta b^2) with the splitter removed."""
    if beam not in ("a", "b"):
        raise ValueError(f"beam must be 'a' or 'b', got {beam!r}")
    mu = params.eta * getattr(params, beam) ** 2
    if n_max is None:
        n_max = int(math.ceil(mu + 10.0 * math.sqrt(mu) + 20.0))
    n = np.arange(n_max + 1)
    return CountDistribution(poisson.pmf(n, mu), float(poisson.sf(n_max, mu)))
