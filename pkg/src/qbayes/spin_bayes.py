"""Bayesian prediction for repeated Pauli measurements on identical qubits.

The hidden state is a Bloch vector drawn from a prior over the ball (or its
surface).  A record counts +1 and -1 outcomes per axis without regard to
order, so the probability of a record carries one binomial factor per axis.
Conditioning on a past record is a ratio of two prior integrals of products
of the Born factors ((1 +/- component)/2)**count.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import xlogy

from .errors import ImpossibleConditioningError
from .numerics import TWO_PI, gauss_legendre_rule, log_factorial, logsumexp_weights

AXES = ("x", "y", "z")
LOG2 = math.log(2.0)


def axis_index(axis):
    if isinstance(axis, (int, np.integer)) and 0 <= axis < 3:
        return int(axis)
    try:
        return AXES.index(axis)
    except ValueError:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}") from None


@dataclass(frozen=True)
class SpinRecord:
    """Unordered outcome counts, ``(plus, minus)`` for each Pauli axis."""

    x: tuple = (0, 0)
    y: tuple = (0, 0)
    z: tuple = (0, 0)

    def __post_init__(self):
        for name in AXES:
            pair = tuple(getattr(self, name))
            if len(pair) != 2:
                raise ValueError(f"{name} counts must be a (plus, minus) pair")
            clean = []
            for c in pair:
                if isinstance(c, bool) or int(c) != c or c < 0:
                    raise ValueError(f"{name} counts must be non-negative integers, got {pair}")
                clean.append(int(c))
            object.__setattr__(self, name, tuple(clean))

    @classmethod
    def from_counts(cls, counts):
        counts = np.asarray(counts)
        if counts.shape != (3, 2):
            raise ValueError("counts must have shape (3, 2)")
        return cls(*(tuple(int(c) for c in row) for row in counts))

    @classmethod
    def single_axis(cls, plus, minus, axis="x"):
        counts = np.zeros((3, 2), dtype=int)
        counts[axis_index(axis)] = plus, minus
        return cls.from_counts(counts)

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - set(AXES)
        if unknown:
            raise ValueError(f"unknown record keys: {sorted(unknown)}")
        return cls(**{k: tuple(v) for k, v in data.items()})

    def to_dict(self):
        return {name: list(getattr(self, name)) for name in AXES}

    @property
    def counts(self):
        return np.array([self.x, self.y, self.z], dtype=np.int64)

    @property
    def total(self):
        return int(self.counts.sum())

    def __add__(self, other):
        return SpinRecord.from_counts(self.counts + other.counts)

    def used_axes(self):
        return [i for i, row in enumerate(self.counts) if row.sum() > 0]

    def log_multiplicity(self):
        """Log of the number of orderings, prod_axis C(plus + minus, plus)."""
        return sum(log_factorial(p + m) - log_factorial(p) - log_factorial(m)
                   for p, m in (self.x, self.y, self.z))


def _trapezoid_weights(x):
    x = np.asarray(x, dtype=float)
    if x.size == 1:
        return np.ones(1)
    d = np.diff(x)
    if (d <= 0).any():
        raise ValueError("grid nodes must be strictly increasing")
    w = np.zeros_like(x)
    w[:-1] += d / 2
    w[1:] += d / 2
    return w


def _gl01(order):
    """Gauss-Legendre rule mapped to [0, 1]."""
    t, w = gauss_legendre_rule(order)
    return (t + 1.0) / 2.0, w / 2.0


def _sphere_points(u, phi):
    s = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    return np.stack([s * np.cos(phi), s * np.sin(phi), u], axis=-1)


@dataclass(frozen=True)
class BlochGrid:
    """A product grid in (cos theta, azimuth, radius) flattened to points.

    ``base_weights`` integrate against d^3x (or dOmega on the surface), so
    a density on the grid is normalized when ``sum(base_weights * density)``
    equals one.
    """

    cos_theta: np.ndarray
    azimuth: np.ndarray
    radius: np.ndarray
    base_weights: np.ndarray

    @property
    def points(self):
        return self.radius[:, None] * _sphere_points(self.cos_theta, self.azimuth)

    @property
    def size(self):
        return self.cos_theta.size

    @classmethod
    def product(cls, cos_theta, cos_w, azimuth, radius, radius_w):
        az_w = TWO_PI / len(azimuth)
        c, a, r = np.meshgrid(cos_theta, azimuth, radius, indexing="ij")
        wc, _, wr = np.meshgrid(cos_w, azimuth, radius_w, indexing="ij")
        return cls(c.ravel(), a.ravel(), r.ravel(), (wc * az_w * wr).ravel())


class BlochPrior:
    """Prior density over Bloch vectors.

    Use the constructors :meth:`uniform_sphere`, :meth:`uniform_ball`,
    :meth:`tabulated` and :meth:`from_density`.
    """

    KINDS = ("uniform-sphere-surface", "uniform-ball", "tabulated")

    def __init__(self, kind, grid=None, density=None):
        if kind not in self.KINDS:
            raise ValueError(f"kind must be one of {self.KINDS}")
        self.kind = kind
        self._grid = grid
        self._density = density
        if kind == "tabulated":
            if density is None or grid is None or density.shape != (grid.size,):
                raise ValueError("tabulated prior needs a grid and one density per node")
            if (density < 0).any() or not np.isfinite(density).all():
                raise ValueError("prior density must be finite and non-negative")
            if (grid.radius > 1.0 + 1e-12).any() or (np.abs(grid.cos_theta) > 1.0 + 1e-12).any():
                raise ValueError("tabulated grid leaves the Bloch ball")
            total = float(np.dot(grid.base_weights, density))
            if abs(total - 1.0) > 1e-8:
                raise ValueError(f"prior density integrates to {total!r}, not 1")

    def __repr__(self):
        if self.kind == "tabulated":
            return f"BlochPrior('tabulated', nodes={self._grid.size})"
        return f"BlochPrior({self.kind!r})"

    @classmethod
    def uniform_sphere(cls):
        return cls("uniform-sphere-surface")

    @classmethod
    def uniform_ball(cls):
        return cls("uniform-ball")

    @classmethod
    def tabulated(cls, cos_theta, azimuth, radius, density, normalize=False):
        """Prior from density values on a (cos theta, azimuth, radius) grid.

        ``density`` has shape ``(len(cos_theta), len(azimuth), len(radius))``.
        Cos theta and radius integrate by the trapezoid rule over the given
        nodes; azimuth must be uniformly spaced over a full period.  A single
        radius node equal to 1 selects the sphere surface with measure dOmega.
        """
        cos_theta = np.asarray(cos_theta, dtype=float)
        azimuth = np.asarray(azimuth, dtype=float)
        radius = np.asarray(radius, dtype=float)
        density = np.asarray(density, dtype=float)
        if density.shape != (cos_theta.size, azimuth.size, radius.size):
            raise ValueError("density shape does not match the grid")
        if azimuth.size > 1:
            step = np.diff(azimuth)
            if not np.allclose(step, TWO_PI / azimuth.size, rtol=0, atol=1e-12):
                raise ValueError("azimuth nodes must be uniform with spacing 2pi/n")
        if radius.size == 1:
            if radius[0] != 1.0:
                raise ValueError("a single radius node must be 1 (sphere surface)")
            radius_w = np.ones(1)
        else:
            radius_w = radius**2 * _trapezoid_weights(radius)
        grid = BlochGrid.product(cos_theta, _trapezoid_weights(cos_theta), azimuth, radius, radius_w)
        flat = density.ravel()
        if normalize:
            flat = flat / np.dot(grid.base_weights, flat)
        return cls("tabulated", grid, flat)

    @classmethod
    def from_density(cls, func, n_cos=128, n_azimuth=128, n_radius=128, surface=False):
        """Tabulate ``func(x, y, z)`` on a Gauss-Legendre product grid and normalize.

        The accuracy of every integral against this prior is limited by the
        grid resolution; posteriors sharper than the node spacing are not
        resolved.
        """
        u, wu = gauss_legendre_rule(n_cos)
        az = np.arange(n_azimuth) * (TWO_PI / n_azimuth)
        if surface:
            r, wr = np.ones(1), np.ones(1)
        else:
            r, wr = _gl01(n_radius)
            wr = wr * r**2
        grid = BlochGrid.product(u, wu, az, r, wr)
        p = grid.points
        density = np.asarray(func(p[:, 0], p[:, 1], p[:, 2]), dtype=float)
        density = np.broadcast_to(density, (grid.size,)).copy()
        if (density < 0).any() or not np.isfinite(density).all():
            raise ValueError("prior density must be finite and non-negative")
        return cls("tabulated", grid, density / np.dot(grid.base_weights, density))

    @property
    def rotation_invariant(self):
        return self.kind != "tabulated"

    def quadrature(self, degree, axis=None):
        """Points and log-weights integrating the prior exactly to ``degree``.

        For the built-in priors the rule is exact for polynomials in the
        Bloch components of total degree ``degree``.  If ``axis`` is given the
        integrand must depend on that component only, and the rule collapses
        to one line along the axis.  Tabulated priors return their own grid.
        """
        if self.kind == "tabulated":
            g = self._grid
            with np.errstate(divide="ignore"):
                return g.points, np.log(g.base_weights * self._density)
        return _builtin_quadrature(self.kind, int(degree), None if axis is None else axis_index(axis))

    def grid(self, n_cos=128, n_azimuth=256, n_radius=64):
        """Tabulation grid and prior density on it (for posteriors)."""
        if self.kind == "tabulated":
            return self._grid, self._density
        u, wu = gauss_legendre_rule(n_cos)
        az = np.arange(n_azimuth) * (TWO_PI / n_azimuth)
        if self.kind == "uniform-sphere-surface":
            g = BlochGrid.product(u, wu, az, np.ones(1), np.ones(1))
            return g, np.full(g.size, 1.0 / (4.0 * math.pi))
        r, wr = _gl01(n_radius)
        g = BlochGrid.product(u, wu, az, r, wr * r**2)
        return g, np.full(g.size, 3.0 / (4.0 * math.pi))

    def to_dict(self):
        if self.kind != "tabulated":
            return {"kind": self.kind}
        g = self._grid
        return {
            "kind": "tabulated",
            "cos_theta": g.cos_theta.tolist(),
            "azimuth": g.azimuth.tolist(),
            "radius": g.radius.tolist(),
            "base_weights": g.base_weights.tolist(),
            "density": self._density.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        kind = data.get("kind")
        if kind == "uniform-sphere-surface":
            return cls.uniform_sphere()
        if kind == "uniform-ball":
            return cls.uniform_ball()
        if kind == "tabulated":
            grid = BlochGrid(*(np.asarray(data[k], dtype=float)
                               for k in ("cos_theta", "azimuth", "radius", "base_weights")))
            return cls("tabulated", grid, np.asarray(data["density"], dtype=float))
        raise ValueError(f"unknown prior kind {kind!r}")


@lru_cache(maxsize=64)
def _builtin_quadrature(kind, degree, axis):
    ball = kind == "uniform-ball"
    u, wu = gauss_legendre_rule(degree // 2 + 2)
    if ball:
        r, wr = _gl01((degree + 3) // 2 + 2)
        wr = 3.0 * r**2 * wr
    else:
        r, wr = np.ones(1), np.ones(1)
    if axis is not None:
        comp = (r[None, :] * u[:, None]).ravel()
        w = (wu[:, None] / 2.0 * wr[None, :]).ravel()
        pts = np.zeros((comp.size, 3))
        pts[:, axis] = comp
    else:
        n_az = max(degree + 2, 4)
        az = np.arange(n_az) * (TWO_PI / n_az)
        g = BlochGrid.product(u, wu / 2.0, az, r, wr)
        pts = g.points
        w = g.base_weights / TWO_PI
    pts.setflags(write=False)
    logw = np.log(w)
    logw.setflags(write=False)
    return pts, logw


def log_likelihood(counts, points):
    """Sum over axes of count * log((1 +/- component)/2) at each point."""
    counts = np.asarray(counts).tolist()
    out = np.zeros(points.shape[0])
    with np.errstate(divide="ignore"):
        for a in range(3):
            plus, minus = counts[a]
            comp = points[:, a]
            if plus:
                out += plus * (np.log1p(comp) - LOG2)
            if minus:
                out += minus * (np.log1p(-comp) - LOG2)
    return out


def _log_prior_integral(counts, prior):
    counts = np.asarray(counts).tolist()
    used = [a for a in range(3) if counts[a][0] + counts[a][1] > 0]
    degree = sum(map(sum, counts))
    axis = None
    if prior.rotation_invariant and len(used) <= 1:
        axis = used[0] if used else 0
    points, logw = prior.quadrature(degree, axis)
    lv = logw + log_likelihood(counts, points)
    top = lv.max()
    if top == -np.inf:
        return -np.inf
    return top + math.log(math.fsum(np.exp(lv - top)))


def log_record_probability(record, prior):
    return record.log_multiplicity() + _log_prior_integral(record.counts, prior)


def record_probability(record, prior):
    """A-priori probability of an unordered record under ``prior``."""
    return math.exp(log_record_probability(record, prior))


def conditional_record(future, past, prior):
    """Probability of the unordered ``future`` record given the ``past`` one.

    Raises
    ------
    ImpossibleConditioningError
        If the past record has zero probability under the prior.
    """
    log_den = _log_prior_integral(past.counts, prior)
    if log_den == -np.inf:
        raise ImpossibleConditioningError(f"past record {past.to_dict()} has zero prior probability")
    log_num = _log_prior_integral(past.counts + future.counts, prior)
    return math.exp(future.log_multiplicity() + log_num - log_den)


def exact_single_axis(n_plus, n_minus, m_plus, m_minus, exact=False):
    """Closed-form single-axis conditional probability for the sphere prior.

    Probability of ``n_plus``/``n_minus`` future outcomes after ``m_plus``/
    ``m_minus`` past ones, uniform prior on the sphere surface.  Arguments
    may be integer arrays (log-space path).  With ``exact=True`` the result
    is a :class:`fractions.Fraction` computed from integer factorials.
    """
    if exact:
        f = math.factorial
        n_plus, n_minus, m_plus, m_minus = (int(v) for v in (n_plus, n_minus, m_plus, m_minus))
        num = (f(n_plus + n_minus) * f(m_plus + m_minus + 1)
               * f(m_plus + n_plus) * f(m_minus + n_minus))
        den = (f(n_plus) * f(n_minus) * f(m_plus + m_minus + n_plus + n_minus + 1)
               * f(m_plus) * f(m_minus))
        return Fraction(num, den)
    lf = log_factorial
    log_p = (lf(np.add(n_plus, n_minus)) - lf(n_plus) - lf(n_minus)
             + lf(np.add(m_plus, m_minus) + 1) + lf(np.add(m_plus, n_plus))
             + lf(np.add(m_minus, n_minus))
             - lf(np.add(np.add(m_plus, m_minus), np.add(n_plus, n_minus)) + 1)
             - lf(m_plus) - lf(m_minus))
    return np.exp(log_p) if np.ndim(log_p) else math.exp(log_p)


def asymptotic_single_axis(n_plus, n_minus, m_plus, m_minus):
    """Binomial prediction with the past frequency as success probability.

    Only meaningful when the past counts are large compared to the future
    ones.
    """
    m = m_plus + m_minus
    if m <= 0:
        raise ValueError("asymptotic form needs at least one past measurement")
    p = m_plus / m
    log_p = (log_factorial(n_plus + n_minus) - log_factorial(n_plus) - log_factorial(n_minus)
             + xlogy(n_plus, p) + xlogy(n_minus, 1.0 - p))
    return math.exp(log_p)


def repeat_probability(n_plus, m_plus, exact=False):
    """P(next ``n_plus`` outcomes all +1 | ``m_plus`` outcomes all +1)."""
    if exact:
        return Fraction(m_plus + 1, m_plus + n_plus + 1)
    return (m_plus + 1) / (m_plus + n_plus + 1)


@dataclass(frozen=True)
class BlochPosterior:
    """Posterior density tabulated on a :class:`BlochGrid`."""

    grid: BlochGrid
    density: np.ndarray

    @property
    def points(self):
        return self.grid.points

    def total_mass(self):
        return float(np.dot(self.grid.base_weights, self.density))

    def mass(self, where):
        """Posterior mass of the region selected by ``where(x, y, z)``."""
        p = self.points
        mask = np.asarray(where(p[:, 0], p[:, 1], p[:, 2]), dtype=bool)
        return float(np.dot(self.grid.base_weights[mask], self.density[mask]))

    def mean(self):
        return (self.grid.base_weights * self.density) @ self.points

    def columns(self):
        g = self.grid
        return {
            "cos_theta": g.cos_theta,
            "azimuth": g.azimuth,
            "radius": g.radius,
            "weight": g.base_weights,
            "density": self.density,
        }


def posterior_bloch_density(past, prior, n_cos=128, n_azimuth=256, n_radius=64):
    """Posterior density over Bloch vectors after the ``past`` record.

    The density is tabulated on the prior's grid (or a Gauss-Legendre grid
    of the given resolution for the built-in priors) and normalized so the
    grid quadrature integrates it to one.  Peaks narrower than the node
    spacing are not resolved.
    """
    grid, prior_density = prior.grid(n_cos, n_azimuth, n_radius)
    with np.errstate(divide="ignore"):
        lv = np.log(prior_density) + log_likelihood(past.counts, grid.points)
        lw = lv + np.log(grid.base_weights)
    if lw.max() == -np.inf:
        raise ImpossibleConditioningError(f"past record {past.to_dict()} has zero prior probability")
    log_norm = logsumexp_weights(lw)
    return BlochPosterior(grid, np.exp(lv - log_norm))
