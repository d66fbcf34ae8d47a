"""Quadrature and special-function kernels shared by the inference modules.

Periodic integrals over the phase difference use the uniform trapezoid rule,
which converges spectrally for smooth 2*pi-periodic integrands.  Integrands
that are products of large powers are handled in log space with a max shift.
Integrals over [-1, 1] use Gauss-Legendre rules.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import (
    NonFiniteIntegrandError,
    QuadratureConvergenceError,
    ZeroIntegrandError,
)

TWO_PI = 2.0 * math.pi

DEFAULT_NODES = 2048
MAX_NODES = 2**20
CONVERGENCE_RTOL = 1e-10
# Exponents above this switch count-weighted integrals to the log path.
LOG_PATH_EXPONENT = 30

_EXACT_LOG_FACTORIALS = np.array([math.log(math.factorial(k)) for k in range(21)])


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid of ``node_count`` angles k*2pi/node_count on [0, 2pi)."""

    node_count: int = DEFAULT_NODES
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.node_count
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ValueError(f"node_count must be a power of two >= 8, got {n!r}")
        object.__setattr__(self, "node_count", int(n))
        object.__setattr__(self, "nodes", np.arange(n) * (TWO_PI / n))

    @property
    def spacing(self):
        return TWO_PI / self.node_count

    @property
    def signed_nodes(self):
        """The same angles taken in [-pi, pi), with signed[n - k] == -signed[k] exactly.

        Evaluating even functions here gives bitwise-symmetric values.
        """
        n = self.node_count
        k = np.arange(n)
        return np.where(k <= n // 2, k, k - n) * (TWO_PI / n)

    def refined(self):
        return PeriodicGrid(2 * self.node_count)

    def reflected_index(self):
        """Index map k -> (n - k) mod n, i.e. phi -> 2pi - phi."""
        return (-np.arange(self.node_count)) % self.node_count


def _check_finite(values, nodes):
    bad = ~np.isfinite(values)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise NonFiniteIntegrandError(
            f"integrand is {values[k]!r} at node {k} (phi={nodes[k]!r})"
        )


def periodic_integrate(f, grid, full_output=False):
    """Trapezoid rule for the integral of ``f`` over one period.

    Parameters
    ----------
    f : callable
        Vectorized function of the angle, finite at every node.
    grid : PeriodicGrid
    full_output : bool, optional
        Also return the doubling error estimate |I(2n) - I(n)|, which costs
        one extra evaluation on the midpoints.

    Returns
    -------
    value : float
        ``(2pi/n) * sum(f(nodes))``.
    error : float
        Only when ``full_output`` is true.
    """
    values = np.broadcast_to(np.asarray(f(grid.nodes), dtype=float), grid.nodes.shape)
    _check_finite(values, grid.nodes)
    value = grid.spacing * math.fsum(values)
    if not full_output:
        return value
    mid = grid.nodes + 0.5 * grid.spacing
    mid_values = np.broadcast_to(np.asarray(f(mid), dtype=float), mid.shape)
    _check_finite(mid_values, mid)
    fine = 0.5 * (value + grid.spacing * math.fsum(mid_values))
    return value, abs(fine - value)


@dataclass(frozen=True)
class LogWeightedIntegrand:
    """exp(extra(phi)) * prod_j base_j(phi)**exponent_j, held as logs.

    ``log_terms`` is a sequence of ``(exponent, log_base)`` pairs where
    ``log_base`` maps an angle array to log of a non-negative base (``-inf``
    where the base vanishes).  Zero exponents contribute nothing, even where
    the base is zero.
    """

    log_terms: Sequence = ()
    extra_log_factor: Callable | None = None

    def __post_init__(self):
        terms = tuple((float(e), fn) for e, fn in self.log_terms)
        for e, _ in terms:
            if e < 0 or not math.isfinite(e):
                raise ValueError(f"exponents must be finite and non-negative, got {e}")
        object.__setattr__(self, "log_terms", terms)

    @property
    def max_exponent(self):
        return max((e for e, _ in self.log_terms), default=0.0)

    def log_values(self, phi):
        phi = np.asarray(phi, dtype=float)
        out = np.zeros_like(phi)
        with np.errstate(divide="ignore"):
            for e, log_base in self.log_terms:
                if e == 0.0:
                    continue
                lb = np.asarray(log_base(phi), dtype=float)
                if np.isnan(lb).any() or (lb == np.inf).any():
                    _check_finite(np.where(lb == -np.inf, 0.0, lb), phi)
                out = out + e * lb
        if self.extra_log_factor is not None:
            extra = np.asarray(self.extra_log_factor(phi), dtype=float)
            _check_finite(extra, phi)
            out = out + extra
        return out


def logsumexp_weights(log_values, log_weight=0.0):
    """log(sum(exp(log_values))) + log_weight with -inf entries skipped."""
    log_values = np.asarray(log_values, dtype=float)
    top = log_values.max()
    if top == -np.inf:
        raise ZeroIntegrandError("zero integrand: every node is -inf")
    return top + math.log(math.fsum(np.exp(log_values - top))) + log_weight


def log_integrate(integrand, grid):
    """Log of the trapezoid integral of a LogWeightedIntegrand.

    The maximum node value is factored out before exponentiating, so the
    result stays finite for exponents far beyond the overflow range of
    the direct product.
    """
    lv = integrand.log_values(grid.nodes)
    if np.isnan(lv).any():
        _check_finite(lv, grid.nodes)
    return logsumexp_weights(lv, math.log(grid.spacing))


def weighted_log_integral(integrand, grid):
    """Log integral, taking the direct path when every exponent is <= 30."""
    if integrand.max_exponent <= LOG_PATH_EXPONENT:
        with np.errstate(divide="ignore"):
            value = periodic_integrate(lambda p: np.exp(integrand.log_values(p)), grid)
        if value > 0.0 and math.isfinite(value):
            return math.log(value)
    return log_integrate(integrand, grid)


def converged_log_integral(integrand, node_count=DEFAULT_NODES, rtol=CONVERGENCE_RTOL,
                           max_nodes=MAX_NODES):
    """Double the grid until |I(n) - I(2n)| / |I(2n)| <= rtol.

    Returns ``(log_value, grid)`` where ``grid`` is the n-node grid whose
    integral passed the check against its refinement.
    """
    grid = PeriodicGrid(node_count)
    while True:
        fine = grid.refined()
        lv = integrand.log_values(fine.nodes)
        coarse_log = logsumexp_weights(lv[::2], math.log(grid.spacing))
        fine_log = logsumexp_weights(lv, math.log(fine.spacing))
        if abs(math.expm1(coarse_log - fine_log)) <= rtol:
            return coarse_log, grid
        if fine.node_count >= max_nodes:
            raise QuadratureConvergenceError(
                f"no convergence to rtol={rtol} with {fine.node_count} nodes"
            )
        grid = fine


@lru_cache(maxsize=256)
def gauss_legendre_rule(order):
    """Nodes and weights of the ``order``-point rule on [-1, 1] (read-only)."""
    if order < 1:
        raise ValueError("order must be positive")
    x, w = np.polynomial.legendre.leggauss(int(order))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre_integrate(f, order):
    """Integral of ``f`` over [-1, 1]; exact for degree <= 2*order - 1."""
    if order < 2:
        raise ValueError(f"order must be >= 2, got {order}")
    x, w = gauss_legendre_rule(order)
    values = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
    _check_finite(values, x)
    return float(np.dot(w, values))


def log_factorial(n):
    """log(n!) for a non-negative integer or integer array.

    Values up to 20 come from exact integer factorials; larger arguments use
    the log-gamma function.
    """
    if np.ndim(n) == 0:
        n = int(n)
        if n < 0:
            raise ValueError("log_factorial of a negative number")
        if n <= 20:
            return float(_EXACT_LOG_FACTORIALS[n])
        return math.lgamma(n + 1)
    arr = np.asarray(n)
    if (arr < 0).any():
        raise ValueError("log_factorial of a negative number")
    out = gammaln(arr + 1.0)
    small = arr <= 20
    out[small] = _EXACT_LOG_FACTORIALS[arr[small].astype(int)]
    return out


def log_binomial(n, k):
    return log_factorial(n) - log_factorial(k) - log_factorial(np.subtract(n, k))
