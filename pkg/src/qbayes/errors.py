"""Exception types shared across the inference modules."""


class ImpossibleConditioningError(ValueError):
    """The conditioning record has zero probability under the prior."""


class NonFiniteIntegrandError(ValueError):
    """An integrand returned NaN or an infinite value at a quadrature node."""


class ZeroIntegrandError(ValueError):
    """Every node of a log-space integrand is -inf."""


class QuadratureConvergenceError(RuntimeError):
    """Node doubling hit the cap before the error estimate met tolerance."""


class FringeVisibilityError(ValueError):
    """Count asymmetry exceeds the fringe visibility 2ab/(a^2+b^2)."""


class OracleCapacityError(ValueError):
    """Requested operator dimension exceeds the dense-matrix cap."""


class ConditioningNeverSampledError(RuntimeError):
    """No Monte Carlo replica reproduced the conditioning record."""
