"""Dense-matrix evaluation of conditional probabilities on a few qubits.

The prior density operator is the Bloch-prior mixture of n-fold tensor powers
of (1 + v.sigma)/2, integrated by quadrature.  Each measurement is a rank-one
Pauli projector on its own qubit, so all the POVM elements commute and the
conditional probability is Tr(Pi E_past E_future) / Tr(Pi E_past).

This module is a test oracle: dimensions are capped at 2**10.
"""

import math
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .errors import ImpossibleConditioningError, OracleCapacityError
from .numerics import TWO_PI, gauss_legendre_rule

MAX_COPIES = 10

IDENTITY = np.eye(2, dtype=complex)
PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def check_density_operator(matrix, atol=1e-12, psd_tol=1e-10):
    m = np.asarray(matrix)
    if not np.allclose(m, m.conj().T, rtol=0, atol=atol):
        raise ValueError("density operator is not Hermitian")
    if abs(np.trace(m) - 1.0) > atol:
        raise ValueError(f"density operator has trace {np.trace(m)}")
    if np.linalg.eigvalsh(m).min() < -psd_tol:
        raise ValueError("density operator is not positive semidefinite")
    return m


def check_povm_element(matrix, atol=1e-12, psd_tol=1e-10):
    m = np.asarray(matrix)
    if not np.allclose(m, m.conj().T, rtol=0, atol=atol):
        raise ValueError("POVM element is not Hermitian")
    ev = np.linalg.eigvalsh(m)
    if ev.min() < -psd_tol or ev.max() > 1.0 + psd_tol:
        raise ValueError("POVM element eigenvalues must lie in [0, 1]")
    return m


@dataclass(frozen=True)
class QubitProductState:
    """``copies`` qubits all in the state with Bloch vector ``bloch``."""

    bloch: tuple
    copies: int = 1

    def __post_init__(self):
        v = tuple(float(c) for c in self.bloch)
        if len(v) != 3:
            raise ValueError("bloch vector needs three components")
        if sum(c * c for c in v) > 1.0 + 1e-12:
            raise ValueError(f"bloch vector {v} lies outside the unit ball")
        if self.copies < 1:
            raise ValueError("copies must be positive")
        object.__setattr__(self, "bloch", v)


def single_qubit_density(bloch):
    x, y, z = bloch
    return 0.5 * (IDENTITY + x * PAULI["x"] + y * PAULI["y"] + z * PAULI["z"])


def single_qubit_projector(axis, sign):
    """Projector (1 + sign * sigma_axis) / 2."""
    if axis not in PAULI:
        raise ValueError(f"axis must be one of {sorted(PAULI)}, got {axis!r}")
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    return 0.5 * (IDENTITY + sign * PAULI[axis])


def product_density(state):
    if state.copies > MAX_COPIES:
        raise OracleCapacityError(f"{state.copies} copies exceeds the cap of {MAX_COPIES}")
    rho = single_qubit_density(state.bloch)
    return reduce(np.kron, [rho] * state.copies)


def _prior_nodes(prior, copies):
    """Bloch vectors and weights for the prior integral of degree ``copies``.

    Built-in priors use Gauss-Legendre in cos theta (and radius for the
    ball) with a uniform azimuth rule, all exact for the polynomial
    integrand; tabulated priors supply their own grid.
    """
    if prior.kind == "tabulated":
        pts, logw = prior.quadrature(copies)
        w = np.exp(logw)
        keep = w > 0
        return pts[keep], w[keep]
    u, wu = gauss_legendre_rule(copies + 2)
    n_az = 2 * copies + 2
    az = np.arange(n_az) * (TWO_PI / n_az)
    if prior.kind == "uniform-ball":
        t, wt = gauss_legendre_rule(copies + 3)
        r, wr = (t + 1) / 2, 3.0 * ((t + 1) / 2) ** 2 * wt / 2
    else:
        r, wr = np.ones(1), np.ones(1)
    pts, ws = [], []
    for ui, wui in zip(u, wu):
        s = math.sqrt(max(0.0, 1.0 - ui * ui))
        for a in az:
            for ri, wri in zip(r, wr):
                pts.append((ri * s * math.cos(a), ri * s * math.sin(a), ri * ui))
                ws.append(wui / 2.0 / n_az * wri)
    return np.array(pts), np.array(ws)


@lru_cache(maxsize=32)
def prior_density_operator(prior, copies):
    """Pi = integral of prior(v) * ((1 + v.sigma)/2)**(tensor copies); read-only."""
    if copies > MAX_COPIES:
        raise OracleCapacityError(f"{copies} copies exceeds the cap of {MAX_COPIES}")
    pts, ws = _prior_nodes(prior, copies)
    dim = 2**copies
    out = np.zeros((dim, dim), dtype=complex)
    for v, w in zip(pts, ws):
        out += w * product_density(QubitProductState(tuple(np.clip(v, -1, 1)), copies))
    out.setflags(write=False)
    return out


def _events_operator(events, copies):
    factors = [IDENTITY] * copies
    for qubit, axis, sign in events:
        factors[qubit] = single_qubit_projector(axis, sign)
    return reduce(np.kron, factors)


def bayes_conditional(prior, copies, past, future):
    """Conditional probability of ``future`` outcomes given ``past`` ones.

    ``past`` and ``future`` are lists of ``(qubit, axis, sign)`` with every
    qubit index distinct, so each outcome is one ordered assignment of
    results to qubits.
    """
    events = list(past) + list(future)
    qubits = [q for q, _, _ in events]
    if len(set(qubits)) != len(qubits):
        raise ValueError("each qubit may be measured at most once")
    if any(q < 0 or q >= copies for q in qubits):
        raise ValueError(f"qubit index out of range for {copies} copies")
    pi = prior_density_operator(prior, copies)
    e_past = _events_operator(past, copies)
    e_future = _events_operator(future, copies)
    den = np.trace(pi @ e_past).real
    if den < 1e-300:
        raise ImpossibleConditioningError("impossible conditioning event")
    num = np.trace(pi @ e_past @ e_future).real
    return num / den
