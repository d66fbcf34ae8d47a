"""Published verification cases and report generation.

Each Monte Carlo case pairs a rejection estimate with the closed-form or
quadrature value it should reproduce within three standard errors.  The
oracle suite compares the dense-matrix engine against the single-axis
closed form.
"""

import itertools
import math

from .laser_phase import BeamParams, DetectionEvent, DetectionHistory, predict_counts, predict_joint
from .montecarlo import LaserCase, LaserRatioCase, SeededStream, SpinCase, estimate_conditional
from .operator_oracle import bayes_conditional
from .spin_bayes import BlochPrior, SpinRecord, conditional_record, exact_single_axis

DEFAULT_REPLICAS = 1_000_000
DEFAULT_SEED = 20051017
N_SIGMA = 3.0
ORACLE_TOL = 1e-10

R = SpinRecord
_SPHERE = BlochPrior.uniform_sphere()
_BALL = BlochPrior.uniform_ball()
_EQUAL = BeamParams(1.0, 1.0, 0.3)
_UNEQUAL = BeamParams(1.0, 0.7, 0.5, delta_omega=1.2)
_EMPTY = DetectionHistory()


def _h(*events):
    return DetectionHistory(tuple(DetectionEvent(*e) for e in events))


MONTE_CARLO_CASES = [
    ("spin P(x+ | x+) sphere", SpinCase(R(x=(1, 0)), R(x=(1, 0)), _SPHERE)),
    ("spin P(x+,x- | 2x+,x-) sphere", SpinCase(R(x=(1, 1)), R(x=(2, 1)), _SPHERE)),
    ("spin P(2x+,x-) sphere", SpinCase(R(x=(2, 1)), R(), _SPHERE)),
    ("spin P(x+,y+) sphere", SpinCase(R(x=(1, 0), y=(1, 0)), R(), _SPHERE)),
    ("spin P(2z+ | 3z+) sphere", SpinCase(R(z=(2, 0)), R(z=(3, 0)), _SPHERE)),
    ("spin P(y+ | 2x+,y+) sphere", SpinCase(R(y=(1, 0)), R(x=(2, 0), y=(1, 0)), _SPHERE)),
    ("spin P(2x- | x+,3x-) sphere", SpinCase(R(x=(0, 2)), R(x=(1, 3)), _SPHERE)),
    ("spin P(x+ | 2x+) ball", SpinCase(R(x=(1, 0)), R(x=(2, 0)), _BALL)),
    ("spin P(z-,x+ | z+,x+) ball", SpinCase(R(x=(1, 0), z=(0, 1)), R(x=(1, 0), z=(1, 0)), _BALL)),
    ("laser P(1,0) a priori", LaserCase(_EMPTY, _EQUAL, n_c=1, n_d=0)),
    ("laser P(N_c=1 | 1,0)", LaserCase(_h((0.0, 1, 0)), _EQUAL, n_c=1)),
    ("laser P(1,0 | 1,0)", LaserCase(_h((0.0, 1, 0)), _EQUAL, n_c=1, n_d=0)),
    ("laser P(0,1 | 1,0)", LaserCase(_h((0.0, 1, 0)), _EQUAL, n_c=0, n_d=1)),
    ("laser ratio P(1,0|1,0)/P(0,1|1,0) a=b", LaserRatioCase(_h((0.0, 1, 0)), _EQUAL)),
    ("laser P(N_c=0 | 2,0 at t=0) at quarter beat",
     LaserCase(_h((0.0, 2, 0)), _UNEQUAL, at_time=math.pi / 2 / 1.2, n_c=0)),
    ("laser P(N_c=1 | (1,0)@0, (0,1)@1) at t=2",
     LaserCase(_h((0.0, 1, 0), (1.0, 0, 1)), _UNEQUAL, at_time=2.0, n_c=1)),
]


def analytic_value(case):
    """Closed-form or quadrature value the Monte Carlo case should reproduce."""
    if isinstance(case, SpinCase):
        return conditional_record(case.future, case.past, case.prior)
    if isinstance(case, LaserRatioCase):
        return (predict_joint(1, 0, case.at_time, case.past, case.params)
                / predict_joint(0, 1, case.at_time, case.past, case.params))
    if isinstance(case, LaserCase):
        if case.n_c is not None and case.n_d is not None:
            return predict_joint(case.n_c, case.n_d, case.at_time, case.past, case.params)
        detector, n = ("c", case.n_c) if case.n_c is not None else ("d", case.n_d)
        return float(predict_counts(detector, case.at_time, case.past, case.params, n_max=n)[n])
    raise TypeError(f"unknown case type {type(case).__name__}")


def _is_spin(case):
    return isinstance(case, SpinCase)


def _mc_row(index, name, case, replicas, seed, workers):
    analytic = analytic_value(case)
    est = estimate_conditional(case, replicas, SeededStream(seed, index), workers=workers)
    return {
        "case": name,
        "analytic": float(analytic),
        "empirical": float(est.estimate),
        "stderr": est.stderr,
        "accepted": est.sample_count,
        "pass": bool(est.agrees(analytic, N_SIGMA)),
    }


def monte_carlo_report(replicas=DEFAULT_REPLICAS, seed=DEFAULT_SEED, workers=None, kind=None):
    """One row per published case; the stream id is the case index.

    ``kind`` restricts the list to ``"spin"`` or ``"laser"`` cases.
    """
    rows = []
    for i, (name, case) in enumerate(MONTE_CARLO_CASES):
        if kind is not None and (kind == "spin") != _is_spin(case):
            continue
        rows.append(_mc_row(i, name, case, replicas, seed, workers))
    return rows


def single_axis_cases(max_total=6):
    """All (n+, n-, m+, m-) with total measurements between 1 and ``max_total``."""
    for total in range(1, max_total + 1):
        for combo in itertools.product(range(total + 1), repeat=4):
            if sum(combo) == total:
                yield combo


def oracle_row(n_plus, n_minus, m_plus, m_minus, axis="x", prior=None):
    """Compare the dense-matrix oracle with the closed form for one ordered record."""
    prior = _SPHERE if prior is None else prior
    copies = n_plus + n_minus + m_plus + m_minus
    signs_past = [1] * m_plus + [-1] * m_minus
    signs_future = [1] * n_plus + [-1] * n_minus
    past = [(q, axis, s) for q, s in enumerate(signs_past)]
    future = [(len(past) + q, axis, s) for q, s in enumerate(signs_future)]
    oracle = bayes_conditional(prior, copies, past, future)
    multiplicity = math.comb(n_plus + n_minus, n_plus)
    closed = exact_single_axis(n_plus, n_minus, m_plus, m_minus) / multiplicity
    return {
        "case": f"oracle {axis} n=({n_plus},{n_minus}) m=({m_plus},{m_minus})",
        "analytic": float(closed),
        "empirical": float(oracle),
        "stderr": 0.0,
        "pass": bool(abs(oracle - closed) <= ORACLE_TOL),
    }


def oracle_report(max_total=6, axes=("x", "y", "z")):
    return [oracle_row(*c, axis=a) for a in axes for c in single_axis_cases(max_total)]


def run_suite(suite="all", replicas=DEFAULT_REPLICAS, seed=DEFAULT_SEED, workers=None):
    """Rows for the ``spin``, ``laser``, ``oracle`` or ``all`` suite."""
    if suite not in ("spin", "laser", "oracle", "all"):
        raise ValueError(f"unknown suite {suite!r}")
    rows = []
    if suite in ("oracle", "all"):
        rows += oracle_report()
    if suite in ("spin", "laser", "all"):
        rows += monte_carlo_report(replicas, seed, workers, kind=None if suite == "all" else suite)
    return rows
