"""Forward simulation and rejection-conditioned estimates.

Replicas draw a hidden state from the prior (a Bloch vector, or a uniform
phase difference), simulate the past record, and are kept only when the past
matches the conditioning record exactly; the future is then tallied among the
kept replicas.  Replicas are split into fixed-size shards, each with its own
seed sequence, so results do not depend on how shards are scheduled.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom, poisson

from .errors import ConditioningNeverSampledError
from .laser_phase import DetectionEvent, DetectionHistory
from .numerics import TWO_PI
from .spin_bayes import SpinRecord

SHARD_SIZE = 1 << 17
_POISSON_INVERSION_LIMIT = 10.0
_BINOMIAL_INVERSION_LIMIT = 1000


@dataclass(frozen=True)
class SeededStream:
    """Reproducible random stream identified by ``(seed, stream_id)``."""

    seed: int
    stream_id: int = 0

    def generator(self, *sub):
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,) + tuple(sub))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, stream_id):
        return SeededStream(self.seed, stream_id)


@dataclass(frozen=True)
class EmpiricalEstimate:
    estimate: float
    stderr: float
    sample_count: int
    replicas: int = 0

    @classmethod
    def from_tally(cls, hits, accepted, replicas):
        if accepted == 0:
            raise ConditioningNeverSampledError("conditioning event never sampled")
        p = hits / accepted
        return cls(p, math.sqrt(p * (1.0 - p) / accepted), int(accepted), int(replicas))

    def agrees(self, value, n_sigma=3.0):
        return abs(self.estimate - value) <= n_sigma * self.stderr


def _uniform_open(rng, size):
    # (0, 1]: keeps inversion away from u = 0
    return 1.0 - rng.random(size)


def poisson_variates(mu, rng):
    """Poisson draws: CDF inversion below mean 10, PTRS rejection above."""
    mu = np.asarray(mu, dtype=float)
    out = np.zeros(mu.shape, dtype=np.int64)
    small = mu < _POISSON_INVERSION_LIMIT
    if small.any():
        out[small] = _poisson_inversion(mu[small], _uniform_open(rng, int(small.sum())))
    if (~small).any():
        out[~small] = _poisson_ptrs(mu[~small], rng)
    return out


def _poisson_inversion(mu, u):
    k = np.zeros(mu.shape, dtype=np.int64)
    pk = np.exp(-mu)
    cdf = pk.copy()
    active = u > cdf
    step = 0
    while active.any():
        step += 1
        k[active] += 1
        pk = pk * mu / step
        cdf = cdf + pk
        # past the mode, once terms drop below rounding the cdf cannot grow
        active &= (u > cdf) & ~((step > mu) & (pk < 1e-17 * cdf))
    return k


def _poisson_ptrs(mu, rng):
    """Hormann's transformed rejection with squeeze, vectorized over ``mu``."""
    out = np.empty(mu.shape, dtype=np.int64)
    pending = np.arange(mu.size)
    while pending.size:
        m = mu[pending]
        slam = np.sqrt(m)
        loglam = np.log(m)
        b = 0.931 + 2.53 * slam
        a = -0.059 + 0.02483 * b
        inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
        vr = 0.9277 - 3.6224 / (b - 2.0)
        u = rng.random(pending.size) - 0.5
        v = rng.random(pending.size)
        us = 0.5 - np.abs(u)
        k = np.floor((2.0 * a / us + b) * u + m + 0.43)
        fast = (us >= 0.07) & (v <= vr)
        reject = (k < 0) | ((us < 0.013) & (v > us))
        with np.errstate(divide="ignore", invalid="ignore"):
            slow = (~fast & ~reject) & (
                np.log(v) + np.log(inv_alpha) - np.log(a / (us * us) + b)
                <= -m + k * loglam - gammaln(k + 1.0)
            )
        done = fast | slow
        out[pending[done]] = k[done].astype(np.int64)
        pending = pending[~done]
    return out


def binomial_variates(n, p, rng):
    """Binomial draws by CDF inversion."""
    n = np.asarray(n, dtype=np.int64)
    p = np.asarray(p, dtype=float)
    n, p = np.broadcast_arrays(n, p)
    u = _uniform_open(rng, n.shape)
    if n.size and n.max() > _BINOMIAL_INVERSION_LIMIT:
        return binom.ppf(u, n, p).astype(np.int64)
    flip = p > 0.5
    q = np.where(flip, 1.0 - p, p)
    k = _binomial_inversion(n, q, u)
    return np.where(flip, n - k, k)


def _binomial_inversion(n, p, u):
    k = np.zeros(n.shape, dtype=np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(p < 1.0, p / (1.0 - p), 0.0)
    pk = (1.0 - p) ** n
    cdf = pk.copy()
    active = (u > cdf) & (k < n)
    step = 0
    while active.any():
        pk = pk * (n - step) / (step + 1) * ratio
        step += 1
        k[active] += 1
        cdf = cdf + pk
        active &= (u > cdf) & (k < n)
    return k


def sample_bloch(prior, stream, size=None):
    """Bloch vectors drawn from ``prior``; shape (3,) or (size, 3)."""
    rng = stream.generator() if isinstance(stream, SeededStream) else stream
    m = 1 if size is None else int(size)
    if prior.kind == "uniform-sphere-surface":
        u = rng.uniform(-1.0, 1.0, m)
        az = rng.uniform(0.0, TWO_PI, m)
        s = np.sqrt(1.0 - u * u)
        v = np.stack([s * np.cos(az), s * np.sin(az), u], axis=-1)
    elif prior.kind == "uniform-ball":
        v = np.empty((0, 3))
        while len(v) < m:
            c = rng.uniform(-1.0, 1.0, (2 * (m - len(v)) + 16, 3))
            v = np.concatenate([v, c[(c * c).sum(axis=1) <= 1.0]])
        v = v[:m]
    else:
        pts, logw = prior.quadrature(0)
        cdf = np.cumsum(np.exp(logw))
        idx = np.searchsorted(cdf, rng.random(m) * cdf[-1], side="right")
        v = pts[np.minimum(idx, len(pts) - 1)]
    return v[0] if size is None else v


def simulate_spin_counts(bloch, plan, rng):
    """Counts array (R, 3, 2) for R Bloch vectors measured per ``plan``.

    ``plan`` gives the number of measurements along x, y and z.
    """
    bloch = np.atleast_2d(bloch)
    out = np.zeros((bloch.shape[0], 3, 2), dtype=np.int64)
    for a, n in enumerate(plan):
        if n < 0:
            raise ValueError("plan counts must be non-negative")
        if n == 0:
            continue
        p = np.clip((1.0 + bloch[:, a]) / 2.0, 0.0, 1.0)
        plus = binomial_variates(np.full(p.shape, n), p, rng)
        out[:, a, 0] = plus
        out[:, a, 1] = n - plus
    return out


def simulate_spin_record(v, plan, stream):
    """One record of Pauli outcomes for the state with Bloch vector ``v``."""
    rng = stream.generator() if isinstance(stream, SeededStream) else stream
    return SpinRecord.from_counts(simulate_spin_counts(np.asarray(v, dtype=float), plan, rng)[0])


def detection_means(phi, params, times):
    """Mean counts eta*I_c and eta*I_d, shape (R, T) each."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))[:, None]
    t = np.asarray(times, dtype=float)[None, :]
    cos = np.cos(phi - params.delta_omega * t)
    s, x = params.mean_intensity, params.cross
    return (params.eta * np.clip(s + x * cos, 0.0, None),
            params.eta * np.clip(s - x * cos, 0.0, None))


def simulate_detection_counts(phi, params, times, rng):
    """Poisson counts (R, T, 2) at detectors c and d for R phases."""
    mc, md = detection_means(phi, params, times)
    return np.stack([poisson_variates(mc, rng), poisson_variates(md, rng)], axis=-1)


def simulate_detections(phi, params, times, stream):
    """DetectionHistory for fixed phase difference ``phi``."""
    rng = stream.generator() if isinstance(stream, SeededStream) else stream
    counts = simulate_detection_counts(phi, params, times, rng)[0]
    return DetectionHistory(tuple(DetectionEvent(t, int(c), int(d)) for t, (c, d) in zip(times, counts)))


@dataclass(frozen=True)
class SpinCase:
    """P(future | past) for Pauli records under a Bloch prior."""

    future: SpinRecord
    past: SpinRecord
    prior: object

    def tally(self, rng, replicas):
        v = sample_bloch(self.prior, rng, replicas)
        plan_past = self.past.counts.sum(axis=1)
        plan_future = self.future.counts.sum(axis=1)
        past = simulate_spin_counts(v, plan_past, rng)
        future = simulate_spin_counts(v, plan_future, rng)
        accepted = (past == self.past.counts).all(axis=(1, 2))
        hits = accepted & (future == self.future.counts).all(axis=(1, 2))
        return np.array([hits.sum(), accepted.sum()])


@dataclass(frozen=True)
class LaserCase:
    """P(next-package counts | past detections) under the uniform phase prior.

    ``n_c`` or ``n_d`` may be None to leave that detector unconstrained.
    """

    past: DetectionHistory
    params: object
    at_time: float = 0.0
    n_c: int | None = None
    n_d: int | None = None

    def tally(self, rng, replicas):
        return _laser_tally(self, rng, replicas, [(self.n_c, self.n_d)])[0]


@dataclass(frozen=True)
class LaserRatioCase:
    """Ratio P(1,0 | past) / P(0,1 | past) of the next package's outcomes."""

    past: DetectionHistory
    params: object
    at_time: float = 0.0

    def tally(self, rng, replicas):
        (h1, acc), (h2, _) = _laser_tally(self, rng, replicas, [(1, 0), (0, 1)])
        return np.array([h1, h2, acc])


def _laser_tally(case, rng, replicas, outcomes):
    phi = rng.uniform(0.0, TWO_PI, replicas)
    times = [e.time for e in case.past] + [case.at_time]
    counts = simulate_detection_counts(phi, case.params, times, rng)
    target = np.array([[e.m_c, e.m_d] for e in case.past], dtype=np.int64).reshape(-1, 2)
    accepted = (counts[:, :-1, :] == target).all(axis=(1, 2))
    nxt = counts[:, -1, :]
    out = []
    for n_c, n_d in outcomes:
        hit = accepted.copy()
        if n_c is not None:
            hit &= nxt[:, 0] == n_c
        if n_d is not None:
            hit &= nxt[:, 1] == n_d
        out.append(np.array([hit.sum(), accepted.sum()]))
    return out


def _sharded_tally(case, replicas, stream, workers):
    n_shards = -(-replicas // SHARD_SIZE)
    sizes = [min(SHARD_SIZE, replicas - i * SHARD_SIZE) for i in range(n_shards)]

    def run(i):
        return case.tally(stream.generator(i), sizes[i])

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(n_shards)))
    else:
        parts = [run(i) for i in range(n_shards)]
    # shard order is fixed, so the sum is independent of scheduling
    return np.sum(parts, axis=0)


def estimate_conditional(case, replicas, stream, workers=None):
    """Rejection estimate of a conditional probability (or ratio) with its standard error.

    Raises
    ------
    ConditioningNeverSampledError
        If no replica reproduced the past record.
    """
    if replicas < 10_000:
        raise ValueError("at least 10^4 replicas are required")
    totals = _sharded_tally(case, int(replicas), stream, workers)
    if isinstance(case, LaserRatioCase):
        h1, h2, acc = (int(t) for t in totals)
        if acc == 0:
            raise ConditioningNeverSampledError("conditioning event never sampled")
        if h1 == 0 or h2 == 0:
            raise ConditioningNeverSampledError("ratio outcome never sampled")
        r = h1 / h2
        return EmpiricalEstimate(r, r * math.sqrt(1.0 / h1 + 1.0 / h2), acc, int(replicas))
    hits, accepted = (int(t) for t in totals)
    return EmpiricalEstimate.from_tally(hits, accepted, replicas)
