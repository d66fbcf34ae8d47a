"""
Two lasers, one beam splitter, no phase reference
=================================================

Photon counts at the two splitter outputs are Poisson with intensities that
depend on the relative phase.  With a uniform phase prior, the counts seen so
far pick out a phase posterior, and future counts are predicted from it.
"""

import math

import numpy as np
from scipy.stats import poisson

from qbayes.laser_phase import (
    BeamParams,
    DetectionHistory,
    asymptotic_phase,
    phase_posterior,
    predict_counts,
    predict_joint,
)
from qbayes.montecarlo import SeededStream, simulate_detections

# at very low intensity a single click at c makes another click at c
# three times as likely as one at d
weak = BeamParams(a=1.0, b=1.0, eta=1e-4)
past = DetectionHistory.single(1, 0)
ratio = predict_joint(1, 0, 0.0, past, weak) / predict_joint(0, 1, 0.0, past, weak)
print("P(1,0|1,0) / P(0,1|1,0) =", ratio)

# simulate many weak packages from a definite (but hidden) phase
beams = BeamParams(a=1.0, b=2.0, eta=0.3)
true_phi = 1.1
history = simulate_detections(true_phi, beams, np.arange(4000.0), SeededStream(seed=2024))
m_c = sum(e.m_c for e in history)
m_d = sum(e.m_d for e in history)
print("total counts (c, d)     =", m_c, m_d)

# the posterior has two peaks, +phi0 and -phi0: one time cannot tell the sign
post = phase_posterior(history, beams)
print("mass within 0.1 of +-phi =", round(post.mass_near([true_phi, -true_phi], 0.1), 4))
print("reflection asymmetry     =", post.reflection_asymmetry())

# the next package behaves as if the phase were known
cos0 = asymptotic_phase(m_c, m_d, beams)
print("cos(phi0) from counts   =", round(cos0, 4), " true", round(math.cos(true_phi), 4))
dist = predict_counts("c", 4000.0, history, beams, n_max=5)
plug_in = poisson.pmf(np.arange(6), beams.eta * (beams.mean_intensity + beams.cross * cos0))
for n, (p, q) in enumerate(zip(dist.probabilities, plug_in)):
    print(f"N_c={n}  predictive {p:.6f}  Poisson at phi0 {q:.6f}")

# a second measurement a quarter beat later separates +phi0 from -phi0
beating = BeamParams(a=1.0, b=1.0, eta=0.5, delta_omega=1.0)
two = DetectionHistory(((0.0, 5, 1), (math.pi / 2, 4, 1)))
print("quarter-beat asymmetry  =", round(phase_posterior(two, beating).reflection_asymmetry(), 4))
