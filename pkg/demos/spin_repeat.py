"""
Predicting repeated spin measurements
=====================================

Qubits prepared identically in an unknown state, measured along Pauli axes.
Nothing but the prior over the Bloch ball links past outcomes to future ones.
"""

from fractions import Fraction

from qbayes.spin_bayes import (
    BlochPrior,
    SpinRecord,
    asymptotic_single_axis,
    conditional_record,
    exact_single_axis,
    posterior_bloch_density,
    repeat_probability,
)

sphere = BlochPrior.uniform_sphere()
ball = BlochPrior.uniform_ball()

# one +1 along x makes a second +1 more likely than not
p = conditional_record(SpinRecord(x=(1, 0)), SpinRecord(x=(1, 0)), sphere)
print("P(x+ | x+)              =", p)

# the closed form agrees, and in exact arithmetic gives the rational value
print("closed form             =", exact_single_axis(1, 0, 1, 0, exact=True))

# a long run of repeats predicts the next outcome almost surely...
print("P(x+ | 1000 x+)         =", float(repeat_probability(1, 1000, exact=True)))
# ...but a run of the same length again only about half the time
half = repeat_probability(1000, 1000, exact=True)
print("P(1000 x+ | 1000 x+)    =", half, "~", float(half))
assert Fraction(1, 2) <= half <= Fraction(501, 1000)

# mixed records and the ball prior go through the same integral
past = SpinRecord(x=(2, 1), z=(0, 1))
for prior in (sphere, ball):
    p = conditional_record(SpinRecord(y=(1, 0)), past, prior)
    print(f"P(y+ | {past.to_dict()}) on {prior.kind}: {p:.6f}")

# with many past outcomes the prediction approaches the binomial limit
for m in (10, 100, 1000):
    mp = int(0.7 * m)
    print(f"M={m:5d}  exact {exact_single_axis(2, 1, mp, m - mp):.6f}  "
          f"binomial {asymptotic_single_axis(2, 1, mp, m - mp):.6f}")

# the posterior over Bloch vectors concentrates along the observed axis
post = posterior_bloch_density(SpinRecord(x=(100, 0)), sphere)
print("posterior mean          =", post.mean().round(4))
print("mass with x > 0.9       =", round(post.mass(lambda x, y, z: x > 0.9), 4))
