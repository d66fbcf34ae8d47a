"""
Checking the analytic predictions two independent ways
======================================================

A dense-matrix computation on a few qubits and a brute-force simulation that
keeps only the replicas whose past matches.  Both should agree with the
integrals the library evaluates.
"""

from qbayes.operator_oracle import bayes_conditional
from qbayes.spin_bayes import BlochPrior, SpinRecord, conditional_record
from qbayes.verification import monte_carlo_report, oracle_report

sphere = BlochPrior.uniform_sphere()

# ordered outcomes on separate qubits: x+ on qubit 0, then x+ on qubit 1
print("operator P(x+ | x+)     =", bayes_conditional(sphere, 2, [(0, "x", 1)], [(1, "x", 1)]))
print("integral P(x+ | x+)     =", conditional_record(SpinRecord(x=(1, 0)), SpinRecord(x=(1, 0)), sphere))

# every single-axis record with up to six measurements
rows = oracle_report(6)
print(f"oracle: {sum(r['pass'] for r in rows)}/{len(rows)} agree to 1e-10")

# rejection sampling; fewer replicas than the full suite to keep this quick
for r in monte_carlo_report(replicas=200_000):
    flag = "ok " if r["pass"] else "BAD"
    print(f"{flag} {r['case']:45s} analytic {r['analytic']:.5f}  "
          f"sampled {r['empirical']:.5f} +- {r['stderr']:.5f}")
