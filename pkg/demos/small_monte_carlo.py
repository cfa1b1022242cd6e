"""A small Monte Carlo comparison on the banded design (a scaled-down simulation table).

Run:  python demos/small_monte_carlo.py [reps]
"""

import sys
import time

from splash.estimators import CvGrid
from splash.experiments import METHOD_LABELS, replicate

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 5

start = time.perf_counter()
res = replicate("A", 25, 500, reps, seed=1, k0=3, grid=CvGrid(n_lambda=10),
                methods=["splash0", "splash1", "gmwy_k0", "gmwy_cs", "pvar"])
print(f"Design A, N={res.n}, T={res.t}, {res.reps} replications ({time.perf_counter() - start:.0f}s)\n")
print(f"{'method':<22}{'RMSFE':>8}{'EE_A':>8}{'EE_B':>8}{'ok':>5}")
for name, s in res.summaries.items():
    print(f"{METHOD_LABELS[name]:<22}{s.rmsfe:8.3f}{s.ee_a:8.3f}{s.ee_b:8.3f}{s.n_ok:5d}")
print("\nRMSFE is relative to the infeasible forecast C y_T (1 = oracle); EE is a mean spectral-norm error.")
