"""How many random samples does a norm estimate need?

The sketched norm ||Phi v||_2 of K Gaussian samples stays within a
factor w of the true Sigma-norm with probability at least
1 - (sqrt(e)/w)^K. This script prints the exact chi-squared escape
probability next to that bound, then tabulates the minimal K needed to
certify many vectors at once. The striking point: certifying a billion
vectors at once only costs a handful of extra samples.
"""

from rbsketch import chi2_fail_bound, chi2_fail_exact, select_sample_count
from rbsketch.sketch import SQRT_E

print("Escape probability of [w^-1, w], exact vs bound")
print(f"{'w':>6} {'K':>4} {'exact':>12} {'bound':>12}")
for w in (1.1, 2.0, 5.0, 10.0, 50.0):
    for k in (3, 10):
        exact = chi2_fail_exact(w, k)
        bound = f"{chi2_fail_bound(w, k):12.2e}" if w > SQRT_E else "           -"
        print(f"{w:6.1f} {k:4d} {exact:12.2e} {bound}")

print()
print("Minimal K to certify m norms within factor w, probability 1 - delta")
print(f"{'delta':>8} {'m':>12} {'w=2':>6} {'w=4':>6} {'w=10':>6}")
for delta in (1e-2, 1e-4):
    for m in (1, 10**3, 10**6, 10**9):
        row = [select_sample_count(m, delta, w) for w in (2.0, 4.0, 10.0)]
        print(f"{delta:8.0e} {m:12d} {row[0]:6d} {row[1]:6d} {row[2]:6d}")
