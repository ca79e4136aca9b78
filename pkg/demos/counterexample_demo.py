"""
A quadratic energy with no uniform gradient inequality
======================================================

E(x) = 1/2 sum lam_k x_k^2 with lam_k -> 0 has a minimum at the origin, yet
the best constant C_N in |E|^(1/2) <= C_N |grad E| over the first N
coordinates grows without bound. Geometric weights double C_N every two
steps; inverse-square weights make it grow linearly.
"""
from loja_lab.analysis import blowup_sweep, closed_form_constant

for rule in ("geometric", "inverse_square"):
    print(rule)
    for row in blowup_sweep(range(2, 21, 2), rule):
        ratio = "" if row["ratio"] is None else f"  C_N / C_(N-2) {row['ratio']:.6f}"
        print(f"  N {row['N']:2d}  C {row['C']:10.6f}  closed form "
              f"{closed_form_constant(row['N'], rule):10.6f}{ratio}")

# the same constants through a curved constraint whose chart pullback is the quadratic
rows = blowup_sweep([2, 4, 6, 8], route="chart")
print("chart route:", ", ".join(f"{r['C']:.8f}" for r in rows))
