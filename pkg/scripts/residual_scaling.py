"""Print residual(2r)/residual(r) for moment orders 3..6 with fixed low-Fock probes."""

import numpy as np

from homodyne_limit.moments import residual_scaling_probe

phi = np.array([1, 1, 1, 0]) / np.sqrt(3)
psi = np.array([0, 1, 0, 0], dtype=float)
r_list = [1.0, 2.0, 4.0, 8.0, 16.0]

print("k," + ",".join(f"r={r:g}" for r in r_list[1:]))
for k in range(3, 7):
    vals = [v for _, _, v in residual_scaling_probe(k, 0.0, r_list, phi, psi)]
    print(f"{k}," + ",".join(f"{b / a:.4f}" for a, b in zip(vals, vals[1:])))
