"""Walkthrough: convergence behaviour and why the balanced tensor is the
object that matters (scales carry gauge freedom, the balanced tensor and
its completions do not).

Run:  python demos/02_convergence_and_uniqueness.py
"""

import numpy as np

from uctensor import ScaleSet, SolverConfig, balance, complete, scale_apply
from uctensor.properties import random_sparse_tensor

rng = np.random.default_rng(7)
tensor = random_sparse_tensor(rng, (40, 30), 0.15)
print(f"tensor {tensor.shape}, {tensor.n_observed} observed "
      f"({tensor.density:.0%} dense)")

# ---------------------------------------------------------------------------
# The per-sweep residual v (sum of squared removed log-means) decays
# geometrically; epsilon is the only knob the method has.
# ---------------------------------------------------------------------------
model = balance(tensor, 1, SolverConfig(epsilon=1e-10))
print("\nresidual trace:")
for i, v in enumerate(model.residual_trace, start=1):
    print(f"  sweep {i:2d}  v = {v:.3e}")

# ---------------------------------------------------------------------------
# Sweeping families in the opposite order lands on the same balanced
# tensor: the fixed point is order-independent.
# ---------------------------------------------------------------------------
tight = SolverConfig(epsilon=1e-24, max_sweeps=20_000)
lex = balance(tensor, 1, tight)
rev = balance(tensor, 1, SolverConfig(epsilon=1e-24, max_sweeps=20_000,
                                      sweep_order="reversed"))
gap = np.abs(lex.balanced.values - rev.balanced.values).max()
print(f"\nmax |balanced(lex) - balanced(reversed)| = {gap:.2e}")

# ---------------------------------------------------------------------------
# Gauge freedom: multiplying row scales by t and column scales by 1/t
# changes the scale set but reproduces the same balanced tensor.
# ---------------------------------------------------------------------------
t = 2.5
twisted = {}
for key, scale in lex.scales.items():
    row_key = key.coords[1] is None
    twisted[key] = scale * (t if row_key else 1.0 / t)
z2 = ScaleSet.from_dict(tensor.shape, 1, twisted)
a = scale_apply(tensor, lex.scales)
b = scale_apply(tensor, z2)
print("max |A*Z - A*(Z.T)| on observed cells:",
      f"{np.abs(a.values - b.values).max():.2e}")

# Completions agree too: for row/column balancing on a connected pattern
# every fill is pinned down, whatever gauge the scales carry.
c_lex = complete(tensor, 1, tight)
c_rev = complete(tensor, 1, SolverConfig(epsilon=1e-24, max_sweeps=20_000,
                                         sweep_order="reversed"))
print("max completion difference:",
      f"{np.abs(c_lex.to_dense() - c_rev.to_dense()).max():.2e}")
