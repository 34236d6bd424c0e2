"""The stochastic iterate against its mean.

We run 100 independent replicas of theta(n+1) = theta(n) - gamma <theta, x> x
with the symmetrised Gamma sampler and gamma = 1/(K_1 + 1).  Jensen's
inequality keeps E||theta(n)||^2 above ||T^n theta||^2; the rate should still
be at least n^-(1 - slack).  About 10 seconds.
"""

import numpy as np

from hilbertsgd.analysis import sgd_rate_report
from hilbertsgd.core import make_spectrum, power_law_vector
from hilbertsgd.dynamics import IterationConfig, ensemble
from hilbertsgd.sampler import SamplerSpec

spec = make_spectrum("power-law", (0.4, 2.0), 100)
gamma = 1.0 / (spec.K(1.0) + 1.0)
cfg = IterationConfig(gamma, 10_000, power_law_vector(2.0, 100),
                      SamplerSpec("gamma-sym", spec, seed=0), n_replicas=100,
                      record_betas=(0.0, 1.0))
stats = ensemble(cfg)
rep = sgd_rate_report(stats, beta_target=1.0)

print(f"gamma = {gamma:.5f}")
print(f"E||theta(n)||^2 exponent: {rep.rate.exponent:.3f}   (mean iterate: "
      f"{rep.mean_iterate_rate.exponent:.3f})")
print(f"smallest (E - mean iterate)/SE: {rep.jensen_min_z:.2f}")

steps, m, se = stats.series(0.0)
for k in np.searchsorted(steps, [1, 10, 100, 1000, 10_000]):
    print(f"n={steps[k]:6d}  E||theta||^2 = {m[k]:.4e} +- {se[k]:.1e}   "
          f"||T^n theta||^2 = {rep.mean_iterate[k]:.4e}")

_, m1, _ = stats.series(1.0)
print("E phi_1 non-increasing along the record:", bool(np.all(np.diff(m1) <= 0)))
