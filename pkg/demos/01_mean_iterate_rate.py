"""How fast does the averaged iterate shrink?

The mean of the stochastic iterate follows a deterministic linear map,
T^n theta = (1 - gamma lambda_i)^n theta_i coordinate-wise.  With a power-law
spectrum lambda_i = 0.4 i^-2 and a starting vector theta_i ~ i^-2, the
squared norm should decay like n^-1.5.  We measure the slope on a log-log
grid and compare it with the explicit upper bounds.
"""

import numpy as np

from hilbertsgd.analysis import avg_upper_bound, fit_decay_rate, lower_bound_probe
from hilbertsgd.core import make_spectrum, phi_norm, power_law_vector, regularity
from hilbertsgd.dynamics import geometric_schedule, mean_iterate

d = 5000
spec = make_spectrum("power-law", (0.4, 2.0), d)
theta0 = power_law_vector(2.0, d)
reg = regularity(spec, s=2.0)
print(f"source exponent alpha(theta) = {reg.alpha_theta}, data exponent = {reg.alpha_data}")

steps = geometric_schedule(10_000)
norms = np.array([phi_norm(mean_iterate(theta0, spec, 1.0, int(n)), spec, 0.0) for n in steps])
rate = fit_decay_rate(steps, norms, window=(100, 10_000))
print(f"fitted exponent on [1e2, 1e4]: {rate.exponent:.4f} +- {rate.stderr:.4f}")

print("\n     n    ||T^n theta||^2    bound(beta=0.5)  bound(beta=1.4)")
for n in (10, 100, 1000, 10_000):
    v = phi_norm(mean_iterate(theta0, spec, 1.0, n), spec, 0.0)
    b05 = avg_upper_bound(theta0, spec, 1.0, 0.5, 0.0, n)
    b14 = avg_upper_bound(theta0, spec, 1.0, 1.4, 0.0, n)
    print(f"{n:6d}  {v:16.6e}  {b05:16.6e}  {b14:16.6e}")

# Going past alpha(theta) is impossible: n^beta ||T^n theta||^2 must blow up.
for beta in (1.0, 2.0):
    probe = lower_bound_probe(theta0, spec, 1.0, beta, n_max=100_000)
    print(f"beta={beta}: u(n) grew x{probe.growth:.2f} over the last decade -> {probe.verdict}")
