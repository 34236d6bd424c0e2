"""Checking the one-step expansion of E phi_beta(T_x theta).

E phi_beta(theta - gamma<theta,x>x) = phi_beta(theta) - 2 gamma phi_{beta-1}(theta)
                                      + gamma^2 E[<theta,x>^2 phi_beta(x)].

With the coordinate-bounded sampler the expectation is a finite sum, so both
sides agree to rounding.  With Gaussian features we compare Monte Carlo
estimates of both sides.
"""

from hilbertsgd.core import make_spectrum, power_law_vector
from hilbertsgd.dynamics import recursion_check
from hilbertsgd.sampler import SamplerSpec

spec = make_spectrum("power-law", (0.4, 2.0), 200)
theta = power_law_vector(2.0, 200)

for beta in (0.0, 0.5, 1.0):
    ex = recursion_check(theta, SamplerSpec("coordinate-bounded", spec), 0.5, beta)
    print(f"atoms, beta={beta}: lhs={ex.lhs:.15f} rhs={ex.rhs:.15f} "
          f"rel diff {ex.relative_discrepancy:.1e}")

mc = recursion_check(theta, SamplerSpec("gff", spec, seed=0), 0.5, 0.0, n_samples=100_000)
print(f"gff Monte Carlo: lhs={mc.lhs:.6f}+-{mc.lhs_se:.1e} rhs={mc.rhs:.6f}+-{mc.rhs_se:.1e} "
      f"({mc.discrepancy_se:.2f} combined SE); closed form rhs={mc.rhs_exact:.6f}")
