"""Numerical checks of the auxiliary inequalities.

Each verifier returns a BoundCheck with a violation count and the worst
margin.  The lower bound on max f(lambda) only applies while the maximiser
stays below 1 - 1/e; the last line shows what happens outside that range.
"""

from hilbertsgd.analysis import (
    f_lambda_verify,
    gamma_series_verify,
    holder_verify,
    neutral_recursion_verify,
)
from hilbertsgd.core import make_spectrum

for m, tau in ((20, 1.0), (100, 2.0), (2, 0.5)):
    bc = f_lambda_verify(m, tau)
    x = bc.extras
    print(f"f_lambda m={m} tau={tau}: f*={x['f_star']:.6f} in [{x['lower']:.6f}, {x['upper']:.6f}]"
          f"  violations={bc.violations}")

gs = gamma_series_verify()
print(f"series / Gamma(kappa) ranges over [{gs.extras['min_ratio']:.4f}, "
      f"{gs.extras['max_ratio']:.4f}]")
print("neutral recursion violations:", neutral_recursion_verify(0.9, 0.5, 100_000).violations)
print("Holder violations:", holder_verify(make_spectrum("power-law", (0.4, 2.0), 100)).violations)

bad = f_lambda_verify(1.0, 3.0)
print(f"outside its range (m=1, tau=3): f*={bad.extras['f_star']:.4f} < "
      f"lower {bad.extras['lower']:.4f}, lower_applicable={bad.extras['lower_applicable']}")
