"""Where the scale mu_v in the regularized two-point function comes from.

A momentum-space regulator v(k) fixes the constant in the position-space
logarithm through I(u) = int_0^inf dk/k (v(k) - e^{-iku}) = ln(mu_v u) + i pi/2.
For a sharp cutoff at r the constant is mu_v = r e^gamma; for an exponential
regulator exp(-k/s) it is s.
"""

import math

from infrascat.kernel import EULER_GAMMA, Regulator, fit_mu, spectral_I

for text in ("sharp:1", "sharp:2", "exp:1", "exp:0.5"):
    v = Regulator.parse(text)
    mu, residual = fit_mu(v)
    print(f"{text:8s}  mu_v = {mu:.12f}   (fit residual {residual:.1e})")

print(f"\nr e^gamma for r = 1:  {math.exp(EULER_GAMMA):.12f}")
I1 = spectral_I(1.0, Regulator.parse("sharp:1"))
print(f"I(1) for sharp:1 = {I1.real:.12f} + {I1.imag:.12f} i   (gamma + i pi/2)")
