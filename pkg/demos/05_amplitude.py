"""The collision amplitude of two charged infraparticles.

Four Weyl factors move out along the light rays; the ratio of the
time-averaged four-point function to the two two-point functions gives S_T.
For q_f q_g = pi the target is exp(-i pi/2) = -i.  A neutral f gives 1.
"""

import math

from infrascat import testfn as tf
from infrascat.kernel import KernelParams
from infrascat.scattering import CollisionConfig, amplitude_series, s_T

params = KernelParams(1.7810724179901979852)
f = tf.normalize_to_charge(tf.radial_bump(), math.sqrt(math.pi))
g = tf.normalize_to_charge(tf.product_bump((0.2, -0.1), (0.8, 1.2)), math.sqrt(math.pi))

config = CollisionConfig(f, g, T_grid=(math.e ** 3, 50.0, 200.0, 1000.0), h_quad_order=4,
                         params=params)
series = amplitude_series(config)
for T, S, err in series.samples:
    print(f"T = {T:7.1f}   S_T = {S.real:+.8f} {S.imag:+.8f} i   (err {err:.1e})")
print(f"extrapolated {series.extrapolated:.8f}, target {series.target:.8f}, gap {series.gap:.1e}")

dipole = tf.mirrored_difference((0.5, 0.2), (0.0, 0.0), (0.7, 0.7))
S, _ = s_T(CollisionConfig(dipole, g, h_quad_order=4, params=params), 200.0)
print(f"\nneutral f: S_T = {S:.10f}")
