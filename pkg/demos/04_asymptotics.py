"""Large-translation behaviour of the smeared kernel.

For a translation t(e + r_t) the smeared kernel approaches
-(1/4pi) 2 ln(|t| mu) q_f (spacelike), with an extra -+ i pi/2 in the
timelike case; lightlike translations keep a t-independent chiral term.
The residual decays like |t|^-alpha, or 1/t in the lightlike case.
"""

from infrascat import testfn as tf
from infrascat.asymptotics import AsymptoticCase, lemma32_check
from infrascat.kernel import KernelParams

f = tf.normalize_to_charge(tf.radial_bump((0.3, -0.2), (1.0, 0.8)), 1.0)
params = KernelParams(1.7810724179901979852)

for case in ("spacelike", "timelike", "lightlike+", "lightlike-"):
    res = lemma32_check(AsymptoticCase(case), f, params)
    print(f"{case:10s} residual slope {res.slope:+.3f}  (bound {-min(res.exponent, 1) + 0.15:+.2f})")
    for t, lhs, rhs, resid in res.rows[::2]:
        print(f"    t = {t:5.0f}  lhs {lhs:.6f}  leading {rhs:.6f}  |diff| {resid:.2e}")
