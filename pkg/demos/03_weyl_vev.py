"""Vacuum expectation values of products of regularized Weyl operators.

The Wick theorem reduces them to exp(-sum_{i<j} w(f_i, f_j)) when the total
charge vanishes and to 0 otherwise.  Two neutral clusters pulled apart
along a spacelike direction factorize.
"""

from infrascat import testfn as tf
from infrascat.kernel import KernelParams
from infrascat.weyl import WeylFactor, WeylWord, vev

params = KernelParams(1.7810724179901979852)
f = tf.normalize_to_charge(tf.radial_bump((0.0, 0.0), (0.9, 0.9)), 1.2)
g = tf.normalize_to_charge(tf.radial_bump((0.0, 0.0), (0.7, 0.7)), 0.9)

print("single charged factor:", vev([WeylFactor(f)], params))
word = WeylWord([WeylFactor(f, (0.0, 0.0)), WeylFactor(f, (0.8, 0.3), -1)])
print("neutral pair:          ", vev(word, params))
print("adjoint word:          ", vev(word.adjoint(), params), "(complex conjugate)")

pair1 = [WeylFactor(f, (0.0, 0.0)), WeylFactor(f, (0.8, 0.3), -1)]
print("\n   d   |<pair1 pair2> - <pair1><pair2>|")
for d in (10.0, 20.0, 40.0):
    pair2 = [WeylFactor(g, (0.0, d)), WeylFactor(g, (0.5, d - 0.4), -1)]
    gap = abs(vev(pair1 + pair2, params) - vev(pair1, params) * vev(pair2, params))
    print(f"{d:5.0f}   {gap:.3e}")
