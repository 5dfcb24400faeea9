"""Vacuum expectation values of products of regularized Wick exponentials.

For a word ``:W(f_1): ... :W(f_n):`` the Wick theorem gives::

    < :W(f_1): ... :W(f_n): > = delta(q) exp(-sum_{i<j} w_reg(f_i, f_j))

with ``q`` the total charge.  Exponents are accumulated in log-space and
exponentiated once.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Sequence

from .kernel import KernelParams, smeared_kernel
from .quadrature import DEFAULT_SPEC, QuadSpec
from .testfn import GridSpec, TestFunction, Vector2, _vec, charge, correlate

__all__ = ["WeylFactor", "WeylWord", "log_pair_vev", "vev", "DEFAULT_CHARGE_TOL"]

DEFAULT_CHARGE_TOL = 1e-9


@dataclass(frozen=True)
class WeylFactor:
    """``:W(sign * f translated by translation):``."""

    f: TestFunction
    translation: Vector2 = Vector2(0.0, 0.0)
    sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "translation", _vec(self.translation))
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def charge(self) -> float:
        return self.sign * charge(self.f)

    def adjoint(self) -> "WeylFactor":
        return WeylFactor(self.f, self.translation, -self.sign)

    def moved(self, translation) -> "WeylFactor":
        return WeylFactor(self.f, _vec(translation), self.sign)


@dataclass(frozen=True)
class WeylWord:
    factors: tuple[WeylFactor, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def total_charge(self) -> float:
        return sum(fac.charge for fac in self.factors)

    def adjoint(self) -> "WeylWord":
        """Reversed word with every sign flipped."""
        return WeylWord(tuple(fac.adjoint() for fac in reversed(self.factors)))

    def __len__(self):
        return len(self.factors)


def log_pair_vev(a: WeylFactor, b: WeylFactor, params: KernelParams = KernelParams(),
                 spec: QuadSpec = DEFAULT_SPEC, grid: GridSpec = GridSpec(),
                 return_error: bool = False):
    """Exponent ``-w_reg(f_a, f_b)`` of the two-factor vacuum expectation."""
    if a.f.amplitude == 0.0 or b.f.amplitude == 0.0:
        return (0j, 0.0) if return_error else 0j
    C = correlate(a.f, b.f, grid)
    value, err = smeared_kernel(C, a.translation - b.translation, params, spec,
                                return_error=True)
    value *= -(a.sign * b.sign)
    return (value, err) if return_error else value


def vev(word: WeylWord | Sequence[WeylFactor], params: KernelParams = KernelParams(),
        spec: QuadSpec = DEFAULT_SPEC, charge_tol: float = DEFAULT_CHARGE_TOL,
        grid: GridSpec = GridSpec()) -> complex:
    """Vacuum expectation value of a word; exactly 0 for charged words."""
    if not isinstance(word, WeylWord):
        word = WeylWord(tuple(word))
    if abs(word.total_charge) > charge_tol:
        return 0j
    n = len(word)
    exponent = 0j
    # fixed (i, j) order keeps the sum bit-stable
    for i in range(n):
        for j in range(i + 1, n):
            exponent += log_pair_vev(word.factors[i], word.factors[j], params, spec, grid)
    return cmath.exp(exponent)
