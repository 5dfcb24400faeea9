"""Numerical checks of the logarithm limit and the large-translation asymptotics.

``lemma31_*`` compare ``int ln(h1 + i eps h2) f`` with its branch-resolved
limit ``int (ln|h1| + theta(-h1) sgn(h2) i pi) f``.  ``lemma32_check``
compares the smeared kernel translated by ``t (e + r_t)`` against the
leading logarithmic term in the spacelike, timelike and lightlike
directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .kernel import KernelParams, smeared_chiral, smeared_kernel
from .quadrature import DEFAULT_SPEC, LineKind, QuadSpec, SingularLine, integrate_2d
from .scattering import loglog_slope
from .testfn import TestFunction, Vector2, charge

__all__ = [
    "PolyPair",
    "Direction",
    "AsymptoticCase",
    "Lemma32Result",
    "zero_lines",
    "lemma31_lhs",
    "lemma31_rhs",
    "lemma32_check",
    "random_polypair",
    "CURVED_TOL",
]

# documented weaker tolerance when the zero set of h1 is not a straight line
CURVED_TOL = 1e-4
_RANK_TOL = 1e-12


@dataclass(frozen=True)
class PolyPair:
    """Real polynomials ``h1, h2`` in (x0, x1); ``c[i][j]`` multiplies x0^i x1^j."""

    h1: tuple[tuple[float, ...], ...]
    h2: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        for name in ("h1", "h2"):
            c = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if not np.any(c != 0):
                raise ValueError(f"{name} is identically zero")
            object.__setattr__(self, name, tuple(tuple(row) for row in c))

    def eval1(self, x0, x1):
        return P.polyval2d(*np.broadcast_arrays(x0, x1), np.asarray(self.h1))

    def eval2(self, x0, x1):
        return P.polyval2d(*np.broadcast_arrays(x0, x1), np.asarray(self.h2))


def _lightcone_coeffs(c: np.ndarray) -> np.ndarray:
    """Coefficients of ``h(x0, x1)`` in ``(u, v) = (x+, x-)`` by exact refit."""
    deg = sum(c.shape) - 2
    n = deg + 1
    nodes = np.cos(np.pi * (np.arange(n) + 0.5) / n)
    U, V = np.meshgrid(nodes, nodes, indexing="ij")
    vals = P.polyval2d(0.5 * (U + V), 0.5 * (U - V), c)
    A = P.polyvander2d(U.ravel(), V.ravel(), [deg, deg])
    coef, *_ = np.linalg.lstsq(A, vals.ravel(), rcond=None)
    return coef.reshape(n, n)


def _factor_roots(c: np.ndarray):
    """Real roots of both factors if ``c`` is rank one, else None."""
    u, s, vt = np.linalg.svd(c)
    if s[0] == 0 or (s.size > 1 and s[1] > _RANK_TOL * s[0]):
        return None

    def real_roots(coef):
        coef = np.where(np.abs(coef) > _RANK_TOL * np.max(np.abs(coef)), coef, 0.0)
        coef = np.trim_zeros(coef, "b")
        if coef.size <= 1:
            return []
        r = P.polyroots(coef)
        return [float(z.real) for z in r if abs(z.imag) <= 1e-12 * max(1.0, abs(z))]

    return real_roots(u[:, 0]), real_roots(vt[0])


def zero_lines(h1) -> list[SingularLine] | None:
    """Straight lines making up the zero set of ``h1``, or None if curved.

    A polynomial whose coefficient matrix has rank one factorizes as
    ``p(a) q(b)``, so its zero set is the union of the lines ``a = root``
    and ``b = root``.  Cartesian and light-cone coordinates are tried.
    """
    c = np.atleast_2d(np.asarray(h1, dtype=float))
    roots = _factor_roots(c)
    if roots is not None:
        return ([SingularLine(LineKind.X0, r) for r in roots[0]]
                + [SingularLine(LineKind.X1, r) for r in roots[1]])
    roots = _factor_roots(_lightcone_coeffs(c))
    if roots is not None:
        return ([SingularLine(LineKind.X_PLUS, r) for r in roots[0]]
                + [SingularLine(LineKind.X_MINUS, r) for r in roots[1]])
    return None


def _sign_pattern(pp: PolyPair, f: TestFunction, n: int = 81) -> tuple[bool, bool]:
    """(h1 changes sign on supp f, h1 is negative somewhere on supp f)."""
    (a0, b0), (a1, b1) = f.support_box
    X0, X1 = np.meshgrid(np.linspace(a0, b0, n), np.linspace(a1, b1, n), indexing="ij")
    vals = pp.eval1(X0, X1)[f(X0, X1) != 0]
    negative = bool(np.any(vals <= 0))
    return negative and bool(np.any(vals >= 0)), negative


def _setup(pp: PolyPair, f: TestFunction, spec: QuadSpec):
    """Lines to declare and the spec to use.

    The log singularity sits on the zero set of h1; where h1 < 0 the phase
    also jumps across the zero set of h2.  Straight zero sets are declared to
    the quadrature; a curved one that matters falls back to dense refinement
    at the weaker tolerance ``CURVED_TOL``.
    """
    changes, negative = _sign_pattern(pp, f)
    lines: list[SingularLine] = []
    curved = False
    sets = [(pp.h1, changes)]
    if negative:
        sets.append((pp.h2, True))
    for coeffs, relevant in sets:
        found = zero_lines(coeffs)
        if found is None:
            curved |= relevant
        else:
            lines += found
    if curved:
        spec = spec.replace(abs_tol=max(spec.abs_tol, CURVED_TOL),
                            rel_tol=max(spec.rel_tol, CURVED_TOL),
                            max_depth=spec.max_depth + 6)
    return lines, spec


def lemma31_lhs(pp: PolyPair, f: TestFunction, eps: float,
                spec: QuadSpec = DEFAULT_SPEC) -> complex:
    """``int ln(h1 + i eps h2) f d^2x`` on the principal branch."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    lines, spec = _setup(pp, f, spec)

    def integrand(x0, x1):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(pp.eval1(x0, x1) + 1j * eps * pp.eval2(x0, x1)) * f(x0, x1)

    value, _ = integrate_2d(integrand, f.support_box, lines, spec)
    return complex(value)


def lemma31_rhs(pp: PolyPair, f: TestFunction, spec: QuadSpec = DEFAULT_SPEC) -> complex:
    """``int (ln|h1| + theta(-h1) sgn(h2) i pi) f d^2x``."""
    lines, spec = _setup(pp, f, spec)

    def integrand(x0, x1):
        h1 = pp.eval1(x0, x1)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.log(np.abs(h1)) + 1j * np.pi * np.where(h1 < 0, np.sign(pp.eval2(x0, x1)), 0.0)
        return val * f(x0, x1)

    value, _ = integrate_2d(integrand, f.support_box, lines, spec)
    return complex(value)


def random_polypair(rng: np.random.Generator, box_radius: float = 1.5) -> PolyPair:
    """Quadratic ``h1`` of fixed sign on the box ``|x_i| <= box_radius`` and a
    product of linear factors ``h2``, whose zero set is two coordinate lines.

    The constant term of ``h1`` dominates the bounds of its other terms.
    """
    h1 = np.zeros((3, 3))
    for i, j in ((1, 0), (0, 1), (2, 0), (1, 1), (0, 2)):
        h1[i, j] = rng.uniform(-0.2, 0.2)
    bound = sum(abs(h1[i, j]) * box_radius ** (i + j) for i in range(3) for j in range(3))
    h1[0, 0] = rng.choice([-1.0, 1.0]) * (bound + rng.uniform(0.5, 1.5))
    a = rng.uniform(-1.0, 1.0, size=2)
    b = rng.uniform(-1.0, 1.0, size=2)
    return PolyPair(h1, np.outer(a, b))


# --------------------------------------------------------------------------
# large translations


class Direction(str, Enum):
    SPACELIKE = "spacelike"
    TIMELIKE = "timelike"
    LIGHTLIKE_PLUS = "lightlike+"
    LIGHTLIKE_MINUS = "lightlike-"

    @classmethod
    def parse(cls, text: str) -> "Direction":
        return cls(text.replace("−", "-"))

    @property
    def vector(self) -> Vector2:
        return {
            Direction.SPACELIKE: Vector2(0.0, 1.0),
            Direction.TIMELIKE: Vector2(1.0, 0.0),
            Direction.LIGHTLIKE_PLUS: Vector2(1.0, 1.0),
            Direction.LIGHTLIKE_MINUS: Vector2(1.0, -1.0),
        }[self]

    @property
    def lightlike(self) -> int:
        """lambda = +-1 for the lightlike directions, 0 otherwise."""
        return {Direction.LIGHTLIKE_PLUS: 1, Direction.LIGHTLIKE_MINUS: -1}.get(self, 0)


def default_profile(alpha: float) -> Callable[[float], Vector2]:
    """``r_t = |t|^-alpha (1, 1) / sqrt 2``."""
    def r(t: float) -> Vector2:
        m = abs(t) ** (-alpha) / math.sqrt(2.0)
        return Vector2(m, m)
    return r


@dataclass(frozen=True)
class AsymptoticCase:
    """Translation ``t (e + r_t)``; lightlike cases ignore ``r_t``, as in the
    statement being checked, and have decay exponent 1."""

    direction: Direction
    alpha: float = 0.5
    t_grid: tuple[float, ...] = (8.0, 16.0, 32.0, 64.0, 128.0, 256.0)
    r_profile: Callable[[float], Vector2] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if any(t == 0.0 for t in self.t_grid):
            raise ValueError("t_grid must not contain 0")
        if self.r_profile is None:
            object.__setattr__(self, "r_profile", default_profile(self.alpha))
        if not self.direction.lightlike:
            self._check_profile()

    def _check_profile(self):
        norms = [math.hypot(*self.r_profile(t).as_tuple()) * abs(t) ** self.alpha
                 for t in self.t_grid]
        if max(norms) > 10.0 * min(norms) + 1e-12:
            raise ValueError("r_profile does not decay like |t|^-alpha on t_grid")

    @property
    def exponent(self) -> float:
        return 1.0 if self.direction.lightlike else self.alpha

    def translation(self, t: float) -> Vector2:
        e = self.direction.vector
        if self.direction.lightlike:
            return e * t
        return (e + self.r_profile(t)) * t


@dataclass(frozen=True)
class Lemma32Result:
    rows: tuple[tuple[float, complex, complex, float], ...]
    slope: float
    exponent: float

    @property
    def slope_ok(self) -> bool:
        return self.slope <= -min(self.exponent, 1.0) + 0.15


def leading_term(case: AsymptoticCase, f: TestFunction, t: float,
                 params: KernelParams = KernelParams(), spec: QuadSpec = DEFAULT_SPEC,
                 chiral_const: complex | None = None) -> complex:
    q = charge(f)
    mu = params.mu_v
    k = -1.0 / (4.0 * math.pi)
    phase = 0.5j * math.pi * math.copysign(1.0, t)
    d = case.direction
    if d is Direction.SPACELIKE:
        return k * 2.0 * math.log(abs(t) * mu) * q
    if d is Direction.TIMELIKE:
        return k * 2.0 * (math.log(abs(t) * mu) - phase) * q
    if chiral_const is None:
        chiral_const = smeared_chiral(f, -d.lightlike, params=params, spec=spec)
    return chiral_const + k * (math.log(2.0 * mu * abs(t)) - phase) * q


def lemma32_check(case: AsymptoticCase, f: TestFunction, params: KernelParams = KernelParams(),
                  spec: QuadSpec = DEFAULT_SPEC) -> Lemma32Result:
    """Rows ``(t, lhs, rhs, |lhs - rhs|)`` and the log-log slope of the residual.

    ``lhs = int w_reg(x - t (e + r_t)) f(x) d^2x`` uses ``f`` itself as the
    density.
    """
    const = None
    if case.direction.lightlike:
        const = smeared_chiral(f, -case.direction.lightlike, params=params, spec=spec)
    rows = []
    for t in case.t_grid:
        lhs = smeared_kernel(f, -case.translation(t), params, spec)
        rhs = leading_term(case, f, t, params, spec, const)
        rows.append((t, lhs, rhs, abs(lhs - rhs)))
    slope = loglog_slope([abs(r[0]) for r in rows], [r[3] for r in rows])
    return Lemma32Result(tuple(rows), slope, case.exponent)
