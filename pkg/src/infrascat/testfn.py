"""Compactly supported smooth test functions on 2d Minkowski space.

Every test function is built from the standard mollifier
``b(r) = exp(-1 / (1 - r**2))`` for ``r < 1`` (zero outside), dilated,
boosted and translated.  Kinds:

``radial_bump``
    ``A * b(|y|_r)`` with ``|y|_r**2 = (y0/r0)**2 + (y1/r1)**2``
``product_bump``
    ``A * b(|y0|/r0) * b(|y1|/r1)``
``mirrored_difference``
    ``A * (B(y - a) - B(y + a))`` with ``B`` the radial bump and ``a`` the
    ``offset``; odd under ``y -> -y`` and neutral
``sum``
    ``A * sum(parts)``

Here ``y = Lambda(-rapidity) (x - center)`` are the local coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .quadrature import DEFAULT_SPEC, QuadSpec, integrate_1d, integrate_2d

__all__ = [
    "Vector2",
    "Kind",
    "TestFunction",
    "SmearingKernel",
    "Correlation",
    "GridSpec",
    "mollifier",
    "radial_bump",
    "product_bump",
    "mirrored_difference",
    "evaluate",
    "charge",
    "normalize_to_charge",
    "translate",
    "boost",
    "correlate",
]


@dataclass(frozen=True)
class Vector2:
    """Point of 2d Minkowski space, time ``x0`` and space ``x1``."""

    x0: float
    x1: float

    def __post_init__(self):
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "x1", float(self.x1))

    @property
    def x_plus(self) -> float:
        return self.x0 + self.x1

    @property
    def x_minus(self) -> float:
        return self.x0 - self.x1

    def minkowski_square(self) -> float:
        return self.x0 * self.x0 - self.x1 * self.x1

    def __add__(self, other: "Vector2") -> "Vector2":
        return Vector2(self.x0 + other.x0, self.x1 + other.x1)

    def __sub__(self, other: "Vector2") -> "Vector2":
        return Vector2(self.x0 - other.x0, self.x1 - other.x1)

    def __neg__(self) -> "Vector2":
        return Vector2(-self.x0, -self.x1)

    def __mul__(self, s: float) -> "Vector2":
        return Vector2(s * self.x0, s * self.x1)

    __rmul__ = __mul__

    def boosted(self, chi: float) -> "Vector2":
        """``Lambda(chi) x`` for the boost with rapidity ``chi``."""
        c, s = math.cosh(chi), math.sinh(chi)
        return Vector2(c * self.x0 + s * self.x1, s * self.x0 + c * self.x1)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x0, self.x1)


def _vec(v) -> Vector2:
    if isinstance(v, Vector2):
        return v
    a, b = v
    return Vector2(a, b)


def mollifier(r2):
    """``exp(-1/(1 - r2))`` for ``r2 < 1`` and exactly zero elsewhere (r2 = r**2)."""
    r2 = np.asarray(r2, dtype=float)
    inside = r2 < 1.0
    out = np.zeros_like(r2)
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


class Kind(str, Enum):
    RADIAL = "radial_bump"
    PRODUCT = "product_bump"
    MIRRORED = "mirrored_difference"
    SUM = "sum"


Box = tuple[tuple[float, float], tuple[float, float]]


@dataclass(frozen=True)
class TestFunction:
    """A real test function in D(R^2); immutable and hashable.

    The charge is computed on first use and cached on the instance; all
    transformations return new instances, which start with an empty cache.
    """

    __test__ = False  # not a pytest class

    kind: Kind
    center: Vector2 = Vector2(0.0, 0.0)
    radii: tuple[float, float] = (1.0, 1.0)
    amplitude: float = 1.0
    offset: Vector2 = Vector2(0.0, 0.0)
    rapidity: float = 0.0
    parts: tuple["TestFunction", ...] = ()
    cached_charge: float | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "center", _vec(self.center))
        object.__setattr__(self, "offset", _vec(self.offset))
        r0, r1 = (float(r) for r in self.radii)
        if not (r0 > 0 and r1 > 0):
            raise ValueError(f"radii must be positive, got {self.radii}")
        object.__setattr__(self, "radii", (r0, r1))
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "rapidity", float(self.rapidity))
        object.__setattr__(self, "parts", tuple(self.parts))
        if self.kind is Kind.SUM and not self.parts:
            raise ValueError("a sum needs at least one part")

    # -- evaluation -------------------------------------------------------

    def _local(self, x0, x1):
        d0 = np.asarray(x0, dtype=float) - self.center.x0
        d1 = np.asarray(x1, dtype=float) - self.center.x1
        if self.rapidity == 0.0:
            return d0, d1
        c, s = math.cosh(self.rapidity), math.sinh(self.rapidity)
        return c * d0 - s * d1, -s * d0 + c * d1

    def __call__(self, x0, x1):
        x0, x1 = np.broadcast_arrays(np.asarray(x0, dtype=float), np.asarray(x1, dtype=float))
        if self.kind is Kind.SUM:
            out = sum(p(x0, x1) for p in self.parts)
            return self.amplitude * out
        y0, y1 = self._local(x0, x1)
        r0, r1 = self.radii
        if self.kind is Kind.RADIAL:
            out = mollifier((y0 / r0) ** 2 + (y1 / r1) ** 2)
        elif self.kind is Kind.PRODUCT:
            out = mollifier((y0 / r0) ** 2) * mollifier((y1 / r1) ** 2)
        else:
            a0, a1 = self.offset.as_tuple()
            out = (mollifier(((y0 - a0) / r0) ** 2 + ((y1 - a1) / r1) ** 2)
                   - mollifier(((y0 + a0) / r0) ** 2 + ((y1 + a1) / r1) ** 2))
        (lo0, hi0), (lo1, hi1) = self.support_box
        inside = (x0 >= lo0) & (x0 <= hi0) & (x1 >= lo1) & (x1 <= hi1)
        return np.where(inside, self.amplitude * out, 0.0)

    @cached_property
    def support_box(self) -> Box:
        """Axis-aligned rectangle ((lo0, hi0), (lo1, hi1)) containing the support."""
        if self.kind is Kind.SUM:
            boxes = [p.support_box for p in self.parts]
            return ((min(b[0][0] for b in boxes), max(b[0][1] for b in boxes)),
                    (min(b[1][0] for b in boxes), max(b[1][1] for b in boxes)))
        r0, r1 = self.radii
        if self.kind is Kind.MIRRORED:
            a0, a1 = abs(self.offset.x0), abs(self.offset.x1)
            r0, r1 = r0 + a0, r1 + a1
        corners = [Vector2(s0 * r0, s1 * r1).boosted(self.rapidity)
                   for s0 in (-1, 1) for s1 in (-1, 1)]
        c = self.center
        return ((min(p.x0 for p in corners) + c.x0, max(p.x0 for p in corners) + c.x0),
                (min(p.x1 for p in corners) + c.x1, max(p.x1 for p in corners) + c.x1))

    @property
    def min_radius(self) -> float:
        if self.kind is Kind.SUM:
            return min(p.min_radius for p in self.parts)
        return min(self.radii)

    # -- algebra ----------------------------------------------------------

    def scaled(self, factor: float) -> "TestFunction":
        return replace(self, amplitude=self.amplitude * factor, cached_charge=None)

    def unit(self) -> "TestFunction":
        """Same shape with amplitude 1 (used as a correlation cache key)."""
        return replace(self, amplitude=1.0, cached_charge=None)

    def __neg__(self) -> "TestFunction":
        return self.scaled(-1.0)

    def __add__(self, other: "TestFunction") -> "TestFunction":
        return TestFunction(Kind.SUM, parts=(self, other))

    # -- serialization ----------------------------------------------------

    def to_record(self) -> dict:
        rec = {"kind": self.kind.value, "amplitude": self.amplitude}
        if self.kind is Kind.SUM:
            rec["parts"] = [p.to_record() for p in self.parts]
            return rec
        rec["center"] = list(self.center.as_tuple())
        rec["radii"] = list(self.radii)
        if self.kind is Kind.MIRRORED:
            rec["offset"] = list(self.offset.as_tuple())
        if self.rapidity:
            rec["rapidity"] = self.rapidity
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "TestFunction":
        known = {"kind", "center", "radii", "amplitude", "offset", "rapidity", "parts"}
        unknown = set(rec) - known
        if unknown:
            raise ValueError(f"unknown test-function keys: {sorted(unknown)}")
        kind = Kind(rec["kind"])
        parts = tuple(cls.from_record(p) for p in rec.get("parts", ()))
        return cls(kind,
                   center=tuple(rec.get("center", (0.0, 0.0))),
                   radii=tuple(rec.get("radii", (1.0, 1.0))),
                   amplitude=rec.get("amplitude", 1.0),
                   offset=tuple(rec.get("offset", (0.0, 0.0))),
                   rapidity=rec.get("rapidity", 0.0),
                   parts=parts)


def radial_bump(center=(0.0, 0.0), radii=(1.0, 1.0), amplitude=1.0) -> TestFunction:
    return TestFunction(Kind.RADIAL, center=center, radii=radii, amplitude=amplitude)


def product_bump(center=(0.0, 0.0), radii=(1.0, 1.0), amplitude=1.0) -> TestFunction:
    return TestFunction(Kind.PRODUCT, center=center, radii=radii, amplitude=amplitude)


def mirrored_difference(offset, center=(0.0, 0.0), radii=(1.0, 1.0), amplitude=1.0) -> TestFunction:
    """``A * (B(x - c - a) - B(x - c + a))``: a neutral dipole around ``center``."""
    return TestFunction(Kind.MIRRORED, center=center, radii=radii, amplitude=amplitude,
                        offset=offset)


def evaluate(f: TestFunction, x) -> float:
    """Value of ``f`` at a single point."""
    x = _vec(x)
    return float(f(x.x0, x.x1))


def charge(f: TestFunction, spec: QuadSpec = DEFAULT_SPEC) -> float:
    """``q_f``, the integral of ``f`` over R^2 (cached on ``f``)."""
    if f.cached_charge is not None:
        return f.cached_charge
    if f.amplitude == 0.0:
        q = 0.0
    elif f.kind is Kind.SUM:
        q = f.amplitude * sum(charge(p, spec) for p in f.parts)
    else:
        q, _ = integrate_2d(f, f.support_box, spec=spec.replace(abs_tol=min(spec.abs_tol, 1e-13)))
    object.__setattr__(f, "cached_charge", float(q))
    return float(q)


def normalize_to_charge(f: TestFunction, q_target: float, spec: QuadSpec = DEFAULT_SPEC) -> TestFunction:
    """Rescale the amplitude of ``f`` so that its charge becomes ``q_target``."""
    q = charge(f, spec)
    if q_target == 0.0:
        raise ValueError("cannot rescale to zero charge; use amplitude 0 instead")
    if abs(q) <= spec.abs_tol:
        raise ValueError(f"test function has (numerically) zero charge {q:.3g}")
    out = f.scaled(q_target / q)
    object.__setattr__(out, "cached_charge", float(q_target))
    return out


def translate(f: TestFunction, a) -> TestFunction:
    """``x -> f(x - a)``."""
    a = _vec(a)
    if f.kind is Kind.SUM:
        return replace(f, parts=tuple(translate(p, a) for p in f.parts), cached_charge=None)
    return replace(f, center=f.center + a, cached_charge=None)


def boost(f: TestFunction, chi: float) -> TestFunction:
    """``x -> f(Lambda(-chi) x)``: the boost with rapidity ``chi`` about the origin."""
    if f.kind is Kind.SUM:
        return replace(f, parts=tuple(boost(p, chi) for p in f.parts), cached_charge=None)
    return replace(f, center=f.center.boosted(chi), rapidity=f.rapidity + chi, cached_charge=None)


# --------------------------------------------------------------------------
# smearing kernel in time


@dataclass(frozen=True)
class SmearingKernel:
    """Symmetric time profile ``h`` on [-1, 1], h >= 0, normalized to 1.

    ``h(t) = b(|t|) / Z`` with the mollifier ``b``; evaluated on ``|t|`` so
    the symmetry is exact.
    """

    @cached_property
    def norm(self) -> float:
        z, _ = integrate_1d(lambda t: mollifier(t * t), -1.0, 1.0,
                            spec=QuadSpec(abs_tol=1e-15, rel_tol=1e-14))
        return z

    def __call__(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        return mollifier(t * t) / self.norm

    @staticmethod
    def scale(T: float) -> float:
        """``s(T) = ln|T|``."""
        return math.log(abs(T))

    def h_T(self, t, T: float):
        s = self.scale(T)
        return self((np.asarray(t, dtype=float) - T) / s) / s

    def nodes(self, order: int):
        """Gauss-Legendre nodes on supp h with weights ``w_i h(t_i)``.

        The weights are renormalized to sum to one, so the discrete average
        is itself a probability measure (constants average exactly).
        """
        x, w = np.polynomial.legendre.leggauss(order)
        wh = w * self(x)
        return x, wh / wh.sum()


# --------------------------------------------------------------------------
# correlations


@dataclass(frozen=True)
class GridSpec:
    resolution: int = 64
    node_count: int = 64
    interpolation_order: int = 3

    def __post_init__(self):
        if self.resolution <= 0 or self.node_count <= 0:
            raise ValueError("grid resolution must be positive")
        if self.interpolation_order not in (1, 3, 5):
            raise ValueError("interpolation_order must be 1, 3 or 5")


MIN_SAMPLES_PER_RADIUS = 8


@dataclass(frozen=True, eq=False)
class Correlation:
    """``C(z) = int f(z + y) g(y) d^2y`` sampled on a uniform grid.

    ``C`` vanishes outside ``support_box``; inside it is interpolated by a
    tensor spline of order ``interpolation_order``.  ``interp_error`` is the
    largest deviation between the spline and direct quadrature at a few
    cell midpoints, measured at construction.
    """

    support_box: Box
    axis0: np.ndarray
    axis1: np.ndarray
    sample_grid: np.ndarray
    interpolation_order: int = 3
    interp_error: float = 0.0

    @property
    def grid_spacing(self) -> tuple[float, float]:
        return (float(self.axis0[1] - self.axis0[0]), float(self.axis1[1] - self.axis1[0]))

    @cached_property
    def _spline(self):
        k = self.interpolation_order
        return RectBivariateSpline(self.axis0, self.axis1, self.sample_grid, kx=k, ky=k, s=0)

    def __call__(self, z0, z1):
        z0, z1 = np.broadcast_arrays(np.asarray(z0, dtype=float), np.asarray(z1, dtype=float))
        (lo0, hi0), (lo1, hi1) = self.support_box
        inside = (z0 >= lo0) & (z0 <= hi0) & (z1 >= lo1) & (z1 <= hi1)
        out = np.zeros(z0.shape)
        if inside.any():
            out[inside] = self._spline.ev(z0[inside], z1[inside])
        return out

    def integral(self) -> float:
        """Trapezoidal sum of the samples; spectrally accurate for smooth C."""
        h0, h1 = self.grid_spacing
        w0 = np.full(self.axis0.size, h0)
        w1 = np.full(self.axis1.size, h1)
        w0[[0, -1]] *= 0.5
        w1[[0, -1]] *= 0.5
        return float(w0 @ self.sample_grid @ w1)

    def scaled(self, factor: float) -> "Correlation":
        return Correlation(self.support_box, self.axis0, self.axis1, factor * self.sample_grid,
                           self.interpolation_order, abs(factor) * self.interp_error)

    def reflected(self) -> "Correlation":
        """``z -> C(-z)``, i.e. the correlation with the arguments swapped."""
        (lo0, hi0), (lo1, hi1) = self.support_box
        return Correlation(((-hi0, -lo0), (-hi1, -lo1)), -self.axis0[::-1], -self.axis1[::-1],
                           self.sample_grid[::-1, ::-1].copy(), self.interpolation_order,
                           self.interp_error)

    def translated(self, a) -> "Correlation":
        """``z -> C(z - a)``."""
        a = _vec(a)
        (lo0, hi0), (lo1, hi1) = self.support_box
        return Correlation(((lo0 + a.x0, hi0 + a.x0), (lo1 + a.x1, hi1 + a.x1)),
                           self.axis0 + a.x0, self.axis1 + a.x1, self.sample_grid,
                           self.interpolation_order, self.interp_error)


def _overlap_correlation(f: TestFunction, g: TestFunction, z0, z1, nodes: int):
    """Direct quadrature of C at the points (z0, z1), vectorized over points."""
    (f0l, f0h), (f1l, f1h) = f.support_box
    (g0l, g0h), (g1l, g1h) = g.support_box
    z0 = np.asarray(z0, dtype=float).ravel()
    z1 = np.asarray(z1, dtype=float).ravel()
    # y must lie in supp g and in supp f - z
    lo0 = np.maximum(g0l, f0l - z0)
    hi0 = np.minimum(g0h, f0h - z0)
    lo1 = np.maximum(g1l, f1l - z1)
    hi1 = np.minimum(g1h, f1h - z1)
    empty = (hi0 <= lo0) | (hi1 <= lo1)
    hi0 = np.where(empty, lo0, hi0)
    hi1 = np.where(empty, lo1, hi1)
    # composite Gauss-Legendre: 4 panels of nodes/4 points per axis
    per = max(4, nodes // 4)
    x, w = np.polynomial.legendre.leggauss(per)
    t = (np.arange(4)[:, None] + 0.5 * (x[None, :] + 1.0)).ravel() / 4.0
    wt = np.tile(w, 4) / 8.0
    out = np.empty(z0.size)
    chunk = max(1, 2_000_000 // (t.size * t.size))
    for s in range(0, z0.size, chunk):
        sl = slice(s, s + chunk)
        y0 = lo0[sl, None] + (hi0 - lo0)[sl, None] * t[None, :]
        y1 = lo1[sl, None] + (hi1 - lo1)[sl, None] * t[None, :]
        Y0 = y0[:, :, None]
        Y1 = y1[:, None, :]
        vals = f(Y0 + z0[sl, None, None], Y1 + z1[sl, None, None]) * g(Y0, Y1)
        out[sl] = ((hi0 - lo0)[sl] * (hi1 - lo1)[sl]
                   * np.einsum("kij,i,j->k", vals, wt, wt))
    return out


@lru_cache(maxsize=64)
def _unit_correlation(f: TestFunction, g: TestFunction, grid: GridSpec) -> Correlation:
    (f0l, f0h), (f1l, f1h) = f.support_box
    (g0l, g0h), (g1l, g1h) = g.support_box
    box = ((f0l - g0h, f0h - g0l), (f1l - g1h, f1h - g1l))
    n = grid.resolution
    ax0 = np.linspace(box[0][0], box[0][1], n)
    ax1 = np.linspace(box[1][0], box[1][1], n)
    spacing = max(ax0[1] - ax0[0], ax1[1] - ax1[0])
    r_min = min(f.min_radius, g.min_radius)
    if r_min / spacing < MIN_SAMPLES_PER_RADIUS:
        raise ValueError(f"correlation grid too coarse: {r_min / spacing:.1f} samples per "
                         f"radius (need {MIN_SAMPLES_PER_RADIUS})")
    Z0, Z1 = np.meshgrid(ax0, ax1, indexing="ij")
    vals = _overlap_correlation(f, g, Z0, Z1, grid.node_count).reshape(n, n)
    corr = Correlation(box, ax0, ax1, vals, grid.interpolation_order)
    # spot-check the spline at cell midpoints against direct quadrature
    rng = np.random.default_rng(n)
    i = rng.integers(n // 4, 3 * n // 4, size=12)
    j = rng.integers(n // 4, 3 * n // 4, size=12)
    m0 = 0.5 * (ax0[i] + ax0[i + 1])
    m1 = 0.5 * (ax1[j] + ax1[j + 1])
    direct = _overlap_correlation(f, g, m0, m1, grid.node_count)
    err = float(np.max(np.abs(corr(m0, m1) - direct)))
    return Correlation(box, ax0, ax1, vals, grid.interpolation_order, err)


def correlate(f: TestFunction, g: TestFunction, grid_spec: GridSpec = GridSpec()) -> Correlation:
    """Sample ``C(z) = int f(z + y) g(y) d^2y`` on a grid covering supp f - supp g.

    With this convention ``int int f(x) K(x - y + s) g(y) = int K(z + s) C(z) d^2z``.
    Results are cached per (shape of f, shape of g); amplitudes enter as a
    scale factor, and ``correlate(g, f)`` is the exact reflection of
    ``correlate(f, g)``.
    """
    scale = f.amplitude * g.amplitude
    fu, gu = f.unit(), g.unit()
    if scale == 0.0:
        base = _unit_correlation(fu, gu, grid_spec)
        return base.scaled(0.0)
    # canonical order so that swapped pairs share one grid
    if _order_key(gu) < _order_key(fu):
        return _unit_correlation(gu, fu, grid_spec).reflected().scaled(scale)
    return _unit_correlation(fu, gu, grid_spec).scaled(scale)


def _order_key(f: TestFunction) -> str:
    return repr(f.to_record())
