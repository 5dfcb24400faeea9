"""Regularized two-point function of the 2d massless scalar field.

Closed forms (principal branch, cut along the negative real axis)::

    w_reg(z)  = -1/(4 pi) [ ln(mu^2 |z^2|) + theta(z^2) sgn(z0) i pi ]
    w_chi(u)  = -1/(4 pi) [ ln(mu |u|) + sgn(u) i pi / 2 ]
    w_reg(z)  = w_chi(z+) + w_chi(z-)
    D0(z)     = w_reg(z) - w_reg(-z) = -(i/2) theta(z^2) sgn(z0)

The scale ``mu`` is fixed by the momentum-space regulator ``v`` through
``I(u) = int_0^inf dk/k (v(k) - exp(-iku)) = ln(mu |u|) + sgn(u) i pi/2``,
which :func:`spectral_I` and :func:`fit_mu` evaluate numerically.
:func:`spectral_smeared_oracle` computes smeared kernels directly in
momentum space and is kept independent of the closed forms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .quadrature import (DEFAULT_SPEC, QuadSpec, SingularLine, LineKind,
                         integrate_1d, integrate_1d_oscillatory, integrate_2d, gauss_rule)
from .testfn import Vector2, _vec

__all__ = [
    "EULER_GAMMA",
    "KernelParams",
    "Regulator",
    "SingularityError",
    "RegulatorWarning",
    "w_reg",
    "w_chiral",
    "w_reg_point",
    "w_chiral_point",
    "commutator_point",
    "massive_commutator",
    "smeared_kernel",
    "smeared_chiral",
    "smeared_commutator",
    "spectral_I",
    "fit_mu",
    "spectral_smeared_oracle",
]

EULER_GAMMA = 0.57721566490153286061
FOUR_PI = 4.0 * math.pi


class SingularityError(ValueError):
    """Pointwise kernel evaluation on the light cone."""


class RegulatorWarning(UserWarning):
    """The fitted scale is not u-independent: the regulator is not admissible."""


@dataclass(frozen=True)
class KernelParams:
    mu_v: float = math.exp(EULER_GAMMA)

    def __post_init__(self):
        if not self.mu_v > 0:
            raise ValueError(f"mu_v must be positive, got {self.mu_v}")


# --------------------------------------------------------------------------
# closed forms (vectorized)


def w_chiral(u, mu: float):
    """``-1/(4 pi) [ln(mu |u|) + sgn(u) i pi/2]``; infinite at u = 0."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore"):
        return -(np.log(mu * np.abs(u)) + 0.5j * np.pi * np.sign(u)) / FOUR_PI


def w_reg(z0, z1, mu: float):
    """Branch-resolved ``w_reg`` at off-cone points (arrays broadcast)."""
    z0 = np.asarray(z0, dtype=float)
    z1 = np.asarray(z1, dtype=float)
    zp = z0 + z1
    zm = z0 - z1
    # ln(mu^2 |z^2|) through the light-cone factors avoids cancellation
    with np.errstate(divide="ignore"):
        log_part = np.log(mu * np.abs(zp)) + np.log(mu * np.abs(zm))
    timelike = (zp * zm) > 0
    phase = np.where(timelike, np.sign(z0), 0.0)
    return -(log_part + 1j * np.pi * phase) / FOUR_PI


def _check_off_cone(z: Vector2):
    if z.x_plus == 0.0 or z.x_minus == 0.0:
        raise SingularityError(f"kernel is singular on the light cone, got z = {z}")


def w_reg_point(z, params: KernelParams = KernelParams()) -> complex:
    z = _vec(z)
    _check_off_cone(z)
    return complex(w_reg(z.x0, z.x1, params.mu_v))


def w_chiral_point(u: float, sign: int, params: KernelParams = KernelParams()) -> complex:
    """Chiral kernel ``w^{sign}`` at light-cone coordinate ``u = z^{sign}``.

    Both chiralities have the same profile; ``sign`` only records which
    light-cone coordinate ``u`` stands for.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if u == 0.0:
        raise SingularityError("chiral kernel is singular at u = 0")
    return complex(w_chiral(u, params.mu_v))


def commutator_point(z) -> complex:
    """``D0(z) = -(i/2) theta(z^2) sgn(z0)``, independent of mu."""
    z = _vec(z)
    _check_off_cone(z)
    if z.minkowski_square() > 0:
        return -0.5j * math.copysign(1.0, z.x0)
    return 0.0j


def massive_commutator(z, m: float, spec: QuadSpec = DEFAULT_SPEC) -> complex:
    """Commutator function of mass ``m`` from its momentum-space integral.

    ``(2 pi)^-1 int dp/(2 w) (e^{-ip.z} - e^{ip.z})`` with ``w = sqrt(p^2 + m^2)``.
    In the light-cone variable ``k = w + p`` the phase is
    ``p.z = (z- k + z+ m^2 / k) / 2`` and ``dp/w = dk/k``, giving
    ``-(i / 2 pi) int_0^inf dk/k sin(a k + b / k)``.  The integral is split
    at ``k0 = sqrt(|b/a|)``; the low part is mapped by ``k -> 1/k`` so both
    halves are Dirichlet-type tails handled by cutoff extrapolation.
    Serves as an oracle for :func:`commutator_point` as ``m -> 0``.
    """
    z = _vec(z)
    _check_off_cone(z)
    if not m > 0:
        raise ValueError("mass must be positive")
    a, b = 0.5 * z.x_minus, 0.5 * z.x_plus * m * m
    k0 = math.sqrt(abs(b / a))
    hi = _dirichlet_tail(lambda k: np.sin(a * k + b / k) / k, k0, abs(a), spec)
    lo = _dirichlet_tail(lambda s: np.sin(b * s + a / s) / s, 1.0 / k0, abs(b), spec)
    return complex(-1j * (hi + lo) / (2.0 * math.pi))


def _dirichlet_tail(func, start, omega, spec):
    """``int_start^inf func(k) dk`` for ``func ~ sin(omega k + ...) / k``."""
    period = 2.0 * math.pi / omega
    cuts = [start + period * m for m in (16, 24, 32, 48, 64, 96, 128)]
    val, _ = integrate_1d_oscillatory(func, cuts, spec, singular=[start], lower=start)
    return float(np.real(val))


# --------------------------------------------------------------------------
# regulators


class RegulatorKind(str, Enum):
    SHARP = "sharp_cutoff"
    EXPONENTIAL = "smooth_exponential"
    TABULATED = "custom_tabulated"


@dataclass(frozen=True)
class Regulator:
    """Momentum-space subtraction ``v(|p|, p)`` as a function of ``k = |p|``.

    ``sharp_cutoff``: 1 for k <= scale, 0 beyond.
    ``smooth_exponential``: exp(-k / scale).
    ``custom_tabulated``: linear interpolation of ``table`` = (k, v) pairs,
    0 beyond the last knot.
    """

    kind: RegulatorKind = RegulatorKind.SHARP
    scale: float = 1.0
    table: tuple[tuple[float, float], ...] = ()
    holder: tuple[float, float, float] = field(default=(0.0, 1.0, 1.0))  # (c, eps, r)

    def __post_init__(self):
        object.__setattr__(self, "kind", RegulatorKind(self.kind))
        if not self.scale > 0:
            raise ValueError("regulator scale must be positive")
        if self.kind is RegulatorKind.TABULATED:
            ks = [k for k, _ in self.table]
            if len(ks) < 2 or ks[0] != 0.0 or any(b <= a for a, b in zip(ks, ks[1:])):
                raise ValueError("table must start at k = 0 with increasing knots")

    @classmethod
    def parse(cls, text: str) -> "Regulator":
        """``sharp:<r>`` or ``exp:<scale>``."""
        name, _, arg = text.partition(":")
        value = float(arg) if arg else 1.0
        if name in ("sharp", "sharp_cutoff"):
            return cls(RegulatorKind.SHARP, value, holder=(0.0, 1.0, value))
        if name in ("exp", "smooth_exponential"):
            return cls(RegulatorKind.EXPONENTIAL, value, holder=(1.0 / value, 1.0, value))
        raise ValueError(f"unknown regulator {text!r}")

    def __call__(self, k):
        k = np.abs(np.asarray(k, dtype=float))
        if self.kind is RegulatorKind.SHARP:
            return np.where(k <= self.scale, 1.0, 0.0)
        if self.kind is RegulatorKind.EXPONENTIAL:
            return np.exp(-k / self.scale)
        ks, vs = np.array(self.table).T
        return np.interp(k, ks, vs, right=0.0)

    @property
    def breakpoints(self) -> list[float]:
        if self.kind is RegulatorKind.SHARP:
            return [self.scale]
        if self.kind is RegulatorKind.TABULATED:
            return [k for k, _ in self.table[1:]]
        return []

    def check(self, grid=None) -> bool:
        """Check v(0) = 1, symmetry and the recorded Hoelder bound on a grid."""
        c, eps, r = self.holder
        if grid is None:
            grid = np.linspace(-r, r, 201)
        grid = np.asarray(grid, dtype=float)
        ok = float(self(0.0)) == 1.0
        ok &= bool(np.all(self(grid) == self(-grid)))
        small = np.abs(grid) < r
        ok &= bool(np.all(np.abs(self(grid[small]) - 1.0) <= c * np.abs(grid[small]) ** eps + 1e-15))
        return ok

    def to_text(self) -> str:
        if self.kind is RegulatorKind.SHARP:
            return f"sharp:{self.scale:g}"
        if self.kind is RegulatorKind.EXPONENTIAL:
            return f"exp:{self.scale:g}"
        return "tabulated"


# --------------------------------------------------------------------------
# spectral side


def _cutoffs(u: float) -> list[float]:
    period = 2.0 * math.pi / abs(u)
    return [period * m for m in (16, 24, 32, 48, 64, 96, 128)]


def spectral_I(u: float, v: Regulator, spec: QuadSpec = DEFAULT_SPEC) -> complex:
    """``I(u) = int_0^inf dk/k (v(k) - e^{-iku})`` by cutoff extrapolation."""
    if u == 0.0:
        raise SingularityError("I(u) is singular at u = 0")

    def integrand(k):
        k = np.asarray(k, dtype=float)
        ku = k * u
        # v - e^{-iku} = (v - 1) + 2 sin^2(ku/2) + i sin(ku), no cancellation at small k
        one_minus = 2.0 * np.sin(0.5 * ku) ** 2 + 1j * np.sin(ku)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = ((v(k) - 1.0) + one_minus) / k
        return np.where(k > 0, out, 1j * u)

    cuts = _cutoffs(u)
    # the regulator part is not oscillatory; make sure it is fully inside
    # the first cutoff for the tabulated/sharp kinds
    bps = [b for b in v.breakpoints if b < cuts[-1]]
    if bps and bps[-1] >= cuts[0]:
        shift = 2.0 * math.pi / abs(u) * math.ceil(bps[-1] * abs(u) / (2.0 * math.pi))
        cuts = [c + shift for c in cuts]
    value, _ = integrate_1d_oscillatory(integrand, cuts, spec, points=bps, singular=[0.0])
    return complex(value)


def fit_mu(v: Regulator, u_grid: Sequence[float] = (0.5, 1.0, 2.0, 3.0),
           spec: QuadSpec = DEFAULT_SPEC, max_residual: float = 1e-4):
    """Fit ``Re I(u) = ln(mu u)`` over positive ``u``.

    Returns
    -------
    mu_v, residual
        ``mu_v = exp(mean(Re I(u) - ln u))``; ``residual`` is the largest
        deviation of ``Re I(u) - ln u`` from that mean.  A
        :class:`RegulatorWarning` is issued when it exceeds ``max_residual``.
    """
    us = [float(u) for u in u_grid if u > 0]
    if len(us) < 3:
        raise ValueError("u_grid needs at least 3 positive entries")
    consts = np.array([spectral_I(u, v, spec).real - math.log(u) for u in us])
    log_mu = float(np.mean(consts))
    residual = float(np.max(np.abs(consts - log_mu)))
    if residual > max_residual:
        warnings.warn(f"Re I(u) - ln u varies by {residual:.3g} over u_grid; "
                      "regulator violates the admissibility assumptions", RegulatorWarning,
                      stacklevel=2)
    return math.exp(log_mu), residual


def _shell_marginals(f, nodes_per_unit: int = 96):
    """Light-cone marginals of ``f`` on Gauss nodes: returns (u, v, Fu, Fv, w_u, w_v).

    ``Fv[j] = 1/2 int f du`` along the line x- = v_j; likewise ``Fu``.
    """
    (a0, b0), (a1, b1) = f.support_box
    u_lo, u_hi = a0 + a1, b0 + b1
    v_lo, v_hi = a0 - b1, b0 - a1
    n = 12

    def rule(lo, hi):
        panels = max(8, int(math.ceil((hi - lo) * nodes_per_unit / n)))
        edges = np.linspace(lo, hi, panels + 1)
        x, w, _ = gauss_rule(n)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()

    u, wu = rule(u_lo, u_hi)
    v, wv = rule(v_lo, v_hi)
    F = f(0.5 * (u[:, None] + v[None, :]), 0.5 * (u[:, None] - v[None, :]))
    Fv = 0.5 * (wu @ F)
    Fu = 0.5 * (F @ wv)
    return u, v, Fu, Fv, wu, wv


def _shell_transform(marginal, k):
    """``int dx F(x) e^{i k x}`` for each k (marginal = (x, F, w))."""
    x, F, w = marginal
    k = np.asarray(k, dtype=float)
    out = np.empty(k.shape, dtype=complex)
    flat = k.ravel()
    res = out.reshape(-1)
    chunk = max(1, 4_000_000 // max(x.size, 1))
    for s in range(0, flat.size, chunk):
        res[s:s + chunk] = np.exp(1j * np.outer(flat[s:s + chunk], x)) @ (w * F)
    return out


def spectral_smeared_oracle(f, g, v: Regulator, spec: QuadSpec = DEFAULT_SPEC,
                            shift=(0.0, 0.0), k_max: float | None = None) -> complex:
    """``w_reg(f_a, g_b)`` evaluated on the mass shell, ``shift = a - b``.

    ``(2 pi)^-1 int dk/(2|k|) [ f^(-p) g^(p) e^{-ip.shift} - v(k) q_f q_g ]``
    with ``p = (|k|, k)`` and ``f^(p) = int f(x) e^{i p.x} d^2x``.  On the
    shell ``p.x = k x-`` for ``k > 0`` and ``|k| x+`` for ``k < 0``, so the
    transforms are taken from light-cone marginals of a 2d Gauss rule.
    """
    s = _vec(shift)
    r_min = min(_min_radius(f), _min_radius(g))
    if k_max is None:
        k_max = 400.0 / r_min
    # about 7.5 nodes per wavelength at k_max keeps e^{ikx} resolved on 12-point panels
    density = max(96, int(math.ceil(1.2 * k_max)))
    uf, vf, Fu_f, Fv_f, wu_f, wv_f = _shell_marginals(f, nodes_per_unit=density)
    ug, vg, Fu_g, Fv_g, wu_g, wv_g = _shell_marginals(g, nodes_per_unit=density)
    qf = float(wv_f @ Fv_f)
    qg = float(wv_g @ Fv_g)

    def side(sign):
        # sign=+1: k > 0, phase variable x-; sign=-1: k < 0, variable x+
        if sign > 0:
            mf, mg, s_lc = (vf, Fv_f, wv_f), (vg, Fv_g, wv_g), s.x_minus
        else:
            mf, mg, s_lc = (uf, Fu_f, wu_f), (ug, Fu_g, wu_g), s.x_plus

        def integrand(k):
            fh = _shell_transform(mf, k)
            gh = _shell_transform(mg, k)
            # p.shift = |k| s0 - k s1 = |k| s^{-/+}
            prod = np.conj(fh) * gh * np.exp(-1j * k * s_lc)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = (prod - v(k) * qf * qg) / (2.0 * k)
            return np.where(k > 0, out, 0.0) / (2.0 * math.pi)

        pts = [b for b in v.breakpoints if b < k_max]
        val, _ = integrate_1d(integrand, 0.0, k_max, points=pts, spec=spec)
        # beyond k_max only the regulator term can survive
        tail = _regulator_tail(v, k_max, spec) * qf * qg / (4.0 * math.pi)
        return val - tail

    return complex(side(+1) + side(-1))


def _regulator_tail(v: Regulator, k_max: float, spec: QuadSpec) -> float:
    if v.kind is RegulatorKind.SHARP or v.kind is RegulatorKind.TABULATED:
        if max(v.breakpoints) <= k_max:
            return 0.0
    val, _ = integrate_1d(lambda t: v(k_max / t) / t, 0.0, 1.0, spec=spec)
    return float(val)


def _min_radius(f) -> float:
    return getattr(f, "min_radius", 1.0)


# --------------------------------------------------------------------------
# smeared kernels


def _lines_for(shift: Vector2, chiralities=(1, -1)):
    lines = []
    if 1 in chiralities:
        lines.append(SingularLine(LineKind.X_PLUS, -shift.x_plus))
    if -1 in chiralities:
        lines.append(SingularLine(LineKind.X_MINUS, -shift.x_minus))
    return lines


def _interp_budget(C, value: complex) -> float:
    """Heuristic kernel error caused by interpolating ``C``.

    The spline's relative error (spot-checked at construction) times the
    size of the integral, with ``int |C| / 2 pi`` as a floor for values
    that cancel.
    """
    err = getattr(C, "interp_error", 0.0)
    samples = getattr(C, "sample_grid", None)
    if not err or samples is None:
        return 0.0
    peak = float(np.max(np.abs(samples)))
    if peak == 0.0:
        return 0.0
    h0, h1 = C.grid_spacing
    mass = float(np.sum(np.abs(samples))) * h0 * h1
    return err / peak * (abs(value) + mass / (2.0 * math.pi))


def smeared_kernel(C, shift=(0.0, 0.0), params: KernelParams = KernelParams(),
                   spec: QuadSpec = DEFAULT_SPEC, return_error: bool = False):
    """``int w_reg(z + shift) C(z) d^2z`` over the support box of ``C``.

    ``C`` is any vectorized density with a ``support_box`` (a
    :class:`~infrascat.testfn.Correlation` or a test function).  The two
    light-cone lines through ``-shift`` are declared to the quadrature
    whenever they cross the box.  With ``return_error`` the quadrature
    estimate plus an interpolation budget for ``C`` is returned as well.
    """
    s = _vec(shift)
    mu = params.mu_v

    def integrand(z0, z1):
        return w_reg(z0 + s.x0, z1 + s.x1, mu) * C(z0, z1)

    value, err = integrate_2d(integrand, C.support_box, _lines_for(s), spec)
    if return_error:
        return complex(value), float(err) + _interp_budget(C, value)
    return complex(value)


def smeared_chiral(C, sign: int, shift=(0.0, 0.0), params: KernelParams = KernelParams(),
                   spec: QuadSpec = DEFAULT_SPEC) -> complex:
    """``int w^{sign}(z + shift) C(z) d^2z``, the chiral kernel depending on z^{sign}."""
    s = _vec(shift)
    mu = params.mu_v
    if sign == 1:
        def integrand(z0, z1):
            return w_chiral(z0 + z1 + s.x_plus, mu) * C(z0, z1)
    elif sign == -1:
        def integrand(z0, z1):
            return w_chiral(z0 - z1 + s.x_minus, mu) * C(z0, z1)
    else:
        raise ValueError("sign must be +1 or -1")
    value, _ = integrate_2d(integrand, C.support_box, _lines_for(s, (sign,)), spec)
    return complex(value)


def smeared_commutator(C, shift=(0.0, 0.0), spec: QuadSpec = DEFAULT_SPEC) -> complex:
    """``int D0(z + shift) C(z) d^2z``; D0 is piecewise constant, so the
    light-cone lines are breakpoints rather than singularities."""
    s = _vec(shift)

    def integrand(z0, z1):
        a0, a1 = z0 + s.x0, z1 + s.x1
        timelike = (a0 + a1) * (a0 - a1) > 0
        return np.where(timelike, -0.5j * np.sign(a0), 0.0) * C(z0, z1)

    value, _ = integrate_2d(integrand, C.support_box, _lines_for(s), spec)
    return complex(value)
