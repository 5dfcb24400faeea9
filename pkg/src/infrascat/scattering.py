"""Scattering amplitude of two charged infraparticles at finite T.

With ``f1 = -g``, ``f2 = -f``, ``f3 = f``, ``f4 = g`` placed at
``(t1)_-``, ``(t2)_+``, ``-(t3)_+``, ``-(t4)_-`` (``t_pm = (t, +-t)``,
``t_i = T + s(T) tau_i``), the amplitude at time scale T is the h-average
of the four-point vacuum expectation divided by the product of the two
two-point averages of factors (1, 4) and (2, 3).  Its limit is
``exp(-i q_f q_g / 2)``.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .kernel import KernelParams, smeared_chiral
from .quadrature import DEFAULT_SPEC, QuadSpec
from .testfn import (GridSpec, SmearingKernel, TestFunction, Vector2, charge, correlate)
from .weyl import DEFAULT_CHARGE_TOL, WeylFactor, WeylWord, log_pair_vev, vev

__all__ = [
    "CollisionConfig",
    "FactorTemplate",
    "AmplitudeSeries",
    "NeutralityResult",
    "DegenerateConfigError",
    "build_factors",
    "pair_table",
    "s_T",
    "s_T_closed",
    "amplitude_series",
    "extrapolate",
    "neutrality_decay",
    "loglog_slope",
    "PAIRS",
]

PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
DENOMINATOR_FLOOR = 1e-300


class DegenerateConfigError(RuntimeError):
    """The denominator of the amplitude ratio vanished numerically."""


@dataclass(frozen=True)
class CollisionConfig:
    f: TestFunction
    g: TestFunction
    T_grid: tuple[float, ...] = (math.e ** 3, 50.0, 200.0, 1000.0, 5000.0, 1e4)
    h: SmearingKernel = field(default_factory=SmearingKernel)
    h_quad_order: int = 6
    params: KernelParams = KernelParams()
    spec: QuadSpec = DEFAULT_SPEC
    grid: GridSpec = GridSpec()

    def __post_init__(self):
        object.__setattr__(self, "T_grid", tuple(float(T) for T in self.T_grid))
        if any(T <= math.e for T in self.T_grid):
            raise ValueError("every T must exceed e so that s(T) = ln T > 1")
        if any(b <= a for a, b in zip(self.T_grid, self.T_grid[1:])):
            raise ValueError("T_grid must be strictly increasing")
        if self.h_quad_order < 1:
            raise ValueError("h_quad_order must be positive")

    @property
    def target(self) -> complex:
        return complex(np.exp(-0.5j * charge(self.f) * charge(self.g)))


@dataclass(frozen=True)
class FactorTemplate:
    """A Weyl factor whose translation is ``direction * t`` for a time ``t``."""

    f: TestFunction
    sign: int
    direction: tuple[float, float]

    def at(self, t: float) -> WeylFactor:
        d0, d1 = self.direction
        return WeylFactor(self.f, Vector2(d0 * t, d1 * t), self.sign)

    @property
    def charge(self) -> float:
        return self.sign * charge(self.f)


def build_factors(f: TestFunction, g: TestFunction) -> tuple[FactorTemplate, ...]:
    return (
        FactorTemplate(g, -1, (1.0, -1.0)),
        FactorTemplate(f, -1, (1.0, 1.0)),
        FactorTemplate(f, 1, (-1.0, -1.0)),
        FactorTemplate(g, 1, (-1.0, 1.0)),
    )


def _times(T: float, tau: np.ndarray) -> np.ndarray:
    return T + SmearingKernel.scale(T) * tau


def pair_table(i: int, j: int, factors: Sequence[FactorTemplate], T: float, h_nodes,
               params: KernelParams = KernelParams(), spec: QuadSpec = DEFAULT_SPEC,
               grid: GridSpec = GridSpec(), return_error: bool = False):
    """Log pair VEVs ``-w(factor_i at node a, factor_j at node b)`` as a matrix.

    Entries with identical shifts (e.g. the lightlike pairs, which depend on
    ``tau_a + tau_b`` only) are computed once.
    """
    times = _times(T, np.asarray(h_nodes, dtype=float))
    n = times.size
    table = np.empty((n, n), dtype=complex)
    errors = np.empty((n, n))
    seen: dict[tuple[float, float], tuple[complex, float]] = {}
    for a in range(n):
        fa = factors[i].at(times[a])
        for b in range(n):
            fb = factors[j].at(times[b])
            shift = fa.translation - fb.translation
            key = (round(shift.x0, 9), round(shift.x1, 9))
            if key not in seen:
                seen[key] = log_pair_vev(fa, fb, params, spec, grid, return_error=True)
            table[a, b], errors[a, b] = seen[key]
    return (table, errors) if return_error else table


def _log_average(logs: np.ndarray, weights: np.ndarray) -> complex:
    """``log(sum weights * exp(logs))`` with the largest real part factored out."""
    m = float(np.max(logs.real))
    total = np.sum(weights * np.exp(logs - m))
    if abs(total) < DENOMINATOR_FLOOR:
        raise DegenerateConfigError("h-average vanished")
    return m + complex(np.log(total))


def _ratio(tables: dict, weights: np.ndarray) -> complex:
    P = tables
    num_logs = (P[0, 1][:, :, None, None] + P[0, 2][:, None, :, None]
                + P[0, 3][:, None, None, :] + P[1, 2][None, :, :, None]
                + P[1, 3][None, :, None, :] + P[2, 3][None, None, :, :])
    W4 = (weights[:, None, None, None] * weights[None, :, None, None]
          * weights[None, None, :, None] * weights[None, None, None, :])
    W2 = weights[:, None] * weights[None, :]
    log_num = _log_average(num_logs, W4)
    log_den = _log_average(P[0, 3], W2) + _log_average(P[1, 2], W2)
    if (log_den.real < math.log(DENOMINATOR_FLOOR)):
        raise DegenerateConfigError("denominator below floor")
    return complex(np.exp(log_num - log_den))


def s_T(config: CollisionConfig, T: float) -> tuple[complex, float]:
    """Finite-T amplitude and a propagated error estimate.

    The error sums, over the six pair tables, the largest per-entry error;
    the denominator reuses tables (1, 4) and (2, 3), whose errors count twice.
    """
    factors = build_factors(config.f, config.g)
    nodes, weights = config.h.nodes(config.h_quad_order)
    tables, errs = {}, {}
    for i, j in PAIRS:
        tables[i, j], e = pair_table(i, j, factors, T, nodes, config.params, config.spec,
                                     config.grid, return_error=True)
        errs[i, j] = float(e.max())
    S = _ratio(tables, weights)
    err = abs(S) * (sum(errs.values()) + errs[0, 3] + errs[1, 2])
    return S, err


def closed_form_tables(config: CollisionConfig, T: float) -> dict:
    """Pair tables from the large-T closed forms (no position-space quadrature
    beyond the two t-independent chiral constants)."""
    factors = build_factors(config.f, config.g)
    nodes, _ = config.h.nodes(config.h_quad_order)
    q = [fac.charge for fac in factors]
    mu = config.params.mu_v
    s = SmearingKernel.scale(T)
    beta = 1.0 + s / (2.0 * T) * (nodes[:, None] + nodes[None, :])
    L = math.log(2.0 * T * mu)
    k = 1.0 / (4.0 * math.pi)
    const = np.ones((nodes.size, nodes.size))
    tables = {
        (0, 1): const * (k * 2.0 * L * q[0] * q[1]),
        (0, 2): const * (k * 2.0 * (L + 0.5j * math.pi) * q[0] * q[2]),
        (1, 3): const * (k * 2.0 * (L + 0.5j * math.pi) * q[1] * q[3]),
        (2, 3): const * (k * 2.0 * L * q[2] * q[3]),
    }
    # lightlike pairs: -w^{+-}(f_i, f_j) plus the logarithmic term in beta
    w14 = smeared_chiral(correlate(factors[0].f, factors[3].f, config.grid), 1,
                         params=config.params, spec=config.spec) * factors[0].sign * factors[3].sign
    w23 = smeared_chiral(correlate(factors[1].f, factors[2].f, config.grid), -1,
                         params=config.params, spec=config.spec) * factors[1].sign * factors[2].sign
    tables[0, 3] = -w14 + k * (np.log(4.0 * mu * T * beta) + 0.5j * math.pi) * q[0] * q[3]
    tables[1, 2] = -w23 + k * (np.log(4.0 * mu * T * beta) + 0.5j * math.pi) * q[1] * q[2]
    return tables


def s_T_closed(config: CollisionConfig, T: float) -> complex:
    """Amplitude with every pair entry replaced by its large-T closed form."""
    _, weights = config.h.nodes(config.h_quad_order)
    return _ratio(closed_form_tables(config, T), weights)


# --------------------------------------------------------------------------
# extrapolation


@dataclass(frozen=True)
class AmplitudeSeries:
    samples: tuple[tuple[float, complex, float], ...]
    extrapolated: complex
    err: float
    target: complex
    low_confidence: bool = False

    @property
    def gap(self) -> float:
        return abs(self.extrapolated - self.target)

    def unitarity_ok(self, factor: float = 5.0) -> bool:
        return all(abs(S) <= 1.0 + factor * e for _, S, e in self.samples)


def extrapolate(samples: Sequence[tuple], target: complex = complex("nan")) -> AmplitudeSeries:
    """Least-squares fit ``S_T = S_inf + c ln(T) / T``.

    ``samples`` holds ``(T, S_T)`` or ``(T, S_T, err)`` tuples.  The series
    is flagged ``low_confidence`` when ``|S_T - S_inf|`` does not decrease
    monotonically in T.
    """
    rows = [tuple(s) + (0.0,) * (3 - len(s)) for s in samples]
    if len(rows) < 3:
        raise ValueError("extrapolation needs at least 3 samples")
    rows.sort(key=lambda r: r[0])
    T = np.array([r[0] for r in rows], dtype=float)
    S = np.array([r[1] for r in rows], dtype=complex)
    A = np.column_stack([np.ones_like(T), np.log(T) / T]).astype(complex)
    coef, *_ = np.linalg.lstsq(A, S, rcond=None)
    s_inf = complex(coef[0])
    resid = float(np.max(np.abs(A @ coef - S)))
    dist = np.abs(S - s_inf)
    low = bool(np.any(np.diff(dist) > 1e-12 + 1e-9 * dist[:-1]))
    return AmplitudeSeries(tuple((float(t), complex(s), float(e)) for t, s, e in rows),
                           s_inf, resid, complex(target), low)


def _s_T_job(args):
    config, T = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return s_T(config, T)


def resolve_jobs(jobs: int | None) -> int:
    """Worker count from the argument, else ``INFRASCAT_JOBS``, else 1."""
    if jobs is None:
        jobs = int(os.environ.get("INFRASCAT_JOBS", "1"))
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    return jobs


def amplitude_series(config: CollisionConfig, jobs: int | None = None) -> AmplitudeSeries:
    """Evaluate ``S_T`` over ``config.T_grid`` and extrapolate to T -> inf.

    Samples are independent; with ``jobs > 1`` they run in worker processes
    and are collected in grid order, so the output does not depend on the
    worker count.
    """
    jobs = resolve_jobs(jobs)
    tasks = [(config, T) for T in config.T_grid]
    if jobs == 1:
        results = [s_T(config, T) for T in config.T_grid]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_s_T_job, tasks))
    samples = [(T, S, e) for T, (S, e) in zip(config.T_grid, results)]
    return extrapolate(samples, config.target)


# --------------------------------------------------------------------------
# neutrality


@dataclass(frozen=True)
class NeutralityResult:
    table: tuple[tuple[float, complex], ...]
    slope: float
    neutral: bool


def loglog_slope(x, y) -> float:
    """Least-squares slope of ln|y| against ln x; nan if any y is zero or
    fewer than two distinct x are given."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y))
    if np.any(y == 0) or np.unique(x).size < 2:
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def neutrality_decay(f: TestFunction, g: TestFunction, lam: int, t_grid: Sequence[float],
                     params: KernelParams = KernelParams(), spec: QuadSpec = DEFAULT_SPEC,
                     charge_tol: float = DEFAULT_CHARGE_TOL,
                     grid: GridSpec = GridSpec()) -> NeutralityResult:
    """Overlap ``< :W(g): :W(f_(t, lam t)): >`` along a lightlike ray.

    For ``q_f + q_g = 0`` the overlap falls off like ``t^{q_f q_g / 4 pi}``;
    otherwise it vanishes identically by charge selection.
    """
    if lam not in (1, -1):
        raise ValueError("lambda must be +1 or -1")
    neutral = abs(charge(f) + charge(g)) <= charge_tol
    rows = []
    for t in t_grid:
        word = WeylWord((WeylFactor(g, Vector2(0.0, 0.0), 1),
                         WeylFactor(f, Vector2(t, lam * t), 1)))
        rows.append((float(t), vev(word, params, spec, charge_tol, grid)))
    slope = loglog_slope([r[0] for r in rows], [r[1] for r in rows]) if neutral else float("nan")
    return NeutralityResult(tuple(rows), slope, neutral)
