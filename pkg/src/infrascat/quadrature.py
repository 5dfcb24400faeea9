"""Composite Gauss-Legendre quadrature with graded meshes for log singularities.

All rules here are built from one panel rule: ``base_order`` Gauss-Legendre
points, paired with an embedded lower-order interpolatory rule on the same
nodes (the two innermost nodes dropped).  The difference between the two is
the per-panel error estimate, so no extra function evaluations are needed.

Integrable logarithmic singularities are handled without a change of
variables: the domain is split at every declared singular point (or line,
in 2d) and the panels touching it shrink geometrically by a factor 4.

Integrands are always called with numpy arrays and must be vectorized.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "QuadSpec",
    "QuadratureWarning",
    "SingularLine",
    "LineKind",
    "DEFAULT_SPEC",
    "gauss_rule",
    "integrate_1d",
    "integrate_2d",
    "integrate_1d_oscillatory",
    "richardson_limit",
]

GRADING_RATIO = 0.25


class QuadratureWarning(UserWarning):
    """Raised (as a warning) when a requested tolerance was not reached."""


@dataclass(frozen=True)
class QuadSpec:
    base_order: int = 12
    max_depth: int = 10
    abs_tol: float = 1e-10
    rel_tol: float = 1e-9

    def __post_init__(self):
        if self.base_order < 4:
            raise ValueError(f"base_order must be >= 4, got {self.base_order}")
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")

    def tolerance(self, value) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))

    def replace(self, **changes) -> "QuadSpec":
        fields = dict(base_order=self.base_order, max_depth=self.max_depth,
                      abs_tol=self.abs_tol, rel_tol=self.rel_tol)
        fields.update(changes)
        return QuadSpec(**fields)


DEFAULT_SPEC = QuadSpec()


class LineKind(str, Enum):
    X_PLUS = "x_plus_const"
    X_MINUS = "x_minus_const"
    X0 = "x0_const"
    X1 = "x1_const"

    @property
    def lightlike(self) -> bool:
        return self in (LineKind.X_PLUS, LineKind.X_MINUS)


@dataclass(frozen=True)
class SingularLine:
    """A straight line ``{z : coord(z) = offset}`` carrying a log singularity.

    ``coord`` is one of z0, z1, z+ = z0 + z1 or z- = z0 - z1.
    """

    kind: LineKind
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "kind", LineKind(self.kind))
        object.__setattr__(self, "offset", float(self.offset))

    def coordinate(self, z0, z1):
        if self.kind is LineKind.X_PLUS:
            return z0 + z1
        if self.kind is LineKind.X_MINUS:
            return z0 - z1
        if self.kind is LineKind.X0:
            return z0
        return z1

    def meets(self, box) -> bool:
        """True if the line passes through the closed box."""
        (a0, b0), (a1, b1) = box
        corners = [self.coordinate(x, y) for x in (a0, b0) for y in (a1, b1)]
        return min(corners) <= self.offset <= max(corners)


# --------------------------------------------------------------------------
# panel rules


@lru_cache(maxsize=None)
def gauss_rule(n: int):
    """Gauss-Legendre nodes/weights on [-1, 1] plus embedded low-order weights.

    The low-order rule is interpolatory on the n - 2 nodes left after dropping
    the two closest to the centre; it is zero at the dropped nodes so that
    both rules share the node array.
    """
    x, w = np.polynomial.legendre.leggauss(n)
    keep = np.ones(n, dtype=bool)
    mid = n // 2
    if n % 2:
        keep[[mid - 1, mid + 1]] = False
    else:
        keep[[mid - 1, mid]] = False
    xs = x[keep]
    m = xs.size
    vander = np.polynomial.legendre.legvander(xs, m - 1).T
    moments = np.zeros(m)
    moments[0] = 2.0
    w_low = np.zeros(n)
    w_low[keep] = np.linalg.solve(vander, moments)
    return x, w, w_low


def _segment_panels(lo: float, hi: float, grade_lo: bool, grade_hi: bool,
                    depth: int, level: int) -> list[tuple[float, float]]:
    """Split one segment into panels, graded toward flagged endpoints."""
    if hi <= lo:
        return []
    length = hi - lo
    panels = []
    if grade_lo and grade_hi:
        mid = lo + 0.5 * length
        return (_segment_panels(lo, mid, True, False, depth, level)
                + _segment_panels(mid, hi, False, True, depth, level))
    if grade_lo or grade_hi:
        # geometric layers toward the singular end, uniform remainder
        edges = [length * GRADING_RATIO ** j for j in range(depth + 1)]
        edges = [0.0] + edges[::-1]
        regular = max(1, 2 ** level)
        # the outermost layer is cut uniformly by the refinement level
        layers = [(edges[i], edges[i + 1]) for i in range(len(edges) - 2)]
        a, b = edges[-2], edges[-1]
        step = (b - a) / regular
        layers += [(a + k * step, a + (k + 1) * step) for k in range(regular)]
        # each geometric layer gets split as well once the level is high
        sub = max(1, 2 ** max(level - 2, 0))
        fine = []
        for (p, q) in layers[:-regular]:
            s = (q - p) / sub
            fine += [(p + k * s, p + (k + 1) * s) for k in range(sub)]
        layers = fine + layers[-regular:]
        for p, q in layers:
            if grade_lo:
                panels.append((lo + p, lo + q))
            else:
                panels.append((hi - q, hi - p))
        panels.sort()
        return panels
    regular = max(1, 2 ** level)
    step = length / regular
    return [(lo + k * step, lo + (k + 1) * step) for k in range(regular)]


def _mesh_1d(a: float, b: float, points: Iterable[float], singular: Iterable[float],
             depth: int, level: int):
    """Panels of shape (P, 2) covering [a, b] and a mask of singular-adjacent ones."""
    singular = sorted({float(s) for s in singular if a <= s <= b})
    # breakpoints within rounding of a singular point or of each other are
    # merged; otherwise a sliver segment hides the singularity from its neighbour
    snap = 1e-12 * (b - a)
    merged: list[float] = []
    for p in sorted(float(p) for p in points if a < p < b):
        if any(abs(p - s) <= snap for s in singular):
            continue
        if merged and p - merged[-1] <= snap:
            continue
        merged.append(p)
    singular = [a if s - a <= snap else b if b - s <= snap else s for s in singular]
    points = sorted(set(merged) | set(singular))
    cuts = [a] + [p for p in points if a < p < b] + [b]
    sing = set(singular)
    panels = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        panels += _segment_panels(lo, hi, lo in sing, hi in sing, depth, level)
    panels = np.asarray(panels, dtype=float).reshape(-1, 2)
    touching = np.isin(panels[:, 0], list(sing)) | np.isin(panels[:, 1], list(sing))
    return panels, touching


def _panel_error(fx, w, w_low, touching):
    """Per-panel value and error estimate from the embedded rule pair.

    ``fx``, ``w``, ``w_low`` carry the panel nodes on the last axis.  For a
    panel where the integrand is analytic both rules converge geometrically,
    the low rule with roughly half the degree, so the Gauss error is about
    ``scale * (delta / scale) ** (2n / (n - 2))``.  Panels touching a
    singular point converge only algebraically and keep the raw difference.
    """
    n = fx.shape[-1]
    q = np.sum(w * fx, axis=-1)
    delta = np.abs(q - np.sum(w_low * fx, axis=-1))
    width = np.sum(w, axis=-1)
    power = min(2.0 * n / (n - 2), 2.5)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        mean = np.where(width != 0, q / width, 0.0)
        scale = np.sum(np.abs(w) * np.abs(fx - mean[..., None]), axis=-1)
        scaled = np.where(scale > 0, scale * np.minimum(1.0, delta / scale) ** power, delta)
    return q, np.where(touching, delta, np.minimum(delta, scaled))


def _panel_nodes(panels: np.ndarray, n: int):
    x, w, w_low = gauss_rule(n)
    half = 0.5 * (panels[:, 1] - panels[:, 0])
    mid = 0.5 * (panels[:, 1] + panels[:, 0])
    nodes = mid[:, None] + half[:, None] * x[None, :]
    return nodes, half[:, None] * w[None, :], half[:, None] * w_low[None, :]


# --------------------------------------------------------------------------
# 1d


def integrate_1d(integrand: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                 points: Sequence[float] = (), singular: Sequence[float] = (),
                 spec: QuadSpec = DEFAULT_SPEC):
    """Adaptive composite Gauss-Legendre integral of ``integrand`` over [a, b].

    Parameters
    ----------
    integrand : callable
        Vectorized function of a 1d array.
    points : sequence of float
        Breakpoints where the integrand may be non-smooth (kinks, jumps).
    singular : sequence of float
        Points with an integrable (logarithmic) singularity; the mesh is
        graded toward them.

    Returns
    -------
    value, error : complex or float, float
        A :class:`QuadratureWarning` is issued if the tolerance was not met
        within ``spec.max_depth`` bisections of any panel.
    """
    if b < a:
        value, err = integrate_1d(integrand, b, a, points, singular, spec)
        return -value, err
    if b == a:
        return 0.0, 0.0
    n = spec.base_order
    panels, touching = _mesh_1d(a, b, points, singular, spec.max_depth, 0)
    depth = np.zeros(len(panels), dtype=int)
    done_val = 0.0
    done_err = 0.0
    total_len = b - a
    while True:
        nodes, w, w_low = _panel_nodes(panels, n)
        fx = np.asarray(integrand(nodes.ravel())).reshape(nodes.shape)
        q, err = _panel_error(fx, w, w_low, touching)
        value = done_val + q.sum()
        tol = spec.tolerance(value)
        total_err = done_err + err.sum()
        if total_err <= tol:
            return _real_if_close(value), float(total_err)
        # panels keep their share of the tolerance proportional to length
        share = tol * (panels[:, 1] - panels[:, 0]) / total_len
        bad = err > share
        stuck = bad & (depth >= spec.max_depth)
        split = bad & ~stuck
        if not split.any():
            warnings.warn(f"integrate_1d: tolerance {tol:.3g} not reached "
                          f"(estimate {total_err:.3g})", QuadratureWarning, stacklevel=2)
            return _real_if_close(value), float(total_err)
        keep = ~split
        done_val += q[keep].sum()
        done_err += err[keep].sum()
        lo, hi = panels[split, 0], panels[split, 1]
        mid = 0.5 * (lo + hi)
        sing = np.asarray(sorted(singular), dtype=float)
        panels = np.concatenate([np.stack([lo, mid], 1), np.stack([mid, hi], 1)])
        touching = np.isin(panels[:, 0], sing) | np.isin(panels[:, 1], sing)
        depth = np.concatenate([depth[split] + 1, depth[split] + 1])


def _real_if_close(value):
    if isinstance(value, complex) or np.iscomplexobj(value):
        return complex(value)
    return float(value)


# --------------------------------------------------------------------------
# 2d


def _frame_for(lines: Sequence[SingularLine]) -> str:
    kinds = {ln.kind.lightlike for ln in lines}
    if not kinds or kinds == {False}:
        return "cartesian"
    if kinds == {True}:
        return "lightcone"
    return "mixed"


def _tensor_cartesian(integrand, box, lines, n, depth, level):
    (a0, b0), (a1, b1) = box
    s0 = [ln.offset for ln in lines if ln.kind is LineKind.X0]
    s1 = [ln.offset for ln in lines if ln.kind is LineKind.X1]
    p0, t0 = _mesh_1d(a0, b0, (), s0, depth, level)
    p1, t1 = _mesh_1d(a1, b1, (), s1, depth, level)
    x0, w0, l0 = _panel_nodes(p0, n)
    x1, w1, l1 = _panel_nodes(p1, n)
    with np.errstate(divide="ignore", invalid="ignore"):
        F = np.asarray(integrand(x0.reshape(-1, 1), x1.reshape(1, -1)))
    F = np.broadcast_to(F, (x0.size, x1.size))
    F = np.where(np.isfinite(F), F, 0.0).reshape(x0.size, len(p1), n)
    q_in, e_in = _panel_error(F, w1, l1, t1)
    inner = q_in.sum(-1).reshape(len(p0), n)
    inner_err = e_in.sum(-1).reshape(len(p0), n)
    q_out, e_out = _panel_error(inner, w0, l0, t0)
    value = q_out.sum()
    err = e_out.sum() + np.sum(np.abs(w0) * inner_err)
    return value, float(err), F.size


def _inner_lightcone_rule(lo, hi, cs, n, depth, level):
    """Inner v-rule for every outer node; ``lo``/``hi`` are arrays of length K.

    The sorted singular offsets ``cs`` are clipped into each [lo, hi] so the
    segment layout is identical across nodes and the rule stays vectorized.
    Returns nodes/weights of shape (K, P, n) and the singular-panel mask (P,).
    """
    ends = [lo] + [np.clip(c, lo, hi) for c in cs] + [hi]
    nodes, wts, lows, touch = [], [], [], []
    nseg = len(ends) - 1
    for s in range(nseg):
        graded = [x for x, flag in ((0.0, s > 0), (1.0, s < nseg - 1)) if flag]
        template, touching = _mesh_1d(0.0, 1.0, (), graded, depth, level)
        t, w, wl = _panel_nodes(template, n)
        left, right = ends[s], ends[s + 1]
        length = (right - left)[:, None, None]
        nodes.append(left[:, None, None] + length * t[None])
        wts.append(length * w[None])
        lows.append(length * wl[None])
        touch.append(touching)
    return (np.concatenate(nodes, 1), np.concatenate(wts, 1), np.concatenate(lows, 1),
            np.concatenate(touch))


def _tensor_lightcone(integrand, box, lines, n, depth, level):
    (a0, b0), (a1, b1) = box
    cp = sorted(ln.offset for ln in lines if ln.kind is LineKind.X_PLUS)
    cm = sorted(ln.offset for ln in lines if ln.kind is LineKind.X_MINUS)
    u_lo, u_hi = a0 + a1, b0 + b1
    kinks = [a0 + b1, b0 + a1]
    # where a z- line crosses the diamond edge the inner integral has a weak
    # (u - u*) log|u - u*| singularity; grade toward those points too
    crossings = []
    for c in cm:
        crossings += [2 * a0 - c, c + 2 * b1, 2 * b0 - c, c + 2 * a1]
    panels, t_out = _mesh_1d(u_lo, u_hi, kinks, list(cp) + crossings, depth, level)
    u, wu, lu = _panel_nodes(panels, n)
    uf = u.ravel()
    v_lo = np.maximum(2 * a0 - uf, uf - 2 * b1)
    v_hi = np.maximum(np.minimum(2 * b0 - uf, uf - 2 * a1), v_lo)
    v, wv, lv, t_in = _inner_lightcone_rule(v_lo, v_hi, cm, n, depth, level)
    uu = uf[:, None, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        F = np.asarray(integrand(0.5 * (uu + v), 0.5 * (uu - v)))
    # nodes landing exactly on a line (degenerate segments) carry no measure
    F = np.broadcast_to(F, v.shape)
    F = np.where((wv != 0.0) & np.isfinite(F), F, 0.0)
    q_in, e_in = _panel_error(F, wv, lv, t_in)
    inner = 0.5 * q_in.sum(-1).reshape(u.shape)
    inner_err = 0.5 * e_in.sum(-1).reshape(u.shape)
    q_out, e_out = _panel_error(inner, wu, lu, t_out)
    err = e_out.sum() + np.sum(np.abs(wu) * inner_err)
    return q_out.sum(), float(err), F.size


def integrate_2d(integrand: Callable, box, singular_lines: Sequence[SingularLine] = (),
                 spec: QuadSpec = DEFAULT_SPEC, max_points: int = 4_000_000):
    """Integrate ``integrand(z0, z1)`` over ``box = ((a0, b0), (a1, b1))``.

    Lines of constant z0/z1 are handled as iterated cartesian integration;
    light-cone lines (constant z+ or z-) switch to iterated integration in
    light-cone coordinates, where the box becomes a diamond and both
    families of lines are coordinate lines.  Panels adjacent to a line are
    geometrically graded toward it.  Lines that miss the box are ignored.
    Mixing the two families is not supported geometrically; the integral is
    then computed by dense uniform refinement.

    The mesh is refined globally (regular panels doubled per level) until
    the embedded error estimate meets the tolerance.  The returned estimate
    is the smallest seen, so tightening the tolerance never increases it.

    Returns
    -------
    value, error
    """
    lines = [ln for ln in singular_lines if ln.meets(box)]
    frame = _frame_for(lines)
    if frame == "lightcone":
        rule = _tensor_lightcone
    else:
        rule = _tensor_cartesian
        if frame == "mixed":
            lines = []
    n = spec.base_order
    best = None
    level = 0
    while True:
        # singular layers deepen faster than the regular panels refine
        depth = spec.max_depth + 3 * level
        value, err, npts = rule(integrand, box, lines, n, depth, level)
        if best is None or err <= best[1]:
            best = (value, err)
        if best[1] <= spec.tolerance(best[0]):
            break
        projected = npts * 4
        if level >= spec.max_depth or projected > max_points:
            warnings.warn(f"integrate_2d: tolerance {spec.tolerance(best[0]):.3g} not reached "
                          f"(estimate {best[1]:.3g})", QuadratureWarning, stacklevel=2)
            break
        level += 1
    return _real_if_close(best[0]), float(best[1])


# --------------------------------------------------------------------------
# oscillatory tails


def richardson_limit(h: Sequence[float], values: Sequence[complex]):
    """Neville extrapolation of ``values(h)`` to ``h = 0``.

    Returns the table diagonal, i.e. the extrapolated value using the first
    1, 2, ... samples; the last entry is the full-order estimate.
    """
    h = np.asarray(h, dtype=float)
    p = np.asarray(values, dtype=complex).copy()
    m = len(p)
    diag = [p[0]]
    # table[k][i] is the polynomial fit through samples i..i+k evaluated at 0
    table = [p.copy()]
    for k in range(1, m):
        prev = table[-1]
        cur = np.empty(m - k, dtype=complex)
        for i in range(m - k):
            cur[i] = (h[i + k] * prev[i] - h[i] * prev[i + 1]) / (h[i + k] - h[i])
        table.append(cur)
        diag.append(cur[0])
    return np.asarray(diag)


def integrate_1d_oscillatory(integrand: Callable[[np.ndarray], np.ndarray],
                             cutoff_sequence: Sequence[float], spec: QuadSpec = DEFAULT_SPEC,
                             points: Sequence[float] = (), singular: Sequence[float] = (),
                             lower: float = 0.0):
    """Integral over [lower, inf) of an integrand with a slowly decaying tail.

    The integral is accumulated on [lower, K] for every cutoff K in
    ``cutoff_sequence`` and the partial integrals are extrapolated to
    K -> inf by Richardson extrapolation in 1/K.  For tails of the form
    e^{-iku}/k the cutoffs should sit on whole periods 2 pi m / |u|; the
    remainder then has an asymptotic expansion in powers of 1/K.

    Returns
    -------
    value, error
        ``error`` combines the quadrature estimates with the change between
        the last two extrapolation orders.  A :class:`QuadratureWarning` is
        issued when that change exceeds the tolerance.
    """
    cuts = np.asarray(sorted(cutoff_sequence), dtype=float)
    if cuts.size < 2:
        raise ValueError("need at least two cutoffs")
    if cuts[0] <= lower:
        raise ValueError("cutoffs must exceed the lower limit")
    partial = []
    acc = 0.0
    quad_err = 0.0
    left = lower
    for K in cuts:
        seg_pts = [p for p in points if left < p < K]
        seg_sing = [s for s in singular if left <= s <= K]
        # long stretches are pre-split so panels track the oscillation
        nsplit = max(1, int(math.ceil((K - left) / max(cuts[0] - lower, 1e-300))))
        grid = list(np.linspace(left, K, nsplit + 1)[1:-1])
        val, err = integrate_1d(integrand, left, K, sorted(seg_pts + grid), seg_sing, spec)
        acc = acc + val
        quad_err += err
        partial.append(acc)
        left = K
    diag = richardson_limit(1.0 / cuts, partial)
    value = diag[-1]
    extrap_err = float(abs(diag[-1] - diag[-2]))
    total = extrap_err + quad_err
    if extrap_err > spec.tolerance(value):
        warnings.warn(f"integrate_1d_oscillatory: extrapolation not Cauchy "
                      f"(last change {extrap_err:.3g})", QuadratureWarning, stacklevel=2)
    return _real_if_close(value), float(total)
