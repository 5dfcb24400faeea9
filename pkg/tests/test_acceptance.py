"""End-to-end acceptance criteria, one test each.

Every test records a PASS/FAIL line that is printed in the terminal summary
under "acceptance criteria".  Amplitude series are shared between criteria
through a module-level cache.
"""

import contextlib
import functools
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infrascat import testfn as tf
from infrascat.asymptotics import (AsymptoticCase, lemma31_lhs, lemma31_rhs, lemma32_check,
                                   random_polypair)
from infrascat.config import golden_path, load_config
from infrascat.kernel import (KernelParams, Regulator, commutator_point, fit_mu, smeared_kernel,
                              spectral_I, spectral_smeared_oracle, w_chiral_point, w_reg_point)
from infrascat.scattering import CollisionConfig, amplitude_series, neutrality_decay
from infrascat.weyl import WeylFactor, WeylWord, vev

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

E_GAMMA = 1.7810724179901979852
TWO_PI = 2.0 * math.pi


class Outcome:
    def __init__(self):
        self.ok = None
        self.detail = ""

    def check(self, ok: bool, detail: str):
        self.ok = bool(ok)
        self.detail = detail


@pytest.fixture
def criterion(acceptance_log):
    """``with criterion(n, title) as c: ... c.check(ok, detail)``; a missing
    check or an exception records FAIL."""
    @contextlib.contextmanager
    def run(number: int, title: str):
        outcome = Outcome()
        start = time.perf_counter()
        try:
            yield outcome
        except Exception as exc:
            outcome.check(False, f"{type(exc).__name__}: {exc}")
            raise
        finally:
            status = "PASS" if outcome.ok else "FAIL"
            line = (f"{status}  criterion {number}: {title} ({outcome.detail}; "
                    f"{time.perf_counter() - start:.0f} s)")
            acceptance_log.append((number, line))
        assert outcome.ok, line
    return run


@functools.lru_cache(maxsize=None)
def golden():
    cfg = load_config(golden_path())
    return cfg, cfg.kernel_params()


@functools.lru_cache(maxsize=None)
def series_for(qq: float):
    """Amplitude series for q_f q_g = qq on the golden setup.

    ``g`` is rescaled to reach ``qq``; ``qq = 0`` swaps ``f`` for a neutral dipole.
    """
    cfg, params = golden()
    f, g = cfg.f, cfg.g
    if qq == 0.0:
        f = tf.mirrored_difference((0.5, 0.2), (0.0, 0.0), (0.7, 0.7))
    else:
        g = tf.normalize_to_charge(g, qq / tf.charge(f))
    coll = CollisionConfig(f, g, T_grid=cfg.T_grid, h_quad_order=cfg.h_order, params=params,
                           spec=cfg.quad, grid=cfg.grid)
    return amplitude_series(coll)


def target(qq: float) -> complex:
    return complex(np.exp(-0.5j * qq))


def test_theorem_reproduction(criterion):
    with criterion(1, "S_inf for q_f q_g in {2pi, pi, -2pi} within 0.02") as c:
        gaps = {}
        for qq in (TWO_PI, math.pi, -TWO_PI):
            s = series_for(qq)
            gaps[qq] = abs(s.extrapolated - target(qq))
        text = ", ".join(f"{qq / math.pi:+.0f}pi: gap {gap:.1e}" for qq, gap in gaps.items())
        c.check(max(gaps.values()) <= 0.02, text)


def test_phase_law_sweep(criterion):
    with criterion(2, "phase law over q_f q_g in {-2pi, -pi, 0, pi, 2pi} within 0.02") as c:
        worst = max(abs(series_for(k * math.pi).extrapolated - target(k * math.pi))
                    for k in (-2, -1, 0, 1, 2))
        c.check(worst <= 0.02, f"max deviation {worst:.1e}")


def test_mu_determination(criterion):
    with criterion(3, "mu_v for sharp:1 within 1e-4 of e^gamma, Im I(1) within 1e-6 of pi/2") as c:
        v = Regulator.parse("sharp:1")
        mu, _ = fit_mu(v)
        im = spectral_I(1.0, v).imag
        c.check(abs(mu - E_GAMMA) <= 1e-4 and abs(im - math.pi / 2) <= 1e-6,
                f"|mu - e^gamma| = {abs(mu - E_GAMMA):.1e}, |Im I(1) - pi/2| = {abs(im - math.pi / 2):.1e}")


def _kernel_pairs():
    b = tf.normalize_to_charge
    charged = [
        (b(tf.radial_bump(), 1.0), b(tf.radial_bump(), 1.0), (0.0, 0.0)),
        (b(tf.radial_bump(), 1.0), b(tf.product_bump((0.2, -0.1), (0.8, 1.2)), -0.7), (0.4, 0.1)),
        (b(tf.radial_bump((0.0, 0.0), (0.6, 0.9)), 2.0), b(tf.radial_bump(), 0.5), (3.0, 0.5)),
        (b(tf.product_bump(), 1.3), b(tf.radial_bump((0.3, 0.3), (0.7, 0.7)), 1.1), (0.5, 3.0)),
        (b(tf.radial_bump(), -0.8), b(tf.product_bump((0.0, 0.0), (1.2, 0.6)), 1.5), (1.5, -1.0)),
    ]
    md = tf.mirrored_difference
    neutral = [
        (md((0.5, 0.2), (0, 0), (0.7, 0.7)), md((0.5, 0.2), (0, 0), (0.7, 0.7)), (0.0, 0.0)),
        (md((0.5, 0.2), (0, 0), (0.7, 0.7)), md((0.2, -0.4), (0.3, 0.1), (0.6, 0.9)), (1.0, 2.5)),
        (md((0.0, 0.6), (0, 0), (0.8, 0.8)), md((0.4, 0.0), (0, 0), (0.8, 0.8)), (2.5, 0.3)),
        (md((0.4, 0.3), (0, 0), (0.6, 0.7)), md((0.3, -0.2), (0.2, 0.1), (0.7, 0.6)), (0.3, -0.6)),
        (md((0.5, 0.0), (0, 0), (0.8, 0.6)), md((0.1, 0.4), (0, 0), (0.6, 0.8)), (-2.0, 0.4)),
    ]
    return charged, neutral


def test_kernel_equivalence(criterion):
    with criterion(4, "spectral oracle vs smeared kernel, 5 charged + 5 neutral pairs, rel 1e-5") as c:
        v = Regulator.parse("sharp:1")
        mu, _ = fit_mu(v)
        params = KernelParams(mu)
        charged, neutral = _kernel_pairs()
        worst = {}
        for label, pairs in (("charged", charged), ("neutral", neutral)):
            errs = []
            for f, g, shift in pairs:
                oracle = spectral_smeared_oracle(f, g, v, shift=shift)
                value = smeared_kernel(tf.correlate(f, g), shift, params)
                errs.append(abs(value - oracle) / abs(oracle))
            worst[label] = max(errs)
        c.check(max(worst.values()) <= 1e-5,
                f"max rel err charged {worst['charged']:.1e}, neutral {worst['neutral']:.1e}")


def test_lemma32(criterion):
    with criterion(5, "large-translation asymptotics: slopes and i pi/2 sign tests") as c:
        f = tf.normalize_to_charge(tf.radial_bump((0.3, -0.2), (1.0, 0.8)), 1.0)
        params = golden()[1]
        slopes, ok = {}, True
        for case in ("spacelike", "timelike", "lightlike+", "lightlike-"):
            res = lemma32_check(AsymptoticCase(case), f, params)
            slopes[case] = res.slope
            ok &= res.slope_ok
        signs_ok = True
        for case in ("timelike", "lightlike+", "lightlike-"):
            rows = lemma32_check(AsymptoticCase(case, t_grid=(32.0, -32.0)), f, params).rows
            (_, lp, rp, _), (_, lm, rm, _) = rows
            # for t > 0 Im(rhs) is +q/4 (timelike) or +q/8 (lightlike); t < 0 flips it
            signs_ok &= rp.imag > 0 > rm.imag
            signs_ok &= np.sign(lp.imag) == np.sign(rp.imag) and np.sign(lm.imag) == np.sign(rm.imag)
        text = ", ".join(f"{k} {s:.2f}" for k, s in slopes.items())
        c.check(ok and signs_ok, f"slopes {text}; signs {'ok' if signs_ok else 'wrong'}")


def test_lemma31(criterion):
    with criterion(6, "eps-limit for 5 PolyPairs: decreasing, <= 1e-3 at eps = 1e-4") as c:
        f = tf.normalize_to_charge(tf.radial_bump(), 1.0)
        rng = np.random.default_rng(1)
        worst_final, monotone = 0.0, True
        for _ in range(5):
            pp = random_polypair(rng)
            rhs = lemma31_rhs(pp, f)
            diffs = [abs(lemma31_lhs(pp, f, eps) - rhs) for eps in (1e-1, 1e-2, 1e-3, 1e-4)]
            monotone &= all(a > b for a, b in zip(diffs, diffs[1:]))
            worst_final = max(worst_final, diffs[-1])
        c.check(monotone and worst_final <= 1e-3,
                f"monotone {monotone}, worst at 1e-4: {worst_final:.1e}")


def test_neutrality(criterion):
    with criterion(7, "lightlike overlap decay exponent within 5% of -1; charged branch 0") as c:
        q = math.sqrt(4.0 * math.pi)
        f = tf.normalize_to_charge(tf.radial_bump(), q)
        g = tf.normalize_to_charge(tf.product_bump((0.1, 0.2), (0.9, 0.7)), -q)
        params = golden()[1]
        t_grid = load_config(golden_path()).t_grid
        slopes = [neutrality_decay(f, g, lam, t_grid, params).slope for lam in (1, -1)]
        g_off = tf.normalize_to_charge(tf.radial_bump(), -q + 0.5)
        zero = neutrality_decay(f, g_off, 1, t_grid, params)
        exact_zero = all(v == 0 for _, v in zero.table)
        ok = all(abs(s + 1.0) <= 0.05 for s in slopes) and exact_zero
        c.check(ok, f"slopes {slopes[0]:.4f} / {slopes[1]:.4f}, charged branch zero {exact_zero}")


def test_property_suite(criterion):
    with criterion(8, "algebraic properties over seeded random inputs in <= 2 min") as c:
        start = time.perf_counter()
        params = KernelParams(E_GAMMA)
        unit = tf.radial_bump((0.0, 0.0), (0.8, 0.8))
        failures = []

        def seeded(n):
            return settings(derandomize=True, deadline=None, database=None, max_examples=n)
        off_cone = st.tuples(st.floats(-30, 30), st.floats(-30, 30)).filter(
            lambda z: abs(abs(z[0]) - abs(z[1])) > 1e-3)
        shift = st.tuples(st.floats(-2, 2), st.floats(-2, 2))

        @seeded(20)
        @given(st.lists(st.floats(-2, 2).filter(lambda a: abs(a) > 1e-3), min_size=1, max_size=4),
               st.floats(0.01, 1.0))
        def charge_selection(amps, excess):
            # total charge pushed away from zero by at least 'excess' times the unit charge
            amps = amps + [excess - sum(amps)]
            word = [WeylFactor(unit.scaled(a), (0.0, 3.0 * k)) for k, a in enumerate(amps)]
            assert vev(word, params) == 0

        @seeded(3)
        @given(st.floats(-2, 2), st.floats(-2, 2), shift, shift)
        def hermiticity(a, b, s1, s2):
            amps = (1.0, a, -1.0 - a)
            trans = ((0.0, 0.0), (s1[0], s1[1] + 3.0), (s2[0], s2[1] - 3.0))
            word = WeylWord([WeylFactor(unit.scaled(x), t) for x, t in zip(amps, trans)])
            assert abs(vev(word.adjoint(), params) - vev(word, params).conjugate()) <= 1e-8

        @seeded(200)
        @given(off_cone)
        def pointwise(z):
            neg = (-z[0], -z[1])
            assert commutator_point(neg) == -commutator_point(z)
            if abs(z[1]) > abs(z[0]):
                assert commutator_point(z) == 0
            split = w_chiral_point(z[0] - z[1], -1, params) + w_chiral_point(z[0] + z[1], 1, params)
            assert abs(w_reg_point(z, params) - split) <= 1e-14

        @seeded(4)
        @given(st.floats(-1.0, 1.0), st.floats(3.5, 6.0), st.sampled_from([1.0, -1.0]))
        def smeared_locality(s0, dist, side):
            # supports have radius 0.8, so |s1| - |s0| > 1.6 keeps them spacelike
            f = unit.scaled(1.3)
            g = tf.radial_bump((0.0, 0.0), (0.8, 0.8), -0.6)
            s = (s0, side * (dist + abs(s0)))
            d = smeared_kernel(tf.correlate(f, g), s, params) \
                - smeared_kernel(tf.correlate(g, f), (-s[0], -s[1]), params)
            assert abs(d) <= 1e-8

        for prop in (charge_selection, hermiticity, pointwise, smeared_locality):
            try:
                prop()
            except AssertionError as exc:
                failures.append(f"{prop.__name__}: {exc}")
        elapsed = time.perf_counter() - start
        # the amplitude samples are shared with criterion 1, not timed here
        unitary = all(series_for(qq).unitarity_ok() for qq in (TWO_PI, math.pi, -TWO_PI))
        if not unitary:
            failures.append("unitarity bound violated")
        c.check(not failures and elapsed <= 120.0,
                f"{len(failures)} failing properties, {elapsed:.0f} s"
                + (f": {failures[0]}" if failures else ""))


def test_cancellation_audit(criterion):
    with criterion(9, "ln T slope of |S_T| over the golden T_grid within 0.02") as c:
        samples = series_for(TWO_PI).samples
        lnT = np.log([T for T, _, _ in samples])
        mags = np.abs([S for _, S, _ in samples])
        slope = float(np.polyfit(lnT, mags, 1)[0])
        c.check(abs(slope) <= 0.02, f"slope {slope:.1e}")
