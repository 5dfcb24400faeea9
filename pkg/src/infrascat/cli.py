"""Command-line front end.

Subcommands: ``amplitude``, ``mu-fit``, ``kernel-check``, ``asymptotics``,
``neutrality``, ``selftest``.  Exit codes: 0 success, 1 tolerance failure,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .asymptotics import AsymptoticCase, Direction, lemma32_check
from .config import ConfigError, RunConfig, golden_path, load_config
from .kernel import (EULER_GAMMA, KernelParams, Regulator, fit_mu, smeared_kernel,
                     spectral_I, spectral_smeared_oracle, w_chiral, w_reg)
from .scattering import (CollisionConfig, amplitude_series, build_factors, extrapolate,
                         neutrality_decay, resolve_jobs)
from .testfn import Vector2, charge, correlate, radial_bump
from .weyl import WeylFactor, WeylWord, vev

EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# output


def fmt(x) -> str:
    """17 significant digits, decimal dot; integers stay integral."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _jsonable(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else repr(v)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def record_text(record: dict) -> str:
    return json.dumps(_jsonable(record), sort_keys=True, separators=(", ", ": "))


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def _write(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None


def emit_csv(header, rows, path: str | None = None):
    _write(path, csv_text(header, rows))


def emit_record(record: dict, path: str | None = None):
    _write(path, record_text(record) + "\n")


def _emit(args, cfg: RunConfig | None, header, rows, footer: dict):
    """CSV with the footer record as a trailing ``#`` line, plus an optional
    separate record file."""
    outputs = cfg.outputs if cfg is not None else {}
    out = args.out or outputs.get("csv")
    rec = args.record or outputs.get("record")
    _write(out, csv_text(header, rows) + "# " + record_text(footer) + "\n")
    if rec:
        emit_record(footer, rec)


# --------------------------------------------------------------------------
# subcommands


def _config(args) -> RunConfig:
    return load_config(args.config)


def cmd_amplitude(args) -> int:
    cfg = _config(args)
    params = cfg.kernel_params()
    coll = CollisionConfig(cfg.f, cfg.g, T_grid=cfg.T_grid, h_quad_order=cfg.h_order,
                           params=params, spec=cfg.quad, grid=cfg.grid)
    series = amplitude_series(coll, jobs=args.jobs)
    rows = [(T, S.real, S.imag, e) for T, S, e in series.samples]
    footer = {
        "extrapolated_re": series.extrapolated.real,
        "extrapolated_im": series.extrapolated.imag,
        "target_re": series.target.real,
        "target_im": series.target.imag,
        "gap": series.gap,
        "fit_residual": series.err,
        "low_confidence": series.low_confidence,
        "unitarity_ok": series.unitarity_ok(),
        "qf_qg": charge(cfg.f) * charge(cfg.g),
        "mu_v": params.mu_v,
    }
    _emit(args, cfg, ("T", "re_S", "im_S", "err"), rows, footer)
    ok = series.gap <= args.tolerance and series.unitarity_ok()
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_mu_fit(args) -> int:
    cfg = _config(args) if args.config else None
    text = args.regulator or (cfg.raw.get("regulator") if cfg else None) or "sharp:1"
    try:
        reg = Regulator.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    u_grid = args.u_grid or (0.5, 1.0, 2.0, 3.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        mu, residual = fit_mu(reg, u_grid)
        im1 = spectral_I(1.0, reg).imag
    record = {"regulator": reg.to_text(), "mu_v": mu, "residual": residual,
              "im_I_1": im1, "u_grid": list(u_grid)}
    if reg.kind.value == "sharp_cutoff":
        record["expected_mu_v"] = reg.scale * math.exp(EULER_GAMMA)
    emit_record(record, args.record or args.out)
    return EXIT_OK if residual <= 1e-4 else EXIT_TOLERANCE


DEFAULT_SHIFTS = ((0.0, 0.0), (3.0, 0.5), (0.5, 3.0), (0.4, 0.1))


def cmd_kernel_check(args) -> int:
    cfg = _config(args)
    params = cfg.kernel_params()
    shifts = args.shift or DEFAULT_SHIFTS
    C = correlate(cfg.f, cfg.g, cfg.grid)
    rows, worst = [], 0.0
    for s in shifts:
        w = smeared_kernel(C, s, params, cfg.quad)
        o = spectral_smeared_oracle(cfg.f, cfg.g, cfg.regulator, cfg.quad, shift=s)
        rel = abs(w - o) / max(abs(o), 1e-300)
        worst = max(worst, rel)
        rows.append((s[0], s[1], w.real, w.imag, o.real, o.imag, rel))
    footer = {"max_rel_err": worst, "tolerance": args.tolerance, "mu_v": params.mu_v}
    _emit(args, cfg, ("shift0", "shift1", "re_kernel", "im_kernel", "re_oracle", "im_oracle",
                      "rel_err"), rows, footer)
    return EXIT_OK if worst <= args.tolerance else EXIT_TOLERANCE


def cmd_asymptotics(args) -> int:
    cfg = _config(args)
    params = cfg.kernel_params()
    try:
        direction = Direction.parse(args.case)
    except ValueError:
        raise UsageError(f"unknown case {args.case!r}") from None
    case = AsymptoticCase(direction, args.alpha if args.alpha is not None else cfg.alpha,
                          tuple(args.t_grid or cfg.t_grid))
    res = lemma32_check(case, cfg.f, params, cfg.quad)
    rows = [(t, l.real, l.imag, r.real, r.imag, d) for t, l, r, d in res.rows]
    footer = {"case": direction.value, "slope": res.slope,
              "bound": -min(res.exponent, 1.0) + 0.15, "slope_ok": res.slope_ok}
    _emit(args, cfg, ("t", "re_lhs", "im_lhs", "re_rhs", "im_rhs", "residual"), rows, footer)
    return EXIT_OK if res.slope_ok else EXIT_TOLERANCE


def cmd_neutrality(args) -> int:
    cfg = _config(args)
    params = cfg.kernel_params()
    t_grid = tuple(args.t_grid or cfg.t_grid)
    res = neutrality_decay(cfg.f, cfg.g, args.lam, t_grid, params, cfg.quad, grid=cfg.grid)
    expected = charge(cfg.f) * charge(cfg.g) / (4.0 * math.pi)
    rows = [(t, v.real, v.imag, abs(v)) for t, v in res.table]
    footer = {"lambda": args.lam, "neutral": res.neutral, "slope": res.slope,
              "expected_slope": expected}
    _emit(args, cfg, ("t", "re_overlap", "im_overlap", "abs_overlap"), rows, footer)
    if not res.neutral:
        ok = all(v == 0 for _, v in res.table)
    elif expected == 0.0:
        ok = abs(res.slope) <= 0.05
    else:
        ok = abs(res.slope - expected) <= 0.05 * abs(expected)
    return EXIT_OK if ok else EXIT_TOLERANCE


def _selftest_checks():
    """Cheap structural checks; each yields (name, passed)."""
    mu = math.exp(EULER_GAMMA)
    f = radial_bump()
    yield "empty word has vev 1", vev(WeylWord(())) == 1.0
    yield "single charged factor has vev 0", vev(WeylWord((WeylFactor(f),))) == 0.0
    zero = f.scaled(0.0)
    yield "zero-amplitude pair exponent is 0", vev(WeylWord((WeylFactor(zero), WeylFactor(zero)))) == 1.0
    z = np.array([0.3, -2.0, 1.7]), np.array([1.1, 0.4, -0.2])
    chi = w_chiral(z[0] + z[1], mu) + w_chiral(z[0] - z[1], mu)
    yield "chiral decomposition", float(np.max(np.abs(w_reg(*z, mu) - chi))) <= 1e-14
    yield "Im I(1) = pi/2", abs(spectral_I(1.0, Regulator.parse("sharp:1")).imag - math.pi / 2) <= 1e-6
    T = math.e ** 2
    got = [fac.at(T).translation.as_tuple() for fac in build_factors(f, f)]
    yield "factor translations at T = e^2", got == [(T, -T), (T, T), (-T, -T), (-T, T)]
    yield "factor charges sum to zero", abs(sum(fac.charge for fac in build_factors(f, f.scaled(2.0)))) < 1e-12
    yield "extrapolate constant series", abs(extrapolate([(T, 0.5), (2 * T, 0.5), (4 * T, 0.5)]).extrapolated - 0.5) < 1e-15
    Ts = [20.0, 50.0, 200.0, 1000.0]
    synth = [(t, -1.0 + 0.3 * math.log(t) / t) for t in Ts]
    yield "extrapolate exact model", abs(extrapolate(synth).extrapolated + 1.0) <= 1e-8
    yield "header-only csv for empty table", csv_text(("a", "b"), []) == "a,b\n"


def cmd_selftest(args) -> int:
    failed = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name, ok in _selftest_checks():
            failed += not ok
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return EXIT_OK if failed == 0 else EXIT_TOLERANCE


# --------------------------------------------------------------------------
# parser


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _pair(text: str) -> tuple[float, float]:
    vals = _float_list(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {text!r}")
    return vals[0], vals[1]


def _lam(text: str) -> int:
    table = {"+": 1, "+1": 1, "1": 1, "-": -1, "-1": -1}
    if text not in table:
        raise argparse.ArgumentTypeError("lambda must be + or -")
    return table[text]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="infrascat", description=__doc__.split("\n\n")[0],
                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="JSON run config (defaults: built-in)")
        sp.add_argument("--out", help="CSV output path (default stdout)")
        sp.add_argument("--record", help="also write the footer record to this path")
        sp.add_argument("--jobs", type=int, default=None,
                        help="worker processes (env INFRASCAT_JOBS, default 1)")
        sp.formatter_class = argparse.ArgumentDefaultsHelpFormatter

    sp = sub.add_parser("amplitude", help="S_T over T_grid and its extrapolation")
    common(sp)
    sp.add_argument("--tolerance", type=float, default=0.02, help="allowed |S_inf - target|")
    sp.set_defaults(func=cmd_amplitude)

    sp = sub.add_parser("mu-fit", help="fit mu_v for a regulator")
    common(sp)
    sp.add_argument("--regulator", help="sharp:<r> or exp:<scale> (default sharp:1)")
    sp.add_argument("--u-grid", type=_float_list, help="positive u values for the fit")
    sp.set_defaults(func=cmd_mu_fit)

    sp = sub.add_parser("kernel-check", help="smeared kernel against the momentum-space oracle")
    common(sp)
    sp.add_argument("--shift", type=_pair, action="append", help="relative translation a,b")
    sp.add_argument("--tolerance", type=float, default=1e-5, help="allowed relative error")
    sp.set_defaults(func=cmd_kernel_check)

    sp = sub.add_parser("asymptotics", help="large-translation asymptotics of the kernel")
    common(sp)
    sp.add_argument("--case", required=True,
                    help="spacelike | timelike | lightlike+ | lightlike-")
    sp.add_argument("--alpha", type=float, help="decay exponent of r_t (config default 0.5)")
    sp.add_argument("--t-grid", type=_float_list, help="translation parameters")
    sp.set_defaults(func=cmd_asymptotics)

    sp = sub.add_parser("neutrality", help="lightlike decay of charged overlaps")
    common(sp)
    sp.add_argument("--lambda", dest="lam", type=_lam, default=1, help="+ or -")
    sp.add_argument("--t-grid", type=_float_list, help="translation parameters")
    sp.set_defaults(func=cmd_neutrality)

    sp = sub.add_parser("selftest", help="fast structural checks")
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "jobs", None) is not None or "INFRASCAT_JOBS" in os.environ:
            try:
                args.jobs = resolve_jobs(getattr(args, "jobs", None))
            except ValueError as exc:
                raise UsageError(str(exc)) from None
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return args.func(args)
    except UsageError as exc:
        print(f"infrascat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"infrascat: config error:\n{exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"infrascat: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
