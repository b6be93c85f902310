"""Command-line front end.

    pointer-sim premeasure --config run.json [--out out.json]
    pointer-sim decohere   --config run.json [--out curve.csv]
    pointer-sim oracle     --config run.json [--out oracle.csv] [--seed N]
    pointer-sim scan       --config run.json [--out scan.json]  [--seed N]
    pointer-sim envariance --config run.json [--out env.json]

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 tolerance
failure. Output is written only after the whole run succeeded.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from fractions import Fraction

import numpy as np

from . import config as cfg
from .bath import QuadratureError, coherence_curve, initial_sa_density
from .envariance import (
    born_by_counting,
    counter_swap,
    fine_grain,
    is_envariant,
    rational_approx,
    reversal_residual,
    schmidt_decompose,
    swap_system,
)
from .hilbert import ValidationError
from .measurement import PremeasurementConfig, free_evolve, premeasure, premeasurement_unitary
from .oracle import DimensionCapError, TruncatedBath, adequate_cutoff, compare_analytic, stratified_modes
from .pointer import ambiguity_check, default_grid, pointer_scan, random_grid, xy_circle_grid

log = logging.getLogger("pointer_sim")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_TOLERANCE = 4

THREADS_ENV = "POINTER_SIM_THREADS"

DECOHERE_HEADER = ["t", "I1", "re_rho14", "im_rho14", "abs_rho14", "pop_pp", "pop_mm"]
ORACLE_HEADER = ["t", "max_abs_diff", "truncation_bound"]


class ToleranceExceeded(Exception):
    def __init__(self, payload: str, message: str):
        self.payload = payload
        super().__init__(message)


def fmt(x: float) -> str:
    """12 significant digits, the CSV float format."""
    return f"{x:.12g}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


@contextmanager
def _executor():
    raw = os.environ.get(THREADS_ENV)
    n = 1
    if raw:
        try:
            n = max(1, int(raw))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
    if n == 1:
        yield None
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            yield pool


def run_premeasure(c: cfg.PremeasureConfig, seed: int | None = None) -> str:
    a, b = c.a, c.b
    if c.dt:
        a, b = free_evolve(a, b, c.dt, c.omega0)
    pm = PremeasurementConfig(c.omega0, c.g, c.n_odd)
    psi = premeasure(a, b, pm)
    u = premeasurement_unitary(pm.g, pm.tau_pm)
    return _json({
        "config": c.to_dict(),
        "tau_pm": pm.tau_pm,
        "basis": ["++", "+-", "-+", "--"],
        "amplitudes": [cfg.encode_complex(z) for z in psi.amplitudes],
        "unitary": cfg.encode_matrix(u),
    })


def run_decohere(c: cfg.DecohereConfig, seed: int | None = None) -> str:
    rho0 = initial_sa_density(c.a, c.b)
    with _executor() as pool:
        curve = coherence_curve(rho0, c.omega0, c.bath.spec(), c.times.array(), executor=pool)
    rows = []
    for k, t in enumerate(curve.times):
        z = curve.coherence_14[k]
        pops = curve.populations[k]
        rows.append((t, curve.i1_values[k], z.real, z.imag, abs(z), pops[0], pops[3]))
    return _csv(DECOHERE_HEADER, rows)


def oracle_bath(c: cfg.OracleConfig, seed: int | None = None) -> TruncatedBath:
    if c.modes is not None:
        modes = c.modes
    else:
        modes = stratified_modes(c.k_modes, c.omega_max, c.g_range, rng=c.seed if seed is None else seed)
    if c.n_max is None:
        n_max = [adequate_cutoff(w, c.beta) for w, _ in modes]
    else:
        n_max = c.n_max
    # The oracle run reports disagreement itself, so a poor cutoff is not rejected up front.
    return TruncatedBath(modes, n_max, c.beta, strict=False)


def run_oracle(c: cfg.OracleConfig, seed: int | None = None) -> str:
    bath = oracle_bath(c, seed)
    rho0 = initial_sa_density(c.a, c.b)
    with _executor() as pool:
        report = compare_analytic(rho0, bath, c.omega0, c.times.array(), c.method, c.max_dim, executor=pool)
    rows = [(t, d, report.truncation_bound) for t, d in zip(report.times, report.max_abs_diff)]
    out = _csv(ORACLE_HEADER, rows)
    worst = float(np.max(report.max_abs_diff)) if report.max_abs_diff.size else 0.0
    if not report.passed(c.tolerance):
        raise ToleranceExceeded(out, f"max |exact - analytic| = {worst:.3g} >= tolerance {c.tolerance:g}")
    return out


def _candidate_json(cand, norm):
    return {"label": cand.label, "theta": cand.theta, "phi": cand.phi, "coherence_norm": norm}


def run_scan(c: cfg.ScanConfig, seed: int | None = None) -> str:
    rho = c.density()
    if c.random_count:
        grid = random_grid(c.random_count, c.seed if seed is None else seed)
    else:
        grid = default_grid(c.n_theta, c.n_phi)
    with _executor() as pool:
        report = pointer_scan(rho, grid, c.tolerance, executor=pool)
    out = {
        "config": c.to_dict(),
        "minimizer": _candidate_json(report.minimizer, report.min_norm),
        "is_unique": report.is_unique,
        "margin": report.margin,
        "tolerance": report.tolerance,
        "candidates": [_candidate_json(cand, n) for cand, n in report.candidates],
    }
    if c.rho is None:
        amb = ambiguity_check(np.array([c.a, 0, 0, c.b]), xy_circle_grid(c.xy_points))
        out["pure_ancestor_ambiguity"] = {
            "found": amb.found,
            "solutions": [{"x": s.params.x, "y": s.params.y, "sign": s.sign, "residual": s.residual}
                          for s in amb.solutions],
            "analytic_angles": [{"angle": ang, "sign": sg} for ang, sg in amb.analytic_angles],
        }
    return _json(out)


def run_envariance(c: cfg.EnvarianceConfig, seed: int | None = None) -> str:
    psi = np.array([c.c0, 0, 0, c.c1], dtype=complex)
    sd = schmidt_decompose(psi, (2, 2))
    out = {"config": c.to_dict(), "schmidt_coefficients": [cfg.encode_complex(z) for z in sd.coefficients]}
    if len(sd.coefficients) == 2:
        phi0, phi1 = sd.phases
        u_s = swap_system(c.phi, sd.basis_s)
        u_a = counter_swap(c.phi, phi0, phi1, sd.basis_a)
        out["reversal_residual"] = reversal_residual(psi, u_s, u_a)
        out["envariant"] = is_envariant(psi, u_s, u_a, c.tol)
    else:
        out["reversal_residual"] = None
        out["envariant"] = None
    p0 = abs(c.c0) ** 2
    out["born"] = {"abs_c0_sq": p0, "abs_c1_sq": abs(c.c1) ** 2}
    if 0 < p0 < 1:
        a, b, gap = rational_approx(p0, c.denominator_cap)
        out["rational_approx"] = {"a": a, "b": b, "gap": gap}
        exact = Fraction(p0).limit_denominator(c.denominator_cap)
        if abs(float(exact) - p0) < 1e-9 and 0 < exact < 1:
            a, b = exact.numerator, exact.denominator - exact.numerator
            state, is_exact = fine_grain(c.c0, c.c1, a, b), True
        elif a > 0 and b > 0:
            n = a + b
            state, is_exact = fine_grain(math.sqrt(a / n), math.sqrt(b / n), a, b), False
        else:
            state, is_exact = None, False
        if state is not None:
            q0, q1 = born_by_counting(state)
            out["counting"] = {"exact": is_exact, "a": state.a_count,
                               "b": state.b_count, "p0": float(q0), "p1": float(q1),
                               "error": abs(float(q0) - p0)}
    return _json(out)


RUNNERS = {
    "premeasure": run_premeasure,
    "decohere": run_decohere,
    "oracle": run_oracle,
    "scan": run_scan,
    "envariance": run_envariance,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pointer-sim", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--seed", type=int, default=None, help="RNG seed for random baths and grids")
    return parser


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"{args.config}: cannot read config: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        conf = cfg.load(args.command, text)
    except cfg.ConfigError as exc:
        print(exc.located(args.config, exc.line), file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None and hasattr(conf, "seed"):
        conf = dataclasses.replace(conf, seed=args.seed)
    try:
        text_out = RUNNERS[args.command](conf, args.seed)
    except ToleranceExceeded as exc:
        _emit(exc.payload, args.out)
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except (DimensionCapError,) as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(text_out, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
