"""Command-line front end.

Subcommands: simulate-scan, sweep-pump-angle, fit, reproduce-fig5,
oracle-check.  Angles are taken in degrees on the command line and converted
to radians at this boundary only.  Exit codes: 0 success, 2 input error,
3 I/O error, 4 non-convergence (or failed numerical conformance).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
from typing import List, Optional, Tuple

import numpy as np

from .analysis import concurrence, phi_scan_oracle, visibility_from_extrema
from .config import (ENV_CONFIG_PATH, ConfigError, RunConfig, default_config,
                     default_config_path, load_config)
from .detection import ScanRecord
from .errors import TwinfringeError
from .fitting import (FitResult, FringeModelParams, fit_fringe,
                      fit_visibility_curve, fringe_model, fringe_params,
                      visibility_curve_params)
from .pipeline import (FIG5_SEED, FIG5_TOLERANCE, FIG5_TRUTH,
                       reproduce_fig5, simulate_scan, sweep_pump_angle)
from .polarization import PolarizationAngle
from .spdc import (TwoPhotonState, predicted_visibility,
                   predicted_visibility_with_analyzers)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_IO = 3
EXIT_NOCONV = 4

SCAN_HEADER = ["position_m", "counts", "integration_s", "expected_rate"]
SWEEP_HEADER = ["theta_rad", "mu", "sigma_mu"]

_SCAN_MODES = {"signal": "signal_only", "idler": "idler_only", "both": "both"}


def _fmt(x: float) -> str:
    return repr(float(x))


def _resolve_config(args) -> RunConfig:
    path = getattr(args, "config", None) or default_config_path()
    if path is None:
        return default_config()
    return load_config(path)


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    scan = config.scan
    if getattr(args, "seed", None) is not None:
        scan = dataclasses.replace(scan, seed=args.seed)
    if getattr(args, "scan_mode", None) is not None:
        scan = dataclasses.replace(scan, scan_mode=_SCAN_MODES[args.scan_mode])
    if scan is not config.scan:
        config = dataclasses.replace(config, scan=scan)
    return config


def write_scan_csv(records: List[ScanRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(SCAN_HEADER) + "\n")
        for rec in records:
            fh.write(f"{_fmt(rec.position)},{rec.counts},"
                     f"{_fmt(rec.integration_time)},{_fmt(rec.expected_rate)}\n")


def write_sweep_csv(points, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(SWEEP_HEADER) + "\n")
        for p in points:
            fh.write(f"{_fmt(p.theta)},{_fmt(p.mu)},{_fmt(p.sigma_mu)}\n")


def _read_csv(path: str) -> Tuple[List[str], List[List[str]]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise TwinfringeError(f"{path}: empty data file")
    return [cell.strip() for cell in rows[0]], rows[1:]


def read_scan_csv(path: str) -> List[ScanRecord]:
    header, rows = _read_csv(path)
    if header != SCAN_HEADER:
        raise TwinfringeError(
            f"{path}: expected scan columns {SCAN_HEADER}, got {header}")
    records = []
    for i, row in enumerate(rows, start=2):
        try:
            records.append(ScanRecord(position=float(row[0]), counts=int(row[1]),
                                      integration_time=float(row[2]),
                                      expected_rate=float(row[3])))
        except (ValueError, IndexError) as exc:
            raise TwinfringeError(f"{path}:{i}: bad scan row: {exc}") from exc
    return records


def read_sweep_csv(path: str) -> List[Tuple[float, float, float]]:
    header, rows = _read_csv(path)
    if header != SWEEP_HEADER:
        raise TwinfringeError(
            f"{path}: expected sweep columns {SWEEP_HEADER}, got {header}")
    points = []
    for i, row in enumerate(rows, start=2):
        try:
            points.append((float(row[0]), float(row[1]), float(row[2])))
        except (ValueError, IndexError) as exc:
            raise TwinfringeError(f"{path}:{i}: bad sweep row: {exc}") from exc
    return points


def _fringe_summary(fit: FitResult) -> str:
    p = fringe_params(fit)
    se = fit.stderr
    return (f"mu = {p.mu:.4f} +/- {se[1]:.4f}   period = {p.period:.6g} m   "
            f"c0 = {p.c0:.4f} /s   psi = {p.psi:.4f} rad   "
            f"({'converged' if fit.converged else 'NOT CONVERGED'}, "
            f"{fit.iterations} iterations)")


def cmd_simulate_scan(args) -> int:
    config = _apply_overrides(_resolve_config(args), args)
    records = simulate_scan(config)
    write_scan_csv(records, args.output)
    print(f"wrote {len(records)} scan points to {args.output}")
    try:
        fit = fit_fringe(records)
    except TwinfringeError as exc:
        print(f"fringe fit skipped: {exc}", file=sys.stderr)
        return EXIT_OK
    print("fitted fringe: " + _fringe_summary(fit))
    if not fit.converged:
        print("warning: fringe fit did not converge", file=sys.stderr)
    return EXIT_OK


def _parse_theta_list(text: str) -> List[float]:
    try:
        degs = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise TwinfringeError(f"--theta-deg: {exc}") from exc
    if not degs:
        raise TwinfringeError("--theta-deg: no angles given")
    return [math.radians(d) for d in degs]


def cmd_sweep_pump_angle(args) -> int:
    config = _apply_overrides(_resolve_config(args), args)
    if args.theta_deg:
        thetas = _parse_theta_list(args.theta_deg)
    else:
        thetas = list(np.linspace(0.0, math.pi, 19))
    if len(thetas) < 4:
        print("warning: fewer than 4 angles; a downstream visibility-curve "
              "fit on this table will be ill-posed", file=sys.stderr)
    points = sweep_pump_angle(config, thetas)
    write_sweep_csv(points, args.output)
    print(f"wrote {len(points)} sweep points to {args.output}")
    print(f"{'theta_deg':>10} {'mu':>8} {'sigma_mu':>9}")
    for p in points:
        flag = "" if p.converged else "  (fit not converged)"
        print(f"{math.degrees(p.theta):>10.2f} {p.mu:>8.4f} {p.sigma_mu:>9.4f}{flag}")
    return EXIT_OK


def _parse_init_overrides(items) -> dict:
    overrides = {}
    for item in items or []:
        if "=" not in item:
            raise TwinfringeError(f"--init expects NAME=VALUE, got {item!r}")
        name, _, value = item.partition("=")
        try:
            overrides[name.strip()] = float(value)
        except ValueError as exc:
            raise TwinfringeError(f"--init {item!r}: {exc}") from exc
    return overrides


def _write_report(report: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_fit(args) -> int:
    overrides = _parse_init_overrides(args.init)
    out_path = args.output or args.data + ".fit.json"
    if args.model == "fringe":
        records = read_scan_csv(args.data)
        observable = args.observable
        if observable == "auto":
            noiseless = (all(r.integration_time == 0.0 for r in records)
                         or all(r.counts == 0 for r in records))
            observable = "expected" if noiseless else "counts"
        if observable == "expected":
            data = [(r.position, r.expected_rate) for r in records]
        else:
            data = records
        try:
            fit = fit_fringe(data, fix_period=args.fix_period,
                             init_overrides=overrides)
        except ValueError as exc:
            raise TwinfringeError(str(exc)) from exc
        p = fringe_params(fit)
        se = fit.stderr
        print("fringe fit: " + _fringe_summary(fit))
        report = {
            "model": "fringe",
            "observable": observable,
            "params": {"c0": p.c0, "mu": p.mu, "period": p.period, "psi": p.psi},
            "stderr": {"c0": se[0], "mu": se[1], "period": se[2], "psi": se[3]},
        }
    else:
        points = read_sweep_csv(args.data)
        try:
            fit = fit_visibility_curve(points, variant=args.variant,
                                       init_overrides=overrides)
        except ValueError as exc:
            raise TwinfringeError(str(exc)) from exc
        p = visibility_curve_params(fit, args.variant)
        se = fit.stderr
        print(f"visibility-curve fit ({args.variant}): "
              f"mu_max = {p.mu_max:.4f} +/- {se[0]:.4f}   "
              f"theta0 = {p.theta0:.4f} +/- {se[1]:.4f} rad   "
              f"eps1 = {p.eps1:.4f} +/- {se[2]:.4f}   eps2 = {p.eps2:.4f}   "
              f"({'converged' if fit.converged else 'NOT CONVERGED'})")
        report = {
            "model": "viscurve",
            "variant": args.variant,
            "params": {"mu_max": p.mu_max, "theta0": p.theta0,
                       "eps1": p.eps1, "eps2": p.eps2},
            "stderr": {"mu_max": se[0], "theta0": se[1], "eps1": se[2]},
        }
    report.update({
        "residual_norm": fit.residual_norm,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "message": fit.message,
    })
    _write_report(report, out_path)
    print(f"report written to {out_path}")
    if not fit.converged:
        print("error: fit did not converge; best parameters reported",
              file=sys.stderr)
        return EXIT_NOCONV
    return EXIT_OK


def cmd_reproduce_fig5(args) -> int:
    os.makedirs(args.output, exist_ok=True)
    result = reproduce_fig5(seed=args.seed if args.seed is not None else FIG5_SEED,
                            variant=args.variant)
    write_sweep_csv(result.points, os.path.join(args.output, "visibility_sweep.csv"))
    report = {
        "variant": result.variant,
        "fitted": {"mu_max": result.mu_max, "theta0": result.theta0,
                   "eps1": result.eps1, "eps2": result.eps2},
        "reference": dict(FIG5_TRUTH),
        "tolerance": dict(FIG5_TOLERANCE),
        "deltas": result.deltas,
        "checks": result.checks,
        "converged": result.fit.converged,
        "passed": result.passed,
    }
    _write_report(report, os.path.join(args.output, "fig5_report.json"))

    print(f"visibility sweep reproduction (variant = {result.variant})")
    print(f"{'parameter':>9} {'fitted':>9} {'reference':>10} {'delta':>9} "
          f"{'tolerance':>10} {'ok':>4}")
    fitted = {"mu_max": result.mu_max, "theta0": result.theta0, "eps2": result.eps2}
    for key in ("mu_max", "theta0", "eps2"):
        note = " (mod pi/2)" if key == "theta0" else ""
        print(f"{key:>9} {fitted[key]:>9.4f} {FIG5_TRUTH[key]:>10.4f} "
              f"{result.deltas[key]:>9.4f} {FIG5_TOLERANCE[key]:>10.4f} "
              f"{'yes' if result.checks[key] else 'NO':>4}{note}")
    if result.variant == "paper":
        floor_pred = result.mu_max * (2.0 * math.sqrt(1 - 0.08 ** 2) * 0.08) ** 2
        floor_obs = min(p.mu for p in result.points)
        print(f"note: at eps2 = 0.08 the paper-variant floor would be "
              f"{floor_pred:.4f}, but the simulated sweep bottoms out at "
              f"{floor_obs:.4f}; the fit compensates with an inflated eps2")
    print(f"verdict: {'PASS' if result.passed else 'FAIL'}")
    print(f"outputs in {args.output}")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    n = args.draws
    worst = {}

    def random_state():
        r = rng.uniform(0.0, 1.0)
        pa, pb = rng.uniform(0.0, 2.0 * math.pi, size=2)
        a1 = math.sqrt(r) * np.exp(1j * pa)
        a2 = math.sqrt(1.0 - r) * np.exp(1j * pb)
        chi1 = PolarizationAngle(rng.uniform(0.0, math.pi))
        chi2 = PolarizationAngle(rng.uniform(0.0, math.pi))
        return TwoPhotonState(complex(a1), complex(a2), chi1, chi2)

    err = 0.0
    for _ in range(n):
        state = random_state()
        err = max(err, abs(predicted_visibility(state)
                           - phi_scan_oracle(state).mu))
    worst["closed form vs oracle, bare detectors"] = (err, 1e-6)

    err = 0.0
    for _ in range(n):
        state = random_state()
        ana = (PolarizationAngle(rng.uniform(0.0, math.pi)),
               PolarizationAngle(rng.uniform(0.0, math.pi)))
        err = max(err, abs(predicted_visibility_with_analyzers(state, *ana)
                           - phi_scan_oracle(state, ana).mu))
    worst["closed form vs oracle, analyzers"] = (err, 1e-6)

    err = 0.0
    for _ in range(n):
        r = rng.uniform(0.0, 1.0)
        pa, pb = rng.uniform(0.0, 2.0 * math.pi, size=2)
        chi1 = PolarizationAngle(rng.uniform(0.0, math.pi))
        state = TwoPhotonState(complex(math.sqrt(r) * np.exp(1j * pa)),
                               complex(math.sqrt(1.0 - r) * np.exp(1j * pb)),
                               chi1, chi1.orthogonal())
        ana = PolarizationAngle(chi1.radians + math.pi / 4.0)
        err = max(err, abs(concurrence(state) - phi_scan_oracle(state, (ana, ana)).mu))
    worst["concurrence vs 45-degree visibility"] = (err, 1e-6)

    err = 0.0
    for _ in range(n // 10 + 1):
        p = FringeModelParams(c0=rng.uniform(0.5, 100.0), mu=rng.uniform(0.0, 1.0),
                              period=rng.uniform(1e-4, 1e-2),
                              psi=rng.uniform(-math.pi, math.pi))
        x_hi = -p.psi * p.period / (2.0 * math.pi)
        x_lo = x_hi + p.period / 2.0
        mu = visibility_from_extrema(fringe_model(x_hi, p), fringe_model(x_lo, p))
        err = max(err, abs(mu - p.mu))
    worst["fringe extrema identity"] = (err, 1e-12)

    err = 0.0
    for _ in range(n // 10 + 1):
        state = random_state()
        gamma, delta = rng.uniform(0.0, 2.0 * math.pi, size=2)
        base = phi_scan_oracle(state).mu
        rotated = TwoPhotonState(complex(state.a1 * np.exp(1j * gamma)),
                                 complex(state.a2 * np.exp(1j * (gamma + delta))),
                                 state.chi1, state.chi2)
        err = max(err, abs(phi_scan_oracle(rotated).mu - base))
    worst["oracle invariance under global phase and fringe shifts"] = (err, 1e-9)

    ok = True
    for name, (value, tol) in worst.items():
        passed = value <= tol
        ok = ok and passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: max error "
              f"{value:.3e} (tolerance {tol:.0e})")
    print(f"conformance: {'PASS' if ok else 'FAIL'} over {n} draws")
    return EXIT_OK if ok else EXIT_NOCONV


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinfringe",
        description="Simulate two-crystal pair-source fringe scans and "
                    "recover entanglement from their visibility.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, scan_mode=True):
        p.add_argument("--config", help=f"config JSON path (default: "
                       f"${ENV_CONFIG_PATH} or built-in defaults)")
        p.add_argument("--seed", type=int, help="override the config seed")
        if scan_mode:
            p.add_argument("--scan-mode", choices=sorted(_SCAN_MODES),
                           help="which detector(s) move")

    p = sub.add_parser("simulate-scan", help="simulate one detector sweep")
    add_common(p)
    p.add_argument("--output", default="scan.csv", help="scan CSV path")
    p.set_defaults(func=cmd_simulate_scan)

    p = sub.add_parser("sweep-pump-angle",
                       help="visibility vs pump angle (simulate + fit per angle)")
    add_common(p)
    p.add_argument("--theta-deg", help="comma-separated pump angles in degrees "
                   "(default: 19 angles over [0, 180])")
    p.add_argument("--output", default="sweep.csv", help="sweep CSV path")
    p.set_defaults(func=cmd_sweep_pump_angle)

    p = sub.add_parser("fit", help="fit an exported data file")
    p.add_argument("data", help="scan or sweep CSV")
    p.add_argument("--model", choices=["fringe", "viscurve"], required=True)
    p.add_argument("--variant", choices=["paper", "derived"], default="derived")
    p.add_argument("--fix-period", type=float, default=None,
                   help="pin the fringe period (meters)")
    p.add_argument("--observable", choices=["auto", "counts", "expected"],
                   default="auto", help="fringe fits: fit counts or the "
                   "noise-free expected rate column")
    p.add_argument("--init", action="append", metavar="NAME=VALUE",
                   help="override a fit starting value (repeatable)")
    p.add_argument("--output", help="report JSON path (default: DATA.fit.json)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("reproduce-fig5",
                       help="deterministic end-to-end sweep reproduction "
                            "with pass/fail comparison")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--variant", choices=["paper", "derived"], default="derived")
    p.add_argument("--output", default="fig5_out", help="output directory")
    p.set_defaults(func=cmd_reproduce_fig5)

    p = sub.add_parser("oracle-check",
                       help="brute-force conformance report for the "
                            "closed-form visibility laws")
    p.add_argument("--draws", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle_check)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TwinfringeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
