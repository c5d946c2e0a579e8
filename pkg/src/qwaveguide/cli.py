"""Command-line front end.

Examples::

    qwaveguide run fig4c --out results
    qwaveguide export-scenario fig3 > fig3.yaml
    qwaveguide run --config fig3.yaml --seed 5 --trials 2000
    qwaveguide calibrate --two-photon results/fig3.csv --one-photon results/fig3-single.csv
    qwaveguide sweep-contamination --efficiency 0.6
    qwaveguide self-test

Exit status is 0 when every validation passes, 1 when a run completes but a
check fails, 2 on configuration or input errors.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import analysis as an
from .detection import TWO_LEVEL_TREE, DetectorModel
from .lm import FitError
from .scenario import ConfigError, Scenario, builtin, builtin_names

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="scenario YAML file")
    p.add_argument("--seed", type=int, help="RNG seed (overrides the scenario)")
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory (default: results)")
    p.add_argument("--trials", type=int, help="trials per sweep point (overrides the scenario)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="sweep data format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qwaveguide", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="run a built-in scenario or a --config file")
    p.add_argument("scenario", nargs="?", help=f"built-in name: {', '.join(builtin_names())}")
    p.add_argument("--model", help="phase-voltage model file for voltage sweeps")
    _common(p)

    p = sub.add_parser("calibrate", help="fit phi(V) and write a model file")
    p.add_argument("--two-photon", type=Path, help="two-photon voltage sweep CSV")
    p.add_argument("--one-photon", type=Path, help="one-photon voltage sweep CSV (resolves the 2 pi branch)")
    p.add_argument("--name", default="phase_model", help="model file stem (default: phase_model)")
    _common(p)

    p = sub.add_parser("export-scenario", help="print a built-in scenario as YAML")
    p.add_argument("name", choices=builtin_names())
    _common(p)

    p = sub.add_parser("sweep-contamination", help="four-fold contrast vs pair amplitude")
    p.add_argument("--lams", type=float, nargs="+", help="pair amplitudes (default: 10 points on [0, 0.3])")
    p.add_argument("--efficiency", type=float, default=0.6, help="per-photon detection efficiency")
    p.add_argument("--n-max", type=int, default=3, help="pair-number truncation")
    _common(p)

    p = sub.add_parser("self-test", help="run the oracle suites")
    _common(p)
    return parser


def _load_scenario(args) -> Scenario:
    if args.config is not None:
        s = Scenario.from_yaml(args.config.read_text())
    elif args.scenario:
        if args.scenario not in builtin_names():
            raise ConfigError("scenario", f"unknown built-in {args.scenario!r}; choose from {builtin_names()}")
        s = builtin(args.scenario)
    else:
        raise ConfigError("scenario", "give a built-in name or --config PATH")
    if getattr(args, "model", None):
        s.sweep["model"] = args.model
    return s


def cmd_run(args) -> int:
    from .runner import run_scenario

    s = _load_scenario(args)
    res = run_scenario(s, trials=args.trials, seed=args.seed)
    for path in res.write(args.out, args.format):
        print(path)
    for check, ok in res.summary["checks"].items():
        print(f"{'PASS' if ok else 'FAIL'}  {check}")
    return EXIT_OK if res.valid else EXIT_FAILED


def _synthetic_calibration_data(args):
    from .runner import run_scenario

    two = run_scenario(builtin("fig3"), trials=args.trials, seed=args.seed)
    one = run_scenario(builtin("fig3-single"), trials=args.trials, seed=args.seed)
    return (
        an.FringeData.from_records(two.records, "voltage"),
        an.FringeData.from_records(one.records, "voltage"),
    )


def cmd_calibrate(args) -> int:
    from .runner import run_calibration, write_model_file

    if args.two_photon is None:
        print("no --two-photon data given; calibrating on simulated fig3 sweeps")
        two, one = _synthetic_calibration_data(args)
    else:
        two = an.FringeData.from_csv(args.two_photon.read_text(), "voltage")
        one = an.FringeData.from_csv(args.one_photon.read_text(), "voltage") if args.one_photon else None
    fit = run_calibration(two, one)
    args.out.mkdir(parents=True, exist_ok=True)
    path = write_model_file(fit, args.out / f"{args.name}.json")
    print(path)
    m = fit.model
    unc = m.uncertainties or (float("nan"),) * 4
    for label, value, err in zip(("alpha", "beta", "gamma", "delta"), m.coefficients, unc):
        print(f"{label:>6} = {value:+.5f} +/- {err:.5f}")
    for note in fit.notes:
        print(f"note: {note}")
    ok = fit.converged and (one is None or fit.branch_resolved)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_export(args) -> int:
    text = builtin(args.name).to_yaml()
    if args.config is not None:
        args.config.write_text(text)
        print(args.config)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_contamination(args) -> int:
    from .runner import contamination_table, run_contamination_sweep

    lams = args.lams if args.lams else list(np.linspace(0.0, 0.3, 10))
    det = DetectorModel(efficiency=args.efficiency, number_resolving=False, cascades={0: TWO_LEVEL_TREE})
    rows = run_contamination_sweep(sorted(lams), det, n_max=args.n_max)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "contamination.csv"
    path.write_text(contamination_table(rows, args.efficiency, args.n_max))
    print(path)
    for r in rows:
        print(f"lam={r['lam']:.4f}  contrast={r['contrast']:.4f}")
    c = [r["contrast"] for r in rows]
    monotone = all(b <= a + 1e-12 for a, b in zip(c, c[1:]))
    print(f"{'PASS' if monotone else 'FAIL'}  contrast non-increasing in lam")
    return EXIT_OK if monotone else EXIT_FAILED


def cmd_selftest(args) -> int:
    from .selftest import run_all

    return EXIT_OK if run_all() else EXIT_FAILED


COMMANDS = {
    "run": cmd_run,
    "calibrate": cmd_calibrate,
    "export-scenario": cmd_export,
    "sweep-contamination": cmd_contamination,
    "self-test": cmd_selftest,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    warnings.simplefilter("default")
    try:
        return COMMANDS[args.verb](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
