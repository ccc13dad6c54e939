"""Command-line entry point: ``kinlimits <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields

from .fluid_reference import NoContraction
from .harness import (
    METHODS,
    ConfigError,
    EmptyInput,
    ExperimentConfig,
    cmd_coefficients,
    cmd_relax_test,
    cmd_report,
    cmd_sweep,
)
from .kinetic_solver import NotConverged
from .verify import run_algebra_suite


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(" ", "").split(",") if x]


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text}")


# every ExperimentConfig key has a flag of the same name (underscores become dashes)
_SWEEP_FLAGS = {
    "r": dict(type=float, help="scaling exponent of the nonlinear term"),
    "q": dict(type=float, help="scaling exponent of the collision frequency"),
    "epsilon_ladder": dict(type=_floats, help="comma separated, strictly decreasing, each <= 0.5"),
    "M": dict(type=int, help="spatial points per direction"),
    "N": dict(type=int, help="Gauss-Hermite nodes per velocity axis"),
    "nu0": dict(type=float, help="BGK collision frequency"),
    "amplitude": dict(type=float, help="forcing amplitude a"),
    "dt_safety": dict(type=float, help="CFL safety factor in (0, 1]"),
    "steady_tol": dict(type=float, help="relative steady-state residual"),
    "max_steps": dict(type=int, help="step budget per epsilon"),
    "method": dict(choices=METHODS, help="auto: stepping, except the direct solve in the Euler regime"),
    "fluid_tol": dict(type=float, help="Picard tolerance of the fluid reference"),
    "output_dir": dict(help="directory receiving report.csv and report.json"),
    "snapshots": dict(type=_bool, help="also write per-epsilon field checkpoints"),
}
assert set(_SWEEP_FLAGS) == {f.name for f in fields(ExperimentConfig)}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kinlimits", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-algebra", help="exact rational checks of the collision algebra")
    p.add_argument("--nu0", default="1", help="rational collision frequency, e.g. 2 or 3/2")
    p.add_argument("--seed", type=int, default=0, help="seed of the random polynomial generator")
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--corrupt-bhat", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("coefficients", help="print kappa and nu for a given nu0")
    p.add_argument("--nu0", default="1")

    p = sub.add_parser("relax-test", help="homogeneous relaxation against the exponential law")
    p.add_argument("--nu0", type=float, default=1.0)
    p.add_argument("--epsilons", type=_floats, default=[0.2, 0.05])
    p.add_argument("--qs", type=_floats, default=[0.5, 2.0])

    p = sub.add_parser("sweep", help="epsilon ladder against the limit fluid system")
    p.add_argument("--config", help="YAML file with ExperimentConfig keys")
    for name, kw in _SWEEP_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, default=None, **kw)

    p = sub.add_parser("report", help="merge report.json files into one document")
    p.add_argument("paths", nargs="*", default=["."])
    p.add_argument("-o", "--output", help="write the merged JSON here instead of stdout")
    return ap


def _run_sweep(args) -> int:
    overrides = {name: getattr(args, name) for name in _SWEEP_FLAGS}
    if args.config:
        cfg = ExperimentConfig.from_yaml(args.config, **overrides)
    else:
        cfg = ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})
    if cfg.output_dir is None:
        cfg.output_dir = "sweep_out"
    try:
        report = cmd_sweep(cfg)
    except (NotConverged, NoContraction) as exc:
        print(f"error at epsilon={getattr(exc, 'epsilon', None)}: {exc}", file=sys.stderr)
        return 3
    sys.stdout.write(report.csv_text())
    print(f"fitted_order={report.fitted_order}  kappa={report.coefficients['kappa']} nu={report.coefficients['nu']}")
    print(f"wrote {cfg.output_dir}/report.csv and report.json")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "verify-algebra":
            rep = run_algebra_suite(nu0=args.nu0, seed=args.seed, n_pairs=args.pairs, corrupt_bhat=args.corrupt_bhat)
            print("\n".join(rep.lines()))
            if rep.kappa is not None:
                print(f"kappa={rep.kappa} nu={rep.nu}")
            return 0 if rep.ok else 1
        if args.command == "coefficients":
            print(cmd_coefficients(args.nu0))
            return 0
        if args.command == "relax-test":
            res = cmd_relax_test(args.epsilons, args.qs, nu0=args.nu0)
            for c in res.cases:
                print(f"eps={c['epsilon']:g} q={c['q']:g} max_deviation={c['max_deviation']:.3e}")
            print(f"{'PASS' if res.ok else 'FAIL'}  max deviation {res.max_deviation:.3e} (limit 1e-10)")
            return 0 if res.ok else 1
        if args.command == "sweep":
            return _run_sweep(args)
        if args.command == "report":
            merged = json.dumps(cmd_report(args.paths), indent=2, sort_keys=True)
            if args.output:
                with open(args.output, "w") as fh:
                    fh.write(merged + "\n")
            else:
                print(merged)
            return 0
    except (ConfigError, EmptyInput, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
