"""Command-line entry point: ``spectrum``, ``heating``, ``stability`` and ``validate``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .chain import build_hamiltonian
from .config import ConfigError, load_config
from .oracles import run_validation, write_report
from .runner import run_heating, run_stability, versions, write_manifest, write_results, write_spectrum
from .spectral import diagonalize, spectrum_summary


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ensemble-stability",
        description="Stability of quantum statistical ensembles under local projective measurements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("spectrum", "diagonalize the chain and write spectrum.csv and dos.csv"),
        ("heating", "heating/broadening of a canonical ensemble under random measurements"),
        ("stability", "stability measures of the two-peak ensemble under NN measurements"),
        ("validate", "run the brute-force oracle suite"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, required=name != "validate",
                       help="JSON or YAML experiment config")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--output", type=Path, help="output directory (overrides output_dir)")
        p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config field, e.g. chain.n_spins=12")
    return parser


def _spectrum(config, out: Path) -> None:
    t0 = time.perf_counter()
    eig = diagonalize(build_hamiltonian(config.chain))
    write_spectrum(eig, out, config.n_bins)
    s = spectrum_summary(eig, config.chain.n_spins)
    write_manifest(out / "manifest.json", {
        "experiment": "spectrum",
        "config": config.to_dict(),
        "spectrum": {"e_min": s.e_min, "e_max": s.e_max, "epsilon_1": s.epsilon_1},
        "versions": versions(),
        "timings": {"total_s": time.perf_counter() - t0},
    })


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"master_seed={args.seed}")
    try:
        if args.command == "validate":
            reports = run_validation(seed=args.seed or 0)
            for r in reports:
                print(r.line())
            out = args.output or Path(".")
            out.mkdir(parents=True, exist_ok=True)
            write_report(reports, out / "validation.json")
            return 0 if all(r.passed for r in reports) else 1

        config = load_config(args.config, overrides, args.command)
        out = args.output or Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "spectrum":
            _spectrum(config, out)
        else:
            run = run_heating if args.command == "heating" else run_stability
            result = run(config, workers=args.workers)
            write_results(result, out)
            print(json.dumps({"output": str(out), "timings": result.timings,
                              "diagnostics": result.diagnostics()}, indent=2, default=float))
    except (ConfigError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
