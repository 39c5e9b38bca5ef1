"""Command line entry point: ``randcorr simulate | analyze | scan | report``.

Exit status: 0 success, 1 usage or configuration error, 2 I/O error,
3 scientific failure (bound violation or non-physical state).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io
from .bisep import scan_bound
from .distributions import histogram, product_distribution_test, theoretical_density
from .quantum import (
    CorrelationTensor,
    DensityMatrix,
    NonPhysicalStateError,
    make_reference_state,
    mask_label,
    state_from_tensor,
    submasks,
)
from .sampling import run_experiment
from .witnesses import WitnessReport, witness_report

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_SCIENCE = 0, 1, 2, 3
OUTDIR_ENV = "RANDCORR_OUTDIR"


class ScientificFailure(RuntimeError):
    pass


def default_outdir() -> str:
    return os.environ.get(OUTDIR_ENV, ".")


def build_state(cfg: io.RunConfig) -> tuple[DensityMatrix, dict]:
    if cfg.state.startswith("tensor:"):
        path = cfg.state.split(":", 1)[1]
        rho = state_from_tensor(CorrelationTensor(io.load_tensor(path)))
        return rho, {"state": "tensor", "tensor_file": path}
    if cfg.state == "mixed":
        return DensityMatrix.maximally_mixed(cfg.n), {"state": "mixed"}
    meta = {"state": cfg.state}
    if cfg.state == "bisep":
        meta["phi"] = cfg.phi
    return make_reference_state(cfg.state, cfg.phi), meta


def cmd_simulate(cfg: io.RunConfig, output: Optional[Path] = None) -> Path:
    """Simulate a dataset and write it; returns the file path."""
    cfg.validate()
    rho, meta = build_state(cfg)
    ds = run_experiment(rho, cfg.n_settings, cfg.shots, cfg.noise_model, cfg.seed,
                        workers=cfg.workers, metadata=meta)
    out = Path(output) if output else Path(cfg.out) / "dataset.tsv"
    out.parent.mkdir(parents=True, exist_ok=True)
    return io.write_dataset(ds, out)


def product_cuts(n: int) -> list[tuple[int, int]]:
    """Every bipartition A|B of every subset of size >= 2 (A holds the lowest qubit)."""
    cuts = []
    for w in range(1, 1 << n):
        low = w & -w
        for a in submasks(w):
            if a != w and a & low:
                cuts.append((a, w ^ a))
    return cuts


def cmd_analyze(dataset: Path, cfg: io.RunConfig) -> WitnessReport:
    """Witness report, histograms, product tests and reference curves."""
    cfg.validate()
    ds = io.read_dataset(dataset)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    report = witness_report(ds, z=cfg.z)
    io.write_report(report, out / "report.ini", {"dataset": Path(dataset).name, "n_settings": ds.n_settings,
                                                  "n_shots": ds.n_shots or "exact"})
    for mask in range(1, 1 << ds.n):
        io.write_histogram(histogram(ds, mask, cfg.bins, density=True), out / f"hist_E{mask_label(mask)}.tsv")
    seed = ds.seed if isinstance(ds.seed, int) else 0
    tests = [(a, b, product_distribution_test(ds, a, b, cfg.alpha, seed=seed)) for a, b in product_cuts(ds.n)]
    io.write_product_tests(tests, out / "product_tests.tsv")
    grid = np.linspace(0, 1, 201)[1:]
    for k in range(1, ds.n + 1):
        io.write_curve(grid, theoretical_density("product-pure", grid, k), out / f"curve_product_pure_{k}.tsv")
    io.write_curve(grid, theoretical_density("uniform", grid), out / "curve_uniform.tsv")
    g0 = np.linspace(0, 1, 201)
    io.write_curve(g0, theoretical_density("mixed-delta", g0), out / "curve_mixed_delta.tsv")
    return report


def cmd_scan(n: int, samples: int, seed: int, out: Path, mode: str = "bisep",
             workers: int = 1) -> Path:
    """Run a bound scan; raises :class:`ScientificFailure` on any violation."""
    if n not in (3, 4):
        raise io.ConfigError(f"scan supports n = 3 or 4, got {n}")
    if samples < 1:
        raise io.ConfigError("samples must be >= 1")
    table = scan_bound(n, samples, seed, mode=mode, workers=workers)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    path = io.write_frontier(table, out / f"frontier_n{n}_{mode}.tsv")
    if mode == "bisep" and table.total_violations:
        dump = io.write_offenders(table, out / f"violations_n{n}.tsv")
        raise ScientificFailure(f"{table.total_violations} bound violations; offending samples in {dump}")
    return path


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _shots(text: str):
    if text == "exact":
        return text
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("shots must be a positive integer or 'exact'") from None
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="randcorr", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def run_flags(sp):
        sp.add_argument("--config", type=Path, help="JSON config; flags override it")
        sp.add_argument("--out", help=f"output directory (default ${OUTDIR_ENV} or .)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)

    s = sub.add_parser("simulate", help="simulate a correlation dataset")
    run_flags(s)
    s.add_argument("--state", help="trisep | bisep | ghz | cluster | mixed | tensor:<file>")
    s.add_argument("--phi", type=float)
    s.add_argument("--n", type=int, help="qubit count for --state mixed")
    s.add_argument("--settings", dest="n_settings", type=int)
    s.add_argument("--shots", dest="n_shots", type=_shots)
    s.add_argument("--noise", choices=["none", "fresh", "drift"])
    s.add_argument("--block", type=int)
    s.add_argument("--output", type=Path, help="dataset file (default <out>/dataset.tsv)")

    a = sub.add_parser("analyze", help="witness report, histograms and product tests")
    run_flags(a)
    a.add_argument("dataset", type=Path)
    a.add_argument("--bins", type=int)
    a.add_argument("--alpha", type=float)
    a.add_argument("--z", type=float)

    c = sub.add_parser("scan", help="check the biseparable bounds on random states")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--samples", type=int, default=100000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--mode", choices=["bisep", "all"], default="bisep")
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--out")

    r = sub.add_parser("report", help="pretty-print a report file")
    r.add_argument("report", type=Path)
    return p


_CONFIG_FLAGS = ("state", "phi", "n", "n_settings", "n_shots", "noise", "block", "seed",
                 "bins", "alpha", "z", "out", "workers")


def resolve_config(args) -> io.RunConfig:
    data = io.RunConfig(out=default_outdir()).__dict__.copy()
    if getattr(args, "config", None):
        try:
            given = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise io.ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(given, dict):
            raise io.ConfigError("config must be a JSON object")
        data.update(given)
    for key in _CONFIG_FLAGS:
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    return io.RunConfig.from_dict(data).validate()


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            path = cmd_simulate(resolve_config(args), args.output)
            print(path)
        elif args.command == "analyze":
            report = cmd_analyze(args.dataset, resolve_config(args))
            print(io.pretty_report(report))
        elif args.command == "scan":
            path = cmd_scan(args.n, args.samples, args.seed, Path(args.out or default_outdir()),
                            args.mode, args.workers)
            print(path)
        elif args.command == "report":
            print(io.pretty_report(io.read_report(args.report)))
    except io.ConfigError as exc:
        print(f"randcorr: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, io.FormatError) as exc:
        print(f"randcorr: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ScientificFailure, NonPhysicalStateError) as exc:
        print(f"randcorr: {exc}", file=sys.stderr)
        return EXIT_SCIENCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
