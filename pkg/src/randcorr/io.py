"""Text file formats and run configuration.

All files are plain UTF-8 text with explicit headers so they diff cleanly and
load into any plotting tool.  Floats that are read back for analysis are
written with ``repr`` so a write/read round trip is exact; setting directions
are written to 12 significant digits.

Dataset file::

    # randcorr-dataset
    # version = 1.0
    # n = 4
    # n_settings = 100
    # n_shots = 475            (or "exact")
    # seed = 7
    # noise = none             (none | fresh | drift:B)
    # state = ghz
    # phi = 0.2                (bisep only)
    index  d1_x  d1_y  d1_z ... E_1  E_2  E_12 ...   (tab separated)
    0      ...

Subset columns follow bitmask order (bit i set <-> qubit i+1).
"""
from __future__ import annotations

import configparser
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .bisep import FrontierTable
from .distributions import Histogram, TestResult
from .quantum import mask_label
from .sampling import CorrelationDataset, NoiseModel
from .witnesses import SubsetReport, WitnessReport

FORMAT_VERSION = "1.0"
DATASET_MAGIC = "randcorr-dataset"
REPORT_MAGIC = "randcorr-report"

PathLike = Union[str, Path]


class FormatError(ValueError):
    """Malformed or unsupported file."""


class ConfigError(ValueError):
    """Invalid run configuration."""


def _check_version(version: str, what: str) -> None:
    major = version.split(".")[0]
    if major != FORMAT_VERSION.split(".")[0]:
        raise FormatError(f"unsupported {what} version {version!r}")


def _fmt(x: Optional[float]) -> str:
    return "nan" if x is None else repr(float(x))


# --- datasets ------------------------------------------------------------

def dataset_columns(n: int) -> list[str]:
    cols = ["index"] + [f"d{q + 1}_{c}" for q in range(n) for c in "xyz"]
    return cols + [f"E_{mask_label(m)}" for m in range(1, 1 << n)]


def format_dataset(ds: CorrelationDataset) -> str:
    header = {
        "version": FORMAT_VERSION,
        "n": ds.n,
        "n_settings": ds.n_settings,
        "n_shots": "exact" if ds.n_shots is None else ds.n_shots,
        "seed": ds.seed,
        "noise": ds.noise.describe(),
    }
    header.update(ds.state)
    lines = [f"# {DATASET_MAGIC}"] + [f"# {k} = {v}" for k, v in header.items()]
    lines.append("\t".join(dataset_columns(ds.n)))
    for j in range(ds.n_settings):
        dirs = ["%.12g" % v for v in ds.directions[j].ravel()]
        es = [repr(float(v)) for v in ds.correlations[j, 1:]]
        lines.append("\t".join([str(j)] + dirs + es))
    return "\n".join(lines) + "\n"


def write_dataset(ds: CorrelationDataset, path: PathLike) -> Path:
    path = Path(path)
    path.write_text(format_dataset(ds))
    return path


def _parse_scalar(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return None if text == "None" else text


def read_dataset(path: PathLike) -> CorrelationDataset:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != f"# {DATASET_MAGIC}":
        raise FormatError(f"{path}: not a dataset file")
    header: dict = {}
    k = 1
    while k < len(lines) and lines[k].startswith("#"):
        key, sep, value = lines[k][1:].partition("=")
        if not sep:
            raise FormatError(f"{path}:{k + 1}: malformed header line")
        header[key.strip()] = value.strip()
        k += 1
    try:
        _check_version(header["version"], "dataset")
        n = int(header["n"])
        n_settings = int(header["n_settings"])
        shots = header["n_shots"]
        n_shots = None if shots == "exact" else int(shots)
        noise = NoiseModel.parse(header["noise"])
        seed = _parse_scalar(header.get("seed", "None"))
    except KeyError as exc:
        raise FormatError(f"{path}: missing header field {exc}") from None
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(f"{path}: bad header value ({exc})") from None
    cols = dataset_columns(n)
    if k >= len(lines) or lines[k].split("\t") != cols:
        raise FormatError(f"{path}: column header does not match n = {n}")
    body = [ln for ln in lines[k + 1:] if ln.strip()]
    if len(body) != n_settings:
        raise FormatError(f"{path}: expected {n_settings} rows, found {len(body)}")
    rows = []
    for r, ln in enumerate(body):
        parts = ln.split("\t")
        if len(parts) != len(cols):
            raise FormatError(f"{path}:{k + 2 + r}: expected {len(cols)} columns, found {len(parts)}")
        try:
            rows.append([float(x) for x in parts])
        except ValueError:
            raise FormatError(f"{path}:{k + 2 + r}: non-numeric field") from None
    data = np.array(rows, dtype=float).reshape(n_settings, len(cols))
    dirs = data[:, 1:1 + 3 * n].reshape(n_settings, n, 3)
    corr = np.ones((n_settings, 1 << n))
    corr[:, 1:] = data[:, 1 + 3 * n:]
    known = {"version", "n", "n_settings", "n_shots", "seed", "noise"}
    state = {key: _parse_scalar(v) for key, v in header.items() if key not in known}
    return CorrelationDataset(n, dirs, corr, n_shots, seed, noise, state)


# --- witness reports -----------------------------------------------------

_SUBSET_KEYS = ("purity", "purity_error", "witness", "witness_error", "bound", "bound_error")


def format_report(report: WitnessReport, extra: Optional[dict] = None) -> str:
    full = report.full
    lines = [
        f"# {REPORT_MAGIC}",
        "[report]",
        f"version = {FORMAT_VERSION}",
        f"n = {report.n}",
        f"estimator = {report.estimator}",
        f"z = {_fmt(report.z)}",
        f"witness = {_fmt(full.witness)}",
        f"witness_error = {_fmt(full.witness_error)}",
        f"purity = {_fmt(full.purity)}",
        f"purity_error = {_fmt(full.purity_error)}",
        f"bound = {_fmt(full.bound)}",
        f"bound_error = {_fmt(full.bound_error)}",
        f"verdict = {full.verdict}",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"{key} = {value}")
    for mask, sub in report.subsets.items():
        lines.append("")
        lines.append(f"[subset {mask_label(mask)}]")
        lines.append(f"mask = {mask}")
        for key in _SUBSET_KEYS:
            lines.append(f"{key} = {_fmt(getattr(sub, key))}")
        lines.append(f"verdict = {sub.verdict}")
    return "\n".join(lines) + "\n"


def write_report(report: WitnessReport, path: PathLike, extra: Optional[dict] = None) -> Path:
    path = Path(path)
    path.write_text(format_report(report, extra))
    return path


def read_report(path: PathLike) -> WitnessReport:
    text = Path(path).read_text()
    if not text.startswith(f"# {REPORT_MAGIC}"):
        raise FormatError(f"{path}: not a report file")
    try:
        return _parse_report(text)
    except (configparser.Error, KeyError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: malformed report ({exc})") from None


def _parse_report(text: str) -> WitnessReport:
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_string(text)
    top = cp["report"]
    _check_version(top["version"], "report")
    rep = WitnessReport(int(top["n"]), top["estimator"], float(top["z"]))
    for section in cp.sections():
        if not section.startswith("subset "):
            continue
        sec = cp[section]
        vals = {}
        for key in _SUBSET_KEYS:
            v = float(sec[key])
            vals[key] = None if math.isnan(v) else v
        mask = int(sec["mask"])
        rep.subsets[mask] = SubsetReport(mask, verdict=sec["verdict"], **vals)
    return rep


def pretty_report(report: WitnessReport) -> str:
    """Human-readable table of a report."""
    out = [
        f"{report.n}-qubit witness report ({report.estimator}, z = {report.z:g})",
        f"{'subset':>8} {'purity':>16} {'witness':>18} {'bound':>18}  verdict",
    ]

    def pm(v, e):
        return "-" if v is None else f"{v:.5f}+-{e:.5f}"

    for mask, s in sorted(report.subsets.items(), key=lambda kv: (bin(kv[0]).count("1"), kv[0])):
        out.append(f"{mask_label(mask):>8} {pm(s.purity, s.purity_error):>16} "
                   f"{pm(s.witness, s.witness_error or 0):>18} {pm(s.bound, s.bound_error or 0):>18}  {s.verdict}")
    return "\n".join(out)


# --- histograms, curves, tests, frontiers --------------------------------

def write_histogram(hist: Histogram, path: PathLike) -> Path:
    path = Path(path)
    lines = [f"# bin_center\t{hist.mode}"]
    lines += [f"{c!r}\t{v!r}" for c, v in zip(hist.centers.tolist(), hist.counts.tolist())]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_curve(grid: Iterable[float], values: Iterable[float], path: PathLike, label: str = "density") -> Path:
    path = Path(path)
    lines = [f"# e\t{label}"] + [f"{g!r}\t{v!r}" for g, v in zip(np.asarray(grid).tolist(), np.asarray(values).tolist())]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_product_tests(results: list[tuple[int, int, TestResult]], path: PathLike) -> Path:
    path = Path(path)
    lines = ["A\tB\tstatistic\tthreshold\talpha\tpvalue\tverdict"]
    for a, b, r in results:
        lines.append(f"{mask_label(a)}\t{mask_label(b)}\t{r.statistic!r}\t{r.threshold!r}\t{r.alpha!r}\t{r.pvalue!r}\t{r.verdict}")
    path.write_text("\n".join(lines) + "\n")
    return path


def format_frontier(table: FrontierTable) -> str:
    count_name = "violations" if table.mode == "bisep" else "above_bound"
    lines = [
        f"# randcorr-frontier n={table.n} mode={table.mode} seed={table.seed} samples={table.n_samples}",
        f"purity_lo\tpurity_hi\tcount\tmax_witness\tpurity_at_max\tbound_at_max\t{count_name}",
    ]
    for i in range(len(table.counts)):
        lines.append("\t".join([
            repr(float(table.edges[i])), repr(float(table.edges[i + 1])), str(int(table.counts[i])),
            _fmt(table.max_witness[i]), _fmt(table.purity_at_max[i]), _fmt(table.bound_at_max[i]),
            str(int(table.violations[i])),
        ]))
    return "\n".join(lines) + "\n"


def write_frontier(table: FrontierTable, path: PathLike) -> Path:
    path = Path(path)
    path.write_text(format_frontier(table))
    return path


def write_offenders(table: FrontierTable, path: PathLike) -> Path:
    """Violating samples; each row regenerates via ``scan_sample(n, seed, index)``."""
    path = Path(path)
    lines = [f"# n={table.n} seed={table.seed}", "index\tpurity\twitness\tbound"]
    lines += [f"{i}\t{p!r}\t{w!r}\t{b!r}" for i, p, w, b in table.offenders]
    path.write_text("\n".join(lines) + "\n")
    return path


# --- run configuration ---------------------------------------------------

@dataclass
class RunConfig:
    """Settings for simulate/analyze runs.

    ``state`` is a reference kind (trisep, bisep, ghz, cluster), ``mixed``
    (maximally mixed, needs ``n``), or ``tensor:<path>`` for a correlation
    tensor stored as ``.npy`` or as whitespace-separated text in C order.
    """

    state: str = "ghz"
    phi: Optional[float] = None
    n: Optional[int] = None
    n_settings: int = 10000
    n_shots: Union[int, str] = 475
    noise: str = "none"
    block: int = 1
    seed: int = 0
    bins: int = 50
    alpha: float = 0.01
    z: float = 3.0
    out: str = "."
    workers: int = 1

    def validate(self) -> "RunConfig":
        if self.state not in ("trisep", "bisep", "ghz", "cluster", "mixed") and not self.state.startswith("tensor:"):
            raise ConfigError(f"unknown state {self.state!r}")
        if self.state == "bisep" and self.phi is None:
            raise ConfigError("bisep state needs phi")
        if self.state == "mixed" and not (self.n and 1 <= self.n <= 6):
            raise ConfigError("mixed state needs n in 1..6")
        if self.n_settings < 4:
            raise ConfigError("n_settings must be >= 4")
        if self.n_shots != "exact" and not (isinstance(self.n_shots, int) and self.n_shots >= 1):
            raise ConfigError("n_shots must be a positive integer or 'exact'")
        if self.noise not in ("none", "fresh", "drift"):
            raise ConfigError(f"unknown noise mode {self.noise!r}")
        if self.block < 1:
            raise ConfigError("block must be >= 1")
        if self.bins < 2:
            raise ConfigError("bins must be >= 2")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.z <= 0:
            raise ConfigError("z must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self

    @property
    def shots(self) -> Optional[int]:
        return None if self.n_shots == "exact" else int(self.n_shots)

    @property
    def noise_model(self) -> NoiseModel:
        return NoiseModel(self.noise, self.block)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        cfg = cls(**data)
        if isinstance(cfg.n_shots, str) and cfg.n_shots != "exact":
            try:
                cfg.n_shots = int(cfg.n_shots)
            except ValueError:
                raise ConfigError(f"bad n_shots {cfg.n_shots!r}") from None
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: PathLike) -> "RunConfig":
        return cls.from_json(Path(path).read_text())

    def save(self, path: PathLike) -> Path:
        path = Path(path)
        path.write_text(self.to_json())
        return path


def load_tensor(path: PathLike) -> np.ndarray:
    path = Path(path)
    arr = np.load(path) if path.suffix == ".npy" else np.loadtxt(path).ravel()
    size = arr.size
    n = round(math.log(size, 4)) if size > 1 else 0
    if 4**n != size:
        raise FormatError(f"{path}: {size} entries is not a power of 4")
    return arr.reshape((4,) * n)
