"""Configuration loading, series files and report writers.

Numeric tables are written as comma-separated text with a header row and
17 significant digits, so re-reading them reproduces the in-memory doubles
exactly.  Structured summaries are JSON.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from .arma import DesignData, ModelSpec, ParamVector
from .estimation import FitConfig
from .exceptions import InputError, ParameterError
from .kernels import KernelFamily

__all__ = [
    "OUTPUT_DIR_ENV",
    "RunConfig",
    "SeriesFile",
    "load_config",
    "read_series",
    "write_table",
    "read_table",
    "write_json",
    "format_number",
]

OUTPUT_DIR_ENV = "QLSARMAX_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "qlsarmax_output"


def format_number(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def write_table(path, header: Sequence[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_number(v) for v in row])
    return path


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"{path}: empty file")
    return rows[0], rows[1:]


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# --- series files ----------------------------------------------------------------

@dataclass
class SeriesFile:
    """Columns of a delimited file; ``dates`` is echoed to outputs untouched."""

    path: str
    columns: dict
    dates: list | None
    n: int

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise InputError(f"{self.path}: column {name!r} not found; have {sorted(self.columns)}")
        return self.columns[name]

    def require(self, names: Sequence[str]) -> None:
        missing = [c for c in names if c not in self.columns]
        if missing:
            raise InputError(f"{self.path}: missing columns {missing}")


def read_series(path, needed: Sequence[str], date_column: str | None = None) -> SeriesFile:
    """Read the named numeric columns of a comma-separated file with a header.

    Errors name the offending line (one-based, header is line 1) and column.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{path}: file not found")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    missing = [c for c in needed if c not in header]
    if date_column and date_column not in header:
        missing.append(date_column)
    if missing:
        raise InputError(f"{path}: missing columns {missing}")
    idx = {c: header.index(c) for c in needed}
    data = {c: [] for c in needed}
    dates = [] if date_column else None
    body = [(i, r) for i, r in enumerate(rows[1:], start=2) if any(cell.strip() for cell in r)]
    for line, row in body:
        if len(row) != len(header):
            raise InputError(f"{path}: line {line}: expected {len(header)} fields, got {len(row)}")
        for c, j in idx.items():
            cell = row[j].strip()
            try:
                v = float(cell)
            except ValueError:
                raise InputError(f"{path}: line {line}, column {c!r}: cannot parse {cell!r}") from None
            if not math.isfinite(v):
                raise InputError(f"{path}: line {line}, column {c!r}: non-finite value")
            data[c].append(v)
        if dates is not None:
            dates.append(row[header.index(date_column)])
    cols = {c: np.asarray(v, dtype=float) for c, v in data.items()}
    return SeriesFile(str(path), cols, dates, len(body))


# --- configuration -------------------------------------------------------------------

_FIT_KEYS = {f.name for f in fields(FitConfig)}


@dataclass
class RunConfig:
    """Validated run configuration (see the README for the file format)."""

    kernel: KernelFamily = field(default_factory=lambda: KernelFamily("normal"))
    p: int = 1
    q: int = 1
    tau_level: float = 0.5
    tau_grid: list | None = None
    response: str = "y"
    mean_covariates: list = field(default_factory=list)
    disp_covariates: list = field(default_factory=list)
    date_column: str | None = None
    mean_link: str = "log"
    disp_link: str = "log"
    fit: FitConfig = field(default_factory=FitConfig)
    horizon: int | None = None
    interval_levels: tuple | None = None
    output_dir: str | None = None
    simulate: dict = field(default_factory=dict)
    montecarlo: dict = field(default_factory=dict)

    def spec(self, tau_level: float | None = None) -> ModelSpec:
        return ModelSpec(self.p, self.q, len(self.mean_covariates), len(self.disp_covariates),
                         self.tau_level if tau_level is None else tau_level, self.kernel,
                         self.mean_link, self.disp_link)

    def resolve_output_dir(self, override: str | None = None) -> Path:
        return Path(override or self.output_dir or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)

    def design(self, series: SeriesFile) -> DesignData:
        y = series.column(self.response)
        bad = np.flatnonzero(~(y > 0))
        if bad.size:
            raise InputError(f"{series.path}: response {self.response!r} must be positive; "
                             f"data row {int(bad[0]) + 1} has {float(y[bad[0]])!r}")
        x = np.column_stack([series.column(c) for c in self.mean_covariates]) if self.mean_covariates else None
        w = np.column_stack([series.column(c) for c in self.disp_covariates]) if self.disp_covariates else None
        return DesignData.from_arrays(y, x, w)

    def needed_columns(self) -> list[str]:
        return list(dict.fromkeys([self.response, *self.mean_covariates, *self.disp_covariates]))


_TOP_KEYS = {"kernel", "p", "q", "tau_level", "tau_grid", "response", "mean_covariates",
             "disp_covariates", "date_column", "mean_link", "disp_link", "fit", "forecast",
             "output_dir", "simulate", "montecarlo"}
_KERNEL_KEYS = {"kind", "extra"}
_FORECAST_KEYS = {"horizon", "interval_levels"}
_TRUTH_KEYS = {"beta", "tau", "phi", "theta"}
_SIM_KEYS = {"n", "seed", "truth"}
_MC_KEYS = {"n_grid", "tau_grid", "kernels", "replications", "seed", "truth", "n_jobs",
            "covariate_law", "min_convergence_rate"}


def _reject_unknown(section: str, got: dict, allowed: set) -> None:
    if not isinstance(got, dict):
        raise InputError(f"config section {section!r} must be a mapping")
    extra = sorted(set(got) - allowed)
    if extra:
        raise InputError(f"unknown config key(s) in {section}: {', '.join(extra)}")


def parse_kernel(obj) -> KernelFamily:
    if isinstance(obj, KernelFamily):
        return obj
    if isinstance(obj, str):
        return KernelFamily(obj)
    _reject_unknown("kernel", obj, _KERNEL_KEYS)
    if "kind" not in obj:
        raise InputError("config key kernel.kind is required")
    extra = obj.get("extra", ())
    if isinstance(extra, (int, float)):
        extra = (extra,)
    try:
        return KernelFamily(obj["kind"], tuple(float(e) for e in extra))
    except (TypeError, ValueError) as exc:
        raise InputError(f"config key kernel: {exc}") from None


def parse_truth(obj, where: str) -> ParamVector:
    _reject_unknown(where, obj, _TRUTH_KEYS)
    for key in ("beta", "tau"):
        if key not in obj:
            raise InputError(f"config key {where}.{key} is required")
    try:
        return ParamVector(obj["beta"], obj["tau"], obj.get("phi", []), obj.get("theta", []))
    except (TypeError, ValueError) as exc:
        raise InputError(f"config key {where}: {exc}") from None


def config_from_dict(raw: dict) -> RunConfig:
    """Validate a raw mapping into a :class:`RunConfig`; unknown keys are errors."""
    if raw is None:
        raw = {}
    _reject_unknown("top level", raw, _TOP_KEYS)
    cfg = RunConfig()
    try:
        if "kernel" in raw:
            cfg.kernel = parse_kernel(raw["kernel"])
        for key in ("p", "q"):
            if key in raw:
                v = raw[key]
                if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                    raise InputError(f"config key {key} must be a nonnegative integer")
                setattr(cfg, key, v)
        if "tau_level" in raw:
            cfg.tau_level = float(raw["tau_level"])
            if not 0 < cfg.tau_level < 1:
                raise InputError("config key tau_level must lie in (0, 1)")
        if raw.get("tau_grid") is not None:
            cfg.tau_grid = [float(t) for t in raw["tau_grid"]]
            if not cfg.tau_grid or any(not 0 < t < 1 for t in cfg.tau_grid):
                raise InputError("config key tau_grid must be a nonempty list in (0, 1)")
        for key in ("response", "date_column", "mean_link", "disp_link", "output_dir"):
            if key in raw:
                setattr(cfg, key, None if raw[key] is None else str(raw[key]))
        for key in ("mean_covariates", "disp_covariates"):
            if key in raw:
                if not isinstance(raw[key], list):
                    raise InputError(f"config key {key} must be a list of column names")
                setattr(cfg, key, [str(c) for c in raw[key]])
        if "fit" in raw:
            _reject_unknown("fit", raw["fit"], _FIT_KEYS)
            cfg.fit = FitConfig(**raw["fit"])
        if "forecast" in raw:
            fc = raw["forecast"]
            _reject_unknown("forecast", fc, _FORECAST_KEYS)
            if "horizon" in fc:
                cfg.horizon = int(fc["horizon"])
                if cfg.horizon < 1:
                    raise InputError("config key forecast.horizon must be >= 1")
            if fc.get("interval_levels") is not None:
                lo, hi = (float(v) for v in fc["interval_levels"])
                if not 0 < lo < hi < 1:
                    raise InputError("config key forecast.interval_levels must satisfy 0 < lo < hi < 1")
                cfg.interval_levels = (lo, hi)
        if "simulate" in raw:
            sim = raw["simulate"]
            _reject_unknown("simulate", sim, _SIM_KEYS)
            cfg.simulate = dict(sim)
            if "truth" in sim:
                cfg.simulate["truth"] = parse_truth(sim["truth"], "simulate.truth")
        if "montecarlo" in raw:
            mc = raw["montecarlo"]
            _reject_unknown("montecarlo", mc, _MC_KEYS)
            cfg.montecarlo = dict(mc)
            if "truth" in mc:
                cfg.montecarlo["truth"] = parse_truth(mc["truth"], "montecarlo.truth")
            if "kernels" in mc:
                cfg.montecarlo["kernels"] = [parse_kernel(k) for k in mc["kernels"]]
        cfg.spec()  # validates links and orders together
    except InputError:
        raise
    except (ParameterError, TypeError, ValueError) as exc:
        raise InputError(f"invalid configuration: {exc}") from None
    return cfg


def load_config(path) -> RunConfig:
    """Read a YAML or JSON configuration file and validate it."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{path}: config file not found")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise InputError(f"{path}: cannot parse config: {exc}") from None
    return config_from_dict(raw)
