"""Command-line entry point.

Config files are flat ``key = value`` text.  ``[system]`` and
``[experiment]`` headers are optional; keys are the field names of
:class:`~dopmimo.config.SystemConfig` and
:class:`~dopmimo.experiments.ExperimentSpec`.  A ``_dB`` suffix on a power
key (``Pu_dB``, ``sigma2_dB``, ``tx_power_dB``) converts from dB.  Lists
are comma separated; ``start:stop:step`` expands to an inclusive grid;
``1/3`` style fractions are accepted.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import os
import re
import sys
import tempfile
import time
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from . import __version__
from .config import ConfigError, SystemConfig, db2lin
from .experiments import EXPERIMENTS, ExperimentSpec, ResultTable, run_experiment

_SYSTEM_TYPES = {
    "L": "int", "K": "ints", "N": "int", "tau": "int", "T": "int",
    "sigma2": "float", "Pu": "float", "zeta": "float", "bs_spacing": "float",
    "inner_radius": "float", "scheme": "str", "power_mode": "str", "tx_power": "floats",
}
_EXPERIMENT_TYPES = {
    "name": "str", "trials": "int", "seed": "int", "N_grid": "intlist",
    "kappa_grid": "floatlist", "theta_grid": "floatlist", "gamma_th_dB_grid": "floatlist",
    "alpha": "float", "beta": "float", "moment_samples": "int", "fpr_samples": "int",
    "redraw_geometry": "bool", "avg_domain": "str", "out_path": "str",
    "moments_cache": "str", "threads": "int",
}
_DB_KEYS = {"Pu", "sigma2", "tx_power"}


def _num(text: str) -> float:
    return float(Fraction(text.strip())) if "/" in text else float(text)


def _floats(text: str) -> List[float]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            start, stop, step = (_num(x) for x in part.split(":"))
            n = int(round((stop - start) / step))
            out.extend(round(start + k * step, 10) for k in range(n + 1))
        else:
            out.append(_num(part))
    return out


def _convert(kind: str, text: str):
    text = text.strip()
    if kind == "str":
        return text
    if kind == "int":
        return int(text)
    if kind == "float":
        return _num(text)
    if kind == "bool":
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if kind == "intlist":
        return tuple(int(round(x)) for x in _floats(text))
    if kind == "floatlist":
        return tuple(_floats(text))
    if kind == "ints":
        vals = [int(x) for x in text.split(",")]
        return vals[0] if len(vals) == 1 else tuple(vals)
    if kind == "floats":
        vals = _floats(text)
        return vals[0] if len(vals) == 1 else tuple(vals)
    raise AssertionError(kind)


def read_config(path: str, where: Optional[Dict[str, str]] = None) -> Tuple[Dict[str, object], Dict[str, object]]:
    """Parse a config file into (system values, experiment values).

    If ``where`` is given it is filled with ``field -> "path:line"`` so that
    later validation errors can point back at the source line.
    """
    system: Dict[str, object] = {}
    experiment: Dict[str, object] = {}
    if where is None:
        where = {}
    section = None
    with open(path) as fh:
        lines = fh.read().splitlines()
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("system", "experiment"):
                raise ConfigError(f"{path}:{lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        in_db = key.endswith("_dB") and key[:-3] in _DB_KEYS
        base = key[:-3] if in_db else key
        if base in _SYSTEM_TYPES and section != "experiment":
            target, kind = system, _SYSTEM_TYPES[base]
        elif base in _EXPERIMENT_TYPES and section != "system":
            target, kind = experiment, _EXPERIMENT_TYPES[base]
        else:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            val = _convert(kind, value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
        if in_db:
            val = tuple(db2lin(v) for v in val) if isinstance(val, tuple) else db2lin(val)
        target[base] = val
        where[base] = f"{path}:{lineno}"
    return system, experiment


def _locate(msg: str, where: Dict[str, str]) -> str:
    """Prefix an error with the source line of the first field it names."""
    for key, loc in where.items():
        if re.search(rf"(?<![A-Za-z0-9_]){re.escape(key)}(?![A-Za-z0-9_])", msg):
            return f"{loc}: {key}: {msg}"
    return msg


def build_spec(system: Dict[str, object], experiment: Dict[str, object],
               where: Optional[Dict[str, str]] = None) -> ExperimentSpec:
    """Validate parsed values into an :class:`ExperimentSpec`."""
    where = where or {}
    if "name" not in experiment:
        raise ConfigError("missing required key 'name' (or pass --experiment)")
    try:
        config = SystemConfig(**system)
        return ExperimentSpec(config=config, **experiment)
    except (TypeError, ValueError) as exc:
        raise ConfigError(_locate(str(exc), where)) from None


def parse_config(path: str) -> ExperimentSpec:
    where: Dict[str, str] = {}
    system, experiment = read_config(path, where)
    return build_spec(system, experiment, where)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_config(spec: ExperimentSpec) -> str:
    """Config-file text that :func:`parse_config` maps back to ``spec``."""
    lines = ["[system]"]
    for f in dataclasses.fields(SystemConfig):
        v = getattr(spec.config, f.name)
        if v is not None:
            lines.append(f"{f.name} = {_fmt(v)}")
    lines.append("")
    lines.append("[experiment]")
    for f in dataclasses.fields(ExperimentSpec):
        if f.name == "config":
            continue
        v = getattr(spec, f.name)
        if v is not None:
            lines.append(f"{f.name} = {_fmt(v)}")
    return "\n".join(lines) + "\n"


def _atomic_write(path: str, data: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def table_bytes(table: ResultTable) -> bytes:
    names = list(table.columns)
    rows = [" ".join(names)]
    for r in range(len(table)):
        rows.append(" ".join(f"{table.columns[n][r]:.9g}" for n in names))
    return ("\n".join(rows) + "\n").encode("ascii")


def write_table(table: ResultTable, path: str) -> Tuple[str, str]:
    """Write a whitespace-separated table; return (file name, sha256)."""
    data = table_bytes(table)
    _atomic_write(path, data)
    return os.path.basename(path), hashlib.sha256(data).hexdigest()


def write_outputs(spec: ExperimentSpec, tables: Dict[str, ResultTable], out_dir: str, started: float) -> str:
    entries = [write_table(t, os.path.join(out_dir, name)) for name, t in sorted(tables.items())]
    lines = [f"tool_version = {__version__}", f"experiment = {spec.name}", f"seed = {spec.seed}"]
    for line in emit_config(spec).splitlines():
        if line and not line.startswith("["):
            lines.append("spec." + line)
    for name, t in sorted(tables.items()):
        for k, v in sorted(t.meta.items()):
            lines.append(f"meta.{name}.{k} = {v}")
    lines.append(f"wall_clock_s = {time.time() - started:.3f}")
    for name, digest in entries:
        lines.append(f"sha256.{name} = {digest}")
    path = os.path.join(out_dir, f"manifest_{spec.name}.txt")
    _atomic_write(path, ("\n".join(lines) + "\n").encode())
    return path


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dopmimo", description="Run a pilot-scheme reproduction experiment.")
    p.add_argument("--experiment", help=f"experiment name: {', '.join(EXPERIMENTS)}")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, help="master seed (non-negative integer)")
    p.add_argument("--trials", type=int, help="Monte-Carlo trials per grid point")
    p.add_argument("--out", help="output directory (config key out_path)")
    p.add_argument("--moments-cache", help="directory caching ensemble moments (config key moments_cache)")
    p.add_argument("--threads", type=int, help="worker threads for the trial loop")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    started = time.time()
    try:
        where: Dict[str, str] = {}
        system, experiment = read_config(args.config, where) if args.config else ({}, {})
        overrides = {
            "name": args.experiment, "seed": args.seed, "trials": args.trials,
            "out_path": args.out, "moments_cache": args.moments_cache, "threads": args.threads,
        }
        experiment.update({k: v for k, v in overrides.items() if v is not None})
        if experiment.get("seed", 0) < 0:
            raise ConfigError("seed must be non-negative")
        spec = build_spec(system, experiment, where)
        tables = run_experiment(spec)
        write_outputs(spec, tables, spec.out_path, started)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"dopmimo: error: {exc}", file=sys.stderr)
        return 2
    return 0
