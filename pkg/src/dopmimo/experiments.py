"""End-to-end reproductions: SINR vs N, limiting-SINR CDFs, capacity sweeps."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from . import __version__
from .asymptotics import (
    MomentSet,
    dop_limit_sinr,
    dop_pc_limit_sinr,
    empirical_moments,
    ensemble_moments,
    fpr_pc_limit_sinr,
    massive_mimo_limit,
)
from .capacity import (
    CapacityQuery,
    alpha_kappa,
    alpha_tau,
    capacity_sweep,
    fpr_capacity_from_samples,
)
from .config import DOP, ConfigError, SystemConfig
from .geometry import build_deployment, sample_ellbar_rows
from .randmat import derive_rng, make_pilots, sample_channels
from .training import estimate_cell
from .uplink import DegenerateEstimateError, average_sinr_db, cell_sinr

log = logging.getLogger(__name__)

EXPERIMENTS = ("sinr_vs_n", "cdf_compare", "capacity_theta", "capacity_kappa")

_DEFAULT_KAPPA = {"cdf_compare": (1 / 3, 2 / 3, 1.0), "capacity_kappa": (0.5, 1.0)}


def _grid(start, stop, step):
    n = int(round((stop - start) / step))
    return tuple(float(np.round(start + k * step, 10)) for k in range(n + 1))


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    config: SystemConfig = field(default_factory=SystemConfig)
    trials: int = 500
    seed: int = 42
    N_grid: Tuple[int, ...] = tuple(range(50, 501, 50))
    kappa_grid: Tuple[float, ...] = ()
    theta_grid: Tuple[float, ...] = (0.5, 1.0, 1.5)
    gamma_th_dB_grid: Tuple[float, ...] = _grid(-10.0, 10.0, 0.5)
    alpha: float = 0.1
    beta: float = 0.05
    moment_samples: int = 1_000_000
    fpr_samples: int = 100_000
    redraw_geometry: bool = False
    avg_domain: str = "linear"
    out_path: str = "results"
    moments_cache: Optional[str] = None
    threads: int = 1

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.name!r}; valid: {', '.join(EXPERIMENTS)}")
        if not self.kappa_grid:
            object.__setattr__(self, "kappa_grid", _DEFAULT_KAPPA.get(self.name, (2 / 3,)))
        for name in ("N_grid", "kappa_grid", "theta_grid", "gamma_th_dB_grid"):
            val = tuple(getattr(self, name))
            if not val:
                raise ConfigError(f"{name} must not be empty")
            object.__setattr__(self, name, val)
        object.__setattr__(self, "N_grid", tuple(int(n) for n in self.N_grid))
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.avg_domain not in ("linear", "db"):
            raise ConfigError("avg_domain must be 'linear' or 'db'")
        if not 0 < self.beta < 1:
            raise ConfigError("beta must lie in (0, 1)")
        if self.moment_samples < 1 or self.fpr_samples < 1:
            raise ConfigError("sample counts must be >= 1")


@dataclass
class ResultTable:
    columns: Dict[str, np.ndarray]
    meta: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        self.columns = {k: np.asarray(v, dtype=float).ravel() for k, v in self.columns.items()}
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"columns have unequal lengths {sorted(lengths)}")
        for k, v in self.columns.items():
            if not np.all(np.isfinite(v)):
                raise ValueError(f"column {k!r} holds non-finite values")

    def __len__(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0


def _tag(x: float) -> str:
    """Filename-safe number: 0.5 -> 0p5, 1/3 -> 0p333, -2 -> m2."""
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return s.replace("-", "m").replace(".", "p")


def _map(fn, items, threads: int):
    if threads == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- moments


def _moments_key(config: SystemConfig, n_samples: int, seed: int) -> str:
    geo = dict(L=config.L, zeta=config.zeta, bs_spacing=config.bs_spacing,
               inner_radius=config.inner_radius, n=n_samples, seed=seed)
    return hashlib.sha256(json.dumps(geo, sort_keys=True).encode()).hexdigest()[:16]


def geometry_moments(config: SystemConfig, n_samples: int, seed: int, cache_dir: Optional[str] = None) -> MomentSet:
    """Ensemble power-control moments, cached on disk when ``cache_dir`` is set."""
    path = None
    if cache_dir:
        path = os.path.join(cache_dir, f"moments_{_moments_key(config, n_samples, seed)}.json")
        if os.path.exists(path):
            with open(path) as fh:
                d = json.load(fh)
            m = ensemble_moments_from_dict(d)
            return m.with_loads(*_default_loads(config))
    m = ensemble_moments(config, n_samples, derive_rng(seed, "moments"))
    if path:
        os.makedirs(cache_dir, exist_ok=True)
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump({"m1": m.m1.tolist(), "m2": m.m2.tolist()}, fh)
        os.replace(tmp, path)
    return m


def _default_loads(config: SystemConfig):
    Ks = np.asarray(config.Ks, dtype=float)
    return Ks / config.N, Ks / config.tau


def ensemble_moments_from_dict(d) -> MomentSet:
    m1 = np.asarray(d["m1"], dtype=float)
    L = m1.shape[0]
    return MomentSet(np.ones(L), np.ones(L), m1, np.asarray(d["m2"], dtype=float), "POWER_CONTROLLED")


# ---------------------------------------------------------------- SINR vs N


def _sinr_trial(cfg: SystemConfig, spec: ExperimentSpec, deployment, N: int, t: int):
    rng = derive_rng(spec.seed, "trial", N, t)
    dep = deployment
    if spec.redraw_geometry:
        dep = build_deployment(cfg, derive_rng(spec.seed, "deployment", N, t))
    pilots = make_pilots(cfg, rng)
    ch = sample_channels(cfg, rng)
    try:
        est = estimate_cell(dep, pilots, ch, cfg.sigma2, 0)
        return dep, cell_sinr(est, ch, dep, cfg.sigma2)
    except DegenerateEstimateError:
        return dep, None


def _limits(dep, cfg: SystemConfig):
    """Mean (linear) large-system and massive-MIMO limits over cell-0 users."""
    moments = empirical_moments(dep, cfg, power_controlled=False)
    rho0 = dep.rho_at(0)
    cross = np.concatenate(rho0[1:]) if len(rho0) > 1 else np.zeros(0)
    lsa = [dop_limit_sinr(r, moments, cfg.sigma2).gamma for r in rho0[0]]
    mm = [massive_mimo_limit(r, cross, cfg.tau).gamma for r in rho0[0]]
    return np.array(lsa), np.array(mm)


def run_sinr_vs_n(spec: ExperimentSpec) -> ResultTable:
    """Finite-size MF SINR of cell 0 against its two asymptotic predictions."""
    if spec.name != "sinr_vs_n":
        raise ConfigError("run_sinr_vs_n needs spec.name == 'sinr_vs_n'")
    cols = {"N": [], "sim": [], "asymp": [], "massive": []}
    excluded = 0
    for N in spec.N_grid:
        cfg = spec.config.replace(N=N, scheme=DOP)
        dep = build_deployment(cfg, derive_rng(spec.seed, "deployment", N))
        out = _map(lambda t: _sinr_trial(cfg, spec, dep, N, t), range(spec.trials), spec.threads)
        gammas = [g for _, g in out if g is not None]
        excluded += sum(g is None for _, g in out)
        if spec.redraw_geometry:
            lims = [_limits(d, cfg) for d, g in out if g is not None]
            lsa = np.concatenate([a for a, _ in lims])
            mm = np.concatenate([b for _, b in lims])
        else:
            lsa, mm = _limits(dep, cfg)
        if np.any(~np.isfinite(lsa)) or np.any(~np.isfinite(mm)):
            excluded += 1
            continue
        cols["N"].append(N)
        cols["sim"].append(average_sinr_db(np.concatenate(gammas), spec.avg_domain))
        cols["asymp"].append(average_sinr_db(lsa, spec.avg_domain))
        cols["massive"].append(average_sinr_db(mm, spec.avg_domain))
        log.info("N=%d sim=%.3f asymp=%.3f massive=%.3f", N, cols["sim"][-1], cols["asymp"][-1], cols["massive"][-1])
    return ResultTable(cols, {"excluded": excluded, "seed": spec.seed, "version": __version__})


# ---------------------------------------------------------------- limit CDFs


def _fpr_rows(spec: ExperimentSpec) -> np.ndarray:
    return sample_ellbar_rows(spec.config, spec.fpr_samples, derive_rng(spec.seed, "fpr_rows"))


def run_cdf_compare(spec: ExperimentSpec) -> Dict[str, ResultTable]:
    """CDF of the full-reuse limit against the deterministic DOP limits."""
    cfg = spec.config
    s = cfg.sigma2 / cfg.Pu
    base = geometry_moments(cfg, spec.moment_samples, spec.seed, spec.moments_cache)
    rows = _fpr_rows(spec)
    g_fpr, _ = fpr_pc_limit_sinr(rows, base.with_loads(alpha=spec.alpha), s)
    fpr_db = np.sort(10.0 * np.log10(g_fpr))
    x = _grid(np.floor(fpr_db[0] * 10) / 10, np.ceil(fpr_db[-1] * 10) / 10, 0.01)
    x = np.asarray(x)
    cdf = np.searchsorted(fpr_db, x, side="right") / fpr_db.size
    tables = {"cdf_fpr.dat": ResultTable({"sinr_dB": x, "cdf": cdf}, {"n": fpr_db.size})}
    summary = {"kappa": [], "dop_sinr_dB": [], "p_dop_better": []}
    for kappa in spec.kappa_grid:
        g = dop_pc_limit_sinr(base.with_loads(alpha=spec.alpha, kappa=kappa), s).gamma
        g_db = 10.0 * np.log10(g)
        tables[f"cdf_dop_kappa{_tag(kappa)}.dat"] = ResultTable({"sinr_dB": x, "cdf": (x >= g_db).astype(float)})
        summary["kappa"].append(kappa)
        summary["dop_sinr_dB"].append(g_db)
        summary["p_dop_better"].append(float(np.mean(g > g_fpr)))
    tables["cdf_summary.dat"] = ResultTable(summary)
    return tables


# ---------------------------------------------------------------- capacity sweeps


def run_capacity_sweeps(spec: ExperimentSpec) -> Dict[str, ResultTable]:
    """FPR outage capacity against DOP capacity at fixed theta or fixed kappa."""
    cfg = spec.config
    s = cfg.sigma2 / cfg.Pu
    moments = geometry_moments(cfg, spec.moment_samples, spec.seed, spec.moments_cache)
    query = CapacityQuery(1.0, s, moments, beta=spec.beta)
    rows = _fpr_rows(spec)
    grid = spec.gamma_th_dB_grid
    fpr = capacity_sweep(lambda q: fpr_capacity_from_samples(q, rows), query, grid)
    tables = {f"userCap_fpr_beta{_tag(spec.beta)}.dat": _cap_table(fpr)}
    if spec.name == "capacity_theta":
        for theta in spec.theta_grid:
            t = capacity_sweep(alpha_tau, CapacityQuery(1.0, s, moments, theta=theta), grid)
            tables[f"userCap_dop_theta{_tag(theta)}.dat"] = _cap_table(t)
    elif spec.name == "capacity_kappa":
        for kappa in spec.kappa_grid:
            t = capacity_sweep(alpha_kappa, CapacityQuery(1.0, s, moments, kappa=kappa), grid)
            tables[f"userCap_dop_kappa{_tag(kappa)}.dat"] = _cap_table(t)
    else:
        raise ConfigError("run_capacity_sweeps needs a capacity_* experiment")
    return tables


def _cap_table(rows: np.ndarray) -> ResultTable:
    return ResultTable({"gamma_th_dB": rows[:, 0], "alpha": rows[:, 1]})


def run_experiment(spec: ExperimentSpec) -> Dict[str, ResultTable]:
    if spec.name == "sinr_vs_n":
        return {"sinr_vs_N.dat": run_sinr_vs_n(spec)}
    if spec.name == "cdf_compare":
        return run_cdf_compare(spec)
    return run_capacity_sweeps(spec)
