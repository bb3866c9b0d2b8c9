"""Large-system SINR limits and the moment inputs they need.

All formulas are evaluated for a receiving cell ``i`` (default 0) and work
in linear power units.  Moment matrices are indexed ``m[j, i]``: the
moment of the received-power distribution of cell j's users at BS i.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from .config import SystemConfig
from .geometry import Deployment, build_hex_layout, path_gain, sample_hexagon

GENERAL = "GENERAL"
POWER_CONTROLLED = "POWER_CONTROLLED"


class LimitSinr(NamedTuple):
    """Limiting SINR and estimate variance.

    ``unbounded`` is set when the SINR denominator vanishes (e.g. one noise-free
    cell with zero load); ``gamma`` is then ``inf``.
    """

    gamma: float
    upsilon: float
    unbounded: bool = False


@dataclass(frozen=True)
class MomentSet:
    alpha: np.ndarray
    kappa: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    mode: str = GENERAL

    def __post_init__(self):
        for name in ("alpha", "kappa", "m1", "m2"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        object.__setattr__(self, "m1", np.atleast_2d(self.m1))
        object.__setattr__(self, "m2", np.atleast_2d(self.m2))
        L = self.m1.shape[0]
        if self.m1.shape != (L, L) or self.m2.shape != (L, L):
            raise ValueError("moment matrices must be L x L")
        if self.alpha.shape != (L,) or self.kappa.shape != (L,):
            raise ValueError("alpha and kappa need one entry per cell")

    @property
    def L(self) -> int:
        return self.m1.shape[0]

    @property
    def theta(self) -> np.ndarray:
        """tau / N per cell, equal to alpha / kappa."""
        return self.alpha / self.kappa

    def with_loads(self, alpha=None, kappa=None) -> "MomentSet":
        L = self.L
        a = self.alpha if alpha is None else np.broadcast_to(np.asarray(alpha, dtype=float), (L,)).copy()
        k = self.kappa if kappa is None else np.broadcast_to(np.asarray(kappa, dtype=float), (L,)).copy()
        return replace(self, alpha=a, kappa=k)

    def scaled(self, Pu: float) -> "MomentSet":
        """Power-controlled gain moments turned into received-power moments."""
        if self.mode != POWER_CONTROLLED:
            raise ValueError("only power-controlled moments can be scaled")
        return MomentSet(self.alpha, self.kappa, Pu * self.m1, Pu ** 2 * self.m2, GENERAL)


def _loads(config: SystemConfig):
    Ks = np.asarray(config.Ks, dtype=float)
    return Ks / config.N, Ks / config.tau


def empirical_moments(deployment: Deployment, config: SystemConfig, power_controlled: bool = False) -> MomentSet:
    """Per-deployment sample moments (the finite-K substitute for the l.s.d.).

    With ``power_controlled`` the moments are of the normalised gains
    ellbar; otherwise of the received powers rho.
    """
    src = deployment.ellbar if power_controlled else deployment.rho
    m1 = np.stack([x.mean(axis=0) for x in src])
    m2 = np.stack([(x ** 2).mean(axis=0) for x in src])
    alpha, kappa = _loads(config)
    return MomentSet(alpha, kappa, m1, m2, POWER_CONTROLLED if power_controlled else GENERAL)


def ensemble_moments(config: SystemConfig, n_samples: int, rng: np.random.Generator) -> MomentSet:
    """Monte-Carlo E[Lbar_ji] and E[Lbar_ji^2] over uniform user drops."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    bs_xy = build_hex_layout(config)
    L = len(bs_xy)
    m1 = np.ones((L, L))
    m2 = np.ones((L, L))
    for j in range(L):
        p = bs_xy[j] + sample_hexagon(n_samples, config.inner_radius, rng)
        d = np.linalg.norm(p[:, np.newaxis, :] - bs_xy[np.newaxis, :, :], axis=-1)
        g = path_gain(d, config.zeta)
        g = np.atleast_2d(g)
        lb = g / g[:, j:j + 1]
        lb[:, j] = 1.0
        m1[j] = lb.mean(axis=0)
        m2[j] = (lb ** 2).mean(axis=0)
    alpha, kappa = _loads(config)
    return MomentSet(alpha, kappa, m1, m2, POWER_CONTROLLED)


def estimate_moments(source, n_samples: int = 1, rng=None, config: SystemConfig = None,
                     power_controlled: bool = True) -> MomentSet:
    """Dispatch: a :class:`Deployment` gives sample moments, a config gives ensemble moments."""
    if isinstance(source, Deployment):
        if config is None:
            raise ValueError("config is required with a deployment")
        return empirical_moments(source, config, power_controlled)
    if isinstance(source, SystemConfig):
        return ensemble_moments(source, n_samples, rng)
    raise TypeError(f"cannot estimate moments from {type(source).__name__}")


def _others(L: int, i: int) -> np.ndarray:
    mask = np.ones(L, dtype=bool)
    mask[i] = False
    return mask


def interference_power(moments: MomentSet, i: int = 0) -> float:
    """Limiting intra+inter-cell interference sum_j alpha_j E[Gamma_ji]; shared by both schemes."""
    return float(np.sum(moments.alpha * moments.m1[:, i]))


def _ratio(num: float, den: float, upsilon: float) -> LimitSinr:
    if den == 0.0:
        return LimitSinr(float("inf"), upsilon, True)
    return LimitSinr(num / den, upsilon)


def dop_limit_sinr(rho_kii: float, moments: MomentSet, sigma2: float, i: int = 0) -> LimitSinr:
    """Limiting SINR with independent per-cell pilot sets."""
    if moments.mode != GENERAL:
        raise ValueError("dop_limit_sinr expects received-power (GENERAL) moments")
    o = _others(moments.L, i)
    ups = rho_kii / (rho_kii + np.sum(moments.kappa[o] * moments.m1[o, i]) + sigma2)
    den = rho_kii * interference_power(moments, i) + ups * np.sum(moments.kappa[o] * moments.m2[o, i])
    return _ratio(rho_kii ** 2 * ups, float(den), float(ups))


def fpr_limit_sinr(rho_row: Sequence[float], moments: MomentSet, sigma2: float, i: int = 0) -> LimitSinr:
    """Limiting SINR with one pilot set reused in every cell.

    ``rho_row[j]`` is the received power at BS i of the co-pilot user of cell j.
    """
    rho_row = np.asarray(rho_row, dtype=float)
    o = _others(moments.L, i)
    rho_kii = rho_row[i]
    ups = rho_kii / (rho_row.sum() + sigma2)
    den = rho_kii * interference_power(moments, i) + ups * np.sum(rho_row[o] ** 2)
    return _ratio(rho_kii ** 2 * ups, float(den), float(ups))


def dop_pc_upsilon(moments: MomentSet, sigma2_over_Pu: float, i: int = 0) -> float:
    o = _others(moments.L, i)
    return float(1.0 / (1.0 + np.sum(moments.kappa[o] * moments.m1[o, i]) + sigma2_over_Pu))


def dop_pc_limit_sinr(moments: MomentSet, sigma2_over_Pu: float, i: int = 0) -> LimitSinr:
    """Deterministic limit under power control (same for every user of cell i)."""
    if moments.mode != POWER_CONTROLLED:
        raise ValueError("dop_pc_limit_sinr expects POWER_CONTROLLED moments")
    o = _others(moments.L, i)
    ups = dop_pc_upsilon(moments, sigma2_over_Pu, i)
    den = interference_power(moments, i) + ups * np.sum(moments.kappa[o] * moments.m2[o, i])
    return _ratio(ups, float(den), ups)


def fpr_pc_limit_sinr(ellbar_row, moments: MomentSet, sigma2_over_Pu: float, i: int = 0):
    """Realisation-dependent limit under power control for full pilot reuse.

    ``ellbar_row`` may be one row of length L or a stack ``(n, L)``; the
    return value is a :class:`LimitSinr` or a pair of arrays (gamma, upsilon).
    """
    rows = np.asarray(ellbar_row, dtype=float)
    single = rows.ndim == 1
    rows = np.atleast_2d(rows)
    o = _others(moments.L, i)
    cross = rows[:, o]
    ups = 1.0 / (1.0 + cross.sum(axis=1) + sigma2_over_Pu)
    den = interference_power(moments, i) + ups * np.sum(cross ** 2, axis=1)
    if single:
        return _ratio(float(ups[0]), float(den[0]), float(ups[0]))
    with np.errstate(divide="ignore"):
        return ups / den, ups


def massive_mimo_limit(rho_kii: float, cross_rho, tau: int) -> LimitSinr:
    """SINR limit for N -> infinity with finite user counts.

    ``cross_rho`` collects rho_mji of every user m in every other cell j.
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    c = float(np.sum(np.asarray(cross_rho, dtype=float) ** 2)) / tau
    return _ratio(rho_kii ** 2, c, float("nan"))
