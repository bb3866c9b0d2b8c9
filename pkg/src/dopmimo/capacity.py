"""User capacity (admissible users per antenna) under power control.

All solvers assume the same load in every cell and read only column ``i``
of the power-controlled moment matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .asymptotics import POWER_CONTROLLED, MomentSet


@dataclass(frozen=True)
class CapacityQuery:
    gamma_th: float
    sigma2_over_Pu: float
    moments: MomentSet
    theta: Optional[float] = None
    kappa: Optional[float] = None
    beta: Optional[float] = None
    i: int = 0

    def __post_init__(self):
        if not self.gamma_th > 0:
            raise ValueError("gamma_th must be > 0")
        if self.sigma2_over_Pu < 0:
            raise ValueError("sigma2_over_Pu must be >= 0")
        if self.theta is not None and not self.theta > 0:
            raise ValueError("theta must be > 0")
        if self.kappa is not None and not 0 < self.kappa <= 1:
            raise ValueError("kappa must lie in (0, 1]")
        if self.beta is not None and not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.moments.mode != POWER_CONTROLLED:
            raise ValueError("capacity solvers need POWER_CONTROLLED moments")

    def at(self, gamma_th: float) -> "CapacityQuery":
        return replace(self, gamma_th=gamma_th)

    def sums(self):
        """(sum_j E[Lbar_ji], sum_{j!=i} E[Lbar_ji], sum_{j!=i} E[Lbar_ji^2])."""
        m1 = self.moments.m1[:, self.i]
        m2 = self.moments.m2[:, self.i]
        mask = np.arange(len(m1)) != self.i
        return float(m1.sum()), float(m1[mask].sum()), float(m2[mask].sum())


class CapacityResult(NamedTuple):
    alpha: float
    feasible: bool


def quadratic_coefficients(query: CapacityQuery):
    total, cross, cross2 = query.sums()
    A = query.theta * total * cross
    B = query.theta * (1.0 + query.sigma2_over_Pu) * total + cross2
    return A, B


def kappa_tau(query: CapacityQuery) -> float:
    """Largest training load kappa <= 1 meeting the QoS target at fixed tau/N."""
    if query.theta is None:
        raise ValueError("kappa_tau needs theta")
    A, B = quadratic_coefficients(query)
    inv = 1.0 / query.gamma_th
    if A == 0.0:
        return min(1.0, inv / B)
    if inv > A + B:
        return 1.0
    # stable form of (-B + sqrt(B^2 + 4A/g)) / 2A
    return (2.0 * inv) / (B + math.sqrt(B * B + 4.0 * A * inv))


def alpha_tau(query: CapacityQuery) -> float:
    return kappa_tau(query) * query.theta


def alpha_kappa(query: CapacityQuery) -> CapacityResult:
    """Capacity at fixed kappa; zero and infeasible when contamination alone violates QoS."""
    if query.kappa is None:
        raise ValueError("alpha_kappa needs kappa")
    _, cross, cross2 = query.sums()
    slack = 1.0 / query.gamma_th - query.kappa * cross2
    if slack < 0:
        return CapacityResult(0.0, False)
    # slack * upsilon / (1 + cross), upsilon = 1 / (1 + kappa * cross + s)
    return CapacityResult(slack / ((1.0 + cross) * (1.0 + query.kappa * cross + query.sigma2_over_Pu)), True)


def worst_case_capacity(query: CapacityQuery) -> float:
    """Closed form of the fixed-kappa capacity at kappa = 1 (tau = K)."""
    _, cross, cross2 = query.sums()
    val = (1.0 / query.gamma_th - cross2) / ((1.0 + cross) * (1.0 + cross + query.sigma2_over_Pu))
    return max(0.0, val)


def satisfies_capacity_constraint(
    alphas: Sequence[float],
    kappas: Sequence[float],
    moments: MomentSet,
    gamma_th: float,
    sigma2_over_Pu: float,
    i: int = 0,
) -> bool:
    """Whether per-cell loads meet the QoS target of cell ``i`` (unequal loads allowed)."""
    alphas = np.asarray(alphas, dtype=float)
    kappas = np.asarray(kappas, dtype=float)
    m1 = moments.m1[:, i]
    m2 = moments.m2[:, i]
    mask = np.arange(len(m1)) != i
    ups = 1.0 / (1.0 + np.sum(kappas[mask] * m1[mask]) + sigma2_over_Pu)
    lhs = alphas[i] + np.sum(alphas[mask] * m1[mask])
    rhs = ups * (1.0 / gamma_th - np.sum(kappas[mask] * m2[mask]))
    return bool(lhs <= rhs)


def outage_statistic(alpha: float, query: CapacityQuery, ellbar_rows: np.ndarray) -> np.ndarray:
    """X for each realisation; the QoS target is met iff X <= 0."""
    total, _, _ = query.sums()
    rows = np.atleast_2d(ellbar_rows)
    mask = np.arange(rows.shape[1]) != query.i
    s1 = rows[:, mask].sum(axis=1)
    s2 = (rows[:, mask] ** 2).sum(axis=1)
    return alpha * total * (1.0 + query.sigma2_over_Pu + s1) + s2 - 1.0 / query.gamma_th


def per_realization_caps(query: CapacityQuery, ellbar_rows: np.ndarray) -> np.ndarray:
    """Largest load each realisation tolerates (X is affine increasing in alpha)."""
    total, _, _ = query.sums()
    rows = np.atleast_2d(ellbar_rows)
    mask = np.arange(rows.shape[1]) != query.i
    s1 = rows[:, mask].sum(axis=1)
    s2 = (rows[:, mask] ** 2).sum(axis=1)
    return (1.0 / query.gamma_th - s2) / (total * (1.0 + query.sigma2_over_Pu + s1))


def fpr_capacity_from_samples(query: CapacityQuery, ellbar_rows: np.ndarray) -> float:
    """Largest alpha with empirical P(X <= 0) >= 1 - beta."""
    if query.beta is None:
        raise ValueError("fpr capacity needs beta")
    caps = np.sort(per_realization_caps(query, ellbar_rows))
    n = caps.size
    need = max(1, math.ceil(round((1.0 - query.beta) * n, 9)))
    # need realisations with cap >= alpha: alpha is the need-th largest cap
    return max(0.0, float(caps[n - need]))


def fpr_outage_capacity(
    query: CapacityQuery,
    ellbar_sampler: Callable[[int, np.random.Generator], np.ndarray],
    n_samples: int,
    rng: np.random.Generator,
) -> float:
    return fpr_capacity_from_samples(query, ellbar_sampler(n_samples, rng))


def capacity_sweep(solver: Callable[[CapacityQuery], float], query: CapacityQuery,
                   gamma_th_db: Sequence[float]) -> np.ndarray:
    """Rows of (gamma_th in dB, capacity) for every grid point."""
    rows = []
    for g_db in gamma_th_db:
        a = solver(query.at(10.0 ** (g_db / 10.0)))
        if isinstance(a, CapacityResult):
            a = a.alpha
        rows.append((float(g_db), float(a)))
    return np.array(rows, dtype=float).reshape(-1, 2)
