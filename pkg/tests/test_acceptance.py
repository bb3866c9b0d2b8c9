"""Acceptance criteria, one test per criterion.

Each test records a one-line PASS/FAIL verdict with the measured values;
the lines are printed in the pytest terminal summary and when this file is
run as a script (``python tests/test_acceptance.py``).
"""

import math
import os
import sys
import tempfile

import numpy as np
import pytest

from dopmimo import cli
from dopmimo.asymptotics import MomentSet, POWER_CONTROLLED, dop_limit_sinr, fpr_limit_sinr
from dopmimo.capacity import (
    CapacityQuery,
    alpha_kappa,
    alpha_tau,
    fpr_capacity_from_samples,
    kappa_tau,
    outage_statistic,
    quadratic_coefficients,
    worst_case_capacity,
)
from dopmimo.config import SystemConfig
from dopmimo.experiments import EXPERIMENTS, ExperimentSpec, run_experiment
from dopmimo.geometry import build_deployment
from dopmimo.randmat import (
    crandn,
    derive_rng,
    haar_unitary,
    lemma_checks,
    make_pilots,
    sample_channels,
    wishart_moments,
)
from dopmimo.training import estimate_cell, mmse_estimate_direct, received_training

VERDICTS = {}


def record(num, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:>2}: {title}: {detail}"
    VERDICTS[num] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def cache_dir():
    with tempfile.TemporaryDirectory() as d:
        yield d


@pytest.fixture(scope="module")
def sinr_run():
    t = run_experiment(ExperimentSpec("sinr_vs_n", trials=500, seed=42))["sinr_vs_N.dat"]
    return {k: dict(zip(t.columns["N"].astype(int), v)) for k, v in t.columns.items()}


@pytest.fixture(scope="module")
def cdf_run(cache_dir):
    return run_experiment(ExperimentSpec("cdf_compare", alpha=0.1, fpr_samples=100_000, moments_cache=cache_dir))


@pytest.fixture(scope="module")
def theta_run(cache_dir):
    return run_experiment(ExperimentSpec("capacity_theta", moments_cache=cache_dir))


@pytest.fixture(scope="module")
def kappa_run(cache_dir):
    return run_experiment(ExperimentSpec("capacity_kappa", moments_cache=cache_dir))


def _at(table, g_db):
    c = table.columns
    return float(c["alpha"][np.flatnonzero(np.isclose(c["gamma_th_dB"], g_db))[0]])


# ----------------------------------------------------------- quantitative


def test_c01_sinr_gap(sinr_run):
    g100 = sinr_run["massive"][100] - sinr_run["sim"][100]
    g500 = sinr_run["massive"][500] - sinr_run["sim"][500]
    ok = abs(g100 - 9.0) <= 1.0 and abs(g500 - 2.3) <= 0.5
    record(1, "massive minus simulated SINR", ok,
           f"gap(N=100) = {g100:.2f} dB (9 +/- 1), gap(N=500) = {g500:.2f} dB (2.3 +/- 0.5)")


def test_c02_large_system_accuracy(sinr_run):
    errs = {N: abs(sinr_run["asymp"][N] - sinr_run["sim"][N]) for N in sinr_run["sim"] if N >= 100}
    worst = max(errs, key=errs.get)
    record(2, "large-system prediction vs Monte Carlo", errs[worst] <= 0.5,
           f"max |asymp - sim| over N >= 100 is {errs[worst]:.3f} dB at N = {worst} (<= 0.5)")


def test_c03_cdf_crossing(cdf_run):
    s = cdf_run["cdf_summary.dat"].columns
    p = dict(zip(np.round(s["kappa"], 6), s["p_dop_better"]))
    p1, p3 = p[1.0], p[round(1 / 3, 6)]
    n = int(cdf_run["cdf_fpr.dat"].meta["n"])
    ok = abs(p1 - 0.30) <= 0.07 and abs(p3 - 0.75) <= 0.07 and n >= 10_000
    record(3, "P(DOP limit > FPR limit)", ok,
           f"kappa=1: {p1:.3f} (0.30 +/- 0.07), kappa=1/3: {p3:.3f} (0.75 +/- 0.07), n = {n}")


def test_c04_capacity_fixed_theta(theta_run):
    fpr = theta_run["userCap_fpr_beta0p05.dat"].columns
    onset = float(fpr["gamma_th_dB"][np.flatnonzero(fpr["alpha"] == 0.0)[0]])
    thetas = ("0p5", "1", "1p5")
    a2 = [_at(theta_run[f"userCap_dop_theta{t}.dat"], -2.0) for t in thetas]
    a0 = [_at(theta_run[f"userCap_dop_theta{t}.dat"], 0.0) for t in thetas]
    ok = (abs(onset - (-2.0)) <= 0.5 and all(0.28 <= a <= 0.35 for a in a2)
          and all(abs(a - 0.2) <= 0.04 for a in a0))
    record(4, "user capacity at fixed tau/N", ok,
           f"FPR zero from {onset:+.1f} dB (-2 within one 0.5 dB step); "
           f"alpha_tau(-2 dB) = {', '.join(f'{a:.3f}' for a in a2)} (in [0.28, 0.35]); "
           f"alpha_tau(0 dB) = {', '.join(f'{a:.3f}' for a in a0)} (0.2 +/- 0.04)")


def test_c05_capacity_fixed_kappa(kappa_run):
    fpr = _at(kappa_run["userCap_fpr_beta0p05.dat"], -10.0)
    dop = _at(kappa_run["userCap_dop_kappa1.dat"], -10.0)
    extra = 500 * (dop - fpr)
    ok = abs(fpr / 1.1 - 1) <= 0.15 and abs(dop / 1.7 - 1) <= 0.15 and abs(extra - 300) <= 75
    record(5, "user capacity at -10 dB, kappa = 1", ok,
           f"FPR = {fpr:.3f} (1.1 +/- 15%), DOP = {dop:.3f} (1.7 +/- 15%), N*dalpha = {extra:.0f} (300 +/- 75)")


# ----------------------------------------------------------- property based


def test_c06_pilots_and_haar():
    rng = derive_rng(42, "acceptance-haar")
    worst = 0.0
    for scheme in ("DOP", "FPR"):
        for tau in (1, 8, 30, 64):
            P = make_pilots(SystemConfig(K=tau, tau=tau, scheme=scheme), rng)
            for Q in P.Q:
                worst = max(worst, np.max(np.abs(Q.conj().T @ Q - np.eye(tau))))
    tau, n = 8, 100_000
    x = np.array([abs(haar_unitary(tau, rng)[0, 0]) ** 2 for _ in range(n)])
    se = x.std(ddof=1) / math.sqrt(n)
    z = abs(x.mean() - 1 / tau) / se
    record(6, "pilot orthonormality and Haar moment", worst < 1e-10 and z < 3,
           f"max |Q^H Q - I| = {worst:.1e} (< 1e-10); E|u11|^2 = {x.mean():.5f} vs 1/8, {z:.2f} SE (< 3)")


def test_c07_dual_path_estimator():
    worst = 0.0
    for seed in range(50):
        cfg = SystemConfig(K=3, N=6, tau=5, scheme="DOP" if seed % 2 else "FPR", sigma2=0.2 + seed / 25)
        r = derive_rng(seed, "acceptance-dual")
        dep = build_deployment(cfg, r)
        P, ch = make_pilots(cfg, r), sample_channels(cfg, r)
        est = estimate_cell(dep, P, ch, cfg.sigma2, Y=received_training(dep, P, ch))
        for k in range(3):
            d = mmse_estimate_direct(k, 0, dep, P, cfg.sigma2, ch)
            worst = max(worst, np.max(np.abs(est.hhat[:, k] - d)))
    record(7, "observation path vs direct estimator", worst < 1e-10,
           f"max entrywise difference over 50 instances = {worst:.1e} (< 1e-10)")


def test_c08_concentration():
    rng = derive_rng(42, "acceptance-lemma")
    keys = ("gauss", "haar", "gauss_cross", "haar_cross")
    wins = dict.fromkeys(keys, 0)
    for _ in range(100):
        rep = lemma_checks(rng, sizes=(64, 256, 1024))
        for k in keys:
            wins[k] += rep[1024][k] < rep[64][k]
    grid = np.array([0.2, 1.0, 3.0])
    errs = []
    for N in (64, 256, 1024):
        K = N // 2
        e1, e2 = [], []
        for _ in range(10):
            g = grid[rng.integers(0, 3, K)]
            m1, m2 = wishart_moments(crandn(rng, (N, K)), g)
            e1.append(abs(m1 - 0.5 * g.mean()))
            e2.append(abs(m2 - (0.5 * np.mean(g ** 2) + 0.25 * g.mean() ** 2)))
        errs.append((np.mean(e1), np.mean(e2)))
    errs = np.array(errs)
    shrink = bool(np.all(np.diff(errs, axis=0) < 0))
    ok = min(wins.values()) >= 95 and shrink
    record(8, "quadratic-form and Wishart concentration", ok,
           f"n=1024 beats n=64 in {min(wins.values())}/100 reps (>= 95); "
           f"Wishart errors {np.array2string(errs[:, 1], precision=4)} shrinking = {shrink}")


def test_c09_capacity_algebra():
    rng = np.random.default_rng(42)
    res, exact, fixed, quant = 0.0, True, 0.0, 0.0
    for _ in range(200):
        m1 = np.ones((7, 7))
        m1[1:, 0] = rng.uniform(0.005, 0.2, 6)
        m2 = m1 ** 2 * np.where(np.eye(7) == 1, 1.0, rng.uniform(1.0, 4.0, (7, 7)))
        m = MomentSet(np.ones(7), np.ones(7), m1, m2, POWER_CONTROLLED)
        g, s = rng.uniform(0.1, 10), rng.uniform(0, 2)
        q = CapacityQuery(g, s, m, theta=rng.uniform(0.1, 2))
        A, B = quadratic_coefficients(q)
        k = kappa_tau(q)
        if k < 1:
            res = max(res, abs(A * k * k + B * k - 1 / g))
        exact &= alpha_kappa(CapacityQuery(g, s, m, kappa=1.0)).alpha == worst_case_capacity(
            CapacityQuery(g, s, m, kappa=1.0))
        kap = rng.uniform(0.05, 1)
        r = alpha_kappa(CapacityQuery(g, s, m, kappa=kap))
        if r.feasible and r.alpha > 0:
            fixed = max(fixed, abs(alpha_tau(CapacityQuery(g, s, m, theta=r.alpha / kap)) - r.alpha))
    rows = np.ones((5000, 7))
    rows[:, 1:] = rng.uniform(0, 0.4, (5000, 6)) ** 2
    for g_db in (-10, -6, -3):
        q = CapacityQuery(10 ** (g_db / 10), 1.0, m, beta=0.05)
        a = fpr_capacity_from_samples(q, rows)
        grid = np.arange(0, 3, 1e-3)
        brute = max(x for x in grid if np.mean(outage_statistic(x, q, rows) <= 0) >= 0.95)
        quant = max(quant, abs(a - brute))
    ok = res < 1e-12 and exact and fixed < 1e-10 and quant <= 1e-3
    record(9, "capacity solver algebra", ok,
           f"root residual {res:.1e} (< 1e-12), kappa=1 closed form exact = {exact}, "
           f"fixed point {fixed:.1e} (< 1e-10), quantile vs grid {quant:.1e} (<= 1e-3)")


def test_c10_single_cell_equivalence():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(100):
        rho, a, k, m1 = rng.uniform(0.01, 10, 4)
        m = MomentSet([a], [min(k, 1.0)], [[m1]], [[m1 * m1 * rng.uniform(1, 3)]])
        s2 = rng.uniform(0, 5)
        x, y = dop_limit_sinr(rho, m, s2).gamma, fpr_limit_sinr([rho], m, s2).gamma
        worst = max(worst, abs(x - y) / x)
    record(10, "single-cell DOP and FPR limits agree", worst <= 1e-12,
           f"max relative difference over 100 draws = {worst:.1e} (<= 1e-12)")


def test_c11_determinism():
    same = True
    checked = 0
    for name in EXPERIMENTS:
        spec = ExperimentSpec(name, config=SystemConfig(K=4, tau=6), trials=5, N_grid=(20, 60),
                              moment_samples=20_000, fpr_samples=20_000)
        a = {k: cli.table_bytes(t) for k, t in run_experiment(spec).items()}
        b = {k: cli.table_bytes(t) for k, t in run_experiment(spec).items()}
        same &= a == b
        checked += len(a)
    record(11, "byte-identical re-runs", same, f"{checked} output files across {len(EXPERIMENTS)} experiments identical = {same}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
