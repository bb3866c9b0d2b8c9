"""Uplink training: received pilots and per-antenna MMSE channel estimates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Deployment
from .randmat import ChannelRealization, PilotSet


@dataclass(frozen=True)
class EstimateSet:
    """Estimates of the own-cell channels of BS ``i``.

    ``hhat`` and ``htilde`` are ``N x K_i``; column k is user k.
    """

    i: int
    hhat: np.ndarray
    htilde: np.ndarray
    upsilon: np.ndarray


def _overlaps(pilots: PilotSet, i: int) -> np.ndarray:
    """|q_ki^H q_mj|^2 for every own-cell k (rows) and every user (m, j) (cols)."""
    return np.abs(pilots.Q[i].conj().T @ pilots.stacked()) ** 2


def estimate_variances(deployment: Deployment, pilots: PilotSet, sigma2: float, i: int = 0) -> np.ndarray:
    """Estimate variance of every user of cell ``i`` from the realised overlaps."""
    rho_i = deployment.rho_at(i)
    ov = _overlaps(pilots, i)
    rho_all = np.concatenate(rho_i)
    own = np.zeros(rho_all.shape, dtype=bool)
    start = sum(len(r) for r in rho_i[:i])
    own[start:start + len(rho_i[i])] = True
    contamination = ov[:, ~own] @ rho_all[~own]
    return rho_i[i] / (rho_i[i] + contamination + sigma2)


def estimate_variance(k: int, i: int, deployment: Deployment, pilots: PilotSet, sigma2: float) -> float:
    rho_kii = deployment.rho[i][k, i]
    q = pilots.column(k, i)
    contamination = 0.0
    for j in range(deployment.L):
        if j == i:
            continue
        contamination += np.sum(deployment.rho[j][:, i] * np.abs(q.conj() @ pilots.Q[j]) ** 2)
    return float(rho_kii / (rho_kii + contamination + sigma2))


def received_training(
    deployment: Deployment,
    pilots: PilotSet,
    channels: ChannelRealization,
    i: int = 0,
) -> np.ndarray:
    """Training observation at BS ``i``; row n is y_i^[n] (``N x tau``)."""
    H = channels.stacked()
    Q = pilots.stacked()
    rho = np.concatenate(deployment.rho_at(i))
    if H.shape[1] != Q.shape[1] or H.shape[1] != rho.size:
        raise ValueError(
            f"dimension mismatch: {H.shape[1]} channels, {Q.shape[1]} pilots, {rho.size} users"
        )
    if channels.training_noise.shape != (H.shape[0], Q.shape[0]):
        raise ValueError("training noise must be N x tau")
    return (H * np.sqrt(rho)) @ Q.T + channels.training_noise


def mmse_estimate(
    Y: np.ndarray,
    k: int,
    i: int,
    deployment: Deployment,
    pilots: PilotSet,
    sigma2: float,
    channels: ChannelRealization,
):
    """(hhat, htilde) for user k of cell i by correlating Y with its pilot."""
    ups = estimate_variance(k, i, deployment, pilots, sigma2)
    hhat = ups / np.sqrt(deployment.rho[i][k, i]) * (Y @ pilots.column(k, i).conj())
    return hhat, channels.H[i][:, k] - hhat


def mmse_estimate_direct(
    k: int,
    i: int,
    deployment: Deployment,
    pilots: PilotSet,
    sigma2: float,
    channels: ChannelRealization,
) -> np.ndarray:
    """Same estimator written as own channel + contamination + filtered noise.

    Never touches the simulated observation; used to cross-check
    :func:`mmse_estimate`.  The contamination weight is q_ki^H q_mj.
    """
    ups = estimate_variance(k, i, deployment, pilots, sigma2)
    rho_kii = deployment.rho[i][k, i]
    q = pilots.column(k, i)
    acc = channels.H[i][:, k].astype(complex)
    for j in range(deployment.L):
        if j == i:
            continue
        w = np.sqrt(deployment.rho[j][:, i] / rho_kii) * (q.conj() @ pilots.Q[j])
        acc = acc + channels.H[j] @ w
    nhat = channels.training_noise @ q.conj()
    return ups * (acc + nhat / np.sqrt(rho_kii))


def estimate_cell(
    deployment: Deployment,
    pilots: PilotSet,
    channels: ChannelRealization,
    sigma2: float,
    i: int = 0,
    Y: np.ndarray = None,
) -> EstimateSet:
    """Vectorised :func:`mmse_estimate` for every user of cell ``i``."""
    if Y is None:
        Y = received_training(deployment, pilots, channels, i)
    ups = estimate_variances(deployment, pilots, sigma2, i)
    rho_own = deployment.rho[i][:, i]
    hhat = (Y @ pilots.Q[i].conj()) * (ups / np.sqrt(rho_own))
    return EstimateSet(i, hhat, channels.H[i] - hhat, ups)
