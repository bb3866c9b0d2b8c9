"""Matched-filter detection and the finite-size uplink SINR."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .geometry import Deployment
from .randmat import ChannelRealization
from .training import EstimateSet


class DegenerateEstimateError(ArithmeticError):
    """The channel estimate is the zero vector, so the MF SINR is undefined."""


@dataclass(frozen=True)
class SinrSample:
    numerator: float
    self_interference: float
    interference: float
    noise: float

    @property
    def gamma(self) -> float:
        return self.numerator / (self.self_interference + self.interference + self.noise)


def empirical_sinr(
    k: int,
    i: int,
    estimates: EstimateSet,
    channels: ChannelRealization,
    deployment: Deployment,
    sigma2: float,
    combiner: Optional[np.ndarray] = None,
) -> SinrSample:
    """SINR of user k in cell i after linear combining.

    The combiner defaults to the channel estimate itself (matched filter).
    Passing a different vector ``v`` gives the SINR of ``v^H y``; only its
    direction matters.
    """
    hhat = estimates.hhat[:, k]
    htilde = estimates.htilde[:, k]
    v = hhat if combiner is None else np.asarray(combiner)
    nrm2 = float(np.vdot(v, v).real)
    if nrm2 == 0.0:
        raise DegenerateEstimateError(f"zero combiner for user {k} of cell {i}")
    rho_kii = deployment.rho[i][k, i]
    interference = 0.0
    for j in range(deployment.L):
        p = np.abs(v.conj() @ channels.H[j]) ** 2 * deployment.rho[j][:, i]
        if j == i:
            p[k] = 0.0
        interference += float(p.sum())
    return SinrSample(
        numerator=float(rho_kii * abs(np.vdot(v, hhat)) ** 2),
        self_interference=float(rho_kii * abs(np.vdot(v, htilde)) ** 2),
        interference=interference,
        noise=float(sigma2 * nrm2),
    )


def cell_sinr(
    estimates: EstimateSet,
    channels: ChannelRealization,
    deployment: Deployment,
    sigma2: float,
) -> np.ndarray:
    """Linear SINR of every user of cell ``estimates.i``, vectorised over users."""
    i = estimates.i
    Hh = estimates.hhat
    nrm2 = np.sum(np.abs(Hh) ** 2, axis=0)
    if np.any(nrm2 == 0.0):
        raise DegenerateEstimateError(f"zero channel estimate in cell {i}")
    rho = np.concatenate(deployment.rho_at(i))
    P = np.abs(Hh.conj().T @ channels.stacked()) ** 2 * rho[np.newaxis, :]
    K = Hh.shape[1]
    start = sum(deployment.rho[j].shape[0] for j in range(i))
    P[np.arange(K), start + np.arange(K)] = 0.0
    rho_own = deployment.rho[i][:, i]
    xi = rho_own * np.abs(np.sum(Hh.conj() * estimates.htilde, axis=0)) ** 2
    return rho_own * nrm2 ** 2 / (xi + P.sum(axis=1) + sigma2 * nrm2)


def average_sinr_db(samples: Iterable, domain: str = "linear") -> float:
    """Average SINR in dB; ``domain`` picks linear-mean or dB-mean."""
    g = np.array([s.gamma if isinstance(s, SinrSample) else s for s in samples], dtype=float).ravel()
    if g.size == 0:
        raise ValueError("no SINR samples to average")
    if domain == "linear":
        return float(10.0 * np.log10(g.mean()))
    if domain == "db":
        return float(np.mean(10.0 * np.log10(g)))
    raise ValueError(f"domain must be 'linear' or 'db', got {domain!r}")
