"""Seeded random matrices: Haar unitaries, pilot isometries, Rayleigh fading.

Every sampler takes an explicit ``numpy.random.Generator``.  Independent
streams are derived with :func:`derive_rng`, which feeds
``SeedSequence(entropy=seed, spawn_key=(crc32(label), *index))`` into a
PCG64 bit generator, so a stream depends only on (seed, label, index).
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from .config import DOP, FPR, ConfigError, SystemConfig


def derive_rng(seed: int, label: str, *index: int) -> np.random.Generator:
    key = (zlib.crc32(label.encode("utf-8")),) + tuple(int(i) for i in index)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


def crandn(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with total variance ``var``."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _phase_fixed_qr(Z: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    ph = d / np.abs(d)
    return Q * ph[np.newaxis, :]


def haar_unitary(tau: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a ``tau x tau`` unitary from the Haar measure.

    QR of a complex Ginibre matrix, with each column of Q rotated by the
    phase of the matching diagonal entry of R.  Without the phase fix the
    law of Q is not Haar.
    """
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    return _phase_fixed_qr(crandn(rng, (tau, tau)))


def haar_isometry(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """First ``k`` columns of a Haar unitary of size ``n``, at O(n k^2) cost."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    return _phase_fixed_qr(crandn(rng, (n, k)))


@dataclass(frozen=True)
class PilotSet:
    Q: List[np.ndarray]
    scheme: str

    def column(self, k: int, j: int) -> np.ndarray:
        return self.Q[j][:, k]

    def stacked(self) -> np.ndarray:
        """All pilots side by side, cell-major (tau x sum K_j)."""
        return np.concatenate(self.Q, axis=1)


def make_pilots(config: SystemConfig, rng: np.random.Generator) -> PilotSet:
    Ks = config.Ks
    if max(Ks) > config.tau:
        raise ConfigError(f"K = {max(Ks)} exceeds tau = {config.tau}")
    if config.scheme == FPR:
        U = haar_unitary(config.tau, rng)
        return PilotSet([U[:, :k] for k in Ks], FPR)
    return PilotSet([haar_unitary(config.tau, rng)[:, :k] for k in Ks], DOP)


@dataclass(frozen=True)
class ChannelRealization:
    """Fast fading towards one receiving BS plus that BS's training noise.

    ``H[j]`` is ``N x K_j``; column ``k`` is h_{kji}.
    """

    H: List[np.ndarray]
    training_noise: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.concatenate(self.H, axis=1)


def sample_channels(config: SystemConfig, rng: np.random.Generator) -> ChannelRealization:
    H = [crandn(rng, (config.N, k)) for k in config.Ks]
    noise = crandn(rng, (config.N, config.tau), var=config.sigma2)
    return ChannelRealization(H, noise)


def lemma_checks(
    rng: np.random.Generator,
    sizes: Sequence[int] = (64, 256, 1024),
    draws: int = 32,
) -> Dict[int, Dict[str, float]]:
    """Quadratic-form concentration for Gaussian and Haar-isometry vectors.

    For every size ``n`` and ``A = diag(1..n)/n`` this reports, as the max
    over ``draws`` independent draws:

    ``gauss``       |x A x^H - Tr(A)/n|, x with i.i.d. CN(0, 1/n) entries
    ``haar``        |w^H A w - Tr(A)/n|, w a column of a Haar isometry
    ``gauss_cross`` |x A y^H| for independent x, y
    ``haar_cross``  |w^H A z| for w, z columns of independent isometries
    ``identity``    |w^H w - 1| (exact up to rounding)
    """
    report = {}
    for n in sizes:
        a = np.arange(1, n + 1) / n
        tr = a.mean()
        stats = {"gauss": 0.0, "haar": 0.0, "gauss_cross": 0.0, "haar_cross": 0.0, "identity": 0.0}
        for _ in range(draws):
            x = crandn(rng, n, 1.0 / n)
            y = crandn(rng, n, 1.0 / n)
            w = haar_isometry(n, 1, rng)[:, 0]
            z = haar_isometry(n, 1, rng)[:, 0]
            stats["gauss"] = max(stats["gauss"], abs(np.sum(a * np.abs(x) ** 2) - tr))
            stats["haar"] = max(stats["haar"], abs(np.sum(a * np.abs(w) ** 2) - tr))
            stats["gauss_cross"] = max(stats["gauss_cross"], abs(np.sum(x * a * y.conj())))
            stats["haar_cross"] = max(stats["haar_cross"], abs(np.sum(w.conj() * a * z)))
            stats["identity"] = max(stats["identity"], abs(np.vdot(w, w).real - 1.0))
        report[n] = stats
    return report


def wishart_moments(H: np.ndarray, gamma: np.ndarray):
    """First two moments of the e.s.d. of (1/N) H diag(gamma) H^H."""
    N = H.shape[0]
    W = (H * gamma[np.newaxis, :]) @ H.conj().T / N
    return np.trace(W).real / N, np.sum(np.abs(W) ** 2) / N
