"""Seven-cell hexagonal layout, user drops and large-scale gains."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .config import CONTROLLED, ConfigError, SystemConfig

# unit normals of the three edge pairs of a hexagon whose vertices point at
# 0, 60, ..., 300 degrees (flat top and bottom)
_EDGE_ANGLES = np.deg2rad([30.0, 90.0, 150.0])
_EDGE_NORMALS = np.stack([np.cos(_EDGE_ANGLES), np.sin(_EDGE_ANGLES)], axis=1)


def build_hex_layout(config: SystemConfig) -> np.ndarray:
    """BS coordinates, shape ``(L, 2)``.  Cell 0 sits at the origin."""
    if config.L == 1:
        return np.zeros((1, 2))
    if config.L != 7:
        raise ConfigError(f"only L in {{1, 7}} is supported, got L = {config.L}")
    ang = np.deg2rad(60.0 * np.arange(6))
    ring = config.bs_spacing * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return np.vstack([np.zeros((1, 2)), ring])


def in_hexagon(xy: np.ndarray, center, inner_radius: float) -> np.ndarray:
    rel = np.asarray(xy, dtype=float) - np.asarray(center, dtype=float)
    return np.all(np.abs(rel @ _EDGE_NORMALS.T) <= inner_radius, axis=-1)


def sample_hexagon(n: int, inner_radius: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` points uniform in a flat-top hexagon centred at the origin.

    Rejection from the bounding rectangle; acceptance rate is 3/4.
    """
    out = np.empty((n, 2))
    half_w = 2.0 * inner_radius / np.sqrt(3.0)  # circumradius along x
    filled = 0
    while filled < n:
        m = max(16, int(1.4 * (n - filled)))
        p = np.column_stack([
            rng.uniform(-half_w, half_w, m),
            rng.uniform(-inner_radius, inner_radius, m),
        ])
        p = p[in_hexagon(p, (0.0, 0.0), inner_radius)]
        take = min(len(p), n - filled)
        out[filled:filled + take] = p[:take]
        filled += take
    return out


def drop_users(config: SystemConfig, bs_xy: np.ndarray, rng: np.random.Generator) -> List[np.ndarray]:
    return [bs_xy[j] + sample_hexagon(k, config.inner_radius, rng) for j, k in enumerate(config.Ks)]


def path_gain(d, zeta: float):
    """Bounded path-loss gain ``1 / (1 + d**zeta)``."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValueError("distance must be non-negative")
    g = 1.0 / (1.0 + d ** zeta)
    return float(g) if g.ndim == 0 else g


@dataclass(frozen=True)
class Deployment:
    """Positions and slow gains.

    Per cell ``j`` the arrays ``ell[j]``, ``ellbar[j]`` and ``rho[j]`` have
    shape ``(K_j, L)``; entry ``[k, i]`` belongs to user k of cell j seen
    at BS i.
    """

    bs_xy: np.ndarray
    user_xy: List[np.ndarray]
    ell: List[np.ndarray]
    ellbar: List[np.ndarray]
    rho: List[np.ndarray]

    @property
    def L(self) -> int:
        return len(self.bs_xy)

    def rho_at(self, i: int) -> List[np.ndarray]:
        """Received powers at BS ``i``, one vector per transmitting cell."""
        return [r[:, i] for r in self.rho]


def gains_from_positions(config: SystemConfig, bs_xy: np.ndarray, user_xy: List[np.ndarray]) -> Deployment:
    ell, ellbar, rho = [], [], []
    for j, xy in enumerate(user_xy):
        d = np.linalg.norm(xy[:, np.newaxis, :] - bs_xy[np.newaxis, :, :], axis=-1)
        e = path_gain(d, config.zeta)
        e = np.atleast_2d(e)
        eb = e / e[:, j:j + 1]
        eb[:, j] = 1.0
        if config.power_mode == CONTROLLED:
            r = config.Pu * eb
        else:
            r = config.powers[j] * e
        ell.append(e)
        ellbar.append(eb)
        rho.append(r)
    return Deployment(bs_xy, user_xy, ell, ellbar, rho)


def build_deployment(config: SystemConfig, rng: np.random.Generator) -> Deployment:
    bs_xy = build_hex_layout(config)
    return gains_from_positions(config, bs_xy, drop_users(config, bs_xy, rng))


def sample_ellbar_rows(
    config: SystemConfig,
    n: int,
    rng: np.random.Generator,
    i: int = 0,
    mode: str = "interferers",
) -> np.ndarray:
    """Normalised cross gains seen by a tagged user of cell ``i``, shape ``(n, L)``.

    ``mode="interferers"``: column j is ellbar_{kji} of the co-pilot user in
    cell j, each drawn uniformly and independently in its own cell.
    ``mode="tagged"``: a single position drawn in cell ``i``; column j is that
    user's ellbar towards BS j (the mirror image of the interferer picture).
    Column ``i`` is 1 in both modes.
    """
    bs_xy = build_hex_layout(config)
    out = np.ones((n, len(bs_xy)))
    if mode == "interferers":
        for j in range(len(bs_xy)):
            if j == i:
                continue
            p = bs_xy[j] + sample_hexagon(n, config.inner_radius, rng)
            d_own = np.linalg.norm(p - bs_xy[j], axis=1)
            d_i = np.linalg.norm(p - bs_xy[i], axis=1)
            out[:, j] = path_gain(d_i, config.zeta) / path_gain(d_own, config.zeta)
    elif mode == "tagged":
        p = bs_xy[i] + sample_hexagon(n, config.inner_radius, rng)
        g_own = path_gain(np.linalg.norm(p - bs_xy[i], axis=1), config.zeta)
        for j in range(len(bs_xy)):
            if j != i:
                out[:, j] = path_gain(np.linalg.norm(p - bs_xy[j], axis=1), config.zeta) / g_own
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return out
