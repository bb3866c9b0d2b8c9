"""Scenario parameters shared by every module."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

DOP = "DOP"
FPR = "FPR"
CONTROLLED = "CONTROLLED"
FIXED = "FIXED"

SCHEMES = (DOP, FPR)
POWER_MODES = (CONTROLLED, FIXED)


class ConfigError(ValueError):
    """Raised when a scenario or experiment description is inconsistent."""


def db2lin(x: float) -> float:
    return 10.0 ** (x / 10.0)


def lin2db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class SystemConfig:
    """All scalar parameters of one multi-cell uplink scenario.

    ``K`` may be a single int (same load in every cell) or a per-cell
    sequence of length ``L``.  ``tx_power`` is only read when
    ``power_mode == "FIXED"``; it holds the per-cell transmit power (scalar
    or a length-``L`` sequence, every user of a cell uses the same power).
    """

    L: int = 7
    K: Union[int, Tuple[int, ...]] = 20
    N: int = 100
    tau: int = 30
    T: Optional[int] = None
    sigma2: float = 1.0
    Pu: float = 1.0
    zeta: float = 3.7
    bs_spacing: float = 2.0
    inner_radius: float = 1.0
    scheme: str = DOP
    power_mode: str = CONTROLLED
    tx_power: Union[float, Tuple[float, ...]] = 1.0

    def __post_init__(self):
        if not isinstance(self.K, int):
            object.__setattr__(self, "K", tuple(int(k) for k in self.K))
        if not isinstance(self.tx_power, (int, float)):
            object.__setattr__(self, "tx_power", tuple(float(p) for p in self.tx_power))
        object.__setattr__(self, "scheme", str(self.scheme).upper())
        object.__setattr__(self, "power_mode", str(self.power_mode).upper())
        self.validate()

    @property
    def Ks(self) -> Tuple[int, ...]:
        """Per-cell user counts."""
        if isinstance(self.K, int):
            return (self.K,) * self.L
        return self.K

    @property
    def powers(self) -> Tuple[float, ...]:
        if isinstance(self.tx_power, (int, float)):
            return (float(self.tx_power),) * self.L
        return self.tx_power

    def validate(self) -> None:
        if self.L < 1:
            raise ConfigError(f"L must be >= 1, got {self.L}")
        if self.N < 1:
            raise ConfigError(f"N must be >= 1, got {self.N}")
        if self.tau < 1:
            raise ConfigError(f"tau must be >= 1, got {self.tau}")
        if not isinstance(self.K, int) and len(self.K) != self.L:
            raise ConfigError(f"K has {len(self.K)} entries but L = {self.L}")
        for j, k in enumerate(self.Ks):
            if k < 1:
                raise ConfigError(f"K[{j}] must be >= 1, got {k}")
            if k > self.tau:
                raise ConfigError(f"K[{j}] = {k} exceeds tau = {self.tau} (need K <= tau)")
        if self.T is not None and self.T < self.tau:
            raise ConfigError(f"tau = {self.tau} exceeds coherence length T = {self.T}")
        for name in ("sigma2", "Pu", "zeta", "bs_spacing", "inner_radius"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.power_mode not in POWER_MODES:
            raise ConfigError(f"power_mode must be one of {POWER_MODES}, got {self.power_mode!r}")
        if not isinstance(self.tx_power, (int, float)) and len(self.tx_power) != self.L:
            raise ConfigError(f"tx_power has {len(self.tx_power)} entries but L = {self.L}")
        if any(not p > 0 for p in self.powers):
            raise ConfigError("tx_power entries must be > 0")

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)


def field_names() -> Sequence[str]:
    return [f.name for f in dataclasses.fields(SystemConfig)]
