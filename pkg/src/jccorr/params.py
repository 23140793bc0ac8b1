"""System parameters for the driven dissipative Jaynes-Cummings oscillator.

All rates are expressed in units of the cavity field decay rate ``kappa``
(photon loss rate is ``2*kappa``), and times in units of ``1/kappa``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, asdict, replace


@dataclass(frozen=True)
class SystemParams:
    """Physical rates and drive settings.

    Attributes
    ----------
    g : dipole coupling rate.
    kappa : cavity field decay rate (the reference unit, normally 1).
    gamma : spontaneous emission rate.
    eps : coherent drive amplitude.
    delta_omega : drive-cavity detuning, drive minus cavity frequency.
    theta : local-oscillator phase, in [0, pi).
    r : fraction of the output flux sent to the photon counter, in [0, 1].
    n_max : photon number of the highest retained Fock state.
    tau_d_inv : detection bandwidth of the photocurrent filter.
    """

    g: float
    kappa: float = 1.0
    gamma: float = 2.0
    eps: float = 0.0
    delta_omega: float = 0.0
    theta: float = 0.0
    r: float = 0.5
    n_max: int = 12
    tau_d_inv: float = 0.0

    def __post_init__(self):
        for name in ("g", "kappa", "gamma", "eps", "tau_d_inv"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"r must lie in [0, 1], got {self.r}")
        if not 0.0 <= self.theta < math.pi:
            raise ValueError(f"theta must lie in [0, pi), got {self.theta}")
        if self.n_max < 1:
            raise ValueError(f"n_max must be at least 1, got {self.n_max}")
        if self.tau_d_inv == 0.0:
            # Default bandwidth: on the order of (and bigger than) g, so the
            # filter can follow the fastest conditioned dynamics.
            object.__setattr__(self, "tau_d_inv", 5.0 * self.g if self.g > 0 else 5.0)

    @property
    def dim(self) -> int:
        """Dimension of the truncated atom (x) field Hilbert space."""
        return 2 * (self.n_max + 1)

    @property
    def n_fock(self) -> int:
        """Number of retained Fock states."""
        return self.n_max + 1

    def check_strong_coupling(self) -> bool:
        """Warn unless g dominates both decay channels (g >> 2*kappa, gamma)."""
        ok = self.g >= 10 * 2 * self.kappa and self.g >= 10 * self.gamma
        if not ok:
            warnings.warn(
                f"strong-coupling preset check failed: g={self.g} is not large "
                f"compared to 2*kappa={2 * self.kappa} and gamma={self.gamma}",
                stacklevel=2,
            )
        return ok

    def with_(self, **changes) -> "SystemParams":
        """Return a copy with the given fields replaced."""
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SystemParams":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown SystemParams keys: {sorted(unknown)}")
        if "g" not in data:
            raise ValueError("SystemParams requires 'g'")
        return cls(**data)
