"""Correlation series container and CSV/JSON serialization."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .params import SystemParams

# Correlation evaluation routes.
METHOD_REGRESSION = "regression"
METHOD_TRAJECTORY = "trajectory"
METHOD_ANALYTIC = "analytic"


@dataclass
class CorrelationSeries:
    """A correlation curve h_theta(tau) or g2(tau) on an ordered delay grid.

    Delays are in units of 1/kappa and may span both signs.  ``method``
    records how the values were obtained; ``meta`` holds estimator details
    such as the number of starts or a noise-floor estimate.
    """

    tau_grid: np.ndarray
    values: np.ndarray
    method: str
    kind: str = "h"          # "h" or "g2"
    theta: float | None = None
    params: SystemParams | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tau_grid = np.asarray(self.tau_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.tau_grid.shape != self.values.shape:
            raise ValueError("tau_grid and values must have the same shape")
        if np.any(np.diff(self.tau_grid) <= 0):
            raise ValueError("tau_grid must be strictly increasing")

    def value_at(self, tau: float) -> float:
        """Value at the grid point nearest to ``tau``."""
        return float(self.values[int(np.argmin(np.abs(self.tau_grid - tau)))])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tau", "value"])
            for tau, value in zip(self.tau_grid, self.values):
                writer.writerow([repr(float(tau)), repr(float(value))])

    def to_json(self, path: str | Path | None = None) -> str:
        """Self-describing JSON envelope including the parameter snapshot."""
        envelope = {
            "type": "CorrelationSeries",
            "version": __version__,
            "kind": self.kind,
            "method": self.method,
            "theta": self.theta,
            "params": self.params.to_dict() if self.params is not None else None,
            "meta": self.meta,
            "tau": self.tau_grid.tolist(),
            "values": self.values.tolist(),
        }
        text = json.dumps(envelope, indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, text: str) -> "CorrelationSeries":
        data = json.loads(text)
        if data.get("type") != "CorrelationSeries":
            raise ValueError("not a CorrelationSeries envelope")
        params = SystemParams.from_dict(data["params"]) if data.get("params") else None
        return cls(
            tau_grid=np.array(data["tau"], dtype=float),
            values=np.array(data["values"], dtype=float),
            method=data["method"],
            kind=data.get("kind", "h"),
            theta=data.get("theta"),
            params=params,
            meta=data.get("meta", {}),
        )

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["tau", "value"])
        for tau, value in zip(self.tau_grid, self.values):
            writer.writerow([repr(float(tau)), repr(float(value))])
        return buf.getvalue()


def symmetric_tau_grid(tau_max: float, dtau: float) -> np.ndarray:
    """Delay grid spanning [-tau_max, tau_max] including tau = 0 exactly."""
    n = int(round(tau_max / dtau))
    return np.arange(-n, n + 1) * dtau
