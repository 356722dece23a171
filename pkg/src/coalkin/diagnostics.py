"""Observables of a density field and the per-run diagnostics table."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.signal import find_peaks

from .field import DensityField

DIAGNOSTICS_HEADER = ("t", "N", "M", "var", "min", "max", "clamped", "domain_len")

PROMINENCE_REL = 0.05


def particle_number(f: DensityField) -> float:
    return f.quad_integral()


def mass_functional(f: DensityField) -> float:
    """Integral of ``e^x rho(x)``; ``inf`` once occupied nodes pass ``x ~ 709``."""
    x = f.grid.x
    occupied = f.values != 0.0
    with np.errstate(over="ignore"):
        terms = np.where(occupied, np.exp(np.where(occupied, x, 0.0)) * f.values, 0.0)
    return float(np.dot(f.quadrature_weights(), terms))


def spatial_variance(f: DensityField) -> float:
    return float(np.var(f.values))


def stationarity_gap(a, b) -> float:
    """Sup-norm distance between two snapshots on the same grid."""
    if not a.grid.same_as(b.grid):
        raise ValueError("snapshots live on different grids")
    return float(np.max(np.abs(a.values - b.values)))


def window_values(f: DensityField, window: tuple[float, float]) -> np.ndarray:
    lo, hi = window
    x = f.grid.x
    tol = 1e-9 * f.grid.dx
    mask = (x >= lo - tol) & (x <= hi + tol)
    if not mask.any():
        raise ValueError(f"window {window} contains no nodes")
    return f.values[mask]


def count_maxima(values: np.ndarray, rel_prominence: float = PROMINENCE_REL) -> int:
    spread = float(values.max() - values.min())
    if spread <= 0.0:
        return 0
    peaks, _ = find_peaks(values, prominence=rel_prominence * spread)
    return int(peaks.size)


def heterogeneity_profile(f: DensityField, window: tuple[float, float]) -> tuple[float, int]:
    """Variance of the node values in ``window`` and the number of prominent maxima."""
    vals = window_values(f, window)
    return float(np.var(vals)), count_maxima(vals)


@dataclass
class DiagnosticsRecord:
    rows: list[tuple] = field(default_factory=list)

    def append(self, t: float, f: DensityField, clamped: int = 0) -> None:
        if self.rows and not t > self.rows[-1][0]:
            raise ValueError("diagnostics times must be strictly increasing")
        v = f.values
        self.rows.append(
            (
                float(t),
                particle_number(f),
                mass_functional(f),
                spatial_variance(f),
                float(v.min()),
                float(v.max()),
                int(clamped),
                f.grid.period if f.boundary.periodic else f.grid.length,
            )
        )

    def column(self, name: str) -> np.ndarray:
        i = DIAGNOSTICS_HEADER.index(name)
        return np.array([r[i] for r in self.rows])

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv(self, path) -> None:
        write_rows(path, DIAGNOSTICS_HEADER, self.rows)


def write_rows(path, header: Iterable[str], rows: Iterable[tuple]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) if isinstance(v, int) else f"{v:.12g}" for v in row) + "\n")
