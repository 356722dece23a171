"""Uniform-grid density fields with ghost-value boundary extension."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import _hot
from .kernels import DEFAULT_TAIL_TOL, Kernel

DIRICHLET_ZERO = "dirichlet_zero"
HOMOGENEOUS = "homogeneous_driver"
PERIODIC = "periodic"
BOUNDARY_KINDS = (DIRICHLET_ZERO, HOMOGENEOUS, PERIODIC)

LEFT = "left"
RIGHT = "right"

MIN_NODES = 8


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Nodes ``x_min + i*dx`` for ``i = 0..n-1``."""

    x_min: float
    dx: float
    n: int

    def __post_init__(self):
        if self.n < MIN_NODES:
            raise GridError(f"grid needs at least {MIN_NODES} nodes, got {self.n}")
        if not self.dx > 0:
            raise GridError(f"dx must be positive, got {self.dx}")

    @classmethod
    def from_bounds(cls, x_min: float, x_max: float, dx: float) -> "Grid":
        if not dx > 0:
            raise GridError(f"dx must be positive, got {dx}")
        span = (x_max - x_min) / dx
        steps = round(span)
        if abs(span - steps) > 1e-6:
            raise GridError(f"[{x_min}, {x_max}] is not a whole number of dx={dx} steps")
        return cls(float(x_min), float(dx), int(steps) + 1)

    @property
    def x_max(self) -> float:
        return self.x_min + (self.n - 1) * self.dx

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def length(self) -> float:
        """``x_max - x_min``."""
        return (self.n - 1) * self.dx

    @property
    def period(self) -> float:
        """Period used when the field is periodic (one extra cell)."""
        return self.n * self.dx

    def same_as(self, other: "Grid") -> bool:
        return (
            self.n == other.n
            and math.isclose(self.dx, other.dx, rel_tol=1e-12)
            and math.isclose(self.x_min, other.x_min, rel_tol=1e-12, abs_tol=1e-12)
        )


@dataclass(frozen=True)
class BoundaryRegime:
    left: str = DIRICHLET_ZERO
    right: str = DIRICHLET_ZERO

    def __post_init__(self):
        for side in (self.left, self.right):
            if side not in BOUNDARY_KINDS:
                raise GridError(f"unknown boundary kind {side!r}")
        if (self.left == PERIODIC) != (self.right == PERIODIC):
            raise GridError("periodic boundaries must be used on both sides or neither")

    @property
    def periodic(self) -> bool:
        return self.left == PERIODIC

    def kind(self, side: str) -> str:
        return self.left if side == LEFT else self.right


@dataclass(frozen=True, eq=False)
class DensityField:
    """Node values of the density plus what lies beyond the two ends.

    ``left_value``/``right_value`` are the current homogeneous driver values and
    are only read on sides whose kind is ``homogeneous_driver``.
    """

    grid: Grid
    values: np.ndarray
    boundary: BoundaryRegime = BoundaryRegime()
    left_value: float = 0.0
    right_value: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise GridError(f"expected {self.grid.n} values, got shape {vals.shape}")
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray, left_value=None, right_value=None) -> "DensityField":
        return replace(
            self,
            values=values,
            left_value=self.left_value if left_value is None else left_value,
            right_value=self.right_value if right_value is None else right_value,
        )

    # -- ghost extension ----------------------------------------------------

    def side_value(self, side: str) -> float:
        """Value assumed beyond a non-periodic end."""
        kind = self.boundary.kind(side)
        if kind == DIRICHLET_ZERO:
            return 0.0
        if kind == HOMOGENEOUS:
            return self.left_value if side == LEFT else self.right_value
        raise GridError("periodic sides have no constant ghost value")

    def ghost_value(self, x):
        """Density at points outside ``[x_min, x_max]``."""
        x = np.asarray(x, dtype=float)
        g = self.grid
        if self.boundary.periodic:
            idx = np.rint((x - g.x_min) / g.dx).astype(np.int64) % g.n
            pos = np.mod(x - g.x_min, g.period) / g.dx
            lo = np.floor(pos).astype(np.int64) % g.n
            fr = pos - np.floor(pos)
            out = np.where(
                np.isclose(fr, 0.0, atol=1e-9) | np.isclose(fr, 1.0, atol=1e-9),
                self.values[idx],
                self.values[lo] * (1 - fr) + self.values[(lo + 1) % g.n] * fr,
            )
        else:
            out = np.where(x < g.x_min, self.side_value(LEFT), self.side_value(RIGHT))
        return float(out) if out.ndim == 0 else out

    def padded(self, pad: int) -> np.ndarray:
        """Node values with ``pad`` ghost entries on each side."""
        n = self.grid.n
        if self.boundary.periodic:
            return self.values[np.arange(-pad, n + pad) % n]
        out = np.empty(n + 2 * pad)
        out[:pad] = self.side_value(LEFT)
        out[pad: pad + n] = self.values
        out[pad + n:] = self.side_value(RIGHT)
        return out

    # -- point evaluation and quadrature ---------------------------------------

    def interpolate(self, x):
        """Piecewise-linear value inside the domain, ghost value outside, never negative."""
        x = np.asarray(x, dtype=float)
        g = self.grid
        if self.boundary.periodic:
            out = self.ghost_value(x)
        else:
            inside = (x >= g.x_min) & (x <= g.x_max)
            out = np.where(inside, np.interp(x, g.x, self.values), self.ghost_value(x))
        out = np.maximum(out, 0.0)
        return float(out) if np.ndim(out) == 0 else out

    def quadrature_weights(self) -> np.ndarray:
        w = np.full(self.grid.n, self.grid.dx)
        if not self.boundary.periodic:
            w[0] *= 0.5
            w[-1] *= 0.5
        return w

    def quad_integral(self, weight: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> float:
        """Trapezoid rule of ``weight(x) * rho(x)`` over all nodes.

        On periodic fields the rule covers one full period, so every node has
        weight ``dx``.
        """
        vals = self.values if weight is None else weight(self.grid.x) * self.values
        return float(np.dot(self.quadrature_weights(), vals))

    # -- convolution --------------------------------------------------------

    def convolve(self, k: Kernel, tail_tol: float = DEFAULT_TAIL_TOL) -> np.ndarray:
        """``sum_j k(x_i - x_j) rho_j dx`` over the truncated kernel window."""
        offs, vals = k.taps(self.grid.dx, tail_tol)
        pad = int(offs[-1]) if offs.size else 0
        return _hot.conv(self.padded(pad), offs, vals, self.grid.n, pad, self.grid.dx)

    # -- enlargement --------------------------------------------------------

    def enlarge(self, side: str, amount: Optional[float] = None) -> "DensityField":
        """Extend one side by ``amount`` (default: the current length).

        New nodes take that side's ghost value; existing nodes and ``dx`` are
        untouched.
        """
        if self.boundary.periodic:
            raise GridError("cannot enlarge a periodic field")
        if side not in (LEFT, RIGHT):
            raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        g = self.grid
        amount = g.length if amount is None else amount
        extra = int(round(amount / g.dx))
        if extra <= 0:
            return self
        fill = np.full(extra, self.side_value(side))
        if side == LEFT:
            values = np.concatenate([fill, self.values])
            grid = Grid(g.x_min - extra * g.dx, g.dx, g.n + extra)
        else:
            values = np.concatenate([self.values, fill])
            grid = Grid(g.x_min, g.dx, g.n + extra)
        return replace(self, grid=grid, values=values)

    # -- io -----------------------------------------------------------------

    def to_csv(self, path) -> None:
        write_snapshot(path, self.grid.x, self.values)


def write_snapshot(path, x: np.ndarray, rho: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("x,rho\n")
        for xi, ri in zip(x, rho):
            fh.write(f"{float(xi)!r},{float(ri)!r}\n")


def read_snapshot(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]
