"""Gaussian and step kernel families, optionally symmetrically shifted.

A kernel is described by ``shape`` (``"gaussian"`` or ``"step"``), a strength
``lam`` (its total integral), a range ``sigma`` and a shift ``h``.  The
shifted kernel is ``(f(x - h) + f(x + h)) / 2``, which keeps it even and keeps
its integral equal to ``lam``.

Kernels are written in config files as ``"G:lam,sigma"``, ``"B:lam,sigma"``,
``"G:lam,sigma,h"`` or ``"B:lam,sigma,h"``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfcinv

GAUSSIAN = "gaussian"
STEP = "step"
SHAPES = (GAUSSIAN, STEP)

# Convolution truncation tail; fixed so results do not depend on call site.
DEFAULT_TAIL_TOL = 1e-12

# |x| within this relative distance of a step edge counts as "on" the edge
# and gets half the plateau value.
_EDGE_RTOL = 1e-9

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class KernelSpecError(ValueError):
    """Malformed kernel string or invalid kernel parameters."""


@dataclass(frozen=True)
class Kernel:
    shape: str
    lam: float
    sigma: float
    h: float = 0.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise KernelSpecError(f"unknown kernel shape {self.shape!r}")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise KernelSpecError(f"kernel strength must be positive, got {self.lam}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise KernelSpecError(f"kernel range must be positive, got {self.sigma}")
        if not (self.h >= 0 and math.isfinite(self.h)):
            raise KernelSpecError(f"kernel shift must be non-negative, got {self.h}")

    # -- evaluation -------------------------------------------------------

    def _base(self, x):
        if self.shape == GAUSSIAN:
            return self.lam / (self.sigma * _SQRT_2PI) * np.exp(-0.5 * (x / self.sigma) ** 2)
        ax = np.abs(x)
        tol = _EDGE_RTOL * max(1.0, self.sigma)
        plateau = self.lam / (2.0 * self.sigma)
        inside = np.where(ax < self.sigma - tol, plateau, 0.0)
        return np.where(np.abs(ax - self.sigma) <= tol, 0.5 * plateau, inside)

    def __call__(self, x):
        """Evaluate the kernel at ``x`` (scalar or array).

        Step kernels return half the plateau value exactly at their edges,
        the trapezoid-consistent value of the discontinuity.
        """
        x = np.asarray(x, dtype=float)
        if self.h == 0.0:
            out = self._base(x)
        else:
            out = 0.5 * (self._base(x - self.h) + self._base(x + self.h))
        return float(out) if out.ndim == 0 else out

    def total_integral(self) -> float:
        return self.lam

    def support_radius(self, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
        """Radius ``R`` with at most ``tail_tol * lam`` of the mass outside ``[-R, R]``."""
        if not 0.0 < tail_tol < 1.0:
            raise ValueError("tail_tol must lie in (0, 1)")
        if self.shape == STEP:
            return self.h + self.sigma
        return self.h + self.sigma * gaussian_tail_quantile(tail_tol)

    # -- sampling on a lattice -------------------------------------------

    def taps(self, dx: float, tail_tol: float = DEFAULT_TAIL_TOL) -> tuple[np.ndarray, np.ndarray]:
        """Offsets ``k >= 0`` and values ``K(k*dx)`` over the truncated support.

        The kernel is even, so negative offsets are implied.  Zero-valued taps
        (gaps of shifted step kernels) are dropped.
        """
        return _taps(self, float(dx), float(tail_tol), 1.0)

    def dense_taps(self, dx: float, tail_tol: float = DEFAULT_TAIL_TOL) -> np.ndarray:
        """Values ``K(k*dx)`` for ``k = -K..K`` including zeros."""
        return _dense(self, float(dx), float(tail_tol), 1.0)

    def midpoint_taps(self, dx: float, tail_tol: float = DEFAULT_TAIL_TOL) -> tuple[np.ndarray, np.ndarray]:
        """Offsets ``k >= 0`` and values ``K(2*k*dx)``; used by the midpoint gain."""
        return _taps(self, float(dx), float(tail_tol), 2.0)

    # -- serialization ----------------------------------------------------

    def to_string(self) -> str:
        tag = "G" if self.shape == GAUSSIAN else "B"
        parts = [_fmt(self.lam), _fmt(self.sigma)]
        if self.h:
            parts.append(_fmt(self.h))
        return f"{tag}:{','.join(parts)}"

    def __str__(self) -> str:
        return self.to_string()


def _fmt(v: float) -> str:
    return repr(float(v)).removesuffix(".0") if float(v).is_integer() else repr(float(v))


def gaussian_tail_quantile(tail_tol: float) -> float:
    """``z`` with ``P(|N(0,1)| > z) = tail_tol``."""
    return math.sqrt(2.0) * float(erfcinv(tail_tol))


def _n_offsets(k: Kernel, dx: float, tail_tol: float, scale: float) -> int:
    radius = k.support_radius(tail_tol)
    # Step edges sitting exactly on a lattice point must stay inside the window.
    return int(math.floor(radius / (scale * dx) + 1e-9))


@lru_cache(maxsize=256)
def _dense(k: Kernel, dx: float, tail_tol: float, scale: float) -> np.ndarray:
    n = _n_offsets(k, dx, tail_tol, scale)
    offs = np.arange(-n, n + 1)
    vals = k(scale * dx * offs)
    vals = np.atleast_1d(vals).astype(float)
    vals.setflags(write=False)
    return vals


@lru_cache(maxsize=256)
def _taps(k: Kernel, dx: float, tail_tol: float, scale: float) -> tuple[np.ndarray, np.ndarray]:
    vals = _dense(k, dx, tail_tol, scale)
    n = (vals.size - 1) // 2
    offs = np.arange(0, n + 1, dtype=np.int64)
    vals = vals[n:]
    nz = vals != 0.0
    o, v = offs[nz].copy(), vals[nz].copy()
    o.setflags(write=False)
    v.setflags(write=False)
    return o, v


def parse_kernel(text: str) -> Kernel:
    """Parse ``"G:lam,sigma[,h]"`` / ``"B:lam,sigma[,h]"``."""
    if not isinstance(text, str) or ":" not in text:
        raise KernelSpecError(f"kernel must look like 'G:lam,sigma[,h]', got {text!r}")
    tag, _, rest = text.strip().partition(":")
    tag = tag.strip().upper()
    if tag not in ("G", "B"):
        raise KernelSpecError(f"kernel tag must be G or B, got {tag!r} in {text!r}")
    try:
        nums = [float(p) for p in rest.split(",")]
    except ValueError as exc:
        raise KernelSpecError(f"bad number in kernel {text!r}") from exc
    if len(nums) not in (2, 3):
        raise KernelSpecError(f"kernel {text!r} needs 2 or 3 parameters")
    return Kernel(GAUSSIAN if tag == "G" else STEP, *nums)


def G(lam: float, sigma: float, h: float = 0.0) -> Kernel:
    return Kernel(GAUSSIAN, lam, sigma, h)


def B(lam: float, sigma: float, h: float = 0.0) -> Kernel:
    return Kernel(STEP, lam, sigma, h)
