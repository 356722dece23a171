"""Right-hand side of the kinetic equation for coalescing, jumping particles.

The density obeys

    d rho/dt = coalescence gain - rho * (a1 * rho)
             + jump gain - rho * (c2 * E),        E = exp(-(phi * rho))

where ``*`` is convolution.  The coalescence gain depends on where the merged
particle is placed: at the midpoint of the pair, or at ``ln(e^y + e^z)`` when
the coordinate is a log-mass.  Both delta placements are integrated exactly,
never mollified.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _hot
from .field import DensityField
from .kernels import DEFAULT_TAIL_TOL, Kernel, parse_kernel

NO_COALESCENCE = "none"
MIDPOINT = "midpoint"
LOG_MASS = "log_mass"
COALESCENCE_TYPES = (NO_COALESCENCE, MIDPOINT, LOG_MASS)

TARGET = "target"
PAPER_LITERAL = "paper_literal"
PLACEMENTS = (TARGET, PAPER_LITERAL)


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    coalescence: str = NO_COALESCENCE
    coalescence_kernel: Optional[Kernel] = None
    jump_kernel: Optional[Kernel] = None
    repulsion: Optional[Kernel] = None
    placement: str = TARGET

    def __post_init__(self):
        if self.coalescence not in COALESCENCE_TYPES:
            raise ModelError(f"coalescence type must be one of {COALESCENCE_TYPES}, got {self.coalescence!r}")
        if self.placement not in PLACEMENTS:
            raise ModelError(f"placement must be one of {PLACEMENTS}, got {self.placement!r}")
        if self.coalescence != NO_COALESCENCE and self.coalescence_kernel is None:
            raise ModelError(f"{self.coalescence} coalescence needs a kernel")
        if self.repulsion is not None and self.jump_kernel is None:
            raise ModelError("a repulsion potential needs a jump kernel")
        if self.coalescence == NO_COALESCENCE and self.jump_kernel is None:
            raise ModelError("model has neither coalescence nor jumps")

    @property
    def has_coalescence(self) -> bool:
        return self.coalescence != NO_COALESCENCE

    def kernels(self) -> list[Kernel]:
        ks = [self.coalescence_kernel if self.has_coalescence else None, self.jump_kernel, self.repulsion]
        return [k for k in ks if k is not None]

    def max_support_radius(self, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
        return max(k.support_radius(tail_tol) for k in self.kernels())

    def to_dict(self) -> dict:
        coal = {"type": self.coalescence}
        if self.has_coalescence:
            coal["kernel"] = self.coalescence_kernel.to_string()
        jump = {"placement": self.placement}
        if self.jump_kernel is not None:
            jump["kernel"] = self.jump_kernel.to_string()
        if self.repulsion is not None:
            jump["repulsion"] = self.repulsion.to_string()
        return {"coalescence": coal, "jump": jump}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        coal = d.get("coalescence") or {}
        jump = d.get("jump") or {}
        ctype = coal.get("type", NO_COALESCENCE)
        return cls(
            coalescence=ctype,
            coalescence_kernel=_kernel_field(coal, "kernel", "model.coalescence.kernel") if ctype != NO_COALESCENCE else None,
            jump_kernel=_kernel_field(jump, "kernel", "model.jump.kernel"),
            repulsion=_kernel_field(jump, "repulsion", "model.jump.repulsion"),
            placement=jump.get("placement", TARGET),
        )


def _kernel_field(section: dict, key: str, where: str) -> Optional[Kernel]:
    text = section.get(key)
    if text is None:
        return None
    try:
        return parse_kernel(text)
    except ValueError as exc:
        raise ModelError(f"{where}: {exc}") from exc


# ---------------------------------------------------------------------------
# coalescence
# ---------------------------------------------------------------------------

def coalescence_loss(f: DensityField, a1: Kernel) -> np.ndarray:
    return f.values * f.convolve(a1)


def coalescence_gain_midpoint(f: DensityField, a1: Kernel) -> np.ndarray:
    """``int a1(2u) rho(x+u) rho(x-u) du`` summed over grid offsets ``u``."""
    offs, vals = a1.midpoint_taps(f.grid.dx)
    pad = int(offs[-1]) if offs.size else 0
    return _hot.midpoint_gain(f.padded(pad), offs, vals, f.grid.n, pad, f.grid.dx)


def coalescence_gain_logmass(f: DensityField, a1: Kernel) -> np.ndarray:
    """Gain for merging into ``ln(e^y + e^z)``.

    At node ``x`` this is ``1/2 * int a1(y* - z) rho(y*) rho(z) e^x / (e^x - e^z) dz``
    with ``y* = ln(e^x - e^z)``; partners lighter than ``e^{x_min}`` are absent,
    which keeps the Jacobian below ``e^{x_max - x_min}``.  The integrand is
    linearly interpolated between nodes and integrated exactly, split where a
    step kernel jumps (``z = x - ln(1 + e^s)`` for a jump at ``y* - z = s``).
    """
    if f.boundary.periodic:
        raise ModelError("log-mass coalescence is not defined on a periodic domain")
    g = f.grid
    shape = _hot.SHAPE_CODES[a1.shape]
    pieces = _hot.logmass_pieces(shape, a1.lam, a1.sigma, a1.h, a1.support_radius(DEFAULT_TAIL_TOL))
    if pieces[0].size == 0:
        return np.zeros(g.n)
    return _hot.logmass_gain(np.ascontiguousarray(f.values), g.x_min, g.dx, shape, a1.lam, a1.sigma, a1.h, *pieces)


def coalescence_rhs(f: DensityField, m: ModelConfig) -> np.ndarray:
    if m.coalescence == MIDPOINT:
        gain = coalescence_gain_midpoint(f, m.coalescence_kernel)
    elif m.coalescence == LOG_MASS:
        gain = coalescence_gain_logmass(f, m.coalescence_kernel)
    else:
        return np.zeros(f.grid.n)
    return gain - coalescence_loss(f, m.coalescence_kernel)


# ---------------------------------------------------------------------------
# jumps
# ---------------------------------------------------------------------------

def tap_sum(offs: np.ndarray, vals: np.ndarray) -> float:
    """Sum over the implied symmetric tap set."""
    return float(2.0 * vals.sum() - (vals[0] if offs.size and offs[0] == 0 else 0.0))


def repulsion_factor(f: DensityField, phi: Optional[Kernel], extra: int = 0) -> np.ndarray:
    """``exp(-(phi * rho))`` at nodes ``-extra .. n-1+extra``."""
    n = f.grid.n
    if phi is None:
        return np.ones(n + 2 * extra)
    offs, vals = phi.taps(f.grid.dx)
    kp = int(offs[-1])
    ext = f.padded(extra + kp)
    return np.exp(-_hot.conv(ext, offs, vals, n + 2 * extra, kp, f.grid.dx))


def jump_rhs(f: DensityField, c2: Kernel, phi: Optional[Kernel] = None, placement: str = TARGET) -> np.ndarray:
    """Jump gain minus jump loss at every node.

    ``target`` evaluates the repulsion at the landing point in both terms and
    conserves particle number; ``paper_literal`` evaluates it at the departure
    point in the gain term.
    """
    if placement not in PLACEMENTS:
        raise ModelError(f"unknown placement {placement!r}")
    g = f.grid
    n, dx = g.n, g.dx
    offs, vals = c2.taps(dx)
    kc = int(offs[-1])
    rho = f.values
    if phi is None:
        # E == 1 everywhere, ghosts included, so c2 * E is the tap sum.
        gain = _hot.conv(f.padded(kc), offs, vals, n, kc, dx)
        return gain - rho * (tap_sum(offs, vals) * dx)

    kp = int(phi.taps(dx)[0][-1])
    ext = f.padded(kc + kp)
    E = repulsion_factor(f, phi, extra=kc)
    loss = rho * _hot.conv(E, offs, vals, n, kc, dx)
    if placement == TARGET:
        gain = E[kc: kc + n] * _hot.conv(ext, offs, vals, n, kc + kp, dx)
    else:
        gain = _hot.conv(E * ext[kp: kp + n + 2 * kc], offs, vals, n, kc, dx)
    return gain - loss


def rhs(f: DensityField, m: ModelConfig) -> np.ndarray:
    out = coalescence_rhs(f, m) if m.has_coalescence else np.zeros(f.grid.n)
    if m.jump_kernel is not None:
        out = out + jump_rhs(f, m.jump_kernel, m.repulsion, m.placement)
    return out
