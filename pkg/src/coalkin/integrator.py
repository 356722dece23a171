"""Classical RK4 stepping with homogeneous boundary drivers and auto-enlargement."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .diagnostics import DiagnosticsRecord
from .field import HOMOGENEOUS, LEFT, RIGHT, DensityField
from .operators import ModelConfig, rhs

log = logging.getLogger(__name__)

DEFAULT_DT = 0.01


class SimulationUnstable(RuntimeError):
    """A stage produced a non-finite value; the time step is too large."""


@dataclass(frozen=True)
class TimeConfig:
    dt: float = DEFAULT_DT
    t_end: float = 1.0
    snapshot_times: tuple[float, ...] = ()
    diag_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end}")
        if self.diag_every < 1:
            raise ValueError("diag_every must be >= 1")
        snaps = tuple(float(t) for t in self.snapshot_times)
        if list(snaps) != sorted(snaps):
            raise ValueError("snapshot times must be sorted")
        for t in snaps:
            if t < 0 or t > self.t_end + 1e-12:
                raise ValueError(f"snapshot time {t} outside [0, {self.t_end}]")
            self.step_index(t)
        object.__setattr__(self, "snapshot_times", snaps)
        self.step_index(self.t_end)

    def step_index(self, t: float) -> int:
        k = t / self.dt
        ki = round(k)
        if abs(k - ki) > 1e-9 * max(1.0, k):
            raise ValueError(f"time {t} is not a multiple of dt={self.dt}")
        return int(ki)

    @property
    def n_steps(self) -> int:
        return self.step_index(self.t_end)


@dataclass(frozen=True)
class SimState:
    field: DensityField
    t: float = 0.0
    enlargements: tuple[tuple[float, str], ...] = ()
    clamped: int = 0

    @property
    def hom_value(self) -> float:
        """Current driver value (left side first if both are driven)."""
        b = self.field.boundary
        if b.left == HOMOGENEOUS:
            return self.field.left_value
        if b.right == HOMOGENEOUS:
            return self.field.right_value
        return 0.0


def homogeneous_rate(m: ModelConfig) -> float:
    """``c`` in ``dr/dt = -c r^2`` for a spatially constant density."""
    if not m.has_coalescence:
        return 0.0
    return 0.5 * m.coalescence_kernel.total_integral()


def homogeneous_driver(m: ModelConfig, r0: float, t: float) -> float:
    """Spatially constant solution ``r(t) = r0 / (1 + c r0 t)``.

    Jumps vanish on constants.  Substituting a constant into either coalescence
    gain gives ``lam r^2 / 2`` (for the log-mass form via ``v = ln(e^w - 1)``),
    so both placements share this law.
    """
    c = homogeneous_rate(m)
    return r0 / (1.0 + c * r0 * t)


def _driver_slopes(f: DensityField, c: float) -> tuple[float, float]:
    b = f.boundary
    kl = -c * f.left_value ** 2 if b.left == HOMOGENEOUS else 0.0
    kr = -c * f.right_value ** 2 if b.right == HOMOGENEOUS else 0.0
    return kl, kr


def rk4_step(s: SimState, m: ModelConfig, dt: float, rhs_fn: Callable = rhs) -> SimState:
    """One classical RK4 step; driver values ride along as extra unknowns."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    f0 = s.field
    c = homogeneous_rate(m)
    v0, l0, r0 = f0.values, f0.left_value, f0.right_value

    def stage(vals, lv, rv):
        f = f0.with_values(vals, lv, rv)
        k = rhs_fn(f, m)
        if not np.all(np.isfinite(k)):
            raise SimulationUnstable(f"non-finite right-hand side at t={s.t:g} (dt={dt:g} too large?)")
        return k, _driver_slopes(f, c)

    # overflow surfaces as a non-finite stage and is reported as SimulationUnstable
    with np.errstate(over="ignore", invalid="ignore"):
        k1, (a1, b1) = stage(v0, l0, r0)
        k2, (a2, b2) = stage(v0 + 0.5 * dt * k1, l0 + 0.5 * dt * a1, r0 + 0.5 * dt * b1)
        k3, (a3, b3) = stage(v0 + 0.5 * dt * k2, l0 + 0.5 * dt * a2, r0 + 0.5 * dt * b2)
        k4, (a4, b4) = stage(v0 + dt * k3, l0 + dt * a3, r0 + dt * b3)

        new = v0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        lv = l0 + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        rv = r0 + (dt / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
    if not np.all(np.isfinite(new)):
        raise SimulationUnstable(f"non-finite density after step at t={s.t:g}")
    neg = new < 0.0
    n_clamped = int(neg.sum())
    if n_clamped:
        new = np.where(neg, 0.0, new)
    return SimState(f0.with_values(new, max(lv, 0.0), max(rv, 0.0)), s.t + dt, s.enlargements, n_clamped)


def default_trigger_margin(m: ModelConfig) -> float:
    return 2.0 * m.max_support_radius()


def maybe_enlarge(
    s: SimState,
    m: ModelConfig,
    trigger_margin: Optional[float] = None,
    trigger_tol: Optional[float] = None,
) -> SimState:
    """Double the domain when the solution departs from a boundary value near that boundary.

    A single triggered side is extended by the full current length; when both
    sides trigger together each gets half, so the total length still doubles.
    """
    f = s.field
    if f.boundary.periodic:
        return s
    margin = default_trigger_margin(m) if trigger_margin is None else trigger_margin
    tol = 1e-4 * max(1.0, float(np.max(np.abs(f.values)))) if trigger_tol is None else trigger_tol
    g = f.grid
    x = g.x
    fired = []
    for side in (LEFT, RIGHT):
        near = x <= g.x_min + margin if side == LEFT else x >= g.x_max - margin
        if np.any(np.abs(f.values[near] - f.side_value(side)) > tol):
            fired.append(side)
    if not fired:
        return s
    amount = g.length / len(fired)
    for side in fired:
        f = f.enlarge(side, amount)
    log.info("t=%g: enlarged %s to [%g, %g]", s.t, "+".join(fired), f.grid.x_min, f.grid.x_max)
    events = s.enlargements + tuple((s.t, side) for side in fired)
    return replace(s, field=f, enlargements=events)


@dataclass
class RunResult:
    snapshots: list[tuple[float, DensityField]]
    diagnostics: DiagnosticsRecord
    final: SimState
    enlargements: tuple[tuple[float, str], ...] = field(default_factory=tuple)
    max_clamped: int = 0

    def snapshot(self, t: float) -> DensityField:
        for ts, f in self.snapshots:
            if math.isclose(ts, t, rel_tol=1e-12, abs_tol=1e-12):
                return f
        raise KeyError(f"no snapshot at t={t}")


def run(
    initial: DensityField,
    m: ModelConfig,
    tc: TimeConfig,
    auto_enlarge: bool = True,
    trigger_margin: Optional[float] = None,
    trigger_tol: Optional[float] = None,
    rhs_fn: Callable = rhs,
    progress: Optional[Callable[[SimState], None]] = None,
) -> RunResult:
    """Integrate from ``t = 0`` to ``tc.t_end`` with fixed steps."""
    snap_steps = {tc.step_index(t): t for t in tc.snapshot_times}
    n_steps = tc.n_steps
    state = SimState(initial)
    diag = DiagnosticsRecord()
    diag.append(0.0, initial)
    snapshots = [(0.0, initial)] if 0 in snap_steps or n_steps == 0 and not snap_steps else []
    max_clamped = 0
    clamped_since_row = 0
    for k in range(1, n_steps + 1):
        state = rk4_step(state, m, tc.dt, rhs_fn)
        state = replace(state, t=k * tc.dt)
        max_clamped = max(max_clamped, state.clamped)
        clamped_since_row += state.clamped
        if auto_enlarge:
            state = maybe_enlarge(state, m, trigger_margin, trigger_tol)
        if k in snap_steps:
            snapshots.append((snap_steps[k], state.field))
        if k % tc.diag_every == 0 or k == n_steps:
            with np.errstate(over="ignore"):
                diag.append(state.t, state.field, clamped_since_row)
            clamped_since_row = 0
        if progress is not None:
            progress(state)
    return RunResult(snapshots, diag, state, state.enlargements, max_clamped)
