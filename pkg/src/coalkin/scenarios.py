"""Initial conditions, scenario configs and the registry of figure set-ups.

A scenario file is a JSON document::

    {
      "id": "repulsive-jumps",
      "domain":  {"x_min": -20, "x_max": 20, "dx": 0.2,
                  "boundary_left": "homogeneous_driver", "boundary_right": "dirichlet_zero"},
      "time":    {"dt": 0.25, "t_end": 2560, "snapshots": [0, 512, 1664, 2560]},
      "model":   {"coalescence": {"type": "none"},
                  "jump": {"kernel": "G:1,1,2", "repulsion": "G:10,1,4", "placement": "target"}},
      "initial": {"kind": "heaviside_left", "params": {"level": 1}},
      "output":  {"dir": "out/repulsive-jumps"}
    }

For periodic domains ``x_max`` is the end of the period and is not a node.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .field import (
    DIRICHLET_ZERO,
    HOMOGENEOUS,
    PERIODIC,
    BoundaryRegime,
    DensityField,
    Grid,
    GridError,
)
from .integrator import TimeConfig
from .kernels import B, G, Kernel, parse_kernel
from .operators import LOG_MASS, MIDPOINT, ModelConfig, ModelError

HEAVISIDE_LEFT = "heaviside_left"
HEAVISIDE_RIGHT = "heaviside_right"
PERIODIC_KERNEL = "periodic_kernel"
CONSTANT = "constant"
TABULATED = "tabulated"
IC_KINDS = (HEAVISIDE_LEFT, HEAVISIDE_RIGHT, PERIODIC_KERNEL, CONSTANT, TABULATED)


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class InitialCondition:
    kind: str
    level: float = 1.0
    kernel: Optional[Kernel] = None
    period: Optional[float] = None
    rows: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in IC_KINDS:
            raise ScenarioError(f"initial.kind must be one of {IC_KINDS}, got {self.kind!r}")
        if self.level < 0:
            raise ScenarioError("initial level must be non-negative")
        if self.kind == PERIODIC_KERNEL:
            if self.kernel is None or self.period is None or not self.period > 0:
                raise ScenarioError("periodic_kernel needs a kernel and a positive period")
        if self.kind == TABULATED:
            if len(self.rows) < 2:
                raise ScenarioError("tabulated initial condition needs at least two rows")
            xs = [r[0] for r in self.rows]
            if xs != sorted(xs) or any(r[1] < 0 for r in self.rows):
                raise ScenarioError("tabulated rows must be sorted in x with non-negative values")

    def far_values(self) -> tuple[float, float]:
        """Density far to the left and far to the right."""
        if self.kind == HEAVISIDE_LEFT:
            return self.level, 0.0
        if self.kind == HEAVISIDE_RIGHT:
            return 0.0, self.level
        if self.kind == CONSTANT:
            return self.level, self.level
        return 0.0, 0.0

    def sample(self, x: np.ndarray, node_tol: float = 1e-9) -> np.ndarray:
        """Profile at ``x``; jump discontinuities sitting on a node get the mean value."""
        x = np.asarray(x, dtype=float)
        if self.kind in (HEAVISIDE_LEFT, HEAVISIDE_RIGHT):
            inside = x < 0 if self.kind == HEAVISIDE_LEFT else x > 0
            out = np.where(inside, self.level, 0.0)
            return np.where(np.abs(x) <= node_tol, 0.5 * self.level, out)
        if self.kind == CONSTANT:
            return np.full(x.shape, self.level)
        if self.kind == PERIODIC_KERNEL:
            k, p = self.kernel, self.period
            radius = k.support_radius()
            out = np.zeros(x.shape)
            m_lo = int(np.floor((x.min() - radius) / p)) - 1
            m_hi = int(np.ceil((x.max() + radius) / p)) + 1
            for m in range(m_lo, m_hi + 1):
                out += k(x - m * p)
            return out
        xs = np.array([r[0] for r in self.rows])
        ys = np.array([r[1] for r in self.rows])
        return np.interp(x, xs, ys, left=0.0, right=0.0)

    def to_dict(self) -> dict:
        if self.kind == PERIODIC_KERNEL:
            params = {"kernel": self.kernel.to_string(), "period": self.period}
        elif self.kind == TABULATED:
            params = {"rows": [list(r) for r in self.rows]}
        else:
            params = {"level": self.level}
        return {"kind": self.kind, "params": params}

    @classmethod
    def from_dict(cls, d: dict) -> "InitialCondition":
        kind = d.get("kind")
        p = d.get("params") or {}
        kernel = None
        if "kernel" in p:
            try:
                kernel = parse_kernel(p["kernel"])
            except ValueError as exc:
                raise ScenarioError(f"initial.params.kernel: {exc}") from exc
        return cls(
            kind=kind,
            level=float(p.get("level", 1.0)),
            kernel=kernel,
            period=None if p.get("period") is None else float(p["period"]),
            rows=tuple((float(a), float(b)) for a, b in p.get("rows", ())),
        )


@dataclass(frozen=True)
class Domain:
    x_min: float
    x_max: float
    dx: float
    boundary_left: str = DIRICHLET_ZERO
    boundary_right: str = DIRICHLET_ZERO
    auto_enlarge: bool = True
    plot_window: Optional[tuple[float, float]] = None

    @property
    def boundary(self) -> BoundaryRegime:
        return BoundaryRegime(self.boundary_left, self.boundary_right)

    def grid(self) -> Grid:
        if self.boundary.periodic:
            g = Grid.from_bounds(self.x_min, self.x_max, self.dx)
            return Grid(g.x_min, g.dx, g.n - 1)
        return Grid.from_bounds(self.x_min, self.x_max, self.dx)

    def to_dict(self) -> dict:
        d = {
            "x_min": self.x_min,
            "x_max": self.x_max,
            "dx": self.dx,
            "boundary_left": self.boundary_left,
            "boundary_right": self.boundary_right,
            "auto_enlarge": self.auto_enlarge,
        }
        if self.plot_window is not None:
            d["plot_window"] = list(self.plot_window)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Domain":
        try:
            pw = d.get("plot_window")
            return cls(
                x_min=float(d["x_min"]),
                x_max=float(d["x_max"]),
                dx=float(d.get("dx", 0.025)),
                boundary_left=d.get("boundary_left", DIRICHLET_ZERO),
                boundary_right=d.get("boundary_right", DIRICHLET_ZERO),
                auto_enlarge=bool(d.get("auto_enlarge", True)),
                plot_window=None if pw is None else (float(pw[0]), float(pw[1])),
            )
        except KeyError as exc:
            raise ScenarioError(f"domain.{exc.args[0]} is required") from exc


def build_initial(ic: InitialCondition, domain: Domain) -> DensityField:
    grid = domain.grid()
    x = grid.x
    if ic.kind == TABULATED:
        lo, hi = ic.rows[0][0], ic.rows[-1][0]
        if lo < x[0] - 1e-12 or hi > x[-1] + 1e-12:
            raise ScenarioError(f"tabulated rows span [{lo}, {hi}] outside the domain [{x[0]}, {x[-1]}]")
    left, right = ic.far_values()
    return DensityField(grid, ic.sample(x, 1e-9 * grid.dx), domain.boundary, left, right)


def _time_to_dict(tc: TimeConfig) -> dict:
    return {"dt": tc.dt, "t_end": tc.t_end, "snapshots": list(tc.snapshot_times), "diag_every": tc.diag_every}


def _time_from_dict(d: dict) -> TimeConfig:
    try:
        return TimeConfig(
            dt=float(d.get("dt", 0.01)),
            t_end=float(d["t_end"]),
            snapshot_times=tuple(float(t) for t in d.get("snapshots", ())),
            diag_every=int(d.get("diag_every", 1)),
        )
    except KeyError as exc:
        raise ScenarioError(f"time.{exc.args[0]} is required") from exc
    except ValueError as exc:
        raise ScenarioError(f"time: {exc}") from exc


@dataclass(frozen=True)
class Scenario:
    id: str
    initial: InitialCondition
    model: ModelConfig
    domain: Domain
    time: TimeConfig
    title: str = ""
    figure: str = ""
    expected_checks: tuple[str, ...] = ()
    output_dir: Optional[str] = None

    def __post_init__(self):
        if not self.figure:
            object.__setattr__(self, "figure", self.id)

    def initial_field(self) -> DensityField:
        return build_initial(self.initial, self.domain)

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "title": self.title,
            "figure": self.figure,
            "domain": self.domain.to_dict(),
            "time": _time_to_dict(self.time),
            "model": self.model.to_dict(),
            "initial": self.initial.to_dict(),
            "checks": list(self.expected_checks),
        }
        d["output"] = {"dir": self.output_dir} if self.output_dir else {}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        for key in ("domain", "time", "model", "initial"):
            if key not in d:
                raise ScenarioError(f"missing section {key!r}")
        try:
            model = ModelConfig.from_dict(d["model"])
            domain = Domain.from_dict(d["domain"])
            scen = cls(
                id=d.get("id", "custom"),
                initial=InitialCondition.from_dict(d["initial"]),
                model=model,
                domain=domain,
                time=_time_from_dict(d["time"]),
                title=d.get("title", ""),
                figure=d.get("figure", ""),
                expected_checks=tuple(d.get("checks", ())),
                output_dir=(d.get("output") or {}).get("dir"),
            )
        except (ModelError, GridError) as exc:
            raise ScenarioError(str(exc)) from exc
        validate(scen)
        return scen

    def with_overrides(self, dt=None, dx=None, t_end=None) -> "Scenario":
        domain = self.domain if dx is None else replace(self.domain, dx=dx)
        tc = self.time
        if dt is not None or t_end is not None:
            t_end = tc.t_end if t_end is None else t_end
            snaps = tuple(t for t in tc.snapshot_times if t <= t_end)
            tc = TimeConfig(tc.dt if dt is None else dt, t_end, snaps, tc.diag_every)
        out = replace(self, domain=domain, time=tc)
        validate(out)
        return out


def validate(s: Scenario) -> None:
    """Boundary kinds must match what the initial condition looks like far away."""
    try:
        s.domain.grid()
    except GridError as exc:
        raise ScenarioError(f"domain: {exc}") from exc
    b = s.domain.boundary
    kind = s.initial.kind
    if kind == PERIODIC_KERNEL:
        if not b.periodic:
            raise ScenarioError("a periodic initial condition needs periodic boundaries")
    elif kind == CONSTANT:
        if not (b.periodic or (b.left == HOMOGENEOUS and b.right == HOMOGENEOUS)):
            raise ScenarioError("a constant initial condition needs periodic or homogeneous_driver boundaries")
    elif kind == TABULATED:
        if not (b.periodic or (b.left == DIRICHLET_ZERO and b.right == DIRICHLET_ZERO)):
            raise ScenarioError("a tabulated (compact) initial condition needs dirichlet_zero or periodic boundaries")
    else:
        populated = "left" if kind == HEAVISIDE_LEFT else "right"
        want = {"left": DIRICHLET_ZERO, "right": DIRICHLET_ZERO}
        want[populated] = HOMOGENEOUS
        if (b.left, b.right) != (want["left"], want["right"]):
            raise ScenarioError(
                f"{kind} needs boundary_left={want['left']} and boundary_right={want['right']}"
            )
    if s.model.coalescence == LOG_MASS:
        if b.periodic or b.left != DIRICHLET_ZERO:
            raise ScenarioError("log-mass coalescence needs a dirichlet_zero left boundary")


def load_scenario(path) -> Scenario:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    return Scenario.from_dict(d)


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(json.dumps(s.to_dict(), indent=2) + "\n")


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

def _periodic(x_min, x_max, dx, window):
    return Domain(x_min, x_max, dx, PERIODIC, PERIODIC, False, window)


def _step_left(dx, window, x_min=-20.0, x_max=20.0):
    return Domain(x_min, x_max, dx, HOMOGENEOUS, DIRICHLET_ZERO, True, window)


def _step_right(dx, window, x_min=-1.0, x_max=4.0):
    return Domain(x_min, x_max, dx, DIRICHLET_ZERO, HOMOGENEOUS, True, window)


def registry() -> list[Scenario]:
    """Set-ups for every figure, plus the kernel variants shown side by side."""
    step_left = InitialCondition(HEAVISIDE_LEFT)
    step_right = InitialCondition(HEAVISIDE_RIGHT)
    bump40 = InitialCondition(PERIODIC_KERNEL, kernel=B(1, 1), period=40.0)
    steps10 = InitialCondition(PERIODIC_KERNEL, kernel=B(4, 1), period=10.0)

    free_periodic_dom = _periodic(-20.0, 20.0, 0.025, (-10.0, 10.0))
    coal_dom = _periodic(-20.0, 20.0, 0.05, (-7.0, 12.0))

    out = [
        Scenario(
            "free-jumps-periodic",
            bump40,
            ModelConfig(jump_kernel=G(1, 1)),
            free_periodic_dom,
            TimeConfig(0.05, 80.0, (0.0, 2.0, 16.0, 20.0, 80.0), 20),
            "Free jumps, periodic B_{1,1} bumps with period 40, G_{1,1} jumps",
            expected_checks=("number_conserved", "variance_decreasing", "flat_by_80"),
        ),
    ]
    for label, k in (("g3-1", G(3, 1)), ("g1-3", G(1, 3)), ("g1-1-3", G(1, 1, 3))):
        out.append(
            Scenario(
                f"free-jumps-periodic-{label}",
                bump40,
                ModelConfig(jump_kernel=k),
                free_periodic_dom,
                TimeConfig(0.05, 20.0, (0.0, 20.0), 20),
                f"Free jumps, periodic B_{{1,1}} bumps, {k} jumps",
                figure="free-jumps-periodic",
                expected_checks=("faster_than_g1-1",),
            )
        )
    out += [
        Scenario(
            "free-jumps-step",
            step_left,
            ModelConfig(jump_kernel=G(1, 1)),
            _step_left(0.2, (-10.0, 10.0)),
            TimeConfig(0.5, 2560.0, (0.0, 128.0, 640.0, 2560.0), 16),
            "Free jumps from I_(-inf,0] with G_{1,1} jumps",
            expected_checks=("midpoint_half", "monotone"),
        ),
        Scenario(
            "repulsive-jumps",
            step_left,
            ModelConfig(jump_kernel=G(1, 1, 2), repulsion=G(10, 1, 4)),
            _step_left(0.2, (-40.0, 40.0)),
            TimeConfig(0.5, 2560.0, (0.0, 192.0, 512.0, 1664.0, 2560.0), 16),
            "Jumps from I_(-inf,0] with G_{1,1,2} jumps and G_{10,1,4} repulsion",
            expected_checks=("maxima_in_window", "enlarged_before_512"),
        ),
        Scenario(
            "pure-coalescence-shifted",
            steps10,
            ModelConfig(MIDPOINT, B(1, 0.8, 8)),
            coal_dom,
            TimeConfig(0.1, 1280.0, (0.0, 2.0, 320.0, 1280.0), 50),
            "Midpoint coalescence with B_{1,0.8,8}, periodic B_{4,1} steps with period 10",
            expected_checks=("near_stationary", "peaks_between_steps"),
        ),
        Scenario(
            "pure-coalescence-h6",
            steps10,
            ModelConfig(MIDPOINT, B(1, 0.8, 6)),
            coal_dom,
            TimeConfig(0.1, 10.0, (0.0, 10.0), 10),
            "Midpoint coalescence with B_{1,0.8,6}: the initial steps are invariant",
            figure="pure-coalescence-shifted",
            expected_checks=("invariant",),
        ),
        Scenario(
            "mass-coalescence",
            step_right,
            ModelConfig(LOG_MASS, G(0.02, 0.2)),
            _step_right(0.025, (-1.0, 4.0)),
            TimeConfig(0.5, 1280.0, (0.0, 64.0, 192.0, 1280.0), 16),
            "Mass-preserving coalescence from I_[0,inf) with G_{0.02,0.2}",
        ),
        Scenario(
            "mass-coalescence-box",
            step_right,
            ModelConfig(LOG_MASS, B(0.02, 0.2)),
            _step_right(0.025, (-1.0, 4.0)),
            TimeConfig(0.5, 1280.0, (0.0, 64.0, 192.0, 1280.0), 16),
            "Mass-preserving coalescence from I_[0,inf) with B_{0.02,0.2}",
            figure="mass-coalescence",
        ),
        Scenario(
            "jumps-coalescence-repulsive",
            step_left,
            ModelConfig(MIDPOINT, G(0.05, 1, 2), jump_kernel=G(1, 1, 2), repulsion=G(10, 1, 4)),
            _step_left(0.2, (-70.0, 10.0)),
            TimeConfig(0.25, 320.0, (0.0, 8.0, 32.0, 192.0, 256.0, 320.0), 16),
            "Repulsive jumps with weak midpoint coalescence G_{0.05,1,2}",
            expected_checks=("faster_heterogeneity", "flattens_after_192"),
        ),
        Scenario(
            "coalescence-free-jumps",
            steps10,
            ModelConfig(MIDPOINT, B(1, 0.8, 8), jump_kernel=G(0.2, 1)),
            coal_dom,
            TimeConfig(0.1, 30.0, (0.0, 2.0, 10.0, 30.0), 10),
            "Midpoint coalescence B_{1,0.8,8} with weak free jumps G_{0.2,1}",
            expected_checks=("decays_below_stationary",),
        ),
        Scenario(
            "coalescence-free-jumps-box",
            steps10,
            ModelConfig(MIDPOINT, B(1, 0.8, 8), jump_kernel=B(0.2, 1)),
            coal_dom,
            TimeConfig(0.1, 30.0, (0.0, 2.0, 10.0, 30.0), 10),
            "Same as coalescence-free-jumps with a B_{0.2,1} jump kernel",
            figure="coalescence-free-jumps",
        ),
        Scenario(
            "mass-coalescence-jumps",
            step_right,
            ModelConfig(LOG_MASS, G(0.02, 0.2), jump_kernel=G(0.01, 0.2)),
            _step_right(0.025, (-1.0, 4.0)),
            TimeConfig(0.5, 1280.0, (0.0, 64.0, 192.0, 1280.0), 16),
            "Mass-preserving coalescence G_{0.02,0.2} with G_{0.01,0.2} jumps",
        ),
    ]
    for s in out:
        validate(s)
    return out


def get_scenario(scenario_id: str) -> Scenario:
    for s in registry():
        if s.id == scenario_id:
            return s
    raise KeyError(scenario_id)


def figure_ids() -> list[str]:
    seen = []
    for s in registry():
        if s.figure not in seen:
            seen.append(s.figure)
    return seen


def figure_group(figure_id: str) -> list[Scenario]:
    group = [s for s in registry() if s.figure == figure_id]
    if not group:
        raise KeyError(figure_id)
    return group
