"""Command-line front end.

    coalkin run <config.json> [--dt X] [--dx X] [--t-end X] [--out DIR]
    coalkin reproduce <figure-or-scenario-id> [--out DIR]
    coalkin check [--suite fast|full]
    coalkin list

Exit codes: 0 success, 1 configuration error, 2 numerical instability,
3 acceptance failure.  ``COALKIN_THREADS`` caps the number of worker threads.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__, acceptance
from ._backend import BACKEND, HAVE_NUMBA
from .field import DensityField
from .integrator import RunResult, SimulationUnstable, run
from .operators import PLACEMENTS, TARGET
from .scenarios import (
    Scenario,
    ScenarioError,
    figure_group,
    figure_ids,
    get_scenario,
    load_scenario,
    registry,
)

log = logging.getLogger("coalkin")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_UNSTABLE = 2
EXIT_FAILED = 3

THREADS_ENV = "COALKIN_THREADS"


class ConfigError(Exception):
    pass


def worker_count(n_jobs: int) -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    cap = os.cpu_count() or 1
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
        if cap < 1:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return max(1, min(n_jobs, cap))


def snapshot_name(t: float) -> str:
    return f"snap_T{t:g}.csv"


def versions() -> dict:
    out = {
        "coalkin": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "backend": BACKEND,
    }
    if HAVE_NUMBA:
        import numba

        out["numba"] = numba.__version__
    return out


def plot_grid(s: Scenario) -> np.ndarray:
    lo, hi = s.domain.plot_window or (s.domain.x_min, s.domain.x_max)
    n = int(round((hi - lo) / s.domain.dx))
    return lo + s.domain.dx * np.arange(n + 1)


def write_gnuplot(path: Path, x: np.ndarray, snapshots: list[tuple[float, DensityField]]) -> None:
    """Columns ``x rho_T1 rho_T2 ...``; snapshots on enlarged grids are interpolated."""
    cols = [np.atleast_1d(f.interpolate(x)) for _, f in snapshots]
    with open(path, "w") as fh:
        fh.write("# x " + " ".join(f"T={t:g}" for t, _ in snapshots) + "\n")
        for i, xi in enumerate(x):
            fh.write(f"{xi:.10g} " + " ".join(f"{c[i]:.10g}" for c in cols) + "\n")


def execute(s: Scenario, out: Path) -> tuple[RunResult, list[str], float]:
    """Run one scenario and write its snapshots, diagnostics, config and gnuplot table."""
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    res = run(s.initial_field(), s.model, s.time, auto_enlarge=s.domain.auto_enlarge)
    wall = time.perf_counter() - t0
    files = []
    for t, f in res.snapshots:
        name = snapshot_name(t)
        f.to_csv(out / name)
        files.append(name)
    res.diagnostics.to_csv(out / "diagnostics.csv")
    files.append("diagnostics.csv")
    (out / "scenario.json").write_text(json.dumps(s.to_dict(), indent=2) + "\n")
    files.append("scenario.json")
    dat = f"{s.id}.dat"
    write_gnuplot(out / dat, plot_grid(s), res.snapshots)
    files.append(dat)
    return res, files, wall


def _run_entry(s: Scenario, res: RunResult, files: list[str], wall: float, prefix: str = "") -> dict:
    return {
        "id": s.id,
        "config": s.to_dict(),
        "files": [prefix + f for f in files],
        "wall_clock_s": round(wall, 3),
        "enlargements": [[t, side] for t, side in res.enlargements],
        "final_domain": [res.final.field.grid.x_min, res.final.field.grid.x_max],
        "max_clamped": res.max_clamped,
    }


def write_manifest(out: Path, runs: list[dict], wall: float) -> None:
    manifest = {
        "output_dir": str(out),
        "runs": runs,
        "files": [f for r in runs for f in r["files"]],
        "wall_clock_s": round(wall, 3),
        "versions": versions(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_run(args) -> int:
    s = load_scenario(args.config)
    s = s.with_overrides(dt=args.dt, dx=args.dx, t_end=args.t_end)
    out = Path(args.out or s.output_dir or Path("out") / s.id)
    t0 = time.perf_counter()
    res, files, wall = execute(s, out)
    write_manifest(out, [_run_entry(s, res, files, wall)], time.perf_counter() - t0)
    print(f"{s.id}: {len(res.snapshots)} snapshots written to {out}")
    return EXIT_OK


def resolve_ids(target: str) -> tuple[str, list[Scenario]]:
    if target in figure_ids():
        return target, figure_group(target)
    try:
        return target, [get_scenario(target)]
    except KeyError:
        known = sorted(set(figure_ids()) | {s.id for s in registry()})
        raise ConfigError(f"unknown id {target!r}; known ids: {', '.join(known)}") from None


def cmd_reproduce(args) -> int:
    name, group = resolve_ids(args.id)
    out = Path(args.out or Path("out") / name)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()

    def job(s: Scenario):
        log.info("running %s", s.id)
        return s, *execute(s, out / s.id)

    workers = worker_count(len(group))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(job, group))
    else:
        done = [job(s) for s in group]
    entries = [_run_entry(s, res, files, wall, prefix=f"{s.id}/") for s, res, files, wall in done]
    write_manifest(out, entries, time.perf_counter() - t0)
    for e in entries:
        print(f"{e['id']}: {len(e['files'])} files in {out / e['id']} ({e['wall_clock_s']:.1f}s)")
    return EXIT_OK


def cmd_check(args) -> int:
    only = None
    if args.only:
        try:
            only = {int(v) for v in args.only.split(",")}
        except ValueError:
            raise ConfigError(f"--only takes comma-separated criterion numbers, got {args.only!r}") from None
    results = acceptance.run_suite(
        args.suite, only=only, placement=args.placement, workers=worker_count(os.cpu_count() or 1)
    )
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_FAILED if failed else EXIT_OK


def cmd_list(args) -> int:
    for s in registry():
        fig = "" if s.figure == s.id else f" [figure {s.figure}]"
        print(f"{s.id}{fig}: {s.title}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coalkin", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario config file")
    r.add_argument("config", help="path to a JSON scenario")
    r.add_argument("--dt", type=float, help="override the time step")
    r.add_argument("--dx", type=float, help="override the grid spacing")
    r.add_argument("--t-end", type=float, dest="t_end", help="override the final time")
    r.add_argument("--out", help="output directory")
    r.set_defaults(func=cmd_run)

    rep = sub.add_parser("reproduce", help="run a registered figure or scenario")
    rep.add_argument("id")
    rep.add_argument("--out", help="output directory")
    rep.set_defaults(func=cmd_reproduce)

    c = sub.add_parser("check", help="run the acceptance suite")
    c.add_argument("--suite", choices=acceptance.SUITES, default=acceptance.FAST)
    c.add_argument("--only", help="comma-separated criterion numbers")
    c.add_argument(
        "--placement",
        choices=PLACEMENTS,
        default=TARGET,
        help="repulsion placement for the conservation criterion",
    )
    c.set_defaults(func=cmd_check)

    ls = sub.add_parser("list", help="list registered scenarios")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SimulationUnstable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (ConfigError, ScenarioError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
