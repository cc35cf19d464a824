"""
Monte-Carlo sweeps comparing beyond-diagonal and conventional surfaces.

Each sweep point solves `trials` independent channel realizations for every
requested scheme. Realizations are paired: both schemes see the same draw,
produced from the dedicated stream default_rng([base_seed, point_index,
trial]), so results are reproducible run-to-run and independent of how the
points are distributed over workers. When both schemes run, the
beyond-diagonal solve is warm-started from the converged conventional
phases, which makes its sum rate dominate the baseline trial by trial.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

import numpy as np

from .channel import GeometryParams, LinkBudgetParams, draw_realization
from .optimizer import (BcdSettings, InfeasibleAllocationError, ProblemSpec,
                        SCHEMES, bcd_solve)
from .surfaces import RisSpec

DETAIL_HEADER = "power_dbm,num_elements,scheme,trial,rate_near,rate_far,sum_rate,outage"
AGGREGATE_HEADER = ("power_dbm,num_elements,scheme,"
                    "mean_sum_rate,std_sum_rate,num_trials,outage_count")

DEFAULT_POWER_POINTS_DBM = (0.0, 5.0, 10.0, 15.0, 20.0)
DEFAULT_ELEMENT_COUNTS = (10, 20, 40, 80)


@dataclass(frozen=True)
class SweepSpec:
    geometry: GeometryParams
    link_budget: LinkBudgetParams
    ris_spec: RisSpec
    power_points_dbm: tuple = DEFAULT_POWER_POINTS_DBM   # x-axis of the power sweep
    element_counts: tuple = DEFAULT_ELEMENT_COUNTS       # x-axis of the element sweep
    power_dbm: float = 20.0       # fixed transmit power for the element sweep
    trials: int = 200
    base_seed: int = 12345
    schemes: tuple = SCHEMES
    include_direct: bool = False
    min_rate_near: float = 0.0    # bps/Hz
    min_rate_far: float = 0.0     # bps/Hz
    settings: BcdSettings = BcdSettings()

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown scheme {s!r}")
        if self.ris_spec.mode != "reflective":
            raise ValueError("sweeps support reflective surfaces only")
        if not self.power_points_dbm or not self.element_counts:
            raise ValueError("sweep grids must be non-empty")


@dataclass(frozen=True)
class SweepResult:
    sweep_kind: str        # 'power' | 'elements'
    detail_rows: tuple     # (power_dbm, num_elements, scheme, trial, r_near, r_far, sum, outage)
    aggregate_rows: tuple  # (power_dbm, num_elements, scheme, mean, std, n_ok, n_outage)


def _solve_trial(spec: SweepSpec, ris: RisSpec, power_dbm: float,
                 stream_key: int, trial: int) -> list:
    rng = np.random.default_rng([spec.base_seed, stream_key, trial])
    ch = draw_realization(spec.geometry, spec.link_budget, ris.num_elements,
                          num_users=2, include_direct=spec.include_direct, rng=rng)
    need_cd = "CD_RIS" in spec.schemes or spec.settings.warm_start == "cd"
    cd_solution = None
    if need_cd:
        try:
            cd_solution = bcd_solve(
                ch, ProblemSpec(ris, power_dbm, spec.min_rate_near,
                                spec.min_rate_far, "CD_RIS"), spec.settings)
        except InfeasibleAllocationError:
            cd_solution = None

    rows = []
    for scheme in spec.schemes:
        if scheme == "CD_RIS":
            solution = cd_solution
        else:
            try:
                solution = bcd_solve(
                    ch, ProblemSpec(ris, power_dbm, spec.min_rate_near,
                                    spec.min_rate_far, scheme), spec.settings,
                    warm_start_pr=cd_solution.phase if cd_solution is not None else None)
            except InfeasibleAllocationError:
                solution = None
        if solution is None:
            rows.append((power_dbm, ris.num_elements, scheme, trial, 0.0, 0.0, 0.0, 1))
        else:
            r = solution.rates
            rows.append((power_dbm, ris.num_elements, scheme, trial,
                         r.rate_near, r.rate_far, r.sum_rate, 0))
    return rows


def _run_point(args) -> list:
    spec, kind, point_index = args
    if kind == "power":
        # power points are floats, so the stream keys on the point index
        power_dbm = float(spec.power_points_dbm[point_index])
        ris = spec.ris_spec
        stream_key = point_index
    else:
        # keying on the element count itself makes duplicate K entries
        # reproduce identical rows and keeps control points stable when
        # the grid composition changes
        power_dbm = float(spec.power_dbm)
        ris = replace(spec.ris_spec, num_elements=int(spec.element_counts[point_index]))
        stream_key = ris.num_elements
    rows = []
    for trial in range(spec.trials):
        rows.extend(_solve_trial(spec, ris, power_dbm, stream_key, trial))
    return rows


def _aggregate_point(point_rows) -> list:
    """One aggregate row per scheme from a single sweep point's rows, so a
    grid listing the same point twice yields two identical aggregate rows."""
    groups = {}
    for row in point_rows:
        groups.setdefault(row[:3], []).append(row)
    agg = []
    for (power_dbm, k, scheme), rows in groups.items():
        ok = [r[6] for r in rows if r[7] == 0]
        n_outage = len(rows) - len(ok)
        mean = float(np.mean(ok)) if ok else 0.0
        std = float(np.std(ok, ddof=1)) if len(ok) > 1 else 0.0
        agg.append((power_dbm, k, scheme, mean, std, len(ok), n_outage))
    return agg


def _run_sweep(spec: SweepSpec, kind: str, workers: int) -> SweepResult:
    n_points = len(spec.power_points_dbm if kind == "power" else spec.element_counts)
    jobs = [(spec, kind, i) for i in range(n_points)]
    if workers > 1:
        # map preserves job order, so the row set is identical for any
        # worker count; the final sort fixes the layout either way
        import multiprocessing

        with multiprocessing.Pool(processes=workers) as pool:
            per_point = pool.map(_run_point, jobs)
    else:
        per_point = [_run_point(job) for job in jobs]
    detail = sorted((row for rows in per_point for row in rows),
                    key=lambda r: (r[0], r[1], r[2], r[3]))
    aggregate = sorted((row for rows in per_point for row in _aggregate_point(rows)),
                       key=lambda r: (r[0], r[1], r[2]))
    return SweepResult(kind, tuple(detail), tuple(aggregate))


def run_power_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Sum rate versus transmit power at a fixed element count."""
    return _run_sweep(spec, "power", workers)


def run_element_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Sum rate versus element count at a fixed transmit power."""
    return _run_sweep(spec, "elements", workers)


def emit_csv(result: SweepResult, path: str) -> tuple:
    """Write the per-trial detail CSV at `path` and the per-point aggregate
    next to it with an `_agg` suffix; returns both paths. Floats use %.6e
    (the sum rates at satellite path loss sit around 1e-15 bps/Hz)."""
    root, ext = os.path.splitext(path)
    agg_path = root + "_agg" + (ext or ".csv")
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)

    with open(path, "w", encoding="utf-8") as f:
        f.write(DETAIL_HEADER + "\n")
        for power_dbm, k, scheme, trial, r_n, r_f, r_sum, outage in result.detail_rows:
            f.write(f"{power_dbm:.6e},{k:d},{scheme},{trial:d},"
                    f"{r_n:.6e},{r_f:.6e},{r_sum:.6e},{outage:d}\n")
    with open(agg_path, "w", encoding="utf-8") as f:
        f.write(AGGREGATE_HEADER + "\n")
        for power_dbm, k, scheme, mean, std, n_ok, n_outage in result.aggregate_rows:
            f.write(f"{power_dbm:.6e},{k:d},{scheme},"
                    f"{mean:.6e},{std:.6e},{n_ok:d},{n_outage:d}\n")
    return path, agg_path


def emit_plot_script(result: SweepResult, path: str,
                     aggregate_csv_name: str | None = None) -> str:
    """Write a gnuplot script plotting mean sum rate (with std error bars)
    against the sweep axis from the aggregate CSV; returns the script path.
    The CSV reference defaults to `<script stem>_agg.csv` alongside it."""
    if aggregate_csv_name is None:
        stem = os.path.splitext(os.path.basename(path))[0]
        aggregate_csv_name = stem + "_agg.csv"
    if result.sweep_kind == "power":
        x_col, x_label = 1, "Transmit power (dBm)"
    else:
        x_col, x_label = 2, "Number of PREs"
    lines = [
        "set datafile separator ','",
        "set datafile missing NaN",
        f"set xlabel '{x_label}'",
        "set ylabel 'Spectral efficiency (bps/Hz)'",
        "set key top left",
        "set grid",
        "set format y '%.2e'",
    ]
    plots = []
    for scheme, title in (("BD_RIS", "BD-RIS"), ("CD_RIS", "Conventional RIS")):
        sel = f"(strcol(3) eq '{scheme}' ? ${x_col} : NaN)"
        plots.append(f"'{aggregate_csv_name}' every ::1 using {sel}:4:5 "
                     f"with yerrorlines title '{title}'")
    lines.append("plot " + ", \\\n     ".join(plots))
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    return path
