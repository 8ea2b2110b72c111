"""Seeded parameter sweeps, aggregation and result emission."""

from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..flowcore import map_network
from ..gateway import ActionValue, ContextDb, FeatureFilter, Gateway, readings_for, write_actions_csv
from ..seeding import derive_seed, make_rng
from ..simengine import SimConfig, run_transmission
from ..verifier import (
    PROPERTIES,
    allocation_coverage,
    build_reference_model,
    check_response,
    enumerate_states,
    mutate,
    replay,
)
from .specfile import ExperimentSpec

log = logging.getLogger(__name__)

RESULT_COLUMNS = (
    "scenario", "group", "sweep_name", "sweep_value", "runs",
    "reachability_mean", "reachability_std",
    "packets_mean", "packets_std",
    "simtime_mean", "simtime_std",
    "throughput_mean", "throughput_std",
    "energy_mean", "energy_std",
    "collisions_mean",
)

_METRICS = ("reachability", "packets", "simtime", "throughput", "energy", "collisions")


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    group: int
    sweep_name: str
    sweep_value: float
    runs: int
    mean: dict[str, float]
    std: dict[str, float]
    failures: int = 0

    def as_csv(self) -> list[str]:
        cells = [self.scenario, str(self.group), self.sweep_name, _num(self.sweep_value), str(self.runs)]
        for m in _METRICS[:-1]:
            cells += [_num(self.mean[m]), _num(self.std[m])]
        cells.append(_num(self.mean["collisions"]))
        return cells


def _num(v: float) -> str:
    # repr round-trips; integral floats print without a trailing .0 mess
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def run_seed(spec: ExperimentSpec, sweep_value: float, group: int, run: int) -> int:
    return derive_seed(spec.base_seed, spec.sweep_kind, float(sweep_value), group, run)


def placement_seed(spec: ExperimentSpec, run: int) -> int:
    """Layout seed shared by every sweep point and group of one run index."""
    return derive_seed(spec.base_seed, "placement", run)


def config_for(spec: ExperimentSpec, sweep_value: float, group: int, run: int) -> SimConfig:
    n, side, radio = spec.n_sensors, spec.side, spec.radio
    if spec.sweep_kind == "tx_power":
        radio = radio.replace(tx_power_dbm=float(sweep_value))
    elif spec.sweep_kind == "side":
        side = float(sweep_value)
    elif spec.sweep_kind == "nodes":
        n = int(sweep_value)
    else:
        n = int(round(sweep_value * side * side))
    return SimConfig(
        scenario=spec.scenario,
        group=group,
        n_sensors=n,
        side=side,
        radio=radio,
        slot_s=spec.slot_s,
        seed=run_seed(spec, sweep_value, group, run),
        placement_seed=placement_seed(spec, run),
        n_networks=spec.n_networks,
        traffic=spec.traffic,
        acks=spec.acks,
        destructive_collisions=spec.destructive_collisions,
    )


@dataclass
class _CellResult:
    samples: list[tuple[float, ...]] = field(default_factory=list)
    failures: int = 0
    actions: list[tuple[ActionValue, int]] = field(default_factory=list)


def _run_cell(spec: ExperimentSpec, sweep_value: float, group: int) -> _CellResult:
    out = _CellResult()
    for run in range(spec.runs):
        cfg = config_for(spec, sweep_value, group, run)
        try:
            topo = cfg.build_topology()
            cmap = map_network(topo, cfg.radio, cfg.merge_set)
            m = run_transmission(cfg, cmap)
        except Exception:
            log.exception("run failed: value=%s group=%s run=%s", sweep_value, group, run)
            out.failures += 1
            continue
        out.samples.append(
            (m.reachability, m.avg_packets, m.sim_time_s, m.throughput_bps, m.energy_j, float(m.collisions))
        )
        if spec.gateway is not None and m.trace is not None:
            gw = Gateway(
                FeatureFilter(spec.gateway.accepted_ids),
                ContextDb.uniform(spec.gateway.features, spec.gateway.threshold),
            )
            records = readings_for(m.trace.delivered, make_rng(cfg.seed), spec.gateway.features)
            out.actions += [(a, cfg.seed) for a in gw.process(records)]
    return out


def _check_seeds(spec: ExperimentSpec) -> None:
    seeds = {}
    for v in spec.sweep_values:
        for g in spec.groups:
            for r in range(spec.runs):
                s = run_seed(spec, v, g, r)
                if s in seeds:
                    raise RuntimeError(f"seed collision between {seeds[s]} and {(v, g, r)}")
                seeds[s] = (v, g, r)


@dataclass
class ExperimentResult:
    rows: list[ResultRow]
    actions: list[tuple[ActionValue, int]] = field(default_factory=list)


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> ExperimentResult:
    _check_seeds(spec)
    cells = [(v, g) for g in spec.groups for v in spec.sweep_values]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, [spec] * len(cells), *zip(*cells)))
    else:
        results = [_run_cell(spec, v, g) for v, g in cells]

    rows, actions = [], []
    for (v, g), res in zip(cells, results):
        arr = np.array(res.samples, dtype=float).reshape(-1, len(_METRICS))
        k = len(arr)
        mean = {m: float(arr[:, i].mean()) if k else float("nan") for i, m in enumerate(_METRICS)}
        std = {m: float(arr[:, i].std(ddof=1)) if k > 1 else 0.0 for i, m in enumerate(_METRICS)}
        rows.append(ResultRow(spec.scenario.value, g, spec.sweep_kind, float(v), k, mean, std, res.failures))
        actions += res.actions
    rows.sort(key=lambda r: (r.group, r.sweep_value))
    return ExperimentResult(rows, actions)


def results_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for row in sorted(rows, key=lambda r: (r.group, r.sweep_value)):
        writer.writerow(row.as_csv())
    return buf.getvalue()


def results_table(rows: list[ResultRow]) -> str:
    header = ["group", "sweep", "runs", "reach%", "packets", "simtime_s", "thr_kbps", "energy_J", "collisions"]
    body = []
    for r in sorted(rows, key=lambda r: (r.group, r.sweep_value)):
        body.append([
            str(r.group), f"{r.sweep_value:g}", str(r.runs),
            f"{100 * r.mean['reachability']:.2f}", f"{r.mean['packets']:.3f}",
            f"{r.mean['simtime']:.4f}", f"{r.mean['throughput'] / 1e3:.2f}",
            f"{r.mean['energy']:.5f}", f"{r.mean['collisions']:.1f}",
        ])
    widths = [max(len(h), *(len(b[i]) for b in body)) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(b, widths)) for b in body]
    return "\n".join(lines) + "\n"


def emit_results(rows: list[ResultRow], out_dir: str | Path, actions=None) -> list[Path]:
    """Write ``results.csv`` and ``results.txt`` (plus ``actions.csv`` when given)."""
    if not rows:
        raise ValueError("no result rows to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    csv_path = out / "results.csv"
    csv_path.write_text(results_csv(rows), encoding="utf-8")
    written.append(csv_path)
    txt_path = out / "results.txt"
    txt_path.write_text(results_table(rows), encoding="utf-8")
    written.append(txt_path)
    if actions is not None:
        act_path = out / "actions.csv"
        with act_path.open("w", encoding="utf-8", newline="") as fh:
            write_actions_csv(fh, [], 0, header=True)
            for action, seed in actions:
                write_actions_csv(fh, [action], seed, header=False)
        written.append(act_path)
    return written


def verify_workflow(n_tasks: int, mutant: str | None = None) -> tuple[str, bool]:
    """Check LTL1-3 on the workflow model; returns (report, all_hold)."""
    model = build_reference_model(n_tasks)
    if mutant:
        model = mutate(model, mutant)
    reach = enumerate_states(model)
    lines = [
        f"workflow model: n_tasks={n_tasks}" + (f" mutant={mutant}" if mutant else ""),
        f"states: {len(model.states)} ({len(reach)} reachable), transitions: {len(model.transitions)}",
        "allocation coverage: "
        + ", ".join(f"F{i}={'yes' if ok else 'no'}" for i, ok in allocation_coverage(model).items()),
    ]
    all_hold = True
    for prop in PROPERTIES:
        cex = check_response(model, prop)
        if cex is None:
            lines.append(f"{prop.name} {prop.text}: holds")
            continue
        all_hold = False
        lines.append(f"{prop.name} {prop.text}: VIOLATED (witness replays: {replay(model, cex)})")
        lines += ["  " + ln for ln in cex.format().rstrip("\n").splitlines()]
    return "\n".join(lines) + "\n", all_hold


def default_jobs(cli_jobs: int | None) -> int:
    env = os.environ.get("FLOWSIM_JOBS")
    if env:
        return max(1, int(env))
    return max(1, cli_jobs or 1)
