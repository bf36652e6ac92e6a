"""Experiment driver: repetitions, quartile bands, fast/dense comparison and theory tables."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import _rng
from ..ensembles import calibrate_parameters
from ..errors import ConfigurationError
from ..linalg import distance, l1_distance
from ..measurement import gibbs_outcome_distribution
from ..states import random_mixed_state, random_pure_state, structured_state
from ..updates import RunConfig, derive_parameters, run
from .config import ExperimentModel, RunModel, TargetModel

LOG_FLOOR = 1e-16
DISTRIBUTION_TOL = 1e-6
COMPARE_STATS_EPS = 1e-9


def make_target(spec: TargetModel, run_model: RunModel, seed: int) -> np.ndarray:
    ens = run_model.ensemble
    dim = ens.qudit_dim**ens.n_qudits
    if spec.kind == "haar_pure":
        return random_pure_state(dim, _rng.stream(seed, "target"))
    if spec.kind == "mixed":
        return random_mixed_state(dim, spec.rank, _rng.stream(seed, "target"))
    if spec.kind == "maximally_mixed":
        return np.eye(dim, dtype=np.complex128) / dim
    if ens.qudit_dim != 2:
        raise ConfigurationError(f"target {spec.kind} needs qubits")
    return structured_state(spec.kind, ens.n_qudits)


def nearest_rank(values, percent: float) -> float:
    """Nearest-rank percentile: the ``ceil(P/100 * N)``-th smallest value."""
    ordered = sorted(values)
    k = max(1, math.ceil(percent / 100.0 * len(ordered)))
    return ordered[k - 1]


def quartile_bands(curves: list[list[tuple[int, float]]]) -> list[tuple[int, float, float, float]]:
    """25/50/75 nearest-rank quartiles of ``log10`` distance on the union grid of basis counts.

    Each curve is a step function: its value at ``x`` is the last point with
    basis count ``<= x``.
    """
    if not curves:
        return []
    grid = sorted({b for c in curves for b, _ in c})
    out = []
    for x in grid:
        vals = []
        for c in curves:
            y = None
            for b, d in c:
                if b > x:
                    break
                y = d
            if y is not None:
                vals.append(math.log10(max(y, LOG_FLOOR)))
        if vals:
            out.append((x, nearest_rank(vals, 25), nearest_rank(vals, 50), nearest_rank(vals, 75)))
    return out


def plot_csv(bands) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bases_consumed", "log10_trace_distance_q25", "log10_trace_distance_q50", "log10_trace_distance_q75"])
    for row in bands:
        w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
    return buf.getvalue()


@dataclass
class VariantResult:
    name: str
    parameters: dict
    runs: list = field(default_factory=list)
    curves: list = field(default_factory=list)
    bands: list = field(default_factory=list)

    def median(self, key: str) -> float:
        vals = [r[key] if key in r else r["final"][key] for r in self.runs]
        return float(np.median(vals))


@dataclass
class ExperimentReport:
    scenario: str
    master_seed: int
    repetitions: int
    variants: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "master_seed": self.master_seed,
            "repetitions": self.repetitions,
            "variants": {
                name: {"parameters": v.parameters, "runs": v.runs, "quartiles": [list(b) for b in v.bands]}
                for name, v in self.variants.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def repetition_seed(master_seed: int, rep: int) -> int:
    return _rng.derive_seed(master_seed, "repetition", rep)


def build_run_config(name: str, run_model: RunModel, master_seed: int) -> RunConfig:
    override = None
    if run_model.calibrate:
        cfg = run_model.to_run_config()
        override = calibrate_parameters(cfg.ensemble, cfg.rank_bound, seed=_rng.derive_seed(master_seed, "calibration", name))
    cfg = run_model.to_run_config(params_override=override)
    derive_parameters(cfg)  # raises on infeasible noise budgets before any work
    return cfg


def run_experiment(model: ExperimentModel, output_dir: str | Path | None = None, write: bool = True, progress=None) -> ExperimentReport:
    """Run every variant for every repetition; optionally write traces, report and plot data.

    Files written to ``output_dir``: ``<variant>_rep<k>.csv`` (trace),
    ``<variant>_plot.csv`` (quartile bands) and ``report.json``.  With
    ``distance_rows: fresh`` distances are logged only on the last row of
    each fresh basis.
    """
    out = Path(output_dir or model.output_dir)
    report = ExperimentReport(model.scenario, model.master_seed, model.repetitions)
    arms = [(name, target, run_model, build_run_config(name, run_model, model.master_seed)) for name, target, run_model in model.resolved_variants()]
    if write:
        out.mkdir(parents=True, exist_ok=True)
    for name, target_spec, run_model, cfg in arms:
        result = VariantResult(name, derive_parameters(cfg).to_dict())
        for rep in range(model.repetitions):
            seed = repetition_seed(model.master_seed, rep)
            target = make_target(target_spec, run_model, seed)
            _, trace = run(cfg, target, seed, track_distances=True if model.distance_rows == "all" else "fresh")
            d0 = distance(np.eye(cfg.dim) / cfg.dim, target)
            curve = [(0, d0)] + trace.error_curve()
            summary = trace.summary()
            summary["repetition"] = rep
            summary["seed"] = seed
            result.runs.append(summary)
            result.curves.append(curve)
            if write:
                (out / f"{name}_rep{rep:02d}.csv").write_text(trace.to_csv())
            if progress:
                progress(name, rep, trace)
        result.bands = quartile_bands(result.curves)
        if write:
            (out / f"{name}_plot.csv").write_text(plot_csv(result.bands))
        report.variants[name] = result
    if write:
        (out / "report.json").write_text(report.to_json())
    return report


@dataclass
class CompareReport:
    """Fast-versus-dense comparison of one seeded run.

    Distribution and decision fields come from lockstep evaluation: the dense
    run drives the trajectory and the streaming path is evaluated on the same
    Hamiltonian at every step.  ``max_distance_deviation`` compares the final
    distances of two independent end-to-end runs, one per path.
    """

    passed: bool
    steps: int
    max_distribution_deviation: float
    max_l1_deviation: float
    max_distance_deviation: float
    decisions_identical: bool
    first_divergence: int | None
    tolerance: float = DISTRIBUTION_TOL
    distance_tolerance: float | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def oracle_compare(cfg: RunConfig, target: np.ndarray, seed: int, tolerance: float = DISTRIBUTION_TOL, distance_tol: float | None = None) -> CompareReport:
    """Run one seeded experiment through the dense and the streaming statistics paths.

    Two independent trajectories amplify 1e-9 differences through the
    feedback loop over thousands of steps, so per-step quantities are compared
    in lockstep on the dense trajectory.  The streaming path evaluates at
    accuracy ``1e-9`` so that deviations are resolvable at ``tolerance``.
    """
    params = derive_parameters(cfg)
    eps_p = params.eps_prime
    dist_dev, l1_dev, agree = [], [], []

    def decision(p, q):
        d = l1_distance(p, q)
        return d, (None if d <= eps_p else (p > q).tobytes())

    def shadow(ham, u, q, p):
        f = gibbs_outcome_distribution(ham, u, COMPARE_STATS_EPS) if ham.num_terms else p
        dp, kp = decision(p, q)
        df, kf = decision(f, q)
        dist_dev.append(float(np.abs(p - f).sum()))
        l1_dev.append(abs(dp - df))
        agree.append(kp == kf)

    _, dense = run(replace(cfg, stats_path="dense"), target, seed, track_distances="fresh", shadow=shadow)
    _, fast = run(replace(cfg, stats_path="fast", stats_eps=COMPARE_STATS_EPS), target, seed, track_distances="fresh")
    distance_tol = cfg.eps if distance_tol is None else distance_tol
    gap = abs(dense.final["trace_distance"] - fast.final["trace_distance"])
    first = next((k for k, (dv, ok) in enumerate(zip(dist_dev, agree)) if dv > tolerance or not ok), None)
    max_dev = max(dist_dev, default=0.0)
    same = all(agree)
    return CompareReport(
        passed=same and max_dev <= tolerance and gap <= distance_tol,
        steps=len(dist_dev),
        max_distribution_deviation=max_dev,
        max_l1_deviation=max(l1_dev, default=0.0),
        max_distance_deviation=gap,
        decisions_identical=same,
        first_divergence=first,
        tolerance=tolerance,
        distance_tolerance=distance_tol,
    )


def theory_table(cfg: RunConfig, measured: dict | None = None) -> dict:
    """Predicted resources for the configured ensemble, dimension, accuracy and confidence."""
    p = derive_parameters(cfg)
    predicted_m = p.t_bound * p.control_loop
    shots = p.shots or math.ceil(cfg.dim / p.eps_prime**2)
    row = {
        "ensemble": cfg.ensemble.family,
        "dim": cfg.dim,
        "rank_bound": cfg.rank_bound,
        "eps": cfg.eps,
        "delta": cfg.delta,
        "accuracy_mode": cfg.accuracy_mode,
        "theta": p.theta,
        "tau": p.tau,
        "eps_prime": p.eps_prime,
        "eta_policy": "||p-q||_1/8" if cfg.step_policy == "adaptive" else "eps'/8",
        "step_cap": p.step_cap,
        "T_max": p.t_bound,
        "L": p.control_loop,
        "predicted_M": predicted_m,
        "shots_per_basis": shots,
        "predicted_N": predicted_m * shots,
    }
    if measured:
        row["measured_M"] = measured.get("bases_consumed")
        row["measured_N"] = measured.get("shots_consumed")
    return row


def format_table(rows: list[dict]) -> str:
    if not rows:
        return ""
    keys = list(rows[0].keys())
    lines = ["\t".join(keys)]
    for r in rows:
        lines.append("\t".join("" if r.get(k) is None else (f"{r[k]:.6g}" if isinstance(r.get(k), float) else str(r[k])) for k in keys))
    return "\n".join(lines)
