"""Hamiltonian Updates: parameter derivation, the update rule, the run loop and its audit."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _rng
from .ensembles import EnsembleParams, EnsembleSpec, ensemble_parameters, sample_unitary
from .errors import (
    ConfigurationError,
    InfeasibleNoiseError,
    InvalidParameterError,
    ShapeError,
)
from .hamiltonian import HamiltonianRepr
from .linalg import DENSE_CAP, distance, l1_distance
from .measurement import (
    MeasurementOracle,
    NoiseBudget,
    gibbs_outcome_distribution,
    outcome_distribution,
)

DENSE_FALLBACK = 2**8
RECYCLING = ("none", "last_step", "complete")
ACCURACY_MODES = ("theory", "direct")
STEP_POLICIES = ("adaptive", "fixed")
STATS_PATHS = ("auto", "dense", "fast")


@dataclass(frozen=True)
class RunConfig:
    """Everything a single reconstruction run needs besides the target and seed.

    Attributes:
        eps: target trace-distance accuracy.
        delta: failure probability used to size the control loop.
        rank_bound: rank bound ``r`` entering the internal accuracy.
        alpha, r_eff: if both set, the effective-rank variant of the internal
            accuracy is used instead of ``rank_bound``.
        ensemble: which bases are sampled.
        oracle: how the observed distributions are produced.
        noise_budget: declared error budgets; caps the step size.
        recycling: ``none``, ``last_step`` or ``complete``.
        accuracy_mode: ``theory`` sets ``eps' = theta * eps / sqrt(r)``;
            ``direct`` uses ``eps_prime`` (default ``eps``) as the acceptance
            threshold, as in desk-scale experiments.
        eps_prime: explicit acceptance threshold for ``direct`` mode.
        step_policy: ``adaptive`` (``eta = ||p - q||_1 / 8``) or ``fixed``
            (``eta = eps' / 8``).
        max_updates: optional cap below the theoretical ``T_max``.
        control_loop: optional override of the control-loop length ``L``.
        max_bases: optional budget of fresh bases.
        max_sweeps: cap on recycling sweeps after one fresh basis.
        params_override: replaces the worst-case ensemble constants, for
            instance with a calibrated estimate.
        stats_path: ``dense`` (exact Gibbs state), ``fast`` (streamed
            truncated exponential) or ``auto`` (dense when ``D <= 2**8``).
        shots: shots per basis in shot modes; default ``ceil(D / eps'^2)``.
        stats_eps: accuracy of the streamed statistics; default ``eps' / 8``.
        step_scale: multiplies every step size (audit test hook; keep at 1).
    """

    eps: float = 0.05
    delta: float = 0.05
    rank_bound: int = 1
    alpha: float | None = None
    r_eff: float | None = None
    ensemble: EnsembleSpec = field(default_factory=EnsembleSpec)
    oracle: MeasurementOracle = field(default_factory=MeasurementOracle)
    noise_budget: NoiseBudget = field(default_factory=NoiseBudget)
    recycling: str = "last_step"
    accuracy_mode: str = "theory"
    eps_prime: float | None = None
    step_policy: str = "adaptive"
    max_updates: int | None = None
    control_loop: int | None = None
    max_bases: int | None = None
    max_sweeps: int = 100
    params_override: EnsembleParams | None = None
    stats_path: str = "auto"
    shots: int | None = None
    stats_eps: float | None = None
    step_scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ConfigurationError(f"eps must lie in (0, 1), got {self.eps}")
        if not 0 < self.delta < 1:
            raise ConfigurationError(f"delta must lie in (0, 1), got {self.delta}")
        if self.rank_bound < 1:
            raise ConfigurationError(f"rank_bound must be >= 1, got {self.rank_bound}")
        if (self.alpha is None) != (self.r_eff is None):
            raise ConfigurationError("effective-rank mode needs both alpha and r_eff")
        if self.alpha is not None and not (0 < self.alpha < 1 and self.r_eff >= 1):
            raise ConfigurationError(f"need alpha in (0, 1) and r_eff >= 1, got {self.alpha}, {self.r_eff}")
        for name, allowed in (
            ("recycling", RECYCLING),
            ("accuracy_mode", ACCURACY_MODES),
            ("step_policy", STEP_POLICIES),
            ("stats_path", STATS_PATHS),
        ):
            if getattr(self, name) not in allowed:
                raise ConfigurationError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        if self.eps_prime is not None:
            if self.accuracy_mode != "direct":
                raise ConfigurationError("eps_prime can only be set in direct accuracy mode")
            if not 0 < self.eps_prime <= 2:
                raise ConfigurationError(f"eps_prime must lie in (0, 2], got {self.eps_prime}")
        for name in ("max_updates", "control_loop", "max_bases", "shots"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {value}")
        if self.stats_eps is not None and not 0 < self.stats_eps <= 1:
            raise ConfigurationError(f"stats_eps must lie in (0, 1], got {self.stats_eps}")
        if self.max_sweeps < 1:
            raise ConfigurationError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        if not self.step_scale > 0:
            raise ConfigurationError(f"step_scale must be positive, got {self.step_scale}")

    @property
    def dim(self) -> int:
        return self.ensemble.dim


@dataclass(frozen=True)
class InternalParams:
    eps_prime: float
    step_policy: str
    step_cap: float | None
    t_max: int
    t_bound: int
    control_loop: int
    theta: float
    tau: float
    heuristic: bool
    stats_eps: float
    shots: int | None
    warning: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def theory_iterations(dim: int, eps_prime: float) -> int:
    """``ceil(32 ln D / eps'^2)``."""
    return math.ceil(32.0 * math.log(dim) / eps_prime**2)


def control_loop_length(t_max: int, delta: float, tau: float) -> int:
    """``ceil(ln(T) ln(1/delta) / tau)``, at least 1."""
    return max(1, math.ceil(math.log(max(t_max, 1)) * math.log(1.0 / delta) / tau))


def derive_parameters(cfg: RunConfig) -> InternalParams:
    """Internal accuracy, step policy, iteration bound and control-loop size."""
    ens = cfg.params_override or ensemble_parameters(cfg.ensemble, cfg.rank_bound)
    if cfg.accuracy_mode == "direct":
        eps_prime = cfg.eps_prime or cfg.eps
    elif cfg.alpha is not None:
        a = cfg.alpha
        eps_prime = ens.theta * cfg.r_eff**-0.5 * cfg.eps ** (1.0 + a / (2.0 * (1.0 - a)))
    else:
        eps_prime = ens.theta * cfg.eps / math.sqrt(cfg.rank_bound)
    budget = cfg.noise_budget.total
    step_cap = None
    if budget > 0:
        if budget >= eps_prime:
            raise InfeasibleNoiseError(f"noise budget {budget:.4g} is not below the internal accuracy {eps_prime:.4g}")
        step_cap = (eps_prime - budget) / 2.0
    t_bound = theory_iterations(cfg.dim, eps_prime)
    t_max = min(t_bound, cfg.max_updates) if cfg.max_updates else t_bound
    loop = cfg.control_loop or control_loop_length(t_bound, cfg.delta, ens.tau)
    shots = None
    if cfg.oracle.mode != "exact":
        shots = cfg.oracle.shots or cfg.shots or math.ceil(cfg.dim / eps_prime**2)
    return InternalParams(
        eps_prime=eps_prime,
        step_policy=cfg.step_policy,
        step_cap=step_cap,
        t_max=t_max,
        t_bound=t_bound,
        control_loop=loop,
        theta=ens.theta,
        tau=ens.tau,
        heuristic=ens.heuristic,
        stats_eps=cfg.stats_eps or min(1.0, eps_prime / 8.0),
        shots=shots,
        warning=ens.warning,
    )


def mismatch_projector(p: np.ndarray, q: np.ndarray, step_cap: float | None = None):
    """Indicator of ``{i : p_i > q_i}`` and the step ``eta = ||p - q||_1 / 8`` (capped)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ShapeError(f"shape mismatch: {p.shape} vs {q.shape}")
    eta = l1_distance(p, q) / 8.0
    if step_cap is not None:
        eta = min(eta, step_cap)
    return p > q, eta


def hamiltonian_update(ham: HamiltonianRepr, u, indicator: np.ndarray, eta: float, track_dense: bool = False) -> HamiltonianRepr:
    """``H + eta U^dag P U`` as a new object."""
    if not eta > 0:
        raise InvalidParameterError(f"step size must be positive, got {eta}")
    return ham.update(u, indicator, eta, track_dense=track_dense)


def gibbs_relative_entropy(rho: np.ndarray, h: np.ndarray) -> float:
    """``S(rho || exp(-h)/Z) = -S(rho) + tr(rho h) + ln Z``, evaluated without ``log(sigma)``."""
    w = np.linalg.eigvalsh(h)
    log_z = -w.min() + math.log(float(np.exp(-(w - w.min())).sum()))
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    lam = lam[lam > 1e-14]
    neg_entropy = float((lam * np.log(lam)).sum())
    return neg_entropy + float(np.trace(rho @ h).real) + log_z


TRACE_COLUMNS = (
    "row",
    "iteration",
    "basis_id",
    "action",
    "l1_distance",
    "eta",
    "bases_consumed",
    "shots_consumed",
    "trace_distance",
    "frobenius_distance",
    "relative_entropy",
)


@dataclass
class RunTrace:
    """Per-basis log of a run plus totals.

    ``rows`` holds one dict per basis examined with keys ``TRACE_COLUMNS``.
    ``snapshots`` (optional) holds the Hamiltonian after every accepted update,
    index 0 being the initial one.
    """

    params: InternalParams
    rows: list = field(default_factory=list)
    bases_consumed: int = 0
    shots_consumed: int = 0
    updates: int = 0
    converged: bool = False
    aborted: bool = False
    stop_reason: str = ""
    wall_time: float = 0.0
    snapshots: list = field(default_factory=list)
    distributions: list = field(default_factory=list)
    noise_order: str = ""
    final: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for r in self.rows:
            writer.writerow([_fmt(r[c]) for c in TRACE_COLUMNS])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "bases_consumed": self.bases_consumed,
            "shots_consumed": self.shots_consumed,
            "updates": self.updates,
            "converged": self.converged,
            "aborted": self.aborted,
            "stop_reason": self.stop_reason,
            "final": self.final,
            "parameters": self.params.to_dict(),
            "noise_order": self.noise_order,
            "wall_time_s": round(self.wall_time, 3),
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)

    def decisions(self) -> list:
        return [(r["basis_id"], r["action"]) for r in self.rows]

    def error_curve(self, column: str = "trace_distance") -> list:
        """``(bases_consumed, value)`` after the last row at each basis count."""
        out: dict[int, float] = {}
        for r in self.rows:
            if r[column] is not None:
                out[r["bases_consumed"]] = r[column]
        return sorted(out.items())


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


class _Stats:
    """Gibbs outcome statistics on the dense or the streaming path.

    The dense Gibbs state (and the spectrum of ``H`` behind it) is cached per
    Hamiltonian object; the streaming path only touches it for logging.
    """

    def __init__(self, dense: bool, eps: float):
        self.dense = dense
        self.eps = eps
        self._key = None
        self._spectrum = None
        self._sigma = None

    def _refresh(self, ham):
        if self._key is not ham:
            if ham.num_terms:
                w, v = np.linalg.eigh(ham.to_dense())
                weights = np.exp(-(w - w.min()))
                weights /= weights.sum()
                sigma = (v * weights) @ v.conj().T
                self._sigma = 0.5 * (sigma + sigma.conj().T)
                self._spectrum = w
            else:
                self._sigma = np.eye(ham.dim, dtype=np.complex128) / ham.dim
                self._spectrum = np.zeros(ham.dim)
            self._key = ham

    def sigma(self, ham):
        self._refresh(ham)
        return self._sigma

    def log_partition(self, ham) -> float:
        self._refresh(ham)
        w = self._spectrum
        return float(-w.min() + math.log(np.exp(-(w - w.min())).sum()))

    def __call__(self, ham, u):
        if self.dense:
            return outcome_distribution(self.sigma(ham), u)
        return gibbs_outcome_distribution(ham, u, self.eps)


def run(cfg: RunConfig, target: np.ndarray, seed: int, keep_snapshots: bool = False, track_distances: bool | str = True, record_distributions: bool = False, shadow=None):
    """Reconstruct ``target`` from simulated basis measurements.

    Returns ``(ham, trace)``.  The run stops when ``L`` consecutive fresh
    bases pass, when the basis budget is spent, or at ``T_max`` updates (then
    ``trace.aborted`` is set and the last iterate is returned).

    ``track_distances`` logs distances to the target on every row (``True``),
    only on the last row of each fresh basis (``"fresh"``, enough for error
    curves at a fraction of the cost) or never (``False``).
    """
    t0 = time.perf_counter()
    params = derive_parameters(cfg)
    dim = cfg.dim
    target = np.asarray(target, dtype=np.complex128)
    if target.shape != (dim, dim):
        raise ShapeError(f"target has shape {target.shape}, ensemble D={dim}")
    if dim > DENSE_CAP:
        raise ConfigurationError(f"simulated measurements need D <= {DENSE_CAP}")
    dense = cfg.stats_path == "dense" or (cfg.stats_path == "auto" and dim <= DENSE_FALLBACK)
    stats = _Stats(dense, params.stats_eps)
    oracle = cfg.oracle
    prepared = oracle.prepare(target)
    trace = RunTrace(params=params, noise_order=oracle.describe())
    ham = HamiltonianRepr(dim)
    if keep_snapshots:
        trace.snapshots.append(ham)
    eps_p = params.eps_prime
    cache = {"key": None, "vals": (None, None, None)}
    lam = np.linalg.eigvalsh(target)
    lam = lam[lam > 1e-14]
    target_neg_entropy = float((lam * np.log(lam)).sum())

    if track_distances not in (True, False, "fresh"):
        raise ConfigurationError(f"track_distances must be True, False or 'fresh', got {track_distances!r}")

    def distances(h, force=False):
        if not (track_distances is True or (force and track_distances)):
            return None, None, None
        if cache["key"] is not h:
            sigma = stats.sigma(h)
            energy = float(np.vdot(h.to_dense(), target).real) if h.num_terms else 0.0
            rel = target_neg_entropy + energy + stats.log_partition(h)
            cache["vals"] = (distance(sigma, target), distance(sigma, target, "frobenius"), rel)
            cache["key"] = h
        return cache["vals"]

    def log(basis_id, action, d, eta):
        td, fd, rel = distances(ham)
        trace.rows.append(
            {
                "row": len(trace.rows),
                "iteration": trace.updates,
                "basis_id": basis_id,
                "action": action,
                "l1_distance": d,
                "eta": eta,
                "bases_consumed": trace.bases_consumed,
                "shots_consumed": trace.shots_consumed,
                "trace_distance": td,
                "frobenius_distance": fd,
                "relative_entropy": rel,
            }
        )

    def check(u, q, basis_id, kind):
        """Compare one basis; update on failure.  Returns True if an update happened."""
        nonlocal ham
        p = stats(ham, u)
        if record_distributions:
            trace.distributions.append(p)
        if shadow is not None:
            shadow(ham, u, q, p)
        d = l1_distance(p, q)
        if d <= eps_p:
            log(basis_id, kind + "pass", d, 0.0)
            return False
        indicator, eta = mismatch_projector(p, q, params.step_cap)
        if cfg.step_policy == "fixed":
            eta = eps_p / 8.0 if params.step_cap is None else min(eps_p / 8.0, params.step_cap)
        eta *= cfg.step_scale
        if not indicator.any() or eta <= 0:
            log(basis_id, kind + "pass", d, 0.0)
            return False
        ham = hamiltonian_update(ham, u, indicator, eta, track_dense=dense or bool(track_distances))
        trace.updates += 1
        if keep_snapshots:
            trace.snapshots.append(ham)
        log(basis_id, kind + "update", d, eta)
        return True

    def close_episode():
        if track_distances == "fresh" and trace.rows:
            row = trace.rows[-1]
            row["trace_distance"], row["frobenius_distance"], row["relative_entropy"] = distances(ham, force=True)

    stored: deque = deque()
    streak = 0
    basis_id = 0
    while True:
        close_episode()
        if trace.updates >= params.t_max:
            trace.aborted = True
            trace.stop_reason = "iteration_cap"
            break
        if cfg.max_bases is not None and trace.bases_consumed >= cfg.max_bases:
            trace.stop_reason = "basis_budget"
            break
        u = sample_unitary(cfg.ensemble, _rng.stream(seed, "basis", basis_id))
        q = oracle.observe(prepared, u, params.shots, _rng.stream(seed, "shots", basis_id), _rng.stream(seed, "white", basis_id))
        trace.bases_consumed += 1
        trace.shots_consumed += params.shots or 0
        this_id = basis_id
        basis_id += 1
        updated = check(u, q, this_id, "")
        if cfg.recycling == "complete":
            stored.append((u, q, this_id))
        if not updated:
            streak += 1
            if streak >= params.control_loop:
                trace.converged = True
                trace.stop_reason = "control_loop_passed"
                break
            continue
        streak = 0
        if cfg.recycling == "last_step":
            while trace.updates < params.t_max and check(u, q, this_id, "recycle_"):
                pass
        elif cfg.recycling == "complete":
            for _ in range(cfg.max_sweeps):
                changed = False
                for su, sq, sid in list(stored):
                    if trace.updates >= params.t_max:
                        break
                    changed |= check(su, sq, sid, "recycle_")
                if not changed or trace.updates >= params.t_max:
                    break
    close_episode()
    trace.wall_time = time.perf_counter() - t0
    td, fd, rel = distances(ham, force=True)
    trace.final = {
        "trace_distance": td,
        "frobenius_distance": fd,
        "relative_entropy": rel,
        "trace_distance_prepared": distance(stats.sigma(ham), prepared) if track_distances else None,
        "norm_bound": ham.norm_bound,
        "terms": ham.num_terms,
    }
    if params.heuristic:
        trace.final["heuristic_parameters"] = True
    return ham, trace


@dataclass
class AuditReport:
    checked: int
    violations: list
    non_guaranteed: list
    total_drop: float
    predicted_min_drop: float

    @property
    def ok(self) -> bool:
        return not self.violations


def progress_audit(trace: RunTrace, target: np.ndarray, snapshots=None, tol: float = 1e-8) -> AuditReport:
    """Check ``S(rho||sigma_{t+1}) - S(rho||sigma_t) <= eta (2 eta - ||p - q||_1 / 2) + tol`` per update.

    Steps whose bound is not negative carry no progress guarantee and are
    listed in ``non_guaranteed``.
    """
    snaps = snapshots if snapshots is not None else trace.snapshots
    updates = [r for r in trace.rows if r["action"].endswith("update")]
    if len(snaps) != len(updates) + 1:
        raise ConfigurationError(f"need {len(updates) + 1} snapshots, got {len(snaps)}")
    dim = target.shape[0]
    ent = [gibbs_relative_entropy(target, s.to_dense() if s.num_terms else np.zeros((dim, dim))) for s in snaps]
    violations, non_guaranteed = [], []
    for k, r in enumerate(updates):
        bound = r["eta"] * (2.0 * r["eta"] - 0.5 * r["l1_distance"])
        change = ent[k + 1] - ent[k]
        if change > bound + tol:
            violations.append({"update": k, "row": r["row"], "change": change, "bound": bound})
        if bound >= 0:
            non_guaranteed.append(k)
    eps_p = trace.params.eps_prime
    return AuditReport(
        checked=len(updates),
        violations=violations,
        non_guaranteed=non_guaranteed,
        total_drop=ent[0] - ent[-1],
        predicted_min_drop=len(updates) * eps_p**2 / 32.0,
    )
