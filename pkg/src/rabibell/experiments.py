"""Experiment runners behind the command line: evolve, sweep, gate tools."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from rabibell.analytic import (
    BellLabel,
    analytic_evolve,
    analytic_propagator,
    bell_state,
    boson_vacuum,
    coherent_state,
    design_gate,
    fock_state,
    gate_overlaps,
    peak_time,
)
from rabibell.config import METRIC_COLUMNS, BosonSpec, ExperimentConfig
from rabibell.errors import ConfigError, ConvergenceError, InvalidArgumentError
from rabibell.hilbert import QUBIT_LABELS, basis_index, product_state, qubit_ket
from rabibell.metrics import ensemble_metrics
from rabibell.model import RabiParams, build_full_hamiltonian, n_levels
from rabibell.numeric import (
    FrameSpec,
    cutoff_convergence,
    eigendecompose,
    propagate,
    required_cutoff,
    trajectory_to_frame,
)

MAX_AUTO_CUTOFF = 256
MIXTURE_WEIGHT_FLOOR = 1e-16
VERIFY_THRESHOLD = 1e-8


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)

    def column(self, name):
        i = self.columns.index(name)
        return [row[i] for row in self.rows]


def initial_qubits(label: str) -> np.ndarray:
    if label in QUBIT_LABELS:
        return qubit_ket(label)
    return bell_state(label).amplitudes


def boson_components(spec: BosonSpec, n: int):
    """Pure-state decomposition ``[(weight, boson vector), ...]`` on ``n`` levels."""
    if spec.kind == "vacuum":
        return [(1.0, boson_vacuum(n).amplitudes)]
    if spec.kind == "fock":
        return [(1.0, fock_state(int(spec.value), n).amplitudes)]
    if spec.kind == "coherent":
        vec = coherent_state(spec.value, n).amplitudes
        return [(1.0, vec / np.linalg.norm(vec))]
    if spec.value == 0:
        return [(1.0, boson_vacuum(n).amplitudes)]
    pops = (spec.value / (1.0 + spec.value)) ** np.arange(n)
    pops /= pops.sum()
    return [(float(w), fock_state(k, n).amplitudes)
            for k, w in enumerate(pops) if w > MIXTURE_WEIGHT_FLOOR]


def auto_cutoff(cfg: ExperimentConfig, p: RabiParams) -> int:
    extent = math.sqrt(cfg.boson.mean_photons)
    sizes = []
    if cfg.engine in ("analytic", "both"):
        sizes.append(required_cutoff(cfg.reference_params(p), extent).n_max)
    if cfg.engine in ("numeric", "both"):
        # Full-Hamiltonian displacements scale with Gamma / omega.
        sizes.append(required_cutoff(p, extent, scale=p.omega).n_max)
    return max(sizes)


def _run_once(cfg, p, t_delta, n):
    delta_ref = cfg.reference_delta(p.omega1, p.omega2)
    times = np.asarray(t_delta, dtype=float) / delta_ref
    qubits = initial_qubits(cfg.qubits)
    members = [(w, product_state(qubits, b)) for w, b in boson_components(cfg.boson, n)]

    analytic = numeric = None
    if cfg.engine in ("analytic", "both"):
        ref = cfg.reference_params(p)
        analytic = [(w, analytic_evolve(psi, times, ref, delta_scale=delta_ref)) for w, psi in members]
    if cfg.engine in ("numeric", "both"):
        spec = eigendecompose(build_full_hamiltonian(p, n))
        frame = FrameSpec.rotating(p) if cfg.frame == "rotating" else FrameSpec.lab()
        numeric = [(w, trajectory_to_frame(propagate(spec, psi, times, delta_ref), frame))
                   for w, psi in members]

    main = numeric if numeric is not None else analytic
    cols = ensemble_metrics(main)
    if cfg.engine == "both":
        if len(members) != 1:
            raise ConfigError("engine 'both' needs a pure initial state")
        a, b = analytic[0][1].states, numeric[0][1].states
        cols["state_fidelity"] = np.abs(np.einsum("ti,ti->t", a.conj(), b)) ** 2

    tail = sum(w * cutoff_convergence(traj, cfg.convergence_tolerance).max_tail
               for runs in (analytic, numeric) if runs for w, traj in runs)
    report = cutoff_convergence(main[0][1], cfg.convergence_tolerance)
    return cols, tail, report


def simulate(cfg: ExperimentConfig, p: RabiParams, t_delta, cutoff=None):
    """Metric columns at the given ``t Delta`` values, with cutoff control.

    With ``cutoff == "auto"`` the cutoff grows (up to 256 levels) until
    the top-level population check passes. An explicit cutoff that fails
    the check raises :class:`ConvergenceError` carrying a recommendation.
    Returns ``(columns, n_used)``.
    """
    cutoff = cfg.cutoff if cutoff is None else cutoff
    n = auto_cutoff(cfg, p) if cutoff == "auto" else int(cutoff)
    while True:
        cols, tail, report = _run_once(cfg, p, t_delta, n)
        if tail <= cfg.convergence_tolerance:
            return cols, n
        recommended = max(report.recommended or 0, int(math.ceil(1.5 * n)))
        if cutoff != "auto" or n >= MAX_AUTO_CUTOFF:
            raise ConvergenceError(
                f"Fock cutoff {n} not converged: top-level population {tail:.3g} "
                f"> {cfg.convergence_tolerance:g}; try n_max >= {recommended}",
                recommended=recommended,
            )
        n = min(MAX_AUTO_CUTOFF, recommended)


def _selected(cfg):
    cols = [c for c in METRIC_COLUMNS if c in cfg.outputs]
    if cfg.engine == "both":
        cols.append("state_fidelity")
    return cols


def run_evolve(cfg: ExperimentConfig) -> Table:
    p = cfg.params()
    t_delta = np.linspace(0.0, cfg.t_delta_max, cfg.samples)
    cols, _ = simulate(cfg, p, t_delta)
    names = ["t_delta"] + _selected(cfg)
    digest = cfg.config_hash()
    table = Table(names + ["config_hash"])
    for i in range(t_delta.size):
        table.rows.append([float(cols[c][i]) for c in names] + [digest])
    return table


def _sweep_point(cfg, point):
    w1, w2 = point
    p = cfg.params(w1, w2)
    t_delta = [2.0 * math.pi * k for k in cfg.sweep.peaks]
    cols, _ = simulate(cfg, p, t_delta)
    return p, cols


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> Table:
    """One row per (sweep value, peak index), in sweep order."""
    if cfg.sweep is None:
        raise ConfigError("run_sweep needs a 'sweep' section")
    points = cfg.sweep_points()
    metric_names = _selected(cfg)
    digest = cfg.config_hash()
    table = Table(["omega1_over_omega", "omega2_over_omega", "peak_n", "t_delta"]
                  + metric_names + ["config_hash"])
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        results = list(pool.map(lambda pt: _sweep_point(cfg, pt), points))
    for p, cols in results:
        for i, k in enumerate(cfg.sweep.peaks):
            table.rows.append([p.omega1 / p.omega, p.omega2 / p.omega, int(k),
                               float(cols["t_delta"][i])]
                              + [float(cols[c][i]) for c in metric_names] + [digest])
    return table


def run(cfg: ExperimentConfig, threads: int = 1) -> Table:
    return run_sweep(cfg, threads) if cfg.sweep is not None else run_evolve(cfg)


# -- gate tools -------------------------------------------------------------

def run_design(gamma1, delta, n_max=1, m_max=40, gamma2_min=None, gamma2_max=None, cutoff=16) -> Table:
    """Enumerate Bell-gate designs ``(n, m)`` for fixed ``Gamma1`` and ``Delta``.

    Each row carries the smallest overlap of ``U(t_n)|Q 0>`` with the
    predicted Bell state over the four inputs and a ``verified`` flag
    (overlap >= 1 - 1e-8).
    """
    if gamma1 <= 0:
        raise ConfigError("design needs gamma1 > 0")
    if delta <= 0:
        raise ConfigError("design needs delta > 0")
    if n_max < 1 or m_max < 0:
        raise ConfigError("design needs n_max >= 1 and m_max >= 0")
    table = Table(["n", "m", "gamma1", "gamma2", "delta", "t_peak", "t_delta_peak",
                   "map_gg", "map_ge", "map_eg", "map_ee", "min_overlap", "verified"])
    for n in range(1, n_max + 1):
        for m in range(0, m_max + 1):
            try:
                d = design_gate(gamma1, delta, n, m)
            except InvalidArgumentError as exc:
                raise ConfigError(str(exc)) from exc
            if gamma2_min is not None and d.gamma2 < gamma2_min:
                continue
            if gamma2_max is not None and d.gamma2 > gamma2_max:
                continue
            worst = min(gate_overlaps(d, cutoff).values())
            table.rows.append([n, m, d.gamma1, d.gamma2, d.delta, d.t_peak, d.t_peak * d.delta]
                              + [d.bell_map[q].value for q in ("gg", "ge", "eg", "ee")]
                              + [worst, bool(worst >= 1.0 - VERIFY_THRESHOLD)])
    if not table.rows:
        raise ConfigError("no (n, m) designs within the given bounds")
    return table


def analyzer_outcomes(p: RabiParams, direction: str = "forward", cutoff=16) -> dict:
    """Evolve each Bell state (x) |0> by ``+-t_1`` and find its dominant ``|Q 0>``.

    Returns ``{label: (Q, probability)}``.
    """
    if direction not in ("forward", "backward"):
        raise ConfigError("direction must be 'forward' or 'backward'")
    n = n_levels(cutoff)
    u = analytic_propagator(peak_time(1, p.delta), p, n).entries
    if direction == "backward":
        u = u.conj().T
    vac = boson_vacuum(n).amplitudes
    out = {}
    for label in BellLabel:
        psi = u @ product_state(bell_state(label), vac).amplitudes
        probs = {q: abs(psi[basis_index(q, 0, n)]) ** 2 for q in QUBIT_LABELS}
        best = max(probs, key=probs.get)
        out[label] = (best, float(probs[best]))
    return out


def run_analyze(labels, gamma1, gamma2, delta, direction="forward", cutoff=16) -> Table:
    if delta <= 0:
        raise ConfigError("analyze needs delta > 0")
    try:
        p = RabiParams(omega=delta, gamma1=gamma1, gamma2=gamma2)
    except InvalidArgumentError as exc:
        raise ConfigError(str(exc)) from exc
    outcomes = analyzer_outcomes(p, direction, cutoff)
    distinct = len({q for q, _ in outcomes.values()}) == 4
    table = Table(["bell", "direction", "t_delta", "outcome", "outcome_n", "probability", "verified"])
    for label in labels:
        label = BellLabel(label)
        q, prob = outcomes[label]
        ok = distinct and prob >= 1.0 - VERIFY_THRESHOLD
        table.rows.append([label.value, direction, 2.0 * math.pi, q, 0, prob, bool(ok)])
    return table
