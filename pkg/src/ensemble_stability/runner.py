"""Experiment orchestration: heating (canonical ensemble) and stability (two-peak mixture) runs.

The parallel unit is one protocol draw. Within a draw, outcome averaging is
either exact (depth-first enumeration of all outcome branches, weighted by
Born probabilities) or Monte Carlo (sampled outcome paths). Typicality
trajectories of a draw are processed as one batch of columns. Every random
stream is derived from (master_seed, draw, index), so results do not depend
on the number of workers.
"""

from __future__ import annotations

import csv
import json
import multiprocessing
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator, Literal, Optional, Sequence

import numpy as np

from . import __version__
from .chain import DEFAULT_MAX_SPINS, ChainSpec, build_hamiltonian
from .ensemble import EnergyDistribution, EnsembleSpec, ensemble_weights
from .measurement import (
    PROBABILITY_FLOOR,
    MeasurementEvent,
    ProtocolSpec,
    QuantumState,
    contractions_for,
    draw_protocol,
    free_evolve,
    initialize_state,
    split,
)
from .metrics import MEASURES, MeasureKernel
from .spectral import EigenDecomposition, SpectrumSummary, diagonalize, spectrum_summary

MAX_ENUMERATED_MEASUREMENTS = 20
EVOLUTION_TOL = 1e-12
NORM_TOL = 1e-10
CONSERVATION_TOL = 1e-9
SENSITIVITY_BINS = (50, 100, 200)
SUPPRESSION_THRESHOLD = 0.8

STREAM_PROTOCOL = 0
STREAM_PHASES = 1
STREAM_OUTCOMES = 2


class InvariantViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    chain: ChainSpec
    ensemble: EnsembleSpec
    protocol: ProtocolSpec
    backend: Literal["density", "typicality"] = "density"
    outcome_mode: Literal["enumerate", "sample"] = "enumerate"
    n_protocol_draws: int = 20
    n_outcome_samples: int = 1
    n_phase_draws: int = 100
    n_bins: int = 100
    master_seed: int = 0
    output_dir: str = "results"

    def __post_init__(self):
        if self.backend not in ("density", "typicality"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.outcome_mode not in ("enumerate", "sample"):
            raise ValueError(f"unknown outcome_mode {self.outcome_mode!r}")
        for name in ("n_protocol_draws", "n_outcome_samples", "n_phase_draws"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.n_bins < 2:
            raise ValueError("n_bins must be at least 2")
        if self.outcome_mode == "enumerate" and self.protocol.n_measurements > MAX_ENUMERATED_MEASUREMENTS:
            raise ValueError(f"enumeration is capped at {MAX_ENUMERATED_MEASUREMENTS} measurements")
        if self.chain.n_spins > DEFAULT_MAX_SPINS:
            raise ValueError(f"n_spins={self.chain.n_spins} exceeds the exact-backend cap of {DEFAULT_MAX_SPINS}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["chain"]["couplings"] = list(self.chain.couplings)
        d["protocol"]["delay_interval"] = list(self.protocol.delay_interval)
        if not isinstance(self.protocol.axis, str):
            d["protocol"]["axis"] = [float(a) for a in self.protocol.axis]
        return d


def derive_seed(master_seed: int, draw_index: int, sub_index: int, stream: int = 0) -> int:
    """Child seed for one random stream; distinct index tuples give independent streams."""
    seq = np.random.SeedSequence(master_seed & (2**64 - 1), spawn_key=(stream, draw_index, sub_index))
    return int(seq.generate_state(1, np.uint64)[0])


def aggregate(samples, weights=None) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error along axis 0.

    With ``weights`` the samples are outcome branches of one draw: the result
    is the exact weighted mean and the standard error is zero. Without
    weights they are independent draws: stderr = sample std / sqrt(count).
    NaN entries are excluded.
    """
    x = np.asarray(samples, dtype=float)
    if x.shape[0] == 0:
        raise ValueError("cannot aggregate an empty sample")
    finite = np.isfinite(x)
    if weights is not None:
        w = np.asarray(weights, dtype=float).reshape((-1,) + (1,) * (x.ndim - 1))
        w = np.where(finite, w, 0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.sum(np.where(finite, x, 0.0) * w, axis=0) / np.sum(w, axis=0)
        return mean, np.zeros_like(mean)
    count = finite.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(finite, x, 0.0).sum(axis=0) / count
        dev = np.where(finite, x - mean, 0.0)
        var = (dev ** 2).sum(axis=0) / np.maximum(count - 1, 1)
        stderr = np.where(count > 1, np.sqrt(var / count), 0.0)
    return mean, stderr


# -- branch enumeration ----------------------------------------------------

@dataclass(eq=False)
class BranchRecord:
    """A node of the outcome tree; ``weight`` is the Born probability of reaching it."""

    depth: int
    outcomes: tuple[float, ...]
    weight: np.ndarray | float
    state: QuantumState


class BranchEnumerator:
    """Depth-first expansion of every +-1/2 outcome sequence of a schedule.

    Iterating yields every node (root included, depth 0). Branches whose Born
    probability falls below ``floor`` are dropped and their weight is
    accumulated in ``pruned_mass``. Free evolution and normalization
    invariants are checked on the fly.
    """

    def __init__(self, state: QuantumState, events: Sequence[MeasurementEvent],
                 floor: float = PROBABILITY_FLOOR, contractions: Optional[list] = None):
        if len(events) > MAX_ENUMERATED_MEASUREMENTS:
            raise ValueError(f"enumeration is capped at {MAX_ENUMERATED_MEASUREMENTS} measurements")
        self.state = state
        self.events = list(events)
        self.floor = floor
        self.contractions = contractions or contractions_for(self.events, state.eig)
        n = len(self.events)
        self.pruned_mass = np.zeros(n + 1) if state.backend == "density" or state.n_members == 1 \
            else np.zeros((n + 1, state.n_members))
        self.depth_weight = np.zeros_like(self.pruned_mass)
        self.max_evolution_deviation = 0.0
        self.max_norm_deviation = 0.0

    def __iter__(self) -> Iterator[BranchRecord]:
        one = 1.0 if self.state.backend == "density" or self.state.n_members == 1 \
            else np.ones(self.state.n_members)
        yield from self._expand(self.state, (), one)

    def _expand(self, state, outcomes, weight):
        depth = len(outcomes)
        self.depth_weight[depth] += weight
        yield BranchRecord(depth, outcomes, weight, state)
        if depth == len(self.events):
            return
        event = self.events[depth]
        evolved = free_evolve(state, event.delay)
        self._check_evolution(state, evolved)
        sp = split(evolved, event.site, event.axis, self.floor, self.contractions[depth])
        del state, evolved
        for outcome, prob, child in ((0.5, sp.prob_up, sp.up), (-0.5, sp.prob_down, sp.down)):
            kept = np.asarray(prob) >= self.floor
            child_weight = weight * np.where(kept, prob, 0.0)
            lost = weight * np.where(kept, 0.0, prob)
            self.pruned_mass[depth + 1:] += lost
            if not np.any(kept & (np.asarray(weight) > 0)):
                continue
            self._check_norm(child, kept)
            if np.ndim(child_weight) == 0:
                child_weight = float(child_weight)
            yield from self._expand(child, outcomes + (outcome,), child_weight)

    def _check_evolution(self, before: QuantumState, after: QuantumState):
        dev = float(np.max(np.abs(before.occupations() - after.occupations())))
        self.max_evolution_deviation = max(self.max_evolution_deviation, dev)
        if dev >= EVOLUTION_TOL:
            raise InvariantViolation(f"free evolution changed occupations by {dev:.3e}")

    def _check_norm(self, child: QuantumState, kept):
        norms = np.asarray(child.norms())
        dev = float(np.max(np.where(kept, np.abs(norms - 1.0), 0.0)))
        self.max_norm_deviation = max(self.max_norm_deviation, dev)
        if dev >= NORM_TOL:
            raise InvariantViolation(f"posterior normalization off by {dev:.3e}")

    def conservation_error(self) -> float:
        return float(np.max(np.abs(self.depth_weight + self.pruned_mass - 1.0)))


def enumerate_outcome_branches(state: QuantumState, events: Sequence[MeasurementEvent],
                               floor: float = PROBABILITY_FLOOR):
    """Leaves of the outcome tree as ``(leaves, pruned_mass)``; weights + pruned mass sum to 1."""
    enum = BranchEnumerator(state, events, floor)
    leaves = [rec for rec in enum if rec.depth == len(events)]
    err = enum.conservation_error()
    if err > CONSERVATION_TOL:
        raise InvariantViolation(f"branch weights do not sum to 1 (error {err:.3e})")
    return leaves, enum.pruned_mass[-1]


# -- per-draw work ---------------------------------------------------------

@dataclass(eq=False)
class RunContext:
    config: ExperimentConfig
    eig: EigenDecomposition
    summary: SpectrumSummary
    initial: EnergyDistribution
    kernel: MeasureKernel
    sensitivity: dict

    @classmethod
    def prepare(cls, config: ExperimentConfig) -> "RunContext":
        eig = diagonalize(build_hamiltonian(config.chain))
        initial = ensemble_weights(config.ensemble, eig.energies)
        kernel = MeasureKernel(initial, eig.energies, config.n_bins)
        sens = {b: MeasureKernel(initial, eig.energies, b) for b in SENSITIVITY_BINS}
        return cls(config, eig, spectrum_summary(eig, config.chain.n_spins), initial, kernel, sens)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.summary.e_min + self.summary.e_max)


@dataclass(eq=False)
class DrawResult:
    draw: int
    events: list
    values: dict                 # measure -> (n_max + 1,) conditional average over outcomes
    sensitivity: dict            # n_bins -> (n_max + 1,) delta_g
    max_branch_delta_g: np.ndarray
    leaves: int
    suppressed_leaves: int
    suppressed_weight: float
    pruned_mass: float
    conservation_error: float
    evolution_deviation: float
    norm_deviation: float
    undefined_kurtosis: int
    final_masses: np.ndarray
    final_outcomes: tuple


class _Accumulator:
    """Weighted per-depth sums of all measures over outcome branches of one draw.

    Each contribution is one ensemble-level energy distribution with its
    probability weight.
    """

    def __init__(self, ctx: RunContext, n_max: int):
        self.ctx = ctx
        self.n_max = n_max
        self.num = {m: np.zeros(n_max + 1) for m in MEASURES}
        self.den = {m: np.zeros(n_max + 1) for m in MEASURES}
        self.sens = {b: np.zeros(n_max + 1) for b in SENSITIVITY_BINS}
        self.sens_den = np.zeros(n_max + 1)
        self.max_dg = np.zeros(n_max + 1)
        self.undefined_kurtosis = 0
        self.leaves = 0
        self.suppressed = 0
        self.suppressed_weight = 0.0
        self.best_leaf = (-1.0, None, ())

    def add(self, depth: int, weight: float, occ: np.ndarray, outcomes=()):
        if not weight > 0:
            return
        ctx = self.ctx
        values = ctx.kernel.evaluate(occ)
        for m, v in values.items():
            v = float(v)
            if np.isfinite(v):
                self.num[m][depth] += weight * v
                self.den[m][depth] += weight
            elif m == "kurt_shift":
                self.undefined_kurtosis += 1
        for b, kern in ctx.sensitivity.items():
            self.sens[b][depth] += weight * float(kern.delta_g(occ))
        self.sens_den[depth] += weight
        self.max_dg[depth] = max(self.max_dg[depth], float(values["delta_g"]))
        if depth == self.n_max:
            below = float(occ[ctx.eig.energies < ctx.midpoint].sum())
            concentrated = max(below, 1.0 - below) >= SUPPRESSION_THRESHOLD
            self.leaves += 1
            self.suppressed += int(concentrated)
            self.suppressed_weight += weight if concentrated else 0.0
            if weight > self.best_leaf[0]:
                self.best_leaf = (weight, occ.copy(), tuple(outcomes))

    def finish(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            values = {m: self.num[m] / self.den[m] for m in MEASURES}
            sens = {b: self.sens[b] / self.sens_den for b in SENSITIVITY_BINS}
        return values, sens


def _initial_state(ctx: RunContext, draw: int) -> QuantumState:
    cfg = ctx.config
    if cfg.backend == "density":
        return initialize_state(ctx.initial, ctx.eig, "density")
    columns = []
    for j in range(cfg.n_phase_draws):
        rng = np.random.default_rng(derive_seed(cfg.master_seed, draw, j, STREAM_PHASES))
        columns.append(initialize_state(ctx.initial, ctx.eig, "typicality", rng).amplitudes[:, 0])
    amps = np.column_stack(columns)
    if cfg.outcome_mode == "sample" and cfg.n_outcome_samples > 1:
        amps = np.repeat(amps, cfg.n_outcome_samples, axis=1)
    return QuantumState("typicality", amps, ctx.eig)


def _ensemble_estimate(occ: np.ndarray, weights: np.ndarray) -> tuple[float, np.ndarray]:
    """Branch weight and branch-conditional occupations from typicality members.

    Averaging member occupations with their Born weights reproduces, in
    expectation over the random phases, the branch of the mixed ensemble.
    """
    total = float(weights.sum())
    return total / weights.shape[0], (occ @ weights) / total


def run_draw(ctx: RunContext, draw: int) -> DrawResult:
    cfg = ctx.config
    n_max = cfg.protocol.n_measurements
    rng = np.random.default_rng(derive_seed(cfg.master_seed, draw, 0, STREAM_PROTOCOL))
    events = draw_protocol(cfg.protocol, cfg.chain.n_spins, rng)
    state = _initial_state(ctx, draw)
    contractions = contractions_for(events, ctx.eig)
    acc = _Accumulator(ctx, n_max)
    conservation, pruned = 0.0, 0.0

    if cfg.outcome_mode == "enumerate":
        enum = BranchEnumerator(state, events, contractions=contractions)
        for rec in enum:
            if state.backend == "density":
                acc.add(rec.depth, rec.weight, rec.state.occupations(), rec.outcomes)
            else:
                weight, occ = _ensemble_estimate(rec.state.occupations(), np.asarray(rec.weight))
                acc.add(rec.depth, weight, occ, rec.outcomes)
        conservation = enum.conservation_error()
        if conservation > CONSERVATION_TOL:
            raise InvariantViolation(f"branch weights + pruned mass off by {conservation:.3e}")
        pruned = float(np.max(enum.pruned_mass[-1]))
        evo_dev, norm_dev = enum.max_evolution_deviation, enum.max_norm_deviation
    elif state.backend == "density":
        evo_dev = norm_dev = 0.0
        weight = 1.0 / cfg.n_outcome_samples
        for m in range(cfg.n_outcome_samples):
            out_rng = np.random.default_rng(derive_seed(cfg.master_seed, draw, m, STREAM_OUTCOMES))
            path, d_evo, d_norm = _sample_path(state, events, contractions, out_rng)
            evo_dev, norm_dev = max(evo_dev, d_evo), max(norm_dev, d_norm)
            for depth, (outcomes, s) in enumerate(path):
                acc.add(depth, weight, s.occupations(), outcomes[0])
    else:
        out_rng = np.random.default_rng(derive_seed(cfg.master_seed, draw, 0, STREAM_OUTCOMES))
        path, evo_dev, norm_dev = _sample_path(state, events, contractions, out_rng)
        members = state.n_members
        for depth, (outcomes, s) in enumerate(path):
            occ = s.occupations()
            # trajectories sharing an outcome prefix sample the same ensemble branch
            keys, inverse = np.unique(outcomes, axis=0, return_inverse=True)
            inverse = np.asarray(inverse).reshape(-1)
            for g, key in enumerate(keys):
                mask = (inverse == g).astype(float)
                _, g_occ = _ensemble_estimate(occ, mask)
                acc.add(depth, float(mask.sum()) / members, g_occ, tuple(float(o) for o in key))

    values, sens = acc.finish()
    _, final_occ, final_outcomes = acc.best_leaf
    final_masses = ctx.kernel.binning.masses(final_occ) if final_occ is not None \
        else np.full(cfg.n_bins, np.nan)
    return DrawResult(
        draw=draw, events=events, values=values, sensitivity=sens,
        max_branch_delta_g=acc.max_dg, leaves=acc.leaves, suppressed_leaves=acc.suppressed,
        suppressed_weight=acc.suppressed_weight, pruned_mass=pruned,
        conservation_error=conservation, evolution_deviation=evo_dev, norm_deviation=norm_dev,
        undefined_kurtosis=acc.undefined_kurtosis, final_masses=final_masses,
        final_outcomes=final_outcomes,
    )


def _sample_path(state, events, contractions, rng):
    """Born-sampled outcome path for every member.

    Returns ``[(outcomes, state)]`` for n = 0..n_max where ``outcomes`` has
    shape (members, n): each member follows its own outcome sequence.
    """
    members = state.n_members
    outcomes = np.zeros((members, 0))
    path = [(outcomes, state)]
    evo_dev = norm_dev = 0.0
    for event, w in zip(events, contractions):
        evolved = free_evolve(state, event.delay)
        dev = float(np.max(np.abs(state.occupations() - evolved.occupations())))
        evo_dev = max(evo_dev, dev)
        if dev >= EVOLUTION_TOL:
            raise InvariantViolation(f"free evolution changed occupations by {dev:.3e}")
        sp = split(evolved, event.site, event.axis, contraction=w)
        take_up = rng.random(members) < np.atleast_1d(sp.prob_up)
        if state.backend == "density":
            state = sp.up if take_up[0] else sp.down
        else:
            amps = np.where(take_up[None, :], sp.up.amplitudes, sp.down.amplitudes)
            state = QuantumState(state.backend, amps, state.eig)
        outcomes = np.column_stack([outcomes, np.where(take_up, 0.5, -0.5)])
        norm_dev = max(norm_dev, float(np.max(np.abs(np.asarray(state.norms()) - 1.0))))
        if norm_dev >= NORM_TOL:
            raise InvariantViolation(f"posterior normalization off by {norm_dev:.3e}")
        path.append((outcomes, state))
    return path, evo_dev, norm_dev


# -- orchestration ---------------------------------------------------------

_WORKER_CTX: Optional[RunContext] = None


def _worker_init(ctx):
    global _WORKER_CTX
    _WORKER_CTX = ctx


def _worker_run(draw: int) -> DrawResult:
    return run_draw(_WORKER_CTX, draw)


@dataclass(eq=False)
class RunResult:
    experiment: str
    config: ExperimentConfig
    summary: SpectrumSummary
    initial: EnergyDistribution
    edges: np.ndarray
    initial_masses: np.ndarray
    draws: list[DrawResult]
    mean: dict = field(default_factory=dict)
    stderr: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)
    sensitivity: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def diagnostics(self) -> dict:
        leaves = sum(d.leaves for d in self.draws)
        suppressed = sum(d.suppressed_leaves for d in self.draws)
        n_max = self.config.protocol.n_measurements
        return {
            "pruned_mass_max": max(d.pruned_mass for d in self.draws),
            "branch_conservation_error_max": max(d.conservation_error for d in self.draws),
            "free_evolution_deviation_max": max(d.evolution_deviation for d in self.draws),
            "normalization_deviation_max": max(d.norm_deviation for d in self.draws),
            "undefined_kurtosis_count": sum(d.undefined_kurtosis for d in self.draws),
            "max_branch_delta_g_final": max(float(d.max_branch_delta_g[n_max]) for d in self.draws),
            "draws_with_branch_delta_g_above_1": sum(
                1 for d in self.draws if d.max_branch_delta_g[n_max] > 1.0),
            "leaves": leaves,
            "suppressed_leaves": suppressed,
            "suppressed_leaf_fraction": suppressed / leaves if leaves else float("nan"),
            "suppressed_weight_fraction": float(np.mean([d.suppressed_weight for d in self.draws])),
        }


def run_experiment(config: ExperimentConfig, experiment: str = "stability", workers: int = 1) -> RunResult:
    t0 = time.perf_counter()
    ctx = RunContext.prepare(config)
    t1 = time.perf_counter()
    draws = range(config.n_protocol_draws)
    if workers > 1:
        mp = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(workers, mp_context=mp, initializer=_worker_init,
                                 initargs=(ctx,)) as pool:
            results = list(pool.map(_worker_run, draws))
    else:
        results = [run_draw(ctx, d) for d in draws]
    results.sort(key=lambda r: r.draw)
    t2 = time.perf_counter()

    out = RunResult(experiment, config, ctx.summary, ctx.initial, ctx.kernel.binning.edges,
                    ctx.kernel.initial_masses, results)
    for m in MEASURES:
        per_draw = np.array([r.values[m] for r in results])
        out.mean[m], out.stderr[m] = aggregate(per_draw)
        out.samples[m] = np.isfinite(per_draw).sum(axis=0)
    for b in SENSITIVITY_BINS:
        out.sensitivity[b] = aggregate(np.array([r.sensitivity[b] for r in results]))
    out.timings = {"setup_s": t1 - t0, "draws_s": t2 - t1, "total_s": t2 - t0}
    return out


def run_heating(config: ExperimentConfig, workers: int = 1) -> RunResult:
    if config.ensemble.kind != "canonical":
        raise ValueError("the heating experiment needs a canonical ensemble")
    if config.protocol.mode != "random_site_random_axis":
        raise ValueError("the heating experiment needs protocol mode random_site_random_axis")
    return run_experiment(config, "heating", workers)


def run_stability(config: ExperimentConfig, workers: int = 1) -> RunResult:
    if config.ensemble.kind != "two_peak":
        raise ValueError("the stability experiment needs a two_peak ensemble")
    return run_experiment(config, "stability", workers)


# -- persistence -----------------------------------------------------------

def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_spectrum(eig: EigenDecomposition, out_dir, n_bins: int = 100) -> None:
    from .spectral import density_of_states

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "spectrum.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "energy"])
        for i, e in enumerate(eig.energies):
            w.writerow([i, _fmt(e)])
    dos = density_of_states(eig, n_bins)
    with open(out / "dos.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_center", "density"])
        for c, v in zip(dos.centers, dos.values):
            w.writerow([_fmt(c), _fmt(v)])


def versions() -> dict:
    return {"ensemble_stability": __version__, "numpy": np.__version__, "python": platform.python_version()}


def write_manifest(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=float)


def write_results(result: RunResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_max = result.config.protocol.n_measurements

    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["measure", "n", "mean", "stderr", "samples"])
        for m in MEASURES:
            for n in range(n_max + 1):
                w.writerow([m, n, _fmt(result.mean[m][n]), _fmt(result.stderr[m][n]),
                            int(result.samples[m][n])])

    with open(out / "draws.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["draw", "measure", "n", "value"])
        for r in result.draws:
            for m in MEASURES:
                for n in range(n_max + 1):
                    w.writerow([r.draw, m, n, _fmt(r.values[m][n])])

    with open(out / "protocols.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["draw", "ordinal", "delay", "site", "axis"])
        for r in result.draws:
            for ev in r.events:
                w.writerow([r.draw, ev.ordinal, _fmt(ev.delay), ev.site, ev.axis_label])

    centers = 0.5 * (result.edges[1:] + result.edges[:-1])
    first = result.draws[0]
    with open(out / "gofe.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["distribution", "bin_center", "mass"])
        for c, mass in zip(centers, result.initial_masses):
            w.writerow(["initial", _fmt(c), _fmt(mass)])
        for c, mass in zip(centers, first.final_masses):
            w.writerow(["final", _fmt(c), _fmt(mass)])

    with open(out / "bins_sensitivity.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n_bins", "n", "mean", "stderr"])
        for b, (mean, err) in result.sensitivity.items():
            for n in range(n_max + 1):
                w.writerow([b, n, _fmt(mean[n]), _fmt(err[n])])

    s = result.summary
    manifest = {
        "experiment": result.experiment,
        "config": result.config.to_dict(),
        "spectrum": {"e_min": s.e_min, "e_max": s.e_max, "epsilon_1": s.epsilon_1},
        "master_seed": result.config.master_seed,
        "versions": versions(),
        "timings": result.timings,
        "diagnostics": result.diagnostics(),
        "representative_final_branch": {"draw": first.draw, "outcomes": list(first.final_outcomes)},
        "conventions": {
            "snapshot": "measures recorded immediately after each measurement, before the next delay",
            "gofe_normalization": "bin masses (probabilities), not densities",
            "averaging": "outcome average within each protocol draw, then mean and stderr over draws",
            "kurt_shift": "branches with undefined kurtosis are excluded from averages",
        },
    }
    write_manifest(out / "manifest.json", manifest)
    return out
