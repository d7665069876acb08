"""Ensemble states in the energy eigenbasis, free evolution and projective spin measurements.

A state stores an amplitude block ``F`` of shape (D, K) in the energy basis.

* ``density``: the K columns jointly form one mixed state, rho = F F^dag.
  Starting from diag(p) this is F = diag(sqrt(p)); positivity is automatic.
* ``typicality``: each column is an independent pure state (K = 1 for a
  single typicality vector, K > 1 for a batch of trajectories).

A single-spin projector P = |e><e|_site (x) 1 acts in the energy basis as
P~ F = W^dag (W F), where the (D/2, D) block W contracts pairs of eigenvector
rows with <e|. The complementary outcome is F - P~ F, so one measurement
with both outcomes costs two half-size matrix products.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal, Optional, Sequence

import numpy as np

from .chain import AXIS_LABELS, Axis, axis_vector
from .ensemble import EnergyDistribution
from .spectral import EigenDecomposition

PROBABILITY_FLOOR = 1e-12

Backend = Literal["density", "typicality"]


class ZeroProbabilityError(ValueError):
    """Requested outcome has Born probability below the floor."""


@dataclass(frozen=True, eq=False)
class QuantumState:
    backend: Backend
    amplitudes: np.ndarray
    eig: EigenDecomposition = field(repr=False)

    def __post_init__(self):
        if self.backend not in ("density", "typicality"):
            raise ValueError(f"unknown backend {self.backend!r}")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim == 1:
            amps = amps[:, None]
        if amps.shape[0] != self.eig.dimension:
            raise ValueError(f"amplitudes have {amps.shape[0]} rows, expected {self.eig.dimension}")
        object.__setattr__(self, "amplitudes", np.ascontiguousarray(amps))

    @classmethod
    def from_density_matrix(cls, rho: np.ndarray, eig: EigenDecomposition) -> "QuantumState":
        """Density state from an explicit energy-basis density matrix."""
        vals, vecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
        keep = vals > 0
        return cls("density", vecs[:, keep] * np.sqrt(vals[keep]), eig)

    @property
    def n_members(self) -> int:
        return 1 if self.backend == "density" else self.amplitudes.shape[1]

    @property
    def rho(self) -> np.ndarray:
        if self.backend == "typicality" and self.n_members != 1:
            raise ValueError("rho of a trajectory batch is not a single state")
        f = self.amplitudes
        return f @ f.conj().T

    @property
    def psi(self) -> np.ndarray:
        if self.backend != "typicality" or self.n_members != 1:
            raise ValueError("psi is defined for a single typicality state only")
        return self.amplitudes[:, 0]

    def norms(self) -> np.ndarray | float:
        """Trace (density) or squared norm per member (typicality)."""
        sq = np.sum(np.abs(self.amplitudes) ** 2, axis=0)
        if self.backend == "density":
            return float(sq.sum())
        return sq

    def occupations(self) -> np.ndarray:
        """Energy-basis occupations: (D,) for density, (D, K) for typicality."""
        sq = np.abs(self.amplitudes) ** 2
        if self.backend == "density":
            occ = sq.sum(axis=1)
            return occ / occ.sum()
        return sq / sq.sum(axis=0)


@dataclass(frozen=True)
class ProjectorSpec:
    site: int
    axis: Axis
    outcome: float

    def __post_init__(self):
        if self.outcome not in (0.5, -0.5):
            raise ValueError(f"outcome must be +1/2 or -1/2, got {self.outcome!r}")


@dataclass(frozen=True, eq=False)
class Projector:
    """P = 1/2 + outcome * 2 (n . S_site), i.e. |e><e| on one site."""

    n_spins: int
    site: int
    axis: tuple[float, float, float]
    outcome: float
    eigvec: np.ndarray = field(repr=False)

    def _pairs(self):
        idx = np.arange(1 << self.n_spins)
        up = idx[((idx >> self.site) & 1) == 0]
        return up, up | (1 << self.site)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Site-basis action in O(D) per column."""
        x = np.asarray(x)
        up, down = self._pairs()
        e0, e1 = self.eigvec
        c = np.conj(e0) * x[up] + np.conj(e1) * x[down]
        out = np.zeros(x.shape, dtype=np.result_type(x, self.eigvec))
        out[up] = e0 * c
        out[down] = e1 * c
        return out

    def matrix(self) -> np.ndarray:
        return self.apply(np.eye(1 << self.n_spins, dtype=complex))

    def contraction(self, eig: EigenDecomposition) -> np.ndarray:
        """(D/2, D) block W with W[pair, k] = <e| (V[up, k], V[down, k])."""
        up, down = self._pairs()
        e0, e1 = self.eigvec
        v = eig.vectors
        if np.isrealobj(self.eigvec) and eig.is_real:
            return np.ascontiguousarray(e0 * v[up] + e1 * v[down])
        return np.ascontiguousarray(np.conj(e0) * v[up] + np.conj(e1) * v[down])


def _spin_eigvec(axis: np.ndarray, outcome: float) -> np.ndarray:
    nx, ny, nz = axis
    sigma_n = np.array([[nz, nx - 1j * ny], [nx + 1j * ny, -nz]])
    _, vecs = np.linalg.eigh(sigma_n)
    vec = vecs[:, 1] if outcome > 0 else vecs[:, 0]
    # fix the global phase so the largest component is real and positive
    k = int(np.argmax(np.abs(vec)))
    vec = vec * (np.abs(vec[k]) / vec[k])
    if np.max(np.abs(vec.imag)) < 1e-15:
        return vec.real.copy()
    return vec


def make_projector(spec: ProjectorSpec, n_spins: int) -> Projector:
    if not 0 <= spec.site < n_spins:
        raise ValueError(f"site {spec.site} out of range for {n_spins} spins")
    axis = axis_vector(spec.axis)
    return Projector(n_spins, int(spec.site), tuple(float(a) for a in axis), float(spec.outcome),
                     _spin_eigvec(axis, spec.outcome))


def _real_gemm(w: np.ndarray, amps: np.ndarray) -> np.ndarray:
    """Real matrix times complex block through the interleaved float64 view (one DGEMM)."""
    amps = np.ascontiguousarray(amps)
    return (w @ amps.view(np.float64)).view(np.complex128)


def _apply_contraction(w: np.ndarray, amps: np.ndarray) -> np.ndarray:
    """W @ amps; a complex W is split into two real products."""
    if np.isrealobj(w):
        return _real_gemm(w, amps)
    return _real_gemm(np.ascontiguousarray(w.real), amps) + 1j * _real_gemm(np.ascontiguousarray(w.imag), amps)


def _apply_adjoint(w: np.ndarray, c: np.ndarray) -> np.ndarray:
    """W^dag @ c."""
    if np.isrealobj(w):
        return _real_gemm(w.T, c)
    return _real_gemm(np.ascontiguousarray(w.real).T, c) - 1j * _real_gemm(np.ascontiguousarray(w.imag).T, c)


def initialize_state(
    dist: EnergyDistribution,
    eig: EigenDecomposition,
    backend: Backend = "density",
    rng: Optional[np.random.Generator] = None,
) -> QuantumState:
    """Diagonal ensemble diag(p) or a random-phase vector sqrt(p_k) e^{i phi_k}."""
    p = dist.weights
    if p.shape[0] != eig.dimension:
        raise ValueError("distribution does not match the spectrum dimension")
    if backend == "density":
        # zero-weight eigenstates contribute nothing to rho; dropping their columns is exact
        support = np.flatnonzero(p > 0)
        amps = np.zeros((eig.dimension, support.size), dtype=complex)
        amps[support, np.arange(support.size)] = np.sqrt(p[support])
        return QuantumState("density", amps, eig)
    if rng is None:
        rng = np.random.default_rng()
    phases = rng.uniform(0.0, 2.0 * np.pi, size=p.shape[0])
    return QuantumState("typicality", np.sqrt(p) * np.exp(1j * phases), eig)


def free_evolve(state: QuantumState, t: float) -> QuantumState:
    """Exact evolution exp(-iHt) as energy-basis phases; occupations are untouched."""
    if t < 0:
        raise ValueError(f"evolution time must be non-negative, got {t}")
    if t == 0:
        return state
    phases = np.exp(-1j * state.eig.energies * t)
    return replace(state, amplitudes=state.amplitudes * phases[:, None])


def outcome_probability(state: QuantumState, spec: ProjectorSpec | Projector):
    proj = spec if isinstance(spec, Projector) else make_projector(spec, state.eig.n_spins)
    c = _apply_contraction(proj.contraction(state.eig), state.amplitudes)
    sq = np.sum(np.abs(c) ** 2, axis=0)
    if state.backend == "density":
        return float(sq.sum())
    return float(sq[0]) if sq.size == 1 else sq


def _normalize(state: QuantumState, amps: np.ndarray, prob) -> QuantumState:
    return replace(state, amplitudes=amps / np.sqrt(prob))


def collapse(state: QuantumState, spec: ProjectorSpec | Projector,
             floor: float = PROBABILITY_FLOOR) -> QuantumState:
    """Post-measurement state P rho P / Tr(P rho P) (or P psi / |P psi|)."""
    proj = spec if isinstance(spec, Projector) else make_projector(spec, state.eig.n_spins)
    w = proj.contraction(state.eig)
    c = _apply_contraction(w, state.amplitudes)
    prob = np.sum(np.abs(c) ** 2, axis=0)
    if state.backend == "density":
        prob = prob.sum()
    if np.any(prob < floor):
        raise ZeroProbabilityError(f"outcome {proj.outcome:+} has probability below {floor}")
    return _normalize(state, _apply_adjoint(w, c), prob)


@dataclass(frozen=True, eq=False)
class Split:
    """Both outcomes of one measurement; probabilities are scalars (density) or per member."""

    prob_up: np.ndarray | float
    prob_down: np.ndarray | float
    up: QuantumState
    down: QuantumState


def split(state: QuantumState, site: int, axis: Axis, floor: float = PROBABILITY_FLOOR,
          contraction: Optional[np.ndarray] = None) -> Split:
    """Measure n . S_site and return both normalized posteriors with their Born probabilities.

    A posterior whose probability is below ``floor`` is returned unnormalized
    (effectively zero); callers must treat it as pruned.
    """
    if contraction is None:
        proj = make_projector(ProjectorSpec(site, axis, 0.5), state.eig.n_spins)
        contraction = proj.contraction(state.eig)
    amps = state.amplitudes
    c = _apply_contraction(contraction, amps)
    up_amps = _apply_adjoint(contraction, c)
    down_amps = amps - up_amps
    total = np.sum(np.abs(amps) ** 2, axis=0)
    p_up = np.sum(np.abs(c) ** 2, axis=0)
    if state.backend == "density":
        total, p_up = total.sum(), p_up.sum()
    p_up = p_up / total
    p_down = np.clip(1.0 - p_up, 0.0, 1.0)
    if state.backend == "density":
        p_up, p_down = float(p_up), float(p_down)
    up = _normalize(state, up_amps, np.where(p_up >= floor, p_up * total, 1.0))
    down = _normalize(state, down_amps, np.where(p_down >= floor, p_down * total, 1.0))
    return Split(p_up, p_down, up, down)


def energy_distribution(state: QuantumState) -> EnergyDistribution:
    if state.backend == "typicality" and state.n_members != 1:
        raise ValueError("use occupations() for a trajectory batch")
    occ = state.occupations()
    return EnergyDistribution.normalized(occ if occ.ndim == 1 else occ[:, 0])


# -- protocols -------------------------------------------------------------

ProtocolMode = Literal["random_site_random_axis", "nn_z"]
AxisMode = Literal["xyz_uniform", "sphere_uniform", "fixed"]


@dataclass(frozen=True)
class ProtocolSpec:
    mode: ProtocolMode = "nn_z"
    n_measurements: int = 6
    delay_interval: tuple[float, float] = (0.0, 2.0)
    axis_mode: AxisMode = "xyz_uniform"
    axis: Axis = "z"

    def __post_init__(self):
        if self.mode not in ("random_site_random_axis", "nn_z"):
            raise ValueError(f"unknown protocol mode {self.mode!r}")
        if self.axis_mode not in ("xyz_uniform", "sphere_uniform", "fixed"):
            raise ValueError(f"unknown axis mode {self.axis_mode!r}")
        lo, hi = self.delay_interval
        if not 0 <= lo <= hi:
            raise ValueError(f"delay interval must satisfy 0 <= lo <= hi, got {self.delay_interval}")
        if self.n_measurements < 0:
            raise ValueError("n_measurements must be non-negative")
        object.__setattr__(self, "delay_interval", (float(lo), float(hi)))


@dataclass(frozen=True)
class MeasurementEvent:
    """One measurement: ``delay`` is the free-evolution time waited before it."""

    ordinal: int
    delay: float
    site: int
    axis: tuple[float, float, float]
    outcome: Optional[float] = None

    @property
    def axis_label(self) -> str:
        for label, vec in AXIS_LABELS.items():
            if np.allclose(self.axis, vec, atol=0):
                return label
        return "({:.6g},{:.6g},{:.6g})".format(*self.axis)

    def with_outcome(self, outcome: float) -> "MeasurementEvent":
        return replace(self, outcome=outcome)

    def projector_spec(self) -> ProjectorSpec:
        if self.outcome is None:
            raise ValueError("event has no recorded outcome")
        return ProjectorSpec(self.site, self.axis, self.outcome)


def _random_axis(spec: ProtocolSpec, rng: np.random.Generator) -> tuple[float, float, float]:
    if spec.axis_mode == "fixed":
        vec = axis_vector(spec.axis)
    elif spec.axis_mode == "xyz_uniform":
        vec = axis_vector("xyz"[rng.integers(3)])
    else:
        g = rng.standard_normal(3)
        vec = g / np.linalg.norm(g)
    return tuple(float(a) for a in vec)


def draw_protocol(spec: ProtocolSpec, n_spins: int, rng: np.random.Generator) -> list[MeasurementEvent]:
    """Random measurement schedule.

    ``nn_z``: odd-numbered measurements pick a uniform site, even-numbered ones
    a left or right neighbour (probability 1/2 each) of the previous site;
    all along z. Every measurement is preceded by a uniform random delay.
    """
    lo, hi = spec.delay_interval
    events: list[MeasurementEvent] = []
    for ordinal in range(1, spec.n_measurements + 1):
        delay = float(rng.uniform(lo, hi))
        if spec.mode == "nn_z":
            if ordinal % 2 == 1:
                site = int(rng.integers(n_spins))
            else:
                step = 1 if rng.random() < 0.5 else -1
                site = (events[-1].site + step) % n_spins
            axis = tuple(AXIS_LABELS["z"])
        else:
            site = int(rng.integers(n_spins))
            axis = _random_axis(spec, rng)
        events.append(MeasurementEvent(ordinal, delay, site, axis))
    return events


def contractions_for(events: Sequence[MeasurementEvent], eig: EigenDecomposition) -> list[np.ndarray]:
    """Outcome-up contraction blocks for each event of a schedule."""
    cache: dict = {}
    out = []
    for ev in events:
        key = (ev.site, ev.axis)
        if key not in cache:
            proj = make_projector(ProjectorSpec(ev.site, ev.axis, 0.5), eig.n_spins)
            cache[key] = proj.contraction(eig)
        out.append(cache[key])
    return out
