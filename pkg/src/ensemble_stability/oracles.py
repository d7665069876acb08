"""Brute-force reference implementations used only for validation.

Nothing here reuses the bit-indexed kernels of the main path: operators are
built from Kronecker products of 2x2 Pauli matrices, evolution is a Taylor
series, and posteriors are computed on dense site-basis density matrices.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .chain import ChainSpec
from .ensemble import EnergyDistribution
from .spectral import EigenDecomposition

ORACLE_MAX_SPINS = 6

_PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class OracleReport:
    quantity: str
    max_deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.quantity}: max deviation {self.max_deviation:.3e} (tol {self.tolerance:.1e})"


def _embed(n_spins: int, ops: dict[int, np.ndarray]) -> np.ndarray:
    # site i is bit i (little-endian), so site 0 is the rightmost Kronecker factor
    factors = [ops.get(site, _PAULI["i"]) for site in reversed(range(n_spins))]
    return reduce(np.kron, factors)


def kron_hamiltonian(spec: ChainSpec) -> np.ndarray:
    n = spec.n_spins
    h = np.zeros((1 << n, 1 << n), dtype=complex)
    for coupling, label in zip(spec.couplings, "xyz"):
        s = 0.5 * _PAULI[label]
        for i in range(n):
            h += coupling * _embed(n, {i: s, (i + 1) % n: s})
    return h


def kron_projector(n_spins: int, site: int, axis: Sequence[float], outcome: float) -> np.ndarray:
    nx, ny, nz = axis
    sigma_n = nx * _PAULI["x"] + ny * _PAULI["y"] + nz * _PAULI["z"]
    local = 0.5 * (_PAULI["i"] + 2.0 * outcome * sigma_n)
    return _embed(n_spins, {site: local})


def taylor_propagator(h: np.ndarray, t: float, tol: float = 1e-15, max_terms: int = 10_000) -> np.ndarray:
    """exp(-iHt) by a truncated Taylor series with scaling and squaring."""
    h = np.asarray(h, dtype=complex)
    dim = h.shape[0]
    a = -1j * t * h
    norm = np.linalg.norm(a, 1)
    squarings = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    a = a / (2 ** squarings)
    u = np.eye(dim, dtype=complex)
    term = np.eye(dim, dtype=complex)
    for m in range(1, max_terms + 1):
        term = term @ a / m
        u = u + term
        if np.max(np.abs(term)) < tol:
            break
    else:
        raise RuntimeError("Taylor series did not converge")
    for _ in range(squarings):
        u = u @ u
    return u


def brute_force_posterior(dist: EnergyDistribution, eig: EigenDecomposition, events, chain: ChainSpec):
    """Posterior energy occupations and branch probability for a fixed outcome sequence.

    Returns ``(distribution, probability)``; ``events`` carry their outcomes.
    """
    n = chain.n_spins
    if n > ORACLE_MAX_SPINS:
        raise ValueError(f"oracle is limited to {ORACLE_MAX_SPINS} spins")
    h = kron_hamiltonian(chain)
    v = eig.vectors.astype(complex)
    rho = sum(p * np.outer(v[:, k], v[:, k].conj()) for k, p in enumerate(dist.weights))
    prob = 1.0
    for ev in events:
        u = taylor_propagator(h, ev.delay)
        rho = u @ rho @ u.conj().T
        proj = kron_projector(n, ev.site, ev.axis, ev.outcome)
        rho = proj @ rho @ proj
        p_outcome = np.trace(rho).real
        prob *= p_outcome
        rho = rho / p_outcome
    occ = np.array([(v[:, k].conj() @ rho @ v[:, k]).real for k in range(eig.dimension)])
    return EnergyDistribution.normalized(occ), prob


def classical_ising_spectrum(n_spins: int, j_z: float) -> np.ndarray:
    if n_spins < 3:
        raise ValueError("need at least 3 spins")
    energies = []
    for signs in itertools.product((1, -1), repeat=n_spins):
        bonds = sum(signs[i] * signs[(i + 1) % n_spins] for i in range(n_spins))
        energies.append(0.25 * j_z * bonds)
    return np.sort(np.array(energies, dtype=float))


def run_validation(seed: int = 0) -> list[OracleReport]:
    """Cross-check the main path against the oracles on small chains."""
    from .chain import build_hamiltonian
    from .ensemble import EnsembleSpec, mixture_weights
    from .measurement import (
        ProtocolSpec,
        QuantumState,
        collapse,
        draw_protocol,
        energy_distribution,
        free_evolve,
        initialize_state,
        outcome_probability,
    )
    from .spectral import diagonalize

    rng = np.random.default_rng(seed)
    reports = []

    dev = 0.0
    for n in range(3, 11):
        eig = diagonalize(build_hamiltonian(ChainSpec(n, (0.0, 0.0, 1.0))))
        dev = max(dev, np.max(np.abs(eig.energies - classical_ising_spectrum(n, 1.0))))
    reports.append(OracleReport("Ising spectrum vs enumeration, N=3..10", float(dev), 1e-10))

    chain = ChainSpec(4)
    h_bits = build_hamiltonian(chain)
    reports.append(OracleReport("bit-kernel vs Kronecker Hamiltonian, N=4",
                                float(np.max(np.abs(h_bits - kron_hamiltonian(chain)))), 1e-14))

    eig = diagonalize(h_bits)
    dev = 0.0
    for t in (0.1, 1.3, 2.0):
        amps = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
        state = QuantumState("density", amps / np.linalg.norm(amps), eig)
        evolved = free_evolve(state, t).rho
        u = eig.vectors.conj().T @ taylor_propagator(kron_hamiltonian(chain), t) @ eig.vectors
        dev = max(dev, np.max(np.abs(evolved - u @ state.rho @ u.conj().T)))
    reports.append(OracleReport("free evolution vs Taylor propagator, N=4", float(dev), 1e-8))

    dist = mixture_weights(EnsembleSpec("two_peak", 0.1, -0.1), eig.energies)
    dev_w, dev_p = 0.0, 0.0
    for mode in ("nn_z", "random_site_random_axis"):
        for _ in range(6):
            events = draw_protocol(ProtocolSpec(mode, 4, axis_mode="sphere_uniform"), 4, rng)
            state = initialize_state(dist, eig, "density")
            prob = 1.0
            realized = []
            for ev in events:
                state = free_evolve(state, ev.delay)
                outcome = 0.5 if rng.random() < 0.5 else -0.5
                ev = ev.with_outcome(outcome)
                p = outcome_probability(state, ev.projector_spec())
                if p < 1e-6:
                    ev = ev.with_outcome(-outcome)
                    p = 1.0 - p
                prob *= p
                state = collapse(state, ev.projector_spec())
                realized.append(ev)
            ref, ref_prob = brute_force_posterior(dist, eig, realized, chain)
            dev_w = max(dev_w, np.max(np.abs(energy_distribution(state).weights - ref.weights)))
            dev_p = max(dev_p, abs(prob - ref_prob))
    reports.append(OracleReport("posterior occupations vs dense site-basis oracle, N=4", float(dev_w), 1e-9))
    reports.append(OracleReport("branch probabilities vs dense site-basis oracle, N=4", float(dev_p), 1e-9))
    return reports


def write_report(reports: Sequence[OracleReport], path) -> None:
    payload = [dict(asdict(r), passed=r.passed) for r in reports]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
