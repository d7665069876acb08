"""Full eigendecomposition, spectrum summaries and basis transforms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Ascending energies and eigenvector columns; site-basis psi = V @ energy-basis psi."""

    energies: np.ndarray
    vectors: np.ndarray

    @property
    def dimension(self) -> int:
        return self.energies.shape[0]

    @property
    def n_spins(self) -> int:
        return self.dimension.bit_length() - 1

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.vectors)


@dataclass(frozen=True)
class SpectrumSummary:
    e_min: float
    e_max: float
    epsilon_1: float

    @property
    def bandwidth(self) -> float:
        return self.e_max - self.e_min


@dataclass(frozen=True, eq=False)
class BinnedDensity:
    edges: np.ndarray
    values: np.ndarray

    @property
    def bin_width(self) -> float:
        return float(self.edges[1] - self.edges[0])

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def diagonalize(h: np.ndarray) -> EigenDecomposition:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    asym = np.max(np.abs(h - h.conj().T)) if h.size else 0.0
    scale = max(1.0, np.max(np.abs(h))) if h.size else 1.0
    if asym > HERMITIAN_TOL * scale:
        raise ValueError(f"matrix is not Hermitian (max |H - H^dag| = {asym:.3e})")
    energies, vectors = np.linalg.eigh(h)
    return EigenDecomposition(energies, vectors)


def spectrum_summary(eig: EigenDecomposition, n_spins: int) -> SpectrumSummary:
    e_min = float(eig.energies[0])
    e_max = float(eig.energies[-1])
    return SpectrumSummary(e_min, e_max, (e_max - e_min) / n_spins)


def energy_bin_edges(energies: np.ndarray, n_bins: int) -> np.ndarray:
    """Equal-width edges spanning [E_min, E_max]."""
    if n_bins < 2:
        raise ValueError(f"need at least 2 bins, got {n_bins}")
    e_min, e_max = float(energies[0]), float(energies[-1])
    if not e_max > e_min:
        raise ValueError("cannot bin a degenerate spectrum (E_max == E_min)")
    return np.linspace(e_min, e_max, n_bins + 1)


def bin_index(energies: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Bin of each energy; the top edge is inclusive."""
    n_bins = len(edges) - 1
    idx = np.searchsorted(edges, energies, side="right") - 1
    return np.clip(idx, 0, n_bins - 1)


def density_of_states(eig: EigenDecomposition, n_bins: int = 100) -> BinnedDensity:
    edges = energy_bin_edges(eig.energies, n_bins)
    counts = np.bincount(bin_index(eig.energies, edges), minlength=n_bins)
    return BinnedDensity(edges, counts / (edges[1] - edges[0]))


def to_energy_basis(x: np.ndarray, eig: EigenDecomposition, operator: bool = False) -> np.ndarray:
    """Site basis -> energy basis; ``operator=True`` conjugates a D x D matrix."""
    x = np.asarray(x)
    v = eig.vectors
    if x.shape[0] != eig.dimension or (operator and x.shape != (eig.dimension, eig.dimension)):
        raise ValueError(f"dimension mismatch: {x.shape} vs D={eig.dimension}")
    out = v.conj().T @ x
    return out @ v if operator else out


def to_site_basis(x: np.ndarray, eig: EigenDecomposition, operator: bool = False) -> np.ndarray:
    x = np.asarray(x)
    v = eig.vectors
    if x.shape[0] != eig.dimension or (operator and x.shape != (eig.dimension, eig.dimension)):
        raise ValueError(f"dimension mismatch: {x.shape} vs D={eig.dimension}")
    out = v @ x
    return out @ v.conj().T if operator else out
