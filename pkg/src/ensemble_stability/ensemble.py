"""Initial ensembles as eigenstate occupations, their moments and histograms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .spectral import EigenDecomposition, bin_index, energy_bin_edges

NORM_TOL = 1e-12


@dataclass(frozen=True)
class EnsembleSpec:
    """``canonical`` uses ``t1`` only; ``two_peak`` mixes canonical(t1) and canonical(t2)."""

    kind: Literal["canonical", "two_peak"] = "two_peak"
    t1: float = 0.1
    t2: float = -0.1
    mix_weight: float = 0.5

    def __post_init__(self):
        if self.kind not in ("canonical", "two_peak"):
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.t1 == 0 or (self.kind == "two_peak" and self.t2 == 0):
            raise ValueError("temperatures must be nonzero")
        if not 0.0 <= self.mix_weight <= 1.0:
            raise ValueError(f"mix_weight must lie in [0, 1], got {self.mix_weight}")


@dataclass(frozen=True, eq=False)
class EnergyDistribution:
    """Occupation p_k of each eigenstate, aligned with the ascending energies."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be one-dimensional")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if abs(w.sum() - 1.0) > NORM_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def normalized(cls, weights: np.ndarray) -> "EnergyDistribution":
        w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        return cls(w / w.sum())


@dataclass(frozen=True)
class DistributionMoments:
    """Mean, width, central moments and kurtosis; kurtosis is NaN for a zero-width distribution."""

    e_av: float
    width: float
    m2: float
    m4: float
    kurtosis: float

    @property
    def kurtosis_defined(self) -> bool:
        return bool(np.isfinite(self.kurtosis))


@dataclass(frozen=True, eq=False)
class BinnedDistribution:
    edges: np.ndarray
    masses: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def canonical_weights(temperature: float, energies: np.ndarray) -> EnergyDistribution:
    """Boltzmann occupations exp(-E/T); negative T favours the top of the band.

    Exponents are shifted by E_min (T > 0) or E_max (T < 0) so every term is <= 1.
    """
    if temperature == 0:
        raise ValueError("temperature must be nonzero")
    energies = np.asarray(energies, dtype=float)
    ref = energies.min() if temperature > 0 else energies.max()
    w = np.exp(-(energies - ref) / temperature)
    return EnergyDistribution(w / w.sum())


def mixture_weights(spec: EnsembleSpec, energies: np.ndarray) -> EnergyDistribution:
    p1 = canonical_weights(spec.t1, energies).weights
    p2 = canonical_weights(spec.t2, energies).weights
    w = spec.mix_weight * p1 + (1.0 - spec.mix_weight) * p2
    return EnergyDistribution(w / w.sum())


def ensemble_weights(spec: EnsembleSpec, energies: np.ndarray) -> EnergyDistribution:
    if spec.kind == "canonical":
        return canonical_weights(spec.t1, energies)
    return mixture_weights(spec, energies)


def moment_arrays(weights: np.ndarray, energies: np.ndarray):
    """Vectorised moments over axis 0; ``weights`` is (D,) or (D, S), normalized per column."""
    e_av = energies @ weights
    dev = energies[:, None] - e_av if weights.ndim == 2 else energies - e_av
    dev2 = dev * dev
    m2 = np.sum(weights * dev2, axis=0)
    m4 = np.sum(weights * dev2 * dev2, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        kurt = np.where(m2 > 0, m4 / np.where(m2 > 0, m2 * m2, 1.0), np.nan)
    return e_av, np.sqrt(m2), m2, m4, kurt


def moments(dist: EnergyDistribution, energies: np.ndarray) -> DistributionMoments:
    e_av, width, m2, m4, kurt = moment_arrays(dist.weights, np.asarray(energies, dtype=float))
    return DistributionMoments(float(e_av), float(width), float(m2), float(m4), float(kurt))


class Binning:
    """Precomputed equal-width binning of a fixed spectrum; maps (D,) or (D, S) weights to masses."""

    def __init__(self, energies: np.ndarray, n_bins: int):
        self.edges = energy_bin_edges(energies, n_bins)
        self.n_bins = n_bins
        self.index = bin_index(energies, self.edges)
        self._matrix = None

    def masses(self, weights: np.ndarray) -> np.ndarray:
        if weights.ndim == 1:
            return np.bincount(self.index, weights=weights, minlength=self.n_bins)
        if self._matrix is None:
            m = np.zeros((self.n_bins, self.index.shape[0]))
            m[self.index, np.arange(self.index.shape[0])] = 1.0
            self._matrix = m
        return self._matrix @ weights


def bin_distribution(dist: EnergyDistribution, energies: np.ndarray, n_bins: int = 100) -> BinnedDistribution:
    binning = Binning(np.asarray(energies, dtype=float), n_bins)
    return BinnedDistribution(binning.edges, binning.masses(dist.weights))


def nn_zz_correlation(dist: EnergyDistribution, eig: EigenDecomposition) -> float:
    """Ensemble average of S^z_i S^z_{i+1}, averaged over the bonds of the ring."""
    n = eig.n_spins
    idx = np.arange(eig.dimension)
    zz = np.zeros(eig.dimension)
    for i in range(n):
        bi = (idx >> i) & 1
        bj = (idx >> ((i + 1) % n)) & 1
        zz += np.where(bi == bj, 0.25, -0.25)
    zz /= n
    per_state = np.einsum("ik,i,ik->k", eig.vectors.conj(), zz, eig.vectors).real
    return float(per_state @ dist.weights)
