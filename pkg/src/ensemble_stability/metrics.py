"""Stability measures comparing post-measurement energy distributions with the initial one."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ensemble import (
    BinnedDistribution,
    Binning,
    DistributionMoments,
    EnergyDistribution,
    moment_arrays,
    moments,
)
from .spectral import SpectrumSummary

MEASURES = ("delta_g", "eav_shift", "width_shift", "kurt_shift", "heating", "broadening")


def delta_g(g_n: BinnedDistribution, g_0: BinnedDistribution) -> float:
    """L1 distance of binned masses (twice the total-variation distance), in [0, 2]."""
    if g_n.edges.shape != g_0.edges.shape or not np.array_equal(g_n.edges, g_0.edges):
        raise ValueError("distributions are binned on different edges")
    return float(np.sum(np.abs(g_n.masses - g_0.masses)))


def _require_width(m_0: DistributionMoments):
    if not m_0.width > 0:
        raise ValueError("initial distribution has zero width")


def eav_shift(m_n: DistributionMoments, m_0: DistributionMoments) -> float:
    _require_width(m_0)
    return abs(m_n.e_av - m_0.e_av) / m_0.width


def width_shift(m_n: DistributionMoments, m_0: DistributionMoments) -> float:
    _require_width(m_0)
    return abs(m_n.width / m_0.width - 1.0)


def kurt_shift(m_n: DistributionMoments, m_0: DistributionMoments) -> float:
    """|kurt(n) - kurt(0)|; NaN when either kurtosis is undefined."""
    if not (m_n.kurtosis_defined and m_0.kurtosis_defined):
        return math.nan
    return abs(m_n.kurtosis - m_0.kurtosis)


def heating_broadening(m_n: DistributionMoments, m_0: DistributionMoments,
                       summary: SpectrumSummary) -> tuple[float, float]:
    band = summary.e_max - summary.e_min
    if not band > 0:
        raise ValueError("degenerate spectrum: E_max == E_min")
    return abs(m_n.e_av - m_0.e_av) / band, abs(m_n.width - m_0.width) / band


class MeasureKernel:
    """All six measures for many distributions at once against a fixed initial one.

    ``evaluate`` accepts occupations of shape (D,) or (D, S) and returns a
    dict of arrays with shape () or (S,).
    """

    def __init__(self, initial: EnergyDistribution, energies: np.ndarray, n_bins: int = 100):
        self.energies = np.asarray(energies, dtype=float)
        self.binning = Binning(self.energies, n_bins)
        self.band = float(self.energies[-1] - self.energies[0])
        self.initial_masses = self.binning.masses(initial.weights)
        self.m0 = moments(initial, self.energies)
        if not self.m0.width > 0:
            raise ValueError("initial distribution has zero width")

    def delta_g(self, occ: np.ndarray) -> np.ndarray:
        masses = self.binning.masses(occ)
        ref = self.initial_masses if occ.ndim == 1 else self.initial_masses[:, None]
        return np.sum(np.abs(masses - ref), axis=0)

    def evaluate(self, occ: np.ndarray) -> dict[str, np.ndarray]:
        e_av, width, _, _, kurt = moment_arrays(occ, self.energies)
        m0 = self.m0
        return {
            "delta_g": self.delta_g(occ),
            "eav_shift": np.abs(e_av - m0.e_av) / m0.width,
            "width_shift": np.abs(width / m0.width - 1.0),
            "kurt_shift": np.abs(kurt - m0.kurtosis),
            "heating": np.abs(e_av - m0.e_av) / self.band,
            "broadening": np.abs(width - m0.width) / self.band,
        }


@dataclass(frozen=True, eq=False)
class StabilityTrace:
    """Per-n measures for n = 0..n_max along one outcome sequence."""

    delta_g: np.ndarray
    eav_shift: np.ndarray
    width_shift: np.ndarray
    kurt_shift: np.ndarray
    heating: np.ndarray
    broadening: np.ndarray

    @classmethod
    def from_distributions(cls, dists: Sequence[EnergyDistribution], energies: np.ndarray,
                           n_bins: int = 100) -> "StabilityTrace":
        """``dists[0]`` is the initial distribution, ``dists[n]`` the one after n measurements."""
        kernel = MeasureKernel(dists[0], energies, n_bins)
        occ = np.column_stack([d.weights for d in dists])
        values = kernel.evaluate(occ)
        return cls(**{k: np.asarray(v) for k, v in values.items()})

    def as_dict(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in MEASURES}
