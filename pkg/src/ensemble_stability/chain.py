"""Periodic spin-1/2 XYZ chain in the computational basis.

Basis convention, shared by every module: site ``i`` is bit ``i`` of the basis
index (little-endian), bit value 0 is spin up (m_z = +1/2), bit value 1 is
spin down. Spin operators are S = sigma / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

DEFAULT_COUPLINGS = (-0.47, 0.37, 0.79)
DEFAULT_MAX_SPINS = 14

AXIS_LABELS = {
    "x": (1.0, 0.0, 0.0),
    "y": (0.0, 1.0, 0.0),
    "z": (0.0, 0.0, 1.0),
}

Axis = Union[str, Sequence[float]]


@dataclass(frozen=True)
class ChainSpec:
    n_spins: int
    couplings: tuple[float, float, float] = DEFAULT_COUPLINGS

    def __post_init__(self):
        if int(self.n_spins) != self.n_spins:
            raise ValueError(f"n_spins must be an integer, got {self.n_spins!r}")
        if self.n_spins < 3:
            raise ValueError(
                f"n_spins={self.n_spins}: a periodic chain needs at least 3 sites "
                "(with 2 sites the wrap bond duplicates the only bond)"
            )
        couplings = tuple(float(j) for j in self.couplings)
        if len(couplings) != 3 or not all(math.isfinite(j) for j in couplings):
            raise ValueError(f"couplings must be three finite reals, got {self.couplings!r}")
        object.__setattr__(self, "n_spins", int(self.n_spins))
        object.__setattr__(self, "couplings", couplings)

    @property
    def dimension(self) -> int:
        return 1 << self.n_spins


def axis_vector(axis: Axis, tol: float = 1e-12) -> np.ndarray:
    """Unit 3-vector for an axis label ('x', 'y', 'z') or an explicit vector."""
    if isinstance(axis, str):
        try:
            return np.array(AXIS_LABELS[axis.lower()])
        except KeyError:
            raise ValueError(f"unknown axis label {axis!r}") from None
    vec = np.asarray(axis, dtype=float)
    if vec.shape != (3,) or not np.all(np.isfinite(vec)):
        raise ValueError(f"axis must be a finite 3-vector, got {axis!r}")
    if abs(np.linalg.norm(vec) - 1.0) > tol:
        raise ValueError(f"axis {axis!r} is not normalized (|n| = {np.linalg.norm(vec)!r})")
    return vec


def build_hamiltonian(spec: ChainSpec, max_spins: int = DEFAULT_MAX_SPINS) -> np.ndarray:
    """Dense Hamiltonian sum_i Jx Sx_i Sx_i+1 + Jy Sy_i Sy_i+1 + Jz Sz_i Sz_i+1.

    All matrix elements of the XYZ chain are real in the z basis, so the
    result is returned as a real symmetric float64 array.
    """
    n = spec.n_spins
    if n > max_spins:
        raise ValueError(f"n_spins={n} exceeds the dense memory cap of {max_spins}")
    jx, jy, jz = spec.couplings
    dim = 1 << n
    idx = np.arange(dim)
    h = np.zeros((dim, dim))
    diag = np.zeros(dim)
    for i in range(n):
        j = (i + 1) % n
        bi = (idx >> i) & 1
        bj = (idx >> j) & 1
        aligned = bi == bj
        diag += np.where(aligned, 0.25 * jz, -0.25 * jz)
        # Sx Sx flips both spins with amplitude 1/4; Sy Sy with +-1/4 (i*i or i*(-i)).
        flipped = idx ^ ((1 << i) | (1 << j))
        h[flipped, idx] += 0.25 * jx + np.where(aligned, -0.25 * jy, 0.25 * jy)
    h[idx, idx] += diag
    return h


@dataclass(frozen=True)
class LocalSpinOperator:
    """n . S acting on one site; applied to D-vectors (or D x K blocks) in O(D)."""

    n_spins: int
    site: int
    axis: tuple[float, float, float]

    def apply(self, vec: np.ndarray) -> np.ndarray:
        vec = np.asarray(vec)
        if vec.shape[0] != 1 << self.n_spins:
            raise ValueError(f"expected leading dimension {1 << self.n_spins}, got {vec.shape[0]}")
        nx, ny, nz = self.axis
        idx = np.arange(vec.shape[0])
        down = ((idx >> self.site) & 1).astype(float)
        sign = 1.0 - 2.0 * down  # +1 on up, -1 on down
        partner = idx ^ (1 << self.site)
        if vec.ndim > 1:
            sign = sign.reshape((-1,) + (1,) * (vec.ndim - 1))
        # sigma_x swaps partners; sigma_y swaps with -i onto up rows and +i onto down rows
        swapped = vec[partner]
        out = nz * sign * vec + nx * swapped - 1j * ny * sign * swapped
        return 0.5 * out

    def matrix(self) -> np.ndarray:
        return self.apply(np.eye(1 << self.n_spins, dtype=complex))


def local_spin_operator(n_spins: int, site: int, axis: Axis) -> LocalSpinOperator:
    if not 0 <= site < n_spins:
        raise ValueError(f"site {site} out of range for {n_spins} spins")
    return LocalSpinOperator(n_spins, int(site), tuple(float(c) for c in axis_vector(axis)))
