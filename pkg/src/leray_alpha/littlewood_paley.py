"""Nonhomogeneous Littlewood-Paley blocks and Besov norms ``B^sigma_{2,r}``.

The low window ``chi`` equals 1 on ``|xi| <= 1/2`` and vanishes for
``|xi| >= 1``; block ``j >= 0`` uses ``chi(xi / 2^(j+1)) - chi(xi / 2^j)``, so
it lives in ``2^(j-1) < |xi| < 2^(j+1)``.  The windows telescope to 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .spectral_core import Grid, SpectralField, sobolev_norm

__all__ = ["smooth_step", "chi", "DyadicDecomposition", "windows", "decompose", "besov_norm",
           "block_energies", "write_blocks_csv"]


def _psi(t):
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t) -> np.ndarray:
    """C-infinity step: 1 for ``t <= 0``, 0 for ``t >= 1``."""
    t = np.asarray(t, dtype=float)
    a = _psi(1.0 - t)
    b = _psi(t)
    return a / (a + b)


def chi(r) -> np.ndarray:
    """Radial low-pass window: 1 on ``r <= 1/2``, 0 on ``r >= 1``."""
    return smooth_step(2.0 * np.asarray(r, dtype=float) - 1.0)


def _max_level(grid: Grid) -> int:
    kmax = float(np.max(grid.kmag))
    # chi(xi / 2^(J+1)) == 1 needs |xi| <= 2^J
    return max(0, int(np.ceil(np.log2(max(kmax, 1.0)))))


def windows(grid: Grid) -> dict[int, np.ndarray]:
    """Window values per mode for ``j = -1 .. J`` covering every lattice mode."""
    kmag = grid.kmag
    J = _max_level(grid)
    out = {-1: chi(kmag)}
    for j in range(0, J + 1):
        out[j] = chi(kmag / 2.0 ** (j + 1)) - chi(kmag / 2.0**j)
    return out


@dataclass
class DyadicDecomposition:
    blocks: dict[int, SpectralField]
    partition: dict[int, np.ndarray]

    def reconstruct(self) -> SpectralField:
        it = iter(self.blocks.values())
        total = next(it)
        for b in it:
            total = total + b
        return total


def decompose(f: SpectralField) -> DyadicDecomposition:
    part = windows(f.grid)
    blocks = {j: f.with_coeffs(w * f.coeffs) for j, w in part.items()}
    return DyadicDecomposition(blocks, part)


def block_energies(f: SpectralField) -> dict[int, float]:
    """``j -> ||Delta_j f||_{L^2}``."""
    return {j: sobolev_norm(b, 0.0) for j, b in decompose(f).blocks.items()}


def besov_norm(f: SpectralField, sigma: float, r) -> float:
    """``l^r`` norm over ``j`` of ``2^(j sigma) ||Delta_j f||_{L^2}``; ``r`` in {1, 2, inf}."""
    if r not in (1, 2, np.inf, float("inf"), "inf"):
        raise ValueError(f"unsupported r={r!r}; use 1, 2 or inf")
    seq = np.array([2.0 ** (j * sigma) * e for j, e in block_energies(f).items()])
    if r in (np.inf, "inf"):
        return float(seq.max(initial=0.0))
    return float(np.sum(seq**r) ** (1.0 / r))


def write_blocks_csv(f: SpectralField, sigma: float, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["j", "block_l2", "weighted_block_l2"])
        for j, e in block_energies(f).items():
            writer.writerow([j, repr(float(e)), repr(float(2.0 ** (j * sigma) * e))])
