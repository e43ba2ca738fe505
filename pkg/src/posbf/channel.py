"""Clustered mmWave MIMO channels over uniform linear arrays."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ArrayGeometry:
    num_antennas: int
    element_spacing: float = 0.5  # wavelengths

    def __post_init__(self):
        if int(self.num_antennas) != self.num_antennas or self.num_antennas < 1:
            raise ValueError(f"num_antennas must be a positive integer, got {self.num_antennas}")
        if not self.element_spacing > 0:
            raise ValueError(f"element_spacing must be positive, got {self.element_spacing}")


@dataclass(frozen=True)
class ChannelConfig:
    num_clusters: int = 10
    rays_per_cluster: int = 5
    angle_spread: float = float(np.deg2rad(0.5))
    aod_mean_range: tuple[float, float] = (0.0, 2 * np.pi)
    aoa_sector_width: float = np.pi / 3
    aoa_sector_center: float = 0.0

    def __post_init__(self):
        if self.num_clusters < 1 or self.rays_per_cluster < 1:
            raise ValueError("num_clusters and rays_per_cluster must be positive")
        if not self.angle_spread > 0:
            raise ValueError(f"angle_spread must be positive, got {self.angle_spread}")
        if not 0 < self.aoa_sector_width <= 2 * np.pi:
            raise ValueError(f"aoa_sector_width must lie in (0, 2pi], got {self.aoa_sector_width}")
        lo, hi = self.aod_mean_range
        if not lo < hi:
            raise ValueError(f"empty aod_mean_range {self.aod_mean_range}")

    @property
    def num_paths(self) -> int:
        return self.num_clusters * self.rays_per_cluster


@dataclass(frozen=True)
class Path:
    gain: complex
    aod: float
    aoa: float


@dataclass(frozen=True)
class ChannelRealization:
    """Channel matrix together with the paths that generated it.

    ``cluster_aods`` / ``cluster_aoas`` hold the per-cluster mean angles;
    path ``i`` belongs to cluster ``i // rays_per_cluster``.
    """

    matrix: np.ndarray
    paths: tuple[Path, ...]
    cluster_aods: np.ndarray = field(default_factory=lambda: np.empty(0))
    cluster_aoas: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def num_rx(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_tx(self) -> int:
        return self.matrix.shape[1]


def array_response(geometry: ArrayGeometry, angle) -> np.ndarray:
    """ULA steering vector(s), unit 2-norm.

    ``angle`` may be a scalar (returns shape ``(N,)``) or an array of angles
    (returns shape ``(N, len(angle))``, one steering vector per column).
    """
    n = geometry.num_antennas
    k = np.arange(n)
    angle = np.asarray(angle, dtype=float)
    phase = 2 * np.pi * geometry.element_spacing * np.multiply.outer(k, np.sin(angle))
    return np.exp(1j * phase) / np.sqrt(n)


def _laplacian_offsets(rng: np.random.Generator, spread: float, size) -> np.ndarray:
    u = rng.uniform(-0.5, 0.5, size=size)
    # u == -0.5 is possible from uniform(); clamp keeps the log finite
    mag = np.minimum(np.abs(u), 0.5 - 1e-16)
    return -spread * np.sign(u) * np.log(1 - 2 * mag)


def default_normalization(num_tx: int, num_rx: int, num_paths: int) -> float:
    return float(np.sqrt(num_tx * num_rx / num_paths))


def channel_from_paths(paths, tx: ArrayGeometry, rx: ArrayGeometry,
                       normalization: float | None = None) -> np.ndarray:
    """Sum of rank-1 path contributions ``gain * a_rx(aoa) a_tx(aod)^H``.

    With ``normalization=None`` the factor sqrt(N_t N_r / L) is used.
    """
    paths = list(paths)
    if not paths:
        raise ValueError("no paths")
    gains = np.array([p.gain for p in paths], dtype=complex)
    a_t = array_response(tx, np.array([p.aod for p in paths]))
    a_r = array_response(rx, np.array([p.aoa for p in paths]))
    if normalization is None:
        normalization = default_normalization(tx.num_antennas, rx.num_antennas, len(paths))
    return normalization * (a_r * gains) @ a_t.conj().T


def sample_channel(tx: ArrayGeometry, rx: ArrayGeometry, config: ChannelConfig,
                   rng: np.random.Generator) -> ChannelRealization:
    """Draw one clustered channel realization.

    Draw order (fixed, part of the reproducibility contract): cluster mean
    AoDs, cluster mean AoAs, ray AoD offsets, ray AoA offsets, gains.
    """
    n_cl, n_ray = config.num_clusters, config.rays_per_cluster
    lo, hi = config.aod_mean_range
    mean_aod = rng.uniform(lo, hi, size=n_cl)
    half = config.aoa_sector_width / 2
    mean_aoa = rng.uniform(config.aoa_sector_center - half,
                           config.aoa_sector_center + half, size=n_cl)
    d_aod = _laplacian_offsets(rng, config.angle_spread, (n_cl, n_ray))
    d_aoa = _laplacian_offsets(rng, config.angle_spread, (n_cl, n_ray))
    gains = (rng.standard_normal(n_cl * n_ray)
             + 1j * rng.standard_normal(n_cl * n_ray)) / np.sqrt(2)

    aods = np.mod(mean_aod[:, None] + d_aod, 2 * np.pi).ravel()
    aoas = np.mod(mean_aoa[:, None] + d_aoa, 2 * np.pi).ravel()
    paths = tuple(Path(complex(g), float(d), float(a)) for g, d, a in zip(gains, aods, aoas))
    matrix = channel_from_paths(paths, tx, rx)
    return ChannelRealization(matrix, paths,
                              np.mod(mean_aod, 2 * np.pi), np.mod(mean_aoa, 2 * np.pi))


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent generator for one Monte Carlo trial."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial)]))
