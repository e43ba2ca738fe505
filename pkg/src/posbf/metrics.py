"""Spectral efficiency, transmitter power, energy efficiency and beam patterns."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ArrayGeometry, array_response
from .errors import NumericalError

ARCHITECTURES = ("full_digital", "ps_hybrid", "pos_sw_hybrid")


@dataclass(frozen=True)
class PowerModel:
    """Per-component transmitter power in mW."""

    p_baseband: float = 200.0
    p_rf_chain: float = 300.0
    p_phase_shifter: float = 40.0
    p_switch: float = 5.0
    p_transmit: float = 500.0
    p_pos: float = 0.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value >= 0:
                raise ValueError(f"{name} must be >= 0, got {value}")


@dataclass(frozen=True)
class Architecture:
    kind: str
    num_antennas: int
    num_rf_chains: int

    def __post_init__(self):
        if self.kind not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.kind!r}")
        if not 1 <= self.num_rf_chains <= self.num_antennas:
            raise ValueError("need 1 <= num_rf_chains <= num_antennas")
        if self.kind == "full_digital" and self.num_rf_chains != self.num_antennas:
            raise ValueError("full_digital needs one RF chain per antenna")

    @classmethod
    def full_digital(cls, num_antennas: int) -> "Architecture":
        return cls("full_digital", num_antennas, num_antennas)


def _combined_gains(h, f, w) -> np.ndarray:
    """Eigenvalues of ``R_n^-1 W^H H F F^H H^H W`` with ``R_n = W^H W``."""
    g = w.conj().T @ h @ f
    r_n = w.conj().T @ w
    try:
        chol = np.linalg.cholesky(r_n)
    except np.linalg.LinAlgError:
        raise NumericalError("singular combiner") from None
    s = np.linalg.svd(w, compute_uv=False)
    if s[-1] <= s[0] * 1e-12:
        raise NumericalError("singular combiner")
    whitened = np.linalg.solve(chol, g)
    return np.linalg.svd(whitened, compute_uv=False) ** 2


def spectral_efficiency(h, f, w, snr, num_streams: int | None = None):
    """Achievable rate ``log2 det(I + snr/N_s R_n^-1 W^H H F F^H H^H W)``.

    Unit noise variance, ``snr = P / sigma^2`` (linear). ``snr`` may be an
    array, in which case one value per SNR is returned.
    """
    h, f, w = (np.atleast_2d(np.asarray(x, dtype=complex)) for x in (h, f, w))
    if f.shape[0] == 1 and h.shape[1] != 1:
        f = f.T
    if w.shape[0] == 1 and h.shape[0] != 1:
        w = w.T
    num_streams = f.shape[1] if num_streams is None else num_streams
    if abs(np.linalg.norm(f) ** 2 - num_streams) > 1e-6:
        raise ValueError(f"precoder must satisfy ||F||_F^2 = N_s ({num_streams})")
    lam = _combined_gains(h, f, w)
    snr = np.asarray(snr, dtype=float)
    se = np.log2(1 + np.multiply.outer(snr / num_streams, lam)).sum(axis=-1)
    se = np.maximum(se, 0.0)
    return float(se) if se.ndim == 0 else se


def total_power(arch: Architecture, model: PowerModel = PowerModel()) -> float:
    n_t, n_rf = arch.num_antennas, arch.num_rf_chains
    if arch.kind == "full_digital":
        return model.p_baseband + n_t * model.p_rf_chain + model.p_transmit
    if arch.kind == "ps_hybrid":
        return (model.p_baseband + n_rf * model.p_rf_chain
                + n_t * n_rf * model.p_phase_shifter + model.p_transmit)
    return (model.p_baseband + n_rf * model.p_rf_chain + n_rf * model.p_pos
            + n_t * n_rf * model.p_switch + model.p_transmit)


def energy_efficiency(se, arch: Architecture, model: PowerModel = PowerModel()):
    """Spectral efficiency per Watt of transmitter power (bits/s/Hz/W)."""
    power = total_power(arch, model)
    if power <= 0:
        raise ValueError("total power must be positive")
    return se / (power / 1000)


def beam_pattern(f, geometry: ArrayGeometry, angles) -> tuple[np.ndarray, np.ndarray]:
    """Normalized gain ``|a(theta)^H f|^2 / ||f||^2`` over ``angles`` (radians)."""
    f = np.asarray(f, dtype=complex).ravel()
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if angles.size == 0:
        raise ValueError("empty angle grid")
    norm2 = np.vdot(f, f).real
    if norm2 == 0:
        raise ValueError("zero beamforming vector")
    resp = array_response(geometry, angles)
    gain = np.abs(resp.conj().T @ f) ** 2 / norm2
    return angles, np.clip(gain, 0.0, 1.0)
