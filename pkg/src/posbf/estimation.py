"""Open-loop compressed-sensing channel estimation with OMP."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import hadamard

from .channel import ArrayGeometry, array_response

TRAINING_KINDS = ("pseudo_random_binary", "pseudo_random_quaternary", "deterministic")


@dataclass(frozen=True)
class TrainingDesign:
    """Training precoders (columns of ``tx_training``) and combiners (columns of ``rx_training``)."""

    tx_training: np.ndarray
    rx_training: np.ndarray
    kind: str


def _training_matrix(kind: str, n_ant: int, m: int, rng) -> np.ndarray:
    if kind == "pseudo_random_binary":
        sym = np.array([1.0, -1.0], dtype=complex)
        return sym[rng.integers(0, 2, size=(n_ant, m))] / np.sqrt(n_ant)
    if kind == "pseudo_random_quaternary":
        sym = np.array([1, 1j, -1, -1j], dtype=complex)
        return sym[rng.integers(0, 4, size=(n_ant, m))] / np.sqrt(n_ant)
    if kind == "deterministic":
        if n_ant & (n_ant - 1):
            raise ValueError("deterministic construction unavailable")
        if m > n_ant:
            raise ValueError(f"deterministic training supports at most {n_ant} columns, got {m}")
        return hadamard(n_ant).astype(complex)[:, :m] / np.sqrt(n_ant)
    raise ValueError(f"unknown training kind {kind!r}")


def generate_training(kind: str, num_tx: int, num_rx: int, num_tx_beams: int,
                      num_rx_beams: int, rng: np.random.Generator | None = None,
                      max_beams: int = 4096) -> TrainingDesign:
    if max(num_tx_beams, num_rx_beams) > max_beams:
        raise ValueError(f"training length exceeds budget {max_beams}")
    if min(num_tx_beams, num_rx_beams) < 1:
        raise ValueError("training length must be positive")
    if rng is None:
        rng = np.random.default_rng()
    tx = _training_matrix(kind, num_tx, num_tx_beams, rng)
    rx = _training_matrix(kind, num_rx, num_rx_beams, rng)
    return TrainingDesign(tx, rx, kind)


def mutual_coherence(matrix: np.ndarray) -> float:
    """Largest normalized inner product between distinct columns."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[1] < 2:
        raise ValueError("need at least two columns")
    norms = np.linalg.norm(matrix, axis=0)
    if np.any(norms == 0):
        raise ValueError("zero column")
    q = matrix / norms
    gram = np.abs(q.conj().T @ q)
    np.fill_diagonal(gram, 0.0)
    return float(min(gram.max(), 1.0))


@dataclass(frozen=True)
class AngleDictionary:
    """Steering vectors on grids uniform in spatial frequency over [-1, 1)."""

    tx: ArrayGeometry
    rx: ArrayGeometry
    grid_size: int

    def __post_init__(self):
        if self.grid_size < max(self.tx.num_antennas, self.rx.num_antennas):
            raise ValueError("grid_size must be >= the number of antennas")

    @classmethod
    def default(cls, tx: ArrayGeometry, rx: ArrayGeometry) -> "AngleDictionary":
        return cls(tx, rx, 2 * max(tx.num_antennas, rx.num_antennas))

    @property
    def spatial_frequencies(self) -> np.ndarray:
        return -1 + 2 * np.arange(self.grid_size) / self.grid_size

    def _angles(self, geometry: ArrayGeometry) -> np.ndarray:
        return np.arcsin(np.clip(self.spatial_frequencies / (2 * geometry.element_spacing), -1, 1))

    @property
    def tx_grid(self) -> np.ndarray:
        return self._angles(self.tx)

    @property
    def rx_grid(self) -> np.ndarray:
        return self._angles(self.rx)

    @property
    def tx_atoms(self) -> np.ndarray:
        return array_response(self.tx, self.tx_grid)

    @property
    def rx_atoms(self) -> np.ndarray:
        return array_response(self.rx, self.rx_grid)


@dataclass(frozen=True)
class SparseEstimate:
    support: list  # (tx grid index, rx grid index) pairs
    coefficients: np.ndarray
    reconstructed: np.ndarray
    residual_norms: list = field(default_factory=list)


@dataclass(frozen=True)
class OMPResult:
    support: list  # column indices in selection order
    coefficients: np.ndarray
    residual_norms: list  # ||r|| before the first and after every selection


def measure(h: np.ndarray, training: TrainingDesign, snr=np.inf,
            rng: np.random.Generator | None = None) -> np.ndarray:
    """Received training symbols ``w_{m_r}^H H f_{m_t}`` (+ noise), row-major in ``(m_r, m_t)``.

    Noise is circularly-symmetric Gaussian with variance ``1/snr`` per entry;
    ``snr=inf`` gives noiseless measurements and draws nothing from ``rng``.
    """
    y = (training.rx_training.conj().T @ h @ training.tx_training).ravel()
    if np.isinf(snr):
        return y
    if rng is None:
        raise ValueError("noisy measurements need an rng")
    noise = (rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size)) / np.sqrt(2 * snr)
    return y + noise


def build_sensing_matrix(training: TrainingDesign, dictionary: AngleDictionary) -> np.ndarray:
    """Linear map from grid coefficients to measurements.

    Row ``m_r * M_t + m_t``, column ``g_t * G + g_r`` holds
    ``(w_{m_r}^H a_r(g_r)) * (a_t(g_t)^H f_{m_t})``.
    """
    p = training.rx_training.conj().T @ dictionary.rx_atoms       # M_r x G_r
    q = dictionary.tx_atoms.conj().T @ training.tx_training       # G_t x M_t
    m_r, m_t = p.shape[0], q.shape[1]
    phi = np.einsum("ag,hb->abhg", p, q)                          # (m_r, m_t, g_t, g_r)
    return phi.reshape(m_r * m_t, -1)


def omp(y: np.ndarray, sensing: np.ndarray, max_sparsity: int,
        residual_tol: float = 1e-10) -> OMPResult:
    """Orthogonal matching pursuit.

    Picks the column with the largest normalized correlation to the residual,
    refits all selected coefficients by least squares, and stops after
    ``max_sparsity`` atoms or once ``||r|| <= residual_tol * ||y||``.
    """
    y = np.asarray(y, dtype=complex).ravel()
    if max_sparsity < 1:
        raise ValueError("max_sparsity must be >= 1")
    if max_sparsity > y.size:
        raise ValueError(f"max_sparsity ({max_sparsity}) exceeds the number of measurements ({y.size})")
    norms = np.linalg.norm(sensing, axis=0)
    usable = norms > 0
    inv_norms = np.where(usable, 1 / np.where(usable, norms, 1), 0.0)

    y_norm = np.linalg.norm(y)
    residual = y.copy()
    support: list[int] = []
    coef = np.zeros(0, dtype=complex)
    history = [float(y_norm)]
    while len(support) < max_sparsity and history[-1] > residual_tol * y_norm:
        corr = np.abs(sensing.conj().T @ residual) * inv_norms
        corr[support] = -1.0
        best = int(np.argmax(corr))
        if corr[best] <= 0:
            break
        trial = support + [best]
        sub = sensing[:, trial]
        c, *_ = np.linalg.lstsq(sub, y, rcond=None)
        r = y - sub @ c
        # LS over a superset cannot do worse; guard against round-off
        if np.linalg.norm(r) > history[-1]:
            break
        support, coef, residual = trial, c, r
        history.append(float(np.linalg.norm(residual)))
    return OMPResult(support, coef, history)


def reconstruct(support, coefficients, dictionary: AngleDictionary) -> np.ndarray:
    h = np.zeros((dictionary.rx.num_antennas, dictionary.tx.num_antennas), dtype=complex)
    if not support:
        return h
    gt = np.array([s[0] for s in support])
    gr = np.array([s[1] for s in support])
    a_t = dictionary.tx_atoms[:, gt]
    a_r = dictionary.rx_atoms[:, gr]
    return (a_r * np.asarray(coefficients)) @ a_t.conj().T


def estimate_channel(y: np.ndarray, training: TrainingDesign, dictionary: AngleDictionary,
                     max_sparsity: int, residual_tol: float = 1e-10,
                     sensing: np.ndarray | None = None) -> SparseEstimate:
    if sensing is None:
        sensing = build_sensing_matrix(training, dictionary)
    res = omp(y, sensing, max_sparsity, residual_tol)
    g = dictionary.grid_size
    support = [(i // g, i % g) for i in res.support]
    return SparseEstimate(support, res.coefficients,
                          reconstruct(support, res.coefficients, dictionary), res.residual_norms)


def nmse(h_true: np.ndarray, h_est: np.ndarray) -> float:
    h_true, h_est = np.asarray(h_true), np.asarray(h_est)
    if h_true.shape != h_est.shape:
        raise ValueError("shape mismatch")
    denom = np.linalg.norm(h_true) ** 2
    if denom == 0:
        raise ValueError("zero true channel")
    return float(np.linalg.norm(h_true - h_est) ** 2 / denom)
