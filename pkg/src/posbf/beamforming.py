"""Precoder/combiner design under discrete (POS-SW) and continuous phase constraints.

Analog beamformers have constant-modulus entries ``1/sqrt(N_ant)``. Discrete
designs store phase *indices* into a :class:`PhaseAlphabet`, so the alphabet
constraint holds bit-exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numba import njit
from scipy.linalg import orth

from .channel import ChannelRealization
from .errors import NumericalError

INFINITE = "inf"

METHODS = ("full_digital", "pe_altmin", "quantize", "phase_matching", "binary_rank1", "exhaustive")


@dataclass(frozen=True)
class PhaseAlphabet:
    resolution: int

    def __post_init__(self):
        if int(self.resolution) != self.resolution or self.resolution < 2:
            raise ValueError(f"phase resolution must be an integer >= 2, got {self.resolution}")

    @property
    def phases(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.resolution) / self.resolution

    @property
    def symbols(self) -> np.ndarray:
        """Unit-modulus points ``exp(j*2*pi*k/N)``."""
        return np.exp(1j * self.phases)

    def nearest(self, values) -> np.ndarray:
        """Index of the alphabet phase nearest to ``angle(values)``.

        Ties go to the smaller index (including the wrap-around tie between
        ``N-1`` and ``0``). Zero entries map to index 0.
        """
        n = self.resolution
        phase = np.mod(np.angle(values), 2 * np.pi)
        x = phase * n / (2 * np.pi)
        lo = np.floor(x)
        frac = x - lo
        lo = lo.astype(np.int64) % n
        hi = (lo + 1) % n
        idx = np.where(frac < 0.5, lo, hi)
        tie = frac == 0.5
        return np.where(tie, np.minimum(lo, hi), idx)


@dataclass(frozen=True)
class AnalogBeamformer:
    phase_indices: np.ndarray
    alphabet: PhaseAlphabet

    def __post_init__(self):
        idx = np.asarray(self.phase_indices)
        if idx.ndim == 1:
            idx = idx[:, None]
        if idx.ndim != 2 or not np.issubdtype(idx.dtype, np.integer):
            raise ValueError("phase_indices must be a 2-D integer array")
        if idx.size and (idx.min() < 0 or idx.max() >= self.alphabet.resolution):
            raise ValueError("phase index out of range")
        object.__setattr__(self, "phase_indices", idx)

    @property
    def num_antennas(self) -> int:
        return self.phase_indices.shape[0]

    @property
    def num_rf_chains(self) -> int:
        return self.phase_indices.shape[1]

    @property
    def amplitude(self) -> float:
        return 1 / np.sqrt(self.num_antennas)

    def realize(self) -> np.ndarray:
        return realize(self)


@dataclass(frozen=True)
class DigitalBeamformer:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2:
            raise ValueError("digital beamformer must be a 2-D matrix")
        if not np.all(np.isfinite(m)):
            raise ValueError("digital beamformer has non-finite entries")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class HybridBeamformer:
    """Analog stage followed by a digital stage.

    ``analog`` is an :class:`AnalogBeamformer` for discrete phases, or a plain
    complex matrix for infinite-resolution phase shifters and for the
    full-digital case (identity analog stage).
    """

    analog: Union[AnalogBeamformer, np.ndarray]
    digital: DigitalBeamformer
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.analog_matrix.shape[1] != self.digital.matrix.shape[0]:
            raise ValueError("analog/digital dimension mismatch")

    @property
    def analog_matrix(self) -> np.ndarray:
        if isinstance(self.analog, AnalogBeamformer):
            return self.analog.realize()
        return np.asarray(self.analog)

    @property
    def effective(self) -> np.ndarray:
        return self.analog_matrix @ self.digital.matrix


@dataclass
class FactorizationResult:
    """Outcome of an alternating analog/digital fit.

    ``objective`` lists ``||F_opt - analog @ digital||_F`` after every update,
    computed before the final power scaling. ``rank_deficient`` flags that a
    least-squares step hit a singular analog matrix and fell back to the
    minimum-norm solution.
    """

    analog: Union[AnalogBeamformer, np.ndarray]
    digital: DigitalBeamformer
    objective: list
    rank_deficient: bool = False

    def __iter__(self):
        # tuple-style unpacking: analog, digital = pe_altmin(...)
        return iter((self.analog, self.digital))

    @property
    def analog_matrix(self) -> np.ndarray:
        if isinstance(self.analog, AnalogBeamformer):
            return self.analog.realize()
        return np.asarray(self.analog)


def realize(analog: AnalogBeamformer) -> np.ndarray:
    return analog.alphabet.symbols[analog.phase_indices] * analog.amplitude


def _least_squares(analog: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, bool]:
    digital, _, rank, _ = np.linalg.lstsq(analog, target, rcond=None)
    return digital, rank < analog.shape[1]


def _power_normalize(analog: np.ndarray, digital: np.ndarray, num_streams: int) -> np.ndarray:
    norm = np.linalg.norm(analog @ digital)
    if norm == 0:
        raise NumericalError("zero effective precoder")
    return digital * (np.sqrt(num_streams) / norm)


def _residual(target, analog, digital) -> float:
    return float(np.linalg.norm(target - analog @ digital))


def _phase_target(f_opt: np.ndarray, num_rf: int) -> np.ndarray:
    """Matrix whose elementwise phases seed the analog stage.

    The first ``N_s`` columns are ``f_opt``; surplus RF chains get DFT columns
    so the initial analog matrix is not rank-deficient.
    """
    n_ant, n_s = f_opt.shape
    if num_rf < n_s:
        raise ValueError(f"num_rf_chains ({num_rf}) must be >= num_streams ({n_s})")
    if num_rf == n_s:
        return f_opt
    k = np.arange(n_ant)[:, None]
    extra = np.exp(2j * np.pi * k * (np.arange(num_rf - n_s)[None, :] + 1) / n_ant)
    return np.hstack([f_opt, extra])


def svd_full_digital(h: np.ndarray, num_streams: int) -> tuple[np.ndarray, np.ndarray]:
    """Top ``num_streams`` right/left singular vectors as precoder/combiner."""
    h = np.asarray(h)
    if num_streams < 1 or num_streams > min(h.shape):
        raise ValueError(f"num_streams must be in [1, {min(h.shape)}], got {num_streams}")
    u, s, vh = np.linalg.svd(h)
    if s[0] == 0 or not np.isfinite(s[0]):
        raise NumericalError("rank-deficient channel")
    return vh[:num_streams].conj().T, u[:, :num_streams]


def quantize_phases(target: np.ndarray, alphabet: PhaseAlphabet) -> AnalogBeamformer:
    return AnalogBeamformer(alphabet.nearest(np.asarray(target)), alphabet)


def rotated_quantization(target: np.ndarray, alphabet: PhaseAlphabet,
                         num_rotations: int = 32) -> np.ndarray:
    """Per column, the best of ``quantize(exp(j*phi) * column)`` over rotations.

    ``phi`` runs over ``num_rotations`` points of ``[0, 2*pi/N)``; the score
    is ``|column^H b|``. With ``N = 2`` this is the rank-1 candidate set.
    Returns phase indices.
    """
    target = np.atleast_2d(np.asarray(target, dtype=complex))
    phis = np.arange(num_rotations) * (2 * np.pi / alphabet.resolution) / num_rotations
    symbols = alphabet.symbols
    out = np.empty(target.shape, dtype=np.int64)
    for k, col in enumerate(target.T):
        cands = alphabet.nearest(np.exp(1j * phis)[:, None] * col[None, :])
        score = np.abs(symbols[cands] @ col.conj())
        out[:, k] = cands[int(np.argmax(score))]
    return out


def pe_altmin(f_opt: np.ndarray, num_rf_chains: int, max_iters: int = 100, tol: float = 1e-9,
              power_normalize: bool = True) -> FactorizationResult:
    """Phase-extraction alternating minimization (infinite-resolution phases).

    Alternates a least-squares digital fit with an analog update that keeps
    the elementwise phase of ``f_opt @ digital^H``. An analog update that would
    increase the residual is rejected and the iteration stops, so the
    recorded objective is non-increasing.
    """
    f_opt = np.asarray(f_opt, dtype=complex)
    n_ant, n_s = f_opt.shape
    amp = 1 / np.sqrt(n_ant)
    analog = amp * np.exp(1j * np.angle(_phase_target(f_opt, num_rf_chains)))
    digital, singular = _least_squares(analog, f_opt)
    objective = [_residual(f_opt, analog, digital)]

    for _ in range(max_iters):
        cand_analog = amp * np.exp(1j * np.angle(f_opt @ digital.conj().T))
        cand_digital, sing = _least_squares(cand_analog, f_opt)
        res = _residual(f_opt, cand_analog, cand_digital)
        if res > objective[-1]:
            break
        analog, digital = cand_analog, cand_digital
        singular |= sing
        decrease = objective[-1] - res
        objective.append(res)
        if decrease < tol:
            break

    if power_normalize:
        digital = _power_normalize(analog, digital, n_s)
    return FactorizationResult(analog, DigitalBeamformer(digital), objective, singular)


def phase_matching(f_opt: np.ndarray, alphabet: PhaseAlphabet, num_rf_chains: int,
                   outer_iters: int = 3, max_sweeps: int = 10, num_rotations: int = 32,
                   init: np.ndarray | None = None, warm_start: str = "pe_altmin",
                   power_normalize: bool = True) -> FactorizationResult:
    """Discrete-phase analog design by cyclic per-element phase matching.

    The digital stage is always the least-squares fit, so the objective
    depends on the analog matrix ``A`` alone:
    ``||f_opt - A D||^2 = ||f_opt||^2 - ||P_A f_opt||^2``. Each outer
    iteration visits the RF chains in turn and improves chain ``k``'s column
    one element at a time, giving each element the alphabet phase that
    maximizes the captured energy with every other analog entry fixed
    (sweeps repeat until nothing changes, at most ``max_sweeps``). ``D`` is
    refit after every column.

    The analog start is ``init`` (phase indices) if given, otherwise the
    rotated quantization of either the infinite-resolution PE-AltMin analog
    matrix (``warm_start="pe_altmin"``) or the phases of ``f_opt``
    (``warm_start="quantized"``).
    """
    if warm_start not in ("pe_altmin", "quantized"):
        raise ValueError(f"unknown warm_start {warm_start!r}")
    f_opt = np.asarray(f_opt, dtype=complex)
    n_ant, n_s = f_opt.shape
    amp = 1 / np.sqrt(n_ant)
    symbols = alphabet.symbols * amp
    if init is None and warm_start == "pe_altmin":
        seed = pe_altmin(f_opt, num_rf_chains, power_normalize=False).analog_matrix
        idx = rotated_quantization(seed, alphabet, num_rotations)
    elif init is None:
        idx = rotated_quantization(_phase_target(f_opt, num_rf_chains), alphabet, num_rotations)
    else:
        idx = np.array(init, dtype=np.int64).reshape(n_ant, num_rf_chains)
    analog = symbols[idx]
    digital, singular = _least_squares(analog, f_opt)
    objective = [_residual(f_opt, analog, digital)]

    for _ in range(outer_iters):
        for k in range(num_rf_chains):
            others = np.delete(analog, k, axis=1)
            basis = orth(others) if others.shape[1] else np.zeros((n_ant, 0), dtype=complex)
            resid = f_opt - basis @ (basis.conj().T @ f_opt)
            b, col = analog[:, k].copy(), idx[:, k].copy()
            _match_column(np.ascontiguousarray(resid), np.ascontiguousarray(basis), b, col,
                          symbols, max_sweeps)
            analog[:, k], idx[:, k] = b, col
            digital, sing = _least_squares(analog, f_opt)
            singular |= sing
            objective.append(_residual(f_opt, analog, digital))

    if power_normalize:
        digital = _power_normalize(analog, digital, n_s)
    return FactorizationResult(AnalogBeamformer(idx, alphabet), DigitalBeamformer(digital),
                               objective, singular)


@njit(cache=True)
def _match_column(resid, basis, b, col, symbols, max_sweeps):  # pragma: no cover - jitted
    """Elementwise ascent of ``||resid^H b||^2 / ||(I - basis basis^H) b||^2``, in place.

    ``resid`` is the target with the span of the other columns projected
    out; ``basis`` is an orthonormal basis of that span. Each element tries
    every alphabet symbol and moves only on strict improvement.
    """
    n_ant, n_s = resid.shape
    n_b = basis.shape[1]
    n_sym = symbols.size
    z = np.zeros(n_s, dtype=np.complex128)
    y = np.zeros(n_b, dtype=np.complex128)
    for m in range(n_ant):
        for j in range(n_s):
            z[j] += np.conj(resid[m, j]) * b[m]
        for j in range(n_b):
            y[j] += np.conj(basis[m, j]) * b[m]
    num = 0.0
    for j in range(n_s):
        num += z[j].real ** 2 + z[j].imag ** 2
    inspan = 0.0
    for j in range(n_b):
        inspan += y[j].real ** 2 + y[j].imag ** 2
    b_energy = 0.0
    for m in range(n_ant):
        b_energy += b[m].real ** 2 + b[m].imag ** 2

    for _ in range(max_sweeps):
        changed = False
        for m in range(n_ant):
            p = 0j
            r_energy = 0.0
            for j in range(n_s):
                p += resid[m, j] * z[j]
                r_energy += resid[m, j].real ** 2 + resid[m, j].imag ** 2
            q = 0j
            q_energy = 0.0
            for j in range(n_b):
                q += basis[m, j] * y[j]
                q_energy += basis[m, j].real ** 2 + basis[m, j].imag ** 2
            cur = col[m]
            best, best_ratio, cur_ratio = cur, -np.inf, -np.inf
            best_num = num
            for c in range(n_sym):
                d = symbols[c] - b[m]
                d2 = d.real ** 2 + d.imag ** 2
                nm = num + 2 * (np.conj(d) * p).real + d2 * r_energy
                dn = b_energy - (inspan + 2 * (np.conj(d) * q).real + d2 * q_energy)
                ratio = nm / dn if dn > 1e-12 else -np.inf
                if c == cur:
                    cur_ratio = ratio
                if ratio > best_ratio:
                    best, best_ratio, best_num = c, ratio, nm
            if best == cur or not best_ratio > cur_ratio + 1e-12 * abs(cur_ratio):
                continue
            d = symbols[best] - b[m]
            for j in range(n_s):
                z[j] += np.conj(resid[m, j]) * d
            inspan = 0.0
            for j in range(n_b):
                y[j] += np.conj(basis[m, j]) * d
                inspan += y[j].real ** 2 + y[j].imag ** 2
            num = best_num
            b[m] = symbols[best]
            col[m] = best
            changed = True
        if not changed:
            break


BINARY = PhaseAlphabet(2)


def binary_rank1_design(target: np.ndarray, num_candidates: int = 32) -> AnalogBeamformer:
    """Binary (N=2) analog column from a small rank-1 candidate set.

    Candidate ``i`` is ``sign(Re(exp(j*phi_i) * target))`` with
    ``phi_i = i*pi/C``; the one with the largest ``|target^H b|`` wins.
    """
    target = np.asarray(target, dtype=complex).ravel()
    if not np.any(target):
        raise ValueError("zero target")
    phis = np.arange(num_candidates) * np.pi / num_candidates
    signs = np.real(np.exp(1j * phis)[:, None] * target[None, :]) < 0  # True -> phase pi
    cands = np.where(signs, -1.0, 1.0) / np.sqrt(target.size)
    score = np.abs(cands @ target.conj())
    best = int(np.argmax(score))
    return AnalogBeamformer(signs[best].astype(np.int64)[:, None], BINARY)


@dataclass(frozen=True)
class SearchResult:
    column: AnalogBeamformer
    objective: float


def exhaustive_analog_search(target: np.ndarray, alphabet: PhaseAlphabet,
                             budget: int = 10**7, chunk: int = 1 << 15) -> SearchResult:
    """Global maximizer of ``|target^H b|`` over all alphabet-constrained columns.

    Enumerates index vectors in lexicographic order. Among near-ties (within
    1e-12 relative) the lexicographically smallest vector is returned; the
    reported objective is the exact enumeration maximum.
    """
    target = np.asarray(target, dtype=complex).ravel()
    n_ant, n = target.size, alphabet.resolution
    total = n ** n_ant
    if total > budget:
        raise ValueError("search space too large")
    symbols = alphabet.symbols / np.sqrt(n_ant)
    weights = n ** np.arange(n_ant - 1, -1, -1)
    tc = target.conj()

    best_val, scores = -1.0, []
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total))
        digits = (codes[:, None] // weights[None, :]) % n
        vals = np.abs((symbols[digits] * tc[None, :]).sum(axis=1))
        scores.append(vals)
        best_val = max(best_val, float(vals.max()))
    scores = np.concatenate(scores)
    first = int(np.argmax(scores >= best_val * (1 - 1e-12)))
    digits = (first // weights) % n
    return SearchResult(AnalogBeamformer(digits.astype(np.int64)[:, None], alphabet), best_val)


def _columnwise(target: np.ndarray, num_rf: int, design) -> np.ndarray:
    cols = [design(col) for col in _phase_target(target, num_rf).T]
    return np.hstack([c.phase_indices for c in cols])


def _design_side(target, alphabet, num_rf, method, power_normalize, **kwargs):
    n_s = target.shape[1]
    if method == "pe_altmin":
        return pe_altmin(target, num_rf, power_normalize=power_normalize, **kwargs)
    if alphabet is None:
        raise ValueError(f"method {method!r} needs a finite phase alphabet")
    if method == "phase_matching":
        return phase_matching(target, alphabet, num_rf, power_normalize=power_normalize, **kwargs)
    if method == "quantize":
        idx = quantize_phases(_phase_target(target, num_rf), alphabet).phase_indices
    elif method == "binary_rank1":
        if alphabet.resolution != 2:
            raise ValueError("binary_rank1 requires phase resolution 2")
        idx = _columnwise(target, num_rf, binary_rank1_design)
    elif method == "exhaustive":
        idx = _columnwise(target, num_rf,
                          lambda col: exhaustive_analog_search(col, alphabet).column)
    else:
        raise ValueError(f"unknown design method {method!r}")
    analog = AnalogBeamformer(idx, alphabet)
    a = analog.realize()
    digital, singular = _least_squares(a, target)
    objective = [_residual(target, a, digital)]
    if power_normalize:
        digital = _power_normalize(a, digital, n_s)
    return FactorizationResult(analog, DigitalBeamformer(digital), objective, singular)


def design_hybrid(channel, alphabet: PhaseAlphabet | None, num_rf: int, num_streams: int,
                  method: str = "phase_matching", num_rf_rx: int | None = None,
                  **kwargs) -> tuple[HybridBeamformer, HybridBeamformer]:
    """Design the transmit precoder and receive combiner for one channel.

    Targets are the top ``num_streams`` right (transmit) and left (receive)
    singular vectors. The precoder is scaled to ``||F_RF F_BB||_F^2 = N_s``;
    the combiner's digital stage is a plain least-squares fit. ``alphabet=None``
    means infinite-resolution phases (``pe_altmin`` or ``full_digital`` only).
    """
    h = channel.matrix if isinstance(channel, ChannelRealization) else np.asarray(channel)
    num_rf_rx = num_rf if num_rf_rx is None else num_rf_rx
    n_r, n_t = h.shape
    if not 1 <= num_streams <= min(num_rf, num_rf_rx):
        raise ValueError("need 1 <= num_streams <= num_rf")
    if num_rf > n_t or num_rf_rx > n_r:
        raise ValueError("more RF chains than antennas")
    f_opt, w_opt = svd_full_digital(h, num_streams)

    if method == "full_digital":
        return (HybridBeamformer(np.eye(n_t), DigitalBeamformer(f_opt)),
                HybridBeamformer(np.eye(n_r), DigitalBeamformer(w_opt)))
    if method not in METHODS:
        raise ValueError(f"unknown design method {method!r}")

    tx = _design_side(f_opt, alphabet, num_rf, method, True, **kwargs)
    rx = _design_side(w_opt, alphabet, num_rf_rx, method, False, **kwargs)
    return (HybridBeamformer(tx.analog, tx.digital,
                             {"objective": tx.objective, "rank_deficient": tx.rank_deficient}),
            HybridBeamformer(rx.analog, rx.digital,
                             {"objective": rx.objective, "rank_deficient": rx.rank_deficient}))
