"""Monte Carlo experiments behind the CLI: SE/EE sweeps, beam patterns, estimation NMSE.

Every trial draws from its own generator derived from ``(seed, trial)``, so
results do not depend on execution order; per-trial rows are accumulated
in trial order before aggregation.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import yaml

from .beamforming import METHODS, PhaseAlphabet, design_hybrid, quantize_phases
from .channel import (ArrayGeometry, ChannelConfig, Path, array_response, channel_from_paths,
                      sample_channel, trial_rng)
from .errors import ConfigError
from .estimation import (TRAINING_KINDS, AngleDictionary, build_sensing_matrix, estimate_channel,
                         generate_training, measure, mutual_coherence, nmse)
from .metrics import Architecture, PowerModel, beam_pattern, energy_efficiency, spectral_efficiency, total_power

SCHEMA_VERSION = 1
EXPERIMENTS = ("se_sweep", "ee_sweep", "beampattern", "estimation")
INF = "inf"


def _resolution(value):
    if isinstance(value, str) and value.lower() in ("inf", "infinite", "∞"):
        return INF
    if isinstance(value, float) and math.isinf(value):
        return INF
    if isinstance(value, bool) or int(value) != value or int(value) < 2:
        raise ConfigError(f"phase resolution must be an integer >= 2 or 'inf', got {value!r}")
    return int(value)


@dataclass
class ExperimentConfig:
    experiment: str = "se_sweep"
    num_tx: int = 64
    num_rx: int = 64
    num_rf_tx: int = 6
    num_rf_rx: int = 6
    num_streams: int = 6
    snr_db_list: list = field(default_factory=lambda: [-10.0, -5.0, 0.0, 5.0, 10.0])
    rf_chain_list: list = field(default_factory=lambda: [1, 2, 3, 4, 5, 6, 7, 8])
    phase_resolutions: list = field(default_factory=lambda: [2, 4, 8, INF])
    methods: list = field(default_factory=lambda: ["full_digital", "pe_altmin", "phase_matching"])
    trials: int = 500
    seed: int = 0
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    power: PowerModel = field(default_factory=PowerModel)
    output: str | None = None
    format: str = "csv"
    # ee_sweep
    ee_snr_db: float = 0.0
    ee_resolution: int = 4
    ee_method: str = "phase_matching"
    shared_se: bool = False
    # beampattern
    dods_deg: list = field(default_factory=lambda: [15.0, 45.0, 75.0])
    antenna_list: list = field(default_factory=lambda: [16, 64])
    angle_step_deg: float = 0.1
    gain_floor_db: float = -100.0
    # estimation
    training_kinds: list = field(default_factory=lambda: list(TRAINING_KINDS))
    num_tx_beams: int = 16
    num_rx_beams: int = 16
    grid_size: int | None = None
    sparsity: int = 3
    num_paths: int = 3
    synthetic: str = "on_grid"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if isinstance(self.trials, bool) or int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        for name in ("num_tx", "num_rx", "num_rf_tx", "num_rf_rx", "num_streams"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.experiment == "se_sweep":
            if not self.num_streams <= min(self.num_rf_tx, self.num_rf_rx):
                raise ConfigError("need num_streams <= num_rf")
            if self.num_rf_tx > self.num_tx or self.num_rf_rx > self.num_rx:
                raise ConfigError("need num_rf <= number of antennas")
        self.phase_resolutions = [_resolution(r) for r in self.phase_resolutions]
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; choose from {METHODS}")
        if self.experiment == "ee_sweep":
            if not self.rf_chain_list:
                raise ConfigError("rf_chain_list is empty")
            for n in self.rf_chain_list:
                if not 1 <= n <= min(self.num_tx, self.num_rx):
                    raise ConfigError(f"RF chain count {n} out of range")
            _resolution(self.ee_resolution)
            if self.ee_method not in METHODS or self.ee_method in ("full_digital", "pe_altmin"):
                raise ConfigError(f"ee_method must be a discrete-phase method, got {self.ee_method!r}")
        if self.experiment == "beampattern":
            if not self.angle_step_deg > 0:
                raise ConfigError("angle_step_deg must be positive")
        if self.experiment == "estimation":
            for k in self.training_kinds:
                if k not in TRAINING_KINDS:
                    raise ConfigError(f"unknown training kind {k!r}")
            if self.synthetic not in ("on_grid", "clustered"):
                raise ConfigError("synthetic must be 'on_grid' or 'clustered'")
            if self.sparsity < 1 or self.sparsity > self.num_tx_beams * self.num_rx_beams:
                raise ConfigError("sparsity must lie in [1, number of measurements]")
            g = self.grid_size or 2 * max(self.num_tx, self.num_rx)
            if g < max(self.num_tx, self.num_rx):
                raise ConfigError("grid_size must be >= number of antennas")
            if self.synthetic == "on_grid" and self.num_paths > g * g:
                raise ConfigError("more on-grid paths than grid points")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data or {})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if isinstance(data.get("channel"), dict):
                ch = dict(data["channel"])
                if "angle_spread_deg" in ch:
                    ch["angle_spread"] = math.radians(ch.pop("angle_spread_deg"))
                if "aoa_sector_width_deg" in ch:
                    ch["aoa_sector_width"] = math.radians(ch.pop("aoa_sector_width_deg"))
                if "aod_mean_range" in ch:
                    ch["aod_mean_range"] = tuple(ch["aod_mean_range"])
                data["channel"] = ChannelConfig(**ch)
            if isinstance(data.get("power"), dict):
                data["power"] = PowerModel(**data["power"])
            return cls(**data)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(read_config_file(path))


def read_config_file(path) -> dict:
    """Parse a YAML (or JSON) config file into a plain mapping."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping")
    return data


# --- result tables -----------------------------------------------------------

COLUMNS = {
    "se_sweep": (("snr_db", float), ("method", str), ("resolution", str),
                 ("se_mean", float), ("se_std", float), ("trials", int)),
    "ee_sweep": (("num_rf", int), ("architecture", str), ("power_mw", float),
                 ("se_mean", float), ("ee_mean", float), ("ee_std", float), ("trials", int)),
    "beampattern": (("resolution", str), ("num_tx", int), ("dod_deg", float),
                    ("angle_deg", float), ("gain_db", float)),
    "estimation": (("snr_db", float), ("kind", str), ("nmse_mean", float), ("nmse_std", float),
                   ("support_recovery", float), ("coherence_mean", float), ("trials", int)),
}


def _canonical(value, kind):
    if kind is float:
        return float(f"{float(value):.9g}")
    return kind(value)


def _fmt(value, kind) -> str:
    if kind is float:
        return f"{value:.9g}"
    return str(value)


@dataclass
class Table:
    """Result rows for one experiment. Floats are held at 9 significant digits."""

    experiment: str
    rows: list

    def __post_init__(self):
        cols = COLUMNS[self.experiment]
        self.rows = [tuple(_canonical(v, k) for v, (_, k) in zip(row, cols)) for row in self.rows]

    @property
    def columns(self) -> tuple:
        return tuple(name for name, _ in COLUMNS[self.experiment])

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def select(self, **where) -> list[dict]:
        out = []
        for r in self.rows:
            d = dict(zip(self.columns, r))
            if all(d[k] == v for k, v in where.items()):
                out.append(d)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"#schema={SCHEMA_VERSION} experiment={self.experiment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        kinds = [k for _, k in COLUMNS[self.experiment]]
        for r in self.rows:
            w.writerow([_fmt(v, k) for v, k in zip(r, kinds)])
        return buf.getvalue()

    def to_json(self) -> str:
        kinds = [k for _, k in COLUMNS[self.experiment]]
        rows = [[float(_fmt(v, k)) if k is float else v for v, k in zip(r, kinds)] for r in self.rows]
        # NaN/inf are not valid JSON numbers
        rows = [[None if isinstance(v, float) and not math.isfinite(v) else v for v in r] for r in rows]
        return json.dumps({"schema": SCHEMA_VERSION, "experiment": self.experiment,
                           "columns": list(self.columns), "rows": rows}, indent=1) + "\n"

    def dumps(self, fmt: str = "csv") -> str:
        return self.to_csv() if fmt == "csv" else self.to_json()

    @classmethod
    def from_csv(cls, text: str) -> "Table":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("#schema="):
            raise ValueError("missing #schema header")
        meta = dict(item.split("=", 1) for item in lines[0][1:].split())
        if int(meta["schema"]) != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema {meta['schema']}")
        experiment = meta["experiment"]
        reader = csv.reader(lines[1:])
        header = tuple(next(reader))
        cols = COLUMNS[experiment]
        if header != tuple(n for n, _ in cols):
            raise ValueError(f"unexpected columns {header}")
        rows = [tuple(k(v) if k is not float else float(v) for v, (_, k) in zip(r, cols)) for r in reader]
        return cls(experiment, rows)

    @classmethod
    def from_json(cls, text: str) -> "Table":
        data = json.loads(text)
        rows = [tuple(float("nan") if v is None else v for v in r) for r in data["rows"]]
        return cls(data["experiment"], rows)

    def __eq__(self, other):
        if not isinstance(other, Table) or other.experiment != self.experiment:
            return NotImplemented
        if len(self.rows) != len(other.rows):
            return False
        for a, b in zip(self.rows, other.rows):
            for x, y in zip(a, b):
                both_nan = isinstance(x, float) and isinstance(y, float) and math.isnan(x) and math.isnan(y)
                if not (x == y or both_nan):
                    return False
        return True


# --- experiments -------------------------------------------------------------

def _schemes(config: ExperimentConfig) -> list[tuple[str, Any]]:
    """(method, resolution) pairs evaluated in an SE sweep."""
    schemes = []
    if "full_digital" in config.methods:
        schemes.append(("full_digital", INF))
    discrete = [m for m in config.methods if m not in ("full_digital", "pe_altmin")]
    for res in config.phase_resolutions:
        if res == INF:
            if "pe_altmin" in config.methods:
                schemes.append(("pe_altmin", INF))
            continue
        for m in discrete:
            if m == "binary_rank1" and res != 2:
                continue
            schemes.append((m, res))
    if not schemes:
        raise ConfigError("no (method, resolution) combination to evaluate")
    return schemes


def _design(h, method, res, n_rf_tx, n_rf_rx, n_s):
    alphabet = None if res == INF else PhaseAlphabet(res)
    return design_hybrid(h, alphabet, n_rf_tx, n_s, method, num_rf_rx=n_rf_rx)


def _se_trial(config: ExperimentConfig, trial: int, schemes, snr_lin) -> dict:
    tx, rx = ArrayGeometry(config.num_tx), ArrayGeometry(config.num_rx)
    ch = sample_channel(tx, rx, config.channel, trial_rng(config.seed, trial))
    out = {}
    for method, res in schemes:
        f, w = _design(ch.matrix, method, res, config.num_rf_tx, config.num_rf_rx, config.num_streams)
        out[(method, res)] = spectral_efficiency(ch.matrix, f.effective, w.effective, snr_lin,
                                                 config.num_streams)
    return out


def _map_trials(fn, trials: int, workers: int = 1) -> list:
    if workers <= 1:
        return [fn(t) for t in range(trials)]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials)))


class _Bound:
    # picklable partial for process pools
    def __init__(self, fn, *args):
        self.fn, self.args = fn, args

    def __call__(self, trial):
        return self.fn(self.args[0], trial, *self.args[1:])


def run_se_sweep(config: ExperimentConfig, workers: int = 1) -> Table:
    """Mean spectral efficiency per (SNR, method, resolution) over paired trials."""
    config.validate()
    schemes = _schemes(config)
    snr_db = np.asarray(config.snr_db_list, dtype=float)
    snr_lin = 10 ** (snr_db / 10)
    per_trial = _map_trials(_Bound(_se_trial, config, schemes, snr_lin), config.trials, workers)
    rows = []
    for i, s in enumerate(snr_db):
        for method, res in schemes:
            vals = np.array([t[(method, res)][i] for t in per_trial])
            rows.append((s, method, str(res), vals.mean(), vals.std(), config.trials))
    return Table("se_sweep", rows)


def _ee_trial(config: ExperimentConfig, trial: int) -> dict:
    tx, rx = ArrayGeometry(config.num_tx), ArrayGeometry(config.num_rx)
    ch = sample_channel(tx, rx, config.channel, trial_rng(config.seed, trial))
    snr = 10 ** (config.ee_snr_db / 10)
    out = {}
    for n_rf in config.rf_chain_list:
        for arch, method, res in (("full_digital", "full_digital", INF),
                                  ("ps_hybrid", "pe_altmin", INF),
                                  ("pos_sw_hybrid", config.ee_method, config.ee_resolution)):
            f, w = _design(ch.matrix, method, res, n_rf, n_rf, n_rf)
            out[(n_rf, arch)] = spectral_efficiency(ch.matrix, f.effective, w.effective, snr, n_rf)
        if config.shared_se:
            out[(n_rf, "pos_sw_hybrid")] = out[(n_rf, "ps_hybrid")]
    return out


def run_ee_sweep(config: ExperimentConfig, workers: int = 1) -> Table:
    """Energy efficiency per (RF chains, architecture), with N_s = N_rf^t = N_rf^r.

    With ``shared_se`` the POS-SW row reuses the PS-hybrid spectral efficiency,
    isolating the power difference.
    """
    config.validate()
    per_trial = _map_trials(_Bound(_ee_trial, config), config.trials, workers)
    rows = []
    for n_rf in config.rf_chain_list:
        for kind in ("full_digital", "ps_hybrid", "pos_sw_hybrid"):
            arch = (Architecture.full_digital(config.num_tx) if kind == "full_digital"
                    else Architecture(kind, config.num_tx, n_rf))
            se = np.array([t[(n_rf, kind)] for t in per_trial])
            ee = energy_efficiency(se, arch, config.power)
            rows.append((n_rf, kind, total_power(arch, config.power), se.mean(), ee.mean(),
                         ee.std(), config.trials))
    return Table("ee_sweep", rows)


def beam_angles_deg(step: float = 0.1, stop: float = 90.0) -> np.ndarray:
    # integer multiples of the step, so grid points such as 45.0 are exact
    n = int(round(stop / step))
    return np.arange(n + 1) * (stop / n)


def run_beampattern(config: ExperimentConfig) -> Table:
    """Beam patterns of phase-quantized steering vectors, in dB relative to the peak."""
    config.validate()
    grid_deg = beam_angles_deg(config.angle_step_deg)
    grid = np.deg2rad(grid_deg)
    rows = []
    for res in config.phase_resolutions:
        for n_t in config.antenna_list:
            geom = ArrayGeometry(int(n_t))
            for dod in config.dods_deg:
                target = array_response_deg(geom, dod)
                f = target if res == INF else quantize_phases(target, PhaseAlphabet(res)).realize()[:, 0]
                _, gain = beam_pattern(f, geom, grid)
                peak = gain.max()
                floor = 10 ** (config.gain_floor_db / 10)
                gain_db = 10 * np.log10(np.maximum(gain / peak, floor))
                rows.extend((str(res), n_t, dod, a, g) for a, g in zip(grid_deg, gain_db))
    return Table("beampattern", rows)


def array_response_deg(geometry: ArrayGeometry, angle_deg: float) -> np.ndarray:
    return array_response(geometry, np.deg2rad(angle_deg))


def _on_grid_channel(dictionary: AngleDictionary, num_paths: int, rng):
    g = dictionary.grid_size
    flat = rng.choice(g * g, size=num_paths, replace=False)
    support = [(int(i // g), int(i % g)) for i in flat]  # (tx index, rx index)
    gains = (rng.standard_normal(num_paths) + 1j * rng.standard_normal(num_paths)) / np.sqrt(2)
    paths = [Path(complex(c), float(dictionary.tx_grid[t]), float(dictionary.rx_grid[r]))
             for c, (t, r) in zip(gains, support)]
    h = channel_from_paths(paths, dictionary.tx, dictionary.rx, normalization=1.0)
    return h, set(support)


def _estimation_trial(config: ExperimentConfig, trial: int, snr_lin) -> dict:
    rng = trial_rng(config.seed, trial)
    tx, rx = ArrayGeometry(config.num_tx), ArrayGeometry(config.num_rx)
    dictionary = AngleDictionary(tx, rx, config.grid_size or 2 * max(config.num_tx, config.num_rx))
    if config.synthetic == "on_grid":
        h, truth = _on_grid_channel(dictionary, config.num_paths, rng)
    else:
        h, truth = sample_channel(tx, rx, config.channel, rng).matrix, None
    out = {}
    for kind in config.training_kinds:
        training = generate_training(kind, config.num_tx, config.num_rx,
                                     config.num_tx_beams, config.num_rx_beams, rng)
        sensing = build_sensing_matrix(training, dictionary)
        coherence = mutual_coherence(training.tx_training) if config.num_tx_beams > 1 else 0.0
        for i, snr in enumerate(snr_lin):
            y = measure(h, training, snr, rng)
            est = estimate_channel(y, training, dictionary, config.sparsity, sensing=sensing)
            recovered = float(set(est.support) == truth) if truth is not None else float("nan")
            out[(i, kind)] = (nmse(h, est.reconstructed), recovered, coherence)
    return out


def run_estimation(config: ExperimentConfig, workers: int = 1) -> Table:
    """OMP channel-estimation NMSE, support recovery and training coherence per (SNR, kind).

    ``snr_db_list`` entries may be ``inf`` for noiseless measurements.
    """
    config.validate()
    snr_db = np.array([float(s) for s in config.snr_db_list])
    snr_lin = np.where(np.isinf(snr_db), np.inf, 10 ** (snr_db / 10))
    per_trial = _map_trials(_Bound(_estimation_trial, config, snr_lin), config.trials, workers)
    rows = []
    for i, s in enumerate(snr_db):
        for kind in config.training_kinds:
            vals = np.array([t[(i, kind)] for t in per_trial])
            rows.append((s, kind, vals[:, 0].mean(), vals[:, 0].std(), vals[:, 1].mean(),
                         vals[:, 2].mean(), config.trials))
    return Table("estimation", rows)


def run(config: ExperimentConfig, workers: int = 1) -> Table:
    if config.experiment == "se_sweep":
        return run_se_sweep(config, workers)
    if config.experiment == "ee_sweep":
        return run_ee_sweep(config, workers)
    if config.experiment == "beampattern":
        return run_beampattern(config)
    return run_estimation(config, workers)
