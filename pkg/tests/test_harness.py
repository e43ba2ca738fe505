import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from posbf import cli
from posbf.channel import ArrayGeometry, ChannelConfig, sample_channel, trial_rng
from posbf.errors import ConfigError, NumericalError
from posbf.harness import ExperimentConfig, Table, run, run_beampattern, run_ee_sweep, run_estimation, run_se_sweep


def small_se(**kw):
    base = dict(experiment="se_sweep", num_tx=8, num_rx=8, num_rf_tx=2, num_rf_rx=2, num_streams=2,
                snr_db_list=[0.0, 10.0], phase_resolutions=[2, 4, "inf"], trials=3, seed=5)
    base.update(kw)
    return ExperimentConfig(**base)


# --- config -----------------------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(trials=0), dict(trials=-3), dict(num_streams=3),
                                dict(num_rf_tx=9, num_streams=2), dict(phase_resolutions=[1]),
                                dict(methods=["magic"]), dict(format="xml"), dict(experiment="nope")])
def test_config_errors(kw):
    with pytest.raises(ConfigError):
        small_se(**kw)


def test_estimation_trials_zero():
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="estimation", trials=0)


def test_from_dict_nested():
    cfg = ExperimentConfig.from_dict({"experiment": "se_sweep", "channel": {"num_clusters": 2, "angle_spread_deg": 1.0},
                                      "power": {"p_switch": 7}})
    assert cfg.channel.num_clusters == 2 and cfg.channel.angle_spread == pytest.approx(np.pi / 180)
    assert cfg.power.p_switch == 7


def test_from_dict_unknown_key():
    with pytest.raises(ConfigError, match="unknown config keys"):
        ExperimentConfig.from_dict({"bogus": 1})


def test_resolution_infinite_aliases():
    assert small_se(phase_resolutions=[2, "infinite", float("inf")]).phase_resolutions == [2, "inf", "inf"]


# --- tables -----------------------------------------------------------------------

@given(st.lists(st.tuples(st.floats(-1e6, 1e6, allow_nan=False), st.sampled_from(["a", "b,c", "x y"]),
                          st.sampled_from(["2", "inf"]), st.floats(0, 1e3), st.floats(0, 1e3),
                          st.integers(1, 10**6)), max_size=6))
def test_csv_json_round_trip(rows):
    t = Table("se_sweep", rows)
    assert Table.from_csv(t.to_csv()) == t
    assert Table.from_json(t.to_json()) == t


def test_csv_header_and_digits():
    text = Table("se_sweep", [(0.0, "pe_altmin", "inf", 1 / 3, 0.0, 5)]).to_csv()
    lines = text.splitlines()
    assert lines[0] == "#schema=1 experiment=se_sweep"
    assert lines[1] == "snr_db,method,resolution,se_mean,se_std,trials"
    assert lines[2] == "0,pe_altmin,inf,0.333333333,0,5"


def test_from_csv_rejects_missing_header():
    with pytest.raises(ValueError):
        Table.from_csv("snr_db,method\n")


# --- SE sweep ---------------------------------------------------------------------------

def test_se_sweep_deterministic_bytes():
    cfg = small_se(trials=1)
    assert run_se_sweep(cfg).to_csv() == run_se_sweep(small_se(trials=1)).to_csv()


def test_se_sweep_workers_match_serial():
    cfg = small_se(trials=4)
    assert run_se_sweep(cfg, workers=2).to_csv() == run_se_sweep(cfg).to_csv()


def test_se_sweep_rows_and_ordering():
    t = run_se_sweep(small_se(trials=5))
    schemes = {(r["method"], r["resolution"]) for r in t.select(snr_db=0.0)}
    assert schemes == {("full_digital", "inf"), ("pe_altmin", "inf"),
                       ("phase_matching", "2"), ("phase_matching", "4")}
    for snr in (0.0, 10.0):
        se = {(r["method"], r["resolution"]): r["se_mean"] for r in t.select(snr_db=snr)}
        assert se[("full_digital", "inf")] >= se[("pe_altmin", "inf")]
        assert se[("phase_matching", "4")] >= se[("phase_matching", "2")]


def test_se_sweep_2x2_hand_svd():
    cfg = ExperimentConfig(experiment="se_sweep", num_tx=2, num_rx=2, num_rf_tx=1, num_rf_rx=1, num_streams=1,
                           snr_db_list=[3.0], methods=["full_digital"], phase_resolutions=["inf"],
                           trials=1, seed=11)
    se = run_se_sweep(cfg).rows[0][3]
    h = sample_channel(ArrayGeometry(2), ArrayGeometry(2), ChannelConfig(), trial_rng(11, 0)).matrix
    g = h.conj().T @ h
    tr, det = np.trace(g).real, np.linalg.det(g).real
    sigma1_sq = (tr + np.sqrt(tr**2 - 4 * det)) / 2
    assert se == pytest.approx(np.log2(1 + 10**0.3 * sigma1_sq), rel=1e-8)


# --- EE sweep -----------------------------------------------------------------------------

def ee_config(**kw):
    base = dict(experiment="ee_sweep", num_tx=64, num_rx=64, rf_chain_list=[1, 6], trials=1, seed=2)
    base.update(kw)
    return ExperimentConfig(**base)


def test_ee_power_columns():
    t = run_ee_sweep(ee_config())
    power = {r["architecture"]: r["power_mw"] for r in t.select(num_rf=6)}
    assert power == {"full_digital": 19900.0, "ps_hybrid": 17860.0, "pos_sw_hybrid": 4420.0}
    assert {r["power_mw"] for r in t.select(architecture="full_digital")} == {19900.0}
    assert all(np.isfinite(r["ee_mean"]) and r["se_mean"] > 0 for r in t.select(num_rf=1))


def test_ee_shared_se_strict():
    t = run_ee_sweep(ee_config(shared_se=True, rf_chain_list=[2, 4]))
    for n in (2, 4):
        ee = {r["architecture"]: r["ee_mean"] for r in t.select(num_rf=n)}
        assert ee["pos_sw_hybrid"] > ee["ps_hybrid"]


# --- beam pattern ---------------------------------------------------------------------------

def test_beampattern_continuous_zero_db_at_dod():
    cfg = ExperimentConfig(experiment="beampattern", phase_resolutions=["inf", 8], antenna_list=[16, 64])
    t = run_beampattern(cfg)
    for n_t in (16, 64):
        for dod in (15.0, 45.0, 75.0):
            assert t.select(resolution="inf", num_tx=n_t, dod_deg=dod, angle_deg=dod)[0]["gain_db"] == 0.0
    rows = t.select(resolution="8", num_tx=64, dod_deg=45.0)
    peak = max(rows, key=lambda r: r["gain_db"])["angle_deg"]
    assert abs(peak - 45) <= 2
    assert len(rows) == 901


def test_beampattern_binary_weak_at_75():
    t = run_beampattern(ExperimentConfig(experiment="beampattern", phase_resolutions=[2, 8], antenna_list=[16],
                                         dods_deg=[75.0]))
    at75 = {r["resolution"]: r["gain_db"] for r in t.select(angle_deg=75.0)}
    assert at75["2"] < at75["8"]


# --- estimation -------------------------------------------------------------------------------

def test_estimation_noiseless_and_coherence():
    cfg = ExperimentConfig(experiment="estimation", num_tx=16, num_rx=16, snr_db_list=["inf", 10.0],
                           trials=20, seed=0)
    t = run_estimation(cfg)
    noiseless = {r["kind"]: r for r in t.select(snr_db=float("inf"))}
    assert noiseless["deterministic"]["support_recovery"] >= 0.9
    assert noiseless["deterministic"]["coherence_mean"] <= noiseless["pseudo_random_binary"]["coherence_mean"]
    assert noiseless["deterministic"]["coherence_mean"] <= noiseless["pseudo_random_quaternary"]["coherence_mean"]
    assert Table.from_csv(t.to_csv()) == t


# --- CLI -----------------------------------------------------------------------------------------

def test_cli_writes_csv(tmp_path):
    cfg = tmp_path / "se.yaml"
    cfg.write_text("num_tx: 8\nnum_rx: 8\nnum_rf_tx: 2\nnum_rf_rx: 2\nnum_streams: 2\n"
                   "snr_db_list: [0]\nphase_resolutions: [4]\nmethods: [phase_matching]\n")
    out = tmp_path / "se.csv"
    assert cli.main(["se-sweep", "--config", str(cfg), "--trials", "2", "--seed", "3", "--out", str(out)]) == 0
    first = out.read_bytes()
    assert first.startswith(b"#schema=1 experiment=se_sweep\n")
    assert cli.main(["se-sweep", "--config", str(cfg), "--trials", "2", "--seed", "3", "--out", str(out)]) == 0
    assert out.read_bytes() == first


def test_cli_json_stdout(capsys):
    assert cli.main(["beampattern", "--format", "json", "--trials", "1"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["experiment"] == "beampattern" and data["columns"][-1] == "gain_db"


def test_cli_config_error(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("trials: 0\n")
    assert cli.main(["ee-sweep", "--config", str(cfg)]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_experiment_mismatch(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("experiment: estimation\n")
    assert cli.main(["se-sweep", "--config", str(cfg)]) == 2


def test_cli_missing_config_file(tmp_path):
    assert cli.main(["se-sweep", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_cli_numerical_failure(monkeypatch, capsys):
    def boom(config, workers=1):
        raise NumericalError("singular combiner")
    monkeypatch.setattr(cli, "run", boom)
    assert cli.main(["se-sweep", "--trials", "1"]) == 3
    assert "singular combiner" in capsys.readouterr().err


def test_run_dispatch():
    t = run(ExperimentConfig(experiment="beampattern", antenna_list=[4], dods_deg=[30.0], phase_resolutions=[2],
                             angle_step_deg=1.0))
    assert t.experiment == "beampattern" and len(t.rows) == 91
