import json
import warnings
from pathlib import Path

import numpy as np
import pytest

from snailtwpa.cli import main
from snailtwpa.calibration import SntjModel, sntj_noise_power
from snailtwpa.gaussian import sample_gaussian, write_quadrature_csv
from snailtwpa.snail import SnailParams, coefficients


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def read_result_csv(out_dir):
    lines = Path(out_dir, "result.csv").read_text().splitlines()
    comments = [l for l in lines if l.startswith("#")]
    header = [l for l in lines if not l.startswith("#")][0].split(",")
    rows = [
        [float(x) for x in l.split(",")]
        for l in lines
        if not l.startswith("#") and not l[0].isalpha()
    ]
    return comments, header, np.array(rows)


# --- coeffs -----------------------------------------------------------------


def test_coeffs_beta_antisymmetric(tmp_path):
    cfg = write_config(tmp_path, {"r": 0.07, "flux_min": -2.0, "flux_max": 2.0, "n_points": 401})
    out = tmp_path / "run"
    assert main(["coeffs", "--config", cfg, "--out", str(out)]) == 0
    comments, header, rows = read_result_csv(out)
    assert any("schema=" in c for c in comments)
    assert any("config_sha256=" in c for c in comments)
    assert header == ["flux_phi0", "alpha_tilde", "beta", "gamma"]
    beta = rows[:, 2]
    np.testing.assert_allclose(beta, -beta[::-1], atol=1e-10)


def test_coeffs_zero_flux_row_matches_module(tmp_path):
    cfg = write_config(tmp_path, {"r": 0.07, "flux_min": 0.0, "flux_max": 0.5, "n_points": 2})
    out = tmp_path / "run"
    assert main(["coeffs", "--config", cfg, "--out", str(out)]) == 0
    _, _, rows = read_result_csv(out)
    ref = coefficients(SnailParams.from_flux(0.07, 2.19e-6, 0.0))
    assert rows[0, 1] == pytest.approx(ref.alpha_tilde, abs=1e-12)
    assert rows[0, 2] == 0.0
    assert rows[0, 3] == pytest.approx(ref.gamma, abs=1e-12)


def test_coeffs_empty_grid_is_config_error(tmp_path):
    cfg = write_config(tmp_path, {"n_points": 0})
    assert main(["coeffs", "--config", cfg, "--out", str(tmp_path / "x")]) == 2


def test_unknown_key_rejected(tmp_path):
    cfg = write_config(tmp_path, {"r": 0.07, "bogus_key": 1})
    assert main(["coeffs", "--config", cfg, "--out", str(tmp_path / "x")]) == 2


def test_missing_config_file_is_config_error(tmp_path):
    assert main(["coeffs", "--config", str(tmp_path / "absent.json"), "--out", str(tmp_path / "x")]) == 2


def test_rerun_byte_identical(tmp_path):
    cfg = write_config(tmp_path, {"r": 0.07, "flux_min": -1.0, "flux_max": 1.0, "n_points": 51})
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["coeffs", "--config", cfg, "--out", str(out_a)]) == 0
    assert main(["coeffs", "--config", cfg, "--out", str(out_b)]) == 0
    assert (out_a / "result.csv").read_bytes() == (out_b / "result.csv").read_bytes()
    assert (out_a / "meta.json").read_bytes() == (out_b / "meta.json").read_bytes()


# --- flux-sweep ---------------------------------------------------------------


def test_flux_sweep_small_chain(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "chain": {"n_cells": 6, "disorder_amplitude": 0.05, "rng_seed": 3},
            "drive": {"window": 6e-9, "settle_time": 3e-9},
            "flux_min": 0.45,
            "flux_max": 0.59,
            "n_points": 2,
        },
    )
    out = tmp_path / "run"
    assert main(["flux-sweep", "--config", cfg, "--out", str(out)]) == 0
    _, header, rows = read_result_csv(out)
    assert header == ["flux_phi0", "idler_3wm_dbm", "idler_4wm_dbm"]
    assert rows.shape == (2, 3)
    meta = json.loads((out / "meta.json").read_text())
    assert meta["phi1_phi0"] == 0.59 and meta["phi2_phi0"] == 0.45
    assert meta["phi1_row"] == 1 and meta["phi2_row"] == 0
    # determinism of a transient-backed command
    out_b = tmp_path / "run_b"
    assert main(["flux-sweep", "--config", cfg, "--out", str(out_b)]) == 0
    assert (out / "result.csv").read_bytes() == (out_b / "result.csv").read_bytes()


# --- gain-phase -----------------------------------------------------------------


def test_gain_phase_zero_pump_flat(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "chain": {"n_cells": 6, "disorder_amplitude": 0.05, "rng_seed": 3},
            "flux": 0.59,
            "pump_current": 0.0,
            "n_phases": 4,
            "window": 6e-9,
            "settle_time": 3e-9,
        },
    )
    out = tmp_path / "run"
    assert main(["gain-phase", "--config", cfg, "--out", str(out)]) == 0
    _, _, rows = read_result_csv(out)
    np.testing.assert_array_equal(rows[:, 1], np.zeros(4))


# --- sms / tms -------------------------------------------------------------------


def test_sms_vacuum_target(tmp_path):
    cfg = write_config(
        tmp_path,
        {"target_s_db": 0.0, "added_noise_photons": 1.0, "n_rep": 200000, "seed": 5},
    )
    out = tmp_path / "run"
    assert main(["sms", "--config", cfg, "--out", str(out)]) == 0
    payload = json.loads((out / "result.json").read_text())
    res = payload["results"][0]
    assert abs(res["s_x_db"]) < 4.0 * res["stat_err_x_db"]
    assert abs(res["s_p_db"]) < 4.0 * res["stat_err_p_db"]


def test_sms_squeezed_target_recovery(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "target_s_db": -3.0103,
            "added_noise_photons": 1.5,
            "n_rep": 3_000_000,
            "seed": 7,
        },
    )
    out = tmp_path / "run"
    assert main(["sms", "--config", cfg, "--out", str(out)]) == 0
    res = json.loads((out / "result.json").read_text())["results"][0]
    assert res["s_x_db"] == pytest.approx(-3.0103, abs=0.1)


def test_sms_identical_on_off_file_gives_exact_vacuum(tmp_path):
    batch_on = sample_gaussian(3.0 * np.eye(2), n_rep=500, seed=1, pump_state="ON")
    batch_off = sample_gaussian(3.0 * np.eye(2), n_rep=500, seed=1, pump_state="OFF")
    np.testing.assert_array_equal(batch_on.records, batch_off.records)
    path = tmp_path / "quad.csv"
    write_quadrature_csv(path, [batch_on, batch_off])
    cfg = write_config(tmp_path, {"input_csv": str(path)})
    out = tmp_path / "run"
    assert main(["sms", "--config", cfg, "--out", str(out)]) == 0
    payload = json.loads((out / "result.json").read_text())
    assert payload["s_x_db"] == 0.0
    assert payload["s_p_db"] == 0.0
    entries = np.array(payload["covariance"]["entries"])
    np.testing.assert_array_equal(entries, np.eye(2))


def test_tms_zero_r_and_monotone(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "r_values": [0.0, 0.3, 0.6, 0.9],
            "added_noise_photons": 1.0,
            "n_rep": 400000,
            "seed": 3,
        },
    )
    out = tmp_path / "run"
    assert main(["tms", "--config", cfg, "--out", str(out)]) == 0
    results = json.loads((out / "result.json").read_text())["results"]
    assert results[0]["e_n"] < 0.02  # statistical zero
    e_n = [r["e_n"] for r in results]
    assert e_n[1] < e_n[2] < e_n[3]
    assert results[-1]["e_n_true"] == pytest.approx(1.8, abs=1e-9)


def test_tms_gain_drift_artifact(tmp_path):
    # an OFF background recorded at slightly higher gain than during the ON
    # sequence over-subtracts, which can fake entanglement at zero squeezing
    cfg = write_config(
        tmp_path,
        {
            "r_values": [0.0],
            "added_noise_photons": 4.0,
            "n_rep": 300000,
            "seed": 9,
            "gain_drift": -0.02,
        },
    )
    out = tmp_path / "run"
    assert main(["tms", "--config", cfg, "--out", str(out)]) == 0
    results = json.loads((out / "result.json").read_text())["results"]
    assert results[0]["e_n"] > 0.05  # spurious negativity from the drift


def test_tms_thermal_noise_kills_entanglement(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "r_values": [0.4],
            "added_noise_photons": 1.0,
            "thermal_photons": 2.0,
            "n_rep": 400000,
            "seed": 4,
        },
    )
    out = tmp_path / "run"
    assert main(["tms", "--config", cfg, "--out", str(out)]) == 0
    results = json.loads((out / "result.json").read_text())["results"]
    # A = B = (cosh 2r + 2 n_th) with n_th beyond the separability threshold
    assert results[0]["e_n"] == 0.0


# --- sntj-fit ---------------------------------------------------------------------


def test_sntj_fit_command(tmp_path):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = SntjModel(
            frequency=3.8525e9, bandwidth=3e3, t_electron=0.05, t_sys=4.0, g_sys=10**6.17
        )
    hf_e = 6.62607015e-34 * model.frequency / 1.602176634e-19
    v = np.linspace(-8 * hf_e, 8 * hf_e, 801)
    rng = np.random.default_rng(11)
    y = sntj_noise_power(model, v) * (1 + 0.005 * rng.standard_normal(v.size))
    csv = tmp_path / "sntj.csv"
    np.savetxt(csv, np.column_stack([v, y]), delimiter=",")
    cfg = write_config(
        tmp_path,
        {
            "csv": str(csv),
            "frequency": model.frequency,
            "bandwidth": 3e3,
            "initial_guess": {"g_sys_db": 60.0, "t_sys": 3.0, "t_electron": 0.04},
        },
    )
    out = tmp_path / "run"
    assert main(["sntj-fit", "--config", cfg, "--out", str(out)]) == 0
    payload = json.loads((out / "result.json").read_text())
    assert payload["g_sys_db"] == pytest.approx(61.7, abs=0.05)
    assert payload["n_iterations"] > 0
    assert payload["errors"]["t_sys_kelvin"] > 0


def test_sntj_fit_missing_csv_is_config_error(tmp_path):
    cfg = write_config(
        tmp_path, {"csv": str(tmp_path / "none.csv"), "frequency": 4e9, "bandwidth": 3e3}
    )
    assert main(["sntj-fit", "--config", cfg, "--out", str(tmp_path / "x")]) == 2


def test_sntj_fit_runtime_error_exit_code(tmp_path):
    # bias range below 2hf/e -> IllConditioned -> exit 1
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = SntjModel(
            frequency=3.8525e9, bandwidth=3e3, t_electron=0.05, t_sys=4.0, g_sys=10**6.17
        )
    hf_e = 6.62607015e-34 * model.frequency / 1.602176634e-19
    v = np.linspace(-hf_e, hf_e, 101)
    csv = tmp_path / "sntj.csv"
    np.savetxt(csv, np.column_stack([v, sntj_noise_power(model, v)]), delimiter=",")
    cfg = write_config(tmp_path, {"csv": str(csv), "frequency": model.frequency, "bandwidth": 3e3})
    assert main(["sntj-fit", "--config", cfg, "--out", str(tmp_path / "x")]) == 1


# --- normalize / attenuation --------------------------------------------------------


def test_normalize_command(tmp_path):
    cfg = write_config(
        tmp_path,
        {"g_sys_db": 61.7, "f_acq": 3.8525e9, "chain": {}, "flux": 0.0},
    )
    out = tmp_path / "run"
    assert main(["normalize", "--config", cfg, "--out", str(out)]) == 0
    payload = json.loads((out / "result.json").read_text())
    assert payload["g_sys_db_corrected"] == pytest.approx(62.7)
    assert payload["upsilon"] == pytest.approx(168941.6041084582, rel=1e-6)


def test_attenuation_command(tmp_path):
    cfg = write_config(tmp_path, {"s21_off_db": -10.0, "eta_db": -1.0, "g_sys_db": 61.0})
    out = tmp_path / "run"
    assert main(["attenuation", "--config", cfg, "--out", str(out)]) == 0
    payload = json.loads((out / "result.json").read_text())
    assert payload["a_in_db"] == pytest.approx(-70.0)


def test_attenuation_requires_inputs(tmp_path):
    cfg = write_config(tmp_path, {"s21_off_db": -10.0})
    assert main(["attenuation", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
