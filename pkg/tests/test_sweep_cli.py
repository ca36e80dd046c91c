import csv
import io
import json
from pathlib import Path

import numpy as np
import yaml
from oracles import lambda_rhs, rk4

from noneq_atomdyn.atom_dynamics import lambda_rate_matrix
from noneq_atomdyn.matprops import GAAS, surface_resonance
from noneq_atomdyn.rates import DipoleSpec, ThermalEnv, gamma0, transition_rates
from noneq_atomdyn.slab_optics import Geometry
from noneq_atomdyn.sweep_cli import JOBS_ENV, main

GOLDEN = Path(__file__).parent / "golden"

BASE = {
    "schema_version": 1,
    "material": {"model": "gaas"},
    "scheme": {"type": "two_level"},
    "omega": {"values": [1.2], "unit": "omega_r"},
    "geometry": {"z": {"values": [0.3], "unit": "um"}, "delta": {"values": [2], "unit": "um"}},
    "temperatures": [{"T_W": 300, "T_M": 50}],
    "dipole": {"preset": "isotropic"},
}

LAMBDA = {
    "type": "lambda",
    "omega31": {"values": [1.0], "unit": "omega_p"},
    "omega32": {"values": [1.02], "unit": "omega_r"},
}


def config(tmp_path, name="cfg.yaml", **changes):
    raw = dict(BASE, **changes)
    if changes.get("scheme", {}).get("type") == "lambda":
        del raw["omega"]
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw))
    return str(path)


def run(args, tmp_path):
    out = tmp_path / "out.csv"
    code = main([*args, "--out", str(out)])
    text = out.read_text() if out.exists() else ""
    return code, text


def table(text):
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


# ---------------------------------------------------------------- config errors


def test_unknown_key_is_config_error(tmp_path, capsys):
    code, _ = run(["rates", "--config", config(tmp_path, colour="blue")], tmp_path)
    assert code == 2
    assert "colour" in capsys.readouterr().err


def test_empty_axis_names_the_axis(tmp_path, capsys):
    geo = {"z": {"values": [], "unit": "um"}, "delta": {"values": [1], "unit": "um"}}
    code, _ = run(["rates", "--config", config(tmp_path, geometry=geo)], tmp_path)
    assert code == 2
    assert "geometry.z" in capsys.readouterr().err


def test_unsorted_times_rejected(tmp_path, capsys):
    cfg = config(tmp_path, times={"values": [0, 2e-6, 1e-6], "unit": "s"})
    code, _ = run(["dynamics", "--config", cfg], tmp_path)
    assert code == 2
    assert "times" in capsys.readouterr().err


def test_config_and_preset_are_exclusive(tmp_path):
    code, _ = run(["rates", "--config", config(tmp_path), "--preset", "fig2"], tmp_path)
    assert code == 2


def test_bad_jobs_env(tmp_path, monkeypatch):
    monkeypatch.setenv(JOBS_ENV, "many")
    code, _ = run(["rates", "--config", config(tmp_path)], tmp_path)
    assert code == 2


def test_all_rows_failed_exit_code(tmp_path):
    cfg = config(tmp_path, scheme=LAMBDA, temperatures=[{"T_W": 0, "T_M": 0}])
    code, text = run(["steady", "--config", cfg], tmp_path)
    assert code == 3
    assert {r["status"] for r in table(text)} == {"BothChannelsDark"}


# ---------------------------------------------------------------- wrapper fidelity


def test_single_point_matches_library_bit_for_bit(tmp_path):
    code, text = run(["rates", "--config", config(tmp_path)], tmp_path)
    assert code == 0
    (row,) = table(text)
    r = transition_rates(1.2 * GAAS.omega_r, DipoleSpec.isotropic(), Geometry(0.3e-6, 2e-6), GAAS,
                         ThermalEnv(T_M=50.0, T_W=300.0))
    assert float(row["alpha_W"]) == r.alpha_W
    assert float(row["alpha_M"]) == r.alpha_M
    assert float(row["n_eff"]) == r.n_eff
    assert float(row["T_eff"]) == r.T_eff
    assert float(row["gamma_down_over_gamma0"]) == r.gamma_down / r.gamma0
    assert float(row["gamma_up_over_gamma0"]) == r.gamma_up / r.gamma0
    assert row["status"] == "ok"


def test_jobs_do_not_change_output(tmp_path, monkeypatch):
    geo = {"z": {"log": [0.01, 10, 5], "unit": "um"}, "delta": {"values": [0.1, 2], "unit": "um"}}
    cfg = config(tmp_path, geometry=geo)
    outs = []
    for jobs in ("1", "2"):
        path = tmp_path / f"out{jobs}.csv"
        assert main(["sweep", "--config", cfg, "--jobs", jobs, "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    monkeypatch.setenv(JOBS_ENV, "2")
    path = tmp_path / "env.csv"
    assert main(["sweep", "--config", cfg, "--out", str(path)]) == 0
    outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    assert len(table(outs[0].decode())) == 10


def test_json_rows_match_csv(tmp_path):
    cfg = config(tmp_path)
    _, text = run(["steady", "--config", cfg], tmp_path)
    path = tmp_path / "out.json"
    assert main(["steady", "--config", cfg, "--format", "json", "--out", str(path)]) == 0
    doc = json.loads(path.read_text())
    (row,) = table(text)
    assert doc["metadata"]["command"] == "steady"
    assert list(doc["rows"][0]) == list(row)
    assert doc["rows"][0]["rho22"] == float(row["rho22"])


def test_csv_metadata_header(tmp_path):
    _, text = run(["rates", "--config", config(tmp_path)], tmp_path)
    meta = [line for line in text.splitlines() if line.startswith("#")]
    assert [m.split(":")[0] for m in meta] == ["# program", "# command", "# constants_sha256", "# config"]


# ---------------------------------------------------------------- physics through the CLI


def test_fig2_ote_between_equilibrium_curves(tmp_path):
    code, text = run(["figure", "fig2"], tmp_path)
    assert code == 0
    rows = table(text)
    by_z = {}
    for r in rows:
        by_z.setdefault(r["z"], {})[(float(r["T_W"]), float(r["T_M"]))] = float(r["gamma_up_over_gamma0"])
    for vals in by_z.values():
        lo, hi = vals[(100.0, 100.0)], vals[(600.0, 600.0)]
        for key in ((600.0, 100.0), (100.0, 600.0)):
            assert lo * (1 - 1e-12) <= vals[key] <= hi * (1 + 1e-12)


def test_fig7_has_population_inversion(tmp_path):
    code, text = run(["figure", "fig7"], tmp_path)
    assert code == 0
    assert max(float(r["ratio_22_11"]) for r in table(text)) > 1.0


def test_fig8a_minimum_closest_temperature(tmp_path):
    code, text = run(["figure", "fig8a"], tmp_path)
    assert code == 0
    t_min = min(float(r["T_closest"]) for r in table(text))
    assert abs(t_min - 5.0) <= 2.0


def test_equilibrium_rho22_constant_across_z(tmp_path):
    geo = {"z": {"log": [0.01, 10, 7], "unit": "um"}, "delta": {"values": [1], "unit": "cm"}}
    cfg = config(tmp_path, omega={"values": [1.0], "unit": "omega_p"}, geometry=geo,
                 temperatures=[{"T_W": 300, "T_M": 300}])
    code, text = run(["steady", "--config", cfg], tmp_path)
    assert code == 0
    rho22 = [float(r["rho22"]) for r in table(text)]
    assert np.ptp(rho22) < 1e-8


def test_dynamics_vacuum_decay(tmp_path):
    w = 1.2 * GAAS.omega_r
    g0 = gamma0(w, DipoleSpec().magnitude)
    cfg = config(tmp_path, material={"model": "vacuum"}, omega={"values": [float(w)], "unit": "rad/s"},
                 temperatures=[{"T_W": 0, "T_M": 0}],
                 times={"lin": [0, float(60 / g0), 13], "unit": "s"}, initial_state="excited")
    code, text = run(["dynamics", "--config", cfg], tmp_path)
    assert code == 0
    rows = table(text)
    t = np.array([float(r["t"]) for r in rows])
    np.testing.assert_allclose([float(r["rho22"]) for r in rows], np.exp(-g0 * t), rtol=1e-12, atol=1e-300)
    assert {r["status"] for r in rows} == {"ok"}


def test_dynamics_fig6a_against_rk4(tmp_path):
    env = ThermalEnv(T_M=50.0, T_W=300.0)
    geom = Geometry(0.5e-6, 0.01e-6)
    d = DipoleSpec.isotropic()
    r31 = transition_rates(surface_resonance(GAAS), d, geom, GAAS, env)
    r32 = transition_rates(1.02 * GAAS.omega_r, d, geom, GAAS, env)
    lam = np.sort(np.abs(np.linalg.eigvals(lambda_rate_matrix(r31, r32))))[1]
    t_end = 5.0 / lam
    geo = {"z": {"values": [0.5], "unit": "um"}, "delta": {"values": [0.01], "unit": "um"}}
    cfg = config(tmp_path, scheme=LAMBDA, geometry=geo, times={"lin": [0, float(t_end), 11], "unit": "s"},
                 initial_state="ground")
    code, text = run(["dynamics", "--config", cfg], tmp_path)
    assert code == 0
    rows = table(text)
    ts = np.array([float(r["t"]) for r in rows])
    f = lambda_rhs(r31.gamma_down, r31.gamma_up, r32.gamma_down, r32.gamma_up, (0.0, 0.0, 0.0))
    ref = rk4(f, [1, 0, 0, 0, 0, 0], ts, 4000)
    got = np.array([[float(r[f"rho{i}{i}"]) for i in (1, 2, 3)] for r in rows])
    np.testing.assert_allclose(got, ref[:, :3].real, atol=1e-8)


def test_dynamics_final_row_checked_against_steady_state(tmp_path):
    w = 1.2 * GAAS.omega_r
    g0 = gamma0(w, DipoleSpec().magnitude)
    cfg = config(tmp_path, times={"values": [0, float(1e4 / g0)], "unit": "s"}, initial_state="mixed")
    code, text = run(["dynamics", "--config", cfg], tmp_path)
    assert code == 0
    assert table(text)[-1]["status"] == "ok"


# ---------------------------------------------------------------- presets and validate


def test_figure_list(capsys):
    assert main(["figure", "--list"]) == 0
    names = capsys.readouterr().out.split()
    assert names == ["fig13", "fig14", "fig15", "fig2", "fig5", "fig6a", "fig7", "fig8a"]


def test_unknown_preset(tmp_path):
    code, _ = run(["figure", "fig99"], tmp_path)
    assert code == 2


def test_validate_passes(capsys):
    assert main(["validate"]) == 0
    assert capsys.readouterr().out.rstrip().endswith("checks passed")


def test_validate_detects_bad_constant(capsys):
    assert main(["validate", "--inject-constant", "K_B=1.5e-23"]) == 1
    out = capsys.readouterr().out
    assert "constants_codata_2018" in out and "FAIL" in out


def test_validate_rejects_malformed_override():
    assert main(["validate", "--inject-constant", "K_B"]) == 2


def _mask_measured(text):
    lines = []
    for line in text.splitlines():
        parts = line.split()
        if len(parts) == 5 and parts[2] in ("<=", ">="):
            parts[1] = "*"
            lines.append(" ".join(parts))
        else:
            lines.append(line)
    return lines


def test_validate_report_format_golden(capsys):
    main(["validate"])
    got = capsys.readouterr().out
    want = (GOLDEN / "validate_report.txt").read_text()
    assert _mask_measured(got) == _mask_measured(want)
    # fixed-width columns: every check line has the relation at the same offset
    offsets = {line.index(" <= ") if " <= " in line else line.index(" >= ")
               for line in got.splitlines() if " <= " in line or " >= " in line}
    assert len(offsets) == 1
