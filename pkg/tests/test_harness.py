import csv
import io
import json
import math

import numpy as np
import pytest

from armimo import cli, harness
from armimo.errors import ConfigError, NoConvergence, UnknownPreset
from armimo.harness import (CSV_HEADER, PRESETS, ResultRow, Scenario, Sweep, emit,
                            figure_preset, load_config, load_json, metadata, parse_range,
                            read_csv, reference_noise, run_scenario, scenario_from_dict)
from armimo.receivers import ReceiverKind


def test_parse_range():
    assert parse_range("0:0.05:0.2") == (0.0, 0.05, 0.1, 0.15, 0.2)
    assert parse_range("1,3,10") == (1.0, 3.0, 10.0)
    assert len(parse_range("0:0.05:0.95")) == 20
    with pytest.raises(ConfigError):
        parse_range("0:0:1")
    with pytest.raises(ConfigError):
        Sweep.parse("bogus=1,2")
    with pytest.raises(ConfigError):
        Sweep("a", ())


def test_reference_noise_normalization():
    assert reference_noise(90.0, 0.0) == pytest.approx(1e-7)
    assert reference_noise(90.0, 10.0) == pytest.approx(1e-8)


def test_fig1_preset():
    sc = figure_preset("fig1")
    assert (sc.K, sc.N_r, sc.P_p, sc.cdf) == (5, 100, 100.0, True)
    assert set(sc.receivers) == set(ReceiverKind)


def test_fig6_preset_pairs_antennas_with_users():
    sc = figure_preset("fig6")
    assert sc.sweep.var == "K"
    assert {s["nr_per_k"] for s in sc.series} == {2, 3}
    assert {s["a"] for s in sc.series} == {0.0, 0.5, 0.95}
    rows = run_scenario(sc.replace(sweep=Sweep("K", (4.0,))))
    assert all(r.error == "" for r in rows)


def test_fig7_preset():
    sc = figure_preset("fig7")
    assert (sc.N_r, sc.K, sc.sweep.var) == (20, 5, "a_hat")


def test_unknown_preset():
    with pytest.raises(UnknownPreset):
        figure_preset("fig10")


def test_table3_values_in_presets():
    for name in PRESETS:
        sc = figure_preset(name)
        assert (sc.tau_p, sc.tau_d, sc.P_tot, sc.path_loss_db) == (1, 11, 250.0, 90.0)


def test_analysis_only_rows_have_no_monte_carlo():
    rows = run_scenario(figure_preset("fig2").replace(trials=0))
    prop = [r for r in rows if r.receiver == "Proposed"]
    assert all(math.isnan(r.mc_mean_db) and r.trials == 0 for r in rows)
    assert all(np.isfinite(r.deq_thm2_db) and abs(r.deq_thm2_db - r.deq_fp_db) < 1e-7 for r in prop)
    assert all(math.isnan(r.deq_thm2_db) for r in rows if r.receiver != "Proposed")


def test_fig4_optimum_independent_of_antennas():
    rows = run_scenario(figure_preset("fig4"))
    by = {}
    for r in rows:
        k, n = r.series.split(",")
        by[(k, n, r.sweep_value)] = r.pilot_power_mw
    for (k, n, a), p in by.items():
        if n == "N_r=20":
            assert by[(k, "N_r=100", a)] == p


def test_infeasible_pilot_power_is_marked():
    sc = Scenario(K=2, N_r=4, trials=0, sweep=Sweep("P_p", (100.0, 250.0, 300.0)))
    rows = run_scenario(sc)
    assert rows[0].error == ""
    assert rows[1].error.startswith("OutOfDomain") and rows[2].error.startswith("OutOfDomain")


def test_module_errors_carry_point_context(monkeypatch):
    def boom(*a, **k):
        raise NoConvergence("stuck")

    monkeypatch.setattr(harness, "det_equiv_general", boom)
    with pytest.raises(NoConvergence, match=r"P_p=100.0\] stuck"):
        run_scenario(Scenario(K=2, N_r=4, trials=0, sweep=Sweep("P_p", (100.0,))))


def _rows():
    return run_scenario(Scenario(K=2, N_r=4, trials=40, cdf=True, a=0.5,
                                 receivers=("Proposed", "Mrc1"), sweep=Sweep("P_p", (10.0, 50.0))))


def test_emit_empty_is_header_only(tmp_path):
    emit([], "csv", tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == ",".join(CSV_HEADER) + "\n"


def test_csv_parses_strictly(tmp_path):
    rows = _rows()
    emit(rows, "csv", tmp_path / "r.csv")
    with open(tmp_path / "r.csv", newline="") as fh:
        parsed = list(csv.reader(fh, strict=True))
    assert tuple(parsed[0]) == CSV_HEADER
    assert all(len(p) == len(CSV_HEADER) for p in parsed)
    back = read_csv(tmp_path / "r.csv")
    assert len(back) == len(rows)
    for a, b in zip(rows, back):
        assert a.receiver == b.receiver
        assert b.mc_mean_db == pytest.approx(a.mc_mean_db, rel=1e-8)


def test_csv_uses_nine_significant_digits():
    buf = io.StringIO()
    emit([ResultRow("P_p", 1.0, "Proposed", mc_mean_db=1 / 3)], "csv", buf)
    assert "0.333333333," in buf.getvalue()


def test_json_round_trip_is_lossless(tmp_path):
    rows = _rows()
    emit(rows, "json", tmp_path / "r.json", {"note": 1})
    back = load_json(tmp_path / "r.json")
    for a, b in zip(rows, back):
        for f in CSV_HEADER:
            x, y = getattr(a, f), getattr(b, f)
            assert x == y or (isinstance(x, float) and math.isnan(x) and math.isnan(y))
        assert len(b.cdf) == 200 and b.cdf == a.cdf
    assert json.loads((tmp_path / "r.json").read_text())["metadata"] == {"note": 1}


def test_emit_rejects_unknown_format(tmp_path):
    with pytest.raises(ConfigError):
        emit([], "xml", tmp_path / "x")


def test_config_strictness(tmp_path):
    with pytest.raises(ConfigError):
        scenario_from_dict({"K": 2, "colour": "red"})
    with pytest.raises(ConfigError):
        scenario_from_dict({"receivers": ["Telepathy"]})
    with pytest.raises(ConfigError):
        scenario_from_dict({"series": [{"label": "x", "colour": 1}]})
    with pytest.raises(ConfigError):
        scenario_from_dict({"sweep": {"var": "a", "values": [0.1], "step": 2}})
    p = tmp_path / "c.yaml"
    p.write_text("K: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


def test_config_with_preset_base(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("preset: fig2\ntrials: 7\nsweep: P_p=10,20\n")
    sc = load_config(p)
    assert sc.name == "fig2" and sc.trials == 7 and sc.sweep.values == (10.0, 20.0)


def test_metadata_records_normalization():
    meta = metadata(figure_preset("fig2"))
    assert meta["sigma_p2"] == meta["sigma_d2"] == pytest.approx(1e-7)
    assert meta["snr_ref_db"] == 0.0 and meta["c"] == 1.0


def test_determinism_across_threads(tmp_path):
    sc = figure_preset("fig3").replace(trials=150, sweep=Sweep("a", (0.0, 0.9)))
    emit(run_scenario(sc.replace(threads=1)), "csv", tmp_path / "a.csv")
    emit(run_scenario(sc.replace(threads=8)), "csv", tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


# --- CLI -------------------------------------------------------------------------


def _write_cfg(tmp_path, text):
    p = tmp_path / "s.yaml"
    p.write_text(text)
    return str(p)


def test_cli_simulate(tmp_path):
    cfg = _write_cfg(tmp_path, "K: 2\nN_r: 4\na: 0.5\nreceivers: [Proposed, Naive]\n"
                               "sweep: {var: P_p, values: [20, 80]}\n")
    out = tmp_path / "o.csv"
    code = cli.main(["simulate", "--config", cfg, "--out", str(out), "--trials", "64",
                     "--seed", "3", "--threads", "2"])
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 4 and {r.seed for r in rows} == {3} and {r.trials for r in rows} == {64}


def test_cli_simulate_json(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, "K: 2\nN_r: 4\ntrials: 16\ncdf: true\n")
    assert cli.main(["simulate", "--config", cfg, "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert len(payload["rows"][0]["cdf"]) == 200


def test_cli_det_equiv(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, "K: 3\nN_r: 10\nsweep: P_p=50,100\n")
    assert cli.main(["det-equiv", "--config", cfg]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 2 and all(r["mc_mean_db"] == "nan" for r in rows)


def test_cli_pilot_opt(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, "K: 10\nN_r: 20\n")
    assert cli.main(["pilot-opt", "--config", cfg, "--sweep", "a=0:0.05:0.95"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    p = [float(r["pilot_power_mw"]) for r in rows]
    assert len(p) == 20 and all(x > y for x, y in zip(p, p[1:]))


def test_cli_figure(tmp_path):
    assert cli.main(["figure", "--name", "fig8", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "fig8.csv").exists() and (tmp_path / "fig8.json").exists()


def test_cli_config_error_exit_code(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, "K: 2\nbogus: 1\n")
    assert cli.main(["simulate", "--config", cfg]) == 2
    assert "ConfigError" in capsys.readouterr().err


def test_cli_numerical_failure_exit_code(tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise NoConvergence("did not settle")

    monkeypatch.setattr(harness, "det_equiv_general", boom)
    cfg = _write_cfg(tmp_path, "K: 2\nN_r: 4\n")
    assert cli.main(["det-equiv", "--config", cfg]) == 3
    assert "NoConvergence" in capsys.readouterr().err
