import json
from pathlib import Path

import pandas as pd
import pytest

from main import main
from utils.export_utils import ExportUtils


def run(tmp_path: Path, *args) -> int:
    return main(["--out-dir", str(tmp_path), *args])


def read_table(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def test_reproduce_table_2(tmp_path):
    assert run(tmp_path, "reproduce", "--table", "2") == 0
    path = tmp_path / "table_2.csv"
    frame = read_table(path)
    assert list(frame.columns[:7]) == ["dataset", "cp_w", "w_prime_j", "p_work_w", "p_rec_w", "t_rec_s",
                                       "observed_ratio_pct"]
    assert frame["skib"].tolist() == pytest.approx([15.5, 28.7, 49.1, 63.7, 74.1, 81.5, 96.6, 99.4], abs=0.2)
    assert frame["hydraulic"].tolist() == pytest.approx([26.9, 41.2, 49.8, 52.8, 54.7, 56.3, 64.9, 73.8], abs=2.0)

    manifest = ExportUtils.read_manifest(path)
    assert manifest["command"] == "reproduce"
    assert manifest["parameters"]["table"] == 2
    sidecar = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert sidecar["finished_at"] is not None


def test_reproduce_is_byte_identical(tmp_path):
    assert run(tmp_path / "a", "reproduce", "--table", "4") == 0
    assert run(tmp_path / "b", "reproduce", "--table", "4") == 0
    assert (tmp_path / "a" / "table_4.csv").read_bytes() == (tmp_path / "b" / "table_4.csv").read_bytes()


def test_reproduce_published_source(tmp_path):
    assert run(tmp_path, "reproduce", "--table", "3", "--source", "published") == 0
    frame = read_table(tmp_path / "table_3.csv")
    assert frame["bart"].tolist() == pytest.approx([41.6, 33.3, 21.3])


def test_reproduce_table_reloads_as_dataset(tmp_path):
    from utils.datasets import builtin_dataset, load_csv

    assert run(tmp_path, "reproduce", "--table", "3") == 0
    assert load_csv(tmp_path / "table_3.csv").same_observations(builtin_dataset("chidnok"))


def test_reproduce_json_format(tmp_path):
    assert run(tmp_path, "--format", "json", "reproduce", "--table", "1") == 0
    payload = json.loads((tmp_path / "table_1.json").read_text(encoding="utf-8"))
    assert len(payload["rows"]) == 5
    assert payload["manifest"]["command"] == "reproduce"


def test_reproduce_summary_published(tmp_path):
    assert run(tmp_path, "reproduce", "--table", "6", "--source", "published", "--samples", "2000") == 0
    metrics = read_table(tmp_path / "table_6.csv")
    row = metrics[(metrics["group"] == "skib_weig_hydraulic") & (metrics["model"] == "hydraulic")].iloc[0]
    assert row["n"] == 19
    assert row["mae"] == pytest.approx(7.07, abs=0.01)
    assert row["rmse"] == pytest.approx(9.94, abs=0.01)
    aicc = metrics[metrics["group"] == "aicc"].set_index("model")["aicc"]
    assert aicc["weig"] == pytest.approx(181.03, abs=0.05)
    assert aicc["hydraulic"] == pytest.approx(151.85, abs=0.05)

    tests = read_table(tmp_path / "table_6_tests.csv")
    assert len(tests) == 8
    assert tests["p_value"].between(0.0, 1.0).all()


def test_reproduce_summary_computed(tmp_path):
    assert run(tmp_path, "reproduce", "--table", "6", "--samples", "1000") == 0
    metrics = read_table(tmp_path / "table_6.csv")
    bart = metrics[(metrics["group"] == "bart_vs_hydraulic") & (metrics["model"] == "bart")].iloc[0]
    assert bart["mae"] == pytest.approx(24.87, abs=0.3)
    hydraulic = metrics[(metrics["group"] == "skib_weig_hydraulic") & (metrics["model"] == "hydraulic")].iloc[0]
    assert hydraulic["mae"] == pytest.approx(7.07, abs=0.3)


def test_reproduce_unknown_table(tmp_path):
    assert run(tmp_path, "reproduce", "--table", "7") == 1


def test_missing_command(tmp_path):
    assert run(tmp_path) == 1


def test_curve_ferguson_bart(tmp_path):
    assert run(tmp_path, "curve", "--dataset", "ferguson", "--model", "wbal-bart",
               "--grid", "120", "360", "900") == 0
    frame = read_table(tmp_path / "curve.csv")
    assert frame["ratio_pct"].tolist() == pytest.approx([85.8, 99.7, 100.0], abs=0.2)
    plot = json.loads((tmp_path / "curve_plot.json").read_text(encoding="utf-8"))
    assert plot["plot"]["x"] == [120.0, 360.0, 900.0]
    assert "bart" in plot["plot"]["series"]


def test_curve_default_grid(tmp_path):
    assert run(tmp_path, "curve", "--dataset", "caen", "--model", "hydraulic", "wbal-weig",
               "--step", "30", "--max", "900") == 0
    frame = read_table(tmp_path / "curve.csv")
    hydraulic = frame[frame["model"] == "hydraulic"].set_index("t_rec_s")["ratio_pct"]
    assert len(hydraulic) == 31
    assert hydraulic[0.0] == pytest.approx(0.0, abs=0.5)
    assert hydraulic[120.0] == pytest.approx(49.8, abs=2.0)


def test_curve_empty_grid(tmp_path):
    assert run(tmp_path, "curve", "--dataset", "caen", "--grid") == 0
    frame = read_table(tmp_path / "curve.csv")
    assert frame.empty
    assert (tmp_path / "manifest.json").exists()


def test_curve_unsustainable(tmp_path):
    assert run(tmp_path, "curve", "--dataset", "caen", "--model", "wbal-skib", "--pwork", "250",
               "--prec", "100", "--grid", "60") == 2


def test_sensitivity_records_failures(tmp_path):
    assert run(tmp_path, "sensitivity", "--dataset", "bartram", "--model", "wbal-skib", "hydraulic",
               "--p-works", "300", "626", "700", "--grid", "60", "120") == 0
    frame = read_table(tmp_path / "sensitivity.csv")
    assert sorted(frame["p_work_w"].unique()) == [626.0, 700.0]
    manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert len(manifest["errors"]) == 2


def test_sensitivity_wbal_invariant(tmp_path):
    assert run(tmp_path, "sensitivity", "--model", "wbal-skib", "--grid", "120", "240") == 0
    frame = read_table(tmp_path / "sensitivity.csv")
    assert frame["p_work_w"].nunique() == 4
    spread = frame.groupby("t_rec_s")["ratio_pct"].agg(lambda s: s.max() - s.min())
    assert (spread < 1e-6).all()


def test_fit_tau_chidnok(tmp_path):
    assert run(tmp_path, "fit", "tau-chidnok", "--prec", "173", "--tte", "557") == 0
    payload = json.loads((tmp_path / "fit_tau-chidnok.json").read_text(encoding="utf-8"))
    [fit] = payload["fits"]
    assert fit["parameters"]["tau"] == pytest.approx(165.19, abs=1.0)


def test_fit_tau_constant(tmp_path):
    assert run(tmp_path, "fit", "tau-constant", "--cp", "269", "--wprime", "19200", "--pwork", "349",
               "--prec", "161", "--trec", "120", "--ratio", "49.08") == 0
    payload = json.loads((tmp_path / "fit_tau-constant.json").read_text(encoding="utf-8"))
    assert payload["fits"][0]["parameters"]["tau"] == pytest.approx(19200.0 / 108.0, abs=1.0)


def test_fit_tau_exp(tmp_path):
    assert run(tmp_path, "fit", "tau-exp") == 0
    payload = json.loads((tmp_path / "fit_tau-exp.json").read_text(encoding="utf-8"))
    [fit] = payload["fits"]
    assert fit["flags"]["rank_deficient"]
    assert set(fit["parameters"]) == {"a", "b", "c"}


def test_simulate_constant(tmp_path, capsys):
    assert run(tmp_path, "simulate", "--dataset", "caen", "--model", "wbal-skib", "--power", "349") == 0
    payload = json.loads((tmp_path / "simulate.json").read_text(encoding="utf-8"))
    assert payload["result"]["tte_s"] == pytest.approx(240.0)
    assert "tte_s=240.00" in capsys.readouterr().out


def test_simulate_intermittent(tmp_path):
    assert run(tmp_path, "simulate", "--dataset", "chidnok", "--tau", "107.45", "--protocol", "intermittent",
               "--power", "329", "--prec", "20", "--work", "60", "--rest", "30") == 0
    payload = json.loads((tmp_path / "simulate.json").read_text(encoding="utf-8"))
    assert payload["result"]["tte_s"] == pytest.approx(1224.0, abs=90.0)


def test_unknown_dataset_is_model_error(tmp_path):
    assert run(tmp_path, "simulate", "--dataset", "nowhere", "--power", "400") == 2


def test_incomplete_athlete_is_usage_error(tmp_path):
    assert run(tmp_path, "simulate", "--cp", "250", "--power", "400") == 1


def test_output_dir_is_a_file(tmp_path):
    target = tmp_path / "occupied"
    target.write_text("x", encoding="utf-8")
    assert main(["--out-dir", str(target), "reproduce", "--table", "1"]) == 3


def test_fit_warm_start_needs_config(tmp_path):
    assert run(tmp_path, "fit", "hydraulic", "--cp", "250", "--wprime", "20000", "--warm-start") == 1
