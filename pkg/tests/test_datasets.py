from pathlib import Path

import pytest

from core.errors import InvariantError, ParseError, UnknownDatasetError
from models.enums import ModelKind, Role
from utils.datasets import all_builtin, builtin_dataset, builtin_names, dump_csv, load_csv


def write_file(path: Path, content: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(content)


HEADER = "dataset,cp_w,w_prime_j,p_work_w,p_rec_w,t_rec_s,observed_ratio_pct\n"


def test_builtin_names():
    assert builtin_names() == ["bartram", "caen", "chidnok", "ferguson", "weigend"]


def test_bartram():
    dataset = builtin_dataset("bartram")
    assert dataset.athlete.cp == 393.0
    assert dataset.athlete.w_prime == 23300.0
    assert [t.p_rec for t in dataset.trials] == [393.0, 343.0, 293.0, 243.0, 193.0]
    assert dataset.observed == (0.0, 33.0, 47.0, 57.0, 64.0)
    assert all(t.p_work == 626.0 and t.t_rec == 60.0 for t in dataset.trials)


def test_ferguson_and_weigend():
    ferguson = builtin_dataset("ferguson")
    assert [t.t_rec for t in ferguson.trials] == [120.0, 360.0, 900.0]
    assert ferguson.observed == (37.0, 65.0, 86.0)
    weigend = builtin_dataset("Weigend")
    assert len(weigend.trials) == 12
    assert {t.p_work for t in weigend.trials} == {323.0, 285.0}
    assert {t.p_rec for t in weigend.trials} == {81.0, 163.0}


def test_unknown_dataset():
    with pytest.raises(UnknownDatasetError) as info:
        builtin_dataset("unknown")
    assert "bartram" in str(info.value)


def test_roles():
    bartram = builtin_dataset("bartram")
    weigend = builtin_dataset("weigend")
    assert bartram.role(ModelKind.WBAL_BART) is Role.OBSERVED
    assert bartram.published_column(ModelKind.WBAL_BART) == bartram.observed
    assert weigend.role(ModelKind.HYDRAULIC) is Role.FITTED
    assert builtin_dataset("caen").role(ModelKind.HYDRAULIC) is Role.PREDICTED


def test_total_rows():
    assert sum(len(d.trials) for d in all_builtin()) == 31


def test_chidnok_intermittent_observations():
    chidnok = builtin_dataset("chidnok")
    kept = [o for o in chidnok.intermittent if not o.excluded]
    assert [o.tte for o in kept] == [1224.0, 759.0, 557.0]
    assert all(o.p_rec > chidnok.athlete.cp for o in chidnok.intermittent if o.excluded)


def test_csv_round_trip(tmp_path):
    chidnok = builtin_dataset("chidnok")
    path = dump_csv(chidnok, tmp_path / "chidnok.csv")
    loaded = load_csv(path)
    assert loaded.same_observations(chidnok)


def test_csv_with_comments_and_extra_columns(tmp_path):
    path = tmp_path / "table.csv"
    write_file(path, "# manifest: {}\n" + HEADER.strip() + ",hydraulic\n"
               "caen,269,19200,349,161,30,28.6,26.9\n"
               "caen,269,19200,349,161,60,34.8,41.2\n")
    dataset = load_csv(path)
    assert dataset.name == "caen"
    assert [t.t_rec for t in dataset.trials] == [30.0, 60.0]


def test_csv_bad_number(tmp_path):
    path = tmp_path / "bad.csv"
    write_file(path, HEADER + "caen,269,19200,349,161,30,28.6\ncaen,269,19200,349,abc,60,34.8\n")
    with pytest.raises(ParseError) as info:
        load_csv(path)
    assert info.value.row == 3
    assert info.value.column == "p_rec_w"


def test_csv_missing_column(tmp_path):
    path = tmp_path / "bad.csv"
    write_file(path, "dataset,cp_w,w_prime_j\ncaen,269,19200\n")
    with pytest.raises(ParseError) as info:
        load_csv(path)
    assert info.value.column == "p_work_w"


def test_csv_mixed_athletes(tmp_path):
    path = tmp_path / "mixed.csv"
    write_file(path, HEADER + "caen,269,19200,349,161,30,28.6\ncaen,270,19200,349,161,60,34.8\n")
    with pytest.raises(InvariantError):
        load_csv(path)


def test_csv_two_datasets(tmp_path):
    path = tmp_path / "two.csv"
    write_file(path, HEADER + "caen,269,19200,349,161,30,28.6\nother,269,19200,349,161,60,34.8\n")
    with pytest.raises(InvariantError):
        load_csv(path)


def test_csv_trial_violation(tmp_path):
    path = tmp_path / "slow.csv"
    write_file(path, HEADER + "caen,269,19200,250,161,30,28.6\n")
    with pytest.raises(InvariantError):
        load_csv(path)
