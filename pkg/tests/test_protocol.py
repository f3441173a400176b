import pytest

from core.errors import InvariantError, SustainableIntensityError
from core.hydraulic import HydraulicModel
from core.protocol import build_model, intermittent_tte, predict_dataset, recovery_curve, recovery_ratio, \
    time_to_exhaustion
from core.wbal import TauFunction, WbalModel
from models.athlete import AthleteCapacity
from models.enums import ModelKind
from utils.datasets import builtin_dataset

CAEN = builtin_dataset("caen")
CHIDNOK = builtin_dataset("chidnok")
FERGUSON = builtin_dataset("ferguson")


def test_build_model():
    assert isinstance(build_model(ModelKind.HYDRAULIC, CAEN.athlete, CAEN.fitted_hydraulic), HydraulicModel)
    assert isinstance(build_model(ModelKind.WBAL_WEIG, CAEN.athlete), WbalModel)
    with pytest.raises(InvariantError):
        build_model(ModelKind.HYDRAULIC, CAEN.athlete)


def test_time_to_exhaustion_from_current_state():
    model = build_model(ModelKind.WBAL_SKIB, CAEN.athlete)
    model.reset()
    assert time_to_exhaustion(model, 349.0) == pytest.approx(240.0)
    with pytest.raises(SustainableIntensityError):
        model.reset()
        time_to_exhaustion(model, 200.0, t_max=300.0)


def test_recovery_ratio_examples():
    skib = build_model(ModelKind.WBAL_SKIB, CAEN.athlete)
    assert recovery_ratio(skib, 349.0, 161.0, 120.0) == pytest.approx(49.1, abs=0.2)
    hydraulic = build_model(ModelKind.HYDRAULIC, CHIDNOK.athlete, CHIDNOK.fitted_hydraulic)
    assert recovery_ratio(hydraulic, 329.0, 95.0, 30.0) == pytest.approx(30.9, abs=2.0)


def test_recovery_ratio_rejects_bad_protocol():
    model = build_model(ModelKind.WBAL_BART, CAEN.athlete)
    with pytest.raises(InvariantError):
        recovery_ratio(model, 349.0, 400.0, 60.0)
    with pytest.raises(InvariantError):
        recovery_ratio(model, 349.0, 161.0, -1.0)
    with pytest.raises(SustainableIntensityError):
        recovery_ratio(model, 250.0, 100.0, 60.0)


def test_ratio_is_monotone_in_recovery_time():
    model = build_model(ModelKind.WBAL_WEIG, CAEN.athlete)
    ratios = recovery_curve(model, 349.0, 161.0, [0.0, 30.0, 120.0, 600.0])
    assert ratios[0] == 0.0
    assert ratios == sorted(ratios)
    assert all(0.0 <= r <= 100.0 for r in ratios)


def test_curve_matches_single_ratios_in_any_order():
    model = build_model(ModelKind.HYDRAULIC, CAEN.athlete, CAEN.fitted_hydraulic)
    grid = [300.0, 30.0, 120.0]
    curve = recovery_curve(model, 349.0, 161.0, grid)
    single = [recovery_ratio(model, 349.0, 161.0, t) for t in grid]
    assert curve == pytest.approx(single, abs=1e-6)


def test_curve_ferguson_weig():
    model = build_model(ModelKind.WBAL_WEIG, FERGUSON.athlete)
    curve = recovery_curve(model, 269.0, 20.0, [120.0, 360.0, 900.0])
    assert curve == pytest.approx([35.9, 73.6, 96.4], abs=0.2)


def test_empty_curve():
    model = build_model(ModelKind.WBAL_BART, CAEN.athlete)
    assert recovery_curve(model, 349.0, 161.0, []) == []


def test_intermittent_tte():
    athlete = CHIDNOK.athlete
    # fully recovering rest does not end the test
    slow = WbalModel(athlete, TauFunction.constant(1e5))
    fast = WbalModel(athlete, TauFunction.constant(10.0))
    slow_tte = intermittent_tte(slow, 329.0, 20.0, 60.0, 30.0)
    assert slow_tte == pytest.approx(21100.0 / 88.0 + 30.0 * 3, rel=0.01)
    with pytest.raises(SustainableIntensityError):
        intermittent_tte(fast, 329.0, 20.0, 60.0, 30.0, t_max=3600.0)


def test_intermittent_tte_rejects_bad_bouts():
    model = WbalModel(CHIDNOK.athlete, TauFunction.constant(100.0))
    with pytest.raises(InvariantError):
        intermittent_tte(model, 329.0, 20.0, 0.0, 30.0)


def test_intermittent_chidnok_low():
    model = WbalModel(CHIDNOK.athlete, TauFunction.constant(107.45))
    assert intermittent_tte(model, 329.0, 20.0, 60.0, 30.0) == pytest.approx(1224.0, abs=90.0)


def test_predict_dataset_all_models():
    for kind in ModelKind:
        predicted = predict_dataset(FERGUSON, kind)
        assert len(predicted) == len(FERGUSON.trials)
        assert all(0.0 <= p <= 100.0 for p in predicted)


def test_ratio_independent_of_work_intensity_for_wbal():
    athlete = AthleteCapacity(393.0, 23300.0)
    model = build_model(ModelKind.WBAL_SKIB, athlete)
    ratios = [recovery_ratio(model, athlete.power_for_tte(t), 193.0, 120.0) for t in (100.0, 240.0, 480.0)]
    assert ratios == pytest.approx([ratios[0]] * 3, abs=1e-9)
