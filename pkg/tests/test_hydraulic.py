import numpy as np
import pytest

from core.errors import InvariantError, SustainableIntensityError
from core.hydraulic import HydraulicBatch, HydraulicModel, batch_recovery_ratios, batch_tte, hydraulic_step, \
    simulate_tte
from core.protocol import predict_dataset, recovery_ratio
from models.enums import ModelKind
from models.hydraulic_config import HydraulicConfig, HydraulicState
from utils.datasets import all_builtin, builtin_dataset

BARTRAM_CONFIG = HydraulicConfig.from_list([23111.91, 65845.28, 391.57, 148.88, 24.15, 0.73, 0.01, 0.24])


def test_config_validation():
    with pytest.raises(InvariantError):
        HydraulicConfig.from_list([1000.0, 1000.0, 100.0, 10.0, 1.0, 0.6, 0.4, 0.1])
    with pytest.raises(InvariantError):
        HydraulicConfig.from_list([-1.0, 1000.0, 100.0, 10.0, 1.0, 0.5, 0.1, 0.1])
    with pytest.raises(InvariantError):
        HydraulicConfig.from_list([1000.0, 1000.0, 100.0, 10.0])
    with pytest.raises(InvariantError):
        HydraulicConfig.from_json('{"an_f": 1}')


def test_config_properties():
    assert BARTRAM_CONFIG.height_ans == pytest.approx(0.26)
    assert not BARTRAM_CONFIG.pipe_below_ans
    assert HydraulicConfig.from_list([1000.0, 1000.0, 100.0, 10.0, 1.0, 0.5, 0.3, 0.2]).pipe_below_ans
    assert HydraulicConfig.from_json(BARTRAM_CONFIG.to_json()) == BARTRAM_CONFIG


def test_published_configs_have_pipe_above_ans_bottom():
    for dataset in all_builtin():
        config = dataset.fitted_hydraulic
        assert config.gamma > config.theta, dataset.name


def test_tte_with_published_configs():
    # P100 for the Bartram athlete, P240 for Caen
    assert simulate_tte(BARTRAM_CONFIG, 626.0) == pytest.approx(81.2, abs=1.0)
    assert simulate_tte(builtin_dataset("caen").fitted_hydraulic, 349.0) == pytest.approx(224.6, abs=1.5)


def test_tte_decreases_with_power():
    ttes = [simulate_tte(BARTRAM_CONFIG, p, t_max=20000.0) for p in (400.5, 500.0, 626.0)]
    assert ttes[0] > ttes[1] > ttes[2]


def test_tte_sustainable():
    with pytest.raises(SustainableIntensityError):
        simulate_tte(BARTRAM_CONFIG, 150.0, t_max=600.0)


def test_state_bounds():
    model = HydraulicModel(BARTRAM_CONFIG)
    model.run(626.0, 60.0)
    model.state.check(BARTRAM_CONFIG)
    assert 0.0 < model.state.w_p_ratio(BARTRAM_CONFIG) < 1.0
    model.run(700.0, 600.0)
    state = model.state
    state.check(BARTRAM_CONFIG)
    assert state.exhausted
    assert state.h == pytest.approx(1.0)


def test_full_tanks_store_all_energy():
    state = HydraulicState()
    expected = BARTRAM_CONFIG.an_f + BARTRAM_CONFIG.an_s * BARTRAM_CONFIG.height_ans
    assert state.stored_energy(BARTRAM_CONFIG) == pytest.approx(expected)
    assert state.w_p_ratio(BARTRAM_CONFIG) == pytest.approx(1.0)


def test_scalar_step_matches_model():
    model = HydraulicModel(BARTRAM_CONFIG)
    state = HydraulicState()
    for _ in range(100):
        model.step(500.0, 0.1)
        state = hydraulic_step(state, BARTRAM_CONFIG, 500.0, 0.1)
    assert state.h == pytest.approx(model.state.h)
    assert state.g == pytest.approx(model.state.g)
    assert state.time == pytest.approx(10.0)


def test_batch_matches_scalar():
    powers = np.array([626.0, 500.0, 450.0])
    params = np.tile(BARTRAM_CONFIG.as_array(), (3, 1))
    tte = batch_tte(params, powers)
    for p, t in zip(powers, tte):
        assert t == pytest.approx(simulate_tte(BARTRAM_CONFIG, p), abs=1e-9)


def test_batch_marks_unexhausted_as_nan():
    params = np.tile(BARTRAM_CONFIG.as_array(), (2, 1))
    tte = batch_tte(params, [626.0, 150.0], t_max=300.0)
    assert np.isfinite(tte[0])
    assert np.isnan(tte[1])


def test_batch_inactive_members_stay_put():
    batch = HydraulicBatch(np.tile(BARTRAM_CONFIG.as_array(), (2, 1)))
    batch.step(600.0, 0.1, active=np.array([True, False]))
    assert batch.h[0] > 0.0
    assert batch.h[1] == 0.0


def test_batch_ratios_match_protocol():
    model = HydraulicModel(BARTRAM_CONFIG)
    expected = [recovery_ratio(model, 626.0, p_rec, 60.0) for p_rec in (343.0, 193.0)]
    params = np.tile(BARTRAM_CONFIG.as_array(), (2, 1))
    ratios, tte1, tte2 = batch_recovery_ratios(params, 626.0, [343.0, 193.0], 60.0)
    assert ratios == pytest.approx(expected, abs=1e-6)
    assert np.all(tte2 < tte1)


def test_zero_recovery_time():
    params = BARTRAM_CONFIG.as_array()[None, :]
    ratios, _, _ = batch_recovery_ratios(params, 626.0, 193.0, 0.0)
    assert ratios[0] == pytest.approx(0.0, abs=0.2)


def test_recovery_at_cp_is_positive():
    model = HydraulicModel(BARTRAM_CONFIG)
    assert recovery_ratio(model, 626.0, 393.0, 60.0) > 5.0


def test_published_hydraulic_columns():
    deviations = []
    for dataset in all_builtin():
        predicted = predict_dataset(dataset, ModelKind.HYDRAULIC)
        printed = dataset.published["hydraulic"]
        deviations.extend(abs(p - q) for p, q in zip(predicted, printed))
    deviations = np.array(deviations)
    assert len(deviations) == 31
    assert deviations.max() <= 2.0
    assert np.mean(deviations <= 1.0) >= 0.9


def test_hydraulic_sensitive_to_work_intensity():
    dataset = builtin_dataset("bartram")
    model = HydraulicModel(dataset.fitted_hydraulic)
    athlete = dataset.athlete
    ratios = [recovery_ratio(model, athlete.power_for_tte(t), athlete.cp - 200.0, 120.0)
              for t in (100.0, 480.0)]
    assert abs(ratios[0] - ratios[1]) > 1.0


def _exhausted_state(config, power):
    model = HydraulicModel(config)
    model.run(power, 3600.0)
    assert model.exhausted
    return model.state


def test_rest_inflow_matches_stored_energy_gain():
    state = _exhausted_state(BARTRAM_CONFIG, 626.0)
    before = state.stored_energy(BARTRAM_CONFIG)
    inflow = 0.0
    for _ in range(3000):
        state = hydraulic_step(state, BARTRAM_CONFIG, 0.0, 0.1)
        inflow += state.p_ae * 0.1
    assert state.stored_energy(BARTRAM_CONFIG) - before == pytest.approx(inflow, rel=1e-6)


def test_work_balance_against_demand():
    state = HydraulicState()
    inflow = 0.0
    for _ in range(500):
        state = hydraulic_step(state, BARTRAM_CONFIG, 500.0, 0.1)
        inflow += state.p_ae * 0.1
    assert not state.exhausted
    drop = HydraulicState().stored_energy(BARTRAM_CONFIG) - state.stored_energy(BARTRAM_CONFIG)
    assert drop == pytest.approx(500.0 * 50.0 - inflow, rel=1e-6)


@pytest.mark.parametrize("name", ["bartram", "caen", "chidnok", "ferguson", "weigend"])
def test_flows_respect_caps(name):
    config = builtin_dataset(name).fitted_hydraulic
    state = HydraulicState()
    schedule = [1.6 * config.m_ae] * 400 + [0.0] * 2000 + [1.2 * config.m_ae] * 1500 + [0.3 * config.m_ae] * 2000
    for power in schedule:
        state = hydraulic_step(state, config, power, 0.1)
        assert 0.0 <= state.p_ae <= config.m_ae + 1e-9
        assert state.p_an <= config.m_ans + 1e-9
        assert -state.p_an <= config.m_anf + 1e-9
        state.check(config)


def test_full_refill_at_rest():
    model = HydraulicModel(BARTRAM_CONFIG)
    model.run(626.0, 3600.0)
    assert model.exhausted
    previous = model.state.stored_energy(BARTRAM_CONFIG)
    for _ in range(36000):
        model.step(0.0, 0.1)
        stored = model.state.stored_energy(BARTRAM_CONFIG)
        assert stored >= previous - 1e-9
        previous = stored
    assert model.state.h < 1e-3
    assert model.state.g < 1e-3


def test_ae_inflow_increases_with_depletion():
    pipe = 1.0 - BARTRAM_CONFIG.gamma
    levels = np.linspace(0.01, pipe - 0.01, 25)
    inflows = [hydraulic_step(HydraulicState(h=h), BARTRAM_CONFIG, 0.0, 0.1).p_ae for h in levels]
    assert np.all(np.diff(inflows) > 0)
    below_pipe = hydraulic_step(HydraulicState(h=0.95), BARTRAM_CONFIG, 0.0, 0.1).p_ae
    assert below_pipe == pytest.approx(BARTRAM_CONFIG.m_ae)


def test_ratios_converge_when_dt_halves():
    dataset = builtin_dataset("bartram")
    model = HydraulicModel(dataset.fitted_hydraulic)
    for trial in dataset.trials:
        coarse = recovery_ratio(model, trial.p_work, trial.p_rec, trial.t_rec, dt=0.1)
        fine = recovery_ratio(model, trial.p_work, trial.p_rec, trial.t_rec, dt=0.05)
        assert coarse == pytest.approx(fine, abs=0.1)
