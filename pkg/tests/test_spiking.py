import numpy as np
import pytest

from motifscan.spiking import (
    AMBIGUOUS,
    NEURONS,
    CalibrationError,
    SimulationError,
    SpikeRecord,
    SpikingParams,
    calibrate,
    classify,
    default_params,
    feasibility,
    load_grid,
    load_weights,
    save_weights,
    simulate,
    single_kick_peak,
)
from importlib import resources

PATTERNS = [(0, 0), (0, 1), (1, 0), (1, 1)]
XOR = {(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 0}


@pytest.fixture(scope="module")
def runs():
    p = default_params()
    return {bits: simulate(p, bits, 500.0, record_voltage=True) for bits in PATTERNS}


def record(times, duration=500.0):
    spikes = {n: [] for n in NEURONS}
    spikes["OUT"] = list(times)
    return SpikeRecord(duration, 0.1, spikes)


@pytest.mark.parametrize("bits", PATTERNS)
def test_truth_table(runs, bits):
    assert classify(runs[bits]) == XOR[bits]


def test_silent_without_input(runs):
    assert runs[(0, 0)].total_spikes() == 0


def test_veto_holds_relays(runs):
    r = runs[(1, 1)]
    assert r.count("INH") > 0
    assert r.count("E2") <= 1 and r.count("E4") <= 1
    assert runs[(0, 1)].count("INH") == 0


def test_mirror_symmetry(runs):
    assert runs[(0, 1)].count("OUT") == runs[(1, 0)].count("OUT")
    assert runs[(0, 1)].count("OUT") >= 20


def test_voltage_bounds(runs):
    p = default_params()
    for r in runs.values():
        assert r.voltages.min() >= p.v_min and r.voltages.max() <= p.v_max


def test_refractory_gap(runs):
    for r in runs.values():
        for name, ts in r.spikes.items():
            gaps = np.diff(ts)
            assert np.all(gaps > 0)
            if name not in ("in0", "in1"):
                assert np.all(gaps >= 2.0 - 1e-9)


def test_dt_halving_stable():
    fine = default_params(dt=0.05)
    for bits in PATTERNS:
        assert classify(simulate(fine, bits)) == XOR[bits]


def test_single_kick_matches_closed_form():
    assert single_kick_peak(15.0) == pytest.approx(7.5)
    p = SpikingParams(w_sensory=15.0, rate_hz=1.0)  # one input spike in 500 ms
    r = simulate(p, (1, 0), 500.0, record_voltage=True)
    e1 = r.voltages[:, NEURONS.index("E1")]
    assert r.count("E1") == 0
    assert e1.max() - p.v_rest == pytest.approx(7.5, abs=0.1)
    assert e1.max() < p.v_threshold


def test_closed_form_equal_time_constants():
    assert single_kick_peak(10.0, tau=20.0, tau_syn=20.0) == pytest.approx(10.0 / np.e)


@pytest.mark.parametrize("scale", [1.5, 2.0, 4.0])
def test_monotone_veto(scale):
    p = default_params()
    p = p.with_weights(w_inh=p.w_inh * scale)
    assert classify(simulate(p, (1, 1))) == 0


def test_classify_boundaries():
    assert classify(record([])) == 0
    assert classify(record(np.arange(20) * 10.0 + 5)) == 1
    assert classify(record([10.0, 20.0, 30.0])) == AMBIGUOUS
    assert classify(record([10.0, 400.0, 450.0]), window=100.0) == AMBIGUOUS
    assert classify(record([10.0, 20.0, 30.0, 40.0, 50.0]), window=100.0) == 0
    with pytest.raises(ValueError):
        classify(record([]), window=600.0)


def test_params_validation():
    with pytest.raises(ValueError):
        SpikingParams(v_reset=-55.0)
    with pytest.raises(ValueError):
        SpikingParams(dt=0.0)
    with pytest.raises(ValueError):
        SpikingParams(w_inh=-1.0)
    with pytest.raises(ValueError):
        simulate(default_params(), (1, 0), duration=50.0)


def test_non_finite_state_reported():
    p = SpikingParams(w_sensory=1e308, w_exc=1e308)
    with pytest.raises(SimulationError):
        simulate(p, (1, 0), 100.0)


def test_no_veto_is_infeasible():
    w = load_weights()
    grid = np.array([[w["w_sensory"], w["w_exc"], w["w_exc_inh"], 0.0]])
    assert not feasibility(SpikingParams(), grid).any()
    with pytest.raises(CalibrationError):
        calibrate(SpikingParams(), {"w_sensory": [w["w_sensory"]], "w_exc": [w["w_exc"]], "w_exc_inh": [w["w_exc_inh"]], "w_inh": [0.0]})


def test_strong_coincidence_weight_is_infeasible():
    w = load_weights()
    grid = np.array([[w["w_sensory"], w["w_exc"], 40.0, w["w_inh"]]])
    assert not feasibility(SpikingParams(), grid).any()
    p = default_params(w_exc_inh=40.0)
    assert simulate(p, (1, 0)).count("INH") > 0


def test_shipped_defaults_feasible():
    w = load_weights()
    assert feasibility(SpikingParams(), np.array([list(w.values())]))[0]


@pytest.mark.slow
def test_calibration_reproduces_shipped_defaults():
    grid = load_grid(resources.files("motifscan") / "data" / "default_grid.csv")
    result = calibrate(SpikingParams(), grid)
    assert result.defaults == load_weights()
    assert result.feasible.sum() == 59  # frozen from the sweep


def test_weights_roundtrip(tmp_path):
    w = {"w_sensory": 1.5, "w_exc": 2.0, "w_exc_inh": 3.25, "w_inh": 4.0}
    save_weights(tmp_path / "w.csv", w)
    assert load_weights(tmp_path / "w.csv") == w
    (tmp_path / "bad.csv").write_text("name,value\nw_exc,1\n")
    with pytest.raises(ValueError):
        load_weights(tmp_path / "bad.csv")


def test_spike_csv(tmp_path, runs):
    runs[(0, 1)].to_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "neuron,time_ms"
    assert lines[1] == "in1,0.0000"
    assert len(lines) == runs[(0, 1)].total_spikes() + 1
