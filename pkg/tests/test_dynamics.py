import numpy as np
import pytest

from quenchlab.bogoliubov import (ConsistencyError, CorrelationSet,
                                  build_bogoliubov, initial_correlations,
                                  pre_quench_energy)
from quenchlab.dynamics import (DegenerateInitial, NumericalError,
                                ObservableSeries, beat_set,
                                evolve_occupations, evolve_occupations_direct,
                                fluctuation_series, long_time_average,
                                occupation_time_mean, per_mode_energy)

from conftest import make_spec


@pytest.fixture(scope="module")
def bundle_5_10(spec_5_10):
    bog = build_bogoliubov(spec_5_10)
    corr = initial_correlations(bog, spec_5_10.initial_state)
    return spec_5_10, bog, corr


def test_kernel_matches_direct_sum(spec22):
    bog = build_bogoliubov(spec22)
    corr = initial_correlations(bog, spec22.initial_state)
    ts = np.array([0.0, 0.7, 3.1, 12.9])
    fast = evolve_occupations(spec22, bog, corr, times=ts).n_expect
    slow = evolve_occupations_direct(bog, corr, ts)
    np.testing.assert_allclose(fast, slow, rtol=0, atol=1e-10)


def test_kernel_matches_direct_sum_excited():
    spec = make_spec(2, 3, modes=(1, 1), t_max=10.0, t_steps=6)
    bog = build_bogoliubov(spec)
    corr = initial_correlations(bog, spec.initial_state)
    ts = spec.time_grid
    fast = evolve_occupations(spec, bog, corr, times=ts).n_expect
    slow = evolve_occupations_direct(bog, corr, ts)
    np.testing.assert_allclose(fast, slow, rtol=0, atol=1e-10)


def test_initial_occupations_match_state(bundle_5_10):
    spec, bog, corr = bundle_5_10
    series = evolve_occupations(spec, bog, corr, times=np.array([0.0]))
    np.testing.assert_allclose(series.n_expect[0],
                               spec.initial_state.as_array(),
                               rtol=0, atol=1e-8)


def test_total_joint_energy_is_pre_quench_energy(bundle_5_10):
    spec, bog, corr = bundle_5_10
    series = evolve_occupations(spec, bog, corr, times=np.array([0.0, 5.0]))
    assert abs(series.e_total_joint - pre_quench_energy(spec)) < 1e-8


def test_size_mismatch_rejected(spec22, bundle_5_10):
    _, bog, corr = bundle_5_10
    with pytest.raises(ConsistencyError):
        evolve_occupations(spec22, bog, corr, times=np.array([0.0]))


def test_imaginary_residue_raises(spec22):
    # a real but non-symmetric particle correlator cannot come from a state;
    # the co-rotating channel then leaves an O(1) imaginary part
    bog = build_bogoliubov(spec22)
    K = 4
    c1 = np.zeros((K, K))
    c1[0, 1] = 0.3
    bad = CorrelationSet(cdag_c=c1, c_cdag=c1.T + np.eye(K),
                         c_c=np.zeros((K, K)), cdag_cdag=np.zeros((K, K)))
    with pytest.raises(NumericalError):
        evolve_occupations(spec22, bog, bad, times=np.array([0.0, 1.0, 2.0]))


def test_negative_occupancy_raises(spec22):
    bog = build_bogoliubov(spec22)
    K = 4
    c1 = np.zeros((K, K))
    c1[0, 1] = c1[1, 0] = 50.0
    bad = CorrelationSet(cdag_c=c1, c_cdag=c1.T + np.eye(K),
                         c_c=np.zeros((K, K)), cdag_cdag=np.zeros((K, K)))
    with pytest.raises(NumericalError):
        evolve_occupations(spec22, bog, bad, times=np.array([0.0]))


def test_long_time_average_only_keeps_stationary_terms(bundle_5_10):
    _, bog, corr = bundle_5_10
    avg = long_time_average(bog, corr)
    expected = (bog.alpha ** 2) @ np.diagonal(corr.cdag_c) \
        + (bog.beta ** 2) @ np.diagonal(corr.c_cdag)
    np.testing.assert_allclose(avg, expected, rtol=0, atol=0)
    assert np.all(avg > 0)


def test_fluctuation_ratio_and_recurrence(bundle_5_10):
    spec, bog, corr = bundle_5_10
    ts = np.arange(0.0, 2000.0 + 0.125, 0.25)
    series = evolve_occupations(spec, bog, corr, times=ts)
    fluc = fluctuation_series(series)
    assert fluc.ratio[0] == 1.0
    assert fluc.recurrence_threshold == 0.5
    assert fluc.first_recurrence_time == 379.25


def test_recurrence_none_when_window_too_short(bundle_5_10):
    spec, bog, corr = bundle_5_10
    ts = np.arange(0.0, 100.0, 0.25)
    series = evolve_occupations(spec, bog, corr, times=ts)
    fluc = fluctuation_series(series)
    assert fluc.first_recurrence_time is None


def test_degenerate_initial_raises():
    times = np.array([0.0, 1.0, 2.0])
    flat = ObservableSeries(times=times, n_expect=np.zeros((3, 2)),
                            e_left=np.ones(3), e_right=np.full(3, 2.0),
                            e_total_joint=3.0, long_time_avg=np.zeros(2),
                            e_left_avg=1.0, e_right_avg=2.0,
                            n_left=1, n_right=1)
    with pytest.raises(DegenerateInitial):
        fluctuation_series(flat)


def test_spectral_content_lies_on_beat_set(bundle_5_10):
    spec, bog, corr = bundle_5_10
    dt = 0.25
    ts = np.arange(0.0, 2000.0 + dt / 2, dt)
    series = evolve_occupations(spec, bog, corr, times=ts)
    sig = series.n_expect[:, 2] - series.n_expect[:, 2].mean()
    freqs = 2 * np.pi * np.fft.rfftfreq(ts.size, d=dt)
    amp = np.abs(np.fft.rfft(sig))
    beats = beat_set(bog)
    for i in np.argsort(amp)[::-1][:5]:
        assert np.min(np.abs(beats - freqs[i])) < 5e-3


def test_beat_set_contents(spec22):
    bog = build_bogoliubov(spec22)
    w = bog.omega_joint
    beats = beat_set(bog)
    assert 0.0 in beats
    for l in range(4):
        for k in range(4):
            assert np.min(np.abs(beats - abs(w[l] - w[k]))) < 1e-9
            assert np.min(np.abs(beats - (w[l] + w[k]))) < 1e-9


def test_time_mean_converges_to_long_time_average():
    spec = make_spec(5, 10, t_max=1.0, t_steps=2)
    bog = build_bogoliubov(spec)
    corr = initial_correlations(bog, spec.initial_state)
    avg = long_time_average(bog, corr)
    resid = []
    horizons = (500.0, 1000.0, 2000.0, 5000.0)
    for T in horizons:
        ts = np.arange(0.0, T + 0.25, 0.5)
        series = evolve_occupations(spec, bog, corr, times=ts)
        resid.append(np.max(np.abs(occupation_time_mean(series) - avg)))
    bound = resid[0] * horizons[0] * 3.0
    for T, r in zip(horizons[1:], resid[1:]):
        assert r <= bound / T
    assert resid[-1] < 0.02 * np.mean(avg)


def test_per_mode_energy_is_plain_division(bundle_5_10):
    spec, bog, corr = bundle_5_10
    series = evolve_occupations(spec, bog, corr, times=np.array([0.0, 3.0]))
    pme = per_mode_energy(series, spec)
    np.testing.assert_allclose(pme.left, series.e_left / 5, rtol=0, atol=0)
    np.testing.assert_allclose(pme.right, series.e_right / 10, rtol=0, atol=0)
    assert pme.left_avg == series.e_left_avg / 5
    assert pme.right_avg == series.e_right_avg / 10
