import json

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.signal import argrelmax
from scipy.stats import norm

from msfuzzy.dynamics import (P2, P3, catalog_json, dgp_catalog, ergodic_mixture_density,
                              ergodic_probabilities, get_dgp, mean_duration, mixture_components,
                              simulate_chain, simulate_ms)
from msfuzzy.exceptions import AbsorbingState, NonErgodicChain, UnknownLabel, UnsupportedOrder
from msfuzzy.types import make_spec

from oracles import power_ergodic


def test_ergodic_symmetric():
    np.testing.assert_allclose(ergodic_probabilities([[0.5, 0.5], [0.5, 0.5]]), [0.5, 0.5])


def test_ergodic_two_state_balance():
    # pi_1 = p21 / (p12 + p21) = 0.2 / 0.3
    pi = ergodic_probabilities(P2)
    np.testing.assert_allclose(pi, [2 / 3, 1 / 3], atol=1e-14)
    np.testing.assert_allclose(pi, power_ergodic(P2), atol=1e-12)


def test_ergodic_three_state_matches_power_iteration():
    np.testing.assert_allclose(ergodic_probabilities(P3), power_ergodic(P3), atol=1e-12)


def test_ergodic_rejects_periodic_and_reducible():
    with pytest.raises(NonErgodicChain):
        ergodic_probabilities([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(NonErgodicChain):
        ergodic_probabilities([[1.0, 0.0], [0.3, 0.7]])


def test_ergodic_residual_for_catalog():
    for entry in dgp_catalog():
        P = entry.spec.transition.probs
        pi = ergodic_probabilities(P)
        assert np.max(np.abs(pi @ P - pi)) < 1e-10


@pytest.mark.parametrize("p, expected", [(0.95, 20.0), (0.68, 3.125), (0.0, 1.0)])
def test_mean_duration(p, expected):
    assert mean_duration(p) == pytest.approx(expected, rel=1e-12)


def test_mean_duration_absorbing():
    with pytest.raises(AbsorbingState):
        mean_duration(1.0)


def test_simulate_chain_reproducible():
    P = [[0.5, 0.5], [0.5, 0.5]]
    a = simulate_chain(P, 4, 123).states
    b = simulate_chain(P, 4, 123).states
    assert a.tolist() == b.tolist()
    assert set(a.tolist()) <= {1, 2}


def test_simulate_chain_long_run_frequencies():
    s = simulate_chain(P2, 100_000, 2024).states - 1
    stay1 = np.mean(s[1:][s[:-1] == 0] == 0)
    stay2 = np.mean(s[1:][s[:-1] == 1] == 1)
    assert abs(stay1 - 0.9) < 0.01 and abs(stay2 - 0.8) < 0.01
    freq = np.bincount(s, minlength=2) / s.size
    np.testing.assert_allclose(freq, ergodic_probabilities(P2), atol=0.01)


def test_long_run_state_frequencies_every_catalog_entry():
    for i, entry in enumerate(dgp_catalog()):
        P = entry.spec.transition.probs
        s = simulate_chain(P, 100_000, i).states - 1
        freq = np.bincount(s, minlength=P.shape[0]) / s.size
        np.testing.assert_allclose(freq, ergodic_probabilities(P), atol=0.01)


def test_simulate_ms_noiseless():
    spec = make_spec([0.0, 4.0], 1e-12, P2)
    y, s = simulate_ms(spec, 200, 5)
    np.testing.assert_allclose(y.values, spec.means[s.states - 1], atol=1e-9)


def test_simulate_ms_state_means():
    spec = get_dgp("MS2--4").spec
    y, s = simulate_ms(spec, 10_000, 11)
    assert abs(y.values[s.states == 2].mean() - 4.0) < 0.1
    assert abs(y.values[s.states == 1].mean() - 0.0) < 0.1


def test_simulate_ms_ar_autocorrelation():
    spec = get_dgp("MS2AR--4").spec
    y, s = simulate_ms(spec, 10_000, 12)
    dev = y.values - spec.means[s.states - 1]
    r = np.corrcoef(dev[1:], dev[:-1])[0, 1]
    # sd of the lag-1 sample autocorrelation is about sqrt((1 - 0.49) / 10000)
    assert abs(r - 0.7) < 0.03


def test_simulate_ms_bit_identical():
    spec = get_dgp("MS3AR--2").spec
    a, sa = simulate_ms(spec, 100, 99)
    b, sb = simulate_ms(spec, 100, 99)
    assert a.values.tobytes() == b.values.tobytes()
    assert sa.states.tobytes() == sb.states.tobytes()


def test_density_single_state_is_normal():
    spec = make_spec([1.5], 0.7, [[1.0]])
    x = np.linspace(-3, 6, 101)
    np.testing.assert_allclose(ergodic_mixture_density(spec, x), norm.pdf(x, 1.5, 0.7), atol=1e-15)


def test_density_integrates_to_one_for_catalog():
    for entry in dgp_catalog():
        spec = entry.spec
        _, loc = mixture_components(spec)
        x = np.linspace(loc.min() - 6 * spec.sigma, loc.max() + 6 * spec.sigma, 20_001)
        assert abs(trapezoid(ergodic_mixture_density(spec, x), x) - 1.0) < 1e-4, entry.label


def test_density_ms2_4_bimodal():
    x = np.linspace(-3, 7, 2001)
    d = ergodic_mixture_density(get_dgp("MS2--4").spec, x)
    modes = x[argrelmax(d)[0]]
    assert modes.size == 2
    np.testing.assert_allclose(modes, [0.0, 4.0], atol=0.02)


def test_density_ar_uses_state_pairs():
    spec = get_dgp("MS3AR--1").spec
    w, loc = mixture_components(spec)
    assert w.size == 9 and abs(w.sum() - 1) < 1e-12
    assert loc[1] == pytest.approx((1.0 - 0.7 * 0.0) / 0.3)


def test_density_rejects_higher_order():
    spec = make_spec([0, 1], 1.0, P2, ar=[0.3, 0.2])
    with pytest.raises(UnsupportedOrder):
        ergodic_mixture_density(spec, [0.0])


def test_catalog_contents():
    cat = dgp_catalog()
    assert len(cat) == 32
    assert len({e.label for e in cat}) == 32
    e = get_dgp("MS2--3").spec
    np.testing.assert_array_equal(e.means, [0, 3])
    assert e.sigma == 0.5 and e.p == 0
    e = get_dgp("MS3AR--8").spec
    np.testing.assert_array_equal(e.means, [0, 4, 8])
    assert e.sigma == 0.25 and e.ar_coeffs.tolist() == [0.7]
    np.testing.assert_allclose(get_dgp("MS3--1").spec.transition.probs,
                               [[0.9, 0.07, 0.03], [0.15, 0.8, 0.05], [0.1, 0.2, 0.7]])
    assert get_dgp("ms2-1").label == "MS2--1"
    with pytest.raises(UnknownLabel):
        get_dgp("MS4--1")


def test_catalog_json_roundtrip():
    records = json.loads(catalog_json())
    assert len(records) == 32
    assert records[0] == {"label": "MS2--1", "means": [0.0, 1.0], "ar_coeffs": [], "sigma": 0.5,
                          "transition": [[0.9, 0.1], [0.2, 0.8]]}
