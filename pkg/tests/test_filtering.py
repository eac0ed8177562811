import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import norm

from msfuzzy import _kernels
from msfuzzy.agreement import rand_index
from msfuzzy.dynamics import ergodic_probabilities, get_dgp, simulate_ms
from msfuzzy.exceptions import DegenerateLikelihood, UnsupportedOrder
from msfuzzy.filtering import (filter_and_smooth, hamilton_filter, infer_states, kim_smoother,
                               write_smoothed_csv)
from msfuzzy.types import canonicalize_labels, make_spec, permute_spec

from oracles import enumerate_paths

BACKENDS = [_kernels.NUMPY_KERNELS]
if _kernels.HAVE_NUMBA:
    BACKENDS.append(_kernels.NUMBA_KERNELS)


def random_spec(rng, k, p):
    means = rng.normal(0, 2, size=k)
    P = rng.dirichlet(np.full(k, 2.0), size=k)
    ar = [rng.uniform(-0.9, 0.9)] if p else []
    return make_spec(means, rng.uniform(0.4, 2.0), P, ar=ar)


def _oracle(y, spec):
    phi = float(spec.ar_coeffs[0]) if spec.p else None
    return enumerate_paths(y, spec.means, spec.sigma, spec.transition.probs, phi)


@pytest.mark.parametrize("kern", BACKENDS, ids=lambda k: k.name)
def test_ms2_4_five_observations_match_enumeration(kern):
    spec = get_dgp("MS2--4").spec
    y = np.array([0.3, 3.7, 4.4, 1.9, -0.2])
    fo = filter_and_smooth(y, spec, kern)
    ll, marg = _oracle(y, spec)
    assert abs(fo.loglik - ll) < 1e-10
    np.testing.assert_allclose(fo.paths.smoothed, marg, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([2, 3]), st.sampled_from([0, 1]),
       st.integers(1, 8))
def test_filter_matches_enumeration_property(seed, k, p, T):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, k, p)
    T = max(T, p + 1)
    y = rng.normal(0, 3, size=T)
    fo = filter_and_smooth(y, spec)
    ll, marg = _oracle(y, spec)
    assert abs(fo.loglik - ll) < 1e-10
    np.testing.assert_allclose(fo.paths.smoothed, marg, atol=1e-10)


def test_single_state_is_iid_normal():
    y = np.array([0.1, -1.3, 2.2, 0.7])
    spec = make_spec([0.5], 1.3, [[1.0]])
    fo = hamilton_filter(y, spec)
    assert fo.loglik == pytest.approx(norm.logpdf(y, 0.5, 1.3).sum(), abs=1e-12)


def test_prediction_recursion_identity():
    spec = get_dgp("MS3--2").spec
    y, _ = simulate_ms(spec, 60, 3)
    paths = hamilton_filter(y, spec).paths
    P = spec.transition.probs
    np.testing.assert_allclose(paths.predicted[1:], paths.filtered[:-1] @ P, atol=1e-13)
    np.testing.assert_allclose(paths.predicted[0], ergodic_probabilities(P), atol=1e-13)


@pytest.mark.parametrize("label", ["MS2--1", "MS3AR--3"])
def test_rows_are_probabilities_and_last_row_smoothed_equals_filtered(label):
    spec = get_dgp(label).spec
    y, _ = simulate_ms(spec, 80, 4)
    paths = filter_and_smooth(y, spec).paths
    for A in (paths.predicted, paths.filtered, paths.smoothed):
        assert np.all(A >= 0)
        np.testing.assert_allclose(A.sum(axis=1), 1.0, atol=1e-8)
    np.testing.assert_allclose(paths.smoothed[-1], paths.filtered[-1], atol=1e-12)


def test_uniform_transitions_make_smoothing_trivial():
    # with identical rows the future carries no information about s_t given y_t
    spec = make_spec([-1.0, 0.5, 2.0], 1.0, np.full((3, 3), 1 / 3))
    y = np.random.default_rng(5).normal(size=40)
    paths = filter_and_smooth(y, spec).paths
    np.testing.assert_allclose(paths.smoothed, paths.filtered, atol=1e-12)


@pytest.mark.parametrize("p", [0, 1])
def test_loglik_invariant_under_relabeling(p):
    rng = np.random.default_rng(10 + p)
    spec = random_spec(rng, 3, p)
    y = rng.normal(size=50)
    a = hamilton_filter(y, spec).loglik
    b = hamilton_filter(y, canonicalize_labels(spec)[0]).loglik
    c = hamilton_filter(y, permute_spec(spec, np.array([2, 0, 1]))).loglik
    assert abs(a - b) < 1e-10 and abs(a - c) < 1e-10


def test_noiseless_series_recovers_path():
    spec = make_spec([0.0, 4.0], 1e-6, [[0.9, 0.1], [0.2, 0.8]])
    y, s = simulate_ms(spec, 150, 8)
    assert infer_states(y, spec).states.tolist() == s.states.tolist()


def test_ms2_8_true_spec_inference():
    spec = get_dgp("MS2--8").spec
    scores = []
    for seed in range(15):
        y, s = simulate_ms(spec, 100, seed)
        scores.append(rand_index(infer_states(y, spec), s))
    assert np.median(scores) >= 0.98


def test_single_observation():
    spec = get_dgp("MS2--2").spec
    y = [1.2]
    pi = ergodic_probabilities(spec.transition.probs)
    expected = np.argmax(pi * norm.pdf(1.2, spec.means, spec.sigma)) + 1
    assert infer_states(y, spec).states.tolist() == [expected]


def test_ar_first_row_is_ergodic_prior():
    spec = get_dgp("MS2AR--1").spec
    fo = hamilton_filter([0.2, 0.9, 1.4], spec)
    np.testing.assert_allclose(fo.paths.filtered[0], ergodic_probabilities(spec.transition.probs))
    assert fo.cond_densities.shape == (2, 4)


def test_errors():
    # densities are computed in logs, so only a truly vanishing sigma underflows
    spec = make_spec([0.0, 1.0], 1e-200, [[0.9, 0.1], [0.2, 0.8]])
    with pytest.raises(DegenerateLikelihood):
        hamilton_filter([0.0, 0.5, 1.0], spec)
    with pytest.raises(UnsupportedOrder):
        hamilton_filter([0.0] * 5, make_spec([0, 1], 1.0, [[0.9, 0.1], [0.2, 0.8]], ar=[0.2, 0.1]))
    with pytest.raises(ValueError):
        hamilton_filter([0.0], get_dgp("MS2AR--1").spec)


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
def test_backends_agree_on_long_series():
    spec = get_dgp("MS3AR--6").spec
    y, _ = simulate_ms(spec, 500, 21)
    a = filter_and_smooth(y, spec, _kernels.NUMPY_KERNELS)
    b = filter_and_smooth(y, spec, _kernels.NUMBA_KERNELS)
    assert abs(a.loglik - b.loglik) < 1e-9
    np.testing.assert_allclose(a.paths.smoothed, b.paths.smoothed, atol=1e-12)


def test_smoothed_csv(tmp_path):
    spec = get_dgp("MS2--1").spec
    y, _ = simulate_ms(spec, 10, 0)
    fo = filter_and_smooth(y, spec)
    out = tmp_path / "sm.csv"
    write_smoothed_csv(out, y, kim_smoother(fo))
    lines = out.read_text().splitlines()
    assert lines[0] == "t,label,y,p_smoothed_1,p_smoothed_2,state"
    assert len(lines) == 11
