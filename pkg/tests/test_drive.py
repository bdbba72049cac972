import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from iongates.drive import (
    AmplitudeVector,
    ToneBasis,
    explicit_basis,
    harmonic_basis,
    peak_metrics,
    read_spectrum,
    tone_indices,
    waveform,
    write_spectrum,
    write_waveform,
)
from iongates.errors import ConfigError, SpeedLimit

PERIOD = 2 * np.pi


def test_two_ion_harmonic_basis_indices(modes2):
    # Band is [0.7, sqrt(3) + 0.3 = 2.032]; n / 10 must lie inside it.
    tones = harmonic_basis(10 * PERIOD, modes2, margin=0.3)
    np.testing.assert_array_equal(tones.index, np.arange(7, 21))
    np.testing.assert_allclose(tones.omega, tones.index / 10, rtol=1e-15)
    assert np.all(tones.phi == np.pi / 2)


def test_speed_limit(modes2):
    with pytest.raises(SpeedLimit):
        harmonic_basis(0.5 * PERIOD, modes2)


def test_tone_index_edges_are_inclusive():
    np.testing.assert_array_equal(tone_indices(10 * PERIOD, 1.0, 1.0, 0.3), np.arange(7, 14))


@given(T=st.floats(0.6, 30.0), margin=st.floats(0.05, 1.5))
def test_harmonic_edges_vanish(modes2, T, margin):
    tones = harmonic_basis(T * PERIOD, modes2, margin)
    np.testing.assert_allclose(np.cos(tones.omega * tones.T + tones.phi), 0.0, atol=1e-12)
    assert np.all(np.diff(tones.omega) > 0) and np.all(tones.omega > 0)


def test_zero_amplitudes_give_zero_waveform(modes2):
    tones = harmonic_basis(5 * PERIOD, modes2)
    t = np.linspace(0, tones.T, 101)
    assert np.all(waveform(tones, AmplitudeVector(np.zeros(tones.M)), t) == 0)


@given(r=arrays(float, 9, elements=st.floats(-5, 5)))
def test_harmonic_waveform_starts_and_ends_at_zero(modes2, r):
    tones = explicit_basis(4 * PERIOD, np.arange(3, 12))
    s = waveform(tones, AmplitudeVector(r), np.array([0.0, tones.T]))
    assert np.all(np.abs(s) <= 1e-13 * max(1.0, np.abs(r).sum()))


def test_single_quadrature_tone_is_minus_sine():
    tones = ToneBasis(3.0, np.array([1.7]), np.array([np.pi / 2]))
    t = np.linspace(0, 3, 50)
    np.testing.assert_allclose(waveform(tones, AmplitudeVector(np.array([1.0]), 2.5), t),
                               -2.5 * np.sin(1.7 * t), atol=1e-14)


def test_peak_metrics():
    assert peak_metrics(AmplitudeVector(np.array([1.0, -1.0])))["one_norm"] == 2.0


@given(r=arrays(float, 5, elements=st.floats(-10, 10)), c=st.floats(-4, 4))
def test_one_norm_homogeneous(r, c):
    a = peak_metrics(AmplitudeVector(r))["one_norm"]
    b = peak_metrics(AmplitudeVector(c * r))["one_norm"]
    assert b == pytest.approx(abs(c) * a, rel=1e-12, abs=1e-12)


def test_sign_flip_equals_phase_shift():
    rng = np.random.default_rng(3)
    om = np.array([0.8, 1.3])
    ph = rng.uniform(0, 2 * np.pi, 2)
    r = rng.normal(size=2)
    t = np.linspace(0, 7, 33)
    a = waveform(ToneBasis(7.0, om, ph), AmplitudeVector(-r), t)
    b = waveform(ToneBasis(7.0, om, ph + np.pi), AmplitudeVector(r), t)
    np.testing.assert_allclose(a, b, atol=1e-13)


def test_invalid_bases():
    with pytest.raises(ConfigError):
        ToneBasis(1.0, np.array([2.0, 1.0]), np.zeros(2))
    with pytest.raises(ConfigError):
        ToneBasis(-1.0, np.array([1.0]), np.zeros(1))
    with pytest.raises(ConfigError):
        ToneBasis(1.0, np.array([1.0, 2.0]), np.zeros(3))


def test_spectrum_round_trip(tmp_path, modes2):
    tones = harmonic_basis(6 * PERIOD, modes2)
    r = np.random.default_rng(0).normal(size=tones.M)
    path = tmp_path / "spectrum.csv"
    write_spectrum(path, tones, AmplitudeVector(r))
    n, om, rr = read_spectrum(path)
    np.testing.assert_array_equal(n, tones.index)
    np.testing.assert_array_equal(om, tones.omega)
    np.testing.assert_array_equal(rr, r)


def test_waveform_export(tmp_path, modes2):
    tones = harmonic_basis(6 * PERIOD, modes2)
    r = np.ones(tones.M)
    path = tmp_path / "w.csv"
    write_waveform(path, tones, AmplitudeVector(r), n_samples=11)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (11, 2)
    assert data[0, 1] == 0.0 and abs(data[-1, 1]) < 1e-12
