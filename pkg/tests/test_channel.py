"""Tests for the channel models."""

import numpy as np
import pytest
from scipy.integrate import quad

from convpolar.channel import (
    ERASED,
    Channel,
    bec,
    biawgn,
    bsc,
    figures,
    parse_channel,
    prior,
    priors,
    sample,
)


def test_validation():
    with pytest.raises(ValueError):
        Channel("laplace", 0.1)
    with pytest.raises(ValueError):
        bec(1.5)
    with pytest.raises(ValueError):
        bsc(-0.01)
    with pytest.raises(ValueError):
        biawgn(0.0)


def test_parse_roundtrip():
    for text, kind, param in [
        ("bec:0.5", "bec", 0.5),
        ("bsc:0.08", "bsc", 0.08),
        ("awgn:1.0", "awgn", 1.0),
    ]:
        ch = parse_channel(text)
        assert ch == Channel(kind, param)
        assert parse_channel(str(ch)) == ch


def test_parse_errors():
    with pytest.raises(ValueError):
        parse_channel("bec")
    with pytest.raises(ValueError):
        parse_channel("bsc:lots")
    with pytest.raises(ValueError):
        parse_channel("gauss:1.0")


def test_bsc_zero_is_noiseless():
    rng = np.random.default_rng(0)
    cw = rng.integers(0, 2, 64, dtype=np.uint8)
    assert np.array_equal(sample(bsc(0.0), cw, rng), cw)


def test_bec_one_erases_everything():
    rng = np.random.default_rng(0)
    out = sample(bec(1.0), np.zeros(50, dtype=np.uint8), rng)
    assert np.all(out == ERASED)


def test_bec_erasure_rate():
    rng = np.random.default_rng(12)
    out = sample(bec(0.3), np.zeros(200_000, dtype=np.uint8), rng)
    rate = np.mean(out == ERASED)
    assert abs(rate - 0.3) < 0.005


def test_awgn_sample_mean():
    rng = np.random.default_rng(42)
    out = sample(biawgn(0.5), np.zeros(100_000, dtype=np.uint8), rng)
    assert abs(out.mean() - 1.0) < 0.01
    out1 = sample(biawgn(0.5), np.ones(100_000, dtype=np.uint8), rng)
    assert abs(out1.mean() + 1.0) < 0.01


def test_sample_batch_shape():
    rng = np.random.default_rng(1)
    cw = np.zeros((7, 16), dtype=np.uint8)
    for ch in (bec(0.4), bsc(0.1), biawgn(0.8)):
        assert sample(ch, cw, rng).shape == (7, 16)


def test_prior_examples():
    assert np.allclose(prior(bsc(0.1), 1).values, [0.1, 0.9])
    assert np.allclose(prior(bsc(0.1), 0).values, [0.9, 0.1])
    assert np.allclose(prior(bec(0.7), ERASED).values, [0.5, 0.5])
    assert np.allclose(prior(bec(0.7), 1).values, [0.0, 1.0])
    assert np.allclose(prior(biawgn(1.0), 0.0).values, [0.5, 0.5])


def test_prior_awgn_formula():
    sigma, r = 0.7, 0.37
    raw = np.array(
        [
            np.exp(-((r - 1.0) ** 2) / (2 * sigma**2)),
            np.exp(-((r + 1.0) ** 2) / (2 * sigma**2)),
        ]
    )
    assert np.allclose(prior(biawgn(sigma), r).values, raw / raw.sum())


def test_prior_awgn_extreme_symbols_stay_finite():
    p = priors(biawgn(0.3), np.array([-200.0, 200.0]))
    assert np.all(np.isfinite(p))
    assert np.allclose(p[0], [0.0, 1.0])
    assert np.allclose(p[1], [1.0, 0.0])


def test_prior_alphabet_errors():
    with pytest.raises(ValueError):
        priors(bsc(0.1), np.array([0, 2]))
    with pytest.raises(ValueError):
        priors(bec(0.1), np.array([0, 3]))


def test_priors_batch_normalized():
    rng = np.random.default_rng(8)
    cw = rng.integers(0, 2, (5, 32), dtype=np.uint8)
    for ch in (bec(0.4), bsc(0.1), biawgn(0.8)):
        p = priors(ch, sample(ch, cw, rng))
        assert p.shape == (5, 32, 2)
        assert np.all(p >= 0)
        assert np.allclose(p.sum(axis=-1), 1.0)


def test_figures_bec():
    assert figures(bec(0.5)) == (0.5, 0.5)
    assert figures(bec(0.0)) == (1.0, 0.0)


def test_figures_bsc():
    i, z = figures(bsc(0.5))
    assert i == pytest.approx(0.0, abs=1e-15)
    assert z == pytest.approx(1.0)
    i11, _ = figures(bsc(0.11))
    assert abs(i11 - 0.5) < 1e-3  # near the rate-1/2 threshold
    _, z2 = figures(bsc(0.1))
    assert z2 == pytest.approx(0.6)


def test_figures_awgn_z():
    sigma = 0.9
    _, z = figures(biawgn(sigma))
    assert z == pytest.approx(np.exp(-1.0 / (2 * sigma**2)))


def test_figures_awgn_capacity_against_quadrature():
    """Gauss-Hermite value vs direct adaptive integration of the defining
    integral, independent route."""
    for sigma in (0.5, 0.8, 1.0, 1.5):

        def integrand(y):
            dens = np.exp(-((y - 1.0) ** 2) / (2 * sigma**2)) / np.sqrt(
                2 * np.pi * sigma**2
            )
            return dens * np.logaddexp(0.0, -2.0 * y / sigma**2) / np.log(2.0)

        expected = 1.0 - quad(integrand, -np.inf, np.inf)[0]
        got, _ = figures(biawgn(sigma))
        assert got == pytest.approx(expected, abs=1e-9)


def test_figures_awgn_limits():
    i_clean, z_clean = figures(biawgn(0.05))
    assert i_clean > 0.999 and z_clean < 1e-80
    i_noisy, z_noisy = figures(biawgn(50.0))
    assert i_noisy < 1e-3 and z_noisy > 0.999


def test_decoder_integration_noiseless_limits():
    """A near-noiseless channel end to end: sample, build priors, decode."""
    from convpolar.circuit import build_circuit, encode
    from convpolar.scdecode import sc_decode

    rng = np.random.default_rng(3)
    c = build_circuit("conv", 4, "periodic")
    x = rng.integers(0, 2, 16, dtype=np.uint8)
    y = encode(c, x)
    out = sample(bsc(0.0), y, rng)
    assert np.array_equal(sc_decode(c, priors(bsc(1e-12), out)), x)
