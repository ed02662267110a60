import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wavqrs.errors import (
    BandError,
    CorruptDecompositionError,
    InvalidFilterError,
    LevelError,
    TooShortError,
)
from wavqrs.wavelet_core import (
    Decomposition,
    FilterBank,
    Signal,
    dwt,
    dwt_step,
    get_bank,
    idwt,
    make_db4,
    make_haar,
    qmf_highpass,
    reconstruct_band,
    synthesis_filters,
)

S = 1 / math.sqrt(2)
BANKS = ["db4", "haar"]


def _db4_oracle():
    """db4 low-pass from the spectral factorization, independent of the hardcoded taps."""
    # P(y) = sum_k C(3+k, k) y^k with y = -(z-1)^2 / (4z); z^3 P is a degree-6 polynomial.
    q = np.zeros(7)
    for k in range(4):
        term = np.polymul(np.poly1d([1, -1]) ** (2 * k), np.poly1d([1] + [0] * (3 - k)))
        coeffs = math.comb(3 + k, k) * (-0.25) ** k * np.asarray(term.coeffs, dtype=float)
        q[7 - len(coeffs):] += coeffs
    inside = np.roots(q)
    inside = inside[np.abs(inside) < 1]
    poly = np.real(np.poly(inside))
    for _ in range(4):
        poly = np.polymul(poly, [1, 1])
    return poly * math.sqrt(2) / poly.sum()


def test_db4_matches_spectral_factorization():
    h0 = make_db4().h0
    oracle = _db4_oracle()
    # The oracle may come out time-reversed relative to the analysis orientation.
    assert np.allclose(h0, oracle, atol=1e-10) or np.allclose(h0, oracle[::-1], atol=1e-10)


def test_qmf_relations_one_based():
    bank = make_db4()
    L = bank.length
    h0 = lambda n: bank.h0[n - 1]
    for n in range(1, L + 1):
        assert bank.h1[n - 1] == (-1) ** n * h0(L + 1 - n)
        assert bank.g0[n - 1] == h0(L + 1 - n)
        assert bank.g1[n - 1] == (-1) ** (n - 1) * h0(n)


def test_g1_is_time_reversed_h1():
    bank = make_db4()
    assert np.array_equal(bank.g1, bank.h1[::-1])


def test_alternate_g1_sign_form_breaks_reconstruction():
    # g1(n) = (-1)**(n-1) h0(L+1-n) equals -h1; it only reconstructs for
    # palindromic filters.
    db4 = make_db4()
    h0 = db4.h0
    L = len(h0)
    n = np.arange(1, L + 1)
    alt = (-1.0) ** (n - 1) * h0[::-1]
    assert np.array_equal(alt, -db4.h1)
    broken = FilterBank(h0=h0, h1=db4.h1, g0=db4.g0, g1=alt, name="alt")
    x = np.random.default_rng(0).standard_normal(256)
    err = np.max(np.abs(idwt(dwt(x, 3, broken)) - x))
    assert err > 0.1


@pytest.mark.parametrize("name", BANKS)
def test_orthonormality(name):
    h0 = get_bank(name).h0
    assert abs(h0.sum() - math.sqrt(2)) < 1e-12
    assert abs(np.dot(h0, h0) - 1) < 1e-12
    for k in range(1, len(h0) // 2):
        assert abs(np.dot(h0[2 * k:], h0[:-2 * k])) < 1e-12


def test_db4_vanishing_moments():
    h1 = make_db4().h1
    n = np.arange(1, 9, dtype=float)
    for p in range(4):
        assert abs(np.sum(h1 * n ** p)) < 1e-8
    assert abs(np.sum(h1 * n ** 4)) > 1e-3


def test_haar_examples():
    assert np.allclose(qmf_highpass([S, S]), [-S, S])
    g0, g1 = synthesis_filters([S, S])
    assert np.allclose(g0, [S, S])
    a, d = dwt_step(np.array([1.0, 1, 2, 2]), make_haar())
    assert np.allclose(a, [math.sqrt(2), 2 * math.sqrt(2)])
    assert np.allclose(d, [0, 0])


@pytest.mark.parametrize("bad", [[], [1.0, 2.0, 3.0]])
def test_invalid_filters(bad):
    with pytest.raises(InvalidFilterError):
        qmf_highpass(bad)
    with pytest.raises(InvalidFilterError):
        synthesis_filters(bad)


def test_unequal_filter_lengths_rejected():
    with pytest.raises(InvalidFilterError):
        FilterBank(h0=[1, 1], h1=[1, 1], g0=[1, 1], g1=[1, 1, 1, 1])


def test_unknown_wavelet():
    with pytest.raises(InvalidFilterError):
        get_bank("sym99")


@pytest.mark.parametrize("name", BANKS)
def test_highpass_sums_to_zero(name):
    assert abs(get_bank(name).h1.sum()) < 1e-12


@pytest.mark.parametrize("name", BANKS)
def test_constant_input(name):
    a, d = dwt_step(np.full(64, 5.0), get_bank(name))
    assert np.max(np.abs(d)) < 1e-12
    assert np.allclose(a, 5 * math.sqrt(2), atol=1e-12)


def test_length_halving():
    a, d = dwt_step(np.random.default_rng(1).standard_normal(256), make_db4())
    assert len(a) == len(d) == 128


def test_dwt_step_too_short():
    with pytest.raises(TooShortError):
        dwt_step(np.array([1.0]), make_db4())


def test_single_level_equals_step():
    x = np.random.default_rng(2).standard_normal(128)
    d = dwt(x, 1)
    a, dd = dwt_step(x, make_db4())
    assert np.array_equal(d.approx, a)
    assert np.array_equal(d.detail(1), dd)


def test_band_lengths_periodic():
    d = dwt(np.zeros(1024), 8)
    assert len(d.details) == 8
    for j in range(1, 9):
        assert len(d.detail(j)) == 1024 // 2 ** j
    assert len(d.approx) == 1024 // 256


def test_matches_pywavelets_periodization():
    pywt = pytest.importorskip("pywt")
    x = np.random.default_rng(3).standard_normal(1024)
    ours = dwt(x, 5)
    ref = pywt.wavedec(x, "db4", mode="periodization", level=5)
    assert np.allclose(ours.approx, ref[0], atol=1e-12)
    for j in range(1, 6):
        assert np.allclose(ours.detail(j), ref[-j], atol=1e-12)


@pytest.mark.parametrize("levels", [1, 3, 6])
def test_cubic_interior_zero(levels):
    n = np.arange(2048, dtype=float)
    x = n ** 3
    d = dwt(x, levels)
    L = 8
    for j in range(1, levels + 1):
        coeffs = d.detail(j)
        # Level-j support spans (L-1)(2^j-1)+1 input samples.
        margin = math.ceil((L - 1) * (2 ** j - 1) / 2 ** j) + 1
        interior = coeffs[margin:-margin]
        assert interior.size > 0
        assert np.max(np.abs(interior)) < 1e-6 * np.max(np.abs(x))


@pytest.mark.parametrize("ext", ["periodic", "symmetric"])
@pytest.mark.parametrize("n", [4096, 1000, 650, 37])
def test_perfect_reconstruction_all_levels(ext, n):
    x = np.random.default_rng(n).standard_normal(n)
    for J in range(1, int(math.log2(n)) + 1):
        y = idwt(dwt(x, J, "db4", ext))
        assert len(y) == n
        assert np.max(np.abs(y - x)) < 1e-10 * np.max(np.abs(x))


def test_parseval_periodic():
    x = np.random.default_rng(4).standard_normal(4096)
    d = dwt(x, 8)
    energy = sum(np.dot(b, b) for b in d.bands())
    assert abs(energy - np.dot(x, x)) < 1e-9 * np.dot(x, x)


def test_level_errors():
    with pytest.raises(LevelError):
        dwt(np.zeros(16), 0)
    with pytest.raises(LevelError):
        dwt(np.zeros(16), 5)
    with pytest.raises(TooShortError):
        dwt(np.zeros(0), 1)


def test_zero_decomposition():
    d = dwt(np.zeros(256), 4)
    assert np.array_equal(idwt(d), np.zeros(256))


def test_corrupt_decomposition():
    d = dwt(np.arange(64.0), 3)
    bad = Decomposition(approx=d.approx, details=d.details[:2], levels=3,
                        original_length=64, bank=d.bank)
    with pytest.raises(CorruptDecompositionError):
        idwt(bad)
    short = d.map_bands(lambda key, b: b[:-1] if key == 2 else b)
    with pytest.raises(CorruptDecompositionError):
        idwt(short)


def test_band_selector_errors():
    d = dwt(np.arange(64.0), 3)
    with pytest.raises(BandError):
        reconstruct_band(d, 4)
    with pytest.raises(BandError):
        reconstruct_band(d, "nonsense")
    with pytest.raises(BandError):
        d.detail(0)


@pytest.mark.parametrize("ext", ["periodic", "symmetric"])
def test_band_reconstructions_partition(ext):
    x = np.random.default_rng(5).standard_normal(1000)
    d = dwt(x, 6, "db4", ext)
    total = reconstruct_band(d, "approx") + sum(reconstruct_band(d, j) for j in range(1, 7))
    assert np.max(np.abs(total - idwt(d))) < 1e-9 * np.max(np.abs(x))
    details = reconstruct_band(d, "details")
    assert np.max(np.abs(details - (x - reconstruct_band(d, "approx")))) < 1e-9
    assert np.allclose(reconstruct_band(d, "d4"), reconstruct_band(d, 4))
    assert np.allclose(reconstruct_band(d, [1, "approx"]),
                       reconstruct_band(d, 1) + reconstruct_band(d, "approx"))


def _tone(freq, fs=360.0, n=8192):
    return np.sin(2 * np.pi * freq * np.arange(n) / fs)


def _band_energy_share(x, level, levels=8):
    d = dwt(x, levels)
    energies = {j: np.sum(reconstruct_band(d, j) ** 2) for j in range(1, levels + 1)}
    return energies[level] / sum(energies.values())


def test_tone_in_d4_band():
    # At fs 360, d4 covers 11.25-22.5 Hz.
    assert _band_energy_share(_tone(16.0), 4) >= 0.70


def test_ten_hz_tone_lands_in_d5():
    # 10 Hz sits in 5.625-11.25 Hz, the d5 band at fs 360.
    shares = {j: _band_energy_share(_tone(10.0), j) for j in (4, 5)}
    assert shares[5] > 0.6 > shares[4]


def test_signal_type():
    s = Signal(np.arange(4.0), fs=360)
    with pytest.raises(ValueError):
        s.samples[0] = 1.0
    with pytest.raises(ValueError):
        Signal(np.arange(4.0), fs=0)


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(x=arrays(np.float64, st.integers(8, 300), elements=finite),
       ext=st.sampled_from(["periodic", "symmetric"]),
       data=st.data())
def test_round_trip_property(x, ext, data):
    J = data.draw(st.integers(1, int(math.log2(len(x)))))
    y = idwt(dwt(x, J, "db4", ext))
    scale = max(np.max(np.abs(x)), 1e-300)
    assert np.max(np.abs(y - x)) <= 1e-10 * scale + 1e-300


@settings(max_examples=30, deadline=None)
@given(a=finite, b=finite, seed=st.integers(0, 2**32 - 1))
def test_linearity_property(a, b, seed):
    rng = np.random.default_rng(seed)
    x1, x2 = rng.standard_normal((2, 512))
    d1, d2 = dwt(x1, 5), dwt(x2, 5)
    combo = dwt(a * x1 + b * x2, 5)
    mixed = a * d1 + b * d2
    scale = max(abs(a), abs(b), 1.0) * 10
    for u, v in zip(combo.bands(), mixed.bands()):
        assert np.max(np.abs(u - v)) < 1e-10 * scale
    assert np.max(np.abs(idwt(mixed) - (a * x1 + b * x2))) < 1e-10 * scale
    assert np.allclose(reconstruct_band(mixed, 3),
                       a * reconstruct_band(d1, 3) + b * reconstruct_band(d2, 3), atol=1e-10 * scale)
