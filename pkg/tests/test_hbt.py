import numpy as np
import pytest
from scipy.stats import chi2

from polaritonlab.errors import DomainError, StatisticsError
from polaritonlab.hbt import (CoincidenceHistogram, TimetagStream, bootstrap_uncertainty, build_histogram,
                              estimate_g2, fit_peak_fwhm, generate_stream, g2_uncertainty,
                              read_timetags, write_timetags)


@pytest.fixture(scope="module")
def poisson_stream():
    return generate_stream(1_000_000, 0.05, 1.0, jitter_sigma=0.0, crosstalk=(), seed=7)


def test_generator_is_deterministic():
    a = generate_stream(20000, 0.05, 0.9, seed=3)
    b = generate_stream(20000, 0.05, 0.9, seed=3)
    np.testing.assert_array_equal(a.times, b.times)
    np.testing.assert_array_equal(a.channels, b.channels)
    assert not np.array_equal(a.times, generate_stream(20000, 0.05, 0.9, seed=4).times)


def test_stream_invariants():
    s = generate_stream(50000, 0.05, 1.0, seed=1)
    assert np.all(np.diff(s.times) >= 0)
    assert s.times[0] >= 0 and s.times[-1] <= s.duration
    assert s.times.dtype == np.int64


def test_marginal_click_rates():
    s = generate_stream(1_000_000, 0.02, 0.5, crosstalk=(), seed=2)
    for ch in (0, 1):
        rate = len(s.channel_times(ch)) / 1_000_000
        assert rate == pytest.approx(0.02, abs=4 * np.sqrt(0.02 / 1e6))


@pytest.mark.parametrize("p,g", [(0.0, 1.0), (0.6, 2.5), (0.1, -0.1)])
def test_invalid_generator_parameters(p, g):
    with pytest.raises(DomainError):
        generate_stream(100, p, g)


def test_single_pair_histogram():
    s = TimetagStream([0, 1], [1000, 1100], duration=20000)
    h = build_histogram(s, bin_width=87.0, max_order=1)
    assert h.total == 1
    k = np.argmax(h.counts)
    assert h.centers[k] - 43.5 <= 100 < h.centers[k] + 43.5


def test_poissonian_light_central_equals_side(poisson_stream):
    est = estimate_g2(build_histogram(poisson_stream), mask=None)
    assert abs(est.C - est.S) < 3 * np.sqrt(est.C + est.S / est.N_side)


def test_side_peaks_pass_uniformity(poisson_stream):
    h = build_histogram(poisson_stream)
    side = np.array([h.peak_integral(m) for m in h.orders if m != 0])
    stat = np.sum((side - side.mean()) ** 2 / side.mean())
    assert stat < chi2.ppf(0.95, len(side) - 1)


def test_perfect_antibunching():
    s = generate_stream(1_000_000, 0.05, 0.0, jitter_sigma=300.0, crosstalk=(), seed=5)
    h = build_histogram(s)
    est = estimate_g2(h, mask=None)
    assert est.C == 0 and est.g2_0 == 0
    side = np.array(list(est.side_integrals.values()))
    # Poisson dispersion index near one
    assert np.var(side, ddof=1) / side.mean() == pytest.approx(1.0, abs=0.6)


def test_jitter_sets_peak_width():
    s = generate_stream(2_000_000, 0.05, 1.0, jitter_sigma=300.0, crosstalk=(), seed=9)
    h = build_histogram(s)
    for m in (2, -5):
        assert fit_peak_fwhm(h, m) == pytest.approx(700.0, rel=0.10)


def test_crosstalk_found_by_outlier_detection():
    s = generate_stream(2_000_000, 0.05, 1.0, crosstalk=[(9500.0, 0.01)], seed=11)
    h = build_histogram(s)
    h.crosstalk_delays = []  # rely on the statistics alone
    side = {m: h.peak_integral(m) for m in h.orders if m != 0}
    assert max(side, key=side.get) in (1, -1)
    est = estimate_g2(h)
    assert {1, -1} <= set(est.masked_m)
    assert all("outlier" in est.masked_m[m] for m in (1, -1))


def test_known_crosstalk_delays_masked():
    s = generate_stream(200000, 0.05, 1.0, seed=1)
    est = estimate_g2(build_histogram(s))
    assert {1, -1, 9, -9} <= set(est.masked_m)


def test_hand_built_identical_side_peaks():
    T = 12500.0
    centers = np.arange(-6, 7) * T
    counts = np.full(13, 100)
    counts[6] = 37
    h = CoincidenceHistogram(87.0, centers, counts, T, 6)
    est = estimate_g2(h, mask=None)
    assert est.sigma_S == 0 and est.uncertainty == 0
    assert est.g2_0 == 0.37


def test_uncertainty_formula():
    est = estimate_g2(build_histogram(generate_stream(300000, 0.05, 0.8, seed=3)))
    assert est.uncertainty == g2_uncertainty(est.C, est.S, est.sigma_S, est.N_side)
    assert est.uncertainty == pytest.approx(np.sqrt((est.sigma_S / est.S) ** 2
                                                    + (est.C * est.sigma_S / (est.S ** 2 * np.sqrt(est.N_side))) ** 2))


def test_too_few_side_peaks():
    h = build_histogram(generate_stream(100000, 0.05, 1.0, seed=2), max_order=3)
    with pytest.raises(StatisticsError):
        estimate_g2(h, mask=[1, 2])


def test_masking_leaves_central_peak(poisson_stream):
    h = build_histogram(poisson_stream)
    a = estimate_g2(h, mask=None)
    b = estimate_g2(h, mask=[3, -4, 7])
    assert a.C == b.C
    assert b.N_side == a.N_side - 3
    assert b.S != a.S


def test_translation_and_channel_swap_invariance():
    s = generate_stream(500000, 0.05, 0.9, seed=13)
    ref = estimate_g2(build_histogram(s))
    for other in (s.shifted(123457), s.swapped()):
        est = estimate_g2(build_histogram(other))
        assert est.g2_0 == ref.g2_0
        assert est.uncertainty == ref.uncertainty
        assert est.masked_m.keys() == ref.masked_m.keys()


def test_quoted_uncertainty_matches_bootstrap():
    # sigma_S from a handful of side peaks is itself noisy (~1/sqrt(2N) relative),
    # so compare averages over a few streams with many side peaks
    quoted, boot = [], []
    for seed in range(21, 26):
        s = generate_stream(1_000_000, 0.05, 0.9, seed=seed)
        est = estimate_g2(build_histogram(s, max_order=30))
        quoted.append(est.uncertainty)
        boot.append(bootstrap_uncertainty(s, est, max_order=30, seed=1))
    assert np.mean(quoted) == pytest.approx(np.mean(boot), rel=0.25)


def test_round_trip_unbiased():
    g, u = [], []
    for seed in range(20):
        est = estimate_g2(build_histogram(generate_stream(1_000_000, 0.05, 0.9, seed=100 + seed)))
        g.append(est.g2_0)
        u.append(est.uncertainty)
    combined = np.sqrt(np.sum(np.square(u))) / len(u)
    assert abs(np.mean(g) - 0.9) < combined


def test_csv_roundtrip(tmp_path):
    s = generate_stream(20000, 0.05, 0.9, seed=3)
    path = tmp_path / "tags.csv"
    write_timetags(path, s, header_lines=["manifest sha256=abc"])
    back = read_timetags(path, duration=s.duration)
    np.testing.assert_array_equal(back.times, s.times)
    np.testing.assert_array_equal(back.channels, s.channels)


def test_csv_rejects_bad_rows(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("channel,time_ps\nC,10\n")
    with pytest.raises(DomainError):
        read_timetags(path)
    path.write_text("channel,time_ps\nA,10\nB,5\n")
    with pytest.raises(DomainError):
        read_timetags(path)
