"""Synthetic HBT timetags and the side-peak-normalized g2(0) analysis.

The source is a per-pulse Bernoulli pair model: on each pulse arm A and
arm B click with marginal probability p and jointly with probability
g2 p^2, which realizes any g2(0) in the weak-click regime. Detector
timing jitter and avalanche-flash cross-talk into the partner detector
are layered on top.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import median_filter
from scipy.optimize import curve_fit

from .errors import DomainError, StatisticsError

REP_PERIOD = 12500  # ps
BIN_WIDTH = 87.0  # ps
MAX_ORDER = 12
CROSSTALK = ((9500.0, 0.005), (114000.0, 0.005))  # (delay ps, probability)
MASK_SIGMA = 5.0
MEDIAN_SPAN = 9  # side peaks in the running median
MIN_SIDE_PEAKS = 5

CHANNEL_A, CHANNEL_B = 0, 1


@dataclass
class TimetagStream:
    channels: np.ndarray = field(repr=False)  # 0 = A, 1 = B
    times: np.ndarray = field(repr=False)  # integer ps, sorted
    rep_period_T: float = REP_PERIOD
    duration: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=np.int8)
        self.times = np.asarray(self.times, dtype=np.int64)
        if self.channels.shape != self.times.shape:
            raise DomainError("channels and times must have equal length")
        if np.any(np.diff(self.times) < 0):
            raise DomainError("timetags must be time-sorted")
        if len(self.times) and (self.times[0] < 0 or self.times[-1] > self.duration):
            raise DomainError("timetags must lie within [0, duration]")

    def __len__(self):
        return len(self.times)

    def channel_times(self, channel):
        return self.times[self.channels == channel]

    def shifted(self, offset):
        """Copy translated by ``offset`` ps (duration grows to keep every tag)."""
        offset = int(offset)
        if offset < 0 and len(self.times) and self.times[0] + offset < 0:
            raise DomainError("shift would move tags before t = 0")
        return TimetagStream(self.channels.copy(), self.times + offset, self.rep_period_T,
                             self.duration + max(offset, 0), dict(self.metadata))

    def swapped(self):
        return TimetagStream(1 - self.channels, self.times.copy(), self.rep_period_T,
                             self.duration, dict(self.metadata))

    @property
    def crosstalk_delays(self):
        return [d for d, _ in self.metadata.get("crosstalk", [])]


def pair_probabilities(p_click, g2_target):
    """(P(A and B), P(A only), P(B only), P(none)) for one pulse."""
    both = g2_target * p_click ** 2
    single = p_click - both
    none = 1.0 - 2.0 * p_click + both
    if not 0 < p_click < 1:
        raise DomainError("p_click must lie in (0, 1)")
    if g2_target < 0:
        raise DomainError("g2_target must be >= 0")
    if single < 0 or none < 0:
        raise DomainError(f"g2_target={g2_target} with p_click={p_click} gives an invalid joint probability")
    return both, single, single, none


def generate_stream(n_pulses, p_click, g2_target, jitter_sigma=300.0, crosstalk=CROSSTALK,
                    seed=0, rep_period=REP_PERIOD):
    """Pulsed two-detector timetag stream with a prescribed g2(0).

    ``jitter_sigma`` is the standard deviation of the A-B delay of a
    coincidence; each detector therefore contributes sigma/sqrt(2).
    """
    if n_pulses < 1:
        raise DomainError("n_pulses must be >= 1")
    if jitter_sigma < 0:
        raise DomainError("jitter_sigma must be >= 0")
    crosstalk = [(float(d), float(p)) for d, p in crosstalk]
    if any(not 0 <= p <= 1 or d < 0 for d, p in crosstalk):
        raise DomainError("cross-talk needs delay >= 0 and probability in [0, 1]")
    both, single_a, _, _ = pair_probabilities(p_click, g2_target)
    rng = np.random.default_rng(seed)

    u = rng.random(n_pulses)
    click_a = u < both + single_a
    click_b = (u < both) | ((u >= both + single_a) & (u < both + 2 * single_a))
    pulse_t = np.arange(n_pulses, dtype=np.float64) * rep_period
    det_sigma = jitter_sigma / math.sqrt(2.0)
    t_a = pulse_t[click_a] + rng.normal(0.0, det_sigma, click_a.sum())
    t_b = pulse_t[click_b] + rng.normal(0.0, det_sigma, click_b.sum())

    chans = [np.zeros(len(t_a), np.int8), np.ones(len(t_b), np.int8)]
    times = [t_a, t_b]
    for delay, prob in crosstalk:
        for src, dst in ((t_a, CHANNEL_B), (t_b, CHANNEL_A)):
            hit = src[rng.random(len(src)) < prob]
            times.append(hit + delay + rng.normal(0.0, det_sigma, len(hit)))
            chans.append(np.full(len(hit), dst, np.int8))

    duration = n_pulses * rep_period
    t = np.rint(np.concatenate(times)).astype(np.int64)
    c = np.concatenate(chans)
    keep = (t >= 0) & (t <= duration)
    t, c = t[keep], c[keep]
    order = np.lexsort((c, t))
    meta = {"n_pulses": int(n_pulses), "p_click": float(p_click), "g2_target": float(g2_target),
            "jitter_sigma": float(jitter_sigma), "crosstalk": crosstalk, "seed": int(seed)}
    return TimetagStream(c[order], t[order], rep_period, duration, meta)


def pair_delays(stream: TimetagStream, reach):
    """Delays t_B - t_A (ps) of all A-B pairs with |delay| <= reach, plus the A times."""
    ta = stream.channel_times(CHANNEL_A)
    tb = stream.channel_times(CHANNEL_B)
    lo = np.searchsorted(tb, ta - reach, side="left")
    hi = np.searchsorted(tb, ta + reach, side="right")
    n = hi - lo
    total = int(n.sum())
    owner = np.repeat(np.arange(len(ta)), n)
    start = np.repeat(lo - np.cumsum(n) + n, n)
    idx = start + np.arange(total)
    return tb[idx] - ta[owner], ta[owner]


@dataclass
class CoincidenceHistogram:
    bin_width: float
    centers: np.ndarray = field(repr=False)  # ps
    counts: np.ndarray = field(repr=False)
    rep_period_T: float = REP_PERIOD
    max_order: int = MAX_ORDER
    window_width: float = REP_PERIOD / 2
    crosstalk_delays: list = field(default_factory=list)
    masked_m: dict = field(default_factory=dict)  # m -> reason

    def __post_init__(self):
        if not self.bin_width > 0:
            raise DomainError("bin_width must be > 0")

    @property
    def total(self):
        return int(np.sum(self.counts))

    @property
    def orders(self):
        return np.arange(-self.max_order, self.max_order + 1)

    @property
    def peak_windows(self):
        half = self.window_width / 2
        return {int(m): (m * self.rep_period_T - half, m * self.rep_period_T + half) for m in self.orders}

    def peak_integral(self, m):
        lo, hi = self.peak_windows[int(m)]
        sel = (self.centers >= lo) & (self.centers < hi)
        return float(self.counts[sel].sum())

    def peak_integrals(self):
        return np.array([self.peak_integral(m) for m in self.orders])

    def rows(self):
        return zip(self.centers.tolist(), self.counts.tolist())


def histogram_edges(bin_width, reach):
    """Bin edges symmetric about zero with a bin centred on zero."""
    nb = int(math.ceil(reach / bin_width))
    return (np.arange(-nb, nb + 2) - 0.5) * bin_width


def build_histogram(stream: TimetagStream, bin_width=BIN_WIDTH, max_order=MAX_ORDER,
                    window_width=None):
    """Coincidence counts versus A-B delay covering peaks -max_order..max_order."""
    if len(stream) == 0:
        raise DomainError("empty timetag stream")
    T = stream.rep_period_T
    window = T / 2 if window_width is None else float(window_width)
    if not 0 < window <= T:
        raise DomainError("window width must lie in (0, T]")
    reach = (max_order + 0.5) * T
    edges = histogram_edges(bin_width, reach)
    delays, _ = pair_delays(stream, edges[-1])
    counts, _ = np.histogram(delays, bins=edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return CoincidenceHistogram(float(bin_width), centers, counts.astype(np.int64), T, int(max_order),
                                window, list(stream.crosstalk_delays))


@dataclass
class G2Estimate:
    C: float
    S: float
    sigma_S: float
    N_side: int
    g2_0: float
    uncertainty: float
    masked_m: dict = field(default_factory=dict)
    side_integrals: dict = field(default_factory=dict)


def g2_uncertainty(C, S, sigma_S, N):
    return math.sqrt((sigma_S / S) ** 2 + (C * sigma_S / (S ** 2 * math.sqrt(N))) ** 2)


def crosstalk_orders(delays, T, max_order):
    """Peak orders whose windows can receive cross-talk at the given delays (both signs)."""
    out = set()
    for d in delays:
        m = int(round(d / T))
        if 0 < m <= max_order:
            out.update((m, -m))
    return out


def auto_mask(side_orders, integrals, hist: CoincidenceHistogram, threshold=MASK_SIGMA):
    """Flag side peaks that stand out from the running median, plus cross-talk peaks.

    The spread is estimated robustly (scaled MAD) so that a few strong
    outliers cannot hide themselves by inflating it.
    """
    reasons = {}
    for m in sorted(crosstalk_orders(hist.crosstalk_delays, hist.rep_period_T, hist.max_order)):
        reasons[m] = "known cross-talk delay"
    vals = np.asarray(integrals, dtype=float)
    span = min(MEDIAN_SPAN, len(vals))
    running = median_filter(vals, size=span, mode="nearest")
    resid = vals - running
    spread = 1.4826 * np.median(np.abs(resid - np.median(resid)))
    if spread == 0:
        spread = math.sqrt(max(np.median(vals), 1.0))  # Poisson fallback
    for m, r in zip(side_orders, resid):
        if abs(r) > threshold * spread and m not in reasons:
            reasons[int(m)] = f"outlier {r / spread:+.1f} sigma from running median"
    return reasons


def estimate_g2(hist: CoincidenceHistogram, mask="auto"):
    """g2(0) = C / S with the side-peak-fluctuation uncertainty.

    ``mask`` is ``"auto"``, ``None`` (no masking) or an explicit list of
    peak orders to exclude; explicit lists take precedence over detection.
    """
    orders = [int(m) for m in hist.orders if m != 0]
    integrals = {m: hist.peak_integral(m) for m in orders}
    if isinstance(mask, str):
        if mask != "auto":
            raise DomainError(f"unknown mask mode {mask!r}")
        reasons = auto_mask(orders, [integrals[m] for m in orders], hist)
    elif mask is None:
        reasons = {}
    else:
        reasons = {int(m): "explicit" for m in mask if int(m) != 0}
    used = [integrals[m] for m in orders if m not in reasons]
    if len(used) < MIN_SIDE_PEAKS:
        raise StatisticsError(f"only {len(used)} unmasked side peaks (need {MIN_SIDE_PEAKS})")
    C = hist.peak_integral(0)
    S = float(np.mean(used))
    if S <= 0:
        raise StatisticsError("side peaks are empty")
    sigma = float(np.std(used, ddof=1))
    hist.masked_m = dict(reasons)
    return G2Estimate(C, S, sigma, len(used), C / S, g2_uncertainty(C, S, sigma, len(used)),
                      dict(reasons), integrals)


def bootstrap_uncertainty(stream: TimetagStream, estimate: G2Estimate, n_boot=400, n_blocks=500,
                          bin_width=BIN_WIDTH, max_order=MAX_ORDER, window_width=None, seed=0):
    """Standard deviation of C/S over pulse-block resamples of the stream.

    Pairs are assigned to the block of their A click; blocks are drawn with
    replacement and the same masked peaks as ``estimate`` are excluded.
    """
    T = stream.rep_period_T
    window = T / 2 if window_width is None else float(window_width)
    edges = histogram_edges(bin_width, (max_order + 0.5) * T)
    delays, t_a = pair_delays(stream, edges[-1])
    # snap each pair to the bin it occupies in the histogram so peak membership matches
    k = np.digitize(delays, edges) - 1
    centers = 0.5 * (edges[:-1] + edges[1:])
    valid = (k >= 0) & (k < len(centers))
    c = centers[k[valid]]
    m = np.rint(c / T).astype(int)
    off = c - m * T
    inside = (off >= -window / 2) & (off < window / 2) & (np.abs(m) <= max_order)
    block = np.minimum((t_a[valid] / stream.duration * n_blocks).astype(int), n_blocks - 1)
    m, block = m[inside], block[inside]
    table = np.zeros((n_blocks, 2 * max_order + 1))
    np.add.at(table, (block, m + max_order), 1)

    side = [mm for mm in range(-max_order, max_order + 1) if mm != 0 and mm not in estimate.masked_m]
    cols = np.array(side) + max_order
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, n_blocks, size=(n_boot, n_blocks))
    g = np.empty(n_boot)
    for i, rows in enumerate(draws):
        tot = table[rows].sum(axis=0)
        g[i] = tot[max_order] / tot[cols].mean()
    return float(np.std(g, ddof=1))


def _gauss(x, a, mu, s, c0):
    return a * np.exp(-0.5 * ((x - mu) / s) ** 2) + c0


def fit_peak_fwhm(hist: CoincidenceHistogram, m):
    """Gaussian FWHM (ps) of peak ``m`` fitted over its integration window."""
    lo, hi = hist.peak_windows[int(m)]
    sel = (hist.centers >= lo) & (hist.centers < hi)
    x, y = hist.centers[sel], hist.counts[sel].astype(float)
    if y.sum() <= 0:
        raise StatisticsError(f"peak {m} is empty")
    mu0 = float(np.sum(x * y) / y.sum())
    p0 = (y.max(), mu0, 300.0, 0.0)
    popt, _ = curve_fit(_gauss, x, y, p0=p0, sigma=np.sqrt(np.maximum(y, 1.0)), maxfev=20000)
    return 2.0 * math.sqrt(2.0 * math.log(2.0)) * abs(popt[2])


def write_timetags(path, stream: TimetagStream, header_lines=()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["channel", "time_ps"])
        names = np.array(["A", "B"])[stream.channels]
        w.writerows(zip(names.tolist(), stream.times.tolist()))


def read_timetags(path, rep_period=REP_PERIOD, duration=None, metadata=None):
    """Load a channel,time_ps CSV (lines starting with '#' are skipped)."""
    chans, times = [], []
    with open(path, newline="") as fh:
        rows = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(rows, None)
        if header is None or [h.strip() for h in header] != ["channel", "time_ps"]:
            raise DomainError(f"{path}: expected header 'channel,time_ps'")
        for i, (ch, t) in enumerate(rows, start=2):
            ch = ch.strip()
            if ch not in ("A", "B"):
                raise DomainError(f"{path}:{i}: channel must be A or B, got {ch!r}")
            chans.append(0 if ch == "A" else 1)
            times.append(int(t))
    times = np.array(times, dtype=np.int64)
    if duration is None:
        duration = int(times[-1]) if len(times) else 0
    return TimetagStream(np.array(chans, np.int8), times, rep_period, duration, dict(metadata or {}))
