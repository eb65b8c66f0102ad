"""Click-level Monte-Carlo model of the single-photon detectors and the
time-correlation analysis chain.

Photon arrival streams are thinned by detector efficiency, merged with
Poisson dark counts, smeared by Gaussian timing jitter and filtered by a
non-paralyzable dead time.  Delay histograms use half-open bins centered
on integer multiples of the bin width so the coincidence peak sits in
the middle of the zero-delay bin.
"""

import math
from dataclasses import dataclass, field

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a normal dependency
    njit = None

MAX_EXPECTED_EVENTS = 1e9


@dataclass
class DetectorSpec:
    """Free-running InGaAs APD parameters (non-paralyzable dead-time model)."""

    efficiency: float
    dark_rate: float       # Hz
    dead_time: float       # s
    jitter_sigma: float    # s, Gaussian timing jitter

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in [0, 1]")
        if self.dark_rate < 0 or self.dead_time < 0 or self.jitter_sigma < 0:
            raise ValueError("dark_rate, dead_time and jitter_sigma must be >= 0")


# defaults modeled on the two detectors used in the experiment
ID210 = DetectorSpec(efficiency=0.10, dark_rate=2500.0, dead_time=50e-6,
                     jitter_sigma=50e-12)
ID230 = DetectorSpec(efficiency=0.25, dark_rate=200.0, dead_time=25e-6,
                     jitter_sigma=50e-12)


@dataclass
class TimeTagStream:
    """Strictly increasing detection timestamps (s) on one channel."""

    channel: str
    duration: float
    tags: np.ndarray

    def __post_init__(self):
        self.tags = np.asarray(self.tags, dtype=float)
        if self.tags.size and np.any(np.diff(self.tags) < 0):
            raise ValueError("tags must be sorted")


@dataclass
class CoincidenceHistogram:
    """Counts of tag_B - tag_A delays in bins centered on k * bin_width."""

    bin_width: float
    delay_range: float
    counts: np.ndarray = field(default=None)

    @property
    def n_half(self):
        return int(round(self.delay_range / self.bin_width))

    def bin_centers(self):
        return (np.arange(self.counts.size) - self.n_half) * self.bin_width


def _dead_time_filter_py(tags, dead_time):
    out = np.empty_like(tags)
    k = 0
    last = -math.inf
    for t in tags:
        if t - last >= dead_time:
            out[k] = t
            k += 1
            last = t
    return out[:k]


if njit is not None:
    _dead_time_filter_jit = njit(cache=True)(_dead_time_filter_py)
else:  # pragma: no cover
    _dead_time_filter_jit = _dead_time_filter_py


def dead_time_filter(tags, dead_time):
    """Non-paralyzable dead time: drop tags within dead_time of the
    previously accepted tag."""
    if dead_time <= 0 or tags.size == 0:
        return np.asarray(tags, dtype=float)
    return _dead_time_filter_jit(np.ascontiguousarray(tags, dtype=float), dead_time)


def poisson_times(rate, duration, rng, sort=True):
    """Event times of a homogeneous Poisson process on [0, duration).

    sort=False skips the ordering for consumers that sort later anyway.
    """
    n = rng.poisson(rate * duration)
    times = rng.uniform(0.0, duration, n)
    return np.sort(times) if sort else times


def detect_arrivals(incident, spec, duration, rng, channel="A"):
    """Turn incident photon times into a detected tag stream.

    Each photon survives with the detector efficiency; dark counts are
    added as an independent Poisson process; every tag is jittered by
    Gaussian(0, jitter_sigma); tags outside [0, duration) are dropped
    and the non-paralyzable dead time is applied to the sorted stream.
    """
    incident = np.asarray(incident, dtype=float)
    if spec.efficiency < 1.0:
        kept = incident[rng.random(incident.size) < spec.efficiency]
    else:
        kept = incident
    darks = poisson_times(spec.dark_rate, duration, rng, sort=False)
    tags = np.concatenate([kept, darks])
    if spec.jitter_sigma > 0 and tags.size:
        tags = tags + rng.normal(0.0, spec.jitter_sigma, tags.size)
    tags = tags[(tags >= 0.0) & (tags < duration)]
    tags.sort()
    tags = dead_time_filter(tags, spec.dead_time)
    return TimeTagStream(channel, duration, tags)


def generate_timetags(pair_rate, singles_rates, duration, det_a, det_b, seed):
    """Monte-Carlo tag streams for a pair source plus per-channel singles.

    Pair events put one simultaneous photon on each channel; independent
    Poisson singles are added per channel before the detector model.
    Fully reproducible from the seed.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    s_a, s_b = singles_rates
    if pair_rate < 0 or s_a < 0 or s_b < 0:
        raise ValueError("rates must be non-negative")
    expected = (2 * pair_rate + s_a + s_b + det_a.dark_rate + det_b.dark_rate) * duration
    if expected > MAX_EXPECTED_EVENTS:
        raise ValueError(f"expected event count {expected:.3g} exceeds guard of "
                         f"{MAX_EXPECTED_EVENTS:.0g}")
    rng = np.random.default_rng(seed)
    pairs = poisson_times(pair_rate, duration, rng, sort=False)
    incident_a = np.concatenate([pairs, poisson_times(s_a, duration, rng, sort=False)])
    incident_b = np.concatenate([pairs, poisson_times(s_b, duration, rng, sort=False)])
    stream_a = detect_arrivals(incident_a, det_a, duration, rng, channel="A")
    stream_b = detect_arrivals(incident_b, det_b, duration, rng, channel="B")
    return stream_a, stream_b


def histogram(a, b, bin_width=32e-12, delay_range=400e-9):
    """Histogram of tag_B - tag_A delays with |delay| up to ~delay_range.

    Two-pointer sweep over the sorted streams via searchsorted,
    O(N + M + matches).  Bins are half-open and centered on integer
    multiples of bin_width (2 * n_half + 1 bins).
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if delay_range < bin_width:
        raise ValueError("delay_range must be at least one bin_width")
    ta, tb = a.tags, b.tags
    if np.any(np.diff(ta) < 0) or np.any(np.diff(tb) < 0):
        raise ValueError("tag streams must be sorted")
    n_half = int(round(delay_range / bin_width))
    n_bins = 2 * n_half + 1
    reach = (n_half + 0.5) * bin_width
    counts = np.zeros(n_bins, dtype=np.int64)
    if ta.size and tb.size:
        lo = np.searchsorted(tb, ta - reach, side="left")
        hi = np.searchsorted(tb, ta + reach, side="right")
        per = hi - lo
        total = int(per.sum())
        if total:
            offsets = np.repeat(np.cumsum(per) - per, per)
            b_idx = np.arange(total) - offsets + np.repeat(lo, per)
            delays = tb[b_idx] - np.repeat(ta, per)
            idx = np.floor(delays / bin_width + 0.5).astype(np.int64) + n_half
            valid = (idx >= 0) & (idx < n_bins)
            counts = np.bincount(idx[valid], minlength=n_bins)
    hist = CoincidenceHistogram(bin_width, delay_range)
    hist.counts = counts
    return hist


def _window_bins(hist, window):
    w_bins = int(round(window / hist.bin_width))
    if w_bins < 1:
        raise ValueError("window must cover at least one bin")
    return w_bins


def integrate_peak(hist, window=224e-12):
    """Sum of counts in the bins centered within +-window/2 of zero delay."""
    if window > 2 * hist.delay_range:
        raise ValueError("window exceeds delay_range")
    w_bins = _window_bins(hist, window)
    c0 = hist.n_half
    half = (w_bins - 1) // 2
    lo = c0 - half
    hi = lo + w_bins
    return int(hist.counts[lo:hi].sum())


def estimate_accidentals(hist, offset=10e-9, span=320e-9, window=224e-12):
    """Mean and standard deviation of window-integrated counts far from
    the peak.

    Disjoint windows of the peak-integration width are tiled across
    [offset, offset + span] on both sides of zero delay; the std feeds
    the visibility uncertainty.
    """
    w_bins = _window_bins(hist, window)
    if offset <= window / 2:
        raise ValueError("offset must clear the peak window")
    if span < 10 * hist.bin_width:
        raise ValueError("span must cover at least 10 bins")
    if offset + span > hist.delay_range + hist.bin_width:
        raise ValueError("offset + span exceeds delay_range")
    c0 = hist.n_half
    start = int(math.ceil(offset / hist.bin_width))
    n_bins_span = int(span / hist.bin_width)
    n_win = n_bins_span // w_bins
    if n_win < 1:
        raise ValueError("insufficient bins for a single accidental window")
    sums = []
    for side in (+1, -1):
        if side > 0:
            seg = hist.counts[c0 + start: c0 + start + n_win * w_bins]
        else:
            seg = hist.counts[c0 - start - n_win * w_bins: c0 - start]
        sums.append(seg.reshape(n_win, w_bins).sum(axis=1))
    sums = np.concatenate(sums)
    return float(sums.mean()), float(sums.std())


@dataclass
class FringeFit:
    """Least-squares fit of counts ~ offset * (1 + V cos(k theta + phase))."""

    offset: float
    amplitude: float
    phase: float
    visibility: float
    visibility_err: float
    residual_rms: float
    period: float
    degenerate: bool = False


def fit_fringe(phases, counts, period, accidental_std=None):
    """Fit C(theta) = B (1 + V cos(2 pi theta / period + phi)).

    Linear least squares in (B, A cos phi, -A sin phi); V = A/B clamped
    to [0, 1].  The visibility uncertainty combines the fit covariance
    (delta method) with the accidental standard deviation when given.
    An all-equal count vector is flagged degenerate with V = 0.
    """
    phases = np.asarray(phases, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if phases.size < 5:
        raise ValueError("insufficient points: need at least 5")
    if phases.size != counts.size:
        raise ValueError("phases and counts must have equal length")
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    if phases.max() - phases.min() < period * (1 - 1e-9):
        raise ValueError("phases must span at least one period")
    k = 2.0 * math.pi / period
    x = np.column_stack([np.ones_like(phases), np.cos(k * phases), np.sin(k * phases)])
    coef, *_ = np.linalg.lstsq(x, counts, rcond=None)
    b0, c1, c2 = coef
    resid = counts - x @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    amp = math.hypot(c1, c2)
    phi = math.atan2(-c2, c1)
    if np.allclose(counts, counts[0]) or b0 <= 0:
        return FringeFit(float(b0), 0.0, 0.0, 0.0, math.inf if b0 <= 0 else 0.0,
                         rms, period, degenerate=True)
    vis = amp / b0
    dof = max(phases.size - 3, 1)
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(x.T @ x)
    # delta method for V = sqrt(c1^2 + c2^2) / b0
    if amp > 0:
        grad = np.array([-amp / b0**2, c1 / (amp * b0), c2 / (amp * b0)])
    else:
        grad = np.array([0.0, 1.0 / b0, 1.0 / b0])
    var_v = float(grad @ cov @ grad)
    if accidental_std is not None:
        var_v += (vis * accidental_std / b0) ** 2
    return FringeFit(float(b0), float(amp), float(phi),
                     float(min(max(vis, 0.0), 1.0)), math.sqrt(max(var_v, 0.0)),
                     rms, period)


@dataclass
class VisibilityResult:
    raw: FringeFit
    corrected: FringeFit


def visibility_raw_and_corrected(phases, peak_counts, accidentals, period=math.pi):
    """Raw and accidental-subtracted fringe visibilities.

    `accidentals` is the (mean, std) of window-integrated counts from
    estimate_accidentals; subtracted counts are floored at zero.
    """
    acc_mean, acc_std = accidentals
    raw = fit_fringe(phases, peak_counts, period, accidental_std=acc_std)
    corrected_counts = np.maximum(np.asarray(peak_counts, dtype=float) - acc_mean, 0.0)
    corrected = fit_fringe(phases, corrected_counts, period, accidental_std=acc_std)
    return VisibilityResult(raw=raw, corrected=corrected)


def dead_time_loss(incident_rate, spec):
    """Non-paralyzable loss fraction r tau / (1 + r tau)."""
    if incident_rate < 0:
        raise ValueError("incident_rate must be non-negative")
    rt = incident_rate * spec.dead_time
    return rt / (1.0 + rt)


def write_timetag_streams(path, streams):
    """Plain-text export: header '# duration_ps=<N>', then
    'channel<TAB>timestamp_ps' records (integer picoseconds)."""
    streams = list(streams)
    duration_ps = int(round(max(s.duration for s in streams) * 1e12))
    with open(path, "w") as fh:
        fh.write(f"# duration_ps={duration_ps}\n")
        for s in streams:
            for t in np.round(s.tags * 1e12).astype(np.int64):
                fh.write(f"{s.channel}\t{t}\n")


def read_timetag_streams(path):
    """Read the text format back; returns {channel: TimeTagStream}."""
    duration = None
    tags = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line.lstrip("# ").partition("=")
                if key == "duration_ps":
                    duration = int(val) * 1e-12
                continue
            channel, _, t = line.partition("\t")
            tags.setdefault(channel, []).append(int(t) * 1e-12)
    if duration is None:
        raise ValueError("missing '# duration_ps=' header")
    return {
        ch: TimeTagStream(ch, duration, np.sort(np.asarray(ts)))
        for ch, ts in tags.items()
    }


def histogram_to_csv(hist, path, header_lines=()):
    """CSV export with columns delay_ps, counts."""
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("delay_ps,counts\n")
        for d, c in zip(hist.bin_centers() * 1e12, hist.counts):
            fh.write(f"{d:.1f},{c}\n")
