"""Two-stage estimation, grid-search baseline, resynthesis, and metrics.

Stage 1 predicts the four LF parameters for each three-period analysis
window with the trained regressor; stage 2 generates the corresponding
LF excitation and fits the vocal-tract filter with one closed-form
least-squares solve per window. No refinement loop exists anywhere: the
per-window cost is one forward pass plus one factorization.

The baseline estimator replaces stage 1 with an exhaustive grid over the
LF ranges and picks, per window, the candidate whose resynthesis best
matches the observed samples: the analysis-by-synthesis strategy the
two-stage method is measured against, kept deliberately simple.

Metrics: AER (mean absolute relative error, percent), lag-aligned
energy-normalized MSE between waveform pairs, and nearest-frequency
one-to-one resonance matching for formant/antiformant scoring.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from . import nn
from .errors import (DegenerateSignal, EstimationFailed, GlotfitError,
                     InvalidParams, LengthMismatch, ZeroTruth)
from .frontend import GciTrack, detect_gci, iaif, make_windows
from .lf import LFParams, generate_cycle
from .tract import ArmaxModel, ResonanceSet, arma_filter, fit_armax, resonances
from .waveform import Waveform

__all__ = [
    "WindowEstimate",
    "EstimationResult",
    "GridSpec",
    "estimate",
    "grid_abs_baseline",
    "resynthesize",
    "excitation_track",
    "windows_and_labels",
    "aer",
    "mse_pair",
    "match_resonances",
    "ErrorAccumulator",
]

DEFAULT_ORDERS = (14, 8)


@dataclass
class WindowEstimate:
    """Stage-2 output for one accepted analysis window."""

    center_idx: int          # period index of the labeled center period
    start: int
    end: int
    center_start: int
    center_end: int
    norm_gain: float
    raw: np.ndarray          # unclamped regressor output (tp, te, ta, ee)
    lf: LFParams             # clamped, ee in signal units
    model: ArmaxModel
    res: ResonanceSet
    residual_power: float
    window_mse: float = None


@dataclass
class EstimationResult:
    windows: list
    gcis: GciTrack
    fs_hz: float
    frontend: str
    elapsed_s: float
    skipped: list = field(default_factory=list)
    resynth: Waveform = None


@dataclass(frozen=True)
class GridSpec:
    """Candidate lattice over the LF ranges; ee stays at 1 (the filter
    gain absorbs amplitude, recovered afterwards from b0)."""

    n_te: int = 8
    n_ratio: int = 8
    n_ta: int = 4
    te_range: tuple = (0.3, 0.9)
    ratio_range: tuple = (0.65, 0.8)
    ta_range: tuple = (0.03, 0.08)

    def __post_init__(self):
        if min(self.n_te, self.n_ratio, self.n_ta) < 1:
            raise InvalidParams("grid axes need at least one point")

    def candidates(self):
        """(te, ratio, ta) triples in deterministic nested order."""

        def axis(n, lo_hi):
            lo, hi = lo_hi
            return [0.5 * (lo + hi)] if n == 1 else list(np.linspace(lo, hi, n))

        out = []
        for te in axis(self.n_te, self.te_range):
            for ratio in axis(self.n_ratio, self.ratio_range):
                for ta in axis(self.n_ta, self.ta_range):
                    out.append((float(te), float(ratio), float(ta)))
        return out


def _window_excitation(fs, period_lens, tp, te, ta, ee, cache=None):
    """Concatenate one LF cycle per period of the analysis window."""
    parts = []
    for n0 in period_lens:
        key = (n0, tp, te, ta)
        cycle = None if cache is None else cache.get(key)
        if cycle is None:
            cycle = generate_cycle(
                LFParams(t0_s=n0 / fs, tp=tp, te=te, ta=ta, ee=1.0), fs).samples
            if cache is not None:
                cache[key] = cycle
        parts.append(cycle)
    return ee * np.concatenate(parts)


def _period_lens(gcis: np.ndarray, i: int):
    """Sample counts of periods i-1, i, i+1 (window around center i)."""
    return (int(gcis[i] - gcis[i - 1]),
            int(gcis[i + 1] - gcis[i]),
            int(gcis[i + 2] - gcis[i + 1]))


def estimate(speech: Waveform, model, frontend: str = "sw",
             orders: tuple = DEFAULT_ORDERS,
             gci_override: GciTrack = None,
             f0_range: tuple = (60.0, 500.0)) -> EstimationResult:
    """Two-stage estimation over every interior period of an utterance.

    model is a trained MlpModel, or any callable mapping a FeatureWindow
    to a raw 4-vector (tp, te, ta, ee in window-normalized units), the
    hook used for oracle-label injection. frontend "sw" feeds the speech
    window to the predictor, "gsd" feeds the inverse-filtered window;
    the filter fit always consumes the raw speech samples.

    Raises EstimationFailed only if no window survives.
    """
    if frontend not in ("sw", "gsd"):
        raise InvalidParams(f"frontend must be 'sw' or 'gsd', got {frontend!r}")
    p, q = orders
    t_start = time.perf_counter()
    gcis = gci_override if gci_override is not None else detect_gci(speech, f0_range)
    g = gcis.instants
    feature_signal = iaif(speech) if frontend == "gsd" else speech
    windows, skipped = make_windows(feature_signal, gcis, kind=frontend)
    skipped = list(skipped)

    predictor = model if callable(model) and not isinstance(model, nn.MlpModel) \
        else None
    fs = speech.fs_hz
    accepted = []
    for w in windows:
        i = int(np.searchsorted(g, w.center_start))
        if predictor is not None:
            raw = np.asarray(predictor(w), dtype=np.float64)
        else:
            raw = nn.forward(model, w.values, mode="eval")[0]
        lab = nn.clamp_outputs(raw)
        ee_hat = lab.ee * w.norm_gain
        lens = _period_lens(g, i)
        try:
            u = _window_excitation(fs, lens, lab.tp, lab.te, lab.ta, ee_hat)
            s_win = speech.samples[w.start:w.start + u.size]
            fit_model, diag = fit_armax(Waveform(s_win, fs),
                                        Waveform(u, fs), p, q)
            res = resonances(fit_model)
        except GlotfitError as exc:
            skipped.append({"center_start": w.center_start,
                            "reason": type(exc).__name__, "detail": str(exc)})
            continue
        accepted.append(WindowEstimate(
            center_idx=i,
            start=w.start, end=w.start + u.size,
            center_start=w.center_start, center_end=w.center_end,
            norm_gain=w.norm_gain,
            raw=raw,
            lf=LFParams(t0_s=lens[1] / fs, tp=lab.tp, te=lab.te,
                        ta=lab.ta, ee=ee_hat),
            model=fit_model, res=res,
            residual_power=diag.residual_power,
        ))
    if not accepted:
        raise EstimationFailed(
            f"all {len(windows)} windows failed "
            f"({len(windows) - len(skipped)} cut, {len(skipped)} skipped)")
    result = EstimationResult(windows=accepted, gcis=gcis, fs_hz=fs,
                              frontend=frontend, elapsed_s=0.0, skipped=skipped)
    result.resynth = resynthesize(result)
    result.elapsed_s = time.perf_counter() - t_start
    return result


def _period_plan(result: EstimationResult):
    """Yield (period_idx, n0, owning WindowEstimate) for periods 0..last.

    Periods without their own estimate borrow the nearest center, so a
    consumer walking the plan never restarts mid-span.
    """
    if not result.windows:
        raise InvalidParams("result holds no accepted windows")
    g = result.gcis.instants
    by_center = {w.center_idx: w for w in result.windows}
    centers = sorted(by_center)
    for idx in range(0, max(by_center) + 1):
        pos = min(range(len(centers)), key=lambda k: abs(centers[k] - idx))
        yield idx, int(g[idx + 1] - g[idx]), by_center[centers[pos]]


def excitation_track(result: EstimationResult) -> Waveform:
    """Concatenated per-period LF excitation from the estimates."""
    fs = result.fs_hz
    pieces = [
        _window_excitation(fs, (n0,), west.lf.tp, west.lf.te,
                           west.lf.ta, west.lf.ee)
        for _, n0, west in _period_plan(result)
    ]
    return Waveform(np.concatenate(pieces), fs)


def resynthesize(result: EstimationResult) -> Waveform:
    """Per-period synthesis with filter state carried across boundaries.

    Runs from the first tracked instant (zero state at the signal onset)
    through the last estimated period; periods without their own estimate
    borrow the nearest one, so the recursion never restarts mid-span.
    """
    pieces = []
    state = None
    fs = result.fs_hz
    for _, n0, west in _period_plan(result):
        u = _window_excitation(fs, (n0,), west.lf.tp, west.lf.te,
                               west.lf.ta, west.lf.ee)
        want = max(west.model.a.size, west.model.b.size) - 1
        if state is None:
            state = np.zeros(want)
        elif state.size != want:
            state = np.resize(state, want)
        out, state = arma_filter(Waveform(u, fs), west.model,
                                 initial_state=state, return_state=True,
                                 check_stability=False)
        pieces.append(out.samples)
    return Waveform(np.concatenate(pieces), fs)


def windows_and_labels(speech: Waveform, truth, kind: str = "sw"):
    """Training pairs for one utterance: (FeatureWindow, label 4-vector).

    The label is (tp, te, ta, ee / norm_gain) with ee in the amplitude
    units of the given samples (truth.scale folds storage scaling in),
    matching the denormalization applied at estimation time.

    Returns (pairs, skipped).
    """
    sig = iaif(speech) if kind == "gsd" else speech
    windows, skipped = make_windows(sig, truth.gcis, kind=kind)
    ee_sig = truth.lf.ee * truth.scale
    pairs = [
        (w, np.array([truth.lf.tp, truth.lf.te, truth.lf.ta,
                      ee_sig / w.norm_gain]))
        for w in windows
    ]
    return pairs, skipped


def _initial_state(model: ArmaxModel, s_hist: np.ndarray, u_hist: np.ndarray):
    """Filter state consistent with observed output/input history."""
    if s_hist.size == 0:
        return np.zeros(max(model.a.size, model.b.size) - 1)
    zi = scipy.signal.lfiltic(model.b, model.a, s_hist[::-1], u_hist[::-1])
    want = max(model.a.size, model.b.size) - 1
    if zi.size < want:
        zi = np.concatenate([zi, np.zeros(want - zi.size)])
    return zi[:want]


def grid_abs_baseline(speech: Waveform, gcis: GciTrack,
                      grid: GridSpec = None,
                      orders: tuple = DEFAULT_ORDERS) -> EstimationResult:
    """Exhaustive analysis-by-synthesis over an LF candidate lattice.

    For every analysis window and every (te, tp/te, ta) candidate: build
    the excitation, fit the filter, resynthesize the window (initial
    state reconstructed from the samples before it), and keep the
    candidate with the lowest window MSE. First minimum wins ties, so
    refining a grid by appending candidates never changes earlier picks.
    """
    if grid is None:
        grid = GridSpec()
    p, q = orders
    t_start = time.perf_counter()
    g = gcis.instants
    windows, skipped = make_windows(speech, gcis, kind="sw")
    skipped = list(skipped)
    fs = speech.fs_hz
    cands = grid.candidates()
    if not cands:
        raise InvalidParams("empty candidate grid")
    cycle_cache = {}
    accepted = []
    x = speech.samples
    for w in windows:
        i = int(np.searchsorted(g, w.center_start))
        lens = _period_lens(g, i)
        span = sum(lens)
        s_win = x[w.start:w.start + span]
        hist_lo = max(0, w.start - max(p, q + 1))
        s_hist = x[hist_lo:w.start]
        best = None
        for te, ratio, ta in cands:
            tp = ratio * te
            try:
                u = _window_excitation(fs, lens, tp, te, ta, 1.0,
                                       cache=cycle_cache)
                fit_model, diag = fit_armax(Waveform(s_win, fs),
                                            Waveform(u, fs), p, q)
                # previous-period excitation ~ cyclic continuation
                cyc = _window_excitation(fs, (lens[0],), tp, te, ta, 1.0,
                                         cache=cycle_cache)
                nh = s_hist.size
                if cyc.size >= nh:
                    u_hist = cyc[cyc.size - nh:]
                else:
                    u_hist = np.concatenate([np.zeros(nh - cyc.size), cyc])
                zi = _initial_state(fit_model, s_hist, u_hist)
                resyn = scipy.signal.lfilter(fit_model.b, fit_model.a, u, zi=zi)[0]
                mse = float(np.mean((resyn - s_win) ** 2))
            except GlotfitError:
                continue
            if not math.isfinite(mse):
                continue
            if best is None or mse < best[0]:
                best = (mse, te, ratio, ta, fit_model, diag)
        if best is None:
            skipped.append({"center_start": w.center_start,
                            "reason": "no_candidate_fit"})
            continue
        mse, te, ratio, ta, fit_model, diag = best
        # split source/filter amplitude at the b0=1 filter convention
        ee_hat = abs(float(fit_model.b[0])) if fit_model.b.size else 1.0
        accepted.append(WindowEstimate(
            center_idx=i,
            start=w.start, end=w.start + span,
            center_start=w.center_start, center_end=w.center_end,
            norm_gain=w.norm_gain,
            raw=np.array([ratio * te, te, ta, ee_hat]),
            lf=LFParams(t0_s=lens[1] / fs, tp=ratio * te, te=te, ta=ta,
                        ee=max(ee_hat, 1e-12)),
            model=fit_model, res=resonances(fit_model),
            residual_power=diag.residual_power,
            window_mse=mse,
        ))
    if not accepted:
        raise EstimationFailed(f"all {len(windows)} windows failed")
    result = EstimationResult(windows=accepted, gcis=gcis, fs_hz=fs,
                              frontend="sw", elapsed_s=0.0, skipped=skipped)
    result.resynth = resynthesize(result)
    result.elapsed_s = time.perf_counter() - t_start
    return result


def aer(estimates, truths) -> float:
    """Mean absolute relative error, in percent."""
    est = np.asarray(estimates, dtype=np.float64)
    tru = np.asarray(truths, dtype=np.float64)
    if est.shape != tru.shape or est.ndim != 1:
        raise InvalidParams(f"shape mismatch {est.shape} vs {tru.shape}")
    if est.size == 0:
        raise InvalidParams("empty error list")
    if np.any(tru == 0.0):
        raise ZeroTruth("ground truth contains zeros; relative error undefined")
    return float(np.mean(np.abs(est - tru) / np.abs(tru)) * 100.0)


def mse_pair(a: Waveform, b: Waveform, max_lag: int = 0) -> float:
    """Mean squared difference of energy-normalized signals at best lag.

    Both signals are scaled to unit RMS; b is slid within +/-max_lag and
    the minimum mean squared difference over the overlap is returned.
    """
    xa = a.samples
    xb = b.samples
    if abs(xa.size - xb.size) > max_lag:
        raise LengthMismatch(
            f"lengths {xa.size} vs {xb.size} differ beyond +/-{max_lag}")
    if xa.size == 0 or xb.size == 0:
        raise InvalidParams("empty signal")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(xb))):
        raise DegenerateSignal("non-finite samples in comparison signal")

    def unit(x):
        m = float(np.max(np.abs(x)))
        if m == 0.0:
            return x
        y = x / m
        r = math.sqrt(float(np.mean(y * y)))
        return y / r if r > 0 else y

    xa = unit(xa)
    xb = unit(xb)
    best = math.inf
    for lag in range(-max_lag, max_lag + 1):
        lo_a = max(0, lag)
        lo_b = max(0, -lag)
        n = min(xa.size - lo_a, xb.size - lo_b)
        if n <= 0:
            continue
        d = xa[lo_a:lo_a + n] - xb[lo_b:lo_b + n]
        val = float(np.mean(d * d))
        if val < best:
            best = val
    if not math.isfinite(best):
        raise LengthMismatch("no overlap at any allowed lag")
    return best


def match_resonances(est: ResonanceSet, truth: ResonanceSet, n_formants: int = 3,
                     n_antiformants: int = None):
    """Pair estimated resonances to truth by nearest frequency.

    Greedy over truth in ascending order, one estimate used at most
    once. Returns (formant_pairs, antiformant_pairs) of
    (est_freq, truth_freq); a truth entry with no remaining estimate is
    omitted (callers count pairs to detect misses).
    """

    def pair_up(est_pairs, truth_pairs, count):
        take = truth_pairs if count is None else truth_pairs[:count]
        avail = [f for f, _ in est_pairs]
        out = []
        for tf, _ in take:
            if not avail:
                break
            j = min(range(len(avail)), key=lambda k: abs(avail[k] - tf))
            out.append((avail.pop(j), tf))
        return out

    return (pair_up(est.formants, truth.formants, n_formants),
            pair_up(est.antiformants, truth.antiformants, n_antiformants))


class ErrorAccumulator:
    """Collects (estimate, truth) pairs per named quantity; reports AER."""

    def __init__(self):
        self.pairs = {}
        self.misses = {}

    def add(self, name: str, est: float, truth: float):
        self.pairs.setdefault(name, []).append((float(est), float(truth)))

    def miss(self, name: str):
        self.misses[name] = self.misses.get(name, 0) + 1

    def add_result(self, result: EstimationResult, truth_lf,
                   truth_res: ResonanceSet, ee_truth: float = None):
        """Fold one utterance's windows against its ground truth.

        truth_lf carries T0-fraction parameters (LFParams or LFLabel);
        ee_truth overrides the amplitude truth (e.g. stored-domain scale).
        """
        ee_t = truth_lf.ee if ee_truth is None else ee_truth
        for w in result.windows:
            self.add("tp", w.lf.tp, truth_lf.tp)
            self.add("te", w.lf.te, truth_lf.te)
            self.add("ta", w.lf.ta, truth_lf.ta)
            self.add("ee", w.lf.ee, ee_t)
            fp, ap = match_resonances(w.res, truth_res)
            for k, (ef, tf) in enumerate(fp, start=1):
                self.add(f"F{k}", ef, tf)
            for k in range(len(fp) + 1, min(3, len(truth_res.formants)) + 1):
                self.miss(f"F{k}")
            for k, (ef, tf) in enumerate(ap, start=1):
                self.add(f"A{k}", ef, tf)
            for k in range(len(ap) + 1, len(truth_res.antiformants) + 1):
                self.miss(f"A{k}")

    def aer(self) -> dict:
        out = {}
        for name, pairs in sorted(self.pairs.items()):
            est, tru = zip(*pairs)
            out[name] = aer(est, tru)
        return out

    def counts(self) -> dict:
        return {name: len(pairs) for name, pairs in sorted(self.pairs.items())}
