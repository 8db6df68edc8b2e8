"""Synthetic source-filter corpora with exact ground truth.

Each utterance is one LF excitation (constant F0, whole number of
periods) pushed through a fixed vowel or nasal resonance filter. Ground
truth is exact by construction: the LF parameters used, the resonance
table, cycle boundaries at every multiple of the period length, and the
excitation itself as the glottal source derivative.

Two corpus layouts share the machinery: a single mid-range LF combination
per (syllable, F0) cell, or many seeded-random combinations per cell.
Every random draw derives from a spawn of (seed, syllable index, F0
index, combo index), so any utterance can be regenerated in isolation.

On disk: one PCM16 WAV per utterance (peak-scaled, factor recorded), an
optional companion WAV for the excitation, and a JSONL manifest whose
first line is a header record.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, InvalidParams
from .frontend import GciTrack
from .lf import LFParams, generate_periodic
from .nn import LFLabel
from .tract import ResonanceSet, arma_filter, resonance_to_model
from .waveform import Waveform
from .wavio import read_wav, write_wav

__all__ = [
    "TABLE2",
    "VOWELS",
    "CONSONANTS",
    "SyllableSpec",
    "CorpusSpec",
    "GroundTruth",
    "syllable_spec",
    "draw_lf",
    "fixed_lf",
    "synth_utterance",
    "build_corpus",
    "write_corpus",
    "load_manifest",
    "truth_from_record",
    "load_external",
]

MANIFEST_VERSION = 1
WAV_PEAK = 0.97

# formant/antiformant targets (Hz, bandwidth Hz) per syllable
TABLE2 = {
    "a": {"formants": ((750, 90), (1187, 110), (2595, 170), (3781, 250), (4200, 300)),
          "antiformants": ()},
    "i": {"formants": ((281, 90), (2281, 110), (3187, 170), (3781, 250), (4200, 300)),
          "antiformants": ()},
    "u": {"formants": ((312, 90), (1219, 110), (2469, 170), (3406, 250), (4200, 300)),
          "antiformants": ()},
    "e": {"formants": ((469, 90), (2031, 110), (2687, 170), (3375, 250), (4200, 300)),
          "antiformants": ()},
    "o": {"formants": ((468, 90), (781, 110), (2656, 170), (3281, 250), (4200, 300)),
          "antiformants": ()},
    "m": {"formants": ((220, 60), (1050, 100), (2380, 120), (4100, 180)),
          "antiformants": ((1600, 70), (3320, 130))},
    "nasal_eps": {"formants": ((690, 70), (1640, 100), (1940, 110),
                               (2760, 130), (3500, 160), (4500, 200)),
                  "antiformants": ((2260, 250),)},
}

VOWELS = ("a", "i", "u", "e", "o")
CONSONANTS = ("m", "nasal_eps")
SYLLABLES = VOWELS + CONSONANTS


@dataclass(frozen=True)
class SyllableSpec:
    name: str
    resonances: ResonanceSet

    def __post_init__(self):
        if self.name not in SYLLABLES:
            raise InvalidParams(f"unknown syllable {self.name!r}")
        n_anti = len(self.resonances.antiformants)
        want = {"m": 2, "nasal_eps": 1}.get(self.name, 0)
        if n_anti != want:
            raise InvalidParams(
                f"{self.name!r} must carry {want} antiformants, got {n_anti}")


def syllable_spec(name: str) -> SyllableSpec:
    entry = TABLE2[name] if name in TABLE2 else None
    if entry is None:
        raise InvalidParams(f"unknown syllable {name!r}")
    return SyllableSpec(name=name, resonances=ResonanceSet(
        formants=entry["formants"], antiformants=entry["antiformants"]))


@dataclass(frozen=True)
class CorpusSpec:
    fs_hz: float = 16000.0
    duration_s: float = 1.0
    f0_min: float = 80.0
    f0_max: float = 300.0
    n_f0: int = 45
    te_range: tuple = (0.3, 0.9)
    ratio_range: tuple = (0.65, 0.8)   # tp/te
    ta_range: tuple = (0.03, 0.08)
    seed: int = 0

    def __post_init__(self):
        if self.fs_hz <= 0 or self.duration_s <= 0:
            raise InvalidParams("fs_hz and duration_s must be positive")
        if not (0 < self.f0_min < self.f0_max):
            raise InvalidParams("need 0 < f0_min < f0_max")
        if self.n_f0 < 2:
            raise InvalidParams("need at least two F0 grid points")

    @property
    def f0_grid(self) -> np.ndarray:
        return np.linspace(self.f0_min, self.f0_max, self.n_f0)


@dataclass
class GroundTruth:
    """Exact synthesis-side labels for one utterance."""

    lf: LFParams
    resonances: ResonanceSet
    gcis: GciTrack
    gsd: Waveform
    scale: float = 1.0


def draw_lf(spec: CorpusSpec, syll_idx: int, f0_idx: int, combo_idx: int) -> LFLabel:
    """One uniform LF draw for a corpus cell, reproducible in isolation."""
    ss = np.random.SeedSequence([spec.seed, syll_idx, f0_idx, combo_idx])
    rng = np.random.default_rng(ss)
    for _ in range(100):
        te = rng.uniform(*spec.te_range)
        ratio = rng.uniform(*spec.ratio_range)
        ta = rng.uniform(*spec.ta_range)
        tp = ratio * te
        if 0.0 < tp < te and te + ta < 1.0:
            return LFLabel(tp=tp, te=te, ta=ta, ee=1.0)
    raise InvalidParams("could not draw a valid LF combination (bad ranges)")


def fixed_lf(spec: CorpusSpec) -> LFLabel:
    """The midpoint combination used when each cell gets a single entry."""
    te = 0.5 * (spec.te_range[0] + spec.te_range[1])
    ratio = 0.5 * (spec.ratio_range[0] + spec.ratio_range[1])
    ta = 0.5 * (spec.ta_range[0] + spec.ta_range[1])
    return LFLabel(tp=ratio * te, te=te, ta=ta, ee=1.0)


def _period_samples(f0: float, fs: float) -> int:
    return int(math.floor(fs / f0 + 0.5))


def synth_utterance(syll: SyllableSpec, f0: float, lf, spec: CorpusSpec):
    """Generate one utterance; returns (speech Waveform, GroundTruth).

    lf gives T0-normalized parameters (LFLabel or mapping with keys
    tp, te, ta, ee); the period comes from f0 and the sample rate.
    """
    if isinstance(lf, LFLabel):
        tp, te, ta, ee = lf.tp, lf.te, lf.ta, lf.ee
    else:
        tp, te, ta, ee = (lf[k] for k in ("tp", "te", "ta", "ee"))
    fs = spec.fs_hz
    n0 = _period_samples(f0, fs)
    n_per = int(math.floor(f0 * spec.duration_s + 0.5))
    if n_per < 1:
        raise InvalidParams(f"duration {spec.duration_s}s holds no period of {f0} Hz")
    params = LFParams(t0_s=n0 / fs, tp=tp, te=te, ta=ta, ee=ee)
    excitation = generate_periodic(params, fs, n_per)
    model = resonance_to_model(syll.resonances, fs)
    speech = arma_filter(excitation, model)
    gcis = GciTrack(instants=np.arange(n_per + 1, dtype=np.int64) * n0,
                    source="ground_truth")
    truth = GroundTruth(lf=params, resonances=syll.resonances,
                        gcis=gcis, gsd=excitation)
    return speech, truth


def _f0_indices(n_total: int, n_take: int) -> np.ndarray:
    """Evenly spaced grid indices that always keep both endpoints."""
    n_take = max(2, min(n_total, n_take))
    return np.unique(np.round(np.linspace(0, n_total - 1, n_take)).astype(int))


def build_corpus(spec: CorpusSpec, which: str,
                 n_f0: int = None, n_combos: int = None) -> list:
    """Deterministic utterance plan: one manifest record per utterance.

    which selects the layout: "dataset1" fixes one LF combination per
    (syllable, F0) cell, "dataset2" draws per-cell random combinations
    (300 by default). n_f0/n_combos subsample for desk-scale runs; the F0
    subgrid always keeps 80 and 300 Hz.
    """
    if which not in ("dataset1", "dataset2"):
        raise InvalidParams(f"which must be 'dataset1' or 'dataset2', got {which!r}")
    full_grid = spec.f0_grid
    idxs = _f0_indices(spec.n_f0, spec.n_f0 if n_f0 is None else n_f0)
    if which == "dataset1":
        combos = 1
    else:
        combos = 300 if n_combos is None else int(n_combos)
        if combos < 1:
            raise InvalidParams("n_combos must be >= 1")
    records = []
    for si, name in enumerate(SYLLABLES):
        entry = TABLE2[name]
        for fi in idxs:
            f0 = float(full_grid[fi])
            n0 = _period_samples(f0, spec.fs_hz)
            n_per = int(math.floor(f0 * spec.duration_s + 0.5))
            for ci in range(combos):
                if which == "dataset1":
                    lab = fixed_lf(spec)
                else:
                    lab = draw_lf(spec, si, int(fi), ci)
                uid = f"{name}_f{int(fi):02d}_c{ci:04d}"
                records.append({
                    "id": uid,
                    "syllable": name,
                    "f0": f0,
                    "n0": n0,
                    "n_periods": n_per,
                    "lf": {"tp": lab.tp, "te": lab.te, "ta": lab.ta, "ee": lab.ee},
                    "formants": [list(p) for p in entry["formants"]],
                    "antiformants": [list(p) for p in entry["antiformants"]],
                    "wav": f"wav/{uid}.wav",
                    "gsd": f"gsd/{uid}.wav",
                    "scale": None,
                    "gsd_scale": None,
                })
    return records


def write_corpus(records: list, out_dir, spec: CorpusSpec,
                 write_gsd: bool = True) -> dict:
    """Synthesize every planned utterance and write WAVs + manifest.

    Returns a summary dict with per-class utterance counts. Peak scaling
    factors are recorded in each manifest record, so amplitudes remain
    recoverable in synthesis units.
    """
    os.makedirs(os.path.join(out_dir, "wav"), exist_ok=True)
    if write_gsd:
        os.makedirs(os.path.join(out_dir, "gsd"), exist_ok=True)
    counts = {"vowel": 0, "consonant": 0}
    written = []
    for rec in records:
        rec = dict(rec)
        syll = syllable_spec(rec["syllable"])
        speech, truth = synth_utterance(syll, rec["f0"], rec["lf"], spec)
        peak = float(np.max(np.abs(speech.samples)))
        scale = WAV_PEAK / peak if peak > 0 else 1.0
        rec["scale"] = scale
        write_wav(os.path.join(out_dir, rec["wav"]),
                  Waveform(speech.samples * scale, speech.fs_hz))
        if write_gsd:
            gpeak = float(np.max(np.abs(truth.gsd.samples)))
            gscale = WAV_PEAK / gpeak if gpeak > 0 else 1.0
            rec["gsd_scale"] = gscale
            write_wav(os.path.join(out_dir, rec["gsd"]),
                      Waveform(truth.gsd.samples * gscale, truth.gsd.fs_hz))
        else:
            rec["gsd"] = None
            rec["gsd_scale"] = None
        kind = "vowel" if rec["syllable"] in VOWELS else "consonant"
        counts[kind] += 1
        written.append(rec)
    header = {
        "manifest_version": MANIFEST_VERSION,
        "fs_hz": spec.fs_hz,
        "duration_s": spec.duration_s,
        "seed": spec.seed,
        "counts": counts,
        "n_records": len(written),
    }
    path = os.path.join(out_dir, "manifest.jsonl")
    with open(path, "w") as f:
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in written:
            f.write(json.dumps(rec, sort_keys=True) + "\n")
    return {"manifest": path, **counts, "total": len(written)}


def load_manifest(path):
    """Read a corpus manifest; returns (header, records)."""
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines:
        raise FormatError("empty manifest", offset=0)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad manifest header: {exc}", offset=0) from exc
    if header.get("manifest_version") != MANIFEST_VERSION:
        raise FormatError(
            f"unsupported manifest version {header.get('manifest_version')}",
            offset=0)
    records = []
    offset = len(lines[0]) + 1
    for ln in lines[1:]:
        if not ln.strip():
            offset += len(ln) + 1
            continue
        try:
            records.append(json.loads(ln))
        except json.JSONDecodeError as exc:
            raise FormatError(f"bad manifest record: {exc}", offset=offset) from exc
        offset += len(ln) + 1
    if len(records) != header.get("n_records", len(records)):
        raise FormatError(
            f"header claims {header['n_records']} records, found {len(records)}",
            offset=0)
    return header, records


def truth_from_record(rec: dict, spec: CorpusSpec) -> GroundTruth:
    """Rebuild exact ground truth from one manifest record."""
    syll = syllable_spec(rec["syllable"])
    _, truth = synth_utterance(syll, rec["f0"], rec["lf"], spec)
    if rec.get("scale"):
        truth.scale = float(rec["scale"])
    return truth


def load_external(wav_path, truth_path=None):
    """Load a speech WAV plus whatever truth channels sit next to it.

    truth_path may point to a JSON file with optional keys "gcis" (sample
    indices), "lf" ({tp, te, ta, ee} fractions), "formants" /
    "antiformants" (pairs), and "gsd" (path to a companion WAV, relative
    to the truth file). Missing file or keys leave channels as None.
    """
    speech = read_wav(wav_path)
    truth = {"lf": None, "resonances": None, "gcis": None, "gsd": None}
    if truth_path is None or not os.path.exists(truth_path):
        return speech, truth
    with open(truth_path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise FormatError(f"bad truth file: {exc}", offset=int(exc.pos)) from exc
    if "gcis" in doc:
        truth["gcis"] = GciTrack(
            instants=np.asarray(doc["gcis"], dtype=np.int64),
            source="ground_truth")
    if "lf" in doc:
        truth["lf"] = {k: float(doc["lf"][k]) for k in ("tp", "te", "ta", "ee")}
    if "formants" in doc:
        truth["resonances"] = ResonanceSet(
            formants=tuple(tuple(p) for p in doc["formants"]),
            antiformants=tuple(tuple(p) for p in doc.get("antiformants", ())))
    if "gsd" in doc:
        gpath = os.path.join(os.path.dirname(str(truth_path)), doc["gsd"])
        truth["gsd"] = read_wav(gpath)
    return speech, truth
