"""Command-line drivers: synthesize corpora, train the regressor, run
estimation, and write error reports.

Artifacts are plain files: WAV audio, a JSONL corpus manifest, CSV loss
curves and reports, and the binary model checkpoint. Wall-clock numbers
always go to a separate timing file (and stdout) so that every other
artifact is byte-identical across reruns with the same seed and inputs.

Exit codes: 0 success, 1 usage, 2 data error (unreadable or inconsistent
inputs), 3 numerical failure (training diverged or every utterance
failed to estimate).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import nn
from .corpus import (CorpusSpec, build_corpus, load_external, load_manifest,
                     truth_from_record, write_corpus)
from .errors import (Diverged, EstimationFailed, FormatError, GlotfitError,
                     InvalidParams, LengthMismatch, ZeroTruth)
from .frontend import detect_gci
from .pipeline import (ErrorAccumulator, GridSpec, estimate, excitation_track,
                       grid_abs_baseline, mse_pair, windows_and_labels)
from .waveform import Waveform
from .wavio import read_wav, write_wav

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

WAV_PEAK = 0.97


@dataclass
class RunConfig:
    """Shared defaults, overridable per flag or via --config JSON."""

    dataset: int = 2
    scale: float = 1.0
    seed: int = 0
    frontend: str = "sw"
    orders: tuple = (14, 8)
    method: str = "dnn"
    gci: str = "truth"
    jobs: int = 1
    lr: float = 0.01
    batch: int = 64
    epochs: int = 30
    split: float = 0.9
    grid: tuple = (8, 8, 4)

    def __post_init__(self):
        if self.dataset not in (1, 2):
            raise InvalidParams(f"dataset must be 1 or 2, got {self.dataset}")
        if self.frontend not in ("sw", "gsd"):
            raise InvalidParams(f"frontend must be sw or gsd, got {self.frontend}")
        if self.method not in ("dnn", "grid"):
            raise InvalidParams(f"method must be dnn or grid, got {self.method}")
        if self.gci not in ("detect", "truth"):
            raise InvalidParams(f"gci must be detect or truth, got {self.gci}")
        if not 0.0 < self.split <= 1.0:
            raise InvalidParams(f"split must be in (0, 1], got {self.split}")
        self.orders = tuple(int(v) for v in self.orders)
        self.grid = tuple(int(v) for v in self.grid)


def render_config(cfg: RunConfig) -> str:
    d = asdict(cfg)
    d["orders"] = list(d["orders"])
    d["grid"] = list(d["grid"])
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def parse_config(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad config: {exc}", offset=int(exc.pos)) from exc
    known = set(RunConfig.__dataclass_fields__)
    extra = set(doc) - known
    if extra:
        raise FormatError(f"unknown config keys {sorted(extra)}", offset=0)
    return RunConfig(**doc)


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors on exit code 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _pair_of_ints(what):
    def parse(text):
        try:
            vals = tuple(int(t) for t in text.split(","))
        except ValueError:
            vals = ()
        if len(vals) != what[0]:
            raise argparse.ArgumentTypeError(
                f"expected {what[1]}, got {text!r}")
        return vals
    return parse


_orders_arg = _pair_of_ints((2, "'p,q'"))
_grid_arg = _pair_of_ints((3, "'n_te,n_ratio,n_ta'"))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _scaled_counts(dataset: int, scale: float, spec: CorpusSpec):
    """Map a corpus scale factor to (n_f0, n_combos) subsample counts."""
    if scale >= 1.0:
        return None, None
    if dataset == 1:
        return max(2, _round_half_up(spec.n_f0 * scale)), None
    ax = math.sqrt(scale)
    return (max(2, _round_half_up(spec.n_f0 * ax)),
            max(1, _round_half_up(300 * ax)))


def _spec_from_header(header: dict) -> CorpusSpec:
    return CorpusSpec(fs_hz=float(header.get("fs_hz", 16000.0)),
                      duration_s=float(header.get("duration_s", 1.0)),
                      seed=int(header.get("seed", 0)))


def _split_records(records, split: float, seed: int):
    """Deterministic train/held-out partition by utterance."""
    n = len(records)
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(split * n))
    train = [records[i] for i in sorted(perm[:n_train])]
    held = [records[i] for i in sorted(perm[n_train:])]
    return train, held


def _parallel_map(fn, tasks, jobs: int):
    """Order-preserving map, optionally over a process pool."""
    tasks = list(tasks)
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def _write_scaled_wav(path, wave: Waveform):
    """Peak-protect before writing; returns the scale factor used."""
    peak = float(np.max(np.abs(wave.samples))) if wave.samples.size else 0.0
    scale = WAV_PEAK / peak if peak > WAV_PEAK else 1.0
    write_wav(path, Waveform(wave.samples * scale, wave.fs_hz))
    return scale


# ---------------------------------------------------------------- synth

def cmd_synth(args) -> int:
    spec = CorpusSpec(seed=args.seed)
    n_f0, n_combos = _scaled_counts(args.dataset, args.scale, spec)
    if args.n_f0 is not None:
        n_f0 = args.n_f0
    if args.n_combos is not None:
        n_combos = args.n_combos
    records = build_corpus(spec, f"dataset{args.dataset}",
                           n_f0=n_f0, n_combos=n_combos)
    summary = write_corpus(records, args.out, spec,
                           write_gsd=not args.no_gsd)
    print(f"wrote {summary['total']} utterances "
          f"({summary['vowel']} vowel, {summary['consonant']} consonant) "
          f"-> {summary['manifest']}")
    return EXIT_OK


# ---------------------------------------------------------------- train

def _pairs_task(task):
    rec, root, spec_fields, kind = task
    spec = CorpusSpec(**spec_fields)
    speech = read_wav(os.path.join(root, rec["wav"]))
    truth = truth_from_record(rec, spec)
    pairs, _ = windows_and_labels(speech, truth, kind=kind)
    return [(w.values, label) for w, label in pairs]


def cmd_train(args) -> int:
    manifest = os.path.join(args.corpus, "manifest.jsonl")
    header, records = load_manifest(manifest)
    spec = _spec_from_header(header)
    train_recs, held = _split_records(records, args.split, args.seed)
    if not train_recs:
        raise FormatError("training split is empty", offset=0)
    tasks = [(rec, args.corpus, asdict(spec), args.frontend)
             for rec in train_recs]
    t0 = time.perf_counter()
    per_utt = _parallel_map(_pairs_task, tasks, args.jobs)
    pairs = [p for chunk in per_utt for p in chunk]
    t_feat = time.perf_counter() - t0
    cfg = nn.TrainConfig(lr=args.lr, batch=args.batch, epochs=args.epochs,
                         seed=args.seed)
    t0 = time.perf_counter()
    model, curve = nn.train(pairs, cfg)
    t_train = time.perf_counter() - t0
    meta = {
        "frontend": args.frontend,
        "split": args.split,
        "split_seed": args.seed,
        "n_records": len(records),
        "n_train_utterances": len(train_recs),
        "n_held_utterances": len(held),
        "n_pairs": len(pairs),
        "corpus_seed": header.get("seed"),
    }
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    nn.save_model(model, args.out, cfg, meta=meta)
    curve_path = args.curve or os.path.splitext(args.out)[0] + "_loss.csv"
    with open(curve_path, "w") as f:
        f.write("epoch,loss\n")
        for i, v in enumerate(curve, start=1):
            f.write(f"{i},{v!r}\n")
    print(f"trained on {len(pairs)} windows from {len(train_recs)} utterances"
          f" -> {args.out}")
    print(f"final epoch loss {curve[-1]:.6g}; curve -> {curve_path}")
    print(f"timing: features {t_feat:.1f} s, training {t_train:.1f} s")
    return EXIT_OK


# ------------------------------------------------------------- estimate

def _fmt(x):
    return "" if x is None else repr(float(x))


def _window_rows(uid, result):
    rows = []
    for w in result.windows:
        f = [fr for fr, _ in w.res.formants][:3]
        a = [fr for fr, _ in w.res.antiformants][:2]
        f += [None] * (3 - len(f))
        a += [None] * (2 - len(a))
        rows.append([uid, w.center_idx,
                     w.lf.tp, w.lf.te, w.lf.ta, w.lf.ee,
                     *f, *a, w.residual_power])
    return rows


def _oracle_predictor(truth):
    ee_sig = truth.lf.ee * truth.scale

    def predict(window):
        return np.array([truth.lf.tp, truth.lf.te, truth.lf.ta,
                         ee_sig / window.norm_gain])

    return predict


def _mse_metrics(result, speech, gsd):
    """(mse1 vs true excitation, mse2 vs speech), where truth allows."""
    g = result.gcis.instants
    t0_mean = int(np.mean(np.diff(g))) if g.size > 1 else 0
    lag = max(1, t0_mean // 2)
    mse1 = None
    if gsd is not None:
        est_u = excitation_track(result).samples
        n = min(est_u.size, gsd.samples.size)
        if n > 0:
            mse1 = mse_pair(Waveform(est_u[:n], result.fs_hz),
                            Waveform(gsd.samples[:n], result.fs_hz),
                            max_lag=lag)
    syn = result.resynth.samples
    n = min(syn.size, speech.samples.size)
    mse2 = mse_pair(Waveform(syn[:n], result.fs_hz),
                    Waveform(speech.samples[:n], result.fs_hz),
                    max_lag=lag)
    return mse1, mse2


def _run_record(task):
    """Estimate one corpus utterance; returns a plain result payload."""
    (rec, root, spec_fields, model_blob, method, frontend, gci, orders,
     grid_shape, want_mse, want_resynth, oracle) = task
    out = {"id": rec["id"], "ok": False, "error": None}
    try:
        spec = CorpusSpec(**spec_fields)
        speech = read_wav(os.path.join(root, rec["wav"]))
        truth = truth_from_record(rec, spec)
        gci_track = truth.gcis if gci == "truth" else detect_gci(speech)
        if method == "grid":
            result = grid_abs_baseline(speech, gci_track,
                                       GridSpec(*grid_shape), orders)
        else:
            model = _oracle_predictor(truth) if oracle else model_blob
            result = estimate(speech, model, frontend=frontend,
                              orders=orders, gci_override=gci_track)
        acc = ErrorAccumulator()
        acc.add_result(result, truth.lf, truth.resonances,
                       ee_truth=truth.lf.ee * truth.scale)
        gsd = None
        if want_mse and rec.get("gsd"):
            gsd = read_wav(os.path.join(root, rec["gsd"]))
        try:
            mse1, mse2 = _mse_metrics(result, speech, gsd)
        except GlotfitError:
            # an unstable resynthesis voids the MSEs, not the parameters
            mse1, mse2 = None, None
        out.update(ok=True, rows=_window_rows(rec["id"], result),
                   pairs=acc.pairs, misses=acc.misses,
                   n_windows=len(result.windows),
                   n_skipped=len(result.skipped),
                   elapsed=result.elapsed_s, mse1=mse1, mse2=mse2)
        if want_resynth:
            out["resynth"] = result.resynth.samples
            out["fs_hz"] = result.fs_hz
    except (GlotfitError, OSError) as exc:
        out["error"] = f"{type(exc).__name__}: {exc}"
    return out


PARAM_COLS = ["utterance", "center_period", "tp", "te", "ta", "ee",
              "F1", "F2", "F3", "A1", "A2", "residual_power"]


def _write_params_csv(path, rows):
    with open(path, "w") as f:
        f.write(",".join(PARAM_COLS) + "\n")
        for row in rows:
            uid, idx, *vals = row
            f.write(",".join([uid, str(idx)] + [_fmt(v) for v in vals]) + "\n")


def _write_timing_csv(path, entries):
    with open(path, "w") as f:
        f.write("utterance,windows,seconds\n")
        for uid, n, sec in entries:
            f.write(f"{uid},{n},{sec:.6f}\n")


AER_ORDER = ["tp", "te", "ta", "ee", "F1", "F2", "F3", "A1", "A2"]


def _render_report(label, acc, mse1s, mse2s, n_utts, n_failed):
    errs = acc.aer()
    counts = acc.counts()
    lines = []
    lines.append(f"utterances evaluated: {n_utts}   failed: {n_failed}")
    lines.append("")
    cols = [c for c in AER_ORDER if c in errs]
    head = "AER (%)".ljust(12) + "".join(f"{c:>10}" for c in cols)
    vals = label.ljust(12) + "".join(f"{errs[c]:10.4f}" for c in cols)
    cnts = "windows".ljust(12) + "".join(f"{counts[c]:10d}" for c in cols)
    lines += [head, vals, cnts]
    if acc.misses:
        lines.append("unmatched truth resonances: "
                     + ", ".join(f"{k}={v}" for k, v in sorted(acc.misses.items())))
    if mse1s:
        lines.append(f"MSE1 (excitation) mean: {np.mean(mse1s):.6g} "
                     f"over {len(mse1s)} utterances")
    if mse2s:
        lines.append(f"MSE2 (resynthesis) mean: {np.mean(mse2s):.6g} "
                     f"over {len(mse2s)} utterances")
    return "\n".join(lines) + "\n"


def _write_report_csv(path, label, acc, mse1s, mse2s):
    errs = acc.aer()
    counts = acc.counts()
    with open(path, "w") as f:
        f.write("row,quantity,value\n")
        for c in [c for c in AER_ORDER if c in errs]:
            f.write(f"{label},aer_{c}_pct,{errs[c]!r}\n")
            f.write(f"{label},n_{c},{counts[c]}\n")
        for name, vals in (("mse1", mse1s), ("mse2", mse2s)):
            if vals:
                f.write(f"{label},{name}_mean,{float(np.mean(vals))!r}\n")


def _collect(results, out_dir, label, args, print_report=True):
    """Fold per-utterance payloads into report + CSV artifacts."""
    acc = ErrorAccumulator()
    rows, timing, mse1s, mse2s = [], [], [], []
    failed = []
    for r in results:
        if not r["ok"]:
            failed.append((r["id"], r["error"]))
            continue
        for name, pairs in r["pairs"].items():
            for est, tru in pairs:
                acc.add(name, est, tru)
        for name, cnt in r["misses"].items():
            acc.misses[name] = acc.misses.get(name, 0) + cnt
        rows.extend(r["rows"])
        timing.append((r["id"], r["n_windows"], r["elapsed"]))
        if r.get("mse1") is not None:
            mse1s.append(r["mse1"])
        if r.get("mse2") is not None:
            mse2s.append(r["mse2"])
        if "resynth" in r:
            path = os.path.join(out_dir, "resynth", r["id"] + ".wav")
            os.makedirs(os.path.dirname(path), exist_ok=True)
            _write_scaled_wav(path, Waveform(r["resynth"], r["fs_hz"]))
    for uid, err in failed:
        print(f"[skip] {uid}: {err}", file=sys.stderr)
    if not acc.pairs:
        raise EstimationFailed(
            f"all {len(results)} utterances failed to estimate")
    os.makedirs(out_dir, exist_ok=True)
    _write_params_csv(os.path.join(out_dir, "params.csv"), rows)
    _write_timing_csv(os.path.join(out_dir, "timing.csv"), timing)
    report = _render_report(label, acc, mse1s, mse2s,
                            len(results) - len(failed), len(failed))
    with open(os.path.join(out_dir, "report.txt"), "w") as f:
        f.write(report)
    _write_report_csv(os.path.join(out_dir, "report.csv"), label, acc,
                      mse1s, mse2s)
    if print_report:
        print(report, end="")
        total = sum(sec for _, _, sec in timing)
        print(f"timing: {len(timing)} utterances, "
              f"{sum(n for _, n, _ in timing)} windows, {total:.2f} s total, "
              f"{total / max(1, len(timing)):.3f} s/utterance")
    return acc


def _load_model_for(args):
    if args.method == "grid" or args.oracle_from_truth:
        return None, args.frontend
    if not args.model:
        raise InvalidParams("--model is required for --method dnn "
                            "(or pass --oracle-from-truth)")
    model, _, meta = nn.load_model(args.model)
    frontend = args.frontend or (meta or {}).get("frontend") or "sw"
    return model, frontend


def _record_tasks(records, root, spec, model, args, frontend):
    return [(rec, root, asdict(spec), model, args.method, frontend,
             args.gci, args.orders, args.grid, not args.no_mse,
             args.resynth, args.oracle_from_truth)
            for rec in records]


def cmd_estimate(args) -> int:
    label = f"{'oracle' if args.oracle_from_truth else args.method}-" \
            f"{args.frontend or 'sw'}"
    if args.corpus:
        manifest = os.path.join(args.corpus, "manifest.jsonl")
        header, records = load_manifest(manifest)
        if args.ids:
            want = set(args.ids)
            records = [r for r in records if r["id"] in want]
            missing = want - {r["id"] for r in records}
            if missing:
                raise FormatError(f"ids not in manifest: {sorted(missing)}",
                                  offset=0)
        if not records:
            raise FormatError("no utterances selected", offset=0)
        spec = _spec_from_header(header)
        model, frontend = _load_model_for(args)
        tasks = _record_tasks(records, args.corpus, spec, model, args,
                              frontend)
        results = _parallel_map(_run_record, tasks, args.jobs)
        _collect(results, args.out, f"{label}", args)
        return EXIT_OK
    return _estimate_external(args)


def _estimate_external(args) -> int:
    """Single WAV (optionally with a truth JSON) through the estimator."""
    speech, truth = load_external(args.wav, args.truth)
    model, frontend = _load_model_for(args)
    gci_track = None
    if args.gci == "truth":
        if truth["gcis"] is None:
            raise InvalidParams("--gci truth needs a truth file with gcis")
        gci_track = truth["gcis"]
    if args.method == "grid":
        track = gci_track if gci_track is not None else detect_gci(speech)
        result = grid_abs_baseline(speech, track, GridSpec(*args.grid),
                                   args.orders)
    else:
        if args.oracle_from_truth:
            raise InvalidParams("--oracle-from-truth needs --corpus input")
        result = estimate(speech, model, frontend=frontend,
                          orders=args.orders, gci_override=gci_track)
    os.makedirs(args.out, exist_ok=True)
    uid = os.path.splitext(os.path.basename(args.wav))[0]
    _write_params_csv(os.path.join(args.out, "params.csv"),
                      _window_rows(uid, result))
    _write_timing_csv(os.path.join(args.out, "timing.csv"),
                      [(uid, len(result.windows), result.elapsed_s)])
    mse1, mse2 = _mse_metrics(result, speech, truth.get("gsd"))
    lines = [f"windows accepted: {len(result.windows)} "
             f"skipped: {len(result.skipped)}"]
    if mse1 is not None:
        lines.append(f"MSE1 (excitation): {mse1:.6g}")
    lines.append(f"MSE2 (resynthesis): {mse2:.6g}")
    with open(os.path.join(args.out, "report.txt"), "w") as f:
        f.write("\n".join(lines) + "\n")
    if args.resynth:
        path = os.path.join(args.out, "resynth", uid + ".wav")
        os.makedirs(os.path.dirname(path), exist_ok=True)
        _write_scaled_wav(path, result.resynth)
    print("\n".join(lines))
    print(f"timing: {result.elapsed_s:.2f} s")
    return EXIT_OK


def cmd_eval(args) -> int:
    """Evaluate a model (or the grid baseline) on a corpus split."""
    manifest = os.path.join(args.corpus, "manifest.jsonl")
    header, records = load_manifest(manifest)
    spec = _spec_from_header(header)
    model, frontend = None, args.frontend or "sw"
    meta = None
    if args.method == "dnn" and not args.oracle_from_truth:
        if not args.model:
            raise InvalidParams("--model is required for --method dnn")
        model, _, meta = nn.load_model(args.model)
        frontend = args.frontend or (meta or {}).get("frontend") or "sw"
    if args.all or not (meta and "split" in meta):
        chosen = records
    else:
        if meta.get("n_records") not in (None, len(records)):
            raise FormatError(
                f"checkpoint was trained on a {meta['n_records']}-record "
                f"manifest, this one has {len(records)}", offset=0)
        _, chosen = _split_records(records, meta["split"],
                                   meta["split_seed"])
    if not chosen:
        raise FormatError("evaluation split is empty", offset=0)
    label = f"{'oracle' if args.oracle_from_truth else args.method}-{frontend}"
    tasks = _record_tasks(chosen, args.corpus, spec, model, args, frontend)
    results = _parallel_map(_run_record, tasks, args.jobs)
    _collect(results, args.out, label, args)
    return EXIT_OK


def cmd_resynth(args) -> int:
    """Estimate one WAV and write its resynthesis next to a report line."""
    speech, truth = load_external(args.wav, args.truth)
    model, frontend = _load_model_for(args)
    gci_track = truth["gcis"] if args.gci == "truth" else None
    if args.gci == "truth" and gci_track is None:
        raise InvalidParams("--gci truth needs a truth file with gcis")
    if args.method == "grid":
        track = gci_track if gci_track is not None else detect_gci(speech)
        result = grid_abs_baseline(speech, track, GridSpec(*args.grid),
                                   args.orders)
    else:
        result = estimate(speech, model, frontend=frontend,
                          orders=args.orders, gci_override=gci_track)
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    scale = _write_scaled_wav(args.out, result.resynth)
    print(f"resynthesized {len(result.windows)} windows -> {args.out} "
          f"(written at scale {scale:.4g})")
    return EXIT_OK


# ----------------------------------------------------------------- main

def build_parser(cfg: RunConfig = None) -> argparse.ArgumentParser:
    if cfg is None:
        cfg = RunConfig()
    parser = _Parser(prog="glotfit",
                     description="Glottal source + vocal tract estimation")
    parser.add_argument("--config", metavar="JSON",
                        help="JSON file of RunConfig defaults")
    sub = parser.add_subparsers(dest="cmd")

    def common(p, *names):
        if "frontend" in names:
            p.add_argument("--frontend", choices=("sw", "gsd"), default=None,
                           help="feature front-end (default: checkpoint tag)")
        if "orders" in names:
            p.add_argument("--orders", type=_orders_arg, default=cfg.orders,
                           help="filter orders p,q")
        if "method" in names:
            p.add_argument("--method", choices=("dnn", "grid"),
                           default=cfg.method)
        if "gci" in names:
            p.add_argument("--gci", choices=("detect", "truth"),
                           default=cfg.gci)
        if "jobs" in names:
            p.add_argument("--jobs", type=int, default=cfg.jobs)
        if "grid" in names:
            p.add_argument("--grid", type=_grid_arg, default=cfg.grid,
                           help="baseline lattice shape n_te,n_ratio,n_ta")
        if "estmisc" in names:
            p.add_argument("--model", help="model checkpoint path")
            p.add_argument("--oracle-from-truth", action="store_true",
                           help="inject ground-truth labels instead of a model")
            p.add_argument("--resynth", action="store_true",
                           help="write resynthesized WAVs")
            p.add_argument("--no-mse", action="store_true",
                           help="skip MSE1/MSE2 computation")

    p = sub.add_parser("synth", help="synthesize a corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--dataset", type=int, choices=(1, 2), default=cfg.dataset)
    p.add_argument("--scale", type=float, default=cfg.scale,
                   help="fraction of the full corpus (subsamples the grid)")
    p.add_argument("--n-f0", type=int, default=None,
                   help="override the F0 grid subsample count")
    p.add_argument("--n-combos", type=int, default=None,
                   help="override combinations per cell (dataset 2)")
    p.add_argument("--seed", type=int, default=cfg.seed)
    p.add_argument("--no-gsd", action="store_true",
                   help="skip writing excitation companion WAVs")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the window regressor")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--curve", default=None, help="loss curve CSV path")
    p.add_argument("--frontend", choices=("sw", "gsd"), default=cfg.frontend)
    p.add_argument("--lr", type=float, default=cfg.lr)
    p.add_argument("--batch", type=int, default=cfg.batch)
    p.add_argument("--epochs", type=int, default=cfg.epochs)
    p.add_argument("--split", type=float, default=cfg.split,
                   help="train fraction of utterances; rest is held out")
    p.add_argument("--seed", type=int, default=cfg.seed)
    p.add_argument("--jobs", type=int, default=cfg.jobs)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("estimate", help="run estimation, write parameters")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--corpus", help="corpus directory with manifest.jsonl")
    src.add_argument("--wav", help="single input WAV")
    p.add_argument("--truth", default=None,
                   help="truth JSON next to --wav (gcis, lf, formants, gsd)")
    p.add_argument("--ids", nargs="*", default=None,
                   help="restrict --corpus to these utterance ids")
    p.add_argument("--out", required=True, help="output directory")
    common(p, "frontend", "orders", "method", "gci", "jobs", "grid", "estmisc")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("eval", help="evaluate on a corpus held-out split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--all", action="store_true",
                   help="evaluate every utterance, not just the held-out split")
    common(p, "frontend", "orders", "method", "gci", "jobs", "grid", "estmisc")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("resynth", help="resynthesize one WAV")
    p.add_argument("--wav", required=True)
    p.add_argument("--truth", default=None)
    p.add_argument("--out", required=True, help="output WAV path")
    common(p, "frontend", "orders", "method", "gci", "grid", "estmisc")
    p.set_defaults(func=cmd_resynth)
    return parser


NUMERIC_ERRORS = (Diverged, EstimationFailed)
DATA_ERRORS = (FormatError, InvalidParams, ZeroTruth, LengthMismatch, OSError)


def main(argv=None) -> int:
    pre = _Parser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    try:
        cfg = RunConfig()
        if known.config:
            with open(known.config) as f:
                cfg = parse_config(f.read())
    except DATA_ERRORS as exc:
        print(f"glotfit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    parser = build_parser(cfg)
    args = parser.parse_args(argv)
    if getattr(args, "cmd", None) is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except NUMERIC_ERRORS as exc:
        print(f"glotfit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DATA_ERRORS as exc:
        print(f"glotfit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except GlotfitError as exc:
        print(f"glotfit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
