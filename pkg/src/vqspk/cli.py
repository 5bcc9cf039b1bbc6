"""Command line interface.

Exit codes: 0 success, 1 runtime failure, 2 invalid flags.
"""

import argparse
from dataclasses import asdict
import math
import sys

from . import __version__
from .audio import read_wav
from .errors import ConfigError, VqspkError
from .mfcc import MfccConfig, extract_mfcc, features_to_csv
from .recognizer import (
    SpeakerDb,
    distance_matrix,
    enroll_many,
    identify,
    load_corpus,
    load_db,
    save_db,
    summarize_margins,
)
from .signal import NotchSpec, generate_corpus, notch_filter
from .vq import LbgConfig, train_codebook

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _log(msg):
    print(msg, file=sys.stderr)


def _add_mfcc_flags(p, defaults=True):
    d = MfccConfig() if defaults else None
    sup = argparse.SUPPRESS
    g = p.add_argument_group("feature extraction")
    g.add_argument("--frame-len", type=int, default=d.frame_len if d else sup,
                   help="samples per frame (default 256)")
    g.add_argument("--overlap", type=int, default=d.overlap if d else sup,
                   help="samples shared by consecutive frames (default 100)")
    g.add_argument("--alpha", type=float, default=d.preemphasis_alpha if d else sup,
                   help="pre-emphasis coefficient (default 0.99)")
    g.add_argument("--no-preemphasis", action="store_true", default=False if d else sup,
                   help="skip the pre-emphasis stage")
    g.add_argument("--num-filters", type=int, default=d.num_filters if d else sup)
    g.add_argument("--coeff-lo", type=int, default=d.coeff_lo if d else sup,
                   help="first kept cepstral index, 1-based (default 2)")
    g.add_argument("--coeff-hi", type=int, default=d.coeff_hi if d else sup,
                   help="last kept cepstral index, 1-based (default 13)")
    g.add_argument("--log-floor", type=float, default=d.log_floor if d else sup)


def _add_lbg_flags(p):
    d = LbgConfig()
    g = p.add_argument_group("codebook training")
    g.add_argument("--codebook-size", type=int, default=d.target_size,
                   help="codewords per speaker, a power of two (default 8)")
    g.add_argument("--epsilon", type=float, default=d.epsilon,
                   help="LBG splitting parameter (default 0.01)")
    g.add_argument("--rel-tol", type=float, default=d.rel_distortion_tol,
                   help="Lloyd stop threshold on relative distortion improvement")
    g.add_argument("--max-iters", type=int, default=d.max_lloyd_iters)


_MFCC_FLAGS = {
    "frame_len": "frame_len",
    "overlap": "overlap",
    "alpha": "preemphasis_alpha",
    "num_filters": "num_filters",
    "coeff_lo": "coeff_lo",
    "coeff_hi": "coeff_hi",
    "log_floor": "log_floor",
}


def _mfcc_overrides(args):
    out = {field: getattr(args, flag) for flag, field in _MFCC_FLAGS.items() if hasattr(args, flag)}
    if hasattr(args, "no_preemphasis"):
        out["preemphasis_enabled"] = not args.no_preemphasis
    return out


def _mfcc_config(args, base=None):
    kwargs = {} if base is None else asdict(base)
    kwargs.update(_mfcc_overrides(args))
    return MfccConfig(**kwargs)


def _lbg_config(args):
    return LbgConfig(args.codebook_size, args.epsilon, args.rel_tol, args.max_iters)


def _parse_widths(text):
    try:
        widths = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"--widths must be a comma separated list of numbers: {text!r}") from None
    if not widths:
        raise UsageError("--widths is empty")
    for w in widths:
        if not 0.0 <= w < 1.0:
            raise UsageError(f"notch width {w} outside [0, 1)")
    return widths


def _train(train_dir, mfcc, lbg):
    labeled = load_corpus(train_dir)
    if not labeled:
        raise VqspkError(f"no wav files found in {train_dir}")
    db, reports = enroll_many(labeled, SpeakerDb((), mfcc, lbg))
    return db, reports


def _labeled_test_clips(test_dir):
    labeled = load_corpus(test_dir)
    if not labeled:
        raise VqspkError(f"no wav files found in {test_dir}")
    return [(sid, clip) for sid, clips in labeled for clip in clips]


def _print_matrix(matrix):
    ids = matrix.speaker_ids
    width = max(8, max(len(s) for s in ids) + 1)
    print("true".ljust(width) + "".join(s.rjust(width) for s in ids) + "  predicted")
    for tid, row, pred in zip(matrix.true_ids, matrix.distances, matrix.predictions):
        mark = "" if tid == pred else "  *"
        print(tid.ljust(width) + "".join(f"{v:{width}.4f}" for v in row) + f"  {pred}{mark}")


def cmd_train(args):
    db, reports = _train(args.input_dir, _mfcc_config(args), _lbg_config(args))
    for r in reports:
        print(f"{r.id} frames={r.frames} codewords={db[r.id].codebook.size} "
              f"distortion={r.distortion:.6f}")
    save_db(db, args.db_out)
    _log(f"wrote {len(db)} speakers to {args.db_out}")
    return EXIT_OK


def cmd_identify(args):
    db = load_db(args.db)
    forced = _mfcc_overrides(args)
    config = _mfcc_config(args, base=db.mfcc_config) if forced else None
    result = identify(read_wav(args.wav), db, config)
    print(f"predicted={result.predicted}")
    for sid, dist in result.ranked():
        print(f"{sid} {dist:.6f}")
    return EXIT_OK


def cmd_evaluate(args):
    db, _ = _train(args.train_dir, _mfcc_config(args), _lbg_config(args))
    if args.db_out:
        save_db(db, args.db_out)
    matrix = distance_matrix(_labeled_test_clips(args.test_dir), db)
    matrix.to_csv(args.out_csv)
    _print_matrix(matrix)
    margins = summarize_margins(matrix)
    print(f"accuracy={matrix.accuracy:.6f} ({matrix.correct}/{len(matrix.true_ids)})")
    print(f"margin_mean={margins['mean']:.6f} margin_min={margins['min']:.6f}")
    return EXIT_OK


def cmd_notch_sweep(args):
    widths = args.widths  # parsed by _validate
    db, _ = _train(args.train_dir, _mfcc_config(args), _lbg_config(args))
    clips = _labeled_test_clips(args.test_dir)
    rows = []
    print("width,identified,total")
    for w in widths:
        spec = NotchSpec(args.center, w, args.transition)
        filtered = [(sid, notch_filter(clip, spec)) for sid, clip in clips]
        matrix = distance_matrix(filtered, db)
        rows.append((w, matrix.correct, len(filtered)))
        print(f"{w:g},{matrix.correct},{len(filtered)}")
    if args.out_csv:
        with open(args.out_csv, "w", newline="\n") as fh:
            fh.write("width,identified,total\n")
            fh.writelines(f"{w:g},{c},{t}\n" for w, c, t in rows)
    return EXIT_OK


def cmd_corpus(args):
    train_dir, test_dir = generate_corpus(
        args.out, count=args.speakers, duration_s=args.duration, fs=args.fs,
        train_seed=args.train_seed, test_seed=args.test_seed,
    )
    print(f"train={train_dir}")
    print(f"test={test_dir}")
    return EXIT_OK


def cmd_dump(args):
    mfcc = _mfcc_config(args)
    feats = extract_mfcc(read_wav(args.wav), mfcc)
    features_to_csv(feats, args.features_out, coeff_lo=mfcc.coeff_lo)
    _, trace = train_codebook(feats, _lbg_config(args))
    trace.to_csv(args.trace_out)
    if args.snapshot_dir:
        trace.write_snapshots(args.snapshot_dir)
    print(f"frames={feats.shape[0]} stages={len(trace.sizes())} sizes={trace.sizes()}")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="vqspk", description="MFCC + LBG vector-quantization speaker identification.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="enroll every speaker in a corpus directory")
    p.add_argument("--input-dir", required=True)
    p.add_argument("--db-out", required=True)
    _add_mfcc_flags(p)
    _add_lbg_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("identify", help="identify the speaker of one wav file")
    p.add_argument("--db", required=True)
    p.add_argument("--wav", required=True)
    _add_mfcc_flags(p, defaults=False)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("evaluate", help="train on one directory, score another")
    p.add_argument("--train-dir", required=True)
    p.add_argument("--test-dir", required=True)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--db-out", help="also save the trained database")
    _add_mfcc_flags(p)
    _add_lbg_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("notch-sweep", help="identification under notch filtering of the test clips")
    p.add_argument("--train-dir", required=True)
    p.add_argument("--test-dir", required=True)
    p.add_argument("--widths", default="0.1,0.2,0.3,0.4,0.5",
                   help="stop widths as fractions of fs/2")
    p.add_argument("--center", type=float, default=NotchSpec().center_hz)
    p.add_argument("--transition", type=float, default=NotchSpec().transition_hz)
    p.add_argument("--out-csv")
    _add_mfcc_flags(p)
    _add_lbg_flags(p)
    p.set_defaults(func=cmd_notch_sweep)

    p = sub.add_parser("corpus", help="synthetic speaker corpus")
    csub = p.add_subparsers(dest="corpus_command", required=True, parser_class=_Parser)
    g = csub.add_parser("generate", help="write <out>/s<k>.wav and <out>-test/s<k>.wav")
    g.add_argument("--out", required=True)
    g.add_argument("--speakers", type=int, default=11)
    g.add_argument("--duration", type=float, default=2.0, help="seconds per clip")
    g.add_argument("--fs", type=int, default=16000)
    g.add_argument("--train-seed", type=int, default=1)
    g.add_argument("--test-seed", type=int, default=2)
    g.set_defaults(func=cmd_corpus)

    p = sub.add_parser("dump", help="write MFCC and LBG trace CSVs for one wav file")
    p.add_argument("--wav", required=True)
    p.add_argument("--features-out", required=True)
    p.add_argument("--trace-out", required=True)
    p.add_argument("--snapshot-dir", help="per-stage codeword CSVs")
    _add_mfcc_flags(p)
    _add_lbg_flags(p)
    p.set_defaults(func=cmd_dump)
    return parser


def _validate(args):
    if args.func is cmd_corpus:
        if args.speakers < 1:
            raise UsageError("--speakers must be >= 1")
        if not args.duration > 0 or not math.isfinite(args.duration):
            raise UsageError("--duration must be positive")
        if args.fs <= 0:
            raise UsageError("--fs must be positive")
        if args.train_seed == args.test_seed:
            raise UsageError("--train-seed and --test-seed must differ")
        return
    try:
        if args.func is not cmd_identify:
            _mfcc_config(args)
        elif _mfcc_overrides(args):
            _mfcc_config(args, base=MfccConfig())
        if hasattr(args, "codebook_size"):
            _lbg_config(args)
        if args.func is cmd_notch_sweep:
            args.widths = _parse_widths(args.widths)
            NotchSpec(args.center, 0.0, args.transition)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _validate(args)
    except UsageError as exc:
        _log(f"vqspk: error: {exc}")
        return EXIT_USAGE
    try:
        return args.func(args)
    except (VqspkError, OSError) as exc:
        _log(f"vqspk: {type(exc).__name__}: {exc}")
        return EXIT_FAILURE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
