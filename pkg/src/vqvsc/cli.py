"""Command-line interface.

Subcommands: ``train-codebook``, ``fit-rho``, ``encode``, ``decode``,
``transmit``, ``sweep`` and ``make-corpus``. Experiment settings come from
defaults, then ``--config FILE`` (``key = value`` lines), then one flag per
config field (``--snr-db 5``, ``--channel awgn`` ...).
"""

import argparse
import csv
import dataclasses
import logging
import os
import sys

import numpy as np

from . import pipeline
from .datasets import synthetic_video
from .keyframe import RateModel
from .msvq import train_codebook
from .video_io import read_raw_video, write_raw_video

log = logging.getLogger("vqvsc")

_SKIP_FLAGS = {"seed"}


def _add_config_flags(parser):
    parser.add_argument("--config", help="key = value experiment file")
    group = parser.add_argument_group("experiment overrides")
    for f in dataclasses.fields(pipeline.ExperimentConfig):
        if f.name in _SKIP_FLAGS:
            continue
        group.add_argument("--" + f.name.replace("_", "-"), dest="cfg_" + f.name, default=None, metavar="VALUE")


def _build_config(args):
    cfg = pipeline.ExperimentConfig()
    if getattr(args, "config", None):
        cfg = pipeline.load_config(args.config, cfg)
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = str(args.seed)
    return pipeline.config_from_mapping(overrides, cfg)


def _load_video(cfg, n_frames=16):
    if cfg.video:
        return read_raw_video(cfg.video, cfg.width, cfg.height)
    return synthetic_video(n_frames=n_frames, width=cfg.width, height=cfg.height)


def cmd_make_corpus(args):
    seq = synthetic_video(args.frames, args.width, args.height, seed=args.corpus_seed)
    n = write_raw_video(seq, args.out)
    log.info("wrote %d bytes (%d frames) to %s", n, seq.shape[0], args.out)


def cmd_train_codebook(args):
    cfg = _build_config(args)
    seq = _load_video(cfg)
    book = train_codebook(seq, cfg.vq, seed=cfg.seed or 0, max_iters=args.max_iters)
    book.save(args.out)
    log.info("codebook %dx%d id=%d -> %s", book.size, book.dim, book.id, args.out)


def cmd_fit_rho(args):
    with open(args.samples) as fh:
        rows = [r for r in csv.DictReader(fh)]
    snr = np.array([float(r["snr_db"]) for r in rows])
    rho = np.array([float(r["rho"]) for r in rows])
    model = RateModel(degree=args.degree, reg=args.reg, upsilon=args.upsilon).fit(snr, rho)
    model.save(args.out)
    log.info("coefficients %s -> %s", model.coef_.tolist(), args.out)


def cmd_encode(args):
    cfg = _build_config(args)
    seq = _load_video(cfg)
    res = pipeline.Resources(cfg, training_frames=seq)
    gops = pipeline.split_gops(seq, cfg.gop)
    if len(gops) != 1:
        raise SystemExit("encode writes one container; pass a video of at most one GOP")
    enc = pipeline.encode_gop(gops[0], cfg, res)
    with open(args.out, "wb") as fh:
        fh.write(enc.container)
    log.info("M=%d of N=%d, %d bytes, BCR=%.6f", enc.header.n_keys, enc.header.n_frames, len(enc.container), pipeline.bcr_for(enc))


def cmd_decode(args):
    cfg = _build_config(args)
    res = pipeline.Resources(cfg)
    with open(args.container, "rb") as fh:
        frames = pipeline.decode_container(fh.read(), res)
    write_raw_video(frames, args.out)
    log.info("decoded %d frames to %s", frames.shape[0], args.out)


def cmd_transmit(args):
    cfg = _build_config(args)
    seq = _load_video(cfg)
    received, row = pipeline.transmit_video(seq, cfg)
    if args.out:
        write_raw_video(received, args.out)
    if cfg.report:
        pipeline.write_report([row], cfg.report, include_timing=args.timing)
    print(
        f"snr={row.snr_db:g}dB rho={row.rho:.4f} M={row.n_keys} repeats={row.repeats} "
        f"crc_ok={row.crc_ok} ms_ssim={row.ms_ssim:.4f} bcr={row.bcr:.6f}"
    )


def cmd_sweep(args):
    cfg = _build_config(args)
    seq = _load_video(cfg)
    rows, videos = pipeline.sweep(seq, cfg, args.snr, trials=args.trials, n_jobs=args.jobs)
    report = cfg.report or "sweep.csv"
    pipeline.write_report(rows, report, include_timing=args.timing)
    if args.video_dir:
        os.makedirs(args.video_dir, exist_ok=True)
        for row, video in zip(rows, videos):
            write_raw_video(video, os.path.join(args.video_dir, f"snr{row.snr_db:g}_trial{row.trial}.rgb"))
    for row in rows:
        print(f"snr={row.snr_db:g}dB trial={row.trial} M={row.n_keys} crc_ok={row.crc_ok} ms_ssim={row.ms_ssim:.4f}")
    log.info("report -> %s", report)


def build_parser():
    parser = argparse.ArgumentParser(prog="vqvsc", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-corpus", help="write the synthetic test video")
    p.add_argument("--out", required=True)
    p.add_argument("--frames", type=int, default=16)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--corpus-seed", type=int, default=7)
    p.set_defaults(func=cmd_make_corpus)

    p = sub.add_parser("train-codebook", help="k-means codebook from a video")
    _add_config_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_codebook)

    p = sub.add_parser("fit-rho", help="fit the SNR -> key-frame ratio model")
    p.add_argument("--samples", required=True, help="CSV with snr_db,rho columns")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--reg", choices=("none", "L1", "L2"), default="L2")
    p.add_argument("--upsilon", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit_rho)

    p = sub.add_parser("encode", help="video -> container file")
    _add_config_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="container file -> video")
    _add_config_flags(p)
    p.add_argument("--container", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("transmit", help="one end-to-end run")
    _add_config_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="write the received video here")
    p.add_argument("--timing", action="store_true", help="add wall_time to the report")
    p.set_defaults(func=cmd_transmit)

    p = sub.add_parser("sweep", help="SNR sweep to a CSV report")
    _add_config_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--snr", type=float, nargs="+", required=True, help="SNR points in dB")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--video-dir", help="write each reconstructed video here")
    p.add_argument("--timing", action="store_true", help="add wall_time to the report")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
