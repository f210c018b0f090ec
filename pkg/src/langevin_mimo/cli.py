"""Command line entry point: ``langevin-mimo {sweep,detect,selftest}``.

Exit codes: 0 success, 1 configuration error, 2 runtime error, 3 too many
trials excluded from a detector's counts.
"""
import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from .baselines import detect_ml, detect_mmse, detect_zf
from .channel import ChannelParams, sigma0_sq_from_snr
from .constellation import make_qam
from .detector import DivergenceError, detect
from .harness import (
    MAX_EXCLUDED_FRACTION,
    ConfigError,
    LangevinSettings,
    emit_csv,
    load_config,
    parse_detector,
    run_sweep,
)
from .selftest import run_selftest

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_EXCLUSIONS = 0, 1, 2, 3

LOG = logging.getLogger("langevin_mimo")


def _detector_list(text):
    return tuple(d.strip() for d in text.split(";" if ":" in text else ",") if d.strip())


def _load_array(path):
    if path.endswith(".npy"):
        return np.load(path)
    return np.loadtxt(path, dtype=complex, ndmin=1)


def cmd_sweep(args):
    try:
        config = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["master_seed"] = args.seed
        if args.output is not None:
            overrides["output_path"] = args.output
        if args.threads is not None:
            overrides["threads"] = args.threads
        if args.detectors is not None:
            overrides["detectors"] = _detector_list(args.detectors)
        if args.n_trials is not None:
            overrides["n_trials"] = args.n_trials
        if args.timing:
            overrides["timing"] = True
        config = replace(config, **overrides)
    except OSError as err:
        LOG.error("cannot read config: %s", err)
        return EXIT_CONFIG
    except ConfigError as err:
        LOG.error("config error: %s", err)
        return EXIT_CONFIG

    try:
        report = run_sweep(config, progress=lambda snr: LOG.info("finished %s dB", snr))
        emit_csv(report, config.output_path)
    except (OSError, RuntimeError, np.linalg.LinAlgError) as err:
        LOG.error("sweep failed: %s", err)
        return EXIT_RUNTIME
    LOG.info("wrote %s", config.output_path)
    if report.max_excluded_fraction > MAX_EXCLUDED_FRACTION:
        LOG.warning("trials excluded after detector failures: %s", report.excluded)
        return EXIT_EXCLUSIONS
    return EXIT_OK


def cmd_detect(args):
    try:
        H = np.atleast_2d(_load_array(args.channel)).astype(complex)
        y = np.ravel(_load_array(args.received)).astype(complex)
        c = make_qam(args.order)
        if H.shape[0] != y.size:
            raise ValueError(f"channel has {H.shape[0]} rows but y has {y.size} entries")
        if args.sigma0_sq is not None:
            s0 = args.sigma0_sq
        elif args.snr_db is not None:
            s0 = sigma0_sq_from_snr(args.snr_db, ChannelParams(H.shape[0], H.shape[1]))
        else:
            raise ValueError("give --sigma0-sq or --snr-db")
        base = LangevinSettings(
            epsilon=args.epsilon,
            steps_per_level=args.steps,
            n_levels=args.levels,
            n_trajectories=args.trajectories,
        )
        detectors = [(d, *parse_detector(d, base)) for d in _detector_list(args.detectors)]
    except (OSError, ValueError) as err:
        LOG.error("bad input: %s", err)
        return EXIT_CONFIG

    try:
        for name, kind, settings in detectors:
            if kind == "zf":
                xh = detect_zf(y, H, c)
            elif kind == "mmse":
                xh = detect_mmse(y, H, s0, c)
            elif kind == "ml":
                xh = detect_ml(y, H, c)
            else:
                xh = detect(y, H, s0, settings.to_config(args.seed), c, n_jobs=args.threads).symbols
            print(f"{name}: " + " ".join(f"{z.real:+.6f}{z.imag:+.6f}j" for z in xh))
    except (DivergenceError, ValueError, np.linalg.LinAlgError) as err:
        LOG.error("detection failed: %s", err)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_selftest(args):
    return EXIT_OK if run_selftest(seed=args.seed or 0) else EXIT_RUNTIME


def build_parser():
    parser = argparse.ArgumentParser(prog="langevin-mimo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="run a Monte-Carlo SER sweep from a TOML config")
    sw.add_argument("--config", required=True)
    sw.add_argument("--seed", type=int)
    sw.add_argument("--output")
    sw.add_argument("--threads", type=int)
    sw.add_argument("--detectors", help="comma-separated list, or ';'-separated when options are used")
    sw.add_argument("--n-trials", type=int)
    sw.add_argument("--timing", action="store_true", help="record wall time (CSV is then not bit-stable)")
    sw.set_defaults(func=cmd_sweep)

    dt = sub.add_parser("detect", help="detect one received vector")
    dt.add_argument("--channel", required=True, help=".npy or text file with the complex channel matrix")
    dt.add_argument("--received", required=True, help=".npy or text file with the received vector")
    g = dt.add_mutually_exclusive_group()
    g.add_argument("--sigma0-sq", type=float)
    g.add_argument("--snr-db", type=float)
    dt.add_argument("--order", type=int, default=16)
    dt.add_argument("--detectors", default="langevin")
    dt.add_argument("--seed", type=int, default=0)
    dt.add_argument("--threads", type=int, default=1)
    dt.add_argument("--epsilon", type=float, default=3e-5)
    dt.add_argument("--steps", type=int, default=70)
    dt.add_argument("--levels", type=int, default=20)
    dt.add_argument("--trajectories", type=int, default=40)
    dt.set_defaults(func=cmd_detect)

    st = sub.add_parser("selftest", help="run the built-in invariant checks")
    st.add_argument("--seed", type=int, default=0)
    st.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
