"""Command-line interface.

Exit codes: 0 success, 1 input error (bad arguments, unreadable or malformed
files, degenerate audio), 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields

import numpy as np

from .audio import read_wav, write_wav
from .bss_eval import bss_eval_sources
from .config import ExperimentConfig, load_config
from .errors import InputError, NumericalError
from .experiment import run_experiment_a, separate_file
from .synth import SynthRanges, VibratoParams, max_partials, render_vibrato_square, sample_vibrato_params

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would collide with the numerical-failure code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat JSON config file; flags override its values")
    for f in fields(ExperimentConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type in (bool, "bool"):
            parser.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
        else:
            kind = int if f.type in (int, "int") else float
            parser.add_argument(flag, dest=f.name, type=kind, default=None, metavar=f.name.upper())


def _config_from(args) -> ExperimentConfig:
    overrides = {f.name: getattr(args, f.name) for f in fields(ExperimentConfig)}
    return load_config(args.config, **overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vibntf", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("experiment-a", help="synthetic two-note separation benchmark")
    p.add_argument("--out", help="directory for report.json and trials.csv")
    _add_config_flags(p)

    p = sub.add_parser("separate", help="separate a WAV file into sources")
    p.add_argument("input", help="mixture WAV")
    p.add_argument("--out", required=True, help="output directory")
    _add_config_flags(p)

    p = sub.add_parser("eval", help="BSS_EVAL metrics for estimate/reference WAVs")
    p.add_argument("--estimates", nargs="+", required=True)
    p.add_argument("--references", nargs="+", required=True)
    p.add_argument("--filter-len", type=int, default=512)

    p = sub.add_parser("synth", help="render one vibrato square-wave note")
    p.add_argument("--out", required=True, help="output WAV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=2.0)
    p.add_argument("--sample-rate", type=int, default=44100)
    p.add_argument("--f0", type=float)
    p.add_argument("--depth", type=float)
    p.add_argument("--rate", type=float)
    p.add_argument("--partials", type=int)
    return parser


def _cmd_experiment(args) -> int:
    config = _config_from(args)

    def progress(rep):
        if rep["status"] == "ok":
            m = rep["metrics"]
            logging.info(
                "trial %d: vibntf SDR %s, klnmf SDR %s",
                rep["trial"],
                np.round(m["vibntf"]["sdr"], 1).tolist(),
                np.round(m["klnmf"]["sdr"], 1).tolist(),
            )
        else:
            logging.info("trial %d failed: %s", rep["trial"], rep["error"])

    report = run_experiment_a(config, out_dir=args.out, progress=progress)
    print(json.dumps(report["aggregate"], indent=2))
    return EXIT_OK


def _cmd_separate(args) -> int:
    paths = separate_file(args.input, args.out, _config_from(args))
    for p in paths:
        print(p)
    return EXIT_OK


def _cmd_eval(args) -> int:
    if len(args.estimates) != len(args.references):
        raise InputError("need as many estimates as references")
    est = [read_wav(p) for p in args.estimates]
    ref = [read_wav(p) for p in args.references]
    print(json.dumps(bss_eval_sources(est, ref, args.filter_len).to_dict(), indent=2))
    return EXIT_OK


def _cmd_synth(args) -> int:
    rng = np.random.default_rng(args.seed)
    params = sample_vibrato_params(rng, SynthRanges(), args.sample_rate)
    f0 = args.f0 if args.f0 is not None else params.f0
    depth = args.depth if args.depth is not None else params.depth
    rate = args.rate if args.rate is not None else params.rate
    partials = args.partials if args.partials is not None else params.num_partials
    partials = min(partials, max_partials(f0, depth, args.sample_rate))
    phases = rng.uniform(0, 2 * np.pi, size=partials) if partials != params.num_partials else params.phase0
    try:
        params = VibratoParams(f0, partials, depth, rate, tuple(phases))
        buf = render_vibrato_square(params, args.duration, args.sample_rate)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    write_wav(args.out, buf)
    print(json.dumps(params.to_dict()))
    return EXIT_OK


COMMANDS = {
    "experiment-a": _cmd_experiment,
    "separate": _cmd_separate,
    "eval": _cmd_eval,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InputError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
