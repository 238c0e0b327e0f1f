#!/usr/bin/env python3
"""nbldpc: generate non-binary LDPC codes, simulate FFT-SPA / Min-Max decoding over
BPSK-AWGN, benchmark multicodeword throughput and compare operation counts with the
complexity model.

Exit codes: 0 success, 2 invalid input or configuration, 3 decoding engine error.
"""
import argparse
import contextlib
import csv
import logging
import sys

import gf
import perf
import runspec
from decoding import ALGORITHMS, Arithmetic, DecodeConfig
from errors import NBLDPCError
from ldpc_code import SystematicEncoder, format_code, gen_regular_code, load_code, toy_code

__version__ = "1.0.0"
CSV_SCHEMA_VERSION = 1

SIMULATE_HEADER = ['ebn0_db', 'frames', 'frame_errors', 'symbol_errors', 'bit_errors',
                   'FER', 'BER', 'avg_iters']
BENCH_HEADER = ['workers', 'frames', 'wall_s', 'throughput_bps', 'speedup_vs_1']
ANALYZE_HEADER = ['q', 'block', 'predicted', 'measured', 'residual']

logger = logging.getLogger("nbldpc")


@contextlib.contextmanager
def open_output(path):
    if path is None or path == '-':
        yield sys.stdout
    else:
        with open(path, 'w', newline='') as f:
            yield f


def resolve_code(spec):
    if spec.code:
        logger.info("loading code %s", spec.code)
        return load_code(spec.code)
    if spec.toy:
        return toy_code()
    field = gf.build_field(spec.q, spec.poly)
    return gen_regular_code(spec.n, spec.m, spec.dc, spec.dv, field, spec.seed)


def decode_config(spec, counters=False):
    return DecodeConfig(max_iters=spec.max_iters, early_stop=spec.early_stop,
                        arithmetic=Arithmetic.parse(spec.arithmetic),
                        counters_enabled=counters, llr_scale=spec.llr_scale)


def code_summary(pcm, seed=None):
    degrees = pcm.regular_degrees
    dc, dv = degrees if degrees else ("irregular", "irregular")
    line = f"N={pcm.n} M={pcm.m} d_c={dc} d_v={dv} g={pcm.field.g} poly={pcm.field.poly:#b}"
    if seed is not None:
        line += f" seed={seed}"
    return line


def show_matrix(pcm):
    dense = pcm.dense()
    cells = [[gf.format_symbol(pcm.field, x) for x in row] for row in dense]
    width = max(len(c) for row in cells for c in row)
    return "\n".join(" ".join(c.rjust(width) for c in row) for row in cells)


def cmd_gen(spec):
    pcm = resolve_code(spec)
    seed = None if (spec.code or spec.toy) else spec.seed
    summary = code_summary(pcm, seed)
    if spec.output:
        with open_output(spec.output) as f:
            f.write(format_code(pcm))
        print(f"Wrote {spec.output}: {summary}")
        if spec.show:
            print(show_matrix(pcm))
    else:
        sys.stdout.write(format_code(pcm))
        print(summary, file=sys.stderr)
        if spec.show:
            print(show_matrix(pcm), file=sys.stderr)
    return 0


def cmd_simulate(spec):
    pcm = resolve_code(spec)
    config = decode_config(spec)
    logger.info("simulating %s/%s on %s", spec.algorithm, spec.arithmetic, code_summary(pcm))

    def progress(point):
        logger.info("%.2f dB: %d/%d frame errors, FER %.3e", point.ebn0_db,
                    point.frame_errors, point.frames, point.fer)

    points = perf.sweep(pcm, spec.algorithm, config, spec.ebn0, spec.frames, spec.seed,
                        workers=spec.workers[0], executor=spec.executor,
                        noiseless=spec.noiseless, channel_scale=spec.channel_scale,
                        progress=progress)
    with open_output(spec.output) as f:
        writer = csv.writer(f)
        writer.writerow(SIMULATE_HEADER)
        for p in points:
            writer.writerow([p.ebn0_db, p.frames, p.frame_errors, p.symbol_errors,
                             p.bit_errors, f"{p.fer:.6e}", f"{p.ber:.6e}", f"{p.avg_iters:.3f}"])
    return 0


def cmd_bench(spec):
    pcm = resolve_code(spec)
    config = decode_config(spec)
    encoder = SystematicEncoder(pcm)
    frames = perf.simulate_frames(pcm, encoder, spec.ebn0[0], spec.frames, spec.seed,
                                  noiseless=spec.noiseless, channel_scale=spec.channel_scale)

    reports = {}
    # the W=1 run is the speedup baseline even when not requested
    for workers in sorted(set(spec.workers) | {1}):
        reports[workers] = perf.run_batch(pcm, spec.algorithm, config, frames, workers,
                                          spec.executor)
        logger.info("%d workers: %.1f bit/s", workers, reports[workers].throughput_bps)
    baseline = reports[1].throughput_bps

    with open_output(spec.output) as f:
        writer = csv.writer(f)
        writer.writerow(BENCH_HEADER)
        for workers in spec.workers:
            r = reports[workers]
            writer.writerow([workers, r.frames, f"{r.wall_s:.6f}", f"{r.throughput_bps:.3f}",
                             f"{r.throughput_bps / baseline:.3f}"])
    return 0


def crossover_summary(qs, shape):
    lines = []
    lower = [q for q in qs if perf.operation_ratio(q, shape) < 1.0]
    for q in qs:
        lines.append(f"GF({1 << q}): min-max/fft-spa predicted operations = "
                     f"{perf.operation_ratio(q, shape):.2f}")
    if lower:
        lines.append("min-max needs fewer operations at q = " + ", ".join(map(str, lower)))
    else:
        lines.append(f"fft-spa needs fewer operations at every q for {shape}")
    return lines


def cmd_analyze(spec):
    rows = perf.count_table(spec.algorithms, spec.qs, spec.shape, spec.seed)
    drift = [r for r in rows if r.exact and r.residual]
    for r in drift:
        logger.warning("q=%d %s: measured %d, model %d", r.q, r.label, r.measured, r.predicted)

    with open_output(spec.output) as f:
        writer = csv.writer(f)
        writer.writerow(ANALYZE_HEADER)
        for r in rows:
            writer.writerow([r.q, r.label, r.predicted, r.measured, r.residual])

    if set(spec.algorithms) == set(ALGORITHMS):
        for line in crossover_summary(spec.qs, spec.shape):
            print(line, file=sys.stderr)
    return 0


COMMANDS = {
    'gen': cmd_gen,
    'simulate': cmd_simulate,
    'bench': cmd_bench,
    'analyze': cmd_analyze,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (flags override it)")
    common.add_argument("--seed", type=int, help="RNG seed (default: $NBLDPC_SEED or 0)")
    common.add_argument("-o", "--output", help="Output path (default: stdout)")
    common.add_argument("--progress", action="store_true", help="Log progress to stderr")
    common.add_argument("--verbose", action="store_true", help="Debug logging")

    code = argparse.ArgumentParser(add_help=False)
    code.add_argument("--code", help="Non-binary alist file")
    code.add_argument("--toy", action="store_const", const=True,
                      help="Use the 3x6 GF(4) example matrix")
    code.add_argument("--n", type=int, help="Code length N")
    code.add_argument("--m", type=int, help="Parity checks M")
    code.add_argument("--dc", type=int, help="Check-node degree")
    code.add_argument("--dv", type=int, help="Variable-node degree")
    code.add_argument("--q", type=int, help="Field GF(2^q), 2..8")
    code.add_argument("--poly", type=lambda s: int(s, 0), help="Primitive polynomial")

    decoder = argparse.ArgumentParser(add_help=False)
    decoder.add_argument("--algorithm", choices=ALGORITHMS)
    decoder.add_argument("--arithmetic", choices=[a.value for a in Arithmetic])
    decoder.add_argument("--iters", dest="max_iters", type=int, help="Maximum iterations")
    decoder.add_argument("--early-stop", dest="early_stop", action="store_const", const=True)
    decoder.add_argument("--no-early-stop", dest="early_stop", action="store_const", const=False)
    decoder.add_argument("--frames", type=int)
    decoder.add_argument("--ebn0", type=float, nargs="+", help="E_b/N_0 grid in dB")
    decoder.add_argument("--executor", choices=["process", "thread"])
    decoder.add_argument("--noiseless", action="store_const", const=True)
    decoder.add_argument("--channel-scale", dest="channel_scale", type=float,
                         help="Quantize channel samples to round(y*scale) (8-bit)")
    decoder.add_argument("--llr-scale", dest="llr_scale", type=float,
                         help="Delta-LLR scale for fixed-point Min-Max")

    parser = argparse.ArgumentParser(prog="nbldpc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"nbldpc {__version__} (csv schema {CSV_SCHEMA_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common, code], help="Generate or convert a code")
    gen.add_argument("--show", action="store_true", help="Print H in power notation")

    simulate = sub.add_parser("simulate", parents=[common, code, decoder],
                              help="FER/BER sweep over E_b/N_0")
    simulate.add_argument("--workers", type=int, nargs=1)

    bench = sub.add_parser("bench", parents=[common, code, decoder],
                           help="Multicodeword throughput per worker count")
    bench.add_argument("--workers", type=int, nargs="+")

    analyze = sub.add_parser("analyze", parents=[common],
                             help="Operation counts: model vs instrumented decode")
    analyze.add_argument("--algorithm", choices=ALGORITHMS)
    analyze.add_argument("--q", dest="qs", type=int, nargs="+", help="Field exponents")
    analyze.add_argument("--shape", choices=sorted(perf.CODE_FAMILY))
    return parser


def setup_logging(args):
    level = logging.WARNING
    if args.progress:
        level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args)

    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("command", "config", "progress", "verbose")}
    if args.command == 'analyze' and args.algorithm:
        overrides['algorithms'] = [args.algorithm]

    try:
        config = runspec.load_config(args.config) if args.config else None
        spec = runspec.build_runspec(args.command, config, overrides)
        return COMMANDS[args.command](spec)
    except NBLDPCError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
