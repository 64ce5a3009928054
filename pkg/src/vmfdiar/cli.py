"""
Command-line driver.

    vmfdiar synth   --out DIR --nc 4 --dim 50 --n 1000 --kappa 50 --seed 0
    vmfdiar cluster --embeddings E --segments S --out OUT.rttm --nc 4
    vmfdiar score   --ref REF.rttm --sys SYS.rttm
    vmfdiar bench   --out DIR --nc 4 --dim 50 --kappa 20,80,20,80 --weights ...

Results go to stdout as ``key=value`` lines; logs go to stderr.

Exit codes: 0 success, 2 bad input or I/O failure, 3 clustering failure,
4 reference/system duration mismatch.
"""

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import dataio
from .clustering import ClusterConfig
from .errors import DurationMismatch, VmfDiarError
from .metrics import FRAME_SIZE, n_frames
from .pipeline import SynthSpec, benchmark, diarize, score, synthesize

log = logging.getLogger("vmfdiar")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CLUSTER = 3
EXIT_DURATION = 4

_MODES = {"movmf": "movmf", "skmeans": "spherical_kmeans", "movmf-tied": "movmf_tied"}
# "eq10" is kept as an alias of the closed-form estimate
_KAPPA_MODES = {"approx": "approx", "eq10": "approx", "exact": "exact"}


class StageError(Exception):
    def __init__(self, stage, exc, code):
        super().__init__(f"{stage}: {exc}")
        self.code = code


def _float_list(text):
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _emit(pairs):
    for key, value in pairs:
        if isinstance(value, float):
            value = repr(value)
        print(f"{key}={value}")


def _stage(stage, code, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (OSError, VmfDiarError, ValueError) as exc:
        raise StageError(stage, exc, code) from exc


# -- subcommands ----------------------------------------------------------------------

def cmd_synth(args):
    spec = SynthSpec(
        n_clusters=args.nc,
        dim=args.dim,
        n=args.n,
        kappas=args.kappa,
        weights=args.weights,
        seed=args.seed,
        overlap=args.overlap,
    )
    X, truth, labels = _stage("synth", EXIT_INPUT, synthesize, spec)
    out = Path(args.out)
    suffix = ".csv" if args.format == "csv" else ".bin"
    paths = {
        "embeddings": out / f"embeddings{suffix}",
        "segments": out / "segments.txt",
        "truth": out / "truth.rttm",
    }

    def write():
        out.mkdir(parents=True, exist_ok=True)
        dataio.write_embeddings(X, paths["embeddings"], args.format)
        dataio.write_segments(truth, paths["segments"], with_labels=False)
        dataio.write_rttm(truth, paths["truth"], file_id=args.file_id)

    _stage("write", EXIT_INPUT, write)
    counts = np.bincount(labels, minlength=args.nc)
    log.info("wrote %d embeddings (d=%d) in %d components: %s", args.n, args.dim, args.nc,
             " ".join(str(c) for c in counts))
    _emit([(f"{k}_path", str(p)) for k, p in paths.items()] + [("n", args.n), ("dim", args.dim)])
    return EXIT_OK


def cmd_cluster(args):
    X = _stage("read embeddings", EXIT_INPUT, dataio.read_embeddings, args.embeddings)
    segments = _stage("read segments", EXIT_INPUT, dataio.read_segments, args.segments)
    _stage("align", EXIT_INPUT, dataio.check_aligned, X, segments)
    if args.pca_dim is not None and not 1 <= args.pca_dim <= X.shape[1]:
        raise StageError("config", f"--pca-dim {args.pca_dim} must lie in [1, {X.shape[1]}]",
                         EXIT_INPUT)
    config = _stage(
        "config", EXIT_INPUT, ClusterConfig,
        n_clusters=args.nc,
        max_iters=args.max_iters,
        rel_tol=args.tol,
        seed=args.seed,
        mode=_MODES[args.mode],
        kappa_mode=_KAPPA_MODES[args.kappa],
    )
    timeline, result = _stage("cluster", EXIT_CLUSTER, diarize, X, segments, config, args.pca_dim)
    _stage("write", EXIT_INPUT, dataio.write_rttm, timeline, args.out, args.file_id)
    for i, value in enumerate(result.objective_trace):
        log.info("iteration %d objective %.10g", i, value)
    log.info("%s after %d iteration(s)",
             "converged" if result.converged else "stopped at max-iters", result.iterations)
    if args.plot:
        from .plotting import plot_objective_trace

        _stage("plot", EXIT_INPUT, plot_objective_trace, result.objective_trace, args.plot)
    _emit([
        ("iterations", result.iterations),
        ("converged", int(result.converged)),
        ("objective", result.objective_trace[-1]),
        ("clusters_used", int(np.unique(result.labels).size)),
    ])
    return EXIT_OK


def cmd_score(args):
    ref = _stage("read reference", EXIT_INPUT, dataio.read_rttm, args.ref)
    hyp = _stage("read system", EXIT_INPUT, dataio.read_rttm, args.sys)
    duration = ref.duration if args.duration is None else args.duration
    if n_frames(hyp.duration, args.frame_size) > n_frames(duration, args.frame_size):
        log.error("score: system output runs to %.3f s, past the scored %.3f s",
                  hyp.duration, duration)
        return EXIT_DURATION
    try:
        rep = score(ref.with_duration(duration), hyp.with_duration(duration),
                    args.frame_size, args.collar)
    except DurationMismatch as exc:
        log.error("score: %s", exc)
        return EXIT_DURATION
    except (VmfDiarError, ValueError) as exc:
        raise StageError("score", exc, EXIT_INPUT) from exc
    print(
        f"DER {rep.der_percent:.2f}% (false alarm {rep.phi_fa:.3f} s, miss {rep.phi_miss:.3f} s, "
        f"speaker error {rep.phi_err:.3f} s, reference {rep.phi_total:.3f} s) "
        f"MI {rep.mi_bits:.4f} bits (H(ref) {rep.h_ref_bits:.4f}, H(sys) {rep.h_sys_bits:.4f})"
    )
    _emit(rep.as_items())
    if args.plot:
        from .plotting import plot_score

        _stage("plot", EXIT_INPUT, plot_score, rep, args.plot)
    return EXIT_OK


def cmd_bench(args):
    spec = SynthSpec(args.nc, args.dim, args.n, args.kappa, args.weights, 0, args.overlap)
    _stage("config", EXIT_INPUT, spec.resolved)
    seeds = range(args.seed, args.seed + args.seeds)
    rows = _stage("bench", EXIT_CLUSTER, benchmark, spec, seeds,
                  kappa_mode=_KAPPA_MODES[args.kappa_mode], pca_dim=args.pca_dim)
    out = Path(args.out)

    def write():
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "bench.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)

    _stage("write", EXIT_INPUT, write)
    summary = []
    for mode in dict.fromkeys(r["mode"] for r in rows):
        sel = [r for r in rows if r["mode"] == mode]
        for key in ("ari", "der_percent", "mi_bits"):
            summary.append((f"{mode}_mean_{key}", float(np.mean([r[key] for r in sel]))))
    _emit(summary)
    if not args.no_plot:
        from .plotting import plot_benchmark

        _stage("plot", EXIT_INPUT, plot_benchmark, rows, out / "bench.png")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------

def _synth_options(p):
    p.add_argument("--nc", type=int, default=4, help="number of mixture components")
    p.add_argument("--dim", type=int, default=75, help="embedding dimension")
    p.add_argument("--n", type=int, default=1000, help="number of segments")
    p.add_argument("--kappa", type=_float_list, default=(50.0,),
                   help="one concentration, or one per component (comma-separated)")
    p.add_argument("--weights", type=_float_list, default=None,
                   help="component weights (comma-separated); uniform if omitted")
    p.add_argument("--overlap", action="store_true",
                   help="label the last component OVERLAP in the truth RTTM")


def build_parser():
    parser = argparse.ArgumentParser(prog="vmfdiar", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic recording drawn from a vMF mixture")
    _synth_options(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=("binary", "csv"), default="binary")
    p.add_argument("--file-id", default="rec")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("cluster", help="cluster segment embeddings and write an RTTM")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--segments", required=True)
    p.add_argument("--out", required=True, help="output RTTM path")
    p.add_argument("--nc", type=int, default=9, help="number of clusters")
    p.add_argument("--pca-dim", type=int, default=None,
                   help="reduce to this many PCA dimensions before normalizing")
    p.add_argument("--mode", choices=tuple(_MODES), default="movmf")
    p.add_argument("--kappa", choices=tuple(_KAPPA_MODES), default="approx",
                   help="closed-form concentration estimate or exact ML solve")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-6, help="relative objective tolerance")
    p.add_argument("--file-id", default="rec")
    p.add_argument("--plot", default=None, help="write the objective trace figure here")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("score", help="DER and frame-level MI of a system RTTM")
    p.add_argument("--ref", required=True)
    p.add_argument("--sys", required=True)
    p.add_argument("--frame-size", type=float, default=FRAME_SIZE)
    p.add_argument("--collar", type=float, default=0.0)
    p.add_argument("--duration", type=float, default=None,
                   help="scored duration in seconds (default: end of the reference)")
    p.add_argument("--plot", default=None, help="write a score figure here")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("bench", help="compare clustering modes on synthetic recordings")
    _synth_options(p)
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--seeds", type=int, default=20, help="number of seeds")
    p.add_argument("--kappa-mode", choices=tuple(_KAPPA_MODES), default="approx")
    p.add_argument("--pca-dim", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        return args.func(args)
    except StageError as exc:
        log.error("%s", exc)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
