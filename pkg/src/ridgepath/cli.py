"""Command-line driver: ``ridgepath {path,bench,sketch-dim,gen-data,kernel}``.

Exit codes: 0 success, 2 bad flags, 3 data errors, 4 solver failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys

import numpy as np

from . import baselines, data, path
from .adaptive import AdaptiveConfig, adaptive_sketch_dim
from .errors import DataFormatError, DimensionError, NumericalFailure
from .matrix import thin_svd, to_dense
from .sketch import KINDS, SketchSpec
from .spectrum import PathConfig, RhoBounds, effective_dimension

log = logging.getLogger("ridgepath")

SOLVERS = ("ihs-bin", "gd-bin", "svd", "direct", "cg", "ihs")
VECTOR_ONLY = ("cg", "ihs")
CSV_HEADER = "lambda,train_loss,test_loss,time_s,solver"

EXIT_FLAGS, EXIT_DATA, EXIT_SOLVER = 2, 3, 4


class UsageError(Exception):
    pass


def parse_spec(text, defaults):
    """``key=value,key=value`` into a dict typed after ``defaults``."""
    out = dict(defaults)
    for item in filter(None, text.split(",")):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in defaults:
            raise UsageError(f"bad spec item {item!r}; keys are {', '.join(defaults)}")
        kind = type(defaults[key]) if defaults[key] is not None else str
        try:
            out[key] = kind(float(value)) if kind is int else kind(value)
        except ValueError:
            raise UsageError(f"bad value for {key}: {value!r}") from None
    return out


SYNTH_DEFAULTS = {"n": 2000, "d": 400, "alpha": 0.99, "sigma": 0.02, "seed": 0, "n_test": -1}
KERNEL_DEFAULTS = {"file": None, "h": 1000.0, "normalize": 1, "seed": 0}


# --- argument parsing -------------------------------------------------------------


def _add_data_args(p, kernel=True):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", metavar="FILE", help="LIBSVM training file")
    src.add_argument("--gen-synthetic", metavar="SPEC", help="n=..,d=..,alpha=..,sigma=..,seed=..[,n_test=..]")
    if kernel:
        src.add_argument("--kernel", metavar="SPEC", help="file=POINTS,h=1000[,normalize=0][,seed=N]")
    p.add_argument("--test-data", metavar="FILE", help="LIBSVM test file (default: split --data in half)")
    p.add_argument("--no-split", action="store_true", help="use all of --data for training")
    p.add_argument("--rescale", action="store_true", help="rescale features into [-1, 1]")


def _add_solver_args(p):
    p.add_argument("--lambda-min", type=float, required=True)
    p.add_argument("--lambda-max", type=float, required=True)
    p.add_argument("--num-lambdas", type=int, required=True)
    p.add_argument("--grid", choices=("log", "linear"), default="log")
    p.add_argument("--sketch", choices=KINDS, default="sjlt")
    p.add_argument("--sketch-dim", type=int, help="sketch rows m (required by ihs-bin and ihs)")
    p.add_argument("--sjlt-s", type=int, default=1)
    rho = p.add_mutually_exclusive_group()
    rho.add_argument("--rho-auto", action="store_true", help="estimate rho by Lanczos (default)")
    rho.add_argument("--rho1", type=float)
    p.add_argument("--rho2", type=float)
    p.add_argument("--sigma-d", type=float, help="smallest singular value of A, when known")
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--intervals", default="auto", help="interval count or 'auto'")
    p.add_argument("--matrix-rhs", metavar="FILE", help="n x K label matrix (text), or 'onehot'")
    p.add_argument("--dual", choices=("auto", "primal", "dual"), default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-timing", action="store_true", help="write time_s as 0 for byte-stable output")


def build_parser():
    parser = argparse.ArgumentParser(prog="ridgepath", description="Ridge regression paths by sketched binomial bases.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("path", help="solve a lambda grid with one solver and write CSV")
    _add_data_args(p)
    _add_solver_args(p)
    p.add_argument("--solver", choices=SOLVERS, default="ihs-bin")
    p.add_argument("--out", metavar="FILE", help="CSV destination (default stdout)")

    p = sub.add_parser("bench", help="run several solvers on one dataset")
    _add_data_args(p)
    _add_solver_args(p)
    p.add_argument("--solvers", default="ihs-bin,svd,direct,cg", help="comma-separated solver list")
    p.add_argument("--out-dir", metavar="DIR", required=True)

    p = sub.add_parser("sketch-dim", help="estimate a sufficient sketch size")
    _add_data_args(p)
    p.add_argument("--lambda-min", type=float, required=True)
    p.add_argument("--lambda-max", type=float)
    p.add_argument("--sketch", choices=KINDS, default="sjlt")
    p.add_argument("--sjlt-s", type=int, default=1)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--m-initial", type=int)
    p.add_argument("--m-cap", type=int)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("gen-data", help="write a synthetic dataset as LIBSVM text")
    p.add_argument("--gen-synthetic", metavar="SPEC", required=True)
    p.add_argument("--out", metavar="FILE", required=True)
    p.add_argument("--test-out", metavar="FILE")

    p = sub.add_parser("kernel", help="write Gaussian kernel blocks as .npz")
    p.add_argument("--data", metavar="FILE", required=True, help="LIBSVM points")
    p.add_argument("--test-data", metavar="FILE")
    p.add_argument("--bandwidth", type=float, default=1000.0)
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--rescale", action="store_true")
    p.add_argument("--out", metavar="FILE", required=True)
    return parser


# --- data ---------------------------------------------------------------------------


def _read_libsvm(fname, n_features=None):
    with open(fname) as fh:
        return data.parse_libsvm(fh, n_features)


def load_dataset(args):
    if args.gen_synthetic:
        spec = parse_spec(args.gen_synthetic, SYNTH_DEFAULTS)
        n_test = None if spec["n_test"] < 0 else spec["n_test"]
        return data.gen_synthetic(spec["n"], spec["d"], spec["alpha"], spec["sigma"], spec["seed"], n_test)
    if getattr(args, "kernel", None):
        spec = parse_spec(args.kernel, KERNEL_DEFAULTS)
        if not spec["file"]:
            raise UsageError("--kernel needs file=POINTS")
        F, y = _read_libsvm(spec["file"])
        F = data.rescale_features(to_dense(F))
        pts = data.split_half(data.Dataset(F, y), spec["seed"])
        return data.kernel_dataset(pts.A_train, pts.b_train, pts.A_test, pts.b_test, spec["h"], bool(spec["normalize"]))
    A, b = _read_libsvm(args.data)
    At = bt = None
    if args.test_data:
        At, bt = _read_libsvm(args.test_data, A.shape[1])
    if args.rescale:
        A, At = data.rescale_jointly(A, At)
    ds = data.Dataset(A, b, At, bt, provenance=f"file:{args.data}")
    if At is None and not args.no_split:
        ds = data.split_half(ds, getattr(args, "seed", 0))
    return ds


def _onehot(labels, classes):
    return (np.asarray(labels)[:, None] == classes[None, :]).astype(np.float64)


def right_hand_sides(args, ds):
    """``(b, b_test)``; matrices when ``--matrix-rhs`` is given."""
    if not args.matrix_rhs:
        return ds.b_train, ds.b_test
    if args.matrix_rhs == "onehot":
        classes = np.unique(ds.b_train)
        B_test = None if ds.b_test is None else _onehot(ds.b_test, classes)
        return _onehot(ds.b_train, classes), B_test
    try:
        B = np.loadtxt(args.matrix_rhs, ndmin=2)
    except ValueError as exc:
        raise DataFormatError(f"{args.matrix_rhs}: {exc}") from None
    if B.shape[0] != ds.A_train.shape[0]:
        raise DataFormatError(f"{args.matrix_rhs}: {B.shape[0]} rows, data has {ds.A_train.shape[0]}")
    return B, None


# --- solving --------------------------------------------------------------------------


def path_config(args):
    if not (0 < args.lambda_min <= args.lambda_max):
        raise UsageError("need 0 < --lambda-min <= --lambda-max")
    if args.num_lambdas < 1:
        raise UsageError("--num-lambdas must be positive")
    intervals = args.intervals
    if intervals != "auto":
        try:
            intervals = int(intervals)
        except ValueError:
            raise UsageError("--intervals takes a positive integer or 'auto'") from None
    try:
        return PathConfig.grid(args.lambda_min, args.lambda_max, args.num_lambdas, args.grid,
                               epsilon=args.eps, num_intervals=intervals)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def rho_bounds(args):
    if args.rho1 is None and args.rho2 is None:
        return "auto"
    if args.rho1 is None or args.rho2 is None:
        raise UsageError("--rho1 and --rho2 go together")
    try:
        return RhoBounds(args.rho1, args.rho2)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _spec_for(args):
    if args.sketch_dim is None:
        raise UsageError("--sketch-dim is required for sketched solvers")

    def make(n):
        m = n if args.sketch == "identity" else args.sketch_dim
        try:
            return SketchSpec(args.sketch, m, n, args.sjlt_s, args.seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    return make


def run_solver(name, args, ds, config, b, b_test):
    A, At = ds.A_train, ds.A_test
    matrix = np.ndim(b) == 2
    if matrix and name in VECTOR_ONLY:
        raise UsageError(f"--matrix-rhs is not supported by solver {name}")
    if name == "svd":
        return baselines.svd_path(A, b, config, At, b_test)
    if name == "direct":
        return baselines.direct_path(A, b, config, At, b_test)
    if name == "cg":
        return baselines.warm_cg_path(A, b, config, At, b_test)
    if name == "gd-bin":
        return path.gd_bin_path(A, b, config, At, b_test)
    spec_for = _spec_for(args)
    rho = rho_bounds(args)
    if name == "ihs":
        if rho == "auto":
            raise UsageError("solver ihs needs --rho1/--rho2")
        return baselines.warm_ihs_path(A, b, config, spec_for(A.shape[0]), rho, At, b_test)
    return path.solve_path(A, b, config, spec_for, rho, args.sigma_d, At, b_test, args.dual, args.seed)


def csv_rows(result, timing=True):
    test = result.test_loss
    for i, lam in enumerate(result.lambdas):
        t = f"{result.test_loss[i]:.17g}" if test is not None else ""
        yield (float(lam), result.solver,
               f"{lam:.17g},{result.train_loss[i]:.17g},{t},{result.times[i] if timing else 0.0:.17g},{result.solver}")


def write_csv(stream, results, timing=True):
    rows = sorted(row for r in results for row in csv_rows(r, timing))
    stream.write(CSV_HEADER + "\n")
    for _, _, line in rows:
        stream.write(line + "\n")


def _open_out(fname):
    return open(fname, "w", newline="") if fname else sys.stdout


def _summary(result):
    return f"{result.solver}: setup_s={result.setup_time:.6f} eval_s={float(np.sum(result.times)):.6f} total_s={result.total_time:.6f}"


def cmd_path(args):
    config = path_config(args)
    ds = load_dataset(args)
    b, b_test = right_hand_sides(args, ds)
    result = run_solver(args.solver, args, ds, config, b, b_test)
    out = _open_out(args.out)
    try:
        write_csv(out, [result], not args.no_timing)
    finally:
        if out is not sys.stdout:
            out.close()
    print(_summary(result), file=sys.stderr)
    return 0


def cmd_bench(args):
    config = path_config(args)
    names = [s.strip() for s in args.solvers.split(",") if s.strip()]
    bad = [s for s in names if s not in SOLVERS]
    if bad or not names:
        raise UsageError(f"unknown solvers {bad}; choose from {', '.join(SOLVERS)}")
    ds = load_dataset(args)
    b, b_test = right_hand_sides(args, ds)
    os.makedirs(args.out_dir, exist_ok=True)
    results = []
    for name in names:
        r = run_solver(name, args, ds, config, b, b_test)
        with open(os.path.join(args.out_dir, f"{name}.csv"), "w", newline="") as fh:
            write_csv(fh, [r], not args.no_timing)
        results.append(r)
    ref = results[names.index("svd")] if "svd" in names else None
    print(f"{'solver':<10}{'setup_s':>12}{'eval_s':>12}{'total_s':>12}{'max_rel_loss_dev':>18}")
    for r in results:
        dev = np.max(np.abs(r.train_loss - ref.train_loss) / np.abs(ref.train_loss)) if ref is not None else math.nan
        print(f"{r.solver:<10}{r.setup_time:>12.4f}{float(np.sum(r.times)):>12.4f}{r.total_time:>12.4f}{dev:>18.3e}")
    return 0


def cmd_sketch_dim(args):
    ds = load_dataset(args)
    A, b = ds.A_train, ds.b_train
    n, d = A.shape
    try:
        cfg = AdaptiveConfig(epsilon=args.eps, m_initial=args.m_initial, m_cap=args.m_cap, max_iter=args.max_iter)
        m0 = n if args.sketch == "identity" else (args.m_initial or cfg.sizes(d)[0])
        template = SketchSpec(args.sketch, m0, n, args.sjlt_s, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = adaptive_sketch_dim(A, b, args.lambda_min, cfg, template)
    print(f"m={res.m} iterations={res.iterations} doublings={res.doublings}"
          + (" stalled_at_cap" if res.stalled_at_cap else ""))
    if d <= 2048:
        lam0 = math.sqrt(args.lambda_min * (args.lambda_max or args.lambda_min))
        print(f"d_e={effective_dimension(thin_svd(to_dense(A)).sigma, lam0):.6g} lambda0={lam0:.6g}")
    return 0


def cmd_gen_data(args):
    spec = parse_spec(args.gen_synthetic, SYNTH_DEFAULTS)
    n_test = None if spec["n_test"] < 0 else spec["n_test"]
    if args.test_out is None:
        n_test = 0
    ds = data.gen_synthetic(spec["n"], spec["d"], spec["alpha"], spec["sigma"], spec["seed"], n_test)
    with open(args.out, "w") as fh:
        data.write_libsvm(fh, ds.A_train, ds.b_train)
    if args.test_out:
        with open(args.test_out, "w") as fh:
            data.write_libsvm(fh, ds.A_test, ds.b_test)
    return 0


def cmd_kernel(args):
    F, y = _read_libsvm(args.data)
    Ft = yt = None
    if args.test_data:
        Ft, yt = _read_libsvm(args.test_data, F.shape[1])
        Ft = to_dense(Ft)
    F = to_dense(F)
    if args.rescale:
        F, Ft = data.rescale_jointly(F, Ft)
    ds = data.kernel_dataset(F, y, Ft, yt, args.bandwidth, not args.no_normalize)
    data.save_npz(args.out, ds)
    return 0


COMMANDS = {"path": cmd_path, "bench": cmd_bench, "sketch-dim": cmd_sketch_dim,
            "gen-data": cmd_gen_data, "kernel": cmd_kernel}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ridgepath: error: {exc}", file=sys.stderr)
        return EXIT_FLAGS
    except (DataFormatError, DimensionError, OSError) as exc:
        print(f"ridgepath: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalFailure as exc:
        print(f"ridgepath: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"ridgepath: error: {exc}", file=sys.stderr)
        return EXIT_FLAGS


if __name__ == "__main__":
    sys.exit(main())
