"""Command-line interface: ``gkpd decompose|reconstruct|analyze|verify``.

Exit codes: 0 ok, 1 verification failed, 2 I/O error, 3 shape or parameter
error, 4 numeric error, 5 empty configuration search.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import complexity, tensorfile
from .complexity import ConfigCandidate
from .decomposition import FactorShapePair, GkpdDecomposition, gkpd_solve, reconstruct
from .errors import NumericError, ParameterError, ShapeError
from .kronconv import ConvGeometry, MacCounter, conv2d_direct, kron_conv_sum_forward
from .report import TensorReport, json_report, text_report
from .tensor import frobenius_norm

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_IO = 2
EXIT_SHAPE = 3
EXIT_NUMERIC = 4
EXIT_EMPTY = 5

TOL_F64 = 1e-9
TOL_F32 = 1e-4


class _EmptySearch(Exception):
    pass


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _hw(text: str) -> tuple[int, int]:
    v = _ints(text)
    if len(v) == 1:
        return (v[0], v[0])
    if len(v) != 2:
        raise argparse.ArgumentTypeError(f"expected one or two integers, got {text!r}")
    return v


def _resolve_pair(shape, shape_a, shape_b) -> FactorShapePair:
    if shape_a is None and shape_b is None:
        raise ShapeError("give --shape-a and/or --shape-b")
    if shape_b is None:
        shape_a = tuple(shape_a)
        if len(shape_a) != len(shape):
            raise ShapeError(f"--shape-a has {len(shape_a)} entries, tensor has {len(shape)}")
        for n, (s, a) in enumerate(zip(shape, shape_a)):
            if a < 1 or s % a:
                raise ShapeError(f"dimension {n}: {a} does not divide {s}")
        shape_b = tuple(s // a for s, a in zip(shape, shape_a))
    pair = FactorShapePair.from_shape_b(shape, shape_b)
    if shape_a is not None and tuple(shape_a) != pair.shape_a:
        pair = FactorShapePair(tuple(shape_a), tuple(shape_b))
        pair.check(shape)
    return pair


def cmd_decompose(args) -> int:
    w, head = tensorfile.read_tensor(args.input)
    pair = _resolve_pair(w.shape, args.shape_a, args.shape_b)
    d = gkpd_solve(w, pair, args.rank)
    norm = frobenius_norm(w)
    row = replace(
        ConfigCandidate.build(pair, d.r_hat),
        error=d.achieved_error,
        relative_error=d.achieved_error / norm if norm > 0 else 0.0,
    )
    rep = [TensorReport(head.name, w.shape, norm, [row])]
    text = json_report(rep) if args.json else text_report(rep)
    out = Path(args.out)
    files = {}
    for r in range(d.r_hat):
        files[out / f"a_{r}.gkt"] = tensorfile.encode(d.factors_a[r], f"{head.name}.a{r}", head.dtype)
        files[out / f"b_{r}.gkt"] = tensorfile.encode(d.factors_b[r], f"{head.name}.b{r}", head.dtype)
    files[out / ("report.json" if args.json else "report.txt")] = text.encode()
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise tensorfile.TensorFileError(f"cannot create {out}: {exc}") from exc
    tensorfile.replace_atomically(files)
    sys.stdout.write(text)
    return EXIT_OK


def _load_factors(paths_a, paths_b) -> tuple[GkpdDecomposition, bool]:
    if len(paths_a) != len(paths_b) or not paths_a:
        raise ShapeError(f"need matching factor lists, got {len(paths_a)} A and {len(paths_b)} B")
    loaded_a = [tensorfile.read_tensor(p) for p in paths_a]
    loaded_b = [tensorfile.read_tensor(p) for p in paths_b]
    shapes_a = {a.shape for a, _ in loaded_a}
    shapes_b = {b.shape for b, _ in loaded_b}
    if len(shapes_a) != 1 or len(shapes_b) != 1:
        raise ShapeError("all A factors (and all B factors) must share one shape")
    single = any(h.dtype == "f32" for _, h in loaded_a + loaded_b)
    d = GkpdDecomposition.from_factors([a for a, _ in loaded_a], [b for b, _ in loaded_b])
    return d, single


def cmd_reconstruct(args) -> int:
    d, single = _load_factors(args.factors_a, args.factors_b)
    dtype = args.dtype or ("f32" if single else "f64")
    blob = tensorfile.encode(reconstruct(d), args.name, dtype)
    tensorfile.replace_atomically({Path(args.out): blob})
    return EXIT_OK


def cmd_analyze(args) -> int:
    reports = []
    for path in args.inputs:
        w, head = tensorfile.read_tensor(path)
        cands = complexity.enumerate_candidates(
            w.shape,
            min_flops_reduction=args.target_flops_reduction,
            r_hat_range=(1, args.r_hat_max),
            min_memory_reduction=args.min_compression,
        )
        if not cands:
            raise _EmptySearch(f"{path}: no configuration meets the requested reductions")
        sel = complexity.select_configuration(w, cands)
        reports.append(TensorReport(head.name, w.shape, frobenius_norm(w), sel.candidates))
    sys.stdout.write(json_report(reports) if args.json else text_report(reports))
    return EXIT_OK


def cmd_verify(args) -> int:
    w, wh = tensorfile.read_tensor(args.weights)
    x, xh = tensorfile.read_tensor(args.input)
    d, single = _load_factors(args.factors_a, args.factors_b)
    single = single or "f32" in (wh.dtype, xh.dtype)
    if tuple(d.target_shape) != w.shape:
        raise ShapeError(f"factors reconstruct to {d.target_shape}, weights are {w.shape}")
    if w.ndim != 4:
        raise ShapeError(f"weights must be 4-D (F,C,Kh,Kw), got {w.shape}")
    g = ConvGeometry(args.stride, args.padding)
    direct_count, kron_count = MacCounter(), MacCounter()
    y_kron = kron_conv_sum_forward(d, x, g, kron_count)
    y_weights = conv2d_direct(w, x, g, direct_count)
    y_rebuilt = conv2d_direct(reconstruct(d), x, g)
    dev_weights = float(np.max(np.abs(y_kron - y_weights)))
    dev_rebuilt = float(np.max(np.abs(y_kron - y_rebuilt)))
    tol = TOL_F32 if single else TOL_F64
    ok = dev_weights <= tol and dev_rebuilt <= tol
    print(f"max_abs_deviation_vs_weights {dev_weights:.9e}")
    print(f"max_abs_deviation_vs_reconstructed {dev_rebuilt:.9e}")
    print(f"tolerance {tol:.1e}")
    print(f"macs_direct {direct_count.total}")
    print(f"macs_kronecker {kron_count.total}")
    print(f"mac_ratio {direct_count.total / kron_count.total:.9e}")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gkpd", description="Kronecker product decomposition of tensors.")
    sub = p.add_subparsers(dest="command", required=True)

    dec = sub.add_parser("decompose", help="approximate a tensor by a sum of Kronecker products")
    dec.add_argument("input", help="tensor file")
    dec.add_argument("--shape-a", type=_ints, help="shape of factor A, e.g. 8,4,1,1")
    dec.add_argument("--shape-b", type=_ints, help="shape of factor B")
    dec.add_argument("--rank", "--r-hat", dest="rank", type=int, default=1, help="number of Kronecker terms")
    dec.add_argument("--out", required=True, help="output directory for factors and report")
    dec.add_argument("--json", action="store_true", help="write the report as JSON")
    dec.set_defaults(func=cmd_decompose)

    rec = sub.add_parser("reconstruct", help="sum Kronecker factors back into a tensor")
    rec.add_argument("--factors-a", nargs="+", required=True, help="A factor files, one per term")
    rec.add_argument("--factors-b", nargs="+", required=True, help="B factor files, same order as A")
    rec.add_argument("--out", required=True, help="output tensor file")
    rec.add_argument("--name", default="reconstructed", help="tensor name stored in the header")
    rec.add_argument("--dtype", choices=sorted(tensorfile.DTYPES), help="output dtype (default f32 if any factor is f32, else f64)")
    rec.set_defaults(func=cmd_reconstruct)

    ana = sub.add_parser("analyze", help="rank candidate configurations by reconstruction error")
    ana.add_argument("inputs", nargs="+", help="tensor files (4-D conv weights)")
    ana.add_argument("--target-flops-reduction", type=float, default=None, help="keep candidates with at least this MAC reduction")
    ana.add_argument("--min-compression", type=float, default=None, help="keep candidates with at least this parameter reduction")
    ana.add_argument("--r-hat-max", type=int, default=1, help="largest number of terms to try (default 1)")
    ana.add_argument("--json", action="store_true", help="emit the report as JSON")
    ana.set_defaults(func=cmd_analyze)

    ver = sub.add_parser("verify", help="check Kronecker convolution against direct convolution")
    ver.add_argument("--weights", required=True, help="original F x C x Kh x Kw weight file")
    ver.add_argument("--factors-a", nargs="+", required=True, help="A factor files, one per term")
    ver.add_argument("--factors-b", nargs="+", required=True, help="B factor files, same order as A")
    ver.add_argument("--input", required=True, help="C x H x W input tensor file")
    ver.add_argument("--stride", type=_hw, default=(1, 1), help="s or sh,sw (default 1)")
    ver.add_argument("--padding", type=_hw, default=(0, 0), help="p or ph,pw (default 0)")
    ver.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except tensorfile.TensorFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ShapeError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SHAPE
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _EmptySearch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY


if __name__ == "__main__":
    sys.exit(main())
