"""Regenerate the frozen tensor files and reports under tests/data.

Run once from the repository root:  python tests/data/make_goldens.py
The outputs are committed; tests compare against them byte for byte.
"""

import contextlib
import io
from pathlib import Path

import numpy as np

from gkpd.cli import main
from gkpd.tensorfile import write_tensor

HERE = Path(__file__).parent

GOLDEN_SHAPES = [(8, 4, 3, 3), (16, 8, 3, 3), (6, 6, 5, 5)]
BUNDLE_SHAPES = [
    (16, 8, 3, 3),
    (8, 8, 3, 3),
    (16, 4, 3, 3),
    (32, 16, 1, 1),
    (12, 6, 5, 5),
    (8, 16, 3, 3),
    (24, 12, 3, 3),
    (16, 16, 1, 1),
    (4, 8, 5, 5),
    (16, 8, 3, 1),
]

GOLDEN_ARGS = ["--target-flops-reduction", "2", "--r-hat-max", "3"]
BUNDLE_ARGS = ["--min-compression", "4", "--r-hat-max", "4"]


def run(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(argv)
    assert code == 0, code
    return buf.getvalue()


def generate():
    (HERE / "golden").mkdir(exist_ok=True)
    (HERE / "bundle").mkdir(exist_ok=True)
    golden = []
    for seed, shape in enumerate(GOLDEN_SHAPES):
        path = HERE / "golden" / f"t{seed}.gkt"
        write_tensor(path, np.random.default_rng(seed).standard_normal(shape), f"golden{seed}")
        golden.append(str(path))
    bundle = []
    for seed, shape in enumerate(BUNDLE_SHAPES):
        path = HERE / "bundle" / f"conv{seed}.gkt"
        write_tensor(path, np.random.default_rng(1000 + seed).standard_normal(shape), f"conv{seed}")
        bundle.append(str(path))
    for i, path in enumerate(golden):
        (HERE / "golden" / f"t{i}.report.txt").write_text(run(["analyze", path, *GOLDEN_ARGS]))
    (HERE / "golden" / "all.report.json").write_text(run(["analyze", *golden, *GOLDEN_ARGS, "--json"]))
    (HERE / "bundle" / "report.txt").write_text(run(["analyze", *bundle, *BUNDLE_ARGS]))


if __name__ == "__main__":
    generate()
