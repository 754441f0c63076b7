"""Deterministic text and JSON reports of candidate configurations.

JSON fields (``--json``)::

    format            "gkpd-report"
    version           report format version (int)
    tool              "gkpd <package version>"
    tensors[]         one entry per analysed tensor
      name, shape     tensor name and shape
      norm            Frobenius norm of the tensor
      candidates[]    rows in selection order (best first)
        shape_a, shape_b, r_hat, params
        compression       memory reduction (float)
        flops_reduction   MAC reduction per output position (float)
        error             absolute Frobenius reconstruction error
        relative_error    error / norm
        chosen            true for exactly one row

Floats are printed with 10 significant digits so reports stay byte-identical
across runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import __version__
from .complexity import ConfigCandidate

REPORT_FORMAT = "gkpd-report"
REPORT_VERSION = 1
TOOL = f"gkpd {__version__}"


def _num(x: float) -> str:
    return f"{float(x):.9e}"


def _shape(s) -> str:
    return ",".join(str(int(v)) for v in s)


@dataclass(frozen=True)
class TensorReport:
    name: str
    shape: tuple[int, ...]
    norm: float
    rows: list[ConfigCandidate]  # best first


def text_report(reports: list[TensorReport]) -> str:
    lines = [f"# {REPORT_FORMAT} v{REPORT_VERSION} ({TOOL})"]
    for rep in reports:
        lines.append(f"tensor {rep.name} shape={_shape(rep.shape)} norm={_num(rep.norm)}")
        lines.append("chosen shape_a shape_b r_hat params compression flops_reduction relative_error")
        for i, c in enumerate(rep.rows):
            lines.append(
                " ".join(
                    [
                        "*" if i == 0 else "-",
                        _shape(c.pair.shape_a),
                        _shape(c.pair.shape_b),
                        str(c.r_hat),
                        str(c.params),
                        _num(c.memory_reduction),
                        _num(c.flops_reduction),
                        _num(c.relative_error),
                    ]
                )
            )
    return "\n".join(lines) + "\n"


def json_report(reports: list[TensorReport]) -> str:
    doc = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "tool": TOOL,
        "tensors": [
            {
                "name": rep.name,
                "shape": list(rep.shape),
                "norm": float(_num(rep.norm)),
                "candidates": [
                    {
                        "shape_a": list(c.pair.shape_a),
                        "shape_b": list(c.pair.shape_b),
                        "r_hat": c.r_hat,
                        "params": c.params,
                        "compression": float(_num(c.memory_reduction)),
                        "flops_reduction": float(_num(c.flops_reduction)),
                        "error": float(_num(c.error)),
                        "relative_error": float(_num(c.relative_error)),
                        "chosen": i == 0,
                    }
                    for i, c in enumerate(rep.rows)
                ],
            }
            for rep in reports
        ],
    }
    return json.dumps(doc, indent=1) + "\n"
