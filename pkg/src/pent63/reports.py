"""Rendering of tables and reports as text, JSON or CSV."""

import csv
import json
import logging
import sys
from collections.abc import Iterable, Sequence
from typing import Any, TextIO

from .config import OutputFormat
from .escalate import Table3Comparison
from .genusdata import Certificate, RowCheck
from .goodsets import CertificateReport, GoodSetReport, residue_image
from .models import format_tuple

logger = logging.getLogger(__name__)

TABLE12_COLUMNS = ("tuple", "type", "N_a", "s_a", "B_a", "E_set", "status")
TABLE3_COLUMNS = ("block", "tuple", "expected", "derived", "status")
TREE_COLUMNS = ("tuple", "status", "truant", "flags")


def format_set(values: Iterable[int]) -> str:
    return "{" + ",".join(str(v) for v in values) + "}"


def table12_row(cert: Certificate, check: RowCheck) -> dict[str, Any]:
    status = "PASS" if check.passed else "FAIL"
    if check.scaled:
        status += " (scaled)"
    return {
        "tuple": cert.label,
        "type": cert.type_class,
        "N_a": cert.N_a,
        "s_a": cert.s_a,
        "B_a": cert.B_a,
        "E_set": format_set(check.E_computed),
        "status": status,
        "limit": check.limit,
        "flags": list(check.flags),
        "failures": list(check.failures),
    }


def table3_row(row: Table3Comparison) -> dict[str, Any]:
    return {
        "block": row.block,
        "tuple": row.label,
        "expected": format_set(row.expected),
        "derived": format_set(row.derived),
        "status": row.status.upper(),
        "note": row.note,
    }


def certificate_summary(report: CertificateReport) -> dict[str, Any]:
    return {
        "tuple": report.label,
        "status": report.status,
        "certified": report.certified,
        "flags": list(report.flags),
        "failures": list(report.failures),
        "branches": [
            {
                "s": b.s,
                "n_min": b.n_min,
                "window": b.window,
                "width": round(b.width, 3),
                "minimal": b.minimal,
                "residue_image": b.residue_image,
                "uncovered": b.uncovered,
                "rselection": {
                    str(n): {"pair": list(pair), "step": step}
                    for n, (pair, step) in sorted(b.rselection.items())
                },
            }
            for b in report.branches
        ],
    }


def goodset_summary(report: GoodSetReport) -> dict[str, Any]:
    image, complete = residue_image(report.good_set)
    data = report.to_json()
    data["tuple"] = format_tuple(report.coeffs)
    data["residue_image"] = image
    data["complete"] = complete
    return data


class ReportWriter:
    """Writes rows or documents to the data stream in the configured format."""

    def __init__(self, fmt: OutputFormat = "text", stream: TextIO | None = None):
        self.fmt = fmt
        self.stream = stream or sys.stdout

    def rows(self, rows: Sequence[dict[str, Any]], columns: Sequence[str]) -> None:
        if self.fmt == "json":
            json.dump(list(rows), self.stream, indent=2, default=str)
            self.stream.write("\n")
        elif self.fmt == "csv":
            writer = csv.DictWriter(self.stream, fieldnames=list(columns), extrasaction="ignore")
            writer.writeheader()
            writer.writerows(rows)
        else:
            self._text_table(rows, columns)

    def _text_table(self, rows: Sequence[dict[str, Any]], columns: Sequence[str]) -> None:
        cells = [[str(row.get(c, "")) for c in columns] for row in rows]
        widths = [max([len(c), *(len(r[i]) for r in cells)]) for i, c in enumerate(columns)]
        self.stream.write("  ".join(c.ljust(w) for c, w in zip(columns, widths, strict=True)))
        self.stream.write("\n")
        for r in cells:
            self.stream.write("  ".join(v.ljust(w) for v, w in zip(r, widths, strict=True)))
            self.stream.write("\n")

    def document(self, data: dict[str, Any], columns: Sequence[str] | None = None) -> None:
        """A single record; CSV and text flatten its scalar fields."""
        if self.fmt == "json":
            json.dump(data, self.stream, indent=2, default=str)
            self.stream.write("\n")
            return
        keep = set(columns or ())
        flat = {k: v for k, v in data.items() if not isinstance(v, dict | list) or k in keep}
        if self.fmt == "csv":
            self.rows([flat], columns or list(flat))
            return
        for key, value in data.items():
            if isinstance(value, list) and value and isinstance(value[0], dict):
                self.stream.write(f"{key}:\n")
                for item in value:
                    self.stream.write(f"  - {json.dumps(item, default=str)}\n")
            else:
                self.stream.write(f"{key}: {value}\n")
