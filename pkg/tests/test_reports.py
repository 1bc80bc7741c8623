"""Tests for table rendering."""

import csv
import io
import json

from pent63.escalate import Table3Comparison
from pent63.genusdata import RowCheck, load
from pent63.goodsets import GoodSetComputer
from pent63.reports import (
    TABLE3_COLUMNS,
    TABLE12_COLUMNS,
    ReportWriter,
    format_set,
    goodset_summary,
    table3_row,
    table12_row,
)


def test_format_set():
    assert format_set([]) == "{}"
    assert format_set([9, 21, 31]) == "{9,21,31}"


def test_table12_row():
    check = RowCheck(label="(1,1,1,1)", scaled=True, limit=200, E_computed=[9, 21])
    row = table12_row(load((1, 1, 1, 1)), check)
    assert row["status"] == "PASS (scaled)"
    assert row["E_set"] == "{9,21}"
    assert (row["N_a"], row["s_a"], row["B_a"]) == (711, 2, 1)
    assert set(TABLE12_COLUMNS) <= set(row)


def test_table3_row():
    comparison = Table3Comparison(
        label="(1,1,3,4)",
        block="quinary",
        expected=[4, 5],
        derived=[4],
        status="erratum",
        note="bound",
    )
    row = table3_row(comparison)
    assert row["status"] == "ERRATUM"
    assert row["derived"] == "{4}"
    assert set(TABLE3_COLUMNS) <= set(row)


class TestReportWriter:
    rows = [
        {"tuple": "(1,1,1,2)", "status": "universal", "truant": None, "flags": ""},
        {"tuple": "(1,2,4,5)", "status": "non-universal", "truant": 13, "flags": "conjectural"},
    ]
    columns = ("tuple", "status", "truant", "flags")

    def test_text_table_is_aligned(self):
        out = io.StringIO()
        ReportWriter("text", out).rows(self.rows, self.columns)
        lines = out.getvalue().splitlines()
        assert lines[0].split() == list(self.columns)
        assert len(lines) == 3
        assert lines[1].index("universal") == lines[2].index("non-universal")

    def test_csv(self):
        out = io.StringIO()
        ReportWriter("csv", out).rows(self.rows, ("tuple", "truant"))
        parsed = list(csv.DictReader(io.StringIO(out.getvalue())))
        assert parsed == [
            {"tuple": "(1,1,1,2)", "truant": ""},
            {"tuple": "(1,2,4,5)", "truant": "13"},
        ]

    def test_json(self):
        out = io.StringIO()
        ReportWriter("json", out).rows(self.rows, self.columns)
        assert json.loads(out.getvalue()) == self.rows

    def test_document_text_lists_nested_records(self):
        out = io.StringIO()
        ReportWriter("text", out).document({"tuple": "(1,1,1,4)", "branches": [{"s": 1}]})
        assert out.getvalue() == 'tuple: (1,1,1,4)\nbranches:\n  - {"s": 1}\n'

    def test_document_csv_drops_nested_fields(self):
        out = io.StringIO()
        ReportWriter("csv", out).document({"tuple": "(1,1,1,4)", "N": 9, "x": [1, 2]})
        assert out.getvalue().splitlines() == ["tuple,N", '"(1,1,1,4)",9']


def test_goodset_summary():
    summary = goodset_summary(GoodSetComputer().compute((1, 2, 2, 3), 2))
    assert summary["tuple"] == "(1,2,2,3)"
    assert summary["residue_image"] == [0]
    assert summary["complete"] is True
    assert summary["good_set"]["pairs"] == [[0, 1], [1, 1]]
