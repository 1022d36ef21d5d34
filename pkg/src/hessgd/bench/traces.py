"""CSV traces and the per-run summary table."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path

from ..errors import ParseError
from ..scaling import Flag
from ..trace import IterateRecord, Trace

HEADER = ["k", "f", "gnorm", "s", "alpha", "flag", "ls_trials", "units"]
OPTIONAL = ["wolfe", "sod_ratio"]


def fmt_real(x: float) -> str:
    """17 significant digits: enough to round-trip any float64."""
    return format(float(x), ".17g")


def _columns(records, wolfe: bool | None, second_order: bool | None):
    cols = list(HEADER)
    if wolfe is None:
        wolfe = any(r.wolfe_eta_holds is not None for r in records)
    if second_order is None:
        second_order = False
    if wolfe:
        cols.append("wolfe")
    if second_order:
        cols.append("sod_ratio")
    return cols


def _cell(rec: IterateRecord, col: str) -> str:
    if col == "flag":
        return rec.flag.value
    if col in ("k", "ls_trials"):
        return str(int(getattr(rec, col)))
    if col == "wolfe":
        return "" if rec.wolfe_eta_holds is None else str(int(rec.wolfe_eta_holds))
    if col == "sod_ratio":
        return "" if rec.sod_ratio is None else fmt_real(rec.sod_ratio)
    return fmt_real(getattr(rec, col))


def emit_trace(trace: Trace | list[IterateRecord], path, *, wolfe=None, second_order=None) -> Path:
    """Write one row per logged iterate. Extra diagnostic columns follow the fixed eight."""
    records = trace.records if isinstance(trace, Trace) else list(trace)
    path = Path(path)
    cols = _columns(records, wolfe, second_order)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for rec in records:
                w.writerow([_cell(rec, c) for c in cols])
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write trace: {exc.strerror}", str(path)) from exc
    return path


def read_trace(path) -> list[IterateRecord]:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][: len(HEADER)] != HEADER:
        raise ParseError(f"{path}: unexpected header", 1)
    cols = rows[0]
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(cols):
            raise ParseError(f"{path}: expected {len(cols)} fields", lineno)
        cell = dict(zip(cols, row))
        try:
            rec = IterateRecord(
                int(cell["k"]),
                float(cell["f"]),
                float(cell["gnorm"]),
                float(cell["s"]),
                float(cell["alpha"]),
                Flag(cell["flag"]),
                int(cell["ls_trials"]),
                float(cell["units"]),
            )
            if cell.get("wolfe"):
                rec.wolfe_eta_holds = bool(int(cell["wolfe"]))
            if cell.get("sod_ratio"):
                rec.sod_ratio = float(cell["sod_ratio"])
        except ValueError as exc:
            raise ParseError(f"{path}: {exc}", lineno) from None
        out.append(rec)
    return out


@dataclass
class SummaryRow:
    """One line of ``summary.csv``.

    ``unit_step_rate`` is the share of line-search steps that accepted the
    first trial at ``alpha = 1``; ``backtracks`` averages ``ls_trials - 1``
    over those steps. Both are NaN for methods without a line search.
    """

    method: str
    seed: int
    status: str
    final_f: float
    final_gnorm: float
    iterations: int
    units: float
    unit_step_rate: float
    spc: int
    lpc: int
    nc: int
    backtracks: float


SUMMARY_HEADER = [f.name for f in fields(SummaryRow)]


def summarize(records: list[IterateRecord], method: str, seed: int, status: str, terminal: bool = True) -> SummaryRow:
    steps = records[:-1] if terminal else list(records)
    searched = [r for r in steps if r.ls_trials > 0]
    if searched:
        rate = sum(1 for r in searched if r.ls_trials == 1 and r.alpha == 1.0) / len(searched)
        back = sum(r.ls_trials - 1 for r in searched) / len(searched)
    else:
        rate = back = math.nan
    last = records[-1] if records else None
    return SummaryRow(
        method=method,
        seed=seed,
        status=str(status),
        final_f=last.f if last else math.nan,
        final_gnorm=last.gnorm if last else math.nan,
        iterations=len(steps),
        units=last.units if last else 0.0,
        unit_step_rate=rate,
        spc=sum(1 for r in steps if r.flag is Flag.SPC),
        lpc=sum(1 for r in steps if r.flag is Flag.LPC),
        nc=sum(1 for r in steps if r.flag is Flag.NC),
        backtracks=back,
    )


def write_summary(rows: list[SummaryRow], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for r in rows:
            out = []
            for name in SUMMARY_HEADER:
                v = getattr(r, name)
                out.append(fmt_real(v) if isinstance(v, float) else str(v))
            w.writerow(out)
    return path


def read_summary(path) -> list[SummaryRow]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for d in reader:
            rows.append(
                SummaryRow(
                    d["method"], int(d["seed"]), d["status"], float(d["final_f"]), float(d["final_gnorm"]),
                    int(d["iterations"]), float(d["units"]), float(d["unit_step_rate"]),
                    int(d["spc"]), int(d["lpc"]), int(d["nc"]), float(d["backtracks"]),
                )
            )
    return rows
