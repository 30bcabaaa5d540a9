"""
Human-readable tables and structured report files.

Tables are fixed-width text for terminals; structured reports are one JSON
object per line so they can be diffed and streamed.
"""

import logging
import math
from pathlib import Path
from typing import TextIO

import numpy as np
import pandas as pd

from sharedsr.models.dataset import Dataset
from sharedsr.models.expression import Expression
from sharedsr.models.schemas import (
    CandidateRecord,
    FitReport,
    IdentifiabilityReport,
    ParameterValue,
    ProcessionRow,
    SearchReportHeader,
)
from sharedsr.services.fitting import FitResult, predict, r_squared
from sharedsr.services.search import Candidate, ParetoReport
from sharedsr.services.serialization import to_string

logger = logging.getLogger(__name__)


def _format_r2(value: float | None) -> str:
    return "undefined" if value is None else f"{value:.6f}"


def parameter_values(expr: Expression, fit: FitResult) -> list[ParameterValue]:
    return [ParameterValue(label=label, value=v) for label, v in fit.binding.labeled(expr)]


def build_fit_report(expr: Expression, fit: FitResult, identifiable: bool) -> FitReport:
    return FitReport(
        expression=to_string(expr),
        sse=fit.sse,
        r_squared=fit.r_squared,
        n_iterations=fit.n_iterations,
        converged=fit.converged,
        identifiable=identifiable,
        parameters=parameter_values(expr, fit),
    )


def format_fit_report(report: FitReport) -> str:
    """Expression, fit statistics and one ``label = value`` line per individual parameter."""
    lines = [
        f"expression: {report.expression}",
        f"sse:        {report.sse:.6g}",
        f"R^2:        {_format_r2(report.r_squared)}",
        f"iterations: {report.n_iterations} ({'converged' if report.converged else 'not converged'})",
        f"identifiable: {'yes' if report.identifiable else 'no'}",
        "",
        f"parameters ({len(report.parameters)}):",
    ]
    width = max((len(p.label) for p in report.parameters), default=0)
    lines += [f"  {p.label.ljust(width)} = {p.value:.10g}" for p in report.parameters]
    return "\n".join(lines)


def format_check_report(report: IdentifiabilityReport) -> str:
    """Cell-count table, shortfalls and the yes/no verdict."""
    names = list(report.cell_counts)
    width = max(3, *(len(n) for n in names), *(len(str(c)) for c in report.cell_counts.values()))
    header = " ".join(n.rjust(width) for n in names)
    counts = " ".join(str(report.cell_counts[n]).rjust(width) for n in names)
    lines = [
        header,
        counts,
        "",
        f"surplus demand:   {report.total_demand}",
        f"surplus supplied: {report.total_supplied}",
    ]
    for shortfall in report.shortfalls:
        lines.append(
            f"  short {shortfall.missing} of {shortfall.demand}: {shortfall.requirement}"
        )
    lines.append(f"req: {'yes' if report.feasible else 'no'}")
    return "\n".join(lines)


def held_out_r_squared(candidate: Candidate, test: Dataset | None) -> float | None:
    """R^2 of a candidate on held-out rows; None when undefined or not finite."""
    if test is None or test.n_rows == 0 or candidate.binding is None:
        return None
    prediction = predict(candidate.expression, candidate.binding, test)
    if not np.all(np.isfinite(prediction)):
        return None
    value = r_squared(test.target, prediction)
    return value if value is not None and math.isfinite(value) else None


def format_pareto_table(report: ParetoReport, test: Dataset | None = None) -> str:
    """Archive sorted by complexity with columns expression, R^2, complexity and k."""
    rows = []
    for candidate in report.sorted_by_complexity():
        train_r2 = candidate.fit.r_squared if candidate.fit is not None else None
        row = [
            to_string(candidate.expression),
            _format_r2(train_r2),
            str(candidate.complexity),
            str(candidate.n_parameters),
        ]
        if test is not None:
            row.append(_format_r2(held_out_r_squared(candidate, test)))
        rows.append(row)
    header = ["expression", "R^2", "complexity", "k"]
    if test is not None:
        header.append("test R^2")
    widths = [max([len(h), *(len(r[i]) for r in rows)]) for i, h in enumerate(header)]
    lines = [
        "  ".join(
            cell.ljust(w) if i == 0 else cell.rjust(w)
            for i, (cell, w) in enumerate(zip(line, widths, strict=True))
        )
        for line in [header, *rows]
    ]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def candidate_records(report: ParetoReport, test: Dataset | None = None) -> list[CandidateRecord]:
    records = []
    for candidate in report.sorted_by_complexity():
        assert candidate.fit is not None
        records.append(
            CandidateRecord(
                expression=to_string(candidate.expression),
                loss=candidate.loss,
                complexity=candidate.complexity,
                n_parameters=candidate.n_parameters,
                r_squared=candidate.fit.r_squared,
                test_r_squared=held_out_r_squared(candidate, test),
                parameters=parameter_values(candidate.expression, candidate.fit),
                seed=report.config.seed,
            )
        )
    return records


def write_search_report(
    out: TextIO, report: ParetoReport, train: Dataset, test: Dataset | None = None
) -> int:
    """
    Write a header line followed by one line per archived candidate.

    Only counters and gauges of the run metrics go into the header, so equal
    runs produce identical files.

    Returns:
        Number of candidate records written.
    """
    header = SearchReportHeader(
        seed=report.config.seed,
        config=report.config,
        n_rows=train.n_rows,
        n_test_rows=test.n_rows if test is not None else 0,
        categories={c.name: list(c.values) for c in report.schema.categories},
        metrics={
            "counters": report.metrics.get("counters", {}),
            "gauges": report.metrics.get("gauges", {}),
        },
    )
    out.write(header.model_dump_json() + "\n")
    records = candidate_records(report, test)
    for record in records:
        out.write(record.model_dump_json() + "\n")
    return len(records)


def procession_frame(rows: list[ProcessionRow]) -> pd.DataFrame:
    """Table-style log: ID, one column per cell, mse_test and req."""
    return pd.DataFrame(
        [
            {
                "ID": row.row_id,
                **row.cell_counts,
                "mse_test": "N/A" if row.mse_test is None else f"{row.mse_test:.3e}",
                "req": "yes" if row.feasible else "no",
            }
            for row in rows
        ]
    )


def write_procession_log(rows: list[ProcessionRow], out: str | Path | TextIO) -> None:
    procession_frame(rows).to_csv(out, index=False, lineterminator="\n")
