"""Report emission: rate fit, delimited outputs, and the rendered figure."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .harness import (DegenerateData, RateFit, RunRecord, fit_rate,
                      quantile_table, records_to_csv)
from .plotting import rate_figure


@dataclass(frozen=True)
class ReportPaths:
    records_csv: Path
    plot_csv: Path
    fit_csv: Path
    figure: Optional[Path]
    fit: Optional[RateFit]


def write_report(records: Sequence[RunRecord], out_dir, stem: str = "report",
                 make_figure: bool = True, title: Optional[str] = None,
                 expected_slope: Optional[float] = None) -> ReportPaths:
    """Write records.csv, the (n, q25, q50, q75) plot data, the fitted slope,
    and a log-log figure next to them."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records_csv = out / f"{stem}_records.csv"
    records_csv.write_text(records_to_csv(records))

    table = quantile_table(records)
    plot_csv = out / f"{stem}_plot.csv"
    with plot_csv.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "q25", "q50", "q75"])
        for row in table:
            writer.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3])])

    try:
        fit = fit_rate(records)
    except DegenerateData:
        fit = None
    fit_csv = out / f"{stem}_fit.csv"
    with fit_csv.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["slope", "intercept", "slope_lo", "slope_hi",
                         "n_budgets", "dropped_zero_budgets"])
        if fit is not None:
            writer.writerow([repr(fit.slope), repr(fit.intercept), repr(fit.slope_lo),
                             repr(fit.slope_hi), fit.n_budgets, fit.dropped_zero_budgets])

    figure = None
    if make_figure:
        figure = out / f"{stem}.png"
        rate_figure(table, fit, figure, title=title, expected_slope=expected_slope)
    return ReportPaths(records_csv=records_csv, plot_csv=plot_csv,
                       fit_csv=fit_csv, figure=figure, fit=fit)
