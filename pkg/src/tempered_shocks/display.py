"""
Display module for tempered-shocks.

This module contains the rendering used by the IPython magic:
- Environment detection (notebook vs terminal)
- Output tables and Monte Carlo reports as HTML or plain text
"""

import html

from IPython.display import HTML, display

# Rows shown before a long table is elided in the middle
MAX_DISPLAY_ROWS = 40


def is_notebook_environment():
    """Detect if running in a graphical notebook environment vs plain IPython.

    Returns:
        bool: True if in a notebook with display capabilities, False for plain IPython
    """
    try:
        from IPython import get_ipython

        ipython = get_ipython()
        if ipython is None:
            return False

        # TerminalInteractiveShell is plain IPython; anything else can render HTML
        return type(ipython).__name__ != "TerminalInteractiveShell"
    except Exception:
        return False


def format_number(value):
    """Short human-readable form of a table cell."""
    if isinstance(value, int):
        return f"{value:,}"
    value = float(value)
    if value == 0 or 1e-4 <= abs(value) < 1e6:
        return f"{value:.10g}"
    return f"{value:.6e}"


def _visible_rows(rows):
    """Rows to show, with None marking the elided middle."""
    if len(rows) <= MAX_DISPLAY_ROWS:
        return list(rows)
    half = MAX_DISPLAY_ROWS // 2
    return list(rows[:half]) + [None] + list(rows[-half:])


def display_table_plain_text(table):
    """Print an OutputTable as an aligned text table.

    Args:
        table: OutputTable
    """
    cells = [
        None if row is None else [format_number(value) for value in row] for row in _visible_rows(table.rows)
    ]
    widths = [len(name) for name in table.columns]
    for row in cells:
        if row is not None:
            widths = [max(width, len(cell)) for width, cell in zip(widths, row)]
    rule = "-" * (sum(widths) + 3 * (len(widths) - 1))

    print("\n" + "=" * len(rule))
    print(table.name or "Results")
    print("=" * len(rule))
    print(" | ".join(name.rjust(width) for name, width in zip(table.columns, widths)))
    print(rule)
    for row in cells:
        if row is None:
            print(f"... {len(table.rows) - MAX_DISPLAY_ROWS} rows omitted ...")
            continue
        print(" | ".join(cell.rjust(width) for cell, width in zip(row, widths)))
    print("=" * len(rule))


_STYLE = """
    <style>
        .shocks-table {
            border-collapse: collapse;
            margin: 10px 0;
            font-family: monospace;
            font-size: 14px;
        }
        .shocks-table td, .shocks-table th {
            padding: 6px 12px;
            border: 1px solid #ddd;
            text-align: right;
        }
        .shocks-table th {
            background-color: #f5f5f5;
            font-weight: bold;
        }
        .shocks-fail {
            color: #cc0000;
            font-weight: bold;
        }
        .shocks-warning {
            color: #ff6600;
            font-size: 12px;
            margin-top: 5px;
        }
    </style>
"""


def display_table_html(table):
    """Display an OutputTable as an HTML table.

    Args:
        table: OutputTable
    """
    header = "".join(f"<th>{html.escape(name)}</th>" for name in table.columns)
    body = []
    for row in _visible_rows(table.rows):
        if row is None:
            omitted = len(table.rows) - MAX_DISPLAY_ROWS
            body.append(f'<tr><td colspan="{len(table.columns)}">… {omitted} rows omitted …</td></tr>')
            continue
        body.append("<tr>" + "".join(f"<td>{format_number(value)}</td>" for value in row) + "</tr>")
    title = html.escape(table.name or "Results")
    display(
        HTML(
            f"{_STYLE}<div><table class='shocks-table'><caption>{title}</caption>"
            f"<tr>{header}</tr>{''.join(body)}</table></div>"
        )
    )


def display_report_plain_text(report):
    """Print a SimReport: one line per comparison and the overall verdict.

    Args:
        report: SimReport
    """
    print("\n" + "=" * 70)
    paths, seed = report.config["paths"], report.config["seed"]
    print(f"Monte Carlo check: {report.quantity} ({paths:,} paths, seed {seed})")
    print("=" * 70)
    print(f"{'Quantity':<24} {'analytic':>12} {'estimate':>12} {'stderr':>10} {'z':>7}")
    print("-" * 70)
    for record in report.records:
        flag = "" if record.passed else "  ❌"
        print(
            f"{record.name:<24} {record.analytic:>12.6g} {record.estimate:>12.6g} "
            f"{record.stderr:>10.3g} {record.z:>7.2f}{flag}"
        )
    print("-" * 70)
    print(f"{'Runtime:':<24} {report.runtime:.2f} seconds")
    print(f"{'Verdict:':<24} {'pass' if report.passed else 'FAIL'}")
    print("=" * 70)

    censored = report.diagnostics.get("censored_fraction", 0.0)
    if censored:
        print(f"\n⚠️  {100 * censored:.2f}% of paths were censored at the horizon.\n")


def display_report_html(report):
    """Display a SimReport as an HTML table.

    Args:
        report: SimReport
    """
    rows = []
    for record in report.records:
        css = "" if record.passed else " class='shocks-fail'"
        rows.append(
            f"<tr{css}><td style='text-align:left'>{html.escape(record.name)}</td>"
            f"<td>{record.analytic:.6g}</td><td>{record.estimate:.6g}</td>"
            f"<td>{record.stderr:.3g}</td><td>{record.z:.2f}</td></tr>"
        )
    verdict = "pass" if report.passed else "FAIL"
    html_text = (
        f"{_STYLE}<div><table class='shocks-table'>"
        f"<caption>Monte Carlo check: {html.escape(report.quantity)} "
        f"({report.config['paths']:,} paths, seed {report.config['seed']})</caption>"
        "<tr><th>Quantity</th><th>analytic</th><th>estimate</th><th>stderr</th><th>z</th></tr>"
        f"{''.join(rows)}"
        f"<tr><td style='text-align:left'><strong>Verdict</strong></td>"
        f"<td colspan='4'><strong>{verdict}</strong> in {report.runtime:.2f} seconds</td></tr>"
        "</table>"
    )
    censored = report.diagnostics.get("censored_fraction", 0.0)
    if censored:
        html_text += (
            f"<div class='shocks-warning'>⚠️ {100 * censored:.2f}% of paths were censored "
            "at the horizon.</div>"
        )
    display(HTML(html_text + "</div>"))


def display_results(result):
    """Display a command result in the format that suits the environment.

    Args:
        result: CommandResult from the command-line layer
    """
    notebook = is_notebook_environment()
    for table in result.tables:
        if notebook:
            display_table_html(table)
        else:
            display_table_plain_text(table)
    if result.report is not None:
        if notebook:
            display_report_html(result.report)
        else:
            display_report_plain_text(result.report)
