"""
Command-line front end: ``tempered-shocks <command> [flags]``.

Commands:
    pmf          joint pmf table for k1 + k2 <= max-h
    reliability  reliability of the failure time on a t-grid
    hazard       transition rate of the shock streams on a t-grid
    simulate     Monte Carlo comparison report (JSON)
    figures      reliability curves of the mixed-geometric closed forms (CSV files)

Threshold and subordinator arguments use a ``name:key=value,key=value`` grammar, e.g.
``geometric:p=0.3``, ``yule-simon:rho=1.5``, ``empirical:q=0.2/0.3/0.5``,
``mixture:uniform``, ``mixture:lomax,a=2,b=-0.5``, ``tempered-stable:alpha=0.7,theta=1``.
"""

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import config
from .errors import DomainError, ParameterError, ShockModelError
from .montecarlo import SimConfig, estimate_failure_law, estimate_pmf, estimate_subordinator_laplace
from .process import (
    PMF_ROUTES,
    BivariateCount,
    ProcessParams,
    SubordinatedPoisson,
    btsfpp_pmf,
)
from .shock import (
    MIXING_LAWS,
    RELIABILITY_ROUTES,
    SEMANTICS,
    THRESHOLDS,
    GeometricMixture,
    TruncatedLomax,
    TruncatedWeibull,
    UniformMixing,
    YuleSimon,
    geometric_success,
    hazard_rate,
    hazard_rate_closed,
    reliability,
    reliability_general_geometric,
    reliability_lomax_closed,
    reliability_mixture,
    reliability_uniform_closed,
    reliability_weibull_closed,
    reliability_yule_simon,
)
from .subordinator import SUBORDINATORS

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")
HAZARD_T_GRID = "0.05:5:100"
FIGURE_ALPHAS = (0.2, 0.4, 0.6, 0.8)
FIGURE_THETAS = (0.5, 1.0, 2.0, 5.0)
FIGURE_FORMS = {1: reliability_uniform_closed, 2: reliability_lomax_closed, 3: reliability_weibull_closed}


# ---------------------------------------------------------------------------
# Output tables
# ---------------------------------------------------------------------------


def _format_value(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), f".{config.CSV_DIGITS}g")


def _parse_value(token):
    try:
        return int(token)
    except ValueError:
        return float(token)


@dataclass
class OutputTable:
    """Rectangular numeric table emitted as CSV or JSON.

    Attributes:
        columns: Column names
        rows: List of rows, each with one value per column
        name: Optional label (file stem for multi-table commands)
    """

    columns: tuple
    rows: list = field(default_factory=list)
    name: str = ""

    def __post_init__(self):
        self.columns = tuple(self.columns)
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ParameterError(f"row {row!r} does not match columns {self.columns}")

    def append(self, *values):
        """Add one row."""
        if len(values) != len(self.columns):
            raise ParameterError(f"row {values!r} does not match columns {self.columns}")
        self.rows.append(tuple(values))

    def column(self, name):
        """Values of one column as a list."""
        index = self.columns.index(name)
        return [row[index] for row in self.rows]

    def to_csv(self):
        """CSV text with a header row, 17 significant digits and newline-terminated rows."""
        lines = [",".join(self.columns)]
        lines.extend(",".join(_format_value(value) for value in row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def to_json(self):
        """JSON object with ``columns`` and ``rows``."""
        rows = [[_parse_value(_format_value(value)) for value in row] for row in self.rows]
        text = json.dumps({"name": self.name, "columns": list(self.columns), "rows": rows}, indent=2)
        return text + "\n"

    def render(self, fmt):
        """Text in the requested format."""
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ParameterError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")

    @classmethod
    def from_csv(cls, text, name=""):
        """Parse CSV written by ``to_csv``; integers stay integers."""
        lines = text.splitlines()
        if not lines:
            raise ParameterError("empty CSV text")
        columns = tuple(lines[0].split(","))
        rows = [tuple(_parse_value(token) for token in line.split(",")) for line in lines[1:]]
        return cls(columns, rows, name)


@dataclass
class CommandResult:
    """What a command produced: tables, and a SimReport for ``simulate``."""

    tables: list
    report: object = None


# ---------------------------------------------------------------------------
# Spec strings
# ---------------------------------------------------------------------------


def _spec_value(text):
    if "/" in text:
        return tuple(float(part) for part in text.split("/"))
    return float(text)


def parse_spec(text):
    """Split ``name:key=value,...`` into (name, positional items, keyword dict)."""
    name, _, rest = text.strip().partition(":")
    positional, keywords = [], {}
    for item in filter(None, (part.strip() for part in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            positional.append(key)
            continue
        try:
            keywords[key.strip().replace("-", "_")] = _spec_value(value.strip())
        except ValueError as e:
            raise ParameterError(f"bad value {value!r} for {key!r} in spec {text!r}") from e
    return name.strip(), positional, keywords


def _construct(cls, keywords, text):
    try:
        return cls(**keywords)
    except TypeError as e:
        raise ParameterError(f"bad parameters in spec {text!r}: {e}") from e


def build_threshold(text, process=None):
    """ThresholdDist from a spec string.

    ``mixture:lomax`` and ``mixture:weibull`` without parameters take the values tied to
    ``process`` by the closed forms (a = Lambda/theta, b = alpha - 1 and a = 1/Lambda,
    b = alpha, c = -theta/Lambda).
    """
    name, positional, keywords = parse_spec(text)
    if name not in THRESHOLDS:
        raise ParameterError(f"unknown threshold {name!r}; expected one of {', '.join(THRESHOLDS)}")
    if name == "empirical":
        probs = keywords.pop("q", None)
        if probs is None or keywords:
            raise ParameterError(f"empirical threshold needs exactly q=q1/q2/..., got {text!r}")
        return THRESHOLDS[name](probs if isinstance(probs, tuple) else (probs,))
    if name != "mixture":
        return _construct(THRESHOLDS[name], keywords, text)

    law = positional[0] if positional else keywords.pop("law", None)
    if law not in MIXING_LAWS:
        raise ParameterError(f"unknown mixing law {law!r}; expected one of {', '.join(MIXING_LAWS)}")
    if not keywords and isinstance(process, ProcessParams):
        keywords = _tied_mixing_parameters(law, process)
    return GeometricMixture(_construct(MIXING_LAWS[law], keywords, text))


def _tied_mixing_parameters(law, p):
    if law == "lomax" and p.theta > 0:
        return {"a": p.total_rate / p.theta, "b": p.alpha - 1.0}
    if law == "weibull":
        return {"a": 1.0 / p.total_rate, "b": p.alpha, "c": -p.theta / p.total_rate}
    return {}


def build_subordinator(text):
    """SubordinatorSpec from a spec string."""
    name, positional, keywords = parse_spec(text)
    if name not in SUBORDINATORS or positional:
        raise ParameterError(f"unknown subordinator {text!r}; expected one of {', '.join(SUBORDINATORS)}")
    return _construct(SUBORDINATORS[name], keywords, text)


def parse_grid(text):
    """``start:stop:steps`` to an array of ``steps`` evenly spaced points."""
    try:
        start, stop, steps = text.split(":")
        start, stop, steps = float(start), float(stop), int(steps)
    except ValueError as e:
        raise ParameterError(f"grid must look like start:stop:steps, got {text!r}") from e
    if steps < 1 or stop < start:
        raise ParameterError(f"grid needs steps >= 1 and stop >= start, got {text!r}")
    return np.linspace(start, stop, steps)


def parse_list(text):
    """Comma-separated floats."""
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ParameterError(f"expected comma-separated numbers, got {text!r}") from e


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _params(args):
    return ProcessParams(args.alpha, args.theta, args.lambda1, args.lambda2)


def _process(args):
    """ProcessParams, or a SubordinatedPoisson when --subordinator is given."""
    if getattr(args, "subordinator", None):
        return SubordinatedPoisson(build_subordinator(args.subordinator), args.lambda1, args.lambda2)
    return _params(args)


def cmd_pmf(args):
    """Joint pmf table (k1, k2, probability[, difference])."""
    p = _params(args)
    if not args.t > 0:
        raise DomainError(f"--t must be > 0 for the series routes, got {args.t}")
    if args.route != "both":
        table = OutputTable(("k1", "k2", "probability"), name="pmf")
        for h in range(args.max_h + 1):
            for k in BivariateCount.diagonal(h):
                table.append(k.k1, k.k2, btsfpp_pmf(p, k, args.t, route=args.route))
        return CommandResult([table])

    wright = "wright"
    if p.theta >= p.total_rate:
        logger.debug("theta >= Lambda: comparing against the resummed Wright form")
        wright = "resummed"
    table = OutputTable(("k1", "k2", "probability", "difference"), name="pmf")
    for h in range(args.max_h + 1):
        for k in BivariateCount.diagonal(h):
            derivative = btsfpp_pmf(p, k, args.t, route="derivative")
            series = btsfpp_pmf(p, k, args.t, route=wright)
            table.append(k.k1, k.k2, derivative, abs(derivative - series))
    return CommandResult([table])


def reliability_routes(process, d):
    """Available reliability evaluations for (process, d) as {name: fn(t)}."""
    routes = {"series": lambda t: reliability(process, d, t)}
    model_rates = (process.lambda1, process.lambda2)
    clock = process.subordinator() if isinstance(process, ProcessParams) else process.subordinator

    success = geometric_success(d)
    if success is not None:
        routes["closed"] = lambda t: reliability_general_geometric(clock, *model_rates, success, t)
    elif isinstance(d, YuleSimon):
        routes["closed"] = lambda t: reliability_yule_simon(process, d.rho, t)
    elif isinstance(d, GeometricMixture):
        routes["quadrature"] = lambda t: reliability_mixture(clock, *model_rates, d.mixing, t)
        closed = _mixture_closed_form(process, d.mixing)
        if closed is not None:
            routes["closed"] = lambda t: closed(process, t)
    return routes


def _mixture_closed_form(process, mixing):
    if not isinstance(process, ProcessParams) or not 0 < process.alpha < 1:
        return None
    if isinstance(mixing, UniformMixing) and process.theta > 0:
        return reliability_uniform_closed
    tied = _tied_mixing_parameters(mixing.name, process)
    matches = bool(tied) and all(math.isclose(getattr(mixing, key), value) for key, value in tied.items())
    if isinstance(mixing, TruncatedLomax) and matches:
        return reliability_lomax_closed
    if isinstance(mixing, TruncatedWeibull) and matches:
        return reliability_weibull_closed
    return None


def cmd_reliability(args):
    """Reliability table (t, reliability[, alternative routes, max difference])."""
    process = _process(args)
    d = build_threshold(args.threshold, process)
    grid = parse_grid(args.t_grid)
    routes = reliability_routes(process, d)
    primary = routes.pop("series")
    if args.route == "wright":
        primary = lambda t: reliability(process, d, t, route="wright")  # noqa: E731

    extra = sorted(routes) if args.compare else []
    columns = ["t", "reliability"] + extra + (["max_difference"] if extra else [])
    table = OutputTable(columns, name="reliability")
    for t in grid:
        t = float(t)
        values = [primary(t)] + [routes[name](t) for name in extra]
        row = [t, *values]
        if extra:
            row.append(max(values) - min(values))
        table.append(*row)
    return CommandResult([table])


def cmd_hazard(args):
    """Hazard table (t, hazard, closed, difference)."""
    p = _params(args)
    if args.n not in (1, 2):
        raise ParameterError(f"--n must be 1 or 2, got {args.n}")
    grid = parse_grid(args.t_grid)
    if not (grid > 0).all():
        raise DomainError("--t-grid must contain only t > 0 for the hazard")
    k = BivariateCount(args.k1, args.k2)
    closed = hazard_rate_closed(p, args.n)
    table = OutputTable(("t", "hazard", "closed", "difference"), name="hazard")
    for t in grid:
        value = hazard_rate(p, args.n, k, float(t), as_printed=args.as_printed, cap=args.hoppe_cap)
        table.append(float(t), value, closed, abs(value - closed))
    return CommandResult([table])


def cmd_simulate(args):
    """Monte Carlo report; per-path failure times as a table when --raw is given."""
    cfg = SimConfig(
        paths=args.paths,
        seed=args.seed if args.seed is not None else config.default_seed(),
        workers=args.workers,
        horizon=args.horizon,
        semantics=args.semantics,
        grid_points=args.grid_points,
        z_threshold=args.z_threshold,
    )
    if args.quantity == "pmf":
        report = estimate_pmf(_process(args), args.t, cfg, max_h=args.max_h)
    elif args.quantity == "laplace":
        spec = build_subordinator(args.subordinator) if args.subordinator else _params(args).subordinator()
        report = estimate_subordinator_laplace(spec, args.t, parse_list(args.u_grid), cfg)
    else:
        process = _process(args)
        report = estimate_failure_law(process, build_threshold(args.threshold, process), cfg)

    tables = []
    if args.raw and report.samples is not None:
        raw = OutputTable(("path", "time", "cause", "status"), name="raw")
        samples = report.samples
        for index, (t, cause, status) in enumerate(zip(samples["time"], samples["cause"], samples["status"])):
            raw.append(index, float(t), int(cause), int(status))
        tables.append(raw)
    return CommandResult(tables, report)


def cmd_figures(args):
    """Left and right panel tables for one figure."""
    form = FIGURE_FORMS[args.figure]
    grid = parse_grid(args.t_grid)
    left = OutputTable(["t"] + [f"alpha={a:g}" for a in FIGURE_ALPHAS], name=f"figure{args.figure}_left")
    right = OutputTable(["t"] + [f"theta={th:g}" for th in FIGURE_THETAS], name=f"figure{args.figure}_right")
    left_params = [ProcessParams(a, 1.0, 1.0, 1.0) for a in FIGURE_ALPHAS]
    right_params = [ProcessParams(0.5, th, 1.0, 1.0) for th in FIGURE_THETAS]
    for t in grid:
        t = float(t)
        left.append(t, *(form(p, t) for p in left_params))
        right.append(t, *(form(p, t) for p in right_params))
    return CommandResult([left, right])


COMMANDS = {
    "pmf": cmd_pmf,
    "reliability": cmd_reliability,
    "hazard": cmd_hazard,
    "simulate": cmd_simulate,
    "figures": cmd_figures,
}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of printing usage and exiting."""

    def error(self, message):
        """Turn a usage error into a ParameterError."""
        raise ParameterError(message)


def _seed(text):
    return int(text, 0)


def _add_process_flags(parser):
    parser.add_argument("--alpha", type=float, default=0.5, help="Stability index in (0, 1]")
    parser.add_argument("--theta", type=float, default=1.0, help="Tempering parameter >= 0")
    parser.add_argument("--lambda1", type=float, default=1.0, help="Rate of type-1 shocks")
    parser.add_argument("--lambda2", type=float, default=2.0, help="Rate of type-2 shocks")


def _add_output_flags(parser):
    parser.add_argument("--format", choices=FORMATS, default="csv", help="Output format")
    parser.add_argument("--out", help="Output file (directory for figures); stdout when omitted")


def build_parser():
    """The ``tempered-shocks`` argument parser; returns (parser, {command: subparser})."""
    parser = _Parser(prog="tempered-shocks", description="Tempered space-fractional Poisson shock models")
    parser.add_argument("--verbose", "-v", action="store_true", help="Log at DEBUG level")
    parser.add_argument("--config", help="JSON file with flag values (keys are flag names)")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pmf = commands.add_parser("pmf", help="Joint pmf table")
    _add_process_flags(pmf)
    pmf.add_argument("--t", type=float, default=1.0, help="Time > 0")
    pmf.add_argument("--max-h", type=int, default=10, help="Largest k1 + k2")
    pmf.add_argument("--route", choices=PMF_ROUTES + ("both",), default="auto", help="Evaluation route")
    _add_output_flags(pmf)

    rel = commands.add_parser("reliability", help="Reliability of the failure time")
    _add_process_flags(rel)
    rel.add_argument("--threshold", default="geometric:p=0.5", help="Threshold spec, e.g. yule-simon:rho=1.5")
    rel.add_argument(
        "--subordinator", help="Clock spec replacing the tempered-stable one, e.g. gamma:shape=1,rate=2"
    )
    rel.add_argument("--t-grid", default=config.DEFAULT_T_GRID, help="start:stop:steps")
    rel.add_argument("--route", choices=RELIABILITY_ROUTES, default="series", help="Route of the main column")
    rel.add_argument("--compare", action="store_true", help="Add one column per available route")
    _add_output_flags(rel)

    haz = commands.add_parser("hazard", help="Transition rate of the shock streams")
    _add_process_flags(haz)
    haz.add_argument("--n", type=int, default=1, help="Shock type (1 or 2)")
    haz.add_argument("--k1", type=int, default=1)
    haz.add_argument("--k2", type=int, default=1)
    haz.add_argument("--t-grid", default=HAZARD_T_GRID, help="start:stop:steps with start > 0")
    haz.add_argument(
        "--hoppe-cap", type=int, default=config.HOPPE_CAP, help="Largest k1 + k2 for the Hoppe sum"
    )
    haz.add_argument("--as-printed", action="store_true", help="Omit the (Lambda/(Lambda+theta))^h factor")
    _add_output_flags(haz)

    sim = commands.add_parser("simulate", help="Monte Carlo comparison report")
    _add_process_flags(sim)
    sim.add_argument("--quantity", choices=("pmf", "failure", "laplace"), default="failure")
    sim.add_argument("--paths", type=int, default=100_000)
    sim.add_argument("--seed", type=_seed, default=None, help=f"Master seed (env {config.SEED_ENV_VAR})")
    sim.add_argument("--workers", type=int, default=1, help="Worker processes; 0 for one per physical core")
    sim.add_argument("--t", type=float, default=1.0, help="Time for the pmf and Laplace checks")
    sim.add_argument("--max-h", type=int, default=6)
    sim.add_argument("--u-grid", default="0.5,1,2,4", help="Comma-separated Laplace arguments")
    sim.add_argument("--threshold", default="geometric:p=0.4")
    sim.add_argument("--subordinator", help="Clock spec replacing the tempered-stable one")
    sim.add_argument("--horizon", type=float, default=5.0)
    sim.add_argument("--semantics", choices=SEMANTICS, default="crossing")
    sim.add_argument("--grid-points", type=int, default=10)
    sim.add_argument("--z-threshold", type=float, default=config.Z_THRESHOLD)
    sim.add_argument("--raw", help="CSV file for per-path failure times")
    sim.add_argument("--include-runtime", action="store_true", help="Add runtime and memory to the JSON")
    sim.add_argument("--strict", action="store_true", help="Exit with status 1 when a comparison fails")
    sim.add_argument("--out", help="File for the JSON report; stdout when omitted")

    fig = commands.add_parser("figures", help="Reliability curves of the mixed-geometric closed forms")
    fig.add_argument("--figure", type=int, choices=sorted(FIGURE_FORMS), required=True)
    fig.add_argument("--t-grid", default=config.DEFAULT_T_GRID)
    fig.add_argument("--format", choices=FORMATS, default="csv")
    fig.add_argument("--out", required=True, help="Output directory")

    return parser, dict(commands.choices)


def parse_args(argv):
    """Parse ``argv``, applying --config values as defaults that explicit flags override."""
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = config.load_json_config(args.config)
        subparser = subparsers[args.command]
        known = {action.dest for action in subparser._actions}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ParameterError(f"unknown keys in {args.config}: {', '.join(unknown)}")
        subparser.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def run_command(argv):
    """Parse ``argv`` and run the command; returns (args, CommandResult)."""
    args = parse_args(argv)
    return args, COMMANDS[args.command](args)


def _write(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def emit(args, result):
    """Write a command's tables (and report) where the flags say."""
    if args.command == "figures":
        directory = Path(args.out)
        directory.mkdir(parents=True, exist_ok=True)
        for table in result.tables:
            (directory / f"{table.name}.{args.format}").write_text(table.render(args.format))
        return
    if args.command == "simulate":
        _write(result.report.to_json(include_runtime=args.include_runtime), args.out)
        if args.raw:
            Path(args.raw).write_text(result.tables[0].to_csv() if result.tables else "")
        return
    for table in result.tables:
        _write(table.render(args.format), args.out)


def main(argv=None):
    """Console entry point; returns the exit status."""
    argv = sys.argv[1:] if argv is None else list(argv)
    verbose = "--verbose" in argv or "-v" in argv
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args, result = run_command(argv)
        emit(args, result)
    except (ShockModelError, OSError) as e:
        message = " ".join(str(e).split())
        print(f"error: {type(e).__name__}: {message}", file=sys.stderr)
        return 2 if isinstance(e, ParameterError) else 1
    if args.command == "simulate" and args.strict and not result.report.passed:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
