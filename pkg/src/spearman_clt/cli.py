"""Command-line interface: ``spearman-clt {test,simulate,moments,verify}``.

Exit codes: 0 success, 1 usage or input error, 2 some statistic undefined.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .moments import K_MAX, MomentParams, cov_g_exact, mean_tr_exact
from .ranks import TieWarning
from .scenarios import SCENARIOS
from .simulate import (
    RNG_ALGORITHM,
    SEED_ENV,
    SimResult,
    SweepCell,
    default_seed,
    preset_grid,
    table_sweep,
)
from .stats import STATISTICS, TestConfig, UndefinedStatistic, run_tests
from .verify import run_suite

SCHEMA = "1"
EXIT_OK, EXIT_INPUT, EXIT_PARTIAL = 0, 1, 2
SIM_COLUMNS = ("scenario", "n", "p", "statistic", "k", "delta", "rate_pct", "se_pct", "reps", "seed")


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# --- CSV ingestion -----------------------------------------------------------


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_matrix(text: str, header: str = "auto") -> tuple[np.ndarray, list[str] | None]:
    """Parse comma-separated numeric text.

    ``header`` is ``"auto"`` (a first row with any non-numeric cell is a
    header), ``"yes"`` or ``"no"``. Errors name the 1-based line and column.
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError("empty input")
    names = None
    first = [c.strip() for c in rows[0]]
    if header == "yes" or (header == "auto" and not all(_is_number(c) for c in first)):
        names, rows = first, rows[1:]
    if not rows:
        raise InputError("no data rows")
    width = len(rows[0])
    values = np.empty((len(rows), width))
    offset = 2 if names is not None else 1
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InputError(f"line {i + offset}: expected {width} columns, found {len(row)}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise InputError(f"line {i + offset}, column {j + 1}: non-numeric cell {cell!r}") from None
            if not math.isfinite(v):
                raise InputError(f"line {i + offset}, column {j + 1}: non-finite value {cell!r}")
            values[i, j] = v
    return values, names


def _read_input(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


# --- output helpers --------------------------------------------------------------


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _table(rows: list[dict], columns) -> str:
    cells = [[str(c) for c in columns]] + [[_fmt(r.get(c)) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    return "\n".join("  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells) + "\n"


def _csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: _fmt(r.get(c)) for c in columns})
    return buf.getvalue()


def _parse_cell(column: str, text: str):
    if text == "":
        return None
    if column in ("n", "p", "k", "reps", "seed"):
        return int(text)
    if column in ("delta", "rate_pct", "se_pct"):
        return float(text)
    return text


def read_sim_csv(text: str) -> list[dict]:
    """Parse the CSV written by ``simulate`` back into typed records."""
    reader = csv.DictReader(io.StringIO(text))
    return [{c: _parse_cell(c, row[c]) for c in reader.fieldnames} for row in reader]


# --- subcommands -----------------------------------------------------------------


def _stat_names(values: list[str] | None, default=("W7",)) -> list[str]:
    if not values:
        return list(default)
    names = []
    for v in values:
        for s in v.split(","):
            s = s.strip().upper()
            if not s:
                continue
            if s == "ALL":
                names.extend(STATISTICS)
            elif s in STATISTICS:
                names.append(s)
            else:
                raise InputError(f"unknown statistic {s!r}")
    return list(dict.fromkeys(names))


def _configs(args, names) -> list[TestConfig]:
    out = []
    for s in names:
        side = args.sidedness
        if side == "two_sided" and s in ("W1", "W5", "W6"):
            side = None  # one-sided by construction
        out.append(TestConfig(s, k=args.k, delta=args.delta, alpha=args.alpha, sidedness=side,
                              ratio=getattr(args, "ratio", None)))
    return out


def cmd_test(args) -> int:
    values, _ = read_matrix(_read_input(args.input), args.header)
    if args.orientation == "rows-are-variables":
        values = values.T
    n, p = values.shape
    if n < 3 or p < 2:
        raise InputError(f"need at least 3 observations and 2 variables, got n={n}, p={p}")
    configs = _configs(args, _stat_names(args.stat))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TieWarning)
        outcomes = run_tests(values, configs, args.tie_policy)
    notes = sorted({str(w.message) for w in caught if issubclass(w.category, TieWarning)})

    reports, undefined = [], False
    for cfg, res in zip(configs, outcomes):
        if isinstance(res, UndefinedStatistic):
            undefined = True
            reports.append({"statistic": cfg.statistic, "undefined": True, "reason": res.reason})
        else:
            reports.append(res.to_dict())
    for note in notes:
        print(f"warning: {note}", file=sys.stderr)

    if args.format == "json":
        doc = {"schema": SCHEMA, "n": n, "p": p, "reports": reports, "warnings": notes}
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        cols = ("statistic", "value", "p_value", "reject", "null_dist", "sidedness", "reason")
        text = (_csv if args.format == "csv" else _table)(reports, cols)
    _emit(text, args.out)
    return EXIT_PARTIAL if undefined else EXIT_OK


def _sim_cells(args) -> list[SweepCell]:
    if args.preset:
        return preset_grid(args.preset)
    if not (args.scenario and args.n and args.p):
        raise InputError("give --preset, or --scenario with --n and --p")
    if len(args.n) != len(args.p):
        raise InputError("--n and --p must be given the same number of times")
    names = _stat_names(args.stat)
    cells = []
    for scen in args.scenario:
        for n, p in zip(args.n, args.p):
            cfgs = []
            for name in names:
                if name == "W7":
                    cfgs.extend(TestConfig("W7", k=k, delta=d) for k in args.k_list for d in args.delta_list)
                elif name == "W2":
                    cfgs.extend(TestConfig("W2", k=k) for k in args.k_list)
                else:
                    cfgs.append(TestConfig(name))
            cells.append(SweepCell(scen, n, p, tuple(cfgs)))
    return cells


def cmd_simulate(args) -> int:
    if args.reps < 1:
        raise InputError(f"--reps must be >= 1, got {args.reps}")
    seed = default_seed() if args.seed is None else args.seed
    cells = _sim_cells(args)

    def progress(cell, res: SimResult):
        if args.verbose:
            print(f"{cell.scenario} n={cell.n} p={cell.p}: {res.wall_time:.1f}s", file=sys.stderr)

    results = table_sweep(cells, args.reps, seed, args.alpha, args.workers, progress)
    records = [rec for res in results for rec in res.records()]
    if args.format == "json":
        doc = {
            "schema": SCHEMA,
            "rng": RNG_ALGORITHM,
            "seed": seed,
            "records": records,
            "configs": [res.config.echo() for res in results],
        }
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    elif args.format == "csv":
        text = _csv(records, SIM_COLUMNS)
    else:
        text = _table(records, SIM_COLUMNS + ("note",))
    _emit(text, args.out)
    return EXIT_PARTIAL if any(r["rate_pct"] is None for r in records) else EXIT_OK


def cmd_moments(args) -> int:
    params = MomentParams(args.n, args.p)
    rows = []
    for k in args.k or []:
        if not 1 <= k <= K_MAX:
            raise InputError(f"k={k} outside [1, {K_MAX}]")
        m = mean_tr_exact(params, k)
        v = cov_g_exact(k, k, params.c)
        rows.append({"k": k, "mean_tr": float(m), "var_G": float(v),
                     "mean_tr_exact": str(m), "var_G_exact": str(v)})
    pairs = []
    if args.k1 is not None or args.k2 is not None:
        if args.k1 is None or args.k2 is None:
            raise InputError("--k1 and --k2 go together")
        for k in (args.k1, args.k2):
            if not 1 <= k <= K_MAX:
                raise InputError(f"k={k} outside [1, {K_MAX}]")
        cv = cov_g_exact(args.k1, args.k2, params.c)
        pairs.append({"k1": args.k1, "k2": args.k2, "cov_G": float(cv), "cov_G_exact": str(cv)})
    if not rows and not pairs:
        raise InputError("give --k and/or --k1/--k2")
    if args.format == "json":
        doc = {"schema": SCHEMA, "n": args.n, "p": args.p, "c": str(Fraction(args.n, args.p)),
               "trace_powers": rows, "covariances": pairs}
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        fmt = _csv if args.format == "csv" else _table
        text = ""
        if rows:
            text += fmt(rows, ("k", "mean_tr", "var_G"))
        if pairs:
            text += fmt(pairs, ("k1", "k2", "cov_G"))
    _emit(text, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_suite(args.max_n)
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status}  {r.name}  ({r.seconds:.2f}s)  {r.detail}")
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} checks passed")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if passed == len(results) else EXIT_INPUT


# --- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="spearman-clt", description="Independence tests from Spearman's rank "
                 "correlation matrix and their Monte Carlo calibration.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--k", type=int, default=4, help="trace power for W2/W7 (default 4)")
    common.add_argument("--delta", type=float, default=0.5, help="W6 weight exponent in W7 (default 0.5)")
    common.add_argument("--alpha", type=float, default=0.05)
    common.add_argument("--out", help="write to this file instead of stdout")

    t = sub.add_parser("test", parents=[common], help="run tests on a CSV data set")
    t.add_argument("input", help="CSV file, or '-' for stdin")
    t.add_argument("--stat", action="append", help="statistic(s), e.g. w7 or w2,w6 or all")
    t.add_argument("--orientation", choices=("rows-are-observations", "rows-are-variables"),
                   default="rows-are-observations")
    t.add_argument("--header", choices=("auto", "yes", "no"), default="auto")
    t.add_argument("--sidedness", choices=("upper", "two_sided"))
    t.add_argument("--ratio", type=float, help="W5 Gumbel constant (default n/p)")
    t.add_argument("--tie-policy", choices=("average", "error"), default="average")
    t.add_argument("--format", choices=("json", "csv", "table"), default="json")
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("simulate", help="Monte Carlo size/power tables")
    s.add_argument("--preset", choices=("table1", "table2", "table3"))
    s.add_argument("--scenario", action="append", choices=SCENARIOS)
    s.add_argument("--n", type=int, action="append")
    s.add_argument("--p", type=int, action="append")
    s.add_argument("--stat", action="append")
    s.add_argument("--k", dest="k_list", type=int, action="append")
    s.add_argument("--delta", dest="delta_list", type=float, action="append")
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--reps", type=int, default=1000)
    s.add_argument("--seed", type=int, help=f"master seed (default ${SEED_ENV} or built-in)")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--format", choices=("csv", "json", "table"), default="csv")
    s.add_argument("--out")
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("moments", help="closed-form mean and covariance of tr S^k")
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--p", type=int, required=True)
    m.add_argument("--k", type=int, action="append")
    m.add_argument("--k1", type=int)
    m.add_argument("--k2", type=int)
    m.add_argument("--format", choices=("json", "csv", "table"), default="table")
    m.add_argument("--out")
    m.set_defaults(func=cmd_moments)

    v = sub.add_parser("verify", help="exact-arithmetic oracle suite")
    v.add_argument("--max-n", type=int, default=8)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate":
        args.k_list = args.k_list or [4]
        args.delta_list = args.delta_list or [0.5]
    try:
        return args.func(args)
    except (InputError, ValueError) as exc:
        print(f"spearman-clt {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
