"""Command-line front end: data ingestion, reference-constant tables, MISE
curves, bandwidth selection, roughness estimation and the simulation harness.

Exit codes: 0 ok, 2 input or configuration error, 3 computational failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys

import numpy as np

from . import roughness, selectors, simulate
from .kernels import Kernel
from .mise import exact_dna, reference_constant
from .mixtures import PRESETS, NormalMixture, difference_density, roughness_true

INPUT_ERROR = 2
COMPUTE_ERROR = 3


class CliError(Exception):
    def __init__(self, message, code=INPUT_ERROR):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

def read_numeric_column(path: str, col=None) -> np.ndarray:
    """One number per line, or a CSV column picked by index or header name.

    Blank lines are skipped.  A header row is detected by its first data
    token being non-numeric.  Any other non-numeric token is a hard error
    naming the line.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read input file: {exc}")

    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        fields = next(csv.reader(io.StringIO(raw)))
        rows.append((lineno, [f.strip() for f in fields]))
    if not rows:
        raise CliError(f"no data found in {path}")

    index = 0
    header = None
    first_tokens = rows[0][1]
    if not _is_number(first_tokens[0] if first_tokens else ""):
        header = first_tokens
        rows = rows[1:]
        if not rows:
            raise CliError(f"no data rows after header in {path}")

    if col is not None:
        if _is_number(col) and float(col) == int(float(col)):
            index = int(float(col))
        elif header is not None and col in header:
            index = header.index(col)
        else:
            raise CliError(f"--col {col!r} not found (header: {header})")

    values = []
    for lineno, fields in rows:
        if index >= len(fields):
            raise CliError(f"line {lineno}: missing column {index}")
        token = fields[index]
        if not _is_number(token):
            raise CliError(f"line {lineno}: non-numeric value {token!r}")
        values.append(float(token))
    return np.asarray(values)


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return math.isfinite(float(token))


def load_mixture(spec: str, renormalize: bool = False) -> NormalMixture:
    """A preset name, or a JSON file with keys weights, means, sds."""
    if spec in PRESETS:
        return PRESETS[spec]
    try:
        with open(spec, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read mixture spec: {exc}")
    except json.JSONDecodeError as exc:
        raise CliError(f"mixture spec is not valid JSON: {exc}")
    missing = {"weights", "means", "sds"} - set(doc)
    if missing:
        raise CliError(f"mixture spec missing keys: {sorted(missing)}")
    weights = [float(w) for w in doc["weights"]]
    total = sum(weights)
    if abs(total - 1.0) > 1e-12:
        if not renormalize:
            raise CliError(
                f"weights sum to {total!r}; pass --renormalize to rescale")
        weights = [w / total for w in weights]
    try:
        return NormalMixture(tuple(weights),
                             tuple(float(m) for m in doc["means"]),
                             tuple(float(s) for s in doc["sds"]))
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid mixture spec: {exc}")


def _kernel(name: str) -> Kernel:
    return Kernel(name)


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("BWLAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"BWLAB_SEED={env!r} is not an integer")
    return 0


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))  # full round-trip precision
    return str(x)


def emit_record(record: dict, fmt: str, out) -> None:
    """One flat record: header comments echo the resolved config."""
    config = record.get("config", {})
    body = {k: v for k, v in record.items() if k != "config"}
    if fmt == "json":
        json.dump(record, out, indent=2, default=_json_default)
        out.write("\n")
    elif fmt == "csv":
        for k, v in config.items():
            out.write(f"# {k} = {v}\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(body.keys())
        writer.writerow([_fmt(v) for v in body.values()])
    else:
        for k, v in config.items():
            out.write(f"# {k} = {v}\n")
        width = max(len(k) for k in body)
        for k, v in body.items():
            val = f"{v:.6g}" if isinstance(v, (float, np.floating)) else v
            out.write(f"{k:<{width}}  {val}\n")


def emit_table(columns: list, rows: list, config: dict, fmt: str, out) -> None:
    if fmt == "json":
        json.dump({"config": config,
                   "rows": [dict(zip(columns, r)) for r in rows]},
                  out, indent=2, default=_json_default)
        out.write("\n")
        return
    for k, v in config.items():
        out.write(f"# {k} = {v}\n")
    if fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([_fmt(v) for v in r])
    else:
        cells = [[f"{v:.4f}" if isinstance(v, float) else str(v) for v in r]
                 for r in rows]
        widths = [max(len(c), *(len(row[i]) for row in cells))
                  for i, c in enumerate(columns)]
        out.write("  ".join(c.rjust(w) for c, w in zip(columns, widths)) + "\n")
        for row in cells:
            out.write("  ".join(c.rjust(w) for c, w in zip(row, widths)) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return dataclasses.asdict(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _open_out(args):
    if getattr(args, "output", None):
        return open(args.output, "w", encoding="utf-8", newline="")
    return sys.stdout


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_select(args) -> int:
    sample = read_numeric_column(args.input, args.col)
    method = args.method
    params = {}
    if method in ("hermite", "proposal1", "proposal3"):
        if args.pilot is not None:
            params["h_H"] = args.pilot
        if method == "hermite" and args.order is not None:
            params["m"] = args.order
    elif method == "proposal2" and args.pilot_tilde is not None:
        params["h_H_tilde"] = args.pilot_tilde
    elif method == "normal-start":
        params["h_tilde"] = args.pilot if args.pilot is not None else 0.5
    elif method == "t-tail" and args.nu_method is not None:
        params["nu_method"] = args.nu_method

    alias = None
    if method == "ucv-classic":
        alias, method = method, "ucv"
    try:
        report = selectors.run_method(method, sample, _kernel(args.kernel),
                                      **params)
    except (ValueError, ArithmeticError) as exc:
        raise CliError(f"selection failed: {exc}", COMPUTE_ERROR)

    record = {
        "config": {"command": "select", "input": args.input,
                   "method": alias or method, "kernel": args.kernel,
                   "format": args.format, **params},
        "h_hat": report.h_hat,
        "sigma_hat": report.sigma_hat,
        "n": report.n,
        "pilots": json.dumps(report.pilots),
        "flags": ";".join(report.flags),
        "config_hash": report.config_hash,
    }
    with _maybe_close(_open_out(args)) as out:
        emit_record(record, args.format, out)
    return 0


def cmd_estimate(args) -> int:
    sample = read_numeric_column(args.input, args.col)
    sigma = selectors.estimate_sigma(sample)
    params = {}
    if args.estimator in ("r2m", "r2m-diag"):
        if args.pilot is not None:
            params["h_H"] = args.pilot
        if args.order is not None:
            params["m"] = args.order
    elif args.estimator == "normal-start" and args.pilot is not None:
        params["h_tilde"] = args.pilot
    elif args.estimator == "local-likelihood" and args.pilot is not None:
        params["b"] = args.pilot
    try:
        est = simulate._run_estimator(args.estimator, sample, sigma, params)
    except (ValueError, ArithmeticError) as exc:
        raise CliError(f"estimation failed: {exc}", COMPUTE_ERROR)
    record = {
        "config": {"command": "estimate", "input": args.input,
                   "estimator": args.estimator, "format": args.format,
                   **params},
        "value": est.value,
        "estimator": est.estimator,
        "sigma_hat": sigma,
        "n_pairs": est.n_pairs,
        "pilots": json.dumps(est.pilots),
        "flags": ";".join(est.flags),
    }
    with _maybe_close(_open_out(args)) as out:
        emit_record(record, args.format, out)
    return 0


def _parse_n(token: str):
    if token.lower() in ("inf", "infinity"):
        return math.inf
    try:
        n = int(token)
    except ValueError:
        raise CliError(f"bad sample size {token!r}")
    if n < 3:
        raise CliError(f"sample size must be >= 3, got {n}")
    return n


def cmd_table1(args) -> int:
    ns = [_parse_n(t) for t in args.n]
    rows = []
    for n in ns:
        rows.append(("inf" if math.isinf(n) else n,
                     reference_constant(Kernel.NORMAL, n),
                     reference_constant(Kernel.EPANECHNIKOV, n)))
    config = {"command": "table1", "n": ",".join(args.n),
              "format": args.format}
    with _maybe_close(_open_out(args)) as out:
        emit_table(["n", "b_n", "c_n"], rows, config, args.format, out)
    return 0


def cmd_mise_curve(args) -> int:
    mixture = load_mixture(args.mixture, args.renormalize)
    kernel = _kernel(args.kernel)
    if not (args.h_min > 0 and args.h_max > args.h_min and args.h_count >= 2):
        raise CliError("need 0 < --h-min < --h-max and --h-count >= 2")
    g = difference_density(mixture)
    r_f = roughness_true(mixture, 0)
    grid = np.exp(np.linspace(math.log(args.h_min), math.log(args.h_max),
                              args.h_count))
    try:
        dna = np.array([exact_dna(g, kernel, args.n, h) for h in grid])
    except ArithmeticError as exc:
        raise CliError(f"curve evaluation failed: {exc}", COMPUTE_ERROR)
    config = {"command": "mise-curve", "mixture": args.mixture,
              "kernel": args.kernel, "n": args.n, "h_min": args.h_min,
              "h_max": args.h_max, "h_count": args.h_count,
              "R_f": repr(r_f), "format": args.format}
    rows = [(float(h), float(d), float(d + r_f)) for h, d in zip(grid, dna)]
    with _maybe_close(_open_out(args)) as out:
        if args.format == "table":
            for k, v in config.items():
                out.write(f"# {k} = {v}\n")
            for h, d, m in rows:
                out.write(f"{h:.10g}  {d:.10g}  {m:.10g}\n")
        else:
            emit_table(["h", "dna", "mise"], rows, config, args.format, out)
    if args.plot:
        from .plotting import plot_mise_curve
        k = int(np.argmin(dna))
        plot_mise_curve(args.plot, grid, dna + r_f, float(grid[k]),
                        f"exact MISE, {args.mixture}, n={args.n}, "
                        f"{args.kernel} kernel")
    return 0


def _sim_config(args, methods) -> simulate.SimConfig:
    mixture = load_mixture(args.mixture, args.renormalize)
    return simulate.SimConfig(mixture=mixture, n=args.n, reps=args.reps,
                              master_seed=_resolve_seed(args),
                              methods=methods, kernel=_kernel(args.kernel))


def _parse_method_token(token: str):
    """'name' or 'name:key=val,key=val' with numeric values."""
    name, _, rest = token.partition(":")
    params = {}
    if rest:
        for piece in rest.split(","):
            key, sep, val = piece.partition("=")
            if not sep or not _is_number(val):
                raise CliError(f"bad method parameter {piece!r} in {token!r}")
            num = float(val)
            params[key] = int(num) if num == int(num) and key == "m" else num
    return (name, params)


def _emit_sim(result: simulate.SimResult, args, title: str) -> int:
    columns = ["method", "median", "mean", "sd", "q25", "q75",
               "median_rel_err", "mse", "failures", "fallbacks"]
    rows = [(s.name, s.median, s.mean, s.sd, s.q25, s.q75,
             s.median_rel_err, s.mse, s.failures, s.fallbacks)
            for s in result.summaries]
    for s in result.summaries:
        if s.failures == args.reps:
            print(f"error: every replication failed for {s.name}",
                  file=sys.stderr)
            return COMPUTE_ERROR
    config = dict(result.config)
    config["truth"] = f"{result.truth['kind']} = {result.truth['target']!r}"
    with _maybe_close(_open_out(args)) as out:
        emit_table(columns, rows, config, args.format, out)
    if args.dump:
        with open(args.dump, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            labels = list(result.per_rep)
            writer.writerow(["rep"] + labels)
            for rep in range(args.reps):
                writer.writerow([rep] + [
                    "" if result.per_rep[k][rep] is None
                    else _fmt(result.per_rep[k][rep]) for k in labels])
    if args.plot:
        from .plotting import plot_method_boxes
        plot_method_boxes(args.plot, result.per_rep,
                          result.truth["target"], result.truth["kind"], title)
    return 0


def cmd_simulate(args) -> int:
    methods = [_parse_method_token(t) for t in args.method]
    for name, _ in methods:
        if name not in selectors.METHOD_NAMES:
            raise CliError(f"unknown selector {name!r} "
                           f"(choose from {selectors.METHOD_NAMES})")
    config = _sim_config(args, methods)
    result = simulate.run_selector_comparison(config, threads=args.threads)
    return _emit_sim(result, args,
                     f"selector comparison, {args.mixture}, n={args.n}")


def cmd_contest(args) -> int:
    methods = [_parse_method_token(t) for t in args.method]
    for name, _ in methods:
        if name not in simulate.ESTIMATORS:
            raise CliError(f"unknown estimator {name!r} "
                           f"(choose from {simulate.ESTIMATORS})")
    config = _sim_config(args, methods)
    result = simulate.run_roughness_contest(config, threads=args.threads)
    return _emit_sim(result, args,
                     f"roughness contest, {args.mixture}, n={args.n}")


class _maybe_close:
    def __init__(self, fh):
        self.fh = fh

    def __enter__(self):
        return self.fh

    def __exit__(self, *exc):
        if self.fh is not sys.stdout:
            self.fh.close()
        return False


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bwlab",
        description="Bandwidth selection laboratory for kernel density "
                    "estimation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=["table", "csv", "json"],
                       default="table")
        p.add_argument("--output", help="write to this file instead of stdout")

    p = sub.add_parser("select", help="choose a bandwidth for a data file")
    p.add_argument("input")
    p.add_argument("--col", help="CSV column index or header name")
    p.add_argument("--method", required=True,
                   choices=list(selectors.METHOD_NAMES) + ["ucv-classic"])
    p.add_argument("--kernel", choices=["normal", "epanechnikov"],
                   default="normal")
    p.add_argument("--pilot", type=float,
                   help="pilot bandwidth (expansion h_H, or start h-tilde)")
    p.add_argument("--pilot-tilde", type=float,
                   help="initial pilot for the coupled plug-in rule")
    p.add_argument("--order", type=int, help="expansion order m")
    p.add_argument("--nu-method", choices=["kurtosis", "median"],
                   help="tail-index route for the t-tail method")
    common(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("estimate", help="estimate the curvature roughness "
                                        "R(f'') from a data file")
    p.add_argument("input")
    p.add_argument("--col")
    p.add_argument("--estimator", required=True, choices=simulate.ESTIMATORS)
    p.add_argument("--pilot", type=float,
                   help="pilot bandwidth (h_H, h-tilde, or window b)")
    p.add_argument("--order", type=int, help="expansion order m")
    common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("table1", help="finite-sample normal reference "
                                      "constants b_n and c_n")
    p.add_argument("--n", nargs="+", required=True,
                   help="sample sizes (integers >= 3, or 'inf')")
    common(p)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("mise-curve", help="exact MISE curve for a normal "
                                          "mixture")
    p.add_argument("--mixture", required=True,
                   help=f"preset ({', '.join(PRESETS)}) or JSON spec file")
    p.add_argument("--renormalize", action="store_true")
    p.add_argument("--kernel", choices=["normal", "epanechnikov"],
                   default="normal")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--h-min", type=float, default=0.05)
    p.add_argument("--h-max", type=float, default=2.0)
    p.add_argument("--h-count", type=int, default=100)
    p.add_argument("--plot", help="also render the curve to this PNG file")
    common(p)
    p.set_defaults(func=cmd_mise_curve)

    def sim_common(p):
        p.add_argument("--mixture", required=True)
        p.add_argument("--renormalize", action="store_true")
        p.add_argument("--kernel", choices=["normal", "epanechnikov"],
                       default="normal")
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--reps", type=int, required=True)
        p.add_argument("--seed", type=int,
                       help="master seed (default: BWLAB_SEED or 0)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--dump", help="per-replication CSV dump file")
        p.add_argument("--plot", help="render method boxplots to this PNG")
        common(p)

    p = sub.add_parser("simulate", help="compare bandwidth selectors against "
                                        "the exact optimum")
    p.add_argument("--method", nargs="+", required=True,
                   help="selector names, optionally name:key=val,...")
    sim_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("contest", help="compare roughness estimators against "
                                       "the exact R(f'')")
    p.add_argument("--method", nargs="+", required=True,
                   help="estimator names, optionally name:key=val,...")
    sim_common(p)
    p.set_defaults(func=cmd_contest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return COMPUTE_ERROR


if __name__ == "__main__":
    sys.exit(main())
