"""Command-line front end: every pipeline as a reproducible subcommand.

Subcommands: pdf, moments, autocorr, sample, convergence, fit, baseline,
synth.  Tabular results go to CSV (or JSON with --format json); fit results
are always JSON.  Every run emits a provenance block (command, parameters,
seed, package version, kernel backend): embedded in JSON documents, written
to a `<out>.provenance.json` sidecar for CSV files, or printed to stderr
when CSV goes to stdout.  Identical invocation and seed give byte-identical
output.

A plain-text config file (`--config`, `key=value` lines, `#` comments) can
supply defaults for any option of any subcommand; flags override the config
file.  Keys use underscores (e.g. `n_walks=100000`).

Exit codes: 0 ok, 2 bad usage or parameters, 3 coupling out of range in
strict mode, 4 input/output failure, 5 optimizer or quadrature failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

from . import __version__, backend
from . import analytic, fitting, lattice, montecarlo, profiles
from .errors import (
    CouplingOutOfRange,
    MemwalkError,
    NonConvergentNormalization,
    OptimizerStalled,
    ParseError,
    QuadratureFailure,
)

REQUIRED = object()


def _parse_bool(text):
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text):
    items = [int(part) for part in str(text).split(",") if part.strip()]
    if not items:
        raise ValueError("empty list")
    return items


def _parse_float_pair(text):
    parts = [float(part) for part in str(text).split(",") if part.strip()]
    if len(parts) != 2:
        raise ValueError(f"expected two comma-separated numbers, got {text!r}")
    return (parts[0], parts[1])


def _parse_bounds(text):
    parts = [float(part) for part in str(text).split(",") if part.strip()]
    if len(parts) != 6:
        raise ValueError(
            f"expected six comma-separated numbers b_lo,b_hi,d_lo,d_hi,k_lo,k_hi, got {text!r}"
        )
    return ((parts[0], parts[1]), (parts[2], parts[3]), (parts[4], parts[5]))


def _fmt(value):
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, str)):
        return str(value)
    return repr(float(value))


def load_config(path) -> dict:
    """key=value lines; blank lines and # comments ignored."""
    cfg = {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            for lineno, raw in enumerate(handle, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ParseError(f"config line is not key=value: {raw.strip()!r}",
                                     line=lineno)
                key, _, value = line.partition("=")
                cfg[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise ParseError(f"cannot read config file {path}: {exc}") from None
    return cfg


# (name, converter, default) per subcommand; REQUIRED means the merged value
# (flag or config) must be present.  Converters also apply to config strings.
_OPTIONS = {
    "pdf": [
        ("n", int, REQUIRED),
        ("kappa", float, REQUIRED),
        ("b", float, None),
        ("delta", float, None),
        ("strict", _parse_bool, False),
    ],
    "moments": [
        ("n", int, REQUIRED),
        ("kappa", float, REQUIRED),
        ("b", float, None),
        ("delta", float, None),
        ("max_order", int, 4),
        ("strict", _parse_bool, False),
    ],
    "convergence": [
        ("kappa", float, REQUIRED),
        ("n_list", _parse_int_list, REQUIRED),
    ],
    "autocorr": [
        ("n", int, REQUIRED),
        ("kappa", float, REQUIRED),
        ("lag", _parse_int_list, [2]),
        ("n_walks", int, 100_000),
        ("seed", int, 0),
        ("n_jobs", int, 1),
    ],
    "sample": [
        ("n", int, REQUIRED),
        ("kappa", float, REQUIRED),
        ("b", float, None),
        ("delta", float, None),
        ("n_walks", int, REQUIRED),
        ("seed", int, 0),
        ("strict", _parse_bool, False),
        ("n_jobs", int, 1),
    ],
    "fit": [
        ("input", str, None),
        ("returns_csv", str, None),
        ("returns_mode", str, "simple"),
        ("bin_width", float, fitting.DEFAULT_BIN_WIDTH),
        ("fit_range", _parse_float_pair, fitting.DEFAULT_FIT_RANGE),
        ("n_model", int, fitting.DEFAULT_N_MODEL),
        ("bounds", _parse_bounds, fitting.DEFAULT_BOUNDS),
        ("weighting", str, "unweighted"),
        ("doubling_check", _parse_bool, True),
    ],
    "baseline": [
        ("alpha", float, REQUIRED),
        ("scale", float, 1.0),
        ("u_max", float, 10.0),
        ("points", int, 201),
    ],
    "synth": [
        ("b", float, REQUIRED),
        ("delta_sigma", float, REQUIRED),
        ("kappa", float, REQUIRED),
        ("n_walks", int, REQUIRED),
        ("seed", int, 0),
        ("n_model", int, fitting.DEFAULT_N_MODEL),
        ("jitter", _parse_bool, True),
    ],
}

_FLAG_HELP = {
    "n": "number of walk steps N",
    "kappa": "renormalized coupling; the per-step coupling is kappa/N",
    "b": "well profile baseline (enables the regime profile; needs --delta)",
    "delta": "well half-width in lattice units (needs --b)",
    "strict": "raise instead of clamping out-of-range transfer probabilities",
    "max_order": "highest centered moment (2 or 4)",
    "n_list": "comma-separated step counts, e.g. 100,1000,10000",
    "lag": "increment lag L >= 2; comma-separated for several rows",
    "n_walks": "Monte Carlo trajectory count",
    "seed": "64-bit RNG seed",
    "n_jobs": "worker threads for trajectory blocks",
    "input": "price CSV (header date,price)",
    "returns_csv": "pre-computed returns CSV (header return) instead of prices",
    "returns_mode": "simple ((s2-s1)/s1) or log (ln s2/s1)",
    "bin_width": "histogram bin width in units of the sample sigma",
    "fit_range": "lo,hi window on |u| for the chi-square",
    "n_model": "lattice size behind the fitted model curve",
    "bounds": "b_lo,b_hi,delta_lo,delta_hi,kappa_lo,kappa_hi",
    "weighting": "unweighted (default) or poisson",
    "doubling_check": "refit at doubled n_model and report the chi2 shift",
    "alpha": "stable index in (0, 2]",
    "scale": "stable scale parameter c",
    "u_max": "evaluate densities on [-u_max, u_max]",
    "points": "number of grid points",
    "delta_sigma": "well half-width in data-space sigma units",
    "jitter": "spread samples uniformly over their lattice cell",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memwalk",
        description="memory-coupled binary walk toolkit",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    summaries = {
        "pdf": "exact lattice PDF after N steps",
        "moments": "centered moments and kurtosis of the exact PDF",
        "convergence": "variance/N and kurtosis swept over N at fixed kappa",
        "autocorr": "increment autocorrelation: exact, leading-order, Monte Carlo",
        "sample": "Monte Carlo ensemble statistics with standard errors",
        "fit": "fit the regime model to return data (JSON result)",
        "baseline": "Gaussian and symmetric stable densities on a grid",
        "synth": "draw standardized returns from the model (returns CSV)",
    }
    for command, options in _OPTIONS.items():
        sp = sub.add_parser(command, help=summaries[command])
        for name, conv, _default in options:
            flag = "--" + name.replace("_", "-")
            if conv is _parse_bool:
                group = sp.add_mutually_exclusive_group()
                group.add_argument(flag, dest=name, action="store_const",
                                   const=True, default=None,
                                   help=_FLAG_HELP.get(name))
                group.add_argument("--no-" + name.replace("_", "-"),
                                   dest=name, action="store_const", const=False,
                                   help=argparse.SUPPRESS)
            else:
                arg_type = str if conv in (_parse_int_list, _parse_float_pair,
                                           _parse_bounds, str) else conv
                sp.add_argument(flag, dest=name, type=arg_type, default=None,
                                help=_FLAG_HELP.get(name))
        sp.add_argument("--config", default=None,
                        help="key=value file supplying option defaults")
        sp.add_argument("--out", default=None,
                        help="output path (default: stdout)")
        if command != "fit":
            sp.add_argument("--format", choices=("csv", "json"), default=None,
                            help="output format (default csv)")
    return parser


def _merge_options(args) -> dict:
    cfg = load_config(args.config) if args.config else {}
    merged = {}
    for name, conv, default in _OPTIONS[args.command]:
        value = getattr(args, name)
        if value is None and name in cfg:
            value = cfg[name]
        if isinstance(value, str) and conv is not str:
            value = conv(value)
        if value is None:
            if default is REQUIRED:
                raise ValueError(f"missing required option --{name.replace('_', '-')}")
            value = default
        merged[name] = value
    merged["out"] = args.out
    merged["format"] = getattr(args, "format", None) or "csv"
    return merged


def _provenance(command: str, opts: dict) -> dict:
    params = {k: v for k, v in opts.items() if k not in ("out", "format")}
    return {
        "command": command,
        "version": __version__,
        "backend": backend.BACKEND_NAME,
        "parameters": params,
    }


def _emit_table(opts, prov, columns, rows):
    """rows: list of tuples aligned with columns."""
    if opts["format"] == "json":
        doc = {
            "provenance": prov,
            "data": {col: [row[i] for row in rows] for i, col in enumerate(columns)},
        }
        text = json.dumps(doc, indent=2) + "\n"
        if opts["out"]:
            with open(opts["out"], "w", encoding="utf-8", newline="\n") as handle:
                handle.write(text)
        else:
            sys.stdout.write(text)
        return
    lines = [",".join(columns)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    side = json.dumps(prov, indent=2) + "\n"
    if opts["out"]:
        with open(opts["out"], "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        with open(opts["out"] + ".provenance.json", "w", encoding="utf-8",
                  newline="\n") as handle:
            handle.write(side)
    else:
        sys.stdout.write(text)
        sys.stderr.write(side)


def _walk_profile(opts):
    n = opts["n"]
    if n <= 0:
        raise ValueError("--n must be positive")
    eps = opts["kappa"] / n
    has_b, has_d = opts.get("b") is not None, opts.get("delta") is not None
    if has_b != has_d:
        raise ValueError("--b and --delta must be given together")
    if has_b:
        return profiles.GaussianWellCoupling(eps, opts["b"], opts["delta"])
    return profiles.ConstantCoupling(eps)


def cmd_pdf(opts) -> int:
    profile = _walk_profile(opts)
    pdf, report = lattice.evolve(opts["n"], profile, strict=opts["strict"])
    prov = _provenance("pdf", opts)
    prov["validity"] = {
        "valid": report.valid,
        "worst_margin": report.worst_margin,
        "clamped_mass": report.clamped_mass,
        "first_violation_x": report.first_violation_x,
    }
    rows = [(int(x), float(p))
            for x, p in zip(pdf.displacements, pdf.probs)]
    _emit_table(opts, prov, ("x", "prob"), rows)
    return 0


def cmd_moments(opts) -> int:
    profile = _walk_profile(opts)
    pdf, report = lattice.evolve(opts["n"], profile, strict=opts["strict"])
    rep = lattice.moments(pdf, max_order=opts["max_order"])
    prov = _provenance("moments", opts)
    prov["validity"] = {"valid": report.valid, "clamped_mass": report.clamped_mass}
    rows = [("mean", rep.mean), ("variance", rep.variance),
            ("variance_over_n", rep.variance / opts["n"])]
    if rep.fourth is not None:
        rows.append(("fourth", rep.fourth))
        rows.append(("kurtosis", rep.kurtosis))
    _emit_table(opts, prov, ("statistic", "value"), rows)
    return 0


def cmd_convergence(opts) -> int:
    table = lattice.kurtosis_study(opts["n_list"], opts["kappa"])
    rows = [(point.n, point.variance_over_n, point.kurtosis) for point in table]
    _emit_table(opts, _provenance("convergence", opts),
                ("n", "variance_over_n", "kurtosis"), rows)
    return 0


def cmd_autocorr(opts) -> int:
    n, kappa = opts["n"], opts["kappa"]
    profile = profiles.ConstantCoupling(kappa / n)
    rows = []
    for lag in opts["lag"]:
        exact = analytic.autocorrelation(n, kappa, lag)
        mc = montecarlo.estimate_autocorr(n, profile, lag, opts["n_walks"],
                                          opts["seed"], n_jobs=opts["n_jobs"])
        rows.append((lag, exact.value_exact, exact.value_leading,
                     mc.estimate.value, mc.estimate.se))
    _emit_table(opts, _provenance("autocorr", opts),
                ("lag", "exact", "leading", "mc_estimate", "mc_se"), rows)
    return 0


def cmd_sample(opts) -> int:
    profile = _walk_profile(opts)
    stats = montecarlo.sample_ensemble(opts["n"], profile, opts["n_walks"],
                                       opts["seed"], strict=opts["strict"],
                                       n_jobs=opts["n_jobs"])
    rows = [
        ("mean", stats.mean.value, stats.mean.se),
        ("variance", stats.variance.value, stats.variance.se),
        ("fourth", stats.fourth.value, stats.fourth.se),
        ("kurtosis", stats.kurtosis.value, stats.kurtosis.se),
        ("mean_abs", stats.mean_abs.value, stats.mean_abs.se),
    ]
    _emit_table(opts, _provenance("sample", opts),
                ("statistic", "value", "se"), rows)
    return 0


def _load_returns(opts) -> fitting.ReturnSeries:
    if (opts["input"] is None) == (opts["returns_csv"] is None):
        raise ValueError("exactly one of --input / --returns-csv is required")
    if opts["input"] is not None:
        series = fitting.load_price_series(opts["input"])
        return fitting.returns(series, mode=opts["returns_mode"])
    path = opts["returns_csv"]
    values = []
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline().strip()
        if header != "return":
            raise ParseError(f"expected header 'return', got {header!r}", line=1)
        for lineno, raw in enumerate(handle, start=2):
            line = raw.strip()
            if not line:
                continue
            try:
                value = float(line)
            except ValueError:
                raise ParseError(f"bad return value {line!r}", line=lineno) from None
            if not math.isfinite(value):
                raise ParseError(f"non-finite return {line!r}", line=lineno)
            values.append(value)
    return fitting.ReturnSeries(values=values, source=str(path),
                                n_prices=len(values) + 1)


def cmd_fit(opts) -> int:
    ret = _load_returns(opts)
    empirical = fitting.histogram_pdf(ret.values, bin_width_sigma=opts["bin_width"])
    result = fitting.fit_regime_model(
        empirical, bounds=opts["bounds"], fit_range=opts["fit_range"],
        n_model=opts["n_model"], weighting=opts["weighting"],
        doubling_check=opts["doubling_check"],
    )
    gauss = fitting.gaussian_slice_chi2(empirical, fit_range=opts["fit_range"],
                                        n_model=opts["n_model"],
                                        weighting=opts["weighting"])
    doc = {
        "b": result.b,
        "delta_sigma": result.delta_sigma,
        "delta_lattice": result.delta_lattice,
        "kappa": result.kappa,
        "chi2": result.chi2,
        "n_model": result.n_model,
        "fit_range": list(result.fit_range),
        "validity_fraction": result.validity_fraction,
        "n_bins_used": result.n_bins_used,
        "gaussian_chi2": gauss,
        "doubling_shift": result.doubling_shift,
        "n_returns": len(ret.values),
        "provenance": _provenance("fit", opts),
    }
    text = json.dumps(doc, indent=2) + "\n"
    if opts["out"]:
        with open(opts["out"], "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_baseline(opts) -> int:
    import numpy as np

    if opts["points"] < 2:
        raise ValueError("--points must be at least 2")
    grid = np.linspace(-opts["u_max"], opts["u_max"], opts["points"])
    gauss = fitting.gaussian_density(grid)
    stable = fitting.stable_density(opts["alpha"], opts["scale"], grid)
    rows = [(float(u), float(g), float(s))
            for u, g, s in zip(grid, gauss, stable)]
    _emit_table(opts, _provenance("baseline", opts),
                ("u", "gaussian", "stable"), rows)
    return 0


def cmd_synth(opts) -> int:
    ret = fitting.synthesize_returns(
        (opts["b"], opts["delta_sigma"], opts["kappa"]),
        opts["n_walks"], opts["seed"],
        n_model=opts["n_model"], jitter=opts["jitter"],
    )
    rows = [(float(v),) for v in ret.values]
    _emit_table(opts, _provenance("synth", opts), ("return",), rows)
    return 0


_HANDLERS = {
    "pdf": cmd_pdf,
    "moments": cmd_moments,
    "convergence": cmd_convergence,
    "autocorr": cmd_autocorr,
    "sample": cmd_sample,
    "fit": cmd_fit,
    "baseline": cmd_baseline,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _merge_options(args)
        return _HANDLERS[args.command](opts)
    except CouplingOutOfRange as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OptimizerStalled, NonConvergentNormalization,
            QuadratureFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except MemwalkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
