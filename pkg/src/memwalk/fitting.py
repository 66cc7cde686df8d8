"""Return ingestion, histogramming, model fitting, and baseline densities.

The fitted object is the displacement distribution of a walk with the
well-shaped coupling, laid over standardized return data: the lattice is run
at resolution n_model, rescaled to unit variance, and compared to the binned
data through the chi-square of log densities over the tail range.
"""

from __future__ import annotations

import csv
import datetime
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize

from . import lattice, montecarlo
from .errors import (
    EmptyFile,
    InsufficientBins,
    NonConvergentNormalization,
    NonPositivePrice,
    OptimizerStalled,
    ParseError,
    QuadratureFailure,
)
from .profiles import ConstantCoupling, GaussianWellCoupling

__all__ = [
    "PriceSeries",
    "ReturnSeries",
    "EmpiricalPdf",
    "ModelEval",
    "TraceEntry",
    "FitResult",
    "DEFAULT_BIN_WIDTH",
    "DEFAULT_FIT_RANGE",
    "DEFAULT_BOUNDS",
    "DEFAULT_N_MODEL",
    "load_price_series",
    "returns",
    "histogram_pdf",
    "model_pdf_continuum",
    "chi2_logpdf",
    "fit_regime_model",
    "gaussian_slice_chi2",
    "gaussian_density",
    "stable_density",
    "synthesize_returns",
]

DEFAULT_BIN_WIDTH = 0.25
DEFAULT_FIT_RANGE = (1.5, 10.0)
DEFAULT_BOUNDS = ((0.05, 1.5), (2.0, 30.0), (0.0, 6.0))  # b, delta_sigma, kappa
DEFAULT_N_MODEL = 1000


@dataclass(frozen=True)
class PriceSeries:
    prices: np.ndarray
    dates: list
    path: str | None


@dataclass(frozen=True)
class ReturnSeries:
    """Dimensionless per-step returns plus where they came from."""

    values: np.ndarray
    source: str | None = None
    n_prices: int | None = None


@dataclass(frozen=True)
class EmpiricalPdf:
    """Binned density of standardized (mean 0, variance 1) returns."""

    bin_centers: np.ndarray
    densities: np.ndarray
    counts: np.ndarray
    total_n: int
    bin_width: float


@dataclass(frozen=True)
class ModelEval:
    """Model density evaluated on a grid of standardized return values."""

    densities: np.ndarray
    sigma_model: float
    delta_lattice: float
    validity_fraction: float
    n_model: int


@dataclass(frozen=True)
class TraceEntry:
    start: tuple
    params: tuple
    chi2: float
    n_iter: int
    converged: bool


@dataclass(frozen=True)
class FitResult:
    b: float
    delta_sigma: float
    delta_lattice: float
    kappa: float
    chi2: float
    n_model: int
    fit_range: tuple
    validity_fraction: float
    n_bins_used: int
    doubling_shift: float | None
    trace: list


def load_price_series(path) -> PriceSeries:
    """Read a date,price CSV; ISO dates, positive decimal prices.

    Rows are returned in date order; out-of-order input is sorted with a
    warning, duplicate dates are an error.
    """
    dates = []
    prices = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path}: empty file")
        if [c.strip().lower() for c in header] != ["date", "price"]:
            raise ParseError(f"{path}: header must be 'date,price'", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ParseError(f"{path}: expected 2 columns, got {len(row)}",
                                 line=lineno)
            try:
                day = datetime.date.fromisoformat(row[0].strip())
            except ValueError as exc:
                raise ParseError(f"{path}: bad date {row[0]!r}: {exc}",
                                 line=lineno) from exc
            try:
                price = float(row[1])
            except ValueError as exc:
                raise ParseError(f"{path}: bad price {row[1]!r}", line=lineno) from exc
            if not math.isfinite(price) or price <= 0.0:
                raise NonPositivePrice(f"{path}: price must be finite and > 0, "
                                       f"got {row[1]}", line=lineno)
            dates.append(day)
            prices.append(price)
    if not prices:
        raise EmptyFile(f"{path}: no data rows")
    if len(set(dates)) != len(dates):
        seen = set()
        for lineno_off, day in enumerate(dates):
            if day in seen:
                raise ParseError(f"{path}: duplicate date {day.isoformat()}",
                                 line=lineno_off + 2)
            seen.add(day)
    order = sorted(range(len(dates)), key=lambda i: dates[i])
    if order != list(range(len(dates))):
        warnings.warn(f"{path}: rows were not in date order; sorted")
        dates = [dates[i] for i in order]
        prices = [prices[i] for i in order]
    return PriceSeries(np.array(prices, dtype=np.float64), dates, str(path))


def returns(series, mode: str = "simple") -> ReturnSeries:
    """Per-step returns of a price sequence.

    mode="simple": (s_{i+1} - s_i)/s_i (the default);  mode="log":
    ln(s_{i+1}/s_i).
    """
    if isinstance(series, PriceSeries):
        prices = series.prices
        source = series.path
    else:
        prices = np.asarray(series, dtype=np.float64)
        source = None
    if prices.ndim != 1 or len(prices) < 2:
        raise ValueError("need a flat sequence of at least 2 prices")
    if mode == "simple":
        values = np.diff(prices) / prices[:-1]
    elif mode == "log":
        values = np.log(prices[1:] / prices[:-1])
    else:
        raise ValueError(f"unknown return mode {mode!r}")
    if not np.all(np.isfinite(values)):
        raise ValueError("returns contain non-finite values")
    return ReturnSeries(values, source, len(prices))


def histogram_pdf(ret, bin_width_sigma: float = DEFAULT_BIN_WIDTH) -> EmpiricalPdf:
    """Bin standardized returns into symmetric bins centered on 0.

    Returns are shifted to mean 0 and scaled to variance 1, then counted in
    bins of width bin_width_sigma whose centers sit at integer multiples of
    the width; density = count/(n * width).  Zero-count bins are kept (the
    chi-square step skips them).
    """
    if bin_width_sigma <= 0:
        raise ValueError("bin width must be > 0")
    values = ret.values if isinstance(ret, ReturnSeries) else np.asarray(ret, float)
    if values.size < 2:
        raise ValueError("need at least 2 returns")
    std = float(values.std())
    if std == 0.0:
        raise ValueError("returns have zero variance")
    u = (values - values.mean()) / std
    w = bin_width_sigma
    k_hi = max(1, int(np.ceil(np.abs(u).max() / w - 0.5)))
    edges = (np.arange(-k_hi, k_hi + 2) - 0.5) * w
    centers = np.arange(-k_hi, k_hi + 1) * w
    counts, _ = np.histogram(u, bins=edges)
    n = int(counts.sum())
    return EmpiricalPdf(centers, counts / (n * w), counts.astype(np.int64), n, w)


def _solve_sigma(b, delta_sigma, kappa, n_model, backend_name=None,
                 tol=1e-10, max_iter=20):
    """Self-consistent model scale: delta_lattice = delta_sigma * sigma_model.

    sigma_model is the model's own standard deviation, which depends on
    delta_lattice; iterate until the relative change in sigma is below tol.
    """
    eps = kappa / n_model
    sigma = math.sqrt(n_model)
    pdf = report = None
    for _ in range(max_iter):
        if kappa == 0.0:
            profile = ConstantCoupling(0.0)
        else:
            profile = GaussianWellCoupling(eps, b, delta_sigma * sigma)
        pdf, report = lattice.evolve(n_model, profile, backend_name=backend_name)
        var = lattice.moments(pdf, max_order=2).variance
        new_sigma = math.sqrt(var)
        if abs(new_sigma - sigma) <= tol * sigma:
            return pdf, report, new_sigma
        sigma = new_sigma
    raise NonConvergentNormalization(
        f"sigma iteration did not settle in {max_iter} passes "
        f"(b={b}, delta_sigma={delta_sigma}, kappa={kappa})"
    )


def model_pdf_continuum(params, n_model: int, eval_points, *,
                        backend_name: str | None = None) -> ModelEval:
    """Model density at standardized return values.

    params = (b, delta_sigma, kappa); the walk runs n_model steps with
    coupling kappa/n_model inside a well of half-width delta_sigma in
    sigma units.  The lattice mass P(x) maps to density P(x)*sigma/2 at
    u = x/sigma; log density is interpolated linearly between lattice
    points (evaluation is folded to |u|, the model is exactly symmetric).
    """
    b, delta_sigma, kappa = params
    if n_model < 100:
        raise ValueError(f"n_model must be >= 100, got {n_model}")
    pdf, report, sigma = _solve_sigma(b, delta_sigma, kappa, n_model,
                                      backend_name)
    u_lattice = pdf.displacements.astype(np.float64) / sigma
    dens = pdf.probs * (sigma / 2.0)
    mask = dens > 0.0
    log_dens = np.log(dens[mask])
    pts = np.abs(np.asarray(eval_points, dtype=np.float64))
    out = np.exp(np.interp(pts, u_lattice[mask], log_dens))
    return ModelEval(
        densities=out,
        sigma_model=sigma,
        delta_lattice=delta_sigma * sigma,
        validity_fraction=report.clamped_mass,
        n_model=n_model,
    )


def _fit_bins(empirical: EmpiricalPdf, fit_range):
    lo, hi = fit_range
    sel = ((empirical.counts > 0)
           & (np.abs(empirical.bin_centers) >= lo)
           & (np.abs(empirical.bin_centers) <= hi))
    return np.nonzero(sel)[0]


def chi2_logpdf(empirical: EmpiricalPdf, model_densities, fit_range=DEFAULT_FIT_RANGE,
                *, weighting: str = "unweighted") -> tuple[float, int]:
    """Sum of squared log-density residuals over populated bins in range.

    model_densities must align with empirical.bin_centers.  Both tails
    enter (the range applies to |center|).  weighting="poisson" multiplies
    each term by its bin count (inverse delta-method variance of a log
    count), for diagnostics only.
    Returns (chi2, n_bins_used); fewer than 3 usable bins is an error.
    """
    idx = _fit_bins(empirical, fit_range)
    if len(idx) < 3:
        raise InsufficientBins(
            f"only {len(idx)} populated bins with |center| in {fit_range}"
        )
    model = np.asarray(model_densities, dtype=np.float64)[idx]
    if np.any(model <= 0.0):
        return float("inf"), len(idx)
    resid = np.log(empirical.densities[idx]) - np.log(model)
    if weighting == "poisson":
        chi2 = float(np.dot(empirical.counts[idx], resid * resid))
    elif weighting == "unweighted":
        chi2 = float(np.dot(resid, resid))
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    return chi2, len(idx)


def _chi2_on_selected(empirical, model_at_sel, idx, weighting):
    model = np.asarray(model_at_sel, dtype=np.float64)
    if np.any(model <= 0.0):
        return float("inf")
    resid = np.log(empirical.densities[idx]) - np.log(model)
    if weighting == "poisson":
        return float(np.dot(empirical.counts[idx], resid * resid))
    return float(np.dot(resid, resid))


def _run_simplex(fun, x0, bounds, xatol, fatol, maxiter):
    return minimize(
        fun, np.asarray(x0, dtype=np.float64), method="Nelder-Mead",
        bounds=bounds,
        options={"xatol": xatol, "fatol": fatol, "maxiter": maxiter,
                 "maxfev": maxiter},
    )


def fit_regime_model(empirical: EmpiricalPdf, *, bounds=DEFAULT_BOUNDS,
                     fit_range=DEFAULT_FIT_RANGE, n_model: int = DEFAULT_N_MODEL,
                     xatol: float = 1e-6, fatol: float = 1e-6,
                     maxiter: int = 2000, n_polish: int = 3,
                     weighting: str = "unweighted",
                     doubling_check: bool = True,
                     backend_name: str | None = None) -> FitResult:
    """Best (b, delta_sigma, kappa) by simplex descent of the log-chi-square.

    Multi-start scheme: a deterministic 3x3x3 grid of starts spans the
    bounds, plus one start on the kappa=0 line so the uncoupled
    (Gaussian-limit) model is always reachable; every start gets a cheap
    coarse simplex pass and the n_polish best coarse results are polished to
    the requested tolerance.  The winner can never be worse than the
    Gaussian slice (the simplex never returns a point above its start).
    Ties break lexicographically on (chi2, b, delta_sigma, kappa).
    """
    if empirical.total_n < 100:
        raise ValueError("need at least 100 returns to fit")
    idx = _fit_bins(empirical, fit_range)
    if len(idx) < 3:
        raise InsufficientBins(
            f"only {len(idx)} populated bins with |center| in {fit_range}"
        )
    sel_centers = empirical.bin_centers[idx]

    def objective(x, nm=n_model):
        for value, (lo, hi) in zip(x, bounds):
            if not (lo <= value <= hi):
                return float("inf")
        try:
            ev = model_pdf_continuum(tuple(x), nm, sel_centers,
                                     backend_name=backend_name)
        except NonConvergentNormalization:
            return float("inf")
        return _chi2_on_selected(empirical, ev.densities, idx, weighting)

    fracs = (0.2, 0.5, 0.8)
    starts = [
        (blo + fb * (bhi - blo), dlo + fd * (dhi - dlo), klo + fk * (khi - klo))
        for (blo, bhi) in [bounds[0]] for (dlo, dhi) in [bounds[1]]
        for (klo, khi) in [bounds[2]]
        for fb in fracs for fd in fracs for fk in fracs
    ]
    (blo, bhi), (dlo, dhi), (klo, khi) = bounds
    starts.append((0.5 * (blo + bhi), 0.5 * (dlo + dhi), klo))

    trace = []
    coarse = []
    for x0 in starts:
        # coarse pass: just good enough to rank basins for polishing
        res = _run_simplex(objective, x0, bounds, max(xatol, 1e-3),
                           max(fatol, 1e-5), min(maxiter, 300))
        entry = TraceEntry(
            start=tuple(round(v, 12) for v in x0),
            params=tuple(float(v) for v in res.x),
            chi2=float(res.fun),
            n_iter=int(res.nit),
            converged=False,
        )
        trace.append(entry)
        if math.isfinite(entry.chi2):
            coarse.append(entry)
    coarse.sort(key=lambda e: (e.chi2, *e.params))

    best = None
    for seed_entry in coarse[:max(1, n_polish)]:
        res = _run_simplex(objective, seed_entry.params, bounds, xatol, fatol,
                           maxiter)
        entry = TraceEntry(
            start=seed_entry.params,
            params=tuple(float(v) for v in res.x),
            chi2=float(res.fun),
            n_iter=int(res.nit),
            converged=bool(res.success),
        )
        trace.append(entry)
        if entry.converged and math.isfinite(entry.chi2):
            key = (entry.chi2, *entry.params)
            if best is None or key < best[0]:
                best = (key, entry)
    if best is None:
        raise OptimizerStalled(
            f"no polished simplex converged to xatol={xatol}/fatol={fatol} "
            f"within {maxiter} iterations"
        )
    winner = best[1]
    b, delta_sigma, kappa = winner.params

    ev = model_pdf_continuum((b, delta_sigma, kappa), n_model, sel_centers,
                             backend_name=backend_name)
    doubling_shift = None
    if doubling_check:
        # restart at the winner; 2N evaluations are ~4x dearer, cap the crawl
        res2 = _run_simplex(lambda x: objective(x, nm=2 * n_model),
                            winner.params, bounds, xatol, fatol,
                            min(maxiter, 400))
        if res2.success and math.isfinite(res2.fun) and winner.chi2 > 0:
            doubling_shift = abs(res2.fun - winner.chi2) / winner.chi2
            if doubling_shift > 0.01:
                warnings.warn(
                    f"chi2 shifts by {doubling_shift:.1%} when the model "
                    f"resolution doubles from {n_model}; consider a larger "
                    f"n_model"
                )
    return FitResult(
        b=b, delta_sigma=delta_sigma, delta_lattice=ev.delta_lattice,
        kappa=kappa, chi2=winner.chi2, n_model=n_model,
        fit_range=tuple(fit_range), validity_fraction=ev.validity_fraction,
        n_bins_used=len(idx), doubling_shift=doubling_shift, trace=trace,
    )


def gaussian_slice_chi2(empirical: EmpiricalPdf, *, fit_range=DEFAULT_FIT_RANGE,
                        n_model: int = DEFAULT_N_MODEL,
                        weighting: str = "unweighted",
                        backend_name: str | None = None) -> float:
    """Chi-square of the kappa=0 (uncoupled) model slice on the same bins."""
    idx = _fit_bins(empirical, fit_range)
    if len(idx) < 3:
        raise InsufficientBins(
            f"only {len(idx)} populated bins with |center| in {fit_range}"
        )
    sel = empirical.bin_centers[idx]
    ev = model_pdf_continuum((1.0, 10.0, 0.0), n_model, sel,
                             backend_name=backend_name)
    return _chi2_on_selected(empirical, ev.densities, idx, weighting)


def gaussian_density(points) -> np.ndarray:
    """Standard normal density."""
    u = np.asarray(points, dtype=np.float64)
    return np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)


def stable_density(alpha: float, scale: float, points) -> np.ndarray:
    """Symmetric alpha-stable density by characteristic-function inversion.

    p(u) = (1/pi) * integral_0^inf cos(u t) exp(-(scale*t)^alpha) dt,
    integrated with cosine-weighted adaptive quadrature on [0, T] where
    (scale*T)^alpha = 41.4 makes the discarded tail < 1e-12.
    alpha=2 is a Gaussian with variance 2*scale^2; alpha=1 is Cauchy.
    """
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"alpha must be in (0, 2], got {alpha}")
    if scale <= 0.0:
        raise ValueError(f"scale must be > 0, got {scale}")
    upper = 41.4 ** (1.0 / alpha) / scale
    u = np.atleast_1d(np.asarray(points, dtype=np.float64))
    out = np.empty_like(u)
    for i, ui in enumerate(u):
        value, abserr = quad(
            lambda t: math.exp(-((scale * t) ** alpha)),
            0.0, upper, weight="cos", wvar=abs(ui),
            epsabs=1e-12, epsrel=1e-12, limit=400,
        )
        if abserr > 1e-10:
            raise QuadratureFailure(
                f"inversion integral error {abserr:.2e} at u={ui} "
                f"(alpha={alpha}, scale={scale})"
            )
        out[i] = value / math.pi
    return out if np.ndim(points) else float(out[0])


def synthesize_returns(params, n_walks: int, seed: int, *,
                       n_model: int = DEFAULT_N_MODEL,
                       jitter: bool = True,
                       backend_name: str | None = None) -> ReturnSeries:
    """Draw standardized returns from the model by inverse-CDF lookup.

    params = (b, delta_sigma, kappa) as in model_pdf_continuum.  One Philox
    stream keyed by (seed, splitmix64(seed)) supplies first n_walks uniforms
    for the CDF lookup, then n_walks more for the in-cell jitter.  The
    jitter spreads each lattice point uniformly over its cell (x-1, x+1),
    which reproduces exactly the piecewise continuum density the fitting
    pipeline uses; jitter=False returns bare lattice values.
    """
    if n_walks < 1:
        raise ValueError("need at least 1 sample")
    b, delta_sigma, kappa = params
    pdf, _, sigma = _solve_sigma(b, delta_sigma, kappa, n_model, backend_name)
    cdf = np.cumsum(pdf.probs)
    cdf[-1] = 1.0
    key = np.array([seed & ((1 << 64) - 1), montecarlo.splitmix64(seed)],
                   dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    u1 = gen.random(n_walks)
    idx = np.searchsorted(cdf, u1, side="right")
    x = 2.0 * idx - n_model
    if jitter:
        u2 = gen.random(n_walks)
        x = x + (2.0 * u2 - 1.0)
    return ReturnSeries(x / sigma, source=f"model{params}", n_prices=None)
