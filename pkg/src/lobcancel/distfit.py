"""Parametric fits for the cancellation position densities.

Three model families, each with its own estimator:

* log-normal restricted to (0, 1], fitted to a binned density by unweighted
  least squares at bin centers, with a Monte Carlo goodness-of-fit p-value;
* power-law right tail, threshold chosen by minimizing the Kolmogorov-Smirnov
  distance over candidate thresholds and the exponent set by closed-form
  maximum likelihood on the surviving tail;
* saturating-exponential queue profile (1 - e^(beta*y)) / norm on (0, 1],
  fitted by bounded scalar least squares.

A gamma alternative restricted to (0, 1] shares the least-squares machinery
so the two body fits can be compared by their rms values.

All fitters are pure functions of (data, config, seed); repeated runs with
the same inputs return bit-identical results.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize
from scipy.special import gammainc, gammaln, ndtri

from .profiles import EmpiricalPdf, pdf_from_edges


class FitError(Exception):
    pass


class TooFewBins(FitError):
    pass


class TooFewSamples(FitError):
    pass


class TailTooSmall(FitError):
    pass


class OptimizerDidNotConverge(FitError):
    pass


MU_BOUNDS = (-6.0, 2.0)
SIGMA_BOUNDS = (0.05, 4.0)
BETA_BOUNDS = (-100.0, -0.01)
GAMMA_SHAPE_BOUNDS = (0.02, 50.0)
GAMMA_SCALE_BOUNDS = (1e-3, 20.0)
MIN_FIT_BINS = 10
MIN_TAIL_SIZE = 50
MAX_TAIL_CANDIDATES = 500
_XATOL = 1e-7  # refinement tolerance in parameter space


@dataclass(frozen=True)
class LogNormalFit:
    mu: float
    sigma: float
    unit_mass: float          # mass of lognormal(mu, sigma) on (0, 1]
    rms: float                # rms of (fit - empirical density) over bins
    p_value: float | None = None


@dataclass(frozen=True)
class GammaFit:
    shape: float
    scale: float
    unit_mass: float
    rms: float


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float              # tail exponent, > 1
    xmin: float               # threshold minimizing the KS distance
    tail_size: int            # samples strictly above xmin
    stderr: float             # (alpha - 1) / sqrt(tail_size)
    ks: float                 # minimized KS distance


@dataclass(frozen=True)
class ExpProfileFit:
    beta: float               # negative rate of the saturating exponential
    norm: float               # integral of (1 - e^(beta*y)) over (0, 1]
    rms: float


# -- model densities -----------------------------------------------------------


def lognormal_unit_mass(mu: float, sigma: float) -> float:
    """Probability a lognormal(mu, sigma) variate falls in (0, 1]."""
    return 0.5 * (1.0 + math.erf(-mu / (sigma * math.sqrt(2.0))))


def trunc_lognormal_pdf(x, mu: float, sigma: float) -> np.ndarray:
    """Log-normal density renormalized to integrate to one over (0, 1]."""
    x = np.asarray(x, float)
    mass = lognormal_unit_mass(mu, sigma)
    out = np.exp(-((np.log(x) - mu) ** 2) / (2.0 * sigma**2))
    out /= math.sqrt(2.0 * math.pi) * sigma * x * mass
    return out


def gamma_unit_mass(shape: float, scale: float) -> float:
    return float(gammainc(shape, 1.0 / scale))


def trunc_gamma_pdf(x, shape: float, scale: float) -> np.ndarray:
    """Gamma density renormalized to integrate to one over (0, 1]."""
    x = np.asarray(x, float)
    mass = gamma_unit_mass(shape, scale)
    log_pdf = (shape - 1.0) * np.log(x) - x / scale - gammaln(shape) - shape * math.log(scale)
    return np.exp(log_pdf) / mass


def exp_profile_norm(beta: float) -> float:
    """Closed form of the saturating-exponential normalizer on (0, 1].

    Equals 1 - (e^beta - 1)/beta; the removable singularity at beta = 0 is
    handled by its series so the function is smooth through zero.
    """
    if abs(beta) < 1e-6:
        return -beta / 2.0 - beta**2 / 6.0 - beta**3 / 24.0
    return 1.0 - (math.exp(beta) - 1.0) / beta


def exp_profile_pdf(y, beta: float) -> np.ndarray:
    y = np.asarray(y, float)
    return (1.0 - np.exp(beta * y)) / exp_profile_norm(beta)


# -- samplers --------------------------------------------------------------------


def sample_trunc_lognormal(n: int, mu: float, sigma: float, rng) -> np.ndarray:
    """Inverse-CDF draws from the log-normal restricted to (0, 1]."""
    u = 1.0 - rng.random(n)  # (0, 1], so no draw maps to 0
    mass = lognormal_unit_mass(mu, sigma)
    return np.exp(mu + sigma * ndtri(u * mass))


def sample_pareto(n: int, alpha: float, xmin: float, rng) -> np.ndarray:
    """Inverse-CDF draws from a Pareto density ~ x^-alpha on [xmin, inf)."""
    u = 1.0 - rng.random(n)
    return xmin * u ** (-1.0 / (alpha - 1.0))


def sample_exp_profile(n: int, beta: float, rng, grid: int = 4096) -> np.ndarray:
    """Draws from (1 - e^(beta*y))/norm on (0, 1] via a tabulated inverse CDF."""
    y = np.linspace(0.0, 1.0, grid + 1)
    cdf = (y - (np.exp(beta * y) - 1.0) / beta) / exp_profile_norm(beta)
    cdf[0] = 0.0
    cdf[-1] = 1.0
    u = 1.0 - rng.random(n)
    return np.interp(u, cdf, y)


# -- least-squares body fits --------------------------------------------------


def _require_bins(pdf: EmpiricalPdf) -> tuple[np.ndarray, np.ndarray]:
    if pdf.nonempty_bins() < MIN_FIT_BINS:
        raise TooFewBins(f"need >= {MIN_FIT_BINS} non-empty bins, got {pdf.nonempty_bins()}")
    return pdf.centers(), np.asarray(pdf.density, float)


def _lognormal_sse(params: np.ndarray, centers: np.ndarray, density: np.ndarray) -> float:
    mu, sigma = params
    mass = lognormal_unit_mass(mu, sigma)
    if not mass > 1e-300:
        return 1e300
    model = np.exp(-((np.log(centers) - mu) ** 2) / (2.0 * sigma**2))
    model /= math.sqrt(2.0 * math.pi) * sigma * centers * mass
    diff = model - density
    return float(diff @ diff)


def _lognormal_grid_start(centers: np.ndarray, density: np.ndarray) -> np.ndarray:
    mus = np.linspace(MU_BOUNDS[0], MU_BOUNDS[1], 17)
    sigmas = np.linspace(SIGMA_BOUNDS[0], SIGMA_BOUNDS[1], 16)
    log_c = np.log(centers)
    best = None
    best_sse = math.inf
    for sigma in sigmas:
        for mu in mus:
            mass = 0.5 * (1.0 + math.erf(-mu / (sigma * math.sqrt(2.0))))
            if not mass > 1e-300:
                continue
            model = np.exp(-((log_c - mu) ** 2) / (2.0 * sigma**2)) / (
                math.sqrt(2.0 * math.pi) * sigma * centers * mass
            )
            sse = float(np.sum((model - density) ** 2))
            if sse < best_sse:
                best_sse = sse
                best = (mu, sigma)
    return np.asarray(best)


def fit_lognormal_lsq(pdf: EmpiricalPdf, *, start=None) -> LogNormalFit:
    """Least-squares truncated log-normal fit to a binned density on (0, 1].

    Minimizes the sum of squared differences between the model density at bin
    centers and the empirical density, with the truncation normalizer
    recomputed for every candidate parameter pair. The search is a coarse
    grid (skipped when ``start`` is given) refined by bounded Nelder-Mead.
    """
    centers, density = _require_bins(pdf)
    x0 = np.asarray(start, float) if start is not None else _lognormal_grid_start(centers, density)
    res = optimize.minimize(
        _lognormal_sse,
        x0,
        args=(centers, density),
        method="Nelder-Mead",
        bounds=[MU_BOUNDS, SIGMA_BOUNDS],
        options={"xatol": _XATOL, "fatol": 1e-12, "maxiter": 4000, "maxfev": 4000},
    )
    if not res.success:
        raise OptimizerDidNotConverge(f"log-normal fit did not converge: {res.message}")
    mu, sigma = (float(v) for v in res.x)
    rms = math.sqrt(res.fun / len(density))
    return LogNormalFit(mu, sigma, lognormal_unit_mass(mu, sigma), rms)


def fit_gamma_lsq(pdf: EmpiricalPdf) -> GammaFit:
    """Least-squares truncated gamma fit; comparison partner for the log-normal."""
    centers, density = _require_bins(pdf)

    def sse(params: np.ndarray) -> float:
        shape, scale = params
        mass = gamma_unit_mass(shape, scale)
        if not mass > 1e-300:
            return 1e300
        diff = trunc_gamma_pdf(centers, shape, scale) - density
        return float(diff @ diff)

    shapes = np.geomspace(GAMMA_SHAPE_BOUNDS[0], GAMMA_SHAPE_BOUNDS[1], 14)
    scales = np.geomspace(GAMMA_SCALE_BOUNDS[0], GAMMA_SCALE_BOUNDS[1], 14)
    x0 = min(
        ((s, t) for s in shapes for t in scales),
        key=lambda p: sse(np.asarray(p)),
    )
    res = optimize.minimize(
        sse,
        np.asarray(x0),
        method="Nelder-Mead",
        bounds=[GAMMA_SHAPE_BOUNDS, GAMMA_SCALE_BOUNDS],
        options={"xatol": _XATOL, "fatol": 1e-12, "maxiter": 4000, "maxfev": 4000},
    )
    if not res.success:
        raise OptimizerDidNotConverge(f"gamma fit did not converge: {res.message}")
    shape, scale = (float(v) for v in res.x)
    return GammaFit(shape, scale, gamma_unit_mass(shape, scale), math.sqrt(res.fun / len(density)))


def fit_exp_profile(pdf: EmpiricalPdf) -> ExpProfileFit:
    """Bounded least-squares fit of (1 - e^(beta*y))/norm to a binned density.

    beta is scanned over [-100, -0.01]; the upper bound keeps the fitter away
    from the degenerate beta -> 0 limit where the shape loses all mass.
    """
    centers, density = _require_bins(pdf)

    def sse(beta: float) -> float:
        diff = (1.0 - np.exp(beta * centers)) / exp_profile_norm(beta) - density
        return float(diff @ diff)

    res = optimize.minimize_scalar(
        sse, bounds=BETA_BOUNDS, method="bounded", options={"xatol": 1e-6, "maxiter": 500}
    )
    if not res.success:
        raise OptimizerDidNotConverge(f"exponential profile fit did not converge: {res.message}")
    beta = float(res.x)
    return ExpProfileFit(beta, exp_profile_norm(beta), math.sqrt(res.fun / len(density)))


# -- power-law tail -----------------------------------------------------------


def pareto_alpha_mle(tail: np.ndarray, xmin: float) -> float:
    """Closed-form maximum-likelihood exponent for samples above xmin."""
    tail = np.asarray(tail, float)
    return 1.0 + tail.size / float(np.sum(np.log(tail / xmin)))


def pareto_ks(tail: np.ndarray, xmin: float, alpha: float) -> float:
    """KS distance between the tail's empirical CDF and the fitted power law.

    The empirical CDF is rank/m evaluated at the sorted tail points only.
    """
    tail = np.sort(np.asarray(tail, float))
    m = tail.size
    model = 1.0 - (xmin / tail) ** (alpha - 1.0)
    empirical = np.arange(1, m + 1) / m
    return float(np.max(np.abs(empirical - model)))


def fit_powerlaw_tail(
    samples,
    *,
    min_tail: int = MIN_TAIL_SIZE,
    max_candidates: int = MAX_TAIL_CANDIDATES,
) -> PowerLawFit:
    """Power-law tail fit with KS-scanned threshold and MLE exponent.

    Candidate thresholds are the unique sample values whose strict tail keeps
    at least ``min_tail`` points; when more than ``max_candidates`` qualify
    the scan is thinned evenly by rank (keeping both extremes) for speed. For
    each candidate the exponent comes from the closed-form MLE over the tail
    and the candidate minimizing the KS distance wins.
    """
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size
    if n < 100:
        raise TooFewSamples(f"need >= 100 samples, got {n}")
    if np.any(xs <= 0.0):
        raise ValueError("samples must be positive")
    uniq = np.unique(xs)
    tail_sizes = n - np.searchsorted(xs, uniq, side="right")
    candidates = uniq[tail_sizes >= min_tail]
    if candidates.size == 0:
        raise TailTooSmall(f"no threshold leaves >= {min_tail} tail points")
    if candidates.size > max_candidates:
        keep = np.unique(np.round(np.linspace(0, candidates.size - 1, max_candidates)).astype(int))
        candidates = candidates[keep]

    log_xs = np.log(xs)
    suffix_log = np.concatenate((np.cumsum(log_xs[::-1])[::-1], [0.0]))
    ranks = np.arange(1, n + 1)

    best_ks = math.inf
    best = None
    for xmin in candidates:
        i = int(np.searchsorted(xs, xmin, side="right"))
        m = n - i
        alpha = 1.0 + m / (suffix_log[i] - m * math.log(xmin))
        model = 1.0 - (xmin / xs[i:]) ** (alpha - 1.0)
        ks = float(np.max(np.abs((ranks[:m]) / m - model)))
        if ks < best_ks:
            best_ks = ks
            best = (float(alpha), float(xmin), m)
    alpha, xmin, m = best
    return PowerLawFit(alpha, xmin, m, (alpha - 1.0) / math.sqrt(m), best_ks)


# -- Monte Carlo goodness of fit ------------------------------------------------


def gof_pvalue_mc(
    pdf: EmpiricalPdf, fit: LogNormalFit, repeats: int = 1000, seed: int = 0
) -> float:
    """Semi-parametric bootstrap p-value for a truncated log-normal fit.

    Draws ``repeats`` synthetic samples of the empirical size from the fitted
    model, rebins each on the same edges, refits, and returns the fraction of
    synthetic rms values at or above the empirical rms. Each repeat uses its
    own derived seed, so parallel and serial evaluation orders agree.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    edges = np.asarray(pdf.bin_edges, float)
    count = pdf.count
    start = (fit.mu, fit.sigma)
    hits = 0
    for rep in range(repeats):
        rng = np.random.default_rng([seed, rep])
        draw = sample_trunc_lognormal(count, fit.mu, fit.sigma, rng)
        synth = pdf_from_edges(draw, edges, pdf.domain)
        try:
            refit = fit_lognormal_lsq(synth, start=start)
        except FitError:
            hits += 1  # unfittable draw counts as at least as extreme
            continue
        if refit.rms >= fit.rms:
            hits += 1
    return hits / repeats


def with_p_value(fit: LogNormalFit, p: float) -> LogNormalFit:
    return replace(fit, p_value=p)
