"""The three parametric estimators on synthetic samples with known truth.

* truncated log-normal body fit (least squares on the binned density),
  with its Monte Carlo goodness-of-fit p-value and a gamma comparison fit;
* power-law tail fit (KS-scanned threshold + closed-form MLE exponent);
* saturating-exponential queue profile fit.
"""
import numpy as np

from lobcancel import distfit as df
from lobcancel.profiles import BinSpec, accumulate_pdf

rng = np.random.default_rng(2003)

# -- truncated log-normal ------------------------------------------------------
mu, sigma = -2.14, 1.11
xs = df.sample_trunc_lognormal(100_000, mu, sigma, rng)
pdf = accumulate_pdf(xs, BinSpec("uniform", 50))
fit = df.fit_lognormal_lsq(pdf)
p = df.gof_pvalue_mc(pdf, fit, repeats=200, seed=1)
print("truncated log-normal fit")
print(f"  truth   mu={mu:+.3f}  sigma={sigma:.3f}")
print(f"  fitted  mu={fit.mu:+.3f}  sigma={fit.sigma:.3f}  rms={fit.rms:.4f}  p={p:.2f}")
print(f"  mass of the untruncated density on (0,1]: {fit.unit_mass:.4f}")

gamma_fit = df.fit_gamma_lsq(pdf)
print(f"  gamma comparison: shape={gamma_fit.shape:.3f} scale={gamma_fit.scale:.3f} "
      f"rms={gamma_fit.rms:.4f}  (log-normal rms {fit.rms:.4f} is smaller)")

# -- power-law tail ---------------------------------------------------------------
alpha, xmin = 2.5, 1.0
tail_samples = df.sample_pareto(10_000, alpha, xmin, rng)
pl = df.fit_powerlaw_tail(tail_samples)
print("\npower-law tail fit")
print(f"  truth   alpha={alpha:.3f}  threshold={xmin:.2f}")
print(f"  fitted  alpha={pl.alpha:.3f} +- {pl.stderr:.3f}  threshold={pl.xmin:.3f}  "
      f"tail={pl.tail_size}  KS={pl.ks:.4f}")

# -- exponential queue profile -----------------------------------------------------
beta = -25.0
ys = df.sample_exp_profile(100_000, beta, rng)
ex = df.fit_exp_profile(accumulate_pdf(ys, BinSpec("uniform", 50)))
print("\nsaturating-exponential queue profile fit")
print(f"  truth   beta={beta:.2f}")
print(f"  fitted  beta={ex.beta:.2f}  norm={ex.norm:.5f}  rms={ex.rms:.4f}")
