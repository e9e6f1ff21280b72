//! Dissipation estimators operating on recorded position time series.
//!
//! Three independent routes to the damping rate gamma:
//!
//! * [`envelope`] + [`fit_decay`]: demodulate a ring-down, bin the squared
//!   amplitude, fit an exponential with weighted least squares.
//! * [`psd_linewidth`]: Welch spectrum + Lorentzian fit; the full width at
//!   half maximum in Hz times 2 pi is gamma.
//! * [`energy_autocorrelation`]: the autocorrelation of the demodulated
//!   energy of thermal motion decays as exp(-gamma tau), insensitive to
//!   slow frequency wander of the resonance.
//!
//! Confidence intervals are widened by the reduced chi-square when the
//! scatter exceeds the nominal errors and by a lag-1 autocorrelation
//! variance inflation factor, so quoted 95% intervals stay close to honest
//! even when envelope bins are correlated.

use crate::lockin::{lockin_demodulate, LockinError};
use crate::spectral::{fit_lorentzian, welch_psd, LorentzianFit, SpectralError};
use crate::series::TimeSeries;
use rustfft::{num_complex::Complex, FftPlanner};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Lockin(#[from] LockinError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("record too short: need {needed_s:.1} s, got {got_s:.1} s")]
    TooShort { needed_s: f64, got_s: f64 },
    #[error("only {got} usable bins, need at least {needed}")]
    TooFewBins { got: usize, needed: usize },
    #[error("no decay detected: {0}")]
    NoDecay(String),
    #[error("singular normal equations in fit")]
    Singular,
    #[error("{0}")]
    BadParameter(String),
}

/// Binned squared envelope of a demodulated record.
#[derive(Debug, Clone)]
pub struct EnvelopeSeries {
    /// Bin centers on the time base of the source record (s).
    pub bin_centers: Vec<f64>,
    /// Mean squared lock-in amplitude per bin (m^2).
    pub x2_mean: Vec<f64>,
    /// Standard error of each bin mean (m^2).
    pub x2_stderr: Vec<f64>,
    /// Bin width (s).
    pub bin_width: f64,
}

impl EnvelopeSeries {
    pub fn len(&self) -> usize {
        self.bin_centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bin_centers.is_empty()
    }
}

/// Demodulate `ts` at `carrier_f_hz`, drop the lock-in settling transient,
/// and average the squared amplitude in bins of `bin_width` seconds.
///
/// Each bin's standard error uses the effective number of independent
/// samples set by the lock-in noise bandwidth, not the raw sample count.
pub fn envelope(
    ts: &TimeSeries,
    carrier_f_hz: f64,
    bandwidth_hz: f64,
    bin_width: f64,
) -> Result<EnvelopeSeries, EstimateError> {
    if !(bin_width > 0.0) {
        return Err(EstimateError::BadParameter("bin_width must be positive".into()));
    }
    let quads = lockin_demodulate(ts, carrier_f_hz, bandwidth_hz)?;
    let settle = quads.settle_samples();
    let x2: Vec<f64> =
        quads.i.iter().zip(&quads.q).skip(settle).map(|(i, q)| i * i + q * q).collect();
    let per_bin = (bin_width / ts.dt).round() as usize;
    if per_bin == 0 {
        return Err(EstimateError::BadParameter(
            "bin_width must cover at least one sample".into(),
        ));
    }
    let n_bins = x2.len() / per_bin;
    if n_bins < 5 {
        return Err(EstimateError::TooShort {
            needed_s: 3.0 / bandwidth_hz + 5.0 * bin_width,
            got_s: ts.duration(),
        });
    }
    // Two cascaded one-pole stages have a noise-equivalent bandwidth of
    // (pi/4) bw, giving bin_width * pi * bw / 2 independent samples per bin.
    let n_eff = (bin_width * std::f64::consts::PI * bandwidth_hz / 2.0)
        .min(per_bin as f64)
        .max(1.0);
    let t_start = ts.t0 + settle as f64 * ts.dt;
    let mut bin_centers = Vec::with_capacity(n_bins);
    let mut x2_mean = Vec::with_capacity(n_bins);
    let mut x2_stderr = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        let chunk = &x2[b * per_bin..(b + 1) * per_bin];
        let mean = chunk.iter().sum::<f64>() / per_bin as f64;
        let var = chunk.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / per_bin as f64;
        bin_centers.push(t_start + (b as f64 + 0.5) * bin_width);
        x2_mean.push(mean);
        x2_stderr.push((var / n_eff).sqrt());
    }
    Ok(EnvelopeSeries { bin_centers, x2_mean, x2_stderr, bin_width })
}

/// Squared-amplitude envelope from plain binned x^2, with no carrier
/// reference: each bin's mean of x^2 is doubled, since a tone of amplitude
/// A averages to A^2/2 over many cycles.
///
/// Frequency pulling (a Duffing backbone during a large-amplitude
/// ring-down, a drifting resonance) leaves this estimate untouched,
/// where a fixed-carrier lock-in would read low once the oscillation
/// slides off its passband. The price is that broadband noise enters
/// at full bandwidth instead of the lock-in's.
pub fn envelope_binned(
    ts: &TimeSeries,
    f0_hz: f64,
    bin_width: f64,
) -> Result<EnvelopeSeries, EstimateError> {
    if !(bin_width > 0.0) {
        return Err(EstimateError::BadParameter("bin_width must be positive".into()));
    }
    if !(f0_hz > 0.0) {
        return Err(EstimateError::BadParameter("f0_hz must be positive".into()));
    }
    let per_bin = (bin_width / ts.dt).round() as usize;
    if per_bin == 0 {
        return Err(EstimateError::BadParameter(
            "bin_width must cover at least one sample".into(),
        ));
    }
    if bin_width * f0_hz < 10.0 {
        return Err(EstimateError::BadParameter(
            "bin_width must span at least ten oscillation cycles".into(),
        ));
    }
    let n_bins = ts.samples.len() / per_bin;
    if n_bins < 5 {
        return Err(EstimateError::TooShort {
            needed_s: 5.0 * bin_width,
            got_s: ts.duration(),
        });
    }
    // Within a bin the squared tone sweeps 0..A^2 twice per cycle, so the
    // sample scatter is the oscillation itself; one cycle is roughly one
    // independent draw of that ripple.
    let n_eff = (bin_width * f0_hz).min(per_bin as f64).max(1.0);
    let mut bin_centers = Vec::with_capacity(n_bins);
    let mut x2_mean = Vec::with_capacity(n_bins);
    let mut x2_stderr = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        let chunk = &ts.samples[b * per_bin..(b + 1) * per_bin];
        let mean = chunk.iter().map(|x| x * x).sum::<f64>() / per_bin as f64;
        let var =
            chunk.iter().map(|x| (x * x - mean).powi(2)).sum::<f64>() / per_bin as f64;
        bin_centers.push(ts.t0 + (b as f64 + 0.5) * bin_width);
        x2_mean.push(2.0 * mean);
        x2_stderr.push(2.0 * (var / n_eff).sqrt());
    }
    Ok(EnvelopeSeries { bin_centers, x2_mean, x2_stderr, bin_width })
}

/// Exponential fit to a binned squared envelope.
#[derive(Debug, Clone)]
pub struct DecayFit {
    /// Estimated damping rate (angular, 1/s).
    pub gamma_hat: f64,
    /// Half-width of the 95% confidence interval on gamma (1/s).
    pub gamma_ci95: f64,
    /// Squared amplitude extrapolated to t = 0 of the record (m^2).
    pub x0_sq: f64,
    pub reduced_chi2: f64,
    pub bins_used: usize,
    pub bins_dropped: usize,
    /// Normalized residuals (data - model)/sigma of the used bins.
    pub residuals: Vec<f64>,
}

/// Student-t 97.5% quantile, exact to 30 degrees of freedom and stepped
/// above that.
fn t95(dof: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179,
        2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
        2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    ];
    match dof {
        0 => f64::INFINITY,
        1..=30 => TABLE[dof - 1],
        31..=40 => 2.03,
        41..=60 => 2.00,
        61..=120 => 1.98,
        _ => 1.96,
    }
}

/// Variance inflation for serially correlated residuals, from the lag-1
/// autocorrelation: (1 + rho)/(1 - rho), rho clamped to [0, 0.95].
fn inflation(residuals: &[f64]) -> f64 {
    if residuals.len() < 3 {
        return 1.0;
    }
    let denom: f64 = residuals.iter().map(|r| r * r).sum();
    if denom <= 0.0 {
        return 1.0;
    }
    let num: f64 = residuals.windows(2).map(|w| w[0] * w[1]).sum();
    let rho = (num / denom).clamp(0.0, 0.95);
    (1.0 + rho) / (1.0 - rho)
}

/// Fit `x2 = a exp(-gamma t)` to the envelope. Suitable when the excitation
/// dwarfs the thermal background; otherwise use [`fit_decay_with_background`].
pub fn fit_decay(env: &EnvelopeSeries) -> Result<DecayFit, EstimateError> {
    fit_decay_with_background(env, 0.0)
}

/// Fit `x2 = a exp(-gamma t) + background` with a known additive background.
///
/// A thermalized mode relaxes toward a mean squared lock-in amplitude of
/// twice the equipartition position variance; passing that level removes
/// the downward bias the floor would impose on gamma late in the decay.
pub fn fit_decay_with_background(
    env: &EnvelopeSeries,
    background: f64,
) -> Result<DecayFit, EstimateError> {
    if !(background >= 0.0) || !background.is_finite() {
        return Err(EstimateError::BadParameter("background must be finite and >= 0".into()));
    }
    let mut t = Vec::with_capacity(env.len());
    let mut y = Vec::with_capacity(env.len());
    let mut sig = Vec::with_capacity(env.len());
    let mut dropped = 0usize;
    let mut y_max = 0.0f64;
    for k in 0..env.len() {
        let (tk, yk, sk) = (env.bin_centers[k], env.x2_mean[k], env.x2_stderr[k]);
        if !(tk.is_finite() && yk.is_finite() && sk.is_finite() && sk >= 0.0) {
            dropped += 1;
            continue;
        }
        t.push(tk);
        y.push(yk);
        sig.push(sk);
        y_max = y_max.max(yk - background);
    }
    let n = t.len();
    if n < 5 {
        return Err(EstimateError::TooFewBins { got: n, needed: 5 });
    }
    if y_max <= 0.0 {
        return Err(EstimateError::NoDecay(
            "signal never rises above the background".into(),
        ));
    }
    // Zero errors (noiseless synthetic data) get a tiny floor so weights
    // stay finite without distorting real data.
    let sig_floor = 1.0e-12 * y_max;
    for s in sig.iter_mut() {
        if *s < sig_floor {
            *s = sig_floor;
        }
    }

    // Log-domain weighted init on bins clearly above the background.
    let (mut ln_a, mut gamma) = {
        let mut sw = 0.0;
        let mut st = 0.0;
        let mut sl = 0.0;
        let mut stt = 0.0;
        let mut stl = 0.0;
        let mut used = 0usize;
        for k in 0..n {
            let yk = y[k] - background;
            if yk <= 3.0 * sig[k] || yk <= 0.0 {
                continue;
            }
            let w = (yk / sig[k]).powi(2);
            let l = yk.ln();
            sw += w;
            st += w * t[k];
            sl += w * l;
            stt += w * t[k] * t[k];
            stl += w * t[k] * l;
            used += 1;
        }
        if used < 2 {
            return Err(EstimateError::NoDecay(
                "too few bins distinguishable from the background".into(),
            ));
        }
        let det = sw * stt - st * st;
        if det.abs() <= f64::EPSILON * sw * stt {
            return Err(EstimateError::Singular);
        }
        let slope = (sw * stl - st * sl) / det;
        let intercept = (stt * sl - st * stl) / det;
        (intercept, -slope)
    };

    // Levenberg-Marquardt on (ln a, gamma) against all finite bins; the
    // fixed background keeps late bins unbiased instead of truncating them.
    let t_span = t[n - 1] - t[0];
    let chi2 = |ln_a: f64, g: f64| -> f64 {
        t.iter()
            .zip(&y)
            .zip(&sig)
            .map(|((tk, yk), sk)| {
                let f = (ln_a - g * tk).exp() + background;
                ((yk - f) / sk).powi(2)
            })
            .sum()
    };
    let mut lambda = 1.0e-3;
    let mut cost = chi2(ln_a, gamma);
    for _ in 0..200 {
        let mut jtj = [[0.0f64; 2]; 2];
        let mut jtr = [0.0f64; 2];
        for k in 0..n {
            let e = (ln_a - gamma * t[k]).exp();
            let f = e + background;
            let r = (y[k] - f) / sig[k];
            let j0 = e / sig[k];
            let j1 = -t[k] * e / sig[k];
            jtj[0][0] += j0 * j0;
            jtj[0][1] += j0 * j1;
            jtj[1][1] += j1 * j1;
            jtr[0] += j0 * r;
            jtr[1] += j1 * r;
        }
        jtj[1][0] = jtj[0][1];
        let a00 = jtj[0][0] * (1.0 + lambda);
        let a11 = jtj[1][1] * (1.0 + lambda);
        let det = a00 * a11 - jtj[0][1] * jtj[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(EstimateError::Singular);
        }
        let d0 = (jtr[0] * a11 - jtj[0][1] * jtr[1]) / det;
        let d1 = (a00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
        let (ln_a_try, g_try) = (ln_a + d0, gamma + d1);
        // Keep the exponent within floating range over the fit span.
        if !(ln_a_try.is_finite() && g_try.is_finite()) || g_try.abs() * t_span > 600.0 {
            lambda *= 10.0;
            if lambda > 1.0e12 {
                break;
            }
            continue;
        }
        let cost_try = chi2(ln_a_try, g_try);
        if cost_try < cost {
            let rel = (cost - cost_try) / cost.max(1.0e-300);
            ln_a = ln_a_try;
            gamma = g_try;
            cost = cost_try;
            lambda = (lambda * 0.3).max(1.0e-12);
            if rel < 1.0e-12 {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1.0e12 {
                break;
            }
        }
    }

    // Covariance of gamma from the unscaled normal equations, then scaled
    // by reduced chi-square (never deflated) and the correlation inflation.
    let mut jtj = [[0.0f64; 2]; 2];
    let mut residuals = Vec::with_capacity(n);
    for k in 0..n {
        let e = (ln_a - gamma * t[k]).exp();
        let f = e + background;
        residuals.push((y[k] - f) / sig[k]);
        let j0 = e / sig[k];
        let j1 = -t[k] * e / sig[k];
        jtj[0][0] += j0 * j0;
        jtj[0][1] += j0 * j1;
        jtj[1][1] += j1 * j1;
    }
    let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[0][1];
    if det <= 0.0 || !det.is_finite() {
        return Err(EstimateError::Singular);
    }
    let var_gamma = jtj[0][0] / det;
    let dof = n.saturating_sub(2);
    let chi2_red = if dof > 0 { cost / dof as f64 } else { 1.0 };
    let vif = inflation(&residuals);
    let se = (var_gamma * chi2_red.max(1.0) * vif).sqrt();
    Ok(DecayFit {
        gamma_hat: gamma,
        gamma_ci95: t95(dof) * se,
        x0_sq: ln_a.exp(),
        reduced_chi2: chi2_red,
        bins_used: n,
        bins_dropped: dropped,
        residuals,
    })
}

/// Cholesky factorization in place; returns false if the matrix is not
/// positive definite even after a small diagonal jitter.
fn cholesky(a: &mut [Vec<f64>]) -> bool {
    let n = a.len();
    let jitter = 1.0e-12 * (0..n).map(|k| a[k][k]).sum::<f64>() / n as f64;
    for attempt in 0..2 {
        let mut ok = true;
        let mut m = a.to_vec();
        if attempt == 1 {
            for k in 0..n {
                m[k][k] += jitter;
            }
        }
        'outer: for k in 0..n {
            for j in 0..k {
                let s = (0..j).map(|i| m[k][i] * m[j][i]).sum::<f64>();
                m[k][j] = (m[k][j] - s) / m[j][j];
            }
            let s = (0..k).map(|i| m[k][i] * m[k][i]).sum::<f64>();
            let d = m[k][k] - s;
            if d <= 0.0 || !d.is_finite() {
                ok = false;
                break 'outer;
            }
            m[k][k] = d.sqrt();
        }
        if ok {
            a.clone_from_slice(&m);
            return true;
        }
    }
    false
}

/// Solve L L^T x = b given the Cholesky factor L (lower triangle).
fn chol_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut y = vec![0.0; n];
    for k in 0..n {
        let s = (0..k).map(|i| l[k][i] * y[i]).sum::<f64>();
        y[k] = (b[k] - s) / l[k][k];
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s = (k + 1..n).map(|i| l[i][k] * x[i]).sum::<f64>();
        x[k] = (y[k] - s) / l[k][k];
    }
    x
}

/// Ring-down fit with the full covariance of thermal amplitude noise.
///
/// A coherent amplitude decaying through a thermal bath fluctuates slowly:
/// the quadratures relax at gamma/2, so envelope bins separated by less
/// than 2/gamma are strongly correlated and per-bin scatter wildly
/// understates the true uncertainty. This fit models the squared envelope
/// as `a exp(-gamma t) + 2 x_th2` and uses the analytic covariance
///
/// ```text
/// cov(t, t') = 4 A(t) A(t') x_th2 rho + 4 x_th2^2 rho^2 + diag(stderr^2),
/// rho = exp(-gamma |t - t'| / 2)
/// ```
///
/// in generalized least squares, giving confidence intervals that stay
/// honest for a single ring-down. `x_th2` is the equipartition position
/// variance of the mode at the bath temperature.
pub fn fit_decay_thermal(env: &EnvelopeSeries, x_th2: f64) -> Result<DecayFit, EstimateError> {
    if !(x_th2 > 0.0) || !x_th2.is_finite() {
        return Err(EstimateError::BadParameter("x_th2 must be positive".into()));
    }
    let background = 2.0 * x_th2;
    let init = fit_decay_with_background(env, background)?;
    let n = env.len();
    let t = &env.bin_centers;
    let y = &env.x2_mean;

    let mut ln_a = init.x0_sq.max(1.0e-300).ln();
    let mut gamma = init.gamma_hat;
    let cov_of = |ln_a: f64, g: f64| -> Vec<Vec<f64>> {
        let amp: Vec<f64> = t.iter().map(|tk| (0.5 * (ln_a - g * tk)).exp()).collect();
        let mut sigma = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let rho = (-0.5 * g.abs() * (t[i] - t[j]).abs()).exp();
                let c = 4.0 * amp[i] * amp[j] * x_th2 * rho
                    + 4.0 * x_th2 * x_th2 * rho * rho;
                sigma[i][j] = c;
                sigma[j][i] = c;
            }
        }
        for i in 0..n {
            sigma[i][i] += env.x2_stderr[i].powi(2);
        }
        sigma
    };

    let mut var_gamma = f64::NAN;
    let mut chi2 = f64::NAN;
    // Two rounds of iterated GLS: freeze the covariance, run Gauss-Newton
    // to convergence, rebuild the covariance at the new parameters, repeat.
    for _round in 0..2 {
        let mut l = cov_of(ln_a, gamma);
        if !cholesky(&mut l) {
            return Err(EstimateError::Singular);
        }
        for _ in 0..50 {
            let model: Vec<f64> =
                t.iter().map(|tk| (ln_a - gamma * tk).exp() + background).collect();
            let r: Vec<f64> = y.iter().zip(&model).map(|(yk, mk)| yk - mk).collect();
            let j0: Vec<f64> = model.iter().map(|mk| mk - background).collect();
            let j1: Vec<f64> =
                t.iter().zip(&j0).map(|(tk, e)| -tk * e).collect();
            let s0 = chol_solve(&l, &j0);
            let s1 = chol_solve(&l, &j1);
            let sr = chol_solve(&l, &r);
            let a00: f64 = j0.iter().zip(&s0).map(|(a, b)| a * b).sum();
            let a01: f64 = j0.iter().zip(&s1).map(|(a, b)| a * b).sum();
            let a11: f64 = j1.iter().zip(&s1).map(|(a, b)| a * b).sum();
            let b0: f64 = j0.iter().zip(&sr).map(|(a, b)| a * b).sum();
            let b1: f64 = j1.iter().zip(&sr).map(|(a, b)| a * b).sum();
            let det = a00 * a11 - a01 * a01;
            if det <= 0.0 || !det.is_finite() {
                return Err(EstimateError::Singular);
            }
            let d0 = (b0 * a11 - a01 * b1) / det;
            let d1 = (a00 * b1 - a01 * b0) / det;
            var_gamma = a00 / det;
            chi2 = r.iter().zip(&sr).map(|(a, b)| a * b).sum();
            let scale = 1.0 / (1.0 + d1.abs() / (gamma.abs() + 1.0e-12)).max(1.0);
            ln_a += d0 * scale;
            gamma += d1 * scale;
            if d1.abs() < 1.0e-10 * gamma.abs() && d0.abs() < 1.0e-10 {
                break;
            }
        }
    }

    let dof = n.saturating_sub(2);
    let chi2_red = if dof > 0 { chi2 / dof as f64 } else { 1.0 };
    let model: Vec<f64> = t.iter().map(|tk| (ln_a - gamma * tk).exp() + background).collect();
    let residuals: Vec<f64> = y
        .iter()
        .zip(&model)
        .enumerate()
        .map(|(k, (yk, mk))| {
            let s = (4.0 * (model[k] - background) * x_th2
                + 4.0 * x_th2 * x_th2
                + env.x2_stderr[k].powi(2))
            .sqrt();
            (yk - mk) / s
        })
        .collect();
    let se = (var_gamma * chi2_red.max(1.0)).sqrt();
    Ok(DecayFit {
        gamma_hat: gamma,
        gamma_ci95: t95(dof) * se,
        x0_sq: ln_a.exp(),
        reduced_chi2: chi2_red,
        bins_used: n,
        bins_dropped: 0,
        residuals,
    })
}

/// Damping estimate from the thermal spectrum.
#[derive(Debug, Clone)]
pub struct LinewidthEstimate {
    /// Damping rate implied by the fitted width (angular, 1/s).
    pub gamma_hat: f64,
    /// 95% half-interval propagated from the width standard error (1/s).
    pub gamma_ci95: f64,
    pub fit: LorentzianFit,
    /// Frequency resolution of the spectrum (Hz).
    pub df_hz: f64,
    pub segments: usize,
}

/// Estimate gamma as 2 pi times the fitted full width at half maximum of
/// the displacement spectrum around `f0_hz`.
///
/// The record is block-averaged down to roughly eight samples per carrier
/// cycle before the Welch estimate, and segmentation backs off from 20 to 8
/// segments if the line is unresolved at the finer frequency grid.
pub fn psd_linewidth(ts: &TimeSeries, f0_hz: f64) -> Result<LinewidthEstimate, EstimateError> {
    if !(f0_hz > 0.0) {
        return Err(EstimateError::BadParameter("f0_hz must be positive".into()));
    }
    let fs = 1.0 / ts.dt;
    let factor = ((fs / (8.0 * f0_hz)).floor() as usize).max(1);
    let (samples, fs) = if factor > 1 {
        let dec: Vec<f64> = ts
            .samples
            .chunks_exact(factor)
            .map(|c| c.iter().sum::<f64>() / factor as f64)
            .collect();
        (dec, fs / factor as f64)
    } else {
        (ts.samples.clone(), fs)
    };

    let attempt = |segments: usize| -> Result<(LinewidthEstimate, f64), EstimateError> {
        let psd = welch_psd(&samples, fs, segments)?;
        let fit = fit_lorentzian(&psd, f0_hz)?;
        let gamma_hat = TAU * fit.fwhm_hz;
        let gamma_ci95 = TAU * 1.96 * fit.fwhm_se_hz;
        let resolved = fit.fwhm_hz / psd.df_hz;
        Ok((
            LinewidthEstimate { gamma_hat, gamma_ci95, df_hz: psd.df_hz, segments, fit },
            resolved,
        ))
    };
    let est = match attempt(20) {
        Ok((est, resolved)) if resolved >= 5.0 => est,
        Ok(_) | Err(EstimateError::Spectral(SpectralError::Unresolved { .. })) => {
            attempt(8)?.0
        }
        Err(e) => return Err(e),
    };
    let needed = 50.0 / est.gamma_hat;
    if ts.duration() < needed {
        return Err(EstimateError::TooShort { needed_s: needed, got_s: ts.duration() });
    }
    Ok(est)
}

/// Damping estimate from the energy autocorrelation decay.
#[derive(Debug, Clone)]
pub struct AutocorrEstimate {
    /// Decay rate of the energy autocorrelation (angular, 1/s).
    pub gamma_hat: f64,
    /// 95% half-interval, from the spread between independent record
    /// segments when the record allows it (1/s).
    pub gamma_ci95: f64,
    /// Number of lag points entering the fit.
    pub lags_used: usize,
    /// Fitted lag range (s).
    pub lag_range_s: (f64, f64),
}

/// Unbiased autocovariance of `x` around a fixed `mean`, lags `0..n/4`.
fn autocov_curve(x: &[f64], mean: f64) -> Vec<f64> {
    let n = x.len();
    let m = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> =
        x.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
    buf.resize(m, Complex::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    for v in buf.iter_mut() {
        *v = Complex::new(v.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    (0..n / 4).map(|k| buf[k].re * scale / (n - k) as f64).collect()
}

/// Ordinary least-squares slope of `ln c[k]` over the lag indices in
/// `window`, skipping nonpositive values. Returns the slope when at
/// least five points survive and the trend is a decay.
fn log_slope_on_window(c: &[f64], c0: f64, dt: f64, window: &[usize]) -> Option<f64> {
    let mut taus = Vec::new();
    let mut lncs = Vec::new();
    for &k in window {
        if k < c.len() && c[k] > 0.0 && c0 > 0.0 {
            taus.push(k as f64 * dt);
            lncs.push((c[k] / c0).ln());
        }
    }
    if taus.len() < 5 {
        return None;
    }
    let nf = taus.len() as f64;
    let st = taus.iter().sum::<f64>() / nf;
    let sl = lncs.iter().sum::<f64>() / nf;
    let sxx: f64 = taus.iter().map(|t| (t - st).powi(2)).sum();
    let sxy: f64 = taus.iter().zip(&lncs).map(|(t, l)| (t - st) * (l - sl)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    if slope >= 0.0 {
        return None;
    }
    Some(slope)
}

/// Fit `exp(-gamma tau)` to the normalized autocorrelation of a squared
/// amplitude record sampled at `dt`. Lags shorter than `lag_min_s` are
/// excluded, as is everything outside 0.2..0.9 of the zero-lag value.
///
/// Autocorrelation noise is correlated over the very lag range being
/// fitted, so a residual-based error bar from a single curve is far too
/// small. When the record is long enough it is cut into independent
/// segments: the rate comes from the segment-averaged curve (around the
/// global mean, which keeps the low-frequency leakage of mean removal
/// small), and the interval from the spread of per-segment slopes refit
/// on that same fixed lag window.
pub fn x2_autocorr_rate(
    x2: &[f64],
    dt: f64,
    lag_min_s: f64,
) -> Result<AutocorrEstimate, EstimateError> {
    if x2.len() < 64 {
        return Err(EstimateError::TooShort {
            needed_s: 64.0 * dt,
            got_s: x2.len() as f64 * dt,
        });
    }
    let n = x2.len();
    let n_seg = if n >= 16384 {
        4
    } else if n >= 4096 {
        2
    } else {
        1
    };
    let seg_len = n / n_seg;
    let mean = x2.iter().take(seg_len * n_seg).sum::<f64>() / (seg_len * n_seg) as f64;
    let curves: Vec<Vec<f64>> = (0..n_seg)
        .map(|s| autocov_curve(&x2[s * seg_len..(s + 1) * seg_len], mean))
        .collect();
    let nlag = curves.iter().map(|c| c.len()).min().unwrap_or(0);
    let avg: Vec<f64> = (0..nlag)
        .map(|k| curves.iter().map(|c| c[k]).sum::<f64>() / n_seg as f64)
        .collect();
    let c0 = avg.first().copied().unwrap_or(0.0);
    if !(c0 > 0.0) {
        return Err(EstimateError::NoDecay("zero variance record".into()));
    }
    let mut window = Vec::new();
    for k in 1..nlag {
        if (k as f64 * dt) < lag_min_s {
            continue;
        }
        let rho = avg[k] / c0;
        if rho >= 0.9 {
            continue;
        }
        if rho <= 0.2 {
            break;
        }
        window.push(k);
    }
    if window.len() < 5 {
        return Err(EstimateError::NoDecay(
            "too few autocorrelation points in the fit window".into(),
        ));
    }
    let slope = log_slope_on_window(&avg, c0, dt, &window)
        .ok_or(EstimateError::NoDecay("autocorrelation does not decay".into()))?;
    let range = (window[0] as f64 * dt, *window.last().unwrap() as f64 * dt);
    let seg_slopes: Vec<f64> = curves
        .iter()
        .filter_map(|c| log_slope_on_window(c, c[0], dt, &window))
        .collect();
    let k = seg_slopes.len();
    let ci = if n_seg >= 2 && k >= 2 {
        let kf = k as f64;
        let sm = seg_slopes.iter().sum::<f64>() / kf;
        let var = seg_slopes.iter().map(|s| (s - sm).powi(2)).sum::<f64>() / (kf - 1.0);
        t95(k - 1) * (var / kf).sqrt()
    } else {
        // Single segment: fall back to the residual-based bound, inflated
        // for the serial correlation of neighbouring lags.
        let nf = window.len() as f64;
        let st = window.iter().map(|&k| k as f64 * dt).sum::<f64>() / nf;
        let sxx: f64 = window.iter().map(|&k| (k as f64 * dt - st).powi(2)).sum();
        let resid: Vec<f64> = window
            .iter()
            .filter(|&&k| avg[k] > 0.0)
            .map(|&k| {
                let tau = k as f64 * dt;
                (avg[k] / c0).ln() - slope * (tau - st)
            })
            .collect();
        let rm = resid.iter().sum::<f64>() / resid.len() as f64;
        let s2 = resid.iter().map(|r| (r - rm).powi(2)).sum::<f64>()
            / (resid.len().saturating_sub(2).max(1)) as f64;
        1.96 * (s2 / sxx).sqrt() * inflation(&resid).sqrt()
    };
    Ok(AutocorrEstimate {
        gamma_hat: -slope,
        gamma_ci95: ci,
        lags_used: window.len(),
        lag_range_s: range,
    })
}

/// Demodulate thermal motion at `carrier_f_hz` and estimate gamma from
/// the decay of the energy autocorrelation.
///
/// The squared amplitude is block-averaged to a coarse grid before the
/// correlation, and lags inside the lock-in response time are excluded.
pub fn energy_autocorrelation(
    ts: &TimeSeries,
    carrier_f_hz: f64,
    bandwidth_hz: f64,
) -> Result<AutocorrEstimate, EstimateError> {
    let quads = lockin_demodulate(ts, carrier_f_hz, bandwidth_hz)?;
    let settle = quads.settle_samples();
    let x2: Vec<f64> =
        quads.i.iter().zip(&quads.q).skip(settle).map(|(i, q)| i * i + q * q).collect();
    let lag_min = 0.5 / bandwidth_hz;
    let stride = ((lag_min / (10.0 * ts.dt)).floor() as usize).max(1);
    let coarse: Vec<f64> = x2
        .chunks_exact(stride)
        .map(|c| c.iter().sum::<f64>() / stride as f64)
        .collect();
    if coarse.len() < 64 {
        return Err(EstimateError::TooShort {
            needed_s: 3.0 / bandwidth_hz + 64.0 * stride as f64 * ts.dt,
            got_s: ts.duration(),
        });
    }
    x2_autocorr_rate(&coarse, ts.dt * stride as f64, lag_min)
}

/// Sphere diameter implied by a measured gas damping rate in the molecular
/// flow regime, inverting the pressure/size relation.
pub fn diameter_from_damping(
    gamma: f64,
    pressure: f64,
    mean_gas_speed: f64,
    density: f64,
) -> Result<f64, EstimateError> {
    for (name, v) in [
        ("gamma", gamma),
        ("pressure", pressure),
        ("mean_gas_speed", mean_gas_speed),
        ("density", density),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(EstimateError::BadParameter(format!("{name} must be positive")));
        }
    }
    Ok(32.0 / std::f64::consts::PI * pressure / (gamma * mean_gas_speed * density))
}
