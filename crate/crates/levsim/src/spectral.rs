//! Averaged-periodogram spectral estimation and Lorentzian line fitting.
//!
//! `welch_psd` computes a one-sided PSD from Hann-windowed, 50%-overlapped
//! segments, normalized so that the PSD integrates to the signal variance
//! (Parseval). `fit_lorentzian` fits
//!
//! ```text
//! S(f) = a / (1 + ((f - f_c)/w)^2) + b
//! ```
//!
//! in the log domain by damped Gauss-Newton; `2 w` is the full width at half
//! maximum of the peak above the floor `b`.

use rustfft::{num_complex::Complex, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("need at least {needed} samples for {segments} segments, got {got}")]
    TooShort { needed: usize, segments: usize, got: usize },
    #[error("no resonance near {f0_hz} Hz: peak stands only {ratio:.2}x above the floor")]
    NoResonance { f0_hz: f64, ratio: f64 },
    #[error("line fit did not converge")]
    NoConvergence,
    #[error("fitted width {fwhm_hz:e} Hz is below the resolution {df_hz:e} Hz; record longer")]
    Unresolved { fwhm_hz: f64, df_hz: f64 },
}

/// One-sided power spectral density estimate.
#[derive(Debug, Clone)]
pub struct Psd {
    pub freqs_hz: Vec<f64>,
    /// PSD in (input units)^2 / Hz.
    pub values: Vec<f64>,
    pub df_hz: f64,
    pub segments: usize,
}

impl Psd {
    /// Integral of the PSD over frequency; equals the signal variance up to
    /// window edge effects.
    pub fn total_power(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.df_hz
    }
}

/// Hann-windowed Welch estimate with 50% overlap and `segments` averages
/// (mean is removed first). `segments` must be at least 1.
pub fn welch_psd(samples: &[f64], fs_hz: f64, segments: usize) -> Result<Psd, SpectralError> {
    let segments = segments.max(1);
    // 50% overlap: n = seg_len * (segments + 1) / 2.
    let seg_len = 2 * samples.len() / (segments + 1);
    if seg_len < 16 {
        return Err(SpectralError::TooShort {
            needed: 8 * (segments + 1),
            segments,
            got: samples.len(),
        });
    }
    let hop = seg_len / 2;
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;

    let window: Vec<f64> = (0..seg_len)
        .map(|k| {
            let x = std::f64::consts::TAU * k as f64 / seg_len as f64;
            0.5 * (1.0 - x.cos())
        })
        .collect();
    let win_power: f64 = window.iter().map(|w| w * w).sum();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(seg_len);
    let n_bins = seg_len / 2 + 1;
    let mut acc = vec![0.0f64; n_bins];
    let mut buf = vec![Complex::new(0.0, 0.0); seg_len];
    let mut used = 0usize;
    let mut start = 0usize;
    while start + seg_len <= samples.len() && used < segments {
        for (k, slot) in buf.iter_mut().enumerate() {
            *slot = Complex::new((samples[start + k] - mean) * window[k], 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += buf[k].norm_sqr();
        }
        used += 1;
        start += hop;
    }
    let scale = 1.0 / (used as f64 * fs_hz * win_power);
    let df = fs_hz / seg_len as f64;
    let values: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || (seg_len % 2 == 0 && k == n_bins - 1) { 1.0 } else { 2.0 };
            a * scale * one_sided
        })
        .collect();
    let freqs = (0..n_bins).map(|k| k as f64 * df).collect();
    Ok(Psd { freqs_hz: freqs, values, df_hz: df, segments: used })
}

/// Lorentzian line parameters over a flat floor.
#[derive(Debug, Clone, Copy)]
pub struct LorentzianFit {
    /// Peak height above the floor ((input units)^2/Hz).
    pub amplitude: f64,
    /// Line center (Hz).
    pub center_hz: f64,
    /// Full width at half maximum (Hz).
    pub fwhm_hz: f64,
    /// Flat floor level.
    pub floor: f64,
    /// 1-sigma standard error of `fwhm_hz` from the fit covariance.
    pub fwhm_se_hz: f64,
}

fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let mut piv = col;
        for r in col + 1..4 {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..4 {
            if r == col {
                continue;
            }
            let f = a[r][col] / a[col][col];
            for c in col..4 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for k in 0..4 {
        x[k] = b[k] / a[k][k];
    }
    Some(x)
}

/// Fit a Lorentzian plus floor to a PSD around an expected line position.
///
/// The peak is located within +-20% of `f0_hz`, initialized from the
/// half-maximum crossings, and refined in the log domain. A peak standing
/// less than 5x above the surrounding floor is rejected as no resonance.
pub fn fit_lorentzian(psd: &Psd, f0_hz: f64) -> Result<LorentzianFit, SpectralError> {
    let lo = psd.freqs_hz.partition_point(|&f| f < 0.8 * f0_hz);
    let hi = psd.freqs_hz.partition_point(|&f| f < 1.2 * f0_hz).min(psd.values.len());
    if hi.saturating_sub(lo) < 8 {
        return Err(SpectralError::TooShort { needed: 8, segments: psd.segments, got: hi - lo });
    }
    let (peak_rel, peak_val) = psd.values[lo..hi]
        .iter()
        .enumerate()
        .fold((0usize, f64::MIN), |best, (k, &v)| if v > best.1 { (k, v) } else { best });
    let peak = lo + peak_rel;

    let mut floor_samples: Vec<f64> = Vec::new();
    floor_samples.extend_from_slice(&psd.values[lo..(lo + (hi - lo) / 10).max(lo + 1)]);
    floor_samples.extend_from_slice(&psd.values[hi - ((hi - lo) / 10).max(1)..hi]);
    floor_samples.sort_by(|a, b| a.total_cmp(b));
    let floor0 = floor_samples[floor_samples.len() / 2].max(1e-300);
    let ratio = peak_val / floor0;
    if ratio < 5.0 {
        return Err(SpectralError::NoResonance { f0_hz, ratio });
    }

    // Half-maximum crossings for the initial width.
    let half = floor0 + 0.5 * (peak_val - floor0);
    let mut k_lo = peak;
    while k_lo > lo && psd.values[k_lo] > half {
        k_lo -= 1;
    }
    let mut k_hi = peak;
    while k_hi + 1 < hi && psd.values[k_hi] > half {
        k_hi += 1;
    }
    let fwhm0 = ((k_hi - k_lo) as f64 * psd.df_hz).max(psd.df_hz);

    // Fit window: +-10 half widths around the peak, clipped to the search band.
    let span = 10.0 * fwhm0;
    let w_lo = psd.freqs_hz.partition_point(|&f| f < psd.freqs_hz[peak] - span).max(lo);
    let w_hi = psd.freqs_hz.partition_point(|&f| f < psd.freqs_hz[peak] + span).min(hi);
    let freqs = &psd.freqs_hz[w_lo..w_hi];
    let vals = &psd.values[w_lo..w_hi];
    let n = freqs.len();
    if n < 8 {
        return Err(SpectralError::TooShort { needed: 8, segments: psd.segments, got: n });
    }

    // Parameters p = [amplitude, center, half-width, floor]; log-domain
    // residuals equalize the periodogram's multiplicative scatter.
    let mut p = [peak_val - floor0, psd.freqs_hz[peak], 0.5 * fwhm0, floor0];
    let mut lambda = 1e-4;
    let mut last_cost = f64::INFINITY;
    let mut converged = false;
    for _ in 0..200 {
        let mut jtj = [[0.0f64; 4]; 4];
        let mut jtr = [0.0f64; 4];
        let mut cost = 0.0;
        for k in 0..n {
            let z = (freqs[k] - p[1]) / p[2];
            let den = 1.0 + z * z;
            let model = (p[0] / den + p[3]).max(1e-300);
            let r = (vals[k].max(1e-300) / model).ln();
            cost += r * r;
            let dm = [
                1.0 / den,
                p[0] * 2.0 * z / (p[2] * den * den),
                p[0] * 2.0 * z * z / (p[2] * den * den),
                1.0,
            ];
            for a in 0..4 {
                let ja = dm[a] / model;
                jtr[a] += ja * r;
                for b in 0..4 {
                    jtj[a][b] += ja * dm[b] / model;
                }
            }
        }
        if (last_cost - cost).abs() < 1e-12 * (1.0 + cost) {
            converged = true;
            break;
        }
        last_cost = cost;
        let mut step = None;
        for _ in 0..12 {
            let mut damped = jtj;
            for d in 0..4 {
                damped[d][d] *= 1.0 + lambda;
            }
            if let Some(dx) = solve4(damped, jtr) {
                let mut cand = p;
                for d in 0..4 {
                    cand[d] += dx[d];
                }
                if cand[0] > 0.0 && cand[2] > 0.0 && cand[3] >= 0.0 {
                    let mut c = 0.0;
                    for k in 0..n {
                        let z = (freqs[k] - cand[1]) / cand[2];
                        let model = (cand[0] / (1.0 + z * z) + cand[3]).max(1e-300);
                        let r = (vals[k].max(1e-300) / model).ln();
                        c += r * r;
                    }
                    if c < cost {
                        step = Some((cand, c));
                        break;
                    }
                }
            }
            lambda *= 10.0;
        }
        match step {
            Some((cand, _)) => {
                p = cand;
                lambda = (lambda * 0.1).max(1e-12);
            }
            None => break,
        }
    }
    if !converged && last_cost.is_infinite() {
        return Err(SpectralError::NoConvergence);
    }

    // Covariance of the half-width from the final Jacobian, scaled by the
    // residual variance.
    let mut jtj = [[0.0f64; 4]; 4];
    let mut rss = 0.0;
    for k in 0..n {
        let z = (freqs[k] - p[1]) / p[2];
        let den = 1.0 + z * z;
        let model = (p[0] / den + p[3]).max(1e-300);
        let r = (vals[k].max(1e-300) / model).ln();
        rss += r * r;
        let dm = [
            1.0 / den,
            p[0] * 2.0 * z / (p[2] * den * den),
            p[0] * 2.0 * z * z / (p[2] * den * den),
            1.0,
        ];
        for a in 0..4 {
            for b in 0..4 {
                jtj[a][b] += dm[a] * dm[b] / (model * model);
            }
        }
    }
    let dof = (n as f64 - 4.0).max(1.0);
    let s2 = rss / dof;
    let mut e2 = [0.0; 4];
    e2[2] = 1.0;
    let w_se = solve4(jtj, e2).map(|col| (col[2].max(0.0) * s2).sqrt()).unwrap_or(f64::NAN);

    // A credible width must span several bins; anything narrower is
    // indistinguishable from the window response of an unresolved line.
    let fwhm = 2.0 * p[2];
    if fwhm < 3.0 * psd.df_hz {
        return Err(SpectralError::Unresolved { fwhm_hz: fwhm, df_hz: psd.df_hz });
    }
    Ok(LorentzianFit {
        amplitude: p[0],
        center_hz: p[1],
        fwhm_hz: fwhm,
        floor: p[3],
        fwhm_se_hz: 2.0 * w_se,
    })
}
