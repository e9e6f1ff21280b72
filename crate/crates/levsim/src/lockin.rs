//! Software lock-in: quadrature demodulation at a fixed carrier.
//!
//! The demodulator mixes the input against cos/sin of the carrier and
//! low-passes the products with two cascaded one-pole IIR stages of corner
//! `bandwidth_hz`. With the convention
//!
//! ```text
//! x(t) ~= I(t) cos(w_c t) - Q(t) sin(w_c t)
//! ```
//!
//! a pure tone `A cos(w_c t + phi)` settles to `I = A cos(phi)`,
//! `Q = A sin(phi)`, so amplitude is `sqrt(I^2+Q^2)` and phase `atan2(Q, I)`.
//! Outputs are meaningful only on timescales of `1/bandwidth` and after the
//! filter settle time of `3/bandwidth`.

use crate::series::TimeSeries;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LockinError {
    #[error("bandwidth {bandwidth_hz} Hz must sit below half the carrier {carrier_f_hz} Hz")]
    BandwidthTooWide { bandwidth_hz: f64, carrier_f_hz: f64 },
    #[error("series of {got_s:.3} s is shorter than the 3/bandwidth settle time {needed_s:.3} s")]
    TooShort { needed_s: f64, got_s: f64 },
    #[error("carrier and bandwidth must be positive and finite")]
    BadParameter,
}

/// Streaming demodulator state. The carrier phase advances by a rotation
/// recurrence (no per-sample trig); the rotor is renormalized periodically so
/// its magnitude cannot drift over long runs.
#[derive(Debug, Clone)]
pub struct Demodulator {
    cos_th: f64,
    sin_th: f64,
    rot_c: f64,
    rot_s: f64,
    alpha: f64,
    i1: f64,
    i2: f64,
    q1: f64,
    q2: f64,
    renorm: u32,
}

impl Demodulator {
    /// `t0` sets the carrier phase reference so that phase estimates refer to
    /// absolute time zero.
    pub fn new(carrier_f_hz: f64, bandwidth_hz: f64, dt: f64, t0: f64) -> Result<Self, LockinError> {
        if !(carrier_f_hz > 0.0 && bandwidth_hz > 0.0 && dt > 0.0)
            || !carrier_f_hz.is_finite()
            || !bandwidth_hz.is_finite()
        {
            return Err(LockinError::BadParameter);
        }
        if bandwidth_hz >= 0.5 * carrier_f_hz {
            return Err(LockinError::BandwidthTooWide { bandwidth_hz, carrier_f_hz });
        }
        let theta0 = TAU * carrier_f_hz * t0;
        let dtheta = TAU * carrier_f_hz * dt;
        let tau = 1.0 / (TAU * bandwidth_hz);
        Ok(Self {
            cos_th: theta0.cos(),
            sin_th: theta0.sin(),
            rot_c: dtheta.cos(),
            rot_s: dtheta.sin(),
            alpha: 1.0 - (-dt / tau).exp(),
            i1: 0.0,
            i2: 0.0,
            q1: 0.0,
            q2: 0.0,
            renorm: 0,
        })
    }

    /// Feed one sample; returns `(i, q, cos_th, sin_th)` where the reference
    /// waveforms are those the sample was mixed against.
    pub fn update(&mut self, y: f64) -> (f64, f64, f64, f64) {
        let (c, s) = (self.cos_th, self.sin_th);
        let iu = 2.0 * y * c;
        let qu = -2.0 * y * s;
        self.i1 += self.alpha * (iu - self.i1);
        self.i2 += self.alpha * (self.i1 - self.i2);
        self.q1 += self.alpha * (qu - self.q1);
        self.q2 += self.alpha * (self.q1 - self.q2);
        self.cos_th = c * self.rot_c - s * self.rot_s;
        self.sin_th = s * self.rot_c + c * self.rot_s;
        self.renorm += 1;
        if self.renorm == 1024 {
            self.renorm = 0;
            let norm = self.cos_th.hypot(self.sin_th);
            self.cos_th /= norm;
            self.sin_th /= norm;
        }
        (self.i2, self.q2, c, s)
    }

    pub fn quadratures(&self) -> (f64, f64) {
        (self.i2, self.q2)
    }

    pub fn amplitude(&self) -> f64 {
        self.i2.hypot(self.q2)
    }
}

/// Demodulated quadrature record at the input sample rate.
#[derive(Debug, Clone)]
pub struct Quadratures {
    pub t0: f64,
    pub dt: f64,
    pub carrier_f_hz: f64,
    pub bandwidth_hz: f64,
    pub i: Vec<f64>,
    pub q: Vec<f64>,
}

impl Quadratures {
    pub fn len(&self) -> usize {
        self.i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i.is_empty()
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.t0 + self.dt * index as f64
    }

    /// Demodulated amplitude X(t) = sqrt(I^2 + Q^2).
    pub fn amplitude(&self) -> Vec<f64> {
        self.i.iter().zip(&self.q).map(|(i, q)| i.hypot(*q)).collect()
    }

    /// Squared amplitude X(t)^2, the quantity used for envelope fits.
    pub fn amplitude_sq(&self) -> Vec<f64> {
        self.i.iter().zip(&self.q).map(|(i, q)| i * i + q * q).collect()
    }

    /// Phase atan2(Q, I), wrapped to (-pi, pi].
    pub fn phase(&self) -> Vec<f64> {
        self.i.iter().zip(&self.q).map(|(i, q)| q.atan2(*i)).collect()
    }

    /// Phase with 2*pi jumps removed.
    pub fn unwrapped_phase(&self) -> Vec<f64> {
        let mut out = self.phase();
        let mut offset = 0.0;
        for k in 1..out.len() {
            let raw = out[k] + offset;
            let mut d = raw - out[k - 1];
            while d > std::f64::consts::PI {
                offset -= TAU;
                d -= TAU;
            }
            while d < -std::f64::consts::PI {
                offset += TAU;
                d += TAU;
            }
            out[k] = out[k] + offset;
        }
        out
    }

    /// Samples to discard before trusting the outputs, 3/bandwidth worth.
    pub fn settle_samples(&self) -> usize {
        (3.0 / (self.bandwidth_hz * self.dt)).ceil() as usize
    }
}

/// Demodulate a series at `carrier_f_hz` with the two-pole corner
/// `bandwidth_hz`. The record must outlast the 3/bandwidth settle time.
pub fn lockin_demodulate(
    ts: &TimeSeries,
    carrier_f_hz: f64,
    bandwidth_hz: f64,
) -> Result<Quadratures, LockinError> {
    let mut demod = Demodulator::new(carrier_f_hz, bandwidth_hz, ts.dt, ts.t0)?;
    let needed = 3.0 / bandwidth_hz;
    if ts.duration() < needed {
        return Err(LockinError::TooShort { needed_s: needed, got_s: ts.duration() });
    }
    let mut i = Vec::with_capacity(ts.len());
    let mut q = Vec::with_capacity(ts.len());
    for &y in &ts.samples {
        let (iv, qv, _, _) = demod.update(y);
        i.push(iv);
        q.push(qv);
    }
    Ok(Quadratures { t0: ts.t0, dt: ts.dt, carrier_f_hz, bandwidth_hz, i, q })
}
