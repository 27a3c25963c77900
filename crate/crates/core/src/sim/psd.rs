//! Power spectral density of a pulse set and its 99%-power bandwidth.

use crate::c64;
use crate::error::{Error, Result};
use crate::fft::Dft;
use crate::pulse::PulseMatrix;

/// Two-sided PSD on an fftshifted frequency axis, normalized to unit sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    /// Bin centres in Hz, ascending.
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    /// Bin width in Hz.
    pub resolution: f64,
}

/// Sums `|DFT|²` of every zero-padded pulse column.
pub fn compute_psd(p: &PulseMatrix, fft_size: usize, sample_rate: f64) -> Result<Psd> {
    let s = p.rows();
    if fft_size < 2 * s {
        return Err(Error::param(format!(
            "PSD FFT size {fft_size} below twice the frame length {s}"
        )));
    }
    let dft = Dft::new(fft_size);
    let mut acc = vec![0.0; fft_size];
    let mut buf = vec![c64::new(0.0, 0.0); fft_size];
    for j in 0..p.cols() {
        buf.iter_mut().for_each(|v| *v = c64::new(0.0, 0.0));
        for i in 0..s {
            buf[i] = p.entries()[(i, j)];
        }
        dft.forward(&mut buf);
        for (a, v) in acc.iter_mut().zip(&buf) {
            *a += v.norm_sqr();
        }
    }
    let total: f64 = acc.iter().sum();
    if total <= 0.0 {
        return Err(Error::Numeric("pulse set carries no power".into()));
    }
    let df = sample_rate / fft_size as f64;
    let half = fft_size / 2;
    let mut freqs = Vec::with_capacity(fft_size);
    let mut power = Vec::with_capacity(fft_size);
    for i in 0..fft_size {
        let src = (i + half) % fft_size;
        freqs.push((i as f64 - half as f64) * df);
        power.push(acc[src] / total);
    }
    Ok(Psd {
        freqs,
        power,
        resolution: df,
    })
}

/// Width of the smallest interval centred on 0 Hz holding 99% of the power.
/// Each bin spreads its power uniformly over its own width.
pub fn bandwidth_99(psd: &Psd) -> f64 {
    bandwidth_fraction(psd, 0.99)
}

pub fn bandwidth_fraction(psd: &Psd, fraction: f64) -> f64 {
    let total: f64 = psd.power.iter().sum();
    let target = fraction * total;
    let df = psd.resolution;
    // captured power as a function of the half-width h
    let captured = |h: f64| -> f64 {
        psd.freqs
            .iter()
            .zip(&psd.power)
            .map(|(&f, &p)| {
                let lo = (f - 0.5 * df).max(-h);
                let hi = (f + 0.5 * df).min(h);
                if hi > lo {
                    p * (hi - lo) / df
                } else {
                    0.0
                }
            })
            .sum()
    };
    let mut lo = 0.0;
    let mut hi = psd.freqs.iter().fold(0.0f64, |a, f| a.max(f.abs())) + df;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if captured(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    2.0 * hi
}
