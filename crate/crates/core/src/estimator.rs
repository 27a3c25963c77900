//! Embedded-pilot channel estimation and NMSE scoring.

use std::f64::consts::PI;

use crate::c64;
use crate::error::{Error, Result};
use crate::lattice::{DdGrid, FrameLayout};
use crate::transceiver::{read_pilot_response, DdResponse};

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    /// Centered estimate, zero outside the pilot-region read.
    pub h_hat: DdResponse,
    /// Filled in once the estimate is scored against a reference.
    pub nmse: Option<f64>,
    pub samples_used: usize,
}

impl EstimationResult {
    pub fn score(&mut self, truth: &DdResponse) -> Result<f64> {
        let v = nmse(&self.h_hat, truth)?;
        self.nmse = Some(v);
        Ok(v)
    }
}

/// Received pilot-only grid predicted from a centered response, keeping the
/// alias terms `|n|, |m| ≤ 1`.
pub fn pilot_response_predict(h: &DdResponse, layout: &FrameLayout, x_p: c64) -> DdGrid {
    let (m, n) = (layout.m() as i64, layout.n() as i64);
    let mn = m * n;
    let p = layout.pilot();
    DdGrid::from_fn(layout.m(), layout.n(), |l, k| {
        let (l, k) = (l as i64, k as i64);
        let mut acc = c64::new(0.0, 0.0);
        for na in -1..=1 {
            for ma in -1..=1 {
                let v = h.get(l - p.l - na * m, k - p.k - ma * n);
                if v == c64::new(0.0, 0.0) {
                    continue;
                }
                let t = (na * p.k * m + (k - p.k - ma * n) * (p.l + na * m)).rem_euclid(mn);
                acc += x_p * v * c64::from_polar(1.0, 2.0 * PI * t as f64 / mn as f64);
            }
        }
        acc
    })
}

/// Reads `ĥ[l, k] = y[l + l_p, k + k_p] / x_p · e^{-j2πk l_p/(MN)}` over the pilot region.
pub fn estimate_heff(y: &DdGrid, layout: &FrameLayout, x_p: c64) -> Result<EstimationResult> {
    if x_p == c64::new(0.0, 0.0) {
        return Err(Error::param("pilot amplitude must be non-zero"));
    }
    if y.m() != layout.m() || y.n() != layout.n() {
        return Err(Error::dim("estimate_heff", layout.m() * layout.n(), y.m() * y.n()));
    }
    let half = layout.pilot_half();
    let h_hat = read_pilot_response(y, layout.pilot(), x_p, Some(half));
    Ok(EstimationResult {
        h_hat,
        nmse: None,
        samples_used: (2 * half.0 + 1) * (2 * half.1 + 1),
    })
}

/// `Σ|ĥ − h|² / Σ|h|²` over the centered fundamental domain.
pub fn nmse(h_hat: &DdResponse, h_true: &DdResponse) -> Result<f64> {
    if h_hat.m() != h_true.m() || h_hat.n() != h_true.n() {
        return Err(Error::dim("nmse", h_true.m() * h_true.n(), h_hat.m() * h_hat.n()));
    }
    let dom = DdResponse::centered(h_true.m(), h_true.n());
    let mut num = 0.0;
    let mut den = 0.0;
    for l in dom.l_range() {
        for k in dom.k_range() {
            let t = h_true.get(l, k);
            num += (h_hat.get(l, k) - t).norm_sqr();
            den += t.norm_sqr();
        }
    }
    if den == 0.0 {
        return Err(Error::param("NMSE reference is identically zero"));
    }
    Ok(num / den)
}
