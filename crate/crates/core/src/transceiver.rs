//! Modulation, correlation reception and the delay-Doppler effective channel.
//!
//! The effective channel is available three ways: the matrix product
//! `P_rxᴴ G P_tx`, a closed-form response evaluated from window ambiguities,
//! and a sparse response (for instance an estimate) assembled into a matrix
//! through the quasi-periodic twisted-convolution rule.

use std::f64::consts::PI;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::channel::{apply_channel, ChannelOperator, PathSet};
use crate::error::{Error, Result};
use crate::lattice::{DdFrame, DdGrid, DdIndex, LatticeParams};
use crate::pulse::{gram, PulseMatrix};
use crate::window::{discrete_periodic_ambiguity, FrequencyTaps, SampledWindow};

/// A delay-Doppler response on a rectangular patch of the integer lattice.
/// Values outside the patch are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DdResponse {
    m: usize,
    n: usize,
    l_min: i64,
    k_min: i64,
    l_len: usize,
    k_len: usize,
    data: Vec<c64>,
}

impl DdResponse {
    /// Zero response on the centered fundamental domain `[-M/2, M/2) × [-N/2, N/2)`.
    pub fn centered(m: usize, n: usize) -> Self {
        Self::with_support(m, n, -((m / 2) as i64), m, -((n / 2) as i64), n)
    }

    pub fn with_support(
        m: usize,
        n: usize,
        l_min: i64,
        l_len: usize,
        k_min: i64,
        k_len: usize,
    ) -> Self {
        DdResponse {
            m,
            n,
            l_min,
            k_min,
            l_len,
            k_len,
            data: vec![c64::new(0.0, 0.0); l_len * k_len],
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l_range(&self) -> std::ops::Range<i64> {
        self.l_min..self.l_min + self.l_len as i64
    }

    pub fn k_range(&self) -> std::ops::Range<i64> {
        self.k_min..self.k_min + self.k_len as i64
    }

    #[inline]
    fn offset(&self, l: i64, k: i64) -> Option<usize> {
        let a = l - self.l_min;
        let b = k - self.k_min;
        if a < 0 || b < 0 || a >= self.l_len as i64 || b >= self.k_len as i64 {
            None
        } else {
            Some(b as usize * self.l_len + a as usize)
        }
    }

    pub fn get(&self, l: i64, k: i64) -> c64 {
        self.offset(l, k).map_or(c64::new(0.0, 0.0), |i| self.data[i])
    }

    pub fn set(&mut self, l: i64, k: i64, v: c64) -> Result<()> {
        match self.offset(l, k) {
            Some(i) => {
                self.data[i] = v;
                Ok(())
            }
            None => Err(Error::param(format!("({l}, {k}) outside the response support"))),
        }
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Non-zero entries as `(l, k, value)`.
    pub fn nonzero(&self) -> Vec<(i64, i64, c64)> {
        let mut out = Vec::new();
        for b in 0..self.k_len {
            for a in 0..self.l_len {
                let v = self.data[b * self.l_len + a];
                if v != c64::new(0.0, 0.0) {
                    out.push((self.l_min + a as i64, self.k_min + b as i64, v));
                }
            }
        }
        out
    }

    /// All entries in row order `(l, k, value)`, `l` outermost.
    pub fn entries(&self) -> Vec<(i64, i64, c64)> {
        let mut out = Vec::with_capacity(self.data.len());
        for l in self.l_range() {
            for k in self.k_range() {
                out.push((l, k, self.get(l, k)));
            }
        }
        out
    }

    /// Applies a scalar to every entry.
    pub fn scaled(&self, s: c64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    MatrixProduct,
    ClosedForm,
    Estimated,
}

/// Fundamental-domain response plus the full effective channel matrix.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    pub fundamental: DdResponse,
    pub h: Mat<c64>,
    pub provenance: Provenance,
}

/// `s = P · vec(X)`.
pub fn modulate(frame: &DdFrame, p: &PulseMatrix) -> Result<Vec<c64>> {
    p.apply(&frame.vectorize())
}

/// `y = Pᴴ · r` with unit receive gain.
pub fn correlate_receive(r: &[c64], p: &PulseMatrix) -> Result<Vec<c64>> {
    p.adjoint_apply(r)
}

#[inline]
fn turns(num: i64, den: i64) -> c64 {
    c64::from_polar(1.0, 2.0 * PI * num.rem_euclid(den) as f64 / den as f64)
}

/// Reads a pilot response back to the centered domain:
/// `ĥ[l, k] = y_qp[l + l_p, k + k_p] / x_p · e^{-j2π k l_p / (MN)}`,
/// restricted to `|l| ≤ half.0`, `|k| ≤ half.1` when given.
pub(crate) fn read_pilot_response(
    y: &DdGrid,
    pilot: DdIndex,
    x_p: c64,
    half: Option<(usize, usize)>,
) -> DdResponse {
    let (m, n) = (y.m(), y.n());
    let mn = (m * n) as i64;
    let mut out = DdResponse::centered(m, n);
    for l in out.l_range() {
        for k in out.k_range() {
            if let Some((a, b)) = half {
                if l.unsigned_abs() as usize > a || k.unsigned_abs() as usize > b {
                    continue;
                }
            }
            let v = y.quasiperiodic_value(DdIndex::new(l + pilot.l, k + pilot.k));
            let v = v / x_p * turns(-k * pilot.l, mn);
            out.set(l, k, v).expect("centered index");
        }
    }
    out
}

fn check_pair(p_tx: &PulseMatrix, p_rx: &PulseMatrix) -> Result<()> {
    if p_tx.rows() != p_rx.rows() {
        return Err(Error::dim("pulse sample count", p_tx.rows(), p_rx.rows()));
    }
    if p_tx.cols() != p_rx.cols() {
        return Err(Error::dim("pulse column count", p_tx.cols(), p_rx.cols()));
    }
    Ok(())
}

/// `G · P_tx`, the channel applied to every transmit pulse.
pub fn channel_on_pulses(
    p_tx: &PulseMatrix,
    paths: &PathSet,
    params: &LatticeParams,
) -> Result<Mat<c64>> {
    let s = params.samples();
    if p_tx.rows() != s {
        return Err(Error::dim("channel_on_pulses", s, p_tx.rows()));
    }
    let op = ChannelOperator::new(paths, params)?;
    let mut z = Mat::<c64>::zeros(s, p_tx.cols());
    for j in 0..p_tx.cols() {
        let out = op.apply(&p_tx.column(j))?;
        for (i, v) in out.into_iter().enumerate() {
            z[(i, j)] = v;
        }
    }
    Ok(z)
}

/// `H = P_rxᴴ G P_tx`; the fundamental response is the centre-probe column read back.
pub fn effective_channel_matrix(
    p_tx: &PulseMatrix,
    p_rx: &PulseMatrix,
    paths: &PathSet,
    params: &LatticeParams,
) -> Result<EffectiveChannel> {
    check_pair(p_tx, p_rx)?;
    if p_tx.cols() != params.cells() {
        return Err(Error::dim("effective_channel_matrix", params.cells(), p_tx.cols()));
    }
    let z = channel_on_pulses(p_tx, paths, params)?;
    let h = p_rx.adjoint_apply_matrix(z.as_ref())?;
    let probe = DdIndex::new((params.m / 2) as i64, (params.n / 2) as i64);
    let col = params.index(probe.l as usize, probe.k as usize);
    let column: Vec<c64> = (0..h.nrows()).map(|i| h[(i, col)]).collect();
    let grid = DdGrid::devectorize(params.m, params.n, &column)?;
    let fundamental = read_pilot_response(&grid, probe, c64::new(1.0, 0.0), None);
    Ok(EffectiveChannel {
        fundamental,
        h,
        provenance: Provenance::MatrixProduct,
    })
}

/// Noiseless response of a single pilot, `Pᴴ G P e_pilot`, as a grid.
pub fn pilot_response(
    p: &PulseMatrix,
    paths: &PathSet,
    params: &LatticeParams,
    pilot: DdIndex,
    x_p: c64,
) -> Result<DdGrid> {
    let mut x = vec![c64::new(0.0, 0.0); params.cells()];
    x[params.index(pilot.l as usize, pilot.k as usize)] = x_p;
    let s = p.apply(&x)?;
    let r = apply_channel(&s, paths, params)?;
    DdGrid::devectorize(params.m, params.n, &p.adjoint_apply(&r)?)
}

/// Closed-form effective response of a windowed pulse set under a path set:
/// `h[l, k] = T Σ_q h_q e^{j2π(lk − l_τ k_ν)/(MN)} Y_A(τ_l − τ_q, −ν_k) X̃_B(−d_q, k − k_ν)`
/// with `Y_A` the lattice sum of the frequency taps and `d_q` the sample delay.
/// Holds exactly for pulse matrices built without column normalization.
pub struct ClosedForm<'a> {
    taps: &'a FrequencyTaps,
    window: &'a [f64],
    params: LatticeParams,
    paths: Vec<(c64, i64, f64)>,
}

impl<'a> ClosedForm<'a> {
    pub fn new(
        taps: &'a FrequencyTaps,
        time: &'a SampledWindow,
        paths: &PathSet,
        params: &LatticeParams,
    ) -> Result<Self> {
        if time.samples.len() != params.samples() {
            return Err(Error::dim("closed form window", params.samples(), time.samples.len()));
        }
        let paths = paths
            .paths
            .iter()
            .map(|p| (p.gain, p.sample_shift(params), p.k_nu(params)))
            .collect();
        Ok(ClosedForm {
            taps,
            window: &time.samples,
            params: *params,
            paths,
        })
    }

    pub fn value(&self, l: i64, k: i64) -> c64 {
        let p = &self.params;
        let mn = p.cells() as f64;
        let fs = p.sample_rate();
        let tau_l = l as f64 / (p.m as f64 * p.delta_f);
        let mut acc = c64::new(0.0, 0.0);
        for &(h, d, kn) in &self.paths {
            let l_tau = d as f64 / p.l as f64;
            let phase = 2.0 * PI * (((l * k).rem_euclid(p.cells() as i64)) as f64 - l_tau * kn) / mn;
            let ya = self.taps.ambiguity(tau_l - d as f64 / fs, k);
            let xb = discrete_periodic_ambiguity(self.window, -d, k as f64 - kn);
            acc += h * c64::from_polar(1.0, phase) * ya * xb;
        }
        acc * p.t
    }

    /// Support that captures every non-zero term: one delay period of `MN`
    /// bins and all Doppler offsets reachable by the frequency taps.
    pub fn full_support(&self) -> DdResponse {
        let p = &self.params;
        let u = self.taps.j_max() - self.taps.j_min;
        let mn = p.cells();
        DdResponse::with_support(p.m, p.n, -((mn / 2) as i64), mn, -u, (2 * u + 1) as usize)
    }

    pub fn evaluate_on(&self, mut support: DdResponse) -> DdResponse {
        for l in support.l_range() {
            for k in support.k_range() {
                let v = self.value(l, k);
                support.set(l, k, v).expect("inside support");
            }
        }
        support
    }
}

/// Single closed-form sample, evaluated with the lattice parameters of the pulse set.
pub fn heff_closed_form(
    taps: &FrequencyTaps,
    time: &SampledWindow,
    paths: &PathSet,
    params: &LatticeParams,
    l: i64,
    k: i64,
) -> Result<c64> {
    Ok(ClosedForm::new(taps, time, paths, params)?.value(l, k))
}

/// Assembles `H[k'M + l', kM + l] = Σ h[l' − l − nM, k' − k − mN] e^{j2πnk/N}
/// e^{j2π(k' − k − mN)(l + nM)/(MN)}` summing every term of the response's
/// support. For a centered fundamental response this is the single alias
/// landing each difference in the fundamental domain.
pub fn build_h_from_heff(h: &DdResponse) -> Mat<c64> {
    let (m, n) = (h.m as i64, h.n as i64);
    let mn = m * n;
    let taps = h.nonzero();
    let mut out = Mat::<c64>::zeros(mn as usize, mn as usize);
    for k in 0..n {
        for l in 0..m {
            let col = (k * m + l) as usize;
            for &(lam, u, v) in &taps {
                let lo = (l + lam).rem_euclid(m);
                let ko = (k + u).rem_euclid(n);
                let na = (lo - l - lam) / m;
                let ph = turns(na * k * m + u * (l + na * m), mn);
                out[((ko * m + lo) as usize, col)] += v * ph;
            }
        }
    }
    out
}

/// `Y[l, k] = Σ h[l', k'] X_qp[l − l', k − k'] e^{j2πk'(l − l')/(MN)}`.
pub fn twisted_convolution_io(x: &DdGrid, h: &DdResponse) -> Result<DdGrid> {
    if x.m() != h.m || x.n() != h.n {
        return Err(Error::dim("twisted_convolution_io", h.m * h.n, x.m() * x.n()));
    }
    let (m, n) = (x.m() as i64, x.n() as i64);
    let mn = m * n;
    let taps = h.nonzero();
    let mut y = DdGrid::zeros(x.m(), x.n());
    for k in 0..n {
        for l in 0..m {
            let mut acc = c64::new(0.0, 0.0);
            for &(lp, kp, v) in &taps {
                let xv = x.quasiperiodic_value(DdIndex::new(l - lp, k - kp));
                acc += v * xv * turns(kp * (l - lp), mn);
            }
            y.set(l as usize, k as usize, acc);
        }
    }
    Ok(y)
}

/// `C_n = σ² P_rxᴴ P_rx`.
pub fn dd_noise_covariance(p_rx: &PulseMatrix, sigma2: f64) -> Mat<c64> {
    let r = gram(p_rx);
    Mat::from_fn(r.nrows(), r.ncols(), |i, j| r[(i, j)] * sigma2)
}

/// Relative Frobenius distance `‖A − B‖ / ‖B‖`.
pub fn relative_frobenius(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..b.ncols() {
        for i in 0..b.nrows() {
            num += (a[(i, j)] - b[(i, j)]).norm_sqr();
            den += b[(i, j)].norm_sqr();
        }
    }
    (num / den).sqrt()
}
