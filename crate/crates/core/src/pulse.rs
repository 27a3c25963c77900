//! Sampled pulsones, the pulse matrix `P` and IOTA orthogonalization.
//!
//! Every pulse set built from windows factors as `P = diag(B) · F⁻¹ · Q` where
//! `F⁻¹` is the unnormalized inverse DFT over the frame and `Q` is a sparse
//! set of frequency-bin coefficients. Modulation and correlation run through
//! that factorization in `O(S log S)`; the dense matrix is kept for
//! channel-matrix products.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use faer::{Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{Error, Result};
use crate::fft::Dft;
use crate::lattice::LatticeParams;
use crate::window::{
    sample_frequency_window, sample_time_window, Axis, FrequencyTaps, SampledWindow, WindowSpec,
    PSWF_GRID,
};

/// Default relative eigenvalue floor for `R^{-1/2}`.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Largest condition number accepted by IOTA orthogonalization.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PulseState {
    Raw,
    UnitEnergy,
    Orthogonalized,
}

/// Sparse frequency-domain factor of a pulse matrix.
#[derive(Debug, Clone)]
pub struct SpectralFactor {
    window: Vec<f64>,
    bins: Vec<usize>,
    coeffs: Mat<c64>,
    dft: Dft,
}

impl SpectralFactor {
    pub fn bins(&self) -> &[usize] {
        &self.bins
    }

    pub fn coeffs(&self) -> MatRef<'_, c64> {
        self.coeffs.as_ref()
    }

    fn synthesize(&self, x: &[c64]) -> Vec<c64> {
        let s = self.window.len();
        let xv = Mat::from_fn(x.len(), 1, |i, _| x[i]);
        let q: Mat<c64> = &self.coeffs * &xv;
        let mut buf = vec![c64::new(0.0, 0.0); s];
        for (r, &b) in self.bins.iter().enumerate() {
            buf[b] = q[(r, 0)];
        }
        self.dft.inverse(&mut buf);
        for (v, w) in buf.iter_mut().zip(&self.window) {
            *v *= *w;
        }
        buf
    }

    fn bin_spectrum(&self, r: &[c64]) -> Vec<c64> {
        let mut buf: Vec<c64> = r.iter().zip(&self.window).map(|(v, w)| v * w).collect();
        self.dft.forward(&mut buf);
        self.bins.iter().map(|&b| buf[b]).collect()
    }

    fn correlate(&self, r: &[c64]) -> Vec<c64> {
        let z = self.bin_spectrum(r);
        let zv = Mat::from_fn(z.len(), 1, |i, _| z[i]);
        let y: Mat<c64> = self.coeffs.adjoint() * &zv;
        (0..y.nrows()).map(|i| y[(i, 0)]).collect()
    }

    fn correlate_columns(&self, z: MatRef<'_, c64>) -> Mat<c64> {
        let mut spectra = Mat::<c64>::zeros(self.bins.len(), z.ncols());
        let mut col = vec![c64::new(0.0, 0.0); z.nrows()];
        for j in 0..z.ncols() {
            for (i, v) in col.iter_mut().enumerate() {
                *v = z[(i, j)];
            }
            let bins = self.bin_spectrum(&col);
            for (i, v) in bins.into_iter().enumerate() {
                spectra[(i, j)] = v;
            }
        }
        self.coeffs.adjoint() * &spectra
    }

    fn dense(&self, cols: usize) -> Mat<c64> {
        let s = self.window.len();
        let mut out = Mat::<c64>::zeros(s, cols);
        let mut buf = vec![c64::new(0.0, 0.0); s];
        for c in 0..cols {
            buf.iter_mut().for_each(|v| *v = c64::new(0.0, 0.0));
            for (r, &b) in self.bins.iter().enumerate() {
                buf[b] = self.coeffs[(r, c)];
            }
            self.dft.inverse(&mut buf);
            for n in 0..s {
                out[(n, c)] = buf[n] * self.window[n];
            }
        }
        out
    }
}

/// An `S × MN` matrix whose column `k·M + l` is the pulsone for cell `(l, k)`.
#[derive(Debug, Clone)]
pub struct PulseMatrix {
    entries: Mat<c64>,
    state: PulseState,
    params: Option<LatticeParams>,
    windows: Option<(WindowSpec, WindowSpec)>,
    spectral: Option<SpectralFactor>,
    defect: Option<f64>,
}

fn check_cell(params: &LatticeParams, l: usize, k: usize) -> Result<()> {
    if l >= params.m || k >= params.n {
        return Err(Error::param(format!(
            "cell ({l}, {k}) outside the {}×{} lattice",
            params.m, params.n
        )));
    }
    Ok(())
}

/// One sampled pulsone,
/// `p[n] = B[n] Σ_{j ≡ k (mod N)} a_j e^{j2π f_j (t_n - τ_l)}` with `f_j = jΔf/N`.
pub fn synthesize_pulsone(
    l: usize,
    k: usize,
    freq: &FrequencyTaps,
    time: &SampledWindow,
    params: &LatticeParams,
) -> Result<Vec<c64>> {
    check_cell(params, l, k)?;
    let s = params.samples();
    if time.samples.len() != s {
        return Err(Error::dim("synthesize_pulsone window", s, time.samples.len()));
    }
    let mut spectrum = vec![c64::new(0.0, 0.0); s];
    let mut any = false;
    for (j, a) in freq.iter() {
        if j.rem_euclid(params.n as i64) != k as i64 {
            continue;
        }
        any = true;
        let phase = -2.0 * PI * ((j * (l * params.l) as i64).rem_euclid(s as i64)) as f64 / s as f64;
        spectrum[j.rem_euclid(s as i64) as usize] += c64::from_polar(a, phase);
    }
    if !any {
        return Err(Error::param(format!(
            "frequency window has no samples in Doppler coset {k}"
        )));
    }
    Dft::new(s).inverse(&mut spectrum);
    for (v, b) in spectrum.iter_mut().zip(&time.samples) {
        *v *= *b;
    }
    Ok(spectrum)
}

fn spectral_factor(
    freq: &FrequencyTaps,
    time: &SampledWindow,
    params: &LatticeParams,
) -> Result<SpectralFactor> {
    let s = params.samples() as i64;
    let (m, n) = (params.m, params.n);
    let mut rows: BTreeMap<usize, usize> = BTreeMap::new();
    for (j, _) in freq.iter() {
        rows.insert(j.rem_euclid(s) as usize, 0);
    }
    for (i, v) in rows.values_mut().enumerate() {
        *v = i;
    }
    let mut coeffs = Mat::<c64>::zeros(rows.len(), m * n);
    let mut covered = vec![false; n];
    for (j, a) in freq.iter() {
        let k = j.rem_euclid(n as i64) as usize;
        covered[k] = true;
        let r = rows[&(j.rem_euclid(s) as usize)];
        for l in 0..m {
            let turns = (j * (l * params.l) as i64).rem_euclid(s);
            coeffs[(r, k * m + l)] += c64::from_polar(a, -2.0 * PI * turns as f64 / s as f64);
        }
    }
    if let Some(k) = covered.iter().position(|c| !c) {
        return Err(Error::param(format!(
            "frequency window has no samples in Doppler coset {k}"
        )));
    }
    Ok(SpectralFactor {
        window: time.samples.clone(),
        bins: rows.keys().copied().collect(),
        coeffs,
        dft: Dft::new(s as usize),
    })
}

fn column_energies(p: MatRef<'_, c64>) -> Vec<f64> {
    (0..p.ncols())
        .map(|j| (0..p.nrows()).map(|i| p[(i, j)].norm_sqr()).sum())
        .collect()
}

impl PulseMatrix {
    fn from_windows(
        freq: &WindowSpec,
        time: &WindowSpec,
        params: &LatticeParams,
        normalize: bool,
    ) -> Result<Self> {
        if freq.axis() != Axis::Frequency || time.axis() != Axis::Time {
            return Err(Error::param("window pair must be (frequency, time)"));
        }
        let taps = sample_frequency_window(freq, params)?;
        let samples = sample_time_window(time, params)?;
        let mut spectral = spectral_factor(&taps, &samples, params)?;
        let mut entries = spectral.dense(params.cells());
        let state = if normalize {
            let energies = column_energies(entries.as_ref());
            for (j, &e) in energies.iter().enumerate() {
                if e <= 0.0 {
                    return Err(Error::Numeric(format!("pulse column {j} has zero energy")));
                }
                let g = 1.0 / e.sqrt();
                for i in 0..entries.nrows() {
                    entries[(i, j)] *= g;
                }
                for i in 0..spectral.coeffs.nrows() {
                    spectral.coeffs[(i, j)] *= g;
                }
            }
            PulseState::UnitEnergy
        } else {
            PulseState::Raw
        };
        Ok(PulseMatrix {
            entries,
            state,
            params: Some(*params),
            windows: Some((freq.clone(), time.clone())),
            spectral: Some(spectral),
            defect: None,
        })
    }

    /// Wraps an arbitrary matrix (no lattice structure).
    pub fn from_matrix(entries: Mat<c64>, state: PulseState) -> Self {
        PulseMatrix {
            entries,
            state,
            params: None,
            windows: None,
            spectral: None,
            defect: None,
        }
    }

    pub fn entries(&self) -> MatRef<'_, c64> {
        self.entries.as_ref()
    }

    pub fn state(&self) -> PulseState {
        self.state
    }

    pub fn params(&self) -> Option<&LatticeParams> {
        self.params.as_ref()
    }

    pub fn windows(&self) -> Option<&(WindowSpec, WindowSpec)> {
        self.windows.as_ref()
    }

    pub fn spectral(&self) -> Option<&SpectralFactor> {
        self.spectral.as_ref()
    }

    /// Orthogonality defect recorded by the last IOTA step.
    pub fn recorded_defect(&self) -> Option<f64> {
        self.defect
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<c64> {
        (0..self.entries.nrows()).map(|i| self.entries[(i, j)]).collect()
    }

    /// `P · x`.
    pub fn apply(&self, x: &[c64]) -> Result<Vec<c64>> {
        if x.len() != self.cols() {
            return Err(Error::dim("pulse apply", self.cols(), x.len()));
        }
        if let Some(sp) = &self.spectral {
            return Ok(sp.synthesize(x));
        }
        Ok(crate::detector::apply(self.entries.as_ref(), x))
    }

    /// `Pᴴ · r`.
    pub fn adjoint_apply(&self, r: &[c64]) -> Result<Vec<c64>> {
        if r.len() != self.rows() {
            return Err(Error::dim("pulse adjoint", self.rows(), r.len()));
        }
        if let Some(sp) = &self.spectral {
            return Ok(sp.correlate(r));
        }
        let rv = Mat::from_fn(r.len(), 1, |i, _| r[i]);
        let y: Mat<c64> = self.entries.adjoint() * &rv;
        Ok((0..y.nrows()).map(|i| y[(i, 0)]).collect())
    }

    /// `Pᴴ · Z` for a block of time-domain columns.
    pub fn adjoint_apply_matrix(&self, z: MatRef<'_, c64>) -> Result<Mat<c64>> {
        if z.nrows() != self.rows() {
            return Err(Error::dim("pulse adjoint block", self.rows(), z.nrows()));
        }
        if let Some(sp) = &self.spectral {
            return Ok(sp.correlate_columns(z));
        }
        Ok(self.entries.adjoint() * z)
    }
}

/// Unit-energy pulse matrix from a (frequency, time) window pair.
pub fn build_pulse_matrix(
    freq: &WindowSpec,
    time: &WindowSpec,
    params: &LatticeParams,
) -> Result<PulseMatrix> {
    PulseMatrix::from_windows(freq, time, params, true)
}

/// Pulse matrix without column normalization; the scale at which the
/// closed-form effective channel holds exactly.
pub fn build_raw_pulse_matrix(
    freq: &WindowSpec,
    time: &WindowSpec,
    params: &LatticeParams,
) -> Result<PulseMatrix> {
    PulseMatrix::from_windows(freq, time, params, false)
}

/// Hermitian-symmetrized Gram matrix `R = Pᴴ P`.
pub fn gram(p: &PulseMatrix) -> Mat<c64> {
    let r: Mat<c64> = p.entries.adjoint() * &p.entries;
    hermitian_part(r.as_ref())
}

pub(crate) fn hermitian_part(a: MatRef<'_, c64>) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)].conj()))
}

/// Gram matrix together with its inverse square root.
#[derive(Debug, Clone)]
pub struct GramFactor {
    pub r: Mat<c64>,
    pub inv_sqrt: Mat<c64>,
    pub eigen_floor: f64,
    pub condition: f64,
}

impl GramFactor {
    pub fn new(r: Mat<c64>, eigen_floor: f64) -> Result<Self> {
        let (inv_sqrt, condition, floor) = inverse_sqrt_parts(r.as_ref(), eigen_floor)?;
        Ok(GramFactor {
            r,
            inv_sqrt,
            eigen_floor: floor,
            condition,
        })
    }
}

fn inverse_sqrt_parts(r: MatRef<'_, c64>, eigen_floor: f64) -> Result<(Mat<c64>, f64, f64)> {
    let n = r.nrows();
    if r.ncols() != n {
        return Err(Error::dim("hermitian_inverse_sqrt", n, r.ncols()));
    }
    let eig = r
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("Hermitian eigensolver failed: {e:?}")))?;
    let s = eig.S().column_vector();
    let lambda: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    let lmax = lambda.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lmax > 0.0) {
        return Err(Error::Numeric("Gram matrix has no positive eigenvalue".into()));
    }
    let floor = eigen_floor * lmax;
    let clamped: Vec<f64> = lambda.iter().map(|&v| v.max(floor)).collect();
    // conditioning of R itself, before the floor
    let lmin = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    let u = eig.U();
    let scaled = Mat::from_fn(n, n, |i, j| u[(i, j)] * clamped[j].powf(-0.5));
    let out: Mat<c64> = &scaled * u.adjoint();
    Ok((hermitian_part(out.as_ref()), condition, floor))
}

/// `U Λ^{-1/2} Uᴴ` with eigenvalues floored at `eigen_floor · λ_max`.
pub fn hermitian_inverse_sqrt(r: MatRef<'_, c64>, eigen_floor: f64) -> Result<Mat<c64>> {
    Ok(inverse_sqrt_parts(r, eigen_floor)?.0)
}

/// Largest entry of `|Pᴴ P − I|`.
pub fn orthogonality_defect(p: &PulseMatrix) -> f64 {
    let r: Mat<c64> = p.entries.adjoint() * &p.entries;
    let mut worst = 0.0f64;
    for j in 0..r.ncols() {
        for i in 0..r.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((r[(i, j)] - target).norm());
        }
    }
    worst
}

/// Symmetric (Löwdin) orthogonalization `P̃ = P R^{-1/2}`.
pub fn iota_orthogonalize(p: &PulseMatrix) -> Result<PulseMatrix> {
    iota_orthogonalize_with_floor(p, EIGEN_FLOOR)
}

pub fn iota_orthogonalize_with_floor(p: &PulseMatrix, eigen_floor: f64) -> Result<PulseMatrix> {
    if p.state == PulseState::Raw {
        return Err(Error::State(
            "IOTA orthogonalization needs unit-energy pulses".into(),
        ));
    }
    let r = gram(p);
    let (inv_sqrt, condition, _) = inverse_sqrt_parts(r.as_ref(), eigen_floor)?;
    if condition > MAX_CONDITION {
        return Err(Error::Conditioning { condition });
    }
    let entries: Mat<c64> = &p.entries * &inv_sqrt;
    let spectral = p.spectral.as_ref().map(|sp| SpectralFactor {
        window: sp.window.clone(),
        bins: sp.bins.clone(),
        coeffs: &sp.coeffs * &inv_sqrt,
        dft: sp.dft.clone(),
    });
    let mut out = PulseMatrix {
        entries,
        state: PulseState::Orthogonalized,
        params: p.params,
        windows: p.windows.clone(),
        spectral,
        defect: None,
    };
    out.defect = Some(orthogonality_defect(&out));
    Ok(out)
}

/// Pulse families compared throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseFamily {
    Rect,
    Rrc,
    Pswf,
    IotaPswf,
}

impl PulseFamily {
    pub const ALL: [PulseFamily; 4] = [
        PulseFamily::Rect,
        PulseFamily::Rrc,
        PulseFamily::Pswf,
        PulseFamily::IotaPswf,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PulseFamily::Rect => "rect",
            PulseFamily::Rrc => "rrc",
            PulseFamily::Pswf => "pswf",
            PulseFamily::IotaPswf => "iota-pswf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rect" => Ok(PulseFamily::Rect),
            "rrc" => Ok(PulseFamily::Rrc),
            "pswf" => Ok(PulseFamily::Pswf),
            "iota-pswf" => Ok(PulseFamily::IotaPswf),
            other => Err(Error::Config(format!("unknown window kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for PulseFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Shape parameters shared by the pulse families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseDesign {
    /// Roll-off of the RRC windows.
    pub rolloff: f64,
    /// PSWF support as a multiple of the lattice extent (`M·Δf` or `N·T`).
    pub pswf_span: f64,
    /// PSWF concentration width as a multiple of one bin (`1/(M·Δf)` or `1/(N·T)`).
    pub pswf_concentration: f64,
}

impl Default for PulseDesign {
    fn default() -> Self {
        PulseDesign {
            rolloff: 0.3,
            pswf_span: 1.3,
            pswf_concentration: 2.65,
        }
    }
}

impl PulseDesign {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(Error::Config(format!("roll-off {} outside [0, 1]", self.rolloff)));
        }
        if !(self.pswf_span > 0.0 && self.pswf_concentration > 0.0) {
            return Err(Error::Config("PSWF span and concentration must be positive".into()));
        }
        Ok(())
    }
}

/// Frequency and time windows of a family on the given lattice.
pub fn family_windows(
    family: PulseFamily,
    params: &LatticeParams,
    design: &PulseDesign,
) -> Result<(WindowSpec, WindowSpec)> {
    design.validate()?;
    let fb = params.m as f64 * params.delta_f;
    let tb = params.n as f64 * params.t;
    let c = design.pswf_concentration;
    Ok(match family {
        PulseFamily::Rect => (
            WindowSpec::rectangular(Axis::Frequency, fb)?,
            WindowSpec::rectangular(Axis::Time, tb)?,
        ),
        PulseFamily::Rrc => (
            WindowSpec::root_raised_cosine(Axis::Frequency, fb, design.rolloff)?,
            WindowSpec::root_raised_cosine(Axis::Time, tb, design.rolloff)?,
        ),
        PulseFamily::Pswf | PulseFamily::IotaPswf => (
            WindowSpec::pswf(Axis::Frequency, fb / c, design.pswf_span * fb)?.solved(PSWF_GRID)?,
            WindowSpec::pswf(Axis::Time, tb / c, design.pswf_span * tb)?.solved(PSWF_GRID)?,
        ),
    })
}

/// Unit-energy (or orthogonalized) pulse matrix for a family.
pub fn build_family(
    family: PulseFamily,
    params: &LatticeParams,
    design: &PulseDesign,
) -> Result<PulseMatrix> {
    let (a, b) = family_windows(family, params, design)?;
    let p = build_pulse_matrix(&a, &b, params)?;
    match family {
        PulseFamily::IotaPswf => iota_orthogonalize(&p),
        _ => Ok(p),
    }
}
