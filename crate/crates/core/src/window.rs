//! Time and frequency windows: rectangular, root-raised-cosine and zeroth-order
//! prolate spheroidal shapes, their lattice samplings and ambiguity functions.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{Error, Result};
use crate::lattice::LatticeParams;
use crate::quad;

/// Absolute tolerance used for all ambiguity quadratures.
pub const QUAD_TOL: f64 = 1e-10;

/// Default Nyström grid size for the PSWF eigenproblem.
pub const PSWF_GRID: usize = 1024;

const PSWF_TABLE: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Time,
    Frequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WindowKind {
    Rectangular,
    RootRaisedCosine { rolloff: f64 },
    Pswf,
}

/// Dominant eigenpair of the sinc-kernel concentration problem on `[-T', T']`.
#[derive(Debug, Clone)]
pub struct PswfSolution {
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
    pub psi0: Vec<f64>,
    pub lambda0: f64,
    pub lambda1: f64,
    pub t_prime: f64,
    pub b_prime: f64,
    /// Set when the leading eigenvalue is not separated from the next one.
    pub degenerate: bool,
    // sin/cos of π B' t_i, for the expanded sinc in `eval`
    node_sin: Vec<f64>,
    node_cos: Vec<f64>,
}

#[inline]
fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let p = PI * x;
        p.sin() / p
    }
}

impl PswfSolution {
    /// Concentration parameter `c = π T' B'`.
    pub fn c(&self) -> f64 {
        PI * self.t_prime * self.b_prime
    }

    /// Nyström extension of the eigenfunction to an arbitrary point.
    pub fn eval(&self, t: f64) -> f64 {
        let b = self.b_prime;
        let (st, ct) = (PI * b * t).sin_cos();
        let near = 1e-6 / b;
        let mut acc = 0.0;
        for i in 0..self.grid.len() {
            let d = t - self.grid[i];
            let k = if d.abs() < near {
                b * sinc(b * d)
            } else {
                (st * self.node_cos[i] - ct * self.node_sin[i]) / (PI * d)
            };
            acc += self.weights[i] * k * self.psi0[i];
        }
        acc / self.lambda0
    }

    /// Quadrature energy of `psi0` on its grid.
    pub fn energy(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.psi0)
            .map(|(w, p)| w * p * p)
            .sum()
    }
}

/// Solves `λ ψ(t) = ∫_{-T'}^{T'} B' sinc(B'(t - s)) ψ(s) ds` for the dominant
/// eigenpair with a Gauss-Legendre Nyström discretization.
pub fn solve_pswf(t_prime: f64, b_prime: f64, grid_size: usize) -> Result<PswfSolution> {
    if !(t_prime > 0.0 && b_prime > 0.0) {
        return Err(Error::param("PSWF interval and bandlimit must be positive"));
    }
    if grid_size < 64 {
        return Err(Error::param(format!("PSWF grid size {grid_size} below 64")));
    }
    // normalized coordinates x = t / T' with kernel a·sinc(a(x - y)), a = T'B'
    let a = t_prime * b_prime;
    let n = grid_size;
    let (x, w) = quad::gauss_legendre(n);
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let k = Mat::<f64>::from_fn(n, n, |i, j| sw[i] * a * sinc(a * (x[i] - x[j])) * sw[j]);
    let eig = k
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("PSWF eigensolver failed: {e:?}")))?;
    let s = eig.S().column_vector();
    let lambda0 = s[n - 1];
    let lambda1 = s[n - 2];
    let u = eig.U();
    let mut psi: Vec<f64> = (0..n).map(|i| u[(i, n - 1)] / sw[i]).collect();
    if !(lambda0 > 0.0 && lambda0 <= 1.0 + 1e-9) {
        return Err(Error::Numeric(format!("PSWF leading eigenvalue {lambda0} outside (0, 1]")));
    }
    // enforce exact evenness, then fix the sign so that psi(0) > 0
    for i in 0..n / 2 {
        let avg = 0.5 * (psi[i] + psi[n - 1 - i]);
        psi[i] = avg;
        psi[n - 1 - i] = avg;
    }
    let norm: f64 = w.iter().zip(&psi).map(|(w, p)| w * p * p).sum::<f64>().sqrt();
    let centre: f64 = x
        .iter()
        .zip(&w)
        .zip(&psi)
        .map(|((&xi, &wi), &pi)| wi * a * sinc(a * xi) * pi)
        .sum();
    let sign = if centre < 0.0 { -1.0 } else { 1.0 };
    let scale = sign / (norm * t_prime.sqrt());
    let grid: Vec<f64> = x.iter().map(|v| v * t_prime).collect();
    let (node_sin, node_cos) = grid.iter().map(|&t| (PI * b_prime * t).sin_cos()).unzip();
    Ok(PswfSolution {
        node_sin,
        node_cos,
        grid,
        weights: w.iter().map(|v| v * t_prime).collect(),
        psi0: psi.iter().map(|p| p * scale).collect(),
        lambda0,
        lambda1,
        t_prime,
        b_prime,
        degenerate: lambda0 - lambda1 < 1e-12,
    })
}

/// Solved PSWF with a dense interpolation table for fast evaluation.
#[derive(Debug)]
struct PswfTable {
    solution: PswfSolution,
    start: f64,
    step: f64,
    values: Vec<f64>,
}

impl PswfTable {
    fn new(solution: PswfSolution) -> Self {
        let half = solution.t_prime;
        let step = 2.0 * half / PSWF_TABLE as f64;
        let start = -half - 2.0 * step;
        let count = PSWF_TABLE + 5;
        let mut values: Vec<f64> = (0..count)
            .map(|i| solution.eval(start + i as f64 * step))
            .collect();
        for i in 0..count / 2 {
            let avg = 0.5 * (values[i] + values[count - 1 - i]);
            values[i] = avg;
            values[count - 1 - i] = avg;
        }
        // unit continuous energy over the support (composite Simpson on the table nodes)
        let inner = &values[2..count - 2];
        let energy: f64 = inner
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let w = if i == 0 || i == inner.len() - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * v * v
            })
            .sum::<f64>()
            * step
            / 3.0;
        let g = 1.0 / energy.sqrt();
        values.iter_mut().for_each(|v| *v *= g);
        PswfTable {
            solution,
            start,
            step,
            values,
        }
    }

    /// Catmull-Rom interpolation of the tabulated eigenfunction.
    fn eval(&self, t: f64) -> f64 {
        let u = (t - self.start) / self.step;
        let i = (u.floor() as isize).clamp(1, self.values.len() as isize - 3) as usize;
        let s = u - i as f64;
        let (p0, p1, p2, p3) = (
            self.values[i - 1],
            self.values[i],
            self.values[i + 1],
            self.values[i + 2],
        );
        0.5 * (2.0 * p1
            + (p2 - p0) * s
            + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * s * s
            + (3.0 * (p1 - p2) + p3 - p0) * s * s * s)
    }
}

/// A window on one axis. `base` is the lattice extent (`N·T` or `M·Δf`);
/// `span` is the full support width.
#[derive(Debug, Clone)]
pub struct WindowSpec {
    kind: WindowKind,
    axis: Axis,
    base: f64,
    span: f64,
    pswf: Option<Arc<PswfTable>>,
}

impl WindowSpec {
    pub fn rectangular(axis: Axis, base: f64) -> Result<Self> {
        if !(base > 0.0 && base.is_finite()) {
            return Err(Error::param("window base must be positive"));
        }
        Ok(WindowSpec {
            kind: WindowKind::Rectangular,
            axis,
            base,
            span: base,
            pswf: None,
        })
    }

    pub fn root_raised_cosine(axis: Axis, base: f64, rolloff: f64) -> Result<Self> {
        if !(base > 0.0 && base.is_finite()) {
            return Err(Error::param("window base must be positive"));
        }
        if !(0.0..=1.0).contains(&rolloff) {
            return Err(Error::param(format!("roll-off {rolloff} outside [0, 1]")));
        }
        Ok(WindowSpec {
            kind: WindowKind::RootRaisedCosine { rolloff },
            axis,
            base,
            span: (1.0 + rolloff) * base,
            pswf: None,
        })
    }

    /// Unsolved PSWF on `[-span/2, span/2)` with dual concentration width `1/base`.
    pub fn pswf(axis: Axis, base: f64, span: f64) -> Result<Self> {
        if !(base > 0.0 && span > 0.0 && base.is_finite() && span.is_finite()) {
            return Err(Error::param("PSWF base and span must be positive"));
        }
        Ok(WindowSpec {
            kind: WindowKind::Pswf,
            axis,
            base,
            span,
            pswf: None,
        })
    }

    /// Solves the PSWF eigenproblem for this window; other kinds pass through.
    pub fn solved(mut self, grid_size: usize) -> Result<Self> {
        if self.kind == WindowKind::Pswf && self.pswf.is_none() {
            let sol = solve_pswf(0.5 * self.span, 1.0 / self.base, grid_size)?;
            self.pswf = Some(Arc::new(PswfTable::new(sol)));
        }
        Ok(self)
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn pswf_solution(&self) -> Option<&PswfSolution> {
        self.pswf.as_ref().map(|t| &t.solution)
    }

    pub fn is_ready(&self) -> bool {
        self.kind != WindowKind::Pswf || self.pswf.is_some()
    }

    fn ensure_ready(&self) -> Result<()> {
        if self.is_ready() {
            Ok(())
        } else {
            Err(Error::State("PSWF window evaluated before solving".into()))
        }
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        self.ensure_ready()?;
        Ok(self.value(x))
    }

    /// Evaluation without the readiness check; unsolved PSWF reads as zero.
    pub(crate) fn value(&self, x: f64) -> f64 {
        let half = 0.5 * self.span;
        if !(x >= -half && x < half) {
            return 0.0;
        }
        match self.kind {
            WindowKind::Rectangular => 1.0 / self.span.sqrt(),
            WindowKind::RootRaisedCosine { rolloff } => {
                let flat = 0.5 * (1.0 - rolloff) * self.base;
                let ax = x.abs();
                let amp = 1.0 / self.base.sqrt();
                if ax <= flat {
                    amp
                } else {
                    amp * (PI / (2.0 * rolloff * self.base) * (ax - flat)).cos()
                }
            }
            WindowKind::Pswf => self.pswf.as_ref().map_or(0.0, |t| t.eval(x)),
        }
    }

    /// Points where the profile or its derivative is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let half = 0.5 * self.span;
        match self.kind {
            WindowKind::RootRaisedCosine { rolloff } if rolloff > 0.0 => {
                let flat = 0.5 * (1.0 - rolloff) * self.base;
                vec![-half, -flat, flat, half]
            }
            _ => vec![-half, half],
        }
    }
}

/// Samples of a window on the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWindow {
    pub axis: Axis,
    pub samples: Vec<f64>,
    /// Factor applied to the raw continuous samples to reach unit energy.
    pub scale: f64,
    /// Fraction of the continuous window energy lying outside the frame.
    pub truncated_fraction: f64,
}

impl SampledWindow {
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    pub fn raw(&self) -> Vec<f64> {
        self.samples.iter().map(|v| v / self.scale).collect()
    }
}

/// Samples a time window at `t_n = n/F_s` (wrapped to `[-NT/2, NT/2)`),
/// truncates to one frame and renormalizes to unit energy.
pub fn sample_time_window(spec: &WindowSpec, params: &LatticeParams) -> Result<SampledWindow> {
    if spec.axis != Axis::Time {
        return Err(Error::param("sample_time_window needs a time-axis window"));
    }
    spec.ensure_ready()?;
    let s = params.samples();
    let fs = params.sample_rate();
    let raw: Vec<f64> = (0..s)
        .map(|n| {
            let idx = if 2 * n < s { n as f64 } else { n as f64 - s as f64 };
            spec.value(idx / fs)
        })
        .collect();
    let energy: f64 = raw.iter().map(|v| v * v).sum();
    if energy <= 0.0 {
        return Err(Error::Numeric("time window has no energy on the frame grid".into()));
    }
    let scale = 1.0 / energy.sqrt();
    let frame = params.n as f64 * params.t;
    Ok(SampledWindow {
        axis: Axis::Time,
        samples: raw.iter().map(|v| v * scale).collect(),
        scale,
        truncated_fraction: energy_outside(spec, frame),
    })
}

fn energy_outside(spec: &WindowSpec, width: f64) -> f64 {
    let half = 0.5 * spec.span;
    let cut = 0.5 * width;
    if half <= cut {
        return 0.0;
    }
    let f = |x: f64| c64::new(spec.value(x).powi(2), 0.0);
    let bps = spec.breakpoints();
    let right = quad::integrate(&f, cut, half, &bps, 4, 1e-13).re;
    let left = quad::integrate(&f, -half, -cut, &bps, 4, 1e-13).re;
    let total = quad::integrate(&f, -half, half, &bps, 8, 1e-13).re;
    (left + right) / total
}

/// Frequency window sampled on the Doppler-resolution grid, `a_j = A(j·Δf/N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTaps {
    pub j_min: i64,
    pub values: Vec<f64>,
    /// Grid spacing `Δf/N` in Hz.
    pub spacing: f64,
}

impl FrequencyTaps {
    pub fn j_max(&self) -> i64 {
        self.j_min + self.values.len() as i64 - 1
    }

    #[inline]
    pub fn get(&self, j: i64) -> f64 {
        let i = j - self.j_min;
        if i < 0 || i >= self.values.len() as i64 {
            0.0
        } else {
            self.values[i as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.j_min + i as i64, v))
    }

    /// Lattice Riemann sum of the frequency ambiguity,
    /// `spacing · Σ_j a_j a_{j+shift} e^{j2π f_j τ}`, i.e. `Y_A(τ, -shift·spacing)`.
    pub fn ambiguity(&self, tau: f64, shift: i64) -> c64 {
        let mut acc = c64::new(0.0, 0.0);
        for (j, a) in self.iter() {
            let b = self.get(j + shift);
            if b != 0.0 {
                acc += c64::from_polar(a * b, 2.0 * PI * j as f64 * self.spacing * tau);
            }
        }
        acc * self.spacing
    }
}

/// Samples a frequency window at multiples of `Δf/N` over its support.
pub fn sample_frequency_window(spec: &WindowSpec, params: &LatticeParams) -> Result<FrequencyTaps> {
    if spec.axis != Axis::Frequency {
        return Err(Error::param("sample_frequency_window needs a frequency-axis window"));
    }
    spec.ensure_ready()?;
    let spacing = params.nu_res();
    let half = 0.5 * spec.span / spacing;
    let lo = (-half).floor() as i64 - 1;
    let hi = half.ceil() as i64 + 1;
    let all: Vec<(i64, f64)> = (lo..=hi).map(|j| (j, spec.value(j as f64 * spacing))).collect();
    let first = all.iter().position(|&(_, v)| v != 0.0);
    let last = all.iter().rposition(|&(_, v)| v != 0.0);
    match (first, last) {
        (Some(a), Some(b)) => Ok(FrequencyTaps {
            j_min: all[a].0,
            values: all[a..=b].iter().map(|&(_, v)| v).collect(),
            spacing,
        }),
        _ => Err(Error::param("frequency window has no samples on the Doppler grid")),
    }
}

fn panels(osc: f64, len: f64) -> usize {
    ((osc.abs() * len * 4.0).ceil() as usize).clamp(1, 4096)
}

/// `Y_A(τ, ν) = ∫ A(f) A(f - ν) e^{j2πfτ} df` for a real frequency window.
pub fn ambiguity_freq(a: &WindowSpec, tau: f64, nu: f64) -> Result<c64> {
    a.ensure_ready()?;
    let half = 0.5 * a.span;
    let lo = (-half).max(-half + nu);
    let hi = half.min(half + nu);
    if hi <= lo {
        return Ok(c64::new(0.0, 0.0));
    }
    let mut bps = a.breakpoints();
    bps.extend(a.breakpoints().iter().map(|b| b + nu));
    let f = |x: f64| c64::from_polar(a.value(x) * a.value(x - nu), 2.0 * PI * x * tau);
    Ok(quad::integrate(&f, lo, hi, &bps, panels(tau, hi - lo), QUAD_TOL))
}

/// `X_B(τ, ν) = ∫ B(t) B(t - τ) e^{-j2πν(t - τ)} dt` for a real time window.
pub fn ambiguity_time(b: &WindowSpec, tau: f64, nu: f64) -> Result<c64> {
    b.ensure_ready()?;
    let half = 0.5 * b.span;
    let lo = (-half).max(-half + tau);
    let hi = half.min(half + tau);
    if hi <= lo {
        return Ok(c64::new(0.0, 0.0));
    }
    let mut bps = b.breakpoints();
    bps.extend(b.breakpoints().iter().map(|p| p + tau));
    let f = |t: f64| c64::from_polar(b.value(t) * b.value(t - tau), -2.0 * PI * nu * (t - tau));
    Ok(quad::integrate(&f, lo, hi, &bps, panels(nu, hi - lo), QUAD_TOL))
}

/// `X̃_B(l, k) = Σ_n B[n] B[(n - l) mod S] e^{-j2πk(n - l)/S}`; `k` may be fractional.
pub fn discrete_periodic_ambiguity(b: &[f64], l: i64, k: f64) -> c64 {
    let s = b.len() as i64;
    let mut acc = c64::new(0.0, 0.0);
    let w = -2.0 * PI * k / s as f64;
    for n in 0..s {
        let m = (n - l).rem_euclid(s);
        let v = b[n as usize] * b[m as usize];
        if v != 0.0 {
            acc += c64::from_polar(v, w * (n - l) as f64);
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidelobeReport {
    /// Largest normalized magnitude beyond the mainlobe.
    pub peak: f64,
    /// False when the cut decays monotonically and no sidelobe exists.
    pub found: bool,
    /// Offset of the mainlobe boundary along the cut.
    pub boundary: f64,
}

/// Sidelobe peak of a sampled magnitude cut starting at offset zero. The
/// mainlobe ends at the first local minimum.
pub fn sidelobe_peak_of_cut(cut: &[f64], step: f64) -> SidelobeReport {
    let none = SidelobeReport {
        peak: 0.0,
        found: false,
        boundary: 0.0,
    };
    if cut.len() < 3 || cut[0] <= 0.0 {
        return none;
    }
    let Some(i) = (1..cut.len() - 1).find(|&i| cut[i] < cut[i - 1] && cut[i] <= cut[i + 1]) else {
        return none;
    };
    let peak = cut[i..].iter().cloned().fold(0.0, f64::max) / cut[0];
    SidelobeReport {
        peak,
        found: true,
        boundary: i as f64 * step,
    }
}

/// Sidelobe level of `|Y_A(τ, 0)|` for frequency windows or `|X_B(0, ν)|` for
/// time windows, scanned over 16 mainlobe widths.
pub fn autocorr_sidelobe_peak(w: &WindowSpec) -> Result<SidelobeReport> {
    w.ensure_ready()?;
    let step = 1.0 / (64.0 * w.base);
    let count = 64 * 16;
    let mut cut = Vec::with_capacity(count);
    for i in 0..count {
        let x = i as f64 * step;
        let v = match w.axis {
            Axis::Frequency => ambiguity_freq(w, x, 0.0)?,
            Axis::Time => ambiguity_time(w, 0.0, x)?,
        };
        cut.push(v.norm());
    }
    Ok(sidelobe_peak_of_cut(&cut, step))
}

/// Continuous ambiguity function sampled on `taus × nus`.
pub fn ambiguity_grid(
    w: &WindowSpec,
    taus: &[f64],
    nus: &[f64],
) -> Result<Vec<(f64, f64, c64)>> {
    let mut out = Vec::with_capacity(taus.len() * nus.len());
    for &tau in taus {
        for &nu in nus {
            let v = match w.axis {
                Axis::Frequency => ambiguity_freq(w, tau, nu)?,
                Axis::Time => ambiguity_time(w, tau, nu)?,
            };
            out.push((tau, nu, v));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_values() {
        let w = WindowSpec::rectangular(Axis::Time, 4.0).unwrap();
        assert_eq!(w.evaluate(0.0).unwrap(), 0.5);
        assert_eq!(w.evaluate(0.6 * 4.0).unwrap(), 0.0);
        assert_eq!(w.evaluate(-2.0).unwrap(), 0.5);
        assert_eq!(w.evaluate(2.0).unwrap(), 0.0);
    }

    #[test]
    fn rrc_unit_energy_and_support() {
        let w = WindowSpec::root_raised_cosine(Axis::Frequency, 32.0, 0.3).unwrap();
        assert!((w.span() - 41.6).abs() < 1e-12);
        let y = ambiguity_freq(&w, 0.0, 0.0).unwrap();
        assert!((y.re - 1.0).abs() < 1e-9 && y.im.abs() < 1e-12);
        assert_eq!(w.evaluate(20.81).unwrap(), 0.0);
        assert!(w.evaluate(20.7).unwrap() > 0.0);
    }

    #[test]
    fn unsolved_pswf_is_a_state_error() {
        let w = WindowSpec::pswf(Axis::Time, 1.0, 1.3).unwrap();
        assert!(matches!(w.evaluate(0.0), Err(Error::State(_))));
        assert!(w.solved(128).unwrap().evaluate(0.0).unwrap() > 0.0);
    }

    #[test]
    fn pswf_solution_invariants() {
        let s = solve_pswf(0.5, 1.0, 256).unwrap();
        assert!(s.lambda0 > s.lambda1 && s.lambda0 < 1.0);
        assert!((s.energy() - 1.0).abs() < 1e-12);
        assert!(s.eval(0.0) > 0.0);
        // Nyström extension reproduces the grid values
        for i in [0, 17, 128, 255] {
            assert!((s.eval(s.grid[i]) - s.psi0[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn sidelobe_flag_path() {
        let cut: Vec<f64> = (0..50).map(|i| (-(i as f64) * 0.1).exp()).collect();
        let r = sidelobe_peak_of_cut(&cut, 1.0);
        assert!(!r.found && r.peak == 0.0);
    }

    #[test]
    fn dpaf_constant_window() {
        let b = vec![1.0; 12];
        for l in 0..12 {
            assert!((discrete_periodic_ambiguity(&b, l, 0.0).re - 12.0).abs() < 1e-12);
        }
        assert!(discrete_periodic_ambiguity(&b, 0, 5.0).norm() < 1e-12);
    }
}
