//! Delay-Doppler lattice geometry, frame layout and quasi-periodic indexing.
//!
//! Grids are stored in vectorized order: cell `(l, k)` lives at `k·M + l`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::c64;
use crate::detector::Constellation;
use crate::error::{Error, Result};

/// Lattice dimensions and physical periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub m: usize,
    pub n: usize,
    pub delta_f: f64,
    pub t: f64,
    pub l: usize,
}

impl LatticeParams {
    pub fn new(m: usize, n: usize, delta_f: f64, t: f64, l: usize) -> Result<Self> {
        if m == 0 || n == 0 || l == 0 {
            return Err(Error::param(format!(
                "lattice sizes must be positive (M={m}, N={n}, L={l})"
            )));
        }
        if !(delta_f > 0.0 && t > 0.0 && delta_f.is_finite() && t.is_finite()) {
            return Err(Error::param("delta_f and T must be positive and finite"));
        }
        if ((t * delta_f) - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!(
                "T·delta_f must equal 1 (got {:.15})",
                t * delta_f
            )));
        }
        Ok(LatticeParams {
            m,
            n,
            delta_f,
            t,
            l,
        })
    }

    /// Lattice with `T = 1/delta_f`.
    pub fn from_delta_f(m: usize, n: usize, delta_f: f64, l: usize) -> Result<Self> {
        Self::new(m, n, delta_f, 1.0 / delta_f, l)
    }

    /// 32×16 lattice at 15 kHz with tenfold oversampling.
    pub fn reference() -> Self {
        Self::from_delta_f(32, 16, 15e3, 10).expect("reference lattice is valid")
    }

    pub fn sample_rate(&self) -> f64 {
        (self.l * self.m) as f64 * self.delta_f
    }

    /// Samples per frame, `S = L·M·N`.
    pub fn samples(&self) -> usize {
        self.l * self.m * self.n
    }

    /// Number of DD cells, `M·N`.
    pub fn cells(&self) -> usize {
        self.m * self.n
    }

    pub fn tau_res(&self) -> f64 {
        self.t / self.m as f64
    }

    pub fn nu_res(&self) -> f64 {
        self.delta_f / self.n as f64
    }

    #[inline]
    pub fn index(&self, l: usize, k: usize) -> usize {
        k * self.m + l
    }
}

/// A point of the unbounded DD lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DdIndex {
    pub l: i64,
    pub k: i64,
}

impl DdIndex {
    pub fn new(l: i64, k: i64) -> Self {
        DdIndex { l, k }
    }
}

/// A complex M×N grid over the fundamental domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DdGrid {
    m: usize,
    n: usize,
    data: Vec<c64>,
}

impl DdGrid {
    pub fn zeros(m: usize, n: usize) -> Self {
        DdGrid {
            m,
            n,
            data: vec![c64::new(0.0, 0.0); m * n],
        }
    }

    pub fn from_fn(m: usize, n: usize, mut f: impl FnMut(usize, usize) -> c64) -> Self {
        let mut g = Self::zeros(m, n);
        for k in 0..n {
            for l in 0..m {
                g.data[k * m + l] = f(l, k);
            }
        }
        g
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, l: usize, k: usize) -> c64 {
        self.data[k * self.m + l]
    }

    #[inline]
    pub fn set(&mut self, l: usize, k: usize, v: c64) {
        self.data[k * self.m + l] = v;
    }

    pub fn as_slice(&self) -> &[c64] {
        &self.data
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Vectorized copy, `out[k·M + l] = X[l, k]`.
    pub fn vectorize(&self) -> Vec<c64> {
        self.data.clone()
    }

    pub fn devectorize(m: usize, n: usize, v: &[c64]) -> Result<Self> {
        if v.len() != m * n {
            return Err(Error::dim("devectorize", m * n, v.len()));
        }
        Ok(DdGrid {
            m,
            n,
            data: v.to_vec(),
        })
    }

    /// Value of the quasi-periodic extension at an arbitrary lattice point.
    pub fn quasiperiodic_value(&self, idx: DdIndex) -> c64 {
        quasiperiodic_value(self, idx)
    }
}

/// Reads the quasi-periodic extension of `fundamental`:
/// `X[l0 + nM, k0 + mN] = e^{j2π n k0 / N} X[l0, k0]`.
pub fn quasiperiodic_value(fundamental: &DdGrid, idx: DdIndex) -> c64 {
    let (m, n) = (fundamental.m as i64, fundamental.n as i64);
    let l0 = idx.l.rem_euclid(m);
    let k0 = idx.k.rem_euclid(n);
    let wraps = (idx.l - l0) / m;
    let v = fundamental.get(l0 as usize, k0 as usize);
    if wraps == 0 {
        return v;
    }
    // reduce the phase argument exactly before converting to float
    let turns = (wraps * k0).rem_euclid(n);
    v * c64::from_polar(1.0, 2.0 * PI * turns as f64 / n as f64)
}

/// Pilot, guard and data geometry of an embedded-pilot frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLayout {
    m: usize,
    n: usize,
    pilot: DdIndex,
    guard: (usize, usize),
    shrink: usize,
    data_cells: Vec<(usize, usize)>,
}

impl FrameLayout {
    /// Layout with the pilot at the frame centre and the default pilot-region shrink of 2.
    pub fn new(params: &LatticeParams, g1: usize, g2: usize) -> Result<Self> {
        let pilot = DdIndex::new((params.m / 2) as i64, (params.n / 2) as i64);
        Self::with_pilot(params, pilot, g1, g2, 2)
    }

    pub fn with_pilot(
        params: &LatticeParams,
        pilot: DdIndex,
        g1: usize,
        g2: usize,
        shrink: usize,
    ) -> Result<Self> {
        let (m, n) = (params.m, params.n);
        if g1 < shrink || g2 < shrink {
            return Err(Error::param(format!(
                "guard half-widths ({g1}, {g2}) must be at least the pilot shrink {shrink}"
            )));
        }
        let (lp, kp) = (pilot.l, pilot.k);
        if lp - (g1 as i64) < 0
            || kp - (g2 as i64) < 0
            || lp + g1 as i64 >= m as i64
            || kp + g2 as i64 >= n as i64
        {
            return Err(Error::param(format!(
                "guard region around pilot ({lp}, {kp}) with half-widths ({g1}, {g2}) leaves the {m}×{n} grid"
            )));
        }
        let mut layout = FrameLayout {
            m,
            n,
            pilot,
            guard: (g1, g2),
            shrink,
            data_cells: Vec::new(),
        };
        // lexicographic in (l, k)
        for l in 0..m {
            for k in 0..n {
                if !layout.in_guard(l as i64, k as i64) {
                    layout.data_cells.push((l, k));
                }
            }
        }
        Ok(layout)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pilot(&self) -> DdIndex {
        self.pilot
    }

    pub fn guard_half(&self) -> (usize, usize) {
        self.guard
    }

    pub fn shrink(&self) -> usize {
        self.shrink
    }

    /// Half-widths of the pilot region.
    pub fn pilot_half(&self) -> (usize, usize) {
        (self.guard.0 - self.shrink, self.guard.1 - self.shrink)
    }

    pub fn in_guard(&self, l: i64, k: i64) -> bool {
        (l - self.pilot.l).unsigned_abs() as usize <= self.guard.0
            && (k - self.pilot.k).unsigned_abs() as usize <= self.guard.1
    }

    pub fn in_pilot_region(&self, l: i64, k: i64) -> bool {
        let (a, b) = self.pilot_half();
        (l - self.pilot.l).unsigned_abs() as usize <= a
            && (k - self.pilot.k).unsigned_abs() as usize <= b
    }

    pub fn is_data(&self, l: usize, k: usize) -> bool {
        !self.in_guard(l as i64, k as i64)
    }

    /// Data cells in lexicographic (l, k) order.
    pub fn data_cells(&self) -> &[(usize, usize)] {
        &self.data_cells
    }

    pub fn n_data(&self) -> usize {
        self.data_cells.len()
    }

    /// Vectorized indices `k·M + l` of the data cells, in traversal order.
    pub fn data_indices(&self) -> Vec<usize> {
        self.data_cells
            .iter()
            .map(|&(l, k)| k * self.m + l)
            .collect()
    }

    pub fn pilot_index(&self) -> usize {
        self.pilot.k as usize * self.m + self.pilot.l as usize
    }
}

/// A populated DD frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DdFrame {
    pub symbols: DdGrid,
    pub layout: FrameLayout,
    pub e_d: f64,
    pub e_p: f64,
    pub n_d: usize,
    pub bits: Vec<u8>,
    pub data_symbols: Vec<c64>,
}

impl DdFrame {
    pub fn vectorize(&self) -> Vec<c64> {
        self.symbols.vectorize()
    }

    pub fn pilot_amplitude(&self) -> f64 {
        self.e_p.sqrt()
    }

    pub fn pdr_db(&self) -> f64 {
        10.0 * (self.e_p / self.e_d).log10()
    }
}

/// Places data symbols and the pilot onto the grid.
pub fn build_frame(
    layout: &FrameLayout,
    bits: &[u8],
    constellation: &Constellation,
    e_p: f64,
    e_d: f64,
) -> Result<DdFrame> {
    if !(e_p >= 0.0) {
        return Err(Error::param(format!("pilot energy must be >= 0 (got {e_p})")));
    }
    if !(e_d > 0.0) {
        return Err(Error::param(format!("data energy must be > 0 (got {e_d})")));
    }
    let n_d = layout.n_data();
    let bps = constellation.bits_per_symbol();
    if bits.len() != n_d * bps {
        return Err(Error::dim("build_frame bits", n_d * bps, bits.len()));
    }
    let mut symbols = DdGrid::zeros(layout.m, layout.n);
    let mut data_symbols = Vec::with_capacity(n_d);
    let scale = if n_d > 0 { (e_d / n_d as f64).sqrt() } else { 0.0 };
    for (i, &(l, k)) in layout.data_cells.iter().enumerate() {
        let s = constellation.map(&bits[i * bps..(i + 1) * bps])?;
        data_symbols.push(s);
        symbols.set(l, k, s * scale);
    }
    symbols.set(
        layout.pilot.l as usize,
        layout.pilot.k as usize,
        c64::new(e_p.sqrt(), 0.0),
    );
    Ok(DdFrame {
        symbols,
        layout: layout.clone(),
        e_d,
        e_p,
        n_d,
        bits: bits.to_vec(),
        data_symbols,
    })
}
