//! Single-path spreading comparison across pulse families.

use serde::{Deserialize, Serialize};

use crate::c64;
use crate::channel::{Path, PathSet};
use crate::error::Result;
use crate::lattice::{DdIndex, LatticeParams};
use crate::pulse::{build_family, PulseDesign, PulseFamily};
use crate::transceiver::{pilot_response, read_pilot_response, DdResponse};

/// Delay and Doppler of the demo path, in bins.
pub const DEMO_DELAY_BINS: f64 = 4.0;
pub const DEMO_DOPPLER_BINS: f64 = 4.7;

/// Level below the peak that still counts as spread.
pub const SPREAD_THRESHOLD_DB: f64 = -30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadingSummary {
    pub family: PulseFamily,
    /// Bins within 30 dB of the peak.
    pub spread: usize,
    /// Energy fraction within ±2 bins of the peak in both directions.
    pub local_fraction: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct SpreadingGrid {
    pub family: PulseFamily,
    /// Received grid for a unit pilot at `pilot`.
    pub cells: Vec<(usize, usize, c64)>,
    /// The same response read back to the centered domain.
    pub centered: DdResponse,
    pub summary: SpreadingSummary,
}

/// The small lattice used for the first comparison: `M = N = 32`, `T = Δf = 1`.
pub fn toy_params() -> LatticeParams {
    LatticeParams::new(32, 32, 1.0, 1.0, 4).expect("toy lattice")
}

pub fn demo_path(params: &LatticeParams) -> PathSet {
    let path = Path::new(
        c64::new(1.0, 0.0),
        DEMO_DELAY_BINS * params.tau_res(),
        DEMO_DOPPLER_BINS * params.nu_res(),
    );
    PathSet::new(vec![path], params).expect("demo path")
}

pub fn summarize(family: PulseFamily, h: &DdResponse) -> SpreadingSummary {
    let entries = h.entries();
    let energy: f64 = entries.iter().map(|e| e.2.norm_sqr()).sum();
    let peak = entries
        .iter()
        .max_by(|a, b| a.2.norm_sqr().total_cmp(&b.2.norm_sqr()))
        .copied()
        .unwrap_or((0, 0, c64::new(0.0, 0.0)));
    let floor = peak.2.norm_sqr() * 10f64.powf(SPREAD_THRESHOLD_DB / 10.0);
    let spread = entries
        .iter()
        .filter(|e| e.2.norm_sqr() >= floor && e.2.norm_sqr() > 0.0)
        .count();
    let local: f64 = entries
        .iter()
        .filter(|e| (e.0 - peak.0).abs() <= 2 && (e.1 - peak.1).abs() <= 2)
        .map(|e| e.2.norm_sqr())
        .sum();
    SpreadingSummary {
        family,
        spread,
        local_fraction: if energy > 0.0 { local / energy } else { 0.0 },
        energy,
    }
}

/// Noiseless response of one family to the demo path with a unit pilot at `pilot`.
pub fn spreading_demo(
    family: PulseFamily,
    params: &LatticeParams,
    design: &PulseDesign,
    pilot: DdIndex,
) -> Result<SpreadingGrid> {
    let p = build_family(family, params, design)?;
    let one = c64::new(1.0, 0.0);
    let y = pilot_response(&p, &demo_path(params), params, pilot, one)?;
    let centered = read_pilot_response(&y, pilot, one, None);
    let mut cells = Vec::with_capacity(params.cells());
    for l in 0..params.m {
        for k in 0..params.n {
            cells.push((l, k, y.get(l, k)));
        }
    }
    let summary = summarize(family, &centered);
    Ok(SpreadingGrid {
        family,
        cells,
        centered,
        summary,
    })
}
