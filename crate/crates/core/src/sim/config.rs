//! JSON scenario configuration.

use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{eva_profile, PowerDelayProfile, Tap};
use crate::error::{Error, Result};
use crate::lattice::{FrameLayout, LatticeParams};
use crate::pulse::{PulseDesign, PulseFamily};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub m: usize,
    pub n: usize,
    pub delta_f: f64,
    /// Defaults to `1/Δf`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Oversampling factor, `F_s = L·M·Δf`.
    pub l: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig {
            m: 32,
            n: 16,
            delta_f: 15e3,
            t: None,
            l: 10,
        }
    }
}

impl LatticeConfig {
    pub fn params(&self) -> Result<LatticeParams> {
        match self.t {
            Some(t) => LatticeParams::new(self.m, self.n, self.delta_f, t, self.l),
            None => LatticeParams::from_delta_f(self.m, self.n, self.delta_f, self.l),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutConfig {
    pub g1: usize,
    pub g2: usize,
    pub shrink: usize,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            g1: 5,
            g2: 7,
            shrink: 2,
        }
    }
}

impl LayoutConfig {
    pub fn layout(&self, params: &LatticeParams) -> Result<FrameLayout> {
        let pilot = crate::lattice::DdIndex::new((params.m / 2) as i64, (params.n / 2) as i64);
        FrameLayout::with_pilot(params, pilot, self.g1, self.g2, self.shrink)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    /// `"eva"`, `"single"` (one 0 dB tap at zero delay) or a path to a
    /// JSON power-delay profile.
    pub profile: String,
    pub nu_max: f64,
    /// Rayleigh gains; otherwise each tap has the fixed gain `√power`.
    #[serde(default = "default_fading")]
    pub fading: bool,
}

fn default_fading() -> bool {
    true
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            profile: "eva".into(),
            nu_max: 815.0,
            fading: true,
        }
    }
}

impl ChannelConfig {
    pub fn load(&self) -> Result<PowerDelayProfile> {
        match self.profile.as_str() {
            "eva" | "EVA" => Ok(eva_profile()),
            "single" => PowerDelayProfile::new(
                "single",
                vec![Tap {
                    delay_us: 0.0,
                    power_db: 0.0,
                }],
            ),
            path => PowerDelayProfile::from_file(FsPath::new(path)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SnrDb,
    PdrDb,
    /// Points are `g1`; `g2 = g1 + 2`.
    Guard,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::PdrDb => "pdr_db",
            SweepAxis::Guard => "guard",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub points: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            axis: SweepAxis::SnrDb,
            points: vec![20.0],
        }
    }
}

/// Parses `"start:step:stop"` (inclusive of `stop` up to rounding).
pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Config(format!("sweep '{spec}' is not start:step:stop"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, step, stop) = (nums[0], nums[1], nums[2]);
    if !(step.is_finite() && step != 0.0) || (stop - start) * step < 0.0 {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiMode {
    Perfect,
    Estimated,
}

/// Noise covariance the detector assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceModel {
    /// `σ² R` with `R` the receive Gram matrix.
    Matched,
    /// `σ² I`.
    White,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub lattice: LatticeConfig,
    pub window: PulseFamily,
    /// Receive window; the transmit window when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_window: Option<PulseFamily>,
    #[serde(default)]
    pub design: PulseDesign,
    #[serde(default)]
    pub layout: LayoutConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    /// Pilot-to-data power ratio; each data symbol carries unit energy.
    #[serde(default)]
    pub pdr_db: f64,
    #[serde(default = "default_snr")]
    pub snr_db: f64,
    /// Skip the AWGN draw; the detector still assumes `snr_db`.
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_csi")]
    pub csi: CsiMode,
    #[serde(default = "default_cov")]
    pub covariance: CovarianceModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_snr() -> f64 {
    20.0
}

fn default_trials() -> usize {
    500
}

fn default_csi() -> CsiMode {
    CsiMode::Estimated
}

fn default_cov() -> CovarianceModel {
    CovarianceModel::Matched
}

impl SimConfig {
    pub fn new(window: PulseFamily) -> Self {
        SimConfig {
            lattice: LatticeConfig::default(),
            window,
            rx_window: None,
            design: PulseDesign::default(),
            layout: LayoutConfig::default(),
            channel: ChannelConfig::default(),
            pdr_db: 0.0,
            snr_db: default_snr(),
            noiseless: false,
            sweep: SweepConfig::default(),
            trials: default_trials(),
            seed: 0,
            csi: default_csi(),
            covariance: default_cov(),
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn rx_window(&self) -> PulseFamily {
        self.rx_window.unwrap_or(self.window)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.sweep.points.is_empty() {
            return Err(Error::Config("sweep needs at least one point".into()));
        }
        if let Some(p) = self.sweep.points.iter().find(|p| !p.is_finite()) {
            return Err(Error::Config(format!("sweep point {p} is not finite")));
        }
        if !self.snr_db.is_finite() || !self.pdr_db.is_finite() {
            return Err(Error::Config("snr_db and pdr_db must be finite".into()));
        }
        if !(self.channel.nu_max >= 0.0) {
            return Err(Error::Config("nu_max must be >= 0".into()));
        }
        self.design
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        let params = self
            .lattice
            .params()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.sweep.axis == SweepAxis::Guard {
            for &g in &self.sweep.points {
                if g < 0.0 || g.fract() != 0.0 {
                    return Err(Error::Config(format!("guard point {g} is not a whole number")));
                }
                guard_layout(&self.layout, g as usize)
                    .layout(&params)
                    .map_err(|e| Error::Config(e.to_string()))?;
            }
        } else {
            self.layout
                .layout(&params)
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        self.channel.load().map_err(|e| match e {
            Error::Io { .. } => e,
            other => Error::Config(other.to_string()),
        })?;
        Ok(())
    }

    /// FNV-1a over the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

pub(crate) fn guard_layout(base: &LayoutConfig, g1: usize) -> LayoutConfig {
    LayoutConfig {
        g1,
        g2: g1 + 2,
        shrink: base.shrink,
    }
}
