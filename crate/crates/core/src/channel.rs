//! Sparse doubly-dispersive channel: power-delay profiles, random draws and
//! the CP-circular discrete channel operator.

use std::f64::consts::PI;
use std::path::Path as FsPath;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{Error, Result};
use crate::lattice::LatticeParams;

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: c64,
    /// Delay in seconds.
    pub delay: f64,
    /// Doppler shift in Hz.
    pub doppler: f64,
}

impl Path {
    pub fn new(gain: c64, delay: f64, doppler: f64) -> Self {
        Path {
            gain,
            delay,
            doppler,
        }
    }

    /// Delay in bins, `τ·M·Δf`.
    pub fn l_tau(&self, p: &LatticeParams) -> f64 {
        self.delay * p.m as f64 * p.delta_f
    }

    /// Doppler in bins, `ν·N·T`.
    pub fn k_nu(&self, p: &LatticeParams) -> f64 {
        self.doppler * p.n as f64 * p.t
    }

    /// Delay rounded half-up to whole samples.
    pub fn sample_shift(&self, p: &LatticeParams) -> i64 {
        (self.delay * p.sample_rate() + 0.5).floor() as i64
    }
}

/// A channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<Path>,
    pub crystalline: bool,
}

impl PathSet {
    pub fn new(paths: Vec<Path>, params: &LatticeParams) -> Result<Self> {
        for p in &paths {
            if !(p.delay >= 0.0) || !p.doppler.is_finite() {
                return Err(Error::param(format!(
                    "path delay must be >= 0 and Doppler finite (got {}, {})",
                    p.delay, p.doppler
                )));
            }
        }
        let crystalline = paths
            .iter()
            .all(|p| p.delay < params.t && p.doppler.abs() < params.delta_f);
        Ok(PathSet { paths, crystalline })
    }

    pub fn empty() -> Self {
        PathSet {
            paths: Vec::new(),
            crystalline: true,
        }
    }

    /// Unit-gain path with no delay or Doppler.
    pub fn identity() -> Self {
        PathSet {
            paths: vec![Path::new(c64::new(1.0, 0.0), 0.0, 0.0)],
            crystalline: true,
        }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tap {
    pub delay_us: f64,
    pub power_db: f64,
}

/// Tap delays and relative powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerDelayProfile {
    pub name: String,
    pub taps: Vec<Tap>,
}

impl PowerDelayProfile {
    pub fn new(name: impl Into<String>, taps: Vec<Tap>) -> Result<Self> {
        let pdp = PowerDelayProfile {
            name: name.into(),
            taps,
        };
        pdp.validate()?;
        Ok(pdp)
    }

    fn validate(&self) -> Result<()> {
        let first = self
            .taps
            .first()
            .ok_or_else(|| Error::Config("power-delay profile has no taps".into()))?;
        if first.delay_us != 0.0 || first.power_db != 0.0 {
            return Err(Error::Config(
                "first tap must sit at 0 µs with 0 dB relative power".into(),
            ));
        }
        if self
            .taps
            .iter()
            .any(|t| !(t.delay_us >= 0.0) || !t.power_db.is_finite())
        {
            return Err(Error::Config("tap delays must be >= 0 and powers finite".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let pdp: PowerDelayProfile =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("profile JSON: {e}")))?;
        pdp.validate()?;
        Ok(pdp)
    }

    pub fn from_file(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Mean tap powers normalized to unit total.
    pub fn linear_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self.taps.iter().map(|t| 10f64.powf(t.power_db / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        lin.iter().map(|p| p / total).collect()
    }

    pub fn max_delay(&self) -> f64 {
        self.taps.iter().map(|t| t.delay_us).fold(0.0, f64::max) * 1e-6
    }
}

/// Six-tap vehicular profile.
pub fn eva_profile() -> PowerDelayProfile {
    let taps = [
        (0.0, 0.0),
        (0.31, -1.0),
        (0.71, -9.0),
        (1.09, -10.0),
        (1.73, -15.0),
        (2.51, -20.0),
    ]
    .iter()
    .map(|&(delay_us, power_db)| Tap { delay_us, power_db })
    .collect();
    PowerDelayProfile {
        name: "EVA".into(),
        taps,
    }
}

/// Circularly-symmetric complex Gaussian with the given variance.
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> c64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c64::new(re * s, im * s)
}

/// Rayleigh gains with the profile's powers and Jakes-style Dopplers
/// `ν = ν_max cos θ`, `θ ~ U[0, 2π)`.
pub fn draw_channel<R: Rng + ?Sized>(
    rng: &mut R,
    profile: &PowerDelayProfile,
    nu_max: f64,
    params: &LatticeParams,
) -> Result<PathSet> {
    draw_channel_with(rng, profile, nu_max, params, true)
}

/// As [`draw_channel`]; without fading every gain is the real `√power`.
/// The random stream is consumed identically either way.
pub fn draw_channel_with<R: Rng + ?Sized>(
    rng: &mut R,
    profile: &PowerDelayProfile,
    nu_max: f64,
    params: &LatticeParams,
    fading: bool,
) -> Result<PathSet> {
    if !(nu_max >= 0.0) {
        return Err(Error::param(format!("nu_max must be >= 0 (got {nu_max})")));
    }
    let powers = profile.linear_powers();
    let paths = profile
        .taps
        .iter()
        .zip(powers)
        .map(|(tap, pw)| {
            let drawn = complex_gaussian(rng, pw);
            let gain = if fading { drawn } else { c64::new(pw.sqrt(), 0.0) };
            let theta: f64 = rng.random::<f64>() * 2.0 * PI;
            Path::new(gain, tap.delay_us * 1e-6, nu_max * theta.cos())
        })
        .collect();
    PathSet::new(paths, params)
}

/// `out[n] = s[(n − shift) mod S]`.
pub fn cyclic_shift(s: &[c64], shift: i64) -> Vec<c64> {
    let len = s.len();
    if len == 0 {
        return Vec::new();
    }
    let d = shift.rem_euclid(len as i64) as usize;
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(&s[len - d..]);
    out.extend_from_slice(&s[..len - d]);
    out
}

/// `out[n] = s[n] e^{j2π n k_ν / S}`.
pub fn doppler_ramp(s: &[c64], k_nu: f64) -> Vec<c64> {
    let len = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(n, v)| v * ramp(n, k_nu, len))
        .collect()
}

#[inline]
fn ramp(n: usize, k_nu: f64, len: f64) -> c64 {
    // reduce the integer part of k_nu·n exactly to keep large products accurate
    let whole = k_nu.trunc();
    let frac = k_nu - whole;
    let wrapped = ((whole as i64 % len as i64) * n as i64).rem_euclid(len as i64) as f64;
    c64::from_polar(1.0, 2.0 * PI * (wrapped + frac * n as f64) / len)
}

/// A path set resolved onto one frame: per-path gain, sample shift and Doppler ramp.
#[derive(Debug, Clone)]
pub struct ChannelOperator {
    len: usize,
    taps: Vec<(c64, usize, Vec<c64>)>,
}

impl ChannelOperator {
    pub fn new(paths: &PathSet, params: &LatticeParams) -> Result<Self> {
        let len = params.samples();
        let mut taps = Vec::with_capacity(paths.len());
        for p in &paths.paths {
            let d = p.sample_shift(params);
            if d < 0 || d >= len as i64 {
                return Err(Error::param(format!(
                    "path delay of {d} samples does not fit the {len}-sample frame"
                )));
            }
            let k = p.k_nu(params);
            let ramp = (0..len).map(|n| ramp(n, k, len as f64)).collect();
            taps.push((p.gain, d as usize, ramp));
        }
        Ok(ChannelOperator { len, taps })
    }

    pub fn apply(&self, s: &[c64]) -> Result<Vec<c64>> {
        let len = self.len;
        if s.len() != len {
            return Err(Error::dim("apply_channel", len, s.len()));
        }
        let mut out = vec![c64::new(0.0, 0.0); len];
        for (gain, d, ramp) in &self.taps {
            for (n, o) in out.iter_mut().enumerate() {
                let src = if n >= *d { n - d } else { n + len - d };
                *o += gain * s[src] * ramp[src];
            }
        }
        Ok(out)
    }
}

/// `r = Σ_q h_q J_{d_q} D_{k_q} s` on one CP-free frame.
pub fn apply_channel(s: &[c64], paths: &PathSet, params: &LatticeParams) -> Result<Vec<c64>> {
    ChannelOperator::new(paths, params)?.apply(s)
}

/// Adds `CN(0, σ²)` noise to every sample.
pub fn add_awgn<R: Rng + ?Sized>(r: &[c64], sigma2: f64, rng: &mut R) -> Result<Vec<c64>> {
    if !(sigma2 >= 0.0) {
        return Err(Error::param(format!("noise variance must be >= 0 (got {sigma2})")));
    }
    if sigma2 == 0.0 {
        return Ok(r.to_vec());
    }
    Ok(r.iter().map(|v| v + complex_gaussian(rng, sigma2)).collect())
}

/// Which crystalline-regime conditions a channel and window pair satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CrystallineReport {
    pub delay_ok: bool,
    pub doppler_ok: bool,
    pub freq_window_ok: bool,
    pub time_window_ok: bool,
}

impl CrystallineReport {
    pub fn all(&self) -> bool {
        self.delay_ok && self.doppler_ok && self.freq_window_ok && self.time_window_ok
    }
}

/// Checks `τ_max < T`, `ν_max < Δf`, `W_A ≥ 10Δf` and `W_B ≥ 10T`.
pub fn crystalline_check(
    paths: &PathSet,
    params: &LatticeParams,
    w_a: f64,
    w_b: f64,
) -> CrystallineReport {
    let tau_max = paths.paths.iter().map(|p| p.delay).fold(0.0, f64::max);
    let nu_max = paths.paths.iter().map(|p| p.doppler.abs()).fold(0.0, f64::max);
    CrystallineReport {
        delay_ok: tau_max < params.t,
        doppler_ok: nu_max < params.delta_f,
        freq_window_ok: w_a / params.delta_f >= 10.0,
        time_window_ok: w_b / params.t >= 10.0,
    }
}
