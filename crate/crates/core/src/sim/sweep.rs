//! Monte-Carlo sweeps over SNR, PDR or guard size.
//!
//! Trial `t` of every sweep point draws from the ChaCha stream `t` of the
//! master seed, so the channel, bits and noise of a trial are shared across
//! points and pulse families, and results do not depend on the thread pool.
//! Sweeps switch faer to sequential kernels so that no matrix product depends
//! on the thread count either; the parallelism is across trials.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::channel::{add_awgn, draw_channel_with, ChannelOperator, PathSet, PowerDelayProfile};
use crate::detector::{detect, Constellation};
use crate::error::{Error, Result};
use crate::estimator::{estimate_heff, EstimationResult};
use crate::lattice::{build_frame, FrameLayout, LatticeParams};
use crate::pulse::{build_family, gram, PulseDesign, PulseFamily, PulseMatrix};
use crate::transceiver::{
    build_h_from_heff, channel_on_pulses, correlate_receive, modulate, read_pilot_response,
    DdResponse,
};

use super::config::{guard_layout, CovarianceModel, CsiMode, SimConfig, SweepAxis};

/// A pulse matrix with its Gram matrix.
#[derive(Debug)]
pub struct PulseSet {
    pub family: PulseFamily,
    pub pulses: PulseMatrix,
    pub gram: Mat<c64>,
}

impl PulseSet {
    pub fn build(family: PulseFamily, params: &LatticeParams, design: &PulseDesign) -> Result<Self> {
        let pulses = build_family(family, params, design)?;
        let gram = gram(&pulses);
        Ok(PulseSet {
            family,
            pulses,
            gram,
        })
    }
}

/// Shares built pulse sets between sweeps with the same lattice and design.
#[derive(Debug, Default)]
pub struct PulseCache {
    sets: Mutex<HashMap<String, Arc<PulseSet>>>,
}

impl PulseCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(
        &self,
        family: PulseFamily,
        params: &LatticeParams,
        design: &PulseDesign,
    ) -> Result<Arc<PulseSet>> {
        let key = format!(
            "{family}|{}|{}|{}|{}|{}|{}",
            params.m,
            params.n,
            params.delta_f,
            params.t,
            params.l,
            serde_json::to_string(design).expect("design serializes")
        );
        if let Some(s) = self.sets.lock().expect("cache lock").get(&key) {
            return Ok(s.clone());
        }
        let set = Arc::new(PulseSet::build(family, params, design)?);
        self.sets
            .lock()
            .expect("cache lock")
            .insert(key, set.clone());
        Ok(set)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub ber: f64,
    pub nmse: f64,
}

/// Intermediate products of one trial.
#[derive(Debug, Clone)]
pub struct TrialDetail {
    pub paths: PathSet,
    pub truth: DdResponse,
    pub estimate: EstimationResult,
    pub ber: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub x: f64,
    pub ber: f64,
    pub nmse: f64,
    pub trials: usize,
    /// Normal-approximation 95% half-width of the mean BER.
    pub ci_halfwidth: f64,
    pub nmse_ci_halfwidth: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl PointResult {
    pub fn ber_interval(&self) -> (f64, f64) {
        (self.ber - self.ci_halfwidth, self.ber + self.ci_halfwidth)
    }

    pub fn nmse_interval(&self) -> (f64, f64) {
        (self.nmse - self.nmse_ci_halfwidth, self.nmse + self.nmse_ci_halfwidth)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub axis: SweepAxis,
    pub window: PulseFamily,
    pub rx_window: PulseFamily,
    pub csi: CsiMode,
    pub points: Vec<PointResult>,
    pub config_hash: String,
    pub seed: u64,
    pub wall_time_s: f64,
}

/// Everything a trial needs at one sweep point.
struct PointContext<'a> {
    params: LatticeParams,
    layout: FrameLayout,
    tx: &'a PulseSet,
    rx: &'a PulseSet,
    profile: &'a PowerDelayProfile,
    nu_max: f64,
    fading: bool,
    sigma2: f64,
    noiseless: bool,
    e_p: f64,
    csi: CsiMode,
    covariance: CovarianceModel,
    seed: u64,
}

impl PointContext<'_> {
    fn noise_covariance(&self) -> Mat<c64> {
        let n = self.params.cells();
        match self.covariance {
            CovarianceModel::Matched => {
                Mat::from_fn(n, n, |i, j| self.rx.gram[(i, j)] * self.sigma2)
            }
            CovarianceModel::White => Mat::from_fn(n, n, |i, j| {
                if i == j {
                    c64::new(self.sigma2, 0.0)
                } else {
                    c64::new(0.0, 0.0)
                }
            }),
        }
    }

    /// Noiseless centered response seen by a lone unit pilot.
    fn true_response(&self, paths: &PathSet) -> Result<DdResponse> {
        let p = self.layout.pilot();
        let mut x = vec![c64::new(0.0, 0.0); self.params.cells()];
        x[self.params.index(p.l as usize, p.k as usize)] = c64::new(1.0, 0.0);
        let s = self.tx.pulses.apply(&x)?;
        let r = ChannelOperator::new(paths, &self.params)?.apply(&s)?;
        let y = crate::lattice::DdGrid::devectorize(
            self.params.m,
            self.params.n,
            &correlate_receive(&r, &self.rx.pulses)?,
        )?;
        Ok(read_pilot_response(&y, p, c64::new(1.0, 0.0), None))
    }

    fn run_trial(&self, trial: u64, c_n: &Mat<c64>) -> Result<TrialDetail> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        let constellation = Constellation::qam4();
        let params = &self.params;

        let paths = draw_channel_with(&mut rng, self.profile, self.nu_max, params, self.fading)?;
        let bits: Vec<u8> = (0..self.layout.n_data() * constellation.bits_per_symbol())
            .map(|_| rng.random_range(0..2u8))
            .collect();
        let e_d = self.layout.n_data() as f64;
        let frame = build_frame(&self.layout, &bits, &constellation, self.e_p, e_d)?;

        let s = modulate(&frame, &self.tx.pulses)?;
        let op = ChannelOperator::new(&paths, params)?;
        let mut r = op.apply(&s)?;
        // always consume the noise draw so every trial uses its stream identically
        let noisy = add_awgn(&r, self.sigma2, &mut rng)?;
        if !self.noiseless {
            r = noisy;
        }
        let y = correlate_receive(&r, &self.rx.pulses)?;
        let y_grid = crate::lattice::DdGrid::devectorize(params.m, params.n, &y)?;

        let x_p = c64::new(frame.pilot_amplitude(), 0.0);
        let truth = self.true_response(&paths)?;
        let mut est = estimate_heff(&y_grid, &self.layout, x_p)?;
        est.score(&truth)?;

        let h = match self.csi {
            CsiMode::Perfect => {
                let z = channel_on_pulses(&self.tx.pulses, &paths, params)?;
                self.rx.pulses.adjoint_apply_matrix(z.as_ref())?
            }
            CsiMode::Estimated => build_h_from_heff(&est.h_hat),
        };
        let det = detect(
            &y,
            h.as_ref(),
            &self.layout,
            x_p,
            1.0,
            c_n.as_ref(),
            &constellation,
            &bits,
        )?;
        Ok(TrialDetail {
            paths,
            truth,
            estimate: est,
            ber: det.ber,
        })
    }
}

/// Pins faer to single-threaded kernels (process-wide).
pub fn sequential_kernels() {
    faer::set_global_parallelism(faer::Par::Seq);
}

fn mean_and_halfwidth(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

fn point_context<'a>(
    config: &SimConfig,
    x: f64,
    tx: &'a PulseSet,
    rx: &'a PulseSet,
    profile: &'a PowerDelayProfile,
) -> Result<PointContext<'a>> {
    let params = config.lattice.params()?;
    let (mut snr_db, mut pdr_db, mut layout_cfg) = (config.snr_db, config.pdr_db, config.layout);
    match config.sweep.axis {
        SweepAxis::SnrDb => snr_db = x,
        SweepAxis::PdrDb => pdr_db = x,
        SweepAxis::Guard => layout_cfg = guard_layout(&config.layout, x as usize),
    }
    let layout = layout_cfg.layout(&params)?;
    Ok(PointContext {
        params,
        e_p: layout.n_data() as f64 * 10f64.powf(pdr_db / 10.0),
        layout,
        tx,
        rx,
        profile,
        nu_max: config.channel.nu_max,
        fading: config.channel.fading,
        sigma2: 10f64.powf(-snr_db / 10.0),
        noiseless: config.noiseless,
        csi: config.csi,
        covariance: config.covariance,
        seed: config.seed,
    })
}

/// Runs every trial of one point; the first error aborts the point.
pub fn run_point(config: &SimConfig, x: f64, cache: &PulseCache) -> Result<PointResult> {
    let params = config.lattice.params()?;
    let tx = cache.get(config.window, &params, &config.design)?;
    let rx = cache.get(config.rx_window(), &params, &config.design)?;
    let profile = config.channel.load()?;
    let ctx = point_context(config, x, &tx, &rx, &profile)?;
    let c_n = ctx.noise_covariance();
    let outcomes: Vec<TrialOutcome> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| {
            ctx.run_trial(t, &c_n).map(|d| TrialOutcome {
                ber: d.ber,
                nmse: d.estimate.nmse.unwrap_or(0.0),
            })
        })
        .collect::<Result<_>>()?;
    let bers: Vec<f64> = outcomes.iter().map(|o| o.ber).collect();
    let nmses: Vec<f64> = outcomes.iter().map(|o| o.nmse).collect();
    let (ber, ci_halfwidth) = mean_and_halfwidth(&bers);
    let (nmse, nmse_ci_halfwidth) = mean_and_halfwidth(&nmses);
    Ok(PointResult {
        x,
        ber,
        nmse,
        trials: outcomes.len(),
        ci_halfwidth,
        nmse_ci_halfwidth,
        diagnostic: None,
    })
}

/// One trial at the first sweep point, keeping the channel and estimates.
pub fn single_trial(config: &SimConfig, trial: u64, cache: &PulseCache) -> Result<TrialDetail> {
    sequential_kernels();
    config.validate()?;
    let params = config.lattice.params()?;
    let tx = cache.get(config.window, &params, &config.design)?;
    let rx = cache.get(config.rx_window(), &params, &config.design)?;
    let profile = config.channel.load()?;
    let ctx = point_context(config, config.sweep.points[0], &tx, &rx, &profile)?;
    ctx.run_trial(trial, &ctx.noise_covariance())
}

pub fn run_sweep(config: &SimConfig) -> Result<SimReport> {
    run_sweep_cached(config, &PulseCache::new())
}

/// Like [`run_sweep`] but reusing pulse sets from `cache`.
pub fn run_sweep_cached(config: &SimConfig, cache: &PulseCache) -> Result<SimReport> {
    sequential_kernels();
    config.validate()?;
    let start = Instant::now();
    let points = config
        .sweep
        .points
        .iter()
        .map(|&x| {
            run_point(config, x, cache).unwrap_or_else(|e| PointResult {
                x,
                ber: 0.0,
                nmse: 0.0,
                trials: 0,
                ci_halfwidth: 0.0,
                nmse_ci_halfwidth: 0.0,
                diagnostic: Some(e.to_string()),
            })
        })
        .collect();
    Ok(SimReport {
        axis: config.sweep.axis,
        window: config.window,
        rx_window: config.rx_window(),
        csi: config.csi,
        points,
        config_hash: config.hash(),
        seed: config.seed,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

impl SimReport {
    /// First diagnostic recorded by any point.
    pub fn first_failure(&self) -> Option<&str> {
        self.points.iter().find_map(|p| p.diagnostic.as_deref())
    }

    /// Converts a failed point back into an error.
    pub fn check(&self) -> Result<()> {
        match self.first_failure() {
            Some(msg) => Err(Error::Numeric(msg.to_string())),
            None => Ok(()),
        }
    }
}
