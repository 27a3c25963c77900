use zak_otfs::pulse::PulseFamily;
use zak_otfs::sim::config::SweepConfig;
use zak_otfs::sim::csv::report_csv;
use zak_otfs::sim::psd::{bandwidth_99, compute_psd};
use zak_otfs::sim::{
    run_sweep_cached, single_trial, CovarianceModel, CsiMode, PulseCache, SimConfig, SimReport,
    SweepAxis,
};
use zak_otfs::Error;

fn config(window: PulseFamily, trials: usize) -> SimConfig {
    let mut c = SimConfig::new(window);
    c.trials = trials;
    c.seed = 42;
    c
}

#[test]
fn sweeps_are_deterministic() {
    let cache = PulseCache::new();
    let mut c = config(PulseFamily::Rect, 3);
    c.sweep.points = vec![10.0, 20.0];
    let a = run_sweep_cached(&c, &cache).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| run_sweep_cached(&c, &cache).unwrap());
    assert_eq!(a.points, b.points);
    assert_eq!(a.config_hash, b.config_hash);
    let d0 = single_trial(&c, 1, &cache).unwrap();
    let d1 = single_trial(&c, 1, &cache).unwrap();
    assert_eq!(d0.paths, d1.paths);
    assert_eq!(d0.estimate.h_hat, d1.estimate.h_hat);

    c.seed = 43;
    let other = run_sweep_cached(&c, &cache).unwrap();
    assert_ne!(other.points, a.points);
    assert_ne!(other.config_hash, a.config_hash);
}

#[test]
fn report_csv_layout() {
    let empty = SimReport {
        axis: SweepAxis::PdrDb,
        window: PulseFamily::Rrc,
        rx_window: PulseFamily::Rrc,
        csi: CsiMode::Estimated,
        points: vec![],
        config_hash: String::new(),
        seed: 0,
        wall_time_s: 0.0,
    };
    assert_eq!(report_csv(&empty), "pdr_db,ber,nmse,trials,ci_halfwidth\n");

    let cache = PulseCache::new();
    let c = config(PulseFamily::Rect, 2);
    let report = run_sweep_cached(&c, &cache).unwrap();
    let text = report_csv(&report);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row.len(), 5);
    assert_eq!(row[0].parse::<f64>().unwrap(), 20.0);
    assert_eq!(row[1].parse::<f64>().unwrap(), report.points[0].ber);
    assert_eq!(row[3], "2");
    let back: SimReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn configuration_errors() {
    assert!(matches!(
        SimConfig::from_json(r#"{"window": "rect", "lattice": {"m": 32, "n": 16, "delta_f": 15e3, "l": 10, "x": 1}}"#),
        Err(Error::Config(_))
    ));
    assert!(matches!(SimConfig::from_json(r#"{"window": "hann"}"#), Err(Error::Config(_))));
    let missing = SimConfig::from_file(std::path::Path::new("/nonexistent/scenario.json"));
    assert!(matches!(missing, Err(Error::Io { .. })));
    assert_eq!(missing.unwrap_err().exit_code(), 2);

    let mut c = config(PulseFamily::Rect, 1);
    c.sweep = SweepConfig {
        axis: SweepAxis::Guard,
        points: vec![2.5],
    };
    assert!(c.validate().is_err());
    c.sweep.points = vec![40.0];
    assert!(c.validate().is_err());
    c.sweep.points = vec![3.0];
    assert!(c.validate().is_ok());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, serde_json::to_string(&config(PulseFamily::IotaPswf, 7)).unwrap()).unwrap();
    let loaded = SimConfig::from_file(&path).unwrap();
    assert_eq!(loaded, config(PulseFamily::IotaPswf, 7));
}

#[test]
fn high_snr_perfect_csi_is_nearly_error_free() {
    let cache = PulseCache::new();
    let mut c = config(PulseFamily::IotaPswf, 50);
    c.csi = CsiMode::Perfect;
    c.sweep.points = vec![40.0];
    let r = run_sweep_cached(&c, &cache).unwrap();
    r.check().unwrap();
    assert!(r.points[0].ber < 1e-3, "ber {}", r.points[0].ber);
}

#[test]
fn estimation_error_falls_with_snr() {
    let cache = PulseCache::new();
    let mut c = config(PulseFamily::Rect, 10);
    c.sweep.points = vec![0.0, 10.0, 20.0, 30.0];
    let r = run_sweep_cached(&c, &cache).unwrap();
    let nmse: Vec<f64> = r.points.iter().map(|p| p.nmse).collect();
    assert!(nmse.windows(2).all(|w| w[1] < w[0]), "{nmse:?}");
}

#[test]
fn white_and_matched_agree_for_orthonormal_pulses() {
    let cache = PulseCache::new();
    let mut c = config(PulseFamily::IotaPswf, 2);
    c.csi = CsiMode::Perfect;
    let matched = run_sweep_cached(&c, &cache).unwrap();
    c.covariance = CovarianceModel::White;
    let white = run_sweep_cached(&c, &cache).unwrap();
    assert_eq!(matched.points[0].ber, white.points[0].ber);
}

#[test]
fn pulse_set_psd() {
    let cache = PulseCache::new();
    let params = SimConfig::new(PulseFamily::Rect).lattice.params().unwrap();
    let design = Default::default();
    let rect = cache.get(PulseFamily::Rect, &params, &design).unwrap();
    let psd = compute_psd(&rect.pulses, 4 * params.samples(), params.sample_rate()).unwrap();
    assert!((psd.power.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let bw = bandwidth_99(&psd) / params.delta_f;
    // a rectangular spectrum of width M·Δf holds 99% within 0.99·M·Δf
    assert!(bw > 0.9 * params.m as f64 && bw < 1.1 * params.m as f64, "bw {bw}");
    assert!(compute_psd(&rect.pulses, params.samples(), params.sample_rate()).is_err());
}
