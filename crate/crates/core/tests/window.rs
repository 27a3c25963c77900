use std::f64::consts::PI;

use zak_otfs::c64;
use zak_otfs::lattice::LatticeParams;
use zak_otfs::window::{
    ambiguity_freq, ambiguity_time, autocorr_sidelobe_peak, discrete_periodic_ambiguity,
    sample_frequency_window, sample_time_window, sidelobe_peak_of_cut, solve_pswf, Axis,
    WindowSpec,
};

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

#[test]
fn rectangular_window_values() {
    let nt = 16.0 / 15e3;
    let w = WindowSpec::rectangular(Axis::Time, nt).unwrap();
    assert!((w.evaluate(0.0).unwrap() - 1.0 / nt.sqrt()).abs() < 1e-12);
    assert_eq!(w.evaluate(0.6 * nt).unwrap(), 0.0);
}

#[test]
fn rrc_support_is_widened_by_rolloff() {
    let base = 32.0 * 15e3;
    let w = WindowSpec::root_raised_cosine(Axis::Frequency, base, 0.3).unwrap();
    assert!((w.span() - 1.3 * base).abs() < 1e-6);
    assert!(w.evaluate(0.649 * base).unwrap() > 0.0);
    assert_eq!(w.evaluate(0.651 * base).unwrap(), 0.0);
    assert!(WindowSpec::root_raised_cosine(Axis::Frequency, base, 1.5).is_err());
}

#[test]
fn rect_frequency_ambiguity_is_sinc() {
    let w = WindowSpec::rectangular(Axis::Frequency, 32.0).unwrap();
    let y0 = ambiguity_freq(&w, 0.0, 0.0).unwrap();
    assert!((y0.re - 1.0).abs() < 1e-9);
    for tau in [0.003, 0.011, 0.02, 0.05] {
        let y = ambiguity_freq(&w, tau, 0.0).unwrap();
        assert!((y.norm() - sinc(32.0 * tau).abs()).abs() < 1e-8, "tau {tau}");
    }
    assert_eq!(ambiguity_freq(&w, 0.01, 33.0).unwrap(), c64::new(0.0, 0.0));
}

#[test]
fn rect_time_ambiguity_is_sinc_in_doppler() {
    let w = WindowSpec::rectangular(Axis::Time, 2.0).unwrap();
    assert!((ambiguity_time(&w, 0.0, 0.0).unwrap().re - 1.0).abs() < 1e-9);
    for nu in [0.1, 0.37, 1.2] {
        let x = ambiguity_time(&w, 0.0, nu).unwrap();
        assert!((x.norm() - sinc(2.0 * nu).abs()).abs() < 1e-8);
    }
    assert_eq!(ambiguity_time(&w, 2.5, 0.0).unwrap(), c64::new(0.0, 0.0));
}

#[test]
fn ambiguity_symmetry_and_bound() {
    let w = WindowSpec::root_raised_cosine(Axis::Frequency, 10.0, 0.3).unwrap();
    for (tau, nu) in [(0.013, 1.7), (-0.2, 4.1), (0.31, -6.0), (0.05, 0.2)] {
        let a = ambiguity_freq(&w, tau, nu).unwrap();
        let b = ambiguity_freq(&w, -tau, -nu).unwrap();
        assert!((a.norm() - b.norm()).abs() < 1e-9);
        assert!(a.norm() <= 1.0 + 1e-9);
    }
}

#[test]
fn discrete_periodic_ambiguity_examples() {
    let ones = vec![1.0; 24];
    for l in [0, 3, 17] {
        assert!((discrete_periodic_ambiguity(&ones, l, 0.0) - c64::new(24.0, 0.0)).norm() < 1e-12);
    }
    for k in [1.0, 5.0, 23.0] {
        assert!(discrete_periodic_ambiguity(&ones, 0, k).norm() < 1e-12);
    }
    let b: Vec<f64> = (0..24).map(|i| ((i * i) as f64 * 0.37).sin()).collect();
    let e: f64 = b.iter().map(|v| v * v).sum();
    assert!((discrete_periodic_ambiguity(&b, 0, 0.0).re - e).abs() < 1e-12);
    let x = discrete_periodic_ambiguity(&b, 5, 3.0);
    assert!((discrete_periodic_ambiguity(&b, 5 + 24, 3.0) - x).norm() < 1e-10);
    let y = discrete_periodic_ambiguity(&b, 5, 2.3);
    assert!((discrete_periodic_ambiguity(&b, 5, 2.3 + 24.0) - y).norm() < 1e-9);
}

#[test]
fn pswf_spectrum_and_convergence() {
    let s = solve_pswf(1.0, 1.0, 256).unwrap();
    assert!(s.lambda0 > s.lambda1);
    assert!(s.lambda0 > 0.0 && s.lambda0 <= 1.0);
    assert!((s.energy() - 1.0).abs() < 1e-10);
    let n = s.psi0.len();
    for i in 0..n {
        assert!((s.psi0[i] - s.psi0[n - 1 - i]).abs() < 1e-8);
    }
    assert!(s.psi0[n / 2] > 0.0);
    let fine = solve_pswf(1.0, 1.0, 512).unwrap();
    assert!((fine.lambda0 - s.lambda0).abs() / s.lambda0 < 1e-6);
    let mut last = 0.0;
    for b in [0.5, 1.0, 2.0] {
        let l = solve_pswf(1.0, b, 256).unwrap().lambda0;
        assert!(l > last);
        last = l;
    }
    assert!(solve_pswf(1.0, 1.0, 32).is_err());
    assert!(solve_pswf(0.0, 1.0, 128).is_err());
}

#[test]
fn unsolved_pswf_cannot_be_evaluated() {
    let w = WindowSpec::pswf(Axis::Time, 1.0, 1.3).unwrap();
    assert!(w.evaluate(0.0).is_err());
}

#[test]
fn sampled_time_windows() {
    let p = LatticeParams::reference();
    let nt = p.n as f64 * p.t;
    let rect = sample_time_window(&WindowSpec::rectangular(Axis::Time, nt).unwrap(), &p).unwrap();
    assert!((rect.energy() - 1.0).abs() < 1e-10);
    let v0 = rect.samples[0];
    assert!(rect.samples.iter().all(|v| (v - v0).abs() < 1e-15));

    let rrc = WindowSpec::root_raised_cosine(Axis::Time, nt, 0.3).unwrap();
    let sampled = sample_time_window(&rrc, &p).unwrap();
    // raised-cosine tail beyond ±NT/2 on both sides
    let analytic = 0.15 - 0.3 / PI;
    assert!((sampled.truncated_fraction - analytic).abs() < 1e-8);
    assert!((sampled.energy() - 1.0).abs() < 1e-10);

    let pswf = WindowSpec::pswf(Axis::Time, nt / 2.65, 1.3 * nt)
        .unwrap()
        .solved(1024)
        .unwrap();
    let s = sample_time_window(&pswf, &p).unwrap();
    let n = s.samples.len();
    for i in 1..n / 2 {
        assert!((s.samples[i] - s.samples[n - i]).abs() < 1e-8);
    }
    assert!((s.energy() - 1.0).abs() < 1e-10);
}

#[test]
fn frequency_taps_cover_support() {
    let p = LatticeParams::reference();
    let base = p.m as f64 * p.delta_f;
    let taps = sample_frequency_window(
        &WindowSpec::root_raised_cosine(Axis::Frequency, base, 0.3).unwrap(),
        &p,
    )
    .unwrap();
    let width = (taps.j_max() - taps.j_min + 1) as f64 * taps.spacing;
    assert!(width <= 1.3 * base + taps.spacing);
    assert!((taps.ambiguity(0.0, 0).re - 1.0).abs() < 1e-3);
}

#[test]
fn rect_sidelobe_and_pswf_vs_rrc() {
    let cut: Vec<f64> = (0..4000).map(|i| sinc(i as f64 / 400.0).abs()).collect();
    let r = sidelobe_peak_of_cut(&cut, 1.0 / 400.0);
    assert!(r.found);
    assert!((r.peak - 0.2172).abs() < 1e-3);
    let flat = vec![1.0, 0.5, 0.25, 0.1];
    let none = sidelobe_peak_of_cut(&flat, 1.0);
    assert!(!none.found && none.peak == 0.0);

    let base = 32.0 * 15e3;
    let rrc = WindowSpec::root_raised_cosine(Axis::Frequency, base, 0.3).unwrap();
    let pswf = WindowSpec::pswf(Axis::Frequency, base / 2.65, 1.3 * base)
        .unwrap()
        .solved(1024)
        .unwrap();
    let a = autocorr_sidelobe_peak(&pswf).unwrap();
    let b = autocorr_sidelobe_peak(&rrc).unwrap();
    assert!(a.peak < b.peak, "pswf {} rrc {}", a.peak, b.peak);
}
