use faer::Mat;

use zak_otfs::c64;
use zak_otfs::channel::{Path, PathSet};
use zak_otfs::lattice::{DdGrid, DdIndex, LatticeParams};
use zak_otfs::pulse::{build_family, build_raw_pulse_matrix, family_windows, gram, PulseDesign, PulseFamily};
use zak_otfs::transceiver::{
    build_h_from_heff, correlate_receive, dd_noise_covariance, effective_channel_matrix,
    pilot_response, relative_frobenius, twisted_convolution_io, ClosedForm, DdResponse,
};
use zak_otfs::window::{sample_frequency_window, sample_time_window};

fn small() -> LatticeParams {
    LatticeParams::new(8, 8, 1.0, 1.0, 4).unwrap()
}

fn test_grid(m: usize, n: usize) -> DdGrid {
    DdGrid::from_fn(m, n, |l, k| c64::new((l as f64 * 0.9 + k as f64).sin(), (k as f64 * 0.4 - l as f64).cos()))
}

fn mat_vec(h: &Mat<c64>, x: &[c64]) -> Vec<c64> {
    let xv = Mat::from_fn(x.len(), 1, |i, _| x[i]);
    let y: Mat<c64> = h * &xv;
    (0..y.nrows()).map(|i| y[(i, 0)]).collect()
}

fn close(a: &[c64], b: &[c64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
}

#[test]
fn twisted_convolution_matches_matrix() {
    let (m, n) = (6, 5);
    let x = test_grid(m, n);
    // support extends past the fundamental domain so aliases are exercised
    let mut h = DdResponse::with_support(m, n, -8, 17, -6, 13);
    for (i, (l, k)) in [(0, 0), (2, -1), (-3, 4), (7, -6), (-8, 2), (5, 5)].iter().enumerate() {
        h.set(*l, *k, c64::new(0.3 + i as f64 * 0.1, 0.2 - i as f64 * 0.15)).unwrap();
    }
    let y = twisted_convolution_io(&x, &h).unwrap();
    let hm = build_h_from_heff(&h);
    assert!(close(&y.vectorize(), &mat_vec(&hm, &x.vectorize()), 1e-12));
}

#[test]
fn delta_responses() {
    let (m, n) = (4, 3);
    let x = test_grid(m, n);
    let mut h = DdResponse::centered(m, n);
    h.set(0, 0, c64::new(1.0, 0.0)).unwrap();
    assert!(close(&twisted_convolution_io(&x, &h).unwrap().vectorize(), &x.vectorize(), 1e-15));

    // a pure delay shift moves the grid along l with the quasi-periodic phase
    let mut d = DdResponse::centered(m, n);
    d.set(1, 0, c64::new(1.0, 0.0)).unwrap();
    let y = twisted_convolution_io(&x, &d).unwrap();
    for l in 0..m as i64 {
        for k in 0..n as i64 {
            let want = x.quasiperiodic_value(DdIndex::new(l - 1, k));
            assert!((y.get(l as usize, k as usize) - want).norm() < 1e-14);
        }
    }
    assert!(twisted_convolution_io(&DdGrid::zeros(3, 3), &d).is_err());
}

#[test]
fn closed_form_matches_matrix_product() {
    let params = small();
    let (a, b) = family_windows(PulseFamily::Rrc, &params, &PulseDesign::default()).unwrap();
    let raw = build_raw_pulse_matrix(&a, &b, &params).unwrap();
    let fs = params.sample_rate();
    let paths = PathSet::new(
        vec![
            Path::new(c64::new(0.7, 0.2), 0.0, 0.0),
            Path::new(c64::new(-0.3, 0.4), 5.0 / fs, 1.6 * params.nu_res()),
        ],
        &params,
    )
    .unwrap();
    let eff = effective_channel_matrix(&raw, &raw, &paths, &params).unwrap();
    let taps = sample_frequency_window(&a, &params).unwrap();
    let samples = sample_time_window(&b, &params).unwrap();
    let cf = ClosedForm::new(&taps, &samples, &paths, &params).unwrap();
    let full = cf.evaluate_on(cf.full_support());
    let h = build_h_from_heff(&full);
    let err = relative_frobenius(h.as_ref(), eff.h.as_ref());
    assert!(err < 1e-9, "relative error {err}");
}

#[test]
fn rect_identity_channel_is_transparent() {
    let params = small();
    let p = build_family(PulseFamily::Rect, &params, &PulseDesign::default()).unwrap();
    let x = test_grid(params.m, params.n).vectorize();
    let y = correlate_receive(&p.apply(&x).unwrap(), &p).unwrap();
    assert!(close(&y, &x, 1e-10));
    let eff = effective_channel_matrix(&p, &p, &PathSet::identity(), &params).unwrap();
    let eye = Mat::from_fn(params.cells(), params.cells(), |i, j| c64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
    assert!(relative_frobenius(eff.h.as_ref(), eye.as_ref()) < 1e-10);
}

#[test]
fn every_pilot_sees_the_same_response() {
    let params = small();
    let (a, b) = family_windows(PulseFamily::Rrc, &params, &PulseDesign::default()).unwrap();
    let raw = build_raw_pulse_matrix(&a, &b, &params).unwrap();
    let fs = params.sample_rate();
    let paths = PathSet::new(
        vec![Path::new(c64::new(0.9, -0.1), 4.0 / fs, 0.7 * params.nu_res())],
        &params,
    )
    .unwrap();
    let taps = sample_frequency_window(&a, &params).unwrap();
    let samples = sample_time_window(&b, &params).unwrap();
    let cf = ClosedForm::new(&taps, &samples, &paths, &params).unwrap();
    let full = cf.evaluate_on(cf.full_support());
    let one = c64::new(1.0, 0.0);
    for pilot in [DdIndex::new(2, 3), DdIndex::new(6, 1), DdIndex::new(0, 7)] {
        let y = pilot_response(&raw, &paths, &params, pilot, one).unwrap();
        let mut x = DdGrid::zeros(params.m, params.n);
        x.set(pilot.l as usize, pilot.k as usize, one);
        let want = twisted_convolution_io(&x, &full).unwrap();
        let scale = want.energy().sqrt();
        assert!(close(&y.vectorize(), &want.vectorize(), 1e-8 * scale), "pilot {pilot:?}");
    }
}

#[test]
fn noise_covariance_is_scaled_gram() {
    let params = small();
    let design = PulseDesign::default();
    let pswf = build_family(PulseFamily::Pswf, &params, &design).unwrap();
    let cn = dd_noise_covariance(&pswf, 0.3);
    let r = gram(&pswf);
    for j in 0..r.ncols() {
        for i in 0..r.nrows() {
            assert!((cn[(i, j)] - 0.3 * r[(i, j)]).norm() < 1e-15);
        }
    }
    let iota = build_family(PulseFamily::IotaPswf, &params, &design).unwrap();
    let cn = dd_noise_covariance(&iota, 0.5);
    for j in 0..cn.ncols() {
        for i in 0..cn.nrows() {
            let want = if i == j { 0.5 } else { 0.0 };
            assert!((cn[(i, j)] - c64::new(want, 0.0)).norm() < 1e-9);
        }
    }
}

#[test]
fn signal_path_agrees_with_matrix_path() {
    let params = small();
    let p = build_family(PulseFamily::Pswf, &params, &PulseDesign::default()).unwrap();
    let fs = params.sample_rate();
    let paths = PathSet::new(
        vec![
            Path::new(c64::new(0.5, 0.5), 2.0 / fs, -1.3 * params.nu_res()),
            Path::new(c64::new(0.2, -0.6), 9.0 / fs, 2.2 * params.nu_res()),
        ],
        &params,
    )
    .unwrap();
    let x = test_grid(params.m, params.n).vectorize();
    let r = zak_otfs::channel::apply_channel(&p.apply(&x).unwrap(), &paths, &params).unwrap();
    let y = correlate_receive(&r, &p).unwrap();
    let eff = effective_channel_matrix(&p, &p, &paths, &params).unwrap();
    let hx = mat_vec(&eff.h, &x);
    let num: f64 = y.iter().zip(&hx).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = hx.iter().map(|v| v.norm_sqr()).sum();
    assert!((num / den).sqrt() < 1e-9);
}

#[test]
fn pswf_noise_is_colored() {
    let params = small();
    let p = build_family(PulseFamily::Pswf, &params, &PulseDesign::default()).unwrap();
    let cn = dd_noise_covariance(&p, 1.0);
    let mut off = 0.0f64;
    for j in 0..cn.ncols() {
        for i in 0..cn.nrows() {
            if i != j {
                off = off.max(cn[(i, j)].norm());
            }
        }
    }
    assert!(off > 1e-3);
    let zero = dd_noise_covariance(&p, 0.0);
    assert!((0..zero.nrows()).all(|i| (0..zero.ncols()).all(|j| zero[(i, j)].norm() == 0.0)));
}
