use std::f64::consts::PI;

use proptest::prelude::*;
use zak_otfs::c64;
use zak_otfs::detector::Constellation;
use zak_otfs::lattice::{build_frame, DdGrid, DdIndex, FrameLayout, LatticeParams};

#[test]
fn vectorize_orders_delay_fastest() {
    let (a, b, c, d) = (
        c64::new(1.0, 0.0),
        c64::new(2.0, 0.0),
        c64::new(3.0, 0.0),
        c64::new(4.0, 0.0),
    );
    let mut g = DdGrid::zeros(2, 2);
    g.set(0, 0, a);
    g.set(1, 0, b);
    g.set(0, 1, c);
    g.set(1, 1, d);
    assert_eq!(g.vectorize(), vec![a, b, c, d]);
    assert_eq!(DdGrid::zeros(32, 16).vectorize().len(), 512);
    assert!(DdGrid::zeros(3, 3).vectorize().iter().all(|v| v.norm() == 0.0));
    assert!(DdGrid::devectorize(2, 2, &[a, b, c]).is_err());
}

#[test]
fn reference_lattice_derived_quantities() {
    let p = LatticeParams::reference();
    assert_eq!(p.samples(), 5120);
    assert_eq!(p.cells(), 512);
    assert!((p.sample_rate() - 4.8e6).abs() < 1e-6);
    assert!((p.t - 1.0 / 15e3).abs() < 1e-18);
    assert!(LatticeParams::new(4, 4, 1.0, 2.0, 1).is_err());
    assert!(LatticeParams::new(0, 4, 1.0, 1.0, 1).is_err());
}

#[test]
fn reference_layout_counts() {
    let p = LatticeParams::reference();
    let layout = FrameLayout::new(&p, 5, 7).unwrap();
    assert_eq!(layout.n_data(), 512 - 11 * 15);
    assert_eq!(layout.pilot(), DdIndex::new(16, 8));
    assert!(layout.in_pilot_region(16 + 3, 8 - 5));
    assert!(!layout.in_pilot_region(16 + 4, 8));
    assert!(layout.in_guard(16 + 5, 8 + 7));
    assert!(!layout.is_data(16, 8));
    // guard rectangles must stay inside the grid and cover the pilot region
    assert!(FrameLayout::new(&p, 17, 7).is_err());
    assert!(FrameLayout::new(&p, 1, 7).is_err());
}

#[test]
fn frame_energies_and_pdr() {
    let p = LatticeParams::reference();
    let layout = FrameLayout::new(&p, 5, 7).unwrap();
    let qam = Constellation::qam4();
    let bits: Vec<u8> = (0..2 * layout.n_data()).map(|i| ((i * 7 + 3) % 5 % 2) as u8).collect();
    let e_d = layout.n_data() as f64;
    let f = build_frame(&layout, &bits, &qam, e_d, e_d).unwrap();
    assert!(f.pdr_db().abs() < 1e-12);
    let data: f64 = layout
        .data_cells()
        .iter()
        .map(|&(l, k)| f.symbols.get(l, k).norm_sqr())
        .sum();
    assert!((data - e_d).abs() < 1e-9 * e_d);
    assert_eq!(f.symbols.get(16, 8), c64::new(e_d.sqrt(), 0.0));
    for l in 11..=21 {
        for k in 1..=15 {
            if (l, k) != (16, 8) {
                assert_eq!(f.symbols.get(l, k), c64::new(0.0, 0.0));
            }
        }
    }
    assert!(build_frame(&layout, &bits[1..], &qam, 1.0, 1.0).is_err());
    assert!(build_frame(&layout, &bits, &qam, -1.0, 1.0).is_err());
    assert!(build_frame(&layout, &bits, &qam, 1.0, 0.0).is_err());
}

#[test]
fn all_guard_layout_holds_only_the_pilot() {
    let p = LatticeParams::from_delta_f(5, 5, 1.0, 1).unwrap();
    let layout = FrameLayout::new(&p, 2, 2).unwrap();
    assert_eq!(layout.n_data(), 0);
    let f = build_frame(&layout, &[], &Constellation::qam4(), 4.0, 1.0).unwrap();
    assert!((f.symbols.energy() - 4.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn quasi_periodic_extension(
        m in 1usize..7, n in 1usize..7,
        seed in any::<u64>(),
        ns in -3i64..4, ms in -3i64..4,
    ) {
        let g = DdGrid::from_fn(m, n, |l, k| {
            let x = (seed.wrapping_mul(2654435761).wrapping_add((l * 31 + k) as u64) % 1000) as f64;
            c64::new(x.sin(), x.cos())
        });
        for l0 in 0..m as i64 {
            for k0 in 0..n as i64 {
                let v = g.quasiperiodic_value(DdIndex::new(l0 + ns * m as i64, k0 + ms * n as i64));
                let phase = c64::from_polar(1.0, 2.0 * PI * (ns * k0) as f64 / n as f64);
                let want = phase * g.get(l0 as usize, k0 as usize);
                prop_assert!((v - want).norm() < 1e-12);
                prop_assert!((v.norm() - g.get(l0 as usize, k0 as usize).norm()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vectorize_roundtrip(m in 1usize..9, n in 1usize..9, seed in any::<u32>()) {
        let g = DdGrid::from_fn(m, n, |l, k| c64::new((l as f64 + seed as f64).sin(), k as f64));
        prop_assert_eq!(DdGrid::devectorize(m, n, &g.vectorize()).unwrap(), g);
    }
}
