use std::f64::consts::PI;

use bloch_core::lattice::build_index_set;
use bloch_core::materials::{Coating, PermittivityModel};
use bloch_core::output::{read_points, read_points_file, write_points, write_points_file};
use bloch_core::path::PathSpec;
use bloch_core::quadratic::{EtaMethod, QuadraticOptions, QuadraticSolver};
use bloch_core::standard::StandardSolver;
use bloch_core::sweep::{sweep_quadratic, BandPoint, PointFlag, SweepOptions};
use num_complex::Complex64;
use proptest::prelude::*;

fn rods() -> PermittivityModel {
    PermittivityModel::rods_with_air_fraction(13.0, 0.82)
}

fn arnoldi(nev: usize) -> QuadraticOptions {
    QuadraticOptions {
        nev,
        method: EtaMethod::Arnoldi,
        shift: Complex64::new(0.0, 0.05),
        subspace: 3 * nev + 12,
        ..Default::default()
    }
}

#[test]
fn rods_lowest_band_self_converges() {
    // measured ω/2π: 0.2155, 0.1964, 0.1793, 0.1744 for orders 1 to 4
    let k = [PI / 2.0, 0.0, 0.0];
    let w: Vec<f64> = (1..=4)
        .map(|order| {
            let solver = StandardSolver::new(&rods(), &build_index_set(order), 64).unwrap();
            solver.solve(&k, 1).unwrap()[0].omega
        })
        .collect();
    assert!(w.windows(2).all(|p| p[1] < p[0]), "{w:?}");
    let steps: Vec<f64> = w.windows(2).map(|p| (p[0] - p[1]) / p[1]).collect();
    assert!(steps[2] < steps[1] && steps[1] < steps[0] * 1.1, "{steps:?}");
    assert!(steps[2] <= 0.05, "{steps:?}");
}

#[test]
fn rods_quadratic_points_lie_on_standard_bands() {
    let basis = build_index_set(1);
    let model = rods();
    let quadratic = QuadraticSolver::new(&model, &basis, arnoldi(8)).unwrap();
    let standard = StandardSolver::new(&model, &basis, 64).unwrap();
    let path = PathSpec::gamma_x_m_r(1);
    let omegas = [2.0 * PI * 0.1, 2.0 * PI * 0.2];
    let mut checked = 0;
    for s in 0..3 {
        let sweep = sweep_quadratic(&quadratic, path.segment(s).unwrap(), &omegas, &SweepOptions::default());
        assert!(sweep.failures.is_empty());
        for p in sweep.points.iter().filter(|p| p.flag == PointFlag::Physical) {
            let bands = standard.solve(&p.k, 12).unwrap();
            let gap = bands
                .iter()
                .map(|m| (m.omega - p.omega).abs() / p.omega)
                .fold(f64::INFINITY, f64::min);
            assert!(gap <= 1e-6, "alpha {} omega {} gap {gap}", p.alpha, p.omega);
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn lorentz_sweep_at_resonance_equals_frozen_coating() {
    let basis = build_index_set(1);
    let lorentz = PermittivityModel::fcc_lorentz(0.9);
    let frozen = lorentz.with_coating(Coating::Constant(Complex64::new(7.0, 0.0)));
    let omega = 2.0 * PI * 0.489;
    let seg = PathSpec::gamma_x_m_r(1).segments[0].clone();
    let run = |m: &PermittivityModel| {
        let solver = QuadraticSolver::new(m, &basis, arnoldi(8)).unwrap();
        sweep_quadratic(&solver, &seg, &[omega], &SweepOptions::default()).points
    };
    let (a, b) = (run(&lorentz), run(&frozen));
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn sweeps_are_deterministic_and_round_trip_through_csv() {
    let basis = build_index_set(1);
    let solver = QuadraticSolver::new(&rods(), &basis, arnoldi(8)).unwrap();
    let seg = PathSpec::gamma_x_m_r(1).segments[1].clone();
    let omegas = [1.0, 1.3, 1.6];
    let first = sweep_quadratic(&solver, &seg, &omegas, &SweepOptions::default()).points;
    let second = sweep_quadratic(&solver, &seg, &omegas, &SweepOptions::default()).points;
    assert_eq!(first, second);

    let dir = tempfile::tempdir().unwrap();
    let (pa, pb) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    write_points_file(&pa, &first).unwrap();
    write_points_file(&pb, &second).unwrap();
    assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    let back = read_points_file(&pa).unwrap();
    assert_eq!(back.len(), first.len());
    for (x, y) in back.iter().zip(&first) {
        assert_eq!(x.alpha.to_bits(), y.alpha.to_bits());
        assert_eq!(x.k.map(f64::to_bits), y.k.map(f64::to_bits));
        assert_eq!(x.eta, y.eta);
        assert_eq!(x.residual, y.residual);
        assert_eq!(x.p_norm, y.p_norm);
        assert_eq!(x.s_abs, y.s_abs);
        assert_eq!(x.flag, y.flag);
        assert_eq!(x.omega_over_2pi().to_bits(), y.omega_over_2pi().to_bits());
    }
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        -1e3..1e3f64,
    ]
}

proptest! {
    #[test]
    fn csv_fields_round_trip_bitwise(
        alpha in finite(), k in [finite(), finite(), finite()],
        nu in -1e300..1e300f64, eta in proptest::option::of((finite(), finite())),
        res in finite(),
    ) {
        let p = BandPoint {
            alpha,
            k,
            omega: nu,
            eta: eta.map(|(re, im)| Complex64::new(re, im)),
            residual: eta.map(|_| res),
            p_norm: eta.map(|_| res.abs()),
            s_abs: None,
            flag: if eta.is_some() { PointFlag::Complex } else { PointFlag::Standard },
        };
        let mut buf = Vec::new();
        write_points(&mut buf, &[p]).unwrap();
        let back = read_points(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), 1);
        let q = back[0];
        prop_assert_eq!(q.alpha.to_bits(), p.alpha.to_bits());
        prop_assert_eq!(q.k.map(f64::to_bits), p.k.map(f64::to_bits));
        prop_assert_eq!(q.eta, p.eta);
        prop_assert_eq!(q.residual, p.residual);
        prop_assert_eq!(q.p_norm, p.p_norm);
        prop_assert_eq!(q.omega_over_2pi().to_bits(), p.omega_over_2pi().to_bits());
        prop_assert_eq!(q.flag, p.flag);
    }
}
