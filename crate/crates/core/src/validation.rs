//! Oracle suite behind the `validate` command.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::admissibility::{check_admissibility, min_gamma_sqr};
use crate::lattice::{build_index_set, WaveVectorSplit};
use crate::materials::PermittivityModel;
use crate::oracles::{analytic_etas, analytic_omegas, cross_consistency_report, dense_generalized_eig};
use crate::quadratic::{solve_system, EtaMethod, QuadraticOptions, QuadraticSolver};
use crate::standard::solve_standard;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationCheck {
    pub name: String,
    pub passed: bool,
    /// Measured error (or `null` when the check is not numeric).
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationVerdict {
    pub passed: bool,
    pub checks: Vec<ValidationCheck>,
}

fn numeric(name: &str, value: f64, tolerance: f64, detail: String) -> ValidationCheck {
    ValidationCheck {
        name: name.to_string(),
        passed: value <= tolerance,
        value: Some(value),
        tolerance: Some(tolerance),
        detail,
    }
}

fn failed(name: &str, detail: String) -> ValidationCheck {
    ValidationCheck {
        name: name.to_string(),
        passed: false,
        value: None,
        tolerance: None,
        detail,
    }
}

fn standard_vs_analytic() -> ValidationCheck {
    let name = "standard solver vs analytic, eps = 1";
    let basis = build_index_set(1);
    let k = [0.3, -0.7, 1.1];
    let want: Vec<f64> = analytic_omegas(1.0, &k, &basis)
        .into_iter()
        .flat_map(|(w, m)| std::iter::repeat_n(w, m))
        .take(12)
        .collect();
    match solve_standard(&k, &PermittivityModel::homogeneous(1.0), &basis, 12, 16) {
        Ok(modes) => {
            let err = modes
                .iter()
                .zip(&want)
                .map(|(m, w)| (m.omega - w).abs() / w)
                .fold(0.0, f64::max);
            numeric(name, err, 1e-10, format!("{} bands", modes.len()))
        }
        Err(e) => failed(name, e.to_string()),
    }
}

fn quadratic_vs_analytic() -> ValidationCheck {
    let name = "quadratic solver vs analytic roots, eps = 2";
    let basis = build_index_set(1);
    let split = match WaveVectorSplit::new([0.4, -0.3, 0.2], [0.0, 0.6, 0.8], 0.5) {
        Ok(s) => s,
        Err(e) => return failed(name, e.to_string()),
    };
    let model = PermittivityModel::homogeneous(2.0);
    let omega = 0.6;
    let opts = QuadraticOptions {
        nev: 0,
        method: EtaMethod::Dense,
        ..Default::default()
    };
    let sol = match QuadraticSolver::new(&model, &basis, opts).and_then(|s| s.solve(omega, &split)) {
        Ok(s) => s,
        Err(e) => return failed(name, e.to_string()),
    };
    let roots = analytic_etas(2.0, omega, &split, &basis);
    let err = roots
        .iter()
        .map(|(z, _)| {
            sol.pairs
                .iter()
                .filter(|p| p.accepted)
                .map(|p| (p.eta - z).norm() / z.norm().max(1.0))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let complex = roots.iter().filter(|(z, _)| z.im != 0.0).count();
    numeric(
        name,
        err,
        1e-8,
        format!("{} distinct roots, {complex} complex", roots.len()),
    )
}

fn arnoldi_vs_dense() -> ValidationCheck {
    let name = "Arnoldi vs dense QZ, rods order 1";
    let basis = build_index_set(1);
    let model = PermittivityModel::rods_with_air_fraction(13.0, 0.82);
    let split = match WaveVectorSplit::new([0.7, 0.2, -0.4], [0.6, 0.0, 0.8], 1.0) {
        Ok(s) => s,
        Err(e) => return failed(name, e.to_string()),
    };
    let opts = QuadraticOptions {
        nev: 8,
        method: EtaMethod::Arnoldi,
        shift: Complex64::new(0.2, 0.1),
        grid: 16,
        ..Default::default()
    };
    let result = QuadraticSolver::new(&model, &basis, opts)
        .and_then(|s| s.system(0.3, &split))
        .and_then(|sys| Ok((solve_system(&sys, &opts)?, sys)));
    let (pairs, sys) = match result {
        Ok(r) => r,
        Err(e) => return failed(name, e.to_string()),
    };
    let dense = match dense_generalized_eig(&sys.a, &sys.c, 1e-4) {
        Ok(d) => d,
        Err(e) => return failed(name, e.to_string()),
    };
    let finite: Vec<Complex64> = dense.iter().filter_map(|e| e.finite()).collect();
    let err = pairs
        .iter()
        .map(|p| {
            finite
                .iter()
                .map(|z| (p.eta - z).norm() / z.norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    numeric(name, err, 1e-8, format!("{} Ritz values", pairs.len()))
}

fn admissibility_cases() -> ValidationCheck {
    let name = "admissibility closed forms";
    let air = PermittivityModel::homogeneous(1.0);
    let cases = [
        ([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], PI, PI * PI),
        ([PI, 0.0, 0.0], [0.0, 1.0, 0.0], 0.0, PI * PI),
        ([PI, PI, 0.0], [0.0, 0.0, 1.0], 0.0, 2.0 * PI * PI),
    ];
    let mut ok = true;
    for (a0, ah, tau, bound) in cases {
        match WaveVectorSplit::new(a0, ah, tau) {
            Ok(split) => {
                ok &= min_gamma_sqr(&split.beta()).0 == bound;
                ok &= !check_admissibility(&split, bound.sqrt().next_up(), &air).ok;
                ok &= check_admissibility(&split, 1.0, &air).ok;
            }
            Err(_) => ok = false,
        }
    }
    ValidationCheck {
        name: name.to_string(),
        passed: ok,
        value: None,
        tolerance: None,
        detail: "cases a, b, c".into(),
    }
}

fn cross_consistency(model: &PermittivityModel, order: usize, opts: &QuadraticOptions) -> ValidationCheck {
    let name = "standard/quadratic round trip on the configured model";
    let model = if model.is_frequency_independent() {
        *model
    } else {
        model.frozen_at(0.0)
    };
    let basis = build_index_set(order);
    let mut opts = *opts;
    if opts.method == EtaMethod::Arnoldi {
        opts.nev = opts.nev.clamp(1, 8);
    }
    match cross_consistency_report(&model, &basis, &[0.5 * PI, 1.5 * PI], 2, &opts) {
        Ok(r) => numeric(
            name,
            r.max_deviation,
            1e-6,
            format!("order {order}, {} rows, model {}", r.rows.len(), model.label()),
        ),
        Err(e) => failed(name, e.to_string()),
    }
}

/// Runs every check; the round trip uses `model`, frozen at `ω = 0` when
/// it is dispersive.
pub fn run_validation(model: &PermittivityModel, order: usize, opts: &QuadraticOptions) -> ValidationVerdict {
    let checks = vec![
        standard_vs_analytic(),
        quadratic_vs_analytic(),
        arnoldi_vs_dense(),
        admissibility_cases(),
        cross_consistency(model, order, opts),
    ];
    ValidationVerdict {
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}
