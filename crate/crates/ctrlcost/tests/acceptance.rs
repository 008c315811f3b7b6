//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use ctrlcost::lowerbound::{complex_heat_norm, distance_to_omega, heat_window, witness, WitnessConfig};
use ctrlcost::observability::{cost_curve, highfreq_cost_curve, ModeWindow, ObservationDescriptor};
use ctrlcost::product::{cylinder_boundary_cost, tensor_gramian_mineig, TensorSystem};
use ctrlcost::spectral::{dirichlet_laplacian_basis, Endpoint, SturmLiouvilleProblem};
use ctrlcost::transmutation::{
    build_fundamental_solution, kernel_modes_for, transmute, wave_hum_control, KernelControl, WaveOptions,
};
use ctrlcost::window::{build_family, window_cost_curve, SpectralSequence, ALPHA_STAR, RESIDUAL_TOLERANCE};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

mod common;

use common::*;

type Check = ctrlcost::Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Check);

fn biorthogonality() -> Check {
    let fam = build_family(
        &SpectralSequence::squares(20),
        1.0,
        &ModeWindow::range(1, 20)?,
        0.3,
        &ctx(256),
    )?;
    let ok = fam.max_residual <= RESIDUAL_TOLERANCE;
    Ok((
        ok,
        format!("max residual {:.2e} (≤ {RESIDUAL_TOLERANCE:e})", fam.max_residual),
    ))
}

fn window_exponent() -> Check {
    let eps = 0.3;
    let curve = window_cost_curve(
        &SpectralSequence::squares(20),
        &[1.0, 0.7, 0.5, 0.35],
        &ModeWindow::range(1, 20)?,
        eps,
        &ctx(256),
    )?;
    let bound = ALPHA_STAR * (PI + 2f64.sqrt() * eps).powi(2) * 2.0 * 1.25;
    let worst = curve.samples.iter().map(|s| s.max_residual).fold(0.0, f64::max);
    let ok = curve.fit.exponent <= bound && worst <= RESIDUAL_TOLERANCE;
    Ok((
        ok,
        format!(
            "fitted exponent {:.3} (≤ {bound:.3}), worst residual {worst:.1e}",
            curve.fit.exponent
        ),
    ))
}

fn boundary_rate() -> Check {
    let basis = Arc::new(dirichlet_laplacian_basis(PI, 60, 201)?);
    let obs = ObservationDescriptor::boundary(basis, Endpoint::Right, 1)?;
    let curve = cost_curve(&obs, &[0.6, 0.45, 0.34, 0.25, 0.19], 8.0, &ctx(256))?;
    let (lo, hi) = (0.8 * PI * PI / 8.0, 1.25 * ALPHA_STAR * PI * PI);
    let rates: Vec<f64> = curve.samples[3..].iter().map(|s| s.t_ln_cost).collect();
    let ok = rates.iter().all(|r| (lo..=hi).contains(r));
    Ok((
        ok,
        format!(
            "T·ln C = {:.3}, {:.3} on T = 0.25, 0.19 (in [{lo:.3}, {hi:.3}])",
            rates[0], rates[1]
        ),
    ))
}

fn lower_bound_witness() -> Check {
    let basis = Arc::new(dirichlet_laplacian_basis(1.0, 40, 201)?);
    let obs = ObservationDescriptor::interior(basis, vec![(0.7, 1.0)])?;
    let d = 0.55;
    let cfg = WitnessConfig::new(obs, 0.1, d)?;
    let floor = 0.8 * d * d / 4.0;
    let c = ctx(256);
    let mut ok = true;
    let mut parts = Vec::new();
    for t in [0.05, 0.035, 0.025] {
        let w = witness(&cfg, t, &c)?;
        let cost = w.window_cost(&c)?;
        let rate = t * w.ratio.ln();
        ok &= rate >= floor && w.ratio <= cost;
        parts.push(format!("T = {t}: T·ln R = {rate:.3}, R/cost = {:.3}", w.ratio / cost));
    }
    Ok((ok, format!("{} (T·ln R ≥ {floor:.4})", parts.join("; "))))
}

fn complex_heat() -> Check {
    let basis = Arc::new(dirichlet_laplacian_basis(1.0, 40, 201)?);
    let obs = ObservationDescriptor::interior(basis.clone(), vec![(0.7, 1.0)])?;
    let y = 0.1;
    let d = distance_to_omega(&obs, y)?;
    let c = ctx(256);
    let mut ratios = Vec::new();
    for t in [0.02, 0.01, 0.005] {
        let norm = complex_heat_norm(&obs, y, C64::new(t, t), &heat_window(&basis, t)?, &c)?;
        ratios.push(norm.value / (-d * d / (8.0 * t)).exp());
    }
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3e}")).collect();
    Ok((
        spread <= 2.0,
        format!("ratios {} at d = {d}, max/min {spread:.3} (≤ 2)", shown.join(", ")),
    ))
}

fn transmutation() -> Check {
    let basis = Arc::new(dirichlet_laplacian_basis(1.0, 12, 201)?);
    let obs = ObservationDescriptor::interior(basis, vec![(0.4, 1.0)])?;
    let win = ModeWindow::range(1, 8)?;
    let c = ctx(256);
    let u0: Vec<C64> = (0..8)
        .map(|k| C64::new((0.7 * k as f64 + 0.2).cos(), (1.3 * k as f64).sin()))
        .collect();
    let zero = vec![C64::new(0.0, 0.0); 8];
    let wave = wave_hum_control(
        &obs,
        2.2,
        (&u0, &zero),
        (&zero, &zero),
        &win,
        &WaveOptions::default(),
        &c,
    )?;
    let kernel = build_fundamental_solution(2.2, 0.3, kernel_modes_for(&wave), 0.3, KernelControl::Hum, &c)?;
    let tc = transmute(&kernel, &wave)?;
    let ok = tc.steering_residual <= 1e-5 && tc.pde_residual <= 1e-4 && tc.control_norm <= tc.chain_bound();
    Ok((
        ok,
        format!(
            "steering {:.1e} (≤ 1e-5), PDE {:.1e} (≤ 1e-4), ‖g‖ = {:.4e} ≤ ‖v‖·‖f‖ = {:.4e}",
            tc.steering_residual,
            tc.pde_residual,
            tc.control_norm,
            tc.chain_bound()
        ),
    ))
}

fn tensor_equality() -> Check {
    let basis = Arc::new(dirichlet_laplacian_basis(PI, 20, 201)?);
    let obs = ObservationDescriptor::interior(basis, vec![(0.3, PI)])?;
    let companion = vec![1.0, 4.0, 9.0];
    let win = ModeWindow::range(1, 10)?;
    let c = ctx(256);
    let interior = tensor_gramian_mineig(&TensorSystem::new(obs, companion.clone())?, 0.5, &win, 3, &c)?;
    let cylinder = cylinder_boundary_cost(&SturmLiouvilleProblem::dirichlet(PI), &companion, 0.5, &win, &c)?;
    let ok = interior.relative_gap <= 1e-10 && cylinder.relative_gap <= 1e-10;
    Ok((
        ok,
        format!(
            "interior gap {:.1e}, cylinder gap {:.1e} (≤ 1e-10)",
            interior.relative_gap, cylinder.relative_gap
        ),
    ))
}

fn high_frequency() -> Check {
    let basis = Arc::new(dirichlet_laplacian_basis(PI, 85, 201)?);
    let obs = ObservationDescriptor::interior(basis, vec![(0.3, PI)])?;
    let curve = highfreq_cost_curve(&obs, 2.0, &[0.8, 0.4, 0.2, 0.1], &ctx(256))?;
    let scaled = curve.scaled_costs();
    let spread = scaled.iter().cloned().fold(0.0, f64::max) / scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let shown: Vec<String> = scaled.iter().map(|s| format!("{s:.4}")).collect();
    Ok((
        spread <= 3.0,
        format!("cost·√T = {}, max/min {spread:.3} (≤ 3)", shown.join(", ")),
    ))
}

fn infrastructure() -> Check {
    let runner = || {
        TestRunner::new(Config {
            cases: 50,
            failure_persistence: None,
            ..Config::default()
        })
    };
    let mut failures = Vec::new();
    let mut record = |name: &str, r: Result<(), String>| {
        if let Err(e) = r {
            failures.push(format!("{name}: {e}"));
        }
    };
    record(
        "eigen round trip",
        runner()
            .run(&(2usize..8, prop::collection::vec(-1.0f64..1.0, 128)), |(n, raw)| {
                eigen_round_trip(n, &raw)
            })
            .map_err(|e| e.to_string()),
    );
    record(
        "polynomial exactness",
        runner()
            .run(&(2usize..12, prop::collection::vec(-2.0f64..2.0, 24)), |(n, c)| {
                polynomial_exactness(n, &c)
            })
            .map_err(|e| e.to_string()),
    );
    record(
        "monotone in T",
        runner()
            .run(&(0.2f64..1.0, 0.01f64..0.8, omega_pair()), |(t, dt, (om, _))| {
                monotone_in_horizon(t, dt, om)
            })
            .map_err(|e| e.to_string()),
    );
    record(
        "monotone in Ω",
        runner()
            .run(&(0.2f64..1.5, omega_pair()), |(t, (s, l))| monotone_in_omega(t, s, l))
            .map_err(|e| e.to_string()),
    );
    let ok = failures.is_empty();
    let detail = if ok {
        "eigen round trip ≤ 2^-200, polynomial exactness, Gramian monotone in T and Ω: 50 cases each".to_string()
    } else {
        failures.join("; ")
    };
    Ok((ok, detail))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("biorthogonality", biorthogonality),
        ("window cost exponent", window_exponent),
        ("boundary rate bracket", boundary_rate),
        ("lower-bound witness", lower_bound_witness),
        ("complex-heat estimate", complex_heat),
        ("transmutation end-to-end", transmutation),
        ("tensor equality", tensor_equality),
        ("high-frequency boundedness", high_frequency),
        ("infrastructure properties", infrastructure),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {} {name}: {} ({secs:.1} s) {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
        failed += usize::from(!ok);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
