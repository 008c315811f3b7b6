use std::sync::Arc;

use ctrlcost::lowerbound::{complex_heat_norm, heat_window, witness, WitnessConfig};
use ctrlcost::observability::{cost_curve, highfreq_cost_curve, CostCurve};
use ctrlcost::precision::PrecisionContext;
use ctrlcost::product::{cylinder_boundary_cost, tensor_gramian_mineig, TensorSystem};
use ctrlcost::transmutation::{
    build_fundamental_solution, kernel_modes_for, transmute, two_stage_control, wave_hum_control, KernelControl,
    TwoStageOptions, WaveOptions,
};
use ctrlcost::window::{build_family, cross_window_decay, window_cost_bound, window_cost_curve, SpectralSequence};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{Command, ExperimentConfig, SequenceSpec};
use crate::CliError;

/// One CSV file: a name suffix, a header and rows.
pub struct Table {
    pub suffix: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(suffix: &'static str, header: &[&'static str]) -> Self {
        Table {
            suffix,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

pub struct Outcome {
    pub tables: Vec<Table>,
    pub results: Value,
    /// Values filled in during the run (seeded u0), written back into the manifest config.
    pub resolved: ExperimentConfig,
}

fn f(v: f64) -> String {
    format!("{v:e}")
}

fn curve_table(curve: &CostCurve) -> Table {
    let mut t = Table::new(
        "",
        &["T", "cost", "T_ln_cost", "cost_sqrt_T", "n_modes", "mantissa_bits"],
    );
    for s in &curve.samples {
        t.push(vec![
            f(s.horizon),
            f(s.cost),
            f(s.t_ln_cost),
            f(s.cost * s.horizon.sqrt()),
            s.n_modes.to_string(),
            s.mantissa_bits.to_string(),
        ]);
    }
    t
}

fn initial_data(cfg: &mut ExperimentConfig, n: usize, seed: u64) -> Vec<C64> {
    if cfg.u0.is_none() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        cfg.u0 = Some(
            (0..n)
                .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                .collect(),
        );
    }
    cfg.u0
        .as_ref()
        .unwrap()
        .iter()
        .map(|&[re, im]| C64::new(re, im))
        .collect()
}

pub fn run(cfg: &ExperimentConfig, ctx: &PrecisionContext, seed: u64) -> Result<Outcome, CliError> {
    let mut resolved = cfg.clone();
    resolved.mantissa_bits = Some(ctx.bits());
    let (tables, results) = match cfg.command {
        Command::Eigen => {
            let basis = cfg.problem()?.basis()?;
            let mut t = Table::new("", &["n", "eigenvalue", "frequency"]);
            for n in 1..=basis.len() {
                t.push(vec![n.to_string(), f(basis.eigenvalue(n)), f(basis.frequency(n))]);
            }
            let results = json!({
                "closed_form": basis.is_closed_form(),
                "orthonormality_defect": basis.orthonormality_defect(),
                "asymptotic_residual": basis.asymptotic_residual(),
                "weighted_length": basis.weighted_length(),
                "shift_index": basis.shift_index(),
            });
            (vec![t], results)
        }
        Command::CostCurve | Command::Highfreq => {
            let basis = Arc::new(cfg.problem()?.basis()?);
            let obs = cfg.observation(basis)?;
            let curve = if cfg.command == Command::CostCurve {
                cost_curve(&obs, cfg.t_grid()?, cfg.c.unwrap_or(8.0), ctx)?
            } else {
                highfreq_cost_curve(&obs, cfg.positive(cfg.d, "d")?, cfg.t_grid()?, ctx)?
            };
            let scaled = curve.scaled_costs();
            let spread =
                scaled.iter().cloned().fold(0.0, f64::max) / scaled.iter().cloned().fold(f64::INFINITY, f64::min);
            let results = json!({ "fitted_rate": curve.fitted_rate, "cost_sqrt_T_spread": spread });
            (vec![curve_table(&curve)], results)
        }
        Command::WindowBuild => {
            let window = cfg.window()?;
            let seq = match cfg.sequence.unwrap() {
                SequenceSpec::Squares => SpectralSequence::squares(window.max() + 8),
                SequenceSpec::HalfSquares => SpectralSequence::half_squares(window.max() + 8),
                SequenceSpec::Problem => {
                    let basis = cfg.problem()?.basis()?;
                    SpectralSequence::from_basis(&basis, basis.len())?
                }
            };
            let eps = cfg.epsilon()?;
            let fam = build_family(&seq, cfg.horizon()?, &window, eps, ctx)?;
            let mut t = Table::new("residuals", &["n", "k", "residual"]);
            for (i, row) in fam.residuals.iter().enumerate() {
                for (k, r) in row.iter().enumerate() {
                    t.push(vec![
                        window.modes()[i].to_string(),
                        window.modes()[k].to_string(),
                        f(*r),
                    ]);
                }
            }
            let mut tables = vec![t];
            let decay = cross_window_decay(&fam);
            let mut results = json!({
                "family": fam.manifest(),
                "residual": fam.max_residual,
                "window_cost_bound": window_cost_bound(&fam),
                "cross_window_decay": decay,
            });
            if cfg.t_grid.is_some() {
                let curve = window_cost_curve(&seq, cfg.t_grid()?, &window, eps, ctx)?;
                let mut c = Table::new(
                    "curve",
                    &["T", "cost_bound", "T_ln_cost", "max_residual", "working_bits"],
                );
                for s in &curve.samples {
                    c.push(vec![
                        f(s.horizon),
                        f(s.cost),
                        f(s.t_ln_cost),
                        f(s.max_residual),
                        s.working_bits.to_string(),
                    ]);
                }
                tables.push(c);
                results["exponent_fit"] = json!(curve.fit);
            }
            (tables, results)
        }
        Command::Transmute => {
            let basis = Arc::new(cfg.problem()?.basis()?);
            let obs = cfg.observation(basis)?;
            let window = cfg.window()?;
            let u0 = initial_data(&mut resolved, window.len(), seed);
            let big_s = cfg.positive(cfg.wave_time, "wave_time")?;
            let zero = vec![C64::new(0.0, 0.0); u0.len()];
            let wave = wave_hum_control(
                &obs,
                big_s,
                (&u0, &zero),
                (&zero, &zero),
                &window,
                &WaveOptions::default(),
                ctx,
            )?;
            let modes = cfg.kernel_modes.unwrap_or_else(|| kernel_modes_for(&wave));
            let kernel_kind = cfg.kernel.unwrap_or(KernelControl::Hum);
            let kernel = build_fundamental_solution(big_s, cfg.horizon()?, modes, cfg.epsilon()?, kernel_kind, ctx)?;
            let tc = transmute(&kernel, &wave)?;
            let mut t = Table::new("trajectory", &["t", "mode", "re_u", "im_u", "re_g", "im_g"]);
            let samples = cfg.samples()?;
            for i in 0..samples {
                let time = tc.horizon * i as f64 / (samples - 1) as f64;
                let (u, g) = (tc.state_at(time), tc.modal_control(time));
                for (k, &m) in window.modes().iter().enumerate() {
                    t.push(vec![
                        f(time),
                        m.to_string(),
                        f(u[k].re),
                        f(u[k].im),
                        f(g[k].re),
                        f(g[k].im),
                    ]);
                }
            }
            let results = json!({
                "kernel_modes": modes,
                "kernel_cost_pair": kernel.cost_pair,
                "control_norm": tc.control_norm,
                "kernel_norm": tc.kernel_norm,
                "wave_norm": tc.wave_norm,
                "chain_bound": tc.chain_bound(),
                "chain_holds": tc.control_norm <= tc.chain_bound(),
                "initial_defect": tc.initial_defect,
                "steering_residual": tc.steering_residual,
                "pde_residual": tc.pde_residual,
                "wave_target_residual": wave.target_residual,
            });
            (vec![t], results)
        }
        Command::TwoStage => {
            let basis = Arc::new(cfg.problem()?.basis()?);
            let obs = cfg.observation(basis)?;
            let window = cfg.window()?;
            let u0 = initial_data(&mut resolved, window.len(), seed);
            let defaults = TwoStageOptions::default();
            let options = TwoStageOptions {
                eps_split: cfg.eps_split.unwrap_or(defaults.eps_split),
                smoothing_d: cfg.smoothing_d,
                wave_time: cfg.wave_time,
                kernel_modes: cfg.kernel_modes,
                kernel: cfg.kernel.unwrap_or(defaults.kernel),
                window_eps: cfg.epsilon()?,
                ..defaults
            };
            let horizon = cfg.horizon()?;
            let r = two_stage_control(&obs, &u0, &window, horizon, &options, ctx)?;
            let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let mut t = Table::new(
                "stages",
                &["stage", "t_start", "t_end", "control_norm", "state_norm_end"],
            );
            t.push(vec![
                "smoothing".into(),
                f(0.0),
                f(r.split_time),
                f(r.stage1_norm),
                f(norm(&r.intermediate)),
            ]);
            t.push(vec![
                "transmuted".into(),
                f(r.split_time),
                f(horizon),
                f(r.stage2.control_norm),
                f(norm(&r.final_state)),
            ]);
            let results = json!({
                "high_modes": r.high_modes,
                "wave_time": r.wave.control_time,
                "kernel_modes": r.kernel.len(),
                "stage1_norm": r.stage1_norm,
                "stage2_norm": r.stage2.control_norm,
                "stage2_chain_bound": r.stage2.chain_bound(),
                "total_norm": r.total_norm,
                "cost": r.cost,
                "steering_residual": r.steering_residual,
            });
            (vec![t], results)
        }
        Command::LowerBound => {
            let basis = Arc::new(cfg.problem()?.basis()?);
            let obs = cfg.observation(basis.clone())?;
            let wc = WitnessConfig::new(obs.clone(), cfg.positive(cfg.y, "y")?, cfg.positive(cfg.d, "d")?)?;
            let mut t = Table::new("", &["T", "R", "T_ln_R", "window_cost", "n_modes"]);
            let mut below = true;
            for &time in cfg.t_grid()? {
                let w = witness(&wc, time, ctx)?;
                let cost = w.window_cost(ctx)?;
                below &= w.ratio <= cost;
                t.push(vec![
                    f(time),
                    f(w.ratio),
                    f(time * w.ratio.ln()),
                    f(cost),
                    w.window.len().to_string(),
                ]);
            }
            let dist = wc.distance();
            let mut tables = vec![t];
            let mut results = json!({ "distance": dist, "ratio_below_cost": below });
            if let Some(times) = &cfg.heat_times {
                let mut h = Table::new("heat", &["t", "norm", "ratio", "tail"]);
                let mut ratios = Vec::new();
                for &s in times {
                    let win = heat_window(&basis, s)?;
                    let hn = complex_heat_norm(&obs, wc.y, C64::new(s, s), &win, ctx)?;
                    let ratio = hn.value * (dist * dist / (8.0 * s)).exp();
                    ratios.push(ratio);
                    h.push(vec![f(s), f(hn.value), f(ratio), f(hn.tail)]);
                }
                let spread =
                    ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
                results["heat_ratio_spread"] = json!(spread);
                tables.push(h);
            }
            (tables, results)
        }
        Command::ProductCheck => {
            let basis = Arc::new(cfg.problem()?.basis()?);
            let sys = TensorSystem::new(cfg.observation(basis)?, cfg.companion.clone().unwrap())?;
            let window = cfg.window()?;
            let mut t = Table::new("", &["T", "tensor_min", "factor_min", "rel_diff"]);
            let mut worst = 0.0f64;
            for &time in cfg.t_grid()? {
                let r = tensor_gramian_mineig(&sys, time, &window, sys.companion.len(), ctx)?;
                worst = worst.max(r.relative_gap);
                t.push(vec![f(time), f(r.tensor_min), f(r.factor_min), f(r.relative_gap)]);
            }
            (vec![t], json!({ "max_rel_diff": worst }))
        }
        Command::Cylinder => {
            let prob = cfg.problem()?.operator()?;
            let window = cfg.window()?;
            let companion = cfg.companion.clone().unwrap();
            let mut t = Table::new("", &["T", "tensor_cost", "factor_cost", "rel_diff", "order"]);
            let mut worst = 0.0f64;
            for &time in cfg.t_grid()? {
                let r = cylinder_boundary_cost(&prob, &companion, time, &window, ctx)?;
                worst = worst.max(r.relative_gap);
                t.push(vec![
                    f(time),
                    f(r.tensor_cost),
                    f(r.factor_cost),
                    f(r.relative_gap),
                    r.order.to_string(),
                ]);
            }
            (vec![t], json!({ "max_rel_diff": worst }))
        }
    };
    Ok(Outcome {
        tables,
        results,
        resolved,
    })
}
