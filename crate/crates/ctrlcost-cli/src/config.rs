use std::path::PathBuf;
use std::sync::Arc;

use ctrlcost::observability::{ModeWindow, ObservationDescriptor, ObservationKind};
use ctrlcost::spectral::{
    dirichlet_laplacian_basis, solve_sturm_liouville, Coefficient, SpectralBasis, SturmLiouvilleProblem,
};
use ctrlcost::transmutation::KernelControl;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Eigen,
    CostCurve,
    Highfreq,
    WindowBuild,
    Transmute,
    TwoStage,
    LowerBound,
    ProductCheck,
    Cylinder,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eigen => "eigen",
            Command::CostCurve => "cost-curve",
            Command::Highfreq => "highfreq",
            Command::WindowBuild => "window-build",
            Command::Transmute => "transmute",
            Command::TwoStage => "two-stage",
            Command::LowerBound => "lower-bound",
            Command::ProductCheck => "product-check",
            Command::Cylinder => "cylinder",
        }
    }
}

/// Coefficients and boundary rows (a, b) of a Sturm–Liouville operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub p: Coefficient,
    pub q: Coefficient,
    pub left: [f64; 2],
    pub right: [f64; 2],
}

/// The segment [0, length]; without `coefficients` it carries the Dirichlet Laplacian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub length: f64,
    pub modes: usize,
    pub grid_points: Option<usize>,
    pub coefficients: Option<Coefficients>,
}

impl ProblemSpec {
    fn grid(&self) -> usize {
        self.grid_points.unwrap_or((16 * self.modes + 1).max(401))
    }

    pub fn operator(&self) -> Result<SturmLiouvilleProblem, CliError> {
        match &self.coefficients {
            None => Ok(SturmLiouvilleProblem::dirichlet(self.length)),
            Some(c) => Ok(SturmLiouvilleProblem::new(
                self.length,
                c.p.clone(),
                c.q.clone(),
                (c.left[0], c.left[1]),
                (c.right[0], c.right[1]),
            )?),
        }
    }

    pub fn basis(&self) -> Result<SpectralBasis, CliError> {
        match &self.coefficients {
            None => Ok(dirichlet_laplacian_basis(self.length, self.modes, self.grid())?),
            Some(_) => Ok(solve_sturm_liouville(&self.operator()?, self.modes, self.grid())?),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(CliError::field("problem.length", "must be positive"));
        }
        if self.modes == 0 {
            return Err(CliError::field("problem.modes", "need at least one mode"));
        }
        if self.grid_points.is_some_and(|g| g < 3) {
            return Err(CliError::field("problem.grid_points", "need at least three points"));
        }
        self.operator()?.validate()?;
        Ok(())
    }
}

/// Eigenvalue sequence for `window-build`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceSpec {
    Squares,
    HalfSquares,
    /// Normalised eigenvalues of `problem`.
    Problem,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub mantissa_bits: Option<u32>,
    pub output: Option<PathBuf>,
    pub problem: Option<ProblemSpec>,
    pub observation: Option<ObservationKind>,
    pub t_grid: Option<Vec<f64>>,
    pub horizon: Option<f64>,
    /// Mode window [lo, hi], inclusive.
    pub window: Option<[usize; 2]>,
    /// Cost-curve windows ω ≤ c/T.
    pub c: Option<f64>,
    pub d: Option<f64>,
    pub y: Option<f64>,
    pub epsilon: Option<f64>,
    pub sequence: Option<SequenceSpec>,
    pub wave_time: Option<f64>,
    pub kernel: Option<KernelControl>,
    pub kernel_modes: Option<usize>,
    pub eps_split: Option<f64>,
    pub smoothing_d: Option<f64>,
    /// Initial coefficients as [re, im] pairs; drawn from the seed when absent.
    pub u0: Option<Vec<[f64; 2]>>,
    pub companion: Option<Vec<f64>>,
    /// t for the complex-heat probe at z = t(1 + i).
    pub heat_times: Option<Vec<f64>>,
    /// Time samples in trajectory exports.
    pub samples: Option<usize>,
}

fn need<'a, T>(v: &'a Option<T>, field: &str) -> Result<&'a T, CliError> {
    v.as_ref()
        .ok_or_else(|| CliError::field(field, "required by this command"))
}

fn positive(v: f64, field: &str) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::field(field, format!("{v} is not positive")))
    }
}

impl ExperimentConfig {
    pub fn problem(&self) -> Result<&ProblemSpec, CliError> {
        need(&self.problem, "problem")
    }

    pub fn observation(&self, basis: Arc<SpectralBasis>) -> Result<ObservationDescriptor, CliError> {
        Ok(ObservationDescriptor::new(
            need(&self.observation, "observation")?.clone(),
            basis,
        )?)
    }

    pub fn t_grid(&self) -> Result<&[f64], CliError> {
        let g = need(&self.t_grid, "t_grid")?;
        if g.is_empty() {
            return Err(CliError::field("t_grid", "empty"));
        }
        for &t in g {
            positive(t, "t_grid")?;
        }
        if g.windows(2).any(|w| w[1] >= w[0]) {
            return Err(CliError::field("t_grid", "times must decrease strictly"));
        }
        Ok(g)
    }

    pub fn horizon(&self) -> Result<f64, CliError> {
        positive(*need(&self.horizon, "horizon")?, "horizon")
    }

    pub fn window(&self) -> Result<ModeWindow, CliError> {
        let [lo, hi] = *need(&self.window, "window")?;
        ModeWindow::range(lo, hi).map_err(|e| CliError::field("window", e.to_string()))
    }

    pub fn positive(&self, v: Option<f64>, field: &str) -> Result<f64, CliError> {
        positive(*need(&v, field)?, field)
    }

    pub fn epsilon(&self) -> Result<f64, CliError> {
        positive(self.epsilon.unwrap_or(0.3), "epsilon")
    }

    pub fn samples(&self) -> Result<usize, CliError> {
        match self.samples.unwrap_or(101) {
            n if n >= 2 => Ok(n),
            n => Err(CliError::field("samples", format!("{n} < 2"))),
        }
    }

    fn check_observation(&self) -> Result<(), CliError> {
        let p = self.problem()?;
        // a one-mode closed-form basis is enough to check Ω against the segment
        let probe = dirichlet_laplacian_basis(p.length, 1, 3)?;
        self.observation(Arc::new(probe))?;
        Ok(())
    }

    fn check_window_fits(&self) -> Result<(), CliError> {
        let w = self.window()?;
        let modes = self.problem()?.modes;
        if w.max() > modes {
            return Err(CliError::field(
                "window",
                format!("mode {} exceeds problem.modes = {modes}", w.max()),
            ));
        }
        Ok(())
    }

    /// Presence and range checks for everything `command` will read.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(bits) = self.mantissa_bits {
            if !(64..=4096).contains(&bits) {
                return Err(CliError::field("mantissa_bits", format!("{bits} outside 64..=4096")));
            }
        }
        if let Some(p) = &self.problem {
            p.validate()?;
        }
        match self.command {
            Command::Eigen => {
                self.problem()?;
            }
            Command::CostCurve => {
                self.check_observation()?;
                self.t_grid()?;
                positive(self.c.unwrap_or(8.0), "c")?;
            }
            Command::Highfreq => {
                self.check_observation()?;
                self.t_grid()?;
                self.positive(self.d, "d")?;
            }
            Command::WindowBuild => {
                self.horizon()?;
                self.window()?;
                self.epsilon()?;
                if need(&self.sequence, "sequence")? == &SequenceSpec::Problem {
                    self.check_window_fits()?;
                }
                if self.t_grid.is_some() {
                    self.t_grid()?;
                }
            }
            Command::Transmute | Command::TwoStage => {
                self.check_observation()?;
                if !matches!(self.observation, Some(ObservationKind::Interior { .. })) {
                    return Err(CliError::field("observation", "needs interior observation"));
                }
                self.horizon()?;
                self.check_window_fits()?;
                self.samples()?;
                if let Some(s) = self.wave_time {
                    positive(s, "wave_time")?;
                }
                if let Some(u0) = &self.u0 {
                    if u0.len() != self.window()?.len() {
                        return Err(CliError::field(
                            "u0",
                            format!("{} values for a window of {}", u0.len(), self.window()?.len()),
                        ));
                    }
                    if u0.iter().flatten().any(|v| !v.is_finite()) {
                        return Err(CliError::field("u0", "values must be finite"));
                    }
                }
                if self.command == Command::Transmute {
                    need(&self.wave_time, "wave_time")?;
                }
                if let Some(e) = self.eps_split {
                    if !(e > 0.0 && e < 1.0) {
                        return Err(CliError::field("eps_split", format!("{e} is not in (0, 1)")));
                    }
                }
            }
            Command::LowerBound => {
                self.check_observation()?;
                self.t_grid()?;
                self.positive(self.y, "y")?;
                self.positive(self.d, "d")?;
                if let Some(ts) = &self.heat_times {
                    for &t in ts {
                        positive(t, "heat_times")?;
                    }
                }
            }
            Command::ProductCheck => {
                self.check_observation()?;
                self.t_grid()?;
                self.check_window_fits()?;
                let c = need(&self.companion, "companion")?;
                if c.is_empty() || c.iter().any(|b| !b.is_finite()) {
                    return Err(CliError::field("companion", "need a nonempty list of finite reals"));
                }
            }
            Command::Cylinder => {
                self.problem()?;
                self.t_grid()?;
                self.window()?;
                let c = need(&self.companion, "companion")?;
                if c.is_empty() || c.iter().any(|b| !b.is_finite()) {
                    return Err(CliError::field("companion", "need a nonempty list of finite reals"));
                }
            }
        }
        Ok(())
    }
}
