//! TOML run configuration with defaults for every field.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use skyrme_core::model::{ModelKind, ModelParams};
use skyrme_core::similarity::{Perturbation, DATA_RADIUS};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub profile: ProfileConfig,
    pub rhs: RhsConfig,
    pub coeffs: CoeffsConfig,
    pub evolve: EvolveConfig,
    pub similarity: SimilarityConfig,
    pub shoot: ShootConfig,
    pub spectrum: SpectrumConfig,
    pub residual: ResidualConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub kind: ModelKind,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 1.0, lambda: 0.05, kind: ModelKind::Full }
    }
}

impl ModelConfig {
    pub fn params(&self) -> ModelParams {
        match self.kind {
            ModelKind::StrongField => ModelParams::strong_field(),
            kind => ModelParams { alpha: self.alpha, beta: self.beta, lambda: self.lambda, model: kind },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub d: u32,
    pub samples: usize,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self { d: 5, samples: 101 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RhsConfig {
    pub samples: usize,
    pub tol: f64,
}

impl Default for RhsConfig {
    fn default() -> Self {
        Self { samples: 81, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoeffsConfig {
    pub samples: usize,
    pub tol: f64,
}

impl Default for CoeffsConfig {
    fn default() -> Self {
        Self { samples: 225, tol: 1e-6 }
    }
}

/// Perturbation data, either explicit or drawn from a seeded generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationConfig {
    Zero,
    Gaussian { a1: f64, a2: f64, width: f64 },
    SymmetryMode { eps: f64 },
    /// Gaussian with amplitudes uniform in `[-amplitude, amplitude]` and width uniform in `[0.3, 0.8]`.
    Random { seed: u64, amplitude: f64 },
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig::Gaussian { a1: 1e-3, a2: 0.0, width: 0.5 }
    }
}

impl PerturbationConfig {
    pub fn synthesize(&self) -> Perturbation {
        match *self {
            PerturbationConfig::Zero => Perturbation::Zero,
            PerturbationConfig::Gaussian { a1, a2, width } => Perturbation::Gaussian { a1, a2, width },
            PerturbationConfig::SymmetryMode { eps } => Perturbation::SymmetryMode { eps },
            PerturbationConfig::Random { seed, amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a1 = amplitude * rng.random_range(-1.0..=1.0);
                let a2 = amplitude * rng.random_range(-1.0..=1.0);
                let width = rng.random_range(0.3..=0.8);
                Perturbation::Gaussian { a1, a2, width }
            }
        }
    }

    fn check(&self, path: &str) -> Result<(), CliError> {
        if let PerturbationConfig::Random { amplitude, .. } = *self {
            positive(&format!("{path}.amplitude"), amplitude)?;
        }
        self.synthesize().validate().map_err(|e| CliError::config(path, e))
    }
}

/// Physical evolution from the profile at blowup time 1 plus a perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub r_max: f64,
    pub n: usize,
    pub t_end: f64,
    pub cfl: f64,
    pub snapshot_stride: usize,
    /// Vertex of the shrinking active region; negative disables it.
    pub cone_vertex: f64,
    pub blowup_ceiling: f64,
    pub resolution_limit: f64,
    pub fit_fraction: f64,
    pub perturbation: PerturbationConfig,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            r_max: 1.0625,
            n: 2048,
            t_end: 1.0,
            cfl: 0.5,
            snapshot_stride: 256,
            cone_vertex: 1.0,
            blowup_ceiling: 1e4,
            resolution_limit: 0.1,
            fit_fraction: 0.5,
            perturbation: PerturbationConfig::Zero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilarityConfig {
    pub n: usize,
    pub t_blowup: f64,
    pub tau_end: f64,
    pub cfl: f64,
    pub output_stride: usize,
    /// Window of the exponential decay fit.
    pub fit_window: (f64, f64),
    pub perturbation: PerturbationConfig,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            n: 100,
            t_blowup: 1.0,
            tau_end: 6.0,
            cfl: 0.5,
            output_stride: 10,
            fit_window: (1.0, 6.0),
            perturbation: PerturbationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootConfig {
    pub bracket: (f64, f64),
    pub tol: f64,
    pub tau_horizon: f64,
    pub max_iterations: usize,
}

impl Default for ShootConfig {
    fn default() -> Self {
        Self { bracket: (0.9, 1.1), tol: 1e-12, tau_horizon: 6.0, max_iterations: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub n_coarse: usize,
    pub n_fine: usize,
    pub match_tol: f64,
    pub include_potential: bool,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { n_coarse: 128, n_fine: 192, match_tol: 1e-3, include_potential: true }
    }
}

/// Which exact solution the residual check is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResidualTarget {
    /// The self-similar solution sampled on a physical grid, in the strong-field equation.
    #[default]
    SelfSimilar,
    /// The zero perturbation in the similarity system at `λ = 0`, `T = 1`.
    Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidualConfig {
    pub target: ResidualTarget,
    pub sizes: Vec<usize>,
}

impl Default for ResidualConfig {
    fn default() -> Self {
        Self { target: ResidualTarget::SelfSimilar, sizes: vec![128, 256, 512] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub lambdas: Vec<f64>,
    /// Also fit the blowup exponent of a physical run at each `λ`.
    pub blowup_exponent: bool,
    /// Concurrent cells; 0 uses `--workers` or the available parallelism.
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { lambdas: vec![0.02, 0.04, 0.08], blowup_exponent: true, workers: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
}

fn positive(path: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::config(path, format!("must be positive and finite, got {v}")))
    }
}

fn at_least(path: &str, v: usize, min: usize) -> Result<(), CliError> {
    if v >= min {
        Ok(())
    } else {
        Err(CliError::config(path, format!("must be at least {min}, got {v}")))
    }
}

fn cfl(path: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(CliError::config(path, format!("must lie in (0, 1], got {v}")))
    }
}

fn window(path: &str, w: (f64, f64)) -> Result<(), CliError> {
    if w.0.is_finite() && w.1.is_finite() && w.0 >= 0.0 && w.0 < w.1 {
        Ok(())
    } else {
        Err(CliError::config(path, format!("must be an increasing pair of nonnegative numbers, got {w:?}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn validate_model(&self) -> Result<(), CliError> {
        let m = &self.model;
        for (name, v) in [("alpha", m.alpha), ("beta", m.beta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::config(&format!("model.{name}"), format!("must be finite and nonnegative, got {v}")));
            }
        }
        positive("model.lambda", m.lambda)?;
        self.model.params().validate().map_err(|e| CliError::config("model", e))
    }

    pub fn validate_profile(&self) -> Result<(), CliError> {
        if self.profile.d < 5 {
            return Err(CliError::config("profile.d", format!("must be at least 5, got {}", self.profile.d)));
        }
        at_least("profile.samples", self.profile.samples, 2)
    }

    pub fn validate_rhs(&self) -> Result<(), CliError> {
        at_least("rhs.samples", self.rhs.samples, 2)?;
        positive("rhs.tol", self.rhs.tol)
    }

    pub fn validate_coeffs(&self) -> Result<(), CliError> {
        at_least("coeffs.samples", self.coeffs.samples, 1)?;
        positive("coeffs.tol", self.coeffs.tol)
    }

    pub fn validate_evolve(&self) -> Result<(), CliError> {
        self.validate_model()?;
        let e = &self.evolve;
        positive("evolve.r_max", e.r_max)?;
        if e.r_max > DATA_RADIUS {
            return Err(CliError::config("evolve.r_max", format!("must not exceed {DATA_RADIUS}, got {}", e.r_max)));
        }
        at_least("evolve.n", e.n, 16)?;
        positive("evolve.t_end", e.t_end)?;
        cfl("evolve.cfl", e.cfl)?;
        at_least("evolve.snapshot_stride", e.snapshot_stride, 1)?;
        if !e.cone_vertex.is_finite() {
            return Err(CliError::config("evolve.cone_vertex", "must be finite"));
        }
        positive("evolve.blowup_ceiling", e.blowup_ceiling)?;
        positive("evolve.resolution_limit", e.resolution_limit)?;
        if !(e.fit_fraction > 0.0 && e.fit_fraction <= 1.0) {
            return Err(CliError::config("evolve.fit_fraction", format!("must lie in (0, 1], got {}", e.fit_fraction)));
        }
        e.perturbation.check("evolve.perturbation")
    }

    pub fn validate_similarity(&self) -> Result<(), CliError> {
        self.validate_model()?;
        let s = &self.similarity;
        at_least("similarity.n", s.n, 16)?;
        if !(0.5..=1.5).contains(&s.t_blowup) {
            return Err(CliError::config("similarity.t_blowup", format!("must lie in [0.5, 1.5], got {}", s.t_blowup)));
        }
        positive("similarity.tau_end", s.tau_end)?;
        cfl("similarity.cfl", s.cfl)?;
        at_least("similarity.output_stride", s.output_stride, 1)?;
        window("similarity.fit_window", s.fit_window)?;
        s.perturbation.check("similarity.perturbation")
    }

    pub fn validate_shoot(&self) -> Result<(), CliError> {
        self.validate_similarity()?;
        let s = &self.shoot;
        let (lo, hi) = s.bracket;
        if !(lo < hi && lo >= 0.8 && hi <= 1.2) {
            return Err(CliError::config("shoot.bracket", format!("must be increasing and inside [0.8, 1.2], got {:?}", s.bracket)));
        }
        positive("shoot.tol", s.tol)?;
        positive("shoot.tau_horizon", s.tau_horizon)?;
        at_least("shoot.max_iterations", s.max_iterations, 1)
    }

    pub fn validate_spectrum(&self) -> Result<(), CliError> {
        let s = &self.spectrum;
        at_least("spectrum.n_coarse", s.n_coarse, 32)?;
        if (s.n_fine as f64) < 1.5 * s.n_coarse as f64 {
            return Err(CliError::config("spectrum.n_fine", format!("must be at least 1.5 n_coarse, got {}", s.n_fine)));
        }
        positive("spectrum.match_tol", s.match_tol)
    }

    pub fn validate_residual(&self) -> Result<(), CliError> {
        if self.residual.sizes.is_empty() {
            return Err(CliError::config("residual.sizes", "must not be empty"));
        }
        for (i, &n) in self.residual.sizes.iter().enumerate() {
            at_least(&format!("residual.sizes[{i}]"), n, 16)?;
        }
        Ok(())
    }

    pub fn validate_sweep(&self) -> Result<(), CliError> {
        if self.sweep.lambdas.is_empty() {
            return Err(CliError::config("sweep.lambdas", "parameter grid is empty"));
        }
        for (i, &l) in self.sweep.lambdas.iter().enumerate() {
            positive(&format!("sweep.lambdas[{i}]"), l)?;
        }
        self.validate_shoot()?;
        if self.sweep.blowup_exponent {
            self.validate_evolve()?;
        }
        Ok(())
    }
}
