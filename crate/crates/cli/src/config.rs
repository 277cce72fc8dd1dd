//! Experiment configuration (TOML). Unknown keys are rejected.

use serde::Deserialize;

use seminorm_bounds::{
    default_horizon, BoundConfig, DecayModel, EigenSystem, RhoMode, SamplingOperator, SparsePeriodicParams, TailMethod,
    ZetaSequence,
};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub eigensystem: EigenConfig,
    #[serde(default)]
    pub operator: Option<OperatorConfig>,
    #[serde(default)]
    pub bound: BoundSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub psi: PsiSection,
    #[serde(default)]
    pub figures: FiguresSection,
    #[serde(default)]
    pub critical_radius: CriticalRadiusSection,
    #[serde(default)]
    pub random: RandomSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DecayConfig {
    Polynomial {
        #[serde(default = "one")]
        c: f64,
        alpha: f64,
    },
    Exponential {
        #[serde(default = "one")]
        c: f64,
        rho: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl DecayConfig {
    fn model(&self) -> DecayModel<f64> {
        match *self {
            DecayConfig::Polynomial { c, alpha } => DecayModel::Polynomial { c, alpha },
            DecayConfig::Exponential { c, rho } => DecayModel::Exponential { c, rho },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EigenConfig {
    Sobolev,
    Polynomial {
        #[serde(default = "one")]
        c: f64,
        alpha: f64,
    },
    Exponential {
        #[serde(default = "one")]
        c: f64,
        rho: f64,
    },
    /// `ζ_k` given by an explicit prefix and a decay continuation.
    FourierZeta {
        #[serde(default)]
        zeta: Vec<f64>,
        decay: DecayConfig,
    },
    Explicit {
        values: Vec<f64>,
        tail: DecayConfig,
    },
}

impl EigenConfig {
    pub fn build(&self) -> Result<EigenSystem<f64>, CliError> {
        let sys = match self {
            EigenConfig::Sobolev => Ok(EigenSystem::sobolev()),
            EigenConfig::Polynomial { c, alpha } => EigenSystem::polynomial(*c, *alpha),
            EigenConfig::Exponential { c, rho } => EigenSystem::exponential(*c, *rho),
            EigenConfig::FourierZeta { zeta, decay } => {
                EigenSystem::fourier_zeta(ZetaSequence { prefix: zeta.clone(), decay: decay.model() })
            }
            EigenConfig::Explicit { values, tail } => EigenSystem::explicit(values.clone(), tail.model()),
        };
        sys.map_err(|e| CliError::config("eigensystem", e))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    FourierTruncation { n: usize },
    UniformGrid { n: usize },
    DomainSampling { points: Vec<f64> },
    WeightedDomainSampling { points: Vec<f64>, weights: Vec<f64> },
    RandomIid { n: usize, seed: u64 },
}

impl OperatorConfig {
    pub fn build(&self, seed_override: Option<u64>) -> Result<SamplingOperator<f64>, CliError> {
        let op = match self {
            OperatorConfig::FourierTruncation { n } => SamplingOperator::fourier_truncation(*n),
            OperatorConfig::UniformGrid { n } => SamplingOperator::uniform_grid(*n),
            OperatorConfig::DomainSampling { points } => SamplingOperator::domain_sampling(points.clone()),
            OperatorConfig::WeightedDomainSampling { points, weights } => {
                SamplingOperator::weighted(points.clone(), weights.clone())
            }
            OperatorConfig::RandomIid { n, seed } => SamplingOperator::random_iid(*n, seed_override.unwrap_or(*seed)),
        };
        op.map_err(|e| CliError::config("operator", e))
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            OperatorConfig::RandomIid { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

/// `ε` values, given either directly or as an `ε²` grid.
#[derive(Debug, Clone, Default)]
pub struct EpsGrid {
    pub epsilon: Vec<f64>,
    pub eps2: Vec<f64>,
    pub eps2_linspace: Option<(f64, f64, usize)>,
}

impl EpsGrid {
    pub fn values(&self, section: &str) -> Result<Vec<f64>, CliError> {
        let mut out: Vec<f64> = self.epsilon.clone();
        out.extend(self.eps2.iter().map(|e2| e2.sqrt()));
        if let Some((a, b, n)) = self.eps2_linspace {
            for i in 0..n {
                let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                out.push((a + (b - a) * t).sqrt());
            }
        }
        if let Some(bad) = out.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(CliError::Config(format!("{section}: epsilon values must be finite and >= 0 (got {bad})")));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethodConfig {
    Trace,
    Linf,
    Block,
    TruncatedEig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKindConfig {
    Strong,
    Weak,
    FourierExact,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    #[serde(default)]
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub eps2: Vec<f64>,
    /// `[start, stop, count]` for an inclusive linear `ε²` grid.
    #[serde(default)]
    pub eps2_linspace: Option<(f64, f64, usize)>,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<BoundKindConfig>,
    #[serde(default)]
    pub p_candidates: Option<Vec<usize>>,
    /// Truncation for the weak bound; defaults to the operator dimension.
    #[serde(default)]
    pub weak_p: Option<usize>,
    #[serde(default)]
    pub tail_method: Option<TailMethodConfig>,
    #[serde(default)]
    pub block_size: Option<usize>,
    #[serde(default)]
    pub horizon: Option<usize>,
    /// Fixed `ρ²`; absent means the optimized split.
    #[serde(default)]
    pub rho2: Option<f64>,
    #[serde(default)]
    pub t_tol: Option<f64>,
}

fn default_kinds() -> Vec<BoundKindConfig> {
    vec![BoundKindConfig::Strong, BoundKindConfig::Weak]
}

impl Default for BoundSection {
    fn default() -> Self {
        BoundSection {
            epsilon: Vec::new(),
            eps2: Vec::new(),
            eps2_linspace: None,
            kinds: default_kinds(),
            p_candidates: None,
            weak_p: None,
            tail_method: None,
            block_size: None,
            horizon: None,
            rho2: None,
            t_tol: None,
        }
    }
}

impl BoundSection {
    pub fn grid(&self) -> EpsGrid {
        EpsGrid { epsilon: self.epsilon.clone(), eps2: self.eps2.clone(), eps2_linspace: self.eps2_linspace }
    }

    pub fn bound_config(&self, n: usize, tolerance: Option<f64>) -> Result<BoundConfig<f64>, CliError> {
        let mut cfg = BoundConfig::for_dim(n);
        if let Some(p) = &self.p_candidates {
            cfg.p_candidates = p.clone();
        }
        cfg.tail_method = match self.tail_method {
            None | Some(TailMethodConfig::Linf) => TailMethod::Linf,
            Some(TailMethodConfig::Trace) => TailMethod::Trace,
            Some(TailMethodConfig::TruncatedEig) => TailMethod::TruncatedEig,
            Some(TailMethodConfig::Block) => TailMethod::Block { size: self.block_size.unwrap_or(n.max(1)) },
        };
        cfg.horizon = Some(self.horizon.unwrap_or_else(|| default_horizon(n)));
        if let Some(r) = self.rho2 {
            cfg.rho_mode = RhoMode::Fixed(r);
        }
        if let Some(t) = tolerance.or(self.t_tol) {
            cfg.t_tol = t;
        }
        cfg.validate().map_err(|e| CliError::config("bound", e))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default)]
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub eps2: Vec<f64>,
    /// `[start, stop, count]` for an inclusive linear `ε²` grid.
    #[serde(default)]
    pub eps2_linspace: Option<(f64, f64, usize)>,
    /// Truncation `N` of the reference problem.
    #[serde(default)]
    pub truncation: Option<usize>,
    #[serde(default = "default_resolution")]
    pub grid_resolution: usize,
    #[serde(default)]
    pub tol: Option<f64>,
}

fn default_resolution() -> usize {
    1000
}

impl OracleSection {
    pub fn grid(&self) -> EpsGrid {
        EpsGrid { epsilon: self.epsilon.clone(), eps2: self.eps2.clone(), eps2_linspace: self.eps2_linspace }
    }
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            epsilon: Vec::new(),
            eps2: Vec::new(),
            eps2_linspace: None,
            truncation: None,
            grid_resolution: default_resolution(),
            tol: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiSection {
    /// Block range `[start, end]`; defaults to `[1, n]`.
    #[serde(default)]
    pub range: Option<(usize, usize)>,
    /// Tail indices `p` for which tail bounds are reported.
    #[serde(default)]
    pub tail_p: Vec<usize>,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub block_size: Option<usize>,
    /// Sparse-periodic bound rows: `(n, C, alpha)` use the parameters below.
    #[serde(default)]
    pub sparse_periodic: Option<SparsePeriodicSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparsePeriodicSection {
    pub n: Vec<usize>,
    #[serde(default = "one")]
    pub c: f64,
    pub alpha: f64,
    #[serde(default = "two_usize")]
    pub gamma: usize,
    #[serde(default = "two_usize")]
    pub eta: usize,
    #[serde(default = "two")]
    pub c1: f64,
    #[serde(default = "one")]
    pub c2: f64,
}

fn two_usize() -> usize {
    2
}

fn two() -> f64 {
    2.0
}

impl SparsePeriodicSection {
    pub fn params(&self) -> SparsePeriodicParams<f64> {
        SparsePeriodicParams { gamma: self.gamma, eta: self.eta, c1: self.c1, c2: self.c2 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureId {
    SpPer,
    GeomFourier,
    ProofGeom,
    Fig1,
}

impl FigureId {
    pub fn name(&self) -> &'static str {
        match self {
            FigureId::SpPer => "sp_per",
            FigureId::GeomFourier => "geom_fourier",
            FigureId::ProofGeom => "proof_geom",
            FigureId::Fig1 => "fig1",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig1Case {
    pub u2: f64,
    pub v2: f64,
    pub a2: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiguresSection {
    #[serde(default = "default_figures")]
    pub ids: Vec<FigureId>,
    /// Sample count for `sp_per` and the Fourier geometry; the block is `6n × 6n`.
    #[serde(default = "nine")]
    pub n: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Truncation for the geometry figures.
    #[serde(default)]
    pub truncation: Option<usize>,
    #[serde(default = "default_fig1_cases")]
    pub fig1_cases: Vec<Fig1Case>,
    #[serde(default = "default_fig1_points")]
    pub fig1_points: usize,
}

fn default_figures() -> Vec<FigureId> {
    vec![FigureId::SpPer, FigureId::GeomFourier, FigureId::ProofGeom, FigureId::Fig1]
}

fn nine() -> usize {
    9
}

fn default_samples() -> usize {
    360
}

fn default_fig1_points() -> usize {
    101
}

fn default_fig1_cases() -> Vec<Fig1Case> {
    vec![
        Fig1Case { u2: 1.0, v2: 0.6, a2: 0.8, d2: 0.2 },
        Fig1Case { u2: 1.0, v2: 0.2, a2: 1.0, d2: 0.5 },
        Fig1Case { u2: 1.0, v2: 0.4, a2: 0.3, d2: 0.7 },
    ]
}

impl Default for FiguresSection {
    fn default() -> Self {
        FiguresSection {
            ids: default_figures(),
            n: nine(),
            samples: default_samples(),
            truncation: None,
            fig1_cases: default_fig1_cases(),
            fig1_points: default_fig1_points(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalRadiusSection {
    #[serde(default = "default_radius_n")]
    pub n: Vec<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
}

fn default_radius_n() -> Vec<usize> {
    vec![100, 1000, 10000, 100000]
}

impl Default for CriticalRadiusSection {
    fn default() -> Self {
        CriticalRadiusSection { n: default_radius_n(), tol: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationSection {
    pub p: usize,
    pub n: Vec<usize>,
    pub delta: f64,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSection {
    /// Sample sizes for the report.
    #[serde(default)]
    pub n: Vec<usize>,
    /// `ε² = factor · r_n²` per row; defaults to 2.
    #[serde(default)]
    pub eps2_factor: Option<f64>,
    /// Overrides the eigensystem's `C_ψ`.
    #[serde(default)]
    pub c_psi: Option<f64>,
    #[serde(default)]
    pub concentration: Option<ConcentrationSection>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn operator(&self, seed: Option<u64>) -> Result<SamplingOperator<f64>, CliError> {
        self.operator
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs an [operator] section".into()))?
            .build(seed)
    }
}
