//! Run configuration, loaded from TOML. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use lorentz_core::geodesic::IntegrationOptions;
use lorentz_core::metric_family::{FamilySpec, HypothesisOptions};
use lorentz_core::ode::DormandPrince;
use lorentz_core::MetricFamily;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::LabError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub family: FamilySpec,
    pub certificate: CertificateParams,
    #[serde(default)]
    pub seed: u64,
    /// Suites run by `verify all`.
    #[serde(default)]
    pub suites: Vec<String>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub hypothesis: HypothesisParams,
    #[serde(default)]
    pub lemma21: BatchParams,
    #[serde(default)]
    pub lemma22: BatchParams,
    #[serde(default)]
    pub cor24: EndpointParams,
    #[serde(default)]
    pub lemma31: CoverInstanceParams,
    #[serde(default)]
    pub lemma32: SlabCoverParams,
    #[serde(default)]
    pub growth: GrowthParams,
    #[serde(default)]
    pub jacobi: JacobiParams,
    #[serde(default)]
    pub gauss: GaussParams,
    #[serde(default)]
    pub main_theorem: MainTheoremParams,
    #[serde(default)]
    pub divergence: DivergenceParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateParams {
    pub t0: f64,
    /// Growth rate; derived from the grid when absent.
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_sample_budget")]
    pub sample_budget: usize,
}

fn default_horizon() -> f64 {
    10.0
}

fn default_sample_budget() -> usize {
    4096
}

impl CertificateParams {
    pub fn options(&self) -> HypothesisOptions {
        HypothesisOptions { horizon: self.horizon, sample_budget: self.sample_budget }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub null: f64,
    pub drift_per_length: f64,
    pub growth_ratio: f64,
    pub divergence_integral: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-11, null: 1e-9, drift_per_length: 1e-8, growth_ratio: 1e-3, divergence_integral: 1e-4 }
    }
}

impl Tolerances {
    pub fn integration(&self) -> IntegrationOptions {
        IntegrationOptions {
            stepper: DormandPrince { rtol: self.rtol, atol: self.atol, ..DormandPrince::default() },
            tol_null: self.null,
            drift_per_length: self.drift_per_length,
            ..IntegrationOptions::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Certified,
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HypothesisParams {
    pub expect: Expectation,
}

impl Default for HypothesisParams {
    fn default() -> Self {
        Self { expect: Expectation::Certified }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatchParams {
    pub count: usize,
    /// Apex `|t|` range as offsets above the crossing level.
    pub apex_offsets: (f64, f64),
}

impl Default for BatchParams {
    fn default() -> Self {
        Self { count: 1000, apex_offsets: (0.1, 3.0) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EndpointParams {
    pub count: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub epsilon: f64,
    pub apex_offsets: (f64, f64),
}

impl Default for EndpointParams {
    fn default() -> Self {
        Self { count: 500, t: 1.5, epsilon: 0.02, apex_offsets: (0.1, 3.0) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverInstanceParams {
    pub instances: usize,
    pub max_nodes: usize,
}

impl Default for CoverInstanceParams {
    fn default() -> Self {
        Self { instances: 1000, max_nodes: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlabCoverParams {
    #[serde(rename = "T")]
    pub t: f64,
    pub epsilon: f64,
    /// Net spacing as a fraction of ε.
    pub net_fraction: f64,
    pub pilot_pairs: usize,
    pub pair_budget: usize,
}

impl Default for SlabCoverParams {
    fn default() -> Self {
        Self { t: 1.5, epsilon: 0.3, net_fraction: 0.1, pilot_pairs: 64, pair_budget: 256 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthParams {
    #[serde(rename = "T_values")]
    pub t_values: Vec<f64>,
    pub epsilon: f64,
}

impl Default for GrowthParams {
    fn default() -> Self {
        Self { t_values: vec![1.0, 2.0, 3.0], epsilon: 0.02 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JacobiParams {
    pub planes: usize,
    pub t_range: (f64, f64),
    pub fields: usize,
    pub u_max: f64,
    pub samples: usize,
}

impl Default for JacobiParams {
    fn default() -> Self {
        Self { planes: 100, t_range: (-3.0, 3.0), fields: 8, u_max: 5.0, samples: 101 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussParams {
    pub geodesics: usize,
    pub u_max: f64,
}

impl Default for GaussParams {
    fn default() -> Self {
        Self { geodesics: 50, u_max: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MainTheoremParams {
    #[serde(rename = "T1")]
    pub t1: f64,
    pub epsilon: f64,
    pub isometries: usize,
    pub max_rapidity: f64,
}

impl Default for MainTheoremParams {
    fn default() -> Self {
        Self { t1: 1.5, epsilon: 0.3, isometries: 100, max_rapidity: 5.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DivergenceParams {
    pub rapidity: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub resolution: usize,
}

impl Default for DivergenceParams {
    fn default() -> Self {
        Self { rapidity: 6.0, t: 2.0, resolution: 10_000 }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            LabError::Config(m) => LabError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), LabError> {
        MetricFamily::new(self.family.clone()).map_err(|e| LabError::Config(e.to_string()))?;
        let c = &self.certificate;
        if !(c.t0 > 0.0 && c.t0.is_finite()) {
            return Err(LabError::Config(format!("certificate.t0 must be positive, got {}", c.t0)));
        }
        if let Some(v) = c.c {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LabError::Config(format!("certificate.c must be positive, got {v}")));
            }
        }
        for s in &self.suites {
            crate::suites::Suite::parse(s).map_err(|_| LabError::Config(format!("unknown suite {s:?} in suites")))?;
        }
        if self.jobs == Some(0) {
            return Err(LabError::Config("jobs must be at least 1".into()));
        }
        let t = &self.tolerances;
        if [t.rtol, t.atol, t.null, t.drift_per_length, t.growth_ratio, t.divergence_integral].iter().any(|v| !(*v > 0.0)) {
            return Err(LabError::Config("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn family(&self) -> MetricFamily {
        MetricFamily::new(self.family.clone()).expect("validated on load")
    }

    /// SHA-256 of the canonical JSON form of the resolved configuration.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}
