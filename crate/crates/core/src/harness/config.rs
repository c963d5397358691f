use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::oracle::fixtures;
use crate::spin::{SpinLaw, TestFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Green,
    UstCheck,
    PairCorr,
    QEstimate,
    FieldMoments,
    Bilap,
    FullTheorem,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Green,
        Experiment::UstCheck,
        Experiment::PairCorr,
        Experiment::QEstimate,
        Experiment::FieldMoments,
        Experiment::Bilap,
        Experiment::FullTheorem,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Green => "green",
            Experiment::UstCheck => "ust-check",
            Experiment::PairCorr => "pair-corr",
            Experiment::QEstimate => "q-estimate",
            Experiment::FieldMoments => "field-moments",
            Experiment::Bilap => "bilap",
            Experiment::FullTheorem => "full-theorem",
        }
    }
}

/// Green's function: walk Monte Carlo against quadrature, and the decay exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreenConfig {
    pub dim: usize,
    pub points: Vec<Vec<i32>>,
    pub walks: u64,
    pub step_cap: u64,
    /// Axis distances for the log-log slope of the quadrature values.
    pub slope_radii: Vec<i32>,
    pub mesh: usize,
}

impl Default for GreenConfig {
    fn default() -> Self {
        GreenConfig {
            dim: 5,
            points: vec![vec![1, 0, 0, 0, 0], vec![3, 0, 0, 0, 0], vec![5, 0, 0, 0, 0]],
            walks: 20_000,
            step_cap: 1_000_000,
            slope_radii: vec![5, 10, 20, 40],
            mesh: crate::green::MIN_MESH,
        }
    }
}

/// Wilson uniformity and exact pair correlations on small graphs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UstConfig {
    pub fixtures: Vec<String>,
    /// Extra graphs as edge-list files.
    pub graph_files: Vec<PathBuf>,
    pub samples_per_tree: u64,
    pub pair_samples: u64,
    pub tree_budget: u64,
}

impl Default for UstConfig {
    fn default() -> Self {
        UstConfig {
            fixtures: ["triangle", "four_cycle", "k4", "wired_2x3"].map(String::from).to_vec(),
            graph_files: Vec::new(),
            samples_per_tree: 30,
            pair_samples: 100_000,
            tree_budget: crate::oracle::DEFAULT_TREE_BUDGET,
        }
    }
}

/// Two-point function on the wired box and its plateau statistic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairCorrConfig {
    pub dim: usize,
    pub half_width: i32,
    pub points: Vec<Vec<i32>>,
    pub samples: u64,
    /// Index pairs into `points` whose plateau values must agree.
    pub compare: Vec<[usize; 2]>,
}

impl Default for PairCorrConfig {
    fn default() -> Self {
        PairCorrConfig {
            dim: 5,
            half_width: 40,
            points: vec![vec![8, 0, 0, 0, 0], vec![16, 0, 0, 0, 0], vec![4, 4, 4, 4, 0], vec![8, 8, 8, 8, 0]],
            samples: 100_000,
            compare: vec![[0, 1], [2, 3], [0, 2], [1, 3]],
        }
    }
}

/// The constant `q` and the resulting two-point prediction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QConfig {
    pub dim: usize,
    /// Truncation radii; the last two are compared and the last one is used for the prediction.
    pub radii: Vec<f64>,
    pub samples: u64,
    pub z: Vec<i32>,
    pub direct_half_width: i32,
    pub direct_samples: u64,
    pub mesh: usize,
}

impl Default for QConfig {
    fn default() -> Self {
        QConfig {
            dim: 5,
            radii: vec![50.0, 100.0],
            samples: 1_000_000,
            z: vec![12, 0, 0, 0, 0],
            direct_half_width: 40,
            direct_samples: 100_000,
            mesh: crate::green::MIN_MESH,
        }
    }
}

/// Which pairing weights feed the moment suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weights {
    Point,
    Cell,
}

/// Moment suite of `X_eps` under several spin laws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldMomentsConfig {
    pub test_function: TestFunction,
    pub epsilons: Vec<f64>,
    /// Box half-width as a multiple of `radius / eps`.
    pub box_factor: f64,
    pub samples: u64,
    pub laws: Vec<SpinLaw>,
    pub weights: Weights,
}

impl Default for FieldMomentsConfig {
    fn default() -> Self {
        FieldMomentsConfig {
            test_function: TestFunction::bump(5, 1.0),
            epsilons: vec![0.25, 0.125],
            box_factor: 2.0,
            samples: 20_000,
            laws: vec![SpinLaw::Rademacher, SpinLaw::UniformScaled],
            weights: Weights::Point,
        }
    }
}

/// Membrane model on the torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BilapConfig {
    pub dim: usize,
    pub side: usize,
    /// Fields used for the pairing variance.
    pub samples: u64,
    pub covariance_fields: u64,
    pub laplacian_fields: u64,
    pub test_function: TestFunction,
    pub eps: f64,
    /// Inclusive range of axis lags used for the power-law fit.
    pub fit_window: [usize; 2],
    /// Number of fields written as flat binary dumps.
    pub dump_fields: u64,
}

impl Default for BilapConfig {
    fn default() -> Self {
        BilapConfig {
            dim: 5,
            side: 32,
            samples: 1000,
            covariance_fields: 40,
            laplacian_fields: 10,
            test_function: TestFunction::truncated_gaussian(5, 1.0),
            eps: 0.125,
            fit_window: [2, 4],
            dump_fields: 0,
        }
    }
}

/// Variance of `X_eps` against the whole-space integral and the two-point plateau.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FullTheoremConfig {
    pub test_function: TestFunction,
    pub epsilons: Vec<f64>,
    pub box_factor: f64,
    pub samples: u64,
    pub plateau_point: Vec<i32>,
    pub plateau_half_width: i32,
    pub plateau_samples: u64,
    pub quad_mesh: usize,
}

impl Default for FullTheoremConfig {
    fn default() -> Self {
        FullTheoremConfig {
            test_function: TestFunction::bump(5, 1.0),
            epsilons: vec![0.25, 0.125],
            box_factor: 2.0,
            samples: 20_000,
            plateau_point: vec![16, 0, 0, 0, 0],
            plateau_half_width: 40,
            plateau_samples: 100_000,
            quad_mesh: 16,
        }
    }
}

/// The whole run configuration as read from JSON; flags override top-level fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub green: GreenConfig,
    pub ust_check: UstConfig,
    pub pair_corr: PairCorrConfig,
    pub q_estimate: QConfig,
    pub field_moments: FieldMomentsConfig,
    pub bilap: BilapConfig,
    pub full_theorem: FullTheoremConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: None,
            seed: 1,
            workers: 1,
            out: PathBuf::from("out"),
            green: GreenConfig::default(),
            ust_check: UstConfig::default(),
            pair_corr: PairCorrConfig::default(),
            q_estimate: QConfig::default(),
            field_moments: FieldMomentsConfig::default(),
            bilap: BilapConfig::default(),
            full_theorem: FullTheoremConfig::default(),
        }
    }
}

fn positive(name: &str, n: u64) -> Result<()> {
    if n == 0 {
        return config(format!("{name} must be positive"));
    }
    Ok(())
}

fn point_dims(name: &str, points: &[Vec<i32>], dim: usize) -> Result<()> {
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return config(format!("{name}: point {p:?} is not {dim}-dimensional"));
    }
    Ok(())
}

fn epsilons(name: &str, eps: &[f64]) -> Result<()> {
    if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return config(format!("{name}: scales must lie in (0, 1]"));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parses JSON, naming the offending field on failure.
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Config(format!("at `{}`: {}", e.path(), e.inner())))
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks the section of the selected experiment.
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return config("workers must be at least 1");
        }
        let Some(exp) = self.experiment else {
            return config("no experiment selected");
        };
        match exp {
            Experiment::Green => {
                let c = &self.green;
                point_dims("green.points", &c.points, c.dim)?;
                positive("green.walks", c.walks)?;
                if c.slope_radii.len() < 2 {
                    return config("green.slope_radii needs at least two radii");
                }
            }
            Experiment::UstCheck => {
                let c = &self.ust_check;
                if let Some(f) = c.fixtures.iter().find(|f| fixtures::by_name(f).is_none()) {
                    return config(format!("ust_check.fixtures: unknown fixture `{f}`, expected one of {:?}", fixtures::NAMES));
                }
                if c.fixtures.is_empty() && c.graph_files.is_empty() {
                    return config("ust_check needs at least one graph");
                }
                positive("ust_check.samples_per_tree", c.samples_per_tree)?;
                positive("ust_check.pair_samples", c.pair_samples)?;
            }
            Experiment::PairCorr => {
                let c = &self.pair_corr;
                point_dims("pair_corr.points", &c.points, c.dim)?;
                positive("pair_corr.samples", c.samples)?;
                if c.compare.iter().flatten().any(|&i| i >= c.points.len()) {
                    return config("pair_corr.compare refers to a missing point");
                }
            }
            Experiment::QEstimate => {
                let c = &self.q_estimate;
                point_dims("q_estimate.z", std::slice::from_ref(&c.z), c.dim)?;
                if c.radii.len() < 2 {
                    return config("q_estimate.radii needs at least two radii");
                }
                positive("q_estimate.samples", c.samples)?;
                positive("q_estimate.direct_samples", c.direct_samples)?;
            }
            Experiment::FieldMoments => {
                let c = &self.field_moments;
                c.test_function.validate()?;
                epsilons("field_moments.epsilons", &c.epsilons)?;
                if c.laws.is_empty() {
                    return config("field_moments.laws is empty");
                }
                for law in &c.laws {
                    law.validate()?;
                }
                if !(c.box_factor >= 1.0) {
                    return config("field_moments.box_factor must be at least 1");
                }
                positive("field_moments.samples", c.samples)?;
            }
            Experiment::Bilap => {
                let c = &self.bilap;
                c.test_function.validate()?;
                if c.test_function.dim() != c.dim {
                    return config("bilap.test_function has the wrong dimension");
                }
                let [a, b] = c.fit_window;
                if a == 0 || b <= a || b >= c.side / 2 {
                    return config("bilap.fit_window must satisfy 0 < a < b < side / 2");
                }
                positive("bilap.samples", c.samples)?;
                if c.covariance_fields < 2 || c.laplacian_fields == 0 {
                    return config("bilap needs at least 2 covariance fields and 1 Laplacian field");
                }
            }
            Experiment::FullTheorem => {
                let c = &self.full_theorem;
                c.test_function.validate()?;
                epsilons("full_theorem.epsilons", &c.epsilons)?;
                point_dims("full_theorem.plateau_point", std::slice::from_ref(&c.plateau_point), c.test_function.dim())?;
                positive("full_theorem.samples", c.samples)?;
                positive("full_theorem.plateau_samples", c.plateau_samples)?;
                if !(c.box_factor >= 1.0) {
                    return config("full_theorem.box_factor must be at least 1");
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_partial_sections() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "pair-corr", "pair_corr": {"samples": 10}}"#).unwrap();
        assert_eq!(cfg.experiment, Some(Experiment::PairCorr));
        assert_eq!(cfg.pair_corr.samples, 10);
        assert_eq!(cfg.pair_corr.half_width, 40);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_fields_name_their_path() {
        let err = ExperimentConfig::from_json(r#"{"bilap": {"sidee": 8}}"#).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Config(_)));
        assert!(msg.contains("bilap"), "{msg}");
        let err = ExperimentConfig::from_json(r#"{"green": {"walks": -3}}"#).unwrap_err().to_string();
        assert!(err.contains("green.walks"), "{err}");
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_err());
        for e in Experiment::ALL {
            cfg.experiment = Some(e);
            cfg.validate().unwrap();
        }
        cfg.experiment = Some(Experiment::UstCheck);
        cfg.ust_check.fixtures.push("petersen".into());
        assert!(cfg.validate().is_err());
        cfg.experiment = Some(Experiment::Bilap);
        cfg.bilap.fit_window = [4, 20];
        assert!(cfg.validate().is_err());
    }
}
