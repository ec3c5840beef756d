//! TOML run configuration with `[model]`, `[experiment]` and `[output]` sections.

use std::path::{Path, PathBuf};

use bifractal::asymptotics::DEFAULT_TOL;
use bifractal::montecarlo::{DESK_N_LIST, DESK_REPS};
use bifractal::{default_m, EstimatorKind, MaternParams};
use serde::Deserialize;

use crate::exit::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub nu11: f64,
    pub nu22: f64,
    pub nu12: f64,
    pub rho: f64,
    #[serde(default = "one")]
    pub a11: f64,
    #[serde(default = "one")]
    pub a22: f64,
    #[serde(default = "one")]
    pub a12: f64,
    #[serde(default = "one")]
    pub sigma1: f64,
    #[serde(default = "one")]
    pub sigma2: f64,
}

impl ModelSection {
    pub fn params(&self) -> MaternParams {
        MaternParams {
            nu11: self.nu11,
            nu22: self.nu22,
            nu12: self.nu12,
            a11: self.a11,
            a22: self.a22,
            a12: self.a12,
            sigma1: self.sigma1,
            sigma2: self.sigma2,
            rho: self.rho,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub n_list: Option<Vec<usize>>,
    pub reps: Option<usize>,
    pub m: Option<usize>,
    pub kind: Option<EstimatorKind>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

impl ExperimentSection {
    pub fn n_list(&self) -> Vec<usize> {
        self.n_list.clone().unwrap_or_else(|| DESK_N_LIST.to_vec())
    }

    pub fn reps(&self) -> usize {
        self.reps.unwrap_or(DESK_REPS)
    }

    /// Configured `m`, else the default for the smallest grid.
    pub fn m(&self) -> usize {
        self.m.unwrap_or_else(|| {
            let n_min = self.n_list().into_iter().min().unwrap_or(DESK_N_LIST[0]);
            default_m(n_min)
        })
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind.unwrap_or(EstimatorKind::Gls)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// File name prefix for experiment artifacts.
    pub case: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn case(&self) -> String {
        self.output.case.clone().unwrap_or_else(|| "case".into())
    }
}
