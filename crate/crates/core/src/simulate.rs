//! Exact simulation of the bivariate process on the grid `{1/n, 2/n, ..., 1}`.
//!
//! The joint `2n x 2n` covariance (component-major: all of `X1`, then all of
//! `X2`) is factorized once by dense Cholesky and reused for every draw.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceModel;
use crate::error::SimulationError;

pub const MIN_GRID: usize = 8;

/// Regular grid of `n` points `j/n`, `j = 1..=n`, on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self, SimulationError> {
        if n < MIN_GRID {
            return Err(SimulationError::GridTooSmall(n));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Location of the `j`-th observation (1-based).
    pub fn point(&self, j: usize) -> f64 {
        j as f64 / self.n as f64
    }
}

/// One observed path: `x1[j-1] = X1(j/n)`, `x2[j-1] = X2(j/n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

impl SamplePath {
    pub fn new(x1: Vec<f64>, x2: Vec<f64>) -> Result<Self, SimulationError> {
        if x1.len() != x2.len() {
            return Err(SimulationError::LengthMismatch(x1.len(), x2.len()));
        }
        if let Some(i) = x1.iter().chain(&x2).position(|v| !v.is_finite()) {
            return Err(SimulationError::NonFinite(i % x1.len().max(1)));
        }
        Ok(Self { x1, x2 })
    }

    pub fn n(&self) -> usize {
        self.x1.len()
    }

    /// Values of component 1 or 2.
    pub fn component(&self, component: usize) -> &[f64] {
        if component == 1 {
            &self.x1
        } else {
            &self.x2
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            x1: self.x2.clone(),
            x2: self.x1.clone(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            x1: self.x1.iter().map(|v| v * factor).collect(),
            x2: self.x2.iter().map(|v| v * factor).collect(),
        }
    }

    /// Writes `j,t,x1,x2` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.n() as f64;
        writeln!(out, "j,t,x1,x2")?;
        for (i, (a, b)) in self.x1.iter().zip(&self.x2).enumerate() {
            let j = i + 1;
            writeln!(out, "{j},{},{a},{b}", j as f64 / n)?;
        }
        Ok(())
    }

    /// Reads the format produced by [`SamplePath::write_csv`].
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, SimulationError> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or(SimulationError::Csv {
                line: 1,
                reason: "empty file".into(),
            })?
            .map_err(SimulationError::from)?;
        let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
        if cols != ["j", "t", "x1", "x2"] {
            return Err(SimulationError::Csv {
                line: 1,
                reason: format!("expected header j,t,x1,x2, found {header:?}"),
            });
        }
        let mut x1 = Vec::new();
        let mut x2 = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(SimulationError::Csv {
                    line: line_no,
                    reason: format!("expected 4 fields, found {}", fields.len()),
                });
            }
            let parse = |s: &str, name: &str| -> Result<f64, SimulationError> {
                s.parse::<f64>().map_err(|_| SimulationError::Csv {
                    line: line_no,
                    reason: format!("column {name}: cannot parse {s:?}"),
                })
            };
            let j: usize = fields[0].parse().map_err(|_| SimulationError::Csv {
                line: line_no,
                reason: format!("column j: cannot parse {:?}", fields[0]),
            })?;
            if j != x1.len() + 1 {
                return Err(SimulationError::Csv {
                    line: line_no,
                    reason: format!("expected j = {}, found {j}", x1.len() + 1),
                });
            }
            x1.push(parse(fields[2], "x1")?);
            x2.push(parse(fields[3], "x2")?);
        }
        SamplePath::new(x1, x2)
    }
}

/// Writes several paths in long format `replicate,j,t,x1,x2`.
pub fn write_ensemble_csv<W: Write>(paths: &[SamplePath], mut out: W) -> std::io::Result<()> {
    writeln!(out, "replicate,j,t,x1,x2")?;
    for (r, path) in paths.iter().enumerate() {
        let n = path.n() as f64;
        for (i, (a, b)) in path.x1.iter().zip(&path.x2).enumerate() {
            let j = i + 1;
            writeln!(out, "{r},{j},{},{a},{b}", j as f64 / n)?;
        }
    }
    Ok(())
}

/// Identifies one replicate's random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub base_seed: u64,
    pub replicate_index: u64,
}

impl SeedSpec {
    pub fn new(base_seed: u64, replicate_index: u64) -> Self {
        Self {
            base_seed,
            replicate_index,
        }
    }

    /// Seed for replicate `r` of an experiment at grid size `n`; distinct
    /// grid sizes get unrelated streams.
    pub fn for_grid(base_seed: u64, n: usize, replicate_index: u64) -> Self {
        Self {
            base_seed: splitmix64(base_seed ^ splitmix64(n as u64)),
            replicate_index,
        }
    }

    /// Counter-based stream: the key comes from `base_seed`, the stream id is
    /// the replicate index, so draws never depend on scheduling order.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.replicate_index);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `[[S11, S12], [S12^T, S22]]` with `S_ij(p, q) = C_ij((q - p)/n)`.
pub fn build_joint_covariance(model: &CovarianceModel, n: usize) -> DMatrix<f64> {
    let lags: Vec<[[f64; 2]; 2]> = (0..n)
        .map(|k| model.evaluate(k as f64 / n as f64))
        .collect();
    let mut sigma = DMatrix::zeros(2 * n, 2 * n);
    for p in 0..n {
        for q in 0..n {
            let c = &lags[p.abs_diff(q)];
            sigma[(p, q)] = c[0][0];
            sigma[(n + p, n + q)] = c[1][1];
            // E[X1(p/n) X2(q/n)] = C12((q - p)/n); the blocks are even in the lag.
            sigma[(p, n + q)] = c[0][1];
            sigma[(n + q, p)] = c[0][1];
        }
    }
    sigma
}

/// Diagonal jitter levels tried, relative to the mean marginal variance.
pub const JITTER_LEVELS: [f64; 3] = [1e-12, 1e-10, 1e-8];

/// Cholesky factor of the joint covariance on a grid, ready for sampling.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    n: usize,
    // Row-major packed lower triangle of L.
    packed: Vec<f64>,
    jitter: f64,
}

impl GaussianSampler {
    pub fn new(model: &CovarianceModel, n: usize) -> Result<Self, SimulationError> {
        GridSpec::new(n)?;
        let sigma = build_joint_covariance(model, n);
        let exp = model.expansion();
        let mean_var = 0.5 * (exp.sigma1_sq + exp.sigma2_sq);
        Self::from_covariance(sigma, n, mean_var)
    }

    fn from_covariance(
        sigma: DMatrix<f64>,
        n: usize,
        mean_var: f64,
    ) -> Result<Self, SimulationError> {
        let dim = sigma.nrows();
        let mut jitter = 0.0;
        let mut attempt = sigma.clone().cholesky();
        for level in JITTER_LEVELS {
            if attempt.is_some() {
                break;
            }
            jitter = level * mean_var;
            let mut jittered = sigma.clone();
            for i in 0..dim {
                jittered[(i, i)] += jitter;
            }
            attempt = jittered.cholesky();
        }
        let chol = attempt.ok_or(SimulationError::NotPositiveDefinite {
            n,
            max_jitter: JITTER_LEVELS[JITTER_LEVELS.len() - 1] * mean_var,
        })?;
        let l = chol.l();
        let mut packed = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for k in 0..=i {
                packed.push(l[(i, k)]);
            }
        }
        Ok(Self { n, packed, jitter })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Diagonal jitter added before the factorization succeeded (0 if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Dense copy of the lower-triangular factor.
    pub fn lower(&self) -> DMatrix<f64> {
        let dim = 2 * self.n;
        let mut l = DMatrix::zeros(dim, dim);
        let mut idx = 0;
        for i in 0..dim {
            for k in 0..=i {
                l[(i, k)] = self.packed[idx];
                idx += 1;
            }
        }
        l
    }

    /// Maps a standard normal vector of length `2n` to a path.
    pub fn transform(&self, z: &[f64]) -> SamplePath {
        let dim = 2 * self.n;
        assert_eq!(z.len(), dim, "expected {dim} standard normal draws");
        let mut x = Vec::with_capacity(dim);
        let mut start = 0;
        for i in 0..dim {
            let row = &self.packed[start..start + i + 1];
            let v: f64 = row.iter().zip(&z[..=i]).map(|(a, b)| a * b).sum();
            x.push(v);
            start += i + 1;
        }
        let x2 = x.split_off(self.n);
        SamplePath { x1: x, x2 }
    }

    pub fn draw(&self, seed: SeedSpec) -> SamplePath {
        let mut rng = seed.rng();
        let z: Vec<f64> = (0..2 * self.n)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        self.transform(&z)
    }

    /// Paths for the given seeds, in seed order regardless of scheduling.
    pub fn draw_many(&self, seeds: &[SeedSpec]) -> Vec<SamplePath> {
        #[cfg(feature = "parallel")]
        {
            seeds.par_iter().map(|s| self.draw(*s)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            seeds.iter().map(|s| self.draw(*s)).collect()
        }
    }
}

/// `max |L L^T - S| / max |S|` for a factor of `S`.
pub fn cholesky_residual(lower: &DMatrix<f64>, sigma: &DMatrix<f64>) -> f64 {
    let diff = lower * lower.transpose() - sigma;
    diff.amax() / sigma.amax()
}

/// One exact draw from the model on the grid of size `n`.
pub fn simulate_path(
    model: &CovarianceModel,
    n: usize,
    seed: SeedSpec,
) -> Result<SamplePath, SimulationError> {
    Ok(GaussianSampler::new(model, n)?.draw(seed))
}

/// `reps` independent paths; path `r` uses `SeedSpec(base_seed, r)` and the
/// factorization is shared.
pub fn simulate_ensemble(
    model: &CovarianceModel,
    n: usize,
    reps: usize,
    base_seed: u64,
) -> Result<Vec<SamplePath>, SimulationError> {
    if reps == 0 {
        return Err(SimulationError::NoReplicates);
    }
    let sampler = GaussianSampler::new(model, n)?;
    let seeds: Vec<SeedSpec> = (0..reps as u64)
        .map(|r| SeedSpec::new(base_seed, r))
        .collect();
    Ok(sampler.draw_many(&seeds))
}
