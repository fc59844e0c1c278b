//! Monte Carlo simulation engine: generates individual-level data under the
//! linear instrumental-variable model, summarizes it to per-variant
//! associations, runs all six weight/model combinations per replication, and
//! aggregates bias/coverage summaries.
//!
//! Replications are reproducible and embarrassingly parallel: each one draws
//! from its own RNG substream keyed by (seed, rep_index), so results are
//! identical for any parallelism degree.

use std::io::Write;

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meta::{ivw, PoolingModel};
use crate::ratio::{ratio_estimates, WeightRule};
use crate::regression::{joint_f_and_r2, simple_ols};
use crate::summary::{SummaryDataset, VariantAssociation};

/// Simulation scenario. Odd-one-out naming: scenarios differ in sampling
/// design (one- vs two-sample) and in how the direct (pleiotropic) effects of
/// the variants on the outcome are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// One-sample, valid instruments (no direct effects).
    S1,
    /// One-sample, balanced pleiotropy: direct effects ~ Normal(0, 0.02^2).
    S2,
    /// Two-sample, valid instruments.
    S3,
    /// Two-sample, balanced pleiotropy.
    S4,
    /// One-sample, heavy-tailed pleiotropy: direct effects = 0.02 * t(2) draw.
    S5,
    /// One-sample, directional pleiotropy: effects correlated (0.4) with
    /// instrument strength.
    S6,
    /// Two-sample, directional pleiotropy.
    S7,
}

impl Scenario {
    pub fn from_number(n: u32) -> Option<Scenario> {
        match n {
            1 => Some(Scenario::S1),
            2 => Some(Scenario::S2),
            3 => Some(Scenario::S3),
            4 => Some(Scenario::S4),
            5 => Some(Scenario::S5),
            6 => Some(Scenario::S6),
            7 => Some(Scenario::S7),
            _ => None,
        }
    }

    pub fn number(&self) -> u32 {
        match self {
            Scenario::S1 => 1,
            Scenario::S2 => 2,
            Scenario::S3 => 3,
            Scenario::S4 => 4,
            Scenario::S5 => 5,
            Scenario::S6 => 6,
            Scenario::S7 => 7,
        }
    }

    /// Two-sample designs estimate risk-factor and outcome associations in
    /// disjoint halves of 2N individuals.
    pub fn is_two_sample(&self) -> bool {
        matches!(self, Scenario::S3 | Scenario::S4 | Scenario::S7)
    }
}

/// Full parameterization of one simulation cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Mean per-allele effect of a variant on the risk factor.
    pub alpha: f64,
    /// Causal effect of the risk factor on the outcome.
    pub beta_x_causal: f64,
    /// Effect of the confounder on the outcome.
    pub beta_u: f64,
    pub n_variants: usize,
    /// Sample size per association set (total 2x this in two-sample designs).
    pub n_per_sample: usize,
    pub n_reps: usize,
    pub seed: u64,
    /// Minor allele frequency for the Binomial(2, maf) genotype draws.
    pub maf: f64,
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario, alpha: f64, beta_x_causal: f64, beta_u: f64) -> Self {
        ScenarioConfig {
            scenario,
            alpha,
            beta_x_causal,
            beta_u,
            n_variants: 20,
            n_per_sample: 5000,
            n_reps: 10_000,
            seed: 0,
            maf: 1.0 / 3.0,
        }
    }

    pub fn with_reps(mut self, n_reps: usize) -> Self {
        self.n_reps = n_reps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

const SD_EFFECT: f64 = 0.02;
const DIRECTIONAL_CORRELATION: f64 = 0.4;

/// The six weight/model combinations reported throughout.
pub const METHODS: [(WeightRule, PoolingModel); 6] = [
    (WeightRule::SecondOrder, PoolingModel::Fixed),
    (WeightRule::FirstOrder, PoolingModel::Fixed),
    (WeightRule::SecondOrder, PoolingModel::AdditiveRandom),
    (WeightRule::FirstOrder, PoolingModel::AdditiveRandom),
    (WeightRule::SecondOrder, PoolingModel::MultiplicativeRandom),
    (WeightRule::FirstOrder, PoolingModel::MultiplicativeRandom),
];

/// One method's outcome for a single replication.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub estimate: f64,
    pub se: f64,
    pub rejected: bool,
}

/// All six methods' outcomes for one replication, plus instrument-strength
/// diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepResult {
    pub methods: [MethodOutcome; 6],
    pub f_statistic: f64,
    pub r_squared: f64,
}

/// Per-method aggregate over all replications.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MethodSummary {
    pub mean_estimate: f64,
    /// Fraction of replications rejecting the causal null at the 95% level.
    pub power: f64,
    pub sd_of_estimates: f64,
    pub mean_se: f64,
}

/// Monte Carlo summary for one simulation cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub config: ScenarioConfig,
    pub methods: [MethodSummary; 6],
    pub mean_f: f64,
    pub mean_r2: f64,
    pub n_reps_completed: usize,
    /// Replications regenerated because a variant was monomorphic in sample.
    pub n_regenerated: usize,
}

struct RawData {
    /// genotypes, row-major: n_total x n_variants
    genotypes: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    n_total: usize,
}

fn substream_rng(seed: u64, rep_index: u64, attempt: u64) -> ChaCha12Rng {
    let mut bytes = [0u8; 32];
    bytes[0..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&rep_index.to_le_bytes());
    bytes[16..24].copy_from_slice(&attempt.to_le_bytes());
    ChaCha12Rng::from_seed(bytes)
}

fn draw_effects(config: &ScenarioConfig, rng: &mut ChaCha12Rng) -> (Vec<f64>, Vec<f64>) {
    let j = config.n_variants;
    let mut alpha = Vec::with_capacity(j);
    let mut direct = Vec::with_capacity(j);
    match config.scenario {
        Scenario::S1 | Scenario::S3 => {
            for _ in 0..j {
                let z: f64 = rng.sample(StandardNormal);
                alpha.push(config.alpha + SD_EFFECT * z);
                direct.push(0.0);
            }
        }
        Scenario::S2 | Scenario::S4 => {
            for _ in 0..j {
                let z: f64 = rng.sample(StandardNormal);
                alpha.push(config.alpha + SD_EFFECT * z);
            }
            for _ in 0..j {
                let z: f64 = rng.sample(StandardNormal);
                direct.push(SD_EFFECT * z);
            }
        }
        Scenario::S5 => {
            for _ in 0..j {
                let z: f64 = rng.sample(StandardNormal);
                alpha.push(config.alpha + SD_EFFECT * z);
            }
            // t(2) via normal over sqrt(chi-square / df); no variance
            // normalization, only the 0.02 multiplier.
            let chi2 = ChiSquared::new(2.0).expect("valid dof");
            for _ in 0..j {
                let z: f64 = rng.sample(StandardNormal);
                let c: f64 = rng.sample(chi2);
                direct.push(SD_EFFECT * z / (c / 2.0).sqrt());
            }
        }
        Scenario::S6 | Scenario::S7 => {
            // bivariate normal via Cholesky of the 2x2 covariance with
            // correlation 0.4 and common sd 0.02
            let rho = DIRECTIONAL_CORRELATION;
            let c = (1.0 - rho * rho).sqrt();
            for _ in 0..j {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                alpha.push(config.alpha + SD_EFFECT * z1);
                direct.push(SD_EFFECT * (rho * z1 + c * z2));
            }
        }
    }
    (alpha, direct)
}

/// Draws one replication's individual-level data. Returns `None` if any
/// variant is monomorphic in the sample (the caller regenerates).
fn try_generate_raw(config: &ScenarioConfig, rng: &mut ChaCha12Rng) -> Option<RawData> {
    let j = config.n_variants;
    let n_total = if config.scenario.is_two_sample() {
        2 * config.n_per_sample
    } else {
        config.n_per_sample
    };
    let (alpha, direct) = draw_effects(config, rng);

    // Binomial(2, maf) genotype via a single uniform against the cumulative
    // probabilities; cheaper than a binomial sampler at n = 2.
    let q = 1.0 - config.maf;
    let p0 = q * q;
    let p01 = p0 + 2.0 * config.maf * q;

    let mut genotypes = vec![0.0f64; n_total * j];
    for g in genotypes.iter_mut() {
        let u: f64 = rng.random();
        *g = if u < p0 {
            0.0
        } else if u < p01 {
            1.0
        } else {
            2.0
        };
    }

    let mut x = Vec::with_capacity(n_total);
    let mut y = Vec::with_capacity(n_total);
    for i in 0..n_total {
        let u: f64 = rng.sample(StandardNormal);
        let ex: f64 = rng.sample(StandardNormal);
        let ey: f64 = rng.sample(StandardNormal);
        let row = &genotypes[i * j..(i + 1) * j];
        let mut gx = 0.0;
        let mut gy = 0.0;
        for k in 0..j {
            gx += alpha[k] * row[k];
            gy += direct[k] * row[k];
        }
        let xi = gx + u + ex;
        x.push(xi);
        y.push(config.beta_x_causal * xi + gy + config.beta_u * u + ey);
    }

    // monomorphic check per relevant sample half
    let boundaries: &[usize] = if config.scenario.is_two_sample() {
        &[0, config.n_per_sample, n_total]
    } else {
        &[0, n_total]
    };
    for pair in boundaries.windows(2) {
        let half = pair[0]..pair[1];
        for k in 0..j {
            let first = genotypes[half.start * j + k];
            if half.clone().all(|i| genotypes[i * j + k] == first) {
                return None;
            }
        }
    }

    Some(RawData {
        genotypes,
        x,
        y,
        n_total,
    })
}

fn generate_raw(config: &ScenarioConfig, rep_index: u64) -> (RawData, usize) {
    let mut attempt: u64 = 0;
    loop {
        let mut rng = substream_rng(config.seed, rep_index, attempt);
        if let Some(raw) = try_generate_raw(config, &mut rng) {
            return (raw, attempt as usize);
        }
        attempt += 1;
    }
}

fn column(raw: &RawData, k: usize, range: std::ops::Range<usize>) -> Vec<f64> {
    let j = raw.genotypes.len() / raw.n_total;
    range.map(|i| raw.genotypes[i * j + k]).collect()
}

fn summarize(config: &ScenarioConfig, raw: &RawData) -> Result<SummaryDataset> {
    let j = config.n_variants;
    let n = config.n_per_sample;
    let (x_range, y_range) = if config.scenario.is_two_sample() {
        (0..n, n..raw.n_total)
    } else {
        (0..n, 0..n)
    };
    let mut variants = Vec::with_capacity(j);
    for k in 0..j {
        let gx = column(raw, k, x_range.clone());
        let fit_x = simple_ols(&raw.x[x_range.clone()], &gx)?;
        let gy = column(raw, k, y_range.clone());
        let fit_y = simple_ols(&raw.y[y_range.clone()], &gy)?;
        variants.push(VariantAssociation::new(
            format!("g{}", k + 1),
            fit_x.slope,
            fit_x.slope_se,
            fit_y.slope,
            fit_y.slope_se,
        ));
    }
    SummaryDataset::new("simulated", variants)
}

/// Generates one replication's summarized dataset. Deterministic in
/// (config.seed, rep_index); monomorphic draws are regenerated internally.
pub fn generate_replication(config: &ScenarioConfig, rep_index: u64) -> Result<SummaryDataset> {
    let (raw, _) = generate_raw(config, rep_index);
    summarize(config, &raw)
}

/// One replication's individual-level data (all participants; in two-sample
/// designs the first `n_per_sample` rows are the risk-factor sample).
#[derive(Debug, Clone)]
pub struct IndividualData {
    pub genotypes: DMatrix<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Generates one replication's individual-level data, deterministic in
/// (config.seed, rep_index). Same draws as [`generate_replication`].
pub fn generate_individual(config: &ScenarioConfig, rep_index: u64) -> IndividualData {
    let (raw, _) = generate_raw(config, rep_index);
    let j = config.n_variants;
    IndividualData {
        genotypes: DMatrix::from_fn(raw.n_total, j, |i, k| raw.genotypes[i * j + k]),
        x: raw.x,
        y: raw.y,
    }
}

fn analyze_rep(config: &ScenarioConfig, rep_index: u64) -> Result<(RepResult, usize)> {
    let (raw, regenerated) = generate_raw(config, rep_index);
    let dataset = summarize(config, &raw)?;

    let j = config.n_variants;
    let n = config.n_per_sample;
    let z = DMatrix::from_fn(n, j, |i, k| raw.genotypes[i * j + k]);
    let (f_statistic, r_squared) = joint_f_and_r2(&raw.x[0..n], &z)?;

    let mut methods = [MethodOutcome {
        estimate: 0.0,
        se: 0.0,
        rejected: false,
    }; 6];
    for (m, (rule, model)) in METHODS.iter().enumerate() {
        let estimates = ratio_estimates(&dataset, *rule)?;
        let result = ivw(&estimates, *model)?;
        methods[m] = MethodOutcome {
            estimate: result.estimate,
            se: result.se,
            rejected: result.estimate.abs() > 1.96 * result.se,
        };
    }
    Ok((
        RepResult {
            methods,
            f_statistic,
            r_squared,
        },
        regenerated,
    ))
}

/// Runs all replications of one cell, applying every method, and aggregates.
///
/// `parallelism` sets the number of worker threads (1 = serial, 0 = one per
/// core); the summary is identical for every value because each replication
/// has its own RNG substream and aggregation runs in rep-index order.
pub fn run_scenario(config: &ScenarioConfig, parallelism: usize) -> Result<MonteCarloSummary> {
    let reps: Vec<(RepResult, usize)> = if parallelism == 1 {
        (0..config.n_reps as u64)
            .map(|i| analyze_rep(config, i))
            .collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        pool.install(|| {
            (0..config.n_reps as u64)
                .into_par_iter()
                .map(|i| analyze_rep(config, i))
                .collect::<Result<_>>()
        })?
    };

    let n = reps.len();
    let nf = n as f64;
    let mut methods = [MethodSummary {
        mean_estimate: 0.0,
        power: 0.0,
        sd_of_estimates: 0.0,
        mean_se: 0.0,
    }; 6];
    for (m, summary) in methods.iter_mut().enumerate() {
        let mean = reps.iter().map(|(r, _)| r.methods[m].estimate).sum::<f64>() / nf;
        let var = reps
            .iter()
            .map(|(r, _)| {
                let d = r.methods[m].estimate - mean;
                d * d
            })
            .sum::<f64>()
            / (nf - 1.0);
        *summary = MethodSummary {
            mean_estimate: mean,
            power: reps.iter().filter(|(r, _)| r.methods[m].rejected).count() as f64 / nf,
            sd_of_estimates: var.sqrt(),
            mean_se: reps.iter().map(|(r, _)| r.methods[m].se).sum::<f64>() / nf,
        };
    }
    Ok(MonteCarloSummary {
        config: *config,
        methods,
        mean_f: reps.iter().map(|(r, _)| r.f_statistic).sum::<f64>() / nf,
        mean_r2: reps.iter().map(|(r, _)| r.r_squared).sum::<f64>() / nf,
        n_reps_completed: n,
        n_regenerated: reps.iter().map(|(_, g)| g).sum(),
    })
}

/// Cross-product driver over scenarios, instrument strengths, and
/// (causal effect, confounding) settings.
pub fn run_grid(
    scenarios: &[Scenario],
    alphas: &[f64],
    effect_settings: &[(f64, f64)],
    n_reps: usize,
    seed: u64,
    parallelism: usize,
) -> Result<Vec<MonteCarloSummary>> {
    let mut out = Vec::new();
    for &scenario in scenarios {
        for &(beta_x, beta_u) in effect_settings {
            for &alpha in alphas {
                let config = ScenarioConfig::new(scenario, alpha, beta_x, beta_u)
                    .with_reps(n_reps)
                    .with_seed(seed);
                out.push(run_scenario(&config, parallelism)?);
            }
        }
    }
    Ok(out)
}

/// Writes grid results as CSV, one row per (cell, method).
pub fn write_grid_csv<W: Write>(summaries: &[MonteCarloSummary], writer: &mut W) -> Result<()> {
    writeln!(
        writer,
        "scenario,alpha,beta_x,beta_u,method,weights,mean,power_pct,sd,mean_se,mean_f,mean_r2,n_reps,seed"
    )?;
    for s in summaries {
        for (m, (rule, model)) in METHODS.iter().enumerate() {
            let ms = &s.methods[m];
            writeln!(
                writer,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                s.config.scenario.number(),
                s.config.alpha,
                s.config.beta_x_causal,
                s.config.beta_u,
                model.label(),
                rule.label(),
                ms.mean_estimate,
                100.0 * ms.power,
                ms.sd_of_estimates,
                ms.mean_se,
                s.mean_f,
                s.mean_r2,
                s.n_reps_completed,
                s.config.seed,
            )?;
        }
    }
    Ok(())
}
