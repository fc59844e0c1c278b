//! Pooling of per-variant causal estimates by inverse-variance weighted
//! meta-analysis: fixed-effect, additive random-effects (DerSimonian-Laird),
//! and multiplicative random-effects (overdispersed weighted regression)
//! models.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::ratio::{ratio_estimates, RatioEstimate, WeightRule};
use crate::summary::SummaryDataset;

/// Model for combining per-variant estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoolingModel {
    Fixed,
    AdditiveRandom,
    MultiplicativeRandom,
}

impl PoolingModel {
    pub fn label(&self) -> &'static str {
        match self {
            PoolingModel::Fixed => "fixed-effect",
            PoolingModel::AdditiveRandom => "additive random-effects",
            PoolingModel::MultiplicativeRandom => "multiplicative random-effects",
        }
    }
}

/// Pooled causal estimate with its standard error, 95% confidence interval,
/// and heterogeneity diagnostics.
///
/// `heterogeneity` is 0 for the fixed-effect model, the between-variant
/// standard deviation for the additive model, and the (unfloored) residual
/// dispersion ratio for the multiplicative model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvwResult {
    pub estimate: f64,
    pub se: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub p_value: f64,
    pub heterogeneity: f64,
    pub q_statistic: f64,
    pub n_variants: usize,
    pub rule: WeightRule,
    pub model: PoolingModel,
}

const Z_95: f64 = 1.96;

fn two_sided_p(z: f64) -> f64 {
    let normal = Normal::standard();
    2.0 * normal.cdf(-z.abs())
}

fn build_result(
    estimate: f64,
    se: f64,
    heterogeneity: f64,
    q_statistic: f64,
    n_variants: usize,
    rule: WeightRule,
    model: PoolingModel,
) -> IvwResult {
    IvwResult {
        estimate,
        se,
        ci_lower: estimate - Z_95 * se,
        ci_upper: estimate + Z_95 * se,
        p_value: two_sided_p(estimate / se),
        heterogeneity,
        q_statistic,
        n_variants,
        rule,
        model,
    }
}

struct Pooled {
    estimate: f64,
    se: f64,
    sum_w: f64,
    sum_w2: f64,
    q: f64,
}

fn pool(estimates: &[RatioEstimate], extra_variance: f64) -> Pooled {
    let mut sum_w = 0.0;
    let mut sum_w2 = 0.0;
    let mut sum_wb = 0.0;
    for e in estimates {
        let w = 1.0 / (e.variance + extra_variance);
        sum_w += w;
        sum_w2 += w * w;
        sum_wb += w * e.estimate;
    }
    let estimate = sum_wb / sum_w;
    let q = estimates
        .iter()
        .map(|e| {
            let w = 1.0 / (e.variance + extra_variance);
            w * (e.estimate - estimate) * (e.estimate - estimate)
        })
        .sum();
    Pooled {
        estimate,
        se: (1.0 / sum_w).sqrt(),
        sum_w,
        sum_w2,
        q,
    }
}

fn require(estimates: &[RatioEstimate], needed: usize) -> Result<()> {
    if estimates.len() < needed {
        return Err(Error::InsufficientEstimates {
            needed,
            got: estimates.len(),
        });
    }
    Ok(())
}

fn common_rule(estimates: &[RatioEstimate]) -> WeightRule {
    estimates[0].rule
}

/// Fixed-effect inverse-variance weighted estimate: the weighted mean of the
/// per-variant estimates with weights equal to inverse variances.
pub fn ivw_fixed(estimates: &[RatioEstimate]) -> Result<IvwResult> {
    require(estimates, 1)?;
    let p = pool(estimates, 0.0);
    Ok(build_result(
        p.estimate,
        p.se,
        0.0,
        p.q,
        estimates.len(),
        common_rule(estimates),
        PoolingModel::Fixed,
    ))
}

/// DerSimonian-Laird moment estimate of the between-variant variance:
/// max(0, (Q - (J-1)) / (S1 - S2/S1)).
pub fn dersimonian_laird(estimates: &[RatioEstimate]) -> Result<f64> {
    require(estimates, 2)?;
    let p = pool(estimates, 0.0);
    let j = estimates.len() as f64;
    Ok(((p.q - (j - 1.0)) / (p.sum_w - p.sum_w2 / p.sum_w)).max(0.0))
}

/// Additive random-effects pooled estimate: weights are recomputed as the
/// inverse of (variance + DL between-variant variance).
pub fn ivw_additive(estimates: &[RatioEstimate]) -> Result<IvwResult> {
    require(estimates, 2)?;
    let tau2 = dersimonian_laird(estimates)?;
    let fixed = pool(estimates, 0.0);
    let p = pool(estimates, tau2);
    Ok(build_result(
        p.estimate,
        p.se,
        tau2.sqrt(),
        fixed.q,
        estimates.len(),
        common_rule(estimates),
        PoolingModel::AdditiveRandom,
    ))
}

/// Multiplicative random-effects pooled estimate: same point estimate as the
/// fixed-effect model, with the standard error scaled by the residual
/// dispersion sqrt(Q/(J-1)), floored at 1 under underdispersion.
///
/// The unfloored dispersion is reported in `heterogeneity`; the floor applies
/// only to the standard error.
pub fn ivw_multiplicative(estimates: &[RatioEstimate]) -> Result<IvwResult> {
    require(estimates, 2)?;
    let p = pool(estimates, 0.0);
    let j = estimates.len() as f64;
    let phi_m = (p.q / (j - 1.0)).sqrt();
    Ok(build_result(
        p.estimate,
        p.se * phi_m.max(1.0),
        phi_m,
        p.q,
        estimates.len(),
        common_rule(estimates),
        PoolingModel::MultiplicativeRandom,
    ))
}

/// Pools `estimates` under the requested model.
pub fn ivw(estimates: &[RatioEstimate], model: PoolingModel) -> Result<IvwResult> {
    match model {
        PoolingModel::Fixed => ivw_fixed(estimates),
        PoolingModel::AdditiveRandom => ivw_additive(estimates),
        PoolingModel::MultiplicativeRandom => ivw_multiplicative(estimates),
    }
}

/// Full analysis of a summarized dataset: per-variant ratio estimates under
/// `rule`, pooled under `model`.
pub fn analyze(
    dataset: &SummaryDataset,
    rule: WeightRule,
    model: PoolingModel,
) -> Result<IvwResult> {
    let estimates = ratio_estimates(dataset, rule)?;
    ivw(&estimates, model)
}
