//! Per-variant ratio estimates and their delta-method variances.
//!
//! Three weighting rules are supported: first-order (outcome variance only),
//! second-order (adds the term from uncertainty in the risk-factor
//! association), and the correlated second-order form with a cross-term in
//! the correlation parameter theta. First- and second-order are the
//! correlated form with theta-independent terms dropped and theta = 0
//! respectively.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summary::{SummaryDataset, VariantAssociation};

/// Variance rule used to weight per-variant causal estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightRule {
    FirstOrder,
    SecondOrder,
    SecondOrderCorrelated { theta: f64 },
}

impl WeightRule {
    pub fn validate(&self) -> Result<()> {
        if let WeightRule::SecondOrderCorrelated { theta } = self {
            if !theta.is_finite() || theta.abs() > 1.0 {
                return Err(Error::InvalidTheta(*theta));
            }
        }
        Ok(())
    }

    /// Variance of the ratio estimate for `v` under this rule.
    pub fn variance(&self, v: &VariantAssociation) -> Result<f64> {
        match *self {
            WeightRule::FirstOrder => variance_first_order(v),
            WeightRule::SecondOrder => variance_second_order(v),
            WeightRule::SecondOrderCorrelated { theta } => {
                variance_second_order_correlated(v, theta)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            WeightRule::FirstOrder => "first-order".to_string(),
            WeightRule::SecondOrder => "second-order".to_string(),
            WeightRule::SecondOrderCorrelated { theta } => {
                format!("second-order (theta = {theta})")
            }
        }
    }
}

/// A per-variant causal estimate with its variance under a weighting rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub variant_id: String,
    pub estimate: f64,
    pub variance: f64,
    pub rule: WeightRule,
}

fn check_instrument(v: &VariantAssociation) -> Result<()> {
    if v.beta_x == 0.0 {
        return Err(Error::NullInstrument(Some(v.id.clone())));
    }
    Ok(())
}

/// Ratio estimate of the causal effect: outcome association over risk-factor
/// association.
pub fn ratio_estimate(v: &VariantAssociation) -> Result<f64> {
    check_instrument(v)?;
    Ok(v.beta_y / v.beta_x)
}

/// First-order delta-method variance: se_y^2 / beta_x^2.
pub fn variance_first_order(v: &VariantAssociation) -> Result<f64> {
    check_instrument(v)?;
    Ok(v.se_y * v.se_y / (v.beta_x * v.beta_x))
}

/// Second-order delta-method variance assuming zero correlation between the
/// two association estimates: se_y^2/beta_x^2 + beta_y^2 se_x^2 / beta_x^4.
pub fn variance_second_order(v: &VariantAssociation) -> Result<f64> {
    check_instrument(v)?;
    let bx2 = v.beta_x * v.beta_x;
    Ok(v.se_y * v.se_y / bx2 + v.beta_y * v.beta_y * v.se_x * v.se_x / (bx2 * bx2))
}

/// Full second-order delta-method variance with correlation `theta` between
/// the risk-factor and outcome association estimates.
///
/// A non-positive computed variance (possible for extreme theta) is an error,
/// not a clamp.
pub fn variance_second_order_correlated(v: &VariantAssociation, theta: f64) -> Result<f64> {
    check_instrument(v)?;
    if !theta.is_finite() || theta.abs() > 1.0 {
        return Err(Error::InvalidTheta(theta));
    }
    let bx2 = v.beta_x * v.beta_x;
    let var = v.se_y * v.se_y / bx2 + v.beta_y * v.beta_y * v.se_x * v.se_x / (bx2 * bx2)
        - 2.0 * theta * v.beta_y * v.se_y * v.se_x / (bx2 * v.beta_x);
    if var <= 0.0 {
        return Err(Error::NonPositiveVariance(Some(v.id.clone())));
    }
    Ok(var)
}

/// Computes ratio estimates for every variant in the dataset under `rule`.
pub fn ratio_estimates(dataset: &SummaryDataset, rule: WeightRule) -> Result<Vec<RatioEstimate>> {
    rule.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    dataset
        .variants
        .iter()
        .map(|v| {
            Ok(RatioEstimate {
                variant_id: v.id.clone(),
                estimate: ratio_estimate(v)?,
                variance: rule.variance(v)?,
                rule,
            })
        })
        .collect()
}
