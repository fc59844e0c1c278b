//! Cross-checks of the estimators against independently coded closed forms
//! and against two-stage least squares on individual-level data.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use mrivw_core::meta::analyze;
use mrivw_core::meta::{dersimonian_laird, ivw_fixed, PoolingModel};
use mrivw_core::ratio::{
    ratio_estimates, variance_second_order_correlated, RatioEstimate, WeightRule,
};
use mrivw_core::regression::{two_stage_least_squares, weighted_no_intercept};
use mrivw_core::simulate::{generate_individual, generate_replication, Scenario, ScenarioConfig};
use mrivw_core::summary::{bundled_menopause_dataset, SummaryDataset, VariantAssociation};

fn random_estimates(rng: &mut ChaCha12Rng, j: usize) -> Vec<RatioEstimate> {
    (0..j)
        .map(|i| RatioEstimate {
            variant_id: format!("v{i}"),
            estimate: rng.random_range(-2.0..2.0),
            variance: rng.random_range(0.01..4.0),
            rule: WeightRule::FirstOrder,
        })
        .collect()
}

/// DerSimonian-Laird via a deliberately different algebraic route:
/// Q = sum(w b^2) - (sum w b)^2 / sum(w), then the moment equation.
fn dl_closed_form(estimates: &[RatioEstimate]) -> f64 {
    let w: Vec<f64> = estimates.iter().map(|e| 1.0 / e.variance).collect();
    let b: Vec<f64> = estimates.iter().map(|e| e.estimate).collect();
    let s1: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|x| x * x).sum();
    let swb: f64 = w.iter().zip(&b).map(|(w, b)| w * b).sum();
    let swb2: f64 = w.iter().zip(&b).map(|(w, b)| w * b * b).sum();
    let q = swb2 - swb * swb / s1;
    let j = estimates.len() as f64;
    ((q - (j - 1.0)) / (s1 - s2 / s1)).max(0.0)
}

#[test]
fn dersimonian_laird_matches_independent_closed_form() {
    let mut rng = ChaCha12Rng::seed_from_u64(41);
    for _ in 0..1000 {
        let j = rng.random_range(2..30);
        let estimates = random_estimates(&mut rng, j);
        let got = dersimonian_laird(&estimates).unwrap();
        let want = dl_closed_form(&estimates);
        let tol = 1e-10 * want.abs().max(1e-12);
        assert!((got - want).abs() <= tol, "J = {j}: {got} vs {want}");
    }
}

#[test]
fn correlated_variance_expanded_and_factored_forms_agree() {
    let mut rng = ChaCha12Rng::seed_from_u64(42);
    let mut checked = 0;
    while checked < 1000 {
        let bx: f64 = rng.random_range(-2.0..2.0);
        if bx.abs() < 1e-3 {
            continue;
        }
        let v = VariantAssociation::new(
            "v",
            bx,
            rng.random_range(0.001..0.5),
            rng.random_range(-2.0..2.0),
            rng.random_range(0.001..0.5),
        );
        let theta = rng.random_range(-1.0..1.0);
        let Ok(expanded) = variance_second_order_correlated(&v, theta) else {
            continue;
        };
        let r = v.beta_y / v.beta_x;
        let factored = (v.se_y * v.se_y + r * r * v.se_x * v.se_x
            - 2.0 * theta * r * v.se_y * v.se_x)
            / (v.beta_x * v.beta_x);
        assert!(
            (expanded - factored).abs() <= 1e-12 * expanded.abs().max(factored.abs()),
            "{expanded} vs {factored}"
        );
        checked += 1;
    }
}

#[test]
fn first_order_closed_form_matches_generic_pooling() {
    let mut datasets = vec![bundled_menopause_dataset()];
    let mut rng = ChaCha12Rng::seed_from_u64(43);
    for d in 0..50 {
        let j = rng.random_range(2..40);
        let variants = (0..j)
            .map(|i| {
                let mut bx: f64 = rng.random_range(-1.0..1.0);
                if bx.abs() < 1e-2 {
                    bx = 0.1;
                }
                VariantAssociation::new(
                    format!("v{i}"),
                    bx,
                    rng.random_range(0.001..0.2),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(0.001..0.2),
                )
            })
            .collect();
        datasets.push(SummaryDataset::new(format!("random{d}"), variants).unwrap());
    }
    for ds in &datasets {
        let estimates = ratio_estimates(ds, WeightRule::FirstOrder).unwrap();
        let pooled = ivw_fixed(&estimates).unwrap();
        let num: f64 = ds
            .variants
            .iter()
            .map(|v| v.beta_y * v.beta_x / (v.se_y * v.se_y))
            .sum();
        let den: f64 = ds
            .variants
            .iter()
            .map(|v| v.beta_x * v.beta_x / (v.se_y * v.se_y))
            .sum();
        let closed_estimate = num / den;
        let closed_se = (1.0 / den).sqrt();
        assert!(
            (pooled.estimate - closed_estimate).abs() <= 1e-12 * closed_estimate.abs().max(1e-12),
            "{}: estimate {} vs {}",
            ds.label,
            pooled.estimate,
            closed_estimate
        );
        assert!(
            (pooled.se - closed_se).abs() <= 1e-12 * closed_se,
            "{}: se {} vs {}",
            ds.label,
            pooled.se,
            closed_se
        );
    }
}

#[test]
fn weighted_regression_slope_matches_fixed_effect_pooling() {
    let ds = bundled_menopause_dataset();
    let y: Vec<f64> = ds.variants.iter().map(|v| v.beta_y).collect();
    let x: Vec<f64> = ds.variants.iter().map(|v| v.beta_x).collect();
    let w: Vec<f64> = ds
        .variants
        .iter()
        .map(|v| 1.0 / (v.se_y * v.se_y))
        .collect();
    let fit = weighted_no_intercept(&y, &x, &w).unwrap();
    let pooled = analyze(&ds, WeightRule::FirstOrder, PoolingModel::Fixed).unwrap();
    assert!(
        (fit.slope - pooled.estimate).abs() <= 1e-10 * pooled.estimate.abs(),
        "{} vs {}",
        fit.slope,
        pooled.estimate
    );
}

fn center(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    for x in v {
        *x -= m;
    }
}

#[test]
fn two_stage_least_squares_equals_pooling_with_orthogonal_instruments() {
    let config = ScenarioConfig::new(Scenario::S1, 0.1, 0.2, 1.0);
    for rep in 0..20u64 {
        let data = generate_individual(&config, rep);
        let n = data.x.len();
        let j = data.genotypes.ncols();
        let mut x = data.x.clone();
        let mut y = data.y.clone();
        center(&mut x);
        center(&mut y);
        let mut z = data.genotypes.clone();
        for c in 0..j {
            let m = z.column(c).sum() / n as f64;
            for r in 0..n {
                z[(r, c)] -= m;
            }
        }
        // Orthonormalize the centered genotype columns so univariate and
        // multivariable regression coefficients coincide.
        let qr = z.qr();
        let q = qr.q();
        let mut beta_x = Vec::with_capacity(j);
        let mut beta_y = Vec::with_capacity(j);
        let mut weights = Vec::with_capacity(j);
        for c in 0..j {
            let col = q.column(c);
            let ztz: f64 = col.dot(&col);
            beta_x.push(col.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / ztz);
            beta_y.push(col.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / ztz);
            // weight = (z'z) / sigma^2; the common residual variance cancels
            // in the slope, so it is omitted.
            weights.push(ztz);
        }
        let fit = weighted_no_intercept(&beta_y, &beta_x, &weights).unwrap();
        let q_mat = DMatrix::from_fn(n, j, |r, c| q[(r, c)]);
        let tsls = two_stage_least_squares(&x, &y, &q_mat).unwrap();
        assert!(
            (fit.slope - tsls).abs() < 1e-8,
            "rep {rep}: {} vs {tsls}",
            fit.slope
        );
    }
}

#[test]
fn two_stage_least_squares_converges_to_pooling_on_raw_genotypes() {
    let mut medians = Vec::new();
    for &n in &[1000usize, 5000, 20000] {
        let mut config = ScenarioConfig::new(Scenario::S1, 0.1, 0.2, 1.0);
        config.n_per_sample = n;
        let mut diffs = Vec::with_capacity(100);
        for rep in 0..100u64 {
            let data = generate_individual(&config, rep);
            let summary = generate_replication(&config, rep).unwrap();
            let pooled = analyze(&summary, WeightRule::FirstOrder, PoolingModel::Fixed).unwrap();
            let mut x = data.x.clone();
            let mut y = data.y.clone();
            center(&mut x);
            center(&mut y);
            let mut z = data.genotypes.clone();
            let j = z.ncols();
            for c in 0..j {
                let m = z.column(c).sum() / n as f64;
                for r in 0..n {
                    z[(r, c)] -= m;
                }
            }
            let tsls = two_stage_least_squares(&x, &y, &z).unwrap();
            diffs.push((tsls - pooled.estimate).abs());
        }
        diffs.sort_by(f64::total_cmp);
        medians.push((diffs[49] + diffs[50]) / 2.0);
    }
    assert!(
        medians[0] > medians[1] && medians[1] > medians[2],
        "medians not decreasing: {medians:?}"
    );
}
