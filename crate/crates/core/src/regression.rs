//! Linear-model primitives: univariate OLS (for summarizing individual-level
//! data), weighted no-intercept regression (the regression formulation of the
//! pooled estimate), and two-stage least squares.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Univariate OLS fit with intercept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
}

/// Weighted no-intercept fit. `slope_se_raw` is the standard error as a
/// regression package would report it, i.e. scaled by the residual sigma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WlsFit {
    pub slope: f64,
    pub slope_se_raw: f64,
    pub residual_sigma: f64,
}

/// Simple linear regression of `response` on `regressor` with intercept.
/// Classical slope SE with n - 2 degrees of freedom. An exact fit returns
/// se = 0 rather than erroring.
pub fn simple_ols(response: &[f64], regressor: &[f64]) -> Result<OlsFit> {
    let n = response.len();
    if n != regressor.len() {
        return Err(Error::LengthMismatch(n, regressor.len()));
    }
    if n < 3 {
        return Err(Error::TooFewObservations { n, p: 2 });
    }
    let nf = n as f64;
    let mean_x = regressor.iter().sum::<f64>() / nf;
    let mean_y = response.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in regressor.iter().zip(response) {
        let dx = x - mean_x;
        sxx += dx * dx;
        sxy += dx * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateRegressor);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rss: f64 = regressor
        .iter()
        .zip(response)
        .map(|(&x, &y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let slope_se = (rss.max(0.0) / (nf - 2.0) / sxx).sqrt();
    Ok(OlsFit {
        slope,
        slope_se,
        intercept,
    })
}

/// Weighted regression of `y` on `x` through the origin:
/// slope = sum(w x y) / sum(w x^2), residual_sigma^2 = sum(w r^2) / (J - 1).
pub fn weighted_no_intercept(y: &[f64], x: &[f64], weights: &[f64]) -> Result<WlsFit> {
    let j = y.len();
    if x.len() != j {
        return Err(Error::LengthMismatch(j, x.len()));
    }
    if weights.len() != j {
        return Err(Error::LengthMismatch(j, weights.len()));
    }
    if j == 0 {
        return Err(Error::EmptyDataset);
    }
    if let Some(i) = weights.iter().position(|&w| w.is_nan() || w <= 0.0) {
        return Err(Error::NonPositiveWeight(i));
    }
    let mut swxx = 0.0;
    let mut swxy = 0.0;
    for i in 0..j {
        swxx += weights[i] * x[i] * x[i];
        swxy += weights[i] * x[i] * y[i];
    }
    if swxx == 0.0 {
        return Err(Error::DegenerateRegressor);
    }
    let slope = swxy / swxx;
    let residual_sigma = if j >= 2 {
        let wrss: f64 = (0..j)
            .map(|i| {
                let r = y[i] - slope * x[i];
                weights[i] * r * r
            })
            .sum();
        (wrss.max(0.0) / (j as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(WlsFit {
        slope,
        slope_se_raw: residual_sigma / swxx.sqrt(),
        residual_sigma,
    })
}

/// Two-stage least squares estimate of the causal effect with a single
/// exposure column and `J` instrument columns (no intercept):
/// [X'Z (Z'Z)^-1 Z'X]^-1 X'Z (Z'Z)^-1 Z'Y.
pub fn two_stage_least_squares(x: &[f64], y: &[f64], z: &DMatrix<f64>) -> Result<f64> {
    let n = z.nrows();
    let j = z.ncols();
    if x.len() != n {
        return Err(Error::LengthMismatch(x.len(), n));
    }
    if y.len() != n {
        return Err(Error::LengthMismatch(y.len(), n));
    }
    if n <= j {
        return Err(Error::TooFewObservations { n, p: j });
    }
    let xv = DVector::from_column_slice(x);
    let yv = DVector::from_column_slice(y);
    let ztz = z.transpose() * z;
    let chol = Cholesky::new(ztz).ok_or(Error::SingularDesign)?;
    let ztx = z.transpose() * &xv;
    let zty = z.transpose() * &yv;
    let proj_x = chol.solve(&ztx);
    let denom = ztx.dot(&proj_x);
    if denom == 0.0 {
        return Err(Error::SingularDesign);
    }
    Ok(proj_x.dot(&zty) / denom)
}

/// Joint F statistic and R^2 from the multivariable regression of `x` on all
/// columns of `z`, with intercept.
pub fn joint_f_and_r2(x: &[f64], z: &DMatrix<f64>) -> Result<(f64, f64)> {
    let n = z.nrows();
    let j = z.ncols();
    if x.len() != n {
        return Err(Error::LengthMismatch(x.len(), n));
    }
    if n <= j + 1 {
        return Err(Error::TooFewObservations { n, p: j + 1 });
    }
    // design = [1 | z]
    let mut design = DMatrix::zeros(n, j + 1);
    for i in 0..n {
        design[(i, 0)] = 1.0;
        for k in 0..j {
            design[(i, k + 1)] = z[(i, k)];
        }
    }
    let xv = DVector::from_column_slice(x);
    let dtd = design.transpose() * &design;
    let chol = Cholesky::new(dtd).ok_or(Error::SingularDesign)?;
    let dtx = design.transpose() * &xv;
    let coef = chol.solve(&dtx);
    let fitted = design * coef;
    let mean_x = x.iter().sum::<f64>() / n as f64;
    let tss: f64 = x.iter().map(|&v| (v - mean_x) * (v - mean_x)).sum();
    let rss: f64 = x
        .iter()
        .zip(fitted.iter())
        .map(|(&v, &f)| (v - f) * (v - f))
        .sum();
    if tss == 0.0 {
        return Err(Error::DegenerateRegressor);
    }
    let r2 = 1.0 - rss / tss;
    let f = (tss - rss) / j as f64 / (rss / (n - j - 1) as f64);
    Ok((f, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn exact_fit_has_zero_se() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let fit = simple_ols(&y, &x).unwrap();
        assert_relative_eq!(fit.slope, 2.0, max_relative = 1e-12);
        assert_relative_eq!(fit.intercept, 1.0, max_relative = 1e-12);
        assert!(fit.slope_se < 1e-7);
    }

    #[test]
    fn constant_regressor_errors() {
        let x = vec![1.0; 5];
        let y = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            simple_ols(&y, &x),
            Err(Error::DegenerateRegressor)
        ));
        let z = vec![0.0; 5];
        assert!(simple_ols(&y, &z).is_err());
    }

    // Independent normal-equations oracle for simple OLS: solve the 2x2
    // system [[n, Sx], [Sx, Sxx]] [a, b]' = [Sy, Sxy]' directly.
    fn ols_oracle(y: &[f64], x: &[f64]) -> (f64, f64, f64) {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let det = n * sxx - sx * sx;
        let intercept = (sy * sxx - sx * sxy) / det;
        let slope = (n * sxy - sx * sy) / det;
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(&xi, &yi)| {
                let r = yi - intercept - slope * xi;
                r * r
            })
            .sum();
        let se = (rss / (n - 2.0) * n / det).sqrt();
        (slope, se, intercept)
    }

    #[test]
    fn ols_matches_normal_equations_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(5..60);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y: Vec<f64> = x
                .iter()
                .map(|&v| 1.5 * v - 0.3 + rng.random_range(-1.0..1.0))
                .collect();
            let fit = simple_ols(&y, &x).unwrap();
            let (slope, se, intercept) = ols_oracle(&y, &x);
            assert_relative_eq!(fit.slope, slope, max_relative = 1e-10);
            assert_relative_eq!(fit.slope_se, se, max_relative = 1e-10);
            assert_relative_eq!(fit.intercept, intercept, max_relative = 1e-8);
        }
    }

    #[test]
    fn weighted_no_intercept_matches_motivating_example_first_order() {
        let ds = crate::summary::bundled_menopause_dataset();
        let y: Vec<f64> = ds.variants.iter().map(|v| v.beta_y).collect();
        let x: Vec<f64> = ds.variants.iter().map(|v| v.beta_x).collect();
        let w: Vec<f64> = ds
            .variants
            .iter()
            .map(|v| 1.0 / (v.se_y * v.se_y))
            .collect();
        let fit = weighted_no_intercept(&y, &x, &w).unwrap();
        assert!((fit.slope - 0.0103).abs() < 5e-5);
        assert!((fit.residual_sigma - 2.826).abs() < 1e-3);
    }

    #[test]
    fn weighted_no_intercept_matches_motivating_example_second_order() {
        let ds = crate::summary::bundled_menopause_dataset();
        let y: Vec<f64> = ds.variants.iter().map(|v| v.beta_y).collect();
        let x: Vec<f64> = ds.variants.iter().map(|v| v.beta_x).collect();
        let w: Vec<f64> = ds
            .variants
            .iter()
            .map(|v| {
                1.0 / (v.se_y * v.se_y
                    + v.beta_y * v.beta_y * v.se_x * v.se_x / (v.beta_x * v.beta_x))
            })
            .collect();
        let fit = weighted_no_intercept(&y, &x, &w).unwrap();
        assert!((fit.slope - 0.0021).abs() < 5e-5);
        assert!((fit.residual_sigma - 1.686).abs() < 1e-3);
    }

    #[test]
    fn exact_proportionality_has_zero_sigma() {
        let x = vec![1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 0.7 * v).collect();
        let fit = weighted_no_intercept(&y, &x, &[1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(fit.slope, 0.7, max_relative = 1e-12);
        assert!(fit.residual_sigma < 1e-8);
    }

    #[test]
    fn weighted_no_intercept_rejects_bad_input() {
        assert!(matches!(
            weighted_no_intercept(&[1.0, 2.0], &[0.0, 0.0], &[1.0, 1.0]),
            Err(Error::DegenerateRegressor)
        ));
        assert!(matches!(
            weighted_no_intercept(&[1.0, 2.0], &[1.0, 2.0], &[1.0, -1.0]),
            Err(Error::NonPositiveWeight(1))
        ));
    }

    #[test]
    fn tsls_with_instrument_equal_to_exposure_is_no_intercept_ols() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let n = 200;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&v| 0.4 * v + rng.random_range(-0.5..0.5))
            .collect();
        let z = DMatrix::from_fn(n, 1, |i, _| x[i]);
        let tsls = two_stage_least_squares(&x, &y, &z).unwrap();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        assert_relative_eq!(tsls, sxy / sxx, max_relative = 1e-10);
    }

    #[test]
    fn tsls_single_instrument_is_covariance_ratio() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let n = 500;
        let zraw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
        let zmean = zraw.iter().sum::<f64>() / n as f64;
        // centered instrument so the no-intercept projection matches covariances
        let zc: Vec<f64> = zraw.iter().map(|v| v - zmean).collect();
        let x: Vec<f64> = zc
            .iter()
            .map(|&v| 0.3 * v + rng.random_range(-1.0..1.0))
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&v| 0.5 * v + rng.random_range(-1.0..1.0))
            .collect();
        let z = DMatrix::from_fn(n, 1, |i, _| zc[i]);
        let tsls = two_stage_least_squares(&x, &y, &z).unwrap();
        let cov = |a: &[f64], b: &[f64]| {
            let ma = a.iter().sum::<f64>() / n as f64;
            let mb = b.iter().sum::<f64>() / n as f64;
            a.iter()
                .zip(b)
                .map(|(&u, &v)| (u - ma) * (v - mb))
                .sum::<f64>()
        };
        assert_relative_eq!(tsls, cov(&zc, &y) / cov(&zc, &x), max_relative = 1e-10);
    }

    #[test]
    fn joint_f_near_one_under_the_null() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let n = 2000;
        let j = 20;
        let z = DMatrix::from_fn(n, j, |_, _| rng.random_range(0.0f64..3.0).floor());
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (f, r2) = joint_f_and_r2(&x, &z).unwrap();
        assert!(f > 0.4 && f < 1.8, "f = {f}");
        assert!(r2 < 0.03, "r2 = {r2}");
    }

    proptest! {
        // Unit weights with J >= 2 reduce to textbook no-intercept OLS, checked
        // against a directly evaluated normal equation.
        #[test]
        fn unit_weights_match_no_intercept_ols(
            pairs in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..20)
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            prop_assume!(x.iter().any(|&v| v != 0.0));
            let w = vec![1.0; x.len()];
            let fit = weighted_no_intercept(&y, &x, &w).unwrap();
            let slope = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>()
                / x.iter().map(|a| a * a).sum::<f64>();
            prop_assert!((fit.slope - slope).abs() <= 1e-10 * slope.abs().max(1.0));
        }

        // Rescaling all weights by c > 0 changes nothing reported.
        #[test]
        fn weight_scaling_invariance(
            pairs in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0.01f64..10.0), 2..20),
            c in 0.01f64..100.0
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let w: Vec<f64> = pairs.iter().map(|p| p.2).collect();
            prop_assume!(x.iter().any(|&v| v != 0.0));
            let a = weighted_no_intercept(&y, &x, &w).unwrap();
            let ws: Vec<f64> = w.iter().map(|&v| c * v).collect();
            let b = weighted_no_intercept(&y, &x, &ws).unwrap();
            prop_assert!((a.slope - b.slope).abs() <= 1e-10 * a.slope.abs().max(1.0));
            prop_assert!((a.residual_sigma * c.sqrt() - b.residual_sigma).abs()
                <= 1e-9 * b.residual_sigma.max(1e-12));
            prop_assert!((a.slope_se_raw - b.slope_se_raw).abs()
                <= 1e-10 * a.slope_se_raw.max(1e-12));
        }
    }
}
