//! Report assembly: full six-method analyses, leave-one-out, and sensitivity
//! sweeps over the correlation parameter, with table/CSV/JSON rendering.

use std::io::Write;

use serde::Serialize;

use mrivw_core::meta::{analyze, ivw, IvwResult, PoolingModel};
use mrivw_core::ratio::{ratio_estimates, variance_first_order, variance_second_order, WeightRule};
use mrivw_core::summary::SummaryDataset;
use mrivw_core::{Error, Result};

/// Output rendering mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Csv,
    Json,
}

/// One per-variant line of the analysis report.
#[derive(Debug, Clone, Serialize)]
pub struct VariantRow {
    pub id: String,
    pub ratio_estimate: f64,
    pub se_first_order: f64,
    pub se_second_order: f64,
    pub weight_first_order: f64,
    pub weight_second_order: f64,
}

/// One method's pooled result; `note` replaces `result` when a model is not
/// applicable (e.g. random effects on a single variant).
#[derive(Debug, Clone, Serialize)]
pub struct MethodRow {
    pub model: String,
    pub weights: String,
    pub result: Option<IvwResult>,
    pub note: Option<String>,
}

/// Results from all six weight/model combinations on one dataset.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub dataset: String,
    pub n_variants: usize,
    pub variants: Vec<VariantRow>,
    pub methods: Vec<MethodRow>,
}

const REPORT_METHODS: [(PoolingModel, WeightRule); 6] = [
    (PoolingModel::Fixed, WeightRule::SecondOrder),
    (PoolingModel::Fixed, WeightRule::FirstOrder),
    (PoolingModel::AdditiveRandom, WeightRule::SecondOrder),
    (PoolingModel::AdditiveRandom, WeightRule::FirstOrder),
    (PoolingModel::MultiplicativeRandom, WeightRule::SecondOrder),
    (PoolingModel::MultiplicativeRandom, WeightRule::FirstOrder),
];

/// Runs all six method combinations on `dataset`.
pub fn analysis_report(dataset: &SummaryDataset) -> Result<AnalysisReport> {
    let mut variants = Vec::with_capacity(dataset.len());
    for v in &dataset.variants {
        let var1 = variance_first_order(v)?;
        let var2 = variance_second_order(v)?;
        variants.push(VariantRow {
            id: v.id.clone(),
            ratio_estimate: v.beta_y / v.beta_x,
            se_first_order: var1.sqrt(),
            se_second_order: var2.sqrt(),
            weight_first_order: 1.0 / var1,
            weight_second_order: 1.0 / var2,
        });
    }

    let mut methods = Vec::with_capacity(6);
    for (model, rule) in REPORT_METHODS {
        let row = match analyze(dataset, rule, model) {
            Ok(result) => MethodRow {
                model: model.label().to_string(),
                weights: rule.label(),
                result: Some(result),
                note: None,
            },
            Err(Error::InsufficientEstimates { .. }) => MethodRow {
                model: model.label().to_string(),
                weights: rule.label(),
                result: None,
                note: Some("insufficient variants".to_string()),
            },
            Err(e) => return Err(e),
        };
        methods.push(row);
    }
    Ok(AnalysisReport {
        dataset: dataset.label.clone(),
        n_variants: dataset.len(),
        variants,
        methods,
    })
}

/// Analysis with one named variant removed.
pub fn leave_one_out(dataset: &SummaryDataset, variant_id: &str) -> Result<AnalysisReport> {
    analysis_report(&dataset.without(variant_id)?)
}

/// One model's estimate at one theta; `error` is set when a variant's
/// variance is non-positive at that theta.
#[derive(Debug, Clone, Serialize)]
pub struct SensitivityCell {
    pub model: String,
    pub result: Option<IvwResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivityRow {
    pub theta: f64,
    pub cells: Vec<SensitivityCell>,
}

/// Sensitivity sweep over the correlation parameter of the second-order
/// weights.
#[derive(Debug, Clone, Serialize)]
pub struct SensitivityReport {
    pub dataset: String,
    pub models: Vec<String>,
    pub rows: Vec<SensitivityRow>,
}

/// The default theta grid for sensitivity sweeps.
pub const DEFAULT_THETA_GRID: [f64; 6] = [-0.2, -0.1, 0.0, 0.1, 0.2, 0.3];

/// Runs each pooling model with correlated second-order weights for every
/// theta in `thetas` (must be strictly increasing, all |theta| <= 1).
pub fn sensitivity(
    dataset: &SummaryDataset,
    thetas: &[f64],
    models: &[PoolingModel],
) -> Result<SensitivityReport> {
    for pair in thetas.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidTheta(pair[1]));
        }
    }
    let mut rows = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let rule = WeightRule::SecondOrderCorrelated { theta };
        rule.validate()?;
        let estimates = ratio_estimates(dataset, rule);
        let mut cells = Vec::with_capacity(models.len());
        for &model in models {
            let cell = match &estimates {
                Ok(estimates) => match ivw(estimates, model) {
                    Ok(result) => SensitivityCell {
                        model: model.label().to_string(),
                        result: Some(result),
                        error: None,
                    },
                    Err(e) => SensitivityCell {
                        model: model.label().to_string(),
                        result: None,
                        error: Some(format!("theta = {theta}: {e}")),
                    },
                },
                Err(e) => SensitivityCell {
                    model: model.label().to_string(),
                    result: None,
                    error: Some(format!("theta = {theta}: {e}")),
                },
            };
            cells.push(cell);
        }
        rows.push(SensitivityRow { theta, cells });
    }
    Ok(SensitivityReport {
        dataset: dataset.label.clone(),
        models: models.iter().map(|m| m.label().to_string()).collect(),
        rows,
    })
}

fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

impl AnalysisReport {
    pub fn write_table<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "Dataset: {} ({} variants)",
            self.dataset, self.n_variants
        )?;
        writeln!(w)?;
        writeln!(
            w,
            "{:<52} {:>9} {:>9} {:>19} {:>9} {:>8}",
            "Method", "Estimate", "SE", "95% CI", "p", "phi"
        )?;
        for row in &self.methods {
            let label = format!("{}, {} weights", capitalize(&row.model), row.weights);
            match (&row.result, &row.note) {
                (Some(r), _) => {
                    let het = if r.model == PoolingModel::Fixed {
                        "-".to_string()
                    } else {
                        format!("{:.3}", r.heterogeneity)
                    };
                    writeln!(
                        w,
                        "{:<52} {:>9} {:>9} {:>9}, {:>8} {:>9.4} {:>8}",
                        label,
                        fmt4(r.estimate),
                        fmt4(r.se),
                        fmt4(r.ci_lower),
                        fmt4(r.ci_upper),
                        r.p_value,
                        het
                    )?;
                }
                (None, Some(note)) => writeln!(w, "{label:<52} {note}")?,
                (None, None) => unreachable!("row has neither result nor note"),
            }
        }
        writeln!(w)?;
        writeln!(
            w,
            "{:<12} {:>10} {:>10} {:>10} {:>12} {:>12}",
            "Variant", "Ratio", "SE(1st)", "SE(2nd)", "w(1st)", "w(2nd)"
        )?;
        for v in &self.variants {
            writeln!(
                w,
                "{:<12} {:>10} {:>10} {:>10} {:>12.2} {:>12.2}",
                v.id,
                fmt4(v.ratio_estimate),
                fmt4(v.se_first_order),
                fmt4(v.se_second_order),
                v.weight_first_order,
                v.weight_second_order
            )?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "model,weights,estimate,se,ci_lower,ci_upper,p_value,heterogeneity,note"
        )?;
        for row in &self.methods {
            match &row.result {
                Some(r) => writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},",
                    row.model,
                    row.weights,
                    r.estimate,
                    r.se,
                    r.ci_lower,
                    r.ci_upper,
                    r.p_value,
                    r.heterogeneity
                )?,
                None => writeln!(
                    w,
                    "{},{},,,,,,,{}",
                    row.model,
                    row.weights,
                    row.note.as_deref().unwrap_or("")
                )?,
            }
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut *w, self)?;
        writeln!(w)
    }

    pub fn write<W: Write>(&self, format: OutputFormat, w: &mut W) -> std::io::Result<()> {
        match format {
            OutputFormat::Table => self.write_table(w),
            OutputFormat::Csv => self.write_csv(w),
            OutputFormat::Json => self.write_json(w),
        }
    }
}

impl SensitivityReport {
    pub fn write_table<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "Dataset: {}", self.dataset)?;
        writeln!(w)?;
        write!(w, "{:>6}", "theta")?;
        for model in &self.models {
            write!(w, "  {:>8} {:>16}", capitalize(model), "95% CI")?;
        }
        writeln!(w)?;
        for row in &self.rows {
            write!(w, "{:>6}", format!("{}", row.theta))?;
            for cell in &row.cells {
                match &cell.result {
                    Some(r) => write!(
                        w,
                        "  {:>8.3} {:>7.3}, {:>6.3}",
                        r.estimate, r.ci_lower, r.ci_upper
                    )?,
                    None => write!(w, "  {:>24}", cell.error.as_deref().unwrap_or("error"))?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "theta,model,estimate,se,ci_lower,ci_upper,error")?;
        for row in &self.rows {
            for cell in &row.cells {
                match &cell.result {
                    Some(r) => writeln!(
                        w,
                        "{},{},{},{},{},{},",
                        row.theta, cell.model, r.estimate, r.se, r.ci_lower, r.ci_upper
                    )?,
                    None => writeln!(
                        w,
                        "{},{},,,,,{}",
                        row.theta,
                        cell.model,
                        cell.error.as_deref().unwrap_or("")
                    )?,
                }
            }
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut *w, self)?;
        writeln!(w)
    }

    pub fn write<W: Write>(&self, format: OutputFormat, w: &mut W) -> std::io::Result<()> {
        match format {
            OutputFormat::Table => self.write_table(w),
            OutputFormat::Csv => self.write_csv(w),
            OutputFormat::Json => self.write_json(w),
        }
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}
