//! Summarized genetic association data: per-variant beta-coefficients and
//! standard errors for the risk factor and the outcome, loaded from CSV.
//!
//! The analysis methods assume the variants are independently distributed
//! (not in linkage disequilibrium); this is an assumption about the data
//! source, not something checked here.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One genetic variant's summarized associations with the risk factor
/// (`beta_x`, `se_x`) and the outcome (`beta_y`, `se_y`).
///
/// Allele and gene-region fields are carried as metadata only; no allele
/// harmonization is performed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantAssociation {
    pub id: String,
    #[serde(default)]
    pub gene_region: Option<String>,
    #[serde(default)]
    pub effect_allele: Option<char>,
    #[serde(default)]
    pub other_allele: Option<char>,
    pub beta_x: f64,
    pub se_x: f64,
    pub beta_y: f64,
    pub se_y: f64,
}

impl VariantAssociation {
    pub fn new(id: impl Into<String>, beta_x: f64, se_x: f64, beta_y: f64, se_y: f64) -> Self {
        VariantAssociation {
            id: id.into(),
            gene_region: None,
            effect_allele: None,
            other_allele: None,
            beta_x,
            se_x,
            beta_y,
            se_y,
        }
    }

    /// Checks the field invariants: finite associations, strictly positive
    /// standard errors. `row` is used for error reporting (1-based data row).
    pub fn validate(&self, row: usize) -> Result<()> {
        for (name, value) in [
            ("beta_x", self.beta_x),
            ("se_x", self.se_x),
            ("beta_y", self.beta_y),
            ("se_y", self.se_y),
        ] {
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    row,
                    column: name.to_string(),
                });
            }
        }
        for (name, value) in [("se_x", self.se_x), ("se_y", self.se_y)] {
            if value <= 0.0 {
                return Err(Error::NonPositiveStandardError {
                    row,
                    column: name.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// An ordered, validated collection of variant associations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDataset {
    pub label: String,
    pub variants: Vec<VariantAssociation>,
}

impl SummaryDataset {
    /// Builds a dataset, rejecting empty input, invalid rows, and duplicate ids.
    pub fn new(label: impl Into<String>, variants: Vec<VariantAssociation>) -> Result<Self> {
        if variants.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut seen = HashSet::new();
        for (i, v) in variants.iter().enumerate() {
            v.validate(i + 1)?;
            if !seen.insert(v.id.clone()) {
                return Err(Error::DuplicateId(v.id.clone()));
            }
        }
        Ok(SummaryDataset {
            label: label.into(),
            variants,
        })
    }

    pub fn len(&self) -> usize {
        self.variants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variants.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&VariantAssociation> {
        self.variants.iter().find(|v| v.id == id)
    }

    /// Dataset with the named variant removed (for leave-one-out analyses).
    pub fn without(&self, id: &str) -> Result<SummaryDataset> {
        if self.get(id).is_none() {
            return Err(Error::UnknownVariant(id.to_string()));
        }
        let variants = self
            .variants
            .iter()
            .filter(|v| v.id != id)
            .cloned()
            .collect();
        SummaryDataset::new(format!("{} (without {})", self.label, id), variants)
    }

    /// Writes the dataset back out in the input CSV schema. Numeric fields use
    /// shortest round-trip formatting, so decimal inputs are preserved exactly.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "id",
            "gene_region",
            "effect_allele",
            "other_allele",
            "beta_x",
            "se_x",
            "beta_y",
            "se_y",
        ])?;
        for v in &self.variants {
            w.write_record([
                v.id.as_str(),
                v.gene_region.as_deref().unwrap_or(""),
                &v.effect_allele.map(String::from).unwrap_or_default(),
                &v.other_allele.map(String::from).unwrap_or_default(),
                &v.beta_x.to_string(),
                &v.se_x.to_string(),
                &v.beta_y.to_string(),
                &v.se_y.to_string(),
            ])?;
        }
        w.flush().map_err(Error::Io)
    }
}

const REQUIRED_COLUMNS: [&str; 5] = ["id", "beta_x", "se_x", "beta_y", "se_y"];
const OPTIONAL_COLUMNS: [&str; 3] = ["gene_region", "effect_allele", "other_allele"];

/// Loads a summarized dataset from a CSV file.
///
/// Required columns: `id`, `beta_x`, `se_x`, `beta_y`, `se_y`. Optional:
/// `gene_region`, `effect_allele`, `other_allele`. Unrecognized columns are
/// ignored with a warning. Row order is preserved.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<SummaryDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    read_dataset(file, label)
}

/// Parses a summarized dataset from any CSV reader. See [`load_dataset`].
pub fn read_dataset<R: Read>(reader: R, label: impl Into<String>) -> Result<SummaryDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.to_string()).collect();

    let find = |name: &str| headers.iter().position(|h| h == name);
    for required in REQUIRED_COLUMNS {
        if find(required).is_none() {
            return Err(Error::MissingColumn(required.to_string()));
        }
    }
    for header in &headers {
        if !REQUIRED_COLUMNS.contains(&header.as_str())
            && !OPTIONAL_COLUMNS.contains(&header.as_str())
        {
            log::warn!("ignoring unrecognized column `{header}`");
        }
    }

    let idx_id = find("id").unwrap();
    let idx_bx = find("beta_x").unwrap();
    let idx_sx = find("se_x").unwrap();
    let idx_by = find("beta_y").unwrap();
    let idx_sy = find("se_y").unwrap();
    let idx_gene = find("gene_region");
    let idx_ea = find("effect_allele");
    let idx_oa = find("other_allele");

    let parse = |row: usize, column: &str, value: &str| -> Result<f64> {
        value.parse::<f64>().map_err(|_| Error::ParseNumber {
            row,
            column: column.to_string(),
            value: value.to_string(),
        })
    };

    let mut variants = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let get = |idx: usize| record.get(idx).unwrap_or("");
        let opt_str = |idx: Option<usize>| {
            idx.map(get)
                .filter(|s| !s.is_empty())
                .map(|s| s.to_string())
        };
        let opt_char = |idx: Option<usize>| idx.map(get).and_then(|s| s.chars().next());
        let v = VariantAssociation {
            id: get(idx_id).to_string(),
            gene_region: opt_str(idx_gene),
            effect_allele: opt_char(idx_ea),
            other_allele: opt_char(idx_oa),
            beta_x: parse(row, "beta_x", get(idx_bx))?,
            se_x: parse(row, "se_x", get(idx_sx))?,
            beta_y: parse(row, "beta_y", get(idx_by))?,
            se_y: parse(row, "se_y", get(idx_sy))?,
        };
        v.validate(row)?;
        variants.push(v);
    }
    SummaryDataset::new(label, variants)
}

/// The bundled 47-variant early-menopause -> triglycerides dataset.
///
/// Per-allele associations with age at menopause (years) and with
/// triglycerides (SD units), from published consortium results.
pub fn bundled_menopause_dataset() -> SummaryDataset {
    static CSV: &str = include_str!("../data/menopause_triglycerides.csv");
    read_dataset(CSV.as_bytes(), "menopause_triglycerides").expect("bundled dataset is valid")
}
