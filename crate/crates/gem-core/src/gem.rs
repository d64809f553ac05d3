//! Step 1 of the pipeline: fit the general linear model per response and
//! decompose the data into per-term effect matrices plus residuals.
//!
//! The fit solves least squares once through a shared QR factorization of the
//! design matrix and reuses it for every response column. For each term d the
//! effect matrix is `E_d = x_d beta_d`; the residual matrix R is what the
//! full model leaves unexplained; `ER_d = E_d + R` has the same shape as Y
//! and is the input to the step-2 analyses.

use crate::dataset::{Dataset, Variable, VariableData};
use crate::design::{build_design, parse_formula, CodedDesign, ModelSpec, Term};
use crate::error::{Error, Result};
use crate::linalg::QrFactor;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Fitted GLM decomposition of a response matrix.
#[derive(Clone, Debug)]
pub struct GemFit {
    pub spec: ModelSpec,
    pub design: CodedDesign,
    /// Grand-mean (intercept) estimate per response.
    pub mu: Array1<f64>,
    /// Per-term coefficient block, `k_d x N`, in term order.
    pub beta: Vec<(Term, Array2<f64>)>,
    /// Per-term effect matrix `E_d = x_d beta_d`, `n x N`.
    pub effects: Vec<(Term, Array2<f64>)>,
    /// Full-model residuals, `n x N`.
    pub residuals: Array2<f64>,
}

/// Least-squares fit of the design to every response column at once.
pub fn fit_gem(design: &CodedDesign, y: &Array2<f64>) -> Result<GemFit> {
    let n = design.n_samples();
    if y.nrows() != n {
        return Err(Error::Dimension(format!(
            "design has {n} rows, Y has {}",
            y.nrows()
        )));
    }
    if let Some(((i, j), _)) = y.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: i,
            column: format!("response {j}"),
        });
    }
    let qr = QrFactor::new(&design.x);
    let diag = qr.r_diag_abs();
    let dmax = diag.iter().cloned().fold(0.0f64, f64::max);
    if diag.iter().any(|&d| d <= 1e-12 * dmax) {
        return Err(Error::RankDeficient {
            term: "design".into(),
        });
    }
    let beta_full = qr.solve(y);

    let mu = beta_full.row(0).to_owned();
    let mut beta = Vec::with_capacity(design.blocks.len());
    let mut effects = Vec::with_capacity(design.blocks.len());
    for (term, range) in &design.blocks {
        let beta_d = beta_full
            .slice(ndarray::s![range.start..range.end, ..])
            .to_owned();
        let x_d = design.x.slice(ndarray::s![.., range.start..range.end]);
        let e_d = x_d.dot(&beta_d);
        beta.push((term.clone(), beta_d));
        effects.push((term.clone(), e_d));
    }
    let fitted = design.x.dot(&beta_full);
    let residuals = y - &fitted;

    Ok(GemFit {
        spec: ModelSpec {
            response: String::new(),
            terms: design.blocks.iter().map(|(t, _)| t.clone()).collect(),
        },
        design: design.clone(),
        mu,
        beta,
        effects,
        residuals,
    })
}

/// Fit a model formula to a dataset (design construction plus [`fit_gem`]).
pub fn fit_gem_dataset(spec: &ModelSpec, d: &Dataset) -> Result<GemFit> {
    let design = build_design(spec, d)?;
    let mut fit = fit_gem(&design, &d.y)?;
    fit.spec = spec.clone();
    Ok(fit)
}

impl GemFit {
    pub fn n_samples(&self) -> usize {
        self.residuals.nrows()
    }

    pub fn n_responses(&self) -> usize {
        self.residuals.ncols()
    }

    fn term_index(&self, term: &Term) -> Result<usize> {
        self.effects
            .iter()
            .position(|(t, _)| t == term)
            .ok_or_else(|| Error::UnknownTerm(term.to_string()))
    }

    /// The effect matrix `E_d` of one term.
    pub fn effect_matrix(&self, term: &Term) -> Result<&Array2<f64>> {
        Ok(&self.effects[self.term_index(term)?].1)
    }

    /// `ER_d = E_d + R`.
    pub fn er_matrix(&self, term: &Term) -> Result<Array2<f64>> {
        Ok(self.effect_matrix(term)? + &self.residuals)
    }

    /// Combined ER over several terms: `sum E_d + R`.
    pub fn combined_er(&self, terms: &[Term]) -> Result<Array2<f64>> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument(
                "combined_er needs at least one term".into(),
            ));
        }
        let mut seen = Vec::new();
        let mut acc = self.residuals.clone();
        for term in terms {
            let idx = self.term_index(term)?;
            if seen.contains(&idx) {
                continue;
            }
            seen.push(idx);
            acc += &self.effects[idx].1;
        }
        Ok(acc)
    }

    /// `1 mu + sum E_d + R`; equals Y up to round-off.
    pub fn reconstruct(&self) -> Array2<f64> {
        let mut out = self.residuals.clone();
        for (_, e) in &self.effects {
            out += e;
        }
        for mut row in out.rows_mut() {
            row += &self.mu;
        }
        out
    }

    /// Per-term fraction of centered variance `||E_d||_F^2 / ||Y - 1 mu||_F^2`
    /// plus the residual fraction. Fractions add to 1 on balanced designs.
    pub fn variance_explained(&self) -> (Vec<(Term, f64)>, f64) {
        let mut yc = self.residuals.clone();
        for (_, e) in &self.effects {
            yc += e;
        }
        let total: f64 = yc.iter().map(|v| v * v).sum();
        let denom = if total > 0.0 { total } else { 1.0 };
        let fractions = self
            .effects
            .iter()
            .map(|(t, e)| (t.clone(), e.iter().map(|v| v * v).sum::<f64>() / denom))
            .collect();
        let resid = self.residuals.iter().map(|v| v * v).sum::<f64>() / denom;
        (fractions, resid)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct VariableMeta {
    name: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    levels: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TermMeta {
    term: String,
    columns: (usize, usize),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct BetaBlock {
    term: String,
    values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
struct EmbeddedMatrices {
    effects: Vec<BetaBlock>,
    residuals: Vec<Vec<f64>>,
    er: Vec<BetaBlock>,
}

/// Serialized form of a fit: coefficients and metadata; effect/residual/ER
/// matrices are recomputable from the dataset and optionally embedded.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GemFitDocument {
    pub schema_version: u32,
    pub formula: String,
    pub sample_ids: Vec<String>,
    pub response_names: Vec<String>,
    variables: Vec<VariableMeta>,
    terms: Vec<TermMeta>,
    mu: Vec<f64>,
    beta: Vec<BetaBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrices: Option<EmbeddedMatrices>,
}

fn matrix_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

impl GemFitDocument {
    pub fn from_fit(fit: &GemFit, dataset: &Dataset, embed_matrices: bool) -> GemFitDocument {
        let variables = dataset
            .variables
            .iter()
            .map(|v| VariableMeta {
                name: v.name.clone(),
                kind: match v.data {
                    VariableData::Categorical { .. } => "categorical".into(),
                    VariableData::Continuous(_) => "continuous".into(),
                },
                levels: v.levels().map(|l| l.to_vec()).unwrap_or_default(),
            })
            .collect();
        let terms = fit
            .design
            .blocks
            .iter()
            .map(|(t, r)| TermMeta {
                term: t.to_string(),
                columns: (r.start, r.end),
            })
            .collect();
        let beta = fit
            .beta
            .iter()
            .map(|(t, b)| BetaBlock {
                term: t.to_string(),
                values: matrix_rows(b),
            })
            .collect();
        let matrices = embed_matrices.then(|| EmbeddedMatrices {
            effects: fit
                .effects
                .iter()
                .map(|(t, e)| BetaBlock {
                    term: t.to_string(),
                    values: matrix_rows(e),
                })
                .collect(),
            residuals: matrix_rows(&fit.residuals),
            er: fit
                .effects
                .iter()
                .map(|(t, e)| BetaBlock {
                    term: t.to_string(),
                    values: matrix_rows(&(e + &fit.residuals)),
                })
                .collect(),
        });
        GemFitDocument {
            schema_version: 1,
            formula: fit.spec.formula(),
            sample_ids: dataset.sample_ids.clone(),
            response_names: dataset.response_names.clone(),
            variables,
            terms,
            mu: fit.mu.to_vec(),
            beta,
            matrices,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<GemFitDocument> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Rebuild a [`GemFit`] against the original dataset using the stored
    /// coefficients. Errors if the dataset no longer matches the fit.
    pub fn into_fit(&self, dataset: &Dataset) -> Result<GemFit> {
        if self.schema_version != 1 {
            return Err(Error::InvalidData(format!(
                "unsupported gemfit schema version {}",
                self.schema_version
            )));
        }
        if dataset.sample_ids != self.sample_ids {
            return Err(Error::InvalidData(
                "dataset sample ids differ from the persisted fit".into(),
            ));
        }
        if dataset.response_names != self.response_names {
            return Err(Error::InvalidData(
                "dataset response names differ from the persisted fit".into(),
            ));
        }
        for meta in &self.variables {
            let var = dataset.variable(&meta.name)?;
            if let Some(levels) = var.levels() {
                if levels != meta.levels.as_slice() {
                    return Err(Error::InvalidData(format!(
                        "levels of {:?} differ from the persisted fit",
                        meta.name
                    )));
                }
            }
        }
        let spec = parse_formula(&self.formula)?;
        let design = build_design(&spec, dataset)?;
        for (meta, (term, range)) in self.terms.iter().zip(design.blocks.iter()) {
            if meta.term != term.to_string() || meta.columns != (range.start, range.end) {
                return Err(Error::InvalidData(format!(
                    "design block {:?} differs from the persisted fit",
                    meta.term
                )));
            }
        }
        let n = design.n_samples();
        let nresp = self.mu.len();
        if dataset.n_responses() != nresp {
            return Err(Error::Dimension(format!(
                "dataset has {} responses, fit stored {}",
                dataset.n_responses(),
                nresp
            )));
        }
        let mu = Array1::from_vec(self.mu.clone());
        let mut beta = Vec::new();
        let mut effects = Vec::new();
        let mut fitted = Array2::zeros((n, nresp));
        for mut row in fitted.rows_mut() {
            row += &mu;
        }
        for ((term, range), block) in design.blocks.iter().zip(self.beta.iter()) {
            let k = range.end - range.start;
            if block.values.len() != k || block.values.iter().any(|r| r.len() != nresp) {
                return Err(Error::Dimension(format!(
                    "stored beta block {:?} has unexpected shape",
                    block.term
                )));
            }
            let mut b = Array2::zeros((k, nresp));
            for (i, r) in block.values.iter().enumerate() {
                for (j, &v) in r.iter().enumerate() {
                    b[[i, j]] = v;
                }
            }
            let x_d = design.x.slice(ndarray::s![.., range.start..range.end]);
            let e_d = x_d.dot(&b);
            fitted += &e_d;
            beta.push((term.clone(), b));
            effects.push((term.clone(), e_d));
        }
        let residuals = &dataset.y - &fitted;
        Ok(GemFit {
            spec,
            design,
            mu,
            beta,
            effects,
            residuals,
        })
    }
}

/// Variable used as analysis target for one main-effect term.
pub fn target_variable<'d>(dataset: &'d Dataset, term: &Term) -> Result<&'d Variable> {
    match term {
        Term::Main(name) => dataset.variable(name),
        Term::Interaction(_) => Err(Error::InvalidArgument(format!(
            "term {term} is an interaction; supervised analysis needs a single variable"
        ))),
    }
}
